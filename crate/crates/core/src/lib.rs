//! Exact and Monte Carlo laboratory for central limit theorems of
//! non-homogeneous Markov chains on finite state spaces.
//!
//! The crate is organized bottom-up:
//!
//! - [`markov`]: state spaces, distributions, kernels, observables, chains.
//! - [`ergodic`]: contraction coefficients, oscillation, β-sequences and (H_β).
//! - [`scheme`]: array schemes, exact moments of `S_n`, condition evaluators.
//! - [`gordin`]: the martingale decomposition and its CLT diagnostics.
//! - [`inequality`]: numerical verifiers for the auxiliary inequalities.
//! - [`montecarlo`]: seeded path sampling, KS distance to `N(0, 1)`.
//! - [`families`]: the three reference array schemes.
//! - [`io`]: chain JSON input and report files.
//! - [`suite`]: randomized inequality suites.
//! - [`random`]: seeded generators for random test instances.

pub mod ergodic;
pub mod error;
pub mod families;
pub mod gordin;
pub mod inequality;
pub mod io;
pub mod markov;
pub mod montecarlo;
pub mod random;
pub mod report;
pub mod scheme;
pub mod suite;

pub use error::{Error, Result};
pub use markov::{ChainSpec, Distribution, Kernel, Observable, StateSpace};
