//! Seeded generators for random test instances: distributions, kernels,
//! chains, joint laws and β-sequences.
//!
//! Rows are normalized `Exp(1)` draws (a flat Dirichlet), with some entries
//! zeroed so that supports are not always full.

use rand::Rng;
use rand_distr::{Distribution as _, Exp1};

use crate::ergodic::BetaSequence;
use crate::inequality::JointLaw;
use crate::markov::{ChainSpec, Distribution, Kernel, Observable, StateSpace};

/// Chance that an individual entry of a random row is forced to zero.
const SPARSITY: f64 = 0.2;

fn random_row<R: Rng + ?Sized>(size: usize, rng: &mut R, sparsity: f64) -> Vec<f64> {
    loop {
        let raw: Vec<f64> = (0..size)
            .map(|_| {
                if rng.random_bool(sparsity) {
                    0.0
                } else {
                    Exp1.sample(rng)
                }
            })
            .collect();
        let total: f64 = raw.iter().sum();
        if total > 0.0 {
            return raw.into_iter().map(|v| v / total).collect();
        }
    }
}

pub fn random_distribution<R: Rng + ?Sized>(size: usize, rng: &mut R) -> Distribution {
    Distribution::new(random_row(size, rng, SPARSITY)).expect("normalized row")
}

/// Full-support random distribution.
pub fn random_positive_distribution<R: Rng + ?Sized>(size: usize, rng: &mut R) -> Distribution {
    Distribution::new(random_row(size, rng, 0.0)).expect("normalized row")
}

pub fn random_kernel<R: Rng + ?Sized>(size: usize, rng: &mut R) -> Kernel {
    Kernel::new((0..size).map(|_| random_row(size, rng, SPARSITY)).collect())
        .expect("normalized rows")
}

/// A random kernel, occasionally replaced by a permutation (δ = 1 when
/// `size ≥ 2`) or a constant-row kernel (δ = 0).
pub fn random_structured_kernel<R: Rng + ?Sized>(size: usize, rng: &mut R) -> Kernel {
    let u: f64 = rng.random();
    if u < 0.1 {
        let mut perm: Vec<usize> = (0..size).collect();
        for i in (1..size).rev() {
            perm.swap(i, rng.random_range(0..=i));
        }
        let rows = perm
            .iter()
            .map(|&t| {
                let mut r = vec![0.0; size];
                r[t] = 1.0;
                r
            })
            .collect();
        Kernel::new(rows).expect("permutation rows")
    } else if u < 0.2 {
        Kernel::constant(&random_distribution(size, rng))
    } else {
        random_kernel(size, rng)
    }
}

pub fn random_observable<R: Rng + ?Sized>(size: usize, rng: &mut R) -> Observable {
    Observable::new((0..size).map(|_| rng.random_range(-1.0..1.0)).collect())
        .expect("finite values")
}

/// A random chain of horizon `n`, not centered.
pub fn random_chain<R: Rng + ?Sized>(size: usize, n: usize, rng: &mut R) -> ChainSpec {
    let initial = random_distribution(size, rng);
    let kernels = (1..n)
        .map(|_| random_structured_kernel(size, rng))
        .collect();
    let observables = (0..n).map(|_| random_observable(size, rng)).collect();
    ChainSpec::new(
        StateSpace::new(size).expect("size >= 1"),
        initial,
        kernels,
        observables,
    )
    .expect("consistent dimensions")
}

pub fn random_centered_chain<R: Rng + ?Sized>(size: usize, n: usize, rng: &mut R) -> ChainSpec {
    random_chain(size, n, rng).centered()
}

pub fn random_beta<R: Rng + ?Sized>(n: usize, p_one: f64, rng: &mut R) -> BetaSequence {
    BetaSequence::new((0..n).map(|_| rng.random_bool(p_one)).collect())
}

/// A random coupling: a random first marginal pushed through a random kernel.
pub fn random_joint_law<R: Rng + ?Sized>(size: usize, rng: &mut R) -> JointLaw {
    let mu = random_distribution(size, rng);
    let k = random_structured_kernel(size, rng);
    JointLaw::from_marginal_and_kernel(&mu, &k).expect("dimensions agree")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn generators_are_seed_deterministic() {
        let a = random_chain(3, 5, &mut ChaCha8Rng::seed_from_u64(7));
        let b = random_chain(3, 5, &mut ChaCha8Rng::seed_from_u64(7));
        assert_eq!(a, b);
        let c = random_chain(3, 5, &mut ChaCha8Rng::seed_from_u64(8));
        assert_ne!(a, c);
    }

    #[test]
    fn centered_chain_has_zero_means() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let c = random_centered_chain(4, 6, &mut rng);
            assert!(c.max_abs_mean().1 < 1e-12);
        }
    }
}
