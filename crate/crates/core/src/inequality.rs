//! Numerical verifiers for the auxiliary inequalities behind the CLT.
//!
//! Each verifier computes both sides exactly and returns a [`BoundRecord`];
//! a record with `ok == false` on a valid instance means a bug, since every
//! inequality checked here is a theorem.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ergodic::{alpha_beta, delta, osc_values, BetaSequence};
use crate::error::{Error, Result};
use crate::gordin::{backward_z, conditional_variance_profile, expected_profile_sum};
use crate::markov::{dot, ChainSpec, Distribution, Kernel, Observable, SUM_TOL};
use crate::report::fmt_float;
use crate::scheme::CENTERING_TOL;

/// Slack allowed on either side of a checked inequality.
pub const BOUND_TOL: f64 = 1e-10;

/// Horizons above this sample index tuples instead of enumerating them.
pub const EXHAUSTIVE_HORIZON: usize = 40;
pub const SAMPLED_TUPLES: usize = 2000;

/// One evaluated inequality. `margin` is positive when the bound holds with room.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundRecord {
    pub lemma: String,
    pub indices: Vec<usize>,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub ok: bool,
}

impl BoundRecord {
    /// `lhs ≤ rhs`.
    pub fn upper(lemma: &str, indices: Vec<usize>, lhs: f64, rhs: f64) -> Self {
        Self {
            lemma: lemma.to_string(),
            indices,
            lhs,
            rhs,
            margin: rhs - lhs,
            ok: lhs <= rhs + BOUND_TOL,
        }
    }

    /// `lhs ≥ rhs`.
    pub fn lower(lemma: &str, indices: Vec<usize>, lhs: f64, rhs: f64) -> Self {
        Self {
            lemma: lemma.to_string(),
            indices,
            lhs,
            rhs,
            margin: lhs - rhs,
            ok: lhs >= rhs - BOUND_TOL,
        }
    }
}

/// Writes `lemma,indices,lhs,rhs,margin,ok`; indices are `;`-separated.
pub fn write_records_csv<W: Write>(records: &[BoundRecord], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["lemma", "indices", "lhs", "rhs", "margin", "ok"])?;
    for r in records {
        let idx = r
            .indices
            .iter()
            .map(usize::to_string)
            .collect::<Vec<_>>()
            .join(";");
        out.write_record([
            r.lemma.clone(),
            idx,
            fmt_float(r.lhs),
            fmt_float(r.rhs),
            fmt_float(r.margin),
            r.ok.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Exponent used for `(1 − α^β)` in the decay bounds.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecayExponent {
    /// Marked kernels inside the product `π_{i,j}`: positions `i, …, j − 1`.
    #[default]
    KernelsInProduct,
    /// Prefix difference `κ_j − κ_i` (positions `i + 1, …, j`). Not a valid
    /// bound in general: a marked step `j` lies outside `π_{i,j}`.
    PrefixDifference,
}

impl DecayExponent {
    fn count(self, beta: &BetaSequence, i: usize, j: usize) -> usize {
        match self {
            DecayExponent::KernelsInProduct => beta.kernels_marked(i, j),
            DecayExponent::PrefixDifference => beta.kappa(j) - beta.kappa(i),
        }
    }
}

/// Cache of `π_{i,j}` (with `π_{i,i}` the identity).
struct RangeKernels<'a> {
    chain: &'a ChainSpec,
    table: Option<Vec<Vec<Kernel>>>,
}

impl<'a> RangeKernels<'a> {
    fn new(chain: &'a ChainSpec, exhaustive: bool) -> Self {
        let table = exhaustive.then(|| {
            let n = chain.n();
            (1..=n)
                .map(|i| {
                    let mut row = vec![Kernel::identity(chain.size())];
                    for j in i + 1..=n {
                        let next = row
                            .last()
                            .expect("non-empty")
                            .compose(chain.kernel(j - 1))
                            .expect("same size");
                        row.push(next);
                    }
                    row
                })
                .collect()
        });
        Self { chain, table }
    }

    fn get(&self, i: usize, j: usize) -> Kernel {
        match &self.table {
            Some(t) => t[i - 1][j - i].clone(),
            None if i == j => Kernel::identity(self.chain.size()),
            None => self.chain.compose_range(i, j).expect("valid range"),
        }
    }
}

/// Three decay bounds for a centered chain with `C = max_i ‖f_i‖_B` and
/// `q = 1 − α^β`:
///
/// ```text
/// 1a  ‖π_{i,j} f_j‖_B               ≤ 2 C  q^{e(i,j)}                1 ≤ i ≤ j ≤ n
/// 1b  Osc(π_{i,j} (f_j²))           ≤ 2 C² q^{e(i,j)}
/// 1c  Osc(π_{l,i} (f_i · π_{i,j} f_j)) ≤ 6 C² q^{e(l,i)} q^{e(i,j)}   1 ≤ l < i ≤ j ≤ n
/// ```
///
/// All index combinations are enumerated for `n ≤ 40`; above that,
/// [`SAMPLED_TUPLES`] random `(l, i, j)` tuples drawn from `seed` are used.
pub fn lemma1_bounds(
    chain: &ChainSpec,
    beta: &BetaSequence,
    exponent: DecayExponent,
    seed: u64,
) -> Result<Vec<BoundRecord>> {
    chain.ensure_centered(CENTERING_TOL)?;
    let q = 1.0 - alpha_beta(chain, beta)?;
    let c = chain.sup_bound();
    let n = chain.n();
    let exhaustive = n <= EXHAUSTIVE_HORIZON;
    let kernels = RangeKernels::new(chain, exhaustive);
    let decay = |l: usize, r: usize| q.powi(exponent.count(beta, l, r) as i32);

    let pair_records = |i: usize, j: usize, out: &mut Vec<BoundRecord>| {
        let k = kernels.get(i, j);
        let fj = chain.observable(j);
        let pushed = k.apply_slice(fj.values());
        let sup = pushed.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        out.push(BoundRecord::upper(
            "1a",
            vec![i, j],
            sup,
            2.0 * c * decay(i, j),
        ));
        let squared: Vec<f64> = fj.values().iter().map(|v| v * v).collect();
        let osc_sq = osc_values(&k.apply_slice(&squared));
        out.push(BoundRecord::upper(
            "1b",
            vec![i, j],
            osc_sq,
            2.0 * c * c * decay(i, j),
        ));
    };
    let triple_record = |l: usize, i: usize, j: usize| {
        let inner = kernels.get(i, j).apply_slice(chain.observable(j).values());
        let product: Vec<f64> = chain
            .observable(i)
            .values()
            .iter()
            .zip(&inner)
            .map(|(a, b)| a * b)
            .collect();
        let lhs = osc_values(&kernels.get(l, i).apply_slice(&product));
        BoundRecord::upper(
            "1c",
            vec![l, i, j],
            lhs,
            6.0 * c * c * decay(l, i) * decay(i, j),
        )
    };

    let mut out = Vec::new();
    if exhaustive {
        for i in 1..=n {
            for j in i..=n {
                pair_records(i, j, &mut out);
            }
        }
        for l in 1..n {
            for i in l + 1..=n {
                for j in i..=n {
                    out.push(triple_record(l, i, j));
                }
            }
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..SAMPLED_TUPLES {
            let l = rng.random_range(1..n);
            let i = rng.random_range(l + 1..=n);
            let j = rng.random_range(i..=n);
            pair_records(i, j, &mut out);
            out.push(triple_record(l, i, j));
        }
    }
    Ok(out)
}

/// A probability measure on `X × X` with both marginals and both
/// conditional kernels.
#[derive(Clone, Debug, PartialEq)]
pub struct JointLaw {
    size: usize,
    table: Vec<f64>,
    marginal_first: Distribution,
    marginal_second: Distribution,
    forward: Kernel,
    backward: Kernel,
}

fn conditional_rows(size: usize, cell: impl Fn(usize, usize) -> f64, marginal: &[f64]) -> Kernel {
    let mut data = Vec::with_capacity(size * size);
    for (a, &m) in marginal.iter().enumerate() {
        if m > 0.0 {
            data.extend((0..size).map(|b| cell(a, b) / m));
        } else {
            data.extend(std::iter::repeat_n(1.0 / size as f64, size));
        }
    }
    Kernel::from_raw(size, data)
}

impl JointLaw {
    /// Builds the law from its table; conditional rows at null states are uniform.
    pub fn new(table: Vec<Vec<f64>>) -> Result<Self> {
        let size = table.len();
        if size == 0 || table.iter().any(|r| r.len() != size) {
            return Err(Error::input(
                "joint law table must be a non-empty square matrix",
            ));
        }
        let flat: Vec<f64> = table.concat();
        if let Some(pos) = flat.iter().position(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::input(format!(
                "joint law entry ({}, {}) is negative or not finite",
                pos / size,
                pos % size
            )));
        }
        let total: f64 = flat.iter().sum();
        if (total - 1.0).abs() > SUM_TOL {
            return Err(Error::input(format!(
                "joint law sums to {total}, expected 1"
            )));
        }
        let first: Vec<f64> = flat.chunks_exact(size).map(|r| r.iter().sum()).collect();
        let second: Vec<f64> = (0..size)
            .map(|b| (0..size).map(|a| flat[a * size + b]).sum())
            .collect();
        let forward = conditional_rows(size, |a, b| flat[a * size + b], &first);
        Ok(Self::assemble(size, flat, first, second, forward))
    }

    /// `λ(x, y) = μ(x) k(x, y)`, keeping `k` itself as the forward kernel.
    pub fn from_marginal_and_kernel(mu: &Distribution, k: &Kernel) -> Result<Self> {
        if mu.len() != k.size() {
            return Err(Error::Dimension {
                expected: k.size(),
                found: mu.len(),
            });
        }
        let size = k.size();
        let mut flat = Vec::with_capacity(size * size);
        for (x, &m) in mu.probs().iter().enumerate() {
            flat.extend(k.row(x).iter().map(|p| m * p));
        }
        let second = mu.push_forward(k)?.probs().to_vec();
        Ok(Self::assemble(
            size,
            flat,
            mu.probs().to_vec(),
            second,
            k.clone(),
        ))
    }

    fn assemble(
        size: usize,
        table: Vec<f64>,
        first: Vec<f64>,
        second: Vec<f64>,
        forward: Kernel,
    ) -> Self {
        let backward = conditional_rows(size, |b, a| table[a * size + b], &second);
        Self {
            size,
            table,
            marginal_first: Distribution::from_raw(first),
            marginal_second: Distribution::from_raw(second),
            forward,
            backward,
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// `λ(x1, x2)`.
    pub fn get(&self, x1: usize, x2: usize) -> f64 {
        self.table[x1 * self.size + x2]
    }

    pub fn marginal_first(&self) -> &Distribution {
        &self.marginal_first
    }

    pub fn marginal_second(&self) -> &Distribution {
        &self.marginal_second
    }

    pub fn forward(&self) -> &Kernel {
        &self.forward
    }

    pub fn backward(&self) -> &Kernel {
        &self.backward
    }

    /// Same law with a different forward kernel (used to probe monotonicity in δ).
    pub fn with_forward(&self, forward: Kernel) -> Result<Self> {
        if forward.size() != self.size {
            return Err(Error::Dimension {
                expected: self.size,
                found: forward.size(),
            });
        }
        Ok(Self {
            forward,
            ..self.clone()
        })
    }

    fn check_dims(&self, f: &Observable, g: &Observable) -> Result<()> {
        for len in [f.len(), g.len()] {
            if len != self.size {
                return Err(Error::Dimension {
                    expected: self.size,
                    found: len,
                });
            }
        }
        Ok(())
    }
}

fn l2_norm(mu: &Distribution, f: &Observable) -> f64 {
    mu.probs()
        .iter()
        .zip(f.values())
        .map(|(p, v)| p * v * v)
        .sum::<f64>()
        .sqrt()
}

/// Covariance bound `|∫ f(x1) g(x2) dλ| ≤ √δ(π) ‖f‖_{L²(first)} ‖g‖_{L²(second)}`
/// for `f`, `g` centered under their marginals.
pub fn lemma41_check(j: &JointLaw, f: &Observable, g: &Observable) -> Result<BoundRecord> {
    j.check_dims(f, g)?;
    for (name, mu, h) in [("f", &j.marginal_first, f), ("g", &j.marginal_second, g)] {
        let mean = dot(mu.probs(), h.values());
        if mean.abs() > CENTERING_TOL {
            return Err(Error::input(format!(
                "{name} is not centered under its marginal (mean {mean:e})"
            )));
        }
    }
    let s = j.size;
    let mut cross = 0.0;
    for x1 in 0..s {
        for x2 in 0..s {
            cross += f.value(x1) * g.value(x2) * j.get(x1, x2);
        }
    }
    let rhs =
        delta(&j.forward).sqrt() * l2_norm(&j.marginal_first, f) * l2_norm(&j.marginal_second, g);
    Ok(BoundRecord::upper("4.1", vec![], cross.abs(), rhs))
}

/// `E[(f(x1) − g(x2))²] ≥ α(π) D(f(x1))` and `≥ α(π) D(g(x2))`, one record each.
pub fn lemma42_check(j: &JointLaw, f: &Observable, g: &Observable) -> Result<Vec<BoundRecord>> {
    j.check_dims(f, g)?;
    let s = j.size;
    let mut lhs = 0.0;
    for x1 in 0..s {
        for x2 in 0..s {
            lhs += j.get(x1, x2) * (f.value(x1) - g.value(x2)).powi(2);
        }
    }
    let a = 1.0 - delta(&j.forward);
    let var_f = j.marginal_first.variance(f)?.max(0.0);
    let var_g = j.marginal_second.variance(g)?.max(0.0);
    Ok(vec![
        BoundRecord::lower("4.2-first", vec![], lhs, a * var_f),
        BoundRecord::lower("4.2-second", vec![], lhs, a * var_g),
    ])
}

/// The joint law of `(X_i, X_{i+1})`.
pub fn joint_law_from_step(chain: &ChainSpec, i: usize) -> Result<JointLaw> {
    if i < 1 || i >= chain.n() {
        return Err(Error::input(format!(
            "step index i = {i} outside 1..={}",
            chain.n().saturating_sub(1)
        )));
    }
    let mu = &chain.marginals()[i - 1];
    JointLaw::from_marginal_and_kernel(mu, chain.kernel(i))
}

/// The three measured hypotheses of the `L²` convergence lemma for
/// `Y_l = v_l`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailProfile {
    pub n: usize,
    /// `E[Σ_l Y_l]`.
    pub expected_sum: f64,
    /// `1 − D(Z_1)/D(S_n)`, which `expected_sum` equals exactly.
    pub expected_sum_target: f64,
    /// `sup_l ‖Y_l‖_∞` (essential).
    pub sup_y: f64,
    pub osc_tail_sup: f64,
}

pub fn lemma33_tail_profile(chain: &ChainSpec) -> Result<TailProfile> {
    let d = backward_z(chain)?;
    let profile = conditional_variance_profile(chain)?;
    let sup_y = profile
        .v
        .iter()
        .enumerate()
        .map(|(idx, v)| crate::ergodic::sup_on_support(v.values(), &d.marginals[idx]))
        .fold(0.0_f64, f64::max);
    Ok(TailProfile {
        n: d.n(),
        expected_sum: expected_profile_sum(&profile, &d.marginals),
        expected_sum_target: 1.0 - d.var_z1 / d.var_sn,
        sup_y,
        osc_tail_sup: profile.osc_tail_sup,
    })
}
