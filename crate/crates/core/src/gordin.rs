//! Exact Gordin martingale decomposition of `S_n` for centered chains.
//!
//! With `Z_k = Σ_{i ≥ k} E[f_i(X_i) | X_k]`, computed backwards as
//!
//! ```text
//! Z_n = f_n,   Z_k = f_k + π_{k,k+1} Z_{k+1},
//! ```
//!
//! the sum splits into uncorrelated pieces
//!
//! ```text
//! S_n = Z_1 + Σ_{k=2}^{n} (Z_k − E[Z_k | X_{k−1}]).
//! ```
//!
//! Conditional expectations given the past reduce to functions of the
//! previous state by the Markov property, so nothing here is path-indexed
//! except the brute-force check in [`verify_martingale_representation`].
//! Increments are standardized by `√D(S_n)`.

use serde::{Deserialize, Serialize};

use crate::ergodic::{osc_on_support_values, sup_on_support};
use crate::error::{Error, Result};
use crate::markov::{dot, ChainSpec, Distribution, Observable};
use crate::report::float;
use crate::scheme::{variance_of_sum, CENTERING_TOL};

/// Variances at or below this are treated as zero.
pub const DEGENERATE_VAR: f64 = 1e-14;

/// Path-enumeration guard: at most this many paths.
pub const MAX_PATHS: u64 = 10_000_000;
pub const MAX_ENUMERATION_HORIZON: usize = 12;

#[derive(Clone, Debug, PartialEq)]
pub struct GordinDecomposition {
    /// `Z_1, …, Z_n` as functions of the current state.
    pub z: Vec<Observable>,
    /// `E[Z_k | X_{k−1}] = π_{k−1,k} Z_k` for `k = 2..=n`, as functions of `X_{k−1}`.
    pub predicted: Vec<Observable>,
    pub marginals: Vec<Distribution>,
    /// `D(S_n)` from the covariance expansion (independent of the `Z_k`).
    pub var_sn: f64,
    /// `D(Z_k − E[Z_k | X_{k−1}])` for `k = 2..=n`.
    pub increment_vars: Vec<f64>,
    pub var_z1: f64,
    /// `sup_k ‖Z_k‖_∞ / √D(S_n)`; `None` for a degenerate chain.
    pub norm_ratio: Option<f64>,
    /// `sup_k ‖ξ̂_k‖_∞`; `None` for a degenerate chain.
    pub xi_sup: Option<f64>,
}

impl GordinDecomposition {
    pub fn n(&self) -> usize {
        self.z.len()
    }

    /// `D(Z_1) + Σ_k D(Z_k − E[Z_k | X_{k−1}])`.
    pub fn decomposition_total(&self) -> f64 {
        self.var_z1 + self.increment_vars.iter().sum::<f64>()
    }

    /// `Z_k` (1-based).
    pub fn z(&self, k: usize) -> &Observable {
        &self.z[k - 1]
    }

    /// `E[Z_k | X_{k−1}]` for `2 ≤ k ≤ n`.
    pub fn predicted(&self, k: usize) -> &Observable {
        &self.predicted[k - 2]
    }

    fn scale(&self) -> Result<f64> {
        if self.var_sn <= DEGENERATE_VAR {
            return Err(Error::Degenerate(format!(
                "D(S_n) = {:e} is numerically zero",
                self.var_sn
            )));
        }
        Ok(1.0 / self.var_sn.sqrt())
    }
}

/// Backward recursion for the `Z_k` and all derived variances.
pub fn backward_z(chain: &ChainSpec) -> Result<GordinDecomposition> {
    chain.ensure_centered(CENTERING_TOL)?;
    let n = chain.n();
    let marginals = chain.marginals();

    let mut z = vec![chain.observable(n).clone()];
    for k in (1..n).rev() {
        let next = z.last().expect("non-empty");
        let pulled = chain.kernel(k).apply_slice(next.values());
        let values = chain
            .observable(k)
            .values()
            .iter()
            .zip(pulled)
            .map(|(f, p)| f + p)
            .collect();
        z.push(Observable::from_values(values));
    }
    z.reverse();

    let mut predicted = Vec::with_capacity(n.saturating_sub(1));
    let mut increment_vars = Vec::with_capacity(n.saturating_sub(1));
    for k in 2..=n {
        let kernel = chain.kernel(k - 1);
        let zk = z[k - 1].values();
        let pred = kernel.apply_slice(zk);
        let var: f64 = marginals[k - 2]
            .probs()
            .iter()
            .enumerate()
            .filter(|(_, &m)| m > 0.0)
            .map(|(x, &m)| {
                let row = kernel.row(x);
                m * row
                    .iter()
                    .zip(zk)
                    .map(|(p, zy)| p * (zy - pred[x]).powi(2))
                    .sum::<f64>()
            })
            .sum();
        increment_vars.push(var.max(0.0));
        predicted.push(Observable::from_values(pred));
    }
    let var_z1 = marginals[0].variance(&z[0])?.max(0.0);
    let var_sn = variance_of_sum(chain)?;

    let mut d = GordinDecomposition {
        z,
        predicted,
        marginals,
        var_sn,
        increment_vars,
        var_z1,
        norm_ratio: None,
        xi_sup: None,
    };
    if let Ok(scale) = d.scale() {
        let zmax =
            d.z.iter()
                .zip(&d.marginals)
                .map(|(zk, mu)| sup_on_support(zk.values(), mu))
                .fold(0.0_f64, f64::max);
        d.norm_ratio = Some(zmax * scale);
        d.xi_sup = Some(raw_increment_sup(&d, chain) * scale);
    }
    Ok(d)
}

/// `max |Z_k(y) − E[Z_k | X_{k−1} = x]|` over reachable transitions.
fn raw_increment_sup(d: &GordinDecomposition, chain: &ChainSpec) -> f64 {
    let mut best = 0.0_f64;
    for k in 2..=d.n() {
        let kernel = chain.kernel(k - 1);
        let zk = d.z(k).values();
        let pred = d.predicted(k).values();
        for x in d.marginals[k - 2].support() {
            for (y, &p) in kernel.row(x).iter().enumerate() {
                if p > 0.0 {
                    best = best.max((zk[y] - pred[x]).abs());
                }
            }
        }
    }
    best
}

/// Largest pointwise gap between `S_n` and `Z_1 + Σ_k (Z_k − E[Z_k | X_{k−1}])`
/// over every path in `X^n`.
pub fn verify_martingale_representation(chain: &ChainSpec) -> Result<f64> {
    let n = chain.n();
    let s = chain.size();
    let paths = (s as u64).checked_pow(n as u32);
    if n > MAX_ENUMERATION_HORIZON || paths.is_none_or(|p| p > MAX_PATHS) {
        return Err(Error::Guard(format!(
            "{s}^{n} paths; limits are n <= {MAX_ENUMERATION_HORIZON} and at most {MAX_PATHS} paths"
        )));
    }
    let d = backward_z(chain)?;
    let mut path = vec![0usize; n];
    let mut worst = 0.0_f64;
    loop {
        let direct: f64 = path
            .iter()
            .enumerate()
            .map(|(i, &x)| chain.observables()[i].value(x))
            .sum();
        let mut rep = d.z[0].value(path[0]);
        for k in 2..=n {
            rep += d.z(k).value(path[k - 1]) - d.predicted(k).value(path[k - 2]);
        }
        worst = worst.max((direct - rep).abs());

        // odometer increment over X^n
        let mut pos = n;
        loop {
            if pos == 0 {
                return Ok(worst);
            }
            pos -= 1;
            path[pos] += 1;
            if path[pos] < s {
                break;
            }
            path[pos] = 0;
        }
    }
}

/// `Z_k` together with its one-step prediction, giving `ξ̂_k` on transitions.
#[derive(Clone, Debug, PartialEq)]
pub struct StandardizedIncrement {
    pub k: usize,
    pub z: Observable,
    pub predicted: Observable,
    /// `1 / √D(S_n)`.
    pub scale: f64,
}

impl StandardizedIncrement {
    /// `ξ̂_k` realized on the transition `x → y` (from time `k − 1` to `k`).
    pub fn value(&self, x: usize, y: usize) -> f64 {
        (self.z.value(y) - self.predicted.value(x)) * self.scale
    }
}

/// The standardized martingale differences `ξ̂_k`, `k = 2..=n`.
pub fn standardized_increments(
    d: &GordinDecomposition,
    chain: &ChainSpec,
) -> Result<Vec<StandardizedIncrement>> {
    if chain.n() != d.n() {
        return Err(Error::Dimension {
            expected: d.n(),
            found: chain.n(),
        });
    }
    let scale = d.scale()?;
    Ok((2..=d.n())
        .map(|k| StandardizedIncrement {
            k,
            z: d.z(k).clone(),
            predicted: d.predicted(k).clone(),
            scale,
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq)]
pub struct VarianceProfile {
    /// `v_j = E[ξ̂_j² | X_{j−1}]` for `j = 2..=n`, as functions of `X_{j−1}`.
    pub v: Vec<Observable>,
    /// `T_l = E[Σ_{j>l} v_j | X_{l−1}]` for `l = 2..=n−1`, as functions of `X_{l−1}`.
    pub tails: Vec<Observable>,
    /// `sup_l` of the essential oscillation of `T_l` (0 when the range is empty).
    pub osc_tail_sup: f64,
}

impl VarianceProfile {
    /// `v_j` (1-based, `2 ≤ j ≤ n`).
    pub fn v(&self, j: usize) -> &Observable {
        &self.v[j - 2]
    }
}

fn profile_from(d: &GordinDecomposition, chain: &ChainSpec) -> Result<VarianceProfile> {
    let n = d.n();
    let scale = d.scale()?;
    let s2 = scale * scale;
    let v: Vec<Observable> = (2..=n)
        .map(|j| {
            let kernel = chain.kernel(j - 1);
            let zj = d.z(j).values();
            let pred = d.predicted(j).values();
            let values = (0..chain.size())
                .map(|x| {
                    kernel
                        .row(x)
                        .iter()
                        .zip(zj)
                        .map(|(p, zy)| p * (zy - pred[x]).powi(2))
                        .sum::<f64>()
                        * s2
                })
                .collect();
            Observable::from_values(values)
        })
        .collect();

    // acc_t = E[Σ_{j ≥ t+1} v_j | X_t] as a function of X_t, for t = n−1 down to 1
    let mut tails = Vec::new();
    let mut acc = v[n - 2].values().to_vec();
    for l in (2..n).rev() {
        // T_l = π_{l−1,l} acc_l, then acc_{l−1} = v_l + T_l
        let tail = chain.kernel(l - 1).apply_slice(&acc);
        acc = v[l - 2]
            .values()
            .iter()
            .zip(&tail)
            .map(|(a, b)| a + b)
            .collect();
        tails.push(Observable::from_values(tail));
    }
    tails.reverse();
    let osc_tail_sup = tails
        .iter()
        .enumerate()
        .filter_map(|(idx, t)| osc_on_support_values(t.values(), &d.marginals[idx]))
        .fold(0.0_f64, f64::max);
    Ok(VarianceProfile {
        v,
        tails,
        osc_tail_sup,
    })
}

/// Conditional variances `v_j` and the oscillation of their conditional tails.
pub fn conditional_variance_profile(chain: &ChainSpec) -> Result<VarianceProfile> {
    let d = backward_z(chain)?;
    profile_from(&d, chain)
}

/// Finite-`n` values of the two martingale CLT conditions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CltDiagnostics {
    /// `sup_k ‖ξ̂_k‖_∞`.
    pub a_value: f64,
    /// `E[(Σ_{k=2}^{n} v_k)²]`.
    pub b_value: f64,
    /// Value `b_value` tends to under the CLT.
    pub b_target: f64,
}

/// `a = sup_k ‖ξ̂_k‖_∞` and `b = E[(Σ_k v_k(X_{k−1}))²]`, the latter from
/// `E[V²] = Σ_t E[v_{t+1}(X_t) (v_{t+1}(X_t) + 2 E[Σ_{s>t} v_{s+1}(X_s) | X_t])]`.
pub fn clt_diagnostics(chain: &ChainSpec) -> Result<CltDiagnostics> {
    let d = backward_z(chain)?;
    diagnostics_from(&d, chain)
}

fn diagnostics_from(d: &GordinDecomposition, chain: &ChainSpec) -> Result<CltDiagnostics> {
    let profile = profile_from(d, chain)?;
    let n = d.n();
    let a_value = d.xi_sup.expect("set for non-degenerate chains");
    let mut b_value = 0.0;
    if n >= 2 {
        // future = E[Σ_{s > t} v_{s+1}(X_s) | X_t], built backwards from t = n−1
        let mut future = vec![0.0; chain.size()];
        for t in (1..n).rev() {
            let vt = profile.v(t + 1).values();
            let mu = d.marginals[t - 1].probs();
            b_value += mu
                .iter()
                .zip(vt)
                .zip(&future)
                .map(|((m, v), fut)| m * v * (v + 2.0 * fut))
                .sum::<f64>();
            if t > 1 {
                let with_current: Vec<f64> = vt.iter().zip(&future).map(|(v, f)| v + f).collect();
                future = chain.kernel(t - 1).apply_slice(&with_current);
            }
        }
    }
    Ok(CltDiagnostics {
        a_value,
        b_value,
        b_target: 1.0,
    })
}

/// `sup_k ‖Z_k‖_∞ / √D(S_n)` with essential sup norms.
pub fn znorm_ratio(chain: &ChainSpec) -> Result<f64> {
    let d = backward_z(chain)?;
    d.scale()?;
    Ok(d.norm_ratio.expect("set for non-degenerate chains"))
}

/// JSON summary of a decomposition and its diagnostics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GordinSummary {
    pub n: usize,
    pub var_sn: f64,
    pub var_z1: f64,
    pub increment_vars: Vec<f64>,
    pub decomposition_gap: f64,
    #[serde(with = "float::option")]
    pub norm_ratio: Option<f64>,
    #[serde(with = "float::option")]
    pub xi_sup: Option<f64>,
    #[serde(with = "float::option")]
    pub osc_tail_sup: Option<f64>,
    #[serde(with = "float::option")]
    pub a_value: Option<f64>,
    #[serde(with = "float::option")]
    pub b_value: Option<f64>,
    pub b_target: f64,
    pub normalization: String,
}

/// Decomposes `chain` (after centering) and gathers every diagnostic.
/// Degenerate chains produce a summary with the standardized fields missing.
pub fn summarize(chain: &ChainSpec) -> Result<GordinSummary> {
    let centered = chain.centered();
    let d = backward_z(&centered)?;
    let (osc_tail_sup, a_value, b_value) = match profile_from(&d, &centered) {
        Ok(p) => {
            let diag = diagnostics_from(&d, &centered)?;
            (Some(p.osc_tail_sup), Some(diag.a_value), Some(diag.b_value))
        }
        Err(Error::Degenerate(_)) => (None, None, None),
        Err(e) => return Err(e),
    };
    Ok(GordinSummary {
        n: d.n(),
        var_sn: d.var_sn,
        var_z1: d.var_z1,
        decomposition_gap: d.var_sn - d.decomposition_total(),
        increment_vars: d.increment_vars.clone(),
        norm_ratio: d.norm_ratio,
        xi_sup: d.xi_sup,
        osc_tail_sup,
        a_value,
        b_value,
        b_target: 1.0,
        normalization: "increments divided by sqrt(D(S_n)); the 1/D(S_n) display would not \
                        normalize the conditional variances to 1"
            .to_string(),
    })
}

/// `Σ_j E[v_j(X_{j−1})]`.
pub(crate) fn expected_profile_sum(profile: &VarianceProfile, marginals: &[Distribution]) -> f64 {
    profile
        .v
        .iter()
        .enumerate()
        .map(|(idx, v)| dot(marginals[idx].probs(), v.values()))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::markov::Kernel;

    fn pm1(n: usize, kernel: Kernel) -> ChainSpec {
        ChainSpec::homogeneous(
            n,
            Distribution::uniform(2),
            kernel,
            Observable::new(vec![1.0, -1.0]).unwrap(),
        )
        .unwrap()
    }

    fn indep(n: usize) -> ChainSpec {
        pm1(n, Kernel::constant(&Distribution::uniform(2)))
    }

    #[test]
    fn independence_chain_decomposition() {
        let chain = indep(6);
        let d = backward_z(&chain).unwrap();
        for k in 1..=6 {
            assert_eq!(d.z(k), chain.observable(k));
        }
        for v in &d.increment_vars {
            assert!((v - 1.0).abs() < 1e-15);
        }
        assert!((d.var_sn - 6.0).abs() < 1e-12);
        assert!((d.decomposition_total() - d.var_sn).abs() < 1e-12);
    }

    #[test]
    fn single_step_chain() {
        let chain = indep(1);
        let d = backward_z(&chain).unwrap();
        assert_eq!(d.z(1), chain.observable(1));
        assert!((d.var_sn - 1.0).abs() < 1e-15);
        assert!(d.increment_vars.is_empty());
        assert!((znorm_ratio(&chain).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_uncentered() {
        let chain = ChainSpec::homogeneous(
            2,
            Distribution::uniform(2),
            Kernel::identity(2),
            Observable::new(vec![1.0, 0.0]).unwrap(),
        )
        .unwrap();
        assert!(matches!(backward_z(&chain), Err(Error::NotCentered { .. })));
    }

    #[test]
    fn two_step_identity_is_algebraic() {
        let k = Kernel::new(vec![vec![0.9, 0.1], vec![0.2, 0.8]]).unwrap();
        let mu = Distribution::new(vec![0.4, 0.6]).unwrap();
        let chain = ChainSpec::homogeneous(2, mu, k, Observable::new(vec![1.0, -2.0]).unwrap())
            .unwrap()
            .centered();
        assert!(verify_martingale_representation(&chain).unwrap() < 1e-15);
        assert_eq!(verify_martingale_representation(&indep(5)).unwrap(), 0.0);
    }

    #[test]
    fn enumeration_guard() {
        assert!(matches!(
            verify_martingale_representation(&indep(13)),
            Err(Error::Guard(_))
        ));
    }

    #[test]
    fn independence_increments_are_plus_minus_inv_sqrt_n() {
        let n = 9;
        let chain = indep(n);
        let d = backward_z(&chain).unwrap();
        let incs = standardized_increments(&d, &chain).unwrap();
        let target = 1.0 / (n as f64).sqrt();
        for inc in &incs {
            for x in 0..2 {
                for y in 0..2 {
                    assert!((inc.value(x, y).abs() - target).abs() < 1e-15);
                }
            }
        }
        assert!((d.xi_sup.unwrap() - target).abs() < 1e-15);
    }

    #[test]
    fn predictable_increment_vanishes() {
        // identity kernel into step 3 and f ≡ 0 from step 3 on
        let kernels = vec![
            Kernel::symmetric_flip(0.3).unwrap(),
            Kernel::identity(2),
            Kernel::symmetric_flip(0.3).unwrap(),
        ];
        let pm = Observable::new(vec![1.0, -1.0]).unwrap();
        let zero = Observable::constant(2, 0.0);
        let chain = ChainSpec::new(
            crate::markov::StateSpace::new(2).unwrap(),
            Distribution::uniform(2),
            kernels,
            vec![pm.clone(), pm, zero.clone(), zero],
        )
        .unwrap();
        let d = backward_z(&chain).unwrap();
        let inc = &standardized_increments(&d, &chain).unwrap()[1];
        assert_eq!(inc.k, 3);
        for x in 0..2 {
            assert_eq!(inc.value(x, x), 0.0);
        }
        assert_eq!(d.increment_vars[1], 0.0);
    }

    #[test]
    fn degenerate_chain_errors() {
        let chain = ChainSpec::homogeneous(
            3,
            Distribution::point_mass(2, 0),
            Kernel::identity(2),
            Observable::new(vec![0.0, 5.0]).unwrap(),
        )
        .unwrap();
        let d = backward_z(&chain).unwrap();
        assert!(d.xi_sup.is_none());
        assert!(matches!(
            standardized_increments(&d, &chain),
            Err(Error::Degenerate(_))
        ));
        assert!(matches!(clt_diagnostics(&chain), Err(Error::Degenerate(_))));
        let summary = summarize(&chain).unwrap();
        assert!(summary.a_value.is_none());
    }

    #[test]
    fn independence_profile_and_diagnostics() {
        let n = 8;
        let chain = indep(n);
        let p = conditional_variance_profile(&chain).unwrap();
        assert_eq!(p.osc_tail_sup, 0.0);
        for v in &p.v {
            for &x in v.values() {
                assert!((x - 1.0 / n as f64).abs() < 1e-15);
            }
        }
        let diag = clt_diagnostics(&chain).unwrap();
        let nf = n as f64;
        assert!((diag.a_value - 1.0 / nf.sqrt()).abs() < 1e-12);
        assert!((diag.b_value - ((nf - 1.0) / nf).powi(2)).abs() < 1e-12);
    }

    #[test]
    fn two_step_diagnostics() {
        let k = Kernel::new(vec![vec![0.9, 0.1], vec![0.2, 0.8]]).unwrap();
        let chain = ChainSpec::homogeneous(
            2,
            Distribution::new(vec![0.4, 0.6]).unwrap(),
            k,
            Observable::new(vec![1.0, -2.0]).unwrap(),
        )
        .unwrap()
        .centered();
        let p = conditional_variance_profile(&chain).unwrap();
        assert!(p.tails.is_empty());
        assert_eq!(p.osc_tail_sup, 0.0);
        let d = backward_z(&chain).unwrap();
        let diag = clt_diagnostics(&chain).unwrap();
        // E[v_2²] with v_2 a function of X_1
        let mu = d.marginals[0].probs();
        let second: f64 = mu.iter().zip(p.v(2).values()).map(|(m, v)| m * v * v).sum();
        assert!((diag.b_value - second).abs() < 1e-15);
        let first: f64 = mu.iter().zip(p.v(2).values()).map(|(m, v)| m * v).sum();
        assert!((first - d.increment_vars[0] / d.var_sn).abs() < 1e-12);
    }

    #[test]
    fn summary_json_roundtrip() {
        let chain = pm1(12, Kernel::symmetric_flip(0.2).unwrap());
        let s = summarize(&chain).unwrap();
        let json = serde_json::to_string(&s).unwrap();
        assert_eq!(serde_json::from_str::<GordinSummary>(&json).unwrap(), s);
        assert!(s.decomposition_gap.abs() < 1e-9);
    }
}
