//! Array schemes, exact moments of `S_n = Σ f_i(X_i)`, and the evaluators for
//! the classical Dobrushin condition, the variance-weighted β condition
//! (`theorem1_value`) and the product condition `n α_n (α_n^β)²`
//! (`corollary2_value`).
//!
//! Every quantity is computed exactly for each `n` on a finite grid. Limits are
//! never decided: each quantity gets a strict-monotonicity label over the grid.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ergodic::{
    alpha_beta, alpha_n, check_h_beta_with, find_beta_auto, BetaSequence, HBetaParams,
    KappaConvention, DEFAULT_THETAS,
};
use crate::error::{Error, Result};
use crate::markov::{dot, ChainSpec};
use crate::report::{float, fmt_float, fmt_opt, trend, trend_opt, Trend};

/// Largest `|E f_i(X_i)|` accepted as "centered".
pub const CENTERING_TOL: f64 = 1e-9;

/// `E S_n = Σ_i Σ_x μ_i(x) f_i(x)`.
pub fn expected_sum(chain: &ChainSpec) -> f64 {
    chain
        .marginals()
        .iter()
        .zip(chain.observables())
        .map(|(mu, f)| dot(mu.probs(), f.values()))
        .sum()
}

/// `D(f_i(X_i))` for each `i`.
pub fn per_step_variances(chain: &ChainSpec) -> Vec<f64> {
    chain
        .marginals()
        .iter()
        .zip(chain.observables())
        .map(|(mu, f)| mu.variance(f).expect("dimensions validated").max(0.0))
        .collect()
}

/// `D(S_n)` from the covariance expansion
/// `Σ_i D(f_i(X_i)) + 2 Σ_{i<j} E[f_i(X_i) (π_{i,j} f_j)(X_i)]`.
///
/// Quadratic in `n`: every cross term is evaluated on its own. Going
/// backwards in `i`, the table `h[x][j] = (π_{i,j} f_j)(x)` for all `j > i`
/// is pulled through one kernel at a time, which keeps the inner loop over
/// `j` contiguous.
pub fn variance_of_sum(chain: &ChainSpec) -> Result<f64> {
    chain.ensure_centered(CENTERING_TOL)?;
    let marginals = chain.marginals();
    let n = chain.n();
    let s = chain.size();
    let diagonal: f64 = per_step_variances(chain).iter().sum();

    // h[x * n + (j - 1)]; only columns j > i are live at step i
    let mut h = vec![0.0; s * n];
    let mut next = vec![0.0; s * n];
    let mut cross = 0.0;
    for i in (1..n).rev() {
        let k = chain.kernel(i);
        let f_next = chain.observable(i + 1);
        for x in 0..s {
            let row = k.row(x);
            let out = &mut next[x * n + i..x * n + n];
            // column j = i + 1 starts from f_{i+1} itself
            out[0] = dot(row, f_next.values());
            out[1..].fill(0.0);
            for (y, &p) in row.iter().enumerate() {
                if p != 0.0 {
                    let src = &h[y * n + i + 1..y * n + n];
                    for (o, v) in out[1..].iter_mut().zip(src) {
                        *o += p * v;
                    }
                }
            }
        }
        std::mem::swap(&mut h, &mut next);
        let (mu, f) = (marginals[i - 1].probs(), chain.observable(i).values());
        for x in 0..s {
            let w = mu[x] * f[x];
            if w != 0.0 {
                cross += w * h[x * n + i..x * n + n].iter().sum::<f64>();
            }
        }
    }
    let total = diagonal + 2.0 * cross;
    debug_assert!(total >= -1e-10, "negative variance {total}");
    Ok(total.max(0.0))
}

/// Result of comparing the two sides of an inequality.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub ok: bool,
}

/// Variance lower bound `D(S_n) ≥ (α_n / 4) Σ_i D(f_i(X_i))`.
pub fn variance_lower_bound_check(chain: &ChainSpec) -> Result<BoundCheck> {
    let lhs = variance_of_sum(chain)?;
    let sum_var: f64 = per_step_variances(chain).iter().sum();
    let rhs = alpha_n(chain)? / 4.0 * sum_var;
    Ok(BoundCheck {
        lhs,
        rhs,
        ok: lhs >= rhs - 1e-10,
    })
}

pub type ChainGenerator = Arc<dyn Fn(usize) -> Result<ChainSpec> + Send + Sync>;
pub type BetaGenerator = Arc<dyn Fn(usize) -> BetaSequence + Send + Sync>;

/// A family of chains indexed by the horizon `n`, with the grid to evaluate.
#[derive(Clone)]
pub struct ArrayScheme {
    name: String,
    grid: Vec<usize>,
    generator: ChainGenerator,
    companion_beta: Option<BetaGenerator>,
}

impl fmt::Debug for ArrayScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ArrayScheme")
            .field("name", &self.name)
            .field("grid", &self.grid)
            .field("companion_beta", &self.companion_beta.is_some())
            .finish()
    }
}

impl ArrayScheme {
    pub fn new(
        name: impl Into<String>,
        grid: Vec<usize>,
        generator: impl Fn(usize) -> Result<ChainSpec> + Send + Sync + 'static,
    ) -> Result<Self> {
        let mut grid = grid;
        grid.sort_unstable();
        grid.dedup();
        if grid.is_empty() {
            return Err(Error::input("grid: at least one n is required"));
        }
        Ok(Self {
            name: name.into(),
            grid,
            generator: Arc::new(generator),
            companion_beta: None,
        })
    }

    /// A scheme consisting of a single fixed chain.
    pub fn single(name: impl Into<String>, chain: ChainSpec) -> Self {
        let n = chain.n();
        Self {
            name: name.into(),
            grid: vec![n],
            generator: Arc::new(move |m| {
                if m == n {
                    Ok(chain.clone())
                } else {
                    Err(Error::input(format!(
                        "this scheme only defines n = {n}, not {m}"
                    )))
                }
            }),
            companion_beta: None,
        }
    }

    pub fn with_companion_beta(
        mut self,
        beta: impl Fn(usize) -> BetaSequence + Send + Sync + 'static,
    ) -> Self {
        self.companion_beta = Some(Arc::new(beta));
        self
    }

    pub fn with_grid(mut self, grid: Vec<usize>) -> Result<Self> {
        let gen = self.generator.clone();
        let companion = self.companion_beta.take();
        let mut out = Self::new(self.name, grid, move |n| gen(n))?;
        out.companion_beta = companion;
        Ok(out)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn grid(&self) -> &[usize] {
        &self.grid
    }

    /// The chain for horizon `n`; checks that the generator honors `n`.
    pub fn chain(&self, n: usize) -> Result<ChainSpec> {
        let chain = (self.generator)(n)?;
        if chain.n() != n {
            return Err(Error::input(format!(
                "scheme {}: generator returned horizon {} for n = {n}",
                self.name,
                chain.n()
            )));
        }
        Ok(chain)
    }

    pub fn companion_beta(&self, n: usize) -> Option<BetaSequence> {
        self.companion_beta.as_ref().map(|g| g(n))
    }
}

/// How the β-sequence is chosen for each `n`.
#[derive(Clone, Debug, PartialEq)]
pub enum BetaSource {
    /// Threshold search over the given θ values; falls back to all ones, which
    /// satisfies (H_β) for every `c ≤ 1`.
    Auto {
        thetas: Vec<f64>,
    },
    /// The scheme's companion sequence.
    Companion,
    /// The same bit string for every `n` (its length must match).
    Fixed(BetaSequence),
    /// Explicit per-`n` sequences.
    PerN(BTreeMap<usize, BetaSequence>),
    AllOnes,
}

impl Default for BetaSource {
    fn default() -> Self {
        BetaSource::Auto {
            thetas: DEFAULT_THETAS.to_vec(),
        }
    }
}

impl BetaSource {
    fn resolve(
        &self,
        scheme: &ArrayScheme,
        chain: &ChainSpec,
        p: &HBetaParams,
    ) -> Result<(BetaSequence, String)> {
        let n = chain.n();
        match self {
            BetaSource::Auto { thetas } => Ok(match find_beta_auto(chain, thetas, p) {
                Some((theta, b)) => (b, format!("threshold theta={theta}")),
                None => (BetaSequence::all_ones(n), "all-ones fallback".to_string()),
            }),
            BetaSource::Companion => scheme
                .companion_beta(n)
                .map(|b| (b, "companion".to_string()))
                .ok_or_else(|| Error::input(format!("scheme {} has no companion β", scheme.name))),
            BetaSource::Fixed(b) => {
                if b.len() != n {
                    return Err(Error::input(format!(
                        "beta: bit string has length {}, but n = {n}",
                        b.len()
                    )));
                }
                Ok((b.clone(), "explicit".to_string()))
            }
            BetaSource::PerN(map) => map
                .get(&n)
                .cloned()
                .map(|b| (b, "explicit".to_string()))
                .ok_or_else(|| Error::input(format!("beta: no sequence supplied for n = {n}"))),
            BetaSource::AllOnes => Ok((BetaSequence::all_ones(n), "all-ones".to_string())),
        }
    }
}

/// Which reading of the variance-weighted condition formula to evaluate.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Theorem1Variant {
    /// `C_n² α_n⁻¹ (α_n^β)⁻² [Σ D(f_i)]⁻¹`, consistent with the corollary.
    #[default]
    Consistent,
    /// `C_n² α_n (α_n^β)⁻² [Σ D(f_i)]⁻¹`, exactly as displayed.
    AsPrinted,
}

impl fmt::Display for Theorem1Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Theorem1Variant::Consistent => "consistent",
            Theorem1Variant::AsPrinted => "as-printed",
        })
    }
}

impl FromStr for Theorem1Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "consistent" => Ok(Theorem1Variant::Consistent),
            "as-printed" => Ok(Theorem1Variant::AsPrinted),
            other => Err(Error::input(format!(
                "variant: expected 'consistent' or 'as-printed', got {other:?}"
            ))),
        }
    }
}

/// Exact condition values for one horizon.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionRecord {
    pub n: usize,
    pub alpha_n: f64,
    #[serde(with = "float::option")]
    pub alpha_beta: Option<f64>,
    pub beta: BetaSequence,
    pub beta_source: String,
    pub h_beta_ok: bool,
    /// `Σ_i D(f_i(X_i))`.
    pub sum_var: f64,
    /// `min_i D(f_i(X_i))`.
    pub variance_floor: f64,
    pub c_n: f64,
    pub expected_sum: f64,
    pub var_sn: f64,
    /// `n^{1/3} α_n`.
    pub dobrushin_value: f64,
    #[serde(with = "float")]
    pub theorem1_value: f64,
    /// `n α_n (α_n^β)²`.
    #[serde(with = "float::option")]
    pub corollary2_value: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub scheme: String,
    pub variant: Theorem1Variant,
    pub kappa_convention: KappaConvention,
    pub m0: usize,
    /// Density constant of (H_β); distinct from the variance floor.
    pub density_c: f64,
    pub records: Vec<ConditionRecord>,
    pub trends: BTreeMap<String, Trend>,
    pub notes: Vec<String>,
}

impl ConditionReport {
    pub fn record(&self, n: usize) -> Option<&ConditionRecord> {
        self.records.iter().find(|r| r.n == n)
    }

    pub fn column(&self, f: impl Fn(&ConditionRecord) -> f64) -> Vec<f64> {
        self.records.iter().map(f).collect()
    }

    pub const CSV_HEADER: [&'static str; 14] = [
        "n",
        "alpha_n",
        "alpha_beta",
        "h_beta_ok",
        "sum_var",
        "variance_floor",
        "c_n",
        "expected_sum",
        "var_sn",
        "dobrushin_value",
        "theorem1_value",
        "corollary2_value",
        "beta_source",
        "beta_marked",
    ];

    /// One row per `n`, one column per quantity.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(Self::CSV_HEADER)?;
        for r in &self.records {
            out.write_record([
                r.n.to_string(),
                fmt_float(r.alpha_n),
                fmt_opt(r.alpha_beta),
                r.h_beta_ok.to_string(),
                fmt_float(r.sum_var),
                fmt_float(r.variance_floor),
                fmt_float(r.c_n),
                fmt_float(r.expected_sum),
                fmt_float(r.var_sn),
                fmt_float(r.dobrushin_value),
                fmt_float(r.theorem1_value),
                fmt_opt(r.corollary2_value),
                r.beta_source.clone(),
                r.beta.kappa(r.beta.len()).to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Exact evaluation of one chain. `alpha_beta` is `None` when β marks no step
/// `i ≤ n − 1`, and then the product condition value is missing as well.
pub fn evaluate_chain(
    chain: &ChainSpec,
    beta: BetaSequence,
    beta_source: String,
    p: &HBetaParams,
    variant: Theorem1Variant,
) -> Result<ConditionRecord> {
    let n = chain.n();
    let centered = chain.centered();
    let alpha_n = alpha_n(chain)?;
    if beta.len() != n {
        return Err(Error::input(format!(
            "beta: length {} does not match horizon n = {n}",
            beta.len()
        )));
    }
    let alpha_beta = beta.bits()[..n - 1]
        .iter()
        .any(|&b| b)
        .then(|| alpha_beta(chain, &beta))
        .transpose()?;
    let h_beta_ok = check_h_beta_with(&beta, p, KappaConvention::PrefixDifference);
    let vars = per_step_variances(&centered);
    let sum_var: f64 = vars.iter().sum();
    let variance_floor = vars.iter().copied().fold(f64::INFINITY, f64::min);
    let c_n = centered.sup_bound();
    let var_sn = variance_of_sum(&centered)?;

    let dobrushin_value = (n as f64).cbrt() * alpha_n;
    let corollary2_value = alpha_beta.map(|ab| n as f64 * alpha_n * ab * ab);
    let theorem1_value = match alpha_beta {
        Some(ab) if ab > 0.0 && sum_var > 0.0 => {
            let alpha_factor = match variant {
                Theorem1Variant::Consistent => {
                    if alpha_n > 0.0 {
                        1.0 / alpha_n
                    } else {
                        f64::INFINITY
                    }
                }
                Theorem1Variant::AsPrinted => alpha_n,
            };
            c_n * c_n * alpha_factor / (ab * ab) / sum_var
        }
        _ => f64::INFINITY,
    };

    Ok(ConditionRecord {
        n,
        alpha_n,
        alpha_beta,
        beta,
        beta_source,
        h_beta_ok,
        sum_var,
        variance_floor,
        c_n,
        expected_sum: expected_sum(chain),
        var_sn,
        dobrushin_value,
        theorem1_value,
        corollary2_value,
    })
}

/// Evaluates every grid point (in parallel) and labels the trends.
pub fn evaluate_conditions(
    scheme: &ArrayScheme,
    betas: &BetaSource,
    p: &HBetaParams,
    variant: Theorem1Variant,
) -> Result<ConditionReport> {
    let records = scheme
        .grid()
        .par_iter()
        .map(|&n| {
            let chain = scheme.chain(n)?;
            let (beta, source) = betas.resolve(scheme, &chain, p)?;
            evaluate_chain(&chain, beta, source, p, variant)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut trends = BTreeMap::new();
    let col = |f: fn(&ConditionRecord) -> f64| records.iter().map(f).collect::<Vec<_>>();
    let col_opt =
        |f: fn(&ConditionRecord) -> Option<f64>| records.iter().map(f).collect::<Vec<_>>();
    trends.insert("alpha_n".into(), trend(&col(|r| r.alpha_n)));
    trends.insert("alpha_beta".into(), trend_opt(&col_opt(|r| r.alpha_beta)));
    trends.insert("sum_var".into(), trend(&col(|r| r.sum_var)));
    trends.insert("var_sn".into(), trend(&col(|r| r.var_sn)));
    trends.insert("dobrushin_value".into(), trend(&col(|r| r.dobrushin_value)));
    trends.insert("theorem1_value".into(), trend(&col(|r| r.theorem1_value)));
    trends.insert(
        "corollary2_value".into(),
        trend_opt(&col_opt(|r| r.corollary2_value)),
    );

    let mut notes = vec![
        "limits are not decided; trends are strict monotonicity over the grid".to_string(),
        "(H_beta) windows use prefix differences kappa_j - kappa_i".to_string(),
        "c_n is the largest sup norm of the centered observables".to_string(),
    ];
    notes.push(match variant {
        Theorem1Variant::Consistent => {
            "theorem1_value uses alpha_n^-1; the displayed condition has alpha_n in the numerator"
                .to_string()
        }
        Theorem1Variant::AsPrinted => {
            "theorem1_value reproduces the display with alpha_n in the numerator".to_string()
        }
    });

    Ok(ConditionReport {
        scheme: scheme.name().to_string(),
        variant,
        kappa_convention: KappaConvention::PrefixDifference,
        m0: p.m0(),
        density_c: p.c(),
        records,
        trends,
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::markov::{Distribution, Kernel, Observable, StateSpace};

    fn pm1(n: usize, kernel: Kernel) -> ChainSpec {
        ChainSpec::homogeneous(
            n,
            Distribution::uniform(2),
            kernel,
            Observable::new(vec![1.0, -1.0]).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn per_step_variance_examples() {
        let mu = Distribution::new(vec![0.25, 0.75]).unwrap();
        let chain = ChainSpec::homogeneous(
            1,
            mu.clone(),
            Kernel::identity(2),
            Observable::new(vec![1.0, 0.0]).unwrap(),
        )
        .unwrap();
        assert!((per_step_variances(&chain)[0] - 0.1875).abs() < 1e-15);
        assert_eq!(
            per_step_variances(&pm1(3, Kernel::identity(2))),
            vec![1.0; 3]
        );
        let constant =
            ChainSpec::homogeneous(2, mu, Kernel::identity(2), Observable::constant(2, 3.0))
                .unwrap();
        assert_eq!(per_step_variances(&constant), vec![0.0; 2]);
    }

    #[test]
    fn expected_sum_examples() {
        assert!(expected_sum(&pm1(5, Kernel::identity(2))).abs() < 1e-15);
        let mu = Distribution::new(vec![0.25, 0.75]).unwrap();
        let one = ChainSpec::homogeneous(
            1,
            mu,
            Kernel::identity(2),
            Observable::new(vec![2.0, 1.0]).unwrap(),
        )
        .unwrap();
        assert!((expected_sum(&one) - 1.25).abs() < 1e-15);
    }

    #[test]
    fn variance_of_sum_examples() {
        let indep = pm1(6, Kernel::constant(&Distribution::uniform(2)));
        assert!((variance_of_sum(&indep).unwrap() - 6.0).abs() < 1e-12);
        // fully persistent: S_n = ±n
        let frozen = pm1(4, Kernel::identity(2));
        assert!((variance_of_sum(&frozen).unwrap() - 16.0).abs() < 1e-12);
        assert!((variance_of_sum(&pm1(1, Kernel::identity(2))).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn variance_of_sum_rejects_uncentered() {
        let chain = ChainSpec::homogeneous(
            3,
            Distribution::uniform(2),
            Kernel::identity(2),
            Observable::new(vec![1.0, 0.0]).unwrap(),
        )
        .unwrap();
        assert!(matches!(
            variance_of_sum(&chain),
            Err(Error::NotCentered { index: 1, .. })
        ));
    }

    #[test]
    fn variance_lower_bound_examples() {
        let indep = pm1(5, Kernel::constant(&Distribution::uniform(2)));
        let check = variance_lower_bound_check(&indep).unwrap();
        assert!(check.ok);
        assert!((check.lhs - 5.0).abs() < 1e-12 && (check.rhs - 1.25).abs() < 1e-12);
        let with_identity = pm1(5, Kernel::identity(2));
        let check = variance_lower_bound_check(&with_identity).unwrap();
        assert_eq!(check.rhs, 0.0);
        assert!(check.ok);
    }

    fn plug_in_scheme(alpha_of_n: fn(usize) -> f64) -> ArrayScheme {
        ArrayScheme::new("plug-in", vec![64, 512, 4096], move |n| {
            let eps = (1.0 - alpha_of_n(n)) / 2.0;
            // δ([[1−ε', ε'],[ε', 1−ε']]) = |1 − 2ε'|; pick ε' = ½ − ε so α = 1 − 2ε
            Ok(pm1(n, Kernel::symmetric_flip(0.5 - eps)?))
        })
        .unwrap()
    }

    #[test]
    fn evaluate_conditions_plug_in_unit_alpha() {
        let scheme = plug_in_scheme(|_| 1.0);
        let p = HBetaParams::new(1, 1.0).unwrap();
        let report = evaluate_conditions(
            &scheme,
            &BetaSource::AllOnes,
            &p,
            Theorem1Variant::Consistent,
        )
        .unwrap();
        for r in &report.records {
            let n = r.n as f64;
            assert!((r.dobrushin_value - n.cbrt()).abs() < 1e-12);
            assert!((r.corollary2_value.unwrap() - n).abs() < 1e-9);
            assert!((r.theorem1_value - 1.0 / n).abs() < 1e-15);
            assert!(r.h_beta_ok);
            assert!((r.var_sn - n).abs() < 1e-8);
        }
        assert_eq!(report.trends["dobrushin_value"], Trend::Increasing);
        assert_eq!(report.trends["theorem1_value"], Trend::Decreasing);
    }

    #[test]
    fn evaluate_conditions_decaying_alpha() {
        // α_n = n^{-1/2} on every step but the first, which has α = 0.5
        let scheme = ArrayScheme::new("decay", vec![64, 256, 1024], |n| {
            let bad = Kernel::symmetric_flip((n as f64).powf(-0.5) / 2.0)?;
            let good = Kernel::symmetric_flip(0.25)?;
            let mut kernels = vec![bad; n - 1];
            kernels[0] = good;
            ChainSpec::new(
                StateSpace::new(2)?,
                Distribution::uniform(2),
                kernels,
                vec![Observable::new(vec![1.0, -1.0])?; n],
            )
        })
        .unwrap();
        let mut per_n = BTreeMap::new();
        for n in [64usize, 256, 1024] {
            let mut bits = vec![false; n];
            bits[0] = true;
            per_n.insert(n, BetaSequence::new(bits));
        }
        let p = HBetaParams::new(1, 0.5).unwrap();
        let report = evaluate_conditions(
            &scheme,
            &BetaSource::PerN(per_n),
            &p,
            Theorem1Variant::Consistent,
        )
        .unwrap();
        for r in &report.records {
            let n = r.n as f64;
            assert!((r.dobrushin_value - n.powf(-1.0 / 6.0)).abs() < 1e-12);
            assert!((r.corollary2_value.unwrap() - 0.25 * n.sqrt()).abs() < 1e-9);
        }
        assert_eq!(report.trends["dobrushin_value"], Trend::Decreasing);
        assert_eq!(report.trends["corollary2_value"], Trend::Increasing);
    }

    #[test]
    fn theorem1_variants_and_zero_alpha() {
        let chain = pm1(8, Kernel::symmetric_flip(0.25).unwrap());
        let p = HBetaParams::new(1, 1.0).unwrap();
        let b = BetaSequence::all_ones(8);
        let c = evaluate_chain(
            &chain,
            b.clone(),
            "x".into(),
            &p,
            Theorem1Variant::Consistent,
        )
        .unwrap();
        let a = evaluate_chain(
            &chain,
            b.clone(),
            "x".into(),
            &p,
            Theorem1Variant::AsPrinted,
        )
        .unwrap();
        // α_n = α^β = 0.5, C_n = 1, Σ D = 8
        assert!((c.theorem1_value - 1.0 / (0.5 * 0.25 * 8.0)).abs() < 1e-12);
        assert!((a.theorem1_value - 0.5 / (0.25 * 8.0)).abs() < 1e-12);

        let frozen = pm1(8, Kernel::identity(2));
        let r = evaluate_chain(&frozen, b, "x".into(), &p, Theorem1Variant::Consistent).unwrap();
        assert_eq!(r.alpha_n, 0.0);
        assert_eq!(r.theorem1_value, f64::INFINITY);
    }

    #[test]
    fn auto_beta_falls_back_to_all_ones() {
        let scheme = ArrayScheme::single("slow", pm1(16, Kernel::symmetric_flip(0.01).unwrap()));
        let p = HBetaParams::new(2, 0.5).unwrap();
        let report = evaluate_conditions(
            &scheme,
            &BetaSource::default(),
            &p,
            Theorem1Variant::Consistent,
        )
        .unwrap();
        let r = &report.records[0];
        assert_eq!(r.beta_source, "all-ones fallback");
        assert!(r.h_beta_ok);
        assert!((r.alpha_beta.unwrap() - 0.02).abs() < 1e-12);
    }

    #[test]
    fn report_json_roundtrip_and_csv() {
        let scheme = plug_in_scheme(|n| 1.0 / (n as f64).sqrt());
        let p = HBetaParams::new(1, 1.0).unwrap();
        let report = evaluate_conditions(
            &scheme,
            &BetaSource::AllOnes,
            &p,
            Theorem1Variant::Consistent,
        )
        .unwrap();
        let json = serde_json::to_string(&report).unwrap();
        let back: ConditionReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, report);

        let mut buf = Vec::new();
        report.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert!(lines.next().unwrap().starts_with("n,alpha_n,alpha_beta"));
        assert_eq!(lines.count(), 3);
    }

    #[test]
    fn scheme_rejects_wrong_horizon() {
        let scheme =
            ArrayScheme::new("broken", vec![4], |_| Ok(pm1(3, Kernel::identity(2)))).unwrap();
        assert!(scheme.chain(4).is_err());
        assert!(ArrayScheme::new("empty", vec![], |n| Ok(pm1(n, Kernel::identity(2)))).is_err());
    }
}
