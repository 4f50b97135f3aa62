//! Markov–Dobrushin coefficients, the oscillation semi-norm, and β-sequences.
//!
//! For a kernel `π` on a finite space the contraction coefficient is
//!
//! ```text
//! δ(π) = max_{x1,x2} ½ Σ_y |π(x1, y) − π(x2, y)|,      α(π) = 1 − δ(π).
//! ```
//!
//! `δ` can equivalently be written as a supremum over events, over functions
//! bounded by one, or over functions of oscillation at most one.
//! [`delta_three_ways`] enumerates all three for small spaces and is used as an
//! oracle for [`delta`].
//!
//! A β-sequence marks "good" steps of a chain. Condition (H_β) asks that every
//! window of length at least `m0` carries marked steps with density at least
//! `c`, measured with prefix counts `κ_j − κ_i ≥ c (j − i)`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::markov::{ChainSpec, Distribution, Kernel, Observable};

/// Largest state space for which [`delta_three_ways`] enumerates subsets.
pub const ENUMERATION_LIMIT: usize = 20;

/// Default thresholds tried, in order, by [`find_beta_auto`].
pub const DEFAULT_THETAS: [f64; 4] = [0.5, 0.2, 0.1, 0.05];

const H_BETA_TOL: f64 = 1e-12;

/// Contraction coefficient: the largest total-variation distance between two rows.
pub fn delta(k: &Kernel) -> f64 {
    let s = k.size();
    let mut best = 0.0_f64;
    for x1 in 0..s {
        let r1 = k.row(x1);
        for x2 in x1 + 1..s {
            let tv: f64 = r1
                .iter()
                .zip(k.row(x2))
                .map(|(a, b)| (a - b).abs())
                .sum::<f64>()
                * 0.5;
            best = best.max(tv);
        }
    }
    best.min(1.0)
}

/// `δ(π)` computed by brute force in its three equivalent forms: over events
/// `A`, over sign functions `f ∈ {−1, 1}^X`, and over indicator functions
/// `u ∈ {0, 1}^X` (the extreme points of `{Osc(u) ≤ 1}`).
pub fn delta_three_ways(k: &Kernel) -> Result<(f64, f64, f64)> {
    let s = k.size();
    if s > ENUMERATION_LIMIT {
        return Err(Error::Guard(format!(
            "delta_three_ways enumerates 2^{s} subsets; limit is {ENUMERATION_LIMIT} states"
        )));
    }
    let masks = 1u64 << s;
    let (mut by_event, mut by_sign, mut by_indicator) = (0.0_f64, 0.0_f64, 0.0_f64);
    for x1 in 0..s {
        for x2 in 0..s {
            let (r1, r2) = (k.row(x1), k.row(x2));
            for mask in 0..masks {
                let inside = |y: usize| mask >> y & 1 == 1;
                // π(x1, A) − π(x2, A)
                let mut event = 0.0;
                // Σ_y f(y) (π(x1, y) − π(x2, y)) with f = ±1
                let mut signed = 0.0;
                // (πu)(x1) − (πu)(x2) with u the indicator of A
                let (mut u1, mut u2) = (0.0, 0.0);
                for y in 0..s {
                    let d = r1[y] - r2[y];
                    if inside(y) {
                        event += d;
                        signed += d;
                        u1 += r1[y];
                        u2 += r2[y];
                    } else {
                        signed -= d;
                    }
                }
                by_event = by_event.max(event.abs());
                by_sign = by_sign.max(0.5 * signed.abs());
                by_indicator = by_indicator.max((u1 - u2).abs());
            }
        }
    }
    Ok((by_event, by_sign, by_indicator))
}

pub fn alpha(k: &Kernel) -> f64 {
    1.0 - delta(k)
}

/// `α_n`: the smallest one-step ergodic coefficient along the chain.
pub fn alpha_n(chain: &ChainSpec) -> Result<f64> {
    if chain.n() < 2 {
        return Err(Error::input("alpha_n needs a horizon n >= 2"));
    }
    Ok(chain
        .kernels()
        .iter()
        .map(alpha)
        .fold(f64::INFINITY, f64::min))
}

/// `max f − min f`.
pub fn osc(f: &Observable) -> f64 {
    osc_values(f.values())
}

pub(crate) fn osc_values(values: &[f64]) -> f64 {
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    hi - lo
}

/// Essential oscillation: `max − min` of `f` over the support of `mu`.
pub fn osc_on_support(f: &Observable, mu: &Distribution) -> Result<f64> {
    if f.len() != mu.len() {
        return Err(Error::Dimension {
            expected: mu.len(),
            found: f.len(),
        });
    }
    osc_on_support_values(f.values(), mu)
        .ok_or_else(|| Error::input("distribution has empty support"))
}

pub(crate) fn osc_on_support_values(values: &[f64], mu: &Distribution) -> Option<f64> {
    let mut range: Option<(f64, f64)> = None;
    for x in mu.support() {
        let v = values[x];
        range = Some(match range {
            None => (v, v),
            Some((lo, hi)) => (lo.min(v), hi.max(v)),
        });
    }
    range.map(|(lo, hi)| hi - lo)
}

/// Largest `|f(x)|` over the support of `mu`.
pub(crate) fn sup_on_support(values: &[f64], mu: &Distribution) -> f64 {
    mu.support().fold(0.0_f64, |m, x| m.max(values[x].abs()))
}

/// Index convention for window counts of a β-sequence.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KappaConvention {
    /// `κ_j − κ_i = Σ_{k=i+1}^{j} β_k`, the prefix-count difference.
    #[default]
    PrefixDifference,
    /// `Σ_{k=i}^{j} β_k`, both endpoints included.
    Inclusive,
}

impl fmt::Display for KappaConvention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            KappaConvention::PrefixDifference => "prefix-difference",
            KappaConvention::Inclusive => "inclusive",
        })
    }
}

/// Non-random 0/1 marks over `1..=n` with prefix counts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BetaSequence {
    bits: Vec<bool>,
    // kappa[j] = Σ_{k ≤ j} β_k, kappa[0] = 0
    kappa: Vec<usize>,
}

impl BetaSequence {
    pub fn new(bits: Vec<bool>) -> Self {
        let mut kappa = Vec::with_capacity(bits.len() + 1);
        kappa.push(0);
        let mut acc = 0;
        for &b in &bits {
            acc += usize::from(b);
            kappa.push(acc);
        }
        Self { bits, kappa }
    }

    pub fn all_ones(n: usize) -> Self {
        Self::new(vec![true; n])
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    /// `β_k` for 1-based `k`.
    pub fn bit(&self, k: usize) -> bool {
        self.bits[k - 1]
    }

    /// `κ_{n,j}` for `0 ≤ j ≤ n` (with `κ_{n,0} = 0`).
    pub fn kappa(&self, j: usize) -> usize {
        self.kappa[j]
    }

    /// Prefix counts `κ_{n,1}, …, κ_{n,n}`.
    pub fn kappa_prefix(&self) -> &[usize] {
        &self.kappa[1..]
    }

    /// Window count for `i ≤ j` under the given convention.
    pub fn window(&self, i: usize, j: usize, convention: KappaConvention) -> usize {
        match convention {
            KappaConvention::PrefixDifference => self.kappa[j] - self.kappa[i],
            KappaConvention::Inclusive => self.kappa[j] - self.kappa[i - 1],
        }
    }

    /// Number of marked one-step kernels in the product `π_{i,j}`, i.e. marks
    /// at positions `i, …, j − 1`.
    pub fn kernels_marked(&self, i: usize, j: usize) -> usize {
        if j <= i {
            return 0;
        }
        self.kappa[j - 1] - self.kappa[i - 1]
    }
}

impl fmt::Display for BetaSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for BetaSequence {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bits = s
            .chars()
            .enumerate()
            .map(|(i, ch)| match ch {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::input(format!(
                    "beta: character {i} is {other:?}, expected '0' or '1'"
                ))),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::new(bits))
    }
}

impl Serialize for BetaSequence {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for BetaSequence {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Window threshold `m0` and density constant `c` of condition (H_β).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HBetaParams {
    m0: usize,
    c: f64,
}

impl HBetaParams {
    pub fn new(m0: usize, c: f64) -> Result<Self> {
        if m0 < 1 {
            return Err(Error::input("m0 must be at least 1"));
        }
        if !(c > 0.0 && c <= 1.0) {
            return Err(Error::input(format!("c must lie in (0, 1], got {c}")));
        }
        Ok(Self { m0, c })
    }

    pub fn m0(&self) -> usize {
        self.m0
    }

    pub fn c(&self) -> f64 {
        self.c
    }
}

/// `α_n^β`: smallest ergodic coefficient over marked steps `i ≤ n − 1`.
pub fn alpha_beta(chain: &ChainSpec, beta: &BetaSequence) -> Result<f64> {
    if beta.len() != chain.n() {
        return Err(Error::input(format!(
            "beta: length {} does not match horizon n = {}",
            beta.len(),
            chain.n()
        )));
    }
    chain
        .kernels()
        .iter()
        .zip(beta.bits())
        .filter(|(_, &b)| b)
        .map(|(k, _)| alpha(k))
        .reduce(f64::min)
        .ok_or_else(|| Error::input("empty β support"))
}

/// Condition (H_β) with prefix-count differences. Linear time: with
/// `g(i) = κ_i − c·i` the condition reads `g(j) ≥ max_{1 ≤ i ≤ j − m0} g(i)`.
pub fn check_h_beta(beta: &BetaSequence, p: &HBetaParams) -> bool {
    check_h_beta_with(beta, p, KappaConvention::PrefixDifference)
}

/// [`check_h_beta`] under an explicit window convention.
pub fn check_h_beta_with(
    beta: &BetaSequence,
    p: &HBetaParams,
    convention: KappaConvention,
) -> bool {
    let n = beta.len();
    let c = p.c();
    // window(i, j) = κ_j − κ_{i − shift}
    let shift = match convention {
        KappaConvention::PrefixDifference => 0,
        KappaConvention::Inclusive => 1,
    };
    let g = |i: usize| beta.kappa(i) as f64 - c * i as f64;
    let mut prefix_max = f64::NEG_INFINITY;
    for j in (1 + p.m0())..=n {
        let i = j - p.m0();
        // κ_{i-shift} − c·i = g(i - shift) − c·shift
        prefix_max = prefix_max.max(g(i - shift) - c * shift as f64);
        if g(j) < prefix_max - H_BETA_TOL {
            return false;
        }
    }
    true
}

/// Threshold search for an (H_β) witness: `β_i = 1` iff `α(π_{i,i+1}) ≥ θ`,
/// with the unconstrained trailing mark copied from `β_{n−1}`.
pub fn find_beta(chain: &ChainSpec, theta: f64, p: &HBetaParams) -> Option<BetaSequence> {
    let n = chain.n();
    if n < 2 {
        return None;
    }
    let mut bits: Vec<bool> = chain.kernels().iter().map(|k| alpha(k) >= theta).collect();
    bits.push(bits[n - 2]);
    let beta = BetaSequence::new(bits);
    check_h_beta(&beta, p).then_some(beta)
}

/// Tries each threshold in turn; returns the first accepted witness and its θ.
pub fn find_beta_auto(
    chain: &ChainSpec,
    thetas: &[f64],
    p: &HBetaParams,
) -> Option<(f64, BetaSequence)> {
    thetas
        .iter()
        .find_map(|&t| find_beta(chain, t, p).map(|b| (t, b)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::markov::{Distribution, StateSpace};

    fn k2(a: [[f64; 2]; 2]) -> Kernel {
        Kernel::new(a.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    fn chain_with_kernels(kernels: Vec<Kernel>) -> ChainSpec {
        let s = kernels[0].size();
        let n = kernels.len() + 1;
        ChainSpec::new(
            StateSpace::new(s).unwrap(),
            Distribution::uniform(s),
            kernels,
            vec![Observable::constant(s, 0.0); n],
        )
        .unwrap()
    }

    #[test]
    fn delta_examples() {
        let same = k2([[0.3, 0.7], [0.3, 0.7]]);
        assert_eq!(delta(&same), 0.0);
        assert_eq!(alpha(&same), 1.0);
        assert_eq!(delta(&Kernel::identity(2)), 1.0);
        assert_eq!(alpha(&Kernel::identity(2)), 0.0);
        let k = k2([[0.9, 0.1], [0.2, 0.8]]);
        assert!((delta(&k) - 0.7).abs() < 1e-15);
        assert!((alpha(&k) - 0.3).abs() < 1e-15);
    }

    #[test]
    fn delta_three_ways_examples() {
        let (a, b, c) = delta_three_ways(&k2([[0.9, 0.1], [0.2, 0.8]])).unwrap();
        for v in [a, b, c] {
            assert!((v - 0.7).abs() < 1e-15);
        }
        assert_eq!(
            delta_three_ways(&Kernel::identity(2)).unwrap(),
            (1.0, 1.0, 1.0)
        );
        assert_eq!(
            delta_three_ways(&k2([[0.5, 0.5], [0.5, 0.5]])).unwrap(),
            (0.0, 0.0, 0.0)
        );
        assert!(matches!(
            delta_three_ways(&Kernel::identity(21)),
            Err(Error::Guard(_))
        ));
    }

    #[test]
    fn alpha_n_examples() {
        let same = k2([[0.3, 0.7], [0.3, 0.7]]);
        assert_eq!(
            alpha_n(&chain_with_kernels(vec![same.clone(); 3])).unwrap(),
            1.0
        );
        // δ = 0.7 and δ = 0.5
        let a = k2([[0.9, 0.1], [0.2, 0.8]]);
        let b = k2([[0.75, 0.25], [0.25, 0.75]]);
        assert!((alpha_n(&chain_with_kernels(vec![a, b])).unwrap() - 0.3).abs() < 1e-15);
        let with_id = chain_with_kernels(vec![same, Kernel::identity(2)]);
        assert_eq!(alpha_n(&with_id).unwrap(), 0.0);
        let single = ChainSpec::homogeneous(
            1,
            Distribution::uniform(2),
            Kernel::identity(2),
            Observable::constant(2, 0.0),
        )
        .unwrap();
        assert!(alpha_n(&single).is_err());
    }

    #[test]
    fn osc_examples() {
        assert_eq!(osc(&Observable::constant(3, 2.0)), 0.0);
        assert_eq!(osc(&Observable::new(vec![1.0, -1.0]).unwrap()), 2.0);
        let f = Observable::new(vec![0.3, -0.2, 0.7]).unwrap();
        assert!((osc(&f) - 0.9).abs() < 1e-15);

        let g = Observable::new(vec![5.0, 1.0, 2.0]).unwrap();
        let mu = Distribution::new(vec![0.0, 0.5, 0.5]).unwrap();
        assert_eq!(osc_on_support(&g, &mu).unwrap(), 1.0);
        assert_eq!(
            osc_on_support(&g, &Distribution::point_mass(3, 0)).unwrap(),
            0.0
        );
        assert_eq!(
            osc_on_support(&g, &Distribution::uniform(3)).unwrap(),
            osc(&g)
        );
    }

    #[test]
    fn alpha_beta_examples() {
        // δ sequence (0.99, 0.5, 0.99, 0.5)
        let bad = k2([[0.995, 0.005], [0.005, 0.995]]);
        let good = k2([[0.75, 0.25], [0.25, 0.75]]);
        let chain = chain_with_kernels(vec![bad.clone(), good.clone(), bad, good]);
        let beta: BetaSequence = "01010".parse().unwrap();
        assert!((alpha_beta(&chain, &beta).unwrap() - 0.5).abs() < 1e-15);
        let ones = BetaSequence::all_ones(5);
        assert_eq!(alpha_beta(&chain, &ones).unwrap(), alpha_n(&chain).unwrap());
        let zeros: BetaSequence = "00001".parse().unwrap();
        let err = alpha_beta(&chain, &zeros).unwrap_err();
        assert!(err.to_string().contains("empty β support"));
        assert!(alpha_beta(&chain, &"0101".parse().unwrap()).is_err());
    }

    #[test]
    fn h_beta_examples() {
        let p = |m0, c| HBetaParams::new(m0, c).unwrap();
        assert!(check_h_beta(&BetaSequence::all_ones(50), &p(1, 1.0)));
        assert!(check_h_beta(&BetaSequence::all_ones(50), &p(7, 0.4)));
        assert!(!check_h_beta(
            &BetaSequence::new(vec![false; 10]),
            &p(3, 0.1)
        ));
        let alt: BetaSequence = "1010101010".parse().unwrap();
        assert!(check_h_beta(&alt, &p(3, 0.3)));
        assert!(!check_h_beta(&alt, &p(3, 0.5)));
        // n ≤ m0: no pair is constrained
        assert!(check_h_beta(&BetaSequence::new(vec![false; 3]), &p(3, 1.0)));
    }

    #[test]
    fn h_beta_params_validation() {
        assert!(HBetaParams::new(0, 0.5).is_err());
        assert!(HBetaParams::new(1, 0.0).is_err());
        assert!(HBetaParams::new(1, 1.5).is_err());
    }

    #[test]
    fn beta_bitstring_roundtrip_and_kappa() {
        let b: BetaSequence = "110010".parse().unwrap();
        assert_eq!(b.to_string(), "110010");
        assert_eq!(b.kappa_prefix(), &[1, 2, 2, 2, 3, 3]);
        assert_eq!(b.window(2, 5, KappaConvention::PrefixDifference), 1);
        assert_eq!(b.window(2, 5, KappaConvention::Inclusive), 2);
        assert_eq!(b.kernels_marked(2, 5), 1);
        assert_eq!(b.kernels_marked(1, 3), 2);
        assert_eq!(b.kernels_marked(3, 3), 0);
        assert!("10x".parse::<BetaSequence>().is_err());
        let json = serde_json::to_string(&b).unwrap();
        assert_eq!(json, "\"110010\"");
    }

    #[test]
    fn find_beta_examples() {
        let p = HBetaParams::new(3, 0.3).unwrap();
        // α = 0.5 everywhere
        let half = k2([[0.75, 0.25], [0.25, 0.75]]);
        let chain = chain_with_kernels(vec![half; 9]);
        assert_eq!(
            find_beta(&chain, 0.4, &p).unwrap(),
            BetaSequence::all_ones(10)
        );
        // α = 0.1 everywhere
        let weak = k2([[0.95, 0.05], [0.05, 0.95]]);
        assert!(find_beta(&chain_with_kernels(vec![weak; 9]), 0.4, &p).is_none());
        // alternating α ∈ {0.6, 0.01}
        let good = k2([[0.7, 0.3], [0.3, 0.7]]);
        let bad = k2([[0.995, 0.005], [0.005, 0.995]]);
        let kernels = (0..9)
            .map(|i| {
                if i % 2 == 0 {
                    good.clone()
                } else {
                    bad.clone()
                }
            })
            .collect();
        let beta = find_beta(&chain_with_kernels(kernels), 0.5, &p).unwrap();
        assert_eq!(beta.to_string(), "1010101011");
    }
}
