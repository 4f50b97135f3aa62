//! Finite state spaces, probability vectors, transition kernels and observables.
//!
//! Everything here is exact finite linear algebra over `f64`:
//!
//! ```text
//! (a b)(x, z) = Σ_y a(x, y) b(y, z)        kernel composition
//! (k f)(x)    = Σ_y k(x, y) f(y)           kernel acting on a function
//! (μ k)(y)    = Σ_x μ(x) k(x, y)           kernel acting on a measure
//! ```
//!
//! Kernels are row-stochastic: rows index the source state. Time indices are
//! 1-based, so a chain of horizon `n` has one-step kernels `1→2, …, n−1→n`
//! and observables `f_1, …, f_n`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance for probability vectors and kernel rows summing to one.
pub const SUM_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateSpace {
    size: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    labels: Option<Vec<String>>,
}

impl StateSpace {
    pub fn new(size: usize) -> Result<Self> {
        if size == 0 {
            return Err(Error::input("state space must have at least one state"));
        }
        Ok(Self { size, labels: None })
    }

    pub fn with_labels(labels: Vec<String>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::input("states: at least one label is required"));
        }
        Ok(Self {
            size: labels.len(),
            labels: Some(labels),
        })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    /// Display name of state `x`; falls back to the index.
    pub fn label(&self, x: usize) -> String {
        match &self.labels {
            Some(l) => l[x].clone(),
            None => x.to_string(),
        }
    }
}

fn check_probability_row(row: &[f64]) -> std::result::Result<(), String> {
    for (y, &p) in row.iter().enumerate() {
        if !p.is_finite() || p < 0.0 {
            return Err(format!("entry {y} is {p}, expected a finite value >= 0"));
        }
    }
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > SUM_TOL {
        return Err(format!("sums to {sum}, expected 1"));
    }
    Ok(())
}

/// A probability vector on a finite state space.
#[derive(Clone, Debug, PartialEq)]
pub struct Distribution {
    probs: Vec<f64>,
}

impl Distribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::input("distribution is empty"));
        }
        check_probability_row(&probs).map_err(|e| Error::input(format!("distribution {e}")))?;
        Ok(Self { probs })
    }

    /// Wraps a vector produced by exact propagation. Accumulated rounding over
    /// long horizons may exceed [`SUM_TOL`], so no validation happens here.
    pub(crate) fn from_raw(probs: Vec<f64>) -> Self {
        Self { probs }
    }

    pub fn point_mass(size: usize, x: usize) -> Self {
        let mut probs = vec![0.0; size];
        probs[x] = 1.0;
        Self { probs }
    }

    pub fn uniform(size: usize) -> Self {
        Self {
            probs: vec![1.0 / size as f64; size],
        }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn prob(&self, x: usize) -> f64 {
        self.probs[x]
    }

    /// States carrying positive mass.
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.probs
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(|(x, _)| x)
    }

    /// `μ k`: the law one step later.
    pub fn push_forward(&self, k: &Kernel) -> Result<Distribution> {
        check_dim(k.size, self.len())?;
        let s = k.size;
        let mut out = vec![0.0; s];
        for (x, &m) in self.probs.iter().enumerate() {
            if m == 0.0 {
                continue;
            }
            for (o, &p) in out.iter_mut().zip(k.row(x)) {
                *o += m * p;
            }
        }
        Ok(Distribution { probs: out })
    }

    /// `Σ_x μ(x) f(x)`.
    pub fn expect(&self, f: &Observable) -> Result<f64> {
        check_dim(self.len(), f.len())?;
        Ok(dot(&self.probs, &f.values))
    }

    /// Variance of `f(X)` with `X ~ μ`, computed as `E f² − (E f)²`.
    pub fn variance(&self, f: &Observable) -> Result<f64> {
        check_dim(self.len(), f.len())?;
        let mean = dot(&self.probs, &f.values);
        let second: f64 = self
            .probs
            .iter()
            .zip(&f.values)
            .map(|(p, v)| p * v * v)
            .sum();
        Ok(second - mean * mean)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::Dimension { expected, found });
    }
    Ok(())
}

/// One-step transition matrix, stored row-major. `get(x, y)` is the
/// probability of moving from `x` to `y`.
#[derive(Clone, Debug, PartialEq)]
pub struct Kernel {
    size: usize,
    data: Vec<f64>,
}

impl Kernel {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let size = rows.len();
        if size == 0 {
            return Err(Error::input("kernel has no rows"));
        }
        let mut data = Vec::with_capacity(size * size);
        for (x, row) in rows.iter().enumerate() {
            if row.len() != size {
                return Err(Error::input(format!(
                    "row {x} has {} entries, expected {size}",
                    row.len()
                )));
            }
            check_probability_row(row).map_err(|e| Error::input(format!("row {x} {e}")))?;
            data.extend_from_slice(row);
        }
        Ok(Self { size, data })
    }

    pub(crate) fn from_raw(size: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), size * size);
        Self { size, data }
    }

    pub fn identity(size: usize) -> Self {
        let mut data = vec![0.0; size * size];
        for x in 0..size {
            data[x * size + x] = 1.0;
        }
        Self { size, data }
    }

    /// Kernel whose every row is `p`: the next state ignores the current one.
    pub fn constant(p: &Distribution) -> Self {
        let size = p.len();
        let data = (0..size).flat_map(|_| p.probs.iter().copied()).collect();
        Self { size, data }
    }

    /// Two-state kernel `[[1−ε, ε], [ε, 1−ε]]`.
    pub fn symmetric_flip(eps: f64) -> Result<Self> {
        Self::new(vec![vec![1.0 - eps, eps], vec![eps, 1.0 - eps]])
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn row(&self, x: usize) -> &[f64] {
        &self.data[x * self.size..(x + 1) * self.size]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.size)
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[x * self.size + y]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.rows().map(<[f64]>::to_vec).collect()
    }

    /// Chapman–Kolmogorov product `self · other` (first `self`, then `other`).
    pub fn compose(&self, other: &Kernel) -> Result<Kernel> {
        check_dim(self.size, other.size)?;
        let s = self.size;
        let mut data = vec![0.0; s * s];
        for x in 0..s {
            let out = &mut data[x * s..(x + 1) * s];
            for (y, &a) in self.row(x).iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                for (o, &b) in out.iter_mut().zip(other.row(y)) {
                    *o += a * b;
                }
            }
        }
        Ok(Kernel { size: s, data })
    }

    /// `(k f)(x) = Σ_y k(x, y) f(y)`.
    pub fn apply(&self, f: &Observable) -> Result<Observable> {
        check_dim(self.size, f.len())?;
        Ok(Observable::from_values(self.apply_slice(&f.values)))
    }

    pub(crate) fn apply_slice(&self, f: &[f64]) -> Vec<f64> {
        self.rows().map(|row| dot(row, f)).collect()
    }
}

/// A real function on the state space together with its sup norm.
#[derive(Clone, Debug, PartialEq)]
pub struct Observable {
    values: Vec<f64>,
    sup_norm: f64,
}

impl Observable {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::input("observable is empty"));
        }
        if let Some(x) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::input(format!("entry {x} is not finite")));
        }
        Ok(Self::from_values(values))
    }

    pub(crate) fn from_values(values: Vec<f64>) -> Self {
        let sup_norm = values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        Self { values, sup_norm }
    }

    pub fn constant(size: usize, c: f64) -> Self {
        Self::from_values(vec![c; size])
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, x: usize) -> f64 {
        self.values[x]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sup_norm(&self) -> f64 {
        self.sup_norm
    }

    pub fn shifted(&self, c: f64) -> Observable {
        Self::from_values(self.values.iter().map(|v| v + c).collect())
    }

    pub fn map(&self, op: impl Fn(f64) -> f64) -> Observable {
        Self::from_values(self.values.iter().map(|&v| op(v)).collect())
    }

    /// Pointwise product.
    pub fn product(&self, other: &Observable) -> Result<Observable> {
        check_dim(self.len(), other.len())?;
        Ok(Self::from_values(
            self.values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a * b)
                .collect(),
        ))
    }
}

/// One row of an array scheme: initial law, `n − 1` one-step kernels and
/// `n` observables on a common finite state space.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainSpec {
    space: StateSpace,
    initial: Distribution,
    kernels: Vec<Kernel>,
    observables: Vec<Observable>,
}

impl ChainSpec {
    pub fn new(
        space: StateSpace,
        initial: Distribution,
        kernels: Vec<Kernel>,
        observables: Vec<Observable>,
    ) -> Result<Self> {
        let s = space.size();
        if observables.is_empty() {
            return Err(Error::input("observables: horizon n must be at least 1"));
        }
        if kernels.len() + 1 != observables.len() {
            return Err(Error::input(format!(
                "kernels: expected n - 1 = {} kernels, found {}",
                observables.len() - 1,
                kernels.len()
            )));
        }
        if initial.len() != s {
            return Err(Error::input(format!(
                "initial: has {} entries, expected {s}",
                initial.len()
            )));
        }
        if let Some((i, k)) = kernels.iter().enumerate().find(|(_, k)| k.size() != s) {
            return Err(Error::input(format!(
                "kernels[{i}]: size {}, expected {s}",
                k.size()
            )));
        }
        if let Some((i, f)) = observables.iter().enumerate().find(|(_, f)| f.len() != s) {
            return Err(Error::input(format!(
                "observables[{i}]: has {} entries, expected {s}",
                f.len()
            )));
        }
        Ok(Self {
            space,
            initial,
            kernels,
            observables,
        })
    }

    /// Homogeneous chain: the same kernel and observable at every step.
    pub fn homogeneous(
        n: usize,
        initial: Distribution,
        kernel: Kernel,
        observable: Observable,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::input("horizon n must be at least 1"));
        }
        let space = StateSpace::new(initial.len())?;
        Self::new(space, initial, vec![kernel; n - 1], vec![observable; n])
    }

    pub fn n(&self) -> usize {
        self.observables.len()
    }

    pub fn size(&self) -> usize {
        self.space.size()
    }

    pub fn space(&self) -> &StateSpace {
        &self.space
    }

    pub fn initial(&self) -> &Distribution {
        &self.initial
    }

    /// All one-step kernels; `kernels()[i - 1]` is the kernel `i → i+1`.
    pub fn kernels(&self) -> &[Kernel] {
        &self.kernels
    }

    /// All observables; `observables()[i - 1]` is `f_i`.
    pub fn observables(&self) -> &[Observable] {
        &self.observables
    }

    /// One-step kernel `π_{i,i+1}` (1-based `i`).
    pub fn kernel(&self, i: usize) -> &Kernel {
        &self.kernels[i - 1]
    }

    /// Observable `f_i` (1-based `i`).
    pub fn observable(&self, i: usize) -> &Observable {
        &self.observables[i - 1]
    }

    /// Largest sup norm over all observables (the constant `C_n`).
    pub fn sup_bound(&self) -> f64 {
        self.observables
            .iter()
            .fold(0.0_f64, |m, f| m.max(f.sup_norm()))
    }

    pub fn with_observables(&self, observables: Vec<Observable>) -> Result<ChainSpec> {
        Self::new(
            self.space.clone(),
            self.initial.clone(),
            self.kernels.clone(),
            observables,
        )
    }

    /// `π_{i,j} = π_{i,i+1} ⋯ π_{j−1,j}` for `1 ≤ i < j ≤ n`.
    pub fn compose_range(&self, i: usize, j: usize) -> Result<Kernel> {
        let n = self.n();
        if i < 1 || j > n || i >= j {
            return Err(Error::input(format!(
                "compose_range: need 1 <= i < j <= {n}, got i = {i}, j = {j}"
            )));
        }
        let mut acc = self.kernel(i).clone();
        for k in i + 1..j {
            acc = acc.compose(self.kernel(k))?;
        }
        Ok(acc)
    }

    /// Laws of `X_1, …, X_n`.
    pub fn marginals(&self) -> Vec<Distribution> {
        let mut out = Vec::with_capacity(self.n());
        out.push(self.initial.clone());
        for k in &self.kernels {
            let next = out
                .last()
                .expect("non-empty")
                .push_forward(k)
                .expect("dimensions validated at construction");
            out.push(next);
        }
        out
    }

    /// Replace each `f_i` by `f_i − E f_i(X_i)`.
    pub fn centered(&self) -> ChainSpec {
        let marginals = self.marginals();
        let observables = self
            .observables
            .iter()
            .zip(&marginals)
            .map(|(f, mu)| f.shifted(-dot(mu.probs(), f.values())))
            .collect();
        ChainSpec {
            observables,
            ..self.clone()
        }
    }

    /// Largest `|E f_i(X_i)|` over the horizon, with its 1-based index.
    pub fn max_abs_mean(&self) -> (usize, f64) {
        self.marginals()
            .iter()
            .zip(&self.observables)
            .enumerate()
            .map(|(i, (mu, f))| (i + 1, dot(mu.probs(), f.values()).abs()))
            .fold(
                (1, 0.0),
                |best, cur| if cur.1 > best.1 { cur } else { best },
            )
    }

    /// Errors with [`Error::NotCentered`] when some mean exceeds `tol`.
    pub fn ensure_centered(&self, tol: f64) -> Result<()> {
        let (index, mean) = self.max_abs_mean();
        if mean > tol {
            return Err(Error::NotCentered { index, mean });
        }
        Ok(())
    }
}

pub fn compose(a: &Kernel, b: &Kernel) -> Result<Kernel> {
    a.compose(b)
}

pub fn compose_range(chain: &ChainSpec, i: usize, j: usize) -> Result<Kernel> {
    chain.compose_range(i, j)
}

pub fn apply_to_function(k: &Kernel, f: &Observable) -> Result<Observable> {
    k.apply(f)
}

pub fn apply_to_measure(mu: &Distribution, k: &Kernel) -> Result<Distribution> {
    mu.push_forward(k)
}

pub fn marginals(chain: &ChainSpec) -> Vec<Distribution> {
    chain.marginals()
}

pub fn center_observables(chain: &ChainSpec) -> ChainSpec {
    chain.centered()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn k2(a: [[f64; 2]; 2]) -> Kernel {
        Kernel::new(a.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn compose_hand_example() {
        let a = k2([[0.9, 0.1], [0.2, 0.8]]);
        let b = k2([[0.5, 0.5], [0.4, 0.6]]);
        let c = a.compose(&b).unwrap();
        assert!(close(
            &c.to_rows().concat(),
            &[0.49, 0.51, 0.42, 0.58],
            1e-15
        ));
    }

    #[test]
    fn compose_identity_and_constant() {
        let k = k2([[0.9, 0.1], [0.2, 0.8]]);
        assert_eq!(Kernel::identity(2).compose(&k).unwrap(), k);
        let p = Distribution::new(vec![0.3, 0.7]).unwrap();
        let l = k2([[0.5, 0.5], [0.4, 0.6]]);
        let out = Kernel::constant(&p).compose(&l).unwrap();
        let pl = p.push_forward(&l).unwrap();
        for row in out.rows() {
            assert!(close(row, pl.probs(), 1e-15));
        }
    }

    #[test]
    fn compose_rejects_dimension_mismatch() {
        let err = Kernel::identity(2)
            .compose(&Kernel::identity(3))
            .unwrap_err();
        assert!(matches!(
            err,
            Error::Dimension {
                expected: 2,
                found: 3
            }
        ));
    }

    #[test]
    fn kernel_validation_names_row() {
        let err = Kernel::new(vec![vec![0.5, 0.5], vec![0.5, 0.4]]).unwrap_err();
        assert!(err.to_string().contains("row 1"), "{err}");
        let err = Kernel::new(vec![vec![1.5, -0.5], vec![0.5, 0.5]]).unwrap_err();
        assert!(err.to_string().contains("row 0 entry 1"), "{err}");
    }

    #[test]
    fn apply_to_function_examples() {
        let k = k2([[0.9, 0.1], [0.2, 0.8]]);
        let f = Observable::new(vec![1.0, -1.0]).unwrap();
        let out = k.apply(&f).unwrap();
        assert!(close(out.values(), &[0.8, -0.6], 1e-15));
        assert!((out.sup_norm() - 0.8).abs() < 1e-15);
        assert_eq!(Kernel::identity(2).apply(&f).unwrap(), f);
        let c = k.apply(&Observable::constant(2, 3.5)).unwrap();
        assert!(close(c.values(), &[3.5, 3.5], 1e-15));
    }

    #[test]
    fn apply_to_measure_examples() {
        let k = k2([[0.9, 0.1], [0.2, 0.8]]);
        let mu = Distribution::new(vec![0.5, 0.5]).unwrap();
        assert!(close(
            mu.push_forward(&k).unwrap().probs(),
            &[0.55, 0.45],
            1e-15
        ));
        let pm = Distribution::point_mass(2, 1);
        assert_eq!(pm.push_forward(&k).unwrap().probs(), k.row(1));
        assert_eq!(mu.push_forward(&Kernel::identity(2)).unwrap(), mu);
    }

    #[test]
    fn compose_range_edges() {
        let k = k2([[0.9, 0.1], [0.2, 0.8]]);
        let l = k2([[0.5, 0.5], [0.4, 0.6]]);
        let chain = ChainSpec::new(
            StateSpace::new(2).unwrap(),
            Distribution::uniform(2),
            vec![k.clone(), l.clone()],
            vec![Observable::constant(2, 0.0); 3],
        )
        .unwrap();
        assert_eq!(chain.compose_range(1, 2).unwrap(), k);
        assert_eq!(chain.compose_range(2, 3).unwrap(), l);
        assert!(chain.compose_range(2, 2).is_err());
        assert!(chain.compose_range(0, 2).is_err());
        assert!(chain.compose_range(1, 4).is_err());
    }

    #[test]
    fn marginals_examples() {
        let mu = Distribution::new(vec![0.2, 0.8]).unwrap();
        let one = ChainSpec::homogeneous(
            1,
            mu.clone(),
            Kernel::identity(2),
            Observable::constant(2, 1.0),
        )
        .unwrap();
        assert_eq!(one.marginals(), vec![mu.clone()]);

        let p = Distribution::new(vec![0.3, 0.7]).unwrap();
        let indep =
            ChainSpec::homogeneous(4, mu, Kernel::constant(&p), Observable::constant(2, 1.0))
                .unwrap();
        for m in &indep.marginals()[1..] {
            assert!(close(m.probs(), p.probs(), 1e-15));
        }
    }

    #[test]
    fn center_observables_examples() {
        let mu = Distribution::new(vec![0.25, 0.75]).unwrap();
        let chain = ChainSpec::homogeneous(
            1,
            mu.clone(),
            Kernel::identity(2),
            Observable::new(vec![1.0, 0.0]).unwrap(),
        )
        .unwrap();
        let c = chain.centered();
        assert!(close(c.observable(1).values(), &[0.75, -0.25], 1e-15));

        let constant =
            ChainSpec::homogeneous(3, mu, Kernel::identity(2), Observable::constant(2, 4.0))
                .unwrap()
                .centered();
        for f in constant.observables() {
            assert!(close(f.values(), &[0.0, 0.0], 1e-15));
        }

        let again = c.centered();
        assert!(close(
            again.observable(1).values(),
            c.observable(1).values(),
            1e-15
        ));
    }

    #[test]
    fn chain_validation_messages() {
        let err = ChainSpec::new(
            StateSpace::new(2).unwrap(),
            Distribution::uniform(2),
            vec![],
            vec![Observable::constant(2, 0.0); 2],
        )
        .unwrap_err();
        assert!(err.to_string().contains("kernels"), "{err}");
        let err = ChainSpec::new(
            StateSpace::new(2).unwrap(),
            Distribution::uniform(2),
            vec![Kernel::identity(3)],
            vec![Observable::constant(2, 0.0); 2],
        )
        .unwrap_err();
        assert!(err.to_string().contains("kernels[0]"), "{err}");
    }

    #[test]
    fn state_space_and_distribution_invariants() {
        assert!(StateSpace::new(0).is_err());
        assert_eq!(
            StateSpace::with_labels(vec!["a".into(), "b".into()])
                .unwrap()
                .size(),
            2
        );
        assert!(Distribution::new(vec![0.5, 0.6]).is_err());
        assert!(Distribution::new(vec![-0.1, 1.1]).is_err());
        assert!(Observable::new(vec![f64::NAN]).is_err());
    }
}
