//! Randomized inequality suites behind `mdclt verify`.
//!
//! Instance `k` of a suite run with seed `s` is generated from ChaCha8
//! stream `k` of key `s`, so suites are reproducible and order-independent.
//! Where one instance yields many index combinations, only its tightest
//! record (smallest margin) is kept.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::ergodic::{alpha_beta, alpha_n, delta, osc, BetaSequence};
use crate::error::Result;
use crate::inequality::{
    lemma1_bounds, lemma41_check, lemma42_check, BoundRecord, DecayExponent, JointLaw,
};
use crate::markov::{Distribution, Kernel, Observable};
use crate::random::{
    random_beta, random_centered_chain, random_chain, random_joint_law, random_observable,
};
use crate::scheme::variance_lower_bound_check;

pub const DEFAULT_INSTANCES: usize = 1000;

fn instance_rng(seed: u64, instance: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(instance as u64);
    rng
}

fn tightest(records: impl IntoIterator<Item = BoundRecord>) -> Option<BoundRecord> {
    records
        .into_iter()
        .min_by(|a, b| a.margin.total_cmp(&b.margin))
}

fn run<F>(instances: usize, seed: u64, per_instance: F) -> Result<Vec<BoundRecord>>
where
    F: Fn(&mut ChaCha8Rng) -> Result<Vec<BoundRecord>> + Sync,
{
    let chunks = (0..instances)
        .into_par_iter()
        .map(|k| {
            let records = per_instance(&mut instance_rng(seed, k))?;
            Ok(records
                .into_iter()
                .map(|mut r| {
                    r.indices.insert(0, k);
                    r
                })
                .collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(chunks.concat())
}

/// A β with at least one mark among the first `n − 1` steps.
fn random_supported_beta<R: Rng>(n: usize, rng: &mut R) -> BetaSequence {
    let p = rng.random_range(0.2..0.9);
    loop {
        let beta = random_beta(n, p, rng);
        if beta.bits()[..n - 1].iter().any(|&b| b) {
            return beta;
        }
    }
}

/// Coefficient bounds on random chains (`n ≤ 20`, 2–5 states), tightest
/// pair per chain:
///
/// * `submult`: `δ(ab) ≤ δ(a) δ(b)` for consecutive kernels,
/// * `chain`: `δ(π_{i,j}) ≤ ∏ δ(π_{k,k+1})`,
/// * `elementary`: `δ(π_{i,j}) ≤ (1 − α_n)^{j−i}`,
/// * `weakened`: `δ(π_{i,j}) ≤ (1 − α^β)^{marked kernels in π_{i,j}}`,
/// * `osc`: `Osc(π_{i,j} f) ≤ δ(π_{i,j}) Osc(f)`.
pub fn ergodic_suite(instances: usize, seed: u64) -> Result<Vec<BoundRecord>> {
    run(instances, seed, |rng| {
        let size = rng.random_range(2..=5);
        let n = rng.random_range(2..=20);
        let chain = random_chain(size, n, rng);
        let beta = random_supported_beta(n, rng);
        let f = random_observable(size, rng);
        let an = alpha_n(&chain)?;
        let ab = alpha_beta(&chain, &beta)?;
        let deltas: Vec<f64> = chain.kernels().iter().map(delta).collect();

        let submult = (1..n - 1).map(|i| {
            let ab_kernel = chain
                .kernel(i)
                .compose(chain.kernel(i + 1))
                .expect("same size");
            BoundRecord::upper(
                "submult",
                vec![i],
                delta(&ab_kernel),
                deltas[i - 1] * deltas[i],
            )
        });
        let mut out: Vec<BoundRecord> = tightest(submult).into_iter().collect();

        let (mut chain_b, mut elem, mut weak, mut oscs) = (vec![], vec![], vec![], vec![]);
        for i in 1..n {
            let mut product = Kernel::identity(size);
            let mut delta_product = 1.0;
            for j in i + 1..=n {
                product = product.compose(chain.kernel(j - 1)).expect("same size");
                delta_product *= deltas[j - 2];
                let d = delta(&product);
                let idx = vec![i, j];
                chain_b.push(BoundRecord::upper("chain", idx.clone(), d, delta_product));
                elem.push(BoundRecord::upper(
                    "elementary",
                    idx.clone(),
                    d,
                    (1.0 - an).powi((j - i) as i32),
                ));
                weak.push(BoundRecord::upper(
                    "weakened",
                    idx.clone(),
                    d,
                    (1.0 - ab).powi(beta.kernels_marked(i, j) as i32),
                ));
                let pulled = product.apply(&f)?;
                oscs.push(BoundRecord::upper("osc", idx, osc(&pulled), d * osc(&f)));
            }
        }
        out.extend([chain_b, elem, weak, oscs].into_iter().filter_map(tightest));
        Ok(out)
    })
}

/// Variance lower bound `D(S_n) ≥ (α_n/4) Σ D(f_i(X_i))` on random centered
/// chains (`n ≤ 20`, 2–5 states), one record per chain.
pub fn variance_bound_suite(instances: usize, seed: u64) -> Result<Vec<BoundRecord>> {
    run(instances, seed, |rng| {
        let size = rng.random_range(2..=5);
        let n = rng.random_range(2..=20);
        let chain = random_centered_chain(size, n, rng);
        let check = variance_lower_bound_check(&chain)?;
        Ok(vec![BoundRecord::lower(
            "variance",
            vec![],
            check.lhs,
            check.rhs,
        )])
    })
}

/// The three decay bounds on random centered chains (`n ≤ 12`, 2–4 states,
/// random β), tightest record per bound and chain.
pub fn decay_suite(instances: usize, seed: u64) -> Result<Vec<BoundRecord>> {
    run(instances, seed, |rng| {
        let size = rng.random_range(2..=4);
        let n = rng.random_range(2..=12);
        let chain = random_centered_chain(size, n, rng);
        let beta = random_supported_beta(n, rng);
        let records = lemma1_bounds(&chain, &beta, DecayExponent::KernelsInProduct, rng.random())?;
        Ok(["1a", "1b", "1c"]
            .iter()
            .filter_map(|id| tightest(records.iter().filter(|r| r.lemma == *id).cloned()))
            .collect())
    })
}

fn centered_under(f: Observable, law: &Distribution) -> Observable {
    let mean = law.expect(&f).expect("dimensions agree");
    f.shifted(-mean)
}

/// Covariance bound on random joint laws (2–5 states) with centered `f`, `g`.
pub fn covariance_suite(instances: usize, seed: u64) -> Result<Vec<BoundRecord>> {
    run(instances, seed, |rng| {
        let size = rng.random_range(2..=5);
        let law = random_joint_law(size, rng);
        let f = centered_under(random_observable(size, rng), law.marginal_first());
        let g = centered_under(random_observable(size, rng), law.marginal_second());
        Ok(vec![lemma41_check(&law, &f, &g)?])
    })
}

/// Two-sided difference bound on random joint laws (2–5 states).
pub fn difference_suite(instances: usize, seed: u64) -> Result<Vec<BoundRecord>> {
    run(instances, seed, |rng| {
        let size = rng.random_range(2..=5);
        let law: JointLaw = random_joint_law(size, rng);
        let f = random_observable(size, rng);
        let g = random_observable(size, rng);
        lemma42_check(&law, &f, &g)
    })
}

/// All suites, in a fixed order. Each suite gets its own derived seed.
pub fn full_suite(instances: usize, seed: u64) -> Result<Vec<BoundRecord>> {
    type Suite = fn(usize, u64) -> Result<Vec<BoundRecord>>;
    let suites: [Suite; 5] = [
        ergodic_suite,
        variance_bound_suite,
        decay_suite,
        covariance_suite,
        difference_suite,
    ];
    let mut out = Vec::new();
    for (k, suite) in suites.iter().enumerate() {
        out.extend(suite(instances, seed.wrapping_add(k as u64))?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suites_pass_and_are_deterministic() {
        let records = full_suite(40, 7).unwrap();
        assert!(
            records.iter().all(|r| r.ok),
            "{:?}",
            records.iter().find(|r| !r.ok)
        );
        assert_eq!(records, full_suite(40, 7).unwrap());
        assert_ne!(records, full_suite(40, 8).unwrap());
        for id in [
            "submult",
            "chain",
            "weakened",
            "variance",
            "1c",
            "4.1",
            "4.2-second",
        ] {
            assert!(records.iter().any(|r| r.lemma == id), "{id}");
        }
    }
}
