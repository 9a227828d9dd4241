use rand::seq::index;
use rand::Rng;

use super::{draw_samples, exact_regret, RegretEstimator, SrraParams};
use crate::clustering::{clustering_distance, Clustering, FullGraph};
use crate::error::{Error, Result};
use crate::oracle::{LabelSource, PairOracle};
use crate::seed;

/// Largest `|estimate - exact| / distance` over the given candidates, skipping
/// any candidate at distance zero from the pivot.
pub fn smoothness_over<'a, I>(estimator: &RegretEstimator, g: &FullGraph, candidates: I) -> Result<f64>
where
    I: IntoIterator<Item = &'a Clustering>,
{
    let pivot = estimator.pivot();
    let den = estimator.denominator() as f64;
    let mut worst = 0.0f64;
    for c in candidates {
        let d = clustering_distance(pivot, c)?;
        if d == 0 {
            continue;
        }
        let exact = exact_regret(pivot, c, g)? as f64;
        let est = estimator.numerator(c)? as f64 / den;
        worst = worst.max((est - exact).abs() / d as f64);
    }
    Ok(worst)
}

/// Moves a uniformly sized random subset of elements to random labels,
/// retrying until the result differs from `pivot` as a partition.
pub fn perturbed_candidate<R: Rng + ?Sized>(pivot: &Clustering, rng: &mut R) -> Result<Clustering> {
    let n = pivot.n();
    if n < 2 || pivot.k() < 2 {
        return Err(Error::invalid(
            "no clustering differs from the pivot when n < 2 or k < 2",
        ));
    }
    loop {
        let mut c = pivot.clone();
        let moved = rng.random_range(1..=n);
        for u in index::sample(rng, n, moved) {
            c.set_label(u, rng.random_range(0..pivot.k()))?;
        }
        if !c.same_partition(pivot) {
            return Ok(c);
        }
    }
}

/// Draws one round of samples around `pivot`, then reports the worst relative
/// estimation error over `trials` random candidates that differ from it.
pub fn measure_smoothness<S: LabelSource>(
    pivot: &Clustering,
    oracle: &PairOracle<S>,
    g: &FullGraph,
    params: &SrraParams,
    trials: usize,
    seed: u64,
) -> Result<f64> {
    if trials == 0 {
        return Err(Error::invalid("trials must be at least 1"));
    }
    let samples = draw_samples(pivot, oracle, params, seed::sub_seed(seed, 0))?;
    let estimator = samples.estimator();
    let mut rng = seed::rng(seed::sub_seed(seed, 1));
    let candidates = (0..trials)
        .map(|_| perturbed_candidate(pivot, &mut rng))
        .collect::<Result<Vec<_>>>()?;
    smoothness_over(&estimator, g, &candidates)
}
