use rayon::prelude::*;

use crate::clustering::Clustering;
use crate::error::{Error, Result};
use crate::seed;
use crate::srra::{IncrementalRegret, Regret, RegretEstimator};

/// Steepest-descent single-element relabeling from several starts: `start`,
/// the estimator's pivot, and `restarts` uniformly random labelings. Returns
/// the lowest-scoring local optimum; ties go to the lexicographically
/// smallest canonical label vector.
pub fn local_search_min(
    estimator: &RegretEstimator,
    start: &Clustering,
    restarts: usize,
    seed: u64,
) -> Result<Clustering> {
    Ok(search(estimator, start, restarts, seed)?.0)
}

/// [`local_search_min`] together with the estimator value of the result.
pub fn local_search_min_value(
    estimator: &RegretEstimator,
    start: &Clustering,
    restarts: usize,
    seed: u64,
) -> Result<(Clustering, Regret)> {
    let (c, num) = search(estimator, start, restarts, seed)?;
    Ok((c, Regret::new(num, estimator.denominator())))
}

pub(crate) fn search(
    estimator: &RegretEstimator,
    start: &Clustering,
    restarts: usize,
    seed: u64,
) -> Result<(Clustering, i64)> {
    let pivot = estimator.pivot();
    start.check_same_size(pivot)?;
    let k = start.k();
    let pivot_start = Clustering::new(pivot.labels().to_vec(), k).map_err(|_| {
        Error::invalid(format!("pivot uses more than the k = {k} labels of the start"))
    })?;

    let mut starts = vec![start.clone(), pivot_start];
    for r in 0..restarts {
        let mut rng = seed::rng(seed::sub_seed(seed, r as u64));
        starts.push(Clustering::random(start.n(), k, &mut rng)?);
    }

    let results = starts
        .into_par_iter()
        .map(|s| {
            let mut state = IncrementalRegret::new(estimator, &s)?;
            state.descend();
            let c = state.clustering();
            Ok((state.numerator(), c.canonical_labels(), c))
        })
        .collect::<Result<Vec<_>>>()?;

    let (num, _, best) = results
        .into_iter()
        .min_by(|a, b| a.0.cmp(&b.0).then_with(|| a.1.cmp(&b.1)))
        .expect("at least two starts");
    Ok((best, num))
}
