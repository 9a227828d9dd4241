use std::collections::BTreeMap;

use rand::Rng;

use crate::clustering::{Clustering, PairKey};
use crate::error::{Error, Result};
use crate::oracle::{LabelSource, PairOracle};
use crate::seed;
use crate::srra::{PairTerm, RegretEstimator};

/// `m` pairs drawn uniformly with repetition from all `n(n-1)/2` pairs, or
/// every pair once when `m` covers them all.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UniformPlan {
    pivot: Clustering,
    draws: Vec<PairKey>,
    census: bool,
}

impl UniformPlan {
    pub fn new(pivot: &Clustering, m: usize, seed: u64) -> Result<Self> {
        if m == 0 {
            return Err(Error::invalid("pair budget m must be at least 1"));
        }
        let total = PairKey::count(pivot.n());
        if total == 0 {
            return Err(Error::invalid("need at least two elements"));
        }
        if m >= total {
            return Ok(UniformPlan {
                pivot: pivot.clone(),
                draws: PairKey::all(pivot.n()).collect(),
                census: true,
            });
        }
        let mut rng = seed::rng(seed);
        let draws = (0..m)
            .map(|_| PairKey::from_index(rng.random_range(0..total)))
            .collect();
        Ok(UniformPlan {
            pivot: pivot.clone(),
            draws,
            census: false,
        })
    }

    pub fn pivot(&self) -> &Clustering {
        &self.pivot
    }

    pub fn draws(&self) -> &[PairKey] {
        &self.draws
    }

    pub fn required_pairs(&self) -> Vec<PairKey> {
        let mut seen = std::collections::HashSet::new();
        self.draws.iter().copied().filter(|p| seen.insert(*p)).collect()
    }

    /// Each draw weighs `n(n-1)/2 / m`; in census mode every pair weighs 1.
    pub fn reveal<S: LabelSource>(&self, oracle: &PairOracle<S>) -> Result<RegretEstimator> {
        if oracle.n() != self.pivot.n() {
            return Err(Error::SizeMismatch {
                left: self.pivot.n(),
                right: oracle.n(),
            });
        }
        let total = PairKey::count(self.pivot.n()) as i64;
        let (per_draw, denominator) = if self.census {
            (1, 1)
        } else {
            (total, self.draws.len() as i64)
        };
        let mut coef: BTreeMap<PairKey, i64> = BTreeMap::new();
        for &pair in &self.draws {
            *coef.entry(pair).or_insert(0) += per_draw;
        }
        let mut terms = Vec::with_capacity(coef.len());
        for pair in self.required_pairs() {
            let edge = oracle.query_pair(pair)?.is_edge();
            terms.push(PairTerm {
                pair,
                coefficient: coef[&pair],
                edge,
            });
        }
        terms.sort_by_key(|t| t.pair);
        RegretEstimator::from_terms(self.pivot.clone(), terms, denominator)
    }
}

/// The uniform-pair baseline: unbiased for the regret, but blind to
/// cluster sizes.
pub fn uniform_regret_estimator<S: LabelSource>(
    oracle: &PairOracle<S>,
    pivot: &Clustering,
    m: usize,
    seed: u64,
) -> Result<RegretEstimator> {
    UniformPlan::new(pivot, m, seed)?.reveal(oracle)
}
