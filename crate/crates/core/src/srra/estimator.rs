use serde::{Deserialize, Serialize};

use super::Regret;
use crate::clustering::{cost, pair_cost_unchecked, Clustering, FullGraph, PairKey};
use crate::error::{Error, Result};

/// One revealed pair with its aggregated integer weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairTerm {
    pub pair: PairKey,
    pub coefficient: i64,
    pub edge: bool,
}

impl PairTerm {
    /// Change in the weighted objective when the pair goes from split to
    /// together: `coefficient * (cost(together) - cost(split))`.
    #[inline]
    fn join_gain(&self) -> i64 {
        if self.edge {
            -self.coefficient
        } else {
            self.coefficient
        }
    }
}

/// Regret relative to a pivot as a weighted sum over revealed pairs:
/// `sum coefficient * f_uv(candidate) / denominator`.
///
/// Both the size-biased and the uniform estimators, as well as the exact
/// regret on a fully known graph, reduce to this form.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegretEstimator {
    pivot: Clustering,
    terms: Vec<PairTerm>,
    denominator: i64,
}

impl RegretEstimator {
    pub fn from_terms(pivot: Clustering, terms: Vec<PairTerm>, denominator: i64) -> Result<Self> {
        if denominator <= 0 {
            return Err(Error::invalid("denominator must be positive"));
        }
        if let Some(t) = terms.iter().find(|t| t.pair.v() >= pivot.n()) {
            return Err(Error::OutOfRange {
                id: t.pair.v(),
                n: pivot.n(),
            });
        }
        Ok(RegretEstimator {
            pivot,
            terms,
            denominator,
        })
    }

    pub fn pivot(&self) -> &Clustering {
        &self.pivot
    }

    pub fn n(&self) -> usize {
        self.pivot.n()
    }

    pub fn terms(&self) -> &[PairTerm] {
        &self.terms
    }

    pub fn denominator(&self) -> i64 {
        self.denominator
    }

    /// Integer numerator of the estimate for `candidate`.
    pub fn numerator(&self, candidate: &Clustering) -> Result<i64> {
        self.pivot.check_same_size(candidate)?;
        Ok(self
            .terms
            .iter()
            .map(|t| {
                let (u, v) = (t.pair.u(), t.pair.v());
                let now = candidate.together(u, v);
                if now == self.pivot.together(u, v) {
                    0
                } else {
                    t.coefficient
                        * (pair_cost_unchecked(t.edge, now) as i64
                            - pair_cost_unchecked(t.edge, !now) as i64)
                }
            })
            .sum())
    }

    pub fn evaluate(&self, candidate: &Clustering) -> Result<Regret> {
        Ok(Regret::new(self.numerator(candidate)?, self.denominator))
    }
}

/// `cost(candidate) - cost(pivot)` against the full graph.
pub fn exact_regret(pivot: &Clustering, candidate: &Clustering, g: &FullGraph) -> Result<i64> {
    pivot.check_same_size(candidate)?;
    Ok(cost(candidate, g)? as i64 - cost(pivot, g)? as i64)
}

/// Estimator state for single-element relabeling with O(degree + k) move
/// evaluation. Values are integer numerators over the estimator denominator.
#[derive(Debug, Clone)]
pub struct IncrementalRegret {
    labels: Vec<usize>,
    k: usize,
    neighbors: Vec<Vec<(usize, i64)>>,
    numerator: i64,
    denominator: i64,
    scratch: Vec<i64>,
}

impl IncrementalRegret {
    pub fn new(estimator: &RegretEstimator, start: &Clustering) -> Result<Self> {
        let numerator = estimator.numerator(start)?;
        let mut neighbors = vec![Vec::new(); start.n()];
        for t in estimator.terms() {
            let gain = t.join_gain();
            if gain != 0 {
                neighbors[t.pair.u()].push((t.pair.v(), gain));
                neighbors[t.pair.v()].push((t.pair.u(), gain));
            }
        }
        Ok(IncrementalRegret {
            labels: start.labels().to_vec(),
            k: start.k(),
            neighbors,
            numerator,
            denominator: estimator.denominator(),
            scratch: vec![0; start.k()],
        })
    }

    pub fn numerator(&self) -> i64 {
        self.numerator
    }

    pub fn value(&self) -> Regret {
        Regret::new(self.numerator, self.denominator)
    }

    pub fn clustering(&self) -> Clustering {
        Clustering::new(self.labels.clone(), self.k).expect("labels stay within 0..k")
    }

    pub fn label(&self, u: usize) -> usize {
        self.labels[u]
    }

    /// Numerator change if `u` moves to `label`.
    pub fn delta(&self, u: usize, label: usize) -> i64 {
        let from = self.labels[u];
        if from == label {
            return 0;
        }
        self.neighbors[u]
            .iter()
            .map(|&(w, gain)| {
                let lw = self.labels[w];
                if lw == label {
                    gain
                } else if lw == from {
                    -gain
                } else {
                    0
                }
            })
            .sum()
    }

    pub fn apply(&mut self, u: usize, label: usize) {
        assert!(label < self.k, "label {label} outside 0..{}", self.k);
        self.numerator += self.delta(u, label);
        self.labels[u] = label;
    }

    /// The single-element relabel with the most negative delta, if any is
    /// negative. Ties go to the smallest `(element, label)`.
    pub fn best_move(&mut self) -> Option<(usize, usize, i64)> {
        let mut best: Option<(usize, usize, i64)> = None;
        for u in 0..self.labels.len() {
            self.scratch.iter_mut().for_each(|s| *s = 0);
            for &(w, gain) in &self.neighbors[u] {
                self.scratch[self.labels[w]] += gain;
            }
            let from = self.labels[u];
            let leave = self.scratch[from];
            for label in 0..self.k {
                if label == from {
                    continue;
                }
                let d = self.scratch[label] - leave;
                if d < 0 && best.is_none_or(|(_, _, bd)| d < bd) {
                    best = Some((u, label, d));
                }
            }
        }
        best
    }

    /// Applies best moves until none improves. Returns the number of moves.
    pub fn descend(&mut self) -> usize {
        let mut moves = 0;
        while let Some((u, label, _)) = self.best_move() {
            self.apply(u, label);
            moves += 1;
        }
        moves
    }
}
