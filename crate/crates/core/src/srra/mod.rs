//! Size-biased pair sampling around a pivotal clustering, and the regret
//! estimator built from those samples.
//!
//! Pivot clusters are ranked by size, largest first. Every element `u` of the
//! rank-`i` cluster draws `q` members, uniformly with repetition, from each
//! cluster of rank `j >= i`. Pairs touching small clusters are therefore
//! sampled at a much higher rate than under uniform pair sampling. Each draw
//! from cluster `j` carries weight `|C_j| / q`, and draws within the element's
//! own cluster carry an extra one half because both endpoints sample them.

mod estimator;
mod rectangle;
mod smoothness;

use std::collections::{BTreeMap, HashSet};
use std::ops::Range;

use num_rational::Ratio;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::clustering::{pair_cost_unchecked, Clustering, FullGraph, PairKey};
use crate::error::{Error, Result};
use crate::oracle::{LabelSource, PairLabel, PairOracle};
use crate::seed;

pub use estimator::{exact_regret, IncrementalRegret, PairTerm, RegretEstimator};
pub use rectangle::{
    decomposed_distance, decomposed_estimate, decomposed_regret, rectangle_decompose,
    Rectangle, RectangleKind,
};
pub use smoothness::{measure_smoothness, perturbed_candidate, smoothness_over};

/// Exact estimator values: an integer numerator over a positive denominator.
pub type Regret = Ratio<i64>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SrraParams {
    /// Error tolerance, in `(0, 1)`.
    pub epsilon: f64,
    /// Multiplier in the sample-size formula.
    #[serde(default = "default_c2")]
    pub c2: f64,
    /// Use this sample size instead of the formula.
    #[serde(default)]
    pub q_override: Option<usize>,
    /// When `q >= |C_j|`, enumerate `C_j` once with weight 1 instead of
    /// drawing `q` times. Makes the estimator exact on such clusters.
    #[serde(default = "default_true")]
    pub exhaustive_when_covered: bool,
}

fn default_c2() -> f64 {
    1.0
}

fn default_true() -> bool {
    true
}

impl SrraParams {
    pub fn new(epsilon: f64) -> Result<Self> {
        let p = SrraParams {
            epsilon,
            c2: 1.0,
            q_override: None,
            exhaustive_when_covered: true,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_q(epsilon: f64, q: usize) -> Result<Self> {
        let p = SrraParams {
            q_override: Some(q),
            ..SrraParams::new(epsilon)?
        };
        p.validate()?;
        Ok(p)
    }

    /// Always draw with repetition, even when `q` covers a whole cluster.
    pub fn sampling_only(mut self) -> Self {
        self.exhaustive_when_covered = false;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::invalid(format!(
                "epsilon {} must lie in (0, 1)",
                self.epsilon
            )));
        }
        if !(self.c2 > 0.0 && self.c2.is_finite()) {
            return Err(Error::invalid(format!("c2 {} must be positive", self.c2)));
        }
        if self.q_override == Some(0) {
            return Err(Error::invalid("q override must be at least 1"));
        }
        Ok(())
    }
}

/// `ceil(c2 * k^2 * ln(n) / epsilon^4)`, or the override when one is set.
pub fn sample_size_q(n: usize, k: usize, params: &SrraParams) -> Result<usize> {
    params.validate()?;
    if n < 2 || k < 1 {
        return Err(Error::invalid(format!("need n >= 2 and k >= 1, got n={n}, k={k}")));
    }
    if let Some(q) = params.q_override {
        return Ok(q);
    }
    let k = k as f64;
    let q = params.c2 * k * k * (n as f64).ln() / params.epsilon.powi(4);
    Ok(q.ceil().max(1.0) as usize)
}

/// Pivot labels ranked by cluster size, largest first; ties go to the lower
/// label. Empty clusters rank last.
pub fn cluster_order(pivot: &Clustering) -> Vec<usize> {
    let sizes = pivot.cluster_sizes();
    let mut order: Vec<usize> = (0..pivot.k()).collect();
    order.sort_by(|&a, &b| sizes[b].cmp(&sizes[a]).then(a.cmp(&b)));
    order
}

/// The draws `S_uj` of one element `u` from the cluster of rank `j`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleBlock {
    pub element: usize,
    /// Rank of the sampled cluster in size order.
    pub rank: usize,
    /// Drawn element ids, with multiplicity.
    pub draws: Vec<usize>,
    /// `draws` enumerates the whole cluster once (weight 1).
    pub exhaustive: bool,
    /// True when the sampled cluster is the element's own.
    pub intra: bool,
    /// Per-draw weight `weight_num / weight_den` (before the intra one half).
    pub weight_num: u64,
    pub weight_den: u64,
}

/// The draws for one sampling round, before any label has been revealed.
/// The pairs a round needs depend only on the pivot and the seed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SamplePlan {
    pivot: Clustering,
    order: Vec<usize>,
    rank_of_label: Vec<usize>,
    members: Vec<Vec<usize>>,
    q: usize,
    blocks: Vec<SampleBlock>,
    element_blocks: Vec<Range<usize>>,
}

impl SamplePlan {
    pub fn new(pivot: &Clustering, params: &SrraParams, seed: u64) -> Result<Self> {
        let q = sample_size_q(pivot.n(), pivot.k(), params)?;
        let order = cluster_order(pivot);
        let mut rank_of_label = vec![0; pivot.k()];
        for (rank, &label) in order.iter().enumerate() {
            rank_of_label[label] = rank;
        }
        let by_label = pivot.members();
        let members: Vec<Vec<usize>> = order.iter().map(|&l| by_label[l].clone()).collect();

        let mut rng = seed::rng(seed);
        let mut blocks = Vec::new();
        let mut element_blocks = vec![0..0; pivot.n()];
        for (i, cluster) in members.iter().enumerate() {
            for &u in cluster {
                let start = blocks.len();
                for (j, target) in members.iter().enumerate().skip(i) {
                    if target.is_empty() {
                        continue;
                    }
                    let size = target.len();
                    let block = if params.exhaustive_when_covered && q >= size {
                        SampleBlock {
                            element: u,
                            rank: j,
                            draws: target.clone(),
                            exhaustive: true,
                            intra: i == j,
                            weight_num: 1,
                            weight_den: 1,
                        }
                    } else {
                        SampleBlock {
                            element: u,
                            rank: j,
                            draws: (0..q).map(|_| target[rng.random_range(0..size)]).collect(),
                            exhaustive: false,
                            intra: i == j,
                            weight_num: size as u64,
                            weight_den: q as u64,
                        }
                    };
                    blocks.push(block);
                }
                element_blocks[u] = start..blocks.len();
            }
        }

        Ok(SamplePlan {
            pivot: pivot.clone(),
            order,
            rank_of_label,
            members,
            q,
            blocks,
            element_blocks,
        })
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn pivot(&self) -> &Clustering {
        &self.pivot
    }

    /// Distinct non-self pairs touched by the draws, in order of first draw.
    pub fn required_pairs(&self) -> Vec<PairKey> {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for b in &self.blocks {
            for &v in &b.draws {
                if let Ok(pair) = PairKey::new(b.element, v) {
                    if seen.insert(pair) {
                        out.push(pair);
                    }
                }
            }
        }
        out
    }

    /// Upper bound on distinct queries: `sum_i |C_i| (k - i + 1) q`, capped
    /// at `n(n-1)/2`.
    pub fn query_bound(&self) -> usize {
        let k = self.members.len();
        let sampled: usize = self
            .members
            .iter()
            .enumerate()
            .map(|(i, c)| c.len() * (k - i) * self.q)
            .sum();
        sampled.min(PairKey::count(self.pivot.n()))
    }

    /// Queries every required pair once and attaches the labels.
    /// On oracle failure the partial result is dropped.
    pub fn reveal<S: LabelSource>(self, oracle: &PairOracle<S>) -> Result<SampleSet> {
        if oracle.n() != self.pivot.n() {
            return Err(Error::SizeMismatch {
                left: self.pivot.n(),
                right: oracle.n(),
            });
        }
        let mut labels = BTreeMap::new();
        for pair in self.required_pairs() {
            labels.insert(pair, oracle.query_pair(pair)?);
        }
        Ok(SampleSet { plan: self, labels })
    }
}

/// One round of revealed samples around a pivot.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    plan: SamplePlan,
    labels: BTreeMap<PairKey, PairLabel>,
}

/// Draws a fresh round of samples around `pivot` and reveals them through
/// `oracle`. Deterministic in `seed`.
pub fn draw_samples<S: LabelSource>(
    pivot: &Clustering,
    oracle: &PairOracle<S>,
    params: &SrraParams,
    seed: u64,
) -> Result<SampleSet> {
    SamplePlan::new(pivot, params, seed)?.reveal(oracle)
}

impl SampleSet {
    pub fn pivot(&self) -> &Clustering {
        &self.plan.pivot
    }

    pub fn q(&self) -> usize {
        self.plan.q
    }

    pub fn plan(&self) -> &SamplePlan {
        &self.plan
    }

    /// Pivot labels in rank order.
    pub fn cluster_order(&self) -> &[usize] {
        &self.plan.order
    }

    pub fn rank_of(&self, u: usize) -> usize {
        self.plan.rank_of_label[self.plan.pivot.label(u)]
    }

    /// Members of the pivot cluster of the given rank.
    pub fn cluster(&self, rank: usize) -> &[usize] {
        &self.plan.members[rank]
    }

    pub fn blocks(&self) -> &[SampleBlock] {
        &self.plan.blocks
    }

    /// All blocks drawn by `u`, in rank order.
    pub fn blocks_of(&self, u: usize) -> &[SampleBlock] {
        &self.plan.blocks[self.plan.element_blocks[u].clone()]
    }

    pub fn block(&self, u: usize, rank: usize) -> Option<&SampleBlock> {
        self.blocks_of(u).iter().find(|b| b.rank == rank)
    }

    pub fn label(&self, pair: PairKey) -> Option<PairLabel> {
        self.labels.get(&pair).copied()
    }

    pub fn revealed(&self) -> impl Iterator<Item = (PairKey, PairLabel)> + '_ {
        self.labels.iter().map(|(&p, &l)| (p, l))
    }

    pub fn distinct_pairs(&self) -> usize {
        self.labels.len()
    }

    /// True when every block enumerates its cluster, so the estimator is exact.
    pub fn is_exhaustive(&self) -> bool {
        self.plan.blocks.iter().all(|b| b.exhaustive)
    }

    /// Integer coefficient of one draw from `block`, over the common
    /// denominator `2q`.
    pub(crate) fn draw_coefficient(&self, block: &SampleBlock) -> i64 {
        let q = self.plan.q as i64;
        let scaled = if block.exhaustive {
            q
        } else {
            block.weight_num as i64
        };
        if block.intra {
            scaled
        } else {
            2 * scaled
        }
    }

    pub(crate) fn denominator(&self) -> i64 {
        2 * self.plan.q as i64
    }

    /// `f_uv(candidate)` for a sampled pair.
    pub(crate) fn pair_regret(&self, pair: PairKey, candidate: &Clustering) -> i64 {
        let edge = self.labels[&pair].is_edge();
        let pivot = &self.plan.pivot;
        pair_cost_unchecked(edge, candidate.together(pair.u(), pair.v())) as i64
            - pair_cost_unchecked(edge, pivot.together(pair.u(), pair.v())) as i64
    }

    /// Collapses the draws into one weighted term per distinct pair.
    pub fn estimator(&self) -> RegretEstimator {
        let mut coef: BTreeMap<PairKey, i64> = BTreeMap::new();
        for block in &self.plan.blocks {
            let c = self.draw_coefficient(block);
            for &v in &block.draws {
                if let Ok(pair) = PairKey::new(block.element, v) {
                    *coef.entry(pair).or_insert(0) += c;
                }
            }
        }
        let terms = coef
            .into_iter()
            .map(|(pair, coefficient)| PairTerm {
                pair,
                coefficient,
                edge: self.labels[&pair].is_edge(),
            })
            .collect();
        RegretEstimator::from_terms(self.plan.pivot.clone(), terms, self.denominator())
            .expect("sample terms are consistent with their pivot")
    }

    /// Serializable audit record of the round.
    pub fn audit(&self) -> SampleAudit {
        SampleAudit {
            pivot: self.plan.pivot.labels().to_vec(),
            q: self.plan.q,
            cluster_order: self.plan.order.clone(),
            blocks: self.plan.blocks.clone(),
            revealed: self
                .labels
                .iter()
                .map(|(p, &label)| RevealedPair {
                    u: p.u(),
                    v: p.v(),
                    label,
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RevealedPair {
    pub u: usize,
    pub v: usize,
    pub label: PairLabel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleAudit {
    pub pivot: Vec<usize>,
    pub q: usize,
    pub cluster_order: Vec<usize>,
    pub blocks: Vec<SampleBlock>,
    pub revealed: Vec<RevealedPair>,
}

/// The estimate of `cost(candidate) - cost(pivot)` from a round of samples,
/// evaluated draw by draw exactly as the weighted double sum is written.
pub fn estimate_regret(samples: &SampleSet, candidate: &Clustering) -> Result<Regret> {
    samples.pivot().check_same_size(candidate)?;
    let mut numerator = 0i64;
    for block in samples.blocks() {
        let c = samples.draw_coefficient(block);
        for &v in &block.draws {
            if v == block.element {
                continue;
            }
            let pair = PairKey::new(block.element, v)?;
            numerator += c * samples.pair_regret(pair, candidate);
        }
    }
    Ok(Regret::new(numerator, samples.denominator()))
}

/// Exact regret of `candidate` against `pivot` when the whole graph is known.
pub fn full_estimator(pivot: &Clustering, g: &FullGraph) -> Result<RegretEstimator> {
    if pivot.n() != g.n() {
        return Err(Error::SizeMismatch {
            left: pivot.n(),
            right: g.n(),
        });
    }
    let terms = PairKey::all(g.n())
        .map(|pair| PairTerm {
            pair,
            coefficient: 1,
            edge: g.has_edge(pair),
        })
        .collect();
    RegretEstimator::from_terms(pivot.clone(), terms, 1)
}
