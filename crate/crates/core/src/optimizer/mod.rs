//! Minimizing the estimated regret and iterating pivot updates.
//!
//! Each round draws fresh samples around the current pivot, minimizes the
//! resulting estimate over all k-clusterings, and adopts the minimizer as the
//! next pivot. The loop stops at the iteration cap, at a fixed point, when the
//! estimated improvement drops below a floor, or once a query budget is met.

mod brute;
mod search;
mod uniform;

use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::clustering::{cost, Clustering, PairKey};
use crate::error::{Error, Result};
use crate::oracle::{LabelSource, PairOracle};
use crate::seed;
use crate::srra::{Regret, RegretEstimator, SamplePlan, SrraParams};

pub use brute::{brute_force_feasible, brute_force_min, BRUTE_FORCE_LIMIT};
pub use search::{local_search_min, local_search_min_value};
pub use uniform::{uniform_regret_estimator, UniformPlan};

/// Which estimator drives the loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Sampler {
    /// Size-biased sampling around the pivot.
    Srra(SrraParams),
    /// Uniform pair sampling; round `t` draws `pairs_per_round[t - 1]` pairs
    /// (the last entry repeats).
    Uniform { pairs_per_round: Vec<usize> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoopConfig {
    pub k: usize,
    pub sampler: Sampler,
    pub t_max: usize,
    #[serde(default)]
    pub improvement_floor: f64,
    pub restarts: usize,
    pub seed: u64,
    /// Minimize by exhaustive enumeration when `k^n` is within the brute-force limit.
    #[serde(default)]
    pub exact_argmin: bool,
    /// Stop starting new rounds once this many distinct pairs are revealed.
    #[serde(default)]
    pub query_budget: Option<usize>,
}

impl LoopConfig {
    pub fn srra(k: usize, params: SrraParams, t_max: usize, seed: u64) -> Self {
        LoopConfig {
            k,
            sampler: Sampler::Srra(params),
            t_max,
            improvement_floor: 0.0,
            restarts: 4,
            seed,
            exact_argmin: false,
            query_budget: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::invalid("k must be at least 1"));
        }
        if self.t_max == 0 {
            return Err(Error::invalid("t_max must be at least 1"));
        }
        if self.restarts == 0 {
            return Err(Error::invalid("restarts must be at least 1"));
        }
        if !(self.improvement_floor >= 0.0) {
            return Err(Error::invalid("improvement_floor must be nonnegative"));
        }
        match &self.sampler {
            Sampler::Srra(p) => p.validate(),
            Sampler::Uniform { pairs_per_round } => {
                if pairs_per_round.is_empty() || pairs_per_round.contains(&0) {
                    Err(Error::invalid("uniform pair budgets must be nonempty and positive"))
                } else {
                    Ok(())
                }
            }
        }
    }
}

/// The draws of one round, before any label is revealed.
#[derive(Debug, Clone, PartialEq)]
pub enum RoundPlan {
    Srra(SamplePlan),
    Uniform(UniformPlan),
}

impl RoundPlan {
    pub fn required_pairs(&self) -> Vec<PairKey> {
        match self {
            RoundPlan::Srra(p) => p.required_pairs(),
            RoundPlan::Uniform(p) => p.required_pairs(),
        }
    }

    pub fn reveal<S: LabelSource>(self, oracle: &PairOracle<S>) -> Result<RegretEstimator> {
        match self {
            RoundPlan::Srra(p) => Ok(p.reveal(oracle)?.estimator()),
            RoundPlan::Uniform(p) => p.reveal(oracle),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopReason {
    MaxIterations,
    FixedPoint,
    BelowImprovementFloor,
    BudgetReached,
    OracleFailure(String),
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StopReason::MaxIterations => f.write_str("max-iterations"),
            StopReason::FixedPoint => f.write_str("fixed-point"),
            StopReason::BelowImprovementFloor => f.write_str("below-improvement-floor"),
            StopReason::BudgetReached => f.write_str("budget-reached"),
            StopReason::OracleFailure(e) => write!(f, "oracle-failure: {e}"),
        }
    }
}

/// State after round `t` (row 0 is the initial clustering).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub t: usize,
    pub pivot: Clustering,
    /// True cost, when the source can report the full graph.
    pub cost: Option<u64>,
    /// Estimated regret of the adopted pivot against the previous one.
    pub fhat_num: i64,
    pub fhat_den: i64,
    /// Ledger size after the round.
    pub distinct_queries: usize,
    /// Distinct pairs the round's samples touched, cached or not.
    pub round_pairs: usize,
}

impl TraceRow {
    pub fn fhat_min(&self) -> f64 {
        self.fhat_num as f64 / self.fhat_den as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentTrace {
    pub rows: Vec<TraceRow>,
    pub stop: Option<StopReason>,
}

impl ExperimentTrace {
    pub fn final_pivot(&self) -> &Clustering {
        &self.rows.last().expect("trace always holds the initial row").pivot
    }

    pub fn final_cost(&self) -> Option<u64> {
        self.rows.last().and_then(|r| r.cost)
    }

    /// Completed rounds.
    pub fn iterations(&self) -> usize {
        self.rows.len() - 1
    }

    /// True when an oracle failure cut the run short.
    pub fn truncated(&self) -> bool {
        matches!(self.stop, Some(StopReason::OracleFailure(_)))
    }

    /// `t,cost,fhat_min,distinct_queries`, one line per row.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "t,cost,fhat_min,distinct_queries")?;
        for r in &self.rows {
            let cost = r.cost.map(|c| c.to_string()).unwrap_or_default();
            writeln!(out, "{},{},{},{}", r.t, cost, r.fhat_min(), r.distinct_queries)?;
        }
        Ok(())
    }
}

/// The pivot-update loop as a resumable state machine. A round is planned
/// first (its pairs depend only on the pivot and the seed) and completed
/// once the oracle can answer all of them.
#[derive(Debug, Clone)]
pub struct IterativeSearch {
    config: LoopConfig,
    pivot: Clustering,
    trace: ExperimentTrace,
}

impl IterativeSearch {
    pub fn new<S: LabelSource>(
        config: LoopConfig,
        initial: Clustering,
        oracle: &PairOracle<S>,
    ) -> Result<Self> {
        config.validate()?;
        if initial.k() > config.k {
            return Err(Error::invalid(format!(
                "initial clustering has k = {} > {}",
                initial.k(),
                config.k
            )));
        }
        if initial.n() != oracle.n() {
            return Err(Error::SizeMismatch {
                left: initial.n(),
                right: oracle.n(),
            });
        }
        if initial.n() < 2 {
            return Err(Error::invalid("need at least two elements"));
        }
        let pivot = Clustering::new(initial.labels().to_vec(), config.k)?;
        let row = TraceRow {
            t: 0,
            cost: true_cost(&pivot, oracle)?,
            pivot: pivot.clone(),
            fhat_num: 0,
            fhat_den: 1,
            distinct_queries: oracle.distinct_queries(),
            round_pairs: 0,
        };
        Ok(IterativeSearch {
            config,
            pivot,
            trace: ExperimentTrace {
                rows: vec![row],
                stop: None,
            },
        })
    }

    pub fn config(&self) -> &LoopConfig {
        &self.config
    }

    pub fn pivot(&self) -> &Clustering {
        &self.pivot
    }

    pub fn iteration(&self) -> usize {
        self.trace.iterations()
    }

    pub fn trace(&self) -> &ExperimentTrace {
        &self.trace
    }

    pub fn into_trace(self) -> ExperimentTrace {
        self.trace
    }

    pub fn stopped(&self) -> Option<&StopReason> {
        self.trace.stop.as_ref()
    }

    /// Plans the next round, or records why no further round starts.
    /// `ledger` is the oracle's current distinct-query count.
    pub fn next_round(&mut self, ledger: usize) -> Result<Option<RoundPlan>> {
        if self.trace.stop.is_some() {
            return Ok(None);
        }
        let t = self.iteration() + 1;
        if t > self.config.t_max {
            self.trace.stop = Some(StopReason::MaxIterations);
            return Ok(None);
        }
        if self.config.query_budget.is_some_and(|b| ledger >= b) {
            self.trace.stop = Some(StopReason::BudgetReached);
            return Ok(None);
        }
        let sample_seed = seed::sub_seed(self.config.seed, 2 * t as u64);
        let plan = match &self.config.sampler {
            Sampler::Srra(params) => {
                RoundPlan::Srra(SamplePlan::new(&self.pivot, params, sample_seed)?)
            }
            Sampler::Uniform { pairs_per_round } => {
                let m = pairs_per_round[(t - 1).min(pairs_per_round.len() - 1)];
                RoundPlan::Uniform(UniformPlan::new(&self.pivot, m, sample_seed)?)
            }
        };
        Ok(Some(plan))
    }

    /// Reveals the planned pairs, minimizes the estimate, and adopts the
    /// minimizer. Returns `false` once the loop has stopped.
    pub fn complete_round<S: LabelSource>(
        &mut self,
        plan: RoundPlan,
        oracle: &PairOracle<S>,
    ) -> Result<bool> {
        let round_pairs = plan.required_pairs().len();
        let estimator = match plan.reveal(oracle) {
            Ok(e) => e,
            Err(e @ Error::OracleUnavailable(_)) => {
                self.trace.stop = Some(StopReason::OracleFailure(e.to_string()));
                return Ok(false);
            }
            Err(e) => return Err(e),
        };
        let t = self.iteration() + 1;
        let (next, value) = self.minimize(&estimator, seed::sub_seed(self.config.seed, 2 * t as u64 + 1))?;

        let unchanged = next.same_partition(&self.pivot);
        let improvement = -(*value.numer() as f64 / *value.denom() as f64);
        self.pivot = next;
        self.trace.rows.push(TraceRow {
            t,
            pivot: self.pivot.clone(),
            cost: true_cost(&self.pivot, oracle)?,
            fhat_num: *value.numer(),
            fhat_den: *value.denom(),
            distinct_queries: oracle.distinct_queries(),
            round_pairs,
        });

        self.trace.stop = if unchanged {
            Some(StopReason::FixedPoint)
        } else if improvement < self.config.improvement_floor {
            Some(StopReason::BelowImprovementFloor)
        } else if t >= self.config.t_max {
            Some(StopReason::MaxIterations)
        } else {
            None
        };
        Ok(self.trace.stop.is_none())
    }

    /// One full round against `oracle`. Returns `false` once stopped.
    pub fn step<S: LabelSource>(&mut self, oracle: &PairOracle<S>) -> Result<bool> {
        match self.next_round(oracle.distinct_queries())? {
            Some(plan) => self.complete_round(plan, oracle),
            None => Ok(false),
        }
    }

    /// Minimizer of the estimate; the pivot itself unless something scores
    /// strictly below zero.
    fn minimize(&self, estimator: &RegretEstimator, seed: u64) -> Result<(Clustering, Regret)> {
        let n = self.pivot.n();
        let k = self.config.k;
        let (best, num) = if self.config.exact_argmin && brute_force_feasible(n, k) {
            let best = brute_force_min(
                |c| estimator.numerator(c).expect("sizes agree"),
                n,
                k,
            )?;
            let num = estimator.numerator(&best)?;
            (best, num)
        } else {
            search::search(estimator, &self.pivot, self.config.restarts, seed)?
        };
        if num >= 0 {
            Ok((self.pivot.clone(), Regret::from_integer(0)))
        } else {
            Ok((best, Regret::new(num, estimator.denominator())))
        }
    }
}

fn true_cost<S: LabelSource>(c: &Clustering, oracle: &PairOracle<S>) -> Result<Option<u64>> {
    oracle.reference_graph().map(|g| cost(c, g)).transpose()
}

/// Runs the pivot-update loop from `initial` until a stopping condition.
/// An oracle failure ends the run early with the trace flagged as truncated.
pub fn srra_loop<S: LabelSource>(
    oracle: &PairOracle<S>,
    config: &LoopConfig,
    initial: &Clustering,
) -> Result<ExperimentTrace> {
    let mut search = IterativeSearch::new(config.clone(), initial.clone(), oracle)?;
    while search.step(oracle)? {}
    Ok(search.into_trace())
}

/// Evaluates `cost_t <= (1 + 8e)(1 + (5e)^t) opt + (5e)^t d0` for every row
/// with `t >= 1`. Requires `0 <= epsilon < 1/5` and true costs in the trace.
pub fn theorem1_check(trace: &ExperimentTrace, opt: u64, epsilon: f64, d0: u64) -> Result<Vec<bool>> {
    if !(0.0..0.2).contains(&epsilon) {
        return Err(Error::invalid(format!(
            "epsilon {epsilon} outside [0, 1/5)"
        )));
    }
    trace
        .rows
        .iter()
        .filter(|r| r.t >= 1)
        .map(|r| {
            let c = r
                .cost
                .ok_or_else(|| Error::invalid("trace rows carry no true cost"))?;
            let decay = (5.0 * epsilon).powi(r.t as i32);
            let bound = (1.0 + 8.0 * epsilon) * (1.0 + decay) * opt as f64 + decay * d0 as f64;
            Ok(c as f64 <= bound + 1e-9)
        })
        .collect()
}
