//! Budgeted runs of the pivot loop, one CSV row per (seed, budget).
//!
//! A run with budget `b` stops starting rounds once the ledger holds `b`
//! distinct pairs; the round in flight always completes. UNIFORM runs draw,
//! in round `t`, as many pairs as the SRRA run on the same seed needed in its
//! round `t`, so the sampling distribution is the only difference.

use std::io::Write;

use pairclust::clustering::{cost, Clustering, PairKey};
use pairclust::optimizer::{srra_loop, ExperimentTrace, LoopConfig, Sampler};
use pairclust::oracle::PairOracle;
use pairclust::seed;
use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::config::{ExperimentConfig, Instance, Method};
use crate::HarnessError;

/// Seed stream for the random starting clustering. The loop itself uses
/// streams 2 and up.
pub const INITIAL_STREAM: u64 = 0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FinalCost {
    Value(u64),
    /// The first round alone overshot the budget.
    Insufficient,
}

impl Serialize for FinalCost {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            FinalCost::Value(v) => s.serialize_u64(*v),
            FinalCost::Insufficient => s.serialize_str("INSUFFICIENT"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentRow {
    pub method: &'static str,
    pub budget: usize,
    pub seed: u64,
    pub iterations: usize,
    pub final_cost: FinalCost,
    pub distinct_queries: usize,
    /// Size of the oracle's revealed map, counted independently of the
    /// ledger counter.
    #[serde(skip)]
    pub revealed: usize,
    #[serde(skip)]
    pub pair_count: usize,
}

pub const CSV_HEADER: &str = "method,budget,seed,iterations,final_cost,distinct_queries";

pub fn initial_clustering(n: usize, k: usize, run_seed: u64) -> Result<Clustering, HarnessError> {
    let mut rng = seed::rng(seed::sub_seed(run_seed, INITIAL_STREAM));
    Ok(Clustering::random(n, k, &mut rng)?)
}

fn loop_config(config: &ExperimentConfig, k: usize, run_seed: u64) -> LoopConfig {
    LoopConfig {
        k,
        sampler: Sampler::Srra(config.srra),
        t_max: config.t_max,
        improvement_floor: config.improvement_floor,
        restarts: config.restarts,
        seed: run_seed,
        exact_argmin: config.exact_argmin,
        query_budget: None,
    }
}

fn budgeted_run(
    instance: &Instance,
    config: &LoopConfig,
    initial: &Clustering,
    budget: usize,
) -> Result<(ExperimentTrace, usize), HarnessError> {
    let oracle = PairOracle::new(&instance.graph);
    let config = LoopConfig {
        query_budget: Some(budget),
        ..config.clone()
    };
    let trace = srra_loop(&oracle, &config, initial)?;
    let revealed = oracle.ledger().revealed().count();
    let last = trace.rows.last().expect("trace has a starting row");
    if last.distinct_queries != oracle.distinct_queries() {
        return Err(HarnessError::Internal(format!(
            "trace reports {} distinct queries, ledger holds {}",
            last.distinct_queries,
            oracle.distinct_queries()
        )));
    }
    Ok((trace, revealed))
}

fn row(
    method: Method,
    budget: usize,
    run_seed: u64,
    instance: &Instance,
    trace: &ExperimentTrace,
    revealed: usize,
) -> Result<ExperimentRow, HarnessError> {
    let first_round = trace
        .rows
        .get(1)
        .map(|r| r.distinct_queries - trace.rows[0].distinct_queries);
    let final_cost = match first_round {
        Some(used) if used <= budget => FinalCost::Value(cost(trace.final_pivot(), &instance.graph)?),
        _ => FinalCost::Insufficient,
    };
    Ok(ExperimentRow {
        method: method.as_str(),
        budget,
        seed: run_seed,
        iterations: trace.iterations(),
        final_cost,
        distinct_queries: trace.rows.last().map_or(0, |r| r.distinct_queries),
        revealed,
        pair_count: PairKey::count(instance.graph.n()),
    })
}

fn run_seed(config: &ExperimentConfig, run_seed: u64) -> Result<Vec<ExperimentRow>, HarnessError> {
    let instance = config.instance.realize(run_seed)?;
    let k = config.k.unwrap_or(instance.k);
    let n = instance.graph.n();
    let initial = initial_clustering(n, k, run_seed)?;
    let base = loop_config(config, k, run_seed);

    let base = match config.method {
        Method::Srra => base,
        Method::Uniform => {
            let largest = *config.budgets.last().expect("validated");
            let (reference, _) = budgeted_run(&instance, &base, &initial, largest)?;
            let pairs: Vec<usize> = reference.rows[1..].iter().map(|r| r.round_pairs).collect();
            if pairs.is_empty() {
                return Err(HarnessError::Internal("reference run made no rounds".into()));
            }
            LoopConfig {
                sampler: Sampler::Uniform {
                    pairs_per_round: pairs,
                },
                ..base
            }
        }
    };

    config
        .budgets
        .iter()
        .map(|&b| {
            let (trace, revealed) = budgeted_run(&instance, &base, &initial, b)?;
            row(config.method, b, run_seed, &instance, &trace, revealed)
        })
        .collect()
}

/// Runs every seed (in parallel) and returns rows ordered by seed, then budget.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<ExperimentRow>, HarnessError> {
    config.validate()?;
    let per_seed = config
        .seeds
        .par_iter()
        .map(|&s| run_seed(config, s))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(per_seed.into_iter().flatten().collect())
}

pub fn write_rows<W: Write>(rows: &[ExperimentRow], out: W) -> Result<(), HarnessError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(CSV_HEADER.split(','))?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn rows_to_csv(rows: &[ExperimentRow]) -> Result<String, HarnessError> {
    let mut buf = Vec::new();
    write_rows(rows, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}
