//! Desk-scale acceptance runs. Each check returns one outcome line; `run_all`
//! runs them in order. Used by `pairclust check` and the acceptance test.

use std::fmt;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use pairclust::clustering::{clustering_distance, cost, Clustering, FullGraph, PairKey};
use pairclust::optimizer::{
    brute_force_min, srra_loop, theorem1_check, ExperimentTrace, IterativeSearch, LoopConfig,
};
use pairclust::oracle::{generate_planted, PairOracle};
use pairclust::seed::{self, SeededRng};
use pairclust::srra::{
    decomposed_distance, decomposed_regret, draw_samples, exact_regret, measure_smoothness,
    rectangle_decompose, smoothness_over, Regret, SrraParams,
};
use rand::Rng;
use rayon::prelude::*;

use crate::config::{ExperimentConfig, InstanceSpec, Method};
use crate::experiment::{initial_clustering, rows_to_csv, run_experiment, ExperimentRow, FinalCost};

#[derive(Debug, Clone)]
pub struct Outcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
    pub limit: Duration,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}: {} [{:.2}s, limit {}s]",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.detail,
            self.elapsed.as_secs_f64(),
            self.limit.as_secs()
        )
    }
}

fn timed(name: &'static str, limit_secs: u64, f: impl FnOnce() -> (bool, String)) -> Outcome {
    let start = Instant::now();
    let (ok, detail) = f();
    let elapsed = start.elapsed();
    let limit = Duration::from_secs(limit_secs);
    Outcome {
        name,
        passed: ok && elapsed < limit,
        detail,
        elapsed,
        limit,
    }
}

/// Ledger agreement for every run made by the other checks.
#[derive(Debug, Default)]
pub struct Accounting {
    runs: Mutex<(usize, Vec<String>)>,
}

impl Accounting {
    fn trace(&self, what: &str, trace: &ExperimentTrace, ledger: usize, n: usize) {
        let reported = trace.rows.last().map_or(0, |r| r.distinct_queries);
        let mut g = self.runs.lock().unwrap();
        g.0 += 1;
        if reported != ledger || ledger > PairKey::count(n) {
            g.1.push(format!("{what}: trace {reported}, ledger {ledger}"));
        }
    }

    /// Reads `distinct_queries` back out of the emitted CSV.
    fn csv(&self, what: &str, rows: &[ExperimentRow]) {
        let text = rows_to_csv(rows).expect("rows serialize");
        let mut reader = csv::Reader::from_reader(text.as_bytes());
        let col = reader
            .headers()
            .expect("csv header")
            .iter()
            .position(|h| h == "distinct_queries")
            .expect("distinct_queries column");
        let mut g = self.runs.lock().unwrap();
        for (rec, row) in reader.records().zip(rows) {
            g.0 += 1;
            let reported: usize = rec.expect("csv record")[col].parse().expect("integer");
            if reported != row.revealed || reported > row.pair_count {
                g.1.push(format!(
                    "{what} seed {} budget {}: csv {reported}, ledger {}",
                    row.seed, row.budget, row.revealed
                ));
            }
        }
    }
}

fn random(rng: &mut SeededRng, n: usize, k: usize) -> Clustering {
    Clustering::random(n, k, rng).expect("k >= 1")
}

/// Symmetry, identity and the triangle inequality on random triples, with
/// identity judged from the pair relations directly.
pub fn metric_suite() -> Outcome {
    timed("metric axioms", 5, || {
        let mut rng = seed::rng(1);
        let mut violations = 0;
        for _ in 0..1000 {
            let n = rng.random_range(1..=12);
            let k = rng.random_range(1..=4);
            let (a, b, c) = (random(&mut rng, n, k), random(&mut rng, n, k), random(&mut rng, n, k));
            let d = |x: &Clustering, y: &Clustering| clustering_distance(x, y).unwrap();
            let relations_equal = PairKey::all(n).all(|p| a.together(p.u(), p.v()) == b.together(p.u(), p.v()));
            if d(&a, &b) != d(&b, &a)
                || (d(&a, &b) == 0) != relations_equal
                || d(&a, &a) != 0
                || d(&a, &c) > d(&a, &b) + d(&b, &c)
            {
                violations += 1;
            }
        }
        (violations == 0, format!("{violations} violations in 1000 triples"))
    })
}

pub fn decomposition_suite() -> Outcome {
    timed("decomposition identities", 10, || {
        let mut rng = seed::rng(2);
        let mut bad = 0;
        for _ in 0..500 {
            let n = rng.random_range(2..=30);
            let kp = rng.random_range(1..=5);
            let kc = rng.random_range(1..=5);
            let pivot = random(&mut rng, n, kp);
            let cand = random(&mut rng, n, kc);
            let mut g = FullGraph::empty(n);
            for p in PairKey::all(n) {
                g.set_edge(p, rng.random_bool(0.5));
            }
            let rects = rectangle_decompose(&pivot, &cand).unwrap();
            let ok = decomposed_distance(&rects) == clustering_distance(&pivot, &cand).unwrap()
                && decomposed_regret(&rects, &pivot, &cand, &g).unwrap()
                    == exact_regret(&pivot, &cand, &g).unwrap();
            if !ok {
                bad += 1;
            }
        }
        (bad == 0, format!("{} of 500 cases exact", 500 - bad))
    })
}

pub fn exhaustive_exactness() -> Outcome {
    timed("exhaustive-mode exactness", 10, || {
        let mut rng = seed::rng(3);
        let mut exact = 0;
        for inst_seed in 0..20u64 {
            let inst = generate_planted(&[9, 6, 4, 1], 0.15, inst_seed).unwrap();
            let pivot = random(&mut rng, 20, 4);
            let q = *pivot.cluster_sizes().iter().max().unwrap();
            let params = SrraParams::with_q(0.5, q).unwrap();
            let est = draw_samples(&pivot, &inst.oracle(), &params, inst_seed)
                .unwrap()
                .estimator();
            for _ in 0..20 {
                let cand = random(&mut rng, 20, 4);
                if est.evaluate(&cand).unwrap()
                    == Regret::from_integer(exact_regret(&pivot, &cand, &inst.graph).unwrap())
                {
                    exact += 1;
                }
            }
        }
        (exact == 400, format!("{exact} of 400 candidates exact"))
    })
}

/// The (12, 8, 4), p = 0.1 instance and a pivot two moves away from its truth.
pub fn reference_instance() -> (pairclust::PlantedInstance, Clustering) {
    let inst = generate_planted(&[12, 8, 4], 0.1, 2024).unwrap();
    let mut pivot = inst.truth.clone();
    pivot.set_label(0, 1).unwrap();
    pivot.set_label(12, 2).unwrap();
    (inst, pivot)
}

/// Random walk of single-element moves from `pivot` until exactly `target`
/// pairs disagree.
pub fn candidate_at_distance(pivot: &Clustering, target: u64, rng: &mut SeededRng) -> Option<Clustering> {
    for _ in 0..10_000 {
        let mut c = pivot.clone();
        for _ in 0..3 * pivot.n() {
            let u = rng.random_range(0..pivot.n());
            c.set_label(u, rng.random_range(0..pivot.k())).unwrap();
            let d = clustering_distance(pivot, &c).unwrap();
            if d == target {
                return Some(c);
            }
            if d > 2 * target {
                break;
            }
        }
    }
    None
}

pub fn unbiasedness() -> Outcome {
    timed("estimator unbiasedness", 60, || {
        let (inst, pivot) = reference_instance();
        let Some(cand) = candidate_at_distance(&pivot, 40, &mut seed::rng(4)) else {
            return (false, "no candidate at distance 40".into());
        };
        let exact = exact_regret(&pivot, &cand, &inst.graph).unwrap() as f64;
        let params = SrraParams::with_q(0.5, 20).unwrap().sampling_only();
        let values: Vec<f64> = (0..2000u64)
            .into_par_iter()
            .map(|s| {
                let v = draw_samples(&pivot, &PairOracle::new(&inst.graph), &params, s)
                    .unwrap()
                    .estimator()
                    .evaluate(&cand)
                    .unwrap();
                *v.numer() as f64 / *v.denom() as f64
            })
            .collect();
        let (mean, std) = mean_std(&values);
        let tol = 3.0 * std / (values.len() as f64).sqrt();
        (
            (mean - exact).abs() <= tol,
            format!("mean {mean:.3} vs exact {exact}, |diff| {:.3} <= {tol:.3}", (mean - exact).abs()),
        )
    })
}

pub fn smoothness_trend() -> Outcome {
    timed("smoothness trend", 60, || {
        let (inst, pivot) = reference_instance();
        let median_at = |q: usize| {
            let params = SrraParams::with_q(0.5, q).unwrap().sampling_only();
            let mut eps: Vec<f64> = (0..20u64)
                .into_par_iter()
                .map(|s| {
                    measure_smoothness(&pivot, &PairOracle::new(&inst.graph), &inst.graph, &params, 200, s)
                        .unwrap()
                })
                .collect();
            median(&mut eps)
        };
        let (lo, hi) = (median_at(10), median_at(200));
        (hi < lo, format!("median eps {hi:.4} at q=200 vs {lo:.4} at q=10"))
    })
}

fn brute_opt(g: &FullGraph, k: usize) -> u64 {
    let best = brute_force_min(|c| cost(c, g).unwrap(), g.n(), k).unwrap();
    cost(&best, g).unwrap()
}

pub fn exact_loop_optimum(acct: &Accounting) -> Outcome {
    timed("exact-estimator loop reaches optimum", 60, || {
        let cases: Vec<(usize, f64, u64)> = [2usize, 3]
            .into_iter()
            .flat_map(|k| [0.0, 0.1].into_iter().flat_map(move |p| (0..20u64).map(move |s| (k, p, s))))
            .collect();
        let ok: usize = cases
            .par_iter()
            .map(|&(k, p, s)| {
                let sizes: &[usize] = if k == 2 { &[6, 4] } else { &[5, 3, 2] };
                let inst = generate_planted(sizes, p, s).unwrap();
                let opt = brute_opt(&inst.graph, k);
                let oracle = inst.oracle();
                let config = LoopConfig {
                    exact_argmin: true,
                    ..LoopConfig::srra(k, SrraParams::with_q(0.5, 10).unwrap(), 5, s)
                };
                let initial = initial_clustering(10, k, s).unwrap();
                let trace = srra_loop(&oracle, &config, &initial).unwrap();
                acct.trace("exact loop", &trace, oracle.ledger().revealed().count(), 10);
                let reached = trace.rows.len() > 1 && trace.rows[1..].iter().all(|r| r.cost == Some(opt));
                let bound = theorem1_check(&trace, opt, 0.0, trace.rows[0].cost.unwrap()).unwrap();
                usize::from(reached && bound.iter().all(|&b| b))
            })
            .sum();
        (ok == cases.len(), format!("{ok}/{} runs optimal from t=1 on", cases.len()))
    })
}

/// Every clustering of `n` elements into at most `k` labels.
fn all_clusterings(n: usize, k: usize) -> Vec<Clustering> {
    (0..k.pow(n as u32))
        .map(|mut x| {
            let labels = (0..n)
                .map(|_| {
                    let l = x % k;
                    x /= k;
                    l
                })
                .collect();
            Clustering::new(labels, k).unwrap()
        })
        .collect()
}

pub const BOUND_Q: usize = 200;

/// The bound checked against the largest estimation error actually seen:
/// each round's estimator is compared with the exact regret on all 2^10
/// candidates.
pub fn convergence_bound(acct: &Accounting) -> Outcome {
    timed("convergence bound", 300, || {
        let candidates = all_clusterings(10, 2);
        let results: Vec<(bool, f64)> = (0..100u64)
            .into_par_iter()
            .map(|s| {
                let inst = generate_planted(&[6, 4], 0.1, s).unwrap();
                let opt = brute_opt(&inst.graph, 2);
                let oracle = inst.oracle();
                let params = SrraParams::with_q(0.5, BOUND_Q).unwrap().sampling_only();
                let config = LoopConfig {
                    exact_argmin: true,
                    ..LoopConfig::srra(2, params, 5, s)
                };
                let initial = initial_clustering(10, 2, s).unwrap();
                let d0 = cost(&initial, &inst.graph).unwrap();
                let mut search = IterativeSearch::new(config, initial, &oracle).unwrap();
                let mut eps: f64 = 0.0;
                while let Some(plan) = search.next_round(oracle.distinct_queries()).unwrap() {
                    let est = plan.clone().reveal(&oracle).unwrap();
                    eps = eps.max(smoothness_over(&est, &inst.graph, &candidates).unwrap());
                    if !search.complete_round(plan, &oracle).unwrap() {
                        break;
                    }
                }
                acct.trace("bound run", search.trace(), oracle.ledger().revealed().count(), 10);
                let holds = theorem1_check(search.trace(), opt, eps, d0)
                    .map(|v| v.iter().all(|&b| b))
                    .unwrap_or(false);
                (holds, eps)
            })
            .collect();
        let held = results.iter().filter(|r| r.0).count();
        let worst = results.iter().map(|r| r.1).fold(0.0, f64::max);
        (held >= 95, format!("{held}/100 runs within bound, largest measured eps {worst:.3}"))
    })
}

pub fn desk_convergence(acct: &Accounting) -> Outcome {
    timed("desk-scale convergence", 60, || {
        let runs: Vec<(u64, u64)> = (0..10u64)
            .into_par_iter()
            .map(|s| {
                let inst = generate_planted(&[40, 15, 5], 0.05, s).unwrap();
                let oracle = inst.oracle();
                let config = LoopConfig::srra(3, SrraParams::with_q(0.5, 60).unwrap(), 5, s);
                let trace = srra_loop(&oracle, &config, &initial_clustering(60, 3, s).unwrap()).unwrap();
                acct.trace("desk run", &trace, oracle.ledger().revealed().count(), 60);
                (trace.final_cost().unwrap(), cost(&inst.truth, &inst.graph).unwrap())
            })
            .collect();
        let good = runs.iter().filter(|(f, t)| *f as f64 <= 1.2 * *t as f64).count();
        (good >= 8, format!("{good}/10 seeds within 1.2x of the planted cost"))
    })
}

pub const COMPARISON_Q: usize = 2;
pub const COMPARISON_BUDGETS: [usize; 3] = [250, 500, 1000];

pub fn comparison_config(method: Method) -> ExperimentConfig {
    ExperimentConfig {
        instance: InstanceSpec::Planted {
            sizes: vec![40, 15, 5],
            p: 0.05,
            seed: None,
        },
        method,
        budgets: COMPARISON_BUDGETS.to_vec(),
        k: None,
        srra: SrraParams::with_q(0.5, COMPARISON_Q).unwrap(),
        t_max: 50,
        improvement_floor: 0.0,
        restarts: 4,
        exact_argmin: false,
        seeds: (0..10).collect(),
        output: None,
    }
}

/// SRRA against UNIFORM at equal budgets; passes when SRRA is at least as
/// good in 7 of 10 seeds at every budget.
pub fn srra_vs_uniform(acct: &Accounting) -> Outcome {
    timed("size-biased beats uniform", 120, || {
        let srra = run_experiment(&comparison_config(Method::Srra)).unwrap();
        let uniform = run_experiment(&comparison_config(Method::Uniform)).unwrap();
        acct.csv("SRRA", &srra);
        acct.csv("UNIFORM", &uniform);
        let mut pass = true;
        let mut parts = Vec::new();
        for b in COMPARISON_BUDGETS {
            let wins = srra
                .iter()
                .zip(&uniform)
                .filter(|(a, _)| a.budget == b)
                .filter(|(a, u)| match (a.final_cost, u.final_cost) {
                    (FinalCost::Value(x), FinalCost::Value(y)) => x <= y,
                    _ => false,
                })
                .count();
            pass &= wins >= 7;
            parts.push(format!("budget {b}: {wins}/10"));
        }
        (pass, parts.join(", "))
    })
}

pub fn query_accounting(acct: &Accounting) -> Outcome {
    timed("query accounting", 1, || {
        let g = acct.runs.lock().unwrap();
        let detail = if g.1.is_empty() {
            format!("{} runs, ledger and reports agree", g.0)
        } else {
            format!("{} of {} runs disagree: {}", g.1.len(), g.0, g.1.join("; "))
        };
        (g.0 > 0 && g.1.is_empty(), detail)
    })
}

pub fn run_all() -> Vec<Outcome> {
    let acct = Accounting::default();
    vec![
        metric_suite(),
        decomposition_suite(),
        exhaustive_exactness(),
        unbiasedness(),
        smoothness_trend(),
        exact_loop_optimum(&acct),
        convergence_bound(&acct),
        desk_convergence(&acct),
        srra_vs_uniform(&acct),
        query_accounting(&acct),
    ]
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn median(xs: &mut [f64]) -> f64 {
    xs.sort_by(f64::total_cmp);
    let m = xs.len() / 2;
    if xs.len().is_multiple_of(2) {
        (xs[m - 1] + xs[m]) / 2.0
    } else {
        xs[m]
    }
}
