#![allow(dead_code)]

use pairclust::seed::{self, SeededRng};
use pairclust::Clustering;
use rand::Rng;

pub fn rng(s: u64) -> SeededRng {
    seed::rng(s)
}

pub fn random_clustering(rng: &mut SeededRng, n: usize, k: usize) -> Clustering {
    Clustering::random(n, k, rng).unwrap()
}

/// Candidate at exactly `target` pair disagreements from `pivot`, found by
/// random walks of single-element moves starting at the pivot.
pub fn candidate_at_distance(pivot: &Clustering, target: u64, rng: &mut SeededRng) -> Clustering {
    for _ in 0..10_000 {
        let mut c = pivot.clone();
        for _ in 0..3 * pivot.n() {
            let u = rng.random_range(0..pivot.n());
            c.set_label(u, rng.random_range(0..pivot.k())).unwrap();
            let d = pairclust::clustering_distance(pivot, &c).unwrap();
            if d == target {
                return c;
            }
            if d > 2 * target {
                break;
            }
        }
    }
    panic!("no candidate at distance {target} found");
}

/// The (12, 8, 4) reference instance with a pivot that differs from the
/// planted truth in a few elements. No 3-clustering sits at distance exactly
/// 40 from the truth itself.
pub fn reference_pivot(truth: &Clustering) -> Clustering {
    let mut pivot = truth.clone();
    pivot.set_label(0, 1).unwrap();
    pivot.set_label(12, 2).unwrap();
    pivot
}

/// Sample mean and standard deviation (n - 1 denominator).
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}
