mod common;

use common::{candidate_at_distance, mean_std, random_clustering, rng};
use pairclust::clustering::{clustering_distance, Clustering, FullGraph};
use pairclust::oracle::{generate_planted, PairOracle};
use pairclust::srra::{
    decomposed_distance, decomposed_estimate, decomposed_regret, draw_samples, estimate_regret,
    exact_regret, full_estimator, measure_smoothness, rectangle_decompose, Regret, SrraParams,
};
use rand::Rng;

#[test]
fn exhaustive_mode_is_exact() {
    let mut r = rng(100);
    for inst_seed in 0..20u64 {
        let inst = generate_planted(&[7, 5, 3], 0.15, inst_seed).unwrap();
        let oracle = inst.oracle();
        let pivot = random_clustering(&mut r, 15, 3);
        let max = *pivot.cluster_sizes().iter().max().unwrap();
        let params = SrraParams::with_q(0.5, max).unwrap();
        let s = draw_samples(&pivot, &oracle, &params, inst_seed).unwrap();
        assert!(s.is_exhaustive());
        let est = s.estimator();
        for _ in 0..20 {
            let cand = random_clustering(&mut r, 15, 3);
            let exact = Regret::from_integer(exact_regret(&pivot, &cand, &inst.graph).unwrap());
            assert_eq!(estimate_regret(&s, &cand).unwrap(), exact);
            assert_eq!(est.evaluate(&cand).unwrap(), exact);
        }
    }
}

#[test]
fn q_at_least_n_reveals_every_relevant_pair() {
    let inst = generate_planted(&[6, 4], 0.1, 8).unwrap();
    let oracle = inst.oracle();
    let pivot = inst.truth.clone();
    let s = draw_samples(&pivot, &oracle, &SrraParams::with_q(0.5, 10).unwrap(), 0).unwrap();
    assert_eq!(oracle.distinct_queries(), 45);
    assert_eq!(s.distinct_pairs(), 45);
}

#[test]
fn aggregated_estimator_matches_draw_by_draw_sum() {
    let mut r = rng(7);
    for seed in 0..30u64 {
        let inst = generate_planted(&[10, 6, 3], 0.2, seed).unwrap();
        let pivot = random_clustering(&mut r, 19, 4);
        let params = SrraParams::with_q(0.3, 1 + seed as usize % 7).unwrap().sampling_only();
        let s = draw_samples(&pivot, &inst.oracle(), &params, seed).unwrap();
        let est = s.estimator();
        for _ in 0..10 {
            let cand = random_clustering(&mut r, 19, 4);
            assert_eq!(estimate_regret(&s, &cand).unwrap(), est.evaluate(&cand).unwrap());
        }
    }
}

#[test]
fn decomposition_identities() {
    let mut r = rng(55);
    for trial in 0..500u64 {
        let n = r.random_range(2..=30);
        let k = r.random_range(1..=5);
        let pivot = random_clustering(&mut r, n, k);
        let kc = r.random_range(1..=5);
        let cand = random_clustering(&mut r, n, kc);
        let g = generate_planted(&[n], 0.4, trial).unwrap().graph;
        let rects = rectangle_decompose(&pivot, &cand).unwrap();
        assert_eq!(decomposed_distance(&rects), clustering_distance(&pivot, &cand).unwrap());
        assert_eq!(
            decomposed_regret(&rects, &pivot, &cand, &g).unwrap(),
            exact_regret(&pivot, &cand, &g).unwrap()
        );
    }
}

#[test]
fn sampled_estimate_lives_on_the_rectangles() {
    let mut r = rng(56);
    for seed in 0..100u64 {
        let inst = generate_planted(&[9, 6, 4], 0.2, seed).unwrap();
        let pivot = random_clustering(&mut r, 19, 3);
        let cand = random_clustering(&mut r, 19, 3);
        let params = SrraParams::with_q(0.3, 4).unwrap().sampling_only();
        let s = draw_samples(&pivot, &inst.oracle(), &params, seed).unwrap();
        let rects = rectangle_decompose(&pivot, &cand).unwrap();
        assert_eq!(
            decomposed_estimate(&rects, &s, &cand).unwrap(),
            estimate_regret(&s, &cand).unwrap()
        );
    }
}

#[test]
fn flipping_labels_outside_the_rectangles_changes_nothing() {
    let mut r = rng(57);
    for seed in 0..50u64 {
        let inst = generate_planted(&[8, 5, 3], 0.2, seed).unwrap();
        let pivot = random_clustering(&mut r, 16, 3);
        let cand = pairclust::srra::perturbed_candidate(&pivot, &mut r).unwrap();
        let rects = rectangle_decompose(&pivot, &cand).unwrap();
        let mut inside = std::collections::HashSet::new();
        for rect in &rects {
            for (u, v) in rect.pairs() {
                inside.insert(pairclust::PairKey::new(u, v).unwrap());
            }
        }
        let mut flipped = inst.graph.clone();
        for p in pairclust::PairKey::all(16).filter(|p| !inside.contains(p)) {
            flipped.set_edge(p, !inst.graph.has_edge(p));
        }
        let params = SrraParams::with_q(0.3, 3).unwrap().sampling_only();
        let a = draw_samples(&pivot, &PairOracle::new(&inst.graph), &params, seed).unwrap();
        let b = draw_samples(&pivot, &PairOracle::new(&flipped), &params, seed).unwrap();
        assert_eq!(
            estimate_regret(&a, &cand).unwrap(),
            estimate_regret(&b, &cand).unwrap()
        );
    }
}

#[test]
fn query_budget_bound() {
    let mut r = rng(58);
    for seed in 0..50u64 {
        let inst = generate_planted(&[12, 7, 2, 1], 0.1, seed).unwrap();
        let oracle = inst.oracle();
        let pivot = random_clustering(&mut r, 22, 4);
        let q = r.random_range(1..6);
        let s = draw_samples(&pivot, &oracle, &SrraParams::with_q(0.3, q).unwrap().sampling_only(), seed)
            .unwrap();
        let order = s.cluster_order().to_vec();
        let sizes = pivot.cluster_sizes();
        let bound: usize = order
            .iter()
            .enumerate()
            .map(|(i, &l)| sizes[l] * (4 - i) * q)
            .sum::<usize>()
            .min(22 * 21 / 2);
        assert!(oracle.distinct_queries() <= bound);
        assert_eq!(s.plan().query_bound(), bound);
        for (pair, label) in s.revealed() {
            assert_eq!(oracle.peek(pair), Some(label));
        }
    }
}

#[test]
fn draws_are_deterministic_in_seed() {
    let inst = generate_planted(&[10, 5], 0.1, 1).unwrap();
    let params = SrraParams::with_q(0.3, 4).unwrap().sampling_only();
    let a = draw_samples(&inst.truth, &inst.oracle(), &params, 9).unwrap();
    let b = draw_samples(&inst.truth, &inst.oracle(), &params, 9).unwrap();
    let c = draw_samples(&inst.truth, &inst.oracle(), &params, 10).unwrap();
    assert_eq!(a, b);
    assert_ne!(a.blocks(), c.blocks());
}

/// Monte Carlo oracle: mean of the estimate over independent draws against
/// the exact cost difference.
#[test]
fn estimator_is_unbiased() {
    let inst = generate_planted(&[12, 8, 4], 0.1, 2024).unwrap();
    let pivot = common::reference_pivot(&inst.truth);
    let cand = candidate_at_distance(&pivot, 40, &mut rng(1));
    assert_eq!(clustering_distance(&pivot, &cand).unwrap(), 40);
    let exact = exact_regret(&pivot, &cand, &inst.graph).unwrap() as f64;

    // with repetition everywhere, so the estimate is genuinely random
    let params = SrraParams::with_q(0.5, 20).unwrap().sampling_only();
    let values: Vec<f64> = (0..2000u64)
        .map(|s| {
            let samples = draw_samples(&pivot, &inst.oracle(), &params, s).unwrap();
            let v = estimate_regret(&samples, &cand).unwrap();
            *v.numer() as f64 / *v.denom() as f64
        })
        .collect();
    let (mean, std) = mean_std(&values);
    assert!(std > 0.0);
    assert!(
        (mean - exact).abs() <= 3.0 * std / (2000f64).sqrt(),
        "mean {mean} exact {exact} std {std}"
    );
}

#[test]
fn smoothness_examples() {
    let inst = generate_planted(&[12, 8, 4], 0.1, 77).unwrap();
    let g: &FullGraph = &inst.graph;
    let exhaustive = SrraParams::with_q(0.5, 12).unwrap();
    let e = measure_smoothness(&inst.truth, &inst.oracle(), g, &exhaustive, 50, 1).unwrap();
    assert_eq!(e, 0.0);
    assert!(measure_smoothness(&inst.truth, &inst.oracle(), g, &exhaustive, 0, 1).is_err());

    // relabeling candidates does not move the measured ratio
    let params = SrraParams::with_q(0.5, 5).unwrap().sampling_only();
    let s = draw_samples(&inst.truth, &inst.oracle(), &params, 4).unwrap();
    let est = s.estimator();
    let mut r = rng(9);
    let cands: Vec<Clustering> = (0..30)
        .map(|_| pairclust::srra::perturbed_candidate(&inst.truth, &mut r).unwrap())
        .collect();
    let relabeled: Vec<Clustering> = cands.iter().map(|c| c.relabeled(&[2, 0, 1]).unwrap()).collect();
    let a = pairclust::srra::smoothness_over(&est, g, &cands).unwrap();
    let b = pairclust::srra::smoothness_over(&est, g, &relabeled).unwrap();
    assert!(a > 0.0);
    assert_eq!(a, b);
}

#[test]
fn smoothness_improves_with_q() {
    let inst = generate_planted(&[12, 8, 4], 0.1, 77).unwrap();
    let median = |q: usize, sampling_only: bool| {
        let mut p = SrraParams::with_q(0.5, q).unwrap();
        p.exhaustive_when_covered = !sampling_only;
        let mut v: Vec<f64> = (0..20u64)
            .map(|s| measure_smoothness(&inst.truth, &inst.oracle(), &inst.graph, &p, 100, s).unwrap())
            .collect();
        v.sort_by(f64::total_cmp);
        (v[9] + v[10]) / 2.0
    };
    assert!(median(200, false) < median(10, false));
    assert!(median(200, true) < median(10, true));
}

#[test]
fn full_estimator_is_the_exact_regret() {
    let mut r = rng(60);
    let inst = generate_planted(&[5, 4], 0.3, 3).unwrap();
    let pivot = random_clustering(&mut r, 9, 2);
    let est = full_estimator(&pivot, &inst.graph).unwrap();
    for _ in 0..50 {
        let c = random_clustering(&mut r, 9, 3);
        assert_eq!(
            est.evaluate(&c).unwrap(),
            Regret::from_integer(exact_regret(&pivot, &c, &inst.graph).unwrap())
        );
    }
}
