use std::sync::Arc;

use pairclust::clustering::{FullGraph, PairKey};
use pairclust::optimizer::srra_loop;
use pairclust::oracle::{generate_planted, PairLabel, PairOracle};
use pairclust_harness::{HarnessError, LabelSession, SessionConfig, SessionManager};

/// Answers every pending pair from `g` until the session stops.
fn drive(session: &mut LabelSession, g: &FullGraph) -> usize {
    let mut answered = 0;
    while !session.next_batch().is_empty() {
        let batch = session.next_batch().to_vec();
        for p in batch {
            session.submit(p, PairLabel::from_edge(g.has_edge(p))).unwrap();
            answered += 1;
        }
    }
    answered
}

#[test]
fn fresh_session_batch_is_well_formed() {
    let s = LabelSession::new("a".into(), SessionConfig::new(5, 2, 2, 3)).unwrap();
    let batch = s.next_batch();
    assert!(!batch.is_empty());
    assert!(batch.iter().all(|p| p.u() < p.v() && p.v() < 5));
    let mut sorted = batch.to_vec();
    sorted.sort();
    sorted.dedup();
    assert_eq!(sorted.len(), batch.len());
    assert_eq!(s.state().iteration, 0);
    assert_eq!(s.state().labels_collected, 0);
}

#[test]
fn session_matches_in_process_run() {
    let cases = [
        (vec![3, 2], 0.0, 2, 2usize),
        (vec![3, 2], 0.2, 2, 2),
        (vec![6, 4, 2], 0.1, 3, 3),
        (vec![10, 5, 3], 0.15, 3, 2),
    ];
    for (sizes, p, k, q) in cases {
        for seed in 0..5u64 {
            let inst = generate_planted(&sizes, p, seed).unwrap();
            let n = inst.n();
            let config = SessionConfig::new(n, k, q, seed);
            let mut session = LabelSession::new("s".into(), config.clone()).unwrap();
            let answered = drive(&mut session, &inst.graph);

            let oracle = PairOracle::new(&inst.graph);
            let expected = srra_loop(
                &oracle,
                &config.loop_config().unwrap(),
                &config.initial_clustering().unwrap(),
            )
            .unwrap();

            let got = session.trace();
            assert_eq!(got.stop, expected.stop);
            assert_eq!(got.rows.len(), expected.rows.len());
            for (a, b) in got.rows.iter().zip(&expected.rows) {
                assert_eq!(a.pivot, b.pivot);
                assert_eq!((a.fhat_num, a.fhat_den), (b.fhat_num, b.fhat_den));
                assert_eq!(a.distinct_queries, b.distinct_queries);
                assert_eq!(a.round_pairs, b.round_pairs);
            }
            assert_eq!(session.state().current_clustering, expected.final_pivot().labels());
            assert!(session.state().finished);
            // every answered pair was needed and used
            assert_eq!(answered, oracle.distinct_queries());
            assert_eq!(session.distinct_queries(), oracle.distinct_queries());
        }
    }
}

#[test]
fn double_submit_is_rejected() {
    let inst = generate_planted(&[3, 2], 0.0, 1).unwrap();
    let mut s = LabelSession::new("d".into(), SessionConfig::new(5, 2, 2, 4)).unwrap();
    let batch = s.next_batch().to_vec();
    assert!(batch.len() >= 2);
    let p = batch[0];
    let label = PairLabel::from_edge(inst.graph.has_edge(p));
    let left = s.submit(p, label).unwrap();
    assert_eq!(left, batch.len() - 1);
    let before = s.snapshot();
    let err = s.submit(p, label).unwrap_err();
    assert!(matches!(err, HarnessError::Protocol(_)), "{err}");
    let after = s.snapshot();
    assert_eq!(before.answered, after.answered);
    assert_eq!(before.pending, after.pending);
    assert_eq!(s.distinct_queries(), before.trace.rows.last().unwrap().distinct_queries);
}

#[test]
fn non_pending_pairs_are_rejected() {
    let mut s = LabelSession::new("x".into(), SessionConfig::new(8, 2, 1, 0)).unwrap();
    let pending = s.next_batch().to_vec();
    let outside = PairKey::all(8).find(|p| !pending.contains(p)).unwrap();
    assert!(matches!(
        s.submit(outside, PairLabel::Edge),
        Err(HarnessError::Protocol(_))
    ));
    assert!(matches!(
        s.submit(PairKey::new(3, 9).unwrap(), PairLabel::Edge),
        Err(HarnessError::Protocol(_))
    ));
    assert_eq!(s.next_batch(), pending.as_slice());
}

#[test]
fn manager_not_found_and_concurrent_submits() {
    let manager = Arc::new(SessionManager::new());
    assert!(matches!(
        manager.with("missing", |s| Ok(s.state())),
        Err(HarnessError::NotFound(_))
    ));

    let inst = generate_planted(&[12, 8], 0.1, 2).unwrap();
    let id = manager.create(SessionConfig::new(20, 2, 3, 2)).unwrap();
    let batch = manager.with(&id, |s| Ok(s.next_batch().to_vec())).unwrap();
    let g = Arc::new(inst.graph.clone());
    // every thread tries every pair; exactly one submit per pair succeeds
    let handles: Vec<_> = (0..4)
        .map(|_| {
            let (manager, id, batch, g) = (manager.clone(), id.clone(), batch.clone(), g.clone());
            std::thread::spawn(move || {
                batch
                    .iter()
                    .filter(|&&p| {
                        manager
                            .with(&id, |s| s.submit(p, PairLabel::from_edge(g.has_edge(p))))
                            .is_ok()
                    })
                    .count()
            })
        })
        .collect();
    let accepted: usize = handles.into_iter().map(|h| h.join().unwrap()).sum();
    assert_eq!(accepted, batch.len());
    let state = manager.with(&id, |s| Ok(s.state())).unwrap();
    assert!(state.iteration >= 1);
    assert!(state.labels_collected >= batch.len());
}

#[test]
fn bad_configs_are_rejected() {
    let mut c = SessionConfig::new(5, 2, 2, 0);
    c.initial = Some(vec![0, 1]);
    assert!(LabelSession::new("b".into(), c).is_err());
    assert!(LabelSession::new("b".into(), SessionConfig::new(5, 0, 2, 0)).is_err());
    assert!(LabelSession::new("b".into(), SessionConfig::new(5, 2, 0, 0)).is_err());
    assert!(LabelSession::new("b".into(), SessionConfig::new(1, 2, 2, 0)).is_err());
}
