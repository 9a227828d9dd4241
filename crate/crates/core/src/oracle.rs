//! The query-cost model: pair labels are revealed lazily, cached, and every
//! distinct pair revealed is charged once to a ledger.

use std::collections::BTreeMap;
use std::sync::{Mutex, MutexGuard};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::clustering::{Clustering, FullGraph, PairKey};
use crate::error::{Error, Result};
use crate::io::PlantedSidecar;
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PairLabel {
    Edge,
    NonEdge,
}

impl PairLabel {
    #[inline]
    pub fn is_edge(self) -> bool {
        self == PairLabel::Edge
    }

    #[inline]
    pub fn from_edge(edge: bool) -> Self {
        if edge {
            PairLabel::Edge
        } else {
            PairLabel::NonEdge
        }
    }
}

/// Where labels ultimately come from: a stored graph, a human, a replay log.
pub trait LabelSource: Send + Sync {
    fn n(&self) -> usize;

    fn label(&self, pair: PairKey) -> Result<PairLabel>;

    /// The complete graph when it is known to the source. Used for reporting
    /// only; reading it is never charged to the ledger.
    fn reference_graph(&self) -> Option<&FullGraph> {
        None
    }
}

impl LabelSource for FullGraph {
    fn n(&self) -> usize {
        FullGraph::n(self)
    }

    fn label(&self, pair: PairKey) -> Result<PairLabel> {
        Ok(PairLabel::from_edge(self.has_edge(pair)))
    }

    fn reference_graph(&self) -> Option<&FullGraph> {
        Some(self)
    }
}

impl<S: LabelSource + ?Sized> LabelSource for &S {
    fn n(&self) -> usize {
        (**self).n()
    }

    fn label(&self, pair: PairKey) -> Result<PairLabel> {
        (**self).label(pair)
    }

    fn reference_graph(&self) -> Option<&FullGraph> {
        (**self).reference_graph()
    }
}

/// Every pair revealed so far with its label.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryLedger {
    revealed: BTreeMap<PairKey, PairLabel>,
}

impl QueryLedger {
    #[inline]
    pub fn distinct_queries(&self) -> usize {
        self.revealed.len()
    }

    pub fn get(&self, pair: PairKey) -> Option<PairLabel> {
        self.revealed.get(&pair).copied()
    }

    pub fn revealed(&self) -> impl Iterator<Item = (PairKey, PairLabel)> + '_ {
        self.revealed.iter().map(|(&p, &l)| (p, l))
    }
}

/// A caching, counting front for a [`LabelSource`].
///
/// Calls are serialized on an internal lock, so concurrent queries for the
/// same unseen pair are charged exactly once.
#[derive(Debug)]
pub struct PairOracle<S> {
    source: S,
    ledger: Mutex<QueryLedger>,
}

impl<S: LabelSource> PairOracle<S> {
    pub fn new(source: S) -> Self {
        PairOracle {
            source,
            ledger: Mutex::new(QueryLedger::default()),
        }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.source.n()
    }

    pub fn source(&self) -> &S {
        &self.source
    }

    pub fn query(&self, u: usize, v: usize) -> Result<PairLabel> {
        self.query_pair(PairKey::checked(u, v, self.n())?)
    }

    pub fn query_pair(&self, pair: PairKey) -> Result<PairLabel> {
        if pair.v() >= self.n() {
            return Err(Error::OutOfRange {
                id: pair.v(),
                n: self.n(),
            });
        }
        let mut ledger = self.lock();
        if let Some(label) = ledger.get(pair) {
            return Ok(label);
        }
        let label = self.source.label(pair)?;
        ledger.revealed.insert(pair, label);
        Ok(label)
    }

    pub fn distinct_queries(&self) -> usize {
        self.lock().distinct_queries()
    }

    /// Cached label, without querying.
    pub fn peek(&self, pair: PairKey) -> Option<PairLabel> {
        self.lock().get(pair)
    }

    pub fn ledger(&self) -> QueryLedger {
        self.lock().clone()
    }

    pub fn reference_graph(&self) -> Option<&FullGraph> {
        self.source.reference_graph()
    }

    fn lock(&self) -> MutexGuard<'_, QueryLedger> {
        // the ledger is a plain map and stays consistent even if a holder panicked
        self.ledger.lock().unwrap_or_else(|e| e.into_inner())
    }
}

/// A planted partition whose pair labels were flipped independently.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantedInstance {
    pub truth: Clustering,
    pub flip_probability: f64,
    pub seed: u64,
    pub graph: FullGraph,
}

impl PlantedInstance {
    pub fn n(&self) -> usize {
        self.truth.n()
    }

    pub fn k(&self) -> usize {
        self.truth.k()
    }

    pub fn oracle(&self) -> PairOracle<&FullGraph> {
        PairOracle::new(&self.graph)
    }

    pub fn sidecar(&self) -> PlantedSidecar {
        PlantedSidecar {
            truth: self.truth.labels().to_vec(),
            p: self.flip_probability,
            seed: self.seed,
        }
    }
}

/// Elements `0..sizes[0]` form cluster 0, the next `sizes[1]` cluster 1, and
/// so on. Each pair label then disagrees with that partition independently
/// with probability `p`.
pub fn generate_planted(sizes: &[usize], p: f64, seed: u64) -> Result<PlantedInstance> {
    if sizes.is_empty() {
        return Err(Error::invalid("cluster sizes must be nonempty"));
    }
    if !(0.0..0.5).contains(&p) {
        return Err(Error::invalid(format!(
            "flip probability {p} must lie in [0, 0.5)"
        )));
    }
    let labels: Vec<usize> = sizes
        .iter()
        .enumerate()
        .flat_map(|(l, &s)| std::iter::repeat_n(l, s))
        .collect();
    let truth = Clustering::new(labels, sizes.len())?;

    let mut rng = seed::rng(seed);
    let mut graph = FullGraph::empty(truth.n());
    for pair in PairKey::all(truth.n()) {
        let flip = rng.random_bool(p);
        graph.set_edge(pair, truth.together(pair.u(), pair.v()) != flip);
    }
    Ok(PlantedInstance {
        truth,
        flip_probability: p,
        seed,
        graph,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clustering::cost;

    struct Unavailable;

    impl LabelSource for Unavailable {
        fn n(&self) -> usize {
            4
        }
        fn label(&self, _pair: PairKey) -> Result<PairLabel> {
            Err(Error::OracleUnavailable("nobody home".into()))
        }
    }

    #[test]
    fn query_caches_and_counts() {
        let g = FullGraph::from_edges(4, [(0, 1)]).unwrap();
        let oracle = PairOracle::new(&g);
        assert_eq!(oracle.query(0, 1).unwrap(), PairLabel::Edge);
        assert_eq!(oracle.distinct_queries(), 1);
        assert_eq!(oracle.query(1, 0).unwrap(), PairLabel::Edge);
        assert_eq!(oracle.distinct_queries(), 1);
        assert_eq!(oracle.query(2, 3).unwrap(), PairLabel::NonEdge);
        assert_eq!(oracle.distinct_queries(), 2);
        assert_eq!(oracle.query(2, 2), Err(Error::SelfPair(2)));
        assert!(oracle.query(2, 4).is_err());
        assert_eq!(oracle.distinct_queries(), 2);
    }

    #[test]
    fn unavailable_source_leaves_ledger_unchanged() {
        let oracle = PairOracle::new(Unavailable);
        assert!(matches!(
            oracle.query(0, 1),
            Err(Error::OracleUnavailable(_))
        ));
        assert_eq!(oracle.distinct_queries(), 0);
    }

    #[test]
    fn noiseless_planted() {
        let inst = generate_planted(&[3, 2], 0.0, 11).unwrap();
        assert_eq!(inst.graph, FullGraph::from_clustering(&inst.truth));
        assert_eq!(cost(&inst.truth, &inst.graph).unwrap(), 0);
        let other = Clustering::new(vec![0, 0, 1, 1, 1], 2).unwrap();
        assert_eq!(cost(&other, &inst.graph).unwrap(), 4);
    }

    #[test]
    fn planted_rejects_bad_input() {
        assert!(generate_planted(&[3, 2], 0.5, 0).is_err());
        assert!(generate_planted(&[3, 2], -0.1, 0).is_err());
        assert!(generate_planted(&[], 0.1, 0).is_err());
        // empty clusters are fine
        assert_eq!(generate_planted(&[3, 0, 2], 0.1, 0).unwrap().k(), 3);
    }

    #[test]
    fn planted_is_deterministic() {
        let a = generate_planted(&[10, 5], 0.2, 9).unwrap();
        let b = generate_planted(&[10, 5], 0.2, 9).unwrap();
        let c = generate_planted(&[10, 5], 0.2, 10).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.graph, c.graph);
    }
}
