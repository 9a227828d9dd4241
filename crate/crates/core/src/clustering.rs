//! Clusterings, canonical pair keys, fully known side-information graphs,
//! and the two quantities everything else is built on: the disagreement
//! cost of a clustering against a graph, and the pair-counting distance
//! between two clusterings.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Assignment of `n` elements to labels in `0..k`. Clusters may be empty.
///
/// Two clusterings are only ever compared through the pair relations they
/// induce; raw labels carry no meaning across clusterings.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "LabelsRecord", into = "LabelsRecord")]
pub struct Clustering {
    labels: Vec<usize>,
    k: usize,
}

#[derive(Serialize, Deserialize)]
struct LabelsRecord {
    labels: Vec<usize>,
}

impl TryFrom<LabelsRecord> for Clustering {
    type Error = Error;

    fn try_from(record: LabelsRecord) -> Result<Self> {
        Clustering::from_labels(record.labels)
    }
}

impl From<Clustering> for LabelsRecord {
    fn from(c: Clustering) -> Self {
        LabelsRecord { labels: c.labels }
    }
}

impl Clustering {
    pub fn new(labels: Vec<usize>, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::invalid("k must be at least 1"));
        }
        if let Some((u, &l)) = labels.iter().enumerate().find(|(_, &l)| l >= k) {
            return Err(Error::invalid(format!(
                "element {u} has label {l}, outside 0..{k}"
            )));
        }
        Ok(Clustering { labels, k })
    }

    /// Builds a clustering whose `k` is one more than the largest label.
    pub fn from_labels(labels: Vec<usize>) -> Result<Self> {
        let k = labels.iter().copied().max().map_or(1, |m| m + 1);
        Clustering::new(labels, k)
    }

    /// Builds a clustering from explicit member lists; group `i` gets label `i`.
    /// Every element of `0..n` must appear in exactly one group.
    pub fn from_groups<G: AsRef<[usize]>>(groups: &[G], k: usize) -> Result<Self> {
        if groups.len() > k {
            return Err(Error::invalid(format!(
                "{} groups do not fit into k = {k}",
                groups.len()
            )));
        }
        let n: usize = groups.iter().map(|g| g.as_ref().len()).sum();
        let mut labels = vec![usize::MAX; n];
        for (label, group) in groups.iter().enumerate() {
            for &u in group.as_ref() {
                if u >= n {
                    return Err(Error::OutOfRange { id: u, n });
                }
                if labels[u] != usize::MAX {
                    return Err(Error::invalid(format!("element {u} listed twice")));
                }
                labels[u] = label;
            }
        }
        Clustering::new(labels, k)
    }

    /// Everything in cluster 0.
    pub fn single(n: usize, k: usize) -> Result<Self> {
        Clustering::new(vec![0; n], k)
    }

    pub fn random<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> Result<Self> {
        if k == 0 {
            return Err(Error::invalid("k must be at least 1"));
        }
        let labels = (0..n).map(|_| rng.random_range(0..k)).collect();
        Ok(Clustering { labels, k })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.labels.len()
    }

    #[inline]
    pub fn k(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    #[inline]
    pub fn label(&self, u: usize) -> usize {
        self.labels[u]
    }

    /// Moves `u` to cluster `label`.
    pub fn set_label(&mut self, u: usize, label: usize) -> Result<()> {
        self.check_id(u)?;
        if label >= self.k {
            return Err(Error::invalid(format!("label {label} outside 0..{}", self.k)));
        }
        self.labels[u] = label;
        Ok(())
    }

    pub fn check_id(&self, u: usize) -> Result<()> {
        if u < self.n() {
            Ok(())
        } else {
            Err(Error::OutOfRange { id: u, n: self.n() })
        }
    }

    pub fn check_same_size(&self, other: &Clustering) -> Result<()> {
        if self.n() == other.n() {
            Ok(())
        } else {
            Err(Error::SizeMismatch {
                left: self.n(),
                right: other.n(),
            })
        }
    }

    /// `u ≡ v` under this clustering. Unchecked; see [`same_cluster`].
    #[inline]
    pub fn together(&self, u: usize, v: usize) -> bool {
        self.labels[u] == self.labels[v]
    }

    /// Members of every cluster, indexed by label, each list ascending.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.k];
        for (u, &l) in self.labels.iter().enumerate() {
            out[l].push(u);
        }
        out
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }

    /// Labels renumbered in order of first appearance. Two clusterings induce
    /// the same pair relation iff their canonical vectors are equal, and the
    /// canonical vector is the lexicographically smallest relabeling.
    pub fn canonical_labels(&self) -> Vec<usize> {
        let mut map = vec![usize::MAX; self.k];
        let mut next = 0;
        self.labels
            .iter()
            .map(|&l| {
                if map[l] == usize::MAX {
                    map[l] = next;
                    next += 1;
                }
                map[l]
            })
            .collect()
    }

    pub fn same_partition(&self, other: &Clustering) -> bool {
        self.n() == other.n() && self.canonical_labels() == other.canonical_labels()
    }

    /// Applies `perm[old] = new` to every label.
    pub fn relabeled(&self, perm: &[usize]) -> Result<Clustering> {
        if perm.len() != self.k {
            return Err(Error::invalid("permutation length must equal k"));
        }
        let mut seen = vec![false; self.k];
        for &p in perm {
            if p >= self.k || std::mem::replace(&mut seen[p], true) {
                return Err(Error::invalid("not a permutation of 0..k"));
            }
        }
        Ok(Clustering {
            labels: self.labels.iter().map(|&l| perm[l]).collect(),
            k: self.k,
        })
    }
}

/// An unordered pair of distinct elements, stored with `u < v`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "RawPair")]
pub struct PairKey {
    u: usize,
    v: usize,
}

#[derive(Deserialize)]
struct RawPair {
    u: usize,
    v: usize,
}

impl TryFrom<RawPair> for PairKey {
    type Error = Error;

    fn try_from(raw: RawPair) -> Result<Self> {
        PairKey::new(raw.u, raw.v)
    }
}

impl PairKey {
    pub fn new(a: usize, b: usize) -> Result<Self> {
        match a.cmp(&b) {
            std::cmp::Ordering::Less => Ok(PairKey { u: a, v: b }),
            std::cmp::Ordering::Greater => Ok(PairKey { u: b, v: a }),
            std::cmp::Ordering::Equal => Err(Error::SelfPair(a)),
        }
    }

    /// Like [`PairKey::new`] but also checks both ids against `n`.
    pub fn checked(a: usize, b: usize, n: usize) -> Result<Self> {
        for id in [a, b] {
            if id >= n {
                return Err(Error::OutOfRange { id, n });
            }
        }
        PairKey::new(a, b)
    }

    #[inline]
    pub fn u(self) -> usize {
        self.u
    }

    #[inline]
    pub fn v(self) -> usize {
        self.v
    }

    /// Position in the triangular enumeration `(0,1), (0,2), (1,2), (0,3), ...`.
    /// Independent of `n`.
    #[inline]
    pub fn index(self) -> usize {
        self.v * (self.v - 1) / 2 + self.u
    }

    pub fn from_index(index: usize) -> Self {
        // largest v with v(v-1)/2 <= index
        let mut v = (((8.0 * index as f64 + 1.0).sqrt() + 1.0) / 2.0) as usize;
        while v * (v - 1) / 2 > index {
            v -= 1;
        }
        while (v + 1) * v / 2 <= index {
            v += 1;
        }
        PairKey {
            u: index - v * (v - 1) / 2,
            v,
        }
    }

    /// `n(n-1)/2`.
    #[inline]
    pub fn count(n: usize) -> usize {
        n * n.saturating_sub(1) / 2
    }

    /// All pairs over `0..n` in index order.
    pub fn all(n: usize) -> impl Iterator<Item = PairKey> {
        (1..n).flat_map(|v| (0..v).map(move |u| PairKey { u, v }))
    }
}

/// A fully known side-information graph: an edge means "cluster together",
/// a missing edge means "keep apart".
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FullGraph {
    n: usize,
    adjacency: Vec<bool>,
}

impl FullGraph {
    pub fn empty(n: usize) -> Self {
        FullGraph {
            n,
            adjacency: vec![false; PairKey::count(n)],
        }
    }

    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut g = FullGraph::empty(n);
        for (a, b) in edges {
            g.set_edge(PairKey::checked(a, b, n)?, true);
        }
        Ok(g)
    }

    /// The noiseless graph of a clustering: edges exactly on within-cluster pairs.
    pub fn from_clustering(c: &Clustering) -> Self {
        let mut g = FullGraph::empty(c.n());
        for pair in PairKey::all(c.n()) {
            g.adjacency[pair.index()] = c.together(pair.u, pair.v);
        }
        g
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn has_edge(&self, pair: PairKey) -> bool {
        self.adjacency[pair.index()]
    }

    pub fn set_edge(&mut self, pair: PairKey, present: bool) {
        assert!(pair.v < self.n, "pair {pair:?} outside n = {}", self.n);
        self.adjacency[pair.index()] = present;
    }

    pub fn edges(&self) -> impl Iterator<Item = PairKey> + '_ {
        PairKey::all(self.n).filter(|p| self.adjacency[p.index()])
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().filter(|&&e| e).count()
    }
}

/// `u ≡ v` under `c`.
pub fn same_cluster(c: &Clustering, u: usize, v: usize) -> Result<bool> {
    c.check_id(u)?;
    c.check_id(v)?;
    Ok(c.together(u, v))
}

#[inline]
pub(crate) fn pair_cost_unchecked(edge: bool, together: bool) -> u8 {
    (edge != together) as u8
}

/// 1 if `c` disagrees with `g` on the pair: an edge split apart, or a
/// non-edge placed together.
pub fn pair_cost(c: &Clustering, g: &FullGraph, u: usize, v: usize) -> Result<u8> {
    check_graph(c, g)?;
    let pair = PairKey::checked(u, v, c.n())?;
    Ok(pair_cost_unchecked(g.has_edge(pair), c.together(u, v)))
}

/// Number of disagreeing pairs, each unordered pair counted once.
pub fn cost(c: &Clustering, g: &FullGraph) -> Result<u64> {
    check_graph(c, g)?;
    Ok(PairKey::all(c.n())
        .map(|p| pair_cost_unchecked(g.has_edge(p), c.together(p.u, p.v)) as u64)
        .sum())
}

/// Number of unordered pairs joined by exactly one of `a`, `b`.
pub fn clustering_distance(a: &Clustering, b: &Clustering) -> Result<u64> {
    a.check_same_size(b)?;
    Ok(PairKey::all(a.n())
        .filter(|p| a.together(p.u, p.v) != b.together(p.u, p.v))
        .count() as u64)
}

fn check_graph(c: &Clustering, g: &FullGraph) -> Result<()> {
    if c.n() == g.n() {
        Ok(())
    } else {
        Err(Error::SizeMismatch {
            left: c.n(),
            right: g.n(),
        })
    }
}
