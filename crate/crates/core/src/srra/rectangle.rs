//! Decomposition of the pairs on which a pivot and a candidate disagree into
//! Cartesian products of pivot/candidate cluster intersections.
//!
//! With `C_ij` the pivot cluster of rank `i` intersected with candidate
//! cluster `j`, the disagreeing pairs are exactly
//!
//! * `C_ij x (C_i \ C_ij)`: split by the candidate, together in the pivot
//!   (every such pair shows up twice across `j`, hence the one half), and
//! * `C_(i1)j x C_(i2)j` for `i1 < i2`: joined by the candidate, split in the pivot.

use serde::{Deserialize, Serialize};

use super::{cluster_order, Regret, SampleSet};
use crate::clustering::{pair_cost_unchecked, Clustering, FullGraph, PairKey};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RectangleKind {
    /// Pivot rank `pivot_rank`, candidate label `candidate`.
    Intra { pivot_rank: usize, candidate: usize },
    /// Pivot ranks `first < second`, shared candidate label.
    Cross {
        first: usize,
        second: usize,
        candidate: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rectangle {
    pub kind: RectangleKind,
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
}

impl Rectangle {
    pub fn area(&self) -> u64 {
        (self.rows.len() * self.cols.len()) as u64
    }

    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.rows
            .iter()
            .flat_map(move |&u| self.cols.iter().map(move |&v| (u, v)))
    }
}

/// Nonempty distance-contributing rectangles, intra first (by pivot rank then
/// candidate label), then cross (by candidate label then rank pair).
pub fn rectangle_decompose(pivot: &Clustering, candidate: &Clustering) -> Result<Vec<Rectangle>> {
    pivot.check_same_size(candidate)?;
    let order = cluster_order(pivot);
    let mut rank_of = vec![0; pivot.k()];
    for (rank, &l) in order.iter().enumerate() {
        rank_of[l] = rank;
    }
    // cells[i][j] = C_ij
    let mut cells = vec![vec![Vec::new(); candidate.k()]; pivot.k()];
    for u in 0..pivot.n() {
        cells[rank_of[pivot.label(u)]][candidate.label(u)].push(u);
    }

    let mut out = Vec::new();
    for (i, row) in cells.iter().enumerate() {
        for (j, cell) in row.iter().enumerate() {
            if cell.is_empty() {
                continue;
            }
            let rest: Vec<usize> = row
                .iter()
                .enumerate()
                .filter(|&(jj, _)| jj != j)
                .flat_map(|(_, c)| c.iter().copied())
                .collect();
            if !rest.is_empty() {
                let mut cols = rest;
                cols.sort_unstable();
                out.push(Rectangle {
                    kind: RectangleKind::Intra {
                        pivot_rank: i,
                        candidate: j,
                    },
                    rows: cell.clone(),
                    cols,
                });
            }
        }
    }
    for j in 0..candidate.k() {
        for i1 in 0..pivot.k() {
            for i2 in i1 + 1..pivot.k() {
                let (a, b) = (&cells[i1][j], &cells[i2][j]);
                if !a.is_empty() && !b.is_empty() {
                    out.push(Rectangle {
                        kind: RectangleKind::Cross {
                            first: i1,
                            second: i2,
                            candidate: j,
                        },
                        rows: a.clone(),
                        cols: b.clone(),
                    });
                }
            }
        }
    }
    Ok(out)
}

fn split_sums<F: FnMut(&Rectangle) -> i64>(rects: &[Rectangle], mut f: F) -> (i64, i64) {
    let mut intra = 0;
    let mut cross = 0;
    for r in rects {
        match r.kind {
            RectangleKind::Intra { .. } => intra += f(r),
            RectangleKind::Cross { .. } => cross += f(r),
        }
    }
    (intra, cross)
}

/// Half the intra areas plus the cross areas.
pub fn decomposed_distance(rects: &[Rectangle]) -> u64 {
    let (intra, cross) = split_sums(rects, |r| r.area() as i64);
    debug_assert_eq!(intra % 2, 0);
    (intra / 2 + cross) as u64
}

/// Exact regret summed rectangle by rectangle.
pub fn decomposed_regret(
    rects: &[Rectangle],
    pivot: &Clustering,
    candidate: &Clustering,
    g: &FullGraph,
) -> Result<i64> {
    pivot.check_same_size(candidate)?;
    if g.n() != pivot.n() {
        return Err(Error::SizeMismatch {
            left: pivot.n(),
            right: g.n(),
        });
    }
    let f = |u: usize, v: usize| -> i64 {
        let edge = g.has_edge(PairKey::new(u, v).expect("rectangle pairs are distinct"));
        pair_cost_unchecked(edge, candidate.together(u, v)) as i64
            - pair_cost_unchecked(edge, pivot.together(u, v)) as i64
    };
    let (intra, cross) = split_sums(rects, |r| r.pairs().map(|(u, v)| f(u, v)).sum());
    Ok(intra / 2 + cross)
}

/// The sampled estimate summed rectangle by rectangle: for an intra rectangle
/// only draws of `u` from its own cluster landing in the columns count, for a
/// cross rectangle only draws of the first-rank endpoint from the second
/// rank landing in the columns.
pub fn decomposed_estimate(
    rects: &[Rectangle],
    samples: &SampleSet,
    candidate: &Clustering,
) -> Result<Regret> {
    samples.pivot().check_same_size(candidate)?;
    let mut in_cols = vec![false; candidate.n()];
    let mut numerator = 0i64;
    for r in rects {
        let target_rank = match r.kind {
            RectangleKind::Intra { pivot_rank, .. } => pivot_rank,
            RectangleKind::Cross { second, .. } => second,
        };
        for &v in &r.cols {
            in_cols[v] = true;
        }
        for &u in &r.rows {
            let Some(block) = samples.block(u, target_rank) else {
                continue;
            };
            let c = samples.draw_coefficient(block);
            for &v in block.draws.iter().filter(|&&v| in_cols[v]) {
                numerator += c * samples.pair_regret(PairKey::new(u, v)?, candidate);
            }
        }
        for &v in &r.cols {
            in_cols[v] = false;
        }
    }
    Ok(Regret::new(numerator, samples.denominator()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clustering::clustering_distance;
    use crate::srra::exact_regret;

    #[test]
    fn worked_example() {
        let pivot = Clustering::from_groups(&[vec![0, 1, 2], vec![3, 4]], 2).unwrap();
        let cand = Clustering::from_groups(&[vec![0, 1], vec![2, 3, 4]], 2).unwrap();
        let rects = rectangle_decompose(&pivot, &cand).unwrap();
        let summary: Vec<_> = rects.iter().map(|r| (r.kind, r.area())).collect();
        assert_eq!(
            summary,
            vec![
                (
                    RectangleKind::Intra {
                        pivot_rank: 0,
                        candidate: 0
                    },
                    2
                ),
                (
                    RectangleKind::Intra {
                        pivot_rank: 0,
                        candidate: 1
                    },
                    2
                ),
                (
                    RectangleKind::Cross {
                        first: 0,
                        second: 1,
                        candidate: 1
                    },
                    2
                ),
            ]
        );
        assert_eq!(rects[2].rows, vec![2]);
        assert_eq!(rects[2].cols, vec![3, 4]);
        assert_eq!(decomposed_distance(&rects), 4);
        assert_eq!(clustering_distance(&pivot, &cand).unwrap(), 4);

        let g = FullGraph::from_clustering(&pivot);
        assert_eq!(
            decomposed_regret(&rects, &pivot, &cand, &g).unwrap(),
            exact_regret(&pivot, &cand, &g).unwrap()
        );
    }

    #[test]
    fn identical_clusterings_have_no_rectangles() {
        let pivot = Clustering::new(vec![0, 1, 1, 2, 0], 3).unwrap();
        assert!(rectangle_decompose(&pivot, &pivot).unwrap().is_empty());
        let relabeled = pivot.relabeled(&[1, 2, 0]).unwrap();
        assert!(rectangle_decompose(&pivot, &relabeled).unwrap().is_empty());
    }
}
