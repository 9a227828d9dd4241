use crate::clustering::Clustering;
use crate::error::{Error, Result};

/// Largest `k^n` [`brute_force_min`] will enumerate.
pub const BRUTE_FORCE_LIMIT: f64 = 1e7;

pub fn brute_force_feasible(n: usize, k: usize) -> bool {
    (k as f64).powi(n as i32) <= BRUTE_FORCE_LIMIT
}

/// Global minimizer of `objective` over all `k^n` label assignments.
///
/// Assignments are visited in lexicographic order and only a strict
/// improvement replaces the incumbent, so ties resolve to the
/// lexicographically smallest label vector. For objectives that only depend
/// on the partition, that vector is canonical.
pub fn brute_force_min<F, O>(objective: F, n: usize, k: usize) -> Result<Clustering>
where
    F: Fn(&Clustering) -> O,
    O: PartialOrd,
{
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    let space = (k as f64).powi(n as i32);
    if space > BRUTE_FORCE_LIMIT {
        return Err(Error::SearchSpaceTooLarge {
            space,
            limit: BRUTE_FORCE_LIMIT,
        });
    }

    let mut current = Clustering::new(vec![0; n], k)?;
    let mut best = current.clone();
    let mut best_value = objective(&current);
    // odometer with the last element as the fastest digit
    loop {
        let mut pos = n;
        loop {
            if pos == 0 {
                return Ok(best);
            }
            pos -= 1;
            let next = current.label(pos) + 1;
            if next < k {
                current.set_label(pos, next)?;
                break;
            }
            current.set_label(pos, 0)?;
        }
        let value = objective(&current);
        if value < best_value {
            best_value = value;
            best = current.clone();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clustering::{cost, FullGraph};

    #[test]
    fn finds_planted_truth() {
        let truth = Clustering::from_groups(&[vec![0, 1, 2], vec![3, 4]], 2).unwrap();
        let g = FullGraph::from_clustering(&truth);
        let best = brute_force_min(|c| cost(c, &g).unwrap(), 5, 2).unwrap();
        assert_eq!(best.labels(), &[0, 0, 0, 1, 1]);
    }

    #[test]
    fn ties_take_smallest_vector() {
        let best = brute_force_min(|_| 0, 4, 3).unwrap();
        assert_eq!(best.labels(), &[0, 0, 0, 0]);
        let best = brute_force_min(|c: &Clustering| c.label(0) != 2, 2, 3).unwrap();
        assert_eq!(best.labels(), &[2, 0]);
    }

    #[test]
    fn refuses_large_spaces() {
        assert!(matches!(
            brute_force_min(|_| 0, 24, 2),
            Err(Error::SearchSpaceTooLarge { .. })
        ));
        assert!(brute_force_feasible(23, 2));
        assert!(!brute_force_feasible(24, 2));
    }
}
