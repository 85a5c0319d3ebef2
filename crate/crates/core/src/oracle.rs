//! Slow reference implementations for cross-checking.
//!
//! Everything here works from all-pairs distances and shares no code with the
//! grid/union-find path beyond the window geometry, which is the definition
//! being checked rather than an algorithm.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::localscore::make_window;
use crate::pointproc::PointSet;

/// Largest configuration the quadratic oracles accept.
pub const ORACLE_MAX_POINTS: usize = 10_000;

/// A partition of `0..len` into blocks, each sorted, blocks ordered by
/// smallest member.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OraclePartition {
    pub blocks: Vec<Vec<usize>>,
}

impl OraclePartition {
    /// Block sizes, largest first.
    pub fn sizes_desc(&self) -> Vec<usize> {
        let mut s: Vec<usize> = self.blocks.iter().map(Vec::len).collect();
        s.sort_unstable_by(|a, b| b.cmp(a));
        s
    }

    pub fn largest(&self) -> usize {
        self.sizes_desc().first().copied().unwrap_or(0)
    }

    pub fn second(&self) -> usize {
        self.sizes_desc().get(1).copied().unwrap_or(0)
    }

    /// The partition with every index mapped through `f`, re-canonicalized.
    pub fn relabeled(&self, f: impl Fn(usize) -> usize) -> OraclePartition {
        let mut blocks: Vec<Vec<usize>> = self
            .blocks
            .iter()
            .map(|b| {
                let mut b: Vec<usize> = b.iter().map(|&i| f(i)).collect();
                b.sort_unstable();
                b
            })
            .collect();
        blocks.sort_unstable_by_key(|b| b[0]);
        OraclePartition { blocks }
    }
}

fn guard(len: usize) -> Result<()> {
    if len > ORACLE_MAX_POINTS {
        return Err(Error::OracleTooLarge {
            got: len,
            limit: ORACLE_MAX_POINTS,
        });
    }
    Ok(())
}

fn close(p: &[f64], q: &[f64], r: f64) -> bool {
    let d2: f64 = p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum();
    d2 < r * r
}

/// Transitive closure of the strict `< r` relation by breadth-first search.
pub fn naive_clusters(points: &PointSet, r: f64) -> Result<OraclePartition> {
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::invalid(format!("radius must be positive, got {r}")));
    }
    guard(points.len())?;
    let n = points.len();
    let mut seen = vec![false; n];
    let mut blocks = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        queue.push_back(start);
        let mut block = Vec::new();
        while let Some(i) = queue.pop_front() {
            block.push(i);
            for j in 0..n {
                if !seen[j] && close(points.point(i), points.point(j), r) {
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
        block.sort_unstable();
        blocks.push(block);
    }
    Ok(OraclePartition { blocks })
}

/// Per-point localized scores recomputed from scratch on every window.
pub fn naive_local_scores(points: &PointSet, theta: f64, r: f64) -> Result<Vec<bool>> {
    guard(points.len())?;
    let mut out = Vec::with_capacity(points.len());
    for x in 0..points.len() {
        let w = make_window(points.point(x), theta, points.bbox())?;
        let inside: Vec<usize> = (0..points.len())
            .filter(|&i| w.contains(points.point(i)))
            .collect();
        let sub = points.subset(w.clipped.clone(), &inside)?;
        let part = naive_clusters(&sub, r)?;
        let sizes = part.sizes_desc();
        let unique = sizes.len() == 1 || sizes[0] > sizes[1];
        let x_local = inside
            .iter()
            .position(|&i| i == x)
            .expect("centre lies in its window");
        let x_block = part
            .blocks
            .iter()
            .find(|b| b.contains(&x_local))
            .expect("partition covers every point");
        out.push(unique && x_block.len() == sizes[0]);
    }
    Ok(out)
}

pub fn naive_localized_total(points: &PointSet, theta: f64, r: f64) -> Result<u64> {
    Ok(naive_local_scores(points, theta, r)?
        .into_iter()
        .filter(|&b| b)
        .count() as u64)
}

/// Distance-based disconnection test between two index sets.
pub fn sets_disconnected(points: &PointSet, a: &[usize], b: &[usize], r: f64) -> bool {
    a.iter().all(|&i| {
        b.iter()
            .all(|&j| !close(points.point(i), points.point(j), r))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pointproc::Aabb;

    fn line(xs: &[f64]) -> PointSet {
        let b = Aabb::centered_cube(2, 20.0).unwrap();
        PointSet::new(b, &xs.iter().map(|&x| vec![x, 0.0]).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn empty_partition() {
        assert!(naive_clusters(&line(&[]), 1.0).unwrap().blocks.is_empty());
        assert_eq!(naive_localized_total(&line(&[]), 1.0, 1.0).unwrap(), 0);
    }

    #[test]
    fn collinear_chain_is_one_block() {
        let p = naive_clusters(&line(&[0.0, 0.9, 1.8]), 1.0).unwrap();
        assert_eq!(p.blocks, vec![vec![0, 1, 2]]);
    }

    #[test]
    fn exact_r_splits() {
        let p = naive_clusters(&line(&[0.0, 1.0]), 1.0).unwrap();
        assert_eq!(p.blocks.len(), 2);
    }

    #[test]
    fn huge_theta_counts_largest() {
        let ps = line(&[0.0, 0.5, 1.0, 5.0, 5.5]);
        assert_eq!(naive_localized_total(&ps, 1e6, 1.0).unwrap(), 3);
    }

    #[test]
    fn rejects_oversized() {
        let xs: Vec<f64> = (0..=ORACLE_MAX_POINTS)
            .map(|i| (i as f64) * 1e-3 - 9.0)
            .collect();
        assert!(matches!(
            naive_clusters(&line(&xs), 1.0),
            Err(Error::OracleTooLarge { .. })
        ));
    }
}
