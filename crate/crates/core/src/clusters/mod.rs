//! Radius-`r` clusters (connected components) of a finite point set.
//!
//! Two points are adjacent when their distance is strictly less than `r`;
//! pairs at distance exactly `r` are not. Distances are compared squared, with
//! no slack. Component ids are assigned in order of each component's smallest
//! point index, so id order is also the tie-break order.

mod dsu;
mod grid;

use std::io::Write;

pub use dsu::DisjointSets;
pub use grid::GridIndex;

use crate::error::{Error, Result};
use crate::pointproc::PointSet;

pub type ComponentId = u32;

/// Point coordinates permuted into grid order, plus the grid itself.
///
/// Position `k` here is original point `grid.order()[k]`.
pub(crate) struct SortedPoints {
    pub grid: GridIndex,
    pub coords: Vec<f64>,
    pub dim: usize,
}

impl SortedPoints {
    pub fn new(points: &PointSet, r: f64) -> Result<Self> {
        let grid = GridIndex::build(points, r)?;
        let dim = points.dim();
        let mut coords = Vec::with_capacity(points.coords().len());
        for &i in grid.order() {
            coords.extend_from_slice(points.point(i as usize));
        }
        Ok(SortedPoints { grid, coords, dim })
    }

    #[inline]
    pub fn point(&self, k: usize) -> &[f64] {
        &self.coords[k * self.dim..(k + 1) * self.dim]
    }

    /// Calls `f(a, b)` with sorted positions `a < b` for every pair at
    /// squared distance `< r2`.
    pub fn for_each_close_pair(&self, r: f64, mut f: impl FnMut(usize, usize)) {
        let r2 = r * r;
        let m = self.dim;
        let mut lo = vec![0.0; m];
        let mut hi = vec![0.0; m];
        for a in 0..self.grid.len() {
            let p = self.point(a);
            for ax in 0..m {
                lo[ax] = p[ax] - r;
                hi[ax] = p[ax] + r;
            }
            self.grid.for_each_run_in(&lo, &hi, |run| {
                let start = run.start.max(a + 1);
                for b in start..run.end {
                    if dist2(p, self.point(b)) < r2 {
                        f(a, b);
                    }
                }
            });
        }
    }
}

#[inline]
pub(crate) fn dist2(p: &[f64], q: &[f64]) -> f64 {
    p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// Per-point component ids and component sizes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterLabeling {
    component_of: Vec<ComponentId>,
    sizes: Vec<usize>,
    order: Vec<ComponentId>,
}

impl ClusterLabeling {
    /// Normalizes arbitrary per-point labels: ids are renumbered by first
    /// appearance, so id order follows each component's smallest index.
    pub fn from_labels<L: Copy + Eq + std::hash::Hash>(labels: &[L]) -> Self {
        let mut remap = std::collections::HashMap::new();
        let mut component_of = Vec::with_capacity(labels.len());
        let mut sizes = Vec::new();
        for &l in labels {
            let next = sizes.len() as ComponentId;
            let id = *remap.entry(l).or_insert(next);
            if id == next {
                sizes.push(0);
            }
            sizes[id as usize] += 1;
            component_of.push(id);
        }
        let mut order: Vec<ComponentId> = (0..sizes.len() as ComponentId).collect();
        order.sort_by_key(|&c| (std::cmp::Reverse(sizes[c as usize]), c));
        ClusterLabeling {
            component_of,
            sizes,
            order,
        }
    }

    pub fn len(&self) -> usize {
        self.component_of.len()
    }

    pub fn is_empty(&self) -> bool {
        self.component_of.is_empty()
    }

    pub fn component_of(&self) -> &[ComponentId] {
        &self.component_of
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn num_components(&self) -> usize {
        self.sizes.len()
    }

    /// Component ids by size descending, ties by smallest contained index.
    pub fn order(&self) -> &[ComponentId] {
        &self.order
    }

    /// Components as sorted index lists, ordered by smallest member.
    pub fn blocks(&self) -> Vec<Vec<usize>> {
        let mut blocks = vec![Vec::new(); self.sizes.len()];
        for (i, &c) in self.component_of.iter().enumerate() {
            blocks[c as usize].push(i);
        }
        blocks
    }
}

/// Largest and second-largest component summary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TopClusters {
    pub largest_size: usize,
    /// Second order statistic of the sizes; equals `largest_size` on a tie.
    pub second_size: usize,
    pub largest_unique: bool,
    pub largest_id: Option<ComponentId>,
}

/// Labels the radius-`r` clusters of `points`.
pub fn find_clusters(points: &PointSet, r: f64) -> Result<ClusterLabeling> {
    if points.iter().any(|p| p.len() != points.dim()) || points.dim() != points.bbox().dim() {
        return Err(Error::DimensionMismatch {
            expected: points.bbox().dim(),
            found: points.dim(),
        });
    }
    let sorted = SortedPoints::new(points, r)?;
    let order = sorted.grid.order();
    let mut sets = DisjointSets::new(points.len());
    sorted.for_each_close_pair(r, |a, b| {
        sets.union(order[a], order[b]);
    });
    let roots: Vec<u32> = (0..points.len() as u32).map(|i| sets.find(i)).collect();
    Ok(ClusterLabeling::from_labels(&roots))
}

pub fn top_clusters(labeling: &ClusterLabeling) -> TopClusters {
    let order = labeling.order();
    let sizes = labeling.sizes();
    let largest_size = order.first().map_or(0, |&c| sizes[c as usize]);
    let second_size = order.get(1).map_or(0, |&c| sizes[c as usize]);
    TopClusters {
        largest_size,
        second_size,
        largest_unique: !order.is_empty() && second_size < largest_size,
        largest_id: order.first().copied(),
    }
}

pub fn cluster_of(labeling: &ClusterLabeling, point_index: usize) -> Result<ComponentId> {
    labeling
        .component_of()
        .get(point_index)
        .copied()
        .ok_or(Error::IndexOutOfRange {
            index: point_index,
            len: labeling.len(),
        })
}

/// Debug dump: `point_index,x0,..,x{m-1},component_id`.
pub fn write_labeling_csv<W: Write>(
    out: W,
    points: &PointSet,
    labeling: &ClusterLabeling,
) -> Result<()> {
    if points.len() != labeling.len() {
        return Err(Error::invalid("labeling does not match point set"));
    }
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["point_index".to_string()];
    header.extend((0..points.dim()).map(|a| format!("x{a}")));
    header.push("component_id".into());
    w.write_record(&header)?;
    for (i, p) in points.iter().enumerate() {
        let mut row = vec![i.to_string()];
        row.extend(p.iter().map(|x| format!("{x:.16e}")));
        row.push(labeling.component_of()[i].to_string());
        w.write_record(&row)?;
    }
    w.flush()
        .map_err(|e| Error::io("flushing labeling csv", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pointproc::Aabb;

    fn set2(pts: &[[f64; 2]]) -> PointSet {
        let b = Aabb::centered_cube(2, 10.0).unwrap();
        PointSet::new(b, &pts.iter().map(|p| p.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    fn labeling_with_sizes(sizes: &[usize]) -> ClusterLabeling {
        let labels: Vec<usize> = sizes
            .iter()
            .enumerate()
            .flat_map(|(c, &s)| std::iter::repeat_n(c, s))
            .collect();
        ClusterLabeling::from_labels(&labels)
    }

    #[test]
    fn close_pair_joins() {
        let l = find_clusters(&set2(&[[0.0, 0.0], [0.0, 0.9]]), 1.0).unwrap();
        assert_eq!(l.sizes(), &[2]);
    }

    #[test]
    fn pair_at_exactly_r_is_disconnected() {
        let l = find_clusters(&set2(&[[0.0, 0.0], [0.0, 1.0]]), 1.0).unwrap();
        assert_eq!(l.sizes(), &[1, 1]);
        let l = find_clusters(&set2(&[[0.0, 0.0], [1.0 - 1e-9, 0.0]]), 1.0).unwrap();
        assert_eq!(l.sizes(), &[2]);
    }

    #[test]
    fn chain_connectivity_is_transitive() {
        let l = find_clusters(
            &set2(&[[0.0, 0.0], [0.9, 0.0], [1.8, 0.0], [4.0, 4.0]]),
            1.0,
        )
        .unwrap();
        assert_eq!(l.blocks(), vec![vec![0, 1, 2], vec![3]]);
    }

    #[test]
    fn rejects_bad_radius() {
        assert!(find_clusters(&set2(&[[0.0, 0.0]]), 0.0).is_err());
        assert!(find_clusters(&set2(&[[0.0, 0.0]]), f64::INFINITY).is_err());
    }

    #[test]
    fn top_clusters_unique_largest() {
        let t = top_clusters(&labeling_with_sizes(&[5, 3, 3]));
        assert_eq!(
            (t.largest_size, t.second_size, t.largest_unique),
            (5, 3, true)
        );
        assert_eq!(t.largest_id, Some(0));
    }

    #[test]
    fn top_clusters_tie() {
        let t = top_clusters(&labeling_with_sizes(&[4, 4, 1]));
        assert_eq!(
            (t.largest_size, t.second_size, t.largest_unique),
            (4, 4, false)
        );
        // tie broken by smallest contained index
        assert_eq!(t.largest_id, Some(0));
        let t = top_clusters(&ClusterLabeling::from_labels(&[7, 3, 3, 7]));
        assert_eq!(t.largest_id, Some(0));
    }

    #[test]
    fn top_clusters_degenerate() {
        let t = top_clusters(&ClusterLabeling::from_labels::<u32>(&[]));
        assert_eq!(
            t,
            TopClusters {
                largest_size: 0,
                second_size: 0,
                largest_unique: false,
                largest_id: None
            }
        );
        let t = top_clusters(&labeling_with_sizes(&[3]));
        assert_eq!(
            (t.largest_size, t.second_size, t.largest_unique),
            (3, 0, true)
        );
    }

    #[test]
    fn order_sorts_by_size_then_id() {
        let l = ClusterLabeling::from_labels(&[9, 8, 8, 7, 7, 6]);
        assert_eq!(l.sizes(), &[1, 2, 2, 1]);
        assert_eq!(l.order(), &[1, 2, 0, 3]);
    }

    #[test]
    fn cluster_of_lookup() {
        let l = find_clusters(&set2(&[[0.0, 0.0]]), 1.0).unwrap();
        assert_eq!(cluster_of(&l, 0).unwrap(), 0);
        assert!(matches!(
            cluster_of(&l, 1),
            Err(Error::IndexOutOfRange { .. })
        ));
        let l = find_clusters(&set2(&[[0.0, 0.0], [0.5, 0.5]]), 1.0).unwrap();
        assert_eq!(cluster_of(&l, 0).unwrap(), cluster_of(&l, 1).unwrap());
    }

    #[test]
    fn empty_input() {
        let l = find_clusters(&set2(&[]), 1.0).unwrap();
        assert!(l.is_empty());
        assert_eq!(l.num_components(), 0);
    }

    #[test]
    fn csv_dump_has_header_and_rows() {
        let ps = set2(&[[0.0, 0.0], [3.0, 0.0]]);
        let l = find_clusters(&ps, 1.0).unwrap();
        let mut buf = Vec::new();
        write_labeling_csv(&mut buf, &ps, &l).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "point_index,x0,x1,component_id");
        assert_eq!(lines.len(), 3);
        assert!(lines[2].ends_with(",1"));
    }
}
