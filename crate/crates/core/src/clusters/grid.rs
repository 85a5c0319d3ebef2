//! Uniform bucket grid for fixed-radius neighbor search.
//!
//! Cells have edge exactly `r` and are anchored at the lower corner of the
//! point set's box, so any pair closer than `r` sits in the same or a
//! Chebyshev-adjacent cell. Points are kept in cell order (row-major, last
//! axis fastest) which makes each run of cells along the last axis one
//! contiguous slice.

use std::collections::HashMap;
use std::ops::Range;

use crate::error::{Error, Result};
use crate::pointproc::PointSet;

/// Dense cell tables are used while they stay within this many cells per point.
const DENSE_CELLS_PER_POINT: u64 = 4;
const DENSE_CELLS_FLOOR: u64 = 1 << 16;

#[derive(Debug, Clone)]
enum CellLookup {
    /// `starts[key]..starts[key + 1]` indexes `order`.
    Dense(Vec<u32>),
    Sparse(HashMap<u64, (u32, u32)>),
}

#[derive(Debug, Clone)]
pub struct GridIndex {
    dim: usize,
    cell_size: f64,
    origin: Vec<f64>,
    cells_per_axis: Vec<u64>,
    strides: Vec<u64>,
    /// Point indices sorted by (cell key, index).
    order: Vec<u32>,
    /// Cell key of each point, by original index.
    key_of: Vec<u64>,
    lookup: CellLookup,
}

impl GridIndex {
    pub fn build(points: &PointSet, r: f64) -> Result<Self> {
        if !(r.is_finite() && r > 0.0) {
            return Err(Error::invalid(format!("radius must be positive, got {r}")));
        }
        if points.len() > u32::MAX as usize {
            return Err(Error::invalid("too many points for u32 indices"));
        }
        let dim = points.dim();
        let bbox = points.bbox();
        let origin = bbox.lower().to_vec();
        let cells_per_axis: Vec<u64> = (0..dim)
            .map(|a| (bbox.width(a) / r).floor() as u64 + 1)
            .collect();
        let mut strides = vec![1u64; dim];
        let mut total: u64 = 1;
        for a in (0..dim).rev() {
            strides[a] = total;
            total = total
                .checked_mul(cells_per_axis[a])
                .ok_or_else(|| Error::invalid("grid too fine for 64-bit cell keys"))?;
        }

        let mut grid = GridIndex {
            dim,
            cell_size: r,
            origin,
            cells_per_axis,
            strides,
            order: Vec::new(),
            key_of: Vec::with_capacity(points.len()),
            lookup: CellLookup::Sparse(HashMap::new()),
        };
        for p in points.iter() {
            let key = grid.key_for(p);
            grid.key_of.push(key);
        }
        let mut order: Vec<u32> = (0..points.len() as u32).collect();
        order.sort_unstable_by_key(|&i| (grid.key_of[i as usize], i));

        let n = points.len() as u64;
        grid.lookup = if total <= DENSE_CELLS_PER_POINT * n + DENSE_CELLS_FLOOR {
            let mut starts = vec![0u32; total as usize + 1];
            for &k in &grid.key_of {
                starts[k as usize + 1] += 1;
            }
            for k in 0..total as usize {
                starts[k + 1] += starts[k];
            }
            CellLookup::Dense(starts)
        } else {
            let mut map = HashMap::new();
            let mut pos = 0;
            while pos < order.len() {
                let key = grid.key_of[order[pos] as usize];
                let mut end = pos + 1;
                while end < order.len() && grid.key_of[order[end] as usize] == key {
                    end += 1;
                }
                map.insert(key, (pos as u32, end as u32));
                pos = end;
            }
            CellLookup::Sparse(map)
        };
        grid.order = order;
        Ok(grid)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin
    }

    pub fn cells_per_axis(&self) -> &[u64] {
        &self.cells_per_axis
    }

    pub fn len(&self) -> usize {
        self.key_of.len()
    }

    pub fn is_empty(&self) -> bool {
        self.key_of.is_empty()
    }

    /// Point indices in cell order.
    pub fn order(&self) -> &[u32] {
        &self.order
    }

    /// Cell index of `coord` along `axis`, clamped into the grid.
    #[inline]
    pub fn axis_cell(&self, axis: usize, coord: f64) -> u64 {
        let c = ((coord - self.origin[axis]) / self.cell_size).floor();
        if c <= 0.0 {
            0
        } else {
            (c as u64).min(self.cells_per_axis[axis] - 1)
        }
    }

    fn key_for(&self, p: &[f64]) -> u64 {
        (0..self.dim)
            .map(|a| self.axis_cell(a, p[a]) * self.strides[a])
            .sum()
    }

    fn key_from_cell(&self, cell: &[u64]) -> u64 {
        cell.iter().zip(&self.strides).map(|(c, s)| c * s).sum()
    }

    /// Integer cell coordinates of a key.
    pub fn cell_of_key(&self, mut key: u64) -> Vec<i64> {
        let mut cell = vec![0i64; self.dim];
        for a in 0..self.dim {
            cell[a] = (key / self.strides[a]) as i64;
            key %= self.strides[a];
        }
        cell
    }

    /// Cell of point `i` (original index).
    pub fn cell_of_point(&self, i: usize) -> Vec<i64> {
        self.cell_of_key(self.key_of[i])
    }

    /// Positions in [`order`](Self::order) of the points in the cells
    /// `first..=last`, which must differ only along the last axis.
    #[inline]
    pub fn key_span(&self, first: u64, last: u64) -> Range<usize> {
        match &self.lookup {
            CellLookup::Dense(starts) => {
                starts[first as usize] as usize..starts[last as usize + 1] as usize
            }
            CellLookup::Sparse(map) => {
                let lo = (first..=last).find_map(|k| map.get(&k).map(|s| s.0));
                let hi = (first..=last).rev().find_map(|k| map.get(&k).map(|s| s.1));
                match (lo, hi) {
                    (Some(lo), Some(hi)) => lo as usize..hi as usize,
                    _ => 0..0,
                }
            }
        }
    }

    /// Point indices in the bucket at `cell` (empty if out of range).
    pub fn bucket(&self, cell: &[i64]) -> &[u32] {
        if cell.len() != self.dim
            || cell
                .iter()
                .zip(&self.cells_per_axis)
                .any(|(&c, &n)| c < 0 || c as u64 >= n)
        {
            return &[];
        }
        let cell: Vec<u64> = cell.iter().map(|&c| c as u64).collect();
        let key = self.key_from_cell(&cell);
        &self.order[self.key_span(key, key)]
    }

    /// Non-empty buckets as (cell, point indices), in key order.
    pub fn buckets(&self) -> Vec<(Vec<i64>, &[u32])> {
        let mut out = Vec::new();
        let mut pos = 0;
        while pos < self.order.len() {
            let key = self.key_of[self.order[pos] as usize];
            let mut end = pos + 1;
            while end < self.order.len() && self.key_of[self.order[end] as usize] == key {
                end += 1;
            }
            out.push((self.cell_of_key(key), &self.order[pos..end]));
            pos = end;
        }
        out
    }

    /// Cell range `[lo_cell, hi_cell]` covering the coordinate box `[lo, hi]`.
    pub fn cell_range(&self, lo: &[f64], hi: &[f64], lo_cell: &mut [u64], hi_cell: &mut [u64]) {
        for a in 0..self.dim {
            lo_cell[a] = self.axis_cell(a, lo[a]);
            hi_cell[a] = self.axis_cell(a, hi[a]);
        }
    }

    /// Calls `f(row)` for every combination of leading-axis cells in
    /// `[lo_cell, hi_cell]`; the last entry of `row` is left at `lo_cell`'s.
    pub fn for_each_row(&self, lo_cell: &[u64], hi_cell: &[u64], mut f: impl FnMut(&[u64])) {
        let m = self.dim;
        if m == 0 || (0..m).any(|a| lo_cell[a] > hi_cell[a]) {
            return;
        }
        let mut cell = lo_cell.to_vec();
        loop {
            f(&cell);
            let mut a = m - 1;
            loop {
                if a == 0 {
                    return;
                }
                a -= 1;
                if cell[a] < hi_cell[a] {
                    cell[a] += 1;
                    break;
                }
                cell[a] = lo_cell[a];
            }
        }
    }

    /// Positions in [`order`](Self::order) of the points in row `row` with
    /// last-axis cell in `first..=last`.
    #[inline]
    pub fn row_span(&self, row: &[u64], first: u64, last: u64) -> Range<usize> {
        let base: u64 = row[..self.dim - 1]
            .iter()
            .zip(&self.strides)
            .map(|(c, s)| c * s)
            .sum();
        self.key_span(base + first, base + last)
    }

    /// Visits every axis-aligned run of cells covering `[lo, hi]`, passing the
    /// slice of `order` positions for each run along the last axis.
    pub fn for_each_run_in(&self, lo: &[f64], hi: &[f64], mut f: impl FnMut(Range<usize>)) {
        let m = self.dim;
        if m == 0 {
            return;
        }
        let mut lo_cell = vec![0; m];
        let mut hi_cell = vec![0; m];
        self.cell_range(lo, hi, &mut lo_cell, &mut hi_cell);
        self.for_each_row(&lo_cell, &hi_cell, |row| {
            f(self.row_span(row, lo_cell[m - 1], hi_cell[m - 1]))
        });
    }

    /// Calls `f(i, j)` for every unordered pair of points in the same or
    /// Chebyshev-adjacent cells, each pair once. Indices are original ones.
    pub fn for_each_candidate_pair(&self, mut f: impl FnMut(usize, usize)) {
        let m = self.dim;
        // Lexicographically positive offsets in {-1,0,1}^m.
        let offsets: Vec<Vec<i64>> = all_offsets(m)
            .into_iter()
            .filter(|o| o.iter().find(|&&d| d != 0).is_some_and(|&d| d > 0))
            .collect();
        let mut nb = vec![0i64; m];
        for (cell, pts) in self.buckets() {
            for (k, &i) in pts.iter().enumerate() {
                for &j in &pts[k + 1..] {
                    f(i as usize, j as usize);
                }
            }
            for off in &offsets {
                for a in 0..m {
                    nb[a] = cell[a] + off[a];
                }
                let other = self.bucket(&nb);
                for &i in pts {
                    for &j in other {
                        f(i as usize, j as usize);
                    }
                }
            }
        }
    }
}

fn all_offsets(m: usize) -> Vec<Vec<i64>> {
    let mut out = vec![Vec::new()];
    for _ in 0..m {
        out = out
            .into_iter()
            .flat_map(|o| {
                (-1..=1).map(move |d| {
                    let mut o = o.clone();
                    o.push(d);
                    o
                })
            })
            .collect();
    }
    out
}
