//! Localized largest-cluster scores and their coupling with the global score.
//!
//! For a point `x` of a configuration in the cube `[-n/2, n/2]^m`, its window
//! is the cube centred at `x` with half-edge `(theta ln n)^(1/(m-1))`, clipped
//! to the observation box. The localized score is 1 when `x` belongs to the
//! unique largest cluster of the points inside its window; the global score is
//! 1 when `x` belongs to the unique largest cluster of the whole
//! configuration. Window membership is closed on the window boundary.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clusters::{
    find_clusters, top_clusters, ClusterLabeling, DisjointSets, SortedPoints, TopClusters,
};
use crate::error::{Error, Result};
use crate::pointproc::{Aabb, PointSet};

/// Window half-edge `(theta ln n)^(1/(m-1))`.
pub fn half_edge(theta: f64, n: f64, m: usize) -> Result<f64> {
    if m < 2 {
        return Err(Error::invalid(format!("dimension must be >= 2, got {m}")));
    }
    if !(n.is_finite() && n > 1.0) {
        return Err(Error::invalid(format!("box side must exceed 1, got {n}")));
    }
    if !(theta.is_finite() && theta > 0.0) {
        return Err(Error::invalid(format!(
            "theta must be positive, got {theta}"
        )));
    }
    Ok((theta * n.ln()).powf(1.0 / (m as f64 - 1.0)))
}

/// Smallest theta whose window covers the whole box from any centre.
pub fn covering_theta(n: f64, m: usize) -> f64 {
    let diameter = n * (m as f64).sqrt();
    diameter.powf(m as f64 - 1.0) / n.ln()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    pub center: Vec<f64>,
    pub half_edge: f64,
    pub clipped: Aabb,
}

impl Window {
    pub fn unclipped_edge(&self) -> f64 {
        2.0 * self.half_edge
    }

    #[inline]
    pub fn contains(&self, p: &[f64]) -> bool {
        self.clipped.contains(p)
    }
}

fn clip_bounds(x: &[f64], h: f64, bbox: &Aabb, lo: &mut [f64], hi: &mut [f64]) {
    for a in 0..x.len() {
        lo[a] = (x[a] - h).max(bbox.lower()[a]);
        hi[a] = (x[a] + h).min(bbox.upper()[a]);
    }
}

/// Window of `x` inside the cube `bbox` (whose side plays the role of `n`).
pub fn make_window(x: &[f64], theta: f64, bbox: &Aabb) -> Result<Window> {
    let n = bbox
        .cube_side()
        .ok_or_else(|| Error::invalid("windows are defined for cubic boxes only"))?;
    let h = half_edge(theta, n, bbox.dim())?;
    if !bbox.contains(x) {
        return Err(Error::invalid(format!(
            "window centre {x:?} lies outside the box"
        )));
    }
    let m = x.len();
    let (mut lo, mut hi) = (vec![0.0; m], vec![0.0; m]);
    clip_bounds(x, h, bbox, &mut lo, &mut hi);
    Ok(Window {
        center: x.to_vec(),
        half_edge: h,
        clipped: Aabb::new(lo, hi)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CouplingEvent {
    Agree,
    /// Largest cluster inside the window is not unique; `xi_prime` is 0.
    E0,
    /// `xi = 1`, `xi_prime = 0`.
    E1,
    /// `xi = 0`, `xi_prime = 1`.
    E2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScorePair {
    pub xi: bool,
    pub xi_prime: bool,
    pub event: CouplingEvent,
    /// Whether the window's largest cluster is disconnected from the global
    /// largest; `None` when either largest is tied.
    pub e3: Option<bool>,
}

impl ScorePair {
    fn classify(xi: bool, local_unique: bool, in_local_largest: bool, e3: Option<bool>) -> Self {
        let xi_prime = local_unique && in_local_largest;
        let event = match (local_unique, xi, xi_prime) {
            (false, _, _) => CouplingEvent::E0,
            (true, a, b) if a == b => CouplingEvent::Agree,
            (true, true, false) => CouplingEvent::E1,
            (true, _, _) => CouplingEvent::E2,
        };
        ScorePair {
            xi,
            xi_prime,
            event,
            e3,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CouplingReport {
    /// Size of the unique global largest cluster (0 under a global tie).
    pub n_global: u64,
    pub n_local: u64,
    pub mismatch_count: u64,
    pub e0_count: u64,
    pub e1_count: u64,
    pub e2_count: u64,
    /// Classifiable points whose window-largest cluster is disconnected from
    /// the global largest.
    pub e3_count: u64,
    /// E1/E2 points with a classifiable E3 that came out connected.
    pub e12_outside_e3: u64,
}

impl CouplingReport {
    fn add(&mut self, s: &ScorePair) {
        self.n_global += u64::from(s.xi);
        self.n_local += u64::from(s.xi_prime);
        self.mismatch_count += u64::from(s.xi != s.xi_prime);
        match s.event {
            CouplingEvent::Agree => {}
            CouplingEvent::E0 => self.e0_count += 1,
            CouplingEvent::E1 => self.e1_count += 1,
            CouplingEvent::E2 => self.e2_count += 1,
        }
        if s.e3 == Some(true) {
            self.e3_count += 1;
        }
        if matches!(s.event, CouplingEvent::E1 | CouplingEvent::E2) && s.e3 == Some(false) {
            self.e12_outside_e3 += 1;
        }
    }

    fn merge(mut self, o: Self) -> Self {
        self.n_global += o.n_global;
        self.n_local += o.n_local;
        self.mismatch_count += o.mismatch_count;
        self.e0_count += o.e0_count;
        self.e1_count += o.e1_count;
        self.e2_count += o.e2_count;
        self.e3_count += o.e3_count;
        self.e12_outside_e3 += o.e12_outside_e3;
        self
    }
}

/// Reusable per-thread buffers for window clustering.
#[derive(Debug, Default)]
pub struct Scratch {
    epoch: u32,
    mark: Vec<u32>,
    local: Vec<u32>,
    members: Vec<u32>,
    sets: DisjointSets,
    lo: Vec<f64>,
    hi: Vec<f64>,
}

/// Scores points of one configuration against their windows.
///
/// Built once per configuration: sorts points into grid order and caches the
/// forward adjacency lists, so each window only needs a membership pass and a
/// union over cached edges restricted to members.
pub struct LocalScorer<'a> {
    points: &'a PointSet,
    labeling: ClusterLabeling,
    top: TopClusters,
    sorted: SortedPoints,
    /// Sorted position of each original point.
    position: Vec<u32>,
    adj_start: Vec<u32>,
    adj: Vec<u32>,
    /// Symmetric adjacency in sorted positions.
    nbr_start: Vec<u32>,
    nbr: Vec<u32>,
    half_edge: f64,
    /// Block edge in grid cells for [`total`](Self::total); 0 disables blocks.
    block_cells: u64,
}

impl<'a> LocalScorer<'a> {
    pub fn new(points: &'a PointSet, theta: f64, r: f64) -> Result<Self> {
        let labeling = find_clusters(points, r)?;
        Self::with_labeling(points, labeling, theta, r)
    }

    /// Uses a precomputed global labeling of `points` at radius `r`.
    pub fn with_labeling(
        points: &'a PointSet,
        labeling: ClusterLabeling,
        theta: f64,
        r: f64,
    ) -> Result<Self> {
        if labeling.len() != points.len() {
            return Err(Error::invalid("labeling does not match point set"));
        }
        let n = points
            .bbox()
            .cube_side()
            .ok_or_else(|| Error::invalid("windows are defined for cubic boxes only"))?;
        let half_edge = half_edge(theta, n, points.dim())?;
        let sorted = SortedPoints::new(points, r)?;

        let len = points.len();
        let mut position = vec![0u32; len];
        for (k, &i) in sorted.grid.order().iter().enumerate() {
            position[i as usize] = k as u32;
        }
        let mut degree = vec![0u32; len + 1];
        let mut pairs = Vec::new();
        sorted.for_each_close_pair(r, |a, b| {
            degree[a + 1] += 1;
            pairs.push((a as u32, b as u32));
        });
        for k in 0..len {
            degree[k + 1] += degree[k];
        }
        let mut nbr_start = vec![0u32; len + 1];
        for &(a, b) in &pairs {
            nbr_start[a as usize + 1] += 1;
            nbr_start[b as usize + 1] += 1;
        }
        for k in 0..len {
            nbr_start[k + 1] += nbr_start[k];
        }
        let mut fill = nbr_start.clone();
        let mut nbr = vec![0u32; pairs.len() * 2];
        for &(a, b) in &pairs {
            nbr[fill[a as usize] as usize] = b;
            fill[a as usize] += 1;
            nbr[fill[b as usize] as usize] = a;
            fill[b as usize] += 1;
        }
        // for_each_close_pair emits pairs grouped by ascending `a`
        let adj = pairs.into_iter().map(|(_, b)| b).collect();
        let block_cells = default_block_cells(half_edge, r, len, &sorted);

        let top = top_clusters(&labeling);
        Ok(LocalScorer {
            points,
            labeling,
            top,
            sorted,
            position,
            adj_start: degree,
            adj,
            nbr_start,
            nbr,
            half_edge,
            block_cells,
        })
    }

    pub fn labeling(&self) -> &ClusterLabeling {
        &self.labeling
    }

    pub fn top(&self) -> TopClusters {
        self.top
    }

    pub fn half_edge(&self) -> f64 {
        self.half_edge
    }

    pub fn scratch(&self) -> Scratch {
        Scratch {
            mark: vec![0; self.points.len()],
            local: vec![0; self.points.len()],
            lo: vec![0.0; self.points.dim()],
            hi: vec![0.0; self.points.dim()],
            ..Scratch::default()
        }
    }

    fn in_global_largest(&self, i: usize) -> bool {
        self.top.largest_unique && Some(self.labeling.component_of()[i]) == self.top.largest_id
    }

    pub fn score(&self, x_index: usize, s: &mut Scratch) -> Result<ScorePair> {
        if x_index >= self.points.len() {
            return Err(Error::IndexOutOfRange {
                index: x_index,
                len: self.points.len(),
            });
        }
        if s.mark.len() != self.points.len() {
            *s = self.scratch();
        }
        s.epoch = s.epoch.wrapping_add(1);
        if s.epoch == 0 {
            s.mark.fill(0);
            s.epoch = 1;
        }
        let epoch = s.epoch;

        let x = self.points.point(x_index);
        clip_bounds(x, self.half_edge, self.points.bbox(), &mut s.lo, &mut s.hi);

        s.members.clear();
        {
            let Scratch {
                mark,
                local,
                members,
                lo,
                hi,
                ..
            } = s;
            let sorted = &self.sorted;
            sorted.grid.for_each_run_in(lo, hi, |run| {
                for k in run {
                    let p = sorted.point(k);
                    if p.iter()
                        .zip(lo.iter().zip(hi.iter()))
                        .all(|(v, (l, h))| l <= v && v <= h)
                    {
                        mark[k] = epoch;
                        local[k] = members.len() as u32;
                        members.push(k as u32);
                    }
                }
            });
        }

        s.sets.reset(s.members.len());
        for (li, &k) in s.members.iter().enumerate() {
            let k = k as usize;
            for &nb in &self.adj[self.adj_start[k] as usize..self.adj_start[k + 1] as usize] {
                if s.mark[nb as usize] == epoch {
                    s.sets.union(li as u32, s.local[nb as usize]);
                }
            }
        }

        let mut best_root = u32::MAX;
        let mut best_size = 0u32;
        let mut ties = 0usize;
        for li in 0..s.members.len() as u32 {
            if s.sets.is_root(li) {
                let sz = s.sets.root_size(li);
                if sz > best_size {
                    best_size = sz;
                    best_root = li;
                    ties = 1;
                } else if sz == best_size {
                    ties += 1;
                }
            }
        }
        let local_unique = ties == 1;
        let x_local = s.local[self.position[x_index] as usize];
        let in_local_largest = s.sets.find(x_local) == best_root;

        let e3 = if local_unique && self.top.largest_unique {
            // The window's largest cluster is connected, so it lies inside a
            // single global cluster; it is at distance >= r from the global
            // largest exactly when that cluster is a different one.
            let rep = self.sorted.grid.order()[s.members[best_root as usize] as usize] as usize;
            Some(!self.in_global_largest(rep))
        } else {
            None
        };

        Ok(ScorePair::classify(
            self.in_global_largest(x_index),
            local_unique,
            in_local_largest,
            e3,
        ))
    }

    /// Block edge in grid cells used by [`total`](Self::total); 0 means every
    /// window is clustered from scratch.
    pub fn block_cells(&self) -> u64 {
        self.block_cells
    }

    /// Overrides the block edge; 0 disables block sharing.
    pub fn set_block_cells(&mut self, cells: u64) {
        let fits = cells as f64 * self.sorted.grid.cell_size() <= self.half_edge;
        self.block_cells = if fits { cells } else { 0 };
    }

    /// Scores of every point, indexed like the point set.
    pub fn score_all(&self) -> Vec<ScorePair> {
        let mut out = vec![None; self.points.len()];
        let parts: Vec<Vec<(usize, ScorePair)>> = self
            .blocks()
            .par_iter()
            .map_init(
                || (self.scratch(), BlockScratch::default()),
                |(s, b), block| {
                    let mut v = Vec::with_capacity(block.len());
                    self.score_block(block, s, b, |i, p| v.push((i, p)));
                    v
                },
            )
            .collect();
        for (i, p) in parts.into_iter().flatten() {
            out[i] = Some(p);
        }
        out.into_iter()
            .map(|p| p.expect("every point scored"))
            .collect()
    }

    /// Aggregates scores over every point. Runs on the current rayon pool;
    /// the result does not depend on the number of threads.
    pub fn total(&self) -> CouplingReport {
        self.blocks()
            .par_iter()
            .fold(
                || {
                    (
                        self.scratch(),
                        BlockScratch::default(),
                        CouplingReport::default(),
                    )
                },
                |(mut s, mut b, mut rep), block| {
                    self.score_block(block, &mut s, &mut b, |_, p| rep.add(&p));
                    (s, b, rep)
                },
            )
            .map(|(_, _, rep)| rep)
            .reduce(CouplingReport::default, CouplingReport::merge)
    }

    /// Sorted positions grouped into cubes of `block_cells` grid cells.
    fn blocks(&self) -> Vec<Vec<u32>> {
        let len = self.points.len();
        if self.block_cells == 0 {
            return (0..len as u32)
                .collect::<Vec<_>>()
                .chunks(256)
                .map(<[u32]>::to_vec)
                .collect();
        }
        let grid = &self.sorted.grid;
        let m = self.points.dim();
        let b = self.block_cells;
        let per_axis: Vec<u64> = grid
            .cells_per_axis()
            .iter()
            .map(|c| c.div_ceil(b))
            .collect();
        let mut keyed: Vec<(u64, u32)> = (0..len)
            .map(|k| {
                let p = self.sorted.point(k);
                let key = (0..m).fold(0u64, |acc, a| {
                    acc * per_axis[a] + grid.axis_cell(a, p[a]) / b
                });
                (key, k as u32)
            })
            .collect();
        keyed.sort_unstable();
        keyed
            .chunk_by(|x, y| x.0 == y.0)
            .map(|c| c.iter().map(|&(_, k)| k).collect())
            .collect()
    }

    fn score_block(
        &self,
        block: &[u32],
        s: &mut Scratch,
        b: &mut BlockScratch,
        mut emit: impl FnMut(usize, ScorePair),
    ) {
        let order = self.sorted.grid.order();
        if self.block_cells == 0 || !self.build_base(block, b) {
            for &k in block {
                let i = order[k as usize] as usize;
                emit(i, self.score(i, s).expect("index in range"));
            }
            return;
        }
        for &k in block {
            let i = order[k as usize] as usize;
            emit(i, self.score_with_base(k as usize, b));
        }
    }

    /// Clusters the box shared by the windows of every point in `block`.
    /// Returns false when the block is too wide for that box to exist.
    fn build_base(&self, block: &[u32], b: &mut BlockScratch) -> bool {
        let m = self.points.dim();
        let len = self.points.len();
        let bbox = self.points.bbox();
        let h = self.half_edge;
        if b.inner_mark.len() != len {
            *b = BlockScratch {
                inner_mark: vec![0; len],
                inner_local: vec![0; len],
                shell_mark: vec![0; len],
                shell_local: vec![0; len],
                ..BlockScratch::default()
            };
        }
        b.lo.resize(m, 0.0);
        b.hi.resize(m, 0.0);
        b.wlo.resize(m, 0.0);
        b.whi.resize(m, 0.0);
        b.cell_lo.resize(m, 0);
        b.cell_hi.resize(m, 0);
        b.int_lo.resize(m, 0);
        b.int_hi.resize(m, 0);

        let first = self.sorted.point(block[0] as usize);
        b.lo.copy_from_slice(first);
        b.hi.copy_from_slice(first);
        for &k in &block[1..] {
            for (a, &v) in self.sorted.point(k as usize).iter().enumerate() {
                b.lo[a] = b.lo[a].min(v);
                b.hi[a] = b.hi[a].max(v);
            }
        }
        for a in 0..m {
            let (bl, bh) = (b.lo[a], b.hi[a]);
            b.lo[a] = (bh - h).max(bbox.lower()[a]);
            b.hi[a] = (bl + h).min(bbox.upper()[a]);
            if b.lo[a] > bl || b.hi[a] < bh {
                return false;
            }
        }

        b.epoch = next_epoch(&mut b.epoch, &mut b.inner_mark);
        let epoch = b.epoch;
        b.inner.clear();
        {
            let BlockScratch {
                inner_mark,
                inner_local,
                inner,
                lo,
                hi,
                ..
            } = b;
            let sorted = &self.sorted;
            sorted.grid.for_each_run_in(lo, hi, |run| {
                for k in run {
                    if in_box(sorted.point(k), lo, hi) {
                        inner_mark[k] = epoch;
                        inner_local[k] = inner.len() as u32;
                        inner.push(k as u32);
                    }
                }
            });
        }
        b.sets.reset(b.inner.len());
        for (li, &k) in b.inner.iter().enumerate() {
            let k = k as usize;
            for &nb in &self.adj[self.adj_start[k] as usize..self.adj_start[k + 1] as usize] {
                if b.inner_mark[nb as usize] == epoch {
                    b.sets.union(li as u32, b.inner_local[nb as usize]);
                }
            }
        }

        // number the base components and record a size and representative
        b.comp_of.clear();
        b.comp_size.clear();
        b.comp_rep.clear();
        b.comp_of.resize(b.inner.len(), u32::MAX);
        for li in 0..b.inner.len() as u32 {
            if b.sets.is_root(li) {
                b.comp_of[li as usize] = b.comp_size.len() as u32;
                b.comp_size.push(b.sets.root_size(li));
                b.comp_rep.push(b.inner[li as usize]);
            }
        }
        for li in 0..b.inner.len() as u32 {
            let root = b.sets.find(li);
            b.comp_of[li as usize] = b.comp_of[root as usize];
        }
        b.by_size.clear();
        b.by_size.extend(0..b.comp_size.len() as u32);
        let sizes = &b.comp_size;
        b.by_size
            .sort_unstable_by(|x, y| sizes[*y as usize].cmp(&sizes[*x as usize]).then(x.cmp(y)));
        b.comp_mark.clear();
        b.comp_mark.resize(b.comp_size.len(), 0);
        b.comp_node.resize(b.comp_size.len(), 0);

        // cells lying wholly inside the shared box, one cell of margin
        let grid = &self.sorted.grid;
        let (r, origin) = (grid.cell_size(), grid.origin());
        for a in 0..m {
            let lo_c = ((b.lo[a] - origin[a]) / r).ceil() + 1.0;
            let hi_c = ((b.hi[a] - origin[a]) / r).floor() - 2.0;
            if lo_c > hi_c || hi_c < 0.0 {
                b.int_lo[a] = 1;
                b.int_hi[a] = 0;
            } else {
                b.int_lo[a] = lo_c.max(0.0) as u64;
                b.int_hi[a] = hi_c as u64;
            }
        }
        true
    }

    /// Score of sorted position `k` from the shared base of its block: only
    /// points between the shared box and the window are visited.
    fn score_with_base(&self, k: usize, b: &mut BlockScratch) -> ScorePair {
        let m = self.points.dim();
        let order = self.sorted.grid.order();
        let grid = &self.sorted.grid;
        let base_epoch = b.epoch;
        b.shell_epoch = next_epoch(&mut b.shell_epoch, &mut b.shell_mark);
        let se = b.shell_epoch;
        if se == 1 {
            b.comp_mark.fill(0);
        }

        clip_bounds(
            self.sorted.point(k),
            self.half_edge,
            self.points.bbox(),
            &mut b.wlo,
            &mut b.whi,
        );
        b.nodes.reset(0);
        b.node_point.clear();
        b.shell.clear();
        b.touched.clear();
        {
            let BlockScratch {
                inner_mark,
                shell_mark,
                shell_local,
                shell,
                nodes,
                node_point,
                wlo,
                whi,
                cell_lo,
                cell_hi,
                int_lo,
                int_hi,
                ..
            } = b;
            grid.cell_range(wlo, whi, cell_lo, cell_hi);
            let sorted = &self.sorted;
            let mut visit = |run: std::ops::Range<usize>| {
                for q in run {
                    if inner_mark[q] == base_epoch || !in_box(sorted.point(q), wlo, whi) {
                        continue;
                    }
                    shell_mark[q] = se;
                    shell_local[q] = nodes.push(1);
                    node_point.push(q as u32);
                    shell.push(q as u32);
                }
            };
            grid.for_each_row(cell_lo, cell_hi, |row| {
                let interior_row = (0..m - 1).all(|a| int_lo[a] <= row[a] && row[a] <= int_hi[a]);
                let (first, last) = (cell_lo[m - 1], cell_hi[m - 1]);
                let (il, ih) = (int_lo[m - 1], int_hi[m - 1]);
                if interior_row && il <= ih && first <= ih && il <= last {
                    if first < il {
                        visit(grid.row_span(row, first, il - 1));
                    }
                    if ih < last {
                        visit(grid.row_span(row, ih + 1, last));
                    }
                } else {
                    visit(grid.row_span(row, first, last));
                }
            });
        }

        for si in 0..b.shell.len() {
            let q = b.shell[si] as usize;
            let node = b.shell_local[q];
            for &nb in &self.nbr[self.nbr_start[q] as usize..self.nbr_start[q + 1] as usize] {
                let nb = nb as usize;
                if b.inner_mark[nb] == base_epoch {
                    let c = b.comp_of[b.inner_local[nb] as usize] as usize;
                    if b.comp_mark[c] != se {
                        b.comp_mark[c] = se;
                        b.comp_node[c] = b.nodes.push(b.comp_size[c]);
                        b.node_point.push(b.comp_rep[c]);
                        b.touched.push(c as u32);
                    }
                    b.nodes.union(node, b.comp_node[c]);
                } else if nb > q && b.shell_mark[nb] == se {
                    b.nodes.union(node, b.shell_local[nb]);
                }
            }
        }

        // largest among merged nodes and untouched base components
        #[derive(PartialEq, Clone, Copy)]
        enum Best {
            Node(u32),
            Base(u32),
        }
        let mut best = Best::Base(u32::MAX);
        let mut best_size = 0u32;
        let mut ties = 0usize;
        let mut consider = |cand: Best, sz: u32, best: &mut Best| {
            if sz > best_size {
                best_size = sz;
                *best = cand;
                ties = 1;
            } else if sz == best_size {
                ties += 1;
            }
        };
        for node in 0..b.nodes.len() as u32 {
            if b.nodes.is_root(node) {
                consider(Best::Node(node), b.nodes.root_size(node), &mut best);
            }
        }
        let mut seen = 0;
        for &c in &b.by_size {
            if b.comp_mark[c as usize] == se {
                continue;
            }
            consider(Best::Base(c), b.comp_size[c as usize], &mut best);
            seen += 1;
            if seen == 2 {
                break;
            }
        }
        let local_unique = ties == 1;

        let cx = b.comp_of[b.inner_local[k] as usize];
        let x_best = if b.comp_mark[cx as usize] == se {
            Best::Node(b.nodes.find(b.comp_node[cx as usize]))
        } else {
            Best::Base(cx)
        };
        let in_local_largest = x_best == best;

        let e3 = if local_unique && self.top.largest_unique {
            let rep = match best {
                Best::Node(node) => b.node_point[node as usize],
                Best::Base(c) => b.comp_rep[c as usize],
            };
            Some(!self.in_global_largest(order[rep as usize] as usize))
        } else {
            None
        };
        ScorePair::classify(
            self.in_global_largest(order[k] as usize),
            local_unique,
            in_local_largest,
            e3,
        )
    }
}

/// Buffers for block-shared window clustering.
#[derive(Debug, Default)]
struct BlockScratch {
    epoch: u32,
    inner_mark: Vec<u32>,
    inner_local: Vec<u32>,
    inner: Vec<u32>,
    sets: DisjointSets,
    comp_of: Vec<u32>,
    comp_size: Vec<u32>,
    comp_rep: Vec<u32>,
    by_size: Vec<u32>,
    shell_epoch: u32,
    shell_mark: Vec<u32>,
    shell_local: Vec<u32>,
    shell: Vec<u32>,
    comp_mark: Vec<u32>,
    comp_node: Vec<u32>,
    touched: Vec<u32>,
    nodes: DisjointSets,
    node_point: Vec<u32>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    wlo: Vec<f64>,
    whi: Vec<f64>,
    cell_lo: Vec<u64>,
    cell_hi: Vec<u64>,
    int_lo: Vec<u64>,
    int_hi: Vec<u64>,
}

fn next_epoch(epoch: &mut u32, marks: &mut [u32]) -> u32 {
    *epoch = epoch.wrapping_add(1);
    if *epoch == 0 {
        marks.fill(0);
        *epoch = 1;
    }
    *epoch
}

#[inline]
fn in_box(p: &[f64], lo: &[f64], hi: &[f64]) -> bool {
    p.iter()
        .zip(lo.iter().zip(hi))
        .all(|(v, (l, h))| l <= v && v <= h)
}

/// Block edge balancing the per-block base against the per-point shell.
fn default_block_cells(h: f64, r: f64, len: usize, sorted: &SortedPoints) -> u64 {
    let max_cells = (h / r).floor();
    if max_cells < 1.0 || len == 0 {
        return 0;
    }
    let cells: f64 = sorted
        .grid
        .cells_per_axis()
        .iter()
        .map(|&c| c as f64)
        .product();
    let per_cell = (len as f64 / cells).max(1e-3);
    let m = sorted.grid.dim() as f64;
    let b = ((h / r) / per_cell).powf(1.0 / (m + 1.0)).round();
    b.clamp(1.0, max_cells) as u64
}

/// Localized score of one point. Computes the global labeling when not given.
pub fn local_score(
    x_index: usize,
    points: &PointSet,
    theta: f64,
    r: f64,
    labeling: Option<&ClusterLabeling>,
) -> Result<ScorePair> {
    let scorer = match labeling {
        Some(l) => LocalScorer::with_labeling(points, l.clone(), theta, r)?,
        None => LocalScorer::new(points, theta, r)?,
    };
    let mut s = scorer.scratch();
    scorer.score(x_index, &mut s)
}

/// Sum of localized scores together with the per-point coupling counts.
pub fn localized_total(points: &PointSet, theta: f64, r: f64) -> Result<CouplingReport> {
    Ok(LocalScorer::new(points, theta, r)?.total())
}

/// Disconnection of the window-largest cluster of `x` from the global
/// largest; `None` when either is not unique.
pub fn classify_e3(x_index: usize, points: &PointSet, theta: f64, r: f64) -> Result<Option<bool>> {
    Ok(local_score(x_index, points, theta, r, None)?.e3)
}
