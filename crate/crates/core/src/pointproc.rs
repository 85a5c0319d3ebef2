//! Homogeneous Poisson point processes on axis-aligned boxes.
//!
//! Every replication draws from its own [`RngStream`], derived from a master
//! seed and a stream index with ChaCha's stream counter, so the sample for
//! replication `i` does not depend on which thread ran it or in what order.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Closed axis-aligned box `[lower_0, upper_0] x ... x [lower_{m-1}, upper_{m-1}]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl Aabb {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() {
            return Err(Error::invalid("box must have dimension >= 1"));
        }
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch {
                expected: lower.len(),
                found: upper.len(),
            });
        }
        for (axis, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::invalid(format!(
                    "degenerate box on axis {axis}: [{lo}, {hi}]"
                )));
            }
        }
        Ok(Aabb { lower, upper })
    }

    /// The observation window `[-n/2, n/2]^m`.
    pub fn centered_cube(m: usize, n: f64) -> Result<Self> {
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::invalid(format!(
                "cube side must be positive, got {n}"
            )));
        }
        Aabb::new(vec![-n / 2.0; m], vec![n / 2.0; m])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn width(&self, axis: usize) -> f64 {
        self.upper[axis] - self.lower[axis]
    }

    pub fn volume(&self) -> f64 {
        (0..self.dim()).map(|a| self.width(a)).product()
    }

    /// Euclidean length of the main diagonal.
    pub fn diameter(&self) -> f64 {
        (0..self.dim())
            .map(|a| self.width(a).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// Side length if every edge has the same length.
    pub fn cube_side(&self) -> Option<f64> {
        let side = self.width(0);
        (1..self.dim())
            .all(|a| self.width(a) == side)
            .then_some(side)
    }

    /// Closed inclusion.
    pub fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.dim()
            && p.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(x, (lo, hi))| lo <= x && x <= hi)
    }

    /// Intersection with `other`, or `None` when it has empty interior.
    pub fn intersect(&self, other: &Aabb) -> Option<Aabb> {
        if self.dim() != other.dim() {
            return None;
        }
        let lower: Vec<f64> = self
            .lower
            .iter()
            .zip(&other.lower)
            .map(|(a, b)| a.max(*b))
            .collect();
        let upper: Vec<f64> = self
            .upper
            .iter()
            .zip(&other.upper)
            .map(|(a, b)| a.min(*b))
            .collect();
        Aabb::new(lower, upper).ok()
    }
}

/// Identifies the random stream a sample was drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StreamId {
    pub master_seed: u64,
    pub index: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleMeta {
    /// `None` for hand-built configurations.
    pub intensity: Option<f64>,
    pub bbox: Aabb,
    pub stream: Option<StreamId>,
}

/// Immutable finite point configuration inside a box.
///
/// Coordinates are stored flat, point `i` occupying `coords[i*dim..(i+1)*dim]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    dim: usize,
    coords: Vec<f64>,
    meta: SampleMeta,
}

impl PointSet {
    /// Builds a point set from explicit coordinates; every point must lie in `bbox`.
    pub fn new(bbox: Aabb, points: &[Vec<f64>]) -> Result<Self> {
        let dim = bbox.dim();
        let mut coords = Vec::with_capacity(points.len() * dim);
        for p in points {
            if p.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: p.len(),
                });
            }
            coords.extend_from_slice(p);
        }
        PointSet::from_flat(bbox, coords)
    }

    pub fn from_flat(bbox: Aabb, coords: Vec<f64>) -> Result<Self> {
        let dim = bbox.dim();
        if coords.len() % dim != 0 {
            return Err(Error::invalid(format!(
                "flat coordinate buffer of length {} is not a multiple of dimension {dim}",
                coords.len()
            )));
        }
        for (i, p) in coords.chunks_exact(dim).enumerate() {
            if !bbox.contains(p) {
                return Err(Error::invalid(format!(
                    "point {i} {p:?} lies outside the box"
                )));
            }
        }
        Ok(PointSet {
            dim,
            coords,
            meta: SampleMeta {
                intensity: None,
                bbox,
                stream: None,
            },
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> std::slice::ChunksExact<'_, f64> {
        self.coords.chunks_exact(self.dim)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn bbox(&self) -> &Aabb {
        &self.meta.bbox
    }

    pub fn meta(&self) -> &SampleMeta {
        &self.meta
    }

    /// The points at `indices`, in that order, re-homed in `bbox`.
    pub fn subset(&self, bbox: Aabb, indices: &[usize]) -> Result<PointSet> {
        let mut coords = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            coords.extend_from_slice(self.point(i));
        }
        PointSet::from_flat(bbox, coords)
    }

    /// Multiplies every coordinate and the box by `c > 0`.
    pub fn scaled(&self, c: f64) -> Result<PointSet> {
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::invalid(format!(
                "scale factor must be positive, got {c}"
            )));
        }
        let b = &self.meta.bbox;
        let bbox = Aabb::new(
            b.lower.iter().map(|x| x * c).collect(),
            b.upper.iter().map(|x| x * c).collect(),
        )?;
        PointSet::from_flat(bbox, self.coords.iter().map(|x| x * c).collect())
    }

    /// Reorders points so that new point `k` is old point `perm[k]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<PointSet> {
        if perm.len() != self.len() {
            return Err(Error::invalid(
                "permutation length differs from point count",
            ));
        }
        let mut seen = vec![false; perm.len()];
        for &p in perm {
            if p >= perm.len() || std::mem::replace(&mut seen[p], true) {
                return Err(Error::invalid("not a permutation"));
            }
        }
        let mut out = self.subset(self.meta.bbox.clone(), perm)?;
        out.meta = self.meta.clone();
        Ok(out)
    }

    /// Order-sensitive FNV-1a hash of the raw coordinate bits.
    pub fn coord_hash(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for x in &self.coords {
            for b in x.to_bits().to_le_bytes() {
                h ^= u64::from(b);
                h = h.wrapping_mul(0x0100_0000_01b3);
            }
        }
        h
    }
}

/// Deterministic random stream for one replication.
#[derive(Debug, Clone)]
pub struct RngStream {
    id: StreamId,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn id(&self) -> StreamId {
        self.id
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

/// Stream `index` of `master_seed`: the ChaCha key comes from the master seed
/// and the index selects the ChaCha stream, so streams never overlap.
pub fn derive_stream(master_seed: u64, index: u64) -> RngStream {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    RngStream {
        id: StreamId { master_seed, index },
        rng,
    }
}

/// Samples a homogeneous Poisson process of intensity `lambda` on `bbox`:
/// a Poisson(lambda * volume) count, then independent uniform placement.
pub fn sample_poisson(bbox: &Aabb, lambda: f64, rng: &mut RngStream) -> Result<PointSet> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::invalid(format!(
            "intensity must be positive, got {lambda}"
        )));
    }
    let mean = lambda * bbox.volume();
    if !(mean.is_finite() && mean > 0.0) {
        return Err(Error::invalid(format!(
            "expected point count {mean} is not usable"
        )));
    }
    let count = Poisson::new(mean)
        .map_err(|e| Error::invalid(format!("poisson mean {mean}: {e}")))?
        .sample(rng) as usize;

    let dim = bbox.dim();
    let mut coords = Vec::with_capacity(count * dim);
    for _ in 0..count {
        for axis in 0..dim {
            let u: f64 = rng.random();
            let x = bbox.lower[axis] + u * bbox.width(axis);
            coords.push(x.min(bbox.upper[axis]));
        }
    }
    Ok(PointSet {
        dim,
        coords,
        meta: SampleMeta {
            intensity: Some(lambda),
            bbox: bbox.clone(),
            stream: Some(rng.id()),
        },
    })
}
