//! Uniform cell-centered lattices over a box and grid functions with a
//! membership mask for `Ω ∩ δE`.
//!
//! Nodes sit at cell centers `lo + (i + 1/2) h`, each carrying weight `h^d`
//! (midpoint rule). Node `(i_0, .., i_{d-1})` is stored at linear index
//! `Σ i_a s_a` with axis 0 fastest.

use alloc::vec::Vec;
use thiserror::Error;

use crate::geometry::PerforatedSet;
use crate::{Point, MAX_DIM};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GridError {
    #[error("box dimension must be 1, 2 or 3 with lo < hi on every axis")]
    InvalidBox,
    #[error("grid spacing must be positive and finite, got {0}")]
    Spacing(f64),
    #[error("box side {side} on axis {axis} is not an integer multiple of h = {h}")]
    NotAligned { axis: usize, side: f64, h: f64 },
    #[error("grid functions live on different grids")]
    Mismatch,
    #[error("expected {expected} values, got {got}")]
    Length { expected: usize, got: usize },
    #[error("grid spacing h = {h} exceeds the resolution limit {limit}")]
    Resolution { h: f64, limit: f64 },
    #[error("non-finite value at masked node {0}")]
    NonFinite(usize),
}

/// Axis-aligned box `Π [lo_a, hi_a]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub lo: Point,
    pub hi: Point,
    pub dim: usize,
}

impl Aabb {
    /// Panics if the slices differ in length or have length outside `1..=3`.
    pub fn new(lo: &[f64], hi: &[f64]) -> Self {
        assert!(lo.len() == hi.len() && (1..=MAX_DIM).contains(&lo.len()));
        Self { lo: crate::point_from_slice(lo), hi: crate::point_from_slice(hi), dim: lo.len() }
    }

    pub fn unit(dim: usize) -> Self {
        Self::new(&[0.0; MAX_DIM][..dim], &[1.0; MAX_DIM][..dim])
    }

    /// The empty box.
    pub fn empty(dim: usize) -> Self {
        Self::new(&[0.0; MAX_DIM][..dim], &[0.0; MAX_DIM][..dim])
    }

    pub fn is_empty(&self) -> bool {
        (0..self.dim).any(|a| self.hi[a] <= self.lo[a])
    }

    pub fn volume(&self) -> f64 {
        (0..self.dim).map(|a| (self.hi[a] - self.lo[a]).max(0.0)).product()
    }

    /// Half-open membership `lo ≤ x < hi`, so adjacent boxes partition space.
    pub fn contains(&self, x: &[f64]) -> bool {
        (0..self.dim).all(|a| x[a] >= self.lo[a] && x[a] < self.hi[a])
    }

    /// The box shrunk by `margin` on every side.
    pub fn shrink(&self, margin: f64) -> Self {
        let mut b = *self;
        for a in 0..self.dim {
            b.lo[a] += margin;
            b.hi[a] -= margin;
        }
        b
    }

    /// Whether `self ⊆ other`.
    pub fn is_inside(&self, other: &Aabb) -> bool {
        (0..self.dim).all(|a| self.lo[a] >= other.lo[a] && self.hi[a] <= other.hi[a])
    }
}

/// Uniform lattice of cell-centered nodes over a box.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    bbox: Aabb,
    h: f64,
    n: [usize; MAX_DIM],
}

impl Grid {
    pub fn new(bbox: Aabb, h: f64) -> Result<Self, GridError> {
        if bbox.dim == 0 || bbox.dim > MAX_DIM || bbox.is_empty() {
            return Err(GridError::InvalidBox);
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(GridError::Spacing(h));
        }
        let mut n = [1; MAX_DIM];
        for a in 0..bbox.dim {
            let side = bbox.hi[a] - bbox.lo[a];
            let cells = libm::round(side / h);
            if cells < 1.0 || libm::fabs(cells * h - side) > 1e-9 * side {
                return Err(GridError::NotAligned { axis: a, side, h });
            }
            n[a] = cells as usize;
        }
        Ok(Self { bbox, h, n })
    }

    pub fn bbox(&self) -> &Aabb {
        &self.bbox
    }

    pub fn dim(&self) -> usize {
        self.bbox.dim
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    /// Nodes per axis.
    pub fn shape(&self) -> [usize; MAX_DIM] {
        self.n
    }

    pub fn len(&self) -> usize {
        self.n[..self.dim()].iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Weight `h^d` of one node.
    pub fn cell_measure(&self) -> f64 {
        libm::pow(self.h, self.dim() as f64)
    }

    pub fn multi_index(&self, idx: usize) -> [usize; MAX_DIM] {
        let mut out = [0; MAX_DIM];
        let mut rest = idx;
        for a in 0..self.dim() {
            out[a] = rest % self.n[a];
            rest /= self.n[a];
        }
        out
    }

    pub fn linear_index(&self, mi: &[usize]) -> usize {
        let mut idx = 0;
        let mut stride = 1;
        for a in 0..self.dim() {
            idx += mi[a] * stride;
            stride *= self.n[a];
        }
        idx
    }

    pub fn node_from_multi(&self, mi: &[usize]) -> Point {
        let mut p = [0.0; MAX_DIM];
        for a in 0..self.dim() {
            p[a] = self.bbox.lo[a] + (mi[a] as f64 + 0.5) * self.h;
        }
        p
    }

    pub fn node(&self, idx: usize) -> Point {
        self.node_from_multi(&self.multi_index(idx))
    }

    /// Enforces `h ≤ δ c_min / 4`, with `c_min` the smallest half-width of `K`.
    pub fn check_resolution(&self, set: &PerforatedSet, delta: f64) -> Result<(), GridError> {
        let limit = delta * set.shape().min_half_width(set.dim()) / 4.0;
        if self.h > limit * (1.0 + 1e-12) {
            return Err(GridError::Resolution { h: self.h, limit });
        }
        Ok(())
    }
}

/// Values on a grid together with the mask of nodes in `Ω ∩ δE`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Grid,
    values: Vec<f64>,
    mask: Vec<bool>,
}

impl GridFunction {
    pub fn new(grid: Grid, values: Vec<f64>, mask: Vec<bool>) -> Result<Self, GridError> {
        let n = grid.len();
        for len in [values.len(), mask.len()] {
            if len != n {
                return Err(GridError::Length { expected: n, got: len });
            }
        }
        if let Some(i) = (0..n).find(|&i| mask[i] && !values[i].is_finite()) {
            return Err(GridError::NonFinite(i));
        }
        Ok(Self { grid, values, mask })
    }

    /// Samples `f` at every node and masks the nodes lying in `δE`.
    pub fn sample<F: Fn(&[f64]) -> f64>(grid: &Grid, f: F, set: &PerforatedSet, delta: f64) -> Self {
        let d = grid.dim();
        let mut values = Vec::with_capacity(grid.len());
        let mut mask = Vec::with_capacity(grid.len());
        for i in 0..grid.len() {
            let x = grid.node(i);
            values.push(f(&x[..d]));
            mask.push(set.contains(&x[..d], delta));
        }
        Self { grid: grid.clone(), values, mask }
    }

    /// Samples `f` with every node masked in.
    pub fn sample_unmasked<F: Fn(&[f64]) -> f64>(grid: &Grid, f: F) -> Self {
        let d = grid.dim();
        let values = (0..grid.len()).map(|i| f(&grid.node(i)[..d])).collect();
        Self { grid: grid.clone(), values, mask: alloc::vec![true; grid.len()] }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    /// Same mask, new values.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self, GridError> {
        Self::new(self.grid.clone(), values, self.mask.clone())
    }

    /// Same values, new mask.
    pub fn with_mask(&self, mask: Vec<bool>) -> Result<Self, GridError> {
        Self::new(self.grid.clone(), self.values.clone(), mask)
    }

    pub fn masked_count(&self) -> usize {
        self.mask.iter().filter(|&&b| b).count()
    }

    /// Fraction of nodes that are masked in.
    pub fn mask_fraction(&self) -> f64 {
        self.masked_count() as f64 / self.grid.len() as f64
    }

    fn in_region(&self, i: usize, region: Option<&Aabb>) -> bool {
        self.mask[i] && region.is_none_or(|r| r.contains(&self.grid.node(i)[..self.grid.dim()]))
    }

    /// `Σ_{masked nodes in region} f(u) h^d`.
    pub fn masked_integral_with<F: Fn(f64) -> f64>(&self, region: Option<&Aabb>, f: F) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.values.len() {
            if self.in_region(i, region) {
                acc += f(self.values[i]);
            }
        }
        acc * self.grid.cell_measure()
    }

    pub fn masked_integral(&self, region: Option<&Aabb>) -> f64 {
        self.masked_integral_with(region, |v| v)
    }

    /// Measure of the masked region, `Σ_{masked} h^d`.
    pub fn masked_measure(&self, region: Option<&Aabb>) -> f64 {
        self.masked_integral_with(region, |_| 1.0)
    }

    /// `√(Σ_{masked nodes in region} (u − v)² h^d)`; `v`'s mask is ignored.
    pub fn masked_l2_distance(&self, other: &GridFunction, region: Option<&Aabb>) -> Result<f64, GridError> {
        if self.grid != other.grid {
            return Err(GridError::Mismatch);
        }
        let mut acc = 0.0;
        for i in 0..self.values.len() {
            if self.in_region(i, region) {
                let diff = self.values[i] - other.values[i];
                acc += diff * diff;
            }
        }
        Ok(libm::sqrt(acc * self.grid.cell_measure()))
    }

    /// `√(Σ_{masked nodes in region} u² h^d)`.
    pub fn masked_l2_norm(&self, region: Option<&Aabb>) -> f64 {
        libm::sqrt(self.masked_integral_with(region, |v| v * v))
    }
}
