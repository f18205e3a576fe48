//! Lattice averages of grid functions and their interpolants.
//!
//! Two averaging scales appear: per-inclusion means `u^δ_k` over `δ(k+K)`,
//! and block means `u^ε_k` over `ε(k + [0,1)^d) ∩ δE` for a mesoscale `ε ≫ δ`.
//! Integrals become masked-node means, so both are exact on constants. Cells
//! that are not entirely inside the grid box are dropped.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use thiserror::Error;

use crate::geometry::PerforatedSet;
use crate::grid::{Aabb, Grid, GridError, GridFunction};
use crate::{LatticeIndex, Point, MAX_DIM};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InterpolateError {
    #[error("cell {0:?} contains no masked node; refine the grid")]
    EmptyCell(LatticeIndex),
    #[error("mesoscale ε = {epsilon} must be at least 2δ = {}", 2.0 * delta)]
    ScaleRatio { epsilon: f64, delta: f64 },
    #[error("piecewise-affine interpolation is implemented for d ≤ 2, got d = {0}")]
    UnsupportedDimension(usize),
    #[error("averages have dimension {avgs}, grid has {grid}")]
    Dimension { avgs: usize, grid: usize },
    #[error("scale must be positive")]
    Scale,
    #[error(transparent)]
    Grid(#[from] GridError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AverageKind {
    /// Means over single inclusions `δ(k+K)`, anchored at `δk`.
    Inclusion,
    /// Means over blocks `s(k + [0,1)^d) ∩ δE`, anchored at `s(k + 1/2)`.
    Coarse,
}

/// Values indexed by `k ∈ Z^d` at anchors `origin + scale·k`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeAverages {
    pub kind: AverageKind,
    pub scale: f64,
    pub dim: usize,
    /// Anchor of `k = 0`.
    pub origin: Point,
    /// Sorted lexicographically.
    pub indices: Vec<LatticeIndex>,
    pub values: Vec<f64>,
    /// Masked measure (node count × `h^d`) behind each value.
    pub measures: Vec<f64>,
}

impl LatticeAverages {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn get(&self, k: &LatticeIndex) -> Option<f64> {
        self.indices.binary_search(k).ok().map(|i| self.values[i])
    }

    pub fn anchor(&self, k: &LatticeIndex) -> Point {
        let mut p = [0.0; MAX_DIM];
        for a in 0..self.dim {
            p[a] = self.origin[a] + self.scale * k[a] as f64;
        }
        p
    }

    /// Index of the cell `anchor(k) + scale·[-1/2, 1/2)^d` containing `x`.
    pub fn cell_of(&self, x: &[f64]) -> LatticeIndex {
        let mut k = [0; MAX_DIM];
        for a in 0..self.dim {
            k[a] = libm::floor((x[a] - self.origin[a]) / self.scale + 0.5) as i64;
        }
        k
    }

    /// Same indices and anchors, values mapped through `f`.
    pub fn map_values<F: Fn(f64) -> f64>(&self, f: F) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v = f(*v));
        out
    }

    /// Unordered nearest-neighbour pairs `(i, j)` of positions in `indices`.
    pub fn neighbour_pairs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (i, k) in self.indices.iter().enumerate() {
            for a in 0..self.dim {
                let mut n = *k;
                n[a] += 1;
                if let Ok(j) = self.indices.binary_search(&n) {
                    out.push((i, j));
                }
            }
        }
        out
    }
}

/// Per-cell `(first value, Σ (v − first), count)`; the mean
/// `first + Σ/count` is exact on constants.
type Sums = BTreeMap<LatticeIndex, (f64, f64, usize)>;

fn accumulate<F: Fn(&[f64]) -> Option<LatticeIndex>>(u: &GridFunction, cell_of: F) -> Sums {
    let grid = u.grid();
    let d = grid.dim();
    let mut sums = Sums::new();
    for i in 0..grid.len() {
        if !u.mask()[i] {
            continue;
        }
        let x = grid.node(i);
        if let Some(k) = cell_of(&x[..d]) {
            let v = u.values()[i];
            let e = sums.entry(k).or_insert((v, 0.0, 0));
            e.1 += v - e.0;
            e.2 += 1;
        }
    }
    sums
}

fn finish(
    kind: AverageKind,
    scale: f64,
    origin: Point,
    grid: &Grid,
    wanted: Vec<LatticeIndex>,
    sums: &Sums,
) -> Result<LatticeAverages, InterpolateError> {
    let cell = grid.cell_measure();
    let mut values = Vec::with_capacity(wanted.len());
    let mut measures = Vec::with_capacity(wanted.len());
    for k in &wanted {
        match sums.get(k) {
            Some(&(first, dev, n)) if n > 0 => {
                values.push(first + dev / n as f64);
                measures.push(n as f64 * cell);
            }
            _ => return Err(InterpolateError::EmptyCell(*k)),
        }
    }
    Ok(LatticeAverages { kind, scale, dim: grid.dim(), origin, indices: wanted, values, measures })
}

/// `u^δ_k`: mean of the masked values on `δ(k+K)` for each inclusion inside the grid box.
pub fn inclusion_averages(
    u: &GridFunction,
    set: &PerforatedSet,
    delta: f64,
) -> Result<LatticeAverages, InterpolateError> {
    if !(delta > 0.0) {
        return Err(InterpolateError::Scale);
    }
    let grid = u.grid();
    let wanted = set.inclusions_inside(delta, grid.bbox());
    let sums = accumulate(u, |x| set.inclusion_of(x, delta));
    finish(AverageKind::Inclusion, delta, [0.0; MAX_DIM], grid, wanted, &sums)
}

/// Means over the masked part of each inclusion meeting the grid box,
/// including inclusions cut by the boundary.
pub(crate) fn inclusion_means_all(u: &GridFunction, set: &PerforatedSet, delta: f64) -> BTreeMap<LatticeIndex, f64> {
    accumulate(u, |x| set.inclusion_of(x, delta)).into_iter().map(|(k, (first, dev, n))| (k, first + dev / n as f64)).collect()
}

/// Block indices `k` with `shift + side·(k + [0,1)^d) ⊆ bbox`.
fn blocks_inside(bbox: &Aabb, side: f64, shift: &[f64]) -> Vec<LatticeIndex> {
    let d = bbox.dim;
    let mut lo = [0i64; MAX_DIM];
    let mut hi = [0i64; MAX_DIM];
    for a in 0..d {
        lo[a] = libm::ceil((bbox.lo[a] - shift[a]) / side - 1e-9) as i64;
        hi[a] = libm::floor((bbox.hi[a] - shift[a]) / side + 1e-9) as i64 - 1;
        if hi[a] < lo[a] {
            return Vec::new();
        }
    }
    let mut out = Vec::new();
    let mut k = lo;
    'outer: loop {
        out.push(k);
        let mut a = d;
        loop {
            if a == 0 {
                break 'outer;
            }
            a -= 1;
            if k[a] < hi[a] {
                k[a] += 1;
                k[a + 1..d].copy_from_slice(&lo[a + 1..d]);
                break;
            }
        }
    }
    out
}

/// Means of the masked values over blocks `side·(k + [0,1)^d)` inside the grid box.
pub fn block_averages(u: &GridFunction, side: f64) -> Result<LatticeAverages, InterpolateError> {
    block_averages_shifted(u, side, &[0.0; MAX_DIM][..u.grid().dim()])
}

/// Block means over the lattice of blocks translated by `shift`.
pub fn block_averages_shifted(u: &GridFunction, side: f64, shift: &[f64]) -> Result<LatticeAverages, InterpolateError> {
    if !(side > 0.0) {
        return Err(InterpolateError::Scale);
    }
    let grid = u.grid();
    let d = grid.dim();
    let wanted = blocks_inside(grid.bbox(), side, shift);
    let sums = accumulate(u, |x| {
        let mut k = [0; MAX_DIM];
        for a in 0..d {
            k[a] = libm::floor((x[a] - shift[a]) / side) as i64;
        }
        Some(k)
    });
    let mut origin = [0.0; MAX_DIM];
    for a in 0..d {
        origin[a] = shift[a] + 0.5 * side;
    }
    finish(AverageKind::Coarse, side, origin, grid, wanted, &sums)
}

/// `u^ε_k`: block means at the mesoscale `ε ≥ 2δ`.
pub fn coarse_averages(
    u: &GridFunction,
    delta: f64,
    epsilon: f64,
) -> Result<LatticeAverages, InterpolateError> {
    if !(epsilon >= 2.0 * delta) {
        return Err(InterpolateError::ScaleRatio { epsilon, delta });
    }
    block_averages(u, epsilon)
}

fn covered_grid_function<F: Fn(&[f64]) -> Option<f64>>(grid: &Grid, f: F) -> Result<GridFunction, InterpolateError> {
    let d = grid.dim();
    let mut values = Vec::with_capacity(grid.len());
    let mut mask = Vec::with_capacity(grid.len());
    for i in 0..grid.len() {
        let x = grid.node(i);
        match f(&x[..d]) {
            Some(v) => {
                values.push(v);
                mask.push(true);
            }
            None => {
                values.push(0.0);
                mask.push(false);
            }
        }
    }
    Ok(GridFunction::new(grid.clone(), values, mask)?)
}

/// Piecewise-constant extension: each node takes the value of its cell.
/// Nodes outside every retained cell are masked out.
pub fn piecewise_constant(avgs: &LatticeAverages, grid: &Grid) -> Result<GridFunction, InterpolateError> {
    if avgs.dim != grid.dim() {
        return Err(InterpolateError::Dimension { avgs: avgs.dim, grid: grid.dim() });
    }
    covered_grid_function(grid, |x| avgs.get(&avgs.cell_of(x)))
}

/// Affine interpolation on the Kuhn triangle of the unit square containing
/// `(f1, f2)`, split along the main diagonal.
pub fn kuhn_value(v00: f64, v10: f64, v01: f64, v11: f64, f1: f64, f2: f64) -> f64 {
    if f1 >= f2 {
        v00 + f1 * (v10 - v00) + f2 * (v11 - v10)
    } else {
        v00 + f2 * (v01 - v00) + f1 * (v11 - v01)
    }
}

/// Piecewise-affine interpolant of the anchor values: linear in `d = 1`, Kuhn
/// triangles in `d = 2`. Nodes outside every complete lattice cell are masked out.
pub fn kuhn_affine(avgs: &LatticeAverages, grid: &Grid) -> Result<GridFunction, InterpolateError> {
    let d = avgs.dim;
    if d != grid.dim() {
        return Err(InterpolateError::Dimension { avgs: d, grid: grid.dim() });
    }
    if d > 2 {
        return Err(InterpolateError::UnsupportedDimension(d));
    }
    covered_grid_function(grid, |x| {
        let mut base = [0i64; MAX_DIM];
        let mut frac = [0.0; MAX_DIM];
        for a in 0..d {
            let t = (x[a] - avgs.origin[a]) / avgs.scale;
            let f = libm::floor(t);
            base[a] = f as i64;
            frac[a] = t - f;
        }
        let at = |s0: i64, s1: i64| {
            let mut k = base;
            k[0] += s0;
            if d > 1 {
                k[1] += s1;
            }
            avgs.get(&k)
        };
        if d == 1 {
            let (a, b) = (at(0, 0)?, at(1, 0)?);
            return Some(a + frac[0] * (b - a));
        }
        Some(kuhn_value(at(0, 0)?, at(1, 0)?, at(0, 1)?, at(1, 1)?, frac[0], frac[1]))
    })
}

/// `Σ_{|k−k'|=1} s^d ((v_k − v_k')/s)²` over unordered nearest-neighbour pairs.
pub fn discrete_dirichlet(avgs: &LatticeAverages) -> f64 {
    let s = avgs.scale;
    let factor = libm::pow(s, avgs.dim as f64 - 2.0);
    avgs.neighbour_pairs().iter().map(|&(i, j)| { let q = avgs.values[i] - avgs.values[j]; factor * q * q }).sum()
}

/// Lower bounds for the energy obtained by coarse graining at the mesoscale.
#[derive(Debug, Clone, PartialEq)]
pub struct MesoscaleBound {
    /// Side `ε / (1 + √d)` of the blocks, small enough that any two points in
    /// neighbouring blocks are within distance `ε`.
    pub side: f64,
    /// `|K| Σ_{ordered |k−k'|=1} ε^d |u^k − u^k'|² / ε²`.
    pub printed: f64,
    /// `ε^-(d+2) Σ_{ordered |k−k'|=1} m_k m_k' |u^k − u^k'|²` with `m_k` the
    /// masked measure of block `k`; a lower bound by Jensen's inequality
    /// whenever `φ ≥ 1` on the unit ball.
    pub jensen: f64,
    pub averages: LatticeAverages,
}

/// Both mesoscale lower bounds for `u` at kernel scale `ε`.
pub fn mesoscale_bound(
    u: &GridFunction,
    set: &PerforatedSet,
    epsilon: f64,
) -> Result<MesoscaleBound, InterpolateError> {
    let d = u.grid().dim();
    let side = epsilon / (1.0 + libm::sqrt(d as f64));
    let averages = block_averages(u, side)?;
    let mut printed = 0.0;
    let mut jensen = 0.0;
    for (i, j) in averages.neighbour_pairs() {
        let diff = averages.values[i] - averages.values[j];
        let diff2 = diff * diff;
        printed += 2.0 * libm::pow(epsilon, d as f64 - 2.0) * diff2;
        jensen += 2.0 * averages.measures[i] * averages.measures[j] * diff2;
    }
    Ok(MesoscaleBound {
        side,
        printed: set.measure() * printed,
        jensen: jensen / libm::pow(epsilon, d as f64 + 2.0),
        averages,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::InclusionShape;

    fn ball() -> PerforatedSet {
        PerforatedSet::new(InclusionShape::ball(0.25), 2).unwrap()
    }

    #[test]
    fn constants_are_reproduced() {
        let set = ball();
        let grid = Grid::new(Aabb::unit(2), 1.0 / 128.0).unwrap();
        let u = GridFunction::sample(&grid, |_| 1.5, &set, 0.125);
        let inc = inclusion_averages(&u, &set, 0.125).unwrap();
        assert!(!inc.is_empty());
        assert!(inc.values.iter().all(|&v| v == 1.5));
        let coarse = coarse_averages(&u, 0.125, 0.25).unwrap();
        assert_eq!(coarse.len(), 16);
        assert!(coarse.values.iter().all(|&v| v == 1.5));
        assert!(coarse_averages(&u, 0.125, 0.2).is_err());
    }

    #[test]
    fn affine_inclusion_means_sit_at_centers() {
        let set = ball();
        let delta = 0.125;
        let grid = Grid::new(Aabb::unit(2), delta / 32.0).unwrap();
        let u = GridFunction::sample(&grid, |x| 2.0 * x[0] - x[1], &set, delta);
        let inc = inclusion_averages(&u, &set, delta).unwrap();
        for (k, v) in inc.indices.iter().zip(&inc.values) {
            let expect = 2.0 * delta * k[0] as f64 - delta * k[1] as f64;
            assert!((v - expect).abs() < 1e-12, "{k:?}: {v} vs {expect}");
        }
    }

    #[test]
    fn five_node_mean() {
        let set = PerforatedSet::new(InclusionShape::full_cell(1, 1), 1).unwrap();
        let grid = Grid::new(Aabb::new(&[-0.5], &[0.5]), 0.2).unwrap();
        let u = GridFunction::new(grid, alloc::vec![1.0, 2.0, 3.0, 4.0, 5.0], alloc::vec![true; 5]).unwrap();
        let inc = inclusion_averages(&u, &set, 1.0).unwrap();
        assert_eq!(inc.values, alloc::vec![3.0]);
    }

    #[test]
    fn checkerboard_cancels_in_blocks() {
        let set = ball();
        let delta = 0.125;
        let grid = Grid::new(Aabb::unit(2), delta / 16.0).unwrap();
        let u = GridFunction::sample(
            &grid,
            |x| {
                let k = set.cell_index(x, delta);
                if (k[0] + k[1]).rem_euclid(2) == 0 { 1.0 } else { -1.0 }
            },
            &set,
            delta,
        );
        // blocks of side 2δ starting at −δ/2 hold two +1 and two −1 inclusions
        let blocks = block_averages_shifted(&u, 2.0 * delta, &[-0.5 * delta, -0.5 * delta]).unwrap();
        assert_eq!(blocks.len(), 9);
        for v in &blocks.values {
            assert!(v.abs() < 1e-12, "{v}");
        }
    }

    #[test]
    fn kuhn_examples() {
        assert_eq!(kuhn_value(0.0, 0.0, 0.0, 1.0, 0.5, 0.5), 0.5);
        let avgs = LatticeAverages {
            kind: AverageKind::Inclusion,
            scale: 0.25,
            dim: 2,
            origin: [0.0; 3],
            indices: (0..5).flat_map(|i| (0..5).map(move |j| [i, j, 0])).collect(),
            values: (0..5).flat_map(|i| (0..5).map(move |j| 0.7 * 0.25 * i as f64 - 1.3 * 0.25 * j as f64 + 2.0)).collect(),
            measures: alloc::vec![1.0; 25],
        };
        let grid = Grid::new(Aabb::unit(2), 1.0 / 64.0).unwrap();
        let v = kuhn_affine(&avgs, &grid).unwrap();
        for i in 0..grid.len() {
            let x = grid.node(i);
            assert!(v.mask()[i]);
            assert!((v.values()[i] - (0.7 * x[0] - 1.3 * x[1] + 2.0)).abs() < 1e-12);
        }
        let pc = piecewise_constant(&avgs, &grid).unwrap();
        assert_eq!(pc.values()[0], 2.0);
    }

    #[test]
    fn dirichlet_examples() {
        let mut avgs = LatticeAverages {
            kind: AverageKind::Coarse,
            scale: 0.5,
            dim: 2,
            origin: [0.25, 0.25, 0.0],
            indices: alloc::vec![[0, 0, 0], [1, 0, 0]],
            values: alloc::vec![0.0, 3.0],
            measures: alloc::vec![1.0; 2],
        };
        assert_eq!(discrete_dirichlet(&avgs), 9.0);
        avgs.values = alloc::vec![1.0, 1.0];
        assert_eq!(discrete_dirichlet(&avgs), 0.0);
    }

    #[test]
    fn higher_dimensions_rejected() {
        let avgs = LatticeAverages {
            kind: AverageKind::Coarse,
            scale: 0.5,
            dim: 3,
            origin: [0.25; 3],
            indices: alloc::vec![[0, 0, 0]],
            values: alloc::vec![0.0],
            measures: alloc::vec![1.0],
        };
        let grid = Grid::new(Aabb::unit(3), 0.5).unwrap();
        assert_eq!(kuhn_affine(&avgs, &grid), Err(InterpolateError::UnsupportedDimension(3)));
    }
}
