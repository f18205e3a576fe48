//! Periodic perforated sets `E = K + Z^d` and their connectivity thresholds.
//!
//! `K` is described in cell-centered coordinates: it sits inside the cube
//! `[-1/2, 1/2]^d` and the inclusion with index `k` is `k + K`. Two numbers
//! summarize how the inclusions see each other:
//!
//! * `D₀ = min_{k≠0} dist(K, K+k)`, the closest approach of two inclusions;
//! * `D = inf{r : E + B_{r/2} is connected}`, the smallest interaction range
//!   linking every inclusion to every other one.
//!
//! `D` is computed exactly from the finite list of translation distances: the
//! fattened set is connected precisely when the translations with
//! `dist(K, K+k) < r` generate `Z^d` as a group.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::f64::consts::PI;
use thiserror::Error;

use crate::grid::Aabb;
use crate::lattice::IntLattice;
use crate::unionfind::UnionFind;
use crate::{LatticeIndex, Point, MAX_DIM};

/// Default half-width of the translation search window `|k|_∞ ≤ 2`.
pub const DEFAULT_WINDOW: i64 = 2;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("invalid inclusion shape: {0}")]
    InvalidShape(&'static str),
    #[error("ball radius c = {0} violates 0 < c < 1/2")]
    BallRadius(f64),
    #[error("ellipse semi-axis c[{axis}] = {value} violates 0 < c < 1/2")]
    EllipseAxis { axis: usize, value: f64 },
    #[error("dimension mismatch: shape has {shape}, set has {set}")]
    Dimension { shape: usize, set: usize },
    #[error("translation k = 0 has no inclusion distance")]
    ZeroTranslation,
    #[error("scale parameters must be positive")]
    NonPositiveScale,
}

/// The inclusion `K`.
#[derive(Debug, Clone, PartialEq)]
pub enum InclusionShape {
    /// Closed ball of radius `c < 1/2` centered at the origin.
    Ball { c: f64 },
    /// Closed axis-aligned ellipsoid with semi-axes `c_i < 1/2`.
    Ellipse { semi_axes: Vec<f64> },
    /// Union of closed raster cells of side `1/m` on `[-1/2, 1/2]^d`; cell
    /// `(j_0, .., j_{d-1})` is stored at `Σ j_a m^a`. A mask may fill the whole
    /// cell, which models `E = R^d`.
    Mask { m: usize, dim: usize, cells: Vec<bool> },
}

impl InclusionShape {
    pub fn ball(c: f64) -> Self {
        Self::Ball { c }
    }

    pub fn ellipse(semi_axes: &[f64]) -> Self {
        Self::Ellipse { semi_axes: semi_axes.to_vec() }
    }

    /// Mask covering the whole unit cell.
    pub fn full_cell(m: usize, dim: usize) -> Self {
        Self::Mask { m, dim, cells: alloc::vec![true; m.pow(dim as u32)] }
    }

    /// Rasterizes a predicate on cell centers.
    pub fn mask_from_fn<F: Fn(&[f64]) -> bool>(m: usize, dim: usize, inside: F) -> Self {
        let total = m.pow(dim as u32);
        let cells = (0..total)
            .map(|idx| {
                let c = mask_cell_center(idx, m, dim);
                inside(&c[..dim])
            })
            .collect();
        Self::Mask { m, dim, cells }
    }

    fn validate(&self, dim: usize) -> Result<(), GeometryError> {
        match self {
            Self::Ball { c } => {
                if !(*c > 0.0 && *c < 0.5) {
                    return Err(GeometryError::BallRadius(*c));
                }
            }
            Self::Ellipse { semi_axes } => {
                if semi_axes.len() != dim {
                    return Err(GeometryError::Dimension { shape: semi_axes.len(), set: dim });
                }
                for (axis, &value) in semi_axes.iter().enumerate() {
                    if !(value > 0.0 && value < 0.5) {
                        return Err(GeometryError::EllipseAxis { axis, value });
                    }
                }
            }
            Self::Mask { m, dim: mdim, cells } => {
                if *mdim != dim {
                    return Err(GeometryError::Dimension { shape: *mdim, set: dim });
                }
                if *m == 0 || cells.len() != m.pow(dim as u32) {
                    return Err(GeometryError::InvalidShape("mask must hold m^d cells with m > 0"));
                }
                if !cells.iter().any(|&b| b) {
                    return Err(GeometryError::InvalidShape("mask is empty"));
                }
                if !mask_is_connected(*m, dim, cells) {
                    return Err(GeometryError::InvalidShape("mask is not face-connected"));
                }
            }
        }
        Ok(())
    }

    /// Membership for a point in cell-centered coordinates.
    pub fn contains_local(&self, p: &[f64]) -> bool {
        match self {
            Self::Ball { c } => p.iter().map(|v| v * v).sum::<f64>() <= c * c,
            Self::Ellipse { semi_axes } => p.iter().zip(semi_axes).map(|(v, c)| (v / c) * (v / c)).sum::<f64>() <= 1.0,
            Self::Mask { m, cells, .. } => {
                let mut idx = 0;
                let mut stride = 1;
                for &v in p {
                    let j = libm::floor((v + 0.5) * *m as f64);
                    if j < 0.0 || j > *m as f64 {
                        return false;
                    }
                    let j = (j as usize).min(m - 1);
                    idx += j * stride;
                    stride *= m;
                }
                cells[idx]
            }
        }
    }

    /// Lebesgue measure `|K|`.
    pub fn measure(&self, dim: usize) -> f64 {
        match self {
            Self::Ball { c } => crate::kernels::ball_volume(dim) * libm::pow(*c, dim as f64),
            Self::Ellipse { semi_axes } => crate::kernels::ball_volume(dim) * semi_axes.iter().product::<f64>(),
            Self::Mask { m, cells, .. } => {
                cells.iter().filter(|&&b| b).count() as f64 / libm::pow(*m as f64, dim as f64)
            }
        }
    }

    /// Axis-aligned bounding box `(lo, hi)` in cell-centered coordinates.
    pub fn bounding_box(&self, dim: usize) -> (Point, Point) {
        let mut lo = [0.0; MAX_DIM];
        let mut hi = [0.0; MAX_DIM];
        match self {
            Self::Ball { c } => {
                for a in 0..dim {
                    lo[a] = -c;
                    hi[a] = *c;
                }
            }
            Self::Ellipse { semi_axes } => {
                for a in 0..dim {
                    lo[a] = -semi_axes[a];
                    hi[a] = semi_axes[a];
                }
            }
            Self::Mask { m, cells, .. } => {
                for a in 0..dim {
                    lo[a] = f64::INFINITY;
                    hi[a] = f64::NEG_INFINITY;
                }
                let w = 0.5 / *m as f64;
                for (idx, _) in cells.iter().enumerate().filter(|(_, &b)| b) {
                    let c = mask_cell_center(idx, *m, dim);
                    for a in 0..dim {
                        lo[a] = lo[a].min(c[a] - w);
                        hi[a] = hi[a].max(c[a] + w);
                    }
                }
            }
        }
        (lo, hi)
    }

    /// Smallest half-width of the inclusion over the coordinate axes.
    pub fn min_half_width(&self, dim: usize) -> f64 {
        match self {
            Self::Ball { c } => *c,
            Self::Ellipse { semi_axes } => semi_axes.iter().copied().fold(f64::INFINITY, f64::min),
            Self::Mask { .. } => {
                let (lo, hi) = self.bounding_box(dim);
                (0..dim).map(|a| 0.5 * (hi[a] - lo[a])).fold(f64::INFINITY, f64::min)
            }
        }
    }

    /// Accuracy of [`inclusion_distance`](Self::inclusion_distance): zero for
    /// closed-form shapes, one raster cell diagonal for masks.
    pub fn distance_tolerance(&self, dim: usize) -> f64 {
        match self {
            Self::Mask { m, .. } => libm::sqrt(dim as f64) / *m as f64,
            _ => 0.0,
        }
    }

    /// `dist(K, K + k)` for `k ≠ 0`.
    pub fn inclusion_distance(&self, dim: usize, k: &LatticeIndex) -> Result<f64, GeometryError> {
        if k[..dim].iter().all(|&v| v == 0) {
            return Err(GeometryError::ZeroTranslation);
        }
        let kf: Vec<f64> = k[..dim].iter().map(|&v| v as f64).collect();
        Ok(match self {
            Self::Ball { c } => (crate::norm(&kf) - 2.0 * c).max(0.0),
            // K is convex and centrally symmetric, so K - K = 2K and the
            // distance is the distance from k to the dilated ellipsoid.
            Self::Ellipse { semi_axes } => {
                let doubled: Vec<f64> = semi_axes.iter().map(|c| 2.0 * c).collect();
                point_ellipsoid_distance(&kf, &doubled)
            }
            Self::Mask { m, cells, .. } => mask_distance(*m, dim, cells, &kf),
        })
    }
}

fn mask_cell_center(idx: usize, m: usize, dim: usize) -> Point {
    let mut c = [0.0; MAX_DIM];
    let mut rest = idx;
    for a in 0..dim {
        let j = rest % m;
        rest /= m;
        c[a] = (j as f64 + 0.5) / m as f64 - 0.5;
    }
    c
}

fn mask_is_connected(m: usize, dim: usize, cells: &[bool]) -> bool {
    let mut uf = UnionFind::new(cells.len());
    let mut stride = 1;
    for _ in 0..dim {
        for idx in 0..cells.len() {
            let j = (idx / stride) % m;
            if j + 1 < m && cells[idx] && cells[idx + stride] {
                uf.union(idx, idx + stride);
            }
        }
        stride *= m;
    }
    let mut root = None;
    for (idx, &b) in cells.iter().enumerate() {
        if b {
            let r = uf.find(idx);
            match root {
                None => root = Some(r),
                Some(r0) if r0 != r => return false,
                _ => {}
            }
        }
    }
    true
}

/// Distance from `y` to the closed axis-aligned ellipsoid with semi-axes `e`.
fn point_ellipsoid_distance(y: &[f64], e: &[f64]) -> f64 {
    let y: Vec<f64> = y.iter().map(|v| libm::fabs(*v)).collect();
    let level: f64 = y.iter().zip(e).map(|(v, a)| (v / a) * (v / a)).sum();
    if level <= 1.0 {
        return 0.0;
    }
    // Closest point x_i = e_i² y_i / (t + e_i²) with t > 0 the root of
    // Σ (e_i y_i / (t + e_i²))² = 1; the left side decreases in t.
    let f = |t: f64| -> f64 { y.iter().zip(e).map(|(v, a)| { let q = a * v / (t + a * a); q * q }).sum::<f64>() - 1.0 };
    let emax = e.iter().copied().fold(0.0, f64::max);
    let mut lo = 0.0;
    let mut hi = emax * crate::norm(&y);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t = 0.5 * (lo + hi);
    libm::sqrt(y.iter().zip(e).map(|(v, a)| { let q = v - a * a * v / (t + a * a); q * q }).sum())
}

fn mask_boundary_cells(m: usize, dim: usize, cells: &[bool]) -> Vec<Point> {
    let mut out = Vec::new();
    for (idx, &b) in cells.iter().enumerate() {
        if !b {
            continue;
        }
        let mut stride = 1;
        let mut boundary = false;
        for _ in 0..dim {
            let j = (idx / stride) % m;
            if j == 0 || j + 1 == m || !cells[idx - stride] || !cells[idx + stride] {
                boundary = true;
                break;
            }
            stride *= m;
        }
        if boundary {
            out.push(mask_cell_center(idx, m, dim));
        }
    }
    out
}

fn mask_distance(m: usize, dim: usize, cells: &[bool], k: &[f64]) -> f64 {
    let pts = mask_boundary_cells(m, dim, cells);
    let side = 1.0 / m as f64;
    let mut best = f64::INFINITY;
    for a in &pts {
        for b in &pts {
            let mut d2 = 0.0;
            for ax in 0..dim {
                let gap = (libm::fabs(b[ax] + k[ax] - a[ax]) - side).max(0.0);
                d2 += gap * gap;
            }
            if d2 < best {
                best = d2;
            }
        }
    }
    libm::sqrt(best)
}

/// `E = K + Z^d` in dimension `d`.
#[derive(Debug, Clone, PartialEq)]
pub struct PerforatedSet {
    shape: InclusionShape,
    dim: usize,
}

/// Components of `δE + B_{reach/2}` restricted to the inclusions meeting a box.
#[derive(Debug, Clone, PartialEq)]
pub struct ConnectivityReport {
    pub delta: f64,
    /// Interaction range (`ε` times the kernel support radius).
    pub reach: f64,
    /// Translations `k` in the search window with `δ dist(K, K+k) < reach`.
    pub generator_translations: Vec<LatticeIndex>,
    /// Number of inclusion classes per period: `Some(n)` when the open
    /// translations generate a finite-index sublattice, `None` when there are
    /// infinitely many components.
    pub per_period: Option<u64>,
    /// Inclusion indices whose inclusion meets the box, lexicographic order.
    pub inclusions: Vec<LatticeIndex>,
    /// Component label of each entry of `inclusions`.
    pub labels: Vec<usize>,
    /// Number of distinct labels.
    pub component_count: usize,
}

impl ConnectivityReport {
    pub fn is_connected(&self) -> bool {
        self.per_period == Some(1)
    }

    pub fn label_of(&self, k: &LatticeIndex) -> Option<usize> {
        self.inclusions.binary_search(k).ok().map(|i| self.labels[i])
    }
}

impl PerforatedSet {
    pub fn new(shape: InclusionShape, dim: usize) -> Result<Self, GeometryError> {
        if !(1..=MAX_DIM).contains(&dim) {
            return Err(GeometryError::Dimension { shape: dim, set: dim });
        }
        shape.validate(dim)?;
        Ok(Self { shape, dim })
    }

    pub fn shape(&self) -> &InclusionShape {
        &self.shape
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `|K|`, the volume fraction of `E`.
    pub fn measure(&self) -> f64 {
        self.shape.measure(self.dim)
    }

    /// Index `k` of the period cell `δ(k + [-1/2, 1/2)^d)` containing `x`.
    pub fn cell_index(&self, x: &[f64], delta: f64) -> LatticeIndex {
        let mut k = [0; MAX_DIM];
        for a in 0..self.dim {
            k[a] = libm::floor(x[a] / delta + 0.5) as i64;
        }
        k
    }

    /// Whether `x ∈ δE`.
    pub fn contains(&self, x: &[f64], delta: f64) -> bool {
        self.inclusion_of(x, delta).is_some()
    }

    /// Index of the inclusion `δ(k + K)` containing `x`, if any.
    pub fn inclusion_of(&self, x: &[f64], delta: f64) -> Option<LatticeIndex> {
        let k = self.cell_index(x, delta);
        let mut local = [0.0; MAX_DIM];
        for a in 0..self.dim {
            local[a] = x[a] / delta - k[a] as f64;
        }
        self.shape.contains_local(&local[..self.dim]).then_some(k)
    }

    pub fn inclusion_distance(&self, k: &LatticeIndex) -> Result<f64, GeometryError> {
        self.shape.inclusion_distance(self.dim, k)
    }

    /// All nonzero `k` with `|k|_∞ ≤ window` and their inclusion distances,
    /// in lexicographic order of `k`.
    pub fn translation_distances(&self, window: i64) -> Vec<(LatticeIndex, f64)> {
        let side = (2 * window + 1) as usize;
        let total = side.pow(self.dim as u32);
        let mut out = Vec::with_capacity(total);
        for idx in 0..total {
            let mut k = [0; MAX_DIM];
            let mut rest = idx;
            for a in (0..self.dim).rev() {
                k[a] = (rest % side) as i64 - window;
                rest /= side;
            }
            if k.iter().all(|&v| v == 0) {
                continue;
            }
            let d = self.inclusion_distance(&k).expect("nonzero translation");
            out.push((k, d));
        }
        out
    }

    /// `D₀ = min_{k≠0} dist(K, K+k)` over the search window.
    pub fn compute_d0(&self, window: i64) -> f64 {
        self.translation_distances(window).iter().map(|(_, d)| *d).fold(f64::INFINITY, f64::min)
    }

    /// `D = inf{r : E + B_{r/2} connected}`.
    pub fn compute_d(&self, window: i64) -> f64 {
        let mut dists = self.translation_distances(window);
        dists.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(&b.0)));
        let mut lattice = IntLattice::new(self.dim);
        let mut i = 0;
        while i < dists.len() {
            let level = dists[i].1;
            while i < dists.len() && dists[i].1 == level {
                lattice.insert(dists[i].0);
                i += 1;
            }
            if lattice.is_full() {
                return level;
            }
        }
        f64::INFINITY
    }

    /// Whether `E + B_{r/2}` is connected, i.e. the translations with
    /// `dist(K, K+k) < r` generate `Z^d`.
    pub fn connected_at(&self, r: f64, window: i64) -> bool {
        let open: Vec<LatticeIndex> =
            self.translation_distances(window).into_iter().filter(|(_, d)| *d < r).map(|(k, _)| k).collect();
        IntLattice::generated_by(self.dim, &open).is_full()
    }

    /// Sublattice generated by the translations open at relative range `r`.
    pub fn open_lattice(&self, r: f64, window: i64) -> (IntLattice, Vec<LatticeIndex>) {
        let open: Vec<LatticeIndex> =
            self.translation_distances(window).into_iter().filter(|(_, d)| *d < r).map(|(k, _)| k).collect();
        (IntLattice::generated_by(self.dim, &open), open)
    }

    /// Inclusion indices `k` with `δ(k + K)` meeting `omega` (bounding-box test).
    pub fn inclusions_meeting(&self, delta: f64, omega: &Aabb) -> Vec<LatticeIndex> {
        self.inclusion_range(delta, omega, false)
    }

    /// Inclusion indices `k` with `δ(k + K) ⊂ omega` (bounding-box test).
    pub fn inclusions_inside(&self, delta: f64, omega: &Aabb) -> Vec<LatticeIndex> {
        self.inclusion_range(delta, omega, true)
    }

    fn inclusion_range(&self, delta: f64, omega: &Aabb, inside: bool) -> Vec<LatticeIndex> {
        let (blo, bhi) = self.shape.bounding_box(self.dim);
        let mut lo = [0i64; MAX_DIM];
        let mut hi = [0i64; MAX_DIM];
        for a in 0..self.dim {
            if inside {
                // δ(k + blo) >= omega.lo and δ(k + bhi) <= omega.hi
                lo[a] = libm::ceil(omega.lo[a] / delta - blo[a] - 1e-12) as i64;
                hi[a] = libm::floor(omega.hi[a] / delta - bhi[a] + 1e-12) as i64;
            } else {
                // δ(k + bhi) > omega.lo and δ(k + blo) < omega.hi
                lo[a] = libm::floor(omega.lo[a] / delta - bhi[a]) as i64 + 1;
                hi[a] = libm::ceil(omega.hi[a] / delta - blo[a]) as i64 - 1;
            }
            if hi[a] < lo[a] {
                return Vec::new();
            }
        }
        let mut out = Vec::new();
        let mut k = lo;
        loop {
            out.push(k);
            let mut a = self.dim;
            loop {
                if a == 0 {
                    return out;
                }
                a -= 1;
                if k[a] < hi[a] {
                    k[a] += 1;
                    k[a + 1..self.dim].copy_from_slice(&lo[a + 1..self.dim]);
                    break;
                }
            }
        }
    }

    /// Components of `δE + B_{reach/2}` among inclusions meeting `omega`.
    pub fn components(
        &self,
        delta: f64,
        reach: f64,
        omega: &Aabb,
        window: i64,
    ) -> Result<ConnectivityReport, GeometryError> {
        if !(delta > 0.0 && reach > 0.0) {
            return Err(GeometryError::NonPositiveScale);
        }
        let (lattice, open) = self.open_lattice(reach / delta, window);
        let inclusions = self.inclusions_meeting(delta, omega);
        let lookup: BTreeMap<LatticeIndex, usize> = inclusions.iter().enumerate().map(|(i, k)| (*k, i)).collect();
        let mut uf = UnionFind::new(inclusions.len());
        for (i, k) in inclusions.iter().enumerate() {
            for g in &open {
                let mut n = *k;
                for a in 0..self.dim {
                    n[a] += g[a];
                }
                if let Some(&j) = lookup.get(&n) {
                    uf.union(i, j);
                }
            }
        }
        let (labels, component_count) = uf.labels();
        Ok(ConnectivityReport {
            delta,
            reach,
            generator_translations: open,
            per_period: lattice.index(),
            inclusions,
            labels,
            component_count,
        })
    }
}

/// Area of the ball of radius `c` in `d = 2`, used in tests and docs.
pub fn disc_area(c: f64) -> f64 {
    PI * c * c
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn ball(c: f64) -> PerforatedSet {
        PerforatedSet::new(InclusionShape::ball(c), 2).unwrap()
    }

    fn ellipse() -> PerforatedSet {
        PerforatedSet::new(InclusionShape::ellipse(&[0.4, 0.25]), 2).unwrap()
    }

    #[test]
    fn contains_examples() {
        let s = ball(0.25);
        assert!(s.contains(&[0.0, 0.0], 0.1));
        assert!(!s.contains(&[0.05, 0.0], 0.1));
        assert!(s.contains(&[0.1 + 0.02, 0.3 - 0.01], 0.1));
    }

    #[test]
    fn inclusion_distance_examples() {
        let b = InclusionShape::ball(0.25);
        assert_abs_diff_eq!(b.inclusion_distance(2, &[1, 0, 0]).unwrap(), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(b.inclusion_distance(2, &[1, 1, 0]).unwrap(), 2f64.sqrt() - 0.5, epsilon = 1e-12);
        let e = InclusionShape::ellipse(&[0.4, 0.25]);
        assert_abs_diff_eq!(e.inclusion_distance(2, &[0, 1, 0]).unwrap(), 0.5, epsilon = 1e-9);
        assert_abs_diff_eq!(e.inclusion_distance(2, &[1, 0, 0]).unwrap(), 0.2, epsilon = 1e-9);
        assert_eq!(b.inclusion_distance(2, &[0, 0, 0]), Err(GeometryError::ZeroTranslation));
    }

    #[test]
    fn ellipse_diagonal_distance_matches_sampling() {
        let e = InclusionShape::ellipse(&[0.4, 0.25]);
        let exact = e.inclusion_distance(2, &[1, 1, 0]).unwrap();
        // brute force over boundary parametrizations of K and K + (1,1)
        let n = 2000;
        let mut best = f64::INFINITY;
        for i in 0..n {
            let s = 2.0 * PI * i as f64 / n as f64;
            let (x0, x1) = (0.4 * s.cos(), 0.25 * s.sin());
            for j in 0..n {
                let t = 2.0 * PI * j as f64 / n as f64;
                let (y0, y1) = (1.0 + 0.4 * t.cos(), 1.0 + 0.25 * t.sin());
                best = best.min(((x0 - y0).powi(2) + (x1 - y1).powi(2)).sqrt());
            }
        }
        assert!((exact - best).abs() < 1e-4, "{exact} vs {best}");
    }

    #[test]
    fn thresholds_for_ball_and_ellipse() {
        let b = ball(0.25);
        assert_abs_diff_eq!(b.compute_d0(DEFAULT_WINDOW), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(b.compute_d(DEFAULT_WINDOW), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(ball(0.49).compute_d(DEFAULT_WINDOW), 0.02, epsilon = 1e-12);
        assert!(ball(0.4999).compute_d0(DEFAULT_WINDOW) < 1e-3);
        let e = ellipse();
        assert_abs_diff_eq!(e.compute_d(DEFAULT_WINDOW), 0.5, epsilon = 1e-9);
        assert_abs_diff_eq!(e.compute_d0(DEFAULT_WINDOW), 0.2, epsilon = 1e-9);
    }

    #[test]
    fn full_cell_mask_is_connected() {
        let s = PerforatedSet::new(InclusionShape::full_cell(8, 2), 2).unwrap();
        assert_eq!(s.compute_d(DEFAULT_WINDOW), 0.0);
        assert_eq!(s.measure(), 1.0);
    }

    #[test]
    fn mask_distance_tracks_ball() {
        let m = 64;
        let shape = InclusionShape::mask_from_fn(m, 2, |p| p[0] * p[0] + p[1] * p[1] <= 0.25 * 0.25);
        let s = PerforatedSet::new(shape, 2).unwrap();
        let tol = s.shape().distance_tolerance(2);
        assert!((s.compute_d(DEFAULT_WINDOW) - 0.5).abs() <= tol);
        assert!((s.measure() - disc_area(0.25)).abs() < 0.01);
    }

    #[test]
    fn invalid_shapes_rejected() {
        assert_eq!(PerforatedSet::new(InclusionShape::ball(0.6), 2), Err(GeometryError::BallRadius(0.6)));
        assert!(PerforatedSet::new(InclusionShape::ellipse(&[0.4]), 2).is_err());
        let two_blobs = InclusionShape::mask_from_fn(8, 2, |p| (p[0] + 0.3).abs() < 0.1 || (p[0] - 0.3).abs() < 0.1);
        assert!(PerforatedSet::new(two_blobs, 2).is_err());
    }

    #[test]
    fn component_examples() {
        let omega = Aabb::new(&[0.0, 0.0], &[1.0, 1.0]);
        let b = ball(0.25);
        let r = b.components(0.1, 0.06, &omega, DEFAULT_WINDOW).unwrap();
        assert_eq!(r.component_count, 1);
        assert!(r.is_connected());
        let r = b.components(0.1, 0.04, &omega, DEFAULT_WINDOW).unwrap();
        assert_eq!(r.component_count, r.inclusions.len());
        assert_eq!(r.per_period, None);
        let e = ellipse();
        let r = e.components(0.1, 0.03, &omega, DEFAULT_WINDOW).unwrap();
        assert_eq!(r.generator_translations.len(), 2);
        for (k, &l) in r.inclusions.iter().zip(&r.labels) {
            for (k2, &l2) in r.inclusions.iter().zip(&r.labels) {
                assert_eq!(l == l2, k[1] == k2[1]);
            }
        }
    }

    #[test]
    fn verdict_flips_at_d() {
        for s in [ball(0.25), ball(0.3), ellipse()] {
            let d = s.compute_d(DEFAULT_WINDOW);
            assert!(!s.connected_at(d, DEFAULT_WINDOW));
            assert!(!s.connected_at(d - 1e-6, DEFAULT_WINDOW));
            assert!(s.connected_at(d + 1e-6, DEFAULT_WINDOW));
        }
    }
}
