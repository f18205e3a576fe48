//! The nonlocal energy
//!
//! ```text
//! F_{δ,ε}(u) = ε^-(d+2) Σ_{x,y ∈ Ω∩δE} w(x−y) (u(x) − u(y))² h^{2d}
//! ```
//!
//! on grid functions, where `w(x−y)` is the average of `φ(·/ε)` over the
//! dual cell of `y` (a box of side `h` around the node offset). Away from the
//! profile's jumps this is the plain midpoint value; on cells straddling a
//! jump it removes the staircase bias of point sampling.
//!
//! Unordered pairs are enumerated once through cell lists of masked nodes and
//! counted twice. Kernels without compact support are cut off at
//! `ε R_trunc`, where the tail `∫_{|ξ|>R_trunc} φ|ξ|²` is a fixed fraction of
//! `d C_φ`, and every result reports a bound on the discarded part.

use alloc::vec::Vec;
use thiserror::Error;

use crate::geometry::PerforatedSet;
use crate::grid::{Aabb, Grid, GridFunction};
use crate::kernels::{KernelError, RadialKernel};
use crate::MAX_DIM;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EnergyError {
    #[error("grid spacing h = {h} does not resolve the kernel scale ε = {epsilon}")]
    Resolution { h: f64, epsilon: f64 },
    #[error("ε and δ must be positive and finite")]
    Scale,
    #[error("dimension mismatch between kernel ({kernel}), set ({set}) and grid ({grid})")]
    Dimension { kernel: usize, set: usize, grid: usize },
    #[error("grid function lives on a different grid")]
    GridMismatch,
    #[error("grid function mask disagrees with Ω ∩ δE at node {0}")]
    MaskMismatch(usize),
    #[error("oracle limited to {cap} masked nodes, got {count}")]
    OracleCap { cap: usize, count: usize },
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

/// How pair weights are sampled from the kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightRule {
    /// Average of `φ((x−y)/ε)` over the box of side `h` centered at `x − y`.
    CellAverage,
    /// Point value `φ((x−y)/ε)` at the node offset.
    PointSample,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyOptions {
    /// Relative tail `∫_{|ξ|>R} φ|ξ|² / (d C_φ)` allowed when truncating
    /// kernels without compact support.
    pub tail_tolerance: f64,
    /// Explicit truncation radius in units of ε; overrides `tail_tolerance`.
    pub truncation_radius: Option<f64>,
    pub weight_rule: WeightRule,
    /// Largest masked node count accepted by [`EnergyContext::oracle_evaluate`].
    pub oracle_cap: usize,
}

impl Default for EnergyOptions {
    fn default() -> Self {
        Self { tail_tolerance: 1e-6, truncation_radius: None, weight_rule: WeightRule::CellAverage, oracle_cap: 4096 }
    }
}

/// An energy value with a bound on the part removed by kernel truncation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Energy {
    pub value: f64,
    pub tail_bound: f64,
}

/// Everything needed to evaluate `F_{δ,ε}` on one grid.
#[derive(Debug, Clone)]
pub struct EnergyContext {
    kernel: RadialKernel,
    set: PerforatedSet,
    grid: Grid,
    delta: f64,
    epsilon: f64,
    options: EnergyOptions,
    /// Cutoff radius in units of ε (support radius or truncation radius).
    reach: f64,
    /// Relative tail of the truncated kernel, `tail(R)/R²`.
    tail_mass: f64,
    /// Largest offset per axis, in nodes, with a nonzero weight.
    max_offset: usize,
    /// Scaled weights `ε^-(d+2) h^{2d} w(o)` indexed by `|o_a|`, axis 0 fastest.
    weights: Vec<f64>,
    mask: Vec<bool>,
}

struct Bins {
    counts: [usize; MAX_DIM],
    /// Masked node ids per bin, ascending.
    members: Vec<Vec<u32>>,
}

impl EnergyContext {
    pub fn new(
        kernel: RadialKernel,
        set: PerforatedSet,
        grid: Grid,
        delta: f64,
        epsilon: f64,
        options: EnergyOptions,
    ) -> Result<Self, EnergyError> {
        let d = grid.dim();
        if kernel.dim() != d || set.dim() != d {
            return Err(EnergyError::Dimension { kernel: kernel.dim(), set: set.dim(), grid: d });
        }
        if !(delta > 0.0 && epsilon > 0.0 && delta.is_finite() && epsilon.is_finite()) {
            return Err(EnergyError::Scale);
        }
        let h = grid.spacing();
        if h > epsilon {
            return Err(EnergyError::Resolution { h, epsilon });
        }
        let (reach, tail_mass) = if kernel.has_compact_support() {
            (kernel.support_radius(), 0.0)
        } else {
            let r = match options.truncation_radius {
                Some(r) => r,
                None => kernel.truncation_radius(options.tail_tolerance)?,
            };
            (r, kernel.tail_second_moment(r)? / (r * r))
        };
        let slack = match options.weight_rule {
            WeightRule::CellAverage => libm::sqrt(d as f64) / 2.0,
            WeightRule::PointSample => 0.0,
        };
        let max_offset = libm::ceil(reach * epsilon / h + slack) as usize;
        let mask = (0..grid.len()).map(|i| set.contains(&grid.node(i)[..d], delta)).collect();
        let mut ctx = Self {
            kernel,
            set,
            grid,
            delta,
            epsilon,
            options,
            reach,
            tail_mass,
            max_offset,
            weights: Vec::new(),
            mask,
        };
        ctx.weights = ctx.build_weights();
        Ok(ctx)
    }

    fn build_weights(&self) -> Vec<f64> {
        let d = self.grid.dim();
        let side = self.max_offset + 1;
        let total = side.pow(d as u32);
        let scale = self.pair_scale();
        crate::par::map_indexed(total, |idx| {
            let mut off = [0usize; MAX_DIM];
            let mut rest = idx;
            for o in off.iter_mut().take(d) {
                *o = rest % side;
                rest /= side;
            }
            scale * self.raw_weight(&off[..d])
        })
    }

    /// `ε^-(d+2) h^{2d}`.
    fn pair_scale(&self) -> f64 {
        let d = self.grid.dim() as f64;
        libm::pow(self.grid.spacing(), 2.0 * d) / libm::pow(self.epsilon, d + 2.0)
    }

    /// Unscaled weight of an integer node offset.
    fn raw_weight(&self, offset: &[usize]) -> f64 {
        let d = offset.len();
        let h = self.grid.spacing();
        let mut xi = [0.0; MAX_DIM];
        for a in 0..d {
            xi[a] = offset[a] as f64 * h / self.epsilon;
        }
        let xi = &xi[..d];
        if offset.iter().all(|&o| o == 0) {
            return 0.0;
        }
        if !self.kernel.has_compact_support() && crate::norm(xi) >= self.reach {
            return 0.0;
        }
        match self.options.weight_rule {
            WeightRule::CellAverage => self.kernel.cell_average(xi, 0.5 * h / self.epsilon),
            WeightRule::PointSample => self.kernel.evaluate(xi),
        }
    }

    pub fn kernel(&self) -> &RadialKernel {
        &self.kernel
    }

    pub fn set(&self) -> &PerforatedSet {
        &self.set
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn options(&self) -> &EnergyOptions {
        &self.options
    }

    /// Cutoff radius in units of ε.
    pub fn reach(&self) -> f64 {
        self.reach
    }

    /// Mask of grid nodes in `Ω ∩ δE`.
    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    /// A grid function on this context's grid and mask.
    pub fn sample<F: Fn(&[f64]) -> f64>(&self, f: F) -> GridFunction {
        GridFunction::sample(&self.grid, f, &self.set, self.delta)
    }

    /// Scaled weight of the pair `(x, x + o)` for an integer node offset.
    pub fn pair_weight(&self, offset: &[i64]) -> f64 {
        let d = self.grid.dim();
        let side = self.max_offset + 1;
        let mut idx = 0;
        let mut stride = 1;
        for &o in &offset[..d] {
            let a = o.unsigned_abs() as usize;
            if a > self.max_offset {
                return 0.0;
            }
            idx += a * stride;
            stride *= side;
        }
        self.weights[idx]
    }

    fn check(&self, u: &GridFunction) -> Result<(), EnergyError> {
        if u.grid() != &self.grid {
            return Err(EnergyError::GridMismatch);
        }
        if let Some(i) = (0..self.mask.len()).find(|&i| self.mask[i] != u.mask()[i]) {
            return Err(EnergyError::MaskMismatch(i));
        }
        Ok(())
    }

    fn bins(&self) -> Bins {
        let d = self.grid.dim();
        let shape = self.grid.shape();
        let side = self.max_offset.max(1);
        let mut counts = [1; MAX_DIM];
        for a in 0..d {
            counts[a] = shape[a].div_ceil(side);
        }
        let total: usize = counts[..d].iter().product();
        let mut members = alloc::vec![Vec::new(); total];
        for (i, &m) in self.mask.iter().enumerate() {
            if !m {
                continue;
            }
            let mi = self.grid.multi_index(i);
            let mut b = 0;
            let mut stride = 1;
            for a in 0..d {
                b += (mi[a] / side) * stride;
                stride *= counts[a];
            }
            members[b].push(i as u32);
        }
        Bins { counts, members }
    }

    /// Sum over unordered masked pairs of `W(x−y)(u_x−u_y)² · factor(x, y)`.
    fn pair_sum<G: Fn(usize, usize) -> f64 + Sync>(&self, u: &GridFunction, factor: G) -> f64 {
        let d = self.grid.dim();
        let bins = self.bins();
        let values = u.values();
        let nb = bins.members.len();
        let partial = crate::par::map_indexed(nb, |b| {
            let mine = &bins.members[b];
            if mine.is_empty() {
                return 0.0;
            }
            let mut bc = [0i64; MAX_DIM];
            let mut rest = b;
            for a in 0..d {
                bc[a] = (rest % bins.counts[a]) as i64;
                rest /= bins.counts[a];
            }
            let coords: Vec<[i64; MAX_DIM]> = mine.iter().map(|&i| to_i64(self.grid.multi_index(i as usize))).collect();
            let mut acc = 0.0;
            // neighbor bins at or after this one in linear order
            for nbr in 0..3usize.pow(d as u32) {
                let mut nc = [0i64; MAX_DIM];
                let mut rest = nbr;
                let mut inside = true;
                for a in 0..d {
                    nc[a] = bc[a] + (rest % 3) as i64 - 1;
                    rest /= 3;
                    if nc[a] < 0 || nc[a] >= bins.counts[a] as i64 {
                        inside = false;
                    }
                }
                if !inside {
                    continue;
                }
                let mut other = 0;
                let mut stride = 1;
                for a in 0..d {
                    other += nc[a] as usize * stride;
                    stride *= bins.counts[a];
                }
                if other < b {
                    continue;
                }
                for (xi, &x) in mine.iter().enumerate() {
                    let cx = coords[xi];
                    let ux = values[x as usize];
                    let start = if other == b { xi + 1 } else { 0 };
                    for &y in &bins.members[other][start..] {
                        let cy = self.grid.multi_index(y as usize);
                        let mut off = [0i64; MAX_DIM];
                        for a in 0..d {
                            off[a] = cy[a] as i64 - cx[a];
                        }
                        let w = self.pair_weight(&off);
                        if w == 0.0 {
                            continue;
                        }
                        let diff = ux - values[y as usize];
                        acc += w * diff * diff * factor(x as usize, y as usize);
                    }
                }
            }
            acc
        });
        partial.iter().sum()
    }

    fn tail_bound(&self, u: &GridFunction, region: Option<&Aabb>) -> f64 {
        if self.tail_mass == 0.0 {
            return 0.0;
        }
        // Σ_{|x−y|≥εR} φ_ε (u_x−u_y)² ≤ 4 ‖u − ū‖² ∫_{|ξ|>R} φ, and
        // ∫_{|ξ|>R} φ ≤ R^-2 ∫_{|ξ|>R} φ|ξ|²
        let mean = u.masked_integral(None) / u.masked_measure(None).max(f64::MIN_POSITIVE);
        let spread = u.masked_integral_with(region, |v| (v - mean) * (v - mean));
        4.0 * spread * self.tail_mass / (self.epsilon * self.epsilon)
    }

    /// `F_{δ,ε}(u)` over all pairs of masked nodes.
    pub fn evaluate(&self, u: &GridFunction) -> Result<Energy, EnergyError> {
        self.check(u)?;
        let value = 2.0 * self.pair_sum(u, |_, _| 1.0);
        Ok(Energy { value, tail_bound: self.tail_bound(u, None) })
    }

    /// The energy with `x` restricted to the box `a` and `y` free in `Ω`.
    pub fn evaluate_localized(&self, u: &GridFunction, a: &Aabb) -> Result<Energy, EnergyError> {
        self.check(u)?;
        let d = self.grid.dim();
        let inside: Vec<bool> = (0..self.grid.len()).map(|i| a.contains(&self.grid.node(i)[..d])).collect();
        let value = self.pair_sum(u, |x, y| (inside[x] as u8 + inside[y] as u8) as f64);
        Ok(Energy { value, tail_bound: self.tail_bound(u, Some(a)) })
    }

    /// Brute-force double sum over ordered pairs with weights computed
    /// directly from the kernel, in a fixed order.
    pub fn oracle_evaluate(&self, u: &GridFunction) -> Result<f64, EnergyError> {
        self.check(u)?;
        let d = self.grid.dim();
        let nodes: Vec<usize> = (0..self.mask.len()).filter(|&i| self.mask[i]).collect();
        if nodes.len() > self.options.oracle_cap {
            return Err(EnergyError::OracleCap { cap: self.options.oracle_cap, count: nodes.len() });
        }
        let shape = self.grid.shape();
        let mut memo: Vec<Option<f64>> = alloc::vec![None; shape[..d].iter().product()];
        let scale = self.pair_scale();
        let values = u.values();
        let mut total = 0.0;
        for &x in &nodes {
            let cx = self.grid.multi_index(x);
            for &y in &nodes {
                let cy = self.grid.multi_index(y);
                let mut off = [0usize; MAX_DIM];
                for a in 0..d {
                    off[a] = cx[a].abs_diff(cy[a]);
                }
                let key = self.grid.linear_index(&off);
                let w = match memo[key] {
                    Some(w) => w,
                    None => {
                        let w = self.raw_weight(&off[..d]);
                        memo[key] = Some(w);
                        w
                    }
                };
                let diff = values[x] - values[y];
                total += w * diff * diff;
            }
        }
        Ok(scale * total)
    }
}

fn to_i64(mi: [usize; MAX_DIM]) -> [i64; MAX_DIM] {
    [mi[0] as i64, mi[1] as i64, mi[2] as i64]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::InclusionShape;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn full_cell_ctx(h: f64, eps: f64, rule: WeightRule) -> EnergyContext {
        let set = PerforatedSet::new(InclusionShape::full_cell(4, 2), 2).unwrap();
        let grid = Grid::new(Aabb::unit(2), h).unwrap();
        let kernel = RadialKernel::indicator(1.0, 2).unwrap();
        let opts = EnergyOptions { weight_rule: rule, ..Default::default() };
        EnergyContext::new(kernel, set, grid, 1.0, eps, opts).unwrap()
    }

    #[test]
    fn constants_have_zero_energy() {
        let ctx = full_cell_ctx(1.0 / 16.0, 0.25, WeightRule::CellAverage);
        let u = ctx.sample(|_| 2.5);
        assert_eq!(ctx.evaluate(&u).unwrap().value, 0.0);
        assert_eq!(ctx.oracle_evaluate(&u).unwrap(), 0.0);
    }

    #[test]
    fn two_node_closed_form() {
        let set = PerforatedSet::new(InclusionShape::full_cell(1, 1), 1).unwrap();
        let grid = Grid::new(Aabb::new(&[0.0], &[1.0]), 0.5).unwrap();
        let kernel = RadialKernel::indicator(1.0, 1).unwrap();
        let opts = EnergyOptions { weight_rule: WeightRule::PointSample, ..Default::default() };
        let eps = 0.75;
        let ctx = EnergyContext::new(kernel, set, grid.clone(), 1.0, eps, opts).unwrap();
        let u = GridFunction::new(grid, alloc::vec![1.0, 4.0], alloc::vec![true, true]).unwrap();
        // the nodes are 0.5 apart, inside the support: w = 1
        let expected = 2.0 / libm::pow(eps, 3.0) * 9.0 * 0.25;
        assert!((ctx.evaluate(&u).unwrap().value - expected).abs() < 1e-14);
        assert!((ctx.oracle_evaluate(&u).unwrap() - expected).abs() < 1e-14);
    }

    #[test]
    fn resolution_error() {
        let set = PerforatedSet::new(InclusionShape::full_cell(4, 2), 2).unwrap();
        let grid = Grid::new(Aabb::unit(2), 0.5).unwrap();
        let kernel = RadialKernel::indicator(1.0, 2).unwrap();
        let r = EnergyContext::new(kernel, set, grid, 1.0, 0.25, EnergyOptions::default());
        assert!(matches!(r, Err(EnergyError::Resolution { .. })));
    }

    #[test]
    fn weight_table_matches_direct_evaluation() {
        let ctx = full_cell_ctx(1.0 / 32.0, 0.2, WeightRule::CellAverage);
        let scale = ctx.pair_scale();
        for o in [[0i64, 0, 0], [1, 0, 0], [-3, 5, 0], [6, 1, 0], [4, -4, 0], [7, 0, 0], [9, 9, 0]] {
            let off = [o[0].unsigned_abs() as usize, o[1].unsigned_abs() as usize];
            let direct = if off == [0, 0] {
                0.0
            } else {
                let xi = [o[0] as f64 / 32.0 / 0.2, o[1] as f64 / 32.0 / 0.2];
                ctx.kernel.cell_average(&xi, 0.5 / 32.0 / 0.2) * scale
            };
            assert_eq!(ctx.pair_weight(&o), direct, "{o:?}");
        }
    }

    #[test]
    fn cell_lists_match_oracle_on_perforated_grid() {
        let set = PerforatedSet::new(InclusionShape::ball(0.3), 2).unwrap();
        let grid = Grid::new(Aabb::unit(2), 1.0 / 32.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for (kernel, eps) in [
            (RadialKernel::indicator(1.0, 2).unwrap(), 0.2),
            (RadialKernel::exponential(3.0, 2).unwrap(), 0.1),
        ] {
            let ctx = EnergyContext::new(kernel, set.clone(), grid.clone(), 0.25, eps, EnergyOptions::default()).unwrap();
            let vals: Vec<f64> = (0..ctx.grid().len()).map(|_| rng.random::<f64>()).collect();
            let u = ctx.sample(|_| 0.0).with_values(vals).unwrap();
            let fast = ctx.evaluate(&u).unwrap().value;
            let slow = ctx.oracle_evaluate(&u).unwrap();
            assert!((fast - slow).abs() <= 1e-12 * slow, "{fast} vs {slow}");
        }
    }

    #[test]
    fn localized_is_additive() {
        let ctx = full_cell_ctx(1.0 / 32.0, 0.125, WeightRule::CellAverage);
        let u = ctx.sample(|x| (3.0 * x[0]).sin() + x[1] * x[1]);
        let whole = ctx.evaluate(&u).unwrap().value;
        let all = ctx.evaluate_localized(&u, &Aabb::unit(2)).unwrap().value;
        assert!((whole - all).abs() <= 1e-12 * whole);
        let left = ctx.evaluate_localized(&u, &Aabb::new(&[0.0, 0.0], &[0.5, 1.0])).unwrap().value;
        let right = ctx.evaluate_localized(&u, &Aabb::new(&[0.5, 0.0], &[1.0, 1.0])).unwrap().value;
        assert!((left + right - whole).abs() <= 1e-12 * whole);
        assert_eq!(ctx.evaluate_localized(&u, &Aabb::empty(2)).unwrap().value, 0.0);
    }

    #[test]
    fn truncation_reports_tail() {
        let set = PerforatedSet::new(InclusionShape::full_cell(4, 2), 2).unwrap();
        let grid = Grid::new(Aabb::unit(2), 1.0 / 64.0).unwrap();
        let kernel = RadialKernel::exponential(1.0, 2).unwrap();
        let ctx = EnergyContext::new(kernel, set, grid, 1.0, 1.0 / 64.0, EnergyOptions::default()).unwrap();
        assert!(ctx.reach() > 15.0 && ctx.reach() < 30.0, "{}", ctx.reach());
        let u = ctx.sample(|x| x[0]);
        let e = ctx.evaluate(&u).unwrap();
        assert!(e.tail_bound > 0.0 && e.tail_bound < 1e-4 * e.value, "{e:?}");
    }
}
