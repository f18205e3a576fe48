//! Explicit sequences and `(ε, δ)` sweeps for the three scaling regimes.
//!
//! * subcritical (`ε ≪ δ`): inclusions decouple; the recovery sequence is
//!   constant on each inclusion and its energy is controlled by the kernel
//!   tail beyond `D₀ δ / ε`;
//! * critical (`ε / δ → κ`): the limit is `∫ ⟨A^κ ∇u, ∇u⟩` with the cell
//!   tensor; the recovery sequence adds the rescaled corrector;
//! * supercritical (`δ ≪ ε`): the geometry averages out and the limit is
//!   `|K|² C_φ ∫ |∇u|²`, approached by `u` itself.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use thiserror::Error;

use crate::cg::CgError;
use crate::cellproblem::{CellDiscretization, CellError, CellOptions, HomogenizedTensor};
use crate::energy::{EnergyContext, EnergyError, EnergyOptions};
use crate::geometry::{GeometryError, PerforatedSet};
use crate::grid::{Aabb, Grid, GridError, GridFunction};
use crate::interpolate::{self, InterpolateError};
use crate::kernels::{KernelError, RadialKernel};
use crate::lattice::IntLattice;
use crate::{LatticeIndex, Point, MAX_DIM};

/// Denominator floor for relative errors against a zero prediction.
pub const PREDICTED_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RegimeError {
    #[error("invalid sweep configuration: {0}")]
    Config(String),
    #[error("ε/δ = {ratio} does not stay below D = {threshold} with margin {margin}")]
    Precondition { ratio: f64, threshold: f64, margin: f64 },
    #[error("open translations generate a sublattice of finite index {0}; every component class is unbounded")]
    FiniteComponentClasses(u64),
    #[error("kernel must have compact support for this construction")]
    UnboundedKernel,
    #[error("grid is not aligned with the cell lattice: {0}")]
    Alignment(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Energy(#[from] EnergyError),
    #[error(transparent)]
    Cell(#[from] CellError),
    #[error(transparent)]
    Interpolate(#[from] InterpolateError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// `ε ≪ δ`.
    Subcritical,
    /// `ε / δ → κ`.
    Critical,
    /// `δ ≪ ε`.
    Supercritical,
}

impl Regime {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Subcritical => "subcritical",
            Self::Critical => "critical",
            Self::Supercritical => "supercritical",
        }
    }
}

/// Smooth test functions with known gradients.
#[derive(Debug, Clone, Copy)]
pub enum TestFunction {
    /// `a·x + b`.
    Affine { slope: Point, offset: f64 },
    /// `Σ c_a x_a²`.
    Quadratic { coeffs: Point },
    Custom { value: fn(&[f64]) -> f64, gradient: fn(&[f64]) -> Point },
}

impl TestFunction {
    pub fn affine(slope: &[f64], offset: f64) -> Self {
        Self::Affine { slope: crate::point_from_slice(slope), offset }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        match self {
            Self::Affine { slope, offset } => x.iter().zip(slope).map(|(a, b)| a * b).sum::<f64>() + offset,
            Self::Quadratic { coeffs } => x.iter().zip(coeffs).map(|(a, c)| c * a * a).sum(),
            Self::Custom { value, .. } => value(x),
        }
    }

    pub fn gradient(&self, x: &[f64]) -> Point {
        match self {
            Self::Affine { slope, .. } => *slope,
            Self::Quadratic { coeffs } => {
                let mut g = [0.0; MAX_DIM];
                for (a, &v) in x.iter().enumerate() {
                    g[a] = 2.0 * coeffs[a] * v;
                }
                g
            }
            Self::Custom { gradient, .. } => gradient(x),
        }
    }

    /// The same function multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        match *self {
            Self::Affine { slope, offset } => Self::Affine { slope: slope.map(|v| s * v), offset: s * offset },
            Self::Quadratic { coeffs } => Self::Quadratic { coeffs: coeffs.map(|v| s * v) },
            Self::Custom { .. } => *self,
        }
    }
}

/// Node points per axis of the midpoint rule used for predicted limits.
fn quadrature_points(dim: usize) -> usize {
    match dim {
        1 => 4096,
        2 => 256,
        _ => 48,
    }
}

/// `∫_box ⟨A ∇u, ∇u⟩` by the midpoint rule; exact for affine `u`.
pub fn dirichlet_integral(u: &TestFunction, matrix: &[[f64; MAX_DIM]; MAX_DIM], region: &Aabb) -> f64 {
    let d = region.dim;
    let n = quadrature_points(d);
    let total = n.pow(d as u32);
    let mut acc = 0.0;
    let mut x = [0.0; MAX_DIM];
    for idx in 0..total {
        let mut rest = idx;
        for a in 0..d {
            let i = rest % n;
            rest /= n;
            x[a] = region.lo[a] + (i as f64 + 0.5) * (region.hi[a] - region.lo[a]) / n as f64;
        }
        let g = u.gradient(&x[..d]);
        for a in 0..d {
            for b in 0..d {
                acc += matrix[a][b] * g[a] * g[b];
            }
        }
    }
    acc * region.volume() / total as f64
}

/// How the grid spacing follows `(ε, δ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Refinement {
    /// `h = min(δ c_min / 4, ε / 16)`, with `c_min` the smallest half-width of `K`.
    Auto,
    /// `h = min(δ / per_delta, ε / per_epsilon)`.
    Divisions { per_delta: f64, per_epsilon: f64 },
    /// Fixed spacing.
    Spacing(f64),
}

/// One sweep: a regime, a geometry, a kernel and a list of `(ε, δ)` pairs.
#[derive(Debug, Clone)]
pub struct RegimeConfig {
    pub regime: Regime,
    pub kernel: RadialKernel,
    pub set: PerforatedSet,
    pub test_function: TestFunction,
    pub omega: Aabb,
    /// Comparison box `Ω'`; defaults to `Ω` shrunk by the largest kernel reach
    /// (`Ω` itself for subcritical sweeps).
    pub interior: Option<Aabb>,
    /// `(ε, δ)` pairs.
    pub sweep: Vec<(f64, f64)>,
    pub refinement: Refinement,
    /// Cell resolution for critical rows (grid spacing `δ / m`).
    pub cell_resolution: usize,
    pub energy: EnergyOptions,
    pub cell: CellOptions,
}

impl RegimeConfig {
    pub fn new(regime: Regime, kernel: RadialKernel, set: PerforatedSet, test_function: TestFunction, omega: Aabb) -> Self {
        Self {
            regime,
            kernel,
            set,
            test_function,
            omega,
            interior: None,
            sweep: Vec::new(),
            refinement: Refinement::Auto,
            cell_resolution: 16,
            energy: EnergyOptions::default(),
            cell: CellOptions::default(),
        }
    }

    /// Cutoff radius of the kernel in units of ε.
    pub fn reach(&self) -> Result<f64, RegimeError> {
        if self.kernel.has_compact_support() {
            Ok(self.kernel.support_radius())
        } else {
            Ok(match self.energy.truncation_radius {
                Some(r) => r,
                None => self.kernel.truncation_radius(self.energy.tail_tolerance)?,
            })
        }
    }

    pub fn validate(&self) -> Result<(), RegimeError> {
        let d = self.set.dim();
        if self.kernel.dim() != d || self.omega.dim != d {
            return Err(RegimeError::Config("kernel, geometry and Ω must share the dimension".into()));
        }
        if self.omega.is_empty() {
            return Err(RegimeError::Config("Ω is empty".into()));
        }
        for &(e, dl) in &self.sweep {
            if !(e > 0.0 && dl > 0.0 && e.is_finite() && dl.is_finite()) {
                return Err(RegimeError::Config(format!("sweep entry (ε, δ) = ({e}, {dl}) must be positive")));
            }
        }
        let ratios: Vec<f64> = self.sweep.iter().map(|(e, dl)| e / dl).collect();
        let ordered = match self.regime {
            Regime::Subcritical => ratios.windows(2).all(|w| w[1] <= w[0]),
            Regime::Supercritical => ratios.windows(2).all(|w| w[1] >= w[0]),
            Regime::Critical => true,
        };
        if !ordered {
            return Err(RegimeError::Config(format!(
                "ε/δ must be monotone in the {} direction, got {ratios:?}",
                self.regime.name()
            )));
        }
        if self.regime == Regime::Critical && (self.cell_resolution == 0 || !self.cell_resolution.is_multiple_of(2)) {
            return Err(RegimeError::Config("critical sweeps need an even cell resolution".into()));
        }
        if let Some(i) = &self.interior {
            if !i.is_inside(&self.omega) || i.is_empty() {
                return Err(RegimeError::Config("interior box must be a nonempty subset of Ω".into()));
            }
        }
        Ok(())
    }

    /// `Ω'`, explicit or `Ω` shrunk by `max ε · reach` over the sweep.
    /// Subcritical rows integrate over all of `Ω` and default to `Ω` itself.
    pub fn interior_box(&self) -> Result<Aabb, RegimeError> {
        if let Some(i) = self.interior {
            return Ok(i);
        }
        if self.regime == Regime::Subcritical {
            return Ok(self.omega);
        }
        let reach = self.reach()?;
        let margin = self.sweep.iter().map(|(e, _)| e * reach).fold(0.0, f64::max);
        let b = self.omega.shrink(margin);
        if b.is_empty() {
            return Err(RegimeError::Config("Ω is too small for the kernel reach".into()));
        }
        Ok(b)
    }

    fn target_spacing(&self, epsilon: f64, delta: f64) -> f64 {
        match self.refinement {
            Refinement::Auto => {
                let c = self.set.shape().min_half_width(self.set.dim());
                (delta * c / 4.0).min(epsilon / 16.0)
            }
            Refinement::Divisions { per_delta, per_epsilon } => (delta / per_delta).min(epsilon / per_epsilon),
            Refinement::Spacing(h) => h,
        }
    }
}

/// Largest spacing `≤ h` that divides every side of `bbox`.
pub fn aligned_grid(bbox: &Aabb, h: f64) -> Result<Grid, RegimeError> {
    let side0 = bbox.hi[0] - bbox.lo[0];
    let start = libm::ceil(side0 / h * (1.0 - 1e-12)) as usize;
    for n in start.max(1)..start.max(1) * 64 {
        let cand = side0 / n as f64;
        if let Ok(g) = Grid::new(*bbox, cand) {
            return Ok(g);
        }
    }
    Err(RegimeError::Config("box sides are not commensurable with the requested spacing".into()))
}

/// One sweep row.
#[derive(Debug, Clone, PartialEq)]
pub struct RegimeRow {
    pub epsilon: f64,
    pub delta: f64,
    pub ratio: f64,
    pub energy: f64,
    pub predicted: f64,
    /// Bound on the energy dropped by kernel truncation.
    pub tail_bound: f64,
    /// `∫_{|ξ| > D₀δ/ε} φ(ξ)|ξ|² dξ` (subcritical rows).
    pub reference_tail: Option<f64>,
    /// `|energy − predicted| / max(|predicted|, 1e-12)`.
    pub rel_error: f64,
    pub spacing: f64,
    /// Failure message; numeric fields are NaN when set.
    pub error: Option<String>,
    /// The row failed because conjugate gradients did not converge.
    pub solver_failed: bool,
}

impl RegimeRow {
    fn failed(epsilon: f64, delta: f64, err: &RegimeError) -> Self {
        Self {
            epsilon,
            delta,
            ratio: epsilon / delta,
            energy: f64::NAN,
            predicted: f64::NAN,
            tail_bound: f64::NAN,
            reference_tail: None,
            rel_error: f64::NAN,
            spacing: f64::NAN,
            error: Some(err.to_string()),
            solver_failed: matches!(err, RegimeError::Cell(CellError::Solver(CgError::NotConverged { .. }))),
        }
    }
}

/// Summary checks over a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct Verdicts {
    /// Energies strictly decrease along the sweep.
    pub energies_decreasing: bool,
    /// Relative errors strictly decrease along the sweep.
    pub errors_decreasing: bool,
    pub max_rel_error: f64,
    /// `C' = energy / reference_tail` at the first (coarsest) row.
    pub tail_constant: Option<f64>,
    /// Every row satisfies `energy ≤ C' · reference_tail`.
    pub within_tail_bound: Option<bool>,
    pub failed_rows: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegimeReport {
    pub regime: Regime,
    pub interior: Aabb,
    pub rows: Vec<RegimeRow>,
    pub verdicts: Verdicts,
    /// Tensors used for critical rows, one per row.
    pub tensors: Vec<Option<HomogenizedTensor>>,
}

/// Strict decrease: each value below `(1 − 1e-9)` times the previous one.
pub fn strictly_decreasing(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[1] < w[0] * (1.0 - 1e-9))
}

impl Verdicts {
    pub fn from_rows(rows: &[RegimeRow]) -> Self {
        let ok: Vec<&RegimeRow> = rows.iter().filter(|r| r.error.is_none()).collect();
        let energies: Vec<f64> = ok.iter().map(|r| r.energy).collect();
        let errors: Vec<f64> = ok.iter().map(|r| r.rel_error).collect();
        let tail_constant = ok.first().and_then(|r| r.reference_tail.filter(|t| *t > 0.0).map(|t| r.energy / t));
        let within_tail_bound = tail_constant.map(|c| {
            ok.iter().all(|r| r.reference_tail.is_some_and(|t| r.energy <= c * t * (1.0 + 1e-12)))
        });
        Self {
            energies_decreasing: strictly_decreasing(&energies),
            errors_decreasing: strictly_decreasing(&errors),
            max_rel_error: errors.iter().copied().fold(0.0, f64::max),
            tail_constant,
            within_tail_bound,
            failed_rows: rows.len() - ok.len(),
        }
    }
}

/// Recovery sequence for `ε ≪ δ`: the mean of `u` over `δ(k+K) ∩ Ω` on each
/// inclusion, and `u` itself off `δE`.
pub fn degenerate_recovery<F: Fn(&[f64]) -> f64>(grid: &Grid, f: F, set: &PerforatedSet, delta: f64) -> GridFunction {
    let u = GridFunction::sample(grid, f, set, delta);
    let means = interpolate::inclusion_means_all(&u, set, delta);
    let d = grid.dim();
    let values = (0..grid.len())
        .map(|i| {
            if !u.mask()[i] {
                return u.values()[i];
            }
            let k = set.inclusion_of(&grid.node(i)[..d], delta).expect("masked node lies in an inclusion");
            means[&k]
        })
        .collect();
    u.with_values(values).expect("finite means")
}

/// The non-compact zero-energy sequence for `ε < δ D`.
///
/// With `Λ` the lattice generated by translations `k` whose inclusions are
/// within interaction range, components of `δE + B_{ε s/2}` are cosets of `Λ`.
/// Taking `k̄ ∉ span Λ`, the function equals `m` on the component of
/// `δ(2m k̄ + K)` and `0` elsewhere.
pub fn zero_energy_sequence(
    set: &PerforatedSet,
    kernel: &RadialKernel,
    grid: &Grid,
    delta: f64,
    epsilon: f64,
    window: i64,
) -> Result<GridFunction, RegimeError> {
    if !kernel.has_compact_support() {
        return Err(RegimeError::UnboundedKernel);
    }
    let d = set.dim();
    let reach = epsilon * kernel.support_radius();
    let threshold = set.compute_d(window);
    let margin = 2.0 * grid.spacing();
    let ratio = reach / delta;
    if !(ratio < threshold) {
        return Err(RegimeError::Precondition { ratio, threshold, margin });
    }
    let distances = set.translation_distances(window);
    let mut open = Vec::new();
    for (k, dist) in &distances {
        let gap = delta * dist;
        if gap < reach {
            open.push(*k);
        } else if gap <= reach + margin {
            return Err(RegimeError::Precondition { ratio, threshold, margin });
        }
    }
    let lattice = IntLattice::generated_by(d, &open);
    if let Some(index) = lattice.index() {
        return Err(RegimeError::FiniteComponentClasses(index));
    }
    let mut kbar = [0; MAX_DIM];
    for a in 0..d {
        let mut e = [0; MAX_DIM];
        e[a] = 1;
        if !lattice.spans(&e) {
            kbar = e;
            break;
        }
    }
    let u = GridFunction::sample(grid, |_| 0.0, set, delta);
    let mut cache: BTreeMap<LatticeIndex, f64> = BTreeMap::new();
    let mut values = u.values().to_vec();
    for (i, v) in values.iter_mut().enumerate() {
        if !u.mask()[i] {
            continue;
        }
        let k = set.inclusion_of(&grid.node(i)[..d], delta).expect("masked node lies in an inclusion");
        *v = *cache.entry(k).or_insert_with(|| component_value(&lattice, &k, &kbar, d));
    }
    Ok(u.with_values(values)?)
}

/// `m` if `k − 2m k̄ ∈ Λ` for some integer `m`, else `0`.
fn component_value(lattice: &IntLattice, k: &LatticeIndex, kbar: &LatticeIndex, d: usize) -> f64 {
    let bound = k[..d].iter().map(|v| v.abs()).max().unwrap_or(0) / 2 + 2;
    for m in -bound..=bound {
        let mut diff = *k;
        for a in 0..d {
            diff[a] -= 2 * m * kbar[a];
        }
        if lattice.contains(&diff) {
            return m as f64;
        }
    }
    0.0
}

/// Corrector values for `e_1, .., e_d`, indexed by the cell node multi-index.
struct Correctors {
    m: usize,
    dim: usize,
    /// `values[a][node]` on the `m^d` cell lattice (zero off `K`).
    values: Vec<Vec<f64>>,
}

impl Correctors {
    fn new(cell: &CellDiscretization) -> Result<Self, RegimeError> {
        let d = cell.dim();
        let m = cell.resolution();
        let mut values = Vec::with_capacity(d);
        for a in 0..d {
            let mut e = [0.0; MAX_DIM];
            e[a] = 1.0;
            let sol = cell.minimize(&e[..d])?;
            let mut full = alloc::vec![0.0; m.pow(d as u32)];
            for (node, w) in cell.nodes().iter().zip(&sol.corrector) {
                let mut idx = 0;
                let mut stride = 1;
                for b in 0..d {
                    idx += node[b] * stride;
                    stride *= m;
                }
                full[idx] = *w;
            }
            values.push(full);
        }
        Ok(Self { m, dim: d, values })
    }

    /// `Σ_a g_a w_{e_a}` at the cell node of grid node `gi`.
    fn at(&self, gi: &[usize; MAX_DIM], lo_cells: &[i64; MAX_DIM], g: &Point) -> f64 {
        // grid node i sits at lo + (i + 1/2) δ/m; with lo = δ·lo_cells its
        // position in the cell centered at the nearest lattice point is
        // (j + 1/2)/m − 1/2 with j = (i + m/2) mod m
        let mut idx = 0;
        let mut stride = 1;
        for b in 0..self.dim {
            let j = ((gi[b] as i64 + (self.m / 2) as i64 + lo_cells[b] * self.m as i64).rem_euclid(self.m as i64)) as usize;
            idx += j * stride;
            stride *= self.m;
        }
        (0..self.dim).map(|a| g[a] * self.values[a][idx]).sum()
    }
}

fn compute_row(cfg: &RegimeConfig, interior: &Aabb, epsilon: f64, delta: f64) -> Result<(RegimeRow, Option<HomogenizedTensor>), RegimeError> {
    let d = cfg.set.dim();
    let reach = cfg.reach()?;
    for a in (0..d).filter(|_| cfg.regime != Regime::Subcritical) {
        let gap = (interior.lo[a] - cfg.omega.lo[a]).min(cfg.omega.hi[a] - interior.hi[a]);
        if gap < epsilon * reach * (1.0 - 1e-12) {
            return Err(RegimeError::Config(format!(
                "interior box is closer than ε·reach = {} to the boundary of Ω",
                epsilon * reach
            )));
        }
    }
    let u = cfg.test_function;
    let mut tensor = None;
    let (grid, field, predicted, reference_tail) = match cfg.regime {
        Regime::Supercritical => {
            let grid = aligned_grid(&cfg.omega, cfg.target_spacing(epsilon, delta))?;
            let field = GridFunction::sample(&grid, |x| u.value(x), &cfg.set, delta);
            let k = cfg.set.measure();
            let c_phi = cfg.kernel.c_phi()?;
            let mut iso = [[0.0; MAX_DIM]; MAX_DIM];
            for (a, row) in iso.iter_mut().enumerate().take(d) {
                row[a] = k * k * c_phi;
            }
            (grid, field, dirichlet_integral(&u, &iso, interior), None)
        }
        Regime::Subcritical => {
            let grid = aligned_grid(&cfg.omega, cfg.target_spacing(epsilon, delta))?;
            let field = degenerate_recovery(&grid, |x| u.value(x), &cfg.set, delta);
            let d0 = cfg.set.compute_d0(crate::geometry::DEFAULT_WINDOW);
            let tail = cfg.kernel.tail_second_moment(d0 * delta / epsilon)?;
            (grid, field, 0.0, Some(tail))
        }
        Regime::Critical => {
            let m = cfg.cell_resolution;
            let h = delta / m as f64;
            let grid = Grid::new(cfg.omega, h).map_err(|e| RegimeError::Alignment(e.to_string()))?;
            let mut lo_cells = [0i64; MAX_DIM];
            for a in 0..d {
                let c = cfg.omega.lo[a] / delta;
                if libm::fabs(c - libm::round(c)) > 1e-9 {
                    return Err(RegimeError::Alignment(format!("Ω.lo[{a}] is not a multiple of δ")));
                }
                lo_cells[a] = libm::round(c) as i64;
            }
            let kappa = epsilon / delta;
            let cell = CellDiscretization::new(&cfg.set, &cfg.kernel, kappa, m, cfg.cell)?;
            let t = cell.homogenized_tensor()?;
            let correctors = Correctors::new(&cell)?;
            let base = GridFunction::sample(&grid, |x| u.value(x), &cfg.set, delta);
            let values: Vec<f64> = (0..grid.len())
                .map(|i| {
                    if !base.mask()[i] {
                        return base.values()[i];
                    }
                    let mi = grid.multi_index(i);
                    let x = grid.node_from_multi(&mi);
                    let g = u.gradient(&x[..d]);
                    base.values()[i] + delta * correctors.at(&mi, &lo_cells, &g)
                })
                .collect();
            let field = base.with_values(values)?;
            let predicted = dirichlet_integral(&u, &t.matrix, interior);
            tensor = Some(t);
            (grid, field, predicted, None)
        }
    };
    let spacing = grid.spacing();
    let ctx = EnergyContext::new(cfg.kernel.clone(), cfg.set.clone(), grid, delta, epsilon, cfg.energy)?;
    let energy = match cfg.regime {
        Regime::Subcritical => ctx.evaluate(&field)?,
        _ => ctx.evaluate_localized(&field, interior)?,
    };
    let rel_error = libm::fabs(energy.value - predicted) / libm::fabs(predicted).max(PREDICTED_FLOOR);
    Ok((
        RegimeRow {
            epsilon,
            delta,
            ratio: epsilon / delta,
            energy: energy.value,
            predicted,
            tail_bound: energy.tail_bound,
            reference_tail,
            rel_error,
            spacing,
            error: None,
            solver_failed: false,
        },
        tensor,
    ))
}

/// Runs every row of the sweep. Failing rows are recorded with their error
/// and the sweep continues.
pub fn run_sweep(cfg: &RegimeConfig) -> Result<RegimeReport, RegimeError> {
    cfg.validate()?;
    let interior = cfg.interior_box()?;
    let results = crate::par::map_indexed(cfg.sweep.len(), |i| {
        let (e, dl) = cfg.sweep[i];
        match compute_row(cfg, &interior, e, dl) {
            Ok((row, t)) => (row, t),
            Err(err) => (RegimeRow::failed(e, dl, &err), None),
        }
    });
    let (rows, tensors): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    let verdicts = Verdicts::from_rows(&rows);
    Ok(RegimeReport { regime: cfg.regime, interior, rows, verdicts, tensors })
}
