//! Subcommand implementations. Each writes its artifacts into the output
//! directory and returns the paths written.

use std::path::{Path, PathBuf};

use nlhom_core::cellproblem::{self, CellOptions};
use nlhom_core::cg::CgError;
use nlhom_core::energy::WeightRule;
use nlhom_core::interpolate::{inclusion_averages, piecewise_constant};
use nlhom_core::regimes::{self, aligned_grid, run_sweep};
use nlhom_core::{
    CellError, EnergyContext, EnergyError, EnergyOptions, Grid, GridFunction, HomogenizedTensor, InclusionShape,
    PerforatedSet, RegimeConfig, RegimeError, RegimeReport,
};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::config::{ConfigError, LoadedConfig, RecoverKind};
use crate::io::{self, IoError, Table};

#[derive(Debug, Error)]
pub enum CommandError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Io(#[from] IoError),
    /// A request the numerics reject (resolution, preconditions).
    #[error("{0}")]
    Rejected(String),
    #[error("{0}")]
    NotConverged(String),
    #[error("{0}")]
    Failed(String),
}

impl CommandError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) | Self::Rejected(_) => 2,
            Self::NotConverged(_) => 3,
            Self::Io(_) | Self::Failed(_) => 1,
        }
    }
}

impl From<CellError> for CommandError {
    fn from(e: CellError) -> Self {
        match e {
            CellError::Solver(CgError::NotConverged { .. }) => Self::NotConverged(e.to_string()),
            CellError::Resolution { .. } | CellError::Kappa(_) | CellError::EmptyMask(_) => Self::Rejected(e.to_string()),
            _ => Self::Failed(e.to_string()),
        }
    }
}

impl From<EnergyError> for CommandError {
    fn from(e: EnergyError) -> Self {
        match e {
            EnergyError::Resolution { .. } | EnergyError::OracleCap { .. } | EnergyError::Scale => Self::Rejected(e.to_string()),
            _ => Self::Failed(e.to_string()),
        }
    }
}

impl From<RegimeError> for CommandError {
    fn from(e: RegimeError) -> Self {
        match e {
            RegimeError::Cell(c) => c.into(),
            RegimeError::Energy(c) => c.into(),
            RegimeError::Precondition { .. }
            | RegimeError::FiniteComponentClasses(_)
            | RegimeError::UnboundedKernel
            | RegimeError::Alignment(_)
            | RegimeError::Config(_) => Self::Rejected(e.to_string()),
            _ => Self::Failed(e.to_string()),
        }
    }
}

/// Everything a subcommand needs.
#[derive(Debug, Clone)]
pub struct Run {
    pub config: LoadedConfig,
    pub out: PathBuf,
    pub seed: u64,
    pub threads: usize,
    pub hash: String,
}

#[derive(Debug, Serialize)]
pub struct Meta {
    pub config_sha256: String,
    pub seed: u64,
    pub threads: usize,
    pub timestamp: u64,
    pub version: &'static str,
    pub config: serde_json::Value,
}

impl Run {
    pub fn new(config: LoadedConfig, out: &Path, seed: Option<u64>, threads: Option<usize>) -> Self {
        let hash = io::sha256_hex(config.canonical_json().as_bytes());
        let seed = seed.unwrap_or(config.run.seed);
        let threads = threads.unwrap_or(config.run.threads);
        Self { config, out: out.to_path_buf(), seed, threads, hash }
    }

    fn meta(&self) -> Meta {
        Meta {
            config_sha256: self.hash.clone(),
            seed: self.seed,
            threads: self.threads,
            timestamp: io::timestamp(),
            version: env!("CARGO_PKG_VERSION"),
            config: serde_json::to_value(&self.config.run).expect("config serializes"),
        }
    }

    fn write(&self, name: &str, contents: &str) -> Result<PathBuf, CommandError> {
        Ok(io::write_file(&self.out, name, contents)?)
    }

    fn auto_spacing(&self, set: &PerforatedSet, delta: f64, epsilon: f64) -> f64 {
        let c = set.shape().min_half_width(set.dim());
        (delta * c / 4.0).min(epsilon / 16.0)
    }
}

#[derive(Debug, Serialize)]
struct QueryReport {
    delta: f64,
    epsilon: f64,
    ratio: f64,
    connected: bool,
    component_count: usize,
    components_per_period: Option<u64>,
    generator_translations: Vec<Vec<i64>>,
}

#[derive(Debug, Serialize)]
struct GeometryReport {
    #[serde(flatten)]
    meta: Meta,
    dim: usize,
    #[serde(rename = "D")]
    d: f64,
    #[serde(rename = "D0")]
    d0: f64,
    measure: f64,
    query: Option<QueryReport>,
}

/// Raster of `K` on the unit cell at resolution `m` (2d).
fn raster(shape: &InclusionShape, m: usize) -> Vec<bool> {
    if let InclusionShape::Mask { m: mm, cells, .. } = shape {
        if *mm == m {
            return cells.clone();
        }
    }
    (0..m * m)
        .map(|i| {
            let p = [((i % m) as f64 + 0.5) / m as f64 - 0.5, ((i / m) as f64 + 0.5) / m as f64 - 0.5];
            shape.contains_local(&p)
        })
        .collect()
}

pub fn geometry(run: &Run) -> Result<Vec<PathBuf>, CommandError> {
    let cfg = &run.config;
    let set = cfg.perforated_set()?;
    let window = cfg.run.geometry.window;
    let d = set.dim();
    let query = match &cfg.run.query {
        Some(q) => {
            let omega = q.omega.to_aabb();
            let rep = set.components(q.delta, q.epsilon, &omega, window).map_err(|e| CommandError::Rejected(e.to_string()))?;
            Some(QueryReport {
                delta: q.delta,
                epsilon: q.epsilon,
                ratio: q.epsilon / q.delta,
                connected: rep.is_connected(),
                component_count: rep.component_count,
                components_per_period: rep.per_period,
                generator_translations: rep.generator_translations.iter().map(|k| k[..d].to_vec()).collect(),
            })
        }
        None => None,
    };
    let report = GeometryReport {
        meta: run.meta(),
        dim: d,
        d: set.compute_d(window),
        d0: set.compute_d0(window),
        measure: set.measure(),
        query,
    };
    let mut paths = vec![run.write("geometry.json", &io::to_json(&report))?];
    if d == 2 {
        let m = match set.shape() {
            InclusionShape::Mask { m, .. } => *m,
            _ => 64,
        };
        let mut pgm = format!("# config_sha256={}\n", run.hash);
        let body = io::pgm_mask(m, &raster(set.shape(), m));
        // the comment goes after the magic number
        let (magic, rest) = body.split_once('\n').expect("pgm header");
        pgm = format!("{magic}\n{}{rest}", pgm);
        paths.push(run.write("inclusion.pgm", &pgm)?);
    }
    Ok(paths)
}

#[derive(Debug, Serialize)]
struct EnergyValue {
    value: f64,
    tail_bound: f64,
}

#[derive(Debug, Serialize)]
struct EnergyReport {
    #[serde(flatten)]
    meta: Meta,
    delta: f64,
    epsilon: f64,
    spacing: f64,
    shape: Vec<usize>,
    masked_nodes: usize,
    mask_fraction: f64,
    energy: EnergyValue,
    localized: Option<EnergyValue>,
    oracle: Option<f64>,
}

pub fn energy(run: &Run) -> Result<Vec<PathBuf>, CommandError> {
    let cfg = &run.config;
    let e = cfg.run.energy.as_ref().ok_or(ConfigError::MissingTable("energy"))?;
    let set = cfg.perforated_set()?;
    let kernel = cfg.kernel()?;
    let omega = e.omega.to_aabb();
    let h = e.h.unwrap_or_else(|| run.auto_spacing(&set, e.delta, e.epsilon));
    let grid = aligned_grid(&omega, h)?;
    let f = cfg.test_function(&e.function, run.seed);
    let u = GridFunction::sample(&grid, |x| f.value(x), &set, e.delta);
    let options = EnergyOptions {
        tail_tolerance: e.tail_tolerance,
        truncation_radius: e.truncation_radius,
        weight_rule: WeightRule::from(e.weight_rule),
        ..EnergyOptions::default()
    };
    let ctx = EnergyContext::new(kernel, set, grid.clone(), e.delta, e.epsilon, options)?;
    let full = ctx.evaluate(&u)?;
    let localized = match &e.interior {
        Some(b) => {
            let v = ctx.evaluate_localized(&u, &b.to_aabb())?;
            Some(EnergyValue { value: v.value, tail_bound: v.tail_bound })
        }
        None => None,
    };
    let oracle = if e.oracle { Some(ctx.oracle_evaluate(&u)?) } else { None };
    let report = EnergyReport {
        meta: run.meta(),
        delta: e.delta,
        epsilon: e.epsilon,
        spacing: grid.spacing(),
        shape: grid.shape()[..grid.dim()].to_vec(),
        masked_nodes: u.masked_count(),
        mask_fraction: u.mask_fraction(),
        energy: EnergyValue { value: full.value, tail_bound: full.tail_bound },
        localized,
        oracle,
    };
    let mut paths = vec![run.write("energy.json", &io::to_json(&report))?];
    if e.write_field {
        paths.push(run.write("field.csv", &io::field_csv(&u, &run.hash))?);
    }
    Ok(paths)
}

#[derive(Debug, Serialize)]
struct TensorJson {
    kappa: f64,
    normalization: &'static str,
    matrix: Vec<Vec<f64>>,
    raw_min: Vec<f64>,
    cg_iters: usize,
    residual: f64,
}

impl TensorJson {
    fn from_tensor(t: &HomogenizedTensor) -> Self {
        let d = t.dim;
        Self {
            kappa: t.kappa,
            normalization: t.normalization(),
            matrix: (0..d).map(|a| t.matrix[a][..d].to_vec()).collect(),
            raw_min: t.raw_min.clone(),
            cg_iters: t.iterations,
            residual: t.residual,
        }
    }
}

#[derive(Debug, Serialize)]
struct CellReport {
    #[serde(flatten)]
    meta: Meta,
    m: usize,
    /// `|K|² C_φ`, the large-κ limit of the diagonal.
    limit: f64,
    tensors: Vec<TensorJson>,
}

pub fn cell(run: &Run) -> Result<Vec<PathBuf>, CommandError> {
    let cfg = &run.config;
    let c = cfg.run.cell.as_ref().ok_or(ConfigError::MissingTable("cell"))?;
    let set = cfg.perforated_set()?;
    let kernel = cfg.kernel()?;
    let d = set.dim();
    let options = CellOptions {
        tail_tolerance: c.tail_tolerance,
        weight_rule: WeightRule::from(c.weight_rule),
        rel_tol: c.rel_tol,
        ..CellOptions::default()
    };
    let tensors: Vec<HomogenizedTensor> = c
        .kappa
        .par_iter()
        .map(|&k| cellproblem::homogenized_tensor(&set, &kernel, k, c.m, options))
        .collect::<Result<_, _>>()?;
    let limit = set.measure().powi(2) * kernel.c_phi().map_err(|e| CommandError::Failed(e.to_string()))?;
    let mut header = vec!["kappa".to_string()];
    for a in 0..d {
        for b in a..d {
            header.push(format!("a{}{}", a + 1, b + 1));
        }
    }
    header.extend(["min_eig", "cg_iters", "residual"].map(String::from));
    let mut table = Table::new(header);
    for t in &tensors {
        let mut row = vec![t.kappa];
        for a in 0..d {
            for b in a..d {
                row.push(t.matrix[a][b]);
            }
        }
        let min_eig = t.eigenvalues().into_iter().fold(f64::INFINITY, f64::min);
        row.extend([min_eig, t.iterations as f64, t.residual]);
        table.push(row);
    }
    let report = CellReport { meta: run.meta(), m: c.m, limit, tensors: tensors.iter().map(TensorJson::from_tensor).collect() };
    Ok(vec![
        run.write("cell.json", &io::to_json(&report))?,
        run.write("cell.csv", &table.to_csv(&run.hash))?,
        run.write("cell.dat", &table.to_dat(&run.hash))?,
    ])
}

#[derive(Debug, Serialize)]
struct RowJson {
    epsilon: f64,
    delta: f64,
    ratio: f64,
    energy: f64,
    predicted: f64,
    tail_bound: f64,
    reference_tail: Option<f64>,
    rel_error: f64,
    spacing: f64,
    error: Option<String>,
}

#[derive(Debug, Serialize)]
struct VerdictJson {
    energies_decreasing: bool,
    errors_decreasing: bool,
    max_rel_error: f64,
    tail_constant: Option<f64>,
    within_tail_bound: Option<bool>,
    failed_rows: usize,
}

#[derive(Debug, Serialize)]
struct SweepReport {
    #[serde(flatten)]
    meta: Meta,
    regime: &'static str,
    interior: Vec<Vec<f64>>,
    rows: Vec<RowJson>,
    verdicts: VerdictJson,
}

/// The core sweep configuration described by the `[sweep]` table.
pub fn regime_config(cfg: &LoadedConfig) -> Result<RegimeConfig, CommandError> {
    let s = cfg.run.sweep.as_ref().ok_or(ConfigError::MissingTable("sweep"))?;
    let f = cfg
        .test_function(&s.function, 0)
        .closed()
        .ok_or_else(|| CommandError::Rejected("sweeps need an affine or quadratic function".into()))?;
    let mut rc = RegimeConfig::new(s.regime.into(), cfg.kernel()?, cfg.perforated_set()?, f, s.omega.to_aabb());
    rc.interior = s.interior.as_ref().map(|b| b.to_aabb());
    rc.sweep = s.pairs.iter().map(|[e, d]| (*e, *d)).collect();
    rc.refinement = cfg.refinement(s);
    rc.cell_resolution = s.cell_resolution;
    rc.energy = EnergyOptions { tail_tolerance: s.tail_tolerance, weight_rule: s.weight_rule.into(), ..EnergyOptions::default() };
    rc.cell = CellOptions { tail_tolerance: s.tail_tolerance, weight_rule: s.weight_rule.into(), ..CellOptions::default() };
    Ok(rc)
}

pub const SWEEP_HEADER: [&str; 7] = ["epsilon", "delta", "ratio", "energy", "predicted", "tail_bound", "rel_error"];

pub fn sweep_table(report: &RegimeReport) -> Table {
    let mut t = Table::new(SWEEP_HEADER);
    for r in &report.rows {
        t.push(vec![r.epsilon, r.delta, r.ratio, r.energy, r.predicted, r.tail_bound, r.rel_error]);
    }
    t
}

pub fn sweep(run: &Run) -> Result<Vec<PathBuf>, CommandError> {
    let rc = regime_config(&run.config)?;
    let report = run_sweep(&rc)?;
    let table = sweep_table(&report);
    let d = rc.set.dim();
    let v = &report.verdicts;
    let json = SweepReport {
        meta: run.meta(),
        regime: report.regime.name(),
        interior: vec![report.interior.lo[..d].to_vec(), report.interior.hi[..d].to_vec()],
        rows: report
            .rows
            .iter()
            .map(|r| RowJson {
                epsilon: r.epsilon,
                delta: r.delta,
                ratio: r.ratio,
                energy: r.energy,
                predicted: r.predicted,
                tail_bound: r.tail_bound,
                reference_tail: r.reference_tail,
                rel_error: r.rel_error,
                spacing: r.spacing,
                error: r.error.clone(),
            })
            .collect(),
        verdicts: VerdictJson {
            energies_decreasing: v.energies_decreasing,
            errors_decreasing: v.errors_decreasing,
            max_rel_error: v.max_rel_error,
            tail_constant: v.tail_constant,
            within_tail_bound: v.within_tail_bound,
            failed_rows: v.failed_rows,
        },
    };
    let paths = vec![
        run.write("sweep.csv", &table.to_csv(&run.hash))?,
        run.write("sweep.dat", &table.to_dat(&run.hash))?,
        run.write("sweep.json", &io::to_json(&json))?,
    ];
    if let Some(r) = report.rows.iter().find(|r| r.solver_failed) {
        return Err(CommandError::NotConverged(r.error.clone().unwrap_or_default()));
    }
    Ok(paths)
}

#[derive(Debug, Serialize)]
struct RecoverReport {
    #[serde(flatten)]
    meta: Meta,
    kind: &'static str,
    delta: f64,
    epsilon: f64,
    spacing: f64,
    energy: f64,
    tail_bound: f64,
    /// Degenerate recovery: `∫_{|ξ|>D₀δ/ε} φ|ξ|²`.
    reference_tail: Option<f64>,
    /// Degenerate recovery: masked L² distance to the sampled function.
    l2_distance: Option<f64>,
    /// Zero-energy sequence: L² norm of the piecewise-constant interpolant.
    interpolant_l2: Option<f64>,
    max_abs_value: f64,
}

pub fn recover(run: &Run) -> Result<Vec<PathBuf>, CommandError> {
    let cfg = &run.config;
    let rc = cfg.run.recover.as_ref().ok_or(ConfigError::MissingTable("recover"))?;
    let set = cfg.perforated_set()?;
    let kernel = cfg.kernel()?;
    let h = rc.h.unwrap_or_else(|| run.auto_spacing(&set, rc.delta, rc.epsilon));
    let grid: Grid = aligned_grid(&rc.omega.to_aabb(), h)?;
    let window = cfg.run.geometry.window;
    let (field, reference_tail, l2_distance, interpolant_l2, kind) = match rc.kind {
        RecoverKind::Degenerate => {
            let f = cfg.test_function(rc.function.as_ref().expect("validated"), run.seed);
            let field = regimes::degenerate_recovery(&grid, |x| f.value(x), &set, rc.delta);
            let u = GridFunction::sample(&grid, |x| f.value(x), &set, rc.delta);
            let dist = field.masked_l2_distance(&u, None).map_err(|e| CommandError::Failed(e.to_string()))?;
            let tail = kernel
                .tail_second_moment(set.compute_d0(window) * rc.delta / rc.epsilon)
                .map_err(|e| CommandError::Failed(e.to_string()))?;
            (field, Some(tail), Some(dist), None, "degenerate")
        }
        RecoverKind::ZeroEnergy => {
            let field = regimes::zero_energy_sequence(&set, &kernel, &grid, rc.delta, rc.epsilon, window)?;
            let avgs = inclusion_averages(&field, &set, rc.delta).map_err(|e| CommandError::Failed(e.to_string()))?;
            let pc = piecewise_constant(&avgs, &grid).map_err(|e| CommandError::Failed(e.to_string()))?;
            (field, None, None, Some(pc.masked_l2_norm(None)), "zero_energy")
        }
    };
    let ctx = EnergyContext::new(kernel, set, grid.clone(), rc.delta, rc.epsilon, EnergyOptions::default())?;
    let energy = ctx.evaluate(&field)?;
    let max_abs_value = field
        .values()
        .iter()
        .zip(field.mask())
        .filter(|(_, m)| **m)
        .map(|(v, _)| v.abs())
        .fold(0.0, f64::max);
    let report = RecoverReport {
        meta: run.meta(),
        kind,
        delta: rc.delta,
        epsilon: rc.epsilon,
        spacing: grid.spacing(),
        energy: energy.value,
        tail_bound: energy.tail_bound,
        reference_tail,
        l2_distance,
        interpolant_l2,
        max_abs_value,
    };
    Ok(vec![run.write("recover.json", &io::to_json(&report))?, run.write("field.csv", &io::field_csv(&field, &run.hash))?])
}
