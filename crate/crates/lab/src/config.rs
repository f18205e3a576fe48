//! Run configuration: a TOML file with one table per subcommand.
//!
//! Every table rejects unknown keys. After deserialization the cross-field
//! constraints are checked again and violations are reported with the key
//! path and, when the key can be found in the source, its line.

use std::fmt;
use std::path::{Path, PathBuf};

use nlhom_core::energy::WeightRule;
use nlhom_core::geometry::DEFAULT_WINDOW;
use nlhom_core::regimes::Refinement;
use nlhom_core::{Aabb, InclusionShape, PerforatedSet, RadialKernel, Regime, TestFunction};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::io;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Parse(String),
    #[error("{}", located(.key, .line, .message))]
    Invalid { key: String, line: Option<usize>, message: String },
    #[error("missing table [{0}] required by this subcommand")]
    MissingTable(&'static str),
}

fn located(key: &str, line: &Option<usize>, message: &str) -> String {
    match line {
        Some(l) => format!("line {l}: `{key}`: {message}"),
        None => format!("`{key}`: {message}"),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    Indicator,
    Exponential,
    Tabulated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelConfig {
    pub kind: KernelKind,
    /// Support radius of the indicator profile.
    pub s: Option<f64>,
    /// Decay rate of the exponential profile.
    pub lambda: Option<f64>,
    pub t: Option<Vec<f64>>,
    pub phi0: Option<Vec<f64>>,
    /// Two-column CSV `t,phi0` for tabulated profiles.
    pub profile_file: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeKind {
    Ball,
    Ellipse,
    FullCell,
    Mask,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    pub dim: usize,
    pub shape: ShapeKind,
    pub c: Option<f64>,
    pub semi_axes: Option<Vec<f64>>,
    /// Raster resolution of `full_cell` masks.
    pub resolution: Option<usize>,
    /// PGM raster (nonzero = inside) for `mask`; 2d only.
    pub mask_file: Option<String>,
    #[serde(default = "default_window")]
    pub window: i64,
}

fn default_window() -> i64 {
    DEFAULT_WINDOW
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxConfig {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BoxConfig {
    pub fn to_aabb(&self) -> Aabb {
        Aabb::new(&self.lo, &self.hi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FunctionKind {
    Affine,
    Quadratic,
    /// A random trigonometric polynomial drawn from the run seed.
    RandomSmooth,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionConfig {
    pub kind: FunctionKind,
    pub slope: Option<Vec<f64>>,
    #[serde(default)]
    pub offset: f64,
    pub coeffs: Option<Vec<f64>>,
    #[serde(default = "default_modes")]
    pub modes: usize,
}

fn default_modes() -> usize {
    4
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightRuleConfig {
    #[default]
    CellAverage,
    PointSample,
}

impl From<WeightRuleConfig> for WeightRule {
    fn from(w: WeightRuleConfig) -> Self {
        match w {
            WeightRuleConfig::CellAverage => WeightRule::CellAverage,
            WeightRuleConfig::PointSample => WeightRule::PointSample,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QueryConfig {
    pub delta: f64,
    pub epsilon: f64,
    pub omega: BoxConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnergyConfig {
    pub delta: f64,
    pub epsilon: f64,
    /// Grid spacing; defaults to `min(δ c_min / 4, ε / 16)`.
    pub h: Option<f64>,
    pub omega: BoxConfig,
    pub interior: Option<BoxConfig>,
    pub function: FunctionConfig,
    #[serde(default)]
    pub weight_rule: WeightRuleConfig,
    #[serde(default = "default_tail")]
    pub tail_tolerance: f64,
    pub truncation_radius: Option<f64>,
    /// Also run the brute-force double sum.
    #[serde(default)]
    pub oracle: bool,
    /// Write the sampled field as CSV.
    #[serde(default)]
    pub write_field: bool,
}

fn default_tail() -> f64 {
    1e-6
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellConfig {
    pub kappa: Vec<f64>,
    pub m: usize,
    #[serde(default)]
    pub weight_rule: WeightRuleConfig,
    #[serde(default = "default_rel_tol")]
    pub rel_tol: f64,
    #[serde(default = "default_tail")]
    pub tail_tolerance: f64,
}

fn default_rel_tol() -> f64 {
    1e-10
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegimeKind {
    Subcritical,
    Critical,
    Supercritical,
}

impl From<RegimeKind> for Regime {
    fn from(r: RegimeKind) -> Self {
        match r {
            RegimeKind::Subcritical => Regime::Subcritical,
            RegimeKind::Critical => Regime::Critical,
            RegimeKind::Supercritical => Regime::Supercritical,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RefinementRule {
    #[default]
    Auto,
    Divisions,
    Spacing,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RefinementConfig {
    #[serde(default)]
    pub rule: RefinementRule,
    pub per_delta: Option<f64>,
    pub per_epsilon: Option<f64>,
    pub h: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub regime: RegimeKind,
    /// `[ε, δ]` pairs in sweep order.
    #[serde(default)]
    pub pairs: Vec<[f64; 2]>,
    pub omega: BoxConfig,
    pub interior: Option<BoxConfig>,
    pub function: FunctionConfig,
    #[serde(default)]
    pub refinement: RefinementConfig,
    #[serde(default = "default_cell_resolution")]
    pub cell_resolution: usize,
    #[serde(default)]
    pub weight_rule: WeightRuleConfig,
    #[serde(default = "default_tail")]
    pub tail_tolerance: f64,
}

fn default_cell_resolution() -> usize {
    16
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecoverKind {
    /// Per-inclusion means on `δE`, `u` elsewhere.
    Degenerate,
    /// The integer-valued zero-energy sequence.
    ZeroEnergy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecoverConfig {
    pub kind: RecoverKind,
    pub delta: f64,
    pub epsilon: f64,
    pub h: Option<f64>,
    pub omega: BoxConfig,
    pub function: Option<FunctionConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_threads")]
    pub threads: usize,
    pub kernel: KernelConfig,
    pub geometry: GeometryConfig,
    pub query: Option<QueryConfig>,
    pub energy: Option<EnergyConfig>,
    pub cell: Option<CellConfig>,
    pub sweep: Option<SweepConfig>,
    pub recover: Option<RecoverConfig>,
}

fn default_threads() -> usize {
    1
}

/// A parsed and validated configuration with its source.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub run: RunConfig,
    pub source: String,
    /// Directory against which relative file paths are resolved.
    pub base: PathBuf,
}

impl fmt::Display for KernelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Indicator => "indicator",
            Self::Exponential => "exponential",
            Self::Tabulated => "tabulated",
        })
    }
}

/// Line (1-based) of `key` inside table `table` (dotted), if present.
pub fn locate(source: &str, path: &str) -> Option<usize> {
    let (table, key) = match path.rfind('.') {
        Some(i) => (&path[..i], &path[i + 1..]),
        None => ("", path),
    };
    let mut current = String::new();
    for (n, line) in source.lines().enumerate() {
        let t = line.trim();
        if t.starts_with('[') && t.ends_with(']') {
            current = t.trim_matches(|c| c == '[' || c == ']').trim().to_string();
            continue;
        }
        if current != table {
            continue;
        }
        if let Some((k, _)) = t.split_once('=') {
            if k.trim() == key {
                return Some(n + 1);
            }
        }
    }
    None
}

struct Checker<'a> {
    source: &'a str,
}

impl Checker<'_> {
    fn fail(&self, key: &str, message: impl Into<String>) -> ConfigError {
        ConfigError::Invalid { key: key.to_string(), line: locate(self.source, key), message: message.into() }
    }

    fn positive(&self, key: &str, v: f64) -> Result<(), ConfigError> {
        if v > 0.0 && v.is_finite() {
            Ok(())
        } else {
            Err(self.fail(key, format!("must be a positive finite number, got {v}")))
        }
    }

    fn boxed(&self, key: &str, b: &BoxConfig, dim: usize) -> Result<(), ConfigError> {
        if b.lo.len() != dim || b.hi.len() != dim {
            return Err(self.fail(&format!("{key}.lo"), format!("box corners must have {dim} coordinates")));
        }
        if b.lo.iter().zip(&b.hi).any(|(l, h)| !l.is_finite() || !h.is_finite() || l >= h) {
            return Err(self.fail(&format!("{key}.hi"), "box must satisfy lo < hi on every axis"));
        }
        Ok(())
    }

    fn function(&self, key: &str, f: &FunctionConfig, dim: usize) -> Result<(), ConfigError> {
        match f.kind {
            FunctionKind::Affine => match &f.slope {
                Some(s) if s.len() == dim => Ok(()),
                _ => Err(self.fail(&format!("{key}.slope"), format!("affine functions need a slope with {dim} entries"))),
            },
            FunctionKind::Quadratic => match &f.coeffs {
                Some(s) if s.len() == dim => Ok(()),
                _ => Err(self.fail(&format!("{key}.coeffs"), format!("quadratic functions need {dim} coefficients"))),
            },
            FunctionKind::RandomSmooth if f.modes == 0 => Err(self.fail(&format!("{key}.modes"), "need at least one mode")),
            FunctionKind::RandomSmooth => Ok(()),
        }
    }

    fn closed_form(&self, key: &str, f: &FunctionConfig) -> Result<(), ConfigError> {
        if f.kind == FunctionKind::RandomSmooth {
            return Err(self.fail(&format!("{key}.kind"), "sweeps need a function with a closed-form gradient (affine or quadratic)"));
        }
        Ok(())
    }
}

pub fn parse_str(source: &str, base: &Path) -> Result<LoadedConfig, ConfigError> {
    let run: RunConfig = toml::from_str(source).map_err(|e| ConfigError::Parse(e.to_string()))?;
    let loaded = LoadedConfig { run, source: source.to_string(), base: base.to_path_buf() };
    loaded.validate()?;
    Ok(loaded)
}

pub fn parse_config(path: &Path) -> Result<LoadedConfig, ConfigError> {
    let source = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    parse_str(&source, &base)
}

impl LoadedConfig {
    fn checker(&self) -> Checker<'_> {
        Checker { source: &self.source }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let ck = self.checker();
        let r = &self.run;
        let g = &r.geometry;
        if !(1..=3).contains(&g.dim) {
            return Err(ck.fail("geometry.dim", format!("dimension must be 1, 2 or 3, got {}", g.dim)));
        }
        let d = g.dim;
        if r.threads == 0 {
            return Err(ck.fail("threads", "thread count must be at least 1"));
        }
        if g.window < 1 {
            return Err(ck.fail("geometry.window", "translation window must be at least 1"));
        }
        match g.shape {
            ShapeKind::Ball => {
                let c = g.c.ok_or_else(|| ck.fail("geometry.c", "ball inclusions need a radius c"))?;
                if !(c > 0.0 && c < 0.5) {
                    return Err(ck.fail("geometry.c", format!("c = {c} violates the invariant 0 < c < 1/2")));
                }
            }
            ShapeKind::Ellipse => {
                let axes = g.semi_axes.as_ref().ok_or_else(|| ck.fail("geometry.semi_axes", "ellipse inclusions need semi_axes"))?;
                if axes.len() != d {
                    return Err(ck.fail("geometry.semi_axes", format!("expected {d} semi-axes, got {}", axes.len())));
                }
                if let Some(c) = axes.iter().find(|c| !(**c > 0.0 && **c < 0.5)) {
                    return Err(ck.fail("geometry.semi_axes", format!("semi-axis {c} violates the invariant 0 < c_i < 1/2")));
                }
            }
            ShapeKind::FullCell => {
                if g.resolution.is_some_and(|m| m == 0) {
                    return Err(ck.fail("geometry.resolution", "resolution must be positive"));
                }
            }
            ShapeKind::Mask => {
                if g.mask_file.is_none() {
                    return Err(ck.fail("geometry.mask_file", "mask inclusions need a PGM mask_file"));
                }
                if d != 2 {
                    return Err(ck.fail("geometry.dim", "PGM masks describe 2d inclusions"));
                }
            }
        }
        let k = &r.kernel;
        match k.kind {
            KernelKind::Indicator => ck.positive("kernel.s", k.s.ok_or_else(|| ck.fail("kernel.s", "indicator kernels need s"))?)?,
            KernelKind::Exponential => {
                ck.positive("kernel.lambda", k.lambda.ok_or_else(|| ck.fail("kernel.lambda", "exponential kernels need lambda"))?)?
            }
            KernelKind::Tabulated => {
                let inline = k.t.is_some() || k.phi0.is_some();
                if inline == k.profile_file.is_some() {
                    return Err(ck.fail("kernel.t", "tabulated kernels need either t and phi0 or profile_file"));
                }
                if inline && (k.t.is_none() || k.phi0.is_none()) {
                    return Err(ck.fail("kernel.phi0", "t and phi0 must be given together"));
                }
            }
        }
        // constructors enforce the remaining shape and kernel invariants
        self.perforated_set()?;
        self.kernel()?;
        if let Some(q) = &r.query {
            ck.positive("query.delta", q.delta)?;
            ck.positive("query.epsilon", q.epsilon)?;
            ck.boxed("query.omega", &q.omega, d)?;
        }
        if let Some(e) = &r.energy {
            ck.positive("energy.delta", e.delta)?;
            ck.positive("energy.epsilon", e.epsilon)?;
            if let Some(h) = e.h {
                ck.positive("energy.h", h)?;
                if h > e.epsilon {
                    return Err(ck.fail("energy.h", format!("h = {h} exceeds ε = {}; the kernel is unresolved", e.epsilon)));
                }
            }
            ck.boxed("energy.omega", &e.omega, d)?;
            if let Some(i) = &e.interior {
                ck.boxed("energy.interior", i, d)?;
                if !i.to_aabb().is_inside(&e.omega.to_aabb()) {
                    return Err(ck.fail("energy.interior.lo", "interior box must lie inside omega"));
                }
            }
            ck.function("energy.function", &e.function, d)?;
            ck.positive("energy.tail_tolerance", e.tail_tolerance)?;
            if let Some(t) = e.truncation_radius {
                ck.positive("energy.truncation_radius", t)?;
            }
        }
        if let Some(c) = &r.cell {
            if c.kappa.is_empty() {
                return Err(ck.fail("cell.kappa", "give at least one κ"));
            }
            for &kp in &c.kappa {
                ck.positive("cell.kappa", kp)?;
            }
            if c.m < 2 {
                return Err(ck.fail("cell.m", "cell resolution must be at least 2"));
            }
            ck.positive("cell.rel_tol", c.rel_tol)?;
            ck.positive("cell.tail_tolerance", c.tail_tolerance)?;
        }
        if let Some(s) = &r.sweep {
            for (i, [e, dl]) in s.pairs.iter().enumerate() {
                if !(*e > 0.0 && *dl > 0.0 && e.is_finite() && dl.is_finite()) {
                    return Err(ck.fail("sweep.pairs", format!("pair {i} = [{e}, {dl}] must be positive")));
                }
            }
            let ratios: Vec<f64> = s.pairs.iter().map(|[e, dl]| e / dl).collect();
            let ordered = match s.regime {
                RegimeKind::Subcritical => ratios.windows(2).all(|w| w[1] <= w[0]),
                RegimeKind::Supercritical => ratios.windows(2).all(|w| w[1] >= w[0]),
                RegimeKind::Critical => true,
            };
            if !ordered {
                return Err(ck.fail("sweep.pairs", "ε/δ must be nonincreasing for subcritical and nondecreasing for supercritical sweeps"));
            }
            ck.boxed("sweep.omega", &s.omega, d)?;
            if let Some(i) = &s.interior {
                ck.boxed("sweep.interior", i, d)?;
                if !i.to_aabb().is_inside(&s.omega.to_aabb()) {
                    return Err(ck.fail("sweep.interior.lo", "interior box must lie inside omega"));
                }
            }
            ck.function("sweep.function", &s.function, d)?;
            ck.closed_form("sweep.function", &s.function)?;
            match s.refinement.rule {
                RefinementRule::Auto => {}
                RefinementRule::Divisions => {
                    ck.positive("refinement.per_delta", s.refinement.per_delta.unwrap_or(f64::NAN))
                        .map_err(|_| ck.fail("sweep.refinement.per_delta", "divisions need positive per_delta"))?;
                    ck.positive("refinement.per_epsilon", s.refinement.per_epsilon.unwrap_or(f64::NAN))
                        .map_err(|_| ck.fail("sweep.refinement.per_epsilon", "divisions need positive per_epsilon"))?;
                }
                RefinementRule::Spacing => {
                    ck.positive("refinement.h", s.refinement.h.unwrap_or(f64::NAN))
                        .map_err(|_| ck.fail("sweep.refinement.h", "spacing rule needs a positive h"))?;
                }
            }
            if s.regime == RegimeKind::Critical && (s.cell_resolution < 2 || s.cell_resolution % 2 != 0) {
                return Err(ck.fail("sweep.cell_resolution", "critical sweeps need an even cell resolution"));
            }
            ck.positive("sweep.tail_tolerance", s.tail_tolerance)?;
        }
        if let Some(rc) = &r.recover {
            ck.positive("recover.delta", rc.delta)?;
            ck.positive("recover.epsilon", rc.epsilon)?;
            if let Some(h) = rc.h {
                ck.positive("recover.h", h)?;
            }
            ck.boxed("recover.omega", &rc.omega, d)?;
            match (&rc.kind, &rc.function) {
                (RecoverKind::Degenerate, None) => {
                    return Err(ck.fail("recover.function", "degenerate recovery needs a function"));
                }
                (_, Some(f)) => ck.function("recover.function", f, d)?,
                _ => {}
            }
            if rc.kind == RecoverKind::ZeroEnergy && r.kernel.kind == KernelKind::Exponential {
                return Err(ck.fail("kernel.kind", "zero-energy sequences need a compactly supported kernel"));
            }
        }
        Ok(())
    }

    fn resolve(&self, file: &str) -> PathBuf {
        let p = Path::new(file);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base.join(p)
        }
    }

    pub fn perforated_set(&self) -> Result<PerforatedSet, ConfigError> {
        let ck = self.checker();
        let g = &self.run.geometry;
        let shape = match g.shape {
            ShapeKind::Ball => InclusionShape::ball(g.c.unwrap_or(f64::NAN)),
            ShapeKind::Ellipse => InclusionShape::ellipse(g.semi_axes.as_deref().unwrap_or(&[])),
            ShapeKind::FullCell => InclusionShape::full_cell(g.resolution.unwrap_or(8), g.dim),
            ShapeKind::Mask => {
                let file = g.mask_file.as_deref().unwrap_or_default();
                let (m, cells) = io::read_pgm_mask(&self.resolve(file))
                    .map_err(|e| ck.fail("geometry.mask_file", e.to_string()))?;
                InclusionShape::Mask { m, dim: 2, cells }
            }
        };
        let key = match g.shape {
            ShapeKind::Ball => "geometry.c",
            ShapeKind::Ellipse => "geometry.semi_axes",
            ShapeKind::FullCell => "geometry.resolution",
            ShapeKind::Mask => "geometry.mask_file",
        };
        PerforatedSet::new(shape, g.dim).map_err(|e| ck.fail(key, e.to_string()))
    }

    pub fn kernel(&self) -> Result<RadialKernel, ConfigError> {
        let ck = self.checker();
        let k = &self.run.kernel;
        let d = self.run.geometry.dim;
        let built = match k.kind {
            KernelKind::Indicator => RadialKernel::indicator(k.s.unwrap_or(f64::NAN), d),
            KernelKind::Exponential => RadialKernel::exponential(k.lambda.unwrap_or(f64::NAN), d),
            KernelKind::Tabulated => {
                let (t, phi) = match &k.profile_file {
                    Some(f) => io::read_profile_csv(&self.resolve(f)).map_err(|e| ck.fail("kernel.profile_file", e.to_string()))?,
                    None => (k.t.clone().unwrap_or_default(), k.phi0.clone().unwrap_or_default()),
                };
                RadialKernel::tabulated(t, phi, d)
            }
        };
        let kernel = built.map_err(|e| ck.fail("kernel.kind", e.to_string()))?;
        kernel.c_phi().map_err(|e| ck.fail("kernel.kind", format!("second moment is not finite: {e}")))?;
        Ok(kernel)
    }

    pub fn test_function(&self, f: &FunctionConfig, seed: u64) -> Function {
        match f.kind {
            FunctionKind::Affine => Function::Closed(TestFunction::affine(f.slope.as_deref().unwrap_or(&[]), f.offset)),
            FunctionKind::Quadratic => {
                let mut coeffs = [0.0; 3];
                for (c, v) in coeffs.iter_mut().zip(f.coeffs.as_deref().unwrap_or(&[])) {
                    *c = *v;
                }
                Function::Closed(TestFunction::Quadratic { coeffs })
            }
            FunctionKind::RandomSmooth => Function::Random(RandomSmooth::new(self.run.geometry.dim, f.modes, seed)),
        }
    }

    pub fn refinement(&self, s: &SweepConfig) -> Refinement {
        match s.refinement.rule {
            RefinementRule::Auto => Refinement::Auto,
            RefinementRule::Divisions => Refinement::Divisions {
                per_delta: s.refinement.per_delta.unwrap_or(f64::NAN),
                per_epsilon: s.refinement.per_epsilon.unwrap_or(f64::NAN),
            },
            RefinementRule::Spacing => Refinement::Spacing(s.refinement.h.unwrap_or(f64::NAN)),
        }
    }

    /// Canonical JSON of the parsed configuration; the input of the config hash.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(&serde_json::to_value(&self.run).expect("config serializes")).expect("json")
    }
}

/// `Σ a_j sin(⟨k_j, x⟩ + p_j)` with coefficients drawn from a seeded stream.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomSmooth {
    modes: Vec<(f64, [f64; 3], f64)>,
}

impl RandomSmooth {
    pub fn new(dim: usize, modes: usize, seed: u64) -> Self {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let modes = (0..modes)
            .map(|_| {
                let a = rng.random_range(-1.0..1.0);
                let mut k = [0.0; 3];
                for v in k.iter_mut().take(dim) {
                    *v = rng.random_range(-2.0 * std::f64::consts::PI..2.0 * std::f64::consts::PI);
                }
                (a, k, rng.random_range(0.0..2.0 * std::f64::consts::PI))
            })
            .collect();
        Self { modes }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.modes
            .iter()
            .map(|(a, k, p)| a * (x.iter().zip(k).map(|(xi, ki)| xi * ki).sum::<f64>() + p).sin())
            .sum()
    }
}

/// A test function from the configuration.
#[derive(Debug, Clone)]
pub enum Function {
    Closed(TestFunction),
    Random(RandomSmooth),
}

impl Function {
    pub fn value(&self, x: &[f64]) -> f64 {
        match self {
            Self::Closed(t) => t.value(x),
            Self::Random(r) => r.value(x),
        }
    }

    pub fn closed(&self) -> Option<TestFunction> {
        match self {
            Self::Closed(t) => Some(*t),
            Self::Random(_) => None,
        }
    }
}
