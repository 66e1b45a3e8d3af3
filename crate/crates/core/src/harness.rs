//! Scenario registry, staged pipeline and run manifests.
//!
//! A [`Scenario`] bundles a symbol with everything the five stages need.
//! Built-in scenarios are looked up by name; a TOML config may start from
//! one and override individual fields.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{SystemTime, UNIX_EPOCH};

use nalgebra::Vector3;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dyadic::{
    build_profile, kernel_estimate_scan, strichartz_scan, GraphPatch, GraphSurface, KernelScan, KernelScanConfig,
    LevelGraph, StrichartzConfig, StrichartzScan,
};
use crate::geometry::{check_assumptions, AssumptionReport, AxisBox, GeometryConfig, Interval, Verdict};
use crate::grid::GridField;
use crate::quadrature::{decay_scan, radial_bump, DecayReport, SurfaceMesh};
use crate::resolvent::{limiting_absorption, AbsorptionRun, ScheduleConfig};
use crate::restriction::{classify_exponents, opnorm_scan, pentagon_vertices, ExponentPair, OpnormScan, ScanGrid};
use crate::symbols::Symbol;
use crate::{Lap3dError, Result};

pub const SCHEMA: u32 = 1;

/// Optional radial bump density `(1 − |x − c|²/r²)³₊` on surface meshes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityBump {
    pub center: [f64; 3],
    pub radius: f64,
}

fn mesh_with(s: &Symbol, level: f64, bounds: &AxisBox, h: f64, density: Option<DensityBump>) -> Result<SurfaceMesh> {
    match density {
        None => SurfaceMesh::from_level_set(s, level, bounds, h, |_| 1.0),
        Some(d) => SurfaceMesh::from_level_set(s, level, bounds, h, radial_bump(Vector3::from(d.center), d.radius)),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometryStage {
    pub resolution: usize,
    pub config: GeometryConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayStage {
    pub mesh_h: f64,
    pub directions: usize,
    pub rmin: f64,
    pub rmax: f64,
    pub density: Option<DensityBump>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DyadicStage {
    pub patch: GraphPatch,
    pub kernel_deltas: Vec<f64>,
    pub kernel: KernelScanConfig,
    pub strichartz_j: Vec<i32>,
    pub strichartz: StrichartzConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpnormStage {
    pub mesh_h: f64,
    pub density: Option<DensityBump>,
    /// Pairs `"1/p 1/q"` as exact rationals.
    pub pairs: Vec<String>,
    pub trials: usize,
    pub grid: ScanGrid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveStage {
    pub n: usize,
    pub extent: f64,
    /// Width of the Gaussian right-hand side `exp(−|x|²/2σ²)`.
    pub source_width: f64,
    pub schedule: ScheduleConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub description: String,
    pub symbol: Symbol,
    pub bounds: AxisBox,
    pub interval: Interval,
    pub level: f64,
    pub geometry: GeometryStage,
    pub decay: DecayStage,
    pub dyadic: DyadicStage,
    pub opnorm: OpnormStage,
    pub solve: SolveStage,
    /// Reference values the stage outputs are compared against.
    pub expected: BTreeMap<String, f64>,
}

pub const SCENARIO_NAMES: [&str; 4] = ["sphere", "torus-quartic", "cossum", "quartic-radial"];

/// Point of the cosine-sum level set `{p = 0.9}` used as the patch centre.
pub const COSSUM_NODE: [f64; 3] = [0.7759, 0.7815, 2.1219];

fn default_pairs() -> Vec<String> {
    ["3/4 3/20", "7/10 9/70", "61/70 3/10", "1 3/10", "7/10 1/20", "1/2 1/2"]
        .iter()
        .map(|s| s.to_string())
        .collect()
}

fn default_solve() -> SolveStage {
    SolveStage { n: 128, extent: 32.0 * std::f64::consts::PI, source_width: 1.5, schedule: ScheduleConfig::default() }
}

fn sphere_like(name: &str, description: &str, symbol: Symbol) -> Scenario {
    Scenario {
        name: name.into(),
        description: description.into(),
        symbol,
        bounds: AxisBox::cube(1.3),
        interval: Interval::new(-0.1, 0.1),
        level: 0.0,
        geometry: GeometryStage { resolution: 32, config: GeometryConfig::default() },
        decay: DecayStage { mesh_h: 0.012, directions: 64, rmin: 4.0, rmax: 128.0, density: None },
        dyadic: DyadicStage {
            patch: GraphPatch::new(GraphSurface::SphereCap { radius: 1.0 }, 0.8),
            kernel_deltas: (5..=8).map(|j| 2f64.powi(-j)).collect(),
            kernel: KernelScanConfig { x3_samples: 96, padding: 4.0, max_fft: 4096 },
            strichartz_j: (2..=8).collect(),
            strichartz: StrichartzConfig::default(),
        },
        opnorm: OpnormStage { mesh_h: 0.1, density: None, pairs: default_pairs(), trials: 50, grid: ScanGrid::default() },
        solve: default_solve(),
        expected: BTreeMap::from([("decay_alpha_min".to_string(), 1.0), ("kernel_exponent".to_string(), 2.0)]),
    }
}

/// Built-in scenario by name.
pub fn scenario(name: &str) -> Result<Scenario> {
    match name {
        "sphere" => Ok(sphere_like("sphere", "unit sphere of the Helmholtz symbol |xi|^2 - 1", Symbol::helmholtz())),
        "quartic-radial" => {
            let mut s = sphere_like("quartic-radial", "unit sphere as the zero set of |xi|^4 - 1", Symbol::quartic_radial());
            s.decay.mesh_h = 0.024;
            s.decay.rmax = 64.0;
            Ok(s)
        }
        "torus-quartic" => {
            let symbol = Symbol::torus_quartic(2.0, 1.0);
            let patch = GraphPatch::new(
                GraphSurface::Level(LevelGraph::at(&symbol, 0.0, Vector3::new(3.0, 0.0, 0.0))?),
                0.3,
            );
            Ok(Scenario {
                name: "torus-quartic".into(),
                description: "torus R = 2, r = 1 as the zero set of a quartic".into(),
                symbol,
                bounds: AxisBox::new([-3.3, -3.3, -1.3], [3.3, 3.3, 1.3]),
                interval: Interval::new(-0.1, 0.1),
                level: 0.0,
                geometry: GeometryStage { resolution: 48, config: GeometryConfig::default() },
                decay: DecayStage { mesh_h: 0.04, directions: 64, rmin: 2.0, rmax: 32.0, density: None },
                dyadic: DyadicStage {
                    patch,
                    kernel_deltas: (3..=6).map(|j| 2f64.powi(-j)).collect(),
                    kernel: KernelScanConfig { x3_samples: 96, padding: 4.0, max_fft: 4096 },
                    strichartz_j: (2..=8).collect(),
                    strichartz: StrichartzConfig::default(),
                },
                opnorm: OpnormStage {
                    mesh_h: 0.15,
                    density: None,
                    pairs: default_pairs(),
                    trials: 50,
                    grid: ScanGrid::default(),
                },
                solve: default_solve(),
                expected: BTreeMap::from([("decay_alpha_min".to_string(), 0.5)]),
            })
        }
        "cossum" => {
            let symbol = Symbol::cos_sum([1.0; 3]);
            let node = Vector3::from(COSSUM_NODE);
            let patch = GraphPatch::new(GraphSurface::Level(LevelGraph::at(&symbol, 0.9, node)?), 0.3);
            let bump = DensityBump { center: COSSUM_NODE, radius: 0.3 };
            Ok(Scenario {
                name: "cossum".into(),
                description: "cos xi1 + cos xi2 + cos xi3 near a degenerate point of the level 0.9".into(),
                symbol,
                bounds: AxisBox::new([0.5, 0.5, 1.8], [1.1, 1.1, 2.5]),
                interval: Interval::new(0.9, 1.1),
                level: 0.9,
                geometry: GeometryStage { resolution: 32, config: GeometryConfig::default() },
                decay: DecayStage { mesh_h: 0.02, directions: 64, rmin: 4.0, rmax: 64.0, density: Some(bump) },
                dyadic: DyadicStage {
                    patch,
                    kernel_deltas: (3..=6).map(|j| 2f64.powi(-j)).collect(),
                    kernel: KernelScanConfig { x3_samples: 96, padding: 4.0, max_fft: 4096 },
                    strichartz_j: (2..=8).collect(),
                    strichartz: StrichartzConfig::default(),
                },
                opnorm: OpnormStage {
                    mesh_h: 0.03,
                    density: Some(bump),
                    pairs: default_pairs(),
                    trials: 50,
                    grid: ScanGrid::default(),
                },
                solve: default_solve(),
                expected: BTreeMap::from([("kernel_exponent".to_string(), 1.75)]),
            })
        }
        _ => Err(Lap3dError::UnknownScenario { name: name.to_string(), available: SCENARIO_NAMES.join(", ") }),
    }
}

/// Overrides read from a TOML config. Every field is optional; `scenario`
/// picks the base (default `sphere`).
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigOverrides {
    pub scenario: Option<String>,
    /// Symbol literal text.
    pub symbol: Option<String>,
    /// Path of a symbol literal file, relative to the config file.
    pub symbol_file: Option<PathBuf>,
    pub level: Option<f64>,
    pub interval: Option<[f64; 2]>,
    pub box_lo: Option<[f64; 3]>,
    pub box_hi: Option<[f64; 3]>,
    pub stages: Option<Vec<String>>,
    pub geometry: Option<toml::Table>,
    pub decay: Option<toml::Table>,
    pub dyadic: Option<toml::Table>,
    pub opnorm: Option<toml::Table>,
    pub solve: Option<toml::Table>,
}

/// Resolved configuration: a scenario plus the stages to run.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub scenario: Scenario,
    pub stages: Vec<Stage>,
}

fn merge_section<T: Serialize + for<'de> Deserialize<'de>>(base: &T, patch: &toml::Table, name: &str) -> Result<T> {
    let mut value = serde_json::to_value(base)?;
    let overlay = serde_json::to_value(patch)?;
    merge_json(&mut value, overlay);
    serde_json::from_value(value).map_err(|e| Lap3dError::InvalidInput(format!("[{name}]: {e}")))
}

fn merge_json(base: &mut serde_json::Value, overlay: serde_json::Value) {
    match (base, overlay) {
        (serde_json::Value::Object(b), serde_json::Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => merge_json(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

impl PipelineConfig {
    pub fn from_scenario(scenario: Scenario) -> Self {
        Self { scenario, stages: Stage::ALL.to_vec() }
    }

    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let o: ConfigOverrides = toml::from_str(text).map_err(|e| Lap3dError::InvalidInput(format!("config: {e}")))?;
        let mut s = scenario(o.scenario.as_deref().unwrap_or("sphere"))?;
        match (&o.symbol, &o.symbol_file) {
            (Some(_), Some(_)) => {
                return Err(Lap3dError::InvalidInput("config sets both symbol and symbol_file".into()));
            }
            (Some(text), None) => s.symbol = Symbol::parse(text)?,
            (None, Some(path)) => s.symbol = Symbol::parse(&fs::read_to_string(base_dir.join(path))?)?,
            (None, None) => {}
        }
        if let Some(a) = o.level {
            s.level = a;
        }
        if let Some([lo, hi]) = o.interval {
            s.interval = Interval::new(lo, hi);
        }
        if let Some(lo) = o.box_lo {
            s.bounds = AxisBox::new(lo, s.bounds.hi);
        }
        if let Some(hi) = o.box_hi {
            s.bounds = AxisBox::new(s.bounds.lo, hi);
        }
        if let Some(t) = &o.geometry {
            s.geometry = merge_section(&s.geometry, t, "geometry")?;
        }
        if let Some(t) = &o.decay {
            s.decay = merge_section(&s.decay, t, "decay")?;
        }
        if let Some(t) = &o.dyadic {
            s.dyadic = merge_section(&s.dyadic, t, "dyadic")?;
        }
        if let Some(t) = &o.opnorm {
            s.opnorm = merge_section(&s.opnorm, t, "opnorm")?;
        }
        if let Some(t) = &o.solve {
            s.solve = merge_section(&s.solve, t, "solve")?;
        }
        let stages = match o.stages {
            None => Stage::ALL.to_vec(),
            Some(v) => v.iter().map(|x| x.parse()).collect::<Result<_>>()?,
        };
        Ok(Self { scenario: s, stages })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    /// SHA-256 of the canonical JSON form of the resolved config.
    pub fn hash(&self) -> String {
        let json = serde_json::json!({ "scenario": self.scenario, "stages": self.stages });
        let mut h = Sha256::new();
        h.update(json.to_string().as_bytes());
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Geometry,
    Decay,
    Dyadic,
    Opnorm,
    Solve,
}

impl Stage {
    pub const ALL: [Stage; 5] = [Stage::Geometry, Stage::Decay, Stage::Dyadic, Stage::Opnorm, Stage::Solve];

    pub fn as_str(&self) -> &'static str {
        match self {
            Stage::Geometry => "geometry",
            Stage::Decay => "decay",
            Stage::Dyadic => "dyadic",
            Stage::Opnorm => "opnorm",
            Stage::Solve => "solve",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Stage {
    type Err = Lap3dError;
    fn from_str(s: &str) -> Result<Self> {
        Stage::ALL
            .iter()
            .find(|st| st.as_str() == s)
            .copied()
            .ok_or_else(|| Lap3dError::InvalidInput(format!("unknown stage `{s}`")))
    }
}

/// JSON sidecar of a raw little-endian complex64 grid file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldSidecar {
    pub schema: u32,
    pub dtype: String,
    pub dims: [usize; 3],
    pub spacing: [f64; 3],
    pub origin: [f64; 3],
    pub symbol_hash: String,
}

fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

/// Write `g` to `path` as complex64 and its metadata to `path.json`.
pub fn write_field(path: &Path, g: &GridField, symbol_hash: &str) -> Result<()> {
    fs::write(path, g.to_complex64_bytes())?;
    let meta = FieldSidecar {
        schema: SCHEMA,
        dtype: "complex64".into(),
        dims: g.dims,
        spacing: g.spacing,
        origin: g.origin,
        symbol_hash: symbol_hash.to_string(),
    };
    fs::write(sidecar_path(path), serde_json::to_string_pretty(&meta)?)?;
    Ok(())
}

/// Read a field written by [`write_field`].
pub fn read_field(path: &Path) -> Result<(GridField, FieldSidecar)> {
    let meta: FieldSidecar = serde_json::from_str(&fs::read_to_string(sidecar_path(path))?)?;
    if meta.schema != SCHEMA {
        return Err(Lap3dError::InvalidInput(format!("unsupported sidecar schema {}", meta.schema)));
    }
    let bytes = fs::read(path)?;
    let g = GridField::from_complex64_bytes(meta.dims, meta.spacing, meta.origin, &bytes)?;
    Ok((g, meta))
}

/// Gaussian right-hand side on the solve grid.
pub fn gaussian_source(stage: &SolveStage) -> Result<GridField> {
    let mut f = GridField::centered_cube(stage.n, stage.extent)?;
    let c = f.center();
    let w = stage.source_width;
    f.fill_with(|x| Complex64::new((-(x - c).norm_squared() / (2.0 * w * w)).exp(), 0.0));
    Ok(f)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageSummary {
    pub stage: Stage,
    pub verdict: String,
    pub values: BTreeMap<String, f64>,
    pub files: Vec<String>,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema: u32,
    pub command_line: String,
    pub scenario: String,
    pub config_hash: String,
    pub symbol: String,
    pub symbol_hash: String,
    pub solve_grid: SolveGridMeta,
    pub started: u64,
    pub finished: u64,
    pub versions: BTreeMap<String, String>,
    pub stages: Vec<StageSummary>,
    /// True when some geometric assumption check returned `fail`.
    pub assumption_failure: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveGridMeta {
    pub dims: [usize; 3],
    pub extent: f64,
}

fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

fn versions() -> BTreeMap<String, String> {
    BTreeMap::from([
        ("lap3d-core".to_string(), env!("CARGO_PKG_VERSION").to_string()),
        ("restriction-trials".to_string(), crate::restriction::TRIAL_FAMILY.to_string()),
        ("strichartz-packets".to_string(), crate::dyadic::PACKET_FAMILY.to_string()),
    ])
}

fn verdict_str(v: Verdict) -> &'static str {
    match v {
        Verdict::Pass => "pass",
        Verdict::Fail => "fail",
        Verdict::Inconclusive => "inconclusive",
    }
}

/// Human summary of the four assumption verdicts.
pub fn geometry_verdict(r: &AssumptionReport) -> String {
    let v = &r.verdicts;
    format!(
        "foliation={} degeneracy={} gauss={} tangential={}",
        verdict_str(v.regular_foliation),
        verdict_str(v.transversal_degeneracy),
        verdict_str(v.finite_gauss_preimages),
        verdict_str(v.no_tangential_points)
    )
}

pub fn tangential_csv(r: &AssumptionReport) -> String {
    let mut s = String::from("x,y,z\n");
    for p in &r.tangential_points {
        s.push_str(&format!("{},{},{}\n", p.x, p.y, p.z));
    }
    s
}

pub fn run_geometry(s: &Scenario) -> Result<AssumptionReport> {
    check_assumptions(&s.symbol, &s.bounds, s.interval, s.geometry.resolution, &s.geometry.config)
}

pub fn run_decay(s: &Scenario) -> Result<DecayReport> {
    let d = &s.decay;
    let mesh = mesh_with(&s.symbol, s.level, &s.bounds, d.mesh_h, d.density)?;
    decay_scan(&mesh, d.directions, d.rmin, d.rmax)
}

pub fn run_kernel(s: &Scenario) -> Result<KernelScan> {
    kernel_estimate_scan(&s.dyadic.patch, &s.dyadic.kernel_deltas, &s.dyadic.kernel)
}

pub fn run_strichartz(s: &Scenario) -> Result<StrichartzScan> {
    let profile = build_profile((-8, 12))?;
    strichartz_scan(&s.dyadic.patch, &profile, &s.dyadic.strichartz_j, &s.dyadic.strichartz)
}

/// Mesh used by the opnorm stage together with the vertex cutoff `β`.
pub fn opnorm_mesh(s: &Scenario) -> Result<(SurfaceMesh, Vec<f64>)> {
    let o = &s.opnorm;
    let mesh = mesh_with(&s.symbol, s.level, &s.bounds, o.mesh_h, o.density)?;
    let beta = mesh.density.clone();
    Ok((mesh, beta))
}

pub fn run_opnorm(s: &Scenario) -> Result<OpnormScan> {
    let pairs: Vec<ExponentPair> = s.opnorm.pairs.iter().map(|p| p.parse()).collect::<Result<_>>()?;
    let (mesh, beta) = opnorm_mesh(s)?;
    opnorm_scan(&mesh, &beta, Some(&s.symbol), &pairs, s.opnorm.trials, s.opnorm.grid)
}

pub fn run_solve(s: &Scenario) -> Result<(AbsorptionRun, GridField)> {
    let f = gaussian_source(&s.solve)?;
    limiting_absorption(&s.symbol, &f, &s.solve.schedule)
}

fn write(dir: &Path, name: &str, content: &str, files: &mut Vec<String>) -> Result<()> {
    fs::write(dir.join(name), content)?;
    files.push(name.to_string());
    Ok(())
}

fn run_stage(stage: Stage, s: &Scenario, dir: &Path, files: &mut Vec<String>) -> Result<(String, BTreeMap<String, f64>, bool)> {
    let mut values = BTreeMap::new();
    let mut assumption_failure = false;
    let verdict = match stage {
        Stage::Geometry => {
            let r = run_geometry(s)?;
            write(dir, "geometry.json", &serde_json::to_string_pretty(&r)?, files)?;
            write(dir, "degenerate_curves.csv", &r.curves_csv(), files)?;
            write(dir, "tangential_points.csv", &tangential_csv(&r), files)?;
            values.insert("c0".into(), r.c0);
            values.insert("c1".into(), r.c1);
            values.insert("c2".into(), r.c2);
            if let Some(c3) = r.c3 {
                values.insert("c3".into(), c3);
            }
            values.insert("c4".into(), r.c4 as f64);
            values.insert("curves".into(), r.curves.len() as f64);
            values.insert("tangential_points".into(), r.tangential_points.len() as f64);
            assumption_failure = r.verdicts.any_fail();
            geometry_verdict(&r)
        }
        Stage::Decay => {
            let r = run_decay(s)?;
            write(dir, "decay.csv", &r.to_csv(), files)?;
            write(dir, "decay.json", &serde_json::to_string_pretty(&r)?, files)?;
            values.insert("alpha_min".into(), r.alpha_min);
            values.insert("fitted_constant".into(), r.fitted_constant);
            values.insert("fit_residual".into(), r.fit_residual);
            format!("alpha_min={:.4}", r.alpha_min)
        }
        Stage::Dyadic => {
            let k = run_kernel(s)?;
            write(dir, "kernel.csv", &k.to_csv(), files)?;
            let st = run_strichartz(s)?;
            write(dir, "strichartz.csv", &st.to_csv(), files)?;
            write(dir, "dyadic.json", &serde_json::to_string_pretty(&serde_json::json!({"kernel": k, "strichartz": st}))?, files)?;
            values.insert("kernel_exponent".into(), k.exponent);
            values.insert("strichartz_slope".into(), st.slope);
            values.insert("strichartz_spread".into(), st.spread);
            format!("kernel_exponent={:.3} strichartz_spread={:.3}", k.exponent, st.spread)
        }
        Stage::Opnorm => {
            let r = run_opnorm(s)?;
            write(dir, "opnorm.csv", &r.to_csv(), files)?;
            write(dir, "opnorm.json", &serde_json::to_string_pretty(&r)?, files)?;
            for row in &r.rows {
                values.insert(format!("best_ratio[{}]", row.pair), row.best_ratio);
            }
            "no violation witnessed".to_string()
        }
        Stage::Solve => {
            let (run, u) = run_solve(s)?;
            write(dir, "absorption.csv", &run.to_csv(), files)?;
            write(dir, "absorption.json", &serde_json::to_string_pretty(&run)?, files)?;
            write_field(&dir.join("u.c64"), &u, &s.symbol.digest())?;
            files.push("u.c64".into());
            files.push("u.c64.json".into());
            values.insert("residual_slope".into(), run.residual_slope);
            values.insert("source_norm_max".into(), run.source_norm_max);
            values.insert("max_spectral_defect".into(), run.max_spectral_defect);
            if let Some(g) = run.cauchy_gaps.last() {
                values.insert("last_cauchy_gap".into(), *g);
            }
            if run.warnings.is_empty() {
                "converging".to_string()
            } else {
                run.warnings.join("; ")
            }
        }
    };
    Ok((verdict, values, assumption_failure))
}

/// Run the configured stages in order, writing outputs and `manifest.json`
/// into `out_dir`. The first failing stage stops the run; its error is
/// recorded in the manifest and returned wrapped in [`Lap3dError::Stage`].
pub fn run_pipeline(config: &PipelineConfig, out_dir: &Path, command_line: &str) -> Result<RunManifest> {
    fs::create_dir_all(out_dir)?;
    let s = &config.scenario;
    let mut manifest = RunManifest {
        schema: SCHEMA,
        command_line: command_line.to_string(),
        scenario: s.name.clone(),
        config_hash: config.hash(),
        symbol: s.symbol.to_string(),
        symbol_hash: s.symbol.digest(),
        solve_grid: SolveGridMeta { dims: [s.solve.n; 3], extent: s.solve.extent },
        started: unix_now(),
        finished: 0,
        versions: versions(),
        stages: Vec::new(),
        assumption_failure: false,
        error: None,
    };
    let mut failure = None;
    for &stage in &config.stages {
        let t0 = std::time::Instant::now();
        let mut files = Vec::new();
        match run_stage(stage, s, out_dir, &mut files) {
            Ok((verdict, values, af)) => {
                manifest.assumption_failure |= af;
                manifest.stages.push(StageSummary { stage, verdict, values, files, seconds: t0.elapsed().as_secs_f64() });
            }
            Err(e) => {
                let e = Lap3dError::Stage { stage: stage.to_string(), source: Box::new(e) };
                manifest.error = Some(e.to_string());
                failure = Some(e);
                break;
            }
        }
    }
    manifest.finished = unix_now();
    fs::write(out_dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
    match failure {
        Some(e) => Err(e),
        None => Ok(manifest),
    }
}

/// Pentagon vertices with exact coordinates and their classification.
pub fn pentagon_csv() -> String {
    let mut s = String::from("vertex,inv_p,inv_q,classification\n");
    for (name, e) in pentagon_vertices() {
        s.push_str(&format!("{},{},{},{}\n", name, e.inv_p, e.inv_q, classify_exponents(e).classification));
    }
    s
}

/// Boundary pieces of the pentagon with the classification of their
/// relative interiors.
pub fn segments_csv() -> String {
    let v: BTreeMap<&str, ExponentPair> = pentagon_vertices().into_iter().collect();
    let mut s = String::from("from,to,classification\n");
    for (a, b) in [("A", "C"), ("C", "B"), ("B", "B'"), ("B'", "C'"), ("C'", "A")] {
        let (pa, pb) = (v[a], v[b]);
        let two = num_rational::Ratio::from_integer(2);
        let mid = ExponentPair { inv_p: (pa.inv_p + pb.inv_p) / two, inv_q: (pa.inv_q + pb.inv_q) / two };
        s.push_str(&format!("{a},{b},{}\n", classify_exponents(mid).classification));
    }
    s
}

/// Regenerate the plot tables from a finished run directory.
pub fn emit_plotdata(run_dir: &Path, out_dir: &Path) -> Result<Vec<String>> {
    let manifest: RunManifest = serde_json::from_str(&fs::read_to_string(run_dir.join("manifest.json"))?)?;
    fs::create_dir_all(out_dir)?;
    let mut files = Vec::new();
    write(out_dir, "pentagon.csv", &pentagon_csv(), &mut files)?;
    write(out_dir, "segments.csv", &segments_csv(), &mut files)?;
    let ran = |st: Stage| manifest.stages.iter().any(|x| x.stage == st);
    if ran(Stage::Decay) {
        let r: DecayReport = serde_json::from_str(&fs::read_to_string(run_dir.join("decay.json"))?)?;
        let mut s = String::from("direction,radius,value,envelope\n");
        for (d, (vals, env)) in r.values.iter().zip(&r.envelopes).enumerate() {
            for ((radius, v), e) in r.radii.iter().zip(vals).zip(env) {
                s.push_str(&format!("{d},{radius},{v},{e}\n"));
            }
        }
        write(out_dir, "decay_curves.csv", &s, &mut files)?;
    }
    if ran(Stage::Solve) {
        let r: AbsorptionRun = serde_json::from_str(&fs::read_to_string(run_dir.join("absorption.json"))?)?;
        write(out_dir, "norms_vs_delta.csv", &r.to_csv(), &mut files)?;
    }
    if ran(Stage::Opnorm) {
        fs::copy(run_dir.join("opnorm.csv"), out_dir.join("opnorm_scatter.csv"))?;
        files.push("opnorm_scatter.csv".into());
    }
    Ok(files)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_names() {
        for n in SCENARIO_NAMES {
            assert_eq!(scenario(n).unwrap().name, n);
        }
        match scenario("klein-bottle") {
            Err(Lap3dError::UnknownScenario { available, .. }) => assert!(available.contains("cossum")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn config_overrides_merge() {
        let text = "scenario = \"torus-quartic\"\nstages = [\"geometry\"]\n[solve]\nn = 32\n[solve.schedule]\nsteps = 3\n";
        let c = PipelineConfig::parse(text, Path::new(".")).unwrap();
        assert_eq!(c.scenario.name, "torus-quartic");
        assert_eq!(c.stages, vec![Stage::Geometry]);
        assert_eq!(c.scenario.solve.n, 32);
        assert_eq!(c.scenario.solve.schedule.steps, 3);
        assert_eq!(c.scenario.solve.schedule.delta0, 0.125);
        assert!(PipelineConfig::parse("bogus = 1", Path::new(".")).is_err());
    }

    #[test]
    fn segment_classes() {
        let s = segments_csv();
        assert!(s.contains("C,B,weak_II"));
        assert!(s.contains("B',C',weak_I"));
        assert!(s.contains("B,B',strong"));
        assert!(s.contains("A,C,strong"));
        assert!(s.contains("C',A,strong"));
    }
}
