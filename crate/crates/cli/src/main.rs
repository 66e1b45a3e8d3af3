use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use lap3d_core::dyadic::{build_profile, kernel_estimate_scan, strichartz_scan, GraphPatch};
use lap3d_core::geometry::{AxisBox, Interval};
use lap3d_core::grid::GridField;
use lap3d_core::harness::{
    self, emit_plotdata, gaussian_source, geometry_verdict, read_field, run_pipeline, tangential_csv, write_field,
    PipelineConfig, Scenario, SolveStage, Stage, SCENARIO_NAMES, SCHEMA,
};
use lap3d_core::quadrature::{decay_scan, SurfaceMesh};
use lap3d_core::resolvent::limiting_absorption;
use lap3d_core::restriction::{opnorm_scan, parse_pairs, ExponentPair, ScanGrid};
use lap3d_core::symbols::Symbol;
use serde_json::json;

const ASSUMPTION_FAILURE: u8 = 2;

#[derive(Parser)]
#[command(name = "lap3d", version, about = "Limiting-absorption laboratory for elliptic symbols on R^3")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Where the symbol comes from: a built-in scenario, optionally with the
/// symbol replaced by a literal file.
#[derive(clap::Args, Clone)]
struct Source {
    /// Built-in scenario supplying defaults.
    #[arg(long, default_value = "sphere")]
    scenario: String,
    /// Symbol literal file replacing the scenario symbol.
    #[arg(long)]
    symbol: Option<PathBuf>,
}

impl Source {
    fn load(&self) -> Result<Scenario> {
        let mut s = harness::scenario(&self.scenario)?;
        if let Some(path) = &self.symbol {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            s.symbol = Symbol::parse(&text)?;
        }
        Ok(s)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum DyadicMode {
    Kernel,
    Strichartz,
}

#[derive(Subcommand)]
enum Command {
    /// List the built-in scenarios.
    Scenarios,
    /// Check the geometric assumptions on a box and level interval.
    Geometry {
        #[command(flatten)]
        source: Source,
        /// `lo1,lo2,lo3,hi1,hi2,hi3`.
        #[arg(long = "box", value_delimiter = ',', num_args = 6)]
        bounds: Option<Vec<f64>>,
        /// `lo,hi`.
        #[arg(long, value_delimiter = ',', num_args = 2)]
        interval: Option<Vec<f64>>,
        #[arg(long)]
        resolution: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fourier decay scan of the surface measure of one level set.
    Decay {
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        level: Option<f64>,
        #[arg(long)]
        h: Option<f64>,
        #[arg(long)]
        directions: Option<usize>,
        #[arg(long)]
        rmin: Option<f64>,
        #[arg(long)]
        rmax: Option<f64>,
        /// CSV output; a JSON report is written next to it.
        #[arg(long)]
        out: PathBuf,
    },
    /// Slab-kernel or Strichartz scan on a graph patch.
    Dyadic {
        #[command(flatten)]
        source: Source,
        /// JSON graph patch replacing the scenario patch.
        #[arg(long)]
        patch: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "kernel")]
        mode: DyadicMode,
        /// Slab thicknesses for the kernel scan.
        #[arg(long, value_delimiter = ',')]
        deltas: Option<Vec<f64>>,
        /// Scales `j` (δ = 2^-j) for the Strichartz scan.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        j: Option<Vec<i32>>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Witnessed restriction-extension ratios over the trial family.
    Opnorm {
        #[command(flatten)]
        source: Source,
        /// JSON surface mesh; its density is used as the cutoff.
        #[arg(long)]
        mesh: Option<PathBuf>,
        /// File with one `1/p 1/q` pair per line.
        #[arg(long)]
        pairs: Option<PathBuf>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        grid: Option<usize>,
        #[arg(long)]
        extent: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Limiting-absorption solve on a periodic grid.
    Solve {
        #[command(flatten)]
        source: Source,
        /// `gaussian` or `file:PATH` (complex64 with JSON sidecar).
        #[arg(long, default_value = "gaussian")]
        rhs: String,
        #[arg(long)]
        grid: Option<usize>,
        /// Side length of the periodic box.
        #[arg(long = "box")]
        side: Option<f64>,
        #[arg(long)]
        delta0: Option<f64>,
        #[arg(long)]
        steps: Option<usize>,
        /// `+` or `-` (outgoing).
        #[arg(long, allow_hyphen_values = true)]
        sign: Option<String>,
        /// Run report; the final iterate goes to `<stem>.u.c64`.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run several stages and write a manifest.
    Pipeline {
        /// TOML config; overrides `--scenario`.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "sphere")]
        scenario: String,
        #[arg(long, value_delimiter = ',')]
        stages: Option<Vec<String>>,
        #[arg(long)]
        out: PathBuf,
        /// Also emit plot tables into this directory.
        #[arg(long)]
        plotdata: Option<PathBuf>,
    },
}

fn command_line() -> String {
    std::env::args().collect::<Vec<_>>().join(" ")
}

fn with_ext(path: &Path, ext: &str) -> PathBuf {
    path.with_extension(ext)
}

fn write_report(path: &Path, symbol: &Symbol, report: serde_json::Value) -> Result<()> {
    let doc = json!({
        "schema": SCHEMA,
        "command_line": command_line(),
        "symbol": symbol.to_string(),
        "symbol_hash": symbol.digest(),
        "report": report,
    });
    fs::write(path, serde_json::to_string_pretty(&doc)?)?;
    Ok(())
}

fn geometry(source: &Source, bounds: Option<Vec<f64>>, interval: Option<Vec<f64>>, resolution: Option<usize>, out: &Path) -> Result<u8> {
    let mut s = source.load()?;
    if let Some(b) = bounds {
        s.bounds = AxisBox::new([b[0], b[1], b[2]], [b[3], b[4], b[5]]);
    }
    if let Some(i) = interval {
        s.interval = Interval::new(i[0], i[1]);
    }
    if let Some(r) = resolution {
        s.geometry.resolution = r;
    }
    let r = harness::run_geometry(&s)?;
    fs::create_dir_all(out)?;
    write_report(&out.join("geometry.json"), &s.symbol, serde_json::to_value(&r)?)?;
    fs::write(out.join("degenerate_curves.csv"), r.curves_csv())?;
    fs::write(out.join("tangential_points.csv"), tangential_csv(&r))?;
    println!("{}", geometry_verdict(&r));
    Ok(if r.verdicts.any_fail() { ASSUMPTION_FAILURE } else { 0 })
}

#[allow(clippy::too_many_arguments)]
fn decay(source: &Source, level: Option<f64>, h: Option<f64>, directions: Option<usize>, rmin: Option<f64>, rmax: Option<f64>, out: &Path) -> Result<u8> {
    let s = source.load()?;
    let d = &s.decay;
    let level = level.unwrap_or(s.level);
    let mesh = match d.density {
        None => SurfaceMesh::from_level_set(&s.symbol, level, &s.bounds, h.unwrap_or(d.mesh_h), |_| 1.0)?,
        Some(b) => SurfaceMesh::from_level_set(
            &s.symbol,
            level,
            &s.bounds,
            h.unwrap_or(d.mesh_h),
            lap3d_core::quadrature::radial_bump(b.center.into(), b.radius),
        )?,
    };
    let r = decay_scan(&mesh, directions.unwrap_or(d.directions), rmin.unwrap_or(d.rmin), rmax.unwrap_or(d.rmax))?;
    fs::write(out, r.to_csv())?;
    write_report(&with_ext(out, "json"), &s.symbol, serde_json::to_value(&r)?)?;
    println!("alpha_min = {}", r.alpha_min);
    Ok(0)
}

#[allow(clippy::too_many_arguments)]
fn dyadic(source: &Source, patch: Option<PathBuf>, mode: DyadicMode, deltas: Option<Vec<f64>>, j: Option<Vec<i32>>, trials: Option<usize>, out: &Path) -> Result<u8> {
    let s = source.load()?;
    let patch: GraphPatch = match patch {
        Some(p) => serde_json::from_str(&fs::read_to_string(&p).with_context(|| format!("reading {}", p.display()))?)?,
        None => s.dyadic.patch.clone(),
    };
    match mode {
        DyadicMode::Kernel => {
            let deltas = deltas.unwrap_or_else(|| s.dyadic.kernel_deltas.clone());
            let r = kernel_estimate_scan(&patch, &deltas, &s.dyadic.kernel)?;
            fs::write(out, r.to_csv())?;
            write_report(&with_ext(out, "json"), &s.symbol, serde_json::to_value(&r)?)?;
            println!("kernel exponent = {}", r.exponent);
        }
        DyadicMode::Strichartz => {
            let js = j.unwrap_or_else(|| s.dyadic.strichartz_j.clone());
            let mut cfg = s.dyadic.strichartz;
            if let Some(t) = trials {
                cfg.trials = t;
            }
            let profile = build_profile((-8, 12))?;
            let r = strichartz_scan(&patch, &profile, &js, &cfg)?;
            fs::write(out, r.to_csv())?;
            write_report(&with_ext(out, "json"), &s.symbol, serde_json::to_value(&r)?)?;
            println!("slope = {}, scaled spread = {}", r.slope, r.spread);
        }
    }
    Ok(0)
}

#[allow(clippy::too_many_arguments)]
fn opnorm(source: &Source, mesh: Option<PathBuf>, pairs: Option<PathBuf>, trials: Option<usize>, grid: Option<usize>, extent: Option<f64>, out: &Path) -> Result<u8> {
    let s = source.load()?;
    let (mesh, beta) = match mesh {
        Some(p) => {
            let m: SurfaceMesh = serde_json::from_str(&fs::read_to_string(&p).with_context(|| format!("reading {}", p.display()))?)?;
            let b = m.density.clone();
            (m, b)
        }
        None => harness::opnorm_mesh(&s)?,
    };
    let pairs: Vec<ExponentPair> = match pairs {
        Some(p) => parse_pairs(&fs::read_to_string(&p).with_context(|| format!("reading {}", p.display()))?)?,
        None => s.opnorm.pairs.iter().map(|p| p.parse()).collect::<lap3d_core::Result<_>>()?,
    };
    let g = ScanGrid { n: grid.unwrap_or(s.opnorm.grid.n), extent: extent.unwrap_or(s.opnorm.grid.extent) };
    let r = opnorm_scan(&mesh, &beta, Some(&s.symbol), &pairs, trials.unwrap_or(s.opnorm.trials), g)?;
    fs::write(out, r.to_csv())?;
    write_report(&with_ext(out, "json"), &s.symbol, serde_json::to_value(&r)?)?;
    println!("no violation witnessed across {} trials of family {}", r.trials, r.family);
    Ok(0)
}

#[allow(clippy::too_many_arguments)]
fn solve(source: &Source, rhs: &str, grid: Option<usize>, side: Option<f64>, delta0: Option<f64>, steps: Option<usize>, sign: Option<String>, out: &Path) -> Result<u8> {
    let s = source.load()?;
    let mut stage: SolveStage = s.solve.clone();
    if let Some(n) = grid {
        stage.n = n;
    }
    if let Some(l) = side {
        stage.extent = l;
    }
    if let Some(d) = delta0 {
        stage.schedule.delta0 = d;
    }
    if let Some(k) = steps {
        stage.schedule.steps = k;
    }
    if let Some(sg) = sign {
        stage.schedule.sign = match sg.as_str() {
            "+" | "+1" => 1,
            "-" | "-1" => -1,
            other => bail!("--sign must be + or -, got `{other}`"),
        };
    }
    let f: GridField = match rhs {
        "gaussian" => gaussian_source(&stage)?,
        other => match other.strip_prefix("file:") {
            Some(path) => read_field(Path::new(path))?.0,
            None => bail!("--rhs must be `gaussian` or `file:PATH`"),
        },
    };
    let (run, u) = limiting_absorption(&s.symbol, &f, &stage.schedule)?;
    let field_path = with_ext(out, "u.c64");
    write_field(&field_path, &u, &s.symbol.digest())?;
    fs::write(with_ext(out, "csv"), run.to_csv())?;
    write_report(
        out,
        &s.symbol,
        json!({
            "grid": { "dims": f.dims, "spacing": f.spacing, "origin": f.origin },
            "schedule": stage.schedule,
            "run": run,
            "field": field_path.file_name().map(|n| n.to_string_lossy().into_owned()),
        }),
    )?;
    println!("residual slope = {}", run.residual_slope);
    for w in &run.warnings {
        eprintln!("warning: {w}");
    }
    Ok(0)
}

fn pipeline(config: Option<PathBuf>, scenario: &str, stages: Option<Vec<String>>, out: &Path, plotdata: Option<PathBuf>) -> Result<u8> {
    let mut cfg = match config {
        Some(p) => PipelineConfig::load(&p)?,
        None => PipelineConfig::from_scenario(harness::scenario(scenario)?),
    };
    if let Some(st) = stages {
        cfg.stages = st.iter().map(|x| x.parse::<Stage>()).collect::<lap3d_core::Result<_>>()?;
    }
    let m = run_pipeline(&cfg, out, &command_line())?;
    for st in &m.stages {
        println!("{}: {}", st.stage, st.verdict);
    }
    if let Some(dir) = plotdata {
        emit_plotdata(out, &dir)?;
    }
    Ok(if m.assumption_failure { ASSUMPTION_FAILURE } else { 0 })
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var("LAP3D_THREADS") {
        let n: usize = v.parse().with_context(|| format!("LAP3D_THREADS=`{v}` is not a positive integer"))?;
        if n == 0 {
            bail!("LAP3D_THREADS must be positive");
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<u8> {
    configure_threads()?;
    match cli.command {
        Command::Scenarios => {
            for name in SCENARIO_NAMES {
                let s = harness::scenario(name)?;
                println!("{name}\t{}", s.description);
            }
            Ok(0)
        }
        Command::Geometry { source, bounds, interval, resolution, out } => geometry(&source, bounds, interval, resolution, &out),
        Command::Decay { source, level, h, directions, rmin, rmax, out } => decay(&source, level, h, directions, rmin, rmax, &out),
        Command::Dyadic { source, patch, mode, deltas, j, trials, out } => dyadic(&source, patch, mode, deltas, j, trials, &out),
        Command::Opnorm { source, mesh, pairs, trials, grid, extent, out } => opnorm(&source, mesh, pairs, trials, grid, extent, &out),
        Command::Solve { source, rhs, grid, side, delta0, steps, sign, out } => solve(&source, &rhs, grid, side, delta0, steps, sign, &out),
        Command::Pipeline { config, scenario, stages, out, plotdata } => pipeline(config, &scenario, stages, &out, plotdata),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
