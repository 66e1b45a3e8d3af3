//! Limiting-absorption solves `u_δ = F⁻¹[f̂ / (p + iδ)]` on periodic FFT
//! grids, the `A_δ / B_δ` multiplier split, and the diagnostics built on
//! them.
//!
//! With `p = |ξ|² − 1`, the sign `−1` (`p − iδ`) converges to the outgoing
//! solution `e^{i|x|}/(4π|x|) * f` and the sign `+1` to the incoming one.
//!
//! Solutions of Helmholtz-type problems decay like `1/|x|`, so on a torus
//! the periodic images never become negligible as `δ → 0`. Comparisons
//! against free-space oracles are made on the inner half of the box and the
//! discrepancy is reported as is.

use nalgebra::Vector3;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Lap3dError, Result};
use crate::grid::GridField;
use crate::lorentz::{lebesgue_norm, Exponent, NormSpec};
use crate::quadrature::SurfaceMesh;
use crate::restriction::{bessel_region, trial, ExponentPair, ScanGrid};
use crate::sampling::{linear_fit, plateau_bump, smoothstep7, KahanSum};
use crate::symbols::Symbol;

/// `p` at every DFT wave vector of `grid`.
pub fn symbol_on_grid(s: &Symbol, grid: &GridField) -> Vec<f64> {
    (0..grid.len()).into_par_iter().map(|k| s.value(&grid.wavevector(k))).collect()
}

/// `F⁻¹[f̂ / (p + i·sign·δ)]`.
pub fn apply_resolvent(s: &Symbol, f: &GridField, delta: f64, sign: i8) -> Result<GridField> {
    let p = symbol_on_grid(s, f);
    resolvent_with(&p, f, delta, sign)
}

fn check_delta(delta: f64, sign: i8) -> Result<()> {
    if delta == 0.0 || !delta.is_finite() {
        return Err(Lap3dError::InvalidInput("delta must be finite and nonzero".into()));
    }
    if sign != 1 && sign != -1 {
        return Err(Lap3dError::InvalidInput("sign must be +1 or -1".into()));
    }
    Ok(())
}

fn resolvent_with(p: &[f64], f: &GridField, delta: f64, sign: i8) -> Result<GridField> {
    check_delta(delta, sign)?;
    let mut c = f.dft();
    let d = sign as f64 * delta;
    c.par_iter_mut().zip(p).for_each(|(v, p)| *v /= Complex64::new(*p, d));
    Ok(f.from_dft(c))
}

/// `F⁻¹[(p + i·shift) û]`, the forward operator used for residual checks.
pub fn apply_symbol(s: &Symbol, u: &GridField, shift: f64) -> GridField {
    let p = symbol_on_grid(s, u);
    let mut c = u.dft();
    c.par_iter_mut().zip(&p).for_each(|(v, p)| *v *= Complex64::new(*p, shift));
    u.from_dft(c)
}

/// Cutoffs on the frequency grid: `β₁ = η(p/δ₀)` with η the plateau bump,
/// `β₂ = 1 − β₁`, and `β₂ = β₂₁ + β₂₂` with `β₂₂` a radial ramp that
/// vanishes for `|ξ| ≤ R` and equals one for `|ξ| ≥ 2R`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiplierPartition {
    pub delta0: f64,
    pub radius: f64,
    #[serde(skip)]
    pub beta1: Vec<f64>,
    #[serde(skip)]
    pub beta2: Vec<f64>,
    #[serde(skip)]
    pub beta21: Vec<f64>,
    #[serde(skip)]
    pub beta22: Vec<f64>,
}

impl MultiplierPartition {
    pub fn new(s: &Symbol, grid: &GridField, delta0: f64, radius: f64) -> Result<Self> {
        if !(delta0 >= 0.0) || !(radius > 0.0) {
            return Err(Lap3dError::InvalidInput("delta0 must be >= 0 and radius > 0".into()));
        }
        let p = symbol_on_grid(s, grid);
        let beta1: Vec<f64> =
            p.iter().map(|p| if delta0 > 0.0 { plateau_bump(p / delta0) } else { 0.0 }).collect();
        let beta2: Vec<f64> = beta1.iter().map(|b| 1.0 - b).collect();
        let beta22: Vec<f64> = (0..grid.len())
            .map(|k| {
                let r = grid.wavevector(k).norm();
                smoothstep7(((r - radius) / radius).clamp(0.0, 1.0))
            })
            .collect();
        for (k, (b1, b22)) in beta1.iter().zip(&beta22).enumerate() {
            if *b22 > 0.0 && *b1 > 0.0 {
                let xi = grid.wavevector(k);
                return Err(Lap3dError::InvalidInput(format!(
                    "radius {radius} too small: beta1 and beta22 overlap at {:?}",
                    [xi.x, xi.y, xi.z]
                )));
            }
        }
        let beta21 = beta2.iter().zip(&beta22).map(|(b2, b22)| b2 - b22).collect();
        Ok(Self { delta0, radius, beta1, beta2, beta21, beta22 })
    }

    /// Largest `|β₁ + β₂₁ + β₂₂ − 1|` on the grid.
    pub fn partition_defect(&self) -> f64 {
        self.beta1
            .iter()
            .zip(&self.beta21)
            .zip(&self.beta22)
            .map(|((a, b), c)| (a + b + c - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

/// `A_δ f`, `B_δ f`, and the real and imaginary multiplier parts of `A_δ`
/// with `A_δ = R − iI`.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitOperators {
    pub a: GridField,
    pub b: GridField,
    pub a_real: GridField,
    pub a_imag: GridField,
}

pub fn split_operators(
    s: &Symbol,
    part: &MultiplierPartition,
    f: &GridField,
    delta: f64,
) -> Result<SplitOperators> {
    check_delta(delta, 1)?;
    if part.beta1.len() != f.len() {
        return Err(Lap3dError::InvalidInput("partition built for a different grid".into()));
    }
    let p = symbol_on_grid(s, f);
    let fh = f.dft();
    let build = |m: &dyn Fn(usize) -> Complex64| {
        let c: Vec<Complex64> = fh.iter().enumerate().map(|(k, v)| v * m(k)).collect();
        f.from_dft(c)
    };
    let inv = |k: usize| Complex64::new(1.0, 0.0) / Complex64::new(p[k], delta);
    let den = |k: usize| p[k] * p[k] + delta * delta;
    Ok(SplitOperators {
        a: build(&|k| inv(k) * part.beta1[k]),
        b: build(&|k| inv(k) * part.beta2[k]),
        a_real: build(&|k| Complex64::new(part.beta1[k] * p[k] / den(k), 0.0)),
        a_imag: build(&|k| Complex64::new(part.beta1[k] * delta / den(k), 0.0)),
    })
}

/// Schedule and norms of a limiting-absorption run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleConfig {
    pub delta0: f64,
    pub steps: usize,
    pub sign: i8,
    /// Norms tabulated for every iterate.
    pub norms: Vec<NormSpec>,
    /// Exponent of the Cauchy gaps and residual norms.
    pub gap_exponent: Exponent,
    /// Norms of the source, reported separately and as their max.
    #[serde(default = "default_source_norms")]
    pub source_norms: Vec<NormSpec>,
    #[serde(default)]
    pub keep_iterates: bool,
}

fn default_source_norms() -> Vec<NormSpec> {
    vec![NormSpec::Lebesgue(Exponent::Finite(1.0)), NormSpec::Lebesgue(Exponent::Finite(4.0 / 3.0))]
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        Self {
            delta0: 0.125,
            steps: 6,
            sign: -1,
            norms: vec![NormSpec::Lebesgue(Exponent::Finite(2.0)), NormSpec::Lebesgue(Exponent::Finite(20.0 / 3.0))],
            gap_exponent: Exponent::Finite(20.0 / 3.0),
            source_norms: default_source_norms(),
            keep_iterates: false,
        }
    }
}

impl ScheduleConfig {
    /// `δ_k = δ₀ 2^{−k}` for `k = 0..steps`.
    pub fn schedule(&self) -> Vec<f64> {
        (0..self.steps).map(|k| self.delta0 * 2f64.powi(-(k as i32))).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbsorptionRun {
    pub delta_schedule: Vec<f64>,
    pub source_norm_names: Vec<String>,
    pub source_norms: Vec<f64>,
    /// Max of `source_norms`, the intersection norm of the source.
    pub source_norm_max: f64,
    pub norm_names: Vec<String>,
    /// `norms[k][m]`: norm `m` of the iterate at `δ_k`.
    pub norms: Vec<Vec<f64>>,
    /// `‖u_{δ_{k+1}} − u_{δ_k}‖` in the gap exponent.
    pub cauchy_gaps: Vec<f64>,
    /// `‖δ (P(D) + iδ)⁻¹ f‖_{L²}` per step.
    pub residual_l2: Vec<f64>,
    /// The same in the gap exponent.
    pub residual_lq: Vec<f64>,
    /// Fitted slope of `log residual_l2` against `log δ`.
    pub residual_slope: f64,
    /// Largest `|(p + iδ) û − f̂| / max |f̂|` over the run.
    pub max_spectral_defect: f64,
    pub warnings: Vec<String>,
    #[serde(skip)]
    pub iterates: Vec<GridField>,
}

impl AbsorptionRun {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("delta");
        for n in &self.norm_names {
            s.push_str(&format!(",{n}"));
        }
        s.push_str(",cauchy_gap,residual_l2,residual_lq\n");
        for (k, d) in self.delta_schedule.iter().enumerate() {
            s.push_str(&format!("{d}"));
            for v in &self.norms[k] {
                s.push_str(&format!(",{v}"));
            }
            let gap = if k == 0 { String::new() } else { self.cauchy_gaps[k - 1].to_string() };
            s.push_str(&format!(",{gap},{},{}\n", self.residual_l2[k], self.residual_lq[k]));
        }
        s
    }
}

/// Run the δ-schedule and return the report and the final iterate.
pub fn limiting_absorption(s: &Symbol, f: &GridField, config: &ScheduleConfig) -> Result<(AbsorptionRun, GridField)> {
    if config.steps < 2 || !(config.delta0 > 0.0) {
        return Err(Lap3dError::InvalidInput("need delta0 > 0 and at least two steps".into()));
    }
    let source_norms = config.source_norms.iter().map(|n| n.evaluate(f)).collect::<Result<Vec<_>>>()?;
    let p = symbol_on_grid(s, f);
    let fh = f.dft();
    let fmax = fh.iter().map(|v| v.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let schedule = config.schedule();
    let mut norms = Vec::new();
    let mut gaps = Vec::new();
    let mut res2 = Vec::new();
    let mut resq = Vec::new();
    let mut defect: f64 = 0.0;
    let mut prev: Option<GridField> = None;
    let mut iterates = Vec::new();
    for &delta in &schedule {
        let d = config.sign as f64 * delta;
        let uh: Vec<Complex64> = fh.par_iter().zip(&p).map(|(v, p)| v / Complex64::new(*p, d)).collect();
        for ((u, v), p) in uh.iter().zip(&fh).zip(&p) {
            defect = defect.max((u * Complex64::new(*p, d) - v).norm() / fmax);
        }
        let u = f.from_dft(uh);
        norms.push(config.norms.iter().map(|n| n.evaluate(&u)).collect::<Result<Vec<_>>>()?);
        let r = u.scale(Complex64::new(delta, 0.0));
        res2.push(lebesgue_norm(&r, Exponent::Finite(2.0)));
        resq.push(lebesgue_norm(&r, config.gap_exponent));
        if let Some(prev) = &prev {
            gaps.push(lebesgue_norm(&u.sub(prev)?, config.gap_exponent));
        }
        if config.keep_iterates {
            iterates.push(u.clone());
        }
        prev = Some(u);
    }
    let mut warnings = Vec::new();
    for w in gaps.windows(2) {
        if w[1] > 2.0 * w[0] {
            warnings.push(format!("NotCauchy: gap grew from {:.3e} to {:.3e}", w[0], w[1]));
        }
    }
    let lx: Vec<f64> = schedule.iter().map(|d| d.ln()).collect();
    let ly: Vec<f64> = res2.iter().map(|r| r.ln()).collect();
    let (slope, _) = linear_fit(&lx, &ly);
    let run = AbsorptionRun {
        delta_schedule: schedule,
        source_norm_names: config.source_norms.iter().map(|n| n.to_string()).collect(),
        source_norm_max: source_norms.iter().copied().fold(0.0, f64::max),
        source_norms,
        norm_names: config.norms.iter().map(|n| n.to_string()).collect(),
        norms,
        cauchy_gaps: gaps,
        residual_l2: res2,
        residual_lq: resq,
        residual_slope: slope,
        max_spectral_defect: defect,
        warnings,
        iterates,
    };
    Ok((run, prev.expect("at least two steps")))
}

/// Convolution of a radial profile with `e^{−k|x|}/(4π|x|)` (`Re k ≥ 0`),
/// evaluated at radius `r` by Simpson quadrature on `[0, s_max]`.
///
/// `k = √(κ²)` solves `(−Δ + κ²) u = f`; the outgoing Helmholtz solution
/// uses `k = −i`.
pub fn radial_yukawa<F: Fn(f64) -> f64>(f: F, k: Complex64, r: f64, s_max: f64, n: usize) -> Complex64 {
    let n = n + (n & 1);
    let h = s_max / n as f64;
    let four_pi_k = 4.0 * std::f64::consts::PI * k;
    let inner = |s: f64| -> Complex64 {
        if r == 0.0 {
            // limit r → 0 of the bracket divided by r
            return (-k * s).exp() * (2.0 * s * f(s) / (4.0 * std::f64::consts::PI));
        }
        let b = ((-k * (r - s).abs()).exp() - (-k * (r + s)).exp()) / four_pi_k;
        b * (s * f(s)) / r
    };
    let mut re = KahanSum::default();
    let mut im = KahanSum::default();
    for i in 0..=n {
        let w = if i == 0 || i == n {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        let v = inner(i as f64 * h) * w;
        re.add(v.re);
        im.add(v.im);
    }
    Complex64::new(re.value(), im.value()) * (2.0 * std::f64::consts::PI * h / 3.0)
}

/// `‖g‖_{L²}` over grid points with `|x − centre| ≤ radius`.
pub fn ball_l2(g: &GridField, radius: f64) -> f64 {
    let c = g.center();
    let mut acc = KahanSum::default();
    for (k, v) in g.values.iter().enumerate() {
        if (g.point(k) - c).norm() <= radius {
            acc.add(v.norm_sqr());
        }
    }
    (acc.value() * g.cell_volume()).sqrt()
}

/// `π (2π)⁻³ ∫_{p=0} e^{ix·ξ} f̂(ξ) / |∇p| dσ` at the grid points within
/// `radius` of the centre (zero elsewhere), with `f̂` sampled as in
/// [`crate::restriction::extend`].
pub fn surface_delta_term(s: &Symbol, mesh: &SurfaceMesh, f: &GridField, radius: f64) -> Result<GridField> {
    let beta: Vec<f64> = mesh
        .vertices
        .iter()
        .map(|v| {
            let g = s.eval_jet(v, 1).gradient.norm();
            std::f64::consts::PI / (8.0 * std::f64::consts::PI.powi(3) * g)
        })
        .collect();
    let (nodes, coeffs) = crate::restriction::surface_coefficients(mesh, &beta, f)?;
    let c = f.center();
    let idx: Vec<usize> = (0..f.len()).filter(|&k| (f.point(k) - c).norm() <= radius).collect();
    let vals: Vec<Complex64> = idx
        .par_iter()
        .map(|&k| {
            let x: Vector3<f64> = f.point(k) - c;
            let mut acc = Complex64::new(0.0, 0.0);
            for (v, cf) in nodes.iter().zip(&coeffs) {
                acc += cf * Complex64::from_polar(1.0, x.dot(v));
            }
            acc
        })
        .collect();
    let mut out = f.with_values(vec![Complex64::new(0.0, 0.0); f.len()]);
    for (k, v) in idx.into_iter().zip(vals) {
        out.values[k] = v;
    }
    Ok(out)
}

fn restrict_to_ball(g: &GridField, radius: f64) -> GridField {
    let c = g.center();
    let vals = g
        .values
        .iter()
        .enumerate()
        .map(|(k, v)| if (g.point(k) - c).norm() <= radius { *v } else { Complex64::new(0.0, 0.0) })
        .collect();
    g.with_values(vals)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SokhotskyRow {
    pub delta: f64,
    /// `‖(u₊ − u₋)/2 + iπ S f‖ / ‖π S f‖` on the ball.
    pub difference_gap: f64,
    /// `‖I_δ f − π S f‖ / ‖π S f‖` for the imaginary part of `A_δ`.
    pub imag_gap: f64,
    /// `‖I_δ f‖ / ‖π S f‖`.
    pub imag_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SokhotskyReport {
    pub rows: Vec<SokhotskyRow>,
    pub ball_radius: f64,
    pub surface_norm: f64,
}

/// Compare the jump `(u₊ − u₋)/2` and the imaginary part of `A_δ` with the
/// surface term `π S f`, `S f = (2π)⁻³ ∫_{p=0} e^{ix·ξ} f̂ / |∇p| dσ`.
pub fn sokhotsky_check(
    s: &Symbol,
    part: &MultiplierPartition,
    mesh: &SurfaceMesh,
    f: &GridField,
    deltas: &[f64],
    ball_radius: f64,
) -> Result<SokhotskyReport> {
    let target = surface_delta_term(s, mesh, f, ball_radius)?;
    let tnorm = ball_l2(&target, ball_radius);
    if tnorm == 0.0 {
        return Err(Lap3dError::InvalidInput("surface term vanishes on the ball".into()));
    }
    let mut rows = Vec::new();
    for &d in deltas {
        let up = apply_resolvent(s, f, d, 1)?;
        let um = apply_resolvent(s, f, d, -1)?;
        let jump = restrict_to_ball(&up.sub(&um)?.scale(Complex64::new(0.5, 0.0)), ball_radius);
        let expected = target.scale(Complex64::new(0.0, -1.0));
        let split = split_operators(s, part, f, d)?;
        let imag = restrict_to_ball(&split.a_imag, ball_radius);
        rows.push(SokhotskyRow {
            delta: d,
            difference_gap: ball_l2(&jump.sub(&expected)?, ball_radius) / tnorm,
            imag_gap: ball_l2(&imag.sub(&target)?, ball_radius) / tnorm,
            imag_ratio: ball_l2(&imag, ball_radius) / tnorm,
        });
    }
    Ok(SokhotskyReport { rows, ball_radius, surface_norm: tnorm })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BesselRow {
    pub pair: String,
    pub inside: bool,
    pub max_ratio: f64,
    pub trial_id: usize,
}

/// `‖B_δ β₂₂(D) f‖_{L^q} / ‖f‖_{L^p}` over the unmodulated members of the
/// restriction trial family, with the exact region verdict per pair.
pub fn bessel_regime_check(
    s: &Symbol,
    part: &MultiplierPartition,
    grid: &GridField,
    pairs: &[ExponentPair],
    trials: usize,
    delta: f64,
) -> Result<Vec<BesselRow>> {
    let degree = s.principal_part()?.degree();
    if part.beta1.len() != grid.len() {
        return Err(Lap3dError::InvalidInput("partition built for a different grid".into()));
    }
    let p = symbol_on_grid(s, grid);
    let mult: Vec<Complex64> = (0..grid.len())
        .map(|k| Complex64::new(part.beta2[k] * part.beta22[k], 0.0) / Complex64::new(p[k], delta))
        .collect();
    // frequency-free trials: the surface-adapted kinds need a mesh
    let dummy = SurfaceMesh {
        level: 0.0,
        h: 1.0,
        vertices: vec![Vector3::zeros()],
        triangles: vec![],
        weights: vec![1.0],
        normals: vec![Vector3::z()],
        density: vec![1.0],
    };
    let extent = grid.extent()[0];
    let mut best = vec![(0usize, 0.0f64); pairs.len()];
    for id in 0..trials {
        let t = trial(id, &dummy, &[1.0], None, extent);
        let f = t.field(grid)?;
        let mut c = f.dft();
        c.iter_mut().zip(&mult).for_each(|(v, m)| *v *= m);
        let bf = f.from_dft(c);
        for (k, e) in pairs.iter().enumerate() {
            let r = lebesgue_norm(&bf, e.q()) / lebesgue_norm(&f, e.p());
            if r > best[k].1 {
                best[k] = (id, r);
            }
        }
    }
    Ok(pairs
        .iter()
        .zip(best)
        .map(|(e, (id, r))| BesselRow { pair: e.to_string(), inside: bessel_region(*e, degree), max_ratio: r, trial_id: id })
        .collect())
}

/// Default grid for operator scans on a solver grid.
pub fn scan_grid_of(grid: &GridField) -> ScanGrid {
    ScanGrid { n: grid.dims[0], extent: grid.extent()[0] }
}
