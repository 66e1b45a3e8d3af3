//! Dyadic slab decomposition of a surface delta, the localized kernels
//! `K_δ`, Strichartz-type ratio scans, and the Bourgain summation
//! calculator.
//!
//! The profile `φ` is the inverse transform of the Littlewood–Paley bump
//! `b(t) = η(t) − η(2t)`, so that `∫ φ((s − ψ)/δ) e^{i x₃ s} ds =
//! δ e^{i x₃ ψ} b(δ x₃)` exactly. Kernel scans use this identity for the
//! normal integral and quadrature only for the tangential one.
//!
//! The summation exponent is `θ = ε₂/(ε₁ + ε₂)`.

use nalgebra::{Matrix2, Matrix3, Vector3};
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Lap3dError, Result};
use crate::geometry::{curvature_at, symmetric_eigen2};
use crate::grid::{fft3, GridField};
use crate::lorentz::{lebesgue_norm, Exponent};
use crate::quadrature::project_to_level;
use crate::sampling::{halton, linear_fit, plateau_bump, smooth_step, KahanSum};
use crate::symbols::Symbol;

/// Low-pass profile: 1 on `|t| ≤ 1`, 0 on `|t| ≥ 2`, C^∞ in between.
pub fn eta(t: f64) -> f64 {
    1.0 - smooth_step(t.abs() - 1.0)
}

/// Littlewood–Paley bump `η(t) − η(2t)`, supported in `1/2 ≤ |t| ≤ 2`.
pub fn lp_bump(t: f64) -> f64 {
    eta(t) - eta(2.0 * t)
}

const TABLE_FFT_LEN: usize = 1 << 18;
const TABLE_DTAU: f64 = 1.0 / 256.0;
const TABLE_REACH: f64 = 600.0;
const BASE_STEP: f64 = 0.02;

/// Spatial profile `φ` of the dyadic decomposition, tabulated on a fine grid.
///
/// Pairings sum the scales in `j_range` and fold every coarser scale into
/// one low-pass bucket with transform `η(2^{1-j_min} t)`, so the truncated
/// sum reproduces `δ₀` up to frequencies near `2^{j_max}`.
#[derive(Debug, Clone)]
pub struct DyadicProfile {
    pub j_range: (i32, i32),
    dv: f64,
    phi: Vec<f64>,
    phi_low: Vec<f64>,
}

impl DyadicProfile {
    /// `φ(u) = (1/2π) ∫ b(t) e^{iut} dt`.
    pub fn phi(&self, u: f64) -> f64 {
        interp_even(&self.phi, u.abs() / self.dv)
    }

    /// Low-pass kernel with transform `η`.
    pub fn phi_low(&self, u: f64) -> f64 {
        interp_even(&self.phi_low, u.abs() / self.dv)
    }

    /// Transform of `φ`.
    pub fn transform(&self, t: f64) -> f64 {
        lp_bump(t)
    }

    /// Radius beyond which the tables are treated as zero.
    pub fn reach(&self) -> f64 {
        (self.phi.len() - 3) as f64 * self.dv
    }

    /// `∫ 2^j φ(2^j u) g(u) du`. `feature` is the smallest length scale of
    /// `g`, `reach` a radius outside which `g` is negligible.
    pub fn pair_scale<G: Fn(f64) -> f64>(&self, j: i32, g: &G, feature: f64, reach: f64) -> f64 {
        self.scaled_integral(false, 2f64.powi(j), g, feature, reach)
    }

    /// Full pairing `Σ_j 2^j ∫ φ(2^j u) g(u) du` over `j_range` plus the
    /// low-pass bucket; approximates `g(0)`.
    pub fn pair<G: Fn(f64) -> f64>(&self, g: &G, feature: f64, reach: f64) -> f64 {
        let mut acc = KahanSum::default();
        for j in self.j_range.0..=self.j_range.1 {
            acc.add(self.pair_scale(j, g, feature, reach));
        }
        acc.add(self.scaled_integral(true, 2f64.powi(self.j_range.0 - 1), g, feature, reach));
        acc.value()
    }

    /// `∫ 2^j φ(2^j u) du` by the same quadrature at every scale.
    pub fn scale_mass(&self, j: i32) -> f64 {
        let scale = 2f64.powi(j);
        let r = self.reach();
        let n = even_steps(2.0 * r / BASE_STEP);
        let h = 2.0 * r / n as f64 / scale;
        simpson(|u| scale * self.phi(scale * u), -r / scale, h, n)
    }

    fn scaled_integral<G: Fn(f64) -> f64>(&self, low: bool, scale: f64, g: &G, feature: f64, reach: f64) -> f64 {
        let r = (reach * scale).min(self.reach());
        let step = BASE_STEP.min(feature * scale / 16.0);
        let n = even_steps(2.0 * r / step);
        let h = 2.0 * r / n as f64;
        if low {
            simpson(|v| self.phi_low(v) * g(v / scale), -r, h, n)
        } else {
            simpson(|v| self.phi(v) * g(v / scale), -r, h, n)
        }
    }
}

fn even_steps(x: f64) -> usize {
    let n = x.ceil().max(2.0) as usize;
    n + (n & 1)
}

fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, h: f64, n: usize) -> f64 {
    let mut acc = KahanSum::default();
    for i in 0..=n {
        let w = if i == 0 || i == n {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        acc.add(w * f(a + i as f64 * h));
    }
    acc.value() * h / 3.0
}

/// Catmull–Rom interpolation of an even function tabulated at `0, 1, 2, …`.
fn interp_even(table: &[f64], x: f64) -> f64 {
    let i = x.floor() as usize;
    if i + 2 >= table.len() {
        return 0.0;
    }
    let t = x - i as f64;
    let p0 = if i == 0 { table[1] } else { table[i - 1] };
    let (p1, p2, p3) = (table[i], table[i + 1], table[i + 2]);
    p1 + 0.5
        * t
        * (p2 - p0 + t * (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3 + t * (3.0 * (p1 - p2) + p3 - p0)))
}

/// Inverse transform of an even function by one large FFT, returned on
/// `[0, TABLE_REACH]` with spacing `2π / (M Δτ)`.
fn tabulate_inverse(f: impl Fn(f64) -> f64) -> (f64, Vec<f64>) {
    let m = TABLE_FFT_LEN;
    let mut buf: Vec<Complex64> = (0..m)
        .map(|k| {
            let signed = if k < m / 2 { k as f64 } else { k as f64 - m as f64 };
            Complex64::new(f(signed * TABLE_DTAU), 0.0)
        })
        .collect();
    FftPlanner::<f64>::new().plan_fft_inverse(m).process(&mut buf);
    let dv = 2.0 * std::f64::consts::PI / (m as f64 * TABLE_DTAU);
    let count = (TABLE_REACH / dv).ceil() as usize + 3;
    let scale = TABLE_DTAU / (2.0 * std::f64::consts::PI);
    (dv, buf[..count].iter().map(|c| c.re * scale).collect())
}

/// Build the profile and check its resolution of identity on a Gaussian.
pub fn build_profile(j_range: (i32, i32)) -> Result<DyadicProfile> {
    if j_range.0 > -4 || j_range.1 < 4 {
        return Err(Lap3dError::InvalidInput(format!(
            "j_range {:?} must contain [-4, 4]",
            j_range
        )));
    }
    let (dv, phi) = tabulate_inverse(lp_bump);
    let (_, phi_low) = tabulate_inverse(eta);
    let profile = DyadicProfile { j_range, dv, phi, phi_low };

    for t in [0.0, 0.25, 0.49, 2.01, 3.0, 10.0] {
        if lp_bump(t).abs() > 1e-8 {
            return Err(Lap3dError::VerificationFailed(format!("transform nonzero at t = {t}")));
        }
    }
    let total = profile.pair(&|u: f64| (-u * u).exp(), 0.5, 7.0);
    if (total - 1.0).abs() > 1e-4 {
        return Err(Lap3dError::VerificationFailed(format!(
            "Gaussian pairing gives {total}, expected 1"
        )));
    }
    Ok(profile)
}

/// Graph `ξ₃ = ψ(ξ')` describing a surface patch in local coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GraphSurface {
    Flat,
    /// `ψ = √(r² − |ξ'|²)`.
    SphereCap { radius: f64 },
    Level(LevelGraph),
}

impl GraphSurface {
    /// `ψ(ξ')`, NaN where the graph is undefined.
    pub fn psi(&self, x: f64, y: f64) -> f64 {
        match self {
            GraphSurface::Flat => 0.0,
            GraphSurface::SphereCap { radius } => {
                let r2 = radius * radius - x * x - y * y;
                if r2 >= 0.0 {
                    r2.sqrt()
                } else {
                    f64::NAN
                }
            }
            GraphSurface::Level(g) => g.psi(x, y),
        }
    }

    fn gradient(&self, x: f64, y: f64) -> [f64; 2] {
        let h = 1e-5;
        [
            (self.psi(x + h, y) - self.psi(x - h, y)) / (2.0 * h),
            (self.psi(x, y + h) - self.psi(x, y - h)) / (2.0 * h),
        ]
    }

    fn hessian(&self, x: f64, y: f64) -> Matrix2<f64> {
        let h = 1e-4;
        let f = |a: f64, b: f64| self.psi(a, b);
        let c = f(x, y);
        let xx = (f(x + h, y) - 2.0 * c + f(x - h, y)) / (h * h);
        let yy = (f(x, y + h) - 2.0 * c + f(x, y - h)) / (h * h);
        let xy = (f(x + h, y + h) - f(x + h, y - h) - f(x - h, y + h) + f(x - h, y - h)) / (4.0 * h * h);
        Matrix2::new(xx, xy, xy, yy)
    }
}

/// Level set `{p = a}` written as a graph over the tangent plane at `center`,
/// with tangent axes along the principal directions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelGraph {
    pub symbol: Symbol,
    pub level: f64,
    pub center: [f64; 3],
    /// Rows: first principal direction, second principal direction, normal.
    pub frame: [[f64; 3]; 3],
    /// Frequency dilation `λ`: the graph is `λ ψ₁(ξ'/λ)` where `ψ₁` is the
    /// undilated level-set graph, i.e. the patch of `{p(·/λ) = a}`.
    #[serde(default = "unit")]
    pub dilation: f64,
}

impl LevelGraph {
    /// Project `near` onto the level set and attach the principal frame.
    pub fn at(symbol: &Symbol, level: f64, near: Vector3<f64>) -> Result<Self> {
        let c = project_to_level(symbol, level, near)?;
        let cd = curvature_at(symbol, &c)?;
        let e1 = cd.dirs[0];
        let nu = cd.nu;
        let e2 = nu.cross(&e1).normalize();
        Ok(Self {
            symbol: symbol.clone(),
            level,
            center: [c.x, c.y, c.z],
            frame: [[e1.x, e1.y, e1.z], [e2.x, e2.y, e2.z], [nu.x, nu.y, nu.z]],
            dilation: 1.0,
        })
    }

    pub fn dilated(mut self, lambda: f64) -> Self {
        self.dilation = lambda;
        self
    }

    fn axes(&self) -> (Vector3<f64>, Vector3<f64>, Vector3<f64>, Vector3<f64>) {
        let v = |r: [f64; 3]| Vector3::new(r[0], r[1], r[2]);
        (v(self.center), v(self.frame[0]), v(self.frame[1]), v(self.frame[2]))
    }

    /// Solve `p(c + x e₁ + y e₂ + t ν) = a` for `t` by Newton from `t = 0`.
    pub fn psi(&self, x: f64, y: f64) -> f64 {
        self.dilation * self.psi_unit(x / self.dilation, y / self.dilation)
    }

    fn psi_unit(&self, x: f64, y: f64) -> f64 {
        let (c, e1, e2, nu) = self.axes();
        let base = c + e1 * x + e2 * y;
        let mut t = 0.0;
        for _ in 0..40 {
            let p = base + nu * t;
            let jet = self.symbol.eval_jet(&p, 1);
            let r = jet.value - self.level;
            let d = jet.gradient.dot(&nu);
            if d.abs() < 1e-12 {
                return f64::NAN;
            }
            let step = r / d;
            t -= step;
            if step.abs() < 1e-14 * (1.0 + t.abs()) {
                return t;
            }
        }
        let r = self.symbol.value(&(base + nu * t)) - self.level;
        if r.abs() < 1e-10 {
            t
        } else {
            f64::NAN
        }
    }
}

/// Graph patch with cutoff `β(ξ') = amplitude · bump(|ξ'| / radius)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphPatch {
    pub surface: GraphSurface,
    pub radius: f64,
    #[serde(default = "unit")]
    pub amplitude: f64,
}

fn unit() -> f64 {
    1.0
}

impl GraphPatch {
    pub fn new(surface: GraphSurface, radius: f64) -> Self {
        Self { surface, radius, amplitude: 1.0 }
    }

    pub fn beta(&self, x: f64, y: f64) -> f64 {
        self.amplitude * plateau_bump((x * x + y * y).sqrt() / self.radius)
    }

    /// Sampled `max |∇ψ|` over the support of β.
    pub fn max_gradient(&self) -> f64 {
        let n = 41;
        let mut g: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let x = self.radius * (2.0 * i as f64 / (n - 1) as f64 - 1.0);
                let y = self.radius * (2.0 * j as f64 / (n - 1) as f64 - 1.0);
                if x * x + y * y > self.radius * self.radius {
                    continue;
                }
                let d = self.surface.gradient(x, y);
                g = g.max(d[0].hypot(d[1]));
            }
        }
        g
    }

    /// Cone constant `c = 1 / (2 max |∇ψ|)`.
    pub fn cone_constant(&self) -> f64 {
        let g = self.max_gradient();
        if g > 1e-12 {
            0.5 / g
        } else {
            f64::INFINITY
        }
    }
}

/// Sampling controls for [`kernel_estimate_scan`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelScanConfig {
    /// Uniform `x₃` samples on `[0, 8/δ]`.
    pub x3_samples: usize,
    /// Zero padding of the tangential frequency box, in patch diameters.
    pub padding: f64,
    pub max_fft: usize,
}

impl Default for KernelScanConfig {
    fn default() -> Self {
        Self { x3_samples: 256, padding: 8.0, max_fft: 4096 }
    }
}

/// Slab summary of `K_δ`: per `x₃` sample the `L¹` mass over `x'` and the
/// maximum of `|K_δ|` over the transverse cone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalizedKernel {
    pub delta: f64,
    pub x3: Vec<f64>,
    pub slab_mass: Vec<f64>,
    pub cone_max: Vec<f64>,
    /// Tangential grid spacing of the `x'` samples.
    pub x_spacing: f64,
}

impl LocalizedKernel {
    /// Fraction of `∫|K_δ|` outside `|x₃| ∈ [0.25/δ, 4/δ]`.
    pub fn outside_fraction(&self) -> f64 {
        let (lo, hi) = (0.25 / self.delta, 4.0 / self.delta);
        let total: f64 = self.slab_mass.iter().sum();
        if total == 0.0 {
            return 0.0;
        }
        let outside: f64 = self
            .x3
            .iter()
            .zip(&self.slab_mass)
            .filter(|(x, _)| **x < lo || **x > hi)
            .map(|(_, m)| m)
            .sum();
        outside / total
    }

    pub fn max_in_cone(&self) -> (f64, f64) {
        self.x3
            .iter()
            .zip(&self.cone_max)
            .fold((0.0, 0.0), |acc, (x, m)| if *m > acc.0 { (*m, *x) } else { acc })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelRow {
    pub delta: f64,
    pub max_abs: f64,
    pub x3_at_max: f64,
    pub outside_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelScan {
    pub rows: Vec<KernelRow>,
    pub exponent: f64,
    pub fit_residual: f64,
    pub cone_constant: f64,
    pub fft_size: usize,
    pub frequency_spacing: f64,
}

impl KernelScan {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("delta,max_abs_k,x3_at_max,outside_fraction,fitted_exponent\n");
        for r in &self.rows {
            s.push_str(&format!(
                "{},{},{},{},{}\n",
                r.delta, r.max_abs, r.x3_at_max, r.outside_fraction, self.exponent
            ));
        }
        s
    }
}

struct TangentialGrid {
    n: usize,
    dxi: f64,
    beta: Vec<f64>,
    psi: Vec<f64>,
}

impl TangentialGrid {
    fn new(patch: &GraphPatch, x3_max: f64, config: &KernelScanConfig) -> Result<Self> {
        let g = patch.max_gradient();
        let band = x3_max * g + 40.0 / patch.radius;
        let dxi_max = std::f64::consts::PI / band;
        let length = config.padding * 2.0 * patch.radius;
        let n = ((length / dxi_max).ceil() as usize).next_power_of_two();
        if n > config.max_fft {
            return Err(Lap3dError::ResolutionCap { radius: x3_max, cap: config.max_fft as f64 });
        }
        let dxi = length / n as f64;
        let coord = |i: usize| -0.5 * length + i as f64 * dxi;
        let mut beta = vec![0.0; n * n];
        let mut psi = vec![0.0; n * n];
        beta.par_chunks_mut(n).zip(psi.par_chunks_mut(n)).enumerate().for_each(|(i, (brow, prow))| {
            for j in 0..n {
                let (x, y) = (coord(i), coord(j));
                let b = patch.beta(x, y);
                if b > 0.0 {
                    let p = patch.surface.psi(x, y);
                    if p.is_finite() {
                        brow[j] = b;
                        prow[j] = p;
                    }
                }
            }
        });
        Ok(Self { n, dxi, beta, psi })
    }

    /// `|∫ e^{i(x'·ξ' + x₃ψ)} β dξ'|` on the output grid, with `|x'|` per node.
    fn magnitudes(&self, x3: f64) -> Vec<f64> {
        let n = self.n;
        let mut buf: Vec<Complex64> = self
            .beta
            .iter()
            .zip(&self.psi)
            .map(|(b, p)| if *b > 0.0 { Complex64::from_polar(*b, x3 * p) } else { Complex64::new(0.0, 0.0) })
            .collect();
        fft3(&mut buf, [1, n, n], false);
        let w = self.dxi * self.dxi;
        buf.iter().map(|c| c.norm() * w).collect()
    }

    fn radii(&self) -> Vec<f64> {
        let n = self.n;
        let dx = 2.0 * std::f64::consts::PI / (n as f64 * self.dxi);
        (0..n * n)
            .map(|idx| {
                let (i, j) = (idx / n, idx % n);
                let si = crate::grid::signed_index(i, n) as f64;
                let sj = crate::grid::signed_index(j, n) as f64;
                dx * si.hypot(sj)
            })
            .collect()
    }
}

/// Sample `K_δ` slab by slab.
pub fn localized_kernel(patch: &GraphPatch, delta: f64, config: &KernelScanConfig) -> Result<LocalizedKernel> {
    let grid = TangentialGrid::new(patch, 2.0 / delta, config)?;
    localized_kernel_on(&grid, patch, delta, config)
}

fn localized_kernel_on(
    grid: &TangentialGrid,
    patch: &GraphPatch,
    delta: f64,
    config: &KernelScanConfig,
) -> Result<LocalizedKernel> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Lap3dError::InvalidInput(format!("delta {delta} outside (0, 1]")));
    }
    let c = patch.cone_constant();
    let radii = grid.radii();
    let n = config.x3_samples.max(8);
    let x3: Vec<f64> = (0..n).map(|i| 8.0 / delta * (i as f64 + 0.5) / n as f64).collect();
    let cell = (2.0 * std::f64::consts::PI / (grid.n as f64 * grid.dxi)).powi(2);
    let per: Vec<(f64, f64)> = x3
        .par_iter()
        .map(|&x3| {
            let amp = delta * lp_bump(delta * x3);
            if amp == 0.0 {
                return (0.0, 0.0);
            }
            let mags = grid.magnitudes(x3);
            let mass: f64 = mags.iter().sum::<f64>() * cell * amp;
            let cone = mags
                .iter()
                .zip(&radii)
                .filter(|(_, r)| **r <= c * x3)
                .map(|(m, _)| *m)
                .fold(0.0, f64::max);
            (mass, cone * amp)
        })
        .collect();
    Ok(LocalizedKernel {
        delta,
        x3,
        slab_mass: per.iter().map(|p| p.0).collect(),
        cone_max: per.iter().map(|p| p.1).collect(),
        x_spacing: 2.0 * std::f64::consts::PI / (grid.n as f64 * grid.dxi),
    })
}

/// Max of `|K_δ|` over the transverse cone per δ and the log–log slope.
pub fn kernel_estimate_scan(patch: &GraphPatch, deltas: &[f64], config: &KernelScanConfig) -> Result<KernelScan> {
    if deltas.len() < 2 {
        return Err(Lap3dError::InvalidInput("kernel scan needs at least two deltas".into()));
    }
    let dmin = deltas.iter().copied().fold(f64::INFINITY, f64::min);
    let grid = TangentialGrid::new(patch, 2.0 / dmin, config)?;
    let mut rows = Vec::new();
    for &d in deltas {
        let k = localized_kernel_on(&grid, patch, d, config)?;
        let (m, x3) = k.max_in_cone();
        rows.push(KernelRow { delta: d, max_abs: m, x3_at_max: x3, outside_fraction: k.outside_fraction() });
    }
    let lx: Vec<f64> = rows.iter().map(|r| r.delta.ln()).collect();
    let ly: Vec<f64> = rows.iter().map(|r| r.max_abs.ln()).collect();
    let (slope, icpt) = linear_fit(&lx, &ly);
    Ok(KernelScan {
        rows,
        exponent: slope,
        fit_residual: crate::sampling::fit_residual(&lx, &ly, slope, icpt),
        cone_constant: patch.cone_constant(),
        fft_size: grid.n,
        frequency_spacing: grid.dxi,
    })
}

/// Version tag of the wave-packet trial family.
pub const PACKET_FAMILY: &str = "packets-v1";

/// One member of the wave-packet family at slab thickness δ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WavePacket {
    pub id: usize,
    /// Frequency centre in graph coordinates.
    pub center: [f64; 2],
    /// Gaussian widths along the two principal tangent axes and the normal.
    pub widths: [f64; 3],
    /// Physical centre.
    pub position: [f64; 3],
}

/// Deterministic member `id` of the family: widths adapted to δ (Knapp caps
/// `δ^{1/2}`, `δ^{1/3}` and a wide cap), normal width `δ` or `2δ`, frequency
/// centres on a Halton set in the inner third of the patch.
pub fn wave_packet(id: usize, delta: f64, patch_radius: f64) -> WavePacket {
    let cap = 0.25 * patch_radius;
    let s = delta.sqrt().min(cap);
    let c = delta.cbrt().min(cap);
    let tangential = [(s, s), (s, c), (c, s), (cap, cap)][id % 4];
    let normal = delta * [1.0, 2.0][(id / 4) % 2];
    let k = id / 8;
    let center = if k == 0 {
        [0.0, 0.0]
    } else {
        let r = patch_radius / 3.0 * halton(k, 2).sqrt();
        let a = 2.0 * std::f64::consts::PI * halton(k, 3);
        [r * a.cos(), r * a.sin()]
    };
    let position = [4.0 * (2.0 * halton(id + 1, 5) - 1.0), 4.0 * (2.0 * halton(id + 1, 7) - 1.0), 4.0 * (2.0 * halton(id + 1, 11) - 1.0)];
    WavePacket { id, center, widths: [tangential.0, tangential.1, normal], position }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrichartzConfig {
    pub q: f64,
    pub trials: usize,
    /// Largest local FFT grid (points) evaluated; larger trials are skipped.
    pub max_points: usize,
}

impl Default for StrichartzConfig {
    fn default() -> Self {
        Self { q: 14.0 / 3.0, trials: 24, max_points: 1 << 23 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrichartzRow {
    pub j: i32,
    pub delta: f64,
    pub max_ratio: f64,
    pub best_trial: usize,
    /// `max_ratio · 2^{j/2}`.
    pub scaled: f64,
    pub skipped: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrichartzScan {
    pub rows: Vec<StrichartzRow>,
    /// Fitted slope of `log₂ max_ratio` against `j`.
    pub slope: f64,
    /// `max / min` of the scaled ratios.
    pub spread: f64,
    pub family: String,
    pub q: f64,
}

impl StrichartzScan {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("j,delta,max_ratio,scaled_ratio,best_trial,skipped,fitted_slope\n");
        for r in &self.rows {
            s.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.j, r.delta, r.max_ratio, r.scaled, r.best_trial, r.skipped, self.slope
            ));
        }
        s
    }
}

/// `‖T_δ f‖_q / ‖f‖₂` for one wave packet, or `None` if the local grid would
/// exceed `max_points`.
pub fn packet_ratio(
    patch: &GraphPatch,
    profile: &DyadicProfile,
    delta: f64,
    packet: &WavePacket,
    q: f64,
    max_points: usize,
) -> Result<Option<f64>> {
    let surf = &patch.surface;
    let [cx, cy] = packet.center;
    let c3 = surf.psi(cx, cy);
    if !c3.is_finite() {
        return Err(Lap3dError::InvalidInput("packet centre off the graph".into()));
    }
    let p0 = Vector3::new(cx, cy, c3);
    let grad = surf.gradient(cx, cy);
    let (_, eig, _) = symmetric_eigen2(&surf.hessian(cx, cy));
    let lift = |u: nalgebra::Vector2<f64>| Vector3::new(u.x, u.y, grad[0] * u.x + grad[1] * u.y).normalize();
    let t1 = lift(eig[0]);
    let t2 = (lift(eig[1]) - t1 * t1.dot(&lift(eig[1]))).normalize();
    let mut nrm = t1.cross(&t2);
    if nrm.z < 0.0 {
        nrm = -nrm;
    }
    let frame = Matrix3::from_columns(&[t1, t2, nrm]);
    let sig = packet.widths;
    let half = [5.0 * sig[0], 5.0 * sig[1], 5.0 * sig[2]];

    // gradient of (ξ₃ − ψ(ξ'))/δ along each local axis, sampled on the box
    let phase = |z: &Vector3<f64>| {
        let x = p0 + frame * z;
        (x.z - surf.psi(x.x, x.y)) / delta
    };
    let mut slope = [0.0f64; 3];
    let m = 7;
    for a in 0..m {
        for b in 0..m {
            for c in 0..3 {
                let z = Vector3::new(
                    half[0] * (2.0 * a as f64 / (m - 1) as f64 - 1.0),
                    half[1] * (2.0 * b as f64 / (m - 1) as f64 - 1.0),
                    half[2] * (c as f64 - 1.0),
                );
                for (axis, s) in slope.iter_mut().enumerate() {
                    let mut e = Vector3::zeros();
                    e[axis] = 1e-3 * sig[axis];
                    let d = (phase(&(z + e)) - phase(&(z - e))) / (2.0 * e[axis]);
                    if d.is_finite() {
                        *s = s.max(d.abs());
                    }
                }
            }
        }
    }
    let mut dims = [0usize; 3];
    let mut step = [0.0; 3];
    for i in 0..3 {
        let h = (sig[i] / 2.5).min(if slope[i] > 0.0 { 1.0 / slope[i] } else { f64::INFINITY });
        let n = ((2.0 * half[i] / h).ceil() as usize).max(16).next_power_of_two();
        dims[i] = n;
        step[i] = 2.0 * half[i] / n as f64;
    }
    let total = dims[0] * dims[1] * dims[2];
    if total > max_points {
        return Ok(None);
    }

    let x0 = Vector3::new(packet.position[0], packet.position[1], packet.position[2]);
    let mut fhat = vec![Complex64::new(0.0, 0.0); total];
    let mut thf = vec![Complex64::new(0.0, 0.0); total];
    fhat.par_chunks_mut(dims[2]).zip(thf.par_chunks_mut(dims[2])).enumerate().for_each(|(row, (fr, tr))| {
        let (i, j) = (row / dims[1], row % dims[1]);
        for k in 0..dims[2] {
            let z = Vector3::new(
                -half[0] + i as f64 * step[0],
                -half[1] + j as f64 * step[1],
                -half[2] + k as f64 * step[2],
            );
            let g = -0.5 * ((z.x / sig[0]).powi(2) + (z.y / sig[1]).powi(2) + (z.z / sig[2]).powi(2));
            if g < -40.0 {
                continue;
            }
            let xi = p0 + frame * z;
            let v = Complex64::from_polar(g.exp(), -x0.dot(&xi));
            fr[k] = v;
            let b = patch.beta(xi.x, xi.y);
            if b > 0.0 {
                let psi = surf.psi(xi.x, xi.y);
                if psi.is_finite() {
                    tr[k] = v * (b * profile.phi((xi.z - psi) / delta));
                }
            }
        }
    });
    fft3(&mut fhat, dims, true);
    fft3(&mut thf, dims, true);
    let spacing = [
        2.0 * std::f64::consts::PI / (dims[0] as f64 * step[0]),
        2.0 * std::f64::consts::PI / (dims[1] as f64 * step[1]),
        2.0 * std::f64::consts::PI / (dims[2] as f64 * step[2]),
    ];
    let mut f = GridField::zeros(dims, spacing, [0.0; 3])?;
    f.values = fhat;
    let tf = f.with_values(thf);
    let num = lebesgue_norm(&tf, Exponent::Finite(q));
    let den = lebesgue_norm(&f, Exponent::Finite(2.0));
    Ok(Some(num / den))
}

/// Per-j supremum over the packet family of `‖T_{2^{-j}} f‖_q / ‖f‖₂`.
pub fn strichartz_scan(
    patch: &GraphPatch,
    profile: &DyadicProfile,
    j_list: &[i32],
    config: &StrichartzConfig,
) -> Result<StrichartzScan> {
    if config.trials < 20 {
        return Err(Lap3dError::InvalidInput("strichartz scan needs at least 20 trials".into()));
    }
    if j_list.len() < 2 {
        return Err(Lap3dError::InvalidInput("strichartz scan needs at least two scales".into()));
    }
    let mut rows = Vec::new();
    for &j in j_list {
        let delta = 2f64.powi(-j);
        let results: Vec<(usize, Option<f64>)> = (0..config.trials)
            .into_par_iter()
            .map(|id| {
                let pk = wave_packet(id, delta, patch.radius);
                packet_ratio(patch, profile, delta, &pk, config.q, config.max_points).map(|r| (id, r))
            })
            .collect::<Result<_>>()?;
        let skipped = results.iter().filter(|r| r.1.is_none()).count();
        // max with lowest-id tiebreak
        let (best_trial, max_ratio) = results
            .iter()
            .filter_map(|(id, r)| r.map(|v| (*id, v)))
            .fold((usize::MAX, f64::NEG_INFINITY), |acc, (id, v)| if v > acc.1 { (id, v) } else { acc });
        if best_trial == usize::MAX {
            return Err(Lap3dError::ResolutionCap { radius: 1.0 / delta, cap: config.max_points as f64 });
        }
        rows.push(StrichartzRow {
            j,
            delta,
            max_ratio,
            best_trial,
            scaled: max_ratio * 2f64.powf(0.5 * j as f64),
            skipped,
        });
    }
    let xs: Vec<f64> = rows.iter().map(|r| r.j as f64).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.max_ratio.log2()).collect();
    let (slope, _) = linear_fit(&xs, &ys);
    let smax = rows.iter().map(|r| r.scaled).fold(0.0, f64::max);
    let smin = rows.iter().map(|r| r.scaled).fold(f64::INFINITY, f64::min);
    Ok(StrichartzScan { rows, slope, spread: smax / smin, family: PACKET_FAMILY.to_string(), q: config.q })
}

/// Which of the three summation conclusions applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SummationMode {
    /// `L^{p,1} → L^{q,∞}`.
    Weak,
    /// `q₁ = q₂`: `L^{p,1} → L^q`.
    StrongRestricted,
    /// `p₁ = p₂`: `L^p → L^{q,∞}`.
    WeakUnrestricted,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summation {
    pub theta: f64,
    pub inv_p: f64,
    pub inv_q: f64,
    pub bound: f64,
    pub mode: SummationMode,
}

/// Interpolated exponent and bound `M₁^θ M₂^{1−θ}` for operators obeying
/// `‖T_j‖_{p₁→q₁} ≤ M₁ 2^{ε₁ j}` and `‖T_j‖_{p₂→q₂} ≤ M₂ 2^{−ε₂ j}`.
#[allow(clippy::too_many_arguments)]
pub fn bourgain_combine(
    m1: f64,
    m2: f64,
    eps1: f64,
    eps2: f64,
    p1: Exponent,
    q1: Exponent,
    p2: Exponent,
    q2: Exponent,
) -> Result<Summation> {
    if !(eps1 > 0.0 && eps2 > 0.0) {
        return Err(Lap3dError::InvalidInput("eps1 and eps2 must be positive".into()));
    }
    if !(m1 >= 0.0 && m2 >= 0.0) {
        return Err(Lap3dError::InvalidInput("bounds must be nonnegative".into()));
    }
    let theta = eps2 / (eps1 + eps2);
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Lap3dError::InvalidInput(format!("theta = {theta} outside (0, 1)")));
    }
    let inv_p = theta * p1.reciprocal() + (1.0 - theta) * p2.reciprocal();
    let inv_q = theta * q1.reciprocal() + (1.0 - theta) * q2.reciprocal();
    let mode = if q1 == q2 {
        SummationMode::StrongRestricted
    } else if p1 == p2 {
        SummationMode::WeakUnrestricted
    } else {
        SummationMode::Weak
    };
    Ok(Summation { theta, inv_p, inv_q, bound: m1.powf(theta) * m2.powf(1.0 - theta), mode })
}
