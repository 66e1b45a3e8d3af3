//! Restriction–extension operator `Ef(x) = ∫ e^{ix·ξ} β f̂ dσ(ξ)`, the
//! exact exponent-region predicate, and empirical operator-norm scans.
//!
//! Scans only ever produce lower bounds on operator norms: every ratio is
//! witnessed by a concrete trial function, and a scan that finds no large
//! ratio reports "no violation witnessed", nothing stronger.
//!
//! Boundary ownership of the strong region follows the inequalities
//! literally: `1/p > 7/10`, `1/q < 3/10` (open) and `1/p − 1/q ≥ 4/7`
//! (closed). Points on the open edges are classified by the segment and
//! vertex rules, otherwise as outside.

use std::fmt;
use std::str::FromStr;

use nalgebra::Vector3;
use num_complex::Complex64;
use num_rational::Ratio;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Lap3dError, Result};
use crate::geometry::{curvature_at, orthonormal_complement};
use crate::grid::GridField;
use crate::lorentz::{lebesgue_norm, lorentz_norm, Exponent, LorentzIndex};
use crate::quadrature::SurfaceMesh;
use crate::sampling::{fibonacci_sphere, halton, KahanSum};
use crate::symbols::Symbol;

pub type Q = Ratio<i64>;

fn q(n: i64, d: i64) -> Q {
    Ratio::new(n, d)
}

/// `(1/p, 1/q)` in exact rational arithmetic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ExponentPair {
    pub inv_p: Q,
    pub inv_q: Q,
}

impl ExponentPair {
    pub fn new(inv_p: Q, inv_q: Q) -> Result<Self> {
        let unit = |r: Q| r >= Q::from_integer(0) && r <= Q::from_integer(1);
        if !unit(inv_p) || !unit(inv_q) {
            return Err(Lap3dError::InvalidInput(format!("({inv_p}, {inv_q}) outside [0,1]²")));
        }
        Ok(Self { inv_p, inv_q })
    }

    pub fn from_ints(np: i64, dp: i64, nq: i64, dq: i64) -> Result<Self> {
        if dp == 0 || dq == 0 {
            return Err(Lap3dError::InvalidInput("zero denominator".into()));
        }
        Self::new(q(np, dp), q(nq, dq))
    }

    pub fn p(&self) -> Exponent {
        Exponent::from_reciprocal(self.inv_p).expect("validated")
    }

    pub fn q(&self) -> Exponent {
        Exponent::from_reciprocal(self.inv_q).expect("validated")
    }

    pub fn to_f64(&self) -> (f64, f64) {
        (ratio_f64(self.inv_p), ratio_f64(self.inv_q))
    }
}

pub fn ratio_f64(r: Q) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

fn parse_ratio(s: &str) -> Result<Q> {
    let bad = || Lap3dError::InvalidInput(format!("cannot parse rational `{s}`"));
    let t = s.trim();
    match t.split_once('/') {
        Some((a, b)) => {
            let a: i64 = a.trim().parse().map_err(|_| bad())?;
            let b: i64 = b.trim().parse().map_err(|_| bad())?;
            if b == 0 {
                return Err(bad());
            }
            Ok(q(a, b))
        }
        None => Ok(Q::from_integer(t.parse().map_err(|_| bad())?)),
    }
}

/// Parses `num_p/den_p num_q/den_q`.
impl FromStr for ExponentPair {
    type Err = Lap3dError;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split_whitespace().collect();
        if parts.len() != 2 {
            return Err(Lap3dError::InvalidInput(format!("pair `{s}` needs two rationals")));
        }
        Self::new(parse_ratio(parts[0])?, parse_ratio(parts[1])?)
    }
}

impl fmt::Display for ExponentPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.inv_p, self.inv_q)
    }
}

/// Parse a pairs file, one pair per line; `#` starts a comment.
pub fn parse_pairs(text: &str) -> Result<Vec<ExponentPair>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        out.push(line.parse().map_err(|e: Lap3dError| Lap3dError::Parse { line: i + 1, msg: e.to_string() })?);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    Strong,
    WeakI,
    WeakII,
    RestrictedWeak,
    Outside,
}

impl Region {
    pub fn as_str(&self) -> &'static str {
        match self {
            Region::Strong => "strong",
            Region::WeakI => "weak_I",
            Region::WeakII => "weak_II",
            Region::RestrictedWeak => "restricted_weak",
            Region::Outside => "outside",
        }
    }

    /// Source and target norms probed for this classification.
    pub fn norms(&self) -> (SourceNorm, TargetNorm) {
        match self {
            Region::Strong | Region::Outside => (SourceNorm::Lebesgue, TargetNorm::Lebesgue),
            Region::WeakI => (SourceNorm::Lebesgue, TargetNorm::Weak),
            Region::WeakII => (SourceNorm::LorentzOne, TargetNorm::Lebesgue),
            Region::RestrictedWeak => (SourceNorm::LorentzOne, TargetNorm::Weak),
        }
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegionVerdict {
    pub classification: Region,
    pub witness: String,
}

/// Named vertices of the pentagon, in the order A, B, C, B′, C′.
pub fn pentagon_vertices() -> [(&'static str, ExponentPair); 5] {
    let v = |a, b, c, d| ExponentPair { inv_p: q(a, b), inv_q: q(c, d) };
    [
        ("A", v(1, 1, 0, 1)),
        ("B", v(7, 10, 9, 70)),
        ("C", v(7, 10, 0, 1)),
        ("B'", v(61, 70, 3, 10)),
        ("C'", v(1, 1, 3, 10)),
    ]
}

/// Exact classification of `(1/p, 1/q)`.
pub fn classify_exponents(e: ExponentPair) -> RegionVerdict {
    let (x, y) = (e.inv_p, e.inv_q);
    let c1 = x > q(7, 10);
    let c2 = y < q(3, 10);
    let c3 = x - y >= q(4, 7);
    let verdict = |classification, witness: &str| RegionVerdict { classification, witness: witness.to_string() };
    if c1 && c2 && c3 {
        return verdict(Region::Strong, "1/p > 7/10, 1/q < 3/10, 1/p - 1/q >= 4/7");
    }
    if (x == q(7, 10) && y == q(9, 70)) || (x == q(61, 70) && y == q(3, 10)) {
        return verdict(Region::RestrictedWeak, if x == q(7, 10) { "vertex B" } else { "vertex B'" });
    }
    if y == q(3, 10) && x > q(61, 70) && x <= Q::from_integer(1) {
        return verdict(Region::WeakI, "segment (B', C']");
    }
    if x == q(7, 10) && y >= Q::from_integer(0) && y < q(9, 70) {
        return verdict(Region::WeakII, "segment (B, C]");
    }
    let failed: Vec<&str> = [(c1, "1/p <= 7/10"), (c2, "1/q >= 3/10"), (c3, "1/p - 1/q < 4/7")]
        .iter()
        .filter(|(ok, _)| !ok)
        .map(|(_, s)| *s)
        .collect();
    verdict(Region::Outside, &failed.join(", "))
}

/// Bessel regime `0 ≤ 1/p − 1/q ≤ N/3` for a degree-`N` symbol. The
/// endpoints `(1/p, 1/q) ∈ {(2/3, 0), (1, 1/3)}` are excluded for `N = 2`
/// and `(1, 0)` for `N = 3`; for `N ≥ 4` every pair with `p ≤ q` is inside.
pub fn bessel_region(e: ExponentPair, degree: u32) -> bool {
    let d = e.inv_p - e.inv_q;
    if d < Q::from_integer(0) || d > q(degree as i64, 3) {
        return false;
    }
    let at = |a: Q, b: Q| e.inv_p == a && e.inv_q == b;
    let one = Q::from_integer(1);
    let zero = Q::from_integer(0);
    match degree {
        2 => !(at(q(2, 3), zero) || at(one, q(1, 3))),
        3 => !at(one, zero),
        _ => true,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceNorm {
    Lebesgue,
    LorentzOne,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetNorm {
    Lebesgue,
    Weak,
}

fn source_norm(f: &GridField, p: Exponent, kind: SourceNorm) -> Result<f64> {
    match (kind, p) {
        (SourceNorm::LorentzOne, Exponent::Finite(v)) if v > 1.0 => lorentz_norm(f, p, LorentzIndex::One),
        _ => Ok(lebesgue_norm(f, p)),
    }
}

fn target_norm(g: &GridField, q: Exponent, kind: TargetNorm) -> Result<f64> {
    match (kind, q) {
        (TargetNorm::Weak, Exponent::Finite(v)) if v > 1.0 => lorentz_norm(g, q, LorentzIndex::Infinity),
        _ => Ok(lebesgue_norm(g, q)),
    }
}

/// Trilinear interpolation of a centred spectrum (FFT ordering) at `xi`.
fn sample_spectrum(grid: &GridField, spec: &[Complex64], xi: &Vector3<f64>) -> Result<Complex64> {
    let d = grid.frequency_spacing();
    let mut base = [0i64; 3];
    let mut frac = [0.0; 3];
    for a in 0..3 {
        let n = grid.dims[a] as i64;
        let t = xi[a] / d[a];
        let lo = t.floor();
        // both neighbours must be genuine (non-aliased) frequencies
        if lo < -(n / 2) as f64 || lo + 1.0 > ((n - 1) / 2) as f64 {
            return Err(Lap3dError::FrequencyOutOfRange { xi: [xi.x, xi.y, xi.z] });
        }
        base[a] = lo as i64;
        frac[a] = t - lo;
    }
    let wrap = |k: i64, n: usize| k.rem_euclid(n as i64) as usize;
    let mut acc = Complex64::new(0.0, 0.0);
    for corner in 0..8 {
        let mut w = 1.0;
        let mut idx = [0usize; 3];
        for a in 0..3 {
            let bit = (corner >> a) & 1;
            w *= if bit == 1 { frac[a] } else { 1.0 - frac[a] };
            idx[a] = wrap(base[a] + bit as i64, grid.dims[a]);
        }
        if w != 0.0 {
            acc += spec[grid.index(idx[0], idx[1], idx[2])] * w;
        }
    }
    Ok(acc)
}

/// `Σ_v c_v e^{i(x − c)·v}` on the points of `grid`, with separable phases.
fn sum_plane_waves(grid: &GridField, nodes: &[Vector3<f64>], coeffs: &[Complex64]) -> GridField {
    let c = grid.center();
    let [n1, n2, n3] = grid.dims;
    let table = |axis: usize, n: usize| -> Vec<Complex64> {
        // table[i * V + v]
        let mut t = Vec::with_capacity(n * nodes.len());
        for i in 0..n {
            let x = grid.origin[axis] + i as f64 * grid.spacing[axis] - c[axis];
            t.extend(nodes.iter().map(|v| Complex64::from_polar(1.0, x * v[axis])));
        }
        t
    };
    let (ta, tb, tc) = (table(0, n1), table(1, n2), table(2, n3));
    let nv = nodes.len();
    let mut out = vec![Complex64::new(0.0, 0.0); grid.len()];
    out.par_chunks_mut(n3).enumerate().for_each(|(row, slot)| {
        let (i, j) = (row / n2, row % n2);
        let d: Vec<Complex64> = (0..nv).map(|v| coeffs[v] * ta[i * nv + v] * tb[j * nv + v]).collect();
        for (k, s) in slot.iter_mut().enumerate() {
            let tck = &tc[k * nv..(k + 1) * nv];
            let mut acc = Complex64::new(0.0, 0.0);
            for (dv, cv) in d.iter().zip(tck) {
                acc += dv * cv;
            }
            *s = acc;
        }
    });
    grid.with_values(out)
}

/// Surface coefficients `w_v β_v f̂(v)` (with `f̂` phase-referenced to the
/// box centre) for the vertices where `β ≠ 0`.
pub fn surface_coefficients(
    mesh: &SurfaceMesh,
    beta: &[f64],
    f: &GridField,
) -> Result<(Vec<Vector3<f64>>, Vec<Complex64>)> {
    if beta.len() != mesh.vertices.len() {
        return Err(Lap3dError::InvalidInput("beta must have one value per vertex".into()));
    }
    let spec = f.centered_spectrum();
    let mut nodes = Vec::new();
    let mut coeffs = Vec::new();
    for ((v, w), b) in mesh.vertices.iter().zip(&mesh.weights).zip(beta) {
        if *b == 0.0 {
            continue;
        }
        nodes.push(*v);
        coeffs.push(sample_spectrum(f, &spec, v)? * (w * b));
    }
    Ok((nodes, coeffs))
}

/// `Ef` on the grid of `f`.
///
/// `f̂` is sampled at the vertices by trilinear interpolation of the FFT
/// spectrum, then the surface sum is evaluated directly at every grid point.
pub fn extend(mesh: &SurfaceMesh, beta: &[f64], f: &GridField) -> Result<GridField> {
    let (nodes, coeffs) = surface_coefficients(mesh, beta, f)?;
    Ok(sum_plane_waves(f, &nodes, &coeffs))
}

/// Extension of a density `g` given directly on the vertices:
/// `Σ_v w_v g_v e^{i(x − c)·v}` on the points of `grid`.
pub fn extend_density(mesh: &SurfaceMesh, g: &[Complex64], grid: &GridField) -> Result<GridField> {
    if g.len() != mesh.vertices.len() {
        return Err(Lap3dError::InvalidInput("density must have one value per vertex".into()));
    }
    let coeffs: Vec<Complex64> = g.iter().zip(&mesh.weights).map(|(g, w)| g * *w).collect();
    Ok(sum_plane_waves(grid, &mesh.vertices, &coeffs))
}

/// Asymptotic constant of `T⁻¹ ∫_{|x|<T} |Eg|² dx / ∫ |g|² dσ` on the unit
/// sphere: `2 (2π)²`.
pub const AGMON_HORMANDER_SPHERE: f64 = 8.0 * std::f64::consts::PI * std::f64::consts::PI;

/// `‖Eg‖_{L²(B_T)} / (T^{1/2} ‖g‖_{L²(dσ)})`, by radial Simpson quadrature
/// over Fibonacci rays.
pub fn agmon_hormander_ratio(mesh: &SurfaceMesh, g: &[Complex64], t: f64, rays: usize) -> Result<f64> {
    if g.len() != mesh.vertices.len() || !(t > 0.0) {
        return Err(Lap3dError::InvalidInput("density length or radius invalid".into()));
    }
    let dirs = fibonacci_sphere(rays.max(8));
    let vmax = mesh.vertices.iter().map(|v| v.norm()).fold(0.0, f64::max).max(1e-12);
    let steps = {
        let n = (t * vmax / 0.2).ceil() as usize;
        (n + (n & 1)).max(16)
    };
    let h = t / steps as f64;
    let shell: Vec<f64> = (0..=steps)
        .into_par_iter()
        .map(|i| {
            let r = i as f64 * h;
            let mut acc = KahanSum::default();
            for d in &dirs {
                let x = d * r;
                let mut e = Complex64::new(0.0, 0.0);
                for ((v, w), gv) in mesh.vertices.iter().zip(&mesh.weights).zip(g) {
                    e += gv * Complex64::from_polar(*w, x.dot(v));
                }
                acc.add(e.norm_sqr());
            }
            4.0 * std::f64::consts::PI * r * r * acc.value() / dirs.len() as f64
        })
        .collect();
    let mut vol = KahanSum::default();
    for (i, s) in shell.iter().enumerate() {
        let w = if i == 0 || i == steps {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        vol.add(w * s);
    }
    let l2_ball = (vol.value() * h / 3.0).sqrt();
    let mut gn = KahanSum::default();
    for (gv, w) in g.iter().zip(&mesh.weights) {
        gn.add(gv.norm_sqr() * w);
    }
    Ok(l2_ball / (t.sqrt() * gn.value().sqrt()))
}

/// Version tag of the operator-norm trial family.
pub const TRIAL_FAMILY: &str = "restriction-v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrialKind {
    Gaussian,
    WavePacket,
    KnappSlab,
    Tube,
}

/// A member of the trial family, with the local frame it was built in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub id: usize,
    pub kind: TrialKind,
    pub center: [f64; 3],
    /// Modulation frequency (a mesh vertex), zero for plain Gaussians.
    pub frequency: [f64; 3],
    /// Local frame rows: two tangent directions then the normal.
    pub frame: [[f64; 3]; 3],
    /// Widths along the frame axes.
    pub widths: [f64; 3],
}

impl Trial {
    /// Sample the trial on `grid`.
    pub fn field(&self, grid: &GridField) -> Result<GridField> {
        let c = Vector3::from(self.center);
        let xi = Vector3::from(self.frequency);
        let axes: Vec<Vector3<f64>> = self.frame.iter().map(|r| Vector3::from(*r)).collect();
        let w = self.widths;
        let kind = self.kind;
        GridField::from_fn(grid.dims, grid.spacing, grid.origin, move |x| {
            let d = x - c;
            let z = [d.dot(&axes[0]), d.dot(&axes[1]), d.dot(&axes[2])];
            let env = match kind {
                TrialKind::Tube => {
                    if z[0].hypot(z[1]) <= w[0] && z[2].abs() <= w[2] {
                        1.0
                    } else {
                        0.0
                    }
                }
                _ => (-0.5 * ((z[0] / w[0]).powi(2) + (z[1] / w[1]).powi(2) + (z[2] / w[2]).powi(2))).exp(),
            };
            Complex64::from_polar(env, x.dot(&xi))
        })
    }
}

fn vertex_frame(mesh: &SurfaceMesh, v: usize, symbol: Option<&Symbol>) -> [[f64; 3]; 3] {
    let n = mesh.normals[v];
    let (t1, t2) = match symbol.and_then(|s| curvature_at(s, &mesh.vertices[v]).ok()) {
        Some(cd) => {
            let e1 = cd.dirs[0];
            (e1, cd.nu.cross(&e1).normalize())
        }
        None => orthonormal_complement(&n),
    };
    [[t1.x, t1.y, t1.z], [t2.x, t2.y, t2.z], [n.x, n.y, n.z]]
}

/// Member `id` of the family on a grid of the given extent. Kinds cycle
/// through Gaussian, wave packet, Knapp slab and tube; parameters come from
/// Halton sequences so that the family is fixed by `id` alone.
pub fn trial(id: usize, mesh: &SurfaceMesh, beta: &[f64], symbol: Option<&Symbol>, extent: f64) -> Trial {
    let kind = [TrialKind::Gaussian, TrialKind::WavePacket, TrialKind::KnappSlab, TrialKind::Tube][id % 4];
    let k = id / 4 + 1;
    let spread = extent / 8.0;
    let center = [
        spread * (2.0 * halton(k, 2) - 1.0),
        spread * (2.0 * halton(k, 3) - 1.0),
        spread * (2.0 * halton(k, 5) - 1.0),
    ];
    let support: Vec<usize> = (0..mesh.vertices.len()).filter(|&v| beta[v] != 0.0).collect();
    let pick = if support.is_empty() { 0 } else { support[((halton(k, 7) * support.len() as f64) as usize).min(support.len() - 1)] };
    let s = halton(k, 11);
    let identity = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    let (frequency, frame, widths) = match kind {
        TrialKind::Gaussian => {
            let w = 0.5 + 3.5 * s;
            ([0.0; 3], identity, [w, w, w])
        }
        TrialKind::WavePacket => {
            let w = 1.0 + 3.0 * s;
            let v = mesh.vertices[pick];
            ([v.x, v.y, v.z], identity, [w, w, w])
        }
        TrialKind::KnappSlab => {
            let v = mesh.vertices[pick];
            let a = 0.3 + 0.7 * s;
            ([v.x, v.y, v.z], vertex_frame(mesh, pick, symbol), [1.0 / a, 1.0 / a, (1.0 / (a * a)).min(extent / 6.0)])
        }
        TrialKind::Tube => {
            let v = mesh.vertices[pick];
            let r = 1.0 + 2.0 * s;
            let l = 4.0 + 8.0 * halton(k, 13);
            ([v.x, v.y, v.z], vertex_frame(mesh, pick, symbol), [r, r, l.min(extent / 3.0)])
        }
    };
    Trial { id, kind, center, frequency, frame, widths }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpnormRow {
    pub pair: String,
    pub inv_p: f64,
    pub inv_q: f64,
    pub classification: Region,
    pub source: SourceNorm,
    pub target: TargetNorm,
    pub best_ratio: f64,
    pub trial_id: usize,
    pub median_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpnormScan {
    pub rows: Vec<OpnormRow>,
    pub trials: usize,
    pub family: String,
    pub grid: [usize; 3],
    pub extent: f64,
}

impl OpnormScan {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("inv_p,inv_q,classification,best_ratio,trial_id,median_ratio\n");
        for r in &self.rows {
            let (p, q) = r.pair.split_once(' ').unwrap_or((&r.pair, ""));
            s.push_str(&format!(
                "{},{},{},{},{},{}\n",
                p, q, r.classification, r.best_ratio, r.trial_id, r.median_ratio
            ));
        }
        s
    }
}

/// Grid on which [`opnorm_scan`] evaluates trials and `Ef`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanGrid {
    pub n: usize,
    pub extent: f64,
}

impl Default for ScanGrid {
    fn default() -> Self {
        Self { n: 32, extent: 32.0 }
    }
}

/// Ratio of target norm of `Ef` to source norm of `f` for every pair.
pub fn trial_ratios(
    mesh: &SurfaceMesh,
    beta: &[f64],
    f: &GridField,
    pairs: &[ExponentPair],
) -> Result<Vec<f64>> {
    let ef = extend(mesh, beta, f)?;
    pairs
        .iter()
        .map(|e| {
            let (src, tgt) = classify_exponents(*e).classification.norms();
            let den = source_norm(f, e.p(), src)?;
            let num = target_norm(&ef, e.q(), tgt)?;
            Ok(if den > 0.0 { num / den } else { 0.0 })
        })
        .collect()
}

/// Largest witnessed ratio per pair over the first `trials` members of the
/// family. Ties go to the lowest trial id.
pub fn opnorm_scan(
    mesh: &SurfaceMesh,
    beta: &[f64],
    symbol: Option<&Symbol>,
    pairs: &[ExponentPair],
    trials: usize,
    grid: ScanGrid,
) -> Result<OpnormScan> {
    if trials < 50 {
        return Err(Lap3dError::InvalidInput("opnorm scan needs at least 50 trials".into()));
    }
    if beta.len() != mesh.vertices.len() {
        return Err(Lap3dError::InvalidInput("beta must have one value per vertex".into()));
    }
    let template = GridField::centered_cube(grid.n, grid.extent)?;
    let per_trial: Vec<Vec<f64>> = (0..trials)
        .map(|id| {
            let t = trial(id, mesh, beta, symbol, grid.extent);
            let f = t.field(&template)?;
            trial_ratios(mesh, beta, &f, pairs)
        })
        .collect::<Result<_>>()?;
    let rows = pairs
        .iter()
        .enumerate()
        .map(|(k, e)| {
            let verdict = classify_exponents(*e);
            let (source, target) = verdict.classification.norms();
            let mut best = (0usize, f64::NEG_INFINITY);
            for (id, r) in per_trial.iter().enumerate() {
                if r[k] > best.1 {
                    best = (id, r[k]);
                }
            }
            let mut all: Vec<f64> = per_trial.iter().map(|r| r[k]).collect();
            all.sort_by(|a, b| a.total_cmp(b));
            let (ip, iq) = e.to_f64();
            OpnormRow {
                pair: e.to_string(),
                inv_p: ip,
                inv_q: iq,
                classification: verdict.classification,
                source,
                target,
                best_ratio: best.1,
                trial_id: best.0,
                median_ratio: all[all.len() / 2],
            }
        })
        .collect();
    Ok(OpnormScan { rows, trials, family: TRIAL_FAMILY.to_string(), grid: template.dims, extent: grid.extent })
}

/// Knapp-slab ratio for one cap size `a`: the trial is a slab of size
/// `1/a × 1/a × 1/a²` aligned with the frame at `vertex`, modulated to
/// the vertex frequency.
pub fn knapp_ratio(
    mesh: &SurfaceMesh,
    beta: &[f64],
    symbol: Option<&Symbol>,
    vertex: usize,
    a: f64,
    pair: ExponentPair,
    grid: ScanGrid,
) -> Result<f64> {
    let template = GridField::centered_cube(grid.n, grid.extent)?;
    let v = mesh.vertices[vertex];
    let t = Trial {
        id: usize::MAX,
        kind: TrialKind::KnappSlab,
        center: [0.0; 3],
        frequency: [v.x, v.y, v.z],
        frame: vertex_frame(mesh, vertex, symbol),
        widths: [1.0 / a, 1.0 / a, 1.0 / (a * a)],
    };
    let f = t.field(&template)?;
    Ok(trial_ratios(mesh, beta, &f, &[pair])?[0])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(a: i64, b: i64, c: i64, d: i64) -> ExponentPair {
        ExponentPair::from_ints(a, b, c, d).unwrap()
    }

    #[test]
    fn named_points() {
        assert_eq!(classify_exponents(pair(3, 4, 3, 20)).classification, Region::Strong);
        assert_eq!(classify_exponents(pair(7, 10, 9, 70)).classification, Region::RestrictedWeak);
        assert_eq!(classify_exponents(pair(61, 70, 3, 10)).classification, Region::RestrictedWeak);
        assert_eq!(classify_exponents(pair(1, 1, 3, 10)).classification, Region::WeakI);
        assert_eq!(classify_exponents(pair(7, 10, 0, 1)).classification, Region::WeakII);
        assert_eq!(classify_exponents(pair(1, 1, 0, 1)).classification, Region::Strong);
    }

    #[test]
    fn pairs_file() {
        let p = parse_pairs("# header\n3/4 3/20\n7/10 9/70 # B\n\n").unwrap();
        assert_eq!(p, vec![pair(3, 4, 3, 20), pair(7, 10, 9, 70)]);
        assert!(parse_pairs("3/4").is_err());
        assert!(parse_pairs("3/2 0").is_err());
    }
}
