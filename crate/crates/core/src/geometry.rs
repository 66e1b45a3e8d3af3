//! Curvature of the level-set foliation `Σ_a = {p = a}` and the checks on
//! the degenerate set `{K = 0}`.
//!
//! Gaussian curvature uses the implicit-surface formula
//! `K = ∇pᵀ adj(Hess p) ∇p / |∇p|⁴`; principal data come from the shape
//! operator `Hess p / |∇p|` restricted to the tangent plane. The gradient of
//! the curvature field is differentiated analytically from third-order jets.

use std::collections::HashMap;

use nalgebra::{Matrix2, Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Lap3dError, Result};
use crate::quadrature::SurfaceMesh;
use crate::sampling::fibonacci_sphere;
use crate::symbols::{MultiIndex, Symbol};

/// Axis-aligned box `[x0,x1]×[y0,y1]×[z0,z1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisBox {
    pub lo: [f64; 3],
    pub hi: [f64; 3],
}

impl AxisBox {
    pub fn new(lo: [f64; 3], hi: [f64; 3]) -> Self {
        Self { lo, hi }
    }

    pub fn cube(half: f64) -> Self {
        Self { lo: [-half; 3], hi: [half; 3] }
    }

    pub fn contains(&self, x: &Vector3<f64>) -> bool {
        (0..3).all(|i| x[i] >= self.lo[i] && x[i] <= self.hi[i])
    }

    pub fn extent(&self, axis: usize) -> f64 {
        self.hi[axis] - self.lo[axis]
    }

    pub fn min_extent(&self) -> f64 {
        (0..3).map(|i| self.extent(i)).fold(f64::INFINITY, f64::min)
    }

    pub fn is_empty(&self) -> bool {
        (0..3).any(|i| !(self.hi[i] > self.lo[i]))
    }
}

/// Closed interval of level values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn contains(&self, a: f64) -> bool {
        a >= self.lo && a <= self.hi
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvatureData {
    pub xi: Vector3<f64>,
    /// Level value p(ξ).
    pub a: f64,
    pub grad_p: Vector3<f64>,
    pub nu: Vector3<f64>,
    /// Gaussian curvature (implicit formula).
    pub k: f64,
    /// Principal curvatures, κ₁ ≤ κ₂.
    pub kappa: [f64; 2],
    /// Unit principal directions matching `kappa`.
    pub dirs: [Vector3<f64>; 2],
    pub grad_k: Vector3<f64>,
    pub umbilic: bool,
}

impl CurvatureData {
    /// Index (0 or 1) of the principal curvature with smaller modulus.
    pub fn small_index(&self) -> usize {
        if self.kappa[0].abs() <= self.kappa[1].abs() {
            0
        } else {
            1
        }
    }

    /// Direction `Z` of the small principal curvature.
    pub fn small_direction(&self) -> Vector3<f64> {
        self.dirs[self.small_index()]
    }

    /// `∇p × ∇K`, tangent to `{p = a} ∩ {K = 0}`.
    pub fn transversality(&self) -> Vector3<f64> {
        self.grad_p.cross(&self.grad_k)
    }
}

/// Adjugate of a symmetric 3×3 matrix.
fn adjugate(h: &Matrix3<f64>) -> Matrix3<f64> {
    let mut adj = Matrix3::zeros();
    for i in 0..3 {
        let (i1, i2) = ((i + 1) % 3, (i + 2) % 3);
        for j in 0..3 {
            let (j1, j2) = ((j + 1) % 3, (j + 2) % 3);
            adj[(j, i)] = h[(i1, j1)] * h[(i2, j2)] - h[(i1, j2)] * h[(i2, j1)];
        }
    }
    adj
}

/// Implicit-surface Gaussian curvature from gradient and Hessian.
pub fn gaussian_curvature_implicit(g: &Vector3<f64>, h: &Matrix3<f64>) -> f64 {
    let n2 = g.norm_squared();
    g.dot(&(adjugate(h) * g)) / (n2 * n2)
}

/// Unit vector orthogonal to `n`, built from the least aligned axis.
pub fn orthonormal_complement(n: &Vector3<f64>) -> (Vector3<f64>, Vector3<f64>) {
    let axis = if n.x.abs() <= n.y.abs() && n.x.abs() <= n.z.abs() {
        Vector3::x()
    } else if n.y.abs() <= n.z.abs() {
        Vector3::y()
    } else {
        Vector3::z()
    };
    let e1 = (axis - n * n.dot(&axis)).normalize();
    let e2 = n.cross(&e1);
    (e1, e2)
}

/// Shape-operator matrix in the frame `(e1, e2)`.
fn shape_matrix(g: &Vector3<f64>, h: &Matrix3<f64>, e1: &Vector3<f64>, e2: &Vector3<f64>) -> Matrix2<f64> {
    let gn = g.norm();
    let m11 = e1.dot(&(h * e1)) / gn;
    let m12 = e1.dot(&(h * e2)) / gn;
    let m22 = e2.dot(&(h * e2)) / gn;
    Matrix2::new(m11, m12, m12, m22)
}

/// Gaussian curvature as the determinant of the tangent-frame shape operator.
pub fn gaussian_curvature_shape(g: &Vector3<f64>, h: &Matrix3<f64>) -> f64 {
    let nu = g.normalize();
    let (e1, e2) = orthonormal_complement(&nu);
    shape_matrix(g, h, &e1, &e2).determinant()
}

/// Full curvature data of the level set through `xi`.
pub fn curvature_at(s: &Symbol, xi: &Vector3<f64>) -> Result<CurvatureData> {
    let jet = s.eval_jet(xi, 3);
    let g = jet.gradient;
    let gn = g.norm();
    if !(gn >= 1e-10) {
        return Err(Lap3dError::DegenerateGradient { xi: [xi.x, xi.y, xi.z], norm: gn });
    }
    let h = jet.hessian;
    let nu = g / gn;
    let adj = adjugate(&h);
    let n2 = gn * gn;
    let denom = n2 * n2;
    let numer = g.dot(&(adj * g));
    let k = numer / denom;

    // ∂_k of numerator and denominator
    let t = jet.third.expect("order 3 jet");
    let adj_g = adj * g;
    let hg = h * g;
    let mut grad_k = Vector3::zeros();
    for kk in 0..3 {
        let hk = h.column(kk);
        let mut d_adj = Matrix3::zeros();
        // ∂ adj_{ji} = ∂(h[i1,j1] h[i2,j2] − h[i1,j2] h[i2,j1])
        for i in 0..3 {
            let (i1, i2) = ((i + 1) % 3, (i + 2) % 3);
            for j in 0..3 {
                let (j1, j2) = ((j + 1) % 3, (j + 2) % 3);
                d_adj[(j, i)] = t[i1][j1][kk] * h[(i2, j2)] + h[(i1, j1)] * t[i2][j2][kk]
                    - t[i1][j2][kk] * h[(i2, j1)]
                    - h[(i1, j2)] * t[i2][j1][kk];
            }
        }
        let d_numer = 2.0 * adj_g.dot(&hk) + g.dot(&(d_adj * g));
        let d_denom = 4.0 * n2 * hg[kk];
        grad_k[kk] = (d_numer - k * d_denom) / denom;
    }

    let (e1, e2) = orthonormal_complement(&nu);
    let m = shape_matrix(&g, &h, &e1, &e2);
    let (kappa, local, umbilic) = symmetric_eigen2(&m);
    let dirs = [
        (e1 * local[0].x + e2 * local[0].y).normalize(),
        (e1 * local[1].x + e2 * local[1].y).normalize(),
    ];
    Ok(CurvatureData { xi: *xi, a: jet.value, grad_p: g, nu, k, kappa, dirs, grad_k, umbilic })
}

/// Eigenpairs of a symmetric 2×2 matrix, ascending. Near-umbilic input
/// returns the frame axes and `true`.
pub(crate) fn symmetric_eigen2(m: &Matrix2<f64>) -> ([f64; 2], [nalgebra::Vector2<f64>; 2], bool) {
    let (a, b, d) = (m[(0, 0)], m[(0, 1)], m[(1, 1)]);
    let mean = 0.5 * (a + d);
    let half_diff = 0.5 * (a - d);
    let r = half_diff.hypot(b);
    let (l1, l2) = (mean - r, mean + r);
    if 2.0 * r < 1e-10 {
        return (
            [l1, l2],
            [nalgebra::Vector2::new(1.0, 0.0), nalgebra::Vector2::new(0.0, 1.0)],
            true,
        );
    }
    // eigenvector for l2: angle θ with tan 2θ = 2b/(a−d)
    let theta = 0.5 * b.atan2(half_diff);
    let v2 = nalgebra::Vector2::new(theta.cos(), theta.sin());
    let v1 = nalgebra::Vector2::new(-theta.sin(), theta.cos());
    ([l1, l2], [v1, v2], false)
}

/// Sampled `max_{|β| ≤ order} |∂^β p|` over `points` (the constant C₁ for
/// order 5).
pub fn sampled_ck_norm(s: &Symbol, points: &[Vector3<f64>], order: u32) -> f64 {
    let betas: Vec<MultiIndex> = (0..=order).flat_map(MultiIndex::of_order).collect();
    points
        .iter()
        .map(|x| betas.iter().map(|b| s.derivative(*b, x).abs()).fold(0.0, f64::max))
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegenerateCurve {
    pub a: f64,
    pub nodes: Vec<Vector3<f64>>,
    /// Unit tangents `w = (∇p × ∇K)/|∇p × ∇K|`.
    pub w: Vec<Vector3<f64>>,
    /// Unit small-curvature directions, sign-continued along the curve.
    pub z: Vec<Vector3<f64>>,
    /// `|∇p × ∇K|` at each node.
    pub transversality: Vec<f64>,
    pub umbilic: Vec<bool>,
    pub closed: bool,
}

impl DegenerateCurve {
    pub fn length(&self) -> f64 {
        let mut l: f64 = self.nodes.windows(2).map(|w| (w[1] - w[0]).norm()).sum();
        if self.closed && self.nodes.len() > 1 {
            l += (self.nodes[0] - self.nodes[self.nodes.len() - 1]).norm();
        }
        l
    }

    /// `|Z × w|` at each node.
    pub fn tangency(&self) -> Vec<f64> {
        self.z.iter().zip(&self.w).map(|(z, w)| z.cross(w).norm()).collect()
    }

    /// CSV with columns `a,x,y,z,wx,wy,wz,Zx,Zy,Zz,tangential_flag`.
    pub fn to_csv(&self, threshold: f64) -> String {
        let mut out = String::from("a,x,y,z,wx,wy,wz,Zx,Zy,Zz,tangential_flag\n");
        for (i, n) in self.nodes.iter().enumerate() {
            let (w, z) = (self.w[i], self.z[i]);
            let flag = !self.umbilic[i] && z.cross(&w).norm() < threshold;
            out.push_str(&format!(
                "{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{}\n",
                self.a, n.x, n.y, n.z, w.x, w.y, w.z, z.x, z.y, z.z, flag as u8
            ));
        }
        out
    }
}

/// Newton projection onto `{p = a, K = 0}` with minimum-norm steps.
fn correct_onto_curve(s: &Symbol, a: f64, start: Vector3<f64>) -> Result<(Vector3<f64>, CurvatureData)> {
    let mut x = start;
    for _ in 0..40 {
        let c = curvature_at(s, &x)?;
        let f0 = c.a - a;
        let f1 = c.k;
        let cross = c.transversality();
        if cross.norm() < 1e-8 {
            return Err(Lap3dError::RankDeficient { xi: [x.x, x.y, x.z], norm: cross.norm() });
        }
        let scale = c.grad_p.norm().max(1.0);
        if f0.abs() <= 1e-12 * scale && f1.abs() <= 1e-11 * c.grad_k.norm().max(1.0) {
            return Ok((x, c));
        }
        // Δ = −Jᵀ (J Jᵀ)⁻¹ F
        let (gp, gk) = (c.grad_p, c.grad_k);
        let jjt = Matrix2::new(gp.dot(&gp), gp.dot(&gk), gp.dot(&gk), gk.dot(&gk));
        let inv = jjt.try_inverse().ok_or(Lap3dError::RankDeficient {
            xi: [x.x, x.y, x.z],
            norm: cross.norm(),
        })?;
        let lam = inv * nalgebra::Vector2::new(f0, f1);
        let mut step = -(gp * lam.x + gk * lam.y);
        let max_step = 0.25 * x.norm().max(1.0);
        if step.norm() > max_step {
            step *= max_step / step.norm();
        }
        x += step;
        if step.norm() < 1e-15 * x.norm().max(1.0) {
            let c = curvature_at(s, &x)?;
            if (c.a - a).abs() <= 1e-9 && c.k.abs() <= 1e-8 {
                return Ok((x, c));
            }
        }
    }
    let c = curvature_at(s, &x)?;
    if (c.a - a).abs() <= 1e-9 && c.k.abs() <= 1e-8 {
        return Ok((x, c));
    }
    Err(Lap3dError::CorrectionDiverged { xi: [start.x, start.y, start.z] })
}

/// Predictor–corrector trace of `Γ_a = {p = a} ∩ {K = 0}` starting from
/// `seed`, with step `h`. Open curves are traced in both directions until
/// they leave `bounds`.
pub fn trace_degenerate_curve(
    s: &Symbol,
    a: f64,
    seed: Vector3<f64>,
    h: f64,
    bounds: Option<&AxisBox>,
) -> Result<DegenerateCurve> {
    if !(h > 0.0) {
        return Err(Lap3dError::InvalidInput("trace step must be positive".into()));
    }
    let (x0, c0) = correct_onto_curve(s, a, seed)?;
    let max_steps = 200_000usize;
    let inside = |x: &Vector3<f64>| bounds.is_none_or(|b| b.contains(x));

    let mut forward = vec![(x0, c0.clone())];
    let mut closed = false;
    for dir in [1.0, -1.0] {
        let mut branch: Vec<(Vector3<f64>, CurvatureData)> = Vec::new();
        let (mut x, mut c) = (x0, c0.clone());
        let mut w_prev = c.transversality().normalize() * dir;
        for step in 0..max_steps {
            let predictor = x + w_prev * h;
            let (xn, cn) = correct_onto_curve(s, a, predictor)?;
            if !inside(&xn) {
                break;
            }
            if dir > 0.0 && step >= 9 && (xn - x0).norm() < 0.5 * h {
                closed = true;
                break;
            }
            let mut wn = cn.transversality().normalize();
            if wn.dot(&w_prev) < 0.0 {
                wn = -wn;
            }
            branch.push((xn, cn.clone()));
            x = xn;
            c = cn;
            w_prev = wn;
        }
        let _ = &c;
        if dir > 0.0 {
            forward.extend(branch);
            if closed {
                break;
            }
        } else {
            branch.reverse();
            branch.append(&mut forward);
            forward = branch;
        }
    }

    let mut curve = DegenerateCurve {
        a,
        nodes: Vec::with_capacity(forward.len()),
        w: Vec::with_capacity(forward.len()),
        z: Vec::with_capacity(forward.len()),
        transversality: Vec::with_capacity(forward.len()),
        umbilic: Vec::with_capacity(forward.len()),
        closed,
    };
    let mut w_prev: Option<Vector3<f64>> = None;
    let mut z_prev: Option<Vector3<f64>> = None;
    for (x, c) in forward {
        let t = c.transversality();
        let mut w = t.normalize();
        if let Some(wp) = w_prev {
            if w.dot(&wp) < 0.0 {
                w = -w;
            }
        }
        let mut z = c.small_direction();
        if let Some(zp) = z_prev {
            if z.dot(&zp) < 0.0 {
                z = -z;
            }
        }
        curve.nodes.push(x);
        curve.w.push(w);
        curve.z.push(z);
        curve.transversality.push(t.norm());
        curve.umbilic.push(c.umbilic);
        w_prev = Some(w);
        z_prev = Some(z);
    }
    Ok(curve)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

/// Tunable thresholds for [`check_assumptions`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeometryConfig {
    /// Node is tangential when `|Z × w|` falls below this.
    pub tangential_threshold: f64,
    /// Half-width of the neighbourhood of `{K = 0}` used for localization.
    pub neighbourhood_half_width: f64,
    /// Levels of the interval on which curves are traced and meshes built.
    pub levels: usize,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        Self { tangential_threshold: 0.05, neighbourhood_half_width: 0.1, levels: 3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionVerdicts {
    pub regular_foliation: Verdict,
    pub transversal_degeneracy: Verdict,
    pub finite_gauss_preimages: Verdict,
    pub no_tangential_points: Verdict,
}

impl AssumptionVerdicts {
    pub fn all_pass(&self) -> bool {
        [
            self.regular_foliation,
            self.transversal_degeneracy,
            self.finite_gauss_preimages,
            self.no_tangential_points,
        ]
        .iter()
        .all(|v| *v == Verdict::Pass)
    }

    pub fn any_fail(&self) -> bool {
        [
            self.regular_foliation,
            self.transversal_degeneracy,
            self.finite_gauss_preimages,
            self.no_tangential_points,
        ].contains(&Verdict::Fail)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionReport {
    /// Sampled diameter of D.
    pub c0: f64,
    /// Sampled C⁵ norm.
    pub c1: f64,
    pub c1_samples: usize,
    /// Minimum |∇p| over the sample.
    pub c2: f64,
    /// Minimum |∇p × ∇K| on traced degenerate curves (`None`: empty set).
    pub c3: Option<f64>,
    /// Largest Gauss-map preimage cluster count observed.
    pub c4: usize,
    pub domain_samples: usize,
    pub curves: Vec<DegenerateCurve>,
    pub tangential_points: Vec<Vector3<f64>>,
    pub trace_errors: Vec<String>,
    pub verdicts: AssumptionVerdicts,
    pub config: GeometryConfig,
}

impl AssumptionReport {
    pub fn curves_csv(&self) -> String {
        let mut out = String::from("a,x,y,z,wx,wy,wz,Zx,Zy,Zz,tangential_flag\n");
        for c in &self.curves {
            let csv = c.to_csv(self.config.tangential_threshold);
            out.push_str(csv.split_once('\n').map(|x| x.1).unwrap_or(""));
        }
        out
    }
}

fn grid_coords(b: &AxisBox, n: usize) -> [Vec<f64>; 3] {
    let axis = |i: usize| (0..n).map(|k| b.lo[i] + b.extent(i) * k as f64 / (n - 1) as f64).collect();
    [axis(0), axis(1), axis(2)]
}

/// Sampled diameter of a point set: extreme points along many directions,
/// then exact pairwise distances among those candidates.
fn sampled_diameter(points: &[Vector3<f64>]) -> f64 {
    let mut cand = Vec::new();
    for d in fibonacci_sphere(128) {
        let mut best = (f64::NEG_INFINITY, 0usize);
        let mut worst = (f64::INFINITY, 0usize);
        for (i, p) in points.iter().enumerate() {
            let t = p.dot(&d);
            if t > best.0 {
                best = (t, i);
            }
            if t < worst.0 {
                worst = (t, i);
            }
        }
        cand.push(best.1);
        cand.push(worst.1);
    }
    cand.sort_unstable();
    cand.dedup();
    let mut diam: f64 = 0.0;
    for (k, &i) in cand.iter().enumerate() {
        for &j in &cand[k + 1..] {
            diam = diam.max((points[i] - points[j]).norm());
        }
    }
    diam
}

/// Count well-separated clusters among `points` (single linkage at `sep`).
fn count_clusters(points: &[Vector3<f64>], sep: f64) -> usize {
    let n = points.len();
    if n <= 1 {
        return n;
    }
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    let key = |x: &Vector3<f64>| {
        (
            (x.x / sep).floor() as i64,
            (x.y / sep).floor() as i64,
            (x.z / sep).floor() as i64,
        )
    };
    let mut cells: HashMap<(i64, i64, i64), Vec<usize>> = HashMap::new();
    for (i, p) in points.iter().enumerate() {
        cells.entry(key(p)).or_default().push(i);
    }
    for (i, p) in points.iter().enumerate() {
        let (cx, cy, cz) = key(p);
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    if let Some(list) = cells.get(&(cx + dx, cy + dy, cz + dz)) {
                        for &j in list {
                            if j > i && (points[j] - p).norm() <= sep {
                                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                                if ri != rj {
                                    parent[ri.max(rj)] = ri.min(rj);
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    (0..n).filter(|&i| find(&mut parent, i) == i).count()
}

/// Maximum number of separated preimage clusters of the Gauss map over
/// spherical cells of roughly 2° × 2°.
pub fn gauss_preimage_count(mesh: &SurfaceMesh, separation: f64) -> usize {
    let cell = 2f64.to_radians();
    let nz = (2.0 / cell).ceil() as i64;
    let nphi = (2.0 * std::f64::consts::PI / cell).ceil() as i64;
    let mut bins: HashMap<(i64, i64), Vec<Vector3<f64>>> = HashMap::new();
    for (v, n) in mesh.vertices.iter().zip(&mesh.normals) {
        let iz = (((n.z + 1.0) / cell).floor() as i64).min(nz - 1);
        let phi = n.y.atan2(n.x) + std::f64::consts::PI;
        let ip = ((phi / cell).floor() as i64).min(nphi - 1);
        bins.entry((iz, ip)).or_default().push(*v);
    }
    let mut keys: Vec<_> = bins.keys().copied().collect();
    keys.sort_unstable();
    keys.iter().map(|k| count_clusters(&bins[k], separation)).max().unwrap_or(0)
}

/// Points where K changes sign along edges of a level-set mesh.
fn mesh_k_seeds(s: &Symbol, mesh: &SurfaceMesh) -> Vec<Vector3<f64>> {
    let kv: Vec<f64> = mesh
        .vertices
        .iter()
        .map(|x| {
            let jet = s.eval_jet(x, 2);
            gaussian_curvature_implicit(&jet.gradient, &jet.hessian)
        })
        .collect();
    let mut seen = std::collections::HashSet::new();
    let mut seeds = Vec::new();
    for t in &mesh.triangles {
        for (i, j) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
            let key = (i.min(j), i.max(j));
            if !seen.insert(key) {
                continue;
            }
            let (ka, kb) = (kv[i], kv[j]);
            if ka.is_finite() && kb.is_finite() && (ka < 0.0) != (kb < 0.0) {
                let t = ka / (ka - kb);
                seeds.push(mesh.vertices[i] + (mesh.vertices[j] - mesh.vertices[i]) * t);
            }
        }
    }
    seeds
}

/// Sample `D = box ∩ p⁻¹(I)` and evaluate Assumptions 1–4 with the
/// constants C₀–C₄. Every constant is a sampled extremum; verdicts are
/// necessary-condition checks.
pub fn check_assumptions(
    s: &Symbol,
    bounds: &AxisBox,
    interval: Interval,
    resolution: usize,
    config: &GeometryConfig,
) -> Result<AssumptionReport> {
    if bounds.is_empty() {
        return Err(Lap3dError::InvalidInput("box is empty".into()));
    }
    if resolution < 16 {
        return Err(Lap3dError::InvalidInput("resolution must be at least 16 per axis".into()));
    }
    let n = resolution;
    let coords = grid_coords(bounds, n);
    let idx = |i: usize, j: usize, k: usize| (i * n + j) * n + k;
    let mut in_domain = vec![false; n * n * n];
    let mut points = Vec::new();
    let mut c2 = f64::INFINITY;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let x = Vector3::new(coords[0][i], coords[1][j], coords[2][k]);
                let jet = s.eval_jet(&x, 2);
                if !interval.contains(jet.value) {
                    continue;
                }
                in_domain[idx(i, j, k)] = true;
                points.push(x);
                c2 = c2.min(jet.gradient.norm());
            }
        }
    }
    if points.is_empty() {
        return Err(Lap3dError::EmptyDomain);
    }
    let c0 = sampled_diameter(&points);
    let stride = (points.len() / 4096).max(1);
    let c1_points: Vec<_> = points.iter().step_by(stride).copied().collect();
    let c1 = sampled_ck_norm(s, &c1_points, 5);

    let grid_h = (0..3).map(|i| bounds.extent(i)).fold(0.0, f64::max) / (n - 1) as f64;
    let levels: Vec<f64> = if config.levels <= 1 {
        vec![interval.mid()]
    } else {
        (0..config.levels)
            .map(|l| interval.lo + (interval.hi - interval.lo) * l as f64 / (config.levels - 1) as f64)
            .collect()
    };

    // one mesh per level: seeds come from K sign changes along mesh edges,
    // and the same meshes feed the Gauss-map preimage count
    let mesh_h = bounds.min_extent() / (n as f64).max(16.0);
    let mut meshes = Vec::new();
    let mut mesh_errors = Vec::new();
    for &a in &levels {
        match SurfaceMesh::from_level_set(s, a, bounds, mesh_h, |_| 1.0) {
            Ok(mesh) => meshes.push((a, Some(mesh))),
            Err(Lap3dError::EmptySurface) => meshes.push((a, None)),
            Err(e) => {
                mesh_errors.push(format!("mesh at level {a}: {e}"));
                meshes.push((a, None));
            }
        }
    }

    let mut curves = Vec::new();
    let mut trace_errors = Vec::new();
    let mut rank_deficient = false;
    let mut diverged = false;
    let step = 0.5 * grid_h;
    for (a, mesh) in &meshes {
        let a = *a;
        let Some(mesh) = mesh else { continue };
        let seeds = mesh_k_seeds(s, mesh);
        let cell = 3.0 * grid_h;
        let hkey = |x: &Vector3<f64>| {
            ((x.x / cell).floor() as i64, (x.y / cell).floor() as i64, (x.z / cell).floor() as i64)
        };
        let mut covered: HashMap<(i64, i64, i64), ()> = HashMap::new();
        let mut failed_near: Vec<Vector3<f64>> = Vec::new();
        let is_covered = |covered: &HashMap<(i64, i64, i64), ()>, x: &Vector3<f64>| {
            let key = hkey(x);
            (-1..=1).any(|dx| {
                (-1..=1).any(|dy| (-1..=1).any(|dz| covered.contains_key(&(key.0 + dx, key.1 + dy, key.2 + dz))))
            })
        };
        for seed in &seeds {
            if is_covered(&covered, seed) || failed_near.iter().any(|f| (f - seed).norm() < cell) {
                continue;
            }
            // seeds from neighbouring levels may land on an already traced curve
            let landed = match correct_onto_curve(s, a, *seed) {
                Ok((x, _)) => x,
                Err(_) => *seed,
            };
            if is_covered(&covered, &landed) {
                continue;
            }
            match trace_degenerate_curve(s, a, *seed, step, Some(bounds)) {
                Ok(curve) => {
                    for node in &curve.nodes {
                        covered.insert(hkey(node), ());
                    }
                    if curve.nodes.len() >= 2 {
                        curves.push(curve);
                    }
                }
                Err(e) => {
                    match e {
                        Lap3dError::RankDeficient { .. } => rank_deficient = true,
                        _ => diverged = true,
                    }
                    trace_errors.push(format!("level {a}: {e}"));
                    failed_near.push(*seed);
                }
            }
        }
    }

    let c3 = curves
        .iter()
        .flat_map(|c| c.transversality.iter().copied())
        .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |m| m.min(v))));
    let mut tangential_points = Vec::new();
    for c in &curves {
        for (i, t) in c.tangency().iter().enumerate() {
            if !c.umbilic[i] && *t < config.tangential_threshold {
                tangential_points.push(c.nodes[i]);
            }
        }
    }

    trace_errors.extend(mesh_errors);
    let c4 = meshes
        .iter()
        .filter_map(|(_, m)| m.as_ref())
        .map(|m| gauss_preimage_count(m, 10.0 * m.h))
        .max()
        .unwrap_or(0);

    let regular_foliation = if c2 > 1e-6 { Verdict::Pass } else { Verdict::Fail };
    let transversal_degeneracy = if rank_deficient {
        Verdict::Fail
    } else if diverged {
        Verdict::Inconclusive
    } else {
        match c3 {
            Some(v) if v <= 1e-6 => Verdict::Fail,
            _ => Verdict::Pass,
        }
    };
    let finite_gauss_preimages = if c4 < 64 { Verdict::Pass } else { Verdict::Fail };
    let no_tangential_points = if !tangential_points.is_empty() {
        Verdict::Fail
    } else if diverged {
        Verdict::Inconclusive
    } else {
        Verdict::Pass
    };

    Ok(AssumptionReport {
        c0,
        c1,
        c1_samples: c1_points.len(),
        c2,
        c3,
        c4,
        domain_samples: points.len(),
        curves,
        tangential_points,
        trace_errors,
        verdicts: AssumptionVerdicts {
            regular_foliation,
            transversal_degeneracy,
            finite_gauss_preimages,
            no_tangential_points,
        },
        config: *config,
    })
}
