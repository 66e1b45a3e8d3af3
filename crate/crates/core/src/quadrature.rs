//! Triangulated level sets, surface quadrature, and Fourier-decay scans of
//! surface-carried measures.

use std::collections::HashMap;

use nalgebra::{Rotation3, Vector3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Lap3dError, Result};
use crate::geometry::AxisBox;
use crate::sampling::{fibonacci_sphere, fit_residual, linear_fit, KahanSum};
use crate::symbols::Symbol;

/// Quadrature-ready triangulation of `Σ_a ∩ box`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceMesh {
    pub level: f64,
    /// Grid spacing used for extraction.
    pub h: f64,
    pub vertices: Vec<Vector3<f64>>,
    pub triangles: Vec<[usize; 3]>,
    /// Lumped (one third of each incident triangle) vertex areas.
    pub weights: Vec<f64>,
    pub normals: Vec<Vector3<f64>>,
    pub density: Vec<f64>,
}

// Kuhn decomposition of the unit cube: corner index = dx + 2dy + 4dz.
const TETS: [[usize; 4]; 6] = [
    [0, 1, 3, 7],
    [0, 1, 5, 7],
    [0, 2, 3, 7],
    [0, 2, 6, 7],
    [0, 4, 5, 7],
    [0, 4, 6, 7],
];

pub(crate) fn project_to_level(s: &Symbol, a: f64, mut x: Vector3<f64>) -> Result<Vector3<f64>> {
    for _ in 0..30 {
        let jet = s.eval_jet(&x, 1);
        let r = jet.value - a;
        if r.abs() <= 1e-13 * jet.gradient.norm().max(1.0) {
            return Ok(x);
        }
        let g2 = jet.gradient.norm_squared();
        if g2 < 1e-12 {
            return Err(Lap3dError::ProjectionFailed { xi: [x.x, x.y, x.z] });
        }
        x -= jet.gradient * (r / g2);
    }
    if (s.value(&x) - a).abs() <= 1e-9 {
        Ok(x)
    } else {
        Err(Lap3dError::ProjectionFailed { xi: [x.x, x.y, x.z] })
    }
}

impl SurfaceMesh {
    /// Marching-tetrahedra extraction of `{p = a}` on a grid of spacing `h`
    /// over `bounds`, followed by Newton projection of every vertex.
    pub fn from_level_set<F>(s: &Symbol, a: f64, bounds: &AxisBox, h: f64, density: F) -> Result<Self>
    where
        F: Fn(&Vector3<f64>) -> f64,
    {
        if !(h > 0.0) || h > bounds.min_extent() / 16.0 + 1e-12 {
            return Err(Lap3dError::InvalidInput(format!(
                "mesh spacing {h} must be positive and at most box extent / 16"
            )));
        }
        let n: Vec<usize> = (0..3).map(|i| (bounds.extent(i) / h).ceil() as usize + 1).collect();
        let spacing: Vec<f64> = (0..3).map(|i| bounds.extent(i) / (n[i] - 1) as f64).collect();
        let node = |i: usize, j: usize, k: usize| {
            Vector3::new(
                bounds.lo[0] + i as f64 * spacing[0],
                bounds.lo[1] + j as f64 * spacing[1],
                bounds.lo[2] + k as f64 * spacing[2],
            )
        };
        let id = |i: usize, j: usize, k: usize| (i * n[1] + j) * n[2] + k;
        let mut f = vec![0.0; n[0] * n[1] * n[2]];
        for i in 0..n[0] {
            for j in 0..n[1] {
                for k in 0..n[2] {
                    f[id(i, j, k)] = s.value(&node(i, j, k)) - a;
                }
            }
        }

        let mut edge_vertex: HashMap<(usize, usize), usize> = HashMap::new();
        let mut raw: Vec<Vector3<f64>> = Vec::new();
        let mut triangles = Vec::new();
        for i in 0..n[0] - 1 {
            for j in 0..n[1] - 1 {
                for k in 0..n[2] - 1 {
                    let mut ids = [0usize; 8];
                    let mut vals = [0.0; 8];
                    for c in 0..8 {
                        let (di, dj, dk) = (c & 1, (c >> 1) & 1, (c >> 2) & 1);
                        ids[c] = id(i + di, j + dj, k + dk);
                        vals[c] = f[ids[c]];
                    }
                    let pos = vals.iter().filter(|v| **v >= 0.0).count();
                    if pos == 0 || pos == 8 {
                        continue;
                    }
                    let corner = |c: usize| node(i + (c & 1), j + ((c >> 1) & 1), k + ((c >> 2) & 1));
                    let mut edge = |c0: usize, c1: usize| -> usize {
                        let key = (ids[c0].min(ids[c1]), ids[c0].max(ids[c1]));
                        *edge_vertex.entry(key).or_insert_with(|| {
                            let (f0, f1) = (vals[c0], vals[c1]);
                            let t = f0 / (f0 - f1);
                            raw.push(corner(c0) + (corner(c1) - corner(c0)) * t);
                            raw.len() - 1
                        })
                    };
                    for tet in TETS {
                        let (p, m): (Vec<usize>, Vec<usize>) = tet.iter().partition(|&&c| vals[c] >= 0.0);
                        match (p.len(), m.len()) {
                            (1, 3) => {
                                triangles.push([edge(p[0], m[0]), edge(p[0], m[1]), edge(p[0], m[2])]);
                            }
                            (3, 1) => {
                                triangles.push([edge(m[0], p[0]), edge(m[0], p[1]), edge(m[0], p[2])]);
                            }
                            (2, 2) => {
                                let q = [edge(p[0], m[0]), edge(p[0], m[1]), edge(p[1], m[1]), edge(p[1], m[0])];
                                triangles.push([q[0], q[1], q[2]]);
                                triangles.push([q[0], q[2], q[3]]);
                            }
                            _ => {}
                        }
                    }
                }
            }
        }
        if triangles.is_empty() {
            return Err(Lap3dError::EmptySurface);
        }

        let vertices: Vec<Vector3<f64>> = raw
            .into_iter()
            .map(|x| project_to_level(s, a, x))
            .collect::<Result<_>>()?;
        let normals: Vec<Vector3<f64>> = vertices
            .iter()
            .map(|x| {
                let g = s.eval_jet(x, 1).gradient;
                let gn = g.norm();
                if gn > 0.0 {
                    g / gn
                } else {
                    Vector3::zeros()
                }
            })
            .collect();
        let mut mesh = SurfaceMesh {
            level: a,
            h,
            density: vertices.iter().map(&density).collect(),
            weights: vec![0.0; vertices.len()],
            vertices,
            triangles,
            normals,
        };
        mesh.orient_and_weigh();
        Ok(mesh)
    }

    fn orient_and_weigh(&mut self) {
        self.weights.iter_mut().for_each(|w| *w = 0.0);
        for t in self.triangles.iter_mut() {
            let (a, b, c) = (self.vertices[t[0]], self.vertices[t[1]], self.vertices[t[2]]);
            let cr = (b - a).cross(&(c - a));
            let nsum = self.normals[t[0]] + self.normals[t[1]] + self.normals[t[2]];
            if cr.dot(&nsum) < 0.0 {
                t.swap(1, 2);
            }
            let area = 0.5 * cr.norm();
            for &v in t.iter() {
                self.weights[v] += area / 3.0;
            }
        }
    }

    /// Sum of flat triangle areas.
    pub fn area(&self) -> f64 {
        let mut acc = KahanSum::default();
        for t in &self.triangles {
            let (a, b, c) = (self.vertices[t[0]], self.vertices[t[1]], self.vertices[t[2]]);
            acc.add(0.5 * (b - a).cross(&(c - a)).norm());
        }
        acc.value()
    }

    /// `∫ f dσ` with the lumped weights.
    pub fn integrate_density(&self) -> f64 {
        let mut acc = KahanSum::default();
        for (w, d) in self.weights.iter().zip(&self.density) {
            acc.add(w * d);
        }
        acc.value()
    }

    /// Replace the density with `f` sampled at the vertices.
    pub fn with_density<F: Fn(&Vector3<f64>) -> f64>(mut self, f: F) -> Self {
        self.density = self.vertices.iter().map(f).collect();
        self
    }

    /// Rigidly rotated copy (weights and densities carried along).
    pub fn rotated(&self, rot: &Rotation3<f64>) -> Self {
        let mut m = self.clone();
        m.vertices.iter_mut().for_each(|v| *v = rot * *v);
        m.normals.iter_mut().for_each(|v| *v = rot * *v);
        m
    }

    /// Largest `R` allowed by the anti-aliasing cap `R·h ≤ π/2`.
    pub fn resolution_cap(&self) -> f64 {
        std::f64::consts::FRAC_PI_2 / self.h
    }
}

/// `μ̂(x) = Σ_v weight(v)·density(v)·exp(i x·v)`.
pub fn surface_fourier(mesh: &SurfaceMesh, x: &Vector3<f64>) -> Complex64 {
    let mut re = KahanSum::default();
    let mut im = KahanSum::default();
    for ((v, w), d) in mesh.vertices.iter().zip(&mesh.weights).zip(&mesh.density) {
        let c = w * d;
        let (sn, cs) = x.dot(v).sin_cos();
        re.add(c * cs);
        im.add(c * sn);
    }
    Complex64::new(re.value(), im.value())
}

/// C² radial bump `(1 − |x − c|²/r²)³₊`.
pub fn radial_bump(center: Vector3<f64>, radius: f64) -> impl Fn(&Vector3<f64>) -> f64 {
    move |x| {
        let t = (x - center).norm_squared() / (radius * radius);
        if t >= 1.0 {
            0.0
        } else {
            (1.0 - t).powi(3)
        }
    }
}

/// Decay of `|μ̂(Rω)|` along one direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionProfile {
    pub direction: Vector3<f64>,
    pub radii: Vec<f64>,
    /// Raw `|μ̂(R_k ω)|`.
    pub values: Vec<f64>,
    /// Max of `|μ̂|` over the sub-sampled window `[R_k/2, 2R_k]`.
    pub envelope: Vec<f64>,
    pub alpha: f64,
    pub log_constant: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub level: f64,
    pub directions: Vec<Vector3<f64>>,
    pub radii: Vec<f64>,
    /// `values[d][k] = |μ̂(R_k ω_d)|`.
    pub values: Vec<Vec<f64>>,
    pub envelopes: Vec<Vec<f64>>,
    pub alpha_per_direction: Vec<f64>,
    pub alpha_min: f64,
    /// Worst RMS residual of the per-direction log-log fits.
    pub fit_residual: f64,
    /// `C` in `|μ̂| ≈ C R^{-α}` for the direction attaining `alpha_min`.
    pub fitted_constant: f64,
    pub resolution_cap: f64,
    pub mesh_h: f64,
    pub vertices: usize,
}

impl DecayReport {
    /// CSV with columns `wx,wy,wz,R,abs_mu,alpha_fit`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("wx,wy,wz,R,abs_mu,alpha_fit\n");
        for (d, w) in self.directions.iter().enumerate() {
            for (k, r) in self.radii.iter().enumerate() {
                out.push_str(&format!(
                    "{:?},{:?},{:?},{:?},{:?},{:?}\n",
                    w.x, w.y, w.z, r, self.values[d][k], self.alpha_per_direction[d]
                ));
            }
        }
        out
    }
}

/// Sub-samples per octave used for the envelope windows.
const PER_OCTAVE: i32 = 16;

fn check_cap(mesh: &SurfaceMesh, rmin: f64, rmax: f64) -> Result<()> {
    if !(rmin > 0.0) || rmax < 2.0 * rmin * (1.0 - 1e-12) {
        return Err(Lap3dError::InvalidInput("need 0 < rmin and rmax >= 2 rmin".into()));
    }
    let cap = mesh.resolution_cap();
    if rmax > cap * (1.0 + 1e-12) {
        return Err(Lap3dError::ResolutionCap { radius: rmax, cap });
    }
    Ok(())
}

/// Envelope fit of `log|μ̂(Rω)|` against `log R` over dyadic `R ∈ [rmin, rmax]`.
pub fn decay_profile(mesh: &SurfaceMesh, direction: Vector3<f64>, rmin: f64, rmax: f64) -> Result<DirectionProfile> {
    check_cap(mesh, rmin, rmax)?;
    let octaves = ((rmax / rmin).log2() + 1e-9).floor() as i32;
    let radii: Vec<f64> = (0..=octaves).map(|k| rmin * 2f64.powi(k)).collect();
    let w = direction.normalize();
    let proj: Vec<f64> = mesh.vertices.iter().map(|v| v.dot(&w)).collect();
    let coef: Vec<f64> = mesh.weights.iter().zip(&mesh.density).map(|(a, b)| a * b).collect();
    let eval = |r: f64| {
        let mut re = KahanSum::default();
        let mut im = KahanSum::default();
        for (t, c) in proj.iter().zip(&coef) {
            let (sn, cs) = (r * t).sin_cos();
            re.add(c * cs);
            im.add(c * sn);
        }
        re.value().hypot(im.value())
    };
    // fine samples r_m = rmin·2^(m/PER_OCTAVE), m ∈ [−PER_OCTAVE, octaves·PER_OCTAVE]
    let fine: Vec<(i32, f64)> = (-PER_OCTAVE..=octaves * PER_OCTAVE)
        .map(|m| (m, eval(rmin * 2f64.powf(m as f64 / PER_OCTAVE as f64))))
        .collect();
    let values: Vec<f64> = (0..=octaves)
        .map(|k| fine.iter().find(|(m, _)| *m == k * PER_OCTAVE).unwrap().1)
        .collect();
    let envelope: Vec<f64> = (0..=octaves)
        .map(|k| {
            let c = k * PER_OCTAVE;
            fine.iter()
                .filter(|(m, _)| (*m - c).abs() <= PER_OCTAVE)
                .map(|(_, v)| *v)
                .fold(0.0, f64::max)
        })
        .collect();
    let lx: Vec<f64> = radii.iter().map(|r| r.ln()).collect();
    let ly: Vec<f64> = envelope.iter().map(|v| v.max(f64::MIN_POSITIVE).ln()).collect();
    let (slope, intercept) = linear_fit(&lx, &ly);
    let residual = fit_residual(&lx, &ly, slope, intercept);
    Ok(DirectionProfile { direction: w, radii, values, envelope, alpha: -slope, log_constant: intercept, residual })
}

/// Decay scan over `directions` Fibonacci directions.
pub fn decay_scan(mesh: &SurfaceMesh, directions: usize, rmin: f64, rmax: f64) -> Result<DecayReport> {
    if directions < 32 {
        return Err(Lap3dError::InvalidInput("decay scan needs at least 32 directions".into()));
    }
    check_cap(mesh, rmin, rmax)?;
    decay_scan_with(mesh, &fibonacci_sphere(directions), rmin, rmax)
}

/// Decay scan over explicit directions.
pub fn decay_scan_with(mesh: &SurfaceMesh, dirs: &[Vector3<f64>], rmin: f64, rmax: f64) -> Result<DecayReport> {
    use rayon::prelude::*;
    let profiles: Vec<DirectionProfile> = dirs
        .par_iter()
        .map(|w| decay_profile(mesh, *w, rmin, rmax))
        .collect::<Result<_>>()?;
    let (imin, alpha_min) = profiles
        .iter()
        .enumerate()
        .map(|(i, p)| (i, p.alpha))
        .fold((0, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
    Ok(DecayReport {
        level: mesh.level,
        directions: profiles.iter().map(|p| p.direction).collect(),
        radii: profiles[0].radii.clone(),
        values: profiles.iter().map(|p| p.values.clone()).collect(),
        envelopes: profiles.iter().map(|p| p.envelope.clone()).collect(),
        alpha_per_direction: profiles.iter().map(|p| p.alpha).collect(),
        alpha_min,
        fit_residual: profiles.iter().map(|p| p.residual).fold(0.0, f64::max),
        fitted_constant: profiles[imin].log_constant.exp(),
        resolution_cap: mesh.resolution_cap(),
        mesh_h: mesh.h,
        vertices: mesh.vertices.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn sphere_mesh(h: f64) -> SurfaceMesh {
        SurfaceMesh::from_level_set(&Symbol::helmholtz(), 0.0, &AxisBox::cube(1.25), h, |_| 1.0).unwrap()
    }

    #[test]
    fn sphere_area_and_second_moment() {
        let m = sphere_mesh(0.05);
        assert!((m.area() / (4.0 * PI) - 1.0).abs() < 1e-3, "area {}", m.area());
        let sum_w: f64 = m.weights.iter().sum();
        assert!((sum_w / m.area() - 1.0).abs() < 1e-12);
        for v in &m.vertices {
            assert!(Symbol::helmholtz().value(v).abs() <= 1e-9);
        }
        let z2 = m.with_density(|x| x.z * x.z);
        assert!((z2.integrate_density() / (4.0 * PI / 3.0) - 1.0).abs() < 5e-3);
    }

    #[test]
    fn orientation_follows_gradient() {
        let m = sphere_mesh(0.1);
        for t in &m.triangles {
            let (a, b, c) = (m.vertices[t[0]], m.vertices[t[1]], m.vertices[t[2]]);
            let n = (b - a).cross(&(c - a));
            assert!(n.dot(&(a + b + c)) >= 0.0);
        }
    }

    #[test]
    fn empty_surface_and_cap_errors() {
        let far = AxisBox::new([5.0; 3], [6.0; 3]);
        let e = SurfaceMesh::from_level_set(&Symbol::helmholtz(), 0.0, &far, 0.05, |_| 1.0);
        assert!(matches!(e, Err(Lap3dError::EmptySurface)));
        let m = sphere_mesh(0.1);
        assert!(matches!(decay_scan(&m, 32, 4.0, 64.0), Err(Lap3dError::ResolutionCap { .. })));
    }

    #[test]
    fn fourier_at_origin_and_conjugate_symmetry() {
        let m = sphere_mesh(0.05).with_density(|x| 1.0 + x.x * x.y);
        let mass = m.integrate_density();
        let z = surface_fourier(&m, &Vector3::zeros());
        assert!((z.re - mass).abs() < 1e-12 && z.im == 0.0);
        let x = Vector3::new(1.3, -0.7, 2.1);
        let (p, q) = (surface_fourier(&m, &x), surface_fourier(&m, &-x));
        assert!((p - q.conj()).norm() < 1e-12);
    }
}
