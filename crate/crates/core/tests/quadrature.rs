use lap3d_core::geometry::AxisBox;
use lap3d_core::quadrature::*;
use lap3d_core::sampling::fibonacci_sphere;
use lap3d_core::symbols::{MultiIndex, Symbol};
use nalgebra::{Rotation3, Vector3};
use std::f64::consts::PI;

fn sphere(h: f64) -> SurfaceMesh {
    SurfaceMesh::from_level_set(&Symbol::helmholtz(), 0.0, &AxisBox::cube(1.25), h, |_| 1.0).unwrap()
}

#[test]
fn torus_area() {
    let s = Symbol::torus_quartic(2.0, 1.0);
    let b = AxisBox::new([-3.2, -3.2, -1.2], [3.2, 3.2, 1.2]);
    let m = SurfaceMesh::from_level_set(&s, 0.0, &b, 0.05, |_| 1.0).unwrap();
    let exact = 8.0 * PI * PI;
    assert!((m.area() / exact - 1.0).abs() < 5e-3, "area {}", m.area());
}

#[test]
fn area_converges_at_second_order() {
    let err = |h: f64| (sphere(h).area() - 4.0 * PI).abs();
    let (e1, e2) = (err(0.1), err(0.05));
    assert!(e1 / e2 >= 3.5, "{e1:e} -> {e2:e}");
}

#[test]
fn transform_of_the_sphere() {
    let m = sphere(0.015);
    let at0 = surface_fourier(&m, &Vector3::zeros());
    assert!((at0.re / (4.0 * PI) - 1.0).abs() < 1e-3 && at0.im == 0.0);
    for t in [1.0, 2.5, 7.3, 15.0, 26.0, 40.0] {
        let v = surface_fourier(&m, &Vector3::new(0.0, 0.0, t));
        let exact = 4.0 * PI * f64::sin(t) / t;
        assert!((v.re - exact).abs() <= 0.01 * 4.0 * PI / t, "t={t}: {} vs {exact}", v.re);
        assert!(v.im.abs() <= 0.01 * 4.0 * PI / t);
    }
    let x = Vector3::new(3.1, -2.0, 0.7);
    let (a, b) = (surface_fourier(&m, &x), surface_fourier(&m, &-x));
    assert!((a - b.conj()).norm() <= 1e-12);
}

#[test]
fn rotation_covariance() {
    let m = sphere(0.08).with_density(|x| 1.0 + x.x + 0.5 * x.y * x.z);
    let rot = Rotation3::from_euler_angles(0.3, -1.1, 2.0);
    let rm = m.rotated(&rot);
    for w in fibonacci_sphere(8) {
        let a = decay_profile(&m, w, 2.0, 16.0).unwrap();
        let b = decay_profile(&rm, rot * w, 2.0, 16.0).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!((x - y).abs() <= 1e-10, "{x} vs {y}");
        }
    }
}

#[test]
fn alpha_min_rises_with_rmax() {
    let m = sphere(0.012);
    let alphas: Vec<f64> = [16.0, 32.0, 64.0, 128.0]
        .iter()
        .map(|&rmax| decay_scan(&m, 32, 4.0, rmax).unwrap().alpha_min)
        .collect();
    for w in alphas.windows(2) {
        assert!(w[1] >= w[0] - 0.05, "{alphas:?}");
    }
    assert!((alphas[3] - 1.0).abs() <= 0.1, "{alphas:?}");
}

#[test]
fn flat_patch_does_not_decay_normally() {
    let plane = Symbol::polynomial([(MultiIndex::new(0, 0, 1), 1.0)]).unwrap();
    let b = AxisBox::new([-1.0, -1.0, -0.5], [1.0, 1.0, 0.5]);
    let m = SurfaceMesh::from_level_set(&plane, 0.0, &b, 0.05, radial_bump(Vector3::zeros(), 0.8)).unwrap();
    let p = decay_profile(&m, Vector3::z(), 4.0, 16.0).unwrap();
    assert!(p.alpha.abs() < 0.05, "{}", p.alpha);
}

#[test]
fn torus_near_degenerate_circle_decays_slower() {
    let s = Symbol::torus_quartic(2.0, 1.0);
    let b = AxisBox::new([-3.2, -3.2, -1.2], [3.2, 3.2, 1.2]);
    let m = SurfaceMesh::from_level_set(&s, 0.0, &b, 0.04, radial_bump(Vector3::new(2.0, 0.0, 1.0), 0.6)).unwrap();
    let r = decay_scan(&m, 32, 4.0, 32.0).unwrap();
    assert!(r.alpha_min.is_finite() && r.alpha_min < 1.0, "{}", r.alpha_min);
}
