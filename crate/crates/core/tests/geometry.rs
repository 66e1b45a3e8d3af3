use lap3d_core::geometry::*;
use lap3d_core::symbols::Symbol;
use lap3d_core::Lap3dError;
use nalgebra::Vector3;
use proptest::prelude::*;
use std::f64::consts::{PI, TAU};

const R: f64 = 2.0;
const RT: f64 = 1.0;

fn torus_point(theta: f64, phi: f64) -> Vector3<f64> {
    let rho = R + RT * theta.cos();
    Vector3::new(rho * phi.cos(), rho * phi.sin(), RT * theta.sin())
}

fn torus_k(theta: f64) -> f64 {
    theta.cos() / (RT * (R + RT * theta.cos()))
}

#[test]
fn torus_curvature_matches_parametrization() {
    let s = Symbol::torus_quartic(R, RT);
    let mut worst: f64 = 0.0;
    for i in 0..10 {
        for j in 0..10 {
            let theta = TAU * (i as f64 + 0.31) / 10.0;
            let phi = TAU * (j as f64 + 0.17) / 10.0;
            let cd = curvature_at(&s, &torus_point(theta, phi)).unwrap();
            worst = worst.max((cd.k - torus_k(theta)).abs());
        }
    }
    assert!(worst <= 1e-6, "max error {worst:e}");
}

#[test]
fn named_curvatures() {
    let cd = curvature_at(&Symbol::helmholtz(), &Vector3::x()).unwrap();
    assert!((cd.k - 1.0).abs() < 1e-12);
    assert!((cd.kappa[0].abs() - 1.0).abs() < 1e-12 && (cd.kappa[1].abs() - 1.0).abs() < 1e-12);
    let s = Symbol::torus_quartic(R, RT);
    assert!((curvature_at(&s, &Vector3::new(3.0, 0.0, 0.0)).unwrap().k - 1.0 / 3.0).abs() < 1e-10);
    for phi in [0.0, 0.4, 2.0, 5.5] {
        let cd = curvature_at(&s, &Vector3::new(2.0 * f64::cos(phi), 2.0 * f64::sin(phi), 1.0)).unwrap();
        assert!(cd.k.abs() < 1e-8, "{}", cd.k);
    }
}

fn on_torus_circle(x: &Vector3<f64>, z: f64) -> f64 {
    ((x.x * x.x + x.y * x.y).sqrt() - R).hypot(x.z - z)
}

#[test]
fn traced_circles_are_analytic() {
    let s = Symbol::torus_quartic(R, RT);
    for (seed, z) in [(Vector3::new(2.0, 0.0, 1.05), 1.0), (Vector3::new(2.0, 0.0, -1.05), -1.0)] {
        let c = trace_degenerate_curve(&s, 0.0, seed, 0.05, None).unwrap();
        assert!(c.closed);
        assert!((c.length() / (2.0 * PI * R) - 1.0).abs() <= 0.01, "length {}", c.length());
        let dist = c.nodes.iter().map(|x| on_torus_circle(x, z)).fold(0.0, f64::max);
        assert!(dist <= 1e-6, "distance {dist:e}");
        for (x, w) in c.nodes.iter().zip(&c.w) {
            let cd = curvature_at(&s, x).unwrap();
            assert!(w.dot(&cd.grad_p.normalize()).abs() <= 1e-8);
            assert!(w.dot(&cd.grad_k.normalize()).abs() <= 1e-8);
        }
    }
}

#[test]
fn sphere_has_no_degenerate_curve() {
    let r = trace_degenerate_curve(&Symbol::helmholtz(), 0.0, Vector3::new(0.3, 0.5, 0.8), 0.05, None);
    assert!(r.is_err(), "{r:?}");
}

#[test]
fn assumption_verdicts() {
    let cfg = GeometryConfig::default();
    let r = check_assumptions(&Symbol::helmholtz(), &AxisBox::cube(2.0), Interval::new(-0.2, 0.2), 32, &cfg).unwrap();
    assert!(r.verdicts.all_pass(), "{:?}", r.verdicts);
    assert!(r.curves.is_empty());
    assert!((r.c2 / (2.0 * 0.8f64.sqrt()) - 1.0).abs() < 0.05, "c2 {}", r.c2);

    let torus = Symbol::torus_quartic(R, RT);
    let b = AxisBox::new([-3.3, -3.3, -1.3], [3.3, 3.3, 1.3]);
    let r = check_assumptions(&torus, &b, Interval::new(-0.2, 0.2), 48, &cfg).unwrap();
    assert_eq!(r.verdicts.regular_foliation, Verdict::Pass);
    assert_eq!(r.verdicts.transversal_degeneracy, Verdict::Pass);
    assert_eq!(r.verdicts.no_tangential_points, Verdict::Fail);
    assert!(!r.tangential_points.is_empty());
    let r2 = check_assumptions(&torus, &b, Interval::new(-0.2, 0.2), 48, &cfg).unwrap();
    assert_eq!(serde_json::to_string(&r).unwrap(), serde_json::to_string(&r2).unwrap());
}

#[test]
fn cossum_report_is_emitted() {
    let s = Symbol::cos_sum([1.0; 3]);
    let b = AxisBox::new([0.2; 3], [2.9; 3]);
    let r = check_assumptions(&s, &b, Interval::new(0.9, 1.1), 32, &GeometryConfig::default()).unwrap();
    assert_eq!(r.verdicts.regular_foliation, Verdict::Pass);
}

#[test]
fn empty_domain_is_reported() {
    let r = check_assumptions(&Symbol::helmholtz(), &AxisBox::cube(0.2), Interval::new(0.5, 0.6), 16, &GeometryConfig::default());
    assert!(matches!(r, Err(Lap3dError::EmptyDomain)));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn two_curvature_formulas_agree(x in -3.0..3.0f64, y in -3.0..3.0f64, z in -1.5..1.5f64) {
        let xi = Vector3::new(x, y, z);
        for s in [Symbol::torus_quartic(R, RT), Symbol::cos_sum([1.0, 0.8, 1.2]), Symbol::helmholtz()] {
            let jet = s.eval_jet(&xi, 2);
            prop_assume!(jet.gradient.norm() >= 0.1);
            let a = gaussian_curvature_implicit(&jet.gradient, &jet.hessian);
            let b = gaussian_curvature_shape(&jet.gradient, &jet.hessian);
            prop_assert!((a - b).abs() <= 1e-8 * a.abs().max(1.0), "{a} vs {b}");
        }
    }

    #[test]
    fn curvature_is_scale_invariant(theta in 0.0..TAU, phi in 0.0..TAU, lambda in 0.05..20.0f64) {
        let s = Symbol::torus_quartic(R, RT);
        let x = torus_point(theta, phi);
        let a = curvature_at(&s, &x).unwrap();
        let b = curvature_at(&s.scaled(lambda), &x).unwrap();
        prop_assert!((a.k - b.k).abs() <= 1e-10);
        prop_assert!((a.nu - b.nu).norm() <= 1e-10);
        if !a.umbilic {
            for i in 0..2 {
                prop_assert!(1.0 - a.dirs[i].dot(&b.dirs[i]).abs() <= 1e-10);
            }
        }
    }
}
