use lap3d_core::sampling::fibonacci_sphere;
use lap3d_core::symbols::{Ellipticity, MultiIndex, Symbol};
use nalgebra::Vector3;
use proptest::prelude::*;

fn symbols() -> Vec<Symbol> {
    vec![
        Symbol::helmholtz(),
        Symbol::torus_quartic(2.0, 1.0),
        Symbol::quartic_radial(),
        Symbol::cos_sum([1.0, 0.7, 1.3]),
        Symbol::polynomial([(MultiIndex::new(3, 0, 0), 1.0), (MultiIndex::new(0, 1, 0), 1.0), (MultiIndex::new(1, 1, 1), -0.5)])
            .unwrap(),
    ]
}

fn point() -> impl Strategy<Value = Vector3<f64>> {
    (-4.0..4.0f64, -4.0..4.0f64, -4.0..4.0f64).prop_map(|(a, b, c)| Vector3::new(a, b, c))
}

fn close(a: f64, b: f64, scale: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * scale.max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn jet_matches_finite_differences(x in point()) {
        let h = 1e-4;
        for s in symbols() {
            let jet = s.eval_jet(&x, 2);
            let scale = jet.gradient.norm().max(jet.hessian.norm());
            for i in 0..3 {
                let mut e = Vector3::zeros();
                e[i] = h;
                let fd = (s.value(&(x + e)) - s.value(&(x - e))) / (2.0 * h);
                prop_assert!(close(jet.gradient[i], fd, scale, 1e-6), "{s}: d{i} {} vs {fd}", jet.gradient[i]);
                let gp = s.eval_jet(&(x + e), 1).gradient;
                let gm = s.eval_jet(&(x - e), 1).gradient;
                for j in 0..3 {
                    let fd = (gp[j] - gm[j]) / (2.0 * h);
                    prop_assert!(close(jet.hessian[(i, j)], fd, scale, 1e-6));
                }
            }
        }
    }

    #[test]
    fn principal_part_dominates_at_infinity(w in (0.0..std::f64::consts::PI, 0.0..std::f64::consts::TAU)) {
        let xi = Vector3::new(w.0.sin() * w.1.cos(), w.0.sin() * w.1.sin(), w.0.cos());
        let t = 1e6;
        for s in [Symbol::helmholtz(), Symbol::torus_quartic(2.0, 1.0), Symbol::quartic_radial()] {
            let pn = s.principal_part().unwrap();
            let n = pn.degree() as i32;
            let full = s.value(&(xi * t)) / t.powi(n);
            let lead = pn.value(&(xi * t)) / t.powi(n);
            prop_assert!((full / lead - 1.0).abs() < 1e-6, "{s}: {full} vs {lead}");
            prop_assert!((lead - pn.value(&xi)).abs() < 1e-9);
        }
    }

    #[test]
    fn ellipticity_is_scale_invariant(lambda in 0.01..100.0f64) {
        for s in [Symbol::helmholtz(), Symbol::torus_quartic(2.0, 1.0), Symbol::quartic_radial()] {
            let a = s.check_ellipticity(400).unwrap();
            let b = s.scaled(lambda).check_ellipticity(400).unwrap();
            prop_assert_eq!(a.verdict, b.verdict);
            prop_assert!((b.margin - lambda * a.margin).abs() <= 1e-12 * b.margin.max(1.0));
        }
    }
}

#[test]
fn jets_at_named_points() {
    let s = Symbol::helmholtz();
    let j = s.eval_jet(&Vector3::zeros(), 2);
    assert_eq!(j.value, -1.0);
    assert_eq!(j.gradient, Vector3::zeros());
    assert_eq!(j.hessian, nalgebra::Matrix3::identity() * 2.0);
    let j = s.eval_jet(&Vector3::x(), 1);
    assert_eq!(j.value, 0.0);
    assert_eq!(j.gradient, Vector3::new(2.0, 0.0, 0.0));
    assert_eq!(Symbol::torus_quartic(2.0, 1.0).value(&Vector3::new(3.0, 0.0, 0.0)), 0.0);
}

#[test]
fn principal_parts_of_examples() {
    let sq = Symbol::polynomial((0..3).map(|i| {
        let mut a = [0; 3];
        a[i] = 2;
        (MultiIndex(a), 1.0)
    }))
    .unwrap();
    assert_eq!(Symbol::helmholtz().principal_part().unwrap(), sq);
    let quartic = Symbol::torus_quartic(2.0, 1.0).principal_part().unwrap();
    assert_eq!(quartic.degree(), 4);
    for w in fibonacci_sphere(50) {
        assert!((quartic.value(&w) - 1.0).abs() < 1e-12);
    }
    let cubic = Symbol::polynomial([(MultiIndex::new(3, 0, 0), 1.0), (MultiIndex::new(0, 1, 0), 1.0)]).unwrap();
    assert_eq!(
        cubic.principal_part().unwrap(),
        Symbol::polynomial([(MultiIndex::new(3, 0, 0), 1.0)]).unwrap()
    );
}

#[test]
fn ellipticity_examples() {
    let sq = Symbol::helmholtz().principal_part().unwrap();
    let r = sq.check_ellipticity(500).unwrap();
    assert_eq!(r.verdict, Ellipticity::EllipticPositive);
    assert!((r.margin - 1.0).abs() < 1e-12);
    let r = Symbol::quartic_radial().check_ellipticity(500).unwrap();
    assert_eq!(r.verdict, Ellipticity::EllipticPositive);
    assert!((r.margin - 1.0).abs() < 1e-12);
    let hyperbolic = Symbol::polynomial([(MultiIndex::new(2, 0, 0), 1.0), (MultiIndex::new(0, 2, 0), -1.0)]).unwrap();
    assert_eq!(hyperbolic.check_ellipticity(500).unwrap().verdict, Ellipticity::NotElliptic);
}

#[test]
fn growth_radius_examples() {
    let r = Symbol::helmholtz().growth_radius(0.5).unwrap();
    assert!((r / 2f64.sqrt() - 1.0).abs() < 0.05, "{r}");
    let sq = Symbol::helmholtz().principal_part().unwrap();
    assert!((sq.growth_radius(0.5).unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn literal_round_trip() {
    for s in symbols() {
        assert_eq!(Symbol::parse(&s.to_string()).unwrap(), s);
        assert_eq!(Symbol::parse(&s.to_string()).unwrap().digest(), s.digest());
    }
}
