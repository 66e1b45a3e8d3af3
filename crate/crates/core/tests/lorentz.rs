use lap3d_core::grid::GridField;
use lap3d_core::lorentz::*;
use num_complex::Complex64;
use proptest::prelude::*;

fn field(values: Vec<(f64, f64)>) -> GridField {
    let mut g = GridField::zeros([4, 4, 4], [0.5, 0.25, 1.0], [0.0; 3]).unwrap();
    g.values = values.into_iter().map(|(a, b)| Complex64::new(a, b)).collect();
    g
}

fn values() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-10.0..10.0f64, -10.0..10.0f64), 64)
}

const PS: [Exponent; 5] = [
    Exponent::Finite(1.0),
    Exponent::Finite(1.5),
    Exponent::Finite(2.0),
    Exponent::Finite(14.0 / 3.0),
    Exponent::Infinity,
];

proptest! {
    #[test]
    fn rearrangement_is_equimeasurable(v in values()) {
        let g = field(v);
        let r = Rearrangement::of(&g);
        for p in PS {
            let a = lebesgue_norm(&g, p);
            let b = r.lebesgue(p);
            prop_assert!((a - b).abs() <= 1e-12 * a.max(1.0), "{p}: {a} vs {b}");
        }
    }

    #[test]
    fn lorentz_orderings(v in values()) {
        let g = field(v);
        for p in [1.5, 2.0, 14.0 / 3.0, 7.0] {
            let e = Exponent::Finite(p);
            let weak = lorentz_norm(&g, e, LorentzIndex::Infinity).unwrap();
            let strong = lebesgue_norm(&g, e);
            let one = lorentz_norm(&g, e, LorentzIndex::One).unwrap();
            prop_assert!(weak <= strong * (1.0 + 1e-12) && strong <= one * (1.0 + 1e-12), "{weak} {strong} {one}");
        }
    }

    #[test]
    fn norms_ignore_permutations(v in values(), seed in any::<u64>()) {
        let g = field(v.clone());
        let mut w = v;
        let mut state = seed | 1;
        for i in (1..w.len()).rev() {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            w.swap(i, (state % (i as u64 + 1)) as usize);
        }
        let h = field(w);
        for p in PS {
            prop_assert!((lebesgue_norm(&g, p) - lebesgue_norm(&h, p)).abs() <= 1e-12 * lebesgue_norm(&g, p).max(1.0));
        }
        for p in [1.5, 3.0] {
            for q in [LorentzIndex::One, LorentzIndex::Infinity] {
                let a = lorentz_norm(&g, Exponent::Finite(p), q).unwrap();
                let b = lorentz_norm(&h, Exponent::Finite(p), q).unwrap();
                prop_assert!((a - b).abs() <= 1e-12 * a.max(1.0));
            }
        }
    }
}

#[test]
fn cube_indicator_has_unit_norms() {
    let g = GridField::from_fn([16, 16, 16], [0.25; 3], [-2.0; 3], |x| {
        let inside = (0..3).all(|i| x[i] >= -0.5 && x[i] < 0.5);
        Complex64::new(if inside { 1.0 } else { 0.0 }, 0.0)
    })
    .unwrap();
    for p in PS {
        assert!((lebesgue_norm(&g, p) - 1.0).abs() < 1e-12, "{p}");
        let two = g.scale(Complex64::new(2.0, 0.0));
        assert_eq!(lebesgue_norm(&two, p) / lebesgue_norm(&g, p), 2.0);
    }
    let weak = lorentz_norm(&g, Exponent::Finite(3.0), LorentzIndex::Infinity).unwrap();
    let one = lorentz_norm(&g, Exponent::Finite(3.0), LorentzIndex::One).unwrap();
    assert!((weak - 1.0).abs() < 1e-12 && (one - 3.0).abs() < 1e-12);
}

#[test]
fn gaussian_l2_norm() {
    let g = GridField::from_fn([64; 3], [0.25; 3], [-8.0; 3], |x| Complex64::new((-std::f64::consts::PI * x.norm_squared()).exp(), 0.0))
        .unwrap();
    let v = lebesgue_norm(&g, Exponent::Finite(2.0));
    assert!((v - 2f64.powf(-0.75)).abs() < 1e-4, "{v}");
}
