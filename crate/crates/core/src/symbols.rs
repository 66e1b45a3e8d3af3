//! Real symbols p(ξ) on R³: dense polynomials and cosine products.
//!
//! A polynomial term `a·ξ^α` and a trigonometric term `a·cos(α₁ξ₁)cos(α₂ξ₂)cos(α₃ξ₃)`
//! are both separable, so every mixed partial derivative is a product of
//! one-dimensional closed forms. Evaluation sums terms with compensated
//! accumulation.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Lap3dError, Result};
use crate::sampling::{fibonacci_sphere, KahanSum};

/// Largest polynomial degree accepted.
pub const MAX_DEGREE: u32 = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MultiIndex(pub [u32; 3]);

impl MultiIndex {
    pub const fn new(a1: u32, a2: u32, a3: u32) -> Self {
        Self([a1, a2, a3])
    }

    pub fn order(&self) -> u32 {
        self.0.iter().sum()
    }

    /// All multi-indices of total order exactly `n`.
    pub fn of_order(n: u32) -> Vec<MultiIndex> {
        let mut out = Vec::new();
        for a in 0..=n {
            for b in 0..=(n - a) {
                out.push(MultiIndex::new(a, b, n - a - b));
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SymbolKind {
    Polynomial,
    Trigonometric,
}

/// Serialized as its literal text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct Symbol {
    kind: SymbolKind,
    terms: BTreeMap<MultiIndex, f64>,
    degree: u32,
}

/// Value and derivatives of a symbol at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub gradient: Vector3<f64>,
    pub hessian: Matrix3<f64>,
    /// `third[i][j][k] = ∂_i∂_j∂_k p`, present when order 3 was requested.
    pub third: Option<[[[f64; 3]; 3]; 3]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ellipticity {
    EllipticPositive,
    EllipticNegative,
    NotElliptic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EllipticityReport {
    pub verdict: Ellipticity,
    /// Minimum of |p_N| over the sample (a necessary-condition margin only).
    pub margin: f64,
    pub samples: usize,
}

/// `k`-th derivative of `t ↦ t^a` at `x`.
fn monomial_derivative(a: u32, k: u32, x: f64) -> f64 {
    if k > a {
        return 0.0;
    }
    let mut coeff = 1.0;
    for i in 0..k {
        coeff *= (a - i) as f64;
    }
    coeff * x.powi((a - k) as i32)
}

/// `k`-th derivative of `t ↦ cos(m t)` at `x`.
fn cosine_derivative(m: u32, k: u32, x: f64) -> f64 {
    if m == 0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    let mf = m as f64;
    let arg = mf * x;
    let scale = mf.powi(k as i32);
    scale
        * match k % 4 {
            0 => arg.cos(),
            1 => -arg.sin(),
            2 => -arg.cos(),
            _ => arg.sin(),
        }
}

impl Symbol {
    /// Polynomial symbol from `(α, a_α)` pairs; repeated indices accumulate.
    pub fn polynomial<I>(terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (MultiIndex, f64)>,
    {
        let terms = accumulate(terms);
        let degree = terms.keys().map(MultiIndex::order).max().unwrap_or(0);
        if terms.is_empty() {
            return Err(Lap3dError::InvalidInput("polynomial has no nonzero terms".into()));
        }
        if degree > MAX_DEGREE {
            return Err(Lap3dError::InvalidInput(format!(
                "degree {degree} exceeds the supported maximum {MAX_DEGREE}"
            )));
        }
        if degree == 0 {
            return Err(Lap3dError::InvalidInput("polynomial symbol must have degree >= 1".into()));
        }
        Ok(Self { kind: SymbolKind::Polynomial, terms, degree })
    }

    /// Trigonometric symbol: each `(m, a)` contributes `a·Π cos(mᵢ ξᵢ)`.
    pub fn trigonometric<I>(terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (MultiIndex, f64)>,
    {
        let terms = accumulate(terms);
        if terms.is_empty() {
            return Err(Lap3dError::InvalidInput("trigonometric symbol has no nonzero terms".into()));
        }
        Ok(Self { kind: SymbolKind::Trigonometric, terms, degree: 0 })
    }

    /// `|ξ|² − 1`.
    pub fn helmholtz() -> Self {
        Self::polynomial([
            (MultiIndex::new(2, 0, 0), 1.0),
            (MultiIndex::new(0, 2, 0), 1.0),
            (MultiIndex::new(0, 0, 2), 1.0),
            (MultiIndex::new(0, 0, 0), -1.0),
        ])
        .expect("static symbol")
    }

    /// `|ξ|² + shift`.
    pub fn laplacian_shifted(shift: f64) -> Self {
        let mut t = vec![
            (MultiIndex::new(2, 0, 0), 1.0),
            (MultiIndex::new(0, 2, 0), 1.0),
            (MultiIndex::new(0, 0, 2), 1.0),
        ];
        if shift != 0.0 {
            t.push((MultiIndex::new(0, 0, 0), shift));
        }
        Self::polynomial(t).expect("static symbol")
    }

    /// `(|ξ|² + R² − r²)² − 4R²(ξ₁² + ξ₂²)`, whose zero set is the torus
    /// with tube radius `r` around the circle of radius `big_r`.
    pub fn torus_quartic(big_r: f64, r: f64) -> Self {
        let c = big_r * big_r - r * r;
        let mut t = Vec::new();
        // |ξ|⁴
        for i in 0..3 {
            let mut a = [0; 3];
            a[i] = 4;
            t.push((MultiIndex(a), 1.0));
            for j in (i + 1)..3 {
                let mut b = [0; 3];
                b[i] = 2;
                b[j] = 2;
                t.push((MultiIndex(b), 2.0));
            }
        }
        // 2c|ξ|² − 4R²(ξ₁² + ξ₂²)
        t.push((MultiIndex::new(2, 0, 0), 2.0 * c - 4.0 * big_r * big_r));
        t.push((MultiIndex::new(0, 2, 0), 2.0 * c - 4.0 * big_r * big_r));
        t.push((MultiIndex::new(0, 0, 2), 2.0 * c));
        t.push((MultiIndex::new(0, 0, 0), c * c));
        Self::polynomial(t).expect("static symbol")
    }

    /// `|ξ|⁴ − 1`.
    pub fn quartic_radial() -> Self {
        let mut t = Vec::new();
        for i in 0..3 {
            let mut a = [0; 3];
            a[i] = 4;
            t.push((MultiIndex(a), 1.0));
            for j in (i + 1)..3 {
                let mut b = [0; 3];
                b[i] = 2;
                b[j] = 2;
                t.push((MultiIndex(b), 2.0));
            }
        }
        t.push((MultiIndex::new(0, 0, 0), -1.0));
        Self::polynomial(t).expect("static symbol")
    }

    /// `c₁ cos ξ₁ + c₂ cos ξ₂ + c₃ cos ξ₃`.
    pub fn cos_sum(c: [f64; 3]) -> Self {
        Self::trigonometric([
            (MultiIndex::new(1, 0, 0), c[0]),
            (MultiIndex::new(0, 1, 0), c[1]),
            (MultiIndex::new(0, 0, 1), c[2]),
        ])
        .expect("static symbol")
    }

    pub fn kind(&self) -> SymbolKind {
        self.kind
    }

    pub fn terms(&self) -> &BTreeMap<MultiIndex, f64> {
        &self.terms
    }

    /// Polynomial degree N (0 for trigonometric symbols).
    pub fn degree(&self) -> u32 {
        self.degree
    }

    /// Multiply every coefficient by `lambda`.
    pub fn scaled(&self, lambda: f64) -> Self {
        let terms = self.terms.iter().map(|(k, v)| (*k, v * lambda)).collect();
        Self { kind: self.kind, terms, degree: self.degree }
    }

    fn axis_derivative(&self, a: u32, k: u32, x: f64) -> f64 {
        match self.kind {
            SymbolKind::Polynomial => monomial_derivative(a, k, x),
            SymbolKind::Trigonometric => cosine_derivative(a, k, x),
        }
    }

    pub fn value(&self, xi: &Vector3<f64>) -> f64 {
        self.derivative(MultiIndex::new(0, 0, 0), xi)
    }

    /// Mixed partial `∂^β p(ξ)` for any β.
    pub fn derivative(&self, beta: MultiIndex, xi: &Vector3<f64>) -> f64 {
        let mut acc = KahanSum::default();
        for (alpha, &a) in &self.terms {
            let mut t = a;
            for i in 0..3 {
                t *= self.axis_derivative(alpha.0[i], beta.0[i], xi[i]);
                if t == 0.0 {
                    break;
                }
            }
            acc.add(t);
        }
        acc.value()
    }

    /// Value and derivatives up to `order` (at most 3).
    pub fn eval_jet(&self, xi: &Vector3<f64>, order: u32) -> Jet {
        assert!(order <= 3, "eval_jet supports order <= 3");
        let mut value = KahanSum::default();
        let mut grad = [KahanSum::default(); 3];
        let mut hess = [[KahanSum::default(); 3]; 3];
        let mut third = [[[KahanSum::default(); 3]; 3]; 3];
        for (alpha, &a) in &self.terms {
            // d[i][k] = k-th derivative of the i-th factor
            let mut d = [[0.0; 4]; 3];
            for i in 0..3 {
                for k in 0..=order {
                    d[i][k as usize] = self.axis_derivative(alpha.0[i], k, xi[i]);
                }
            }
            let factor = |counts: [usize; 3]| a * d[0][counts[0]] * d[1][counts[1]] * d[2][counts[2]];
            value.add(factor([0, 0, 0]));
            if order >= 1 {
                for i in 0..3 {
                    let mut c = [0; 3];
                    c[i] += 1;
                    grad[i].add(factor(c));
                }
            }
            if order >= 2 {
                for i in 0..3 {
                    for j in i..3 {
                        let mut c = [0; 3];
                        c[i] += 1;
                        c[j] += 1;
                        hess[i][j].add(factor(c));
                    }
                }
            }
            if order >= 3 {
                for i in 0..3 {
                    for j in i..3 {
                        for k in j..3 {
                            let mut c = [0; 3];
                            c[i] += 1;
                            c[j] += 1;
                            c[k] += 1;
                            third[i][j][k].add(factor(c));
                        }
                    }
                }
            }
        }
        let gradient = Vector3::new(grad[0].value(), grad[1].value(), grad[2].value());
        let mut hessian = Matrix3::zeros();
        for i in 0..3 {
            for j in i..3 {
                let v = hess[i][j].value();
                hessian[(i, j)] = v;
                hessian[(j, i)] = v;
            }
        }
        let third = (order >= 3).then(|| {
            let mut t = [[[0.0; 3]; 3]; 3];
            for i in 0..3 {
                for j in i..3 {
                    for k in j..3 {
                        let v = third[i][j][k].value();
                        for (a, b, c) in [(i, j, k), (i, k, j), (j, i, k), (j, k, i), (k, i, j), (k, j, i)] {
                            t[a][b][c] = v;
                        }
                    }
                }
            }
            t
        });
        Jet { value: value.value(), gradient, hessian, third }
    }

    /// Degree-N homogeneous part `p_N`.
    pub fn principal_part(&self) -> Result<Symbol> {
        if self.kind == SymbolKind::Trigonometric {
            return Err(Lap3dError::NoPrincipalPart);
        }
        let terms = self
            .terms
            .iter()
            .filter(|(k, _)| k.order() == self.degree)
            .map(|(k, v)| (*k, *v));
        Symbol::polynomial(terms)
    }

    /// Sign test of `p_N` on a Fibonacci sample of S². Sampling can only
    /// falsify ellipticity, never certify it.
    pub fn check_ellipticity(&self, samples: usize) -> Result<EllipticityReport> {
        if samples < 100 {
            return Err(Lap3dError::InvalidInput("ellipticity check needs at least 100 samples".into()));
        }
        let principal = self.principal_part()?;
        let mut pos = false;
        let mut neg = false;
        let mut margin = f64::INFINITY;
        for w in fibonacci_sphere(samples) {
            let v = principal.value(&w);
            margin = margin.min(v.abs());
            if v > 0.0 {
                pos = true;
            } else if v < 0.0 {
                neg = true;
            }
        }
        let verdict = if margin < 1e-12 || (pos && neg) {
            Ellipticity::NotElliptic
        } else if pos {
            Ellipticity::EllipticPositive
        } else {
            Ellipticity::EllipticNegative
        };
        Ok(EllipticityReport { verdict, margin, samples })
    }

    /// Smallest sampled `R >= 1` with `|p(ξ)| >= c|ξ|^N` on every sampled
    /// shell of `[R, 4R]`.
    pub fn growth_radius(&self, c: f64) -> Result<f64> {
        self.growth_radius_sampled(c, 256, 16)
    }

    /// `growth_radius` with explicit direction count and radial sub-samples
    /// per octave.
    pub fn growth_radius_sampled(&self, c: f64, directions: usize, per_octave: usize) -> Result<f64> {
        if self.kind != SymbolKind::Polynomial {
            return Err(Lap3dError::NoPrincipalPart);
        }
        if c <= 0.0 {
            return Err(Lap3dError::InvalidInput("growth constant must be positive".into()));
        }
        let dirs = fibonacci_sphere(directions);
        let n = self.degree as i32;
        // relative slack absorbs round-off when the bound is attained with equality
        let holds = |r: f64| dirs.iter().all(|w| self.value(&(w * r)).abs() >= c * r.powi(n) * (1.0 - 1e-12));
        // 64 candidate shells R_k = 2^(k/4), k = 0..=64, i.e. R ≤ 2^16.
        for k in 0..=64 {
            let big_r = 2f64.powf(k as f64 / 4.0);
            let ok = (0..=2 * per_octave)
                .map(|m| big_r * 2f64.powf(m as f64 / per_octave as f64))
                .all(holds);
            if ok {
                return Ok(big_r);
            }
        }
        Err(Lap3dError::GrowthRadiusNotFound { c })
    }

    /// Parse the literal syntax: `coeff a1 a2 a3 value` lines for polynomials,
    /// `cos-sum c1 c2 c3` (and `cos m1 m2 m3 value`) for the cosine kind.
    /// `#` starts a comment.
    pub fn parse(text: &str) -> Result<Symbol> {
        let mut poly = Vec::new();
        let mut trig = Vec::new();
        let mut saw_trig = false;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            let err = |msg: &str| Lap3dError::Parse { line: lineno + 1, msg: msg.to_string() };
            let num = |s: &str| s.parse::<f64>().map_err(|_| err(&format!("bad number `{s}`")));
            let idx = |s: &str| s.parse::<u32>().map_err(|_| err(&format!("bad exponent `{s}`")));
            match parts[0] {
                "coeff" => {
                    if parts.len() != 5 {
                        return Err(err("expected `coeff a1 a2 a3 value`"));
                    }
                    let alpha = MultiIndex::new(idx(parts[1])?, idx(parts[2])?, idx(parts[3])?);
                    poly.push((alpha, num(parts[4])?));
                }
                "cos-sum" => {
                    if parts.len() != 4 {
                        return Err(err("expected `cos-sum c1 c2 c3`"));
                    }
                    saw_trig = true;
                    for i in 0..3 {
                        let mut m = [0; 3];
                        m[i] = 1;
                        trig.push((MultiIndex(m), num(parts[1 + i])?));
                    }
                }
                "cos" => {
                    if parts.len() != 5 {
                        return Err(err("expected `cos m1 m2 m3 value`"));
                    }
                    saw_trig = true;
                    let m = MultiIndex::new(idx(parts[1])?, idx(parts[2])?, idx(parts[3])?);
                    trig.push((m, num(parts[4])?));
                }
                other => return Err(err(&format!("unknown directive `{other}`"))),
            }
        }
        if saw_trig {
            // constants written as `coeff 0 0 0 v` are allowed alongside cosines
            for (alpha, v) in poly {
                if alpha.order() != 0 {
                    return Err(Lap3dError::Parse {
                        line: 0,
                        msg: "polynomial terms cannot be mixed with cosine terms".into(),
                    });
                }
                trig.push((alpha, v));
            }
            Symbol::trigonometric(trig)
        } else {
            Symbol::polynomial(poly)
        }
    }

    /// Stable hexadecimal digest of the symbol's terms.
    pub fn digest(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut h = Sha256::new();
        h.update(self.to_string().as_bytes());
        let out = h.finalize();
        out.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

fn accumulate<I: IntoIterator<Item = (MultiIndex, f64)>>(terms: I) -> BTreeMap<MultiIndex, f64> {
    let mut map = BTreeMap::new();
    for (k, v) in terms {
        *map.entry(k).or_insert(0.0) += v;
    }
    map.retain(|_, v| *v != 0.0);
    map
}

impl From<Symbol> for String {
    fn from(s: Symbol) -> String {
        s.to_string()
    }
}

impl TryFrom<String> for Symbol {
    type Error = Lap3dError;
    fn try_from(s: String) -> Result<Symbol> {
        Symbol::parse(&s)
    }
}

impl fmt::Display for Symbol {
    /// Writes the literal syntax accepted by [`Symbol::parse`].
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (alpha, v) in &self.terms {
            let [a, b, c] = alpha.0;
            match self.kind {
                SymbolKind::Polynomial => writeln!(f, "coeff {a} {b} {c} {v:?}")?,
                SymbolKind::Trigonometric if alpha.order() == 0 => writeln!(f, "coeff 0 0 0 {v:?}")?,
                SymbolKind::Trigonometric => writeln!(f, "cos {a} {b} {c} {v:?}")?,
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: f64, y: f64, z: f64) -> Vector3<f64> {
        Vector3::new(x, y, z)
    }

    #[test]
    fn helmholtz_jets() {
        let s = Symbol::helmholtz();
        let j = s.eval_jet(&v(0.0, 0.0, 0.0), 2);
        assert_eq!(j.value, -1.0);
        assert_eq!(j.gradient, Vector3::zeros());
        assert_eq!(j.hessian, Matrix3::identity() * 2.0);
        let j = s.eval_jet(&v(1.0, 0.0, 0.0), 1);
        assert_eq!(j.value, 0.0);
        assert_eq!(j.gradient, v(2.0, 0.0, 0.0));
    }

    #[test]
    fn torus_vanishes_on_outer_equator() {
        let s = Symbol::torus_quartic(2.0, 1.0);
        assert_eq!(s.value(&v(3.0, 0.0, 0.0)), 0.0);
    }

    #[test]
    fn principal_parts() {
        let p = Symbol::helmholtz().principal_part().unwrap();
        assert_eq!(p, Symbol::laplacian_shifted(0.0));
        let t = Symbol::torus_quartic(2.0, 1.0).principal_part().unwrap();
        let q = Symbol::quartic_radial().principal_part().unwrap();
        assert_eq!(t, q);
        let s = Symbol::polynomial([(MultiIndex::new(3, 0, 0), 1.0), (MultiIndex::new(0, 1, 0), 1.0)]).unwrap();
        let p = s.principal_part().unwrap();
        assert_eq!(p.terms().len(), 1);
        assert_eq!(p.terms()[&MultiIndex::new(3, 0, 0)], 1.0);
        assert!(matches!(Symbol::cos_sum([1.0; 3]).principal_part(), Err(Lap3dError::NoPrincipalPart)));
    }

    #[test]
    fn ellipticity_verdicts() {
        let r = Symbol::laplacian_shifted(0.0).check_ellipticity(500).unwrap();
        assert_eq!(r.verdict, Ellipticity::EllipticPositive);
        assert!((r.margin - 1.0).abs() < 1e-12);
        let r = Symbol::quartic_radial().check_ellipticity(500).unwrap();
        assert_eq!(r.verdict, Ellipticity::EllipticPositive);
        assert!((r.margin - 1.0).abs() < 1e-12);
        let hyper = Symbol::polynomial([(MultiIndex::new(2, 0, 0), 1.0), (MultiIndex::new(0, 2, 0), -1.0)]).unwrap();
        assert_eq!(hyper.check_ellipticity(500).unwrap().verdict, Ellipticity::NotElliptic);
        assert!(Symbol::helmholtz().check_ellipticity(50).is_err());
    }

    #[test]
    fn growth_radii() {
        let r = Symbol::helmholtz().growth_radius(0.5).unwrap();
        assert!((r / 2f64.sqrt() - 1.0).abs() < 0.05, "R = {r}");
        assert_eq!(Symbol::laplacian_shifted(0.0).growth_radius(0.5).unwrap(), 1.0);
    }

    #[test]
    fn torus_growth_radius_survives_dense_rescan() {
        let s = Symbol::torus_quartic(2.0, 1.0);
        let big_r = s.growth_radius(0.5).unwrap();
        assert!(big_r.is_finite() && big_r >= 1.0);
        // oracle: 10x directions and radial samples over [R, 4R]
        let dirs = fibonacci_sphere(2560);
        for m in 0..=320 {
            let r = big_r * 4f64.powf(m as f64 / 320.0);
            for w in &dirs {
                assert!(s.value(&(w * r)).abs() >= 0.5 * r.powi(4));
            }
        }
    }

    #[test]
    fn parse_round_trip_and_errors() {
        let s = Symbol::torus_quartic(2.0, 1.0);
        assert_eq!(Symbol::parse(&s.to_string()).unwrap(), s);
        let c = Symbol::parse("# ES test surface\ncos-sum 1 1 1\n").unwrap();
        assert_eq!(c, Symbol::cos_sum([1.0; 3]));
        assert!(matches!(Symbol::parse("coeff 1 2\n"), Err(Lap3dError::Parse { line: 1, .. })));
        assert!(Symbol::parse("coeff 17 0 0 1\n").is_err());
    }

    #[test]
    fn cosine_derivatives_cycle() {
        let s = Symbol::cos_sum([1.0, 0.0, 0.0]);
        let x = v(0.3, 0.0, 0.0);
        for (k, expect) in [(1, -0.3f64.sin()), (2, -0.3f64.cos()), (3, 0.3f64.sin()), (4, 0.3f64.cos())] {
            let d = s.derivative(MultiIndex::new(k, 0, 0), &x);
            assert!((d - expect).abs() < 1e-15);
        }
    }
}
