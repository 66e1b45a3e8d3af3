//! Lebesgue and Lorentz norms of grid fields through the decreasing
//! rearrangement.
//!
//! Lorentz quasinorms use the un-normalized integral, so that
//! `‖χ_E‖_{L^{p,1}} = p |E|^{1/p}` and `‖χ_E‖_{L^{p,∞}} = |E|^{1/p}`.

use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Lap3dError, Result};
use crate::grid::GridField;
use crate::sampling::KahanSum;

/// Lebesgue exponent in `[1, ∞]`, kept as the exact rational the user wrote
/// where possible.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Exponent {
    Finite(f64),
    Infinity,
}

impl Exponent {
    pub fn new(p: f64) -> Result<Self> {
        if p.is_infinite() && p > 0.0 {
            Ok(Exponent::Infinity)
        } else if p >= 1.0 && p.is_finite() {
            Ok(Exponent::Finite(p))
        } else {
            Err(Lap3dError::InvalidInput(format!("exponent {p} outside [1, inf]")))
        }
    }

    /// `1/p`, zero at infinity.
    pub fn reciprocal(&self) -> f64 {
        match self {
            Exponent::Finite(p) => 1.0 / p,
            Exponent::Infinity => 0.0,
        }
    }

    /// Exponent from an exact reciprocal `1/p ∈ [0, 1]`.
    pub fn from_reciprocal(r: Ratio<i64>) -> Result<Self> {
        if r < Ratio::from_integer(0) || r > Ratio::from_integer(1) {
            return Err(Lap3dError::InvalidInput(format!("1/p = {r} outside [0, 1]")));
        }
        if r == Ratio::from_integer(0) {
            Ok(Exponent::Infinity)
        } else {
            Ok(Exponent::Finite(*r.denom() as f64 / *r.numer() as f64))
        }
    }
}

impl FromStr for Exponent {
    type Err = Lap3dError;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        if matches!(t, "inf" | "infinity" | "∞") {
            return Ok(Exponent::Infinity);
        }
        let v = if let Some((a, b)) = t.split_once('/') {
            let a: f64 = a.trim().parse().map_err(|_| bad_exponent(s))?;
            let b: f64 = b.trim().parse().map_err(|_| bad_exponent(s))?;
            a / b
        } else {
            t.parse().map_err(|_| bad_exponent(s))?
        };
        Exponent::new(v)
    }
}

fn bad_exponent(s: &str) -> Lap3dError {
    Lap3dError::InvalidInput(format!("cannot parse exponent `{s}`"))
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exponent::Finite(p) => write!(f, "{p}"),
            Exponent::Infinity => write!(f, "inf"),
        }
    }
}

/// Second Lorentz index; only the two endpoint cases are supported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LorentzIndex {
    One,
    Infinity,
}

/// A norm selected by a scan configuration string such as `Lp:2` or
/// `Lorentz:14/3,inf`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum NormSpec {
    Lebesgue(Exponent),
    Lorentz(Exponent, LorentzIndex),
}

impl NormSpec {
    pub fn evaluate(&self, g: &GridField) -> Result<f64> {
        match *self {
            NormSpec::Lebesgue(p) => Ok(lebesgue_norm(g, p)),
            NormSpec::Lorentz(p, q) => lorentz_norm(g, p, q),
        }
    }
}

impl FromStr for NormSpec {
    type Err = Lap3dError;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, rest) = s
            .split_once(':')
            .ok_or_else(|| Lap3dError::InvalidInput(format!("norm `{s}` lacks a `kind:` prefix")))?;
        match kind.trim() {
            "Lp" => Ok(NormSpec::Lebesgue(rest.parse()?)),
            "Lorentz" => {
                let (p, q) = rest
                    .split_once(',')
                    .ok_or_else(|| Lap3dError::InvalidInput(format!("Lorentz norm `{s}` needs `p,q`")))?;
                let q = match q.trim() {
                    "1" => LorentzIndex::One,
                    "inf" | "infinity" | "∞" => LorentzIndex::Infinity,
                    other => {
                        return Err(Lap3dError::InvalidInput(format!(
                            "Lorentz second index must be 1 or inf, got `{other}`"
                        )))
                    }
                };
                Ok(NormSpec::Lorentz(p.parse()?, q))
            }
            other => Err(Lap3dError::InvalidInput(format!("unknown norm kind `{other}`"))),
        }
    }
}

impl fmt::Display for NormSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NormSpec::Lebesgue(p) => write!(f, "Lp:{p}"),
            NormSpec::Lorentz(p, LorentzIndex::One) => write!(f, "Lorentz:{p},1"),
            NormSpec::Lorentz(p, LorentzIndex::Infinity) => write!(f, "Lorentz:{p},inf"),
        }
    }
}

/// `(Σ |g|^p · cellvol)^{1/p}`, or `max |g|` at `p = ∞`.
pub fn lebesgue_norm(g: &GridField, p: Exponent) -> f64 {
    match p {
        Exponent::Infinity => g.max_abs(),
        Exponent::Finite(p) => {
            let mut acc = KahanSum::default();
            for v in &g.values {
                acc.add(v.norm().powf(p));
            }
            (acc.value() * g.cell_volume()).powf(1.0 / p)
        }
    }
}

/// Decreasing rearrangement of `|g|` as a step function: `g*(t) = levels[k]`
/// for `t ∈ [measures[k-1], measures[k])`.
#[derive(Debug, Clone, PartialEq)]
pub struct Rearrangement {
    pub levels: Vec<f64>,
    pub measures: Vec<f64>,
}

impl Rearrangement {
    pub fn of(g: &GridField) -> Self {
        let mut mags: Vec<f64> = g.values.iter().map(|v| v.norm()).collect();
        // stable sort keeps array order among ties
        mags.sort_by(|a, b| b.total_cmp(a));
        let cell = g.cell_volume();
        let measures = (1..=mags.len()).map(|k| k as f64 * cell).collect();
        Self { levels: mags, measures }
    }

    pub fn total_measure(&self) -> f64 {
        self.measures.last().copied().unwrap_or(0.0)
    }

    pub fn lebesgue(&self, p: Exponent) -> f64 {
        match p {
            Exponent::Infinity => self.levels.first().copied().unwrap_or(0.0),
            Exponent::Finite(p) => {
                let mut acc = KahanSum::default();
                let mut prev = 0.0;
                for (v, m) in self.levels.iter().zip(&self.measures) {
                    acc.add(v.powf(p) * (m - prev));
                    prev = *m;
                }
                acc.value().powf(1.0 / p)
            }
        }
    }

    /// `sup_t t^{1/p} g*(t)`, attained in the limit at the right end of a step.
    pub fn weak(&self, p: f64) -> f64 {
        self.levels
            .iter()
            .zip(&self.measures)
            .map(|(v, m)| v * m.powf(1.0 / p))
            .fold(0.0, f64::max)
    }

    /// `∫ t^{1/p} g*(t) dt/t` evaluated exactly on the steps.
    pub fn lorentz_one(&self, p: f64) -> f64 {
        let mut acc = KahanSum::default();
        let mut prev = 0.0f64;
        for (v, m) in self.levels.iter().zip(&self.measures) {
            acc.add(v * p * (m.powf(1.0 / p) - prev.powf(1.0 / p)));
            prev = *m;
        }
        acc.value()
    }
}

/// Lorentz quasinorm `‖g‖_{L^{p,q}}` for `q ∈ {1, ∞}` and `p ∈ (1, ∞)`.
pub fn lorentz_norm(g: &GridField, p: Exponent, q: LorentzIndex) -> Result<f64> {
    let p = match p {
        Exponent::Finite(p) if p > 1.0 => p,
        _ => return Err(Lap3dError::InvalidInput(format!("Lorentz norms need p in (1, inf), got {p}"))),
    };
    let r = Rearrangement::of(g);
    Ok(match q {
        LorentzIndex::Infinity => r.weak(p),
        LorentzIndex::One => r.lorentz_one(p),
    })
}
