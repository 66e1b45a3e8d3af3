//! Deterministic point sets and small numeric helpers shared across modules.

use nalgebra::Vector3;

/// Fibonacci lattice on the unit sphere with `n` points.
pub fn fibonacci_sphere(n: usize) -> Vec<Vector3<f64>> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|k| {
            let z = 1.0 - (2.0 * k as f64 + 1.0) / n as f64;
            let rho = (1.0 - z * z).max(0.0).sqrt();
            let theta = golden * k as f64;
            Vector3::new(rho * theta.cos(), rho * theta.sin(), z)
        })
        .collect()
}

/// Neumaier compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Ordinary least-squares slope and intercept of `y` against `x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Root-mean-square residual of a linear fit.
pub fn fit_residual(x: &[f64], y: &[f64], slope: f64, intercept: f64) -> f64 {
    let ss: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - slope * a - intercept).powi(2))
        .sum();
    (ss / x.len() as f64).sqrt()
}

/// Halton sequence value for index `i` in base `b`.
pub fn halton(mut i: usize, b: usize) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while i > 0 {
        f /= b as f64;
        r += f * (i % b) as f64;
        i /= b;
    }
    r
}

/// C-infinity transition from 0 (at t <= 0) to 1 (at t >= 1).
pub fn smooth_step(t: f64) -> f64 {
    fn g(x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else {
            (-1.0 / x).exp()
        }
    }
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        let a = g(t);
        a / (a + g(1.0 - t))
    }
}

/// Seventh-order polynomial smoothstep on [0, 1] (C^3 at both ends).
pub fn smoothstep7(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    let t4 = t * t * t * t;
    t4 * (35.0 + t * (-84.0 + t * (70.0 - 20.0 * t)))
}

/// Plateau bump: 1 on [-1/2, 1/2], 0 outside [-1, 1], `smoothstep7` in between.
pub fn plateau_bump(s: f64) -> f64 {
    let a = s.abs();
    if a <= 0.5 {
        1.0
    } else if a >= 1.0 {
        0.0
    } else {
        smoothstep7((1.0 - a) / 0.5)
    }
}

/// C-infinity bump `exp(1 - 1/(1 - r²))` on `|r| < 1`, equal to 1 at 0.
pub fn cinf_bump(r: f64) -> f64 {
    let r2 = r * r;
    if r2 >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - r2)).exp()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fibonacci_points_are_unit() {
        for v in fibonacci_sphere(257) {
            assert!((v.norm() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn kahan_recovers_cancellation() {
        let mut s = KahanSum::default();
        s.add(1e16);
        s.add(1.0);
        s.add(-1e16);
        assert_eq!(s.value(), 1.0);
    }

    #[test]
    fn bump_plateau_and_support() {
        assert_eq!(plateau_bump(0.3), 1.0);
        assert_eq!(plateau_bump(-1.2), 0.0);
        let mid = plateau_bump(0.75);
        assert!((mid - 0.5).abs() < 1e-12);
    }
}
