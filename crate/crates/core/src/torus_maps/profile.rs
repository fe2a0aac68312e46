//! Odd monotone profiles R: ℝ → ℝ with R(x) = k₀x near 0 and R(x) = x for |x| ≥ b.
//!
//! R' equals k₀ on [0, a], moves to k₁ over a width τ, stays there, then returns to 1
//! over another width τ. The length of the k₁ plateau is chosen so that ∫₀ᵇ (R' − 1) = 0.

use serde::{Deserialize, Serialize};

use super::bump::{smoothstep, smoothstep_d, smoothstep_integral};
use crate::Error;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateProfile {
    pub k0: f64,
    pub a: f64,
    pub tau: f64,
    pub k1: f64,
    /// Start of the return to slope 1.
    pub c: f64,
    /// Outer edge of the support.
    pub b: f64,
}

impl RateProfile {
    pub fn new(k0: f64, a: f64, tau: f64, k1: f64) -> Result<Self, Error> {
        if !(k0 > 0.0 && k1 > 0.0 && a > 0.0 && tau > 0.0) {
            return Err(Error::Input("rate profile parameters must be positive".into()));
        }
        if (k0 - 1.0) * (k1 - 1.0) >= 0.0 {
            return Err(Error::Input(format!("k0={k0} and k1={k1} must lie on opposite sides of 1")));
        }
        let excess = (k0 - 1.0) * a + tau * ((k0 + k1) / 2.0 - 1.0) + tau * (k1 - 1.0) / 2.0;
        let c = a + tau - excess / (k1 - 1.0);
        if c < a + tau {
            return Err(Error::Input(format!("plateau would be negative (c={c}); widen a or tau")));
        }
        Ok(Self { k0, a, tau, k1, c, b: c + tau })
    }

    /// R'(x).
    pub fn slope(&self, x: f64) -> f64 {
        let r = x.abs();
        self.k0 + (self.k1 - self.k0) * smoothstep((r - self.a) / self.tau) + (1.0 - self.k1) * smoothstep((r - self.c) / self.tau)
    }

    /// R''(x).
    pub fn curvature(&self, x: f64) -> f64 {
        let r = x.abs();
        let v = ((self.k1 - self.k0) * smoothstep_d((r - self.a) / self.tau) + (1.0 - self.k1) * smoothstep_d((r - self.c) / self.tau))
            / self.tau;
        if x < 0.0 {
            -v
        } else {
            v
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let r = x.abs();
        if r >= self.b {
            return x;
        }
        let i = |x0: f64| self.tau * smoothstep_integral((r - x0) / self.tau);
        let v = self.k0 * r + (self.k1 - self.k0) * i(self.a) + (1.0 - self.k1) * i(self.c);
        v.copysign(x)
    }

    /// max |R(x) − x|.
    pub fn max_displacement(&self) -> f64 {
        let n = 4096;
        (0..=n).map(|i| {
            let x = self.b * i as f64 / n as f64;
            (self.eval(x) - x).abs()
        })
        .fold(0.0, f64::max)
    }

    pub fn min_slope(&self) -> f64 {
        self.k0.min(self.k1).min(1.0)
    }

    pub fn max_slope(&self) -> f64 {
        self.k0.max(self.k1).max(1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn returns_to_identity() {
        for (k0, k1) in [(17.0, 0.5), (0.01, 2.0), (3.0, 0.2)] {
            let p = RateProfile::new(k0, 100.0, 100.0, k1).unwrap();
            let x = p.b * (1.0 - 1e-12);
            assert!((p.eval(x) - x).abs() < 1e-6 * p.b, "{k0} {k1}");
            assert_eq!(p.eval(p.b * 2.0), p.b * 2.0);
            assert_eq!(p.eval(-p.b * 2.0), -p.b * 2.0);
            assert!((p.eval(50.0) - k0 * 50.0).abs() < 1e-9);
        }
    }

    #[test]
    fn slope_matches_differences() {
        let p = RateProfile::new(17.0, 10.0, 10.0, 0.5).unwrap();
        let h = 1e-5;
        for i in 0..400 {
            let x = -p.b * 1.1 + 2.2 * p.b * i as f64 / 400.0;
            let fd = (p.eval(x + h) - p.eval(x - h)) / (2.0 * h);
            assert!((fd - p.slope(x)).abs() < 1e-5, "x={x}");
            let fd2 = (p.slope(x + h) - p.slope(x - h)) / (2.0 * h);
            assert!((fd2 - p.curvature(x)).abs() < 1e-4, "x={x}");
        }
    }

    #[test]
    fn monotone() {
        let p = RateProfile::new(0.01, 5.0, 5.0, 2.0).unwrap();
        assert!(p.min_slope() > 0.0);
        let mut prev = f64::NEG_INFINITY;
        for i in 0..=1000 {
            let x = -p.b * 1.2 + 2.4 * p.b * i as f64 / 1000.0;
            let v = p.eval(x);
            assert!(v > prev);
            prev = v;
        }
    }

    #[test]
    fn rejects_same_side_rates() {
        assert!(RateProfile::new(2.0, 1.0, 1.0, 3.0).is_err());
    }
}
