use serde::{Deserialize, Serialize};

use crate::Error;

/// Quintic smoothstep x³(10 − 15x + 6x²) on [0, 1], clamped outside.
pub fn smoothstep(x: f64) -> f64 {
    let x = x.clamp(0.0, 1.0);
    x * x * x * (10.0 + x * (-15.0 + 6.0 * x))
}

pub fn smoothstep_d(x: f64) -> f64 {
    if !(0.0..=1.0).contains(&x) {
        return 0.0;
    }
    30.0 * x * x * (1.0 - x) * (1.0 - x)
}

/// ∫₀ˣ smoothstep, for x ≥ 0 (linear continuation past 1).
pub fn smoothstep_integral(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x <= 1.0 {
        x.powi(4) * (2.5 + x * (-3.0 + x))
    } else {
        0.5 + (x - 1.0)
    }
}

/// Radial cutoff equal to 1 on [0, inner] and 0 on [outer, ∞), C² at both ends.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BumpProfile {
    pub inner: f64,
    pub outer: f64,
}

impl BumpProfile {
    pub fn new(inner: f64, outer: f64) -> Result<Self, Error> {
        if !(inner >= 0.0 && outer > inner && outer.is_finite()) {
            return Err(Error::Input(format!("bump radii must satisfy 0 <= inner < outer, got {inner}, {outer}")));
        }
        Ok(Self { inner, outer })
    }

    /// Value and derivative at `t`; the profile is even in `t`.
    pub fn eval(&self, t: f64) -> (f64, f64) {
        let r = t.abs();
        let w = self.outer - self.inner;
        let x = (r - self.inner) / w;
        let d = -smoothstep_d(x) / w;
        (1.0 - smoothstep(x), if t < 0.0 { -d } else { d })
    }

    pub fn value(&self, t: f64) -> f64 {
        self.eval(t).0
    }

    /// Largest |derivative|, attained at the midpoint.
    pub fn max_slope(&self) -> f64 {
        1.875 / (self.outer - self.inner)
    }
}

/// Value and gradient of `bump(‖v‖)`.
pub fn radial(profile: &BumpProfile, v: &[f64]) -> (f64, Vec<f64>) {
    let r = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let (b, db) = profile.eval(r);
    let grad = if r > 0.0 && db != 0.0 { v.iter().map(|x| db * x / r).collect() } else { vec![0.0; v.len()] };
    (b, grad)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plateaus_and_midpoint() {
        let b = BumpProfile::new(1.0, 2.0).unwrap();
        assert_eq!(b.eval(0.5), (1.0, 0.0));
        assert_eq!(b.eval(3.0), (0.0, 0.0));
        let (v, d) = b.eval(1.5);
        assert!((v - 0.5).abs() < 1e-15);
        assert!(d < 0.0);
        assert!((d + b.max_slope()).abs() < 1e-12);
        assert_eq!(b.eval(-1.5).0, v);
        assert!(BumpProfile::new(2.0, 1.0).is_err());
    }

    #[test]
    fn derivative_matches_differences() {
        let b = BumpProfile::new(0.3, 1.1).unwrap();
        for i in 0..200 {
            let t = i as f64 * 0.007;
            let h = 1e-6;
            let fd = (b.value(t + h) - b.value(t - h)) / (2.0 * h);
            assert!((fd - b.eval(t).1).abs() < 1e-7, "t={t}");
        }
    }

    #[test]
    fn integral_matches_quadrature() {
        let n = 20000;
        let mut acc = 0.0;
        for i in 0..n {
            let x = 1.5 * (i as f64 + 0.5) / n as f64;
            acc += smoothstep(x) * 1.5 / n as f64;
        }
        assert!((acc - smoothstep_integral(1.5)).abs() < 1e-8);
    }
}
