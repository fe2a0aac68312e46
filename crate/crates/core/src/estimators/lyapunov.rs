//! Lyapunov spectra by pushing an orthonormal frame along an orbit and reorthonormalizing.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::torus_maps::{TorusMap, TorusPoint};
use crate::Error;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LyapunovSpectrumEstimate {
    /// Sorted descending.
    pub exponents: Vec<f64>,
    pub orbit_length: usize,
    pub burn_in: usize,
    /// |mean over the last 10% of steps − overall mean| per exponent.
    pub residuals: Vec<f64>,
    /// Orbit average of log |det Df|.
    pub log_det_average: f64,
    pub seed: u64,
}

impl LyapunovSpectrumEstimate {
    pub fn sum(&self) -> f64 {
        self.exponents.iter().sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeasureIndex {
    pub u: usize,
    /// Some exponent lies in [−tol, tol].
    pub undecided: bool,
}

fn random_frame(d: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = DMatrix::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0));
    m.qr().q()
}

/// Accumulates log |R_ii| of successive QR steps.
struct Accumulator {
    frame: DMatrix<f64>,
    sums: Vec<f64>,
    tail: Vec<f64>,
    det_sum: f64,
    steps: usize,
    tail_steps: usize,
}

impl Accumulator {
    fn new(frame: DMatrix<f64>) -> Self {
        let d = frame.nrows();
        Self { frame, sums: vec![0.0; d], tail: vec![0.0; d], det_sum: 0.0, steps: 0, tail_steps: 0 }
    }

    fn push(&mut self, jac: &DMatrix<f64>, record: bool, in_tail: bool) -> Result<(), Error> {
        let qr = (jac * &self.frame).qr();
        let r = qr.r();
        let mut q = qr.q();
        for i in 0..r.nrows() {
            let v = r[(i, i)];
            if !v.is_finite() || v == 0.0 {
                return Err(Error::Numerical(format!("degenerate stretch {v} in QR step")));
            }
            // Keep R with a positive diagonal so the frame evolves continuously.
            if v < 0.0 {
                q.column_mut(i).neg_mut();
            }
            if record {
                self.sums[i] += v.abs().ln();
                if in_tail {
                    self.tail[i] += v.abs().ln();
                }
            }
        }
        if record {
            self.det_sum += jac.determinant().abs().ln();
            self.steps += 1;
            if in_tail {
                self.tail_steps += 1;
            }
        }
        self.frame = q;
        Ok(())
    }

    fn finish(self, orbit_length: usize, burn_in: usize, seed: u64) -> LyapunovSpectrumEstimate {
        let n = self.steps.max(1) as f64;
        let means: Vec<f64> = self.sums.iter().map(|s| s / n).collect();
        let tail_n = self.tail_steps.max(1) as f64;
        let mut pairs: Vec<(f64, f64)> = means.iter().zip(&self.tail).map(|(&m, &t)| (m, (t / tail_n - m).abs())).collect();
        pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
        LyapunovSpectrumEstimate {
            exponents: pairs.iter().map(|p| p.0).collect(),
            residuals: pairs.iter().map(|p| p.1).collect(),
            orbit_length,
            burn_in,
            log_det_average: self.det_sum / n,
            seed,
        }
    }
}

/// Spectrum along the orbit of `x0`, averaging the N steps after `burn_in` discarded ones.
/// The initial frame is a seeded random orthonormal frame.
pub fn lyapunov_qr(map: &dyn TorusMap, x0: &TorusPoint, n: usize, burn_in: usize, seed: u64) -> Result<LyapunovSpectrumEstimate, Error> {
    if n < 100 {
        return Err(Error::Input(format!("orbit length {n} below 100")));
    }
    let d = map.dim();
    if x0.dim() != d {
        return Err(Error::Input(format!("start point has dimension {}, map has {d}", x0.dim())));
    }
    let mut acc = Accumulator::new(random_frame(d, seed));
    let mut x = x0.0.clone();
    let tail_start = burn_in + n - n / 10;
    for k in 0..burn_in + n {
        let (y, jac) = map.lift_with_jacobian(&x);
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!("orbit left the numerical range at step {k}")));
        }
        acc.push(&jac, k >= burn_in, k >= tail_start)?;
        x = crate::torus_maps::project(&y);
    }
    Ok(acc.finish(n, burn_in, seed))
}

/// Spectrum of a periodic cycle: the product of `jacobians` repeated `repeats` times.
pub fn lyapunov_periodic(jacobians: &[DMatrix<f64>], repeats: usize, seed: u64) -> Result<LyapunovSpectrumEstimate, Error> {
    let Some(first) = jacobians.first() else {
        return Err(Error::Input("empty cycle".into()));
    };
    if repeats == 0 {
        return Err(Error::Input("repeats must be positive".into()));
    }
    let mut acc = Accumulator::new(random_frame(first.nrows(), seed));
    let total = jacobians.len() * repeats;
    let burn = jacobians.len() * (repeats / 10);
    let tail_start = total - jacobians.len() * (repeats / 10).max(1);
    for k in 0..total {
        acc.push(&jacobians[k % jacobians.len()], k >= burn, k >= tail_start)?;
    }
    Ok(acc.finish(total - burn, burn, seed))
}

/// Number of exponents above `tol`, with multiplicity.
pub fn measure_index(est: &LyapunovSpectrumEstimate, tol: f64) -> MeasureIndex {
    MeasureIndex {
        u: est.exponents.iter().filter(|&&l| l > tol).count(),
        undecided: est.exponents.iter().any(|l| l.abs() <= tol),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::torus_maps::LinearMap;
    use crate::IntMatrix;

    #[test]
    fn cat_exponents() {
        let cat = LinearMap::new(IntMatrix::from_i64(&[&[2, 1], &[1, 1]])).unwrap();
        let e = lyapunov_qr(&cat, &TorusPoint::new(&[0.1, 0.7]), 10_000, 100, 1).unwrap();
        let l = ((3.0 + 5f64.sqrt()) / 2.0).ln();
        assert!((e.exponents[0] - l).abs() < 1e-6 && (e.exponents[1] + l).abs() < 1e-6);
        assert!(e.sum().abs() < 1e-6 && e.log_det_average.abs() < 1e-12);
        assert_eq!(measure_index(&e, 1e-3), MeasureIndex { u: 1, undecided: false });
    }

    #[test]
    fn identity_exponents_are_zero() {
        let id = LinearMap::new(IntMatrix::identity(3)).unwrap();
        let e = lyapunov_qr(&id, &TorusPoint::new(&[0.1, 0.2, 0.3]), 200, 0, 4).unwrap();
        assert!(e.exponents.iter().all(|&l| l.abs() < 1e-15), "{:?}", e.exponents);
        assert_eq!(measure_index(&e, 1e-3), MeasureIndex { u: 0, undecided: true });
    }

    #[test]
    fn periodic_product() {
        let j = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 1.0]);
        let e = lyapunov_periodic(&[j.clone(), j], 500, 2).unwrap();
        let l = ((3.0 + 5f64.sqrt()) / 2.0).ln();
        assert!((e.exponents[0] - l).abs() < 1e-9);
    }

    #[test]
    fn rejects_short_orbits() {
        let id = LinearMap::new(IntMatrix::identity(2)).unwrap();
        assert!(lyapunov_qr(&id, &TorusPoint::new(&[0.0, 0.0]), 99, 0, 1).is_err());
    }
}
