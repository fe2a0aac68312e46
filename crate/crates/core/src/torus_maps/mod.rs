//! Evaluable diffeomorphisms of Tᵈ: linear automorphisms, the planar horseshoe
//! isotopy, the skew product over an Anosov base and the derived-from-Anosov map on T⁴.

pub mod bump;
mod derived;
pub mod horseshoe;
mod isotopy;
pub mod profile;
pub mod quartic;
mod skew;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;

pub use bump::BumpProfile;
pub use derived::{DerivedMap, DerivedParams, DEFAULT_QUARTIC};
pub use horseshoe::{HorseshoeCertificate, HorseshoeModel, Placement};
pub use isotopy::{IsotopyFamily, IsotopyMap, IsotopyParams};
pub use skew::{SkewParams, SkewProduct};

use crate::{Error, IntMatrix};

/// A point of Tᵈ with coordinates in [0, 1).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TorusPoint(pub Vec<f64>);

impl TorusPoint {
    pub fn new(coords: &[f64]) -> Self {
        TorusPoint(project(coords))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

/// Reduce a lift point mod 1 into [0, 1)ᵈ.
pub fn project(y: &[f64]) -> Vec<f64> {
    y.iter()
        .map(|&v| {
            let r = v - v.floor();
            if r >= 1.0 {
                0.0
            } else {
                r
            }
        })
        .collect()
}

/// Distance on the circle R/Z.
pub fn circle_dist(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(1.0);
    d.min(1.0 - d)
}

/// Sup-metric on Tᵈ.
pub fn torus_sup_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| circle_dist(*x, *y)).fold(0.0, f64::max)
}

pub trait TorusMap: Send + Sync {
    fn dim(&self) -> usize;

    /// The integer matrix A with lift(y + m) = lift(y) + A m.
    fn linear_part(&self) -> &IntMatrix;

    fn lift(&self, y: &[f64]) -> Vec<f64>;

    /// Jacobian of the lift at `y` (periodic in `y`).
    fn jacobian(&self, y: &[f64]) -> DMatrix<f64>;

    fn lift_with_jacobian(&self, y: &[f64]) -> (Vec<f64>, DMatrix<f64>) {
        (self.lift(y), self.jacobian(y))
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        project(&self.lift(x))
    }

    /// Construction name and parameters; [`from_descriptor`] rebuilds the map.
    fn descriptor(&self) -> Value;

    /// Length scale of the finest features of the map, used to size difference steps.
    fn feature_scale(&self) -> f64 {
        1.0
    }

    /// A point in the region where the map is not linear, if there is one.
    fn sample_nonlinear(&self, _rng: &mut ChaCha8Rng) -> Option<Vec<f64>> {
        None
    }
}

/// x ↦ A x mod 1.
#[derive(Clone, Debug)]
pub struct LinearMap {
    a: IntMatrix,
    af: Vec<f64>,
}

impl LinearMap {
    pub fn new(a: IntMatrix) -> Result<Self, Error> {
        if !a.is_unimodular() {
            return Err(Error::NotUnimodular(a.det().to_string()));
        }
        let af = a.to_i64().ok_or_else(|| Error::Input("entries exceed 64 bits".into()))?.iter().map(|&v| v as f64).collect();
        Ok(Self { a, af })
    }

    pub fn matrix_f64(&self) -> DMatrix<f64> {
        let d = self.a.dim();
        DMatrix::from_row_slice(d, d, &self.af)
    }
}

pub fn linear_automorphism(a: IntMatrix) -> Result<LinearMap, Error> {
    LinearMap::new(a)
}

pub(crate) fn mat_vec(af: &[f64], d: usize, y: &[f64]) -> Vec<f64> {
    (0..d).map(|i| (0..d).map(|j| af[i * d + j] * y[j]).sum()).collect()
}

impl TorusMap for LinearMap {
    fn dim(&self) -> usize {
        self.a.dim()
    }

    fn linear_part(&self) -> &IntMatrix {
        &self.a
    }

    fn lift(&self, y: &[f64]) -> Vec<f64> {
        mat_vec(&self.af, self.a.dim(), y)
    }

    fn jacobian(&self, _y: &[f64]) -> DMatrix<f64> {
        self.matrix_f64()
    }

    fn descriptor(&self) -> Value {
        serde_json::json!({ "kind": "linear", "linear_part": self.a })
    }
}

/// Rebuild a map from its descriptor.
pub fn from_descriptor(v: &Value) -> Result<Box<dyn TorusMap>, Error> {
    let kind = v.get("kind").and_then(Value::as_str).ok_or_else(|| Error::Input("descriptor without kind".into()))?;
    let bad = |e: serde_json::Error| Error::Input(format!("descriptor: {e}"));
    match kind {
        "linear" => {
            let a: IntMatrix = serde_json::from_value(v["linear_part"].clone()).map_err(bad)?;
            Ok(Box::new(LinearMap::new(a)?))
        }
        "isotopy" => {
            let p: IsotopyParams = serde_json::from_value(v["params"].clone()).map_err(bad)?;
            let t = v["t"].as_f64().ok_or_else(|| Error::Input("isotopy descriptor without t".into()))?;
            Ok(Box::new(IsotopyFamily::new(p)?.at(t)))
        }
        "skew_product" => {
            let p: SkewParams = serde_json::from_value(v["params"].clone()).map_err(bad)?;
            Ok(Box::new(SkewProduct::new(p)?))
        }
        "derived_from_anosov" => {
            let p: DerivedParams = serde_json::from_value(v["params"].clone()).map_err(bad)?;
            Ok(Box::new(DerivedMap::new(p)?))
        }
        other => Err(Error::Input(format!("unknown map kind {other:?}"))),
    }
}

/// Max |analytic jacobian − centred difference of the lift| over sampled points, each entry
/// measured against max(1, largest entry of its jacobian row).
///
/// Points are reduced to the cell of their nearest lattice point, which leaves the jacobian
/// unchanged. The difference step is `step` times the larger of the map's feature scale and
/// 1% of the reduced point's size, so rounding in the lift stays below truncation error.
/// Half of the samples are drawn from the nonlinear region when the map exposes one.
pub fn jacobian_fd_check(map: &dyn TorusMap, samples: usize, step: f64, seed: u64) -> Result<f64, Error> {
    if !(step > 1e-8 && step < 1e-3) {
        return Err(Error::Input(format!("difference step {step} outside (1e-8, 1e-3)")));
    }
    let d = map.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for i in 0..samples {
        let y: Vec<f64> = match (i % 2, map.sample_nonlinear(&mut rng)) {
            (0, Some(p)) => p,
            _ => (0..d).map(|_| rng.random::<f64>()).collect(),
        }
        .iter()
        .map(|v| v - v.round())
        .collect();
        let size = y.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let h = step * map.feature_scale().max(0.01 * size);
        let jac = map.jacobian(&y);
        let row_scale: Vec<f64> = (0..d).map(|r| jac.row(r).amax().max(1.0)).collect();
        for c in 0..d {
            let mut yp = y.clone();
            let mut ym = y.clone();
            yp[c] += h;
            ym[c] -= h;
            let fp = map.lift(&yp);
            let fm = map.lift(&ym);
            for r in 0..d {
                let fd = (fp[r] - fm[r]) / (2.0 * h);
                worst = worst.max((fd - jac[(r, c)]).abs() / row_scale[r]);
            }
        }
    }
    Ok(worst)
}

/// Max ‖lift(y + m) − lift(y) − A m‖ over random y and integer m with entries in [−3, 3].
pub fn lift_equivariance_error(map: &dyn TorusMap, samples: usize, seed: u64) -> f64 {
    let d = map.dim();
    let a = map.linear_part().to_i64().expect("small linear part");
    let af: Vec<f64> = a.iter().map(|&v| v as f64).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for i in 0..samples {
        let y: Vec<f64> = match (i % 2, map.sample_nonlinear(&mut rng)) {
            (0, Some(p)) => p,
            _ => (0..d).map(|_| rng.random::<f64>()).collect(),
        };
        let m: Vec<f64> = (0..d).map(|_| rng.random_range(-3i32..=3) as f64).collect();
        let shifted: Vec<f64> = y.iter().zip(&m).map(|(a, b)| a + b).collect();
        let f0 = map.lift(&y);
        let f1 = map.lift(&shifted);
        let am = mat_vec(&af, d, &m);
        for k in 0..d {
            worst = worst.max((f1[k] - f0[k] - am[k]).abs());
        }
    }
    worst
}

/// Smallest |det jacobian| over random points (half from the nonlinear region).
pub fn min_jacobian_det(map: &dyn TorusMap, samples: usize, seed: u64) -> f64 {
    let d = map.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = f64::INFINITY;
    for i in 0..samples {
        let y: Vec<f64> = match (i % 2, map.sample_nonlinear(&mut rng)) {
            (0, Some(p)) => p,
            _ => (0..d).map(|_| rng.random::<f64>()).collect(),
        };
        worst = worst.min(map.jacobian(&y).determinant().abs());
    }
    worst
}

/// Unit eigenvectors of a matrix with real simple spectrum, in the order of `values`.
pub(crate) fn real_eigenbasis(a: &DMatrix<f64>, values: &[f64]) -> Result<DMatrix<f64>, Error> {
    let d = a.nrows();
    let mut p = DMatrix::zeros(d, d);
    for (k, &lam) in values.iter().enumerate() {
        let m = a - DMatrix::identity(d, d) * lam;
        let svd = m.svd(false, true);
        let vt = svd.v_t.ok_or_else(|| Error::Numerical("svd failed".into()))?;
        let (idx, smin) = svd.singular_values.iter().enumerate().fold((0, f64::INFINITY), |acc, (i, &s)| if s < acc.1 { (i, s) } else { acc });
        let smax = svd.singular_values.max();
        if smin > 1e-9 * smax.max(1.0) {
            return Err(Error::Defective(format!("no null vector for eigenvalue {lam} (sigma_min {smin:.3e})")));
        }
        let mut v: Vec<f64> = vt.row(idx).iter().copied().collect();
        let lead = v.iter().copied().fold(0.0_f64, |acc, x| if x.abs() > acc.abs() { x } else { acc });
        if lead < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        for i in 0..d {
            p[(i, k)] = v[i] / n;
        }
    }
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cat() -> LinearMap {
        LinearMap::new(IntMatrix::from_i64(&[&[2, 1], &[1, 1]])).unwrap()
    }

    #[test]
    fn linear_examples() {
        let f = cat();
        assert_eq!(f.apply(&[0.0, 0.0]), vec![0.0, 0.0]);
        assert_eq!(f.apply(&[0.5, 0.5]), vec![0.5, 0.0]);
        assert_eq!(f.jacobian(&[0.3, 0.1]), DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 1.0]));
        assert!(LinearMap::new(IntMatrix::from_i64(&[&[2, 0], &[0, 1]])).is_err());
    }

    #[test]
    fn linear_checks() {
        let f = cat();
        assert!(jacobian_fd_check(&f, 100, 1e-6, 1).unwrap() < 1e-9);
        assert!(lift_equivariance_error(&f, 1000, 2) < 1e-10);
        assert!(jacobian_fd_check(&f, 1, 1.0, 1).is_err());
    }

    #[test]
    fn projection_is_idempotent() {
        for v in [-1e-17, -0.3, 0.0, 0.999_999_999_999_999_9, 7.25, -3.0] {
            let p = project(&[v]);
            assert!((0.0..1.0).contains(&p[0]), "{v} -> {p:?}");
            assert_eq!(project(&p), p);
        }
    }

    #[test]
    fn circle_distance() {
        assert!((circle_dist(0.05, 0.95) - 0.1).abs() < 1e-15);
        assert!((circle_dist(0.2, 0.5) - 0.3).abs() < 1e-15);
        assert_eq!(torus_sup_dist(&[0.0, 0.1], &[0.0, 0.1]), 0.0);
    }

    #[test]
    fn descriptor_round_trip_linear() {
        let f = cat();
        let g = from_descriptor(&f.descriptor()).unwrap();
        assert_eq!(g.linear_part(), f.linear_part());
        assert!(from_descriptor(&serde_json::json!({"kind": "nope"})).is_err());
    }
}
