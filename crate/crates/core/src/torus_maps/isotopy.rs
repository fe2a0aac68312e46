//! Isotopy from a hyperbolic A on T² to a map with an inserted n-branch horseshoe.
//!
//! In eigen-coordinates c = P⁻¹(y − m)/scale around the nearest lattice point m,
//! f_t = A + scale·P·(g_t − D)(c), where g_t is the planar horseshoe isotopy.

use nalgebra::{DMatrix, Matrix2, Vector2};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::horseshoe::{DerivativeBounds, HorseshoeCertificate, HorseshoeModel, Placement};
use super::{mat_vec, real_eigenbasis, TorusMap};
use crate::homology::{eigenvalues, linear_entropy};
use crate::{Error, IntMatrix};

/// Radius of the modified disk on T² around the fixed point 0.
const DISK_RADIUS: f64 = 0.45;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IsotopyParams {
    pub a: IntMatrix,
    /// Required entropy excess over the linear map.
    pub k: f64,
    /// Upper limit on the derivative norms of the family.
    pub derivative_ceiling: f64,
}

impl IsotopyParams {
    pub fn new(a: IntMatrix, k: f64) -> Self {
        Self { a, k, derivative_ceiling: 1e3 }
    }
}

#[derive(Clone, Debug)]
pub struct IsotopyFamily {
    params: IsotopyParams,
    model: HorseshoeModel,
    basis: Matrix2<f64>,
    basis_inv: Matrix2<f64>,
    scale: f64,
    af: Vec<f64>,
    bounds: DerivativeBounds,
    certificate: HorseshoeCertificate,
}

/// Summary of the family reported alongside experiments.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IsotopySummary {
    pub branches: usize,
    pub linear_entropy: f64,
    pub required: f64,
    pub certificate: HorseshoeCertificate,
    /// max over t of ‖Df_t‖.
    pub derivative_norm: f64,
    /// max over t of ‖Df_t⁻¹‖.
    pub inverse_norm: f64,
    pub min_det: f64,
    pub scale: f64,
    pub disk_radius: f64,
}

impl IsotopyFamily {
    pub fn new(params: IsotopyParams) -> Result<Self, Error> {
        let a = &params.a;
        if a.dim() != 2 || !a.is_unimodular() {
            return Err(Error::Input("isotopy needs a unimodular 2x2 matrix".into()));
        }
        if !(params.k > 0.0) {
            return Err(Error::Input(format!("entropy excess must be positive, got {}", params.k)));
        }
        let spec = eigenvalues(a)?;
        let (lu, ls) = (spec.values[0], spec.values[1]);
        if lu.im != 0.0 || lu.re <= 1.0 || ls.re <= 0.0 || ls.re >= 1.0 {
            return Err(Error::Input("isotopy needs real eigenvalues λ_u > 1 > λ_s > 0".into()));
        }
        let h = linear_entropy(a)?;
        let required = h + params.k;
        let mut n = 2usize;
        while (n as f64).ln() <= required {
            n += 1;
        }
        let model = HorseshoeModel::new(n, lu.re, ls.re, Placement::Centered, 1.0)?;
        let af: Vec<f64> = a.to_i64().ok_or_else(|| Error::Input("entries exceed 64 bits".into()))?.iter().map(|&v| v as f64).collect();
        let p = real_eigenbasis(&DMatrix::from_row_slice(2, 2, &af), &[lu.re, ls.re])?;
        let basis = Matrix2::new(p[(0, 0)], p[(0, 1)], p[(1, 0)], p[(1, 1)]);
        let basis_inv = basis.try_inverse().ok_or_else(|| Error::Numerical("singular eigenbasis".into()))?;
        let sv = basis.singular_values();
        let cond = sv.max() / sv.min();
        let scale = DISK_RADIUS / (basis.norm() * model.support_radius());
        let mut bounds = model.derivative_bounds(160);
        // Conjugating by the eigenbasis changes norms by at most its condition number.
        bounds.norm *= cond;
        bounds.inverse_norm *= cond;
        if bounds.norm > params.derivative_ceiling || bounds.inverse_norm > params.derivative_ceiling {
            return Err(Error::Construction(format!(
                "derivative bound {:.3} exceeds the ceiling {}",
                bounds.norm.max(bounds.inverse_norm),
                params.derivative_ceiling
            )));
        }
        let certificate = model.certificate();
        Ok(Self { params, model, basis, basis_inv, scale, af, bounds, certificate })
    }

    pub fn params(&self) -> &IsotopyParams {
        &self.params
    }

    pub fn model(&self) -> &HorseshoeModel {
        &self.model
    }

    pub fn at(&self, t: f64) -> IsotopyMap {
        IsotopyMap { family: self.clone(), t: t.clamp(0.0, 1.0) }
    }

    pub fn summary(&self) -> Result<IsotopySummary, Error> {
        Ok(IsotopySummary {
            branches: self.model.branches,
            linear_entropy: linear_entropy(&self.params.a)?,
            required: linear_entropy(&self.params.a)? + self.params.k,
            certificate: self.certificate.clone(),
            derivative_norm: self.bounds.norm,
            inverse_norm: self.bounds.inverse_norm,
            min_det: self.bounds.min_det,
            scale: self.scale,
            disk_radius: DISK_RADIUS,
        })
    }

    pub fn certificate(&self) -> &HorseshoeCertificate {
        &self.certificate
    }

    fn chart(&self, y: &[f64]) -> Vector2<f64> {
        let d = Vector2::new(y[0] - y[0].round(), y[1] - y[1].round());
        self.basis_inv * d / self.scale
    }

    fn inside(&self, c: &Vector2<f64>) -> bool {
        c.norm() < self.model.support_radius()
    }

    /// Lift of f_t at `y`, together with its jacobian and t-derivative.
    pub fn eval(&self, t: f64, y: &[f64]) -> (Vec<f64>, Matrix2<f64>, Vector2<f64>) {
        let lin = mat_vec(&self.af, 2, y);
        let a = Matrix2::new(self.af[0], self.af[1], self.af[2], self.af[3]);
        let c = self.chart(y);
        if !self.inside(&c) {
            return (lin, a, Vector2::zeros());
        }
        let e = self.model.map(t, c);
        let lin_c = Vector2::new(self.model.a_u * c.x, self.model.a_s * c.y);
        let delta = self.basis * (e.value - lin_c) * self.scale;
        let jac = self.basis * e.jacobian * self.basis_inv;
        let dt = self.basis * e.dt * self.scale;
        (vec![lin[0] + delta.x, lin[1] + delta.y], jac, dt)
    }

    /// Torus point of a model point near the fixed point 0.
    pub fn embed(&self, z: Vector2<f64>) -> Vec<f64> {
        let y = self.basis * z * self.scale;
        super::project(&[y.x, y.y])
    }

    pub fn max_t_derivative(&self) -> f64 {
        self.bounds.t_derivative * self.scale * self.basis.norm()
    }
}

/// The member f_t of an [`IsotopyFamily`].
#[derive(Clone, Debug)]
pub struct IsotopyMap {
    family: IsotopyFamily,
    t: f64,
}

impl IsotopyMap {
    pub fn family(&self) -> &IsotopyFamily {
        &self.family
    }

    pub fn t(&self) -> f64 {
        self.t
    }
}

impl TorusMap for IsotopyMap {
    fn dim(&self) -> usize {
        2
    }

    fn linear_part(&self) -> &IntMatrix {
        &self.family.params.a
    }

    fn lift(&self, y: &[f64]) -> Vec<f64> {
        self.family.eval(self.t, y).0
    }

    fn jacobian(&self, y: &[f64]) -> DMatrix<f64> {
        let j = self.family.eval(self.t, y).1;
        DMatrix::from_row_slice(2, 2, &[j[(0, 0)], j[(0, 1)], j[(1, 0)], j[(1, 1)]])
    }

    fn descriptor(&self) -> Value {
        serde_json::json!({ "kind": "isotopy", "t": self.t, "params": self.family.params, "linear_part": self.family.params.a })
    }

    fn feature_scale(&self) -> f64 {
        self.family.scale
    }

    fn sample_nonlinear(&self, rng: &mut ChaCha8Rng) -> Option<Vec<f64>> {
        let r = self.family.model.support_radius();
        let z = Vector2::new(rng.random_range(-r..r), rng.random_range(-r..r)) * 0.7;
        Some(self.family.embed(z))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::torus_maps::{jacobian_fd_check, lift_equivariance_error, min_jacobian_det};

    fn family() -> IsotopyFamily {
        IsotopyFamily::new(IsotopyParams::new(IntMatrix::from_i64(&[&[2, 1], &[1, 1]]), 0.2)).unwrap()
    }

    #[test]
    fn branch_count_for_cat() {
        let f = family();
        assert_eq!(f.model().branches, 4);
        let s = f.summary().unwrap();
        assert!(s.certificate.full_shift);
        assert!(s.certificate.entropy_lower_bound > s.required);
        assert!(s.derivative_norm <= 30.0 && s.inverse_norm <= 30.0, "{s:?}");
    }

    #[test]
    fn equals_linear_outside_disk() {
        let f = family();
        for t in [0.0, 0.5, 1.0] {
            let m = f.at(t);
            for y in [[0.5, 0.5], [0.48, -0.3], [3.5, 2.49]] {
                let out = m.lift(&y);
                assert_eq!(out, vec![2.0 * y[0] + y[1], y[0] + y[1]]);
            }
        }
        // f_0 is A everywhere.
        let m = f.at(0.0);
        let y = [0.01, -0.02];
        let out = m.lift(&y);
        assert!((out[0] - (2.0 * y[0] + y[1])).abs() < 1e-15 && (out[1] - (y[0] + y[1])).abs() < 1e-15);
    }

    #[test]
    fn smooth_equivariant_invertible() {
        let f = family();
        for t in [0.3, 1.0] {
            let m = f.at(t);
            assert!(jacobian_fd_check(&m, 200, 1e-6, 5).unwrap() < 1e-5);
            assert!(lift_equivariance_error(&m, 500, 6) < 1e-10);
            assert!(min_jacobian_det(&m, 10_000, 7) > 1e-6);
        }
    }

    #[test]
    fn descriptor_round_trip() {
        let m = family().at(0.75);
        let back = crate::torus_maps::from_descriptor(&m.descriptor()).unwrap();
        for y in [[0.01, 0.02], [0.3, 0.9]] {
            assert_eq!(back.lift(&y), m.lift(&y));
        }
    }
}
