//! F(x, y) = (Bᴺx, f_{k(x)}(y)) on T² × T², with k a bump around a fixed point p of B.

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::bump::BumpProfile;
use super::isotopy::{IsotopyFamily, IsotopyParams};
use super::{mat_vec, TorusMap};
use crate::{Error, IntMatrix};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SkewParams {
    pub b: IntMatrix,
    pub power: u32,
    pub fiber: IsotopyParams,
    pub p: [f64; 2],
    pub delta: f64,
}

#[derive(Clone, Debug)]
pub struct SkewProduct {
    params: SkewParams,
    family: IsotopyFamily,
    bn: Vec<f64>,
    bump: BumpProfile,
    linear: IntMatrix,
}

impl SkewProduct {
    pub fn new(params: SkewParams) -> Result<Self, Error> {
        let b = &params.b;
        if b.dim() != 2 || !b.is_unimodular() {
            return Err(Error::Input("base matrix must be unimodular 2x2".into()));
        }
        if params.power == 0 {
            return Err(Error::Input("power must be at least 1".into()));
        }
        if !crate::homology::is_hyperbolic_action(b) {
            return Err(Error::Input("base matrix must be hyperbolic".into()));
        }
        let bi: Vec<f64> = b.to_i64().ok_or_else(|| Error::Input("entries exceed 64 bits".into()))?.iter().map(|&v| v as f64).collect();
        let bp = mat_vec(&bi, 2, &params.p);
        let off = super::torus_sup_dist(&super::project(&bp), &super::project(&params.p));
        if off > 1e-12 {
            return Err(Error::Input(format!("p = {:?} is not fixed by B (moved by {off:.3e})", params.p)));
        }
        // Distinct lifts of p are at distance ≥ 1; the δ-ball must stay well clear of them.
        if !(params.delta > 0.0 && 5.0 * params.delta < 1.0) {
            return Err(Error::Input(format!("delta = {} fails the separation check 5δ < 1", params.delta)));
        }
        let family = IsotopyFamily::new(params.fiber.clone())?;
        let bn_m = b.pow(params.power);
        let bn: Vec<f64> = bn_m.to_i64().ok_or_else(|| Error::Input("Bᴺ entries exceed 64 bits".into()))?.iter().map(|&v| v as f64).collect();
        let linear = bn_m.direct_sum(&params.fiber.a);
        let bump = BumpProfile::new(params.delta / 2.0, params.delta)?;
        Ok(Self { params, family, bn, bump, linear })
    }

    pub fn params(&self) -> &SkewParams {
        &self.params
    }

    pub fn family(&self) -> &IsotopyFamily {
        &self.family
    }

    /// Offset from p to the nearest lift of x.
    fn offset(&self, x: &[f64]) -> [f64; 2] {
        let dx = x[0] - self.params.p[0];
        let dy = x[1] - self.params.p[1];
        [dx - dx.round(), dy - dy.round()]
    }

    fn k(&self, x: &[f64]) -> (f64, [f64; 2]) {
        let off = self.offset(x);
        let (v, g) = super::bump::radial(&self.bump, &off);
        (v, [g[0], g[1]])
    }

    /// Fiber-block bounds over a sample of the δ-tube: (max ‖Y‖, max ‖Y⁻¹‖, max ‖X‖).
    pub fn block_norms(&self, samples: usize, rng: &mut ChaCha8Rng) -> (f64, f64, f64) {
        let (mut y_norm, mut y_inv, mut x_norm) = (0.0_f64, 0.0_f64, 0.0_f64);
        for _ in 0..samples {
            let p = self.sample_tube(rng);
            let j = self.jacobian(&p);
            let y = j.view((2, 2), (2, 2)).into_owned();
            let x = j.view((2, 0), (2, 2)).into_owned();
            let sv = y.singular_values();
            y_norm = y_norm.max(sv.max());
            y_inv = y_inv.max(1.0 / sv.min());
            x_norm = x_norm.max(x.singular_values().max());
        }
        (y_norm, y_inv, x_norm)
    }

    fn sample_tube(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let d = self.params.delta;
        let x = [self.params.p[0] + rng.random_range(-d..d), self.params.p[1] + rng.random_range(-d..d)];
        let r = self.family.model().support_radius() * 0.7;
        let z = nalgebra::Vector2::new(rng.random_range(-r..r), rng.random_range(-r..r));
        let y = if rng.random_bool(0.5) { self.family.embed(z) } else { vec![rng.random(), rng.random()] };
        vec![x[0], x[1], y[0], y[1]]
    }
}

impl TorusMap for SkewProduct {
    fn dim(&self) -> usize {
        4
    }

    fn linear_part(&self) -> &IntMatrix {
        &self.linear
    }

    fn lift(&self, v: &[f64]) -> Vec<f64> {
        let base = mat_vec(&self.bn, 2, &v[..2]);
        let (t, _) = self.k(&v[..2]);
        let (fib, _, _) = self.family.eval(t, &v[2..]);
        vec![base[0], base[1], fib[0], fib[1]]
    }

    /// Block lower-triangular: [[Bᴺ, 0], [∂ₜf·∇k, D_y f_t]].
    fn jacobian(&self, v: &[f64]) -> DMatrix<f64> {
        let (t, grad) = self.k(&v[..2]);
        let (_, jy, dt) = self.family.eval(t, &v[2..]);
        let mut j = DMatrix::zeros(4, 4);
        for r in 0..2 {
            for c in 0..2 {
                j[(r, c)] = self.bn[r * 2 + c];
                j[(2 + r, 2 + c)] = jy[(r, c)];
                j[(2 + r, c)] = dt[r] * grad[c];
            }
        }
        j
    }

    fn descriptor(&self) -> Value {
        serde_json::json!({ "kind": "skew_product", "params": self.params, "linear_part": self.linear })
    }

    fn feature_scale(&self) -> f64 {
        self.family.at(1.0).feature_scale().min(self.params.delta)
    }

    fn sample_nonlinear(&self, rng: &mut ChaCha8Rng) -> Option<Vec<f64>> {
        Some(self.sample_tube(rng))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::torus_maps::{jacobian_fd_check, lift_equivariance_error, min_jacobian_det};
    use rand::SeedableRng;

    fn skew() -> SkewProduct {
        let cat = IntMatrix::from_i64(&[&[2, 1], &[1, 1]]);
        SkewProduct::new(SkewParams { b: cat.clone(), power: 9, fiber: IsotopyParams::new(cat, 0.2), p: [0.0, 0.0], delta: 0.01 })
            .unwrap()
    }

    #[test]
    fn linear_part_is_block_diagonal() {
        let f = skew();
        let b9 = IntMatrix::from_i64(&[&[2, 1], &[1, 1]]).pow(9);
        assert_eq!(f.linear_part(), &b9.direct_sum(&IntMatrix::from_i64(&[&[2, 1], &[1, 1]])));
        assert!(lift_equivariance_error(&f, 1000, 1) < 1e-10);
    }

    #[test]
    fn outside_tube_is_linear() {
        let f = skew();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let lin = crate::torus_maps::LinearMap::new(f.linear_part().clone()).unwrap();
        for _ in 0..1000 {
            let v: Vec<f64> = (0..4).map(|_| rng.random::<f64>()).collect();
            let off = f.offset(&v[..2]);
            if off[0].hypot(off[1]) > 0.01 {
                assert_eq!(f.lift(&v), lin.lift(&v));
            }
        }
    }

    #[test]
    fn fiber_over_p_is_f1() {
        let f = skew();
        let f1 = f.family().at(1.0);
        for y in [[0.001, 0.002], [0.02, -0.01], [0.5, 0.5]] {
            let out = f.lift(&[0.0, 0.0, y[0], y[1]]);
            assert_eq!(&out[2..], &f1.lift(&y)[..]);
        }
    }

    #[test]
    fn jacobian_matches_differences() {
        let f = skew();
        assert!(jacobian_fd_check(&f, 400, 1e-6, 9).unwrap() < 1e-5);
        assert!(min_jacobian_det(&f, 10_000, 10) > 1e-6);
    }

    #[test]
    fn rejects_bad_parameters() {
        let cat = IntMatrix::from_i64(&[&[2, 1], &[1, 1]]);
        let base = SkewParams { b: cat.clone(), power: 9, fiber: IsotopyParams::new(cat.clone(), 0.2), p: [0.3, 0.1], delta: 0.01 };
        assert!(SkewProduct::new(base.clone()).is_err());
        assert!(SkewProduct::new(SkewParams { p: [0.0, 0.0], delta: 0.3, ..base.clone() }).is_err());
        assert!(SkewProduct::new(SkewParams { p: [0.0, 0.0], b: IntMatrix::from_i64(&[&[1, 1], &[0, 1]]), ..base }).is_err());
    }
}
