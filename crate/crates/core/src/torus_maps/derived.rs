//! Derived-from-Anosov map on T⁴ with a horseshoe pasted into the center directions.
//!
//! Work in the eigen-chart c = P⁻¹(y − m)/scale of A4 = P Λ P⁻¹, λ₁ < λ₂ < λ₃ < 1 < λ₄.
//! The chart map is F = Λ ∘ Ψ₄ ∘ Ψ₁ ∘ Ψc where
//!
//! - Ψc applies the horseshoe core T_t∘S_t to (u, s) = (c₃, c₂) with t = χ(‖(c₁/κ, c₄)‖),
//! - Ψ₁ replaces c₁ by a rate profile R₁ with slope λ̂₁/λ₁ near 0, cut off in ‖(c₂, c₃, c₄)‖,
//! - Ψ₄ does the same for c₄ with slope λ̂₄/λ₄, cut off in ‖(c₁, c₂, c₃)‖.
//!
//! Each modification moves one coordinate along a 1D profile, so the leak of its cutoff
//! gradient into the other rows is bounded by the profile displacement over the cutoff width.

use nalgebra::{DMatrix, Matrix4, Vector2, Vector4};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::bump::BumpProfile;
use super::horseshoe::{HorseshoeCertificate, HorseshoeModel, Placement};
use super::profile::RateProfile;
use super::{mat_vec, quartic, real_eigenbasis, TorusMap};
use crate::homology::eigenvalues;
use crate::{Error, IntMatrix};

/// Chart radius of the modified ball, as a fraction of the unit cell.
const CHART_FRACTION: f64 = 0.25;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DerivedParams {
    pub a4: IntMatrix,
    pub branches: usize,
    pub lap_width: f64,
    /// χ ≡ 1 below this radius.
    pub chi_inner: f64,
    /// χ ≡ 0 above this radius.
    pub chi_outer: f64,
    /// Stretch of the c₁ axis inside χ.
    pub kappa: f64,
    /// Cone aperture the blends are sized for.
    pub gamma: f64,
    /// Plateau slope of the c₄ profile (< 1).
    pub m4: f64,
    /// Plateau slope of the c₁ profile (> 1).
    pub m1: f64,
    /// λ̂₄ = margin·‖Dg‖ and λ̂₁ = 1/(margin·‖Dg⁻¹‖) unless `strong_rates` is set.
    pub rate_margin: f64,
    /// Explicit (λ̂₁, λ̂₄).
    pub strong_rates: Option<[f64; 2]>,
}

impl Default for DerivedParams {
    fn default() -> Self {
        Self {
            a4: quartic::companion(DEFAULT_QUARTIC),
            branches: 12,
            lap_width: 1.0,
            chi_inner: 10.0,
            chi_outer: 110.0,
            kappa: 2e4,
            gamma: 0.1,
            m4: 0.5,
            m1: 2.0,
            rate_margin: 3.0,
            strong_rates: None,
        }
    }
}

/// x⁴ − 13x³ + 18x² − 8x + 1, the layout-valid quartic with smallest λ₄ for |coeffs| ≤ 25.
pub const DEFAULT_QUARTIC: [i64; 4] = [-13, 18, -8, 1];

/// Every derived constant of a [`DerivedMap`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DerivedConstants {
    /// λ₁ < λ₂ < λ₃ < λ₄.
    pub eigenvalues: [f64; 4],
    pub strong_rates: [f64; 2],
    /// max ‖Dg_t‖ and max ‖Dg_t⁻¹‖ of the planar model.
    pub model_norm: f64,
    pub model_inverse_norm: f64,
    pub rate_profile_1: RateProfile,
    pub rate_profile_4: RateProfile,
    pub cutoff_1: BumpProfile,
    pub cutoff_4: BumpProfile,
    pub chi: BumpProfile,
    /// F = Λ outside this chart radius.
    pub support_radius: f64,
    pub scale: f64,
    pub basis_condition: f64,
}

#[derive(Clone, Debug)]
pub struct DerivedMap {
    params: DerivedParams,
    model: HorseshoeModel,
    certificate: HorseshoeCertificate,
    consts: DerivedConstants,
    lam: Vector4<f64>,
    basis: Matrix4<f64>,
    basis_inv: Matrix4<f64>,
    af: Vec<f64>,
}

impl DerivedMap {
    pub fn new(params: DerivedParams) -> Result<Self, Error> {
        let a = &params.a4;
        if a.dim() != 4 || !a.is_unimodular() {
            return Err(Error::Input("A4 must be a unimodular 4x4 matrix".into()));
        }
        let spec = eigenvalues(a)?;
        if spec.values.iter().any(|z| z.im != 0.0 || z.re <= 0.0) {
            return Err(Error::Input("A4 must have positive real eigenvalues".into()));
        }
        let mut l: Vec<f64> = spec.values.iter().map(|z| z.re).collect();
        l.sort_by(f64::total_cmp);
        let sep = 1e-9;
        if !(l[1] - l[0] > sep && l[2] - l[1] > sep && l[2] < 1.0 - sep && l[3] > 1.0 + sep) {
            return Err(Error::Input(format!("A4 needs λ₁ < λ₂ < λ₃ < 1 < λ₄, got {l:?}")));
        }
        if (params.branches as f64).ln() <= l[3].ln() {
            return Err(Error::Input(format!(
                "log n = {:.4} does not exceed log λ₄ = {:.4}",
                (params.branches as f64).ln(),
                l[3].ln()
            )));
        }
        if !(params.kappa >= 1.0 && params.gamma > 0.0 && params.gamma < 1.0 && params.m4 < 1.0 && params.m1 > 1.0) {
            return Err(Error::Input("need kappa >= 1, 0 < gamma < 1, m4 < 1 < m1".into()));
        }
        let model = HorseshoeModel::new(params.branches, l[2], l[1], Placement::Offset, params.lap_width)?;
        let bounds = model.derivative_bounds(160);
        let k = bounds.norm.max(bounds.inverse_norm);
        let [lh1, lh4] = params
            .strong_rates
            .unwrap_or([1.0 / (params.rate_margin * bounds.inverse_norm), params.rate_margin * bounds.norm]);
        if !(lh1 > 0.0 && lh1 < 1.0 / k && lh4 > k) {
            return Err(Error::Construction(format!(
                "strong rates ({lh1:.4e}, {lh4:.4}) must satisfy λ̂₁ < 1/K and λ̂₄ > K with K = {k:.4}"
            )));
        }
        let chi = BumpProfile::new(params.chi_inner, params.chi_outer)?;
        let a4 = 1.02 * params.chi_outer;
        let p4 = RateProfile::new(lh4 / l[3], a4, a4, params.m4)?;
        let a1 = params.kappa * a4;
        let p1 = RateProfile::new(lh1 / l[0], a1, a1, params.m1)?;
        // Largest |(c₂, c₃)| after the core step.
        let rs = model.r2 + model.amp;
        let leak = 0.05 * params.gamma * params.m4;
        let in4 = p1.b.hypot(rs) * 1.05;
        let cutoff_4 = BumpProfile::new(in4, in4 + 1.875 * p4.max_displacement() / leak)?;
        let in1 = rs.hypot(p4.b) * 1.05;
        let cutoff_1 = BumpProfile::new(in1, in1 + 1.875 * p1.max_displacement() * l[0] / (leak * l[3]))?;
        let support_radius = 2.0 * cutoff_4.outer.max(cutoff_1.outer);

        let af: Vec<f64> = a.to_i64().ok_or_else(|| Error::Input("entries exceed 64 bits".into()))?.iter().map(|&v| v as f64).collect();
        let p = real_eigenbasis(&DMatrix::from_row_slice(4, 4, &af), &l)?;
        let basis = Matrix4::from_iterator(p.iter().copied());
        let basis_inv = basis.try_inverse().ok_or_else(|| Error::Numerical("singular eigenbasis".into()))?;
        let scale = CHART_FRACTION / (basis.norm() * support_radius);
        let consts = DerivedConstants {
            eigenvalues: [l[0], l[1], l[2], l[3]],
            strong_rates: [lh1, lh4],
            model_norm: bounds.norm,
            model_inverse_norm: bounds.inverse_norm,
            rate_profile_1: p1,
            rate_profile_4: p4,
            cutoff_1,
            cutoff_4,
            chi,
            support_radius,
            scale,
            basis_condition: basis.norm() * basis_inv.norm(),
        };
        let certificate = model.certificate();
        Ok(Self {
            params,
            model,
            certificate,
            consts,
            lam: Vector4::new(l[0], l[1], l[2], l[3]),
            basis,
            basis_inv,
            af,
        })
    }

    pub fn params(&self) -> &DerivedParams {
        &self.params
    }

    pub fn constants(&self) -> &DerivedConstants {
        &self.consts
    }

    pub fn model(&self) -> &HorseshoeModel {
        &self.model
    }

    pub fn certificate(&self) -> &HorseshoeCertificate {
        &self.certificate
    }

    /// Columns are unit eigenvectors for λ₁, …, λ₄.
    pub fn basis(&self) -> DMatrix<f64> {
        DMatrix::from_iterator(4, 4, self.basis.iter().copied())
    }

    /// F and DF in chart coordinates.
    pub fn chart_map(&self, c: &Vector4<f64>) -> (Vector4<f64>, Matrix4<f64>) {
        let (c1, j1) = self.core_step(c);
        let (c2, j2) = blend(&c1, 0, &self.consts.rate_profile_1, &self.consts.cutoff_1);
        let (c3, j3) = blend(&c2, 3, &self.consts.rate_profile_4, &self.consts.cutoff_4);
        let l = Matrix4::from_diagonal(&self.lam);
        (l * c3, l * j3 * j2 * j1)
    }

    fn core_step(&self, c: &Vector4<f64>) -> (Vector4<f64>, Matrix4<f64>) {
        let k = self.params.kappa;
        let xn = (c[0] / k).hypot(c[3]);
        let (t, dt) = self.consts.chi.eval(xn);
        if t == 0.0 && dt == 0.0 {
            return (*c, Matrix4::identity());
        }
        let e = self.model.core(t, Vector2::new(c[2], c[1]));
        let out = Vector4::new(c[0], e.value.y, e.value.x, c[3]);
        let mut j = Matrix4::identity();
        j[(1, 1)] = e.jacobian[(1, 1)];
        j[(1, 2)] = e.jacobian[(1, 0)];
        j[(2, 1)] = e.jacobian[(0, 1)];
        j[(2, 2)] = e.jacobian[(0, 0)];
        if xn > 0.0 {
            let g0 = dt * c[0] / (k * k * xn);
            let g3 = dt * c[3] / xn;
            j[(1, 0)] += e.dt.y * g0;
            j[(1, 3)] += e.dt.y * g3;
            j[(2, 0)] += e.dt.x * g0;
            j[(2, 3)] += e.dt.x * g3;
        }
        (out, j)
    }

    /// Chart coordinates of a lift point, relative to its nearest lattice point.
    pub fn chart(&self, y: &[f64]) -> Vector4<f64> {
        let d = Vector4::new(y[0] - y[0].round(), y[1] - y[1].round(), y[2] - y[2].round(), y[3] - y[3].round());
        self.basis_inv * d / self.consts.scale
    }

    /// Lift point near 0 with chart coordinates `c` (not reduced mod 1).
    pub fn embed(&self, c: &Vector4<f64>) -> Vec<f64> {
        let y = self.basis * c * self.consts.scale;
        vec![y[0], y[1], y[2], y[3]]
    }

    /// Chart point of the horseshoe periodic orbit with itinerary `word`, on c₁ = c₄ = 0.
    pub fn horseshoe_orbit(&self, word: &[usize]) -> Result<Vec<Vector4<f64>>, Error> {
        Ok(self.model.periodic_orbit(word)?.iter().map(|z| Vector4::new(0.0, z.y, z.x, 0.0)).collect())
    }

    /// Chart points spread over the core, the χ transition and both cutoff shells.
    pub fn sample_chart(&self, rng: &mut ChaCha8Rng, i: usize) -> Vector4<f64> {
        let k = &self.consts;
        let m = &self.model;
        let (lo, hi) = m.u_range();
        let box_sample = |rng: &mut ChaCha8Rng, s: [f64; 4]| Vector4::from_fn(|j, _| rng.random_range(-1.0..1.0) * s[j]);
        match i % 5 {
            0 => box_sample(rng, [self.params.kappa * k.chi.outer * 1.2, m.r2 * 1.2, m.r2 * 1.2, k.chi.outer * 1.2]),
            1 => box_sample(rng, [k.rate_profile_1.b * 1.1, m.r2 * 1.2, m.r2 * 1.2, k.rate_profile_4.b * 1.1]),
            2 => {
                let o = k.cutoff_1.outer.max(k.cutoff_4.outer);
                box_sample(rng, [o, o, o, k.rate_profile_4.b * 1.1])
            }
            3 => box_sample(rng, [k.rate_profile_1.b * 1.1, m.r2, m.r2, k.chi.outer * 1.1]),
            _ => {
                let f = [0.01, 1.0, 1.5][rng.random_range(0..3)];
                Vector4::new(
                    rng.random_range(-1.0..1.0) * self.params.kappa * k.chi.inner * f,
                    rng.random_range(-1.5..1.5) * m.r_s,
                    rng.random_range(lo - 2.0..hi + 2.0),
                    rng.random_range(-1.0..1.0) * k.chi.inner * f,
                )
            }
        }
    }
}

/// Ψ: c_i ↦ c_i + σ(‖c_others‖)·(R(c_i) − c_i).
fn blend(c: &Vector4<f64>, i: usize, prof: &RateProfile, cutoff: &BumpProfile) -> (Vector4<f64>, Matrix4<f64>) {
    let r = (0..4).filter(|&j| j != i).map(|j| c[j] * c[j]).sum::<f64>().sqrt();
    let (sg, dsg) = cutoff.eval(r);
    if sg == 0.0 && dsg == 0.0 {
        return (*c, Matrix4::identity());
    }
    let rx = prof.eval(c[i]);
    let mut out = *c;
    out[i] = c[i] + sg * (rx - c[i]);
    let mut j = Matrix4::identity();
    j[(i, i)] = 1.0 + sg * (prof.slope(c[i]) - 1.0);
    if r > 0.0 {
        for o in (0..4).filter(|&o| o != i) {
            j[(i, o)] = dsg * c[o] / r * (rx - c[i]);
        }
    }
    (out, j)
}

impl TorusMap for DerivedMap {
    fn dim(&self) -> usize {
        4
    }

    fn linear_part(&self) -> &IntMatrix {
        &self.params.a4
    }

    fn lift(&self, y: &[f64]) -> Vec<f64> {
        let m: Vec<f64> = y.iter().map(|v| v.round()).collect();
        let d: Vec<f64> = y.iter().zip(&m).map(|(a, b)| a - b).collect();
        let am = mat_vec(&self.af, 4, &m);
        let mut ad = mat_vec(&self.af, 4, &d);
        let c = self.chart(y);
        if c.norm() < self.consts.support_radius {
            let (fc, _) = self.chart_map(&c);
            let delta = self.basis * (fc - self.lam.component_mul(&c)) * self.consts.scale;
            for k in 0..4 {
                ad[k] += delta[k];
            }
        }
        (0..4).map(|k| am[k] + ad[k]).collect()
    }

    fn jacobian(&self, y: &[f64]) -> DMatrix<f64> {
        let c = self.chart(y);
        if c.norm() >= self.consts.support_radius {
            return DMatrix::from_row_slice(4, 4, &self.af);
        }
        let j = self.basis * self.chart_map(&c).1 * self.basis_inv;
        DMatrix::from_iterator(4, 4, j.iter().copied())
    }

    fn descriptor(&self) -> Value {
        serde_json::json!({
            "kind": "derived_from_anosov",
            "params": self.params,
            "constants": self.consts,
            "linear_part": self.params.a4,
        })
    }

    fn feature_scale(&self) -> f64 {
        self.consts.scale * self.params.lap_width
    }

    /// Points of the horseshoe core and the χ transition in c₄, close enough to the lattice
    /// point that differences of the lift resolve the lap structure.
    fn sample_nonlinear(&self, rng: &mut ChaCha8Rng) -> Option<Vec<f64>> {
        let r = self.model.r2;
        let (lo, hi) = self.model.u_range();
        let c = if rng.random_bool(0.5) {
            Vector4::new(
                rng.random_range(-r..r),
                rng.random_range(-1.5..1.5) * self.model.r_s,
                rng.random_range(lo - 2.0..hi + 2.0),
                rng.random_range(-r..r),
            )
        } else {
            Vector4::from_fn(|_, _| rng.random_range(-r..r))
        };
        Some(self.embed(&c))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::torus_maps::{jacobian_fd_check, lift_equivariance_error, min_jacobian_det, LinearMap};
    use rand::SeedableRng;
    use std::sync::OnceLock;

    fn map() -> &'static DerivedMap {
        static M: OnceLock<DerivedMap> = OnceLock::new();
        M.get_or_init(|| DerivedMap::new(DerivedParams::default()).unwrap())
    }

    #[test]
    fn basis_diagonalises_a4() {
        let f = map();
        let a = Matrix4::from_row_slice(&f.af);
        let l = Matrix4::from_diagonal(&f.lam);
        assert!((a * f.basis - f.basis * l).norm() < 1e-9);
        let [l1, l2, l3, l4] = f.constants().eigenvalues;
        assert!((l1 - 0.20783276).abs() < 1e-7 && (l2 - 0.5963282).abs() < 1e-7);
        assert!((l3 - 0.7019973).abs() < 1e-7 && (l4 - 11.49384174).abs() < 1e-7);
    }

    #[test]
    fn strong_rates_dominate_model() {
        let k = map().constants();
        let big = k.model_norm.max(k.model_inverse_norm);
        assert!(k.strong_rates[0] < 1.0 / big && k.strong_rates[1] > big);
        assert!(map().certificate().full_shift);
        assert!(map().certificate().entropy_lower_bound > k.eigenvalues[3].ln());
    }

    #[test]
    fn chart_jacobian_matches_differences_at_every_scale() {
        let f = map();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for i in 0..400 {
            let c = f.sample_chart(&mut rng, i);
            let (_, j) = f.chart_map(&c);
            for col in 0..4 {
                // Relative step per coordinate: features scale with the coordinate magnitude.
                let h = 1e-6 * c[col].abs().max(1.0);
                let mut e = Vector4::zeros();
                e[col] = h;
                let (fp, fm) = (f.chart_map(&(c + e)).0, f.chart_map(&(c - e)).0);
                let fd = (fp - fm) / (2.0 * h);
                for row in 0..4 {
                    let err = (fd[row] - j[(row, col)]).abs();
                    let rounding = 4.0 * f64::EPSILON * fp[row].abs().max(fm[row].abs()) / h;
                    let tol = 1e-5 * (1.0 + j.column(col).amax()) + rounding;
                    assert!(err < tol, "c={c:?} ({row},{col}) fd={} an={}", fd[row], j[(row, col)]);
                }
            }
        }
    }

    #[test]
    fn torus_checks() {
        let f = map();
        assert!(jacobian_fd_check(f, 400, 1e-6, 11).unwrap() < 1e-5);
        assert!(lift_equivariance_error(f, 1000, 12) < 1e-10);
        assert!(min_jacobian_det(f, 10_000, 13) > 1e-6);
    }

    #[test]
    fn linear_outside_chart_ball() {
        let f = map();
        let lin = LinearMap::new(f.params.a4.clone()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..2000 {
            let y: Vec<f64> = (0..4).map(|_| rng.random::<f64>()).collect();
            if f.chart(&y).norm() >= f.constants().support_radius {
                let (a, b) = (f.lift(&y), lin.lift(&y));
                assert!(a.iter().zip(&b).all(|(x, z)| (x - z).abs() < 1e-12));
            }
        }
        // Just outside the support in each chart direction.
        for k in 0..4 {
            let mut c = Vector4::zeros();
            c[k] = f.constants().support_radius * 1.01;
            let y = f.embed(&c);
            let (a, b) = (f.lift(&y), lin.lift(&y));
            assert!(a.iter().zip(&b).all(|(x, z)| (x - z).abs() < 1e-15));
        }
    }

    #[test]
    fn chart_map_is_linear_at_the_support_edge() {
        let f = map();
        let r = f.constants().support_radius / 2.0;
        for c in [Vector4::new(r, 0.0, 0.0, 0.0), Vector4::new(0.0, r, 0.0, 0.0), Vector4::new(0.0, 0.0, 0.0, r)] {
            let (fc, j) = f.chart_map(&c);
            assert_eq!(fc, f.lam.component_mul(&c));
            assert_eq!(j, Matrix4::from_diagonal(&f.lam));
        }
    }

    #[test]
    fn horseshoe_orbits_are_periodic_in_the_chart() {
        let f = map();
        for word in [vec![0], vec![3, 7], vec![1, 11, 5]] {
            let orbit = f.horseshoe_orbit(&word).unwrap();
            for k in 0..orbit.len() {
                let img = f.chart_map(&orbit[k]).0;
                assert!((img - orbit[(k + 1) % orbit.len()]).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn origin_rates_are_strengthened() {
        let f = map();
        let (_, j) = f.chart_map(&Vector4::zeros());
        let k = f.constants();
        assert!((j[(0, 0)] - k.strong_rates[0]).abs() < 1e-12);
        assert!((j[(3, 3)] - k.strong_rates[1]).abs() < 1e-9);
    }

    #[test]
    fn rejects_small_shift_and_weak_rates() {
        assert!(DerivedMap::new(DerivedParams { branches: 11, ..Default::default() }).is_err());
        assert!(DerivedMap::new(DerivedParams { strong_rates: Some([0.1, 12.0]), ..Default::default() }).is_err());
        let cat2 = IntMatrix::from_i64(&[&[2, 1], &[1, 1]]).direct_sum(&IntMatrix::from_i64(&[&[2, 1], &[1, 1]]));
        assert!(DerivedMap::new(DerivedParams { a4: cat2, ..Default::default() }).is_err());
    }

    #[test]
    fn descriptor_round_trip() {
        let f = map();
        let g = crate::torus_maps::from_descriptor(&f.descriptor()).unwrap();
        let y = f.embed(&Vector4::new(3.0, 1.0, 4.0, -2.0));
        assert_eq!(g.lift(&y), f.lift(&y));
    }
}
