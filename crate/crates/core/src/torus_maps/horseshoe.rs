//! Planar horseshoe isotopy g_t = D ∘ T_t ∘ S_t.
//!
//! Coordinates are (u, s) with ambient linear map D = diag(a_u, a_s). S_t shears the
//! s-coordinate by t·ψ(u)·ρ(s), where ψ oscillates through n monotone laps; T_t rotates
//! by t·(π/2)·bump(|w|). At t = 1 the map on the box Q = [u_lo, u_hi] × [−R_s, R_s] is
//! (u, s) ↦ (a_u(ψ(u) − s), a_s u), which folds the n laps across Q.

use std::f64::consts::PI;

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use super::bump::BumpProfile;
use crate::Error;

const DET_MIN: f64 = 0.25;
const TWIST_WIDTH: f64 = 0.5;

/// Lap layout relative to the origin.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Placement {
    /// Laps centred on the origin.
    Centered,
    /// Laps to the right of the origin, with ψ ≡ 0 near it.
    Offset,
}

/// Quintic Hermite segment on [0, 1] matching value, slope and curvature at both ends.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct Hermite5 {
    c: [f64; 6],
}

impl Hermite5 {
    /// End data (value, first, second derivative) in the physical variable, over width h.
    fn new(p0: [f64; 3], p1: [f64; 3], h: f64) -> Self {
        let (v0, d0, s0) = (p0[0], p0[1] * h, p0[2] * h * h);
        let (v1, d1, s1) = (p1[0], p1[1] * h, p1[2] * h * h);
        let c0 = v0;
        let c1 = d0;
        let c2 = s0 / 2.0;
        // Remaining cubic part fixed by the three conditions at x = 1.
        let r0 = v1 - c0 - c1 - c2;
        let r1 = d1 - c1 - 2.0 * c2;
        let r2 = s1 - 2.0 * c2;
        let c3 = 10.0 * r0 - 4.0 * r1 + 0.5 * r2;
        let c4 = -15.0 * r0 + 7.0 * r1 - r2;
        let c5 = 6.0 * r0 - 3.0 * r1 + 0.5 * r2;
        Self { c: [c0, c1, c2, c3, c4, c5] }
    }

    fn eval(&self, x: f64) -> (f64, f64) {
        let c = &self.c;
        let v = c[0] + x * (c[1] + x * (c[2] + x * (c[3] + x * (c[4] + x * c[5]))));
        let d = c[1] + x * (2.0 * c[2] + x * (3.0 * c[3] + x * (4.0 * c[4] + x * 5.0 * c[5])));
        (v, d)
    }
}

/// The lap profile ψ: amp·cos(π(u − u_lo)/w) on [u_lo, u_hi], C² tails to zero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct LapProfile {
    n: usize,
    w: f64,
    u_lo: f64,
    amp: f64,
    tail: f64,
    left: Hermite5,
    right: Hermite5,
}

impl LapProfile {
    fn new(n: usize, w: f64, u_lo: f64, amp: f64, tail: f64) -> Self {
        let k = PI / w;
        let left = Hermite5::new([0.0, 0.0, 0.0], [amp, 0.0, -amp * k * k], tail);
        let end = amp * (n as f64 * PI).cos();
        let right = Hermite5::new([end, 0.0, -end * k * k], [0.0, 0.0, 0.0], tail);
        Self { n, w, u_lo, amp, tail, left, right }
    }

    fn u_hi(&self) -> f64 {
        self.u_lo + self.n as f64 * self.w
    }

    fn eval(&self, u: f64) -> (f64, f64) {
        let (lo, hi) = (self.u_lo, self.u_hi());
        if u >= lo && u <= hi {
            let k = PI / self.w;
            let a = k * (u - lo);
            (self.amp * a.cos(), -self.amp * k * a.sin())
        } else if u < lo && u > lo - self.tail {
            let (v, d) = self.left.eval((u - (lo - self.tail)) / self.tail);
            (v, d / self.tail)
        } else if u > hi && u < hi + self.tail {
            let (v, d) = self.right.eval((u - hi) / self.tail);
            (v, d / self.tail)
        } else {
            (0.0, 0.0)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HorseshoeModel {
    pub branches: usize,
    pub a_u: f64,
    pub a_s: f64,
    pub placement: Placement,
    pub lap_width: f64,
    pub r_s: f64,
    pub amp: f64,
    pub shear_width: f64,
    pub r1: f64,
    pub r2: f64,
    psi: LapProfile,
}

/// Image, jacobian and t-derivative of one of the model maps.
#[derive(Clone, Copy, Debug)]
pub struct ModelEval {
    pub value: Vector2<f64>,
    pub jacobian: Matrix2<f64>,
    pub dt: Vector2<f64>,
}

impl HorseshoeModel {
    pub fn new(branches: usize, a_u: f64, a_s: f64, placement: Placement, lap_width: f64) -> Result<Self, Error> {
        if branches < 2 {
            return Err(Error::Input("a horseshoe needs at least two branches".into()));
        }
        if !(a_u > 0.0 && a_s > 0.0 && a_s < 1.0 && lap_width > 0.0) {
            return Err(Error::Input(format!("need a_u > 0, 0 < a_s < 1, got a_u={a_u}, a_s={a_s}")));
        }
        let w = lap_width;
        let tail = w / 2f64.sqrt();
        let u_lo = match placement {
            Placement::Centered => -(branches as f64) * w / 2.0,
            Placement::Offset => tail + 0.5 * w,
        };
        let u_hi = u_lo + branches as f64 * w;
        let u_max = u_lo.abs().max(u_hi.abs());
        let r_s = 1.1 * a_s * u_max;
        let amp = r_s + 1.1 * u_max / a_u;
        let shear_width = 1.875 * amp / (1.0 - DET_MIN);
        let r1 = 1.02 * (u_max + tail).hypot(r_s + shear_width + amp);
        let r2 = r1 * (1.0 + TWIST_WIDTH);
        let psi = LapProfile::new(branches, w, u_lo, amp, tail);
        Ok(Self { branches, a_u, a_s, placement, lap_width, r_s, amp, shear_width, r1, r2, psi })
    }

    pub fn u_range(&self) -> (f64, f64) {
        (self.psi.u_lo, self.psi.u_hi())
    }

    /// Radius outside of which every g_t equals D.
    pub fn support_radius(&self) -> f64 {
        self.r2
    }

    fn rho(&self) -> BumpProfile {
        BumpProfile { inner: self.r_s, outer: self.r_s + self.shear_width }
    }

    fn twist(&self) -> BumpProfile {
        BumpProfile { inner: self.r1, outer: self.r2 }
    }

    fn shear(&self, t: f64, z: Vector2<f64>) -> ModelEval {
        let (p, dp) = self.psi.eval(z.x);
        let (r, dr) = self.rho().eval(z.y);
        ModelEval {
            value: Vector2::new(z.x, z.y - t * p * r),
            jacobian: Matrix2::new(1.0, 0.0, -t * dp * r, 1.0 - t * p * dr),
            dt: Vector2::new(0.0, -p * r),
        }
    }

    fn rotate(&self, t: f64, w: Vector2<f64>) -> ModelEval {
        let rr = w.norm();
        let (b, db) = self.twist().eval(rr);
        let theta = PI / 2.0 * b;
        let (sn, cs) = (t * theta).sin_cos();
        let rot = Matrix2::new(cs, -sn, sn, cs);
        let out = rot * w;
        let jw = Vector2::new(-out.y, out.x);
        let grad = if rr > 0.0 { w * (PI / 2.0 * db / rr) } else { Vector2::zeros() };
        ModelEval { value: out, jacobian: rot + jw * (grad * t).transpose(), dt: jw * theta }
    }

    /// T_t ∘ S_t, i.e. D⁻¹ g_t.
    pub fn core(&self, t: f64, z: Vector2<f64>) -> ModelEval {
        let s = self.shear(t, z);
        let r = self.rotate(t, s.value);
        ModelEval { value: r.value, jacobian: r.jacobian * s.jacobian, dt: r.dt + r.jacobian * s.dt }
    }

    /// g_t = D ∘ T_t ∘ S_t.
    pub fn map(&self, t: f64, z: Vector2<f64>) -> ModelEval {
        let c = self.core(t, z);
        let d = Matrix2::new(self.a_u, 0.0, 0.0, self.a_s);
        ModelEval { value: d * c.value, jacobian: d * c.jacobian, dt: d * c.dt }
    }

    /// Largest ‖Dg_t‖, ‖Dg_t⁻¹‖ and |∂_t g_t| over a sample grid of the support, t ∈ [0, 1].
    pub fn derivative_bounds(&self, grid: usize) -> DerivativeBounds {
        let mut out = DerivativeBounds { norm: 0.0, inverse_norm: 0.0, t_derivative: 0.0, min_det: f64::INFINITY };
        let r = self.r2 * 1.01;
        let (lo, hi) = self.u_range();
        // A uniform grid over the support plus a fine grid over the lap region.
        let regions = [(-r, r, -r, r), (lo - self.lap_width, hi + self.lap_width, -self.r_s - self.shear_width, self.r_s + self.shear_width)];
        for t in [0.0, 0.25, 0.5, 0.75, 1.0] {
            for &(x0, x1, y0, y1) in &regions {
                for i in 0..=grid {
                    for j in 0..=grid {
                        let z = Vector2::new(
                            x0 + (x1 - x0) * i as f64 / grid as f64,
                            y0 + (y1 - y0) * j as f64 / grid as f64,
                        );
                        let e = self.map(t, z);
                        let sv = e.jacobian.singular_values();
                        let (smax, smin) = (sv.max(), sv.min());
                        out.norm = out.norm.max(smax);
                        out.inverse_norm = out.inverse_norm.max(1.0 / smin);
                        out.t_derivative = out.t_derivative.max(e.dt.norm());
                        out.min_det = out.min_det.min(e.jacobian.determinant().abs());
                    }
                }
            }
        }
        out
    }

    /// Covering-relation check of the n branch strips of Q under g_1.
    pub fn certificate(&self) -> HorseshoeCertificate {
        let (lo, hi) = self.u_range();
        let n = self.branches;
        let w = self.lap_width;
        let samples = 64;
        let mut crossing = vec![vec![0u8; n]; n];
        let mut worst_overshoot = f64::INFINITY;
        let mut worst_s = f64::INFINITY;
        for i in 0..n {
            let a = lo + i as f64 * w;
            let b = a + w;
            // Image of both vertical edges must leave Q on opposite sides.
            let side = |u: f64| -> (f64, f64) {
                let mut min_u = f64::INFINITY;
                let mut max_u = f64::NEG_INFINITY;
                for k in 0..=samples {
                    let s = -self.r_s + 2.0 * self.r_s * k as f64 / samples as f64;
                    let img = self.map(1.0, Vector2::new(u, s)).value;
                    min_u = min_u.min(img.x);
                    max_u = max_u.max(img.x);
                }
                (min_u, max_u)
            };
            let (ea_min, ea_max) = side(a);
            let (eb_min, eb_max) = side(b);
            let over = if i % 2 == 0 {
                // lap starts at +amp: left edge lands right of Q, right edge left of Q
                (ea_min - hi).min(lo - eb_max)
            } else {
                (eb_min - hi).min(lo - ea_max)
            };
            worst_overshoot = worst_overshoot.min(over);
            // Image stays inside the s-range of Q.
            for k in 0..=samples {
                for m in 0..=samples {
                    let u = a + w * k as f64 / samples as f64;
                    let s = -self.r_s + 2.0 * self.r_s * m as f64 / samples as f64;
                    let img = self.map(1.0, Vector2::new(u, s)).value;
                    worst_s = worst_s.min(self.r_s - img.y.abs());
                }
            }
            if over > 0.0 {
                for j in 0..n {
                    crossing[i][j] = 1;
                }
            }
        }
        let full = worst_overshoot > 0.0 && worst_s > 0.0;
        if !full {
            for row in crossing.iter_mut() {
                row.iter_mut().for_each(|c| *c = 0);
            }
        }
        HorseshoeCertificate {
            branches: n,
            crossing,
            full_shift: full,
            entropy_lower_bound: if full { (n as f64).ln() } else { 0.0 },
            edge_overshoot: worst_overshoot,
            s_slack: worst_s,
        }
    }

    /// Point of the lap `i` (monotone piece of ψ) where ψ takes value `v`.
    fn lap_inverse(&self, i: usize, v: f64) -> f64 {
        let (lo, _) = self.u_range();
        let c = (v / self.amp).clamp(-1.0, 1.0);
        // On lap i, π(u − u_lo)/w ∈ [iπ, (i+1)π]; cos is monotone there.
        let base = c.acos();
        let theta = if i % 2 == 0 { i as f64 * PI + base } else { (i + 1) as f64 * PI - base };
        lo + theta * self.lap_width / PI
    }

    /// Periodic orbit of g_1 with itinerary `word` through the branch strips.
    pub fn periodic_orbit(&self, word: &[usize]) -> Result<Vec<Vector2<f64>>, Error> {
        let p = word.len();
        if p == 0 || word.iter().any(|&i| i >= self.branches) {
            return Err(Error::Input(format!("invalid itinerary {word:?}")));
        }
        let (lo, _) = self.u_range();
        let mut u: Vec<f64> = word.iter().map(|&i| lo + (i as f64 + 0.5) * self.lap_width).collect();
        let mut s: Vec<f64> = vec![0.0; p];
        // u is contracted by backward branches, s by forward iteration.
        for _ in 0..500 {
            let mut delta: f64 = 0.0;
            for k in 0..p {
                let next = (k + 1) % p;
                let new_s = self.a_s * u[k];
                delta = delta.max((new_s - s[next]).abs());
                s[next] = new_s;
            }
            for k in (0..p).rev() {
                let next = (k + 1) % p;
                let new_u = self.lap_inverse(word[k], u[next] / self.a_u + s[k]);
                delta = delta.max((new_u - u[k]).abs());
                u[k] = new_u;
            }
            if delta < 1e-14 {
                break;
            }
        }
        let orbit: Vec<Vector2<f64>> = (0..p).map(|k| Vector2::new(u[k], s[k])).collect();
        for k in 0..p {
            let img = self.map(1.0, orbit[k]).value;
            let err = (img - orbit[(k + 1) % p]).norm();
            if err > 1e-9 {
                return Err(Error::Numerical(format!("periodic orbit residual {err:.3e} for {word:?}")));
            }
        }
        Ok(orbit)
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct DerivativeBounds {
    pub norm: f64,
    pub inverse_norm: f64,
    pub t_derivative: f64,
    pub min_det: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HorseshoeCertificate {
    pub branches: usize,
    pub crossing: Vec<Vec<u8>>,
    pub full_shift: bool,
    pub entropy_lower_bound: f64,
    /// Smallest distance by which a strip edge image clears Q in the u-direction.
    pub edge_overshoot: f64,
    /// Smallest slack of the image inside the s-range of Q.
    pub s_slack: f64,
}

/// Topological entropy of the subshift with 0-1 transition matrix `m`.
pub fn subshift_entropy(m: &[Vec<u8>]) -> f64 {
    let n = m.len();
    if n == 0 {
        return f64::NEG_INFINITY;
    }
    let a = nalgebra::DMatrix::from_fn(n, n, |i, j| m[i][j] as f64);
    let r = a.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max);
    if r > 0.0 {
        r.ln()
    } else {
        f64::NEG_INFINITY
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cat_model() -> HorseshoeModel {
        let l = (3.0 + 5f64.sqrt()) / 2.0;
        HorseshoeModel::new(4, l, 1.0 / l, Placement::Centered, 1.0).unwrap()
    }

    #[test]
    fn identity_at_time_zero_and_far_away() {
        let m = cat_model();
        for z in [Vector2::new(0.3, -0.2), Vector2::new(2.0, 5.0), Vector2::new(-m.r2 * 1.1, 0.0)] {
            let e = m.map(0.0, z);
            assert_eq!(e.value, Vector2::new(m.a_u * z.x, m.a_s * z.y));
        }
        let far = Vector2::new(m.r2, m.r2);
        let e = m.map(1.0, far);
        assert_eq!(e.value, Vector2::new(m.a_u * far.x, m.a_s * far.y));
    }

    #[test]
    fn fold_formula_on_q() {
        let m = cat_model();
        let (lo, hi) = m.u_range();
        for (u, s) in [(lo + 0.3, 0.1), (0.1, -m.r_s * 0.9), (hi - 0.01, m.r_s)] {
            let e = m.map(1.0, Vector2::new(u, s));
            let psi = m.psi.eval(u).0;
            assert!((e.value.x - m.a_u * (psi - s)).abs() < 1e-9);
            assert!((e.value.y - m.a_s * u).abs() < 1e-9);
        }
    }

    #[test]
    fn jacobian_and_time_derivative_match_differences() {
        let m = cat_model();
        let h = 1e-6;
        for t in [0.0, 0.3, 0.77, 1.0] {
            for k in 0..300 {
                let a = k as f64 * 0.61;
                let r = m.r2 * 1.05 * ((k * 37 % 101) as f64 / 101.0);
                let z = Vector2::new(r * a.cos(), r * a.sin());
                let e = m.map(t, z);
                for c in 0..2 {
                    let mut dz = Vector2::zeros();
                    dz[c] = h;
                    let fd = (m.map(t, z + dz).value - m.map(t, z - dz).value) / (2.0 * h);
                    let col = e.jacobian.column(c);
                    assert!((fd - col).norm() < 1e-5 * (1.0 + col.norm()), "t={t} z={z:?}");
                }
                if t > h && t < 1.0 - h {
                    let fd = (m.map(t + h, z).value - m.map(t - h, z).value) / (2.0 * h);
                    assert!((fd - e.dt).norm() < 1e-5 * (1.0 + e.dt.norm()));
                }
            }
        }
    }

    #[test]
    fn lap_profile_is_c1_at_tails() {
        let m = cat_model();
        let (lo, hi) = m.u_range();
        let tail = m.psi.tail;
        for x in [lo - tail, lo, hi, hi + tail] {
            let (a, da) = m.psi.eval(x - 1e-9);
            let (b, db) = m.psi.eval(x + 1e-9);
            assert!((a - b).abs() < 1e-6 && (da - db).abs() < 1e-5, "at {x}");
        }
    }

    #[test]
    fn certificate_is_full_shift() {
        for (n, placement) in [(3, Placement::Centered), (4, Placement::Centered), (12, Placement::Offset)] {
            let m = HorseshoeModel::new(n, 0.702, 0.596, placement, 1.0).unwrap();
            let c = m.certificate();
            assert!(c.full_shift, "{n} {placement:?}: {c:?}");
            assert!(c.crossing.iter().flatten().all(|&x| x == 1));
            assert!((subshift_entropy(&c.crossing) - (n as f64).ln()).abs() < 1e-9);
        }
        let c = HorseshoeModel::new(3, 2.0, 0.5, Placement::Centered, 1.0).unwrap().certificate();
        assert!((c.entropy_lower_bound - 1.098_612_3).abs() < 1e-7);
    }

    #[test]
    fn diffeomorphism_bounds() {
        let b = cat_model().derivative_bounds(120);
        assert!(b.min_det > 1e-3);
        assert!(b.norm < 30.0 && b.inverse_norm < 30.0, "{b:?}");
    }

    #[test]
    fn periodic_orbits_follow_itinerary() {
        let m = HorseshoeModel::new(12, 0.702, 0.596, Placement::Offset, 1.0).unwrap();
        let (lo, _) = m.u_range();
        for word in [vec![0], vec![5], vec![1, 7], vec![3, 11, 2]] {
            let orbit = m.periodic_orbit(&word).unwrap();
            for (z, &i) in orbit.iter().zip(&word) {
                let lap = ((z.x - lo) / m.lap_width).floor() as usize;
                assert_eq!(lap, i);
                assert!(z.y.abs() <= m.r_s);
            }
        }
    }

    #[test]
    fn offset_model_fixes_attracting_origin() {
        let m = HorseshoeModel::new(12, 0.702, 0.596, Placement::Offset, 1.0).unwrap();
        let e = m.map(1.0, Vector2::zeros());
        assert_eq!(e.value, Vector2::zeros());
        let sv = e.jacobian.singular_values();
        assert!(sv.max() < 1.0);
    }
}
