//! Cone fields and their sampled verification along orbits.
//!
//! A cone is written in the coordinates of an optional constant frame F: v ↦ c = F⁻¹v.
//! With core coordinates E it is {|c_i| ≤ γ(i)·‖c_E‖ for i ∉ E}, where γ(i) = γ₂ on the
//! second group and γ₁ elsewhere. Stretch factors use the frame norm ‖F⁻¹v‖.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::torus_maps::{project, TorusMap};
use crate::Error;

/// Jacobians with |det| below this are treated as singular.
pub const SINGULAR_DET: f64 = 1e-12;

fn serialize_frame<S: Serializer>(frame: &Option<DMatrix<f64>>, s: S) -> Result<S::Ok, S::Error> {
    let rows: Option<Vec<Vec<f64>>> = frame.as_ref().map(|m| m.row_iter().map(|r| r.iter().copied().collect()).collect());
    rows.serialize(s)
}

#[derive(Clone, Debug, Serialize)]
pub struct ConeSpec {
    pub dim: usize,
    pub core: Vec<usize>,
    /// Coordinates bounded by γ₂; the remaining non-core ones use γ₁.
    pub second_group: Vec<usize>,
    pub gamma1: f64,
    pub gamma2: f64,
    #[serde(serialize_with = "serialize_frame")]
    frame: Option<DMatrix<f64>>,
    #[serde(skip)]
    frame_inv: Option<DMatrix<f64>>,
}

impl ConeSpec {
    pub fn new(dim: usize, core: &[usize], second_group: &[usize], gamma1: f64, gamma2: f64) -> Result<Self, Error> {
        if core.is_empty() || core.len() >= dim {
            return Err(Error::Input("cone core must be a nonempty proper subset".into()));
        }
        if core.iter().chain(second_group).any(|&i| i >= dim) {
            return Err(Error::Input(format!("cone coordinate out of range for dimension {dim}")));
        }
        if second_group.iter().any(|i| core.contains(i)) {
            return Err(Error::Input("second group overlaps the core".into()));
        }
        let mut sorted = core.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != core.len() {
            return Err(Error::Input("repeated core coordinate".into()));
        }
        if !(gamma1 > 0.0 && gamma2 > 0.0) {
            return Err(Error::Input("apertures must be positive".into()));
        }
        Ok(Self { dim, core: sorted, second_group: second_group.to_vec(), gamma1, gamma2, frame: None, frame_inv: None })
    }

    /// Same cone read in the columns of `frame`.
    pub fn with_frame(mut self, frame: DMatrix<f64>) -> Result<Self, Error> {
        if frame.nrows() != self.dim || frame.ncols() != self.dim {
            return Err(Error::Input("frame has the wrong shape".into()));
        }
        let inv = frame.clone().try_inverse().ok_or_else(|| Error::Input("singular frame".into()))?;
        self.frame = Some(frame);
        self.frame_inv = Some(inv);
        Ok(self)
    }

    pub fn with_apertures(&self, gamma1: f64, gamma2: f64) -> Result<Self, Error> {
        let mut c = self.clone();
        if !(gamma1 > 0.0 && gamma2 > 0.0) {
            return Err(Error::Input("apertures must be positive".into()));
        }
        c.gamma1 = gamma1;
        c.gamma2 = gamma2;
        Ok(c)
    }

    pub fn frame(&self) -> Option<&DMatrix<f64>> {
        self.frame.as_ref()
    }

    fn coords(&self, v: &DVector<f64>) -> DVector<f64> {
        match &self.frame_inv {
            Some(inv) => inv * v,
            None => v.clone(),
        }
    }

    fn ambient(&self, c: DVector<f64>) -> DVector<f64> {
        match &self.frame {
            Some(f) => f * c,
            None => c,
        }
    }

    fn aperture(&self, i: usize) -> f64 {
        if self.second_group.contains(&i) {
            self.gamma2
        } else {
            self.gamma1
        }
    }

    fn complement(&self) -> Vec<usize> {
        (0..self.dim).filter(|i| !self.core.contains(i)).collect()
    }

    /// Frame norm of an ambient vector.
    pub fn norm(&self, v: &DVector<f64>) -> f64 {
        self.coords(v).norm()
    }

    fn margin_of_coords(&self, c: &DVector<f64>) -> f64 {
        let core = self.core.iter().map(|&i| c[i] * c[i]).sum::<f64>().sqrt();
        if core == 0.0 {
            return f64::NEG_INFINITY;
        }
        self.complement().iter().map(|&i| self.aperture(i) - c[i].abs() / core).fold(f64::INFINITY, f64::min)
    }

    /// Boundary rays: each core axis with every sign pattern of the complementary bounds.
    pub fn corner_rays(&self) -> Vec<DVector<f64>> {
        let comp = self.complement();
        let mut out = Vec::new();
        for &j in &self.core {
            for mask in 0u64..(1 << comp.len()) {
                let mut c = DVector::zeros(self.dim);
                c[j] = 1.0;
                for (b, &i) in comp.iter().enumerate() {
                    let sign = if mask >> b & 1 == 1 { -1.0 } else { 1.0 };
                    c[i] = sign * self.aperture(i);
                }
                out.push(self.ambient(c));
            }
        }
        out
    }

    /// Uniformly random core direction with complementary coordinates uniform in their bounds.
    pub fn random_ray<R: Rng>(&self, rng: &mut R) -> DVector<f64> {
        let mut c = DVector::zeros(self.dim);
        loop {
            for &j in &self.core {
                c[j] = rng.random_range(-1.0..1.0);
            }
            let n = self.core.iter().map(|&j| c[j] * c[j]).sum::<f64>().sqrt();
            if n > 1e-3 && n <= 1.0 {
                self.core.iter().for_each(|&j| c[j] /= n);
                break;
            }
        }
        for i in self.complement() {
            let g = self.aperture(i);
            c[i] = rng.random_range(-g..g);
        }
        self.ambient(c)
    }
}

/// Whether `v` lies in the cone, and the smallest aperture slack normalized by the core norm.
pub fn cone_membership(v: &[f64], cone: &ConeSpec) -> Result<(bool, f64), Error> {
    if v.len() != cone.dim {
        return Err(Error::Input(format!("vector has dimension {}, cone has {}", v.len(), cone.dim)));
    }
    if v.iter().all(|&x| x == 0.0) {
        return Err(Error::Input("zero vector".into()));
    }
    let m = cone.margin_of_coords(&cone.coords(&DVector::from_column_slice(v)));
    Ok((m >= 0.0, m))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridSpec {
    /// Points per dimension.
    pub resolution: Vec<usize>,
    /// Per-dimension [lo, hi) window; the whole torus when None.
    pub window: Option<Vec<[f64; 2]>>,
    /// Jitter points inside their cells.
    pub jitter: bool,
    /// Seeds the jitter and the random rays.
    pub seed: u64,
    pub budget: usize,
}

impl GridSpec {
    pub fn uniform(dim: usize, per_dim: usize) -> Self {
        Self { resolution: vec![per_dim; dim], window: None, jitter: false, seed: 0, budget: 1_000_000 }
    }

    pub fn points(&self) -> Result<Vec<Vec<f64>>, Error> {
        let d = self.resolution.len();
        if self.resolution.contains(&0) {
            return Err(Error::Input("grid resolution must be positive".into()));
        }
        let total = self.resolution.iter().try_fold(1usize, |acc, &r| acc.checked_mul(r)).unwrap_or(usize::MAX);
        if total > self.budget {
            return Err(Error::Input(format!("grid has {total} points, budget is {}", self.budget)));
        }
        let win = match &self.window {
            Some(w) if w.len() == d => w.clone(),
            Some(_) => return Err(Error::Input("window dimension mismatch".into())),
            None => vec![[0.0, 1.0]; d],
        };
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut out = Vec::with_capacity(total);
        for k in 0..total {
            let mut rem = k;
            let mut x = Vec::with_capacity(d);
            for (i, &r) in self.resolution.iter().enumerate() {
                let idx = rem % r;
                rem /= r;
                let off = if self.jitter { rng.random::<f64>() } else { 0.5 };
                x.push(win[i][0] + (idx as f64 + off) / r as f64 * (win[i][1] - win[i][0]));
            }
            out.push(x);
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConeFailure {
    /// Start of the forward orbit.
    pub point: Vec<f64>,
    pub direction: Vec<f64>,
    pub margin: f64,
    pub stretch: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConeReport {
    /// worst_margin > 0.
    pub invariant: bool,
    /// expansion_lambda > 1.
    pub expanding: bool,
    pub worst_margin: f64,
    pub expansion_lambda: f64,
    pub points_tested: usize,
    pub directions_per_point: usize,
    /// Rays were pushed by (Dfᴺ)⁻¹ from fᴺ(point) instead of Dfᴺ from point.
    pub backward: bool,
    pub failures: Vec<ConeFailure>,
}

/// Dfᴺ along the orbit of `x`, refusing near-singular steps.
fn orbit_product(map: &dyn TorusMap, x: &[f64], n: usize) -> Result<DMatrix<f64>, Error> {
    let d = map.dim();
    let mut p = DMatrix::identity(d, d);
    let mut y = x.to_vec();
    for _ in 0..n {
        let (z, j) = map.lift_with_jacobian(&y);
        if j.determinant().abs() < SINGULAR_DET {
            return Err(Error::Numerical(format!("singular jacobian along the orbit of {x:?}")));
        }
        p = j * p;
        y = project(&z);
    }
    Ok(p)
}

fn step_matrix(map: &dyn TorusMap, x: &[f64], n: usize, backward: bool) -> Result<DMatrix<f64>, Error> {
    let p = orbit_product(map, x, n)?;
    if backward {
        p.try_inverse().ok_or_else(|| Error::Numerical(format!("product along {x:?} is not invertible")))
    } else {
        Ok(p)
    }
}

/// Margin and stretch of a single (point, direction) pair, as used by the verifier.
pub fn evaluate_ray(map: &dyn TorusMap, cone: &ConeSpec, n: usize, backward: bool, point: &[f64], direction: &[f64]) -> Result<(f64, f64), Error> {
    let m = step_matrix(map, point, n, backward)?;
    let v = DVector::from_column_slice(direction);
    let w = &m * &v;
    Ok((cone.margin_of_coords(&cone.coords(&w)), cone.norm(&w) / cone.norm(&v)))
}

fn check_inputs(map: &dyn TorusMap, cone: &ConeSpec, n: usize, points: &[Vec<f64>]) -> Result<(), Error> {
    if n == 0 {
        return Err(Error::Input("N must be at least 1".into()));
    }
    if cone.dim != map.dim() || points.iter().any(|p| p.len() != map.dim()) {
        return Err(Error::Input("cone, points and map dimensions differ".into()));
    }
    Ok(())
}

fn ray_seed(seed: u64, k: usize) -> u64 {
    seed ^ (k as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

fn verify_at(
    map: &dyn TorusMap,
    cone: &ConeSpec,
    n: usize,
    points: &[Vec<f64>],
    directions: usize,
    seed: u64,
    backward: bool,
) -> Result<ConeReport, Error> {
    check_inputs(map, cone, n, points)?;
    let corners = cone.corner_rays();
    let per_point: Vec<(f64, f64, Vec<ConeFailure>)> = points
        .par_iter()
        .enumerate()
        .map(|(k, x)| {
            let m = step_matrix(map, x, n, backward)?;
            let mut rng = ChaCha8Rng::seed_from_u64(ray_seed(seed, k));
            let mut worst = f64::INFINITY;
            let mut lam = f64::INFINITY;
            let mut fails = Vec::new();
            for v in corners.iter().cloned().chain((0..directions).map(|_| cone.random_ray(&mut rng))) {
                let w = &m * &v;
                let margin = cone.margin_of_coords(&cone.coords(&w));
                let stretch = cone.norm(&w) / cone.norm(&v);
                worst = worst.min(margin);
                lam = lam.min(stretch);
                if margin <= 0.0 {
                    fails.push(ConeFailure { point: x.clone(), direction: v.iter().copied().collect(), margin, stretch });
                }
            }
            Ok((worst, lam, fails))
        })
        .collect::<Result<_, Error>>()?;
    let mut report = ConeReport {
        invariant: false,
        expanding: false,
        worst_margin: f64::INFINITY,
        expansion_lambda: f64::INFINITY,
        points_tested: points.len(),
        directions_per_point: corners.len() + directions,
        backward,
        failures: Vec::new(),
    };
    for (w, l, f) in per_point {
        report.worst_margin = report.worst_margin.min(w);
        report.expansion_lambda = report.expansion_lambda.min(l);
        report.failures.extend(f);
    }
    report.invariant = report.worst_margin > 0.0;
    report.expanding = report.expansion_lambda > 1.0;
    Ok(report)
}

/// Pushes corner rays and `directions` seeded random rays by Dfᴺ at each point and checks
/// strict membership of the images.
pub fn verify_cone_field_at(map: &dyn TorusMap, cone: &ConeSpec, n: usize, points: &[Vec<f64>], directions: usize, seed: u64) -> Result<ConeReport, Error> {
    verify_at(map, cone, n, points, directions, seed, false)
}

pub fn verify_cone_field(map: &dyn TorusMap, cone: &ConeSpec, n: usize, grid: &GridSpec, directions: usize) -> Result<ConeReport, Error> {
    verify_at(map, cone, n, &grid.points()?, directions, grid.seed, false)
}

/// The same check for (Dfᴺ)⁻¹, i.e. along the backward orbit of fᴺ(x) for each sample x.
pub fn verify_cone_field_backward_at(
    map: &dyn TorusMap,
    cone: &ConeSpec,
    n: usize,
    points: &[Vec<f64>],
    directions: usize,
    seed: u64,
) -> Result<ConeReport, Error> {
    verify_at(map, cone, n, points, directions, seed, true)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NormGap {
    pub pass: bool,
    pub lambda_n: f64,
    /// λᴺ/100 − (‖Y‖ + 1).
    pub slack_y: f64,
    /// λᴺ/100 − ‖Y⁻¹‖.
    pub slack_y_inv: f64,
}

pub fn check_norm_gap(lambda: f64, n: u32, y_norm: f64, y_inv_norm: f64) -> Result<NormGap, Error> {
    if !(lambda > 1.0) || n == 0 {
        return Err(Error::Input("need lambda > 1 and N >= 1".into()));
    }
    let lambda_n = lambda.powi(n as i32);
    let slack_y = lambda_n / 100.0 - (y_norm + 1.0);
    let slack_y_inv = lambda_n / 100.0 - y_inv_norm;
    Ok(NormGap { pass: slack_y > 0.0 && slack_y_inv > 0.0, lambda_n, slack_y, slack_y_inv })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PartialHyperbolicityReport {
    pub unstable: ConeReport,
    pub stable: ConeReport,
    pub pass: bool,
}

/// u-cone forward and s-cone backward at the given points.
pub fn verify_partial_hyperbolicity_at(
    map: &dyn TorusMap,
    u_cone: &ConeSpec,
    s_cone: &ConeSpec,
    n: usize,
    points: &[Vec<f64>],
    directions: usize,
    seed: u64,
) -> Result<PartialHyperbolicityReport, Error> {
    if u_cone.core.iter().any(|i| s_cone.core.contains(i)) {
        return Err(Error::Input("u and s cones must have disjoint cores".into()));
    }
    let unstable = verify_at(map, u_cone, n, points, directions, seed, false)?;
    let stable = verify_at(map, s_cone, n, points, directions, seed.wrapping_add(1), true)?;
    let pass = unstable.invariant && unstable.expanding && stable.invariant && stable.expanding;
    Ok(PartialHyperbolicityReport { unstable, stable, pass })
}

pub fn verify_partial_hyperbolicity(
    map: &dyn TorusMap,
    u_cone: &ConeSpec,
    s_cone: &ConeSpec,
    n: usize,
    grid: &GridSpec,
    directions: usize,
) -> Result<PartialHyperbolicityReport, Error> {
    verify_partial_hyperbolicity_at(map, u_cone, s_cone, n, &grid.points()?, directions, grid.seed)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ApertureChoice {
    pub gamma1: f64,
    pub gamma2: f64,
    pub report: ConeReport,
}

/// Log-spaced apertures 10^(k/3) for k in lo..=hi.
pub fn log_apertures(lo: i32, hi: i32) -> Vec<f64> {
    (lo..=hi).map(|k| 10f64.powf(k as f64 / 3.0)).collect()
}

/// Tries every (γ₁, γ₂) pair from `candidates` and returns the passing pair with the
/// largest margin relative to min(γ₁, γ₂). Passing means invariant and expanding.
pub fn search_apertures(
    map: &dyn TorusMap,
    template: &ConeSpec,
    n: usize,
    points: &[Vec<f64>],
    directions: usize,
    seed: u64,
    candidates: &[f64],
) -> Result<Option<ApertureChoice>, Error> {
    let mut best: Option<(f64, ApertureChoice)> = None;
    let second = !template.second_group.is_empty();
    for &g1 in candidates {
        for &g2 in if second { candidates } else { &candidates[..1] } {
            let g2 = if second { g2 } else { g1 };
            let cone = template.with_apertures(g1, g2)?;
            let report = verify_cone_field_at(map, &cone, n, points, directions, seed)?;
            if !(report.invariant && report.expanding) {
                continue;
            }
            let score = report.worst_margin / g1.min(g2);
            if best.as_ref().is_none_or(|(s, _)| score > *s) {
                best = Some((score, ApertureChoice { gamma1: g1, gamma2: g2, report }));
            }
        }
    }
    Ok(best.map(|(_, c)| c))
}
