//! Exact induced actions on the homology of tori.
//!
//! The action on H_k(T^d, R) is the k-th exterior power of the linear part, so
//! everything here works from an [`IntMatrix`].

mod matrix;
pub mod poly;
pub mod roots;

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::{One, Signed, ToPrimitive};
use serde::{Deserialize, Serialize};

pub use matrix::IntMatrix;
pub use poly::char_poly;

use crate::Error;

/// Moduli within this distance of 1 are treated as 1 when grouping.
pub const MODULUS_TOL: f64 = 1e-9;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Spectrum {
    pub dim: usize,
    /// Sorted by decreasing modulus.
    pub values: Vec<Complex64>,
    pub moduli: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HomologyReport {
    pub per_k_radius: BTreeMap<usize, f64>,
    #[serde(rename = "hH")]
    pub h_h: f64,
    pub argmax_set: Vec<usize>,
    pub u0: usize,
    pub hyperbolic_action: bool,
    pub unstable_index: usize,
    pub linear_entropy: f64,
    pub det: i8,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Splitting {
    pub unstable: Vec<Vec<f64>>,
    pub center: Vec<Vec<f64>>,
    pub stable: Vec<Vec<f64>>,
}

/// All roots of the characteristic polynomial, with multiplicity.
pub fn eigenvalues(a: &IntMatrix) -> Result<Spectrum, Error> {
    let cp = poly::QPoly::from_descending_int(&char_poly(a));
    let mut values = Vec::with_capacity(a.dim());
    for (factor, mult) in poly::square_free(&cp) {
        let coeffs: Vec<f64> = factor.to_primitive_ints().iter().map(|c| c.to_f64().unwrap_or(f64::NAN)).collect();
        let roots = roots::aberth(&coeffs).ok_or_else(|| Error::RootFinding(format!("{coeffs:?}")))?;
        if let Some(bad) = roots.iter().find(|z| roots::relative_residual(&coeffs, **z) >= 1e-10) {
            return Err(Error::RootFinding(format!("residual too large at {bad} for {coeffs:?}")));
        }
        for z in roots {
            values.extend(std::iter::repeat_n(z, mult));
        }
    }
    values.sort_by(|x, y| {
        y.norm().total_cmp(&x.norm()).then(y.re.total_cmp(&x.re)).then(y.im.total_cmp(&x.im))
    });
    let moduli = values.iter().map(|z| z.norm()).collect();
    Ok(Spectrum { dim: a.dim(), values, moduli })
}

pub fn spectral_radius(m: &IntMatrix) -> Result<f64, Error> {
    Ok(eigenvalues(m)?.moduli.first().copied().unwrap_or(0.0))
}

/// Lexicographically ordered k-subsets of {0, .., d-1}.
pub fn k_subsets(d: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, d: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..d {
            if d - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, d, k, cur, out);
            cur.pop();
        }
    }
    rec(0, d, k, &mut cur, &mut out);
    out
}

/// Matrix of all k×k minors, rows and columns indexed by lexicographic k-subsets.
pub fn exterior_power(a: &IntMatrix, k: usize) -> Result<IntMatrix, Error> {
    let d = a.dim();
    if k > d {
        return Err(Error::Input(format!("exterior power {k} of a {d}x{d} matrix")));
    }
    if k == 0 {
        return Ok(IntMatrix::identity(1));
    }
    let subsets = k_subsets(d, k);
    let n = subsets.len();
    let mut out = IntMatrix::zeros(n);
    for (r, rs) in subsets.iter().enumerate() {
        for (c, cs) in subsets.iter().enumerate() {
            let rows: Vec<Vec<BigInt>> = rs.iter().map(|&i| cs.iter().map(|&j| a.get(i, j).clone()).collect()).collect();
            out.set(r, c, IntMatrix::from_rows(&rows).expect("square minor").det());
        }
    }
    Ok(out)
}

/// Sum of log moduli strictly above 1.
pub fn linear_entropy(a: &IntMatrix) -> Result<f64, Error> {
    Ok(eigenvalues(a)?.moduli.iter().filter(|&&m| m > 1.0 + MODULUS_TOL).map(|m| m.ln()).sum())
}

/// Whether no eigenvalue has modulus one, decided in exact arithmetic.
pub fn is_hyperbolic_action(a: &IntMatrix) -> bool {
    let cp = poly::QPoly::from_descending_int(&char_poly(a));
    !poly::has_unit_circle_root(&cp)
}

pub fn homological_entropy(a: &IntMatrix) -> Result<HomologyReport, Error> {
    let det = a.det();
    if !det.abs().is_one() {
        return Err(Error::NotUnimodular(det.to_string()));
    }
    let d = a.dim();
    let mut per_k_radius = BTreeMap::new();
    per_k_radius.insert(0, 1.0);
    for k in 1..=d {
        per_k_radius.insert(k, spectral_radius(&exterior_power(a, k)?)?);
    }
    let h_h = per_k_radius.values().map(|r| r.ln()).fold(f64::NEG_INFINITY, f64::max);
    let argmax_set: Vec<usize> =
        per_k_radius.iter().filter(|(_, r)| (r.ln() - h_h).abs() <= 1e-9).map(|(k, _)| *k).collect();
    let spec = eigenvalues(a)?;
    let unstable_index = spec.moduli.iter().filter(|&&m| m > 1.0 + MODULUS_TOL).count();
    let linear_entropy = spec.moduli.iter().filter(|&&m| m > 1.0 + MODULUS_TOL).map(|m| m.ln()).sum();
    Ok(HomologyReport {
        per_k_radius,
        h_h,
        u0: argmax_set[0],
        argmax_set,
        hyperbolic_action: is_hyperbolic_action(a),
        unstable_index,
        linear_entropy,
        det: if det.is_negative() { -1 } else { 1 },
    })
}

/// Real invariant subspaces grouped by eigenvalue modulus (>1, =1, <1), each
/// returned as an orthonormal basis.
pub fn invariant_splitting(a: &IntMatrix) -> Result<Splitting, Error> {
    let spec = eigenvalues(a)?;
    let af = a.to_f64();
    let d = a.dim();
    let groups: [Box<dyn Fn(f64) -> bool>; 3] = [
        Box::new(|m| m > 1.0 + MODULUS_TOL),
        Box::new(|m| (m - 1.0).abs() <= MODULUS_TOL),
        Box::new(|m| m < 1.0 - MODULUS_TOL),
    ];
    let mut bases = Vec::new();
    for pick in groups.iter() {
        let vals: Vec<Complex64> = spec.values.iter().copied().filter(|z| pick(z.norm())).collect();
        bases.push(group_kernel(&af, &vals, d)?);
    }
    let stable = bases.pop().unwrap();
    let center = bases.pop().unwrap();
    let unstable = bases.pop().unwrap();
    Ok(Splitting { unstable, center, stable })
}

fn group_kernel(af: &DMatrix<f64>, vals: &[Complex64], d: usize) -> Result<Vec<Vec<f64>>, Error> {
    let k = vals.len();
    if k == 0 {
        return Ok(Vec::new());
    }
    if k == d {
        return Ok((0..d).map(|i| (0..d).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect());
    }
    // Real polynomial with the group's eigenvalues as roots; complex values come in
    // conjugate pairs, consumed as quadratic factors.
    let eye = DMatrix::<f64>::identity(d, d);
    let mut q = eye.clone();
    let mut used = vec![false; k];
    for i in 0..k {
        if used[i] {
            continue;
        }
        used[i] = true;
        let z = vals[i];
        let factor = if z.im.abs() <= 1e-12 * z.norm().max(1.0) {
            af - &eye * z.re
        } else {
            if let Some(j) = (0..k).find(|&j| !used[j] && (vals[j] - z.conj()).norm() <= 1e-8 * z.norm().max(1.0)) {
                used[j] = true;
            }
            af * af - af * (2.0 * z.re) + &eye * z.norm_sqr()
        };
        q = factor * q;
        let s = q.amax();
        if s > 0.0 {
            q /= s;
        }
    }
    let svd = q.clone().svd(false, true);
    let vt = svd.v_t.expect("requested right singular vectors");
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&x, &y| svd.singular_values[x].total_cmp(&svd.singular_values[y]));
    let smax = svd.singular_values.max();
    let kernel_edge = svd.singular_values[order[k - 1]];
    let next = svd.singular_values[order[k]];
    if smax > 0.0 && (kernel_edge > 1e-7 * smax || next < 1e-3 * smax) {
        return Err(Error::Defective(format!(
            "kernel of dimension {k} not separated: sigma_k/sigma_max = {:.3e}, sigma_(k+1)/sigma_max = {:.3e}",
            kernel_edge / smax,
            next / smax
        )));
    }
    Ok(order[..k].iter().map(|&i| vt.row(i).iter().copied().collect()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cat() -> IntMatrix {
        IntMatrix::from_i64(&[&[2, 1], &[1, 1]])
    }

    const PHI2: f64 = 2.618_033_988_749_895;

    #[test]
    fn eigenvalue_examples() {
        let s = eigenvalues(&cat()).unwrap();
        assert!((s.moduli[0] - PHI2).abs() < 1e-14);
        assert!((s.moduli[1] - 1.0 / PHI2).abs() < 1e-14);
        let s = eigenvalues(&IntMatrix::identity(4)).unwrap();
        assert!(s.values.iter().all(|z| (z - 1.0).norm() < 1e-14));
        let s = eigenvalues(&IntMatrix::from_i64(&[&[0, 1], &[-1, 0]])).unwrap();
        assert!(s.moduli.iter().all(|m| (m - 1.0).abs() < 1e-14));
        assert!(s.values.iter().any(|z| (z - Complex64::i()).norm() < 1e-14));
    }

    #[test]
    fn spectral_radius_examples() {
        assert_eq!(spectral_radius(&IntMatrix::identity(3)).unwrap(), 1.0);
        assert!((spectral_radius(&cat()).unwrap() - 2.618_034_0).abs() < 1e-7);
        assert!((spectral_radius(&IntMatrix::from_i64(&[&[0, 1], &[1, 0]])).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn exterior_power_examples() {
        assert_eq!(exterior_power(&cat(), 1).unwrap(), cat());
        assert_eq!(exterior_power(&cat(), 2).unwrap(), IntMatrix::identity(1));
        assert_eq!(exterior_power(&cat(), 0).unwrap(), IntMatrix::identity(1));
        assert!(exterior_power(&cat(), 3).is_err());
        let cc = cat().direct_sum(&cat());
        let l2 = exterior_power(&cc, 2).unwrap();
        assert_eq!(l2.dim(), 6);
        let s = eigenvalues(&l2).unwrap();
        assert!((s.moduli[0] - PHI2 * PHI2).abs() < 1e-12);
    }

    #[test]
    fn exterior_power_minor_by_hand() {
        // rows {0,2}, cols {1,2} of [[1,2,3],[4,5,6],[7,8,10]] -> det [[2,3],[8,10]] = -4
        let a = IntMatrix::from_i64(&[&[1, 2, 3], &[4, 5, 6], &[7, 8, 10]]);
        let l2 = exterior_power(&a, 2).unwrap();
        // subsets: {0,1}=0, {0,2}=1, {1,2}=2
        assert_eq!(l2.get(1, 2), &BigInt::from(-4));
    }

    #[test]
    fn homology_examples() {
        let r = homological_entropy(&cat()).unwrap();
        assert!((r.h_h - PHI2.ln()).abs() < 1e-12);
        assert_eq!((r.u0, r.unstable_index), (1, 1));
        assert!(r.hyperbolic_action);
        let id = homological_entropy(&IntMatrix::identity(3)).unwrap();
        assert_eq!(id.h_h, 0.0);
        assert_eq!(id.argmax_set, vec![0, 1, 2, 3]);
        assert!(!id.hyperbolic_action);
        let cc = homological_entropy(&cat().direct_sum(&cat())).unwrap();
        assert!((cc.h_h - 2.0 * PHI2.ln()).abs() < 1e-12);
        assert_eq!(cc.u0, 2);
        assert!(homological_entropy(&IntMatrix::from_i64(&[&[2, 0], &[0, 1]])).is_err());
    }

    #[test]
    fn linear_entropy_examples() {
        assert!((linear_entropy(&cat()).unwrap() - 0.962_423_65).abs() < 1e-8);
        assert_eq!(linear_entropy(&IntMatrix::identity(2)).unwrap(), 0.0);
        assert!((linear_entropy(&cat().direct_sum(&cat())).unwrap() - 1.924_847_3).abs() < 1e-7);
    }

    #[test]
    fn hyperbolicity_examples() {
        assert!(is_hyperbolic_action(&cat()));
        assert!(!is_hyperbolic_action(&IntMatrix::from_i64(&[&[1, 1], &[0, 1]])));
        assert!(!is_hyperbolic_action(&IntMatrix::from_i64(&[&[0, 1], &[-1, 0]])));
        // Companion matrix of the Salem polynomial x^4 - x^3 - x^2 - x + 1.
        let salem = IntMatrix::from_i64(&[&[0, 0, 0, -1], &[1, 0, 0, 1], &[0, 1, 0, 1], &[0, 0, 1, 1]]);
        assert!(!is_hyperbolic_action(&salem));
    }

    #[test]
    fn splitting_examples() {
        let s = invariant_splitting(&cat()).unwrap();
        assert_eq!((s.unstable.len(), s.center.len(), s.stable.len()), (1, 0, 1));
        let u = &s.unstable[0];
        assert!((u[1] / u[0] - (5f64.sqrt() - 1.0) / 2.0).abs() < 1e-10);
        let s = invariant_splitting(&IntMatrix::identity(3)).unwrap();
        assert_eq!(s.center.len(), 3);
        let m = cat().direct_sum(&IntMatrix::from_i64(&[&[1, 1], &[0, 1]]));
        let s = invariant_splitting(&m).unwrap();
        assert_eq!((s.unstable.len(), s.center.len(), s.stable.len()), (1, 2, 1));
        // The center space is the second summand.
        for v in &s.center {
            assert!(v[0].abs() < 1e-9 && v[1].abs() < 1e-9);
        }
    }

    #[test]
    fn det_sign_recorded() {
        let flip = IntMatrix::from_i64(&[&[1, 1], &[1, 0]]);
        assert_eq!(flip.det(), -BigInt::one());
        assert_eq!(homological_entropy(&flip).unwrap().det, -1);
    }

    fn unimodular(d: usize, seed: u64) -> IntMatrix {
        use rand::SeedableRng;
        IntMatrix::random_unimodular(d, 6, &mut rand_chacha::ChaCha8Rng::seed_from_u64(seed))
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(40))]

        #[test]
        fn exterior_power_is_functorial(d in 2usize..5, s1: u64, s2: u64) {
            let (a, b) = (unimodular(d, s1), unimodular(d, s2));
            let ai = a.inverse_unimodular().unwrap();
            for k in 0..=d {
                let ka = exterior_power(&a, k).unwrap();
                proptest::prop_assert_eq!(exterior_power(&a.mul(&b), k).unwrap(), ka.mul(&exterior_power(&b, k).unwrap()));
                proptest::prop_assert_eq!(exterior_power(&ai, k).unwrap().mul(&ka), IntMatrix::identity(ka.dim()));
            }
        }

        #[test]
        fn entropy_is_sum_of_expanding_log_moduli(d in 2usize..6, seed: u64) {
            let a = unimodular(d, seed);
            let h = homological_entropy(&a).unwrap();
            let moduli = eigenvalues(&a).unwrap().moduli;
            let expanding: f64 = moduli.iter().filter(|&&m| m > 1.0 + MODULUS_TOL).map(|m| m.ln()).sum();
            proptest::prop_assert!((h.h_h - expanding).abs() < 1e-8 * (1.0 + expanding));
            proptest::prop_assert!((h.per_k_radius[&0] - 1.0).abs() == 0.0);
            proptest::prop_assert!((h.per_k_radius[&d] - 1.0).abs() < 1e-9);
            proptest::prop_assert!(h.argmax_set.contains(&h.u0) && h.argmax_set.iter().all(|&k| k >= h.u0));
        }

        #[test]
        fn entropy_of_inverse_and_powers(d in 2usize..5, seed: u64, n in 1u32..6) {
            let a = unimodular(d, seed);
            let h = homological_entropy(&a).unwrap().h_h;
            let hi = homological_entropy(&a.inverse_unimodular().unwrap()).unwrap().h_h;
            let hn = homological_entropy(&a.pow(n)).unwrap().h_h;
            proptest::prop_assert!((h - hi).abs() < 1e-9);
            proptest::prop_assert!((hn - n as f64 * h).abs() < 1e-8 * (1.0 + hn));
        }

        #[test]
        fn char_poly_is_conjugation_invariant(d in 2usize..5, s1: u64, s2: u64) {
            let (a, p) = (unimodular(d, s1), unimodular(d, s2));
            let conj = p.mul(&a).mul(&p.inverse_unimodular().unwrap());
            proptest::prop_assert_eq!(char_poly(&conj), char_poly(&a));
        }
    }
}
