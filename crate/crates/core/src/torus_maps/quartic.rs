//! Search for a unimodular quartic with one expanding and three contracting real roots.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::homology::poly::{sturm_count, QPoly};
use crate::homology::roots;
use crate::IntMatrix;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuarticCandidate {
    /// (a, b, c, e) for x⁴ + a x³ + b x² + c x + e.
    pub coeffs: [i64; 4],
    /// Roots in increasing order λ₁ < λ₂ < λ₃ < 1 < λ₄.
    pub roots: [f64; 4],
}

impl QuarticCandidate {
    pub fn companion(&self) -> IntMatrix {
        companion(self.coeffs)
    }
}

/// Companion matrix of x⁴ + a x³ + b x² + c x + e.
pub fn companion([a, b, c, e]: [i64; 4]) -> IntMatrix {
    IntMatrix::from_i64(&[&[0, 0, 0, -e], &[1, 0, 0, -c], &[0, 1, 0, -b], &[0, 0, 1, -a]])
}

/// The layout-valid quartic with |a|, |b|, |c| ≤ `range`, e = ±1, and smallest λ₄.
/// Ties are broken by the lexicographic order of (a, b, c, e).
pub fn search(range: i64) -> Option<QuarticCandidate> {
    let mut best: Option<QuarticCandidate> = None;
    for a in -range..=range {
        for b in -range..=range {
            for c in -range..=range {
                for e in [-1, 1] {
                    let Some(roots) = layout_roots([a, b, c, e]) else { continue };
                    if best.as_ref().is_none_or(|q| roots[3] < q.roots[3]) {
                        best = Some(QuarticCandidate { coeffs: [a, b, c, e], roots });
                    }
                }
            }
        }
    }
    best
}

/// Sorted real roots if they satisfy 0 < λ₁ < λ₂ < λ₃ < 1 < λ₄. The layout is decided
/// exactly; the roots themselves are floating point.
pub fn layout_roots([a, b, c, e]: [i64; 4]) -> Option<[f64; 4]> {
    // All four roots positive forces e = 1 and alternating signs.
    if e != 1 || a >= 0 || b <= 0 || c >= 0 {
        return None;
    }
    let p = QPoly::from_ints(&[e, c, b, a, 1]);
    let (zero, one) = (BigRational::zero(), BigRational::one());
    let bound = BigRational::from_integer((1 + a.abs() + b.abs() + c.abs() + e.abs()).into());
    let simple = p.gcd(&p.derivative()).degree() == Some(0);
    if !simple || p.eval(&one).is_zero() || sturm_count(&p, &zero, &one) != 3 || sturm_count(&p, &one, &bound) != 1 {
        return None;
    }
    let asc = [e as f64, c as f64, b as f64, a as f64, 1.0];
    let z: Vec<Complex64> = roots::aberth(&asc)?;
    if z.iter().any(|w| w.im.abs() > 1e-9 * w.norm().max(1.0)) {
        return None;
    }
    let mut r: Vec<f64> = z.iter().map(|w| w.re).collect();
    r.sort_by(f64::total_cmp);
    Some([r[0], r[1], r[2], r[3]])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn companion_char_poly() {
        let m = companion([-13, 18, -8, 1]);
        let cp = crate::homology::char_poly(&m);
        let expect: Vec<num_bigint::BigInt> = [1, -13, 18, -8, 1].iter().map(|&v| v.into()).collect();
        assert_eq!(cp, expect);
        assert!(m.is_unimodular());
    }

    #[test]
    fn layout_filter() {
        let r = layout_roots([-13, 18, -8, 1]).unwrap();
        assert!((r[3] - 11.493_841_743).abs() < 1e-8);
        // (x-1)(...) style and complex-root quartics are rejected.
        assert!(layout_roots([-4, 6, -4, 1]).is_none());
        assert!(layout_roots([0, 0, 0, 1]).is_none());
        // (x² − 7x + 1)(x − 1)²: a double root at 1 that floating point splits.
        assert!(layout_roots([-9, 16, -9, 1]).is_none());
    }

    #[test]
    fn search_needs_b_up_to_18() {
        assert!(search(10).is_none());
        assert!(search(17).is_none());
        assert_eq!(search(18).unwrap().coeffs, crate::torus_maps::DEFAULT_QUARTIC);
    }
}

