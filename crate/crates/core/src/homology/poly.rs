//! Exact polynomial arithmetic over Q, coefficients stored in ascending order.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use super::IntMatrix;

/// Characteristic polynomial det(xI − A) by Faddeev–LeVerrier.
/// Coefficients are returned in descending order, leading 1 first.
pub fn char_poly(a: &IntMatrix) -> Vec<BigInt> {
    let d = a.dim();
    let mut coeffs = vec![BigInt::one()];
    let mut m = IntMatrix::zeros(d);
    let mut c_prev = BigInt::one();
    for k in 1..=d {
        // M_k = A M_{k-1} + c_{k-1} I
        let mut next = a.mul(&m);
        for i in 0..d {
            let v = next.get(i, i) + &c_prev;
            next.set(i, i, v);
        }
        let am = a.mul(&next);
        let c = -am.trace() / BigInt::from(k);
        coeffs.push(c.clone());
        c_prev = c;
        m = next;
    }
    coeffs
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QPoly(pub Vec<BigRational>);

impl QPoly {
    pub fn from_descending_int(c: &[BigInt]) -> Self {
        let mut v: Vec<BigRational> = c.iter().rev().map(|x| BigRational::from_integer(x.clone())).collect();
        trim(&mut v);
        QPoly(v)
    }

    pub fn from_ints(asc: &[i64]) -> Self {
        let mut v: Vec<BigRational> = asc.iter().map(|&x| BigRational::from_integer(x.into())).collect();
        trim(&mut v);
        QPoly(v)
    }

    pub fn zero() -> Self {
        QPoly(Vec::new())
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    /// Degree, with the zero polynomial reported as `None`.
    pub fn degree(&self) -> Option<usize> {
        self.0.len().checked_sub(1)
    }

    pub fn lead(&self) -> BigRational {
        self.0.last().cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn monic(&self) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        let l = self.lead();
        QPoly(self.0.iter().map(|c| c / &l).collect())
    }

    pub fn derivative(&self) -> Self {
        let mut v: Vec<BigRational> =
            self.0.iter().enumerate().skip(1).map(|(i, c)| c * BigRational::from_integer(BigInt::from(i))).collect();
        trim(&mut v);
        QPoly(v)
    }

    pub fn sub(&self, o: &QPoly) -> Self {
        let n = self.0.len().max(o.0.len());
        let mut v: Vec<BigRational> = (0..n)
            .map(|i| {
                let a = self.0.get(i).cloned().unwrap_or_else(BigRational::zero);
                let b = o.0.get(i).cloned().unwrap_or_else(BigRational::zero);
                a - b
            })
            .collect();
        trim(&mut v);
        QPoly(v)
    }

    pub fn add(&self, o: &QPoly) -> Self {
        self.sub(&o.neg())
    }

    pub fn neg(&self) -> Self {
        QPoly(self.0.iter().map(|c| -c).collect())
    }

    pub fn mul(&self, o: &QPoly) -> Self {
        if self.is_zero() || o.is_zero() {
            return QPoly::zero();
        }
        let mut v = vec![BigRational::zero(); self.0.len() + o.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in o.0.iter().enumerate() {
                v[i + j] += a * b;
            }
        }
        trim(&mut v);
        QPoly(v)
    }

    pub fn divrem(&self, d: &QPoly) -> (QPoly, QPoly) {
        assert!(!d.is_zero(), "division by zero polynomial");
        let mut r = self.0.clone();
        let dd = d.0.len() - 1;
        if r.len() < d.0.len() {
            return (QPoly::zero(), self.clone());
        }
        let mut q = vec![BigRational::zero(); r.len() - dd];
        let lead = d.lead();
        for i in (0..q.len()).rev() {
            let c = &r[i + dd] / &lead;
            if !c.is_zero() {
                for (j, dc) in d.0.iter().enumerate() {
                    r[i + j] -= &c * dc;
                }
            }
            q[i] = c;
        }
        r.truncate(dd);
        trim(&mut r);
        trim(&mut q);
        (QPoly(q), QPoly(r))
    }

    pub fn rem(&self, d: &QPoly) -> QPoly {
        self.divrem(d).1
    }

    /// Monic greatest common divisor.
    pub fn gcd(&self, o: &QPoly) -> QPoly {
        let (mut a, mut b) = (self.clone(), o.clone());
        while !b.is_zero() {
            let r = a.rem(&b);
            a = b;
            b = r;
        }
        a.monic()
    }

    pub fn eval(&self, x: &BigRational) -> BigRational {
        self.0.iter().rev().fold(BigRational::zero(), |acc, c| acc * x + c)
    }

    /// x^deg · p(1/x).
    pub fn reciprocal(&self) -> QPoly {
        let mut v: Vec<BigRational> = self.0.iter().rev().cloned().collect();
        trim(&mut v);
        QPoly(v)
    }

    /// Scale to a primitive integer polynomial with positive leading coefficient.
    pub fn to_primitive_ints(&self) -> Vec<BigInt> {
        use num_integer::Integer;
        let lcm = self.0.iter().fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
        let ints: Vec<BigInt> = self.0.iter().map(|c| (c * BigRational::from_integer(lcm.clone())).to_integer()).collect();
        let g = ints.iter().fold(BigInt::zero(), |acc, c| acc.gcd(c));
        let sign = if self.lead().is_negative() { -BigInt::one() } else { BigInt::one() };
        if g.is_zero() {
            return ints;
        }
        ints.into_iter().map(|c| c / &g * &sign).collect()
    }

    pub fn to_f64(&self) -> Vec<f64> {
        use num_traits::ToPrimitive;
        self.0.iter().map(|c| c.to_f64().unwrap_or(f64::NAN)).collect()
    }
}

fn trim(v: &mut Vec<BigRational>) {
    while v.last().is_some_and(|c| c.is_zero()) {
        v.pop();
    }
}

/// Yun's square-free factorisation: returns (factor, multiplicity) with monic,
/// pairwise coprime, square-free factors of positive degree.
pub fn square_free(p: &QPoly) -> Vec<(QPoly, usize)> {
    let mut out = Vec::new();
    if p.degree().unwrap_or(0) == 0 {
        return out;
    }
    let p = p.monic();
    let dp = p.derivative();
    let a0 = p.gcd(&dp);
    let mut b = p.divrem(&a0).0;
    let mut c = dp.divrem(&a0).0;
    let mut d = c.sub(&b.derivative());
    let mut i = 1;
    loop {
        let a = b.gcd(&d);
        if a.degree().unwrap_or(0) > 0 {
            out.push((a.clone(), i));
        }
        b = b.divrem(&a).0;
        if b.degree().unwrap_or(0) == 0 {
            break;
        }
        c = d.divrem(&a).0;
        d = c.sub(&b.derivative());
        i += 1;
    }
    out
}

/// Number of distinct real roots of `p` in the half-open interval (a, b].
pub fn sturm_count(p: &QPoly, a: &BigRational, b: &BigRational) -> usize {
    if p.degree().unwrap_or(0) == 0 {
        return 0;
    }
    let g = p.gcd(&p.derivative());
    let sf = p.divrem(&g).0;
    let mut seq = vec![sf.clone(), sf.derivative()];
    loop {
        let n = seq.len();
        let r = seq[n - 2].rem(&seq[n - 1]);
        if r.is_zero() {
            break;
        }
        seq.push(r.neg());
    }
    let changes = |x: &BigRational| {
        let signs: Vec<i8> = seq
            .iter()
            .map(|q| {
                let v = q.eval(x);
                if v.is_positive() {
                    1
                } else if v.is_negative() {
                    -1
                } else {
                    0
                }
            })
            .filter(|&s| s != 0)
            .collect();
        signs.windows(2).filter(|w| w[0] != w[1]).count()
    };
    changes(a).saturating_sub(changes(b))
}

/// For a palindromic polynomial g of even degree 2m, the polynomial r of degree m
/// with x^{-m} g(x) = r(x + 1/x).
pub fn palindromic_to_trace(g: &QPoly) -> QPoly {
    let n = g.0.len() - 1;
    debug_assert!(n % 2 == 0);
    let m = n / 2;
    // T_k(t) = x^k + x^{-k}
    let two = QPoly::from_ints(&[2]);
    let t = QPoly::from_ints(&[0, 1]);
    let mut ts = vec![two, t.clone()];
    for k in 2..=m {
        let next = t.mul(&ts[k - 1]).sub(&ts[k - 2]);
        ts.push(next);
    }
    let mut r = QPoly(vec![g.0[m].clone()]);
    for j in 0..m {
        let c = QPoly(vec![g.0[j].clone()]);
        r = r.add(&c.mul(&ts[m - j]));
    }
    r
}

/// True iff the integer polynomial has a root on the unit circle, decided exactly.
pub fn has_unit_circle_root(p: &QPoly) -> bool {
    let one = BigRational::one();
    if p.eval(&one).is_zero() || p.eval(&-one).is_zero() {
        return true;
    }
    let g = p.gcd(&p.reciprocal());
    let Some(deg) = g.degree() else { return false };
    if deg == 0 {
        return false;
    }
    // With ±1 excluded the reciprocal-closed part is palindromic of even degree;
    // unit-circle roots z = e^{iθ} correspond to real roots t = 2cos θ in (−2, 2).
    let r = palindromic_to_trace(&g);
    let two = BigRational::from_integer(2.into());
    sturm_count(&r, &-two.clone(), &two) > 0
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ints(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    #[test]
    fn char_poly_small_cases() {
        assert_eq!(char_poly(&IntMatrix::from_i64(&[&[2, 1], &[1, 1]])), ints(&[1, -3, 1]));
        assert_eq!(char_poly(&IntMatrix::identity(3)), ints(&[1, -3, 3, -1]));
        assert_eq!(char_poly(&IntMatrix::from_i64(&[&[0, 1], &[-1, 0]])), ints(&[1, 0, 1]));
    }

    #[test]
    fn char_poly_matches_cofactor_expansion_3x3() {
        // det(xI - A) for A = [[1,2,0],[0,1,3],[4,0,1]]:
        // (x-1)^3 - (2*3*4) = x^3 - 3x^2 + 3x - 25
        let a = IntMatrix::from_i64(&[&[1, 2, 0], &[0, 1, 3], &[4, 0, 1]]);
        assert_eq!(char_poly(&a), ints(&[1, -3, 3, -25]));
    }

    #[test]
    fn yun_multiplicities() {
        // (x-1)^3 (x+2)^2 (x^2+1)
        let p = QPoly::from_ints(&[-1, 1])
            .mul(&QPoly::from_ints(&[-1, 1]))
            .mul(&QPoly::from_ints(&[-1, 1]))
            .mul(&QPoly::from_ints(&[2, 1]))
            .mul(&QPoly::from_ints(&[2, 1]))
            .mul(&QPoly::from_ints(&[1, 0, 1]));
        let f = square_free(&p);
        let mut got: Vec<(usize, Vec<i64>)> = f
            .iter()
            .map(|(q, m)| {
                let c: Vec<i64> = q.to_primitive_ints().iter().map(|x| i64::try_from(x).unwrap()).collect();
                (*m, c)
            })
            .collect();
        got.sort();
        assert_eq!(got, vec![(1, vec![1, 0, 1]), (2, vec![2, 1]), (3, vec![-1, 1])]);
    }

    #[test]
    fn sturm_counts_roots() {
        // (x-1)(x-2)(x+3)
        let p = QPoly::from_ints(&[-1, 1]).mul(&QPoly::from_ints(&[-2, 1])).mul(&QPoly::from_ints(&[3, 1]));
        let q = |a: i64, b: i64| sturm_count(&p, &BigRational::from_integer(a.into()), &BigRational::from_integer(b.into()));
        assert_eq!(q(-10, 10), 3);
        assert_eq!(q(0, 10), 2);
        assert_eq!(q(1, 2), 1);
        assert_eq!(q(-3, 0), 0);
    }

    #[test]
    fn unit_circle_detection() {
        // cat: x^2 - 3x + 1
        assert!(!has_unit_circle_root(&QPoly::from_ints(&[1, -3, 1])));
        // x^2 + 1, x^2 - x + 1 (primitive 6th roots), (x-1)^2
        assert!(has_unit_circle_root(&QPoly::from_ints(&[1, 0, 1])));
        assert!(has_unit_circle_root(&QPoly::from_ints(&[1, -1, 1])));
        assert!(has_unit_circle_root(&QPoly::from_ints(&[1, -2, 1])));
        // Salem polynomial x^4 - x^3 - x^2 - x + 1: two roots on the circle, not cyclotomic.
        assert!(has_unit_circle_root(&QPoly::from_ints(&[1, -1, -1, -1, 1])));
        // x^4 - 4x^3 + 5x^2 - 4x + 1 = (x^2-3x+1)(x^2-x+1)
        assert!(has_unit_circle_root(&QPoly::from_ints(&[1, -4, 5, -4, 1])));
        // cat ⊕ cat: (x^2-3x+1)^2
        let c = QPoly::from_ints(&[1, -3, 1]);
        assert!(!has_unit_circle_root(&c.mul(&c)));
    }

    #[test]
    fn trace_substitution() {
        // x^2 - 3x + 1 = x (t - 3) with t = x + 1/x
        let r = palindromic_to_trace(&QPoly::from_ints(&[1, -3, 1]));
        assert_eq!(r, QPoly::from_ints(&[-3, 1]));
        // x^4 + 1 = x^2 (t^2 - 2)
        let r = palindromic_to_trace(&QPoly::from_ints(&[1, 0, 0, 0, 1]));
        assert_eq!(r, QPoly::from_ints(&[-2, 0, 1]));
    }
}
