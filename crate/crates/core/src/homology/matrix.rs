use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::Error;

/// Square matrix with arbitrary-precision integer entries, stored row-major.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct IntMatrix {
    dim: usize,
    entries: Vec<BigInt>,
}

impl IntMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, entries: vec![BigInt::zero(); dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.entries[i * dim + i] = BigInt::one();
        }
        m
    }

    pub fn from_rows<T: Into<BigInt> + Clone>(rows: &[Vec<T>]) -> Result<Self, Error> {
        let dim = rows.len();
        if dim == 0 {
            return Err(Error::Input("empty matrix".into()));
        }
        let mut entries = Vec::with_capacity(dim * dim);
        for row in rows {
            if row.len() != dim {
                return Err(Error::Input(format!("row of length {} in a {dim}x{dim} matrix", row.len())));
            }
            entries.extend(row.iter().cloned().map(Into::into));
        }
        Ok(Self { dim, entries })
    }

    /// Panics on ragged input; intended for literals.
    pub fn from_i64(rows: &[&[i64]]) -> Self {
        let rows: Vec<Vec<i64>> = rows.iter().map(|r| r.to_vec()).collect();
        Self::from_rows(&rows).expect("square integer literal")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> &BigInt {
        &self.entries[i * self.dim + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: BigInt) {
        self.entries[i * self.dim + j] = v;
    }

    pub fn rows(&self) -> Vec<Vec<BigInt>> {
        self.entries.chunks(self.dim).map(|r| r.to_vec()).collect()
    }

    pub fn mul(&self, other: &IntMatrix) -> IntMatrix {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        let d = self.dim;
        let mut out = IntMatrix::zeros(d);
        for i in 0..d {
            for k in 0..d {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..d {
                    out.entries[i * d + j] += a * other.get(k, j);
                }
            }
        }
        out
    }

    pub fn pow(&self, n: u32) -> IntMatrix {
        let mut result = IntMatrix::identity(self.dim);
        let mut base = self.clone();
        let mut e = n;
        while e > 0 {
            if e & 1 == 1 {
                result = result.mul(&base);
            }
            base = base.mul(&base);
            e >>= 1;
        }
        result
    }

    pub fn trace(&self) -> BigInt {
        (0..self.dim).map(|i| self.get(i, i).clone()).sum()
    }

    /// Fraction-free Bareiss elimination.
    pub fn det(&self) -> BigInt {
        bareiss_det(self.rows())
    }

    pub fn is_unimodular(&self) -> bool {
        self.det().abs().is_one()
    }

    /// Exact inverse of a unimodular matrix via the adjugate.
    pub fn inverse_unimodular(&self) -> Result<IntMatrix, Error> {
        let det = self.det();
        if !det.abs().is_one() {
            return Err(Error::NotUnimodular(det.to_string()));
        }
        let d = self.dim;
        if d == 1 {
            return Ok(IntMatrix { dim: 1, entries: vec![det] });
        }
        let mut inv = IntMatrix::zeros(d);
        let rows = self.rows();
        for i in 0..d {
            for j in 0..d {
                let minor: Vec<Vec<BigInt>> = rows
                    .iter()
                    .enumerate()
                    .filter(|(r, _)| *r != i)
                    .map(|(_, row)| row.iter().enumerate().filter(|(c, _)| *c != j).map(|(_, v)| v.clone()).collect())
                    .collect();
                let mut cof = bareiss_det(minor);
                if (i + j) % 2 == 1 {
                    cof = -cof;
                }
                inv.set(j, i, cof * &det);
            }
        }
        Ok(inv)
    }

    pub fn direct_sum(&self, other: &IntMatrix) -> IntMatrix {
        let d = self.dim + other.dim;
        let mut out = IntMatrix::zeros(d);
        for i in 0..self.dim {
            for j in 0..self.dim {
                out.set(i, j, self.get(i, j).clone());
            }
        }
        for i in 0..other.dim {
            for j in 0..other.dim {
                out.set(self.dim + i, self.dim + j, other.get(i, j).clone());
            }
        }
        out
    }

    pub fn to_f64(&self) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_fn(self.dim, self.dim, |i, j| self.get(i, j).to_f64().unwrap_or(f64::NAN))
    }

    /// Row-major entries as `i64`, if they all fit.
    pub fn to_i64(&self) -> Option<Vec<i64>> {
        self.entries.iter().map(|v| v.to_i64()).collect()
    }

    pub fn mul_vec_f64(&self, v: &[f64]) -> Vec<f64> {
        let d = self.dim;
        (0..d).map(|i| (0..d).map(|j| self.get(i, j).to_f64().unwrap_or(f64::NAN) * v[j]).sum()).collect()
    }

    /// Random unimodular matrix built from `steps` elementary row operations
    /// (adds of ±row, swaps, sign flips) applied to the identity.
    pub fn random_unimodular<R: Rng>(dim: usize, steps: usize, rng: &mut R) -> IntMatrix {
        let mut m = IntMatrix::identity(dim);
        if dim == 1 {
            return m;
        }
        for _ in 0..steps {
            let i = rng.random_range(0..dim);
            let mut j = rng.random_range(0..dim - 1);
            if j >= i {
                j += 1;
            }
            match rng.random_range(0..10) {
                0 => {
                    for c in 0..dim {
                        m.entries.swap(i * dim + c, j * dim + c);
                    }
                }
                1 => {
                    for c in 0..dim {
                        let v = -m.get(i, c).clone();
                        m.set(i, c, v);
                    }
                }
                _ => {
                    let s = if rng.random_bool(0.5) { 1 } else { -1 };
                    for c in 0..dim {
                        let v = m.get(i, c) + m.get(j, c) * s;
                        m.set(i, c, v);
                    }
                }
            }
        }
        m
    }

    /// Text form: first line `d`, then `d` rows of space-separated integers.
    pub fn to_text(&self) -> String {
        let mut s = format!("{}\n", self.dim);
        for row in self.entries.chunks(self.dim) {
            let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            s.push_str(&line.join(" "));
            s.push('\n');
        }
        s
    }

    pub fn parse_text(text: &str) -> Result<IntMatrix, Error> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = lines.next().ok_or_else(|| Error::Input("empty matrix text".into()))?;
        let dim: usize = header.parse().map_err(|_| Error::Input(format!("bad dimension line {header:?}")))?;
        if dim == 0 {
            return Err(Error::Input("dimension must be positive".into()));
        }
        let mut rows = Vec::with_capacity(dim);
        for r in 0..dim {
            let line = lines.next().ok_or_else(|| Error::Input(format!("missing row {}", r + 1)))?;
            let row = line
                .split_whitespace()
                .map(|t| BigInt::from_str(t).map_err(|_| Error::Input(format!("bad integer {t:?}"))))
                .collect::<Result<Vec<_>, _>>()?;
            rows.push(row);
        }
        if let Some(extra) = lines.next() {
            return Err(Error::Input(format!("trailing content {extra:?}")));
        }
        IntMatrix::from_rows(&rows)
    }

    /// Inline form `a,b;c,d` (rows separated by `;`).
    pub fn parse_inline(text: &str) -> Result<IntMatrix, Error> {
        let rows = text
            .split(';')
            .map(|r| {
                r.split(|c: char| c == ',' || c.is_whitespace())
                    .filter(|t| !t.is_empty())
                    .map(|t| BigInt::from_str(t).map_err(|_| Error::Input(format!("bad integer {t:?}"))))
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        IntMatrix::from_rows(&rows)
    }
}

fn bareiss_det(mut a: Vec<Vec<BigInt>>) -> BigInt {
    let n = a.len();
    if n == 0 {
        return BigInt::one();
    }
    let mut sign = BigInt::one();
    let mut prev = BigInt::one();
    for k in 0..n - 1 {
        if a[k][k].is_zero() {
            match (k + 1..n).find(|&r| !a[r][k].is_zero()) {
                Some(r) => {
                    a.swap(k, r);
                    sign = -sign;
                }
                None => return BigInt::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = (&a[i][j] * &a[k][k] - &a[i][k] * &a[k][j]) / &prev;
                a[i][j] = v;
            }
        }
        prev = a[k][k].clone();
    }
    sign * &a[n - 1][n - 1]
}

impl fmt::Debug for IntMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<String> = self
            .entries
            .chunks(self.dim)
            .map(|r| r.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(", "))
            .collect();
        write!(f, "[[{}]]", rows.join("], ["))
    }
}

impl fmt::Display for IntMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl Serialize for IntMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<Entry>> = self
            .entries
            .chunks(self.dim)
            .map(|r| r.iter().map(|v| v.to_i64().map(Entry::Int).unwrap_or_else(|| Entry::Big(v.to_string()))).collect())
            .collect();
        rows.serialize(s)
    }
}

impl<'de> Deserialize<'de> for IntMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let rows: Vec<Vec<Entry>> = Vec::deserialize(d)?;
        let rows = rows
            .into_iter()
            .map(|r| {
                r.into_iter()
                    .map(|e| match e {
                        Entry::Int(v) => Ok(BigInt::from(v)),
                        Entry::Big(s) => BigInt::from_str(&s).map_err(serde::de::Error::custom),
                    })
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        IntMatrix::from_rows(&rows).map_err(serde::de::Error::custom)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum Entry {
    Int(i64),
    Big(String),
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn det_and_inverse() {
        let cat = IntMatrix::from_i64(&[&[2, 1], &[1, 1]]);
        assert_eq!(cat.det(), BigInt::one());
        let inv = cat.inverse_unimodular().unwrap();
        assert_eq!(inv, IntMatrix::from_i64(&[&[1, -1], &[-1, 2]]));
        assert_eq!(cat.mul(&inv), IntMatrix::identity(2));
        let m = IntMatrix::from_i64(&[&[0, 2, 1], &[1, 0, 3], &[4, 5, 6]]);
        // 0*(0-15) - 2*(6-12) + 1*(5-0)
        assert_eq!(m.det(), BigInt::from(17));
    }

    #[test]
    fn text_round_trip() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for d in 1..6 {
            let m = IntMatrix::random_unimodular(d, 40, &mut rng);
            assert!(m.is_unimodular());
            assert_eq!(IntMatrix::parse_text(&m.to_text()).unwrap(), m);
            let json = serde_json::to_string(&m).unwrap();
            assert_eq!(serde_json::from_str::<IntMatrix>(&json).unwrap(), m);
        }
    }

    #[test]
    fn big_entries_serialize_as_strings() {
        let big = BigInt::from(i64::MAX) * BigInt::from(4);
        let m = IntMatrix::from_rows(&[vec![big.clone()]]).unwrap();
        let json = serde_json::to_string(&m).unwrap();
        assert!(json.contains('"'));
        assert_eq!(serde_json::from_str::<IntMatrix>(&json).unwrap().get(0, 0), &big);
    }

    #[test]
    fn parse_errors() {
        assert!(IntMatrix::parse_text("2\n1 2\n3").is_err());
        assert!(IntMatrix::parse_text("x\n").is_err());
        assert!(IntMatrix::parse_text("1\n1\n2").is_err());
        assert!(IntMatrix::parse_inline("2,1;1").is_err());
        assert_eq!(IntMatrix::parse_inline("2,1;1,1").unwrap(), IntMatrix::from_i64(&[&[2, 1], &[1, 1]]));
    }

    #[test]
    fn pow_matches_repeated_product() {
        let cat = IntMatrix::from_i64(&[&[2, 1], &[1, 1]]);
        let mut acc = IntMatrix::identity(2);
        for n in 0..7 {
            assert_eq!(cat.pow(n), acc);
            acc = acc.mul(&cat);
        }
    }
}
