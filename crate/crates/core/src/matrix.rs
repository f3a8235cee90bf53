//! Exact integer matrix groups, optionally reduced modulo `m`.

use std::collections::{HashSet, VecDeque};
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Matrix {
    n: usize,
    entries: Vec<BigInt>,
}

impl Matrix {
    pub fn identity(n: usize) -> Self {
        let mut entries = vec![BigInt::zero(); n * n];
        for i in 0..n {
            entries[i * n + i] = BigInt::one();
        }
        Matrix { n, entries }
    }

    pub fn from_rows(rows: &[Vec<i64>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidMatrix("matrix must be square and non-empty".into()));
        }
        Ok(Matrix { n, entries: rows.iter().flatten().map(|&x| BigInt::from(x)).collect() })
    }

    pub fn from_bigint_rows(rows: Vec<Vec<BigInt>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidMatrix("matrix must be square and non-empty".into()));
        }
        Ok(Matrix { n, entries: rows.into_iter().flatten().collect() })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> &BigInt {
        &self.entries[i * self.n + j]
    }

    pub fn rows(&self) -> Vec<Vec<BigInt>> {
        self.entries.chunks(self.n).map(|r| r.to_vec()).collect()
    }

    pub fn mul(&self, other: &Matrix) -> Matrix {
        let n = self.n;
        let mut entries = vec![BigInt::zero(); n * n];
        for i in 0..n {
            for k in 0..n {
                let a = &self.entries[i * n + k];
                if a.is_zero() {
                    continue;
                }
                for j in 0..n {
                    entries[i * n + j] += a * &other.entries[k * n + j];
                }
            }
        }
        Matrix { n, entries }
    }

    pub fn reduce_mod(&self, m: &BigInt) -> Matrix {
        Matrix { n: self.n, entries: self.entries.iter().map(|x| x.mod_floor(m)).collect() }
    }

    pub fn is_identity(&self) -> bool {
        *self == Matrix::identity(self.n)
    }

    pub fn det(&self) -> BigInt {
        det_rec(&self.entries, self.n)
    }

    fn minor(&self, skip_r: usize, skip_c: usize) -> Vec<BigInt> {
        let n = self.n;
        let mut out = Vec::with_capacity((n - 1) * (n - 1));
        for i in 0..n {
            if i == skip_r {
                continue;
            }
            for j in 0..n {
                if j != skip_c {
                    out.push(self.entries[i * n + j].clone());
                }
            }
        }
        out
    }

    /// Inverse over the integers (determinant +-1) or modulo `m`
    /// (determinant a unit mod `m`).
    pub fn inverse(&self, modulus: Option<&BigInt>) -> Option<Matrix> {
        let n = self.n;
        let det = self.det();
        let det_inv = match modulus {
            None => {
                if det.abs() != BigInt::one() {
                    return None;
                }
                det.clone()
            }
            Some(m) => mod_inverse(&det.mod_floor(m), m)?,
        };
        let mut entries = vec![BigInt::zero(); n * n];
        for i in 0..n {
            for j in 0..n {
                let cof = if n == 1 { BigInt::one() } else { det_rec(&self.minor(j, i), n - 1) };
                let sign = if (i + j) % 2 == 0 { BigInt::one() } else { -BigInt::one() };
                entries[i * n + j] = sign * cof * &det_inv;
            }
        }
        let inv = Matrix { n, entries };
        Some(match modulus {
            Some(m) => inv.reduce_mod(m),
            None => inv,
        })
    }
}

fn det_rec(e: &[BigInt], n: usize) -> BigInt {
    match n {
        1 => e[0].clone(),
        2 => &e[0] * &e[3] - &e[1] * &e[2],
        _ => {
            let mut total = BigInt::zero();
            for c in 0..n {
                if e[c].is_zero() {
                    continue;
                }
                let mut minor = Vec::with_capacity((n - 1) * (n - 1));
                for i in 1..n {
                    for j in 0..n {
                        if j != c {
                            minor.push(e[i * n + j].clone());
                        }
                    }
                }
                let term = &e[c] * det_rec(&minor, n - 1);
                if c % 2 == 0 {
                    total += term;
                } else {
                    total -= term;
                }
            }
            total
        }
    }
}

fn mod_inverse(a: &BigInt, m: &BigInt) -> Option<BigInt> {
    let g = a.extended_gcd(m);
    if g.gcd != BigInt::one() {
        return None;
    }
    Some(g.x.mod_floor(m))
}

impl fmt::Display for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, row) in self.entries.chunks(self.n).enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "[")?;
            for (j, x) in row.iter().enumerate() {
                if j > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{x}")?;
            }
            write!(f, "]")?;
        }
        write!(f, "]")
    }
}

/// Named integer matrix generators, optionally reduced modulo `m`.
#[derive(Clone, Debug)]
pub struct MatrixGroupSpec {
    pub dimension: usize,
    pub generators: Vec<(String, Matrix)>,
    pub modulus: Option<BigInt>,
    pub special_linear: bool,
}

impl MatrixGroupSpec {
    pub fn new(
        dimension: usize,
        generators: Vec<(String, Matrix)>,
        modulus: Option<BigInt>,
        special_linear: bool,
    ) -> Result<Self> {
        if let Some(m) = &modulus {
            if *m < BigInt::from(2) {
                return Err(Error::InvalidMatrix("modulus must be at least 2".into()));
            }
        }
        let mut gens = Vec::with_capacity(generators.len());
        for (name, g) in generators {
            if g.dim() != dimension {
                return Err(Error::InvalidMatrix(format!("generator {name} has wrong dimension")));
            }
            let g = match &modulus {
                Some(m) => g.reduce_mod(m),
                None => g,
            };
            if g.inverse(modulus.as_ref()).is_none() {
                return Err(Error::InvalidMatrix(format!("generator {name} is not invertible")));
            }
            if special_linear {
                let det = match &modulus {
                    Some(m) => g.det().mod_floor(m),
                    None => g.det(),
                };
                if det != BigInt::one() {
                    return Err(Error::InvalidMatrix(format!("generator {name} has determinant {det}")));
                }
            }
            gens.push((name, g));
        }
        Ok(MatrixGroupSpec { dimension, generators: gens, modulus, special_linear })
    }

    pub fn canonical(&self, m: Matrix) -> Matrix {
        match &self.modulus {
            Some(q) => m.reduce_mod(q),
            None => m,
        }
    }

    pub fn multiply(&self, a: &Matrix, b: &Matrix) -> Matrix {
        self.canonical(a.mul(b))
    }

    pub fn inverse(&self, a: &Matrix) -> Matrix {
        a.inverse(self.modulus.as_ref()).expect("group elements are invertible")
    }

    pub fn with_modulus(&self, m: u64) -> Result<MatrixGroupSpec> {
        MatrixGroupSpec::new(
            self.dimension,
            self.generators.clone(),
            Some(BigInt::from(m)),
            self.special_linear,
        )
    }
}

/// Order of the group generated by the generators reduced mod `m`, by
/// closure enumeration.
pub fn congruence_quotient_order(spec: &MatrixGroupSpec, m: u64, cap: usize) -> Result<usize> {
    if m < 2 {
        return Err(Error::Precondition("modulus must be at least 2".into()));
    }
    let q = spec.with_modulus(m)?;
    let mut gens: Vec<Matrix> = q.generators.iter().map(|(_, g)| g.clone()).collect();
    let invs: Vec<Matrix> = gens.iter().map(|g| q.inverse(g)).collect();
    gens.extend(invs);
    let id = Matrix::identity(q.dimension);
    let mut seen: HashSet<Matrix> = HashSet::from([id.clone()]);
    let mut queue = VecDeque::from([id]);
    while let Some(x) = queue.pop_front() {
        for g in &gens {
            let y = q.multiply(&x, g);
            if !seen.contains(&y) {
                if seen.len() >= cap {
                    return Err(Error::CapExceeded { what: "congruence quotient closure".into(), cap });
                }
                seen.insert(y.clone());
                queue.push_back(y);
            }
        }
    }
    Ok(seen.len())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sl2z() -> MatrixGroupSpec {
        MatrixGroupSpec::new(
            2,
            vec![
                ("S".into(), Matrix::from_rows(&[vec![0, -1], vec![1, 0]]).unwrap()),
                ("T".into(), Matrix::from_rows(&[vec![1, 1], vec![0, 1]]).unwrap()),
            ],
            None,
            true,
        )
        .unwrap()
    }

    /// All 2x2 matrices over Z/m with determinant 1.
    fn brute_sl2(m: i64) -> usize {
        let mut count = 0;
        for a in 0..m {
            for b in 0..m {
                for c in 0..m {
                    for d in 0..m {
                        if (a * d - b * c).rem_euclid(m) == 1 {
                            count += 1;
                        }
                    }
                }
            }
        }
        count
    }

    #[test]
    fn sl2_congruence_orders_match_enumeration() {
        let g = sl2z();
        assert_eq!(congruence_quotient_order(&g, 2, 1000).unwrap(), brute_sl2(2));
        assert_eq!(congruence_quotient_order(&g, 3, 1000).unwrap(), brute_sl2(3));
        assert_eq!(brute_sl2(2), 6);
        assert_eq!(brute_sl2(3), 24);
    }

    #[test]
    fn inverse_and_det() {
        let s = Matrix::from_rows(&[vec![0, -1], vec![1, 0]]).unwrap();
        assert_eq!(s.det(), BigInt::one());
        assert!(s.mul(&s.inverse(None).unwrap()).is_identity());
        let m = Matrix::from_rows(&[vec![2, 1, 0], vec![1, 1, 0], vec![0, 3, 1]]).unwrap();
        assert!(m.mul(&m.inverse(None).unwrap()).is_identity());
        assert!(Matrix::from_rows(&[vec![2, 0], vec![0, 1]]).unwrap().inverse(None).is_none());
    }

    #[test]
    fn closure_cap_reported() {
        let r = congruence_quotient_order(&sl2z(), 7, 10);
        assert!(matches!(r, Err(Error::CapExceeded { .. })));
    }
}
