//! Square integer matrices with arbitrary precision entries and the
//! unipotence tests used on homology.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LinalgError {
    #[error("matrix is not unipotent")]
    NotUnipotent,
    #[error("rows have inconsistent lengths")]
    NotSquare,
}

/// Row-major `n × n` integer matrix.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct IntMatrix {
    n: usize,
    data: Vec<BigInt>,
}

impl IntMatrix {
    pub fn zero(n: usize) -> Self {
        IntMatrix {
            n,
            data: vec![BigInt::zero(); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zero(n);
        for i in 0..n {
            m.data[i * n + i] = BigInt::one();
        }
        m
    }

    pub fn from_rows<T: Into<BigInt> + Clone>(rows: &[Vec<T>]) -> Result<Self, LinalgError> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(LinalgError::NotSquare);
        }
        Ok(IntMatrix {
            n,
            data: rows.iter().flat_map(|r| r.iter().cloned().map(Into::into)).collect(),
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> &BigInt {
        &self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: BigInt) {
        self.data[i * self.n + j] = v;
    }

    pub fn rows(&self) -> Vec<Vec<BigInt>> {
        self.data.chunks(self.n.max(1)).map(|r| r.to_vec()).collect()
    }

    pub fn column(&self, j: usize) -> Vec<BigInt> {
        (0..self.n).map(|i| self.get(i, j).clone()).collect()
    }

    pub fn mul(&self, other: &IntMatrix) -> IntMatrix {
        let n = self.n;
        let mut out = Self::zero(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * other.get(k, j);
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[BigInt]) -> Vec<BigInt> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j) * &v[j]).sum())
            .collect()
    }

    pub fn sub(&self, other: &IntMatrix) -> IntMatrix {
        IntMatrix {
            n: self.n,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn pow(&self, k: u32) -> IntMatrix {
        let mut out = Self::identity(self.n);
        for _ in 0..k {
            out = out.mul(self);
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Zero::is_zero)
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::identity(self.n)
    }

    pub fn is_upper_unitriangular(&self) -> bool {
        (0..self.n).all(|i| {
            self.get(i, i).is_one() && (0..i).all(|j| self.get(i, j).is_zero())
        })
    }

    /// `(I − M)^n = 0`.
    pub fn is_unipotent(&self) -> bool {
        let nil = Self::identity(self.n).sub(self);
        nil.pow(self.n as u32).is_zero()
    }

    /// `M ≡ I (mod 3)`.
    pub fn trivial_mod3(&self) -> bool {
        let three = BigInt::from(3);
        self.sub(&Self::identity(self.n))
            .data
            .iter()
            .all(|x| x.mod_floor(&three).is_zero())
    }

    /// Determinant by fraction-free elimination.
    pub fn determinant(&self) -> BigInt {
        let n = self.n;
        if n == 0 {
            return BigInt::one();
        }
        let mut a = self.rows();
        let mut sign = BigInt::one();
        let mut prev = BigInt::one();
        for k in 0..n - 1 {
            if a[k][k].is_zero() {
                match (k + 1..n).find(|&i| !a[i][k].is_zero()) {
                    Some(i) => {
                        a.swap(i, k);
                        sign = -sign;
                    }
                    None => return BigInt::zero(),
                }
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    a[i][j] = (&a[i][j] * &a[k][k] - &a[i][k] * &a[k][j]) / &prev;
                }
            }
            prev = a[k][k].clone();
        }
        sign * &a[n - 1][n - 1]
    }

    /// Inverse of a matrix with determinant ±1.
    pub fn inverse_unimodular(&self) -> Option<IntMatrix> {
        let n = self.n;
        let mut a = self.rows();
        let mut inv = Self::identity(n).rows();
        // integer row reduction by Euclid steps keeps everything integral
        for col in 0..n {
            loop {
                let pivot = (col..n)
                    .filter(|&i| !a[i][col].is_zero())
                    .min_by(|&i, &j| a[i][col].abs().cmp(&a[j][col].abs()))?;
                a.swap(col, pivot);
                inv.swap(col, pivot);
                let mut done = true;
                for i in col + 1..n {
                    if a[i][col].is_zero() {
                        continue;
                    }
                    let q = a[i][col].div_floor(&a[col][col]);
                    for j in 0..n {
                        let t = &q * &a[col][j];
                        a[i][j] -= t;
                        let t = &q * &inv[col][j];
                        inv[i][j] -= t;
                    }
                    if !a[i][col].is_zero() {
                        done = false;
                    }
                }
                if done {
                    break;
                }
            }
            if !a[col][col].abs().is_one() {
                return None;
            }
            if a[col][col].is_negative() {
                for j in 0..n {
                    a[col][j] = -a[col][j].clone();
                    inv[col][j] = -inv[col][j].clone();
                }
            }
        }
        for col in (0..n).rev() {
            for i in 0..col {
                let q = a[i][col].clone();
                if q.is_zero() {
                    continue;
                }
                for j in 0..n {
                    let t = &q * &a[col][j];
                    a[i][j] -= t;
                    let t = &q * &inv[col][j];
                    inv[i][j] -= t;
                }
            }
        }
        IntMatrix::from_rows(&inv).ok()
    }

    fn block_from(&self, start: usize) -> IntMatrix {
        let m = self.n - start;
        let mut out = Self::zero(m);
        for i in 0..m {
            for j in 0..m {
                out.set(i, j, self.get(start + i, start + j).clone());
            }
        }
        out
    }

    /// Columns of `P` form a basis in which `M` is upper unitriangular:
    /// `P⁻¹ M P` has ones on the diagonal and zeros below.
    pub fn unipotent_basis(&self) -> Result<IntMatrix, LinalgError> {
        if !self.is_unipotent() {
            return Err(LinalgError::NotUnipotent);
        }
        Ok(self.unipotent_basis_unchecked())
    }

    fn unipotent_basis_unchecked(&self) -> IntMatrix {
        let n = self.n;
        if n <= 1 {
            return Self::identity(n);
        }
        let v = primitive_kernel_vector(&self.sub(&Self::identity(n)));
        let (u, q) = unimodular_to_e1(&v);
        let conj = u.mul(self).mul(&q);
        let sub = conj.block_from(1).unipotent_basis_unchecked();
        let mut ext = Self::identity(n);
        for i in 1..n {
            for j in 1..n {
                ext.set(i, j, sub.get(i - 1, j - 1).clone());
            }
        }
        q.mul(&ext)
    }
}

/// A primitive integer vector in the kernel of `a`, which must be singular.
fn primitive_kernel_vector(a: &IntMatrix) -> Vec<BigInt> {
    let n = a.dim();
    let mut rows = a.rows();
    let mut pivots: Vec<usize> = Vec::new();
    let mut r = 0;
    for c in 0..n {
        let Some(p) = (r..n).find(|&i| !rows[i][c].is_zero()) else {
            continue;
        };
        rows.swap(r, p);
        for i in 0..n {
            if i != r && !rows[i][c].is_zero() {
                let (x, y) = (rows[r][c].clone(), rows[i][c].clone());
                for j in 0..n {
                    rows[i][j] = &rows[i][j] * &x - &rows[r][j] * &y;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    let free = (0..n).find(|c| !pivots.contains(c)).expect("singular matrix");
    // back-substitute with the free variable set to the product of pivots
    let scale: BigInt = pivots.iter().enumerate().map(|(i, &c)| rows[i][c].clone()).product();
    let mut v = vec![BigInt::zero(); n];
    v[free] = scale.clone();
    for (i, &c) in pivots.iter().enumerate() {
        v[c] = -(&rows[i][free] * &scale) / &rows[i][c];
    }
    let g = v.iter().fold(BigInt::zero(), |g, x| g.gcd(x));
    v.iter().map(|x| x / &g).collect()
}

/// For primitive `v` returns `(U, U⁻¹)` unimodular with `U v = e₁`.
fn unimodular_to_e1(v: &[BigInt]) -> (IntMatrix, IntMatrix) {
    let n = v.len();
    let mut x = v.to_vec();
    let mut u = IntMatrix::identity(n);
    let mut q = IntMatrix::identity(n);
    loop {
        let nz: Vec<usize> = (0..n).filter(|&i| !x[i].is_zero()).collect();
        if nz.len() <= 1 {
            break;
        }
        let i = *nz.iter().min_by(|&&a, &&b| x[a].abs().cmp(&x[b].abs())).unwrap();
        for &j in &nz {
            if j == i {
                continue;
            }
            let k = x[j].div_floor(&x[i]);
            let t = &k * &x[i];
            x[j] -= t;
            // row_j(U) -= k row_i(U); column_i(Q) += k column_j(Q)
            for c in 0..n {
                let t = &k * u.get(i, c);
                u.data[j * n + c] -= t;
                let t = &k * q.get(c, j);
                q.data[c * n + i] += t;
            }
        }
    }
    let i = (0..n).find(|&i| !x[i].is_zero()).expect("nonzero vector");
    if i != 0 {
        for c in 0..n {
            u.data.swap(i * n + c, c);
            q.data.swap(c * n + i, c * n);
        }
    }
    if x[i].is_negative() {
        for c in 0..n {
            u.data[c] = -u.data[c].clone();
            q.data[c * n] = -q.data[c * n].clone();
        }
    }
    (u, q)
}

impl fmt::Debug for IntMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl fmt::Display for IntMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, row) in self.rows().iter().enumerate() {
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

impl Serialize for IntMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<String>> = self
            .rows()
            .iter()
            .map(|r| r.iter().map(|x| x.to_string()).collect())
            .collect();
        rows.serialize(s)
    }
}
