use std::fmt;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Dense complex matrix in row-major order.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidState("non-finite matrix entry".into()));
        }
        Ok(Self { rows, cols, data })
    }

    pub(crate) fn from_vec_unchecked(rows: usize, cols: usize, data: Vec<Complex64>) -> Self {
        debug_assert_eq!(data.len(), rows * cols);
        Self { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_real(rows: usize, cols: usize, values: &[f64]) -> Result<Self> {
        Self::new(
            rows,
            cols,
            values.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
        )
    }

    pub fn diagonal(values: &[Complex64]) -> Self {
        let n = values.len();
        let mut m = Self::zeros(n, n);
        for (i, &v) in values.iter().enumerate() {
            m.data[i * n + i] = v;
        }
        m
    }

    pub fn real_diagonal(values: &[f64]) -> Self {
        let n = values.len();
        let mut m = Self::zeros(n, n);
        for (i, &v) in values.iter().enumerate() {
            m.data[i * n + i] = Complex64::new(v, 0.0);
        }
        m
    }

    /// `|a><b|`
    pub fn outer(a: &[Complex64], b: &[Complex64]) -> Self {
        Self::from_fn(a.len(), b.len(), |i, j| a[i] * b[j].conj())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub(crate) fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<Complex64> {
        self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: Complex64) {
        self.data[i * self.cols + j] = value;
    }

    pub fn column(&self, j: usize) -> Vec<Complex64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn set_column(&mut self, j: usize, values: &[Complex64]) {
        for (i, &v) in values.iter().enumerate() {
            self.set(i, j, v);
        }
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i).conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self::from_vec_unchecked(self.rows, self.cols, self.data.iter().map(|&z| z * s).collect())
    }

    pub fn scale_real(&self, s: f64) -> Self {
        Self::from_vec_unchecked(self.rows, self.cols, self.data.iter().map(|&z| z * s).collect())
    }

    /// `self += s * other`
    pub fn add_scaled(&mut self, other: &ComplexMatrix, s: Complex64) {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += b * s;
        }
    }

    pub fn matmul(&self, other: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(
            self.cols, other.rows,
            "matmul shape mismatch {}x{} * {}x{}",
            self.rows, self.cols, other.rows, other.cols
        );
        let (n, k, m) = (self.rows, self.cols, other.cols);
        let mut out = vec![ZERO; n * m];
        for i in 0..n {
            let row = &mut out[i * m..(i + 1) * m];
            for p in 0..k {
                let a = self.data[i * k + p];
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                let brow = &other.data[p * m..(p + 1) * m];
                for (o, &b) in row.iter_mut().zip(brow) {
                    *o += a * b;
                }
            }
        }
        Self::from_vec_unchecked(n, m, out)
    }

    /// `self * other^dagger` without materializing the adjoint.
    pub fn matmul_adjoint(&self, other: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.cols, other.cols, "matmul_adjoint shape mismatch");
        let (n, k, m) = (self.rows, self.cols, other.rows);
        let mut out = vec![ZERO; n * m];
        for i in 0..n {
            let arow = &self.data[i * k..(i + 1) * k];
            for j in 0..m {
                let brow = &other.data[j * k..(j + 1) * k];
                let mut acc = ZERO;
                for (&a, &b) in arow.iter().zip(brow) {
                    acc += a * b.conj();
                }
                out[i * m + j] = acc;
            }
        }
        Self::from_vec_unchecked(n, m, out)
    }

    /// `U self U^dagger`
    pub fn conjugate_by(&self, u: &ComplexMatrix) -> ComplexMatrix {
        u.matmul(self).matmul_adjoint(u)
    }

    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| {
                self.data[i * self.cols..(i + 1) * self.cols]
                    .iter()
                    .zip(v)
                    .map(|(&a, &b)| a * b)
                    .sum()
            })
            .collect()
    }

    pub fn kron(&self, other: &ComplexMatrix) -> ComplexMatrix {
        let rows = self.rows * other.rows;
        let cols = self.cols * other.cols;
        let mut out = vec![ZERO; rows * cols];
        for i in 0..self.rows {
            for j in 0..self.cols {
                let a = self.get(i, j);
                if a == ZERO {
                    continue;
                }
                for k in 0..other.rows {
                    let r = i * other.rows + k;
                    for l in 0..other.cols {
                        out[r * cols + j * other.cols + l] = a * other.get(k, l);
                    }
                }
            }
        }
        Self::from_vec_unchecked(rows, cols, out)
    }

    pub fn kron_all<'a>(parts: impl IntoIterator<Item = &'a ComplexMatrix>) -> Option<ComplexMatrix> {
        parts.into_iter().fold(None, |acc, m| match acc {
            None => Some(m.clone()),
            Some(a) => Some(a.kron(m)),
        })
    }

    pub fn trace(&self) -> Complex64 {
        assert!(self.is_square());
        (0..self.rows).map(|i| self.get(i, i)).sum()
    }

    /// `Tr(self * other)` in O(n^2).
    pub fn trace_product(&self, other: &ComplexMatrix) -> Complex64 {
        assert_eq!(self.cols, other.rows);
        assert_eq!(self.rows, other.cols);
        let mut acc = ZERO;
        for i in 0..self.rows {
            for k in 0..self.cols {
                acc += self.get(i, k) * other.get(k, i);
            }
        }
        acc
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn distance(&self, other: &ComplexMatrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// `||A - A^dagger||_F`
    pub fn hermitian_residual(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let n = self.rows;
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                acc += (self.get(i, j) - self.get(j, i).conj()).norm_sqr();
            }
        }
        acc.sqrt()
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.is_square() && self.hermitian_residual() <= tol * self.frobenius_norm().max(1.0)
    }

    /// `||U^dagger U - I||_F`
    pub fn unitarity_residual(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        self.adjoint()
            .matmul(self)
            .distance(&ComplexMatrix::identity(self.rows))
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_residual() <= tol
    }

    pub fn is_real(&self) -> bool {
        self.data.iter().all(|z| z.im == 0.0)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Replace with `(A + A^dagger) / 2`.
    pub fn hermitian_part(&self) -> ComplexMatrix {
        let n = self.rows;
        Self::from_fn(n, n, |i, j| (self.get(i, j) + self.get(j, i).conj()) * 0.5)
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let z = self.get(i, j);
                write!(f, "{:+.4}{:+.4}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs)
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix::from_vec_unchecked(
            self.rows,
            self.cols,
            self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        )
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix::from_vec_unchecked(
            self.rows,
            self.cols,
            self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        )
    }
}

#[derive(Serialize, Deserialize)]
struct MatrixRepr {
    rows: usize,
    cols: usize,
    /// `[re, im]` pairs, row-major.
    data: Vec<[f64; 2]>,
}

impl Serialize for ComplexMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixRepr {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| [z.re, z.im]).collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ComplexMatrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let repr = MatrixRepr::deserialize(deserializer)?;
        let data = repr
            .data
            .into_iter()
            .map(|[re, im]| Complex64::new(re, im))
            .collect();
        ComplexMatrix::new(repr.rows, repr.cols, data).map_err(D::Error::custom)
    }
}
