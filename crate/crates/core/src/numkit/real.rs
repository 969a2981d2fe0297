//! Real symmetric eigenproblems, used for the (real) layer Hamiltonians.

use num_complex::Complex64;

use super::matrix::ComplexMatrix;
use crate::error::{Error, Result};
use crate::tolerance::Tolerances;

/// `A = V diag(values) V^T` with `V` real orthogonal, row-major, eigenvectors in columns.
/// Values are not sorted.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricEigen {
    pub n: usize,
    pub values: Vec<f64>,
    pub vectors: Vec<f64>,
}

impl SymmetricEigen {
    /// `exp(-i A t)`
    pub fn exp_i(&self, t: f64) -> ComplexMatrix {
        let n = self.n;
        let phases: Vec<Complex64> = self
            .values
            .iter()
            .map(|&l| Complex64::from_polar(1.0, -l * t))
            .collect();
        let v = &self.vectors;
        let mut out = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let mut acc = Complex64::new(0.0, 0.0);
                for k in 0..n {
                    acc += phases[k] * (v[i * n + k] * v[j * n + k]);
                }
                out.push(acc);
            }
        }
        ComplexMatrix::from_vec_unchecked(n, n, out)
    }

    /// `V^T M V` for a real matrix `M`.
    pub fn to_eigenbasis(&self, m: &[f64]) -> Vec<f64> {
        let tmp = real_matmul(m, &self.vectors, self.n);
        real_tmatmul(&self.vectors, &tmp, self.n)
    }
}

pub fn symmetric_eig(a: &[f64], n: usize, tol: &Tolerances) -> Result<SymmetricEigen> {
    check_symmetric(a, n, tol)?;
    let mut m = a.to_vec();
    let mut v = identity(n);
    let scale = frobenius(&m);
    jacobi_in_place(&mut m, &mut v, n, tol.jacobi_offdiag * scale, tol.jacobi_max_sweeps)?;
    Ok(SymmetricEigen {
        n,
        values: (0..n).map(|i| m[i * n + i]).collect(),
        vectors: v,
    })
}

/// Eigendecomposition of `a` starting from the eigenbasis of a nearby matrix.
pub fn symmetric_eig_warm(a: &[f64], guess: &SymmetricEigen, tol: &Tolerances) -> Result<SymmetricEigen> {
    let n = guess.n;
    check_symmetric(a, n, tol)?;
    let mut m = guess.to_eigenbasis(a);
    symmetrize(&mut m, n);
    let mut w = identity(n);
    let scale = frobenius(a);
    jacobi_in_place(&mut m, &mut w, n, tol.jacobi_offdiag * scale, tol.jacobi_max_sweeps)?;
    Ok(SymmetricEigen {
        n,
        values: (0..n).map(|i| m[i * n + i]).collect(),
        vectors: real_matmul(&guess.vectors, &w, n),
    })
}

fn check_symmetric(a: &[f64], n: usize, tol: &Tolerances) -> Result<()> {
    if a.len() != n * n {
        return Err(Error::DimensionMismatch(format!("{} entries for {n}x{n}", a.len())));
    }
    let mut residual = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            let d = a[i * n + j] - a[j * n + i];
            residual += 2.0 * d * d;
        }
    }
    let residual = residual.sqrt();
    if residual > tol.hermitian * frobenius(a).max(1.0) {
        return Err(Error::NonHermitian { residual });
    }
    Ok(())
}

fn symmetrize(m: &mut [f64], n: usize) {
    for i in 0..n {
        for j in i + 1..n {
            let avg = 0.5 * (m[i * n + j] + m[j * n + i]);
            m[i * n + j] = avg;
            m[j * n + i] = avg;
        }
    }
}

fn frobenius(m: &[f64]) -> f64 {
    m.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn identity(n: usize) -> Vec<f64> {
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    v
}

/// `A B` for square row-major real matrices.
pub(crate) fn real_matmul(a: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i * n + k];
            if aik == 0.0 {
                continue;
            }
            let row = &b[k * n..(k + 1) * n];
            let dst = &mut out[i * n..(i + 1) * n];
            for (d, &x) in dst.iter_mut().zip(row) {
                *d += aik * x;
            }
        }
    }
    out
}

/// `A^T B`
pub(crate) fn real_tmatmul(a: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n * n];
    for k in 0..n {
        for i in 0..n {
            let aki = a[k * n + i];
            if aki == 0.0 {
                continue;
            }
            let row = &b[k * n..(k + 1) * n];
            let dst = &mut out[i * n..(i + 1) * n];
            for (d, &x) in dst.iter_mut().zip(row) {
                *d += aki * x;
            }
        }
    }
    out
}

/// Rotation parameters `(t, c, s)` annihilating the off-diagonal `b`.
#[inline]
pub(crate) fn rotation(app: f64, aqq: f64, b: f64) -> (f64, f64, f64) {
    let theta = (aqq - app) / (2.0 * b);
    let t = if theta.abs() > 1e150 {
        0.5 / theta
    } else {
        theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
    };
    let c = 1.0 / (t * t + 1.0).sqrt();
    (t, c, t * c)
}

/// Cyclic Jacobi; returns the number of sweeps used.
pub(crate) fn jacobi_in_place(
    m: &mut [f64],
    v: &mut [f64],
    n: usize,
    target: f64,
    max_sweeps: usize,
) -> Result<usize> {
    let mut sweep = 0;
    loop {
        let mut off = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                off += 2.0 * m[p * n + q] * m[p * n + q];
            }
        }
        let off = off.sqrt();
        if off <= target || off == 0.0 {
            return Ok(sweep);
        }
        if sweep >= max_sweeps {
            return Err(Error::NoConvergence { sweeps: sweep });
        }
        sweep += 1;
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[p * n + q];
                if apq.abs() <= f64::MIN_POSITIVE {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let (t, c, s) = rotation(app, aqq, apq);
                for k in 0..n {
                    let akp = m[k * n + p];
                    let akq = m[k * n + q];
                    m[k * n + p] = c * akp - s * akq;
                    m[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = m[p * n + k];
                    let aqk = m[q * n + k];
                    m[p * n + k] = c * apk - s * aqk;
                    m[q * n + k] = s * apk + c * aqk;
                }
                m[p * n + q] = 0.0;
                m[q * n + p] = 0.0;
                m[p * n + p] = app - t * apq;
                m[q * n + q] = aqq + t * apq;
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
}
