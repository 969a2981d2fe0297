//! Cyclic Jacobi eigensolver for Hermitian matrices and the spectral
//! functions built on it.

use num_complex::Complex64;

use super::matrix::{ComplexMatrix, ZERO};
use super::real::{jacobi_in_place, rotation};
use crate::error::{Error, Result};
use crate::tolerance::Tolerances;

/// Eigen-decomposition `A = V diag(values) V^dagger` with ascending values.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

impl HermitianEigen {
    /// `V f(diag) V^dagger`
    pub fn map(&self, f: impl Fn(f64) -> Complex64) -> ComplexMatrix {
        let n = self.values.len();
        let weights: Vec<Complex64> = self.values.iter().map(|&l| f(l)).collect();
        let scaled = ComplexMatrix::from_fn(n, n, |i, j| self.vectors.get(i, j) * weights[j]);
        scaled.matmul_adjoint(&self.vectors)
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        self.map(|l| Complex64::new(l, 0.0))
    }
}

pub fn hermitian_eig(a: &ComplexMatrix) -> Result<HermitianEigen> {
    hermitian_eig_with(a, &Tolerances::DEFAULT)
}

pub fn hermitian_eig_with(a: &ComplexMatrix, tol: &Tolerances) -> Result<HermitianEigen> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "eigendecomposition of a {}x{} matrix",
            a.rows(),
            a.cols()
        )));
    }
    let norm = a.frobenius_norm();
    let residual = a.hermitian_residual();
    if residual > tol.hermitian * norm {
        return Err(Error::NonHermitian {
            residual: residual / norm.max(f64::MIN_POSITIVE),
        });
    }
    let (values, vectors) = if a.is_real() {
        jacobi_real(a, tol)?
    } else {
        jacobi_complex(a, tol)?
    };
    Ok(sorted(values, vectors))
}

fn sorted(values: Vec<f64>, vectors: ComplexMatrix) -> HermitianEigen {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let sorted_values = order.iter().map(|&k| values[k]).collect();
    let sorted_vectors = ComplexMatrix::from_fn(n, n, |i, j| vectors.get(i, order[j]));
    HermitianEigen {
        values: sorted_values,
        vectors: sorted_vectors,
    }
}

fn jacobi_real(a: &ComplexMatrix, tol: &Tolerances) -> Result<(Vec<f64>, ComplexMatrix)> {
    let n = a.rows();
    let mut m: Vec<f64> = (0..n * n)
        .map(|k| {
            let (i, j) = (k / n, k % n);
            0.5 * (a.get(i, j).re + a.get(j, i).re)
        })
        .collect();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let scale = m.iter().map(|x| x * x).sum::<f64>().sqrt();
    jacobi_in_place(&mut m, &mut v, n, tol.jacobi_offdiag * scale, tol.jacobi_max_sweeps)?;
    let values = (0..n).map(|i| m[i * n + i]).collect();
    let vectors = ComplexMatrix::from_vec_unchecked(
        n,
        n,
        v.into_iter().map(|x| Complex64::new(x, 0.0)).collect(),
    );
    Ok((values, vectors))
}

fn jacobi_complex(a: &ComplexMatrix, tol: &Tolerances) -> Result<(Vec<f64>, ComplexMatrix)> {
    let n = a.rows();
    let mut m = a.hermitian_part();
    let mut v = ComplexMatrix::identity(n);
    let target = tol.jacobi_offdiag * m.frobenius_norm();
    let mut sweep = 0;
    loop {
        let mut off = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                off += 2.0 * m.get(p, q).norm_sqr();
            }
        }
        let off = off.sqrt();
        if off <= target || off == 0.0 {
            break;
        }
        if sweep >= tol.jacobi_max_sweeps {
            return Err(Error::NoConvergence { sweeps: sweep });
        }
        sweep += 1;
        for p in 0..n {
            for q in p + 1..n {
                let apq = m.get(p, q);
                let b = apq.norm();
                if b <= f64::MIN_POSITIVE {
                    continue;
                }
                let phase = apq / b; // e^{i phi}
                let app = m.get(p, p).re;
                let aqq = m.get(q, q).re;
                let (t, c, s) = rotation(app, aqq, b);
                // J = diag(1, e^{-i phi}) * [[c, s], [-s, c]]
                let j00 = Complex64::new(c, 0.0);
                let j01 = Complex64::new(s, 0.0);
                let j10 = -phase.conj() * s;
                let j11 = phase.conj() * c;
                let data = m.as_mut_slice();
                for k in 0..n {
                    let akp = data[k * n + p];
                    let akq = data[k * n + q];
                    data[k * n + p] = akp * j00 + akq * j10;
                    data[k * n + q] = akp * j01 + akq * j11;
                }
                for k in 0..n {
                    let apk = data[p * n + k];
                    let aqk = data[q * n + k];
                    data[p * n + k] = j00.conj() * apk + j10.conj() * aqk;
                    data[q * n + k] = j01.conj() * apk + j11.conj() * aqk;
                }
                data[p * n + q] = ZERO;
                data[q * n + p] = ZERO;
                data[p * n + p] = Complex64::new(app - t * b, 0.0);
                data[q * n + q] = Complex64::new(aqq + t * b, 0.0);
                let vd = v.as_mut_slice();
                for k in 0..n {
                    let vkp = vd[k * n + p];
                    let vkq = vd[k * n + q];
                    vd[k * n + p] = vkp * j00 + vkq * j10;
                    vd[k * n + q] = vkp * j01 + vkq * j11;
                }
            }
        }
    }
    let values = (0..n).map(|i| m.get(i, i).re).collect();
    Ok((values, v))
}

/// `exp(-i H t)` through the eigendecomposition of `H`.
pub fn unitary_from_hermitian(h: &ComplexMatrix, t: f64) -> Result<ComplexMatrix> {
    let eig = hermitian_eig(h)?;
    Ok(eig.map(|l| Complex64::from_polar(1.0, -l * t)))
}

pub fn psd_sqrt(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    psd_sqrt_with(a, &Tolerances::DEFAULT)
}

pub fn psd_sqrt_with(a: &ComplexMatrix, tol: &Tolerances) -> Result<ComplexMatrix> {
    let eig = hermitian_eig_with(a, tol)?;
    clamped_nonnegative(&eig.values, tol)?;
    Ok(eig.map(|l| Complex64::new(l.max(0.0).sqrt(), 0.0)))
}

/// Clamp eigenvalues in `[-psd_clamp, 0)` to zero; error on anything lower.
pub(crate) fn clamped_nonnegative(values: &[f64], tol: &Tolerances) -> Result<Vec<f64>> {
    values
        .iter()
        .map(|&l| {
            if l < -tol.psd_clamp {
                Err(Error::NotPsd { eigenvalue: l })
            } else {
                Ok(l.max(0.0))
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_hermitian(n: usize, seed: u64) -> ComplexMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = ComplexMatrix::from_fn(n, n, |_, _| {
            c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        (&g + &g.adjoint()).scale_real(0.5)
    }

    fn pauli_x() -> ComplexMatrix {
        ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0]).unwrap()
    }

    fn pauli_z() -> ComplexMatrix {
        ComplexMatrix::real_diagonal(&[1.0, -1.0])
    }

    /// Reference exponential by Taylor series with scaling and squaring.
    fn taylor_exp(a: &ComplexMatrix) -> ComplexMatrix {
        let n = a.rows();
        let squarings = 8;
        let scaled = a.scale_real(1.0 / f64::powi(2.0, squarings));
        let mut term = ComplexMatrix::identity(n);
        let mut sum = ComplexMatrix::identity(n);
        for k in 1..40 {
            term = term.matmul(&scaled).scale_real(1.0 / k as f64);
            sum = &sum + &term;
        }
        for _ in 0..squarings {
            sum = sum.matmul(&sum);
        }
        sum
    }

    #[test]
    fn pauli_z_spectrum() {
        let eig = hermitian_eig(&pauli_z()).unwrap();
        assert_eq!(eig.values, vec![-1.0, 1.0]);
        // eigenvector of -1 is |1>, of +1 is |0>, up to phase
        assert!((eig.vectors.get(1, 0).norm() - 1.0).abs() < 1e-14);
        assert!((eig.vectors.get(0, 1).norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn pauli_x_spectrum() {
        let eig = hermitian_eig(&pauli_x()).unwrap();
        assert!((eig.values[0] + 1.0).abs() < 1e-14 && (eig.values[1] - 1.0).abs() < 1e-14);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let minus = eig.vectors.column(0);
        let plus = eig.vectors.column(1);
        // |<v|(|0> -+ |1>)/sqrt2>| = 1
        assert!(((minus[0] * r - minus[1] * r).norm() - 1.0).abs() < 1e-12);
        assert!(((plus[0] * r + plus[1] * r).norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn random_hermitian_reconstructs() {
        for seed in 0..5 {
            let a = random_hermitian(16, seed);
            let eig = hermitian_eig(&a).unwrap();
            let rel = eig.reconstruct().distance(&a) / a.frobenius_norm();
            assert!(rel <= 1e-10, "seed {seed}: residual {rel}");
            assert!(eig.vectors.unitarity_residual() <= 1e-10);
            assert!(eig.values.windows(2).all(|w| w[0] <= w[1]));
            let tr: f64 = eig.values.iter().sum();
            assert!((tr - a.trace().re).abs() <= 1e-10);
        }
    }

    #[test]
    fn real_symmetric_fast_path_reconstructs() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let g = ComplexMatrix::from_fn(16, 16, |_, _| c(rng.random_range(-1.0..1.0), 0.0));
        let a = (&g + &g.transpose()).scale_real(0.5);
        let eig = hermitian_eig(&a).unwrap();
        assert!(eig.reconstruct().distance(&a) / a.frobenius_norm() <= 1e-10);
    }

    #[test]
    fn non_hermitian_rejected() {
        let a = ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 0.0, 0.0]).unwrap();
        assert!(matches!(hermitian_eig(&a), Err(Error::NonHermitian { .. })));
    }

    #[test]
    fn exp_of_zero_is_identity() {
        let u = unitary_from_hermitian(&ComplexMatrix::zeros(4, 4), 2.7).unwrap();
        assert!(u.distance(&ComplexMatrix::identity(4)) < 1e-15);
    }

    #[test]
    fn exp_of_pauli_z_at_pi() {
        let u = unitary_from_hermitian(&pauli_z(), std::f64::consts::PI).unwrap();
        let expected = ComplexMatrix::diagonal(&[c(-1.0, 0.0), c(-1.0, 0.0)]);
        // exp(-i pi Z) = cos(pi) I - i sin(pi) Z = -I
        assert!(u.distance(&expected) < 1e-14);
        let half = unitary_from_hermitian(&pauli_z(), std::f64::consts::FRAC_PI_2).unwrap();
        assert!(half.distance(&ComplexMatrix::diagonal(&[c(0.0, -1.0), c(0.0, 1.0)])) < 1e-14);
    }

    #[test]
    fn exp_matches_taylor_oracle() {
        let h = random_hermitian(4, 3);
        let u = unitary_from_hermitian(&h, 1.0).unwrap();
        let oracle = taylor_exp(&h.scale(c(0.0, -1.0)));
        assert!(u.distance(&oracle) < 1e-10, "{}", u.distance(&oracle));
        assert!(u.unitarity_residual() < 1e-10);
        let eig = hermitian_eig(&h).unwrap();
        for j in 0..4 {
            let v = eig.vectors.column(j);
            let uv = u.apply(&v);
            let phase = Complex64::from_polar(1.0, -eig.values[j]);
            let diff: f64 = uv.iter().zip(&v).map(|(a, b)| (a - b * phase).norm_sqr()).sum();
            assert!(diff.sqrt() < 1e-10);
        }
    }

    #[test]
    fn sqrt_of_diagonal() {
        let s = psd_sqrt(&ComplexMatrix::real_diagonal(&[4.0, 9.0])).unwrap();
        assert!(s.distance(&ComplexMatrix::real_diagonal(&[2.0, 3.0])) < 1e-14);
        let i = psd_sqrt(&ComplexMatrix::identity(3)).unwrap();
        assert!(i.distance(&ComplexMatrix::identity(3)) < 1e-15);
    }

    #[test]
    fn sqrt_of_random_psd_squares_back() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let g = ComplexMatrix::from_fn(8, 8, |_, _| {
            c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        let a = g.matmul_adjoint(&g);
        let b = psd_sqrt(&a).unwrap();
        assert!(b.matmul(&b).distance(&a) <= 1e-9);
        assert!(b.is_hermitian(1e-10));
    }

    #[test]
    fn sqrt_rejects_negative_and_clamps_round_off() {
        let neg = ComplexMatrix::real_diagonal(&[1.0, -1e-6]);
        assert!(matches!(psd_sqrt(&neg), Err(Error::NotPsd { .. })));
        let tiny = ComplexMatrix::real_diagonal(&[1.0, -1e-12]);
        let s = psd_sqrt(&tiny).unwrap();
        assert_eq!(s.get(1, 1), ZERO);
    }
}
