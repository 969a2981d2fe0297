//! Dense complex linear-algebra kernels.

mod eig;
mod matrix;
mod real;

pub use eig::{
    hermitian_eig, hermitian_eig_with, psd_sqrt, psd_sqrt_with, unitary_from_hermitian,
    HermitianEigen,
};
pub(crate) use eig::clamped_nonnegative;
pub use real::{symmetric_eig, symmetric_eig_warm, SymmetricEigen};
pub(crate) use real::{jacobi_in_place, real_matmul, real_tmatmul};
pub use matrix::{ComplexMatrix, ONE, ZERO};
pub use num_complex::Complex64;

/// Shorthand for a complex literal.
#[inline]
pub fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}
