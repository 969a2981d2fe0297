//! Numerical tolerances shared by every module.
//!
//! The defaults are used by the plain entry points; the `*_with` variants
//! accept an explicit table so experiments can override them.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Relative Frobenius residual allowed for `A - A^dagger`.
    pub hermitian: f64,
    /// Off-diagonal Frobenius norm (relative) at which Jacobi stops.
    pub jacobi_offdiag: f64,
    /// Sweep cap for the Jacobi eigensolver.
    pub jacobi_max_sweeps: usize,
    /// Eigenvalues in `[-psd_clamp, 0]` are clamped to zero.
    pub psd_clamp: f64,
    /// Trace / normalization slack for states.
    pub trace: f64,
    /// Projector idempotence residual.
    pub projector: f64,
    /// Unitarity residual.
    pub unitary: f64,
    /// Post-selection weights at or below this are treated as impossible.
    pub post_select: f64,
    /// Purity above `1 - pure_shortcut` uses the overlap fidelity formula.
    pub pure_shortcut: f64,
    /// Residual norm at which Gram-Schmidt drops a vector.
    pub rank: f64,
}

impl Tolerances {
    pub const DEFAULT: Tolerances = Tolerances {
        hermitian: 1e-10,
        jacobi_offdiag: 1e-15,
        jacobi_max_sweeps: 100,
        psd_clamp: 1e-10,
        trace: 1e-10,
        projector: 1e-10,
        unitary: 1e-9,
        post_select: 1e-12,
        pure_shortcut: 1e-9,
        rank: 1e-8,
    };
}

impl Default for Tolerances {
    fn default() -> Self {
        Self::DEFAULT
    }
}
