//! Seeded data-set generators.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::numkit::{c64, Complex64};
use crate::qstate::{DensityMatrix, HilbertSpace, PureState};
use crate::seed;

/// Basis indices of the four-qubit H2 ansatz states |0101>, |1010>, |1001>, |0110>.
pub const H2_BASIS: [usize; 4] = [0b0101, 0b1010, 0b1001, 0b0110];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StateKind {
    /// `sum_i a_i |0..1_i..0>` with Gaussian `a_i`.
    W,
    /// Gaussian superposition of [`H2_BASIS`].
    H2,
    /// Computational basis states `|i>`, `i = 1..d-1`, of a `d`-level system.
    LeakageBasis,
    /// `p |psi_1><psi_1| + (1 - p) |psi_2><psi_2|` for two W states, `p ~ U[0, 1]`.
    MixedW,
}

/// Single-excitation basis indices `|10..0>, ..., |0..01>` of `n` qubits.
pub fn w_basis(n: usize) -> Vec<usize> {
    (0..n).map(|k| 1 << (n - 1 - k)).collect()
}

fn superposition(space: HilbertSpace, indices: &[usize], coeffs: &[Complex64]) -> Result<PureState> {
    if coeffs.len() != indices.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} coefficients for {} basis states",
            coeffs.len(),
            indices.len()
        )));
    }
    let mut amps = vec![c64(0.0, 0.0); space.dim()];
    for (&i, &a) in indices.iter().zip(coeffs) {
        amps[i] = a;
    }
    PureState::normalized(space, amps)
}

/// W-class state with the given (unnormalized) coefficients.
pub fn w_state(coeffs: &[Complex64]) -> Result<PureState> {
    let n = coeffs.len();
    if !(2..=crate::harness::MAX_QUBITS).contains(&n) {
        return Err(Error::BadKind(format!("W states on {n} qubits")));
    }
    superposition(HilbertSpace::qubits(n), &w_basis(n), coeffs)
}

/// H2 ansatz state with the given (unnormalized) coefficients on [`H2_BASIS`].
pub fn h2_state(coeffs: &[Complex64]) -> Result<PureState> {
    superposition(HilbertSpace::qubits(4), &H2_BASIS, coeffs)
}

fn gaussian(rng: &mut impl Rng, count: usize, complex: bool) -> Vec<Complex64> {
    (0..count)
        .map(|_| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = if complex { StandardNormal.sample(rng) } else { 0.0 };
            c64(re, im)
        })
        .collect()
}

/// Draw one state; `index` selects the stream so any subset can be regenerated.
pub fn gen_state(kind: StateKind, size: usize, master: u64, index: u64, complex: bool) -> Result<DensityMatrix> {
    let mut rng = seed::rng(master, &[index]);
    match kind {
        StateKind::W => {
            if size < 2 {
                return Err(Error::BadKind(format!("W states on {size} qubits")));
            }
            Ok(w_state(&gaussian(&mut rng, size, complex))?.density())
        }
        StateKind::H2 => {
            if size != 4 {
                return Err(Error::BadKind(format!("H2 states are defined on 4 qubits, not {size}")));
            }
            Ok(h2_state(&gaussian(&mut rng, 4, complex))?.density())
        }
        StateKind::LeakageBasis => {
            if size < 2 {
                return Err(Error::BadKind(format!("leakage data needs d >= 2, got {size}")));
            }
            let i = rng.random_range(1..size);
            Ok(PureState::basis(HilbertSpace::qudit(size), i)?.density())
        }
        StateKind::MixedW => {
            if size < 2 {
                return Err(Error::BadKind(format!("W states on {size} qubits")));
            }
            let a = w_state(&gaussian(&mut rng, size, complex))?.density();
            let b = w_state(&gaussian(&mut rng, size, complex))?.density();
            let p: f64 = rng.random_range(0.0..=1.0);
            mixed_state(p, &a, &b)
        }
    }
}

/// `count` states of `kind`; state `k` depends only on `(seed, k)`.
pub fn gen_states(kind: StateKind, size: usize, count: usize, seed: u64) -> Result<Vec<DensityMatrix>> {
    if count == 0 {
        return Err(Error::Config("count must be at least 1".into()));
    }
    (0..count as u64).map(|k| gen_state(kind, size, seed, k, false)).collect()
}

/// `p rho_1 + (1 - p) rho_2`
pub fn mixed_state(p: f64, rho1: &DensityMatrix, rho2: &DensityMatrix) -> Result<DensityMatrix> {
    DensityMatrix::mixture(&[(p, rho1), (1.0 - p, rho2)])
}

/// Ideal training inputs: the basis states spanning the data support.
pub fn training_set(kind: StateKind, n: usize) -> Result<Vec<DensityMatrix>> {
    let space = HilbertSpace::qubits(n);
    let indices = match kind {
        StateKind::W | StateKind::MixedW => w_basis(n),
        StateKind::H2 if n == 4 => H2_BASIS.to_vec(),
        _ => return Err(Error::BadKind(format!("no qubit training set for {kind:?} on {n} qubits"))),
    };
    indices
        .into_iter()
        .map(|i| Ok(PureState::basis(space.clone(), i)?.density()))
        .collect()
}
