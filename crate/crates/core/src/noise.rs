//! Error channels and the mixing `(1 - eps) rho + eps rho_err`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkit::{ComplexMatrix, ONE, ZERO};
use crate::qstate::{DensityMatrix, HilbertSpace};

const KRAUS_TOL: f64 = 1e-9;

/// Note attached to results produced under local depolarizing noise.
pub const LOCAL_DEPOLARIZING_NOTE: &str = "local depolarizing error state normalized by 1/(3n)";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NoiseModel {
    /// `rho_err = I/N`
    GlobalDepolarizing,
    /// `rho_err = (1/3n) sum_{i, mu} sigma_i^mu rho sigma_i^mu` on a qubit register.
    LocalDepolarizing,
    /// `rho_err = |level><level|`
    Leakage {
        #[serde(default)]
        level: usize,
    },
    /// `rho_err = sum_i A_i rho A_i^dagger`
    CustomKraus { operators: Vec<ComplexMatrix> },
}

impl NoiseModel {
    pub fn leakage() -> Self {
        NoiseModel::Leakage { level: 0 }
    }

    pub fn custom_kraus(operators: Vec<ComplexMatrix>) -> Result<Self> {
        let model = NoiseModel::CustomKraus { operators };
        model.check_kraus()?;
        Ok(model)
    }

    pub fn label(&self) -> &'static str {
        match self {
            NoiseModel::GlobalDepolarizing => "global",
            NoiseModel::LocalDepolarizing => "local",
            NoiseModel::Leakage { .. } => "leakage",
            NoiseModel::CustomKraus { .. } => "kraus",
        }
    }

    /// Metadata flag for conventions the output depends on.
    pub fn note(&self) -> Option<&'static str> {
        matches!(self, NoiseModel::LocalDepolarizing).then_some(LOCAL_DEPOLARIZING_NOTE)
    }

    /// True when the error state does not depend on the input.
    pub fn is_constant(&self) -> bool {
        matches!(self, NoiseModel::GlobalDepolarizing | NoiseModel::Leakage { .. })
    }

    fn check_kraus(&self) -> Result<()> {
        let NoiseModel::CustomKraus { operators } = self else {
            return Ok(());
        };
        let Some(first) = operators.first() else {
            return Err(Error::Config("custom Kraus channel needs at least one operator".into()));
        };
        let n = first.rows();
        let mut sum = ComplexMatrix::zeros(n, n);
        for a in operators {
            if !a.is_square() || a.rows() != n {
                return Err(Error::DimensionMismatch("Kraus operators differ in shape".into()));
            }
            sum.add_scaled(&a.adjoint().matmul(a), ONE);
        }
        let residual = sum.distance(&ComplexMatrix::identity(n));
        if residual > KRAUS_TOL {
            return Err(Error::Config(format!(
                "Kraus operators are not trace preserving (residual {residual:.3e})"
            )));
        }
        Ok(())
    }

    /// Check the model can act on `space`.
    pub fn validate(&self, space: &HilbertSpace) -> Result<()> {
        match self {
            NoiseModel::GlobalDepolarizing => Ok(()),
            NoiseModel::LocalDepolarizing => space.qubit_count().map(|_| ()).ok_or_else(|| {
                Error::DimensionMismatch("local depolarizing noise needs a qubit register".into())
            }),
            NoiseModel::Leakage { level } => {
                if *level < space.dim() {
                    Ok(())
                } else {
                    Err(Error::DimensionMismatch(format!(
                        "leakage level {level} outside dimension {}",
                        space.dim()
                    )))
                }
            }
            NoiseModel::CustomKraus { operators } => {
                self.check_kraus()?;
                if operators[0].rows() != space.dim() {
                    return Err(Error::DimensionMismatch(format!(
                        "Kraus operators of dimension {} on a space of dimension {}",
                        operators[0].rows(),
                        space.dim()
                    )));
                }
                Ok(())
            }
        }
    }
}

/// The error state `rho_err` produced by `model` from `rho`.
pub fn error_state(model: &NoiseModel, rho: &DensityMatrix) -> Result<DensityMatrix> {
    let space = rho.space();
    model.validate(space)?;
    let n = rho.dim();
    let matrix = match model {
        NoiseModel::GlobalDepolarizing => return Ok(DensityMatrix::maximally_mixed(space.clone())),
        NoiseModel::LocalDepolarizing => {
            let qubits = space.qubit_count().unwrap_or(0);
            local_pauli_sum(rho.matrix(), qubits).scale_real(1.0 / (3 * qubits) as f64)
        }
        NoiseModel::Leakage { level } => {
            let mut diag = vec![0.0; n];
            diag[*level] = 1.0;
            ComplexMatrix::real_diagonal(&diag)
        }
        NoiseModel::CustomKraus { operators } => {
            let mut acc = ComplexMatrix::zeros(n, n);
            for a in operators {
                acc.add_scaled(&rho.matrix().conjugate_by(a), ONE);
            }
            acc.hermitian_part()
        }
    };
    Ok(DensityMatrix::from_parts_unchecked(space.clone(), matrix))
}

/// `sum_{i, mu} sigma_i^mu rho sigma_i^mu` using the signed-permutation form of each Pauli.
fn local_pauli_sum(rho: &ComplexMatrix, qubits: usize) -> ComplexMatrix {
    let n = rho.rows();
    let mut out = vec![ZERO; n * n];
    for q in 0..qubits {
        let mask = 1usize << (qubits - 1 - q);
        for a in 0..n {
            let sa = if a & mask == 0 { 1.0 } else { -1.0 };
            for b in 0..n {
                let sb = if b & mask == 0 { 1.0 } else { -1.0 };
                let flipped = rho.get(a ^ mask, b ^ mask);
                // X and Y both flip the bit; Y carries the sign product, Z keeps it.
                out[a * n + b] += flipped * (1.0 + sa * sb) + rho.get(a, b) * (sa * sb);
            }
        }
    }
    ComplexMatrix::from_vec_unchecked(n, n, out)
}

/// `(1 - eps) rho + eps rho_err`
pub fn apply_noise(rho: &DensityMatrix, model: &NoiseModel, epsilon: f64) -> Result<DensityMatrix> {
    let err = error_state(model, rho)?;
    mix(rho, &err, epsilon)
}

/// Mix `rho` with a precomputed error state.
pub fn mix(rho: &DensityMatrix, err: &DensityMatrix, epsilon: f64) -> Result<DensityMatrix> {
    check_epsilon(epsilon)?;
    if rho.space() != err.space() {
        return Err(Error::DimensionMismatch("error state lives on another space".into()));
    }
    let mut m = rho.matrix().scale_real(1.0 - epsilon);
    m.add_scaled(err.matrix(), Complex64::new(epsilon, 0.0));
    Ok(DensityMatrix::from_parts_unchecked(rho.space().clone(), m))
}

pub fn check_epsilon(epsilon: f64) -> Result<()> {
    if (0.0..=1.0).contains(&epsilon) {
        Ok(())
    } else {
        Err(Error::BadEpsilon(epsilon))
    }
}
