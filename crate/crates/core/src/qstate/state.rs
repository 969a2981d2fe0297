use num_complex::Complex64;

use super::space::HilbertSpace;
use crate::error::{Error, Result};
use crate::numkit::{hermitian_eig, ComplexMatrix, ONE, ZERO};
use crate::tolerance::Tolerances;

/// Normalized state vector.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    space: HilbertSpace,
    amplitudes: Vec<Complex64>,
}

impl PureState {
    pub fn new(space: HilbertSpace, amplitudes: Vec<Complex64>) -> Result<Self> {
        check_len(&space, amplitudes.len())?;
        let norm_sqr: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if (norm_sqr - 1.0).abs() > Tolerances::DEFAULT.trace {
            return Err(Error::InvalidState(format!("state norm^2 is {norm_sqr}")));
        }
        Ok(Self { space, amplitudes })
    }

    /// Rescale to unit norm.
    pub fn normalized(space: HilbertSpace, mut amplitudes: Vec<Complex64>) -> Result<Self> {
        check_len(&space, amplitudes.len())?;
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 1e-300) || !norm.is_finite() {
            return Err(Error::InvalidState("cannot normalize a zero vector".into()));
        }
        for a in &mut amplitudes {
            *a /= norm;
        }
        Ok(Self { space, amplitudes })
    }

    pub fn basis(space: HilbertSpace, index: usize) -> Result<Self> {
        let n = space.dim();
        if index >= n {
            return Err(Error::BadIndex(format!("basis index {index} >= {n}")));
        }
        let mut amplitudes = vec![ZERO; n];
        amplitudes[index] = ONE;
        Ok(Self { space, amplitudes })
    }

    /// Basis state from per-factor digits, e.g. `[1, 0, 0, 0]` for `|1000>`.
    pub fn computational(space: HilbertSpace, digits: &[usize]) -> Result<Self> {
        if digits.len() != space.num_factors()
            || digits.iter().zip(space.factors()).any(|(&x, &d)| x >= d)
        {
            return Err(Error::BadIndex(format!("digits {digits:?} for {:?}", space.factors())));
        }
        let index = space.index_of(digits);
        Self::basis(space, index)
    }

    pub(crate) fn from_parts_unchecked(space: HilbertSpace, amplitudes: Vec<Complex64>) -> Self {
        Self { space, amplitudes }
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    /// `<self|other>`
    pub fn inner(&self, other: &PureState) -> Complex64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn density(&self) -> DensityMatrix {
        DensityMatrix {
            space: self.space.clone(),
            matrix: ComplexMatrix::outer(&self.amplitudes, &self.amplitudes),
        }
    }

    pub fn evolve(&self, u: &ComplexMatrix) -> PureState {
        PureState {
            space: self.space.clone(),
            amplitudes: u.apply(&self.amplitudes),
        }
    }

    /// `<psi| A |psi>`
    pub fn expectation(&self, a: &ComplexMatrix) -> Complex64 {
        let av = a.apply(&self.amplitudes);
        self.amplitudes.iter().zip(&av).map(|(x, y)| x.conj() * y).sum()
    }
}

fn check_len(space: &HilbertSpace, len: usize) -> Result<()> {
    if len != space.dim() {
        return Err(Error::DimensionMismatch(format!(
            "{len} amplitudes for a space of dimension {}",
            space.dim()
        )));
    }
    Ok(())
}

fn check_square(space: &HilbertSpace, m: &ComplexMatrix) -> Result<()> {
    let n = space.dim();
    if m.rows() != n || m.cols() != n {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} matrix for a space of dimension {n}",
            m.rows(),
            m.cols()
        )));
    }
    Ok(())
}

/// Hermitian, unit-trace, positive semidefinite operator.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    space: HilbertSpace,
    matrix: ComplexMatrix,
}

impl DensityMatrix {
    pub fn new(space: HilbertSpace, matrix: ComplexMatrix) -> Result<Self> {
        Self::new_with(space, matrix, &Tolerances::DEFAULT)
    }

    pub fn new_with(space: HilbertSpace, matrix: ComplexMatrix, tol: &Tolerances) -> Result<Self> {
        check_square(&space, &matrix)?;
        let residual = matrix.hermitian_residual();
        if residual > tol.hermitian {
            return Err(Error::NonHermitian { residual });
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > tol.trace || tr.im.abs() > tol.trace {
            return Err(Error::InvalidState(format!("trace {tr} is not 1")));
        }
        let eig = hermitian_eig(&matrix)?;
        if let Some(&low) = eig.values.first() {
            if low < -tol.psd_clamp {
                return Err(Error::NotPsd { eigenvalue: low });
            }
        }
        Ok(Self { space, matrix })
    }

    /// Caller guarantees the invariants hold (up to round-off).
    pub(crate) fn from_parts_unchecked(space: HilbertSpace, matrix: ComplexMatrix) -> Self {
        debug_assert_eq!(space.dim(), matrix.rows());
        Self { space, matrix }
    }

    pub fn maximally_mixed(space: HilbertSpace) -> Self {
        let n = space.dim();
        let matrix = ComplexMatrix::identity(n).scale_real(1.0 / n as f64);
        Self { space, matrix }
    }

    /// Convex combination `sum_k w_k rho_k`; weights must be non-negative and sum to one.
    pub fn mixture(parts: &[(f64, &DensityMatrix)]) -> Result<Self> {
        let Some((_, first)) = parts.first() else {
            return Err(Error::InvalidState("empty mixture".into()));
        };
        let total: f64 = parts.iter().map(|(w, _)| w).sum();
        if parts.iter().any(|(w, _)| *w < 0.0) || (total - 1.0).abs() > Tolerances::DEFAULT.trace {
            return Err(Error::InvalidState("mixture weights must be a distribution".into()));
        }
        let n = first.dim();
        let mut matrix = ComplexMatrix::zeros(n, n);
        for (w, rho) in parts {
            first.space.ensure_same(&rho.space)?;
            matrix.add_scaled(&rho.matrix, Complex64::new(*w, 0.0));
        }
        Ok(Self {
            space: first.space.clone(),
            matrix,
        })
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    /// `U rho U^dagger`
    pub fn evolve(&self, u: &ComplexMatrix) -> DensityMatrix {
        DensityMatrix {
            space: self.space.clone(),
            matrix: self.matrix.conjugate_by(u),
        }
    }

    /// `Tr(A rho)`
    pub fn expectation(&self, a: &ComplexMatrix) -> f64 {
        a.trace_product(&self.matrix).re
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        Ok(hermitian_eig(&self.matrix)?.values)
    }
}

/// Orthogonal projector `P = P^2 = P^dagger`.
#[derive(Debug, Clone, PartialEq)]
pub struct Projector {
    space: HilbertSpace,
    matrix: ComplexMatrix,
}

impl Projector {
    pub fn new(space: HilbertSpace, matrix: ComplexMatrix) -> Result<Self> {
        check_square(&space, &matrix)?;
        let tol = Tolerances::DEFAULT.projector;
        let residual = matrix.hermitian_residual();
        if residual > tol {
            return Err(Error::NonHermitian { residual });
        }
        let idem = matrix.matmul(&matrix).distance(&matrix);
        if idem > tol {
            return Err(Error::InvalidState(format!(
                "projector is not idempotent (residual {idem:.3e})"
            )));
        }
        Ok(Self { space, matrix })
    }

    pub(crate) fn from_parts_unchecked(space: HilbertSpace, matrix: ComplexMatrix) -> Self {
        Self { space, matrix }
    }

    /// `sum_i |v_i><v_i|` for orthonormal `v_i`.
    pub fn from_orthonormal(space: HilbertSpace, vectors: &[&[Complex64]]) -> Result<Self> {
        let n = space.dim();
        let mut matrix = ComplexMatrix::zeros(n, n);
        for v in vectors {
            check_len(&space, v.len())?;
            matrix.add_scaled(&ComplexMatrix::outer(v, v), ONE);
        }
        Self::new(space, matrix)
    }

    pub fn identity(space: HilbertSpace) -> Self {
        let n = space.dim();
        Self {
            space,
            matrix: ComplexMatrix::identity(n),
        }
    }

    /// Projector onto the listed computational basis indices.
    pub fn onto_basis(space: HilbertSpace, indices: &[usize]) -> Result<Self> {
        let n = space.dim();
        let mut diag = vec![0.0; n];
        for &i in indices {
            if i >= n {
                return Err(Error::BadIndex(format!("basis index {i} >= {n}")));
            }
            diag[i] = 1.0;
        }
        Ok(Self {
            space,
            matrix: ComplexMatrix::real_diagonal(&diag),
        })
    }

    pub fn complement(&self) -> Projector {
        let n = self.matrix.rows();
        Projector {
            space: self.space.clone(),
            matrix: &ComplexMatrix::identity(n) - &self.matrix,
        }
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn rank(&self) -> usize {
        self.matrix.trace().re.round() as usize
    }

    /// Conjugated projector `U^dagger P U`, still a projector.
    pub fn pulled_back(&self, u: &ComplexMatrix) -> Projector {
        Projector {
            space: self.space.clone(),
            matrix: u.adjoint().matmul(&self.matrix).matmul(u),
        }
    }
}
