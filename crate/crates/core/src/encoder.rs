//! Encoding unitaries built from a support basis, and latent/junk projectors.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::numkit::{hermitian_eig, ComplexMatrix, ZERO};
use crate::qstate::{DensityMatrix, HilbertSpace, Projector, PureState};
use crate::tolerance::Tolerances;

const ORTHO_TOL: f64 = 1e-9;
const COMPLETION_TOL: f64 = 1e-8;

/// Orthonormal basis of the subspace the data live in.
#[derive(Debug, Clone, PartialEq)]
pub struct SupportBasis {
    space: HilbertSpace,
    vectors: Vec<PureState>,
}

impl SupportBasis {
    pub fn new(space: HilbertSpace, vectors: Vec<PureState>) -> Result<Self> {
        if vectors.is_empty() {
            return Err(Error::EmptySupport);
        }
        for (i, a) in vectors.iter().enumerate() {
            space.ensure_same(a.space())?;
            for (j, b) in vectors.iter().enumerate().skip(i) {
                let target = if i == j { 1.0 } else { 0.0 };
                if (a.inner(b) - Complex64::new(target, 0.0)).norm() > ORTHO_TOL {
                    return Err(Error::InvalidState(format!(
                        "support vectors {i} and {j} are not orthonormal"
                    )));
                }
            }
        }
        Ok(Self { space, vectors })
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn vectors(&self) -> &[PureState] {
        &self.vectors
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// `P_S = sum_i |s_i><s_i|`
    pub fn projector(&self) -> Projector {
        let n = self.space.dim();
        let mut m = ComplexMatrix::zeros(n, n);
        for v in &self.vectors {
            m.add_scaled(&ComplexMatrix::outer(v.amplitudes(), v.amplitudes()), crate::numkit::ONE);
        }
        Projector::from_parts_unchecked(self.space.clone(), m)
    }
}

/// Gram-Schmidt in input order, dropping vectors whose residual norm is at most `tol`.
pub fn orthonormal_support_basis(states: &[PureState], tol: f64) -> Result<SupportBasis> {
    let first = states.first().ok_or(Error::EmptySupport)?;
    let space = first.space().clone();
    let mut basis: Vec<Vec<Complex64>> = Vec::new();
    for s in states {
        space.ensure_same(s.space())?;
        if let Some(v) = orthogonalize(s.amplitudes(), &basis, tol) {
            basis.push(v);
        }
    }
    if basis.is_empty() {
        return Err(Error::EmptySupport);
    }
    let vectors = basis
        .into_iter()
        .map(|v| PureState::from_parts_unchecked(space.clone(), v))
        .collect();
    Ok(SupportBasis { space, vectors })
}

/// Support of a set of density matrices: eigenvectors with eigenvalue above `tol`,
/// orthonormalized jointly.
pub fn support_of_mixed(states: &[DensityMatrix], tol: f64) -> Result<SupportBasis> {
    let first = states.first().ok_or(Error::EmptySupport)?;
    let mut candidates = Vec::new();
    for rho in states {
        first.space().ensure_same(rho.space())?;
        let eig = hermitian_eig(rho.matrix())?;
        for (k, &lambda) in eig.values.iter().enumerate().rev() {
            if lambda > tol {
                candidates.push(PureState::from_parts_unchecked(
                    rho.space().clone(),
                    eig.vectors.column(k),
                ));
            }
        }
    }
    orthonormal_support_basis(&candidates, tol)
}

/// Modified Gram-Schmidt with one re-orthogonalization pass.
fn orthogonalize(v: &[Complex64], basis: &[Vec<Complex64>], tol: f64) -> Option<Vec<Complex64>> {
    let mut w = v.to_vec();
    for _ in 0..2 {
        for b in basis {
            let c: Complex64 = b.iter().zip(&w).map(|(x, y)| x.conj() * y).sum();
            for (wi, bi) in w.iter_mut().zip(b) {
                *wi -= c * bi;
            }
        }
    }
    let norm = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm <= tol {
        return None;
    }
    for z in &mut w {
        *z /= norm;
    }
    Some(w)
}

/// Extend an orthonormal set to a full basis with canonical vectors tried in index order.
fn complete_basis(mut basis: Vec<Vec<Complex64>>, n: usize) -> Result<Vec<Vec<Complex64>>> {
    for k in 0..n {
        if basis.len() == n {
            break;
        }
        let mut e = vec![ZERO; n];
        e[k] = crate::numkit::ONE;
        if let Some(v) = orthogonalize(&e, &basis, COMPLETION_TOL) {
            basis.push(v);
        }
    }
    if basis.len() != n {
        return Err(Error::RankDeficient(format!(
            "completed {} of {n} basis vectors",
            basis.len()
        )));
    }
    Ok(basis)
}

/// Encoding unitary with its latent and junk projectors.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderPipeline {
    encode_unitary: ComplexMatrix,
    latent_projector: Projector,
    junk_projector: Projector,
}

impl EncoderPipeline {
    pub fn new(encode_unitary: ComplexMatrix, latent_projector: Projector) -> Result<Self> {
        let n = latent_projector.space().dim();
        if encode_unitary.rows() != n || encode_unitary.cols() != n {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} encoder for a space of dimension {n}",
                encode_unitary.rows(),
                encode_unitary.cols()
            )));
        }
        let residual = encode_unitary.unitarity_residual();
        if residual > Tolerances::DEFAULT.unitary {
            return Err(Error::NonUnitary { residual });
        }
        let junk_projector = latent_projector.complement();
        Ok(Self {
            encode_unitary,
            latent_projector,
            junk_projector,
        })
    }

    pub fn encode_unitary(&self) -> &ComplexMatrix {
        &self.encode_unitary
    }

    pub fn latent_projector(&self) -> &Projector {
        &self.latent_projector
    }

    pub fn junk_projector(&self) -> &Projector {
        &self.junk_projector
    }

    pub fn space(&self) -> &HilbertSpace {
        self.latent_projector.space()
    }

    pub fn latent_dim(&self) -> usize {
        self.latent_projector.rank()
    }

    /// `M_S = U_e^dagger M_L U_e`, the latent subspace seen from the data side.
    pub fn support_projector(&self) -> Projector {
        self.latent_projector.pulled_back(&self.encode_unitary)
    }
}

/// Unitary with `U_e |s_i> = |L_i>`, completed deterministically; `M_L = sum_i |L_i><L_i|`.
pub fn build_encoder(support: &SupportBasis, latent: &[PureState]) -> Result<EncoderPipeline> {
    let space = support.space().clone();
    let n = space.dim();
    if latent.len() != support.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} latent vectors for a support of size {}",
            latent.len(),
            support.len()
        )));
    }
    let mut latent_vecs = Vec::with_capacity(latent.len());
    for l in latent {
        space.ensure_same(l.space())?;
        let v = orthogonalize(l.amplitudes(), &latent_vecs, COMPLETION_TOL).ok_or_else(|| {
            Error::RankDeficient("latent vectors are linearly dependent".into())
        })?;
        latent_vecs.push(v);
    }
    let m = latent_vecs.len();
    let support_vecs: Vec<Vec<Complex64>> =
        support.vectors().iter().map(|s| s.amplitudes().to_vec()).collect();
    let latent_full = complete_basis(latent_vecs, n)?;
    let support_full = complete_basis(support_vecs, n)?;

    let mut u = ComplexMatrix::zeros(n, n);
    for (l, s) in latent_full.iter().zip(&support_full) {
        u.add_scaled(&ComplexMatrix::outer(l, s), crate::numkit::ONE);
    }
    let mut ml = ComplexMatrix::zeros(n, n);
    for l in &latent_full[..m] {
        ml.add_scaled(&ComplexMatrix::outer(l, l), crate::numkit::ONE);
    }
    EncoderPipeline::new(u, Projector::from_parts_unchecked(space, ml))
}

/// `M_L = |0><0|^{ancilla} (x) I` and `M_J = I - M_L` on a qubit register.
pub fn latent_projector(space: &HilbertSpace, ancilla: usize) -> Result<(Projector, Projector)> {
    let n = space
        .qubit_count()
        .ok_or_else(|| Error::BadSplit("latent projector needs a qubit register".into()))?;
    if ancilla == 0 || ancilla >= n {
        return Err(Error::BadSplit(format!("{ancilla} ancilla qubits out of {n}")));
    }
    let latent_dim = 1usize << (n - ancilla);
    let indices: Vec<usize> = (0..latent_dim).collect();
    let ml = Projector::onto_basis(space.clone(), &indices)?;
    let mj = ml.complement();
    Ok((ml, mj))
}

/// Rank-`k` projector onto the span of `k` seeded complex Gaussian vectors.
pub fn random_subspace_projector(space: &HilbertSpace, k: usize, seed: u64) -> Result<Projector> {
    let n = space.dim();
    if k == 0 || k >= n {
        return Err(Error::BadSplit(format!("rank {k} in dimension {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(k);
    while basis.len() < k {
        let g: Vec<Complex64> = (0..n)
            .map(|_| Complex64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng)))
            .collect();
        if let Some(v) = orthogonalize(&g, &basis, COMPLETION_TOL) {
            basis.push(v);
        }
    }
    let mut m = ComplexMatrix::zeros(n, n);
    for v in &basis {
        m.add_scaled(&ComplexMatrix::outer(v, v), crate::numkit::ONE);
    }
    Ok(Projector::from_parts_unchecked(space.clone(), m))
}

/// Single-excitation basis states `|10..0>, |01..0>, ..., |0..01>`.
pub fn w_support(n: usize) -> SupportBasis {
    let space = HilbertSpace::qubits(n);
    let vectors = (0..n)
        .map(|k| PureState::basis(space.clone(), 1 << (n - 1 - k)).expect("index in range"))
        .collect();
    SupportBasis { space, vectors }
}

/// Smallest latent register holding `n` W basis states: `ceil(log2 n)` qubits.
pub fn w_latent_qubits(n: usize) -> usize {
    n.next_power_of_two().trailing_zeros() as usize
}

/// Known-form W pipeline: maps the `k`-th single-excitation state to `|0..0 k>`,
/// with `M_L = |0><0|^{n-m} (x) I_{2^m}`.
pub fn known_w_pipeline(n: usize) -> Result<EncoderPipeline> {
    if n < 2 {
        return Err(Error::BadSplit("W pipeline needs at least two qubits".into()));
    }
    let support = w_support(n);
    let space = support.space().clone();
    let latent: Vec<PureState> = (0..n)
        .map(|k| PureState::basis(space.clone(), k))
        .collect::<Result<_>>()?;
    let built = build_encoder(&support, &latent)?;
    let m = w_latent_qubits(n);
    let (ml, _) = latent_projector(&space, n - m)?;
    EncoderPipeline::new(built.encode_unitary, ml)
}
