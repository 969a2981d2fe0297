//! Trace-preserving "neural network" autoencoder reference model and its
//! post-selected extension.
//!
//! The network acts on `input (x) hidden (x) output`, with hidden and output
//! registers initialised to `|0>`; the result is the reduced state of the
//! output register.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::numkit::ComplexMatrix;
use crate::qstate::{partial_trace_matrix, DensityMatrix, HilbertSpace, Projector};
use crate::tolerance::Tolerances;

#[derive(Debug, Clone, PartialEq)]
pub struct NnLayout {
    input: HilbertSpace,
    hidden: Option<HilbertSpace>,
    output: HilbertSpace,
}

impl NnLayout {
    pub fn new(input: HilbertSpace, hidden: Option<HilbertSpace>, output: HilbertSpace) -> Result<Self> {
        if input.dim() != output.dim() {
            return Err(Error::DimensionMismatch(format!(
                "output dimension {} differs from input dimension {}",
                output.dim(),
                input.dim()
            )));
        }
        Ok(Self { input, hidden, output })
    }

    /// Input and output copies of `data`, no hidden register.
    pub fn autoencoder(data: HilbertSpace) -> Self {
        Self {
            input: data.clone(),
            hidden: None,
            output: data,
        }
    }

    pub fn input(&self) -> &HilbertSpace {
        &self.input
    }

    pub fn hidden(&self) -> Option<&HilbertSpace> {
        self.hidden.as_ref()
    }

    pub fn output(&self) -> &HilbertSpace {
        &self.output
    }

    pub fn total(&self) -> HilbertSpace {
        let mut t = self.input.clone();
        if let Some(h) = &self.hidden {
            t = t.concat(h);
        }
        t.concat(&self.output)
    }

    fn hidden_dim(&self) -> usize {
        self.hidden.as_ref().map_or(1, HilbertSpace::dim)
    }

    fn output_factors(&self) -> Vec<usize> {
        let total = self.total().num_factors();
        (total - self.output.num_factors()..total).collect()
    }
}

/// `rho_in (x) |0><0|` on the full register.
fn embed(rho: &DensityMatrix, layout: &NnLayout) -> Result<ComplexMatrix> {
    rho.space().ensure_same(layout.input())?;
    let anc = layout.hidden_dim() * layout.output.dim();
    let mut zero = ComplexMatrix::zeros(anc, anc);
    zero.set(0, 0, Complex64::new(1.0, 0.0));
    Ok(rho.matrix().kron(&zero))
}

fn check_operator(m: &ComplexMatrix, dim: usize, what: &str) -> Result<()> {
    if m.rows() != dim || m.cols() != dim {
        return Err(Error::DimensionMismatch(format!(
            "{what} is {}x{}, register has dimension {dim}",
            m.rows(),
            m.cols()
        )));
    }
    Ok(())
}

fn check_unitary(u: &ComplexMatrix, dim: usize) -> Result<()> {
    check_operator(u, dim, "network unitary")?;
    let residual = u.unitarity_residual();
    if residual > Tolerances::DEFAULT.unitary {
        return Err(Error::NonUnitary { residual });
    }
    Ok(())
}

/// `Tr_{in,hid}[U (rho (x) |0><0|) U^dagger]`
pub fn nn_output(rho: &DensityMatrix, u: &ComplexMatrix, layout: &NnLayout) -> Result<DensityMatrix> {
    let total = layout.total();
    check_unitary(u, total.dim())?;
    let full = embed(rho, layout)?.conjugate_by(u);
    let out = partial_trace_matrix(&full, &total, &layout.output_factors())?.hermitian_part();
    Ok(DensityMatrix::from_parts_unchecked(layout.output.clone(), out))
}

/// `Lambda / Tr(Lambda)` with `Lambda = Tr_{in,hid}[V M U (rho (x) |0><0|) U^dagger M V^dagger]`.
pub fn nn_postselected_output(
    rho: &DensityMatrix,
    u: &ComplexMatrix,
    m: &Projector,
    v: &ComplexMatrix,
    layout: &NnLayout,
) -> Result<DensityMatrix> {
    let total = layout.total();
    check_unitary(u, total.dim())?;
    check_operator(v, total.dim(), "decoding operator")?;
    m.space().ensure_same(&total)?;
    let full = embed(rho, layout)?
        .conjugate_by(u)
        .conjugate_by(m.matrix())
        .conjugate_by(v);
    let lambda = partial_trace_matrix(&full, &total, &layout.output_factors())?;
    let weight = lambda.trace().re;
    if weight <= Tolerances::DEFAULT.post_select {
        return Err(Error::ZeroWeight { weight });
    }
    let out = lambda.scale_real(1.0 / weight).hermitian_part();
    Ok(DensityMatrix::from_parts_unchecked(layout.output.clone(), out))
}

/// Network realisation of a detection-based pipeline `(U_e, M)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NnConstruction {
    pub unitary: ComplexMatrix,
    pub measurement: Projector,
    pub decoder: ComplexMatrix,
    pub layout: NnLayout,
}

/// `U_nn = U_e (x) I`, `M_nn = M (x) I`, `V_nn = SWAP (U_e^dagger (x) I)`:
/// encode, measure, decode on the input register, then move it to the output.
pub fn detection_to_nn(u_e: &ComplexMatrix, m: &Projector) -> Result<NnConstruction> {
    let data = m.space().clone();
    let n = data.dim();
    check_unitary(u_e, n)?;
    let layout = NnLayout::autoencoder(data);
    let total = layout.total();
    let id = ComplexMatrix::identity(n);
    let unitary = u_e.kron(&id);
    let measurement = Projector::from_parts_unchecked(total, m.matrix().kron(&id));
    let decoder = swap(n, 1, n).matmul(&u_e.adjoint().kron(&id));
    Ok(NnConstruction {
        unitary,
        measurement,
        decoder,
        layout,
    })
}

/// Exchange of the outer registers of `A (x) H (x) B` with `dim A = dim B = d`.
pub fn swap(d: usize, hidden: usize, d_out: usize) -> ComplexMatrix {
    assert_eq!(d, d_out, "swap needs equal register dimensions");
    let n = d * hidden * d;
    let mut m = ComplexMatrix::zeros(n, n);
    for a in 0..d {
        for h in 0..hidden {
            for b in 0..d {
                let from = (a * hidden + h) * d + b;
                let to = (b * hidden + h) * d + a;
                m.set(to, from, Complex64::new(1.0, 0.0));
            }
        }
    }
    m
}

/// SWAP of input and output registers for a layout, identity on the hidden part.
pub fn layout_swap(layout: &NnLayout) -> ComplexMatrix {
    swap(layout.input.dim(), layout.hidden_dim(), layout.output.dim())
}

/// Haar-random unitary: Gram-Schmidt on the columns of a seeded complex
/// Gaussian matrix. Positive diagonal of the implicit `R` fixes the phases.
pub fn haar_unitary(dim: usize, seed: u64) -> ComplexMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let g = ComplexMatrix::from_fn(dim, dim, |_, _| {
            Complex64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng))
                * std::f64::consts::FRAC_1_SQRT_2
        });
        if let Some(q) = gram_schmidt_columns(&g) {
            return q;
        }
    }
}

fn gram_schmidt_columns(g: &ComplexMatrix) -> Option<ComplexMatrix> {
    let n = g.rows();
    let mut cols: Vec<Vec<Complex64>> = Vec::with_capacity(n);
    for j in 0..n {
        let mut v = g.column(j);
        for _ in 0..2 {
            for q in &cols {
                let proj: Complex64 = q.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                for (x, y) in v.iter_mut().zip(q) {
                    *x -= proj * y;
                }
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-10 {
            return None;
        }
        v.iter_mut().for_each(|z| *z /= norm);
        cols.push(v);
    }
    Some(ComplexMatrix::from_fn(n, n, |i, j| cols[j][i]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoder::{known_w_pipeline, random_subspace_projector, EncoderPipeline};
    use crate::mitigation::mitigate;
    use crate::noise::{apply_noise, NoiseModel};
    use crate::qstate::{infidelity, PureState};

    fn qudit_basis(d: usize, i: usize) -> DensityMatrix {
        PureState::basis(HilbertSpace::qudit(d), i).unwrap().density()
    }

    #[test]
    fn haar_is_unitary_and_deterministic() {
        let u = haar_unitary(6, 3);
        assert!(u.unitarity_residual() < 1e-12);
        assert_eq!(u, haar_unitary(6, 3));
        assert_ne!(u, haar_unitary(6, 4));
    }

    #[test]
    fn swap_network_copies_input() {
        let layout = NnLayout::autoencoder(HilbertSpace::qubits(1));
        let plus = PureState::normalized(
            HilbertSpace::qubits(1),
            vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)],
        )
        .unwrap()
        .density();
        let out = nn_output(&plus, &layout_swap(&layout), &layout).unwrap();
        assert!(out.matrix().distance(plus.matrix()) < 1e-15);
    }

    #[test]
    fn identity_network_leaves_output_in_zero() {
        let layout = NnLayout::new(HilbertSpace::qudit(3), Some(HilbertSpace::qubits(1)), HilbertSpace::qudit(3)).unwrap();
        let out = nn_output(&qudit_basis(3, 2), &ComplexMatrix::identity(18), &layout).unwrap();
        assert_eq!(out, qudit_basis(3, 0));
    }

    #[test]
    fn swap_with_hidden_register() {
        let layout = NnLayout::new(HilbertSpace::qudit(3), Some(HilbertSpace::qubits(1)), HilbertSpace::qudit(3)).unwrap();
        let rho = qudit_basis(3, 1);
        let out = nn_output(&rho, &layout_swap(&layout), &layout).unwrap();
        assert!(out.matrix().distance(rho.matrix()) < 1e-15);
    }

    #[test]
    fn output_is_trace_preserving() {
        let layout = NnLayout::new(HilbertSpace::qubits(1), Some(HilbertSpace::qubits(1)), HilbertSpace::qubits(1)).unwrap();
        let rho = PureState::basis(HilbertSpace::qubits(1), 1).unwrap().density();
        for seed in 0..5 {
            let out = nn_output(&rho, &haar_unitary(8, seed), &layout).unwrap();
            assert!((out.trace() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn trivial_postselection_reduces_to_plain_output() {
        let layout = NnLayout::autoencoder(HilbertSpace::qubits(1));
        let u = haar_unitary(4, 11);
        let rho = PureState::basis(HilbertSpace::qubits(1), 0).unwrap().density();
        let a = nn_output(&rho, &u, &layout).unwrap();
        let b = nn_postselected_output(
            &rho,
            &u,
            &Projector::identity(layout.total()),
            &ComplexMatrix::identity(4),
            &layout,
        )
        .unwrap();
        assert!(a.matrix().distance(b.matrix()) < 1e-14);
    }

    #[test]
    fn identity_construction_is_identity_channel() {
        let space = HilbertSpace::qubits(2);
        let c = detection_to_nn(&ComplexMatrix::identity(4), &Projector::identity(space.clone())).unwrap();
        let rho = PureState::normalized(space, vec![Complex64::new(1.0, 0.0); 4]).unwrap().density();
        let out = nn_postselected_output(&rho, &c.unitary, &c.measurement, &c.decoder, &c.layout).unwrap();
        assert!(out.matrix().distance(rho.matrix()) < 1e-14);
    }

    #[test]
    fn construction_matches_mitigation_on_leakage() {
        let space = HilbertSpace::qudit(5);
        let m = Projector::onto_basis(space.clone(), &[1, 2, 3, 4]).unwrap();
        let c = detection_to_nn(&ComplexMatrix::identity(5), &m).unwrap();
        let pipeline = EncoderPipeline::new(ComplexMatrix::identity(5), m).unwrap();
        let noisy = apply_noise(&qudit_basis(5, 3), &NoiseModel::leakage(), 0.4).unwrap();
        let a = nn_postselected_output(&noisy, &c.unitary, &c.measurement, &c.decoder, &c.layout).unwrap();
        let b = mitigate(&noisy, &pipeline).unwrap().corrected;
        assert!(a.matrix().distance(b.matrix()) < 1e-12);
    }

    #[test]
    fn construction_matches_mitigation_for_w_encoder() {
        let p = known_w_pipeline(2).unwrap();
        let c = detection_to_nn(p.encode_unitary(), p.latent_projector()).unwrap();
        let psi = PureState::normalized(
            HilbertSpace::qubits(2),
            vec![0.0, 0.6, -0.8, 0.0].into_iter().map(|x| Complex64::new(x, 0.0)).collect(),
        )
        .unwrap();
        let noisy = apply_noise(&psi.density(), &NoiseModel::GlobalDepolarizing, 0.2).unwrap();
        let a = nn_postselected_output(&noisy, &c.unitary, &c.measurement, &c.decoder, &c.layout).unwrap();
        let b = mitigate(&noisy, &p).unwrap().corrected;
        assert!(a.matrix().distance(b.matrix()) < 1e-10);
    }

    #[test]
    fn random_instances_agree() {
        let space = HilbertSpace::qubits(2);
        for seed in 0..5 {
            let u = haar_unitary(4, seed);
            let m = random_subspace_projector(&space, 2, 100 + seed).unwrap();
            let c = detection_to_nn(&u, &m).unwrap();
            let pipeline = EncoderPipeline::new(u, m).unwrap();
            let rho = DensityMatrix::maximally_mixed(space.clone());
            let a = nn_postselected_output(&rho, &c.unitary, &c.measurement, &c.decoder, &c.layout).unwrap();
            let b = mitigate(&rho, &pipeline).unwrap().corrected;
            assert!(a.matrix().distance(b.matrix()) < 1e-10);
        }
    }

    #[test]
    fn trace_preserving_network_cannot_undo_leakage() {
        let eps = 0.2;
        let layout = NnLayout::autoencoder(HilbertSpace::qudit(5));
        for seed in 0..4 {
            let u = haar_unitary(25, seed);
            let mean: f64 = (1..5)
                .map(|i| {
                    let rho = qudit_basis(5, i);
                    let noisy = apply_noise(&rho, &NoiseModel::leakage(), eps).unwrap();
                    infidelity(&rho, &nn_output(&noisy, &u, &layout).unwrap()).unwrap()
                })
                .sum::<f64>()
                / 4.0;
            assert!(mean >= eps * 0.75 - 1e-12);
        }
    }
}
