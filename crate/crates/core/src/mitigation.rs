//! Detection-based mitigation: encode, project onto the latent subspace,
//! renormalize, decode.

use crate::encoder::{EncoderPipeline, SupportBasis};
use crate::error::{Error, Result};
use crate::numkit::ComplexMatrix;
use crate::qstate::{DensityMatrix, PureState};
use crate::tolerance::Tolerances;

/// Junk weight above which a state is not considered compressible.
pub const SUPPORT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct MitigationOutcome {
    pub corrected: DensityMatrix,
    pub keep_probability: f64,
    pub junk_weight: f64,
}

pub fn mitigate(noisy: &DensityMatrix, pipeline: &EncoderPipeline) -> Result<MitigationOutcome> {
    mitigate_with(noisy, pipeline, &Tolerances::DEFAULT)
}

pub fn mitigate_with(
    noisy: &DensityMatrix,
    pipeline: &EncoderPipeline,
    tol: &Tolerances,
) -> Result<MitigationOutcome> {
    noisy.space().ensure_same(pipeline.space())?;
    let u = pipeline.encode_unitary();
    let encoded = noisy.matrix().conjugate_by(u);
    let ml = pipeline.latent_projector().matrix();
    let keep = ml.trace_product(&encoded).re;
    if keep <= tol.post_select {
        return Err(Error::AllDiscarded { keep });
    }
    let selected = encoded.conjugate_by(ml).scale_real(1.0 / keep);
    let decoded = u.adjoint().matmul(&selected).matmul(u).hermitian_part();
    Ok(MitigationOutcome {
        corrected: DensityMatrix::from_parts_unchecked(noisy.space().clone(), decoded),
        keep_probability: keep.clamp(0.0, 1.0),
        junk_weight: (1.0 - keep).clamp(0.0, 1.0),
    })
}

/// Error-term split `(Lambda_s, Lambda_st, Lambda_t)` relative to a support basis.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorDecomposition {
    pub support: ComplexMatrix,
    pub cross: ComplexMatrix,
    pub outside: ComplexMatrix,
}

impl ErrorDecomposition {
    pub fn reconstruct(&self) -> ComplexMatrix {
        &(&self.support + &self.cross) + &self.outside
    }
}

pub fn error_decomposition(err: &DensityMatrix, support: &SupportBasis) -> Result<ErrorDecomposition> {
    err.space().ensure_same(support.space())?;
    let p = support.projector();
    let q = p.complement();
    let s = err.matrix().conjugate_by(p.matrix());
    let t = err.matrix().conjugate_by(q.matrix());
    let cross = &(err.matrix() - &s) - &t;
    Ok(ErrorDecomposition {
        support: s,
        cross,
        outside: t,
    })
}

/// First-order corrected infidelity `eps (Tr L - <psi|L|psi>)` with
/// `L = M_S rho_err M_S` and `M_S = U_e^dagger M_L U_e`.
pub fn predicted_corrected_infidelity(
    psi: &PureState,
    err: &DensityMatrix,
    pipeline: &EncoderPipeline,
    epsilon: f64,
) -> Result<f64> {
    psi.space().ensure_same(pipeline.space())?;
    err.space().ensure_same(pipeline.space())?;
    let encoded = psi.evolve(pipeline.encode_unitary());
    let junk = encoded.expectation(pipeline.junk_projector().matrix()).re;
    if junk > SUPPORT_TOL {
        return Err(Error::NotInSupport { junk });
    }
    let ms = pipeline.support_projector();
    let lambda = err.matrix().conjugate_by(ms.matrix());
    let tr = lambda.trace().re;
    if tr <= Tolerances::DEFAULT.post_select {
        return Ok(0.0);
    }
    let overlap = psi.expectation(&lambda).re;
    Ok(epsilon * (tr - overlap))
}

/// `1 - eps + eps Tr(M_S rho_err)`, the exact keep probability for in-support inputs.
pub fn predicted_keep_probability(err: &DensityMatrix, pipeline: &EncoderPipeline, epsilon: f64) -> f64 {
    let ms = pipeline.support_projector();
    1.0 - epsilon + epsilon * err.expectation(ms.matrix())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoder::{known_w_pipeline, latent_projector, w_support};
    use crate::noise::{apply_noise, error_state, NoiseModel};
    use crate::numkit::c64;
    use crate::qstate::{infidelity, HilbertSpace, Projector};

    fn w_state(coeffs: &[f64]) -> PureState {
        let n = coeffs.len();
        let mut amps = vec![c64(0.0, 0.0); 1 << n];
        for (k, &a) in coeffs.iter().enumerate() {
            amps[1 << (n - 1 - k)] = c64(a, 0.0);
        }
        PureState::normalized(HilbertSpace::qubits(n), amps).unwrap()
    }

    #[test]
    fn noiseless_input_is_untouched() {
        let p = known_w_pipeline(4).unwrap();
        let rho = w_state(&[0.3, -1.0, 0.2, 0.7]).density();
        let out = mitigate(&rho, &p).unwrap();
        assert!((out.keep_probability - 1.0).abs() < 1e-12);
        assert!(out.corrected.matrix().distance(rho.matrix()) < 1e-12);
    }

    #[test]
    fn leakage_is_removed_exactly() {
        let space = HilbertSpace::qudit(5);
        let ml = Projector::onto_basis(space.clone(), &[1, 2, 3, 4]).unwrap();
        let p = EncoderPipeline::new(ComplexMatrix::identity(5), ml).unwrap();
        for i in 1..5 {
            let rho = PureState::basis(space.clone(), i).unwrap().density();
            let noisy = apply_noise(&rho, &NoiseModel::leakage(), 0.3).unwrap();
            let out = mitigate(&noisy, &p).unwrap();
            assert!((out.keep_probability - 0.7).abs() < 1e-12);
            assert!(out.corrected.matrix().distance(rho.matrix()) < 1e-12);
        }
    }

    #[test]
    fn known_w_global_depolarizing() {
        let p = known_w_pipeline(4).unwrap();
        let rho = w_state(&[1.0, 0.5, -0.25, 2.0]).density();
        let eps = 0.05;
        let noisy = apply_noise(&rho, &NoiseModel::GlobalDepolarizing, eps).unwrap();
        let out = mitigate(&noisy, &p).unwrap();
        assert!((out.keep_probability - 0.9625).abs() < 1e-12);
        assert!((out.keep_probability + out.junk_weight - 1.0).abs() < 1e-12);
        // exact value (eps/N)(L-1)/keep
        let exact = eps / 16.0 * 3.0 / 0.9625;
        let got = infidelity(&rho, &out.corrected).unwrap();
        assert!((got - exact).abs() < 1e-12, "{got} vs {exact}");
        assert!((got - 0.009375).abs() < 5e-4);
    }

    #[test]
    fn all_discarded_is_reported() {
        let space = HilbertSpace::qubits(2);
        let (ml, _) = latent_projector(&space, 1).unwrap();
        let p = EncoderPipeline::new(ComplexMatrix::identity(4), ml).unwrap();
        let rho = PureState::basis(space, 3).unwrap().density();
        assert!(matches!(mitigate(&rho, &p), Err(Error::AllDiscarded { .. })));
    }

    #[test]
    fn decomposition_reconstructs() {
        let support = w_support(3);
        let err = DensityMatrix::maximally_mixed(HilbertSpace::qubits(3));
        let d = error_decomposition(&err, &support).unwrap();
        assert!(d.reconstruct().distance(err.matrix()) < 1e-12);
        assert!((d.support.trace().re - 3.0 / 8.0).abs() < 1e-12);
        assert!(d.cross.frobenius_norm() < 1e-12);
    }

    #[test]
    fn leakage_decomposition() {
        let space = HilbertSpace::qudit(5);
        let vectors = (1..5).map(|i| PureState::basis(space.clone(), i).unwrap()).collect();
        let support = SupportBasis::new(space.clone(), vectors).unwrap();
        let err = PureState::basis(space, 0).unwrap().density();
        let d = error_decomposition(&err, &support).unwrap();
        assert!(d.support.frobenius_norm() < 1e-15);
        assert!(d.outside.distance(err.matrix()) < 1e-15);
    }

    #[test]
    fn prediction_for_global_noise() {
        let p = known_w_pipeline(4).unwrap();
        let psi = w_state(&[0.1, 0.9, -0.4, 0.3]);
        let err = error_state(&NoiseModel::GlobalDepolarizing, &psi.density()).unwrap();
        let pred = predicted_corrected_infidelity(&psi, &err, &p, 0.05).unwrap();
        assert!((pred - 0.05 * 3.0 / 16.0).abs() < 1e-12);
        let keep = predicted_keep_probability(&err, &p, 0.05);
        assert!((keep - 0.9625).abs() < 1e-12);
    }

    #[test]
    fn prediction_rejects_states_outside_support() {
        let p = known_w_pipeline(4).unwrap();
        let psi = PureState::basis(HilbertSpace::qubits(4), 15).unwrap();
        let err = DensityMatrix::maximally_mixed(HilbertSpace::qubits(4));
        assert!(matches!(
            predicted_corrected_infidelity(&psi, &err, &p, 0.1),
            Err(Error::NotInSupport { .. })
        ));
    }
}
