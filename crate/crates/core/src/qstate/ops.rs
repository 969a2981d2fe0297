use num_complex::Complex64;

use super::space::HilbertSpace;
use super::state::{DensityMatrix, Projector};
use crate::error::{Error, Result};
use crate::numkit::{clamped_nonnegative, hermitian_eig_with, psd_sqrt_with, ComplexMatrix, ZERO};
use crate::tolerance::Tolerances;

/// Kronecker product of density matrices; factor lists are concatenated.
pub fn tensor_product(parts: &[&DensityMatrix]) -> Result<DensityMatrix> {
    let (first, rest) = parts
        .split_first()
        .ok_or_else(|| Error::InvalidState("tensor product of nothing".into()))?;
    let mut space = first.space().clone();
    let mut matrix = first.matrix().clone();
    for rho in rest {
        space = space.concat(rho.space());
        matrix = matrix.kron(rho.matrix());
    }
    Ok(DensityMatrix::from_parts_unchecked(space, matrix))
}

/// Trace out every factor not listed in `keep`.  Kept factors retain their
/// original relative order.
pub fn partial_trace(rho: &DensityMatrix, keep: &[usize]) -> Result<DensityMatrix> {
    let matrix = partial_trace_matrix(rho.matrix(), rho.space(), keep)?;
    let mut kept: Vec<usize> = keep.to_vec();
    kept.sort_unstable();
    let space = rho.space().subspace(&kept)?;
    Ok(DensityMatrix::from_parts_unchecked(space, matrix))
}

/// Partial trace of an arbitrary operator on `space`.
pub fn partial_trace_matrix(
    m: &ComplexMatrix,
    space: &HilbertSpace,
    keep: &[usize],
) -> Result<ComplexMatrix> {
    let nf = space.num_factors();
    let mut kept: Vec<usize> = keep.to_vec();
    kept.sort_unstable();
    if kept.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::BadSubsystem(format!("duplicate subsystem in {keep:?}")));
    }
    if let Some(&k) = kept.iter().find(|&&k| k >= nf) {
        return Err(Error::BadSubsystem(format!("subsystem {k} of {nf}")));
    }
    if m.rows() != space.dim() || m.cols() != space.dim() {
        return Err(Error::DimensionMismatch("operator does not match space".into()));
    }
    let dims = space.factors();
    let traced: Vec<usize> = (0..nf).filter(|k| !kept.contains(k)).collect();
    let keep_dims: Vec<usize> = kept.iter().map(|&k| dims[k]).collect();
    let trace_dims: Vec<usize> = traced.iter().map(|&k| dims[k]).collect();
    let dk: usize = keep_dims.iter().product();
    let dt: usize = trace_dims.iter().product();

    // Map (kept index, traced index) -> full index once.
    let mut full = vec![0usize; dk * dt];
    let mut digits = vec![0usize; nf];
    for a in 0..dk {
        spread(a, &keep_dims, &kept, &mut digits);
        for t in 0..dt {
            spread(t, &trace_dims, &traced, &mut digits);
            full[a * dt + t] = space.index_of(&digits);
        }
    }
    let mut out = vec![ZERO; dk * dk];
    for a in 0..dk {
        for b in 0..dk {
            let mut acc = ZERO;
            for t in 0..dt {
                acc += m.get(full[a * dt + t], full[b * dt + t]);
            }
            out[a * dk + b] = acc;
        }
    }
    Ok(ComplexMatrix::from_vec_unchecked(dk, dk, out))
}

fn spread(mut index: usize, dims: &[usize], positions: &[usize], digits: &mut [usize]) {
    for (k, &d) in dims.iter().enumerate().rev() {
        digits[positions[k]] = index % d;
        index /= d;
    }
}

/// `Tr(rho^2)`
pub fn purity(rho: &DensityMatrix) -> f64 {
    rho.matrix().as_slice().iter().map(|z| z.norm_sqr()).sum()
}

/// `1 - (Tr sqrt(sqrt(rho1) rho2 sqrt(rho1)))^2`, clamped to `[0, 1]`.
pub fn infidelity(rho1: &DensityMatrix, rho2: &DensityMatrix) -> Result<f64> {
    infidelity_with(rho1, rho2, &Tolerances::DEFAULT)
}

pub fn infidelity_with(rho1: &DensityMatrix, rho2: &DensityMatrix, tol: &Tolerances) -> Result<f64> {
    rho1.space().ensure_same(rho2.space())?;
    let fidelity = if purity(rho1) > 1.0 - tol.pure_shortcut || purity(rho2) > 1.0 - tol.pure_shortcut {
        // Tr(rho1 rho2) = <psi|rho2|psi> when either side is pure
        rho1.matrix().trace_product(rho2.matrix()).re
    } else {
        let s = psd_sqrt_with(rho1.matrix(), tol)?;
        let inner = s.matmul(rho2.matrix()).matmul(&s).hermitian_part();
        let eig = hermitian_eig_with(&inner, tol)?;
        let root: f64 = clamped_nonnegative(&eig.values, tol)?
            .iter()
            .map(|l| l.sqrt())
            .sum();
        root * root
    };
    Ok((1.0 - fidelity).clamp(0.0, 1.0))
}

/// `P rho P^dagger` and its weight `Tr(P rho P^dagger)`, without renormalizing.
pub fn project(rho: &DensityMatrix, p: &Projector) -> Result<(ComplexMatrix, f64)> {
    rho.space().ensure_same(p.space())?;
    let projected = rho.matrix().conjugate_by(p.matrix());
    let weight = projected.trace().re.clamp(0.0, 1.0);
    Ok((projected, weight))
}

/// Projective post-selection: `(P rho P / w, w)`.
pub fn post_select(rho: &DensityMatrix, p: &Projector) -> Result<(DensityMatrix, f64)> {
    post_select_with(rho, p, &Tolerances::DEFAULT)
}

pub fn post_select_with(
    rho: &DensityMatrix,
    p: &Projector,
    tol: &Tolerances,
) -> Result<(DensityMatrix, f64)> {
    let (projected, weight) = project(rho, p)?;
    if weight <= tol.post_select {
        return Err(Error::ZeroWeight { weight });
    }
    let normalized = projected.scale(Complex64::new(1.0 / weight, 0.0)).hermitian_part();
    Ok((
        DensityMatrix::from_parts_unchecked(rho.space().clone(), normalized),
        weight,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate::PureState;
    use crate::numkit::c64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ket(bits: &[usize]) -> PureState {
        PureState::computational(HilbertSpace::qubits(bits.len()), bits).unwrap()
    }

    pub(crate) fn random_density(n_qubits: usize, seed: u64) -> DensityMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 1 << n_qubits;
        let g = ComplexMatrix::from_fn(n, n, |_, _| {
            c64(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        let a = g.matmul_adjoint(&g);
        let tr = a.trace().re;
        DensityMatrix::new(HilbertSpace::qubits(n_qubits), a.scale_real(1.0 / tr)).unwrap()
    }

    /// Reference partial trace by explicit digit loops.
    fn reference_trace_out_tail(rho: &DensityMatrix, keep_first: usize) -> ComplexMatrix {
        let n = rho.space().num_factors();
        let dk = 1 << keep_first;
        let dt = 1 << (n - keep_first);
        ComplexMatrix::from_fn(dk, dk, |a, b| {
            (0..dt).map(|t| rho.matrix().get(a * dt + t, b * dt + t)).sum()
        })
    }

    #[test]
    fn product_of_zero_projectors() {
        let z = ket(&[0]).density();
        let zz = tensor_product(&[&z, &z]).unwrap();
        assert_eq!(zz, ket(&[0, 0]).density());
        assert_eq!(zz.space().factors(), &[2, 2]);
    }

    #[test]
    fn plus_tensor_one_matches_explicit_outer_product() {
        let plus = PureState::normalized(HilbertSpace::qubits(1), vec![c64(1.0, 0.0), c64(1.0, 0.0)]).unwrap();
        let prod = tensor_product(&[&plus.density(), &ket(&[1]).density()]).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let v = [ZERO, c64(r, 0.0), ZERO, c64(r, 0.0)];
        assert!(prod.matrix().distance(&ComplexMatrix::outer(&v, &v)) < 1e-15);
        assert!((purity(&prod) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn trace_out_second_qubit() {
        let r = partial_trace(&ket(&[0, 0]).density(), &[0]).unwrap();
        assert_eq!(r, ket(&[0]).density());
    }

    #[test]
    fn bell_marginals_are_maximally_mixed() {
        let bell = PureState::normalized(
            HilbertSpace::qubits(2),
            vec![c64(1.0, 0.0), ZERO, ZERO, c64(1.0, 0.0)],
        )
        .unwrap()
        .density();
        let half = ComplexMatrix::identity(2).scale_real(0.5);
        for k in 0..2 {
            let r = partial_trace(&bell, &[k]).unwrap();
            assert!(r.matrix().distance(&half) < 1e-15);
        }
    }

    #[test]
    fn random_four_qubit_partial_trace_matches_reference() {
        let rho = random_density(4, 9);
        let r = partial_trace(&rho, &[0]).unwrap();
        let reference = reference_trace_out_tail(&rho, 1);
        assert!(r.matrix().distance(&reference) < 1e-14);
        assert!((r.trace() - 1.0).abs() < 1e-12);
        assert!(r.matrix().is_hermitian(1e-12));
        assert!(r.eigenvalues().unwrap()[0] >= -1e-12);
    }

    #[test]
    fn partial_trace_rejects_bad_subsystem() {
        let rho = ket(&[0, 1]).density();
        assert!(matches!(partial_trace(&rho, &[2]), Err(Error::BadSubsystem(_))));
        assert!(matches!(partial_trace(&rho, &[0, 0]), Err(Error::BadSubsystem(_))));
    }

    #[test]
    fn non_contiguous_keep_preserves_order() {
        // |0 1 1> keep {0, 2} -> |0 1>
        let r = partial_trace(&ket(&[0, 1, 1]).density(), &[2, 0]).unwrap();
        assert_eq!(r, ket(&[0, 1]).density());
    }

    #[test]
    fn infidelity_examples() {
        let rho = random_density(2, 1);
        assert!(infidelity(&rho, &rho).unwrap() < 1e-9);
        let zero = ket(&[0]).density();
        let mixed = DensityMatrix::maximally_mixed(HilbertSpace::qubits(1));
        assert!((infidelity(&zero, &mixed).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn infidelity_symmetric_for_mixed_states() {
        let a = random_density(3, 2);
        let b = random_density(3, 3);
        let ab = infidelity(&a, &b).unwrap();
        let ba = infidelity(&b, &a).unwrap();
        assert!((ab - ba).abs() < 1e-9);
        assert!((0.0..=1.0).contains(&ab));
    }

    #[test]
    fn general_formula_agrees_with_pure_overlap() {
        let psi = PureState::normalized(
            HilbertSpace::qubits(2),
            vec![c64(0.3, 0.1), c64(-0.5, 0.0), c64(0.2, 0.7), c64(0.0, -0.1)],
        )
        .unwrap();
        let sigma = random_density(2, 4);
        let overlap = 1.0 - psi.expectation(sigma.matrix()).re;
        let general = infidelity(&sigma, &psi.density()).unwrap();
        assert!((overlap - general).abs() < 1e-9);
    }

    #[test]
    fn purity_examples() {
        assert!((purity(&ket(&[1, 0]).density()) - 1.0).abs() < 1e-15);
        let mixed = DensityMatrix::maximally_mixed(HilbertSpace::qubits(1));
        assert!((purity(&mixed) - 0.5).abs() < 1e-15);
        let p = 0.3;
        let rho = DensityMatrix::new(
            HilbertSpace::qubits(1),
            ComplexMatrix::real_diagonal(&[p, 1.0 - p]),
        )
        .unwrap();
        assert!((purity(&rho) - (p * p + (1.0 - p) * (1.0 - p))).abs() < 1e-15);
    }

    #[test]
    fn post_selection_examples() {
        let rho = random_density(2, 5);
        let (same, w) = post_select(&rho, &Projector::identity(HilbertSpace::qubits(2))).unwrap();
        assert!((w - 1.0).abs() < 1e-12);
        assert!(same.matrix().distance(rho.matrix()) < 1e-12);

        let zero = Projector::onto_basis(HilbertSpace::qubits(1), &[0]).unwrap();
        assert!(matches!(
            post_select(&ket(&[1]).density(), &zero),
            Err(Error::ZeroWeight { .. })
        ));
    }
}
