//! Cost functions, finite-difference gradients and gradient-descent training.

use std::fmt::Write as _;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

use crate::ansatz::{
    apply_left, apply_right, gate_adjoint, gate_mul, zyz, GeneratorReading, LayeredAnsatz, ParamVector,
    QuditGeneratorAnsatz,
};
use crate::encoder::EncoderPipeline;
use crate::error::{Error, Result};
use crate::numkit::{jacobi_in_place, real_matmul, real_tmatmul, symmetric_eig, ComplexMatrix};
use crate::qstate::{partial_trace_matrix, DensityMatrix, HilbertSpace, Projector};
use crate::seed;
use crate::tolerance::Tolerances;

/// One reduced-state purity in a purity cost: the subsystems kept and a weight.
#[derive(Debug, Clone, PartialEq)]
pub struct PurityTerm {
    pub keep: Vec<usize>,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CostKind {
    /// `Tr[M_J sigma]`
    JunkProjection(Projector),
    /// `1 - sum_t w_t Tr[(Tr_{not keep_t} sigma)^2]`
    Purity(Vec<PurityTerm>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CostSpec {
    pub kind: CostKind,
    pub inputs: Vec<DensityMatrix>,
}

impl CostSpec {
    pub fn projection(junk: Projector, inputs: Vec<DensityMatrix>) -> Self {
        Self {
            kind: CostKind::JunkProjection(junk),
            inputs,
        }
    }

    pub fn purity(terms: Vec<PurityTerm>, inputs: Vec<DensityMatrix>) -> Self {
        Self {
            kind: CostKind::Purity(terms),
            inputs,
        }
    }

    /// Cost of the encoder `u` over the training inputs.
    pub fn evaluate(&self, u: &ComplexMatrix) -> Result<f64> {
        match &self.kind {
            CostKind::JunkProjection(mj) => cost_projection(u, &self.inputs, mj),
            CostKind::Purity(terms) => cost_purity(u, &self.inputs, terms),
        }
    }

    fn space(&self) -> Result<&HilbertSpace> {
        self.inputs
            .first()
            .map(|r| r.space())
            .ok_or_else(|| Error::Config("cost needs at least one training input".into()))
    }
}

fn check_inputs(u: &ComplexMatrix, inputs: &[DensityMatrix]) -> Result<()> {
    if inputs.is_empty() {
        return Err(Error::Config("cost needs at least one training input".into()));
    }
    for rho in inputs {
        if rho.dim() != u.rows() || !u.is_square() || rho.space() != inputs[0].space() {
            return Err(Error::DimensionMismatch("training inputs and encoder differ".into()));
        }
    }
    Ok(())
}

fn mean_input(inputs: &[DensityMatrix]) -> ComplexMatrix {
    let n = inputs[0].dim();
    let mut acc = ComplexMatrix::zeros(n, n);
    let w = Complex64::new(1.0 / inputs.len() as f64, 0.0);
    for rho in inputs {
        acc.add_scaled(rho.matrix(), w);
    }
    acc
}

/// Mean of `Tr[M_J U rho U^dagger]` over the inputs.
pub fn cost_projection(u: &ComplexMatrix, inputs: &[DensityMatrix], junk: &Projector) -> Result<f64> {
    check_inputs(u, inputs)?;
    if junk.space() != inputs[0].space() {
        return Err(Error::DimensionMismatch("junk projector on another space".into()));
    }
    let sigma = mean_input(inputs).conjugate_by(u);
    Ok(junk.matrix().trace_product(&sigma).re.clamp(0.0, 1.0))
}

/// `1 - ` weighted mean reduced-state purity of `U rho U^dagger`, averaged over inputs.
pub fn cost_purity(u: &ComplexMatrix, inputs: &[DensityMatrix], terms: &[PurityTerm]) -> Result<f64> {
    check_inputs(u, inputs)?;
    if terms.is_empty() {
        return Err(Error::Config("purity cost needs at least one term".into()));
    }
    let total_weight: f64 = terms.iter().map(|t| t.weight).sum();
    let space = inputs[0].space();
    let mut acc = 0.0;
    for rho in inputs {
        let sigma = rho.matrix().conjugate_by(u);
        for t in terms {
            let reduced = partial_trace_matrix(&sigma, space, &t.keep)?;
            let p: f64 = reduced.as_slice().iter().map(|z| z.norm_sqr()).sum();
            acc += t.weight * p;
        }
    }
    let mean = acc / (total_weight * inputs.len() as f64);
    Ok((1.0 - mean).clamp(0.0, 1.0))
}

/// Central differences `(f(x + d e_k) - f(x - d e_k)) / 2d`.
pub fn finite_diff_grad<F>(f: F, x: &[f64], delta: f64) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    if !(delta > 0.0) {
        return Err(Error::Config(format!("finite-difference step {delta} must be positive")));
    }
    (0..x.len())
        .into_par_iter()
        .map(|k| {
            let mut y = x.to_vec();
            y[k] = x[k] + delta;
            let plus = f(&y)?;
            y[k] = x[k] - delta;
            let minus = f(&y)?;
            Ok((plus - minus) / (2.0 * delta))
        })
        .collect()
}

/// Something gradient descent can minimize.
pub trait Objective: Sync {
    fn num_params(&self) -> usize;

    fn cost(&self, x: &[f64]) -> Result<f64>;

    fn gradient(&self, x: &[f64], delta: f64) -> Result<Vec<f64>> {
        finite_diff_grad(|y| self.cost(y), x, delta)
    }

    /// Analytic gradient, when the objective has one.
    fn exact_gradient(&self, _x: &[f64]) -> Option<Result<Vec<f64>>> {
        None
    }
}

/// How gradient descent obtains derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gradient {
    /// Analytic derivative; objectives without one fall back to central
    /// differences with the given step.
    Exact { fallback_step: f64 },
    CentralDifference { step: f64 },
}

impl Gradient {
    fn evaluate(&self, objective: &dyn Objective, x: &[f64]) -> Result<Vec<f64>> {
        match *self {
            Gradient::Exact { fallback_step } => match objective.exact_gradient(x) {
                Some(g) => g,
                None => objective.gradient(x, fallback_step),
            },
            Gradient::CentralDifference { step } => objective.gradient(x, step),
        }
    }
}

/// Junk-projection cost of one ansatz group acting after a fixed prefix.
///
/// The cost is linear in the input, so the training inputs are averaged and
/// pushed through the frozen prefix once. The gradient evaluates the same
/// central differences as [`finite_diff_grad`] but reuses per-layer
/// intermediates: Euler-angle shifts only touch one single-qubit factor, and
/// each shifted Hamiltonian is diagonalized starting from the eigenbasis of
/// the unshifted one.
pub struct ProjectionObjective {
    ansatz: LayeredAnsatz,
    sigma: ComplexMatrix,
    junk: ComplexMatrix,
    tol: Tolerances,
}

impl ProjectionObjective {
    pub fn new(ansatz: &LayeredAnsatz, prefix: &ComplexMatrix, inputs: &[DensityMatrix], junk: &Projector) -> Result<Self> {
        check_inputs(prefix, inputs)?;
        if prefix.rows() != ansatz.dim() || junk.matrix().rows() != ansatz.dim() {
            return Err(Error::DimensionMismatch("objective dimensions differ".into()));
        }
        Ok(Self {
            ansatz: ansatz.clone(),
            sigma: mean_input(inputs).conjugate_by(prefix),
            junk: junk.matrix().clone(),
            tol: Tolerances::DEFAULT,
        })
    }

    fn layer_slices<'a>(&self, x: &'a [f64]) -> Vec<&'a [f64]> {
        x.chunks(self.ansatz.params_per_layer()).collect()
    }

    fn fast_gradient(&self, x: &[f64], delta: f64) -> Result<Vec<f64>> {
        let a = &self.ansatz;
        let n = a.qubits();
        let dim = a.dim();
        let ne = a.euler_count();
        let layers = self.layer_slices(x);

        struct Layer {
            eig: crate::numkit::SymmetricEigen,
            e: ComplexMatrix,
            gates: Vec<[Complex64; 4]>,
            full: ComplexMatrix,
        }
        let mut built = Vec::with_capacity(layers.len());
        for p in &layers {
            let eig = symmetric_eig(&a.hamiltonian(&p[ne..]), dim, &self.tol)?;
            let e = eig.exp_i(1.0);
            let gates = a.rotations(&p[..ne]);
            let mut full = e.clone();
            for (q, g) in gates.iter().enumerate() {
                apply_right(&mut full, g, q, n);
            }
            built.push(Layer { eig, e, gates, full });
        }
        // inputs[l] enters layer l; observables[l] is measured right after it
        let mut inputs = vec![self.sigma.clone()];
        for layer in &built {
            let next = inputs.last().expect("non-empty").conjugate_by(&layer.full);
            inputs.push(next);
        }
        let mut observables = vec![self.junk.clone(); built.len()];
        for l in (0..built.len().saturating_sub(1)).rev() {
            let after = &observables[l + 1];
            observables[l] = built[l + 1].full.adjoint().matmul(after).matmul(&built[l + 1].full);
        }

        let mut grad = vec![0.0; x.len()];
        for (l, layer) in built.iter().enumerate() {
            let offset = l * a.params_per_layer();
            let p = layers[l];
            let obs = &observables[l];
            let x_in = &inputs[l];

            // Euler angles: Tr[(R^+ E^+ A E R) G X G^+] with G = r_q^+ r'_q
            let mut y_hat = obs.conjugate_by(&layer.e.adjoint());
            for (q, g) in layer.gates.iter().enumerate() {
                apply_left(&mut y_hat, &gate_adjoint(g), q, n);
                apply_right(&mut y_hat, g, q, n);
            }
            for q in 0..n {
                let r_adj = gate_adjoint(&layer.gates[q]);
                for k in 0..3 {
                    let mut vals = [0.0; 2];
                    for (slot, s) in [1.0, -1.0].iter().enumerate() {
                        let mut angles = [p[3 * q], p[3 * q + 1], p[3 * q + 2]];
                        angles[k] += s * delta;
                        let g = gate_mul(&r_adj, &zyz(angles[0], angles[1], angles[2]));
                        let mut shifted = x_in.clone();
                        apply_left(&mut shifted, &g, q, n);
                        apply_right(&mut shifted, &gate_adjoint(&g), q, n);
                        vals[slot] = y_hat.trace_product(&shifted).re;
                    }
                    grad[offset + 3 * q + k] = (vals[0] - vals[1]) / (2.0 * delta);
                }
            }

            // Hamiltonian coefficients, in the eigenbasis of the unshifted H
            let mut z = x_in.clone();
            for (q, g) in layer.gates.iter().enumerate() {
                apply_left(&mut z, g, q, n);
                apply_right(&mut z, &gate_adjoint(g), q, n);
            }
            let v = &layer.eig.vectors;
            let obs_t = split_transform(v, obs, dim);
            let z_t = split_transform(v, &z, dim);
            let scale = frob(&a.hamiltonian(&p[ne..])).max(1.0);
            let target = self.tol.jacobi_offdiag * scale;
            let terms = a.terms();
            let results: Vec<Result<f64>> = (0..terms.len())
                .into_par_iter()
                .map(|t| {
                    let term = terms[t];
                    let mut pv = vec![0.0; dim * dim];
                    for r in 0..dim {
                        let s = term.entry(r);
                        let row = r ^ term.flip;
                        let src = &v[row * dim..(row + 1) * dim];
                        for (d, &x) in pv[r * dim..(r + 1) * dim].iter_mut().zip(src) {
                            *d = s * x;
                        }
                    }
                    let p_t = real_tmatmul(v, &pv, dim);
                    let mut vals = [0.0; 2];
                    for (slot, s) in [1.0, -1.0].iter().enumerate() {
                        let mut b = p_t.iter().map(|x| s * delta * x).collect::<Vec<f64>>();
                        for i in 0..dim {
                            b[i * dim + i] += layer.eig.values[i];
                        }
                        let mut w = identity(dim);
                        jacobi_in_place(&mut b, &mut w, dim, target, self.tol.jacobi_max_sweeps)?;
                        let lambda: Vec<f64> = (0..dim).map(|i| b[i * dim + i]).collect();
                        let o = split_rotate(&w, &obs_t, dim);
                        let zz = split_rotate(&w, &z_t, dim);
                        vals[slot] = phase_trace(&o, &zz, &lambda, dim);
                    }
                    Ok((vals[0] - vals[1]) / (2.0 * delta))
                })
                .collect();
            for (t, r) in results.into_iter().enumerate() {
                grad[offset + ne + t] = r?;
            }
        }
        Ok(grad)
    }

    /// Exact derivative of `Tr[A F X F^dagger]` for every layer `F = E R`.
    ///
    /// Euler angles: `2 Re Tr[Y G X]` with `Y = R^+ E^+ A E R` and
    /// `G = r_q^+ dr_q`. Hamiltonian coefficients: `dE = V (Gamma o V^T P V) V^T`
    /// with divided differences `Gamma` of `exp(-i lambda)`.
    fn exact_gradient_impl(&self, x: &[f64]) -> Result<Vec<f64>> {
        let a = &self.ansatz;
        let n = a.qubits();
        let dim = a.dim();
        let ne = a.euler_count();
        let layers = self.layer_slices(x);

        let mut built = Vec::with_capacity(layers.len());
        for p in &layers {
            let eig = symmetric_eig(&a.hamiltonian(&p[ne..]), dim, &self.tol)?;
            let e = eig.exp_i(1.0);
            let gates = a.rotations(&p[..ne]);
            let mut full = e.clone();
            for (q, g) in gates.iter().enumerate() {
                apply_right(&mut full, g, q, n);
            }
            built.push((eig, e, gates, full));
        }
        let mut inputs = vec![self.sigma.clone()];
        for layer in &built {
            let next = inputs.last().expect("non-empty").conjugate_by(&layer.3);
            inputs.push(next);
        }
        let mut observables = vec![self.junk.clone(); built.len()];
        for l in (0..built.len().saturating_sub(1)).rev() {
            let f = &built[l + 1].3;
            observables[l] = f.adjoint().matmul(&observables[l + 1]).matmul(f);
        }

        let mut grad = vec![0.0; x.len()];
        for (l, (eig, e, gates, _)) in built.iter().enumerate() {
            let offset = l * a.params_per_layer();
            let p = layers[l];
            let obs = &observables[l];
            let x_in = &inputs[l];

            let mut y_hat = obs.conjugate_by(&e.adjoint());
            for (q, g) in gates.iter().enumerate() {
                apply_left(&mut y_hat, &gate_adjoint(g), q, n);
                apply_right(&mut y_hat, g, q, n);
            }
            for q in 0..n {
                let r_adj = gate_adjoint(&gates[q]);
                for k in 0..3 {
                    let dr = zyz_derivative(p[3 * q], p[3 * q + 1], p[3 * q + 2], k);
                    let mut gx = x_in.clone();
                    apply_left(&mut gx, &gate_mul(&r_adj, &dr), q, n);
                    grad[offset + 3 * q + k] = 2.0 * y_hat.trace_product(&gx).re;
                }
            }

            // Y = Z E^+ A with Z = R X R^+, taken to the eigenbasis
            let mut z = x_in.clone();
            for (q, g) in gates.iter().enumerate() {
                apply_left(&mut z, g, q, n);
                apply_right(&mut z, &gate_adjoint(g), q, n);
            }
            let y = z.matmul(&e.adjoint()).matmul(obs);
            let v = &eig.vectors;
            let (y_re, y_im) = split_transform(v, &y, dim);
            let lambda = &eig.values;
            let mut w = vec![0.0; dim * dim];
            for i in 0..dim {
                for j in 0..dim {
                    let half = 0.5 * (lambda[i] - lambda[j]);
                    let sinc = if half.abs() < 1e-8 { 1.0 - half * half / 6.0 } else { half.sin() / half };
                    let gamma = Complex64::new(0.0, -sinc) * Complex64::from_polar(1.0, -0.5 * (lambda[i] + lambda[j]));
                    let yji = Complex64::new(y_re[j * dim + i], y_im[j * dim + i]);
                    w[i * dim + j] = 2.0 * (yji * gamma).re;
                }
            }
            // Q = V W V^T; d C / d theta_t = sum_r P_t[r, r^flip] Q[r, r^flip]
            let q_mat = real_matmul(&real_matmul(v, &w, dim), &transpose(v, dim), dim);
            for (t, term) in a.terms().iter().enumerate() {
                grad[offset + ne + t] = (0..dim)
                    .map(|r| term.entry(r) * q_mat[r * dim + (r ^ term.flip)])
                    .sum();
            }
        }
        Ok(grad)
    }
}

impl Objective for ProjectionObjective {
    fn num_params(&self) -> usize {
        self.ansatz.params_per_group()
    }

    fn cost(&self, x: &[f64]) -> Result<f64> {
        let u = self.ansatz.group_unitary_from_slice(x)?;
        Ok(self.junk.trace_product(&self.sigma.conjugate_by(&u)).re)
    }

    fn gradient(&self, x: &[f64], delta: f64) -> Result<Vec<f64>> {
        if !(delta > 0.0) {
            return Err(Error::Config(format!("finite-difference step {delta} must be positive")));
        }
        self.fast_gradient(x, delta)
    }

    fn exact_gradient(&self, x: &[f64]) -> Option<Result<Vec<f64>>> {
        Some(self.exact_gradient_impl(x))
    }
}

fn transpose(m: &[f64], dim: usize) -> Vec<f64> {
    let mut t = vec![0.0; dim * dim];
    for i in 0..dim {
        for j in 0..dim {
            t[j * dim + i] = m[i * dim + j];
        }
    }
    t
}

/// Derivative of [`zyz`] with respect to angle `k` (0, 1, 2 for a, b, c).
fn zyz_derivative(a: f64, b: f64, c: f64, k: usize) -> [Complex64; 4] {
    let (sb, cb) = (0.5 * b).sin_cos();
    let e = |x: f64| Complex64::from_polar(1.0, x);
    let i = Complex64::new(0.0, 0.5);
    let g = zyz(a, b, c);
    match k {
        0 => [-i * g[0], -i * g[1], i * g[2], i * g[3]],
        2 => [-i * g[0], i * g[1], -i * g[2], i * g[3]],
        _ => [
            e(-0.5 * (a + c)) * (-0.5 * sb),
            -e(-0.5 * (a - c)) * (0.5 * cb),
            e(0.5 * (a - c)) * (0.5 * cb),
            e(0.5 * (a + c)) * (-0.5 * sb),
        ],
    }
}

/// Split complex matrix into real and imaginary parts, each `V^T (.) V`.
fn split_transform(v: &[f64], m: &ComplexMatrix, dim: usize) -> (Vec<f64>, Vec<f64>) {
    let re: Vec<f64> = m.as_slice().iter().map(|z| z.re).collect();
    let im: Vec<f64> = m.as_slice().iter().map(|z| z.im).collect();
    (
        real_tmatmul(v, &real_matmul(&re, v, dim), dim),
        real_tmatmul(v, &real_matmul(&im, v, dim), dim),
    )
}

fn split_rotate(w: &[f64], m: &(Vec<f64>, Vec<f64>), dim: usize) -> (Vec<f64>, Vec<f64>) {
    (
        real_tmatmul(w, &real_matmul(&m.0, w, dim), dim),
        real_tmatmul(w, &real_matmul(&m.1, w, dim), dim),
    )
}

/// `Re sum_{jk} A_kj Z_jk e^{-i(l_j - l_k)}`
fn phase_trace(a: &(Vec<f64>, Vec<f64>), z: &(Vec<f64>, Vec<f64>), lambda: &[f64], dim: usize) -> f64 {
    let phases: Vec<Complex64> = lambda.iter().map(|&l| Complex64::from_polar(1.0, -l)).collect();
    let mut acc = 0.0;
    for k in 0..dim {
        for j in 0..dim {
            let akj = Complex64::new(a.0[k * dim + j], a.1[k * dim + j]);
            let zjk = Complex64::new(z.0[j * dim + k], z.1[j * dim + k]);
            acc += (akj * zjk * phases[j] * phases[k].conj()).re;
        }
    }
    acc
}

fn identity(dim: usize) -> Vec<f64> {
    let mut w = vec![0.0; dim * dim];
    for i in 0..dim {
        w[i * dim + i] = 1.0;
    }
    w
}

fn frob(m: &[f64]) -> f64 {
    m.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Purity cost of one ansatz group acting after a fixed prefix.
pub struct PurityObjective {
    ansatz: LayeredAnsatz,
    inputs: Vec<DensityMatrix>,
    terms: Vec<PurityTerm>,
}

impl PurityObjective {
    pub fn new(ansatz: &LayeredAnsatz, prefix: &ComplexMatrix, inputs: &[DensityMatrix], terms: &[PurityTerm]) -> Result<Self> {
        check_inputs(prefix, inputs)?;
        Ok(Self {
            ansatz: ansatz.clone(),
            inputs: inputs.iter().map(|r| r.evolve(prefix)).collect(),
            terms: terms.to_vec(),
        })
    }
}

impl Objective for PurityObjective {
    fn num_params(&self) -> usize {
        self.ansatz.params_per_group()
    }

    fn cost(&self, x: &[f64]) -> Result<f64> {
        let u = self.ansatz.group_unitary_from_slice(x)?;
        cost_purity(&u, &self.inputs, &self.terms)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Convergence {
    /// Iterations over which the best cost must improve.
    pub window: usize,
    pub min_improvement: f64,
}

impl Default for Convergence {
    fn default() -> Self {
        Self {
            window: 100,
            min_improvement: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StageConfig {
    pub cost: CostSpec,
    /// Latent projector this stage compresses into.
    pub latent: Projector,
    pub gamma: f64,
    /// Step size of odd-numbered restart attempts; `None` keeps `gamma`.
    pub alt_gamma: Option<f64>,
    pub max_iters: usize,
    pub convergence: Convergence,
    pub fd_step: f64,
    /// Use the analytic gradient where available instead of central differences.
    pub exact_gradient: bool,
    pub seed: u64,
    /// Extra attempts from fresh initial parameters.
    pub restarts: usize,
    /// Restart parameters are drawn from `U[-restart_spread, restart_spread]`.
    pub restart_spread: f64,
    /// A converged attempt at or below this cost skips further restarts.
    pub accept_cost: f64,
}

impl StageConfig {
    /// Junk-projection stage with default optimizer settings.
    pub fn projection(latent: Projector, inputs: Vec<DensityMatrix>, seed: u64) -> Self {
        let junk = latent.complement();
        Self::with_cost(CostSpec::projection(junk, inputs), latent, seed)
    }

    pub fn with_cost(cost: CostSpec, latent: Projector, seed: u64) -> Self {
        Self {
            cost,
            latent,
            gamma: 0.5,
            alt_gamma: Some(2.0),
            max_iters: 20_000,
            convergence: Convergence::default(),
            fd_step: 1e-5,
            exact_gradient: true,
            seed,
            restarts: 9,
            restart_spread: 0.5,
            accept_cost: 1e-3,
        }
    }

    pub fn gradient_method(&self) -> Gradient {
        if self.exact_gradient {
            Gradient::Exact { fallback_step: self.fd_step }
        } else {
            Gradient::CentralDifference { step: self.fd_step }
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0) || !(self.fd_step > 0.0) || self.alt_gamma.is_some_and(|g| !(g > 0.0)) {
            return Err(Error::Config("step size and finite-difference step must be positive".into()));
        }
        if self.convergence.window == 0 {
            return Err(Error::Config("convergence window must be at least one iteration".into()));
        }
        let space = self.cost.space()?;
        if space != self.latent.space() {
            return Err(Error::DimensionMismatch("latent projector on another space".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainRecord {
    /// Cost before the first step followed by the cost after every step.
    pub costs: Vec<f64>,
    pub theta: ParamVector,
    pub final_cost: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Attempt (0 = supplied start) whose result was kept.
    pub attempt: usize,
}

impl TrainRecord {
    pub fn curve_csv(&self) -> String {
        let mut s = String::from("iteration,cost\n");
        for (i, c) in self.costs.iter().enumerate() {
            let _ = writeln!(s, "{i},{c:.12e}");
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Descent {
    pub x: Vec<f64>,
    pub costs: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Plain gradient descent `x <- x - gamma grad C(x)`.
///
/// Stops after `max_iters` steps, or once the best cost seen has improved by
/// less than `min_improvement` over the last `window` steps.
pub fn gradient_descent(
    objective: &dyn Objective,
    x0: Vec<f64>,
    gamma: f64,
    max_iters: usize,
    convergence: Convergence,
    gradient: Gradient,
) -> Result<Descent> {
    let mut x = x0;
    let mut cost = objective.cost(&x)?;
    if !cost.is_finite() {
        return Err(Error::NonFiniteCost { iteration: 0 });
    }
    let mut costs = vec![cost];
    let mut best = vec![cost];
    let mut converged = cost <= 0.0;
    let mut iterations = 0;
    while !converged && iterations < max_iters {
        let g = gradient.evaluate(objective, &x)?;
        if g.iter().all(|v| *v == 0.0) {
            converged = true;
            break;
        }
        for (xi, gi) in x.iter_mut().zip(&g) {
            *xi -= gamma * gi;
        }
        iterations += 1;
        cost = objective.cost(&x)?;
        if !cost.is_finite() {
            return Err(Error::NonFiniteCost { iteration: iterations });
        }
        costs.push(cost);
        let b = best[iterations - 1].min(cost);
        best.push(b);
        if iterations >= convergence.window
            && best[iterations - convergence.window] - b < convergence.min_improvement
        {
            converged = true;
        }
    }
    Ok(Descent {
        x,
        costs,
        iterations,
        converged,
    })
}

fn objective_for(
    ansatz: &LayeredAnsatz,
    prefix: &ComplexMatrix,
    cost: &CostSpec,
) -> Result<Box<dyn Objective>> {
    Ok(match &cost.kind {
        CostKind::JunkProjection(mj) => Box::new(ProjectionObjective::new(ansatz, prefix, &cost.inputs, mj)?),
        CostKind::Purity(terms) => Box::new(PurityObjective::new(ansatz, prefix, &cost.inputs, terms)?),
    })
}

/// Train group `group` of `theta0` with the earlier groups frozen.
///
/// Attempt 0 starts from `theta0`; further attempts (up to `stage.restarts`)
/// draw the group's parameters uniformly from `[-0.1, 0.1]` and run only while
/// the best final cost is above `stage.accept_cost`.
pub fn train_stage(
    ansatz: &LayeredAnsatz,
    group: usize,
    stage: &StageConfig,
    theta0: &ParamVector,
) -> Result<TrainRecord> {
    ansatz.check(theta0)?;
    stage.validate()?;
    if group >= ansatz.groups() {
        return Err(Error::BadIndex(format!("group {group} of {}", ansatz.groups())));
    }
    let prefix = ansatz.layered_unitary(theta0, group)?;
    let objective = objective_for(ansatz, &prefix, &stage.cost)?;
    let range = ansatz.group_range(group);
    let (d, attempt) = descend_with_restarts(
        objective.as_ref(),
        theta0.values[range.clone()].to_vec(),
        stage,
        group as u64,
    )?;
    let mut theta = theta0.clone();
    theta.values[range].copy_from_slice(&d.x);
    Ok(TrainRecord {
        final_cost: *d.costs.last().expect("at least the initial cost"),
        costs: d.costs,
        theta,
        iterations: d.iterations,
        converged: d.converged,
        attempt,
    })
}

/// Restart policy shared by every trainer. Attempt `k > 0` draws its start
/// uniformly from `[-restart_spread, restart_spread]` with
/// `seed::rng(stage.seed, [stream, k])`; odd attempts use `alt_gamma`.
/// Stops at the first converged attempt at or below `accept_cost`.
fn descend_with_restarts(
    objective: &dyn Objective,
    start: Vec<f64>,
    stage: &StageConfig,
    stream: u64,
) -> Result<(Descent, usize)> {
    let mut best: Option<(Descent, usize)> = None;
    for attempt in 0..=stage.restarts {
        let x0: Vec<f64> = if attempt == 0 {
            start.clone()
        } else {
            let mut rng = seed::rng(stage.seed, &[stream, attempt as u64]);
            let w = stage.restart_spread;
            (0..start.len()).map(|_| rng.random_range(-w..=w)).collect()
        };
        let d = gradient_descent(
            objective,
            x0,
            if attempt % 2 == 1 { stage.alt_gamma.unwrap_or(stage.gamma) } else { stage.gamma },
            stage.max_iters,
            stage.convergence,
            stage.gradient_method(),
        )?;
        let cost = *d.costs.last().expect("at least the initial cost");
        let done = d.converged && cost <= stage.accept_cost;
        if done || best.as_ref().is_none_or(|(b, _)| improves(&d, b)) {
            best = Some((d, attempt));
        }
        if done {
            break;
        }
    }
    Ok(best.expect("at least one attempt"))
}

/// Lower cost wins, but a converged attempt beats an unconverged one that is
/// less than 1% lower.
fn improves(a: &Descent, b: &Descent) -> bool {
    let ca = *a.costs.last().expect("non-empty");
    let cb = *b.costs.last().expect("non-empty");
    let near = |x: f64, y: f64| x <= 1.01 * y + 1e-9;
    match (a.converged, b.converged) {
        (true, false) => near(ca, cb),
        (false, true) => !near(cb, ca),
        _ => ca < cb,
    }
}

/// Result of training a [`QuditGeneratorAnsatz`].
#[derive(Debug, Clone, PartialEq)]
pub struct QuditTrainResult {
    pub angles: Vec<f64>,
    pub costs: Vec<f64>,
    pub final_cost: f64,
    pub iterations: usize,
    pub converged: bool,
    pub attempt: usize,
    pub pipeline: EncoderPipeline,
}

struct QuditObjective<'a> {
    ansatz: &'a QuditGeneratorAnsatz,
    cost: &'a CostSpec,
}

impl Objective for QuditObjective<'_> {
    fn num_params(&self) -> usize {
        self.ansatz.num_params()
    }

    fn cost(&self, x: &[f64]) -> Result<f64> {
        self.cost.evaluate(&self.ansatz.unitary(x)?)
    }
}

/// Train all angles of a qudit generator ansatz against `stage.cost`
/// (central-difference gradient).
pub fn train_qudit(ansatz: &QuditGeneratorAnsatz, stage: &StageConfig, angles0: &[f64]) -> Result<QuditTrainResult> {
    stage.validate()?;
    if ansatz.reading() != GeneratorReading::HermitianPair {
        return Err(Error::Config("only the Hermitian-pair reading gives unitary encoders".into()));
    }
    if angles0.len() != ansatz.num_params() {
        return Err(Error::LayoutMismatch {
            expected: ansatz.num_params(),
            got: angles0.len(),
        });
    }
    let objective = QuditObjective {
        ansatz,
        cost: &stage.cost,
    };
    let (d, attempt) = descend_with_restarts(&objective, angles0.to_vec(), stage, 0)?;
    let pipeline = EncoderPipeline::new(ansatz.unitary(&d.x)?, stage.latent.clone())?;
    Ok(QuditTrainResult {
        final_cost: *d.costs.last().expect("at least the initial cost"),
        angles: d.x,
        costs: d.costs,
        iterations: d.iterations,
        converged: d.converged,
        attempt,
        pipeline,
    })
}

#[derive(Debug, Clone)]
pub struct MultiStageResult {
    pub pipeline: EncoderPipeline,
    pub records: Vec<TrainRecord>,
    pub theta: ParamVector,
}

/// Train group `g` in stage `g`, each on top of the already-trained groups.
/// The returned pipeline uses the product of all trained groups and the last
/// stage's latent projector.
pub fn train_multistage(
    ansatz: &LayeredAnsatz,
    stages: &[StageConfig],
    theta0: &ParamVector,
) -> Result<MultiStageResult> {
    if stages.is_empty() || stages.len() > ansatz.groups() {
        return Err(Error::Config(format!(
            "{} stages for an ansatz with {} groups",
            stages.len(),
            ansatz.groups()
        )));
    }
    for pair in stages.windows(2) {
        if pair[1].latent.rank() >= pair[0].latent.rank() {
            return Err(Error::Config(
                "each stage must target a strictly smaller latent subspace".into(),
            ));
        }
    }
    let mut theta = theta0.clone();
    let mut records = Vec::with_capacity(stages.len());
    for (g, stage) in stages.iter().enumerate() {
        let record = train_stage(ansatz, g, stage, &theta)?;
        theta = record.theta.clone();
        records.push(record);
    }
    let u = ansatz.layered_unitary(&theta, stages.len())?;
    let latent = stages.last().expect("non-empty").latent.clone();
    let pipeline = EncoderPipeline::new(u, latent)?;
    Ok(MultiStageResult {
        pipeline,
        records,
        theta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoder::latent_projector;
    use crate::noise::{apply_noise, NoiseModel};
    use crate::numkit::ONE;
    use crate::qstate::PureState;

    fn w_training_set(n: usize) -> Vec<DensityMatrix> {
        (0..n)
            .map(|k| PureState::basis(HilbertSpace::qubits(n), 1 << (n - 1 - k)).unwrap().density())
            .collect()
    }

    #[test]
    fn projection_cost_examples() {
        let space = HilbertSpace::qubits(2);
        let (_, mj) = latent_projector(&space, 1).unwrap();
        let latent_state = PureState::basis(space.clone(), 1).unwrap().density();
        let id = ComplexMatrix::identity(4);
        assert_eq!(cost_projection(&id, &[latent_state], &mj).unwrap(), 0.0);
        let mixed = DensityMatrix::maximally_mixed(space);
        assert!((cost_projection(&id, &[mixed], &mj).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn purity_cost_examples() {
        let space = HilbertSpace::qubits(2);
        let id = ComplexMatrix::identity(4);
        let first = vec![PurityTerm { keep: vec![0], weight: 1.0 }];
        let zero_first = PureState::basis(space.clone(), 1).unwrap().density();
        assert!(cost_purity(&id, &[zero_first], &first).unwrap() < 1e-15);
        let bell = PureState::normalized(
            space,
            vec![ONE, Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), ONE],
        )
        .unwrap()
        .density();
        assert!((cost_purity(&id, &[bell], &first).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn cost_is_order_invariant() {
        let a = LayeredAnsatz::new(3, 1, 1).unwrap();
        let u = a.layered_unitary(&a.init_params(1), 1).unwrap();
        let (_, mj) = latent_projector(&HilbertSpace::qubits(3), 1).unwrap();
        let mut inputs = w_training_set(3);
        let c1 = cost_projection(&u, &inputs, &mj).unwrap();
        inputs.reverse();
        let c2 = cost_projection(&u, &inputs, &mj).unwrap();
        assert!((c1 - c2).abs() < 1e-15);
    }

    #[test]
    fn finite_differences_on_simple_functions() {
        let g = finite_diff_grad(|_| Ok(3.0), &[1.0, 2.0], 1e-5).unwrap();
        assert_eq!(g, vec![0.0, 0.0]);
        let g = finite_diff_grad(|x| Ok(x[0] * x[0]), &[1.0], 1e-5).unwrap();
        assert!((g[0] - 2.0).abs() < 1e-8);
        assert!(finite_diff_grad(|_| Ok(0.0), &[1.0], 0.0).is_err());
    }

    #[test]
    fn fast_gradient_matches_generic_central_differences() {
        for (n, layers) in [(2, 1), (3, 2), (4, 1)] {
            let a = LayeredAnsatz::new(n, layers, 2).unwrap();
            let theta = a.init_params(n as u64);
            let space = HilbertSpace::qubits(n);
            let (_, mj) = latent_projector(&space, 1).unwrap();
            let inputs: Vec<DensityMatrix> = w_training_set(n)
                .iter()
                .map(|r| apply_noise(r, &NoiseModel::LocalDepolarizing, 0.1).unwrap())
                .collect();
            let prefix = a.layered_unitary(&theta, 1).unwrap();
            let obj = ProjectionObjective::new(&a, &prefix, &inputs, &mj).unwrap();
            let x = &theta.values[a.group_range(1)];
            let fast = obj.gradient(x, 1e-5).unwrap();
            let generic = finite_diff_grad(|y| obj.cost(y), x, 1e-5).unwrap();
            let reference = finite_diff_grad(
                |y| {
                    let mut full = theta.clone();
                    full.values[a.group_range(1)].copy_from_slice(y);
                    let u = a.layered_unitary(&full, 2).unwrap();
                    cost_projection(&u, &inputs, &mj)
                },
                x,
                1e-5,
            )
            .unwrap();
            for ((f, g), r) in fast.iter().zip(&generic).zip(&reference) {
                assert!((f - g).abs() < 1e-9, "n={n}: fast {f} vs generic {g}");
                assert!((g - r).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn exact_gradient_matches_central_differences() {
        for (n, layers, seed) in [(2, 1, 1), (3, 2, 2), (4, 1, 3), (4, 2, 4)] {
            let a = LayeredAnsatz::new(n, layers, 1).unwrap();
            // larger angles than the initializer so degenerate spectra are not special
            let theta = crate::ansatz::perturb_params(&a.init_params(seed), 0.8, seed).unwrap();
            let space = HilbertSpace::qubits(n);
            let (_, mj) = latent_projector(&space, 1).unwrap();
            let inputs: Vec<DensityMatrix> = w_training_set(n)
                .iter()
                .map(|r| apply_noise(r, &NoiseModel::GlobalDepolarizing, 0.05).unwrap())
                .collect();
            let obj = ProjectionObjective::new(&a, &ComplexMatrix::identity(1 << n), &inputs, &mj).unwrap();
            let exact = obj.exact_gradient(&theta.values).unwrap().unwrap();
            let fd = finite_diff_grad(|y| obj.cost(y), &theta.values, 1e-5).unwrap();
            for (k, (e, f)) in exact.iter().zip(&fd).enumerate() {
                assert!((e - f).abs() < 1e-8, "n={n} index {k}: exact {e} vs fd {f}");
            }
        }
        // at the identity the Hamiltonian spectrum is fully degenerate
        let a = LayeredAnsatz::new(3, 1, 1).unwrap();
        let (_, mj) = latent_projector(&HilbertSpace::qubits(3), 1).unwrap();
        let inputs = w_training_set(3);
        let obj = ProjectionObjective::new(&a, &ComplexMatrix::identity(8), &inputs, &mj).unwrap();
        let x = a.zeros().values;
        let exact = obj.exact_gradient(&x).unwrap().unwrap();
        let fd = finite_diff_grad(|y| obj.cost(y), &x, 1e-5).unwrap();
        for (e, f) in exact.iter().zip(&fd) {
            assert!((e - f).abs() < 1e-8);
        }
    }

    #[test]
    fn gradient_is_stable_under_step_refinement() {
        let a = LayeredAnsatz::new(2, 1, 1).unwrap();
        let theta = a.init_params(5);
        let space = HilbertSpace::qubits(2);
        let (_, mj) = latent_projector(&space, 1).unwrap();
        let inputs = w_training_set(2);
        let obj = ProjectionObjective::new(&a, &ComplexMatrix::identity(4), &inputs, &mj).unwrap();
        let coarse = obj.gradient(&theta.values, 1e-5).unwrap();
        let fine = obj.gradient(&theta.values, 1e-6).unwrap();
        for (c, f) in coarse.iter().zip(&fine) {
            assert!((c - f).abs() <= 1e-4 * c.abs().max(1e-3), "{c} vs {f}");
        }
    }

    #[test]
    fn optimal_start_converges_immediately() {
        let a = LayeredAnsatz::new(2, 1, 1).unwrap();
        let space = HilbertSpace::qubits(2);
        let (ml, _) = latent_projector(&space, 1).unwrap();
        let inputs = vec![PureState::basis(space, 1).unwrap().density()];
        let stage = StageConfig::projection(ml, inputs, 0);
        let r = train_stage(&a, 0, &stage, &a.zeros()).unwrap();
        assert_eq!(r.iterations, 0);
        assert!(r.converged);
        assert_eq!(r.final_cost, 0.0);
    }

    #[test]
    fn two_qubit_training_reaches_zero() {
        let a = LayeredAnsatz::new(2, 1, 1).unwrap();
        let space = HilbertSpace::qubits(2);
        let (ml, _) = latent_projector(&space, 1).unwrap();
        let mut stage = StageConfig::projection(ml, w_training_set(2), 3);
        stage.gamma = 0.2;
        stage.max_iters = 3000;
        let r = train_stage(&a, 0, &stage, &a.init_params(3)).unwrap();
        assert!(r.final_cost < 1e-4, "final cost {}", r.final_cost);
        assert_eq!(r.costs.len(), r.iterations + 1);
        assert!(r.curve_csv().starts_with("iteration,cost\n0,"));
    }

    #[test]
    fn multistage_rejects_non_shrinking_targets() {
        let a = LayeredAnsatz::new(2, 1, 2).unwrap();
        let space = HilbertSpace::qubits(2);
        let (ml, _) = latent_projector(&space, 1).unwrap();
        let s = StageConfig::projection(ml, w_training_set(2), 0);
        assert!(train_multistage(&a, &[s.clone(), s], &a.zeros()).is_err());
    }

    #[test]
    fn identity_target_single_stage() {
        let a = LayeredAnsatz::new(2, 1, 1).unwrap();
        let space = HilbertSpace::qubits(2);
        let stage = StageConfig::projection(Projector::identity(space), w_training_set(2), 0);
        let theta0 = a.init_params(2);
        let r = train_multistage(&a, &[stage], &theta0).unwrap();
        assert_eq!(r.theta, theta0);
        let u = a.layered_unitary(&theta0, 1).unwrap();
        assert!(r.pipeline.encode_unitary().distance(&u) < 1e-15);
    }
}
