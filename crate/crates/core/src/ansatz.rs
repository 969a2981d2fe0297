//! Parametrized circuits.
//!
//! # Layered qubit ansatz
//!
//! Each layer is `exp(-i H) * (R_0 (x) R_1 (x) ... (x) R_{n-1})` with
//! `R = Rz(a) Ry(b) Rz(c)`, `Rz(a) = diag(e^{-ia/2}, e^{ia/2})` and
//!
//! ```text
//! H = sum_i (hx_i X_i + hz_i Z_i) + sum_{i<j} (Jx_ij X_i X_j + Jy_ij Y_i Y_j + Jz_ij Z_i Z_j)
//! ```
//!
//! Flat parameter order inside one layer:
//!
//! | slots                  | meaning                                   |
//! |------------------------|-------------------------------------------|
//! | `3q .. 3q+3`           | Euler angles `(a, b, c)` of qubit `q`     |
//! | `3n + 2q .. 3n + 2q+2` | fields `(hx, hz)` of qubit `q`            |
//! | `5n + 3p .. 5n + 3p+3` | couplings `(Jx, Jy, Jz)` of pair `p`      |
//!
//! Pairs `(i, j)`, `i < j`, are numbered lexicographically. Layers are
//! stored group-major: group 0 layer 0, group 0 layer 1, ..., group 1 layer 0.
//! Within a group, layer 0 acts first.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkit::{symmetric_eig, ComplexMatrix, SymmetricEigen};
use crate::tolerance::Tolerances;

/// A real Pauli string as a signed permutation: row `r` has its only nonzero
/// entry in column `r ^ flip`, with value `sign * (-1)^{popcount(r & parity)}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RealPauli {
    pub flip: usize,
    pub parity: usize,
    pub sign: f64,
}

impl RealPauli {
    #[inline]
    pub fn entry(&self, row: usize) -> f64 {
        if (row & self.parity).count_ones() % 2 == 0 {
            self.sign
        } else {
            -self.sign
        }
    }

    pub fn add_to(&self, h: &mut [f64], dim: usize, coeff: f64) {
        for r in 0..dim {
            h[r * dim + (r ^ self.flip)] += coeff * self.entry(r);
        }
    }

    pub fn dense(&self, dim: usize) -> Vec<f64> {
        let mut m = vec![0.0; dim * dim];
        self.add_to(&mut m, dim, 1.0);
        m
    }
}

fn qubit_mask(n: usize, q: usize) -> usize {
    1 << (n - 1 - q)
}

/// Hamiltonian terms in parameter order.
fn hamiltonian_terms(n: usize) -> Vec<RealPauli> {
    let mut terms = Vec::new();
    for q in 0..n {
        let m = qubit_mask(n, q);
        terms.push(RealPauli { flip: m, parity: 0, sign: 1.0 });
        terms.push(RealPauli { flip: 0, parity: m, sign: 1.0 });
    }
    for i in 0..n {
        for j in i + 1..n {
            let m = qubit_mask(n, i) | qubit_mask(n, j);
            terms.push(RealPauli { flip: m, parity: 0, sign: 1.0 });
            // Y (x) Y = -(-1)^{b_i + b_j} on the flipped pair
            terms.push(RealPauli { flip: m, parity: m, sign: -1.0 });
            terms.push(RealPauli { flip: 0, parity: m, sign: 1.0 });
        }
    }
    terms
}

/// What a flat parameter index controls.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamRole {
    Euler { qubit: usize, angle: usize },
    Field { qubit: usize, axis: char },
    Coupling { i: usize, j: usize, axis: char },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParamSlot {
    pub group: usize,
    pub layer: usize,
    pub role: ParamRole,
}

#[derive(Debug, Clone)]
pub struct LayeredAnsatz {
    n: usize,
    layers: usize,
    groups: usize,
    terms: Vec<RealPauli>,
}

impl PartialEq for LayeredAnsatz {
    fn eq(&self, other: &Self) -> bool {
        (self.n, self.layers, self.groups) == (other.n, other.layers, other.groups)
    }
}

impl LayeredAnsatz {
    pub fn new(n: usize, layers: usize, groups: usize) -> Result<Self> {
        if n == 0 || n > 6 || layers == 0 || groups == 0 {
            return Err(Error::Config(format!(
                "ansatz needs 1..=6 qubits and at least one layer and group (got n={n}, layers={layers}, groups={groups})"
            )));
        }
        Ok(Self {
            n,
            layers,
            groups,
            terms: hamiltonian_terms(n),
        })
    }

    pub fn qubits(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        1 << self.n
    }

    pub fn layers(&self) -> usize {
        self.layers
    }

    pub fn groups(&self) -> usize {
        self.groups
    }

    pub fn params_per_layer(&self) -> usize {
        let n = self.n;
        3 * n + 2 * n + 3 * n * (n - 1) / 2
    }

    pub fn params_per_group(&self) -> usize {
        self.layers * self.params_per_layer()
    }

    pub fn num_params(&self) -> usize {
        self.groups * self.params_per_group()
    }

    pub fn euler_count(&self) -> usize {
        3 * self.n
    }

    pub fn terms(&self) -> &[RealPauli] {
        &self.terms
    }

    pub fn group_range(&self, group: usize) -> std::ops::Range<usize> {
        let p = self.params_per_group();
        group * p..(group + 1) * p
    }

    pub fn fingerprint(&self) -> String {
        format!(
            "layered-v1:n={}:layers={}:groups={}:zyz+hxz+jxyz",
            self.n, self.layers, self.groups
        )
    }

    pub fn slot(&self, index: usize) -> Option<ParamSlot> {
        if index >= self.num_params() {
            return None;
        }
        let per_layer = self.params_per_layer();
        let layer_global = index / per_layer;
        let k = index % per_layer;
        let n = self.n;
        let role = if k < 3 * n {
            ParamRole::Euler { qubit: k / 3, angle: k % 3 }
        } else if k < 5 * n {
            let r = k - 3 * n;
            ParamRole::Field { qubit: r / 2, axis: ['x', 'z'][r % 2] }
        } else {
            let r = k - 5 * n;
            let (mut p, axis) = (r / 3, ['x', 'y', 'z'][r % 3]);
            let mut found = (0, 0);
            'outer: for i in 0..n {
                for j in i + 1..n {
                    if p == 0 {
                        found = (i, j);
                        break 'outer;
                    }
                    p -= 1;
                }
            }
            ParamRole::Coupling { i: found.0, j: found.1, axis }
        };
        Some(ParamSlot {
            group: layer_global / self.layers,
            layer: layer_global % self.layers,
            role,
        })
    }

    /// Real symmetric `H` from the field and coupling coefficients of one layer.
    pub fn hamiltonian(&self, coeffs: &[f64]) -> Vec<f64> {
        let dim = self.dim();
        let mut h = vec![0.0; dim * dim];
        for (term, &c) in self.terms.iter().zip(coeffs) {
            if c != 0.0 {
                term.add_to(&mut h, dim, c);
            }
        }
        h
    }

    /// Single-qubit rotations of one layer.
    pub fn rotations(&self, euler: &[f64]) -> Vec<[Complex64; 4]> {
        euler.chunks(3).map(|a| zyz(a[0], a[1], a[2])).collect()
    }

    /// `(x)_q R_q` as a dense matrix.
    pub fn rotation_layer(&self, euler: &[f64]) -> ComplexMatrix {
        let mut m = ComplexMatrix::identity(self.dim());
        for (q, r) in self.rotations(euler).iter().enumerate() {
            apply_left(&mut m, r, q, self.n);
        }
        m
    }

    pub fn layer_eigen(&self, layer_params: &[f64]) -> Result<SymmetricEigen> {
        let h = self.hamiltonian(&layer_params[self.euler_count()..]);
        symmetric_eig(&h, self.dim(), &Tolerances::DEFAULT)
    }

    /// `exp(-iH) R` for one layer.
    pub fn layer_unitary(&self, layer_params: &[f64]) -> Result<ComplexMatrix> {
        if layer_params.len() != self.params_per_layer() {
            return Err(Error::LayoutMismatch {
                expected: self.params_per_layer(),
                got: layer_params.len(),
            });
        }
        let e = self.layer_eigen(layer_params)?.exp_i(1.0);
        let mut u = e;
        for (q, r) in self.rotations(&layer_params[..self.euler_count()]).iter().enumerate() {
            apply_right(&mut u, r, q, self.n);
        }
        Ok(u)
    }

    /// Unitary of one group from that group's slice of parameters.
    pub fn group_unitary_from_slice(&self, group_params: &[f64]) -> Result<ComplexMatrix> {
        if group_params.len() != self.params_per_group() {
            return Err(Error::LayoutMismatch {
                expected: self.params_per_group(),
                got: group_params.len(),
            });
        }
        let mut u = ComplexMatrix::identity(self.dim());
        for layer in group_params.chunks(self.params_per_layer()) {
            u = self.layer_unitary(layer)?.matmul(&u);
        }
        Ok(u)
    }

    pub fn group_unitary(&self, theta: &ParamVector, group: usize) -> Result<ComplexMatrix> {
        self.check(theta)?;
        if group >= self.groups {
            return Err(Error::BadIndex(format!("group {group} of {}", self.groups)));
        }
        self.group_unitary_from_slice(&theta.values[self.group_range(group)])
    }

    /// Product of the first `groups_active` groups, group 0 acting first.
    pub fn layered_unitary(&self, theta: &ParamVector, groups_active: usize) -> Result<ComplexMatrix> {
        self.check(theta)?;
        if groups_active > self.groups {
            return Err(Error::BadIndex(format!(
                "{groups_active} active groups of {}",
                self.groups
            )));
        }
        let mut u = ComplexMatrix::identity(self.dim());
        for g in 0..groups_active {
            u = self.group_unitary(theta, g)?.matmul(&u);
        }
        Ok(u)
    }

    pub fn check(&self, theta: &ParamVector) -> Result<()> {
        if theta.values.len() != self.num_params() {
            return Err(Error::LayoutMismatch {
                expected: self.num_params(),
                got: theta.values.len(),
            });
        }
        if theta.fingerprint != self.fingerprint() {
            return Err(Error::Config(format!(
                "parameters were saved for `{}`, not `{}`",
                theta.fingerprint,
                self.fingerprint()
            )));
        }
        Ok(())
    }

    pub fn zeros(&self) -> ParamVector {
        ParamVector {
            values: vec![0.0; self.num_params()],
            fingerprint: self.fingerprint(),
        }
    }

    /// Uniform draw in `[-0.1, 0.1]` per index.
    pub fn init_params(&self, seed: u64) -> ParamVector {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        ParamVector {
            values: (0..self.num_params()).map(|_| rng.random_range(-0.1..=0.1)).collect(),
            fingerprint: self.fingerprint(),
        }
    }

    pub fn params(&self, values: Vec<f64>) -> Result<ParamVector> {
        let p = ParamVector {
            values,
            fingerprint: self.fingerprint(),
        };
        self.check(&p)?;
        Ok(p)
    }
}

/// `Rz(a) Ry(b) Rz(c)` as row-major 2x2.
pub fn zyz(a: f64, b: f64, c: f64) -> [Complex64; 4] {
    let (sb, cb) = (0.5 * b).sin_cos();
    let e = |x: f64| Complex64::from_polar(1.0, x);
    [
        e(-0.5 * (a + c)) * cb,
        -e(-0.5 * (a - c)) * sb,
        e(0.5 * (a - c)) * sb,
        e(0.5 * (a + c)) * cb,
    ]
}

/// `m <- G_q m` for a single-qubit gate on qubit `q` of `n`.
pub fn apply_left(m: &mut ComplexMatrix, g: &[Complex64; 4], q: usize, n: usize) {
    let dim = m.rows();
    let cols = m.cols();
    let mask = qubit_mask(n, q);
    let data = m.as_mut_slice();
    for r0 in (0..dim).filter(|r| r & mask == 0) {
        let r1 = r0 | mask;
        for c in 0..cols {
            let x0 = data[r0 * cols + c];
            let x1 = data[r1 * cols + c];
            data[r0 * cols + c] = g[0] * x0 + g[1] * x1;
            data[r1 * cols + c] = g[2] * x0 + g[3] * x1;
        }
    }
}

/// `m <- m G_q`
pub fn apply_right(m: &mut ComplexMatrix, g: &[Complex64; 4], q: usize, n: usize) {
    let rows = m.rows();
    let dim = m.cols();
    let mask = qubit_mask(n, q);
    let data = m.as_mut_slice();
    for r in 0..rows {
        let row = &mut data[r * dim..(r + 1) * dim];
        for c0 in (0..dim).filter(|c| c & mask == 0) {
            let c1 = c0 | mask;
            let x0 = row[c0];
            let x1 = row[c1];
            row[c0] = x0 * g[0] + x1 * g[2];
            row[c1] = x0 * g[1] + x1 * g[3];
        }
    }
}

/// `G^dagger` of a 2x2 gate.
pub fn gate_adjoint(g: &[Complex64; 4]) -> [Complex64; 4] {
    [g[0].conj(), g[2].conj(), g[1].conj(), g[3].conj()]
}

/// `A B` of 2x2 gates.
pub fn gate_mul(a: &[Complex64; 4], b: &[Complex64; 4]) -> [Complex64; 4] {
    [
        a[0] * b[0] + a[1] * b[2],
        a[0] * b[1] + a[1] * b[3],
        a[2] * b[0] + a[3] * b[2],
        a[2] * b[1] + a[3] * b[3],
    ]
}

/// Flat parameter values tagged with the layout they belong to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamVector {
    pub values: Vec<f64>,
    pub fingerprint: String,
}

impl ParamVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("parameter vectors serialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }
}

/// `theta_i + N(0, eps^2)` per index.
pub fn perturb_params(theta: &ParamVector, epsilon: f64, seed: u64) -> Result<ParamVector> {
    if !(epsilon >= 0.0) || !epsilon.is_finite() {
        return Err(Error::Config(format!("circuit noise {epsilon} must be >= 0")));
    }
    if epsilon == 0.0 {
        return Ok(theta.clone());
    }
    let normal = Normal::new(0.0, epsilon).map_err(|e| Error::Config(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(ParamVector {
        values: theta.values.iter().map(|v| v + normal.sample(&mut rng)).collect(),
        fingerprint: theta.fingerprint.clone(),
    })
}

/// How a generator `|i><j|` is turned into a unitary factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorReading {
    /// `exp(i a |i><j|)` exactly as written; `I + i a |i><j|` for `i != j`, not unitary.
    Literal,
    /// `exp(i (c |i><j| + c* |j><i|))` with `c = a` for `i < j` and `c = i a` for `i > j`.
    HermitianPair,
}

/// Product of one-generator exponentials on a single qudit, applied in the
/// order the pairs are listed (the first pair acts first).
#[derive(Debug, Clone, PartialEq)]
pub struct QuditGeneratorAnsatz {
    d: usize,
    pairs: Vec<(usize, usize)>,
    reading: GeneratorReading,
}

impl QuditGeneratorAnsatz {
    pub fn new(d: usize, pairs: Vec<(usize, usize)>, reading: GeneratorReading) -> Result<Self> {
        if let Some(&(i, j)) = pairs.iter().find(|&&(i, j)| i >= d || j >= d) {
            return Err(Error::BadIndex(format!("generator ({i}, {j}) in dimension {d}")));
        }
        Ok(Self { d, pairs, reading })
    }

    /// Every `(i, j)` over the listed levels, lexicographic.
    pub fn over_levels(d: usize, levels: &[usize], reading: GeneratorReading) -> Result<Self> {
        let pairs = levels
            .iter()
            .flat_map(|&i| levels.iter().map(move |&j| (i, j)))
            .collect();
        Self::new(d, pairs, reading)
    }

    pub fn full(d: usize, reading: GeneratorReading) -> Result<Self> {
        let levels: Vec<usize> = (0..d).collect();
        Self::over_levels(d, &levels, reading)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn reading(&self) -> GeneratorReading {
        self.reading
    }

    pub fn num_params(&self) -> usize {
        self.pairs.len()
    }

    pub fn unitary(&self, angles: &[f64]) -> Result<ComplexMatrix> {
        if angles.len() != self.pairs.len() {
            return Err(Error::LayoutMismatch {
                expected: self.pairs.len(),
                got: angles.len(),
            });
        }
        let d = self.d;
        let mut u = ComplexMatrix::identity(d);
        for (&(i, j), &a) in self.pairs.iter().zip(angles) {
            let f = self.factor(i, j, a);
            u = f.matmul(&u);
        }
        Ok(u)
    }

    fn factor(&self, i: usize, j: usize, a: f64) -> ComplexMatrix {
        let d = self.d;
        let mut f = ComplexMatrix::identity(d);
        if i == j {
            f.set(i, i, Complex64::from_polar(1.0, a));
            return f;
        }
        match self.reading {
            GeneratorReading::Literal => f.set(i, j, Complex64::new(0.0, a)),
            GeneratorReading::HermitianPair => {
                let (s, c) = a.sin_cos();
                f.set(i, i, Complex64::new(c, 0.0));
                f.set(j, j, Complex64::new(c, 0.0));
                if i < j {
                    // exp(i a sigma_x) on the (i, j) block
                    f.set(i, j, Complex64::new(0.0, s));
                    f.set(j, i, Complex64::new(0.0, s));
                } else {
                    // exp(-i a sigma_y) on the (j, i) block
                    f.set(i, j, Complex64::new(-s, 0.0));
                    f.set(j, i, Complex64::new(s, 0.0));
                }
            }
        }
        f
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::{c64, unitary_from_hermitian, ONE, ZERO};
    use crate::qstate::{HilbertSpace, PureState};

    fn pauli(k: usize) -> ComplexMatrix {
        let v = match k {
            0 => [ZERO, ONE, ONE, ZERO],
            1 => [ZERO, c64(0.0, -1.0), c64(0.0, 1.0), ZERO],
            _ => [ONE, ZERO, ZERO, c64(-1.0, 0.0)],
        };
        ComplexMatrix::new(2, 2, v.to_vec()).unwrap()
    }

    fn embed(ops: &[(usize, ComplexMatrix)], n: usize) -> ComplexMatrix {
        let id = ComplexMatrix::identity(2);
        let parts: Vec<&ComplexMatrix> = (0..n)
            .map(|q| ops.iter().find(|(k, _)| *k == q).map(|(_, m)| m).unwrap_or(&id))
            .collect();
        ComplexMatrix::kron_all(parts).unwrap()
    }

    /// Hamiltonian from explicit Kronecker products.
    fn reference_hamiltonian(n: usize, coeffs: &[f64]) -> ComplexMatrix {
        let mut terms = Vec::new();
        for q in 0..n {
            terms.push(embed(&[(q, pauli(0))], n));
            terms.push(embed(&[(q, pauli(2))], n));
        }
        for i in 0..n {
            for j in i + 1..n {
                for k in 0..3 {
                    terms.push(embed(&[(i, pauli(k)), (j, pauli(k))], n));
                }
            }
        }
        let dim = 1 << n;
        let mut h = ComplexMatrix::zeros(dim, dim);
        for (t, &c) in terms.iter().zip(coeffs) {
            h.add_scaled(t, c64(c, 0.0));
        }
        h
    }

    #[test]
    fn parameter_counts() {
        let a = LayeredAnsatz::new(4, 1, 2).unwrap();
        assert_eq!(a.params_per_layer(), 38);
        assert_eq!(a.num_params(), 76);
        let b = LayeredAnsatz::new(2, 3, 1).unwrap();
        assert_eq!(b.params_per_layer(), 6 + 4 + 3);
        assert_eq!(b.num_params(), 39);
    }

    #[test]
    fn hamiltonian_matches_kronecker_reference() {
        let a = LayeredAnsatz::new(3, 1, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let coeffs: Vec<f64> = (0..a.terms().len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let h = ComplexMatrix::from_real(8, 8, &a.hamiltonian(&coeffs)).unwrap();
        assert!(h.distance(&reference_hamiltonian(3, &coeffs)) < 1e-14);
    }

    #[test]
    fn zero_parameters_give_identity() {
        let a = LayeredAnsatz::new(3, 2, 2).unwrap();
        let u = a.layered_unitary(&a.zeros(), 2).unwrap();
        assert!(u.distance(&ComplexMatrix::identity(8)) < 1e-14);
    }

    #[test]
    fn y_rotation_flips_single_qubit() {
        let a = LayeredAnsatz::new(1, 1, 1).unwrap();
        let mut theta = a.zeros();
        theta.values[1] = std::f64::consts::PI;
        let u = a.layered_unitary(&theta, 1).unwrap();
        let one = PureState::basis(HilbertSpace::qubits(1), 0).unwrap().evolve(&u);
        assert!((one.amplitudes()[1].norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn layer_matches_dense_construction() {
        let a = LayeredAnsatz::new(2, 1, 1).unwrap();
        let theta = a.init_params(3);
        let u = a.layered_unitary(&theta, 1).unwrap();
        assert!(u.is_unitary(1e-9));
        let v = &theta.values;
        let rz = |x: f64| ComplexMatrix::diagonal(&[Complex64::from_polar(1.0, -x / 2.0), Complex64::from_polar(1.0, x / 2.0)]);
        let ry = |x: f64| {
            let (s, c) = (x / 2.0).sin_cos();
            ComplexMatrix::from_real(2, 2, &[c, -s, s, c]).unwrap()
        };
        let r = |k: usize| rz(v[k]).matmul(&ry(v[k + 1])).matmul(&rz(v[k + 2]));
        let rot = r(0).kron(&r(3));
        let h = reference_hamiltonian(2, &v[6..]);
        let expected = unitary_from_hermitian(&h, 1.0).unwrap().matmul(&rot);
        assert!(u.distance(&expected) < 1e-12);
    }

    #[test]
    fn group_prefix_is_consistent() {
        let a = LayeredAnsatz::new(3, 2, 2).unwrap();
        let theta = a.init_params(8);
        let g0 = a.group_unitary(&theta, 0).unwrap();
        let g1 = a.group_unitary(&theta, 1).unwrap();
        let full = a.layered_unitary(&theta, 2).unwrap();
        assert!(g1.matmul(&g0).distance(&full) < 1e-10);
        assert!(a.layered_unitary(&theta, 1).unwrap().distance(&g0) < 1e-14);
    }

    #[test]
    fn layout_is_checked() {
        let a = LayeredAnsatz::new(2, 1, 1).unwrap();
        let b = LayeredAnsatz::new(2, 1, 2).unwrap();
        assert!(matches!(a.layered_unitary(&b.zeros(), 1), Err(Error::LayoutMismatch { .. })));
        let mut wrong = a.zeros();
        wrong.fingerprint = "other".into();
        assert!(a.layered_unitary(&wrong, 1).is_err());
    }

    #[test]
    fn slots_describe_layout() {
        let a = LayeredAnsatz::new(4, 1, 2).unwrap();
        assert_eq!(a.slot(4).unwrap().role, ParamRole::Euler { qubit: 1, angle: 1 });
        assert_eq!(a.slot(12 + 3).unwrap().role, ParamRole::Field { qubit: 1, axis: 'z' });
        assert_eq!(a.slot(20 + 3 * 3 + 1).unwrap().role, ParamRole::Coupling { i: 1, j: 2, axis: 'y' });
        assert_eq!(a.slot(38).unwrap().group, 1);
        assert!(a.slot(76).is_none());
    }

    #[test]
    fn params_round_trip_json() {
        let a = LayeredAnsatz::new(4, 1, 2).unwrap();
        let p = a.init_params(1);
        let back = ParamVector::from_json(&p.to_json()).unwrap();
        assert_eq!(p, back);
    }

    #[test]
    fn perturbation_statistics() {
        let a = LayeredAnsatz::new(2, 1, 1).unwrap();
        let theta = a.init_params(0);
        assert_eq!(perturb_params(&theta, 0.0, 1).unwrap(), theta);
        assert_eq!(perturb_params(&theta, 0.05, 1).unwrap(), perturb_params(&theta, 0.05, 1).unwrap());
        let samples: Vec<f64> = (0..10_000)
            .map(|s| perturb_params(&theta, 0.05, s).unwrap().values[0] - theta.values[0])
            .collect();
        let mean = samples.iter().sum::<f64>() / samples.len() as f64;
        let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (samples.len() - 1) as f64;
        assert!((var - 0.0025).abs() < 0.05 * 0.0025, "variance {var}");
    }

    /// exp(A) by scaled Taylor series, for generic (even non-normal) A.
    fn series_exp(a: &ComplexMatrix) -> ComplexMatrix {
        let s = 8;
        let scaled = a.scale_real(1.0 / f64::from(1 << s));
        let n = a.rows();
        let mut term = ComplexMatrix::identity(n);
        let mut sum = ComplexMatrix::identity(n);
        for k in 1..30 {
            term = term.matmul(&scaled).scale_real(1.0 / k as f64);
            sum.add_scaled(&term, ONE);
        }
        for _ in 0..s {
            sum = sum.matmul(&sum);
        }
        sum
    }

    #[test]
    fn qudit_factors_match_series_exponentials() {
        let d = 5;
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for reading in [GeneratorReading::HermitianPair, GeneratorReading::Literal] {
            let ansatz = QuditGeneratorAnsatz::full(d, reading).unwrap();
            let angles: Vec<f64> = (0..ansatz.num_params()).map(|_| rng.random_range(-0.5..0.5)).collect();
            let mut expected = ComplexMatrix::identity(d);
            for (&(i, j), &a) in ansatz.pairs().iter().zip(&angles) {
                let mut g = ComplexMatrix::zeros(d, d);
                let c = match (reading, i.cmp(&j)) {
                    (GeneratorReading::Literal, _) | (_, std::cmp::Ordering::Equal) => {
                        g.set(i, j, c64(0.0, a));
                        expected = series_exp(&g).matmul(&expected);
                        continue;
                    }
                    (_, std::cmp::Ordering::Less) => c64(a, 0.0),
                    (_, std::cmp::Ordering::Greater) => c64(0.0, a),
                };
                g.set(i, j, c64(0.0, 1.0) * c);
                g.set(j, i, c64(0.0, 1.0) * c.conj());
                expected = series_exp(&g).matmul(&expected);
            }
            let u = ansatz.unitary(&angles).unwrap();
            assert!(u.distance(&expected) < 1e-12);
            match reading {
                GeneratorReading::HermitianPair => assert!(u.is_unitary(1e-12)),
                GeneratorReading::Literal => assert!(u.unitarity_residual() > 1e-3),
            }
        }
    }

    #[test]
    fn qudit_trivial_cases() {
        let a = QuditGeneratorAnsatz::full(5, GeneratorReading::HermitianPair).unwrap();
        let u = a.unitary(&vec![0.0; 25]).unwrap();
        assert!(u.distance(&ComplexMatrix::identity(5)) < 1e-15);
        let single = QuditGeneratorAnsatz::new(5, vec![(0, 0)], GeneratorReading::Literal).unwrap();
        let u = single.unitary(&[0.3]).unwrap();
        assert!((u.get(0, 0) - Complex64::from_polar(1.0, 0.3)).norm() < 1e-15);
        assert!(QuditGeneratorAnsatz::new(5, vec![(5, 0)], GeneratorReading::Literal).is_err());
        let restricted = QuditGeneratorAnsatz::over_levels(5, &[1, 2, 3, 4], GeneratorReading::HermitianPair).unwrap();
        assert_eq!(restricted.num_params(), 16);
    }
}
