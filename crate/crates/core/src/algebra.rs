//! Dense complex linear algebra on small Hilbert spaces.
//!
//! Two-qubit operators are stored in the product basis `|q1> ⊗ |q2>` with the
//! fixed order `{|ee>, |eg>, |ge>, |gg>}`, where `|e>` is the `+1` eigenstate of
//! `σ_z`. Every module in the crate shares this order.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Index of `|ee>` in the two-qubit basis.
pub const EE: usize = 0;
/// Index of `|eg>` in the two-qubit basis.
pub const EG: usize = 1;
/// Index of `|ge>` in the two-qubit basis.
pub const GE: usize = 2;
/// Index of `|gg>` in the two-qubit basis.
pub const GG: usize = 3;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Dense square complex matrix, row-major.
#[derive(Clone, PartialEq)]
pub struct Operator {
    dim: usize,
    data: Vec<Complex64>,
}

/// A 4×4 [`Operator`] on the two-qubit space in the `{ee, eg, ge, gg}` basis.
pub type TwoQubitOperator = Operator;

impl Operator {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![ZERO; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut out = Self::zeros(dim);
        for i in 0..dim {
            out.data[i * dim + i] = ONE;
        }
        out
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                data.push(f(i, j));
            }
        }
        Self { dim, data }
    }

    /// Builds from row-major entries. Panics if `entries.len()` is not a square.
    pub fn from_rows(entries: Vec<Complex64>) -> Self {
        let dim = (entries.len() as f64).sqrt().round() as usize;
        assert_eq!(dim * dim, entries.len(), "entries do not form a square matrix");
        Self { dim, data: entries }
    }

    pub fn from_real_rows(entries: &[f64]) -> Self {
        Self::from_rows(entries.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let mut out = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            out.data[i * diag.len() + i] = Complex64::new(d, 0.0);
        }
        out
    }

    /// `|ket><bra|`.
    pub fn outer(ket: &[Complex64], bra: &[Complex64]) -> Self {
        assert_eq!(ket.len(), bra.len());
        Self::from_fn(ket.len(), |i, j| ket[i] * bra[j].conj())
    }

    /// `|v><v|` for a real vector.
    pub fn projector_real(v: &[f64]) -> Self {
        Self::from_fn(v.len(), |i, j| Complex64::new(v[i] * v[j], 0.0))
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.dim + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: Complex64) {
        self.data[i * self.dim + j] = value;
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn dagger(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self.get(j, i).conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self.get(j, i))
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn diagonal_real(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i).re).collect()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn scale_complex(&self, s: Complex64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    /// `self += s * other`.
    pub fn add_scaled(&mut self, s: f64, other: &Operator) {
        assert_eq!(self.dim, other.dim);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b * s;
        }
    }

    pub fn kron(&self, other: &Operator) -> Self {
        let (m, n) = (self.dim, other.dim);
        let mut out = Self::zeros(m * n);
        for i in 0..m {
            for j in 0..m {
                let a = self.get(i, j);
                if a == ZERO {
                    continue;
                }
                for k in 0..n {
                    for l in 0..n {
                        out.data[(i * n + k) * m * n + j * n + l] = a * other.get(k, l);
                    }
                }
            }
        }
        out
    }

    /// `[a, b] = ab - ba`.
    pub fn commutator(a: &Operator, b: &Operator) -> Self {
        a * b - b * a
    }

    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(v.len(), self.dim);
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self.get(i, j) * v[j]).sum())
            .collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Operator) -> f64 {
        assert_eq!(self.dim, other.dim);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `max |A - A†|`.
    pub fn hermiticity_error(&self) -> f64 {
        let mut err: f64 = 0.0;
        for i in 0..self.dim {
            for j in i..self.dim {
                err = err.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        err
    }

    /// Hermitian within `rel_tol · max|A|`.
    pub fn is_hermitian(&self, rel_tol: f64) -> bool {
        self.hermiticity_error() <= rel_tol * self.max_abs()
    }

    /// `(A + A†) / 2`.
    pub fn hermitian_part(&self) -> Self {
        Self::from_fn(self.dim, |i, j| (self.get(i, j) + self.get(j, i).conj()) * 0.5)
    }

    /// Real part of `Tr(A B)` without forming the product.
    pub fn trace_product_re(&self, other: &Operator) -> f64 {
        let n = self.dim;
        let mut acc = 0.0;
        for i in 0..n {
            for k in 0..n {
                acc += (self.data[i * n + k] * other.data[k * n + i]).re;
            }
        }
        acc
    }

    /// Conjugation `U† A U`.
    pub fn conjugate_by(&self, u: &Operator) -> Self {
        &(&u.dagger() * self) * u
    }
}

impl fmt::Debug for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Operator({}x{})", self.dim, self.dim)?;
        for i in 0..self.dim {
            let row: Vec<String> = (0..self.dim)
                .map(|j| {
                    let z = self.get(i, j);
                    format!("{:+.6e}{:+.6e}i", z.re, z.im)
                })
                .collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        Ok(())
    }
}

impl Mul<&Operator> for &Operator {
    type Output = Operator;

    fn mul(self, rhs: &Operator) -> Operator {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        let n = self.dim;
        let mut out = Operator::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == ZERO {
                    continue;
                }
                let row = &rhs.data[k * n..(k + 1) * n];
                let dst = &mut out.data[i * n..(i + 1) * n];
                for (d, b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        out
    }
}

impl Mul<Operator> for Operator {
    type Output = Operator;
    fn mul(self, rhs: Operator) -> Operator {
        &self * &rhs
    }
}

impl Add<&Operator> for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl Add for Operator {
    type Output = Operator;
    fn add(mut self, rhs: Operator) -> Operator {
        self += &rhs;
        self
    }
}

impl Sub<&Operator> for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        let mut out = self.clone();
        out -= rhs;
        out
    }
}

impl Sub for Operator {
    type Output = Operator;
    fn sub(mut self, rhs: Operator) -> Operator {
        self -= &rhs;
        self
    }
}

impl Neg for Operator {
    type Output = Operator;
    fn neg(self) -> Operator {
        self.scale(-1.0)
    }
}

impl AddAssign<&Operator> for Operator {
    fn add_assign(&mut self, rhs: &Operator) {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        for (a, b) in self.data.iter_mut().zip(&rhs.data) {
            *a += b;
        }
    }
}

impl SubAssign<&Operator> for Operator {
    fn sub_assign(&mut self, rhs: &Operator) {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        for (a, b) in self.data.iter_mut().zip(&rhs.data) {
            *a -= b;
        }
    }
}

/// Pauli axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

/// One of the two qubits.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Qubit {
    One,
    Two,
}

/// Single-qubit Pauli matrix in the `{|e>, |g>}` basis.
pub fn pauli_single(axis: Axis) -> Operator {
    let (o, z, i) = (ONE, ZERO, Complex64::new(0.0, 1.0));
    match axis {
        Axis::X => Operator::from_rows(vec![z, o, o, z]),
        Axis::Y => Operator::from_rows(vec![z, -i, i, z]),
        Axis::Z => Operator::from_rows(vec![o, z, z, -o]),
    }
}

/// `σ_axis` on qubit `k` (zero-based) of an `n`-qubit register.
pub fn pauli_on(n_qubits: usize, k: usize, axis: Axis) -> Operator {
    assert!(k < n_qubits, "qubit index {k} out of range for {n_qubits} qubits");
    embed_single(n_qubits, k, &pauli_single(axis))
}

/// Places a 2×2 operator on qubit `k` with identities elsewhere.
pub fn embed_single(n_qubits: usize, k: usize, op: &Operator) -> Operator {
    assert_eq!(op.dim(), 2);
    let id = Operator::identity(2);
    let mut out = Operator::identity(1);
    for q in 0..n_qubits {
        out = out.kron(if q == k { op } else { &id });
    }
    out
}

/// `σ_axis^{(qubit)} ⊗ 1` on the two-qubit space.
pub fn pauli(qubit: Qubit, axis: Axis) -> TwoQubitOperator {
    match qubit {
        Qubit::One => pauli_on(2, 0, axis),
        Qubit::Two => pauli_on(2, 1, axis),
    }
}

/// Collective spin `S_axis = ½ Σ_n σ_axis^{(n)}` on `n` qubits.
pub fn collective_spin(n_qubits: usize, axis: Axis) -> Operator {
    let mut out = Operator::zeros(1 << n_qubits);
    for k in 0..n_qubits {
        out.add_scaled(0.5, &pauli_on(n_qubits, k, axis));
    }
    out
}

/// `S_x = ½(σ_x^{(1)} + σ_x^{(2)})`.
pub fn collective_sx() -> TwoQubitOperator {
    collective_spin(2, Axis::X)
}

/// `C_± = ½(σ_x^{(m)} σ_x^{(n)} ± σ_y^{(m)} σ_y^{(n)})` on an `n`-qubit register.
pub fn exchange_operator(n_qubits: usize, m: usize, n: usize, sign: f64) -> Operator {
    let xx = &pauli_on(n_qubits, m, Axis::X) * &pauli_on(n_qubits, n, Axis::X);
    let yy = &pauli_on(n_qubits, m, Axis::Y) * &pauli_on(n_qubits, n, Axis::Y);
    let mut out = xx.scale(0.5);
    out.add_scaled(0.5 * sign, &yy);
    out
}

/// Two-qubit system Hamiltonian with level spacings `ω_z(1 ± ε)`.
pub fn qubit_hamiltonian(omega_z: f64, epsilon: f64) -> TwoQubitOperator {
    let mut h = pauli(Qubit::One, Axis::Z).scale(0.5 * (1.0 + epsilon) * omega_z);
    h.add_scaled(0.5 * (1.0 - epsilon) * omega_z, &pauli(Qubit::Two, Axis::Z));
    h
}

/// Inverse temperature, with zero temperature as a distinguished value.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Beta {
    Finite(f64),
    Infinite,
}

impl Beta {
    /// `k_B T = 0` maps to [`Beta::Infinite`].
    pub fn from_temperature(kt: f64) -> Result<Self> {
        if !(kt >= 0.0) || !kt.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "temperature must be finite and non-negative, got {kt}"
            )));
        }
        Ok(if kt == 0.0 {
            Beta::Infinite
        } else {
            Beta::Finite(1.0 / kt)
        })
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Beta::Infinite)
    }

    /// Numeric value, `f64::INFINITY` for zero temperature.
    pub fn value(&self) -> f64 {
        match *self {
            Beta::Finite(b) => b,
            Beta::Infinite => f64::INFINITY,
        }
    }

    pub fn temperature(&self) -> f64 {
        match *self {
            Beta::Finite(b) => 1.0 / b,
            Beta::Infinite => 0.0,
        }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        match *self {
            Beta::Finite(b) if !(b >= 0.0) || !b.is_finite() => Err(Error::InvalidParameter(
                format!("inverse temperature must be finite and non-negative, got {b}"),
            )),
            _ => Ok(()),
        }
    }
}

/// Eigenvalues in ascending order with eigenvectors stored as columns.
#[derive(Clone, Debug)]
pub struct Eigensystem {
    pub values: Vec<f64>,
    pub vectors: Operator,
}

impl Eigensystem {
    pub fn vector(&self, k: usize) -> Vec<Complex64> {
        (0..self.vectors.dim()).map(|i| self.vectors.get(i, k)).collect()
    }

    /// `V diag(f(λ)) V†`.
    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> Operator {
        let n = self.values.len();
        let weights: Vec<f64> = self.values.iter().map(|&v| f(v)).collect();
        let v = &self.vectors;
        Operator::from_fn(n, |i, j| {
            (0..n)
                .filter(|&k| weights[k] != 0.0)
                .map(|k| v.get(i, k) * v.get(j, k).conj() * weights[k])
                .sum()
        })
    }

    pub fn reconstruct(&self) -> Operator {
        self.map_values(|x| x)
    }
}

/// Eigendecomposition of a Hermitian matrix by cyclic complex Jacobi rotations.
///
/// Rejects inputs whose anti-Hermitian part exceeds `1e-10 · max|A|`.
pub fn hermitian_eigensystem(a: &Operator) -> Result<Eigensystem> {
    let scale = a.max_abs();
    if a.hermiticity_error() > 1e-10 * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::NotHermitian {
            error: a.hermiticity_error(),
            scale,
        });
    }
    let n = a.dim();
    let mut m = a.hermitian_part();
    let mut v = Operator::identity(n);
    let norm = m.frobenius_norm();
    if norm == 0.0 {
        return Ok(Eigensystem {
            values: vec![0.0; n],
            vectors: v,
        });
    }
    let threshold = 1e-13 * norm;

    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m.get(i, j).norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off <= threshold {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m.get(p, q);
                let r = apq.norm();
                if r <= f64::MIN_POSITIVE || r < 1e-18 * norm {
                    continue;
                }
                jacobi_rotate(&mut m, &mut v, p, q, apq, r);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag = m.diagonal_real();
    order.sort_by(|&i, &j| diag[i].total_cmp(&diag[j]));
    let values = order.iter().map(|&k| diag[k]).collect();
    let vectors = Operator::from_fn(n, |i, k| v.get(i, order[k]));
    Ok(Eigensystem { values, vectors })
}

fn jacobi_rotate(m: &mut Operator, v: &mut Operator, p: usize, q: usize, apq: Complex64, r: f64) {
    let n = m.dim();
    let phase = apq / r; // e^{iφ}
    let app = m.get(p, p).re;
    let aqq = m.get(q, q).re;
    let theta = (aqq - app) / (2.0 * r);
    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
    let t = if theta == 0.0 { 1.0 } else { t };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;
    // J = [[c, s], [-s e^{-iφ}, c e^{-iφ}]] on the (p, q) plane.
    let pc = phase.conj();
    for k in 0..n {
        let akp = m.get(k, p);
        let akq = m.get(k, q);
        m.set(k, p, akp * c - akq * pc * s);
        m.set(k, q, akp * s + akq * pc * c);
    }
    for k in 0..n {
        let apk = m.get(p, k);
        let aqk = m.get(q, k);
        m.set(p, k, apk * c - aqk * phase * s);
        m.set(q, k, apk * s + aqk * phase * c);
    }
    m.set(p, q, ZERO);
    m.set(q, p, ZERO);
    m.set(p, p, Complex64::new(m.get(p, p).re, 0.0));
    m.set(q, q, Complex64::new(m.get(q, q).re, 0.0));
    for k in 0..n {
        let vkp = v.get(k, p);
        let vkq = v.get(k, q);
        v.set(k, p, vkp * c - vkq * pc * s);
        v.set(k, q, vkp * s + vkq * pc * c);
    }
}

/// Density matrix on a tensor product space with factor dimensions `dims`.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    op: Operator,
    dims: Vec<usize>,
}

impl DensityMatrix {
    /// Checks trace (1e-10) and Hermiticity (1e-10) but not positivity:
    /// perturbative states are allowed small negative eigenvalues.
    pub fn new(op: Operator, dims: Vec<usize>) -> Result<Self> {
        let total: usize = dims.iter().product();
        if total != op.dim() {
            return Err(Error::DimensionMismatch(format!(
                "factor dims {dims:?} do not multiply to {}",
                op.dim()
            )));
        }
        let tr = op.trace();
        if (tr - ONE).norm() > 1e-10 {
            return Err(Error::InvalidState(format!("trace {tr} differs from 1")));
        }
        let herr = op.hermiticity_error();
        if herr > 1e-10 {
            return Err(Error::InvalidState(format!(
                "anti-Hermitian part {herr:e} exceeds 1e-10"
            )));
        }
        Ok(Self { op, dims })
    }

    pub fn two_qubit(op: TwoQubitOperator) -> Result<Self> {
        Self::new(op, vec![2, 2])
    }

    /// Normalizes by the trace first.
    pub fn from_unnormalized(op: Operator, dims: Vec<usize>) -> Result<Self> {
        let tr = op.trace().re;
        if !(tr > 0.0) {
            return Err(Error::InvalidState(format!("non-positive trace {tr}")));
        }
        Self::new(op.scale(1.0 / tr), dims)
    }

    pub fn maximally_mixed(dims: Vec<usize>) -> Self {
        let d: usize = dims.iter().product();
        Self {
            op: Operator::identity(d).scale(1.0 / d as f64),
            dims,
        }
    }

    pub fn pure(state: &[Complex64], dims: Vec<usize>) -> Result<Self> {
        let norm: f64 = state.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let psi: Vec<Complex64> = state.iter().map(|z| z / norm).collect();
        Self::new(Operator::outer(&psi, &psi), dims)
    }

    pub fn op(&self) -> &Operator {
        &self.op
    }

    pub fn into_op(self) -> Operator {
        self.op
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        Ok(hermitian_eigensystem(&self.op)?.values)
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(self.eigenvalues()?[0])
    }

    /// True when no eigenvalue is below `-tol`.
    pub fn is_positive(&self, tol: f64) -> Result<bool> {
        Ok(self.min_eigenvalue()? >= -tol)
    }
}

/// Thermal state `e^{-βH}/Tr e^{-βH}` via eigendecomposition with the ground
/// energy subtracted. At zero temperature, the equal mixture over the ground
/// space (degeneracy tolerance `1e-10 · max(|E|)`).
pub fn gibbs_state(h: &Operator, beta: Beta, dims: Vec<usize>) -> Result<DensityMatrix> {
    beta.validate()?;
    let eig = hermitian_eigensystem(h)?;
    gibbs_from_eigensystem(&eig, beta, dims)
}

pub(crate) fn gibbs_from_eigensystem(
    eig: &Eigensystem,
    beta: Beta,
    dims: Vec<usize>,
) -> Result<DensityMatrix> {
    let weights = boltzmann_weights(&eig.values, beta);
    let mut rho = Operator::zeros(eig.values.len());
    for (k, &w) in weights.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        let v = eig.vector(k);
        rho.add_scaled(w, &Operator::outer(&v, &v));
    }
    DensityMatrix::new(rho.hermitian_part(), dims)
}

/// Normalized Boltzmann weights of a spectrum.
pub fn boltzmann_weights(energies: &[f64], beta: Beta) -> Vec<f64> {
    let e0 = energies.iter().copied().fold(f64::INFINITY, f64::min);
    let scale = energies.iter().map(|e| e.abs()).fold(0.0, f64::max);
    let raw: Vec<f64> = match beta {
        Beta::Infinite => {
            let tol = 1e-10 * scale.max(f64::MIN_POSITIVE);
            energies
                .iter()
                .map(|&e| if e - e0 <= tol { 1.0 } else { 0.0 })
                .collect()
        }
        Beta::Finite(b) => energies
            .iter()
            .map(|&e| {
                let w = (-b * (e - e0)).exp();
                if w < 1e-300 {
                    0.0
                } else {
                    w
                }
            })
            .collect(),
    };
    let z: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / z).collect()
}

fn check_two_factor(rho: &DensityMatrix) -> Result<(usize, usize)> {
    match rho.dims() {
        [a, b] => Ok((*a, *b)),
        dims => Err(Error::DimensionMismatch(format!(
            "expected a bipartite state, got factor dims {dims:?}"
        ))),
    }
}

/// Partial transpose with respect to `factor` (0 or 1) of a bipartite state.
pub fn partial_transpose(rho: &DensityMatrix, factor: usize) -> Result<Operator> {
    let (da, db) = check_two_factor(rho)?;
    if factor > 1 {
        return Err(Error::DimensionMismatch(format!(
            "factor {factor} out of range for a bipartite state"
        )));
    }
    Ok(partial_transpose_op(rho.op(), da, db, factor))
}

pub(crate) fn partial_transpose_op(op: &Operator, da: usize, db: usize, factor: usize) -> Operator {
    let mut out = Operator::zeros(da * db);
    for i in 0..da {
        for k in 0..db {
            for j in 0..da {
                for l in 0..db {
                    let (r, c) = if factor == 0 {
                        (j * db + k, i * db + l)
                    } else {
                        (i * db + l, j * db + k)
                    };
                    out.set(i * db + k, j * db + l, op.get(r, c));
                }
            }
        }
    }
    out
}

/// Negativity `(‖ρ^{T1}‖₁ − 1)/2`, evaluated as the sum of the magnitudes of
/// the negative eigenvalues of the partial transpose.
pub fn negativity(rho: &DensityMatrix) -> Result<f64> {
    let pt = partial_transpose(rho, 0)?;
    let eig = hermitian_eigensystem(&pt)?;
    Ok(eig.values.iter().filter(|&&x| x < 0.0).fold(0.0, |acc, x| acc - x))
}

/// `Tr ρ²`.
pub fn purity(rho: &DensityMatrix) -> f64 {
    rho.op().data().iter().map(|z| z.norm_sqr()).sum()
}

/// Reduced state on the factors listed in `keep` (zero-based, ascending).
pub fn partial_trace(rho: &DensityMatrix, keep: &[usize]) -> Result<DensityMatrix> {
    let dims = rho.dims();
    let nf = dims.len();
    if keep.is_empty() || keep.windows(2).any(|w| w[0] >= w[1]) || keep.iter().any(|&k| k >= nf)
    {
        return Err(Error::DimensionMismatch(format!(
            "keep list {keep:?} inconsistent with factor dims {dims:?}"
        )));
    }
    let traced: Vec<usize> = (0..nf).filter(|f| !keep.contains(f)).collect();
    let kept_dims: Vec<usize> = keep.iter().map(|&k| dims[k]).collect();
    let traced_dims: Vec<usize> = traced.iter().map(|&k| dims[k]).collect();
    let dk: usize = kept_dims.iter().product();
    let dt: usize = traced_dims.iter().product();

    // strides of each factor in the full index
    let mut strides = vec![1usize; nf];
    for f in (0..nf.saturating_sub(1)).rev() {
        strides[f] = strides[f + 1] * dims[f + 1];
    }
    let full_index = |kept: usize, tr: usize| -> usize {
        let mut idx = 0;
        let mut rem = kept;
        for (pos, &f) in keep.iter().enumerate().rev() {
            idx += (rem % kept_dims[pos]) * strides[f];
            rem /= kept_dims[pos];
        }
        let mut rem = tr;
        for (pos, &f) in traced.iter().enumerate().rev() {
            idx += (rem % traced_dims[pos]) * strides[f];
            rem /= traced_dims[pos];
        }
        idx
    };

    let op = rho.op();
    let out = Operator::from_fn(dk, |i, j| {
        (0..dt)
            .map(|t| op.get(full_index(i, t), full_index(j, t)))
            .sum()
    });
    DensityMatrix::new(out, kept_dims)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn bell() -> DensityMatrix {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        DensityMatrix::pure(&[c(s), c(0.0), c(0.0), c(s)], vec![2, 2]).unwrap()
    }

    #[test]
    fn pauli_z_on_first_qubit_is_diagonal() {
        let z1 = pauli(Qubit::One, Axis::Z);
        assert_eq!(z1, Operator::from_diag(&[1.0, 1.0, -1.0, -1.0]));
    }

    #[test]
    fn pauli_squares_to_identity() {
        let x2 = pauli(Qubit::Two, Axis::X);
        assert!((&x2 * &x2).max_abs_diff(&Operator::identity(4)) < 1e-15);
    }

    #[test]
    fn pauli_commutator() {
        let x = pauli(Qubit::One, Axis::X);
        let y = pauli(Qubit::One, Axis::Y);
        let z = pauli(Qubit::One, Axis::Z);
        let comm = Operator::commutator(&x, &y);
        assert!(comm.max_abs_diff(&z.scale_complex(Complex64::new(0.0, 2.0))) < 1e-15);
    }

    #[test]
    fn collective_sx_spectrum_and_cube() {
        let sx = collective_sx();
        let eig = hermitian_eigensystem(&sx).unwrap();
        for (a, b) in eig.values.iter().zip([-1.0, 0.0, 0.0, 1.0]) {
            assert!((a - b).abs() < 1e-14);
        }
        let cube = &(&sx * &sx) * &sx;
        assert!(cube.max_abs_diff(&sx) < 1e-15);
    }

    #[test]
    fn collective_sx_maps_symmetric_singlet_sector() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let one = [c(0.0), c(s), c(s), c(0.0)];
        let v = collective_sx().apply(&one);
        let expected = [c(s), c(0.0), c(0.0), c(s)];
        for (a, b) in v.iter().zip(expected) {
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn eigensystem_sorts_diagonal() {
        let eig = hermitian_eigensystem(&Operator::from_diag(&[3.0, 1.0, 2.0, 0.0])).unwrap();
        assert_eq!(eig.values, vec![0.0, 1.0, 2.0, 3.0]);
    }

    #[test]
    fn eigensystem_of_qubit_hamiltonian() {
        let eig = hermitian_eigensystem(&qubit_hamiltonian(1.0, 0.0)).unwrap();
        for (a, b) in eig.values.iter().zip([-1.0, 0.0, 0.0, 1.0]) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn eigensystem_rejects_non_hermitian() {
        let a = Operator::from_real_rows(&[0.0, 1.0, 0.0, 0.0]);
        assert!(matches!(
            hermitian_eigensystem(&a),
            Err(Error::NotHermitian { .. })
        ));
    }

    #[test]
    fn eigensystem_of_zero_matrix() {
        let eig = hermitian_eigensystem(&Operator::zeros(3)).unwrap();
        assert_eq!(eig.values, vec![0.0; 3]);
    }

    #[test]
    fn gibbs_at_zero_beta_is_maximally_mixed() {
        let rho = gibbs_state(&qubit_hamiltonian(0.7, 0.2), Beta::Finite(0.0), vec![2, 2]).unwrap();
        assert!((purity(&rho) - 0.25).abs() < 1e-14);
    }

    #[test]
    fn gibbs_at_zero_temperature_is_ground_projector() {
        let rho = gibbs_state(&qubit_hamiltonian(1.0, 0.0), Beta::Infinite, vec![2, 2]).unwrap();
        let mut expected = Operator::zeros(4);
        expected.set(GG, GG, c(1.0));
        assert!(rho.op().max_abs_diff(&expected) < 1e-14);
    }

    #[test]
    fn gibbs_degenerate_ground_is_equal_mixture() {
        let h = Operator::from_diag(&[0.0, 0.0, 1.0, 2.0]);
        let rho = gibbs_state(&h, Beta::Infinite, vec![2, 2]).unwrap();
        assert_eq!(rho.op().diagonal_real(), vec![0.5, 0.5, 0.0, 0.0]);
    }

    #[test]
    fn gibbs_populations_match_scalar_formula() {
        let (wz, beta) = (1.0, 2.0);
        let rho = gibbs_state(&qubit_hamiltonian(wz, 0.0), Beta::Finite(beta), vec![2, 2]).unwrap();
        let x = beta * wz / 2.0;
        let p_plus = 0.5 / x.cosh() * (-x).exp();
        let p_minus = 0.5 / x.cosh() * x.exp();
        let expected = [p_plus * p_plus, p_plus * p_minus, p_plus * p_minus, p_minus * p_minus];
        for (a, b) in rho.op().diagonal_real().iter().zip(expected) {
            assert!((a - b).abs() < 1e-14, "{a} vs {b}");
        }
    }

    #[test]
    fn gibbs_rejects_negative_beta() {
        assert!(gibbs_state(&qubit_hamiltonian(1.0, 0.0), Beta::Finite(-1.0), vec![2, 2]).is_err());
    }

    #[test]
    fn partial_transpose_of_bell_state() {
        let pt = partial_transpose(&bell(), 0).unwrap();
        let eig = hermitian_eigensystem(&pt).unwrap();
        for (a, b) in eig.values.iter().zip([-0.5, 0.5, 0.5, 0.5]) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn partial_transpose_rejects_wrong_dims() {
        let rho = DensityMatrix::maximally_mixed(vec![2, 2, 2]);
        assert!(partial_transpose(&rho, 0).is_err());
    }

    #[test]
    fn negativity_of_bell_and_product() {
        assert!((negativity(&bell()).unwrap() - 0.5).abs() < 1e-14);
        let rho = gibbs_state(&qubit_hamiltonian(1.0, 0.3), Beta::Finite(1.3), vec![2, 2]).unwrap();
        assert!(negativity(&rho).unwrap() < 1e-15);
    }

    #[test]
    fn negativity_of_werner_states() {
        for p in [0.0, 0.2, 1.0 / 3.0, 0.5, 0.8, 1.0] {
            let mut op = bell().into_op().scale(p);
            op.add_scaled((1.0 - p) / 4.0, &Operator::identity(4));
            let rho = DensityMatrix::two_qubit(op).unwrap();
            let expected = f64::max(0.0, (3.0 * p - 1.0) / 4.0);
            assert!((negativity(&rho).unwrap() - expected).abs() < 1e-14, "p = {p}");
        }
    }

    #[test]
    fn purity_bounds() {
        assert!((purity(&bell()) - 1.0).abs() < 1e-14);
        assert!((purity(&DensityMatrix::maximally_mixed(vec![2, 2])) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn partial_trace_of_bell_is_mixed() {
        let r = partial_trace(&bell(), &[0]).unwrap();
        assert!(r.op().max_abs_diff(&Operator::identity(2).scale(0.5)) < 1e-15);
    }

    #[test]
    fn partial_trace_of_product_recovers_factor() {
        let a = gibbs_state(&pauli_single(Axis::Z), Beta::Finite(0.4), vec![2]).unwrap();
        let b = gibbs_state(&pauli_single(Axis::X), Beta::Finite(1.1), vec![2]).unwrap();
        let cc = gibbs_state(&pauli_single(Axis::Y), Beta::Finite(0.7), vec![2]).unwrap();
        let full = DensityMatrix::new(a.op().kron(b.op()).kron(cc.op()), vec![2, 2, 2]).unwrap();
        let r = partial_trace(&full, &[0, 2]).unwrap();
        assert!(r.op().max_abs_diff(&a.op().kron(cc.op())) < 1e-15);
        let r = partial_trace(&full, &[1]).unwrap();
        assert!(r.op().max_abs_diff(b.op()) < 1e-15);
    }

    #[test]
    fn partial_trace_rejects_bad_keep_list() {
        assert!(partial_trace(&bell(), &[2]).is_err());
        assert!(partial_trace(&bell(), &[1, 0]).is_err());
        assert!(partial_trace(&bell(), &[]).is_err());
    }
}
