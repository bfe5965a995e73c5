//! Second-order perturbative mean-force Gibbs state for a finite system
//! Hamiltonian `H_S` coupled through `X` to a bosonic reservoir:
//!
//! ```text
//! ρ = ρ_G + λ² [ β Σ_n ρ_G (X_n X_n† − ⟨X_n X_n†⟩) D(ω_n)
//!              + Σ_n [X_n†, ρ_G X_n] D′(ω_n)
//!              + Σ_{m≠n} ([X_m, X_n† ρ_G] − [X_m†, ρ_G X_n]) D(ω_n)/(ω_m − ω_n) ]
//! ```
//!
//! with `[H_S, X_n] = ω_n X_n` and `X = Σ_n X_n`.

use num_complex::Complex64;

use crate::algebra::{
    gibbs_from_eigensystem, hermitian_eigensystem, Beta, DensityMatrix, Eigensystem, Operator,
};
use crate::error::{Error, Result};
use crate::spectral::Kernel;

pub const DEFAULT_GROUPING_TOL: f64 = 1e-9;
pub const DEFAULT_VALIDITY_THRESHOLD: f64 = 0.1;

/// Bohr-frequency components of a coupling operator, ascending in frequency.
#[derive(Clone, Debug)]
pub struct EigenOperatorDecomposition {
    pub operators: Vec<Operator>,
    pub frequencies: Vec<f64>,
    pub grouping_tol: f64,
}

impl EigenOperatorDecomposition {
    pub fn len(&self) -> usize {
        self.operators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.operators.is_empty()
    }

    pub fn sum(&self) -> Option<Operator> {
        let mut it = self.operators.iter();
        let mut out = it.next()?.clone();
        for op in it {
            out += op;
        }
        Some(out)
    }
}

/// `‖H‖` used for relative tolerances: the largest eigenvalue magnitude.
fn spectral_scale(eig: &Eigensystem) -> f64 {
    eig.values.iter().map(|e| e.abs()).fold(0.0, f64::max)
}

pub fn eigenoperator_decompose(
    h: &Operator,
    x: &Operator,
    grouping_tol: f64,
) -> Result<EigenOperatorDecomposition> {
    let eig = hermitian_eigensystem(h)?;
    decompose_in(&eig, x, grouping_tol)
}

pub(crate) fn decompose_in(
    eig: &Eigensystem,
    x: &Operator,
    grouping_tol: f64,
) -> Result<EigenOperatorDecomposition> {
    let n = eig.values.len();
    if x.dim() != n {
        return Err(Error::DimensionMismatch(format!(
            "coupling operator is {}×{} but H_S is {n}×{n}",
            x.dim(),
            x.dim()
        )));
    }
    let v = &eig.vectors;
    let xt = x.conjugate_by(v);
    let cutoff = 1e-15 * xt.max_abs();
    let tol = grouping_tol * spectral_scale(eig).max(f64::MIN_POSITIVE);

    let mut comps: Vec<(f64, usize, usize)> = Vec::new();
    for j in 0..n {
        for k in 0..n {
            if xt.get(j, k).norm() > cutoff {
                comps.push((eig.values[j] - eig.values[k], j, k));
            }
        }
    }
    comps.sort_by(|a, b| a.0.total_cmp(&b.0));

    // single-linkage grouping along the sorted frequency axis
    let mut groups: Vec<Vec<(f64, usize, usize)>> = Vec::new();
    for c in comps {
        match groups.last_mut() {
            Some(g) if c.0 - g.last().unwrap().0 <= tol => g.push(c),
            _ => groups.push(vec![c]),
        }
    }

    let mut operators = Vec::with_capacity(groups.len());
    let mut frequencies = Vec::with_capacity(groups.len());
    for g in groups {
        let mut m = Operator::zeros(n);
        for &(_, j, k) in &g {
            m.set(j, k, xt.get(j, k));
        }
        frequencies.push(g.iter().map(|c| c.0).sum::<f64>() / g.len() as f64);
        operators.push(&(v * &m) * &v.dagger());
    }
    Ok(EigenOperatorDecomposition {
        operators,
        frequencies,
        grouping_tol,
    })
}

/// Per-term corrections of the state, each without the `λ²` factor.
#[derive(Clone, Debug)]
pub struct TermBreakdown {
    pub beta_term: Operator,
    pub derivative_term: Operator,
    pub cross_term: Operator,
}

impl TermBreakdown {
    pub fn total(&self) -> Operator {
        &(&self.beta_term + &self.derivative_term) + &self.cross_term
    }
}

#[derive(Clone, Debug)]
pub struct MfgResult {
    pub rho: DensityMatrix,
    pub gibbs: DensityMatrix,
    pub terms: TermBreakdown,
    pub validity: f64,
    /// `validity < threshold`.
    pub reliable: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EngineOptions {
    pub grouping_tol: f64,
    pub validity_threshold: f64,
}

impl Default for EngineOptions {
    fn default() -> Self {
        Self {
            grouping_tol: DEFAULT_GROUPING_TOL,
            validity_threshold: DEFAULT_VALIDITY_THRESHOLD,
        }
    }
}

/// Tensor factors for a state of dimension `d`: qubits when `d` is a power
/// of two, a single factor otherwise.
pub fn default_dims(d: usize) -> Vec<usize> {
    if d.is_power_of_two() && d > 1 {
        vec![2; d.trailing_zeros() as usize]
    } else {
        vec![d]
    }
}

/// Kernel values at each Bohr frequency of a decomposition.
#[derive(Clone, Debug)]
pub struct KernelValues {
    pub d: Vec<f64>,
    pub d_prime: Vec<f64>,
}

impl KernelValues {
    pub fn evaluate(kernel: &dyn Kernel, frequencies: &[f64]) -> Result<Self> {
        let mut d = Vec::with_capacity(frequencies.len());
        let mut d_prime = Vec::with_capacity(frequencies.len());
        for &w in frequencies {
            d.push(kernel.d(w)?);
            d_prime.push(kernel.d_prime(w)?);
        }
        Ok(Self { d, d_prime })
    }
}

/// The three correction terms for given kernel values.
pub fn correction_terms(
    rho_g: &Operator,
    decomp: &EigenOperatorDecomposition,
    beta: Beta,
    kv: &KernelValues,
) -> TermBreakdown {
    let n = rho_g.dim();
    let id = Operator::identity(n);
    let mut beta_term = Operator::zeros(n);
    let mut derivative_term = Operator::zeros(n);
    let mut cross_term = Operator::zeros(n);

    let daggers: Vec<Operator> = decomp.operators.iter().map(|x| x.dagger()).collect();
    let rho_x: Vec<Operator> = decomp.operators.iter().map(|x| rho_g * x).collect();
    let xd_rho: Vec<Operator> = daggers.iter().map(|xd| xd * rho_g).collect();

    for (i, x) in decomp.operators.iter().enumerate() {
        if let Beta::Finite(b) = beta {
            let xx = x * &daggers[i];
            let mean = rho_g.trace_product_re(&xx);
            let mut centered = xx;
            centered.add_scaled(-mean, &id);
            beta_term.add_scaled(b * kv.d[i], &(rho_g * &centered));
        }
        derivative_term.add_scaled(kv.d_prime[i], &Operator::commutator(&daggers[i], &rho_x[i]));
    }

    let nops = decomp.len();
    for m in 0..nops {
        for k in 0..nops {
            if m == k || (xd_rho[k].max_abs() == 0.0 && rho_x[k].max_abs() == 0.0) {
                continue;
            }
            let w = kv.d[k] / (decomp.frequencies[m] - decomp.frequencies[k]);
            let term = Operator::commutator(&decomp.operators[m], &xd_rho[k])
                - Operator::commutator(&daggers[m], &rho_x[k]);
            cross_term.add_scaled(w, &term);
        }
    }
    TermBreakdown {
        beta_term,
        derivative_term,
        cross_term,
    }
}

/// Perturbative criterion: `λ² β |Σ_n Tr[ρ_G X_n X_n†] D(ω_n)|` at finite
/// temperature, `4λ² Tr[ρ_G X²]` at zero temperature (equal to `Nλ²` for
/// `X = S_x` on `N` qubits).
pub fn validity_from_parts(
    rho_g: &Operator,
    x: &Operator,
    decomp: &EigenOperatorDecomposition,
    lambda_sq: f64,
    beta: Beta,
    kv: &KernelValues,
) -> f64 {
    match beta {
        Beta::Infinite => 4.0 * lambda_sq * rho_g.trace_product_re(&(x * x)),
        Beta::Finite(b) => {
            let s: f64 = decomp
                .operators
                .iter()
                .zip(&kv.d)
                .map(|(xn, d)| rho_g.trace_product_re(&(xn * &xn.dagger())) * d)
                .sum();
            lambda_sq * b * s.abs()
        }
    }
}

pub fn validity_metric(
    h: &Operator,
    x: &Operator,
    lambda_sq: f64,
    beta: Beta,
    kernel: &dyn Kernel,
    opts: &EngineOptions,
) -> Result<f64> {
    beta.validate()?;
    let eig = hermitian_eigensystem(h)?;
    let rho_g = gibbs_from_eigensystem(&eig, beta, default_dims(h.dim()))?;
    if beta.is_infinite() {
        return Ok(4.0 * lambda_sq * rho_g.op().trace_product_re(&(x * x)));
    }
    let decomp = decompose_in(&eig, x, opts.grouping_tol)?;
    let kv = KernelValues::evaluate(kernel, &decomp.frequencies)?;
    Ok(validity_from_parts(rho_g.op(), x, &decomp, lambda_sq, beta, &kv))
}

pub fn mfg_perturbative(
    h: &Operator,
    x: &Operator,
    lambda_sq: f64,
    beta: Beta,
    kernel: &dyn Kernel,
    opts: &EngineOptions,
) -> Result<MfgResult> {
    beta.validate()?;
    if !(lambda_sq >= 0.0 && lambda_sq.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "λ² must be finite and non-negative, got {lambda_sq}"
        )));
    }
    let eig = hermitian_eigensystem(h)?;
    let gibbs = gibbs_from_eigensystem(&eig, beta, default_dims(h.dim()))?;
    let decomp = decompose_in(&eig, x, opts.grouping_tol)?;
    let kv = KernelValues::evaluate(kernel, &decomp.frequencies)?;
    assemble(gibbs, x, &decomp, lambda_sq, beta, &kv, opts)
}

pub(crate) fn assemble(
    gibbs: DensityMatrix,
    x: &Operator,
    decomp: &EigenOperatorDecomposition,
    lambda_sq: f64,
    beta: Beta,
    kv: &KernelValues,
    opts: &EngineOptions,
) -> Result<MfgResult> {
    let terms = correction_terms(gibbs.op(), decomp, beta, kv);
    let mut rho = gibbs.op().clone();
    rho.add_scaled(lambda_sq, &terms.total());
    // remove rounding-level anti-Hermitian residue and trace drift
    let mut rho = rho.hermitian_part();
    let tr = rho.trace().re;
    let n = rho.dim();
    for i in 0..n {
        let d = rho.get(i, i);
        rho.set(i, i, d + Complex64::new((1.0 - tr) / n as f64, 0.0));
    }
    let validity = validity_from_parts(gibbs.op(), x, decomp, lambda_sq, beta, kv);
    Ok(MfgResult {
        rho: DensityMatrix::new(rho, gibbs.dims().to_vec())?,
        gibbs,
        terms,
        validity,
        reliable: validity < opts.validity_threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{collective_sx, qubit_hamiltonian};

    struct Poly;
    impl Kernel for Poly {
        fn d(&self, w: f64) -> Result<f64> {
            Ok(0.7 + 0.3 * w - 0.9 * w * w + 0.2 * w * w * w)
        }
        fn d_prime(&self, w: f64) -> Result<f64> {
            Ok(0.3 - 1.8 * w + 0.6 * w * w)
        }
    }

    #[test]
    fn decomposition_of_sx_with_asymmetry() {
        let h = qubit_hamiltonian(1.0, 0.1);
        let d = eigenoperator_decompose(&h, &collective_sx(), DEFAULT_GROUPING_TOL).unwrap();
        assert_eq!(d.len(), 4);
        let want = [-1.1, -0.9, 0.9, 1.1];
        for (f, w) in d.frequencies.iter().zip(want) {
            assert!((f - w).abs() < 1e-12);
        }
        assert!(d.sum().unwrap().max_abs_diff(&collective_sx()) < 1e-12);
        for (x, w) in d.operators.iter().zip(&d.frequencies) {
            let c = Operator::commutator(&h, x);
            assert!(c.max_abs_diff(&x.scale(*w)) < 1e-10);
        }
    }

    #[test]
    fn degenerate_frequencies_merge() {
        let h = qubit_hamiltonian(1.0, 0.0);
        let d = eigenoperator_decompose(&h, &collective_sx(), DEFAULT_GROUPING_TOL).unwrap();
        assert_eq!(d.len(), 2);
        assert!((d.frequencies[0] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_coupling_gives_gibbs_state() {
        let h = qubit_hamiltonian(1.0, 0.2);
        let r = mfg_perturbative(&h, &collective_sx(), 0.0, Beta::Finite(2.0), &Poly, &Default::default())
            .unwrap();
        assert_eq!(r.validity, 0.0);
        assert!(r.rho.op().max_abs_diff(r.gibbs.op()) < 1e-15);
    }

    #[test]
    fn corrections_are_traceless_and_hermitian() {
        for beta in [Beta::Finite(2.1), Beta::Infinite] {
            for eps in [0.0, 0.3] {
                let h = qubit_hamiltonian(0.37, eps);
                let r = mfg_perturbative(&h, &collective_sx(), 0.05, beta, &Poly, &Default::default())
                    .unwrap();
                for t in [&r.terms.beta_term, &r.terms.derivative_term, &r.terms.cross_term] {
                    assert!(t.trace().norm() < 1e-12);
                }
                assert!(r.terms.total().hermiticity_error() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_temperature_validity_counts_qubits() {
        let h = qubit_hamiltonian(1.0, 0.0);
        let v = validity_metric(&h, &collective_sx(), 0.01, Beta::Infinite, &Poly, &Default::default())
            .unwrap();
        assert!((v - 0.02).abs() < 1e-14);
    }
}
