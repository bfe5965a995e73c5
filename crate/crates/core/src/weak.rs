//! Weak-coupling mean-force Gibbs state of qubits on a common reservoir, in
//! closed form.

use crate::algebra::{
    collective_spin, exchange_operator, gibbs_state, pauli_on, pauli_single, qubit_hamiltonian,
    Axis, Beta, DensityMatrix, Operator,
};
use crate::error::{Error, Result};
use crate::quad::{integrate_to_infinity, QuadConfig};
use crate::spectral::{pv_half_line, KernelSource, ReservoirKernel, SpectralDensity, Spectrum};

/// Branch switch for the asymmetric two-qubit form.
pub const EPSILON_SWITCH: f64 = 1e-4;
pub const MAX_QUBITS: usize = 12;

/// Excited and ground populations `(p₊, p₋)` of a qubit with splitting `ω`,
/// `p₊ = 1/(1 + e^{βω})`.
pub fn thermal_populations(omega: f64, beta: Beta) -> (f64, f64) {
    match beta {
        Beta::Infinite => {
            if omega > 0.0 {
                (0.0, 1.0)
            } else if omega < 0.0 {
                (1.0, 0.0)
            } else {
                (0.5, 0.5)
            }
        }
        Beta::Finite(b) => {
            let p_plus = 1.0 / (1.0 + (b * omega).exp());
            let p_minus = 1.0 / (1.0 + (-b * omega).exp());
            (p_plus, p_minus)
        }
    }
}

/// `β p₊ p₋ = β / (4 cosh²(βω/2))`, zero at `β = ∞` for `ω ≠ 0`.
fn beta_pp(omega: f64, beta: Beta) -> f64 {
    match beta {
        Beta::Infinite => 0.0,
        Beta::Finite(b) => {
            let (pp, pm) = thermal_populations(omega, beta);
            b * pp * pm
        }
    }
}

/// Normalized thermal state `diag(p₊, p₋)` of one qubit.
pub fn qubit_thermal_state(omega: f64, beta: Beta) -> Operator {
    let (pp, pm) = thermal_populations(omega, beta);
    Operator::from_diag(&[pp, pm])
}

#[derive(Clone, Debug)]
pub struct WeakCouplingContext {
    pub omega_z: f64,
    pub epsilon: f64,
    pub lambda_sq: f64,
    pub beta: Beta,
    pub kernel: ReservoirKernel,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WeakBranch {
    /// Symmetric-limit `C₊` coefficient.
    SmallAsymmetry,
    /// Full asymmetric form.
    Asymmetric,
}

#[derive(Clone, Debug)]
pub struct WeakResult {
    pub rho: DensityMatrix,
    pub validity: f64,
    pub branch: WeakBranch,
}

/// `θ`, `dθ/dω` and the kernel values behind them at one splitting.
#[derive(Clone, Copy, Debug)]
struct ThetaParts {
    theta: f64,
    dtheta: f64,
}

impl WeakCouplingContext {
    pub fn new(
        omega_z: f64,
        epsilon: f64,
        lambda_sq: f64,
        beta: Beta,
        sd: SpectralDensity,
    ) -> Result<Self> {
        Self::with_kernel(omega_z, epsilon, lambda_sq, ReservoirKernel::quadrature(sd, beta)?)
    }

    pub fn with_kernel(omega_z: f64, epsilon: f64, lambda_sq: f64, kernel: ReservoirKernel) -> Result<Self> {
        if !(omega_z > 0.0 && omega_z.is_finite()) {
            return Err(Error::InvalidParameter(format!("ω_z must be positive, got {omega_z}")));
        }
        if !(epsilon.abs() <= 1.0) {
            return Err(Error::InvalidParameter(format!("ε must lie in [−1, 1], got {epsilon}")));
        }
        if !(lambda_sq >= 0.0 && lambda_sq.is_finite()) {
            return Err(Error::InvalidParameter(format!("λ² must be non-negative, got {lambda_sq}")));
        }
        Ok(Self {
            omega_z,
            epsilon,
            lambda_sq,
            beta: kernel.beta(),
            kernel,
        })
    }

    /// `(p₊, p₋)` at `ω_z`.
    pub fn populations(&self) -> (f64, f64) {
        thermal_populations(self.omega_z, self.beta)
    }

    fn parts(&self, omega: f64) -> Result<ThetaParts> {
        let (pp, pm) = thermal_populations(omega, self.beta);
        let bpp = beta_pp(omega, self.beta);
        let (dp, dpp) = self.kernel.evaluate(omega)?;
        let (dm, dmp) = self.kernel.evaluate(-omega)?;
        let q = 0.25 * self.lambda_sq;
        Ok(ThetaParts {
            theta: q * (pp * dp + pm * dm),
            dtheta: q * (-bpp * dp + pp * dpp + bpp * dm - pm * dmp),
        })
    }

    /// `θ(ω) = (λ²/4)(p₊ D_β(ω) + p₋ D_β(−ω))`.
    pub fn theta_at(&self, omega: f64) -> Result<f64> {
        Ok(self.parts(omega)?.theta)
    }

    pub fn theta(&self) -> Result<f64> {
        self.theta_at(self.omega_z)
    }

    /// `θ(ω)` as one principal-value integral,
    /// `(λ²/4) P∫ J(x)[x + (p₊ − p₋) ω coth(βx/2)]/(x² − ω²) dx`.
    pub fn theta_integral_form(&self, omega: f64) -> Result<f64> {
        let sd = match self.kernel.source() {
            KernelSource::Density(sd) => *sd,
            KernelSource::SingleMode(_) => return self.theta_at(omega),
        };
        let (pp, pm) = thermal_populations(omega, self.beta);
        let cfg = QuadConfig {
            abs_tol: 1e-13 * sd.omega_z,
            rel_tol: 1e-11,
            max_panels: 1 << 20,
        };
        let integral = match self.beta {
            Beta::Infinite => {
                // numerator x − ω cancels the pole
                let f = |x: f64| if x <= 0.0 { 0.0 } else { sd.odd_value(x) / (x + omega) };
                integrate_to_infinity(f, 0.0, sd.tail_start(), &sd.features(), &cfg)?.value
            }
            Beta::Finite(b) => {
                let c = (pp - pm) * omega;
                pv_half_line(&sd, omega.abs(), |x| x + c * coth(0.5 * b * x), &cfg)?
            }
        };
        Ok(0.25 * self.lambda_sq * integral)
    }

    /// `dθ/dω`, from the kernel derivative and the derivatives of `p_±`.
    pub fn dtheta_at(&self, omega: f64) -> Result<f64> {
        Ok(self.parts(omega)?.dtheta)
    }

    /// Perturbative criterion `β(θ(ω₁) + θ(ω₂))`, or `2λ²` at zero temperature.
    pub fn validity(&self) -> Result<f64> {
        let (w1, w2) = self.splittings();
        Ok(match self.beta {
            Beta::Infinite => 2.0 * self.lambda_sq,
            Beta::Finite(b) => b * (self.theta_at(w1)? + self.theta_at(w2)?).abs(),
        })
    }

    /// Level spacings `ω_z(1 + ε)`, `ω_z(1 − ε)`.
    pub fn splittings(&self) -> (f64, f64) {
        (self.omega_z * (1.0 + self.epsilon), self.omega_z * (1.0 - self.epsilon))
    }
}

fn coth(y: f64) -> f64 {
    if y.abs() < 1e-4 {
        1.0 / y + y / 3.0
    } else {
        1.0 / y.tanh()
    }
}

/// `C_±` on two qubits.
pub fn exchange_two_qubit(sign: f64) -> Operator {
    exchange_operator(2, 0, 1, sign)
}

/// Two-qubit weak-coupling state for any asymmetry `ε`.
pub fn mfg_weak_two_qubit(ctx: &WeakCouplingContext) -> Result<WeakResult> {
    let (w1, w2) = ctx.splittings();
    let beta = ctx.beta;
    let h = qubit_hamiltonian(ctx.omega_z, ctx.epsilon);
    let rho_g = gibbs_state(&h, beta, vec![2, 2])?;

    let a1 = ctx.parts(w1)?;
    let a2 = ctx.parts(w2)?;
    let sz = pauli_single(Axis::Z);

    let mut rho = rho_g.op().clone();
    rho.add_scaled(-a1.dtheta, &sz.kron(&qubit_thermal_state(w2, beta)));
    rho.add_scaled(-a2.dtheta, &qubit_thermal_state(w1, beta).kron(&sz));

    let h_of = |w: f64| {
        let (pp, pm) = thermal_populations(w, beta);
        pm - pp
    };
    let (h1, h2) = (h_of(w1), h_of(w2));
    let c_minus = (h2 * a1.theta + h1 * a2.theta) / (2.0 * ctx.omega_z);
    let (c_plus, branch) = if ctx.epsilon.abs() < EPSILON_SWITCH {
        let a = ctx.parts(ctx.omega_z)?;
        let (pp, pm) = ctx.populations();
        (
            2.0 * beta_pp(ctx.omega_z, beta) * a.theta - (pm - pp) * a.dtheta,
            WeakBranch::SmallAsymmetry,
        )
    } else {
        (
            -(h2 * a1.theta - h1 * a2.theta) / (2.0 * ctx.omega_z * ctx.epsilon),
            WeakBranch::Asymmetric,
        )
    };
    rho.add_scaled(c_plus, &exchange_two_qubit(1.0));
    rho.add_scaled(c_minus, &exchange_two_qubit(-1.0));

    Ok(WeakResult {
        rho: DensityMatrix::two_qubit(rho.hermitian_part())?,
        validity: ctx.validity()?,
        branch,
    })
}

/// `N`-qubit weak-coupling state for identical level spacings `ω_z`.
pub fn mfg_weak_n_qubit(
    n_qubits: usize,
    omega_z: f64,
    lambda_sq: f64,
    kernel: ReservoirKernel,
) -> Result<DensityMatrix> {
    if !(2..=MAX_QUBITS).contains(&n_qubits) {
        return Err(Error::InvalidParameter(format!(
            "qubit count must be in 2..={MAX_QUBITS}, got {n_qubits}"
        )));
    }
    let ctx = WeakCouplingContext::with_kernel(omega_z, 0.0, lambda_sq, kernel)?;
    let beta = ctx.beta;
    let a = ctx.parts(omega_z)?;
    let (pp, pm) = ctx.populations();
    let c_plus = 2.0 * beta_pp(omega_z, beta) * a.theta - (pm - pp) * a.dtheta;
    let c_minus = (pm - pp) * a.theta / omega_z;

    let tau = qubit_thermal_state(omega_z, beta);
    let id2 = Operator::identity(2);
    // ⊗ of τ over qubits not in `skip`, identity on `skip`
    let spectators = |skip: &[usize]| {
        let mut out = Operator::identity(1);
        for k in 0..n_qubits {
            out = out.kron(if skip.contains(&k) { &id2 } else { &tau });
        }
        out
    };

    let h = collective_spin(n_qubits, Axis::Z).scale(omega_z);
    let rho_g = gibbs_state(&h, beta, vec![2; n_qubits])?;
    let mut rho = rho_g.op().clone();
    for k in 0..n_qubits {
        rho.add_scaled(-a.dtheta, &(&pauli_on(n_qubits, k, Axis::Z) * &spectators(&[k])));
    }
    for m in 0..n_qubits {
        for k in m + 1..n_qubits {
            let phi = spectators(&[m, k]);
            let mut pair = exchange_operator(n_qubits, m, k, 1.0).scale(c_plus);
            pair.add_scaled(c_minus, &exchange_operator(n_qubits, m, k, -1.0));
            rho += &(&pair * &phi);
        }
    }
    DensityMatrix::new(rho.hermitian_part(), vec![2; n_qubits])
}

/// `max[0, (Q/4ω_z)(p₋ − p₊) − p₋p₊]`.
pub fn negativity_closed_form(reorganization: f64, omega_z: f64, beta: Beta) -> f64 {
    let (pp, pm) = thermal_populations(omega_z, beta);
    (reorganization / (4.0 * omega_z) * (pm - pp) - pm * pp).max(0.0)
}

/// Reorganization energy below which the closed-form negativity vanishes,
/// `Q_c = 4ω_z p₋p₊/(p₋ − p₊)`.
pub fn critical_reorganization(omega_z: f64, beta: Beta) -> f64 {
    let (pp, pm) = thermal_populations(omega_z, beta);
    4.0 * omega_z * pm * pp / (pm - pp)
}

/// `ρ_G + (Q/4ω_z)[(p₋ − p₊) C₋ + 2βω_z p₋p₊ C₊]`, the symmetric state when
/// `ω_z` is far below the reservoir peak.
pub fn small_splitting_state(reorganization: f64, omega_z: f64, beta: Beta) -> Result<DensityMatrix> {
    let h = qubit_hamiltonian(omega_z, 0.0);
    let rho_g = gibbs_state(&h, beta, vec![2, 2])?;
    let (pp, pm) = thermal_populations(omega_z, beta);
    let k = reorganization / (4.0 * omega_z);
    let mut rho = rho_g.op().clone();
    rho.add_scaled(k * (pm - pp), &exchange_two_qubit(-1.0));
    rho.add_scaled(k * 2.0 * omega_z * beta_pp(omega_z, beta), &exchange_two_qubit(1.0));
    DensityMatrix::two_qubit(rho)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{collective_sx, negativity};
    use crate::engine::{mfg_perturbative, EngineOptions};

    fn sd() -> SpectralDensity {
        SpectralDensity::peaked(1.0, 0.2, 0.02).unwrap()
    }

    #[test]
    fn populations_normalized_and_limits() {
        let (pp, pm) = thermal_populations(0.3, Beta::Finite(2.0));
        assert!((pp + pm - 1.0).abs() < 1e-15);
        assert!((pp - 0.5 * (1.0 / (0.3f64).cosh()) * (-0.3f64).exp()).abs() < 1e-15);
        assert_eq!(thermal_populations(0.3, Beta::Infinite), (0.0, 1.0));
        let (pp, _) = thermal_populations(1.0, Beta::Finite(1e4));
        assert_eq!(pp, 0.0);
    }

    #[test]
    fn zero_coupling_is_gibbs() {
        let ctx = WeakCouplingContext::new(0.02, 0.0, 0.0, Beta::Finite(100.0), sd()).unwrap();
        let r = mfg_weak_two_qubit(&ctx).unwrap();
        let g = gibbs_state(&qubit_hamiltonian(0.02, 0.0), Beta::Finite(100.0), vec![2, 2]).unwrap();
        assert!(r.rho.op().max_abs_diff(g.op()) < 1e-15);
        assert_eq!(negativity(&r.rho).unwrap(), 0.0);
    }

    #[test]
    fn matches_engine() {
        for beta in [Beta::Finite(60.0), Beta::Infinite] {
            for eps in [0.0, 0.3, 1.0] {
                let ctx = WeakCouplingContext::new(0.02, eps, 0.04, beta, sd()).unwrap();
                let weak = mfg_weak_two_qubit(&ctx).unwrap();
                let eng = mfg_perturbative(
                    &qubit_hamiltonian(0.02, eps),
                    &collective_sx(),
                    0.04,
                    beta,
                    &ctx.kernel,
                    &EngineOptions::default(),
                )
                .unwrap();
                let diff = weak.rho.op().max_abs_diff(eng.rho.op());
                assert!(diff < 1e-10, "β={beta:?} ε={eps}: {diff:e}");
                assert!((weak.validity - eng.validity).abs() < 1e-12 * (1.0 + eng.validity));
            }
        }
    }

    #[test]
    fn closed_form_negativity_limits() {
        assert!((negativity_closed_form(0.004, 0.02, Beta::Infinite) - 0.05).abs() < 1e-15);
        let qc = critical_reorganization(0.02, Beta::Finite(200.0));
        assert!(negativity_closed_form(0.99 * qc, 0.02, Beta::Finite(200.0)) == 0.0);
        assert!(negativity_closed_form(1.01 * qc, 0.02, Beta::Finite(200.0)) > 0.0);
    }

    #[test]
    fn small_splitting_state_negativity_matches_closed_form() {
        let beta = Beta::Finite(150.0);
        let q = 0.0009;
        let rho = small_splitting_state(q, 0.02, beta).unwrap();
        let n = negativity(&rho).unwrap();
        assert!((n - negativity_closed_form(q, 0.02, beta)).abs() < 1e-12);
    }
}
