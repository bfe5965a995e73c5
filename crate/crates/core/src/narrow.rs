//! Narrow-spectral-density regime: reaction-coordinate mapping, polaron frame
//! projected onto the RC vacuum, and the broadening correction computed with
//! the perturbative engine on the residual density.

use num_complex::Complex64;

use crate::algebra::{
    collective_sx, gibbs_state, hermitian_eigensystem, negativity, qubit_hamiltonian, Beta,
    DensityMatrix, Operator, EE, EG, GE, GG,
};
use crate::engine::{assemble, decompose_in, EngineOptions, KernelValues};
use crate::error::{Error, Result};
use crate::spectral::{
    lambda_eff_sq, ReservoirKernel, SingleMode, SpectralDensity, SpectralFamily,
};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EffectiveSystem {
    pub omega_z: f64,
    pub epsilon: f64,
    pub g: f64,
    /// RC frequency `Ω`.
    pub omega: f64,
    pub beta: Beta,
}

/// Eigenvectors of `H_S^eff` with their fixed labels and the mixing
/// coefficients of `S_x` between them.
#[derive(Clone, Debug)]
pub struct EigenLabels {
    /// `|1⟩ … |4⟩` in the product basis.
    pub states: [[f64; 4]; 4],
    pub energies: [f64; 4],
    pub mu_plus: f64,
    pub mu_minus: f64,
    pub kappa_plus: f64,
    pub kappa_minus: f64,
    pub a_plus: f64,
    pub a_minus: f64,
    pub b_plus: f64,
    pub b_minus: f64,
}

/// Positive root `r₊ = −b/a + √(1 + b²/a²)` of `r² + 2(b/a) r − 1 = 0`,
/// evaluated without cancellation; the other root is `−1/r₊`.
fn mixing_root(b: f64, a: f64) -> f64 {
    let s = a.hypot(b);
    if b >= 0.0 {
        a / (s + b)
    } else {
        (s - b) / a
    }
}

fn weight(r_self: f64, r_other: f64) -> f64 {
    ((1.0 + r_self * r_self) / 2.0).sqrt() * (1.0 - r_other) / (r_self - r_other)
}

impl EffectiveSystem {
    pub fn new(omega_z: f64, epsilon: f64, g: f64, omega: f64, beta: Beta) -> Result<Self> {
        if !(omega > 0.0 && omega.is_finite()) {
            return Err(Error::InvalidParameter(format!("Ω must be positive, got {omega}")));
        }
        if !(g >= 0.0 && g.is_finite()) {
            return Err(Error::InvalidParameter(format!("g must be non-negative, got {g}")));
        }
        if !(omega_z >= 0.0 && omega_z.is_finite()) {
            return Err(Error::InvalidParameter(format!("ω_z must be non-negative, got {omega_z}")));
        }
        if !(epsilon.abs() <= 1.0) {
            return Err(Error::InvalidParameter(format!("ε must lie in [−1, 1], got {epsilon}")));
        }
        beta.validate()?;
        Ok(Self {
            omega_z,
            epsilon,
            g,
            omega,
            beta,
        })
    }

    pub fn at_beta(&self, beta: Beta) -> Self {
        Self { beta, ..*self }
    }

    fn ratio_sq(&self) -> f64 {
        (self.g / self.omega).powi(2)
    }

    /// `ω̃_z = e^{−g²/2Ω²} ω_z`.
    pub fn omega_z_tilde(&self) -> f64 {
        (-0.5 * self.ratio_sq()).exp() * self.omega_z
    }

    /// `g̃ = g²/2Ω`.
    pub fn g_tilde(&self) -> f64 {
        self.g * self.g / (2.0 * self.omega)
    }

    /// `α = g² e^{g²/2Ω²} / (2 ω_z Ω)`.
    pub fn alpha(&self) -> f64 {
        self.g * self.g * (0.5 * self.ratio_sq()).exp() / (2.0 * self.omega_z * self.omega)
    }

    /// `χ_± = ½(1 ± e^{−2g²/Ω²})`.
    pub fn chi(&self) -> (f64, f64) {
        let e = (-2.0 * self.ratio_sq()).exp();
        (0.5 * (1.0 + e), 0.5 * (1.0 - e))
    }

    /// `e^{−g²/2Ω²} H_S − (g²/Ω) S_x²`.
    pub fn h_s_eff(&self) -> Operator {
        let sx = collective_sx();
        let mut h = qubit_hamiltonian(self.omega_z, self.epsilon).scale((-0.5 * self.ratio_sq()).exp());
        h.add_scaled(-self.g * self.g / self.omega, &(&sx * &sx));
        h
    }

    /// `H_S − (g²/Ω) S_x²`.
    pub fn h_s_direct(&self) -> Operator {
        let sx = collective_sx();
        let mut h = qubit_hamiltonian(self.omega_z, self.epsilon);
        h.add_scaled(-self.g * self.g / self.omega, &(&sx * &sx));
        h
    }

    /// Labelled eigensystem; needs `g > 0` so that the labels are defined.
    pub fn eigen_labels(&self) -> Result<EigenLabels> {
        let gt = self.g_tilde();
        if !(gt > 0.0) {
            return Err(Error::InvalidParameter(
                "eigenstate labels need g > 0".into(),
            ));
        }
        let wt = self.omega_z_tilde();
        let ewt = self.epsilon * wt;
        let mu_plus = mixing_root(wt, gt);
        let mu_minus = -1.0 / mu_plus;
        let kappa_plus = 1.0 / mixing_root(ewt, gt);
        let kappa_minus = -1.0 / kappa_plus;

        let s_small = gt.hypot(ewt);
        let s_big = gt.hypot(wt);
        let energies = [-gt - s_small, -gt + s_small, -gt - s_big, -gt + s_big];

        let pair = |k: f64, i: usize, j: usize| {
            let n = 1.0f64.hypot(k);
            let mut v = [0.0; 4];
            v[i] = 1.0 / n;
            v[j] = k / n;
            v
        };
        let states = [
            pair(kappa_plus, EG, GE),
            pair(kappa_minus, EG, GE),
            pair(mu_plus, GG, EE),
            pair(mu_minus, GG, EE),
        ];
        Ok(EigenLabels {
            states,
            energies,
            mu_plus,
            mu_minus,
            kappa_plus,
            kappa_minus,
            a_plus: weight(mu_plus, mu_minus),
            a_minus: weight(mu_minus, mu_plus),
            b_plus: weight(kappa_plus, kappa_minus),
            b_minus: weight(kappa_minus, kappa_plus),
        })
    }

    /// Gap between the two lowest levels of `H_S^eff`.
    pub fn energy_gap(&self) -> Result<f64> {
        let e = hermitian_eigensystem(&self.h_s_eff())?.values;
        Ok(e[1] - e[0])
    }

    /// `(1 − ε²)(ω_z²/Ω) / ((g²/Ω²) e^{g²/Ω²})`, valid for `α ≫ 1`.
    pub fn gap_asymptotic(&self) -> f64 {
        let r = self.ratio_sq();
        (1.0 - self.epsilon * self.epsilon) * self.omega_z * self.omega_z / self.omega / (r * r.exp())
    }
}

fn to_complex(v: &[f64; 4]) -> Vec<Complex64> {
    v.iter().map(|&x| Complex64::new(x, 0.0)).collect()
}

/// `L[O] = O + ½(3 + e^{−2r} − 4e^{−r/2}) S²OS² + ½(1 − e^{−2r}) S O S
/// − (1 − e^{−r/2})(S²O + OS²)` with `r = g²/Ω²`, `S = S_x`.
pub fn channel_l(op: &Operator, g: f64, omega: f64) -> Operator {
    let r = (g / omega).powi(2);
    let (e2, eh) = ((-2.0 * r).exp(), (-0.5 * r).exp());
    let s = collective_sx();
    let s2 = &s * &s;
    let mut out = op.clone();
    out.add_scaled(0.5 * (3.0 + e2 - 4.0 * eh), &(&(&s2 * op) * &s2));
    out.add_scaled(0.5 * (1.0 - e2), &(&(&s * op) * &s));
    out.add_scaled(-(1.0 - eh), &(&(&s2 * op) + &(op * &s2)));
    out
}

/// Kraus operators `K_n = (gⁿ/Ωⁿ√n!) e^{−g²S_x²/2Ω²} S_xⁿ`, `n < n_terms`.
pub fn kraus_operators(g: f64, omega: f64, n_terms: usize) -> Vec<Operator> {
    let s = collective_sx();
    let s2 = &s * &s;
    // S_x² is a projector
    let mut damp = Operator::identity(4);
    damp.add_scaled((-0.5 * (g / omega).powi(2)).exp() - 1.0, &s2);
    let mut out = Vec::with_capacity(n_terms);
    let mut power = Operator::identity(4);
    let mut coef = 1.0;
    for n in 0..n_terms {
        if n > 0 {
            power = &power * &s;
            coef *= g / omega / (n as f64).sqrt();
        }
        out.push((&damp * &power).scale(coef));
    }
    out
}

/// `Σ_n K_n O K_n`.
pub fn channel_l_series(op: &Operator, g: f64, omega: f64, n_terms: usize) -> Operator {
    let mut out = Operator::zeros(op.dim());
    for k in kraus_operators(g, omega, n_terms) {
        out += &(&(&k * op) * &k);
    }
    out
}

/// Zero-width state `L[e^{−βH_S^eff}]/Tr e^{−βH_S^eff}`.
pub fn mfg_zero_width(es: &EffectiveSystem) -> Result<DensityMatrix> {
    let rho_g = gibbs_state(&es.h_s_eff(), es.beta, vec![2, 2])?;
    DensityMatrix::two_qubit(channel_l(rho_g.op(), es.g, es.omega).hermitian_part())
}

/// Thermal state of the directly interacting qubits.
pub fn gibbs_direct(es: &EffectiveSystem) -> Result<DensityMatrix> {
    gibbs_state(&es.h_s_direct(), es.beta, vec![2, 2])
}

/// Coefficients of the symmetric (`ε = 0`) closed form.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NarrowCoefficients {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub c34: f64,
    pub p: [f64; 4],
    pub p_tilde: [f64; 4],
}

#[derive(Clone, Debug)]
pub struct NarrowResult {
    pub rho_zero_width: DensityMatrix,
    /// Traceless correction, `ρ = ρ_zero_width + λ_eff² δρ`.
    pub delta_rho: Operator,
    pub rho: DensityMatrix,
    pub lambda_eff_sq: f64,
    pub validity: f64,
    pub reliable: bool,
    /// Closed-form coefficients and the max-norm deviation of the closed-form
    /// state from `rho`, when `ε = 0`.
    pub analytic: Option<(NarrowCoefficients, f64)>,
}

/// Residual-bath kernel for width `γ` at fixed `Ω`; the single-mode limit
/// at `γ = 0`.
pub fn residual_kernel(es: &EffectiveSystem, gamma: f64) -> Result<ReservoirKernel> {
    if gamma == 0.0 {
        return ReservoirKernel::single_mode(SingleMode::normalized(es.omega, es.omega_z), es.beta);
    }
    let sd = SpectralDensity::with_rc_frequency(
        SpectralFamily::ReactionCoordinate,
        es.omega,
        gamma,
        es.omega_z,
    )?;
    ReservoirKernel::auto(sd, es.beta)
}

/// Narrow-width state for spectral width `γ` with `g`, `Ω` held fixed.
pub fn mfg_narrow(es: &EffectiveSystem, gamma: f64) -> Result<NarrowResult> {
    if !(gamma >= 0.0) {
        return Err(Error::InvalidParameter(format!("γ must be non-negative, got {gamma}")));
    }
    let kernel = residual_kernel(es, gamma)?;
    let lam = lambda_eff_sq(es.g, es.omega, gamma, es.omega_z);
    mfg_narrow_with(es, lam, &kernel, &EngineOptions::default())
}

/// Narrow-width state for a given `λ_eff²` and residual-bath kernel.
pub fn mfg_narrow_with(
    es: &EffectiveSystem,
    lambda_eff_sq: f64,
    kernel: &ReservoirKernel,
    opts: &EngineOptions,
) -> Result<NarrowResult> {
    let h = es.h_s_eff();
    let x = collective_sx();
    let eig = hermitian_eigensystem(&h)?;
    let gibbs = crate::algebra::gibbs_from_eigensystem(&eig, es.beta, vec![2, 2])?;
    let rho_zero_width =
        DensityMatrix::two_qubit(channel_l(gibbs.op(), es.g, es.omega).hermitian_part())?;

    let decomp = decompose_in(&eig, &x, opts.grouping_tol)?;
    let kv = if lambda_eff_sq == 0.0 {
        KernelValues {
            d: vec![0.0; decomp.len()],
            d_prime: vec![0.0; decomp.len()],
        }
    } else {
        KernelValues::evaluate(kernel, &decomp.frequencies)?
    };
    let polaron = assemble(gibbs, &x, &decomp, lambda_eff_sq, es.beta, &kv, opts)?;
    let rho = DensityMatrix::two_qubit(channel_l(polaron.rho.op(), es.g, es.omega).hermitian_part())?;

    let delta_rho = if lambda_eff_sq > 0.0 {
        (rho.op() - rho_zero_width.op()).scale(1.0 / lambda_eff_sq)
    } else {
        Operator::zeros(4)
    };

    let analytic = if es.epsilon == 0.0 && es.g > 0.0 {
        let (coeffs, state) = narrow_closed_form(es, lambda_eff_sq, kernel)?;
        Some((coeffs, state.max_abs_diff(rho.op())))
    } else {
        None
    };

    Ok(NarrowResult {
        rho_zero_width,
        delta_rho,
        rho,
        lambda_eff_sq,
        validity: polaron.validity,
        reliable: polaron.reliable,
        analytic,
    })
}

/// Closed-form narrow-width state at `ε = 0`, built from the labelled
/// eigensystem and the `C` coefficients.
pub fn narrow_closed_form(
    es: &EffectiveSystem,
    lambda_eff_sq: f64,
    kernel: &ReservoirKernel,
) -> Result<(NarrowCoefficients, Operator)> {
    if es.epsilon != 0.0 {
        return Err(Error::InvalidParameter("closed form needs ε = 0".into()));
    }
    let lb = es.eigen_labels()?;
    let (ap, am) = (lb.a_plus, lb.a_minus);
    let e = lb.energies;
    let p = crate::algebra::boltzmann_weights(&e, es.beta);
    let (p1, p3, p4) = (p[0], p[2], p[3]);
    let w1 = e[0] - e[2];
    let w2 = e[0] - e[3];

    let (d1, d1p, dm1, dm1p, d2, d2p, dm2, dm2p) = if lambda_eff_sq == 0.0 {
        (0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0)
    } else {
        let (d1, d1p) = kernel.evaluate(w1)?;
        let (dm1, dm1p) = kernel.evaluate(-w1)?;
        let (d2, d2p) = kernel.evaluate(w2)?;
        let (dm2, dm2p) = kernel.evaluate(-w2)?;
        (d1, d1p, dm1, dm1p, d2, d2p, dm2, dm2p)
    };
    let b = match es.beta {
        Beta::Finite(b) => b,
        Beta::Infinite => 0.0,
    };
    let l = lambda_eff_sq;
    let flow1 = p1 * d1p - p3 * dm1p;
    let flow2 = p1 * d2p - p4 * dm2p;
    let c1 = l * (b * ap * ap * p1 * d1 + b * am * am * p1 * d2 - ap * ap * flow1 - am * am * flow2);
    let c3 = l * (b * ap * ap * p3 * dm1 + ap * ap * flow1);
    let c4 = l * (b * am * am * p4 * dm2 + am * am * flow2);
    let c34 = l * ap * am / (w1 - w2) * (p1 * d1 + p3 * dm1 - p1 * d2 - p4 * dm2);
    let cs = [c1, 0.0, c3, c4];
    let keep = 1.0 - c1 - c3 - c4;
    let pt: [f64; 4] = std::array::from_fn(|k| keep * p[k] + cs[k]);

    let (chp, chm) = es.chi();
    let shrink = (-0.5 * (es.g / es.omega).powi(2)).exp();
    let k1 = to_complex(&lb.states[0]);
    let k2 = to_complex(&lb.states[1]);
    let v: Vec<Complex64> = (0..4)
        .map(|i| Complex64::new(ap * lb.states[2][i] + am * lb.states[3][i], 0.0))
        .collect();
    let vt: Vec<Complex64> = (0..4)
        .map(|i| Complex64::new(am * lb.states[2][i] - ap * lb.states[3][i], 0.0))
        .collect();
    let x = ap * ap * pt[2] + am * am * pt[3] + 2.0 * ap * am * c34;

    let mut rho = Operator::outer(&k1, &k1).scale(pt[0] * chp + x * chm);
    rho.add_scaled(x * chp + pt[0] * chm, &Operator::outer(&v, &v));
    rho.add_scaled(pt[1], &Operator::outer(&k2, &k2));
    rho.add_scaled(am * am * pt[2] + ap * ap * pt[3] - 2.0 * ap * am * c34, &Operator::outer(&vt, &vt));
    rho.add_scaled(
        shrink * (ap * am * (pt[2] - pt[3]) - (ap * ap - am * am) * c34),
        &(&Operator::outer(&v, &vt) + &Operator::outer(&vt, &v)),
    );
    Ok((
        NarrowCoefficients {
            c1,
            c2: 0.0,
            c3,
            c4,
            c34,
            p: [p[0], p[1], p[2], p[3]],
            p_tilde: pt,
        },
        rho,
    ))
}

/// `∂N/∂γ²` at `γ = 0` with `g`, `Ω` fixed, by a forward difference of
/// step `h` in `γ²`.
pub fn dn_dgamma2(es: &EffectiveSystem, h: f64) -> Result<f64> {
    if !(h > 0.0) {
        return Err(Error::InvalidParameter(format!("step must be positive, got {h}")));
    }
    let n0 = negativity(&mfg_zero_width(es)?)?;
    let n1 = negativity(&mfg_narrow(es, h.sqrt())?.rho)?;
    Ok((n1 - n0) / h)
}
