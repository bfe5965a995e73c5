//! Reservoir spectral densities, reaction-coordinate parameters and the
//! reservoir kernel
//!
//! ```text
//! D_β(ω) = P∫_0^∞ J(x) [x + ω coth(βx/2)] / (x² − ω²) dx
//! ```
//!
//! evaluated either by adaptive principal-value quadrature (any `β`) or, at
//! zero temperature, by residues.
//!
//! The zero-temperature residue route closes the contour in the upper half
//! plane. Because `coth(βz/2)` has poles at the Matsubara frequencies
//! `z = 2πik/β`, the `β → ∞` limit leaves a line integral along the positive
//! imaginary axis in addition to the residues at the poles of `J`:
//!
//! ```text
//! D_∞(ω) = −2π Im R₊(ω) − ω ∫_0^∞ c ν³ / (P(iν) (ν² + ω²)) dν,   J(x) = c x³ / P(x)
//! ```
//!
//! Dropping the second term reproduces only the part of `D_∞` that is even in
//! `ω`; the odd part is off by a few parts in 10⁴ at typical parameters.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::algebra::Beta;
use crate::error::{Error, Result};
use crate::quad::{self, integrate, QuadConfig, Segment};

/// A real spectral density, odd-extended to the whole real line.
pub trait Spectrum: Send + Sync {
    /// `J(x)` for `x ≥ 0`, continued as `J(−x) = −J(x)`.
    fn odd_value(&self, x: f64) -> f64;

    /// `dJ/dx` of the odd extension.
    fn odd_derivative(&self, x: f64) -> f64 {
        let h = 1e-6 * (1.0 + x.abs());
        (self.odd_value(x + h) - self.odd_value(x - h)) / (2.0 * h)
    }

    /// Positive frequencies where the density has structure (peaks, shoulders).
    fn features(&self) -> Vec<f64>;

    /// Frequency beyond which the `x = 1/u` tail map is used.
    fn tail_start(&self) -> f64;

    /// Magnitude of `∫ J(x)/x dx`, used to scale absolute tolerances.
    fn scale(&self) -> f64;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpectralFamily {
    /// `J(ω) = 32 ω_z (ω₀²+γ²) γ³ ω³ / (π [(ω−ω₀)²+γ²]² [(ω+ω₀)²+γ²]²)`,
    /// normalized so that `∫ J(ω)/ω dω = ω_z`.
    Peaked,
    /// Residual density after the reaction-coordinate mapping of [`Peaked`]:
    /// `J_RC(ω) = 8 ω_z γ ω³ / (π [γ⁴ + 2γ²(7ω² + ω₀²) + (ω² − ω₀²)²])`,
    /// normalized so that `∫ J_RC(ω)/ω dω → ω_z` as `γ → 0`.
    ///
    /// [`Peaked`]: SpectralFamily::Peaked
    ReactionCoordinate,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralDensity {
    pub family: SpectralFamily,
    pub omega0: f64,
    pub gamma: f64,
    pub omega_z: f64,
}

impl SpectralDensity {
    pub fn new(family: SpectralFamily, omega0: f64, gamma: f64, omega_z: f64) -> Result<Self> {
        if !(omega0 > 0.0 && gamma > 0.0 && omega_z > 0.0)
            || !(omega0.is_finite() && gamma.is_finite() && omega_z.is_finite())
        {
            return Err(Error::InvalidParameter(format!(
                "spectral density needs positive finite ω₀, γ, ω_z (got {omega0}, {gamma}, {omega_z})"
            )));
        }
        Ok(Self {
            family,
            omega0,
            gamma,
            omega_z,
        })
    }

    pub fn peaked(omega0: f64, gamma: f64, omega_z: f64) -> Result<Self> {
        Self::new(SpectralFamily::Peaked, omega0, gamma, omega_z)
    }

    pub fn reaction_coordinate(omega0: f64, gamma: f64, omega_z: f64) -> Result<Self> {
        Self::new(SpectralFamily::ReactionCoordinate, omega0, gamma, omega_z)
    }

    /// Density whose reaction coordinate has frequency `rc_frequency`, i.e.
    /// `ω₀ = √(Ω² − 5γ²)`; needs `γ < Ω/√5`.
    pub fn with_rc_frequency(
        family: SpectralFamily,
        rc_frequency: f64,
        gamma: f64,
        omega_z: f64,
    ) -> Result<Self> {
        let w0_sq = rc_frequency * rc_frequency - 5.0 * gamma * gamma;
        if !(w0_sq > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "γ/Ω = {} exceeds 1/√5 at fixed Ω",
                gamma / rc_frequency
            )));
        }
        Self::new(family, w0_sq.sqrt(), gamma, omega_z)
    }

    /// The residual density left after the reaction-coordinate mapping.
    pub fn rc_density(&self) -> Self {
        Self {
            family: SpectralFamily::ReactionCoordinate,
            ..*self
        }
    }

    /// Reaction-coordinate frequency `Ω = √(5γ² + ω₀²)`.
    pub fn rc_frequency(&self) -> f64 {
        (5.0 * self.gamma * self.gamma + self.omega0 * self.omega0).sqrt()
    }

    /// `J(ω)`, defined for `ω ≥ 0`.
    pub fn value(&self, omega: f64) -> Result<f64> {
        if !(omega >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "spectral density evaluated at negative frequency {omega}"
            )));
        }
        Ok(self.odd_value(omega))
    }

    fn prefactor(&self) -> f64 {
        let (w0, g, wz) = (self.omega0, self.gamma, self.omega_z);
        match self.family {
            SpectralFamily::Peaked => 32.0 * wz * (w0 * w0 + g * g) * g.powi(3) / PI,
            SpectralFamily::ReactionCoordinate => 8.0 * wz * g / PI,
        }
    }

    /// Denominator `P(x)` in `J = c x³ / P(x)` and its derivative.
    fn denominator(&self, x: f64) -> (f64, f64) {
        let (w0, g) = (self.omega0, self.gamma);
        match self.family {
            SpectralFamily::Peaked => {
                let a = x * x + w0 * w0 + g * g;
                let q = a * a - 4.0 * w0 * w0 * x * x;
                let dq = 4.0 * x * a - 8.0 * w0 * w0 * x;
                (q * q, 2.0 * q * dq)
            }
            SpectralFamily::ReactionCoordinate => {
                let d = x * x - w0 * w0;
                let p = g.powi(4) + 2.0 * g * g * (7.0 * x * x + w0 * w0) + d * d;
                (p, 28.0 * g * g * x + 4.0 * x * d)
            }
        }
    }

    /// `P(iν)`, real because `P` is even.
    fn denominator_imaginary(&self, nu: f64) -> f64 {
        let (w0, g) = (self.omega0, self.gamma);
        let s = nu * nu;
        match self.family {
            SpectralFamily::Peaked => {
                let a = w0 * w0 + g * g;
                let q = (a - s) * (a - s) + 4.0 * w0 * w0 * s;
                q * q
            }
            SpectralFamily::ReactionCoordinate => {
                g.powi(4) + 2.0 * g * g * (w0 * w0 - 7.0 * s) + (s + w0 * w0).powi(2)
            }
        }
    }

    /// Whether the zero-temperature residue form applies.
    pub fn residue_available(&self) -> bool {
        match self.family {
            SpectralFamily::Peaked => true,
            SpectralFamily::ReactionCoordinate => 7.0 * self.gamma * self.gamma < self.omega0 * self.omega0,
        }
    }
}

impl Spectrum for SpectralDensity {
    fn odd_value(&self, x: f64) -> f64 {
        let (p, _) = self.denominator(x);
        self.prefactor() * x * x * x / p
    }

    fn odd_derivative(&self, x: f64) -> f64 {
        let (p, dp) = self.denominator(x);
        self.prefactor() * x * x * (3.0 * p - x * dp) / (p * p)
    }

    fn features(&self) -> Vec<f64> {
        let (w0, g) = (self.omega0, self.gamma);
        let mut pts: Vec<f64> = [-8.0, -3.0, -1.0, 0.0, 1.0, 3.0, 8.0]
            .iter()
            .map(|k| w0 + k * g)
            .filter(|&x| x > 0.0)
            .collect();
        pts.push(0.5 * w0);
        pts.sort_by(f64::total_cmp);
        pts
    }

    fn tail_start(&self) -> f64 {
        self.omega0 + 50.0 * self.gamma
    }

    fn scale(&self) -> f64 {
        self.omega_z
    }
}

/// Reaction-coordinate quantities derived from a [`SpectralFamily::Peaked`]
/// density at dimensionless coupling `λ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RcParams {
    /// RC frequency `Ω`.
    pub omega: f64,
    /// Qubit–RC coupling `g`.
    pub g: f64,
    /// RC–residual-bath coupling `λ_RC²`.
    pub lambda_rc_sq: f64,
    /// Effective polaron-frame coupling `λ_eff²`.
    pub lambda_eff_sq: f64,
    /// Reorganization energy `Q = λ² ω_z`.
    pub reorganization: f64,
}

pub fn rc_params(sd: &SpectralDensity, lambda: f64) -> Result<RcParams> {
    if sd.family != SpectralFamily::Peaked {
        return Err(Error::InvalidParameter(
            "reaction-coordinate parameters are defined for the peaked family".into(),
        ));
    }
    let (g2, wz) = (sd.gamma * sd.gamma, sd.omega_z);
    let omega = sd.rc_frequency();
    let g = lambda * (wz * (omega * omega - 4.0 * g2) / omega).sqrt();
    let lambda_rc_sq = 2.0 * PI * g2 / (wz * omega);
    Ok(RcParams {
        omega,
        g,
        lambda_rc_sq,
        lambda_eff_sq: 8.0 * PI * g * g * g2 / (wz * omega.powi(3)),
        reorganization: lambda * lambda * wz,
    })
}

/// `λ²` that gives coupling `g` to an RC of frequency `Ω` at width `γ`.
pub fn lambda_sq_for_coupling(g: f64, omega: f64, gamma: f64, omega_z: f64) -> f64 {
    g * g * omega / (omega_z * (omega * omega - 4.0 * gamma * gamma))
}

/// Reorganization energy `Q = g²Ω/(Ω² − 4γ²)` at fixed `g`, `Ω`.
pub fn reorganization_at_fixed_coupling(g: f64, omega: f64, gamma: f64) -> f64 {
    g * g * omega / (omega * omega - 4.0 * gamma * gamma)
}

/// `λ_eff² = 8π g² γ² / (ω_z Ω³)`.
pub fn lambda_eff_sq(g: f64, omega: f64, gamma: f64, omega_z: f64) -> f64 {
    8.0 * PI * g * g * gamma * gamma / (omega_z * omega.powi(3))
}

fn default_quad(spec: &dyn Spectrum) -> QuadConfig {
    QuadConfig {
        abs_tol: 1e-12 * spec.scale(),
        rel_tol: 1e-9,
        max_panels: 1 << 20,
    }
}

/// `∫_0^∞ x^k J(x) dx` by quadrature.
pub fn moment(spec: &dyn Spectrum, k: i32) -> Result<f64> {
    let cfg = QuadConfig {
        abs_tol: 0.0,
        rel_tol: 1e-12,
        max_panels: 1 << 20,
    };
    let f = |x: f64| if x == 0.0 { 0.0 } else { x.powi(k) * spec.odd_value(x) };
    Ok(quad::integrate_to_infinity(f, 0.0, spec.tail_start(), &spec.features(), &cfg)?.value)
}

#[inline]
fn coth(y: f64) -> f64 {
    if y.abs() < 1e-4 {
        1.0 / y + y / 3.0
    } else if y.abs() > 20.0 {
        y.signum() * (1.0 + 2.0 * (-2.0 * y.abs()).exp())
    } else {
        1.0 / y.tanh()
    }
}

/// `1 + coth(y)`, accurate for large negative `y`.
#[inline]
fn one_plus_coth(y: f64) -> f64 {
    if y.abs() < 1e-4 {
        1.0 + 1.0 / y + y / 3.0
    } else {
        -2.0 / (-2.0 * y).exp_m1()
    }
}

/// `csch²(y)`.
#[inline]
fn csch_sq(y: f64) -> f64 {
    if y.abs() < 1e-4 {
        1.0 / (y * y) - 1.0 / 3.0
    } else {
        let e = (-2.0 * y.abs()).exp();
        4.0 * e / ((1.0 - e) * (1.0 - e))
    }
}

/// Principal value `P∫_0^∞ J(x) N(x) / (x² − a²) dx` for `a ≥ 0`.
///
/// The pole at `x = a` is removed analytically: the window `[0, 2a]` is
/// integrated as `∫_0^a [f(a+t) + f(a−t)] dt`.
pub(crate) fn pv_half_line(
    spec: &dyn Spectrum,
    a: f64,
    numerator: impl Fn(f64) -> f64,
    cfg: &QuadConfig,
) -> Result<f64> {
    let f = |x: f64| {
        if x <= 0.0 {
            return 0.0;
        }
        spec.odd_value(x) * numerator(x) / ((x - a) * (x + a))
    };
    let features = spec.features();
    let tail = spec.tail_start().max(2.0 * a);
    let mut segments = Vec::with_capacity(4);
    if a > 0.0 {
        let cuts: Vec<f64> = features
            .iter()
            .map(|&x| (x - a).abs())
            .filter(|&t| t > 0.0 && t < a)
            .collect();
        segments.push((Segment::Symmetric { center: a, lo: 0.0, hi: a }, cuts));
    }
    segments.push((Segment::Interval { lo: 2.0 * a, hi: tail }, features.clone()));
    segments.push((Segment::UpperTail { start: tail }, quad::tail_cuts(tail, &features)));
    Ok(integrate(f, &segments, cfg)?.value)
}

/// `P∫_{−∞}^{∞} h(x) / (x − c) dx` for an integrand `h` that vanishes on
/// `x < 0` when `positive_only` is set.
pub(crate) fn pv_full_line(
    spec: &dyn Spectrum,
    c: f64,
    h: impl Fn(f64) -> f64,
    positive_only: bool,
    cfg: &QuadConfig,
) -> Result<f64> {
    let f = |x: f64| {
        if positive_only && x < 0.0 {
            0.0
        } else {
            h(x) / (x - c)
        }
    };
    let pos = spec.features();
    let neg: Vec<f64> = pos.iter().map(|x| -x).collect();
    let reach = spec.tail_start().max(2.0 * c.abs()).max(f64::MIN_POSITIVE);
    let all_cuts: Vec<f64> = neg.iter().chain(std::iter::once(&0.0)).chain(pos.iter()).copied().collect();

    let mut segments = Vec::new();
    // window [c − |c|, c + |c|] has 0 as one endpoint
    let (lo_edge, hi_edge) = if c == 0.0 {
        (0.0, 0.0)
    } else {
        let cuts: Vec<f64> = all_cuts
            .iter()
            .map(|&x| (x - c).abs())
            .filter(|&t| t > 0.0 && t < c.abs())
            .collect();
        if !(positive_only && c < 0.0) {
            segments.push((
                Segment::Symmetric {
                    center: c,
                    lo: 0.0,
                    hi: c.abs(),
                },
                cuts,
            ));
        }
        (c - c.abs(), c + c.abs())
    };
    let upper = reach.max(hi_edge);
    segments.push((Segment::Interval { lo: hi_edge, hi: upper }, pos.clone()));
    segments.push((Segment::UpperTail { start: upper }, quad::tail_cuts(upper, &pos)));
    if !positive_only {
        let lower = (-reach).min(lo_edge);
        segments.push((Segment::Interval { lo: lower, hi: lo_edge }, neg.clone()));
        let neg_tail_cuts: Vec<f64> = neg.iter().filter(|&&x| x < lower).map(|&x| 1.0 / x).collect();
        segments.push((Segment::LowerTail { end: lower }, neg_tail_cuts));
    }
    Ok(integrate(f, &segments, cfg)?.value)
}

/// `D_β(ω)` by principal-value quadrature on `(0, ∞)`.
pub fn d_beta_quadrature(spec: &dyn Spectrum, beta: Beta, omega: f64, cfg: &QuadConfig) -> Result<f64> {
    beta.validate()?;
    let a = omega.abs();
    match beta {
        Beta::Infinite => {
            if omega > 0.0 {
                pv_half_line(spec, a, |x| x + a, cfg)
            } else {
                // no pole: J(x)/(x + |ω|)
                let f = |x: f64| if x <= 0.0 { 0.0 } else { spec.odd_value(x) / (x + a) };
                Ok(quad::integrate_to_infinity(f, 0.0, spec.tail_start(), &spec.features(), cfg)?.value)
            }
        }
        Beta::Finite(b) => pv_half_line(spec, a, |x| x + omega * coth(0.5 * b * x), cfg),
    }
}

/// `dD_β/dω` by quadrature. Uses the full-line form
/// `D_β(ω) = ½ P∫ K(x)/(x − ω) dx` with `K(x) = J(x)(1 + coth(βx/2))`
/// (odd `J`), so that the derivative is the same transform applied to `K′`.
pub fn d_beta_derivative_quadrature(
    spec: &dyn Spectrum,
    beta: Beta,
    omega: f64,
    cfg: &QuadConfig,
) -> Result<f64> {
    beta.validate()?;
    let value = match beta {
        Beta::Infinite => pv_full_line(spec, omega, |x| 2.0 * spec.odd_derivative(x), true, cfg)?,
        Beta::Finite(b) => {
            let k_prime = |x: f64| {
                if x == 0.0 {
                    return 0.0;
                }
                let y = 0.5 * b * x;
                spec.odd_derivative(x) * one_plus_coth(y) - spec.odd_value(x) * 0.5 * b * csch_sq(y)
            };
            pv_full_line(spec, omega, k_prime, false, cfg)?
        }
    };
    Ok(0.5 * value)
}

/// Zero-temperature `D_∞(ω)` and `dD_∞/dω` from residues plus the
/// imaginary-axis contribution.
pub fn d_infty_residue(sd: &SpectralDensity, omega: f64) -> Result<(f64, f64)> {
    if !sd.residue_available() {
        return Err(Error::ResidueUnavailable(format!(
            "reaction-coordinate density needs 7γ² < ω₀² (γ = {}, ω₀ = {}); use quadrature",
            sd.gamma, sd.omega0
        )));
    }
    let (w0, g, wz) = (sd.omega0, sd.gamma, sd.omega_z);
    let (r, dr) = match sd.family {
        SpectralFamily::Peaked => {
            let zp = Complex64::new(w0, g);
            let zm = Complex64::new(-w0, g);
            let k = (zp * zp + zm * zm) / (zp * zp - zm * zm);
            let pref = wz * (w0 * w0 + g * g) * g / (PI * w0 * w0);
            let d = zp - omega;
            (
                (zp / (2.0 * d * d) + k / d) * pref,
                (zp / (d * d * d) + k / (d * d)) * pref,
            )
        }
        SpectralFamily::ReactionCoordinate => {
            let inner = Complex64::new(w0 * w0 - 7.0 * g * g, 4.0 * g * (w0 * w0 - 3.0 * g * g).sqrt());
            let zp = inner.sqrt();
            let zm = -zp.conj();
            let pref = zp * zp * (4.0 * wz * g / PI) / (zp * zp - zm * zm);
            let d = zp - omega;
            (pref / d, pref / (d * d))
        }
    };
    let (axis, daxis) = imaginary_axis_term(sd, omega)?;
    Ok((-2.0 * PI * r.im + axis, -2.0 * PI * dr.im + daxis))
}

/// `−ω c ∫_0^∞ ν³ / (P(iν)(ν² + ω²)) dν` and its `ω` derivative.
fn imaginary_axis_term(sd: &SpectralDensity, omega: f64) -> Result<(f64, f64)> {
    if omega == 0.0 {
        // derivative: −c ∫ ν / P(iν) dν
        let c = sd.prefactor();
        let cfg = axis_quad(sd);
        let i1 = quad::integrate_to_infinity(
            |nu| nu / sd.denominator_imaginary(nu),
            0.0,
            sd.tail_start(),
            &sd.features(),
            &cfg,
        )?;
        return Ok((0.0, -c * i1.value));
    }
    let c = sd.prefactor();
    let w2 = omega * omega;
    let mut cuts = sd.features();
    cuts.push(omega.abs());
    let cfg = axis_quad(sd);
    let i1 = quad::integrate_to_infinity(
        |nu| nu.powi(3) / (sd.denominator_imaginary(nu) * (nu * nu + w2)),
        0.0,
        sd.tail_start(),
        &cuts,
        &cfg,
    )?;
    let i2 = quad::integrate_to_infinity(
        |nu| nu.powi(3) / (sd.denominator_imaginary(nu) * (nu * nu + w2).powi(2)),
        0.0,
        sd.tail_start(),
        &cuts,
        &cfg,
    )?;
    Ok((-omega * c * i1.value, -c * i1.value + 2.0 * w2 * c * i2.value))
}

fn axis_quad(sd: &SpectralDensity) -> QuadConfig {
    QuadConfig {
        abs_tol: 1e-15 * sd.omega_z,
        rel_tol: 1e-12,
        max_panels: 1 << 16,
    }
}

/// `P∫_{−∞}^{∞} J(x)/(x − ω) dx` with the odd extension of `J`.
pub fn hilbert_transform(spec: &dyn Spectrum, omega: f64) -> Result<f64> {
    let cfg = QuadConfig {
        abs_tol: 1e-13 * spec.scale(),
        rel_tol: 1e-11,
        max_panels: 1 << 20,
    };
    pv_full_line(spec, omega, |x| spec.odd_value(x), false, &cfg)
}

/// `λ_RC² J_RC(ω) = (g²/λ²) 2π J(ω) / ([P∫ J(x)/(x−ω) dx]² + π² J(ω)²)`
/// computed from a peaked density.
pub fn rc_density_from_hilbert(sd: &SpectralDensity, omega: f64) -> Result<f64> {
    if sd.family != SpectralFamily::Peaked {
        return Err(Error::InvalidParameter(
            "the RC mapping starts from the peaked family".into(),
        ));
    }
    let big_omega = sd.rc_frequency();
    let g_over_lambda_sq =
        sd.omega_z * (big_omega * big_omega - 4.0 * sd.gamma * sd.gamma) / big_omega;
    let j = sd.value(omega)?;
    let h = hilbert_transform(sd, omega)?;
    Ok(g_over_lambda_sq * 2.0 * PI * j / (h * h + PI * PI * j * j))
}

/// Closed-form `λ_RC² J_RC(ω)`.
pub fn rc_density_closed_form(sd: &SpectralDensity, omega: f64) -> Result<f64> {
    let lambda_rc_sq = 2.0 * PI * sd.gamma * sd.gamma / (sd.omega_z * sd.rc_frequency());
    Ok(lambda_rc_sq * sd.rc_density().value(omega)?)
}

/// Zero-width limit `J(ω) = w δ(ω − ω₀)`; `w = ω_z ω₀` reproduces the
/// `∫ J/ω = ω_z` normalization.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SingleMode {
    pub frequency: f64,
    pub weight: f64,
}

impl SingleMode {
    pub fn normalized(frequency: f64, omega_z: f64) -> Self {
        Self {
            frequency,
            weight: omega_z * frequency,
        }
    }

    fn d(&self, beta: Beta, omega: f64) -> (f64, f64) {
        let w0 = self.frequency;
        let c = match beta {
            Beta::Infinite => 1.0,
            Beta::Finite(b) => coth(0.5 * b * w0),
        };
        let num = w0 + omega * c;
        let den = w0 * w0 - omega * omega;
        (
            self.weight * num / den,
            self.weight * (c * den + 2.0 * omega * num) / (den * den),
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelMethod {
    Quadrature,
    ResidueZeroT,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum KernelSource {
    Density(SpectralDensity),
    SingleMode(SingleMode),
}

/// Anything that supplies `D_β(ω)` and `dD_β/dω` to the perturbative engine.
pub trait Kernel: Sync {
    fn d(&self, omega: f64) -> Result<f64>;
    fn d_prime(&self, omega: f64) -> Result<f64>;
}

/// Evaluator of `D_β` for one reservoir at one temperature.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReservoirKernel {
    source: KernelSource,
    beta: Beta,
    method: KernelMethod,
    quad: QuadConfig,
}

impl ReservoirKernel {
    pub fn quadrature(sd: SpectralDensity, beta: Beta) -> Result<Self> {
        beta.validate()?;
        Ok(Self {
            source: KernelSource::Density(sd),
            beta,
            method: KernelMethod::Quadrature,
            quad: default_quad(&sd),
        })
    }

    /// Zero-temperature residue evaluation; rejects densities outside its domain.
    pub fn residue(sd: SpectralDensity) -> Result<Self> {
        if !sd.residue_available() {
            return Err(Error::ResidueUnavailable(format!(
                "reaction-coordinate density needs 7γ² < ω₀² (γ = {}, ω₀ = {}); use quadrature",
                sd.gamma, sd.omega0
            )));
        }
        Ok(Self {
            source: KernelSource::Density(sd),
            beta: Beta::Infinite,
            method: KernelMethod::ResidueZeroT,
            quad: default_quad(&sd),
        })
    }

    /// Residues at zero temperature when available, quadrature otherwise.
    pub fn auto(sd: SpectralDensity, beta: Beta) -> Result<Self> {
        if beta.is_infinite() && sd.residue_available() {
            Self::residue(sd)
        } else {
            Self::quadrature(sd, beta)
        }
    }

    /// Exact kernel of a single reservoir mode.
    pub fn single_mode(mode: SingleMode, beta: Beta) -> Result<Self> {
        beta.validate()?;
        Ok(Self {
            source: KernelSource::SingleMode(mode),
            beta,
            method: KernelMethod::Quadrature,
            quad: QuadConfig::default(),
        })
    }

    pub fn with_quad_config(mut self, quad: QuadConfig) -> Self {
        self.quad = quad;
        self
    }

    pub fn source(&self) -> &KernelSource {
        &self.source
    }

    pub fn beta(&self) -> Beta {
        self.beta
    }

    pub fn method(&self) -> KernelMethod {
        self.method
    }

    pub fn density(&self) -> Option<&SpectralDensity> {
        match &self.source {
            KernelSource::Density(sd) => Some(sd),
            KernelSource::SingleMode(_) => None,
        }
    }

    /// Same reservoir at another temperature (keeps residues only at `β = ∞`).
    pub fn at_beta(&self, beta: Beta) -> Result<Self> {
        match self.source {
            KernelSource::Density(sd) => match self.method {
                KernelMethod::ResidueZeroT if beta.is_infinite() => Ok(*self),
                _ => Ok(Self::quadrature(sd, beta)?.with_quad_config(self.quad)),
            },
            KernelSource::SingleMode(m) => Self::single_mode(m, beta),
        }
    }

    /// `D_β(ω)` and `dD_β/dω` together.
    pub fn evaluate(&self, omega: f64) -> Result<(f64, f64)> {
        match (&self.source, self.method) {
            (KernelSource::SingleMode(m), _) => Ok(m.d(self.beta, omega)),
            (KernelSource::Density(sd), KernelMethod::ResidueZeroT) => d_infty_residue(sd, omega),
            (KernelSource::Density(sd), KernelMethod::Quadrature) => Ok((
                d_beta_quadrature(sd, self.beta, omega, &self.quad)?,
                d_beta_derivative_quadrature(sd, self.beta, omega, &self.quad)?,
            )),
        }
    }
}

impl Kernel for ReservoirKernel {
    fn d(&self, omega: f64) -> Result<f64> {
        match (&self.source, self.method) {
            (KernelSource::SingleMode(m), _) => Ok(m.d(self.beta, omega).0),
            (KernelSource::Density(sd), KernelMethod::ResidueZeroT) => Ok(d_infty_residue(sd, omega)?.0),
            (KernelSource::Density(sd), KernelMethod::Quadrature) => {
                d_beta_quadrature(sd, self.beta, omega, &self.quad)
            }
        }
    }

    fn d_prime(&self, omega: f64) -> Result<f64> {
        match (&self.source, self.method) {
            (KernelSource::SingleMode(m), _) => Ok(m.d(self.beta, omega).1),
            (KernelSource::Density(sd), KernelMethod::ResidueZeroT) => Ok(d_infty_residue(sd, omega)?.1),
            (KernelSource::Density(sd), KernelMethod::Quadrature) => {
                d_beta_derivative_quadrature(sd, self.beta, omega, &self.quad)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sd() -> SpectralDensity {
        SpectralDensity::peaked(1.0, 0.2, 0.02).unwrap()
    }

    #[test]
    fn density_vanishes_at_zero_and_rejects_negative() {
        assert_eq!(sd().value(0.0).unwrap(), 0.0);
        assert!(sd().value(-0.1).is_err());
        assert!(sd().value(0.7).unwrap() > 0.0);
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(SpectralDensity::peaked(1.0, 0.0, 0.02).is_err());
        assert!(SpectralDensity::peaked(-1.0, 0.1, 0.02).is_err());
        assert!(SpectralDensity::with_rc_frequency(SpectralFamily::Peaked, 1.0, 0.46, 0.02).is_err());
    }

    #[test]
    fn analytic_derivative_matches_finite_difference() {
        for s in [sd(), sd().rc_density()] {
            for x in [-1.3, -0.2, 0.05, 0.8, 1.0, 2.5] {
                let h = 1e-6;
                let fd = (s.odd_value(x + h) - s.odd_value(x - h)) / (2.0 * h);
                assert!((s.odd_derivative(x) - fd).abs() < 1e-7 * (1.0 + fd.abs()), "x = {x}");
            }
        }
    }

    #[test]
    fn normalization_integral() {
        let m = moment(&sd(), -1).unwrap();
        assert!((m / 0.02 - 1.0).abs() < 1e-8);
    }

    #[test]
    fn small_gamma_limit_of_rc_params() {
        let sd = SpectralDensity::peaked(1.0, 1e-6, 0.02).unwrap();
        let p = rc_params(&sd, 0.3).unwrap();
        assert!((p.omega - 1.0).abs() < 1e-11);
        assert!((p.g - 0.3 * (0.02f64).sqrt()).abs() < 1e-10);
        assert!(p.lambda_eff_sq < 1e-9);
        assert!((p.reorganization / (p.g * p.g / p.omega) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn residue_rejected_for_broad_rc_density() {
        let rc = SpectralDensity::reaction_coordinate(1.0, 0.4, 0.02).unwrap();
        assert!(matches!(
            ReservoirKernel::residue(rc),
            Err(Error::ResidueUnavailable(_))
        ));
        assert!(ReservoirKernel::auto(rc, Beta::Infinite).unwrap().method() == KernelMethod::Quadrature);
    }

    #[test]
    fn coth_helpers_are_continuous_at_switch_points() {
        for y in [1e-4, 20.0, -1e-4, -20.0] {
            let below = y * (1.0 - 1e-9);
            let above = y * (1.0 + 1e-9);
            assert!((coth(below) - coth(above)).abs() < 1e-6 * coth(y).abs());
            assert!((csch_sq(below) - csch_sq(above)).abs() < 1e-6 * csch_sq(y).abs());
            assert!((one_plus_coth(below) - one_plus_coth(above)).abs() < 1e-6 * (1.0 + one_plus_coth(y).abs()));
        }
    }

    #[test]
    fn single_mode_kernel_matches_delta_limit_of_quadrature() {
        let narrow = SpectralDensity::peaked(1.0, 1e-3, 0.02).unwrap();
        let mode = SingleMode::normalized(narrow.rc_frequency(), 0.02);
        for beta in [Beta::Infinite, Beta::Finite(50.0)] {
            let k = ReservoirKernel::single_mode(mode, beta).unwrap();
            let q = ReservoirKernel::quadrature(narrow, beta).unwrap();
            for w in [0.02, -0.02, 0.3] {
                let (a, b) = (k.d(w).unwrap(), q.d(w).unwrap());
                assert!((a - b).abs() < 2e-3 * b.abs(), "β={beta:?}, ω={w}: {a} vs {b}");
            }
        }
    }
}
