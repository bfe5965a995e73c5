#![allow(clippy::excessive_precision)]

use mfg_core::spectral::{
    hilbert_transform, moment, rc_density_closed_form, rc_density_from_hilbert, rc_params,
    Kernel, ReservoirKernel, SpectralDensity,
};
use mfg_core::Beta;

// (ω, D, dD/dω) from 30-digit subtraction-PV quadrature at ω₀ = 1, γ = 0.2, ω_z = 0.02.
const PEAKED_ZERO_T: [(f64, f64, f64); 5] = [
    (0.02, 0.020419841600401411, 0.0214586030411),
    (-0.02, 0.019597918110503195, 0.0196818084279),
    (0.3, 0.029132620159053717, 0.0449801324621),
    (-1.1, 0.0094829994190838314, 0.00450040217866),
    (0.0, 0.02, 0.0205367450219),
];
const PEAKED_BETA_50: [(f64, f64, f64); 5] = [
    (0.02, 0.020419865025404592, 0.0214588262516),
    (-0.02, 0.019597894685500014, 0.0196820316384),
    (0.3, 0.029132608676346468, 0.0449801809979),
    (-1.1, 0.0094830022502935062, 0.00450040478633),
    (0.0, 0.02, 0.0205386624836),
];
const RC_ZERO_T: [(f64, f64, f64); 5] = [
    (0.02, 0.020325063553672342, 0.0166722871233),
    (-0.02, 0.019690323336478199, 0.0151333707382),
    (0.3, 0.027167202303823893, 0.0335885999592),
    (-1.1, 0.011589812379728324, 0.00396153576622),
    (0.0, 0.02, 0.0158494669784),
];
const RC_BETA_50: [(f64, f64, f64); 5] = [
    (0.02, 0.02032521479223545, 0.0166736787711),
    (-0.02, 0.01969017209791509, 0.0151347623861),
    (0.3, 0.027167129166971809, 0.0335889072723),
    (-1.1, 0.011589830465318482, 0.00396155241916),
    (0.0, 0.02, 0.0158618860281),
];

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn check(kernel: &impl Kernel, table: &[(f64, f64, f64)], tol_d: f64, tol_dp: f64) {
    for &(w, d, dp) in table {
        let got = kernel.d(w).unwrap();
        assert!(rel(got, d) < tol_d, "D({w}) = {got}, want {d}");
        let got = kernel.d_prime(w).unwrap();
        assert!(rel(got, dp) < tol_dp, "D'({w}) = {got}, want {dp}");
    }
}

#[test]
fn quadrature_matches_reference_values() {
    let pk = SpectralDensity::peaked(1.0, 0.2, 0.02).unwrap();
    let rc = pk.rc_density();
    check(&ReservoirKernel::quadrature(pk, Beta::Infinite).unwrap(), &PEAKED_ZERO_T, 1e-9, 1e-8);
    check(&ReservoirKernel::quadrature(pk, Beta::Finite(50.0)).unwrap(), &PEAKED_BETA_50, 1e-9, 1e-8);
    check(&ReservoirKernel::quadrature(rc, Beta::Infinite).unwrap(), &RC_ZERO_T, 1e-9, 1e-8);
    check(&ReservoirKernel::quadrature(rc, Beta::Finite(50.0)).unwrap(), &RC_BETA_50, 1e-9, 1e-8);
}

#[test]
fn residue_matches_reference_values() {
    let pk = SpectralDensity::peaked(1.0, 0.2, 0.02).unwrap();
    check(&ReservoirKernel::residue(pk).unwrap(), &PEAKED_ZERO_T, 1e-10, 1e-8);
    check(&ReservoirKernel::residue(pk.rc_density()).unwrap(), &RC_ZERO_T, 1e-10, 1e-8);
}

#[test]
fn derivative_matches_finite_difference() {
    let pk = SpectralDensity::peaked(1.0, 0.3, 0.05).unwrap();
    for beta in [Beta::Infinite, Beta::Finite(10.0), Beta::Finite(1e3)] {
        let k = ReservoirKernel::quadrature(pk, beta).unwrap();
        for w in [0.05, -0.05, 0.045, -0.7, 1.3] {
            let h = 1e-4 * 0.05;
            let fd = (k.d(w + h).unwrap() - k.d(w - h).unwrap()) / (2.0 * h);
            let an = k.d_prime(w).unwrap();
            assert!(rel(an, fd) < 1e-5, "β={beta:?} ω={w}: {an} vs {fd}");
        }
    }
}

#[test]
fn large_beta_approaches_zero_temperature() {
    let pk = SpectralDensity::peaked(1.0, 0.2, 0.02).unwrap();
    let cold = ReservoirKernel::quadrature(pk, Beta::Finite(1e4)).unwrap();
    let zero = ReservoirKernel::quadrature(pk, Beta::Infinite).unwrap();
    for w in [0.02, -0.02] {
        assert!(rel(cold.d(w).unwrap(), zero.d(w).unwrap()) < 1e-4);
    }
}

#[test]
fn rc_moments_match_closed_forms() {
    let pk = SpectralDensity::with_rc_frequency(mfg_core::spectral::SpectralFamily::Peaked, 1.0, 0.2, 0.02).unwrap();
    let m1 = moment(&pk, 1).unwrap();
    let m3 = moment(&pk, 3).unwrap();
    let p = rc_params(&pk, 0.5).unwrap();
    assert!(rel((m3 / m1).sqrt(), p.omega) < 1e-6);
    // g = λ (∫ωJ / Ω)^{1/2}
    assert!(rel(0.5 * (m1 / p.omega).sqrt(), p.g) < 1e-6);
}

#[test]
fn hilbert_identity_reproduces_rc_density() {
    let pk = SpectralDensity::with_rc_frequency(mfg_core::spectral::SpectralFamily::Peaked, 1.0, 0.2, 0.02).unwrap();
    for i in 1..60 {
        let w = 3.0 * i as f64 / 60.0;
        let a = rc_density_from_hilbert(&pk, w).unwrap();
        let b = rc_density_closed_form(&pk, w).unwrap();
        assert!(rel(a, b) < 1e-8, "ω = {w}: {a} vs {b}");
    }
    assert!(rel(hilbert_transform(&pk, 0.0).unwrap(), 0.04) < 1e-9);
}
