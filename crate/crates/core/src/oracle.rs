//! Exact diagonalization of two qubits coupled to one bosonic mode in a
//! truncated Fock basis.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::algebra::{
    boltzmann_weights, collective_sx, negativity, qubit_hamiltonian, Beta, DensityMatrix, Operator,
};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DickeParams {
    pub omega_z: f64,
    pub epsilon: f64,
    pub g: f64,
    pub omega: f64,
}

/// `H_S + Ω a†a + g S_x (a + a†)` on `ℂ⁴ ⊗ span{|0⟩ … |n_max⟩}`, index
/// `q (n_max + 1) + n`.
#[derive(Clone, Debug)]
pub struct TruncatedDicke {
    pub params: DickeParams,
    pub n_max: usize,
    pub matrix: DMatrix<f64>,
}

impl TruncatedDicke {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }
}

pub fn build_dicke(params: DickeParams, n_max: usize) -> Result<TruncatedDicke> {
    if n_max < 1 {
        return Err(Error::InvalidParameter("Fock cutoff must be at least 1".into()));
    }
    let nf = n_max + 1;
    let dim = 4 * nf;
    let hs = qubit_hamiltonian(params.omega_z, params.epsilon);
    let sx = collective_sx();
    let mut m = DMatrix::<f64>::zeros(dim, dim);
    for q in 0..4 {
        for p in 0..4 {
            let h = hs.get(q, p).re;
            let s = params.g * sx.get(q, p).re;
            for n in 0..nf {
                if h != 0.0 {
                    m[(q * nf + n, p * nf + n)] += h;
                }
                if s != 0.0 && n + 1 < nf {
                    let amp = s * ((n + 1) as f64).sqrt();
                    m[(q * nf + n, p * nf + n + 1)] += amp;
                    m[(q * nf + n + 1, p * nf + n)] += amp;
                }
            }
        }
        for n in 0..nf {
            m[(q * nf + n, q * nf + n)] += params.omega * n as f64;
        }
    }
    Ok(TruncatedDicke {
        params,
        n_max,
        matrix: m,
    })
}

/// Reduced two-qubit thermal state at a fixed cutoff.
pub fn reduced_state_at_cutoff(td: &TruncatedDicke, beta: Beta) -> Result<DensityMatrix> {
    beta.validate()?;
    let nf = td.n_max + 1;
    let eig = SymmetricEigen::new(td.matrix.clone());
    let energies: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    let weights = boltzmann_weights(&energies, beta);
    let mut rho = [[0.0f64; 4]; 4];
    for (k, &w) in weights.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        let v = eig.eigenvectors.column(k);
        for q in 0..4 {
            for p in q..4 {
                let s: f64 = (0..nf).map(|n| v[q * nf + n] * v[p * nf + n]).sum();
                rho[q][p] += w * s;
            }
        }
    }
    let op = Operator::from_fn(4, |i, j| {
        let x = if i <= j { rho[i][j] } else { rho[j][i] };
        Complex64::new(x, 0.0)
    });
    DensityMatrix::from_unnormalized(op, vec![2, 2])
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleOptions {
    pub initial_n_max: usize,
    pub step: usize,
    pub max_n_max: usize,
    pub convergence_tol: f64,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self {
            initial_n_max: 20,
            step: 10,
            max_n_max: 200,
            convergence_tol: 1e-8,
        }
    }
}

#[derive(Clone, Debug)]
pub struct OracleState {
    pub rho: DensityMatrix,
    pub negativity: f64,
    pub n_max: usize,
}

/// Reduced thermal state, raising the cutoff until the negativity and the
/// state itself change by less than `convergence_tol`.
pub fn reduced_thermal_state(params: DickeParams, beta: Beta, opts: &OracleOptions) -> Result<OracleState> {
    let mut n_max = opts.initial_n_max.max(1);
    let mut prev_rho = reduced_state_at_cutoff(&build_dicke(params, n_max)?, beta)?;
    let mut prev_n = negativity(&prev_rho)?;
    loop {
        let next = n_max + opts.step.max(1);
        if next > opts.max_n_max {
            return Err(Error::CutoffNotConverged {
                n_max,
                previous: prev_n,
                last: prev_n,
            });
        }
        let rho = reduced_state_at_cutoff(&build_dicke(params, next)?, beta)?;
        let n = negativity(&rho)?;
        let change = rho.op().max_abs_diff(prev_rho.op());
        if (n - prev_n).abs() < opts.convergence_tol && change < opts.convergence_tol {
            return Ok(OracleState {
                rho,
                negativity: n,
                n_max: next,
            });
        }
        if next + opts.step.max(1) > opts.max_n_max {
            return Err(Error::CutoffNotConverged {
                n_max: next,
                previous: prev_n,
                last: n,
            });
        }
        prev_rho = rho;
        prev_n = n;
        n_max = next;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::gibbs_state;

    #[test]
    fn dimension_and_symmetry() {
        let p = DickeParams {
            omega_z: 0.02,
            epsilon: 0.0,
            g: 0.3,
            omega: 1.0,
        };
        let td = build_dicke(p, 40).unwrap();
        assert_eq!(td.dim(), 164);
        assert_eq!(td.matrix, td.matrix.transpose());
    }

    #[test]
    fn uncoupled_spectrum_is_ladder() {
        let p = DickeParams {
            omega_z: 0.3,
            epsilon: 0.2,
            g: 0.0,
            omega: 1.0,
        };
        let td = build_dicke(p, 5).unwrap();
        let mut e: Vec<f64> = SymmetricEigen::new(td.matrix).eigenvalues.iter().copied().collect();
        e.sort_by(f64::total_cmp);
        let mut want = Vec::new();
        for hs in [-0.3, -0.06, 0.06, 0.3] {
            for n in 0..6 {
                want.push(hs + n as f64);
            }
        }
        want.sort_by(f64::total_cmp);
        for (a, b) in e.iter().zip(&want) {
            assert!((a - b).abs() < 1e-12);
        }
        let r = reduced_state_at_cutoff(&build_dicke(p, 5).unwrap(), Beta::Finite(4.0)).unwrap();
        let g = gibbs_state(&qubit_hamiltonian(0.3, 0.2), Beta::Finite(4.0), vec![2, 2]).unwrap();
        assert!(r.op().max_abs_diff(g.op()) < 1e-14);
    }

    #[test]
    fn displaced_oscillator_ground_energy() {
        let p = DickeParams {
            omega_z: 0.0,
            epsilon: 0.0,
            g: 0.4,
            omega: 1.0,
        };
        let td = build_dicke(p, 40).unwrap();
        let e0 = SymmetricEigen::new(td.matrix).eigenvalues.min();
        assert!((e0 + 0.16).abs() < 1e-12);
    }

    #[test]
    fn converges_in_cutoff() {
        let p = DickeParams {
            omega_z: 0.02,
            epsilon: 0.0,
            g: 0.3,
            omega: 1.0,
        };
        let s = reduced_thermal_state(p, Beta::Infinite, &OracleOptions::default()).unwrap();
        assert!(s.n_max <= 40);
        assert!(s.rho.min_eigenvalue().unwrap() > -1e-10);
    }
}
