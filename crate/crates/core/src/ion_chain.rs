//! Equilibrium of a linear Coulomb crystal in a harmonic trap and the local
//! transverse phonon hopping rates it produces.
//!
//! Positions are dimensionless, measured in the length unit
//! `l0 = [e^2 / (4 pi eps0 m omega_z^2)]^(1/3)`. In that unit the hopping
//! rate between ions `i` and `j` is `omega_z^2 / (2 omega_x) / |u_i - u_j|^3`,
//! so no physical constants are needed anywhere.

use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

/// Default residual tolerance for [`equilibrium_positions`].
pub const DEFAULT_SOLVER_TOL: f64 = 1e-12;
/// Newton iteration cap.
pub const MAX_NEWTON_ITERATIONS: usize = 200;
/// Default bound on `max K_ij / omega_x` for the hopping model to be trusted.
pub const DEFAULT_VALIDITY_THRESHOLD: f64 = 1e-2;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChainError {
    #[error("invalid trap parameters: {0}")]
    InvalidTrap(&'static str),
    #[error("solver tolerance must be positive and finite, got {0}")]
    InvalidTolerance(f64),
    #[error("equilibrium solver did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("hopping model invalid: max K_ij / omega_x = {ratio:e} exceeds threshold {threshold:e}")]
    PhysicsValidity { ratio: f64, threshold: f64 },
}

/// Trap frequencies in rad/s and the number of ions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrapParams {
    omega_x: f64,
    omega_z: f64,
    num_ions: usize,
}

impl TrapParams {
    pub fn new(omega_x: f64, omega_z: f64, num_ions: usize) -> Result<Self, ChainError> {
        if !(omega_x.is_finite() && omega_x > 0.0) {
            return Err(ChainError::InvalidTrap("omega_x must be positive"));
        }
        if !(omega_z.is_finite() && omega_z > 0.0) {
            return Err(ChainError::InvalidTrap("omega_z must be positive"));
        }
        if omega_x <= omega_z {
            return Err(ChainError::InvalidTrap("omega_x must exceed omega_z"));
        }
        if num_ions == 0 {
            return Err(ChainError::InvalidTrap("num_ions must be at least 1"));
        }
        Ok(TrapParams { omega_x, omega_z, num_ions })
    }

    /// Builds parameters from ordinary frequencies in Hz.
    pub fn from_hz(nu_x: f64, nu_z: f64, num_ions: usize) -> Result<Self, ChainError> {
        let two_pi = 2.0 * core::f64::consts::PI;
        Self::new(two_pi * nu_x, two_pi * nu_z, num_ions)
    }

    pub fn omega_x(&self) -> f64 {
        self.omega_x
    }

    pub fn omega_z(&self) -> f64 {
        self.omega_z
    }

    pub fn num_ions(&self) -> usize {
        self.num_ions
    }

    /// Nearest-neighbour hopping scale `omega_z^2 / (2 omega_x)` in rad/s,
    /// the rate between two ions one length unit apart.
    pub fn hopping_scale(&self) -> f64 {
        self.omega_z * self.omega_z / (2.0 * self.omega_x)
    }
}

/// An ion chain at mechanical equilibrium.
#[derive(Debug, Clone, PartialEq)]
pub struct IonChain {
    params: TrapParams,
    positions: Vec<f64>,
}

impl IonChain {
    pub fn solve(params: TrapParams, tol: f64) -> Result<Self, ChainError> {
        let positions = equilibrium_positions(params.num_ions, tol)?;
        Ok(IonChain { params, positions })
    }

    /// Wraps externally supplied positions after checking they are strictly
    /// increasing and match the ion count.
    pub fn from_positions(params: TrapParams, positions: Vec<f64>) -> Result<Self, ChainError> {
        if positions.len() != params.num_ions {
            return Err(ChainError::InvalidTrap("position count does not match num_ions"));
        }
        if positions.iter().any(|u| !u.is_finite()) || positions.windows(2).any(|w| w[0] >= w[1]) {
            return Err(ChainError::InvalidTrap("positions must be finite and strictly increasing"));
        }
        Ok(IonChain { params, positions })
    }

    pub fn params(&self) -> &TrapParams {
        &self.params
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

/// Net dimensionless force on each ion: trap restoring force plus Coulomb
/// repulsion from every other ion. Zero at equilibrium.
pub fn force_residuals(positions: &[f64]) -> Vec<f64> {
    let n = positions.len();
    let mut out = vec![0.0; n];
    for i in 0..n {
        let mut f = -positions[i];
        for j in 0..n {
            if i == j {
                continue;
            }
            let d = positions[i] - positions[j];
            f += d.signum() / (d * d);
        }
        out[i] = f;
    }
    out
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |acc, x| acc.max(x.abs()))
}

/// Solves the force balance `u_i = sum_{j<i} 1/(u_i-u_j)^2 - sum_{j>i} 1/(u_i-u_j)^2`
/// with damped Newton iteration, returning ascending positions whose residuals
/// are all below `tol`.
pub fn equilibrium_positions(num_ions: usize, tol: f64) -> Result<Vec<f64>, ChainError> {
    if !(tol.is_finite() && tol > 0.0) {
        return Err(ChainError::InvalidTolerance(tol));
    }
    if num_ions == 0 {
        return Err(ChainError::InvalidTrap("num_ions must be at least 1"));
    }
    let n = num_ions;
    let half_span = 0.8 * (n as f64 - 1.0) / 2.0;
    let mut u: Vec<f64> =
        (0..n).map(|i| if n == 1 { 0.0 } else { -half_span + 2.0 * half_span * i as f64 / (n as f64 - 1.0) }).collect();

    let mut residual = force_residuals(&u);
    let mut norm = max_abs(&residual);
    for _ in 0..MAX_NEWTON_ITERATIONS {
        if norm < tol {
            return Ok(symmetrize(u));
        }
        // Jacobian of the residual: d r_i / d u_i = -1 - sum 2/|d|^3, d r_i / d u_j = 2/|d|^3.
        let mut jac = vec![0.0; n * n];
        for i in 0..n {
            let mut diag = -1.0;
            for j in 0..n {
                if i == j {
                    continue;
                }
                let d = (u[i] - u[j]).abs();
                let w = 2.0 / (d * d * d);
                jac[i * n + j] = w;
                diag -= w;
            }
            jac[i * n + i] = diag;
        }
        let rhs: Vec<f64> = residual.iter().map(|r| -r).collect();
        let step = crate::linalg::solve_real(n, jac, rhs)
            .ok_or(ChainError::NoConvergence { iterations: 0, residual: norm })?;

        // Backtrack until the ordering survives and the residual drops.
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let trial: Vec<f64> = u.iter().zip(&step).map(|(x, dx)| x + lambda * dx).collect();
            if trial.windows(2).all(|w| w[0] < w[1]) {
                let r = force_residuals(&trial);
                let rn = max_abs(&r);
                if rn < norm || lambda < 1e-6 && rn.is_finite() {
                    u = trial;
                    residual = r;
                    norm = rn;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if norm < tol {
        return Ok(symmetrize(u));
    }
    Err(ChainError::NoConvergence { iterations: MAX_NEWTON_ITERATIONS, residual: norm })
}

// Newton from a symmetric start stays symmetric up to rounding; averaging
// mirrored pairs removes that rounding without moving the residual.
fn symmetrize(mut u: Vec<f64>) -> Vec<f64> {
    let n = u.len();
    for i in 0..n / 2 {
        let m = 0.5 * (u[n - 1 - i] - u[i]);
        u[i] = -m;
        u[n - 1 - i] = m;
    }
    if n % 2 == 1 {
        u[n / 2] = 0.0;
    }
    u
}

/// Real symmetric hopping-rate matrix `K` in rad/s with zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingMatrix {
    dim: usize,
    rates: Vec<f64>,
    validity_ratio: f64,
}

impl CouplingMatrix {
    /// Accepts an arbitrary symmetric, zero-diagonal, nonnegative matrix.
    /// `omega_x` feeds the reported validity ratio only.
    pub fn from_rates(dim: usize, rates: Vec<f64>, omega_x: f64) -> Result<Self, ChainError> {
        if rates.len() != dim * dim {
            return Err(ChainError::InvalidTrap("rate matrix has wrong size"));
        }
        for i in 0..dim {
            if rates[i * dim + i] != 0.0 {
                return Err(ChainError::InvalidTrap("rate matrix diagonal must be zero"));
            }
            for j in 0..dim {
                let r = rates[i * dim + j];
                if !r.is_finite() || r < 0.0 || r != rates[j * dim + i] {
                    return Err(ChainError::InvalidTrap("rate matrix must be symmetric, finite and nonnegative"));
                }
            }
        }
        let max = rates.iter().fold(0.0f64, |a, &b| a.max(b));
        Ok(CouplingMatrix { dim, rates, validity_ratio: max / omega_x })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn rate(&self, i: usize, j: usize) -> f64 {
        self.rates[i * self.dim + j]
    }

    /// Row-major entries.
    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.rates.chunks(self.dim.max(1)).take(self.dim).map(|r| r.to_vec()).collect()
    }

    /// `max K_ij / omega_x`.
    pub fn validity_ratio(&self) -> f64 {
        self.validity_ratio
    }

    pub fn max_rate(&self) -> f64 {
        self.rates.iter().fold(0.0f64, |a, &b| a.max(b))
    }

    /// Smallest off-diagonal rate, or `None` for a single mode.
    pub fn min_off_diagonal(&self) -> Option<f64> {
        let mut best: Option<f64> = None;
        for i in 0..self.dim {
            for j in 0..self.dim {
                if i != j {
                    let r = self.rate(i, j);
                    best = Some(best.map_or(r, |b: f64| b.min(r)));
                }
            }
        }
        best
    }
}

/// Hopping matrix with the default validity threshold.
pub fn coupling_matrix(chain: &IonChain) -> Result<CouplingMatrix, ChainError> {
    coupling_matrix_with_threshold(chain, DEFAULT_VALIDITY_THRESHOLD)
}

/// `K_ij = omega_z^2 / (2 omega_x) / |u_i - u_j|^3`. Rejects the chain when the
/// largest rate is not small compared to `omega_x`.
pub fn coupling_matrix_with_threshold(chain: &IonChain, threshold: f64) -> Result<CouplingMatrix, ChainError> {
    let n = chain.len();
    let scale = chain.params.hopping_scale();
    let u = &chain.positions;
    let mut rates = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let d = (u[i] - u[j]).abs();
                rates[i * n + j] = scale / (d * d * d);
            }
        }
    }
    let max = rates.iter().fold(0.0f64, |a, &b| a.max(b));
    let ratio = max / chain.params.omega_x;
    if ratio > threshold {
        return Err(ChainError::PhysicsValidity { ratio, threshold });
    }
    Ok(CouplingMatrix { dim: n, rates, validity_ratio: ratio })
}
