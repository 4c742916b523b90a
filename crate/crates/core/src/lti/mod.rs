//! Polynomials, transfer functions and SISO state-space numerics.

mod polynomial;
mod state_space;
mod structure;
mod transfer;

use nalgebra::{linalg::Schur, DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

pub use polynomial::{poly_roots, Polynomial};
pub use state_space::{c2d_zoh, tf_from_ss, StateSpace};
pub use structure::{
    circle_targets, ctrb_matrix, ctrb_rank, detectability_witness, detectable, matrix_rank, obsv_matrix, obsv_rank,
    pbh_margin, place_poles, spectral_radius, stabilizability_witness, stabilizable, PBH_TOLERANCE,
};
pub use transfer::{coincide, series, Cancellation, RationalTF, SeriesResult};

pub(crate) use polynomial::sort_complex;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LtiError {
    #[error("the zero polynomial has no well-defined roots")]
    ZeroPolynomial,
    #[error("transfer function denominator is zero")]
    ZeroDenominator,
    #[error("sampling period must be positive, got {0}")]
    BadPeriod(f64),
    #[error("non-finite entries after discretization")]
    NumericOverflow,
    #[error("eigenvalue iteration did not converge")]
    EigenFailure,
    #[error("operands live in different domains")]
    DomainMismatch,
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("pair is not controllable (rank {rank} < {n})")]
    Uncontrollable { rank: usize, n: usize },
    #[error("pole targets: {0}")]
    BadTargets(String),
    #[error("singular system in gain computation")]
    Singular,
}

/// Continuous (`s`) or discrete (`z`, with sample period) variable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "domain", rename_all = "snake_case")]
pub enum Domain {
    Continuous,
    Discrete { period: f64 },
}

impl Domain {
    pub fn is_discrete(&self) -> bool {
        matches!(self, Domain::Discrete { .. })
    }

    /// Whether the mode `lambda` is not asymptotically stable in this domain,
    /// with a relative margin `tol` pulled toward the stable side.
    pub fn is_unstable_mode(&self, lambda: Complex64, tol: f64) -> bool {
        match self {
            Domain::Continuous => lambda.re >= -tol * lambda.norm().max(1.0),
            Domain::Discrete { .. } => lambda.norm() >= 1.0 - tol,
        }
    }
}

/// Default margin for the stability boundary.
pub const UNIT_CIRCLE_TOLERANCE: f64 = 1e-9;

/// Eigenvalues of a square real matrix after diagonal balancing, sorted by
/// real then imaginary part.
pub fn eigenvalues(m: &DMatrix<f64>) -> Result<Vec<Complex64>, LtiError> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(LtiError::Dimension(format!("{}x{} is not square", n, m.ncols())));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(LtiError::NumericOverflow);
    }
    let balanced = balance(m);
    let max_iter = 100 * n.max(10);
    // Francis shifts stall on cyclic structures such as the companion matrix
    // of `zⁿ + c`; an orthogonal similarity breaks the symmetry.
    let schur = Schur::try_new(balanced.clone(), f64::EPSILON, max_iter)
        .or_else(|| {
            (1..=3).find_map(|k| {
                let h = householder(n, k);
                Schur::try_new(&h * &balanced * &h, f64::EPSILON, max_iter)
            })
        })
        .ok_or(LtiError::EigenFailure)?;
    let mut values: Vec<Complex64> = schur.complex_eigenvalues().iter().copied().collect();
    sort_complex(&mut values);
    Ok(values)
}

/// Symmetric orthogonal reflector `I − 2vvᵀ/vᵀv` for a fixed irregular `v`.
fn householder(n: usize, k: usize) -> DMatrix<f64> {
    let v = DVector::from_fn(n, |i, _| 1.0 + ((i + 1) * (k + 2)) as f64 * 0.618_033_988_749_895 % 1.0);
    DMatrix::identity(n, n) - (&v * v.transpose()) * (2.0 / v.norm_squared())
}

/// Parlett-Reinsch diagonal similarity scaling by powers of two; leaves the
/// spectrum unchanged while equalizing row and column norms.
pub fn balance(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    let mut a = m.clone();
    let radix = 2.0_f64;
    let mut converged = false;
    while !converged {
        converged = true;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += a[(j, i)].abs();
                    r += a[(i, j)].abs();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut g = r / radix;
            while c < g {
                f *= radix;
                c *= radix * radix;
            }
            g = r * radix;
            while c > g {
                f /= radix;
                c /= radix * radix;
            }
            if (c + r) / f < 0.95 * s {
                converged = false;
                for j in 0..n {
                    a[(i, j)] /= f;
                }
                for j in 0..n {
                    a[(j, i)] *= f;
                }
            }
        }
    }
    a
}
