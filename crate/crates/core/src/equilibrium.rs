//! Equilibrium moments of the noisy stubborn-agent dynamics
//! `X(t+1) = A X(t) + B u + V(t+1)`.
//!
//! The covariance is the solution of the discrete Lyapunov equation
//! `C = A C Aᵀ + Σ`. The closed form `Σ (I − A²)⁻¹` only solves that equation
//! in special regimes (for instance equal regular strengths with uniform
//! noise), so it is used as a fast path after being checked for symmetry and
//! for its Lyapunov residual.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::NetworkOperators;
use crate::linalg::{asymmetry, cholesky, frobenius, lu_solve, lu_solve_vec, rel_diff, symmetrize};

const MAX_DOUBLING_STEPS: usize = 64;
const MAX_POWER_STEPS: usize = 10_000;
const POWER_TOL: f64 = 1e-10;

/// Relative tolerances used across the equilibrium computations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerances {
    /// Doubling stops once the increment falls below this fraction of `‖C‖_F`.
    pub lyapunov: f64,
    /// Closed-form candidates with larger relative asymmetry are rejected.
    pub symmetry: f64,
    /// Closed-form candidates with a larger relative Lyapunov residual are rejected.
    pub residual: f64,
    /// Agreement required of `H·C = I` and of the two precision routes.
    pub inverse: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            lyapunov: 1e-12,
            symmetry: 1e-10,
            residual: 1e-10,
            inverse: 1e-8,
        }
    }
}

/// Per-regular-agent noise variances `σ_i²`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseModel {
    sigma2: DVector<f64>,
}

impl NoiseModel {
    /// All variances must be finite and strictly positive.
    pub fn new(sigma2: Vec<f64>) -> Result<Self> {
        if let Some(v) = sigma2.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "noise variances must be positive, got {v}"
            )));
        }
        Ok(Self {
            sigma2: DVector::from_vec(sigma2),
        })
    }

    pub fn uniform(n: usize, variance: f64) -> Result<Self> {
        Self::new(vec![variance; n])
    }

    /// Variances allowed to be zero. Only the simulator accepts these.
    pub fn degenerate(sigma2: Vec<f64>) -> Result<Self> {
        if let Some(v) = sigma2.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "noise variances must be nonnegative, got {v}"
            )));
        }
        Ok(Self {
            sigma2: DVector::from_vec(sigma2),
        })
    }

    pub fn sigma2(&self) -> &DVector<f64> {
        &self.sigma2
    }

    pub fn len(&self) -> usize {
        self.sigma2.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sigma2.is_empty()
    }

    pub fn is_positive(&self) -> bool {
        self.sigma2.iter().all(|&v| v > 0.0)
    }

    /// `Σ = [σ²]`
    pub fn covariance(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&self.sigma2)
    }

    pub fn scaled(&self, t: f64) -> Result<Self> {
        Self::new(self.sigma2.iter().map(|v| v * t).collect())
    }
}

fn check_noise(a: &DMatrix<f64>, noise: &NoiseModel) -> Result<()> {
    if a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            got: a.ncols(),
        });
    }
    if noise.len() != a.nrows() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            got: noise.len(),
        });
    }
    if !noise.is_positive() {
        return Err(Error::InvalidParameter(
            "equilibrium moments need strictly positive noise variances".into(),
        ));
    }
    Ok(())
}

/// Dominant eigenvalue modulus.
///
/// Power iteration from `1/‖1‖`; if the norm ratio has not settled after
/// the iteration cap, falls back to the real Schur eigenvalues.
pub fn spectral_radius(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    if n == 0 {
        return 0.0;
    }
    let mut x = DVector::from_element(n, 1.0 / (n as f64).sqrt());
    let mut prev = f64::NAN;
    for _ in 0..MAX_POWER_STEPS {
        let y = m * &x;
        let norm = y.norm();
        if norm == 0.0 {
            if m.iter().all(|&v| v == 0.0) {
                return 0.0;
            }
            break;
        }
        if (norm - prev).abs() <= POWER_TOL * norm {
            return norm;
        }
        prev = norm;
        x = y / norm;
    }
    m.clone()
        .schur()
        .complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

/// `μ = (I − A)⁻¹ B u`, by LU solve.
pub fn mean(ops: &NetworkOperators, u: &DVector<f64>) -> Result<DVector<f64>> {
    if u.len() != ops.b.ncols() {
        return Err(Error::DimensionMismatch {
            expected: ops.b.ncols(),
            got: u.len(),
        });
    }
    let r = ops.n_regular();
    let lhs = DMatrix::identity(r, r) - &ops.a;
    lu_solve_vec(&lhs, &(&ops.b * u), "mean opinion (I - A)")
}

/// Relative Lyapunov residual `‖C − A C Aᵀ − Σ‖_F / ‖C‖_F`.
pub fn lyapunov_residual(a: &DMatrix<f64>, noise: &NoiseModel, c: &DMatrix<f64>) -> f64 {
    let res = c - a * c * a.transpose() - noise.covariance();
    let scale = frobenius(c);
    if scale == 0.0 {
        frobenius(&res)
    } else {
        frobenius(&res) / scale
    }
}

/// Solves `C = A C Aᵀ + Σ` by the doubling iteration
/// `C ← C + A_k C A_kᵀ`, `A_k ← A_k²`.
pub fn covariance_lyapunov(a: &DMatrix<f64>, noise: &NoiseModel, tol: f64) -> Result<DMatrix<f64>> {
    check_noise(a, noise)?;
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let mut c = noise.covariance();
    let mut ak = a.clone();
    for _ in 0..MAX_DOUBLING_STEPS {
        let inc = &ak * &c * ak.transpose();
        c += &inc;
        if !c.iter().all(|v| v.is_finite()) {
            break;
        }
        if frobenius(&inc) <= tol * frobenius(&c) {
            return Ok(symmetrize(&c));
        }
        ak = &ak * &ak;
    }
    Err(Error::NoConvergence {
        what: "Lyapunov doubling",
        iterations: MAX_DOUBLING_STEPS,
    })
}

/// Why a closed-form candidate was not accepted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "reason", rename_all = "kebab-case")]
pub enum Rejection {
    Asymmetric { asymmetry: f64 },
    LyapunovResidual { residual: f64 },
}

#[derive(Debug, Clone)]
pub enum ClosedForm {
    Accepted(DMatrix<f64>),
    Rejected { candidate: DMatrix<f64>, reason: Rejection },
}

impl ClosedForm {
    pub fn is_accepted(&self) -> bool {
        matches!(self, ClosedForm::Accepted(_))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        match self {
            ClosedForm::Accepted(c) => c,
            ClosedForm::Rejected { candidate, .. } => candidate,
        }
    }
}

/// The unsymmetrized product `Σ (I − A²)⁻¹`.
pub fn closed_form_candidate(a: &DMatrix<f64>, noise: &NoiseModel) -> Result<DMatrix<f64>> {
    check_noise(a, noise)?;
    let r = a.nrows();
    let m = DMatrix::identity(r, r) - a * a;
    // Cᵀ = (I − A²)⁻ᵀ Σ
    let ct = lu_solve(&m.transpose(), &noise.covariance(), "closed form (I - A^2)")?;
    Ok(ct.transpose())
}

/// `Σ (I − A²)⁻¹`, accepted only when it is symmetric and solves the
/// Lyapunov equation within tolerance.
pub fn covariance_closed_form(a: &DMatrix<f64>, noise: &NoiseModel, tol: &Tolerances) -> Result<ClosedForm> {
    let candidate = closed_form_candidate(a, noise)?;
    let asym = asymmetry(&candidate);
    if asym > tol.symmetry {
        return Ok(ClosedForm::Rejected {
            candidate,
            reason: Rejection::Asymmetric { asymmetry: asym },
        });
    }
    let c = symmetrize(&candidate);
    let residual = lyapunov_residual(a, noise, &c);
    if residual > tol.residual {
        return Ok(ClosedForm::Rejected {
            candidate,
            reason: Rejection::LyapunovResidual { residual },
        });
    }
    Ok(ClosedForm::Accepted(c))
}

/// `H = C⁻¹` via Cholesky.
pub fn precision(c: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let chol = cholesky(c, "precision")?;
    Ok(symmetrize(&chol.inverse()))
}

/// `(I − A²) Σ⁻¹`, the precision matching an accepted closed form.
pub fn precision_direct(a: &DMatrix<f64>, noise: &NoiseModel) -> Result<DMatrix<f64>> {
    check_noise(a, noise)?;
    let r = a.nrows();
    let m = DMatrix::identity(r, r) - a * a;
    let inv = noise.sigma2().map(|v| 1.0 / v);
    Ok(m * DMatrix::from_diagonal(&inv))
}

/// Which route produced the covariance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MomentsMethod {
    Lyapunov,
    ClosedForm,
}

impl std::fmt::Display for MomentsMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            MomentsMethod::Lyapunov => "lyapunov",
            MomentsMethod::ClosedForm => "closed-form",
        })
    }
}

#[derive(Debug, Clone)]
pub struct EquilibriumMoments {
    pub mu: DVector<f64>,
    pub c: DMatrix<f64>,
    pub h: DMatrix<f64>,
    pub rho: f64,
    pub method: MomentsMethod,
}

impl EquilibriumMoments {
    /// Mean, covariance and precision, taking the closed-form fast path when
    /// it is accepted.
    pub fn compute(ops: &NetworkOperators, noise: &NoiseModel, u: &DVector<f64>, tol: &Tolerances) -> Result<Self> {
        let mu = mean(ops, u)?;
        let (c, method) = match covariance_closed_form(&ops.a, noise, tol)? {
            ClosedForm::Accepted(c) => (c, MomentsMethod::ClosedForm),
            ClosedForm::Rejected { .. } => (
                covariance_lyapunov(&ops.a, noise, tol.lyapunov)?,
                MomentsMethod::Lyapunov,
            ),
        };
        Self::finish(ops, noise, mu, c, method, tol)
    }

    /// Same as [`compute`](Self::compute) but always solves the Lyapunov equation.
    pub fn compute_lyapunov(
        ops: &NetworkOperators,
        noise: &NoiseModel,
        u: &DVector<f64>,
        tol: &Tolerances,
    ) -> Result<Self> {
        let mu = mean(ops, u)?;
        let c = covariance_lyapunov(&ops.a, noise, tol.lyapunov)?;
        Self::finish(ops, noise, mu, c, MomentsMethod::Lyapunov, tol)
    }

    fn finish(
        ops: &NetworkOperators,
        noise: &NoiseModel,
        mu: DVector<f64>,
        c: DMatrix<f64>,
        method: MomentsMethod,
        tol: &Tolerances,
    ) -> Result<Self> {
        let h = precision(&c)?;
        if method == MomentsMethod::ClosedForm {
            let direct = precision_direct(&ops.a, noise)?;
            let d = rel_diff(&h, &direct);
            if d > tol.inverse {
                return Err(Error::Inconsistent(format!(
                    "closed-form precision disagrees with C^-1 by {d:e}"
                )));
            }
        }
        let r = c.nrows();
        if r > 0 {
            let dev = frobenius(&(&h * &c - DMatrix::identity(r, r))) / (r as f64).sqrt();
            if dev > tol.inverse {
                return Err(Error::Inconsistent(format!("H*C deviates from I by {dev:e}")));
            }
        }
        Ok(Self {
            mu,
            c,
            h,
            rho: ops.rho,
            method,
        })
    }
}

/// How the closed-form product compares with the Lyapunov solution on one
/// instance.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ClosedFormDiagnostics {
    pub accepted: bool,
    pub asymmetry: f64,
    /// Lyapunov residual of the symmetrized candidate.
    pub residual: f64,
    /// `‖Σ(I − A²)⁻¹ − C_lyap‖_F / ‖C_lyap‖_F`
    pub rel_error: f64,
    /// Same comparison for the reversed product `(I − A²)⁻¹ Σ`.
    pub reversed_rel_error: f64,
}

pub fn closed_form_diagnostics(
    a: &DMatrix<f64>,
    noise: &NoiseModel,
    tol: &Tolerances,
) -> Result<ClosedFormDiagnostics> {
    let lyap = covariance_lyapunov(a, noise, tol.lyapunov)?;
    let candidate = closed_form_candidate(a, noise)?;
    let r = a.nrows();
    let m = DMatrix::identity(r, r) - a * a;
    let reversed = lu_solve(&m, &noise.covariance(), "closed form (I - A^2)")?;
    let accepted = covariance_closed_form(a, noise, tol)?.is_accepted();
    Ok(ClosedFormDiagnostics {
        accepted,
        asymmetry: asymmetry(&candidate),
        residual: lyapunov_residual(a, noise, &symmetrize(&candidate)),
        rel_error: rel_diff(&candidate, &lyap),
        reversed_rel_error: rel_diff(&reversed, &lyap),
    })
}
