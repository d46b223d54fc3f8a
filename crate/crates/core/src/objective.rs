//! Variance-reduction and residual-variance objectives for estimating the
//! mean regular opinion `Y = (1/n) Σ_{i∈R} X_i` from observations `X_K`.
//!
//! All quantities are carried unnormalized: `var_y = 1ᵀC1` is `n²·Var(Y)`,
//! and likewise for `F` and `G`. Normalized accessors divide by `n²`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{row_sums, spd_quadratic_form, submatrix, subvector};

/// Ordered set of regular-node positions (indices into the regular block).
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct ObservationSet {
    members: Vec<usize>,
}

impl ObservationSet {
    pub fn new(members: Vec<usize>, n_regular: usize) -> Result<Self> {
        let mut seen = vec![false; n_regular];
        for &m in &members {
            if m >= n_regular {
                return Err(Error::InvalidParameter(format!(
                    "observation index {m} outside regular block of size {n_regular}"
                )));
            }
            if std::mem::replace(&mut seen[m], true) {
                return Err(Error::InvalidParameter(format!("duplicate observation index {m}")));
            }
        }
        Ok(Self { members })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn all(n_regular: usize) -> Self {
        Self {
            members: (0..n_regular).collect(),
        }
    }

    /// Set of positions whose bits are set in `mask`.
    pub fn from_mask(mask: u64, n_regular: usize) -> Self {
        Self {
            members: (0..n_regular).filter(|&i| mask >> i & 1 == 1).collect(),
        }
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.members.contains(&i)
    }

    /// Positions of `0..n_regular` not in the set, ascending.
    pub fn complement(&self, n_regular: usize) -> Vec<usize> {
        let mut inside = vec![false; n_regular];
        for &m in &self.members {
            inside[m] = true;
        }
        (0..n_regular).filter(|&i| !inside[i]).collect()
    }

    pub fn with(&self, i: usize) -> Self {
        let mut members = self.members.clone();
        members.push(i);
        Self { members }
    }
}

/// `1ᵀ C 1`
pub fn var_y(c: &DMatrix<f64>) -> f64 {
    c.sum()
}

/// `1ᵀ C 1 / n²`, the variance of the mean opinion itself.
pub fn var_y_normalized(c: &DMatrix<f64>) -> f64 {
    let n = c.nrows() as f64;
    if n == 0.0 {
        0.0
    } else {
        var_y(c) / (n * n)
    }
}

fn check_square(m: &DMatrix<f64>, k: &ObservationSet) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            got: m.ncols(),
        });
    }
    if let Some(&bad) = k.members().iter().find(|&&i| i >= m.nrows()) {
        return Err(Error::InvalidParameter(format!(
            "observation index {bad} outside matrix of size {}",
            m.nrows()
        )));
    }
    Ok(())
}

/// Variance reduction `F(K) = (C1)_Kᵀ (C_KK)⁻¹ (C1)_K`; zero for `K = ∅`.
pub fn f_score(c: &DMatrix<f64>, k: &ObservationSet) -> Result<f64> {
    check_square(c, k)?;
    let c1 = row_sums(c);
    let ckk = submatrix(c, k.members(), k.members());
    spd_quadratic_form(&ckk, &subvector(&c1, k.members()), "F(K): C_KK")
}

/// Residual variance `G(K) = 1ᵀ (H_{−K−K})⁻¹ 1`; zero for `K = R`.
pub fn g_score(h: &DMatrix<f64>, k: &ObservationSet) -> Result<f64> {
    check_square(h, k)?;
    let rest = k.complement(h.nrows());
    let block = submatrix(h, &rest, &rest);
    spd_quadratic_form(&block, &DVector::from_element(rest.len(), 1.0), "G(K): H_-K-K")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ObjectiveReport {
    pub f_raw: f64,
    pub g_raw: f64,
    pub var_y_raw: f64,
    pub residual_fraction: f64,
}

impl ObjectiveReport {
    pub fn evaluate(c: &DMatrix<f64>, h: &DMatrix<f64>, k: &ObservationSet) -> Result<Self> {
        let f_raw = f_score(c, k)?;
        let g_raw = g_score(h, k)?;
        let var_y_raw = var_y(c);
        Ok(Self {
            f_raw,
            g_raw,
            var_y_raw,
            residual_fraction: if var_y_raw > 0.0 { g_raw / var_y_raw } else { 0.0 },
        })
    }
}

/// Best linear predictor of `Y` from `X_K`:
/// `ŷ(x_K) = intercept + αᵀ x_K`.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorCoefficients {
    /// Coefficients over `K`, in the set's order.
    pub alpha: DVector<f64>,
    pub intercept: f64,
    pub members: Vec<usize>,
}

impl EstimatorCoefficients {
    pub fn predict(&self, x: &[f64]) -> f64 {
        self.intercept
            + self
                .members
                .iter()
                .zip(self.alpha.iter())
                .map(|(&i, a)| a * x[i])
                .sum::<f64>()
    }

    /// Coefficients scattered over all regular positions, zero off `K`.
    pub fn full(&self, n_regular: usize) -> DVector<f64> {
        let mut out = DVector::zeros(n_regular);
        for (&i, &a) in self.members.iter().zip(self.alpha.iter()) {
            out[i] = a;
        }
        out
    }
}

/// Solves `C_KK α = (C1/n)_K`; the intercept `ȳ − αᵀμ_K` makes the
/// predictor unbiased for nonzero means.
pub fn estimator_coefficients(
    c: &DMatrix<f64>,
    mu: &DVector<f64>,
    k: &ObservationSet,
) -> Result<EstimatorCoefficients> {
    check_square(c, k)?;
    if mu.len() != c.nrows() {
        return Err(Error::DimensionMismatch {
            expected: c.nrows(),
            got: mu.len(),
        });
    }
    let n = c.nrows() as f64;
    let rhs = subvector(&(row_sums(c) / n), k.members());
    let alpha = if k.is_empty() {
        DVector::zeros(0)
    } else {
        let chol = crate::linalg::cholesky(&submatrix(c, k.members(), k.members()), "estimator C_KK")?;
        chol.solve(&rhs)
    };
    let y_bar = mu.sum() / n;
    let intercept = y_bar - alpha.dot(&subvector(mu, k.members()));
    Ok(EstimatorCoefficients {
        alpha,
        intercept,
        members: k.members().to_vec(),
    })
}

/// `(|K|, G(K)/1ᵀC1)` for each set.
pub fn residual_curve(c: &DMatrix<f64>, h: &DMatrix<f64>, sets: &[ObservationSet]) -> Result<Vec<(usize, f64)>> {
    sets.iter()
        .map(|k| ObjectiveReport::evaluate(c, h, k).map(|r| (k.len(), r.residual_fraction)))
        .collect()
}
