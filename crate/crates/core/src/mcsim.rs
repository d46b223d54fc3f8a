//! Monte Carlo simulation of the noisy stubborn-agent dynamics
//! `X(t+1) = A X(t) + B u + V(t+1)`.
//!
//! Replicas are independent trajectories started at the equilibrium mean;
//! replica `r` draws from stream `r` of a ChaCha8 generator keyed by the seed,
//! so results do not depend on evaluation order.

use std::fmt;

use log::warn;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::equilibrium::{mean, NoiseModel};
use crate::error::{Error, Result};
use crate::graph::NetworkOperators;
use crate::objective::EstimatorCoefficients;

pub const MAX_HORIZON: usize = 1_000_000;
pub const DEFAULT_BURN_IN_TOL: f64 = 1e-8;

/// Zero-mean noise laws, each scaled to variance `σ_i²`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseFamily {
    Gaussian,
    /// Uniform on `[−σ√3, σ√3]`.
    Uniform,
    /// `±σ` with equal probability.
    Rademacher,
}

impl NoiseFamily {
    pub const ALL: [NoiseFamily; 3] = [NoiseFamily::Gaussian, NoiseFamily::Uniform, NoiseFamily::Rademacher];

    /// A unit-variance draw.
    fn draw<R: Rng>(self, rng: &mut R) -> f64 {
        match self {
            NoiseFamily::Gaussian => rng.sample(StandardNormal),
            NoiseFamily::Uniform => 3f64.sqrt() * rng.random_range(-1.0..=1.0),
            NoiseFamily::Rademacher => {
                if rng.random_bool(0.5) {
                    1.0
                } else {
                    -1.0
                }
            }
        }
    }
}

impl fmt::Display for NoiseFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NoiseFamily::Gaussian => "gaussian",
            NoiseFamily::Uniform => "uniform",
            NoiseFamily::Rademacher => "rademacher",
        })
    }
}

impl std::str::FromStr for NoiseFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        NoiseFamily::ALL
            .into_iter()
            .find(|f| f.to_string() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown noise family '{s}'")))
    }
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub horizon: usize,
    pub replicas: usize,
    pub seed: u64,
    pub noise_family: NoiseFamily,
    /// Stubborn opinions.
    pub u: DVector<f64>,
}

impl SimConfig {
    /// Burn-in from [`horizon_for`] at [`DEFAULT_BURN_IN_TOL`].
    pub fn new(ops: &NetworkOperators, replicas: usize, seed: u64, noise_family: NoiseFamily, u: DVector<f64>) -> Self {
        Self {
            horizon: horizon_for(ops, DEFAULT_BURN_IN_TOL),
            replicas,
            seed,
            noise_family,
            u,
        }
    }
}

/// Smallest `T ≥ 1` with `ρ^T ≤ tol`, capped at [`MAX_HORIZON`].
pub fn horizon_for_rho(rho: f64, tol: f64) -> usize {
    if rho <= 0.0 {
        return 1;
    }
    if rho >= 1.0 {
        warn!("spectral radius {rho} ≥ 1; horizon capped at {MAX_HORIZON}");
        return MAX_HORIZON;
    }
    let t = (tol.ln() / rho.ln()).ceil();
    if t > MAX_HORIZON as f64 {
        warn!("horizon {t} capped at {MAX_HORIZON}");
        return MAX_HORIZON;
    }
    (t as usize).max(1)
}

pub fn horizon_for(ops: &NetworkOperators, tol: f64) -> usize {
    horizon_for_rho(ops.rho, tol)
}

/// Final states of `cfg.replicas` independent trajectories, one per row.
pub fn simulate(ops: &NetworkOperators, noise: &NoiseModel, cfg: &SimConfig) -> Result<DMatrix<f64>> {
    let r = ops.n_regular();
    if noise.len() != r {
        return Err(Error::DimensionMismatch {
            expected: r,
            got: noise.len(),
        });
    }
    if cfg.horizon == 0 || cfg.replicas == 0 {
        return Err(Error::InvalidParameter(
            "horizon and replicas must be at least 1".into(),
        ));
    }
    if ops.rho >= 1.0 {
        return Err(Error::NotSchurStable(ops.rho));
    }
    let mu = mean(ops, &cfg.u)?;
    let bu = &ops.b * &cfg.u;
    let sd: Vec<f64> = noise.sigma2().iter().map(|v| v.sqrt()).collect();
    // row-major copy for the inner loop
    let a: Vec<f64> = (0..r)
        .flat_map(|i| (0..r).map(move |j| (i, j)))
        .map(|(i, j)| ops.a[(i, j)])
        .collect();

    let mut out = DMatrix::zeros(cfg.replicas, r);
    let mut x = vec![0.0; r];
    let mut next = vec![0.0; r];
    for rep in 0..cfg.replicas {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(rep as u64);
        x.copy_from_slice(mu.as_slice());
        for _ in 0..cfg.horizon {
            for i in 0..r {
                let row = &a[i * r..(i + 1) * r];
                let mut acc = bu[i];
                for (aij, xj) in row.iter().zip(&x) {
                    acc += aij * xj;
                }
                next[i] = acc + sd[i] * cfg.noise_family.draw(&mut rng);
            }
            std::mem::swap(&mut x, &mut next);
        }
        for (i, &v) in x.iter().enumerate() {
            out[(rep, i)] = v;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct EmpiricalMoments {
    pub replicas: usize,
    pub mean: DVector<f64>,
    /// Unbiased sample covariance.
    pub cov: DMatrix<f64>,
    pub mean_se: DVector<f64>,
    /// Standard error of each covariance entry, from the sample fourth
    /// moments of the centred products.
    pub cov_se: DMatrix<f64>,
}

/// Sample moments of the rows of `samples`.
pub fn empirical_moments(samples: &DMatrix<f64>) -> Result<EmpiricalMoments> {
    let (m, r) = samples.shape();
    if m < 2 {
        return Err(Error::InvalidParameter(
            "empirical moments need at least two replicas".into(),
        ));
    }
    let mf = m as f64;
    let mean = DVector::from_iterator(r, samples.column_iter().map(|c| c.sum() / mf));
    let centred = DMatrix::from_fn(m, r, |t, i| samples[(t, i)] - mean[i]);
    let cov = centred.transpose() * &centred / (mf - 1.0);
    let mean_se = DVector::from_iterator(r, (0..r).map(|i| (cov[(i, i)] / mf).sqrt()));
    let mut cov_se = DMatrix::zeros(r, r);
    for i in 0..r {
        for j in i..r {
            let (ci, cj) = (centred.column(i), centred.column(j));
            let mut s1 = 0.0;
            let mut s2 = 0.0;
            for t in 0..m {
                let p = ci[t] * cj[t];
                s1 += p;
                s2 += p * p;
            }
            let avg = s1 / mf;
            let var = (s2 / mf - avg * avg).max(0.0) * mf / (mf - 1.0);
            let se = (var / mf).sqrt();
            cov_se[(i, j)] = se;
            cov_se[(j, i)] = se;
        }
    }
    Ok(EmpiricalMoments {
        replicas: m,
        mean,
        cov,
        mean_se,
        cov_se,
    })
}

/// Outcome of comparing sample moments against reference values.
#[derive(Debug, Clone, Serialize)]
pub struct MomentCheck {
    pub n_se: f64,
    /// Largest `|x̂ − x| / SE` over the mean coordinates.
    pub max_mean_z: f64,
    /// Largest `|ĉ − c| / SE` over the covariance entries.
    pub max_cov_z: f64,
    pub mean_violations: usize,
    pub cov_violations: usize,
    pub entries_checked: usize,
}

impl MomentCheck {
    pub fn passed(&self) -> bool {
        self.mean_violations == 0 && self.cov_violations == 0
    }
}

fn z_score(diff: f64, se: f64, scale: f64) -> f64 {
    if se > 0.0 {
        diff.abs() / se
    } else if diff.abs() <= 1e-12 * (1.0 + scale.abs()) {
        0.0
    } else {
        f64::INFINITY
    }
}

/// Checks the sample mean and covariance against `mu` and `c` within
/// `n_se` standard errors, entrywise over the upper triangle.
pub fn check_moments(emp: &EmpiricalMoments, mu: &DVector<f64>, c: &DMatrix<f64>, n_se: f64) -> MomentCheck {
    let r = mu.len();
    let mut check = MomentCheck {
        n_se,
        max_mean_z: 0.0,
        max_cov_z: 0.0,
        mean_violations: 0,
        cov_violations: 0,
        entries_checked: 0,
    };
    for i in 0..r {
        let z = z_score(emp.mean[i] - mu[i], emp.mean_se[i], mu[i]);
        check.max_mean_z = check.max_mean_z.max(z);
        check.mean_violations += usize::from(z > n_se);
        check.entries_checked += 1;
        for j in i..r {
            let z = z_score(emp.cov[(i, j)] - c[(i, j)], emp.cov_se[(i, j)], c[(i, j)]);
            check.max_cov_z = check.max_cov_z.max(z);
            check.cov_violations += usize::from(z > n_se);
            check.entries_checked += 1;
        }
    }
    check
}

/// Compares two independent sample covariances entrywise, with the
/// standard errors combined in quadrature.
pub fn check_agreement(a: &EmpiricalMoments, b: &EmpiricalMoments, n_se: f64) -> MomentCheck {
    let r = a.mean.len();
    let mut check = MomentCheck {
        n_se,
        max_mean_z: 0.0,
        max_cov_z: 0.0,
        mean_violations: 0,
        cov_violations: 0,
        entries_checked: 0,
    };
    for i in 0..r {
        let se = a.mean_se[i].hypot(b.mean_se[i]);
        let z = z_score(a.mean[i] - b.mean[i], se, a.mean[i]);
        check.max_mean_z = check.max_mean_z.max(z);
        check.mean_violations += usize::from(z > n_se);
        check.entries_checked += 1;
        for j in i..r {
            let se = a.cov_se[(i, j)].hypot(b.cov_se[(i, j)]);
            let z = z_score(a.cov[(i, j)] - b.cov[(i, j)], se, a.cov[(i, j)]);
            check.max_cov_z = check.max_cov_z.max(z);
            check.cov_violations += usize::from(z > n_se);
            check.entries_checked += 1;
        }
    }
    check
}

/// Empirical mean squared error of an estimator of the average regular
/// opinion, with its standard error.
pub fn estimator_mse(samples: &DMatrix<f64>, est: &EstimatorCoefficients) -> (f64, f64) {
    let (m, r) = samples.shape();
    let errs: Vec<f64> = (0..m)
        .map(|t| {
            let row: Vec<f64> = samples.row(t).iter().copied().collect();
            let y = row.iter().sum::<f64>() / r as f64;
            let e = y - est.predict(&row);
            e * e
        })
        .collect();
    let mf = m as f64;
    let mse = errs.iter().sum::<f64>() / mf;
    let var = errs.iter().map(|e| (e - mse).powi(2)).sum::<f64>() / (mf - 1.0).max(1.0);
    (mse, (var / mf).sqrt())
}
