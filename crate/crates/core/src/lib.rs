//! Optimal polling of regular agents in stubborn-agent opinion networks.
//!
//! The equilibrium of the noisy DeGroot dynamics with stubborn agents is a
//! Gaussian-like vector with mean `μ` and covariance `C`. Observing a subset
//! `K` of regular agents reduces the variance of the average opinion by
//! `F(K)`; this crate computes the moments, the objective, greedy and exact
//! maximizers, related centralities and a Monte Carlo cross-check.

pub mod centrality;
pub mod equilibrium;
pub mod error;
pub mod graph;
pub mod linalg;
pub mod mcsim;
pub mod objective;
pub mod selector;

pub use error::{Error, ErrorClass, Result};
