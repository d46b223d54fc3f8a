//! Seeded graph generators.
//!
//! Every generator draws from a `ChaCha8Rng` seeded with `seed_from_u64`, so
//! output is identical across platforms for a fixed seed. Stubborn nodes are
//! sampled uniformly without replacement after the topology is fixed.

use nalgebra::DMatrix;
use rand::seq::index::sample;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::SocialGraph;
use crate::error::{Error, Result};

const WS_CONNECT_ATTEMPTS: usize = 100;

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

fn draw_stubborn(rng: &mut ChaCha8Rng, n: usize, n_stubborn: usize) -> Vec<usize> {
    let mut s = sample(rng, n, n_stubborn).into_vec();
    s.sort_unstable();
    s
}

fn set_edge(w: &mut DMatrix<f64>, i: usize, j: usize, value: f64) {
    w[(i, j)] = value;
    w[(j, i)] = value;
}

/// Watts-Strogatz small world graph with unit weights.
///
/// Starts from a ring lattice where each node links to its `k/2` nearest
/// neighbours on either side, then rewires each lattice edge `(u, u+j)` with
/// probability `beta` to a uniformly drawn endpoint, avoiding self-loops and
/// duplicate edges. Rewiring is repeated (continuing the same random stream)
/// until the result is connected.
pub fn generate_watts_strogatz(n: usize, k: usize, beta: f64, seed: u64, n_stubborn: usize) -> Result<SocialGraph> {
    if k < 2 || !k.is_multiple_of(2) {
        return Err(invalid(format!("k must be even and at least 2, got {k}")));
    }
    if n <= k {
        return Err(invalid(format!("need n > k, got n={n}, k={k}")));
    }
    if !(0.0..=1.0).contains(&beta) {
        return Err(invalid(format!("beta must lie in [0, 1], got {beta}")));
    }
    if n_stubborn >= n {
        return Err(invalid(format!("n_stubborn must be < n, got {n_stubborn}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..WS_CONNECT_ATTEMPTS {
        let mut w = DMatrix::zeros(n, n);
        for j in 1..=k / 2 {
            for u in 0..n {
                set_edge(&mut w, u, (u + j) % n, 1.0);
            }
        }
        for j in 1..=k / 2 {
            for u in 0..n {
                let v = (u + j) % n;
                if rng.random::<f64>() >= beta {
                    continue;
                }
                let degree = (0..n).filter(|&x| w[(u, x)] > 0.0).count();
                if degree >= n - 1 {
                    continue;
                }
                let mut target = rng.random_range(0..n);
                while target == u || w[(u, target)] > 0.0 {
                    target = rng.random_range(0..n);
                }
                set_edge(&mut w, u, v, 0.0);
                set_edge(&mut w, u, target, 1.0);
            }
        }
        let probe = SocialGraph::new(w.clone(), [])?;
        if probe.is_connected() {
            let stubborn = draw_stubborn(&mut rng, n, n_stubborn);
            return SocialGraph::new(w, stubborn);
        }
    }
    Err(invalid(format!(
        "no connected Watts-Strogatz graph after {WS_CONNECT_ATTEMPTS} attempts"
    )))
}

/// Ring `C_n` with unit weights; nodes `0..n_stubborn` are stubborn.
pub fn generate_cycle(n: usize, n_stubborn: usize) -> Result<SocialGraph> {
    if n < 3 {
        return Err(invalid(format!("cycle needs n >= 3, got {n}")));
    }
    if n_stubborn >= n {
        return Err(invalid(format!("n_stubborn must be < n, got {n_stubborn}")));
    }
    let mut w = DMatrix::zeros(n, n);
    for u in 0..n {
        set_edge(&mut w, u, (u + 1) % n, 1.0);
    }
    SocialGraph::new(w, 0..n_stubborn)
}

/// Parameters for the random test-instance families.
#[derive(Debug, Clone, Copy)]
pub struct RandomGraphParams {
    pub n_regular: usize,
    pub n_stubborn: usize,
    /// Probability of each extra edge beyond the spanning tree.
    pub edge_prob: f64,
    /// Edge weights are drawn uniformly from this interval.
    pub weight_range: (f64, f64),
}

impl RandomGraphParams {
    pub fn new(n_regular: usize, n_stubborn: usize) -> Self {
        Self {
            n_regular,
            n_stubborn,
            edge_prob: 0.3,
            weight_range: (0.5, 2.0),
        }
    }

    fn check(&self) -> Result<()> {
        if self.n_stubborn == 0 {
            return Err(invalid("at least one stubborn node required"));
        }
        if !(0.0..=1.0).contains(&self.edge_prob) {
            return Err(invalid(format!("edge_prob {} outside [0, 1]", self.edge_prob)));
        }
        let (lo, hi) = self.weight_range;
        if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
            return Err(invalid(format!("bad weight range ({lo}, {hi})")));
        }
        Ok(())
    }
}

fn draw_weight(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        rng.random_range(lo..hi)
    } else {
        lo
    }
}

fn random_connected(rng: &mut ChaCha8Rng, p: &RandomGraphParams) -> DMatrix<f64> {
    let n = p.n_regular + p.n_stubborn;
    let mut w = DMatrix::zeros(n, n);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    for t in 1..n {
        let parent = order[rng.random_range(0..t)];
        let wt = draw_weight(rng, p.weight_range);
        set_edge(&mut w, order[t], parent, wt);
    }
    for i in 0..n {
        for j in i + 1..n {
            if w[(i, j)] == 0.0 && rng.random::<f64>() < p.edge_prob {
                let wt = draw_weight(rng, p.weight_range);
                set_edge(&mut w, i, j, wt);
            }
        }
    }
    w
}

/// Random connected weighted graph: a random spanning tree plus independent
/// extra edges. Always passes the reachability check.
pub fn generate_random_reachable(params: RandomGraphParams, seed: u64) -> Result<SocialGraph> {
    params.check()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = random_connected(&mut rng, &params);
    let stubborn = draw_stubborn(&mut rng, w.nrows(), params.n_stubborn);
    SocialGraph::new(w, stubborn)
}

/// Random reachable graph whose regular nodes all share the same strength
/// `w_i`.
///
/// Each regular node gets its deficit to a common target strength added to
/// the weight of a link towards a randomly chosen stubborn node. With a
/// uniform noise variance these instances make `A` symmetric.
pub fn generate_uniform_strength(params: RandomGraphParams, seed: u64) -> Result<SocialGraph> {
    params.check()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut w = random_connected(&mut rng, &params);
    let n = w.nrows();
    let stubborn = draw_stubborn(&mut rng, n, params.n_stubborn);
    let regular: Vec<usize> = (0..n).filter(|i| stubborn.binary_search(i).is_err()).collect();
    let strength = |w: &DMatrix<f64>, i: usize| w.row(i).sum();
    let max = regular.iter().map(|&i| strength(&w, i)).fold(0.0, f64::max);
    let target = max + draw_weight(&mut rng, (0.1, 1.0));
    for &i in &regular {
        let s = stubborn[rng.random_range(0..stubborn.len())];
        let deficit = target - strength(&w, i);
        let value = w[(i, s)] + deficit;
        set_edge(&mut w, i, s, value);
    }
    SocialGraph::new(w, stubborn)
}

/// Connected graph with exactly `m` edges and integer weights in
/// `1..=max_weight`, shaped like an aggregated contact network.
pub fn generate_random_weighted(
    n: usize,
    m: usize,
    max_weight: u32,
    n_stubborn: usize,
    seed: u64,
) -> Result<SocialGraph> {
    if n < 2 {
        return Err(invalid("need at least two nodes"));
    }
    if m + 1 < n || m > n * (n - 1) / 2 {
        return Err(invalid(format!(
            "edge count {m} impossible for a connected graph on {n} nodes"
        )));
    }
    if max_weight == 0 {
        return Err(invalid("max_weight must be positive"));
    }
    if n_stubborn >= n {
        return Err(invalid(format!("n_stubborn must be < n, got {n_stubborn}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut w = DMatrix::zeros(n, n);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    for t in 1..n {
        let parent = order[rng.random_range(0..t)];
        let wt = rng.random_range(1..=max_weight) as f64;
        set_edge(&mut w, order[t], parent, wt);
    }
    let mut count = n - 1;
    while count < m {
        let i = rng.random_range(0..n);
        let j = rng.random_range(0..n);
        if i == j || w[(i, j)] > 0.0 {
            continue;
        }
        let wt = rng.random_range(1..=max_weight) as f64;
        set_edge(&mut w, i, j, wt);
        count += 1;
    }
    let stubborn = draw_stubborn(&mut rng, n, n_stubborn);
    SocialGraph::new(w, stubborn)
}
