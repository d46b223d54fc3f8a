//! Node scores over the regular agents and rank comparisons between them.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::equilibrium::spectral_radius;
use crate::error::{Error, Result};
use crate::graph::{NetworkOperators, SocialGraph, SCHUR_MARGIN};
use crate::linalg::{lu_solve, row_sums};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Measure {
    VarReduction,
    Eta,
    Bonacich,
    Intercentrality,
}

impl Measure {
    pub const ALL: [Measure; 4] = [
        Measure::VarReduction,
        Measure::Eta,
        Measure::Bonacich,
        Measure::Intercentrality,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Measure::VarReduction => "var_reduction",
            Measure::Eta => "eta",
            Measure::Bonacich => "bonacich",
            Measure::Intercentrality => "intercentrality",
        }
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Measure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Measure::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown measure '{s}'")))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct NodeScores {
    pub measure: Measure,
    pub scores: Vec<f64>,
    /// `scores / max(scores)`, or a copy when no score is positive.
    pub normalized: Vec<f64>,
}

impl NodeScores {
    pub fn new(measure: Measure, scores: Vec<f64>) -> Self {
        let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let normalized = if max > 0.0 {
            scores.iter().map(|s| s / max).collect()
        } else {
            scores.clone()
        };
        Self {
            measure,
            scores,
            normalized,
        }
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    /// Position of the largest score; ties go to the smallest position.
    pub fn argmax(&self) -> Option<usize> {
        argmax(&self.scores)
    }

    /// Positions sorted by decreasing score, ties by position.
    pub fn ranking(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.scores.len()).collect();
        idx.sort_by(|&i, &j| self.scores[j].total_cmp(&self.scores[i]).then(i.cmp(&j)));
        idx
    }
}

fn argmax(v: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &x) in v.iter().enumerate() {
        if best.is_none_or(|b| x > v[b]) {
            best = Some(i);
        }
    }
    best
}

/// `F({k}) = (C1)_k² / C_kk` for every regular `k`.
pub fn var_reduction_scores(c: &DMatrix<f64>) -> NodeScores {
    let c1 = row_sums(c);
    let scores = (0..c.nrows()).map(|k| c1[k] * c1[k] / c[(k, k)]).collect();
    NodeScores::new(Measure::VarReduction, scores)
}

/// `b_k² / M_kk` with `M = (I − G)⁻¹`, `b = M1`.
fn resolvent_key_player(g: &DMatrix<f64>, ctx: &'static str) -> Result<Vec<f64>> {
    let n = g.nrows();
    let m = lu_solve(&(DMatrix::identity(n, n) - g), &DMatrix::identity(n, n), ctx)?;
    let b = row_sums(&m);
    Ok((0..n).map(|k| b[k] * b[k] / m[(k, k)]).collect())
}

/// `η_k = ((I − A²)⁻¹1)_k² / ((I − A²)⁻¹)_kk`.
pub fn eta_scores(a: &DMatrix<f64>) -> Result<NodeScores> {
    let rho = spectral_radius(a);
    if rho >= 1.0 - SCHUR_MARGIN {
        return Err(Error::NotSchurStable(rho));
    }
    Ok(NodeScores::new(
        Measure::Eta,
        resolvent_key_player(&(a * a), "eta scores")?,
    ))
}

fn check_attenuated(g: &DMatrix<f64>, attenuation: f64) -> Result<DMatrix<f64>> {
    if g.nrows() != g.ncols() {
        return Err(Error::DimensionMismatch {
            expected: g.nrows(),
            got: g.ncols(),
        });
    }
    if !attenuation.is_finite() || attenuation < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "attenuation {attenuation} must be finite and nonnegative"
        )));
    }
    let ag = g * attenuation;
    let rho = spectral_radius(&ag);
    if rho >= 1.0 - SCHUR_MARGIN {
        return Err(Error::NotSchurStable(rho));
    }
    Ok(ag)
}

/// Bonacich centrality `b = (I − aG)⁻¹1`.
pub fn bonacich(g: &DMatrix<f64>, attenuation: f64) -> Result<NodeScores> {
    let ag = check_attenuated(g, attenuation)?;
    let n = g.nrows();
    let b = crate::linalg::lu_solve_vec(
        &(DMatrix::identity(n, n) - ag),
        &DVector::from_element(n, 1.0),
        "bonacich",
    )?;
    Ok(NodeScores::new(Measure::Bonacich, b.iter().copied().collect()))
}

/// Intercentrality `c_k = b_k² / M_kk` with `M = (I − aG)⁻¹`, `b = M1`.
pub fn intercentrality(g: &DMatrix<f64>, attenuation: f64) -> Result<NodeScores> {
    let ag = check_attenuated(g, attenuation)?;
    Ok(NodeScores::new(
        Measure::Intercentrality,
        resolvent_key_player(&ag, "intercentrality")?,
    ))
}

/// Base matrix for the walk-counting measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BonacichBase {
    /// Unweighted adjacency among regular agents.
    Adjacency,
    /// The normalized regular block `A`.
    #[default]
    Normalized,
}

impl std::str::FromStr for BonacichBase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "adjacency" => Ok(BonacichBase::Adjacency),
            "normalized" => Ok(BonacichBase::Normalized),
            _ => Err(Error::InvalidParameter(format!("unknown base matrix '{s}'"))),
        }
    }
}

pub fn base_matrix(g: &SocialGraph, ops: &NetworkOperators, base: BonacichBase) -> DMatrix<f64> {
    match base {
        BonacichBase::Normalized => ops.a.clone(),
        BonacichBase::Adjacency => {
            let r = g.regular();
            let adj = g.adjacency();
            DMatrix::from_fn(r.len(), r.len(), |i, j| adj[(r[i], r[j])])
        }
    }
}

/// Kendall rank correlation with the tau-b tie correction.
///
/// Returns `NaN` when either vector is constant.
pub fn kendall_tau_b(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len().min(y.len());
    let (mut concordant, mut discordant, mut ties_x, mut ties_y) = (0i64, 0i64, 0i64, 0i64);
    for i in 0..n {
        for j in i + 1..n {
            let (sx, sy) = (sign(x[i] - x[j]), sign(y[i] - y[j]));
            match (sx, sy) {
                (0, 0) => {}
                (0, _) => ties_x += 1,
                (_, 0) => ties_y += 1,
                _ if sx == sy => concordant += 1,
                _ => discordant += 1,
            }
        }
    }
    let n0 = (concordant + discordant + ties_x) as f64;
    let n1 = (concordant + discordant + ties_y) as f64;
    (concordant - discordant) as f64 / (n0 * n1).sqrt()
}

fn sign(v: f64) -> i8 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct KendallEntry {
    pub first: Measure,
    pub second: Measure,
    pub tau: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RankingReport {
    pub measures: Vec<Measure>,
    pub argmax: Vec<Option<usize>>,
    /// `normalized[m][k]` for measure `m` and regular position `k`.
    pub normalized: Vec<Vec<f64>>,
    pub kendall: Vec<KendallEntry>,
}

impl RankingReport {
    /// Whether every measure puts the same node on top.
    pub fn argmax_agree(&self) -> bool {
        self.argmax.windows(2).all(|w| w[0] == w[1])
    }
}

pub fn ranking_report(scores: &[NodeScores]) -> Result<RankingReport> {
    if let Some(first) = scores.first() {
        if let Some(bad) = scores.iter().find(|s| s.len() != first.len()) {
            return Err(Error::DimensionMismatch {
                expected: first.len(),
                got: bad.len(),
            });
        }
    }
    let mut kendall = Vec::new();
    for (i, a) in scores.iter().enumerate() {
        for b in &scores[i + 1..] {
            kendall.push(KendallEntry {
                first: a.measure,
                second: b.measure,
                tau: kendall_tau_b(&a.scores, &b.scores),
            });
        }
    }
    Ok(RankingReport {
        measures: scores.iter().map(|s| s.measure).collect(),
        argmax: scores.iter().map(NodeScores::argmax).collect(),
        normalized: scores.iter().map(|s| s.normalized.clone()).collect(),
        kendall,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibrium::{covariance_lyapunov, NoiseModel};
    use crate::graph::{generate_random_reachable, normalize, RandomGraphParams};
    use crate::objective::{f_score, ObservationSet};

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len()
            && a.iter()
                .zip(b)
                .all(|(x, y)| (x - y).abs() <= tol * x.abs().max(y.abs()).max(1e-300))
    }

    /// Cycle of `r` regular agents, each also tied to a single stubborn node.
    fn ring_with_hub(r: usize) -> SocialGraph {
        let n = r + 1;
        let mut w = DMatrix::zeros(n, n);
        for i in 0..r {
            let j = (i + 1) % r;
            w[(i, j)] = 1.0;
            w[(j, i)] = 1.0;
            w[(i, r)] = 1.0;
            w[(r, i)] = 1.0;
        }
        SocialGraph::new(w, [r]).unwrap()
    }

    #[test]
    fn var_reduction_trivial_cases() {
        let s = var_reduction_scores(&DMatrix::identity(4, 4));
        assert_eq!(s.scores, vec![1.0; 4]);
        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 0.5, 3.0]));
        assert_eq!(var_reduction_scores(&d).scores, vec![2.0, 0.5, 3.0]);
        assert_eq!(var_reduction_scores(&d).normalized, vec![2.0 / 3.0, 0.5 / 3.0, 1.0]);
    }

    #[test]
    fn var_reduction_matches_singleton_f() {
        let g = generate_random_reachable(RandomGraphParams::new(10, 3), 2).unwrap();
        let ops = normalize(&g).unwrap();
        let c = covariance_lyapunov(&ops.a, &NoiseModel::uniform(10, 1.3).unwrap(), 1e-12).unwrap();
        let s = var_reduction_scores(&c);
        for k in 0..10 {
            let f = f_score(&c, &ObservationSet::new(vec![k], 10).unwrap()).unwrap();
            assert!((s.scores[k] - f).abs() <= 1e-12 * f);
        }
    }

    #[test]
    fn eta_of_zero_operator_is_one() {
        assert_eq!(eta_scores(&DMatrix::zeros(3, 3)).unwrap().scores, vec![1.0; 3]);
    }

    #[test]
    fn eta_rejects_unstable_operator() {
        assert!(eta_scores(&DMatrix::identity(2, 2)).is_err());
    }

    #[test]
    fn vertex_transitive_instances_have_equal_scores() {
        let g = ring_with_hub(7);
        let ops = normalize(&g).unwrap();
        let eta = eta_scores(&ops.a).unwrap();
        assert!(eta.scores.iter().all(|&e| (e - eta.scores[0]).abs() < 1e-12 * e));
        let ic = intercentrality(&ops.a, 1.0).unwrap();
        assert!(ic.scores.iter().all(|&e| (e - ic.scores[0]).abs() < 1e-12 * e));
    }

    #[test]
    fn bonacich_trivial_cases() {
        assert_eq!(bonacich(&DMatrix::zeros(3, 3), 0.7).unwrap().scores, vec![1.0; 3]);
        let g = DMatrix::from_element(3, 3, 1.0);
        assert_eq!(bonacich(&g, 0.0).unwrap().scores, vec![1.0; 3]);
        assert_eq!(
            intercentrality(&DMatrix::zeros(2, 2), 0.5).unwrap().scores,
            vec![1.0; 2]
        );
    }

    #[test]
    fn bonacich_on_regular_graph() {
        // 6-cycle: every degree is 2
        let n = 6;
        let g = DMatrix::from_fn(
            n,
            n,
            |i, j| if (i + 1) % n == j || (j + 1) % n == i { 1.0 } else { 0.0 },
        );
        let a = 0.3;
        let b = bonacich(&g, a).unwrap();
        for v in &b.scores {
            assert!((v - 1.0 / (1.0 - a * 2.0)).abs() < 1e-12);
        }
        assert!(bonacich(&g, 0.5).is_err());
    }

    #[test]
    fn eta_equals_intercentrality_of_two_hop_operator() {
        for seed in 0..25 {
            let g = generate_random_reachable(RandomGraphParams::new(12, 3), seed).unwrap();
            let ops = normalize(&g).unwrap();
            let eta = eta_scores(&ops.a).unwrap();
            let ic = intercentrality(&(&ops.a * &ops.a), 1.0).unwrap();
            assert!(close(&eta.scores, &ic.scores, 1e-10));
        }
    }

    #[test]
    fn base_matrix_variants() {
        let g = ring_with_hub(5);
        let ops = normalize(&g).unwrap();
        assert_eq!(base_matrix(&g, &ops, BonacichBase::Normalized), ops.a);
        let adj = base_matrix(&g, &ops, BonacichBase::Adjacency);
        assert_eq!(adj.row_sum().iter().copied().collect::<Vec<_>>(), vec![2.0; 5]);
    }

    #[test]
    fn kendall_examples() {
        let x = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(kendall_tau_b(&x, &x), 1.0);
        assert_eq!(kendall_tau_b(&x, &[4.0, 3.0, 2.0, 1.0]), -1.0);
        // one discordant pair out of six
        assert!((kendall_tau_b(&x, &[1.0, 3.0, 2.0, 4.0]) - 4.0 / 6.0).abs() < 1e-15);
        assert!(kendall_tau_b(&x, &[1.0; 4]).is_nan());
    }

    #[test]
    fn ranking_report_examples() {
        let a = NodeScores::new(Measure::Eta, vec![0.2, 0.9, 0.5]);
        let b = NodeScores::new(Measure::Bonacich, vec![0.6, 2.7, 1.5]);
        let rep = ranking_report(&[a.clone(), b.clone()]).unwrap();
        assert_eq!(rep.kendall.len(), 1);
        assert_eq!(rep.kendall[0].tau, 1.0);
        assert!(rep.argmax_agree());
        assert_eq!(a.ranking(), b.ranking());

        let single = ranking_report(std::slice::from_ref(&a)).unwrap();
        assert!(single.kendall.is_empty());
        assert_eq!(single.normalized.len(), 1);

        let short = NodeScores::new(Measure::Eta, vec![1.0]);
        assert!(ranking_report(&[a, short]).is_err());
    }

    #[test]
    fn measure_names_round_trip() {
        for m in Measure::ALL {
            assert_eq!(m.name().parse::<Measure>().unwrap(), m);
        }
        assert!("pagerank".parse::<Measure>().is_err());
    }

    proptest::proptest! {
        #[test]
        fn prop_ranking_is_scale_invariant(v in proptest::collection::vec(-10.0f64..10.0, 1..20), t in 1e-3f64..1e3) {
            let a = NodeScores::new(Measure::Bonacich, v.clone());
            let b = NodeScores::new(Measure::Bonacich, v.iter().map(|x| x * t).collect());
            proptest::prop_assert_eq!(a.argmax(), b.argmax());
            proptest::prop_assert_eq!(a.ranking(), b.ranking());
        }

        #[test]
        fn prop_normalized_max_is_one(v in proptest::collection::vec(0.0f64..10.0, 1..20)) {
            let s = NodeScores::new(Measure::Eta, v);
            if s.scores.iter().any(|&x| x > 0.0) {
                let max = s.normalized.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                proptest::prop_assert_eq!(max, 1.0);
            }
        }
    }
}
