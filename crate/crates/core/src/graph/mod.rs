//! Weighted undirected social graphs with a stubborn/regular partition.
//!
//! Nodes are addressed by dense 0-based indices; the original labels read
//! from an edge list are kept alongside so results can be reported in the
//! caller's id space.

mod generate;
mod io;

pub use generate::{
    generate_cycle, generate_random_reachable, generate_random_weighted, generate_uniform_strength,
    generate_watts_strogatz, RandomGraphParams,
};
pub use io::{
    load_graph, parse_stubborn_list, read_stubborn_file, write_edge_list, write_stubborn_list, LoadOptions,
    SelfLoopPolicy,
};

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::equilibrium::spectral_radius;
use crate::error::{Error, Result};
use crate::linalg::{row_sums, submatrix};

/// Margin below 1 that `normalize` demands of ρ(A).
pub const SCHUR_MARGIN: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct SocialGraph {
    weights: DMatrix<f64>,
    labels: Vec<u64>,
    stubborn: Vec<usize>,
    regular: Vec<usize>,
}

impl SocialGraph {
    /// Builds a graph from a dense weight matrix.
    ///
    /// The matrix must be square, exactly symmetric, finite, nonnegative and
    /// have a zero diagonal. Stubborn indices are deduplicated and sorted.
    /// Reachability is not enforced here (see [`validate_reachability`]);
    /// [`normalize`] refuses graphs that violate it.
    pub fn new(weights: DMatrix<f64>, stubborn: impl IntoIterator<Item = usize>) -> Result<Self> {
        let n = weights.nrows();
        let labels = (0..n as u64).collect();
        Self::with_labels(weights, stubborn, labels)
    }

    pub fn with_labels(
        weights: DMatrix<f64>,
        stubborn: impl IntoIterator<Item = usize>,
        labels: Vec<u64>,
    ) -> Result<Self> {
        let n = weights.nrows();
        if weights.ncols() != n {
            return Err(Error::InvalidGraph(format!(
                "weight matrix is {}x{}",
                n,
                weights.ncols()
            )));
        }
        if labels.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: labels.len(),
            });
        }
        for i in 0..n {
            if weights[(i, i)] != 0.0 {
                return Err(Error::SelfLoop(labels[i]));
            }
            for j in 0..n {
                let w = weights[(i, j)];
                if !w.is_finite() || w < 0.0 {
                    return Err(Error::InvalidGraph(format!(
                        "weight ({}, {}) = {} is not a finite nonnegative number",
                        labels[i], labels[j], w
                    )));
                }
                if w != weights[(j, i)] {
                    return Err(Error::InvalidGraph(format!(
                        "weights not symmetric at ({}, {})",
                        labels[i], labels[j]
                    )));
                }
            }
        }
        let mut stubborn: Vec<usize> = stubborn.into_iter().collect();
        stubborn.sort_unstable();
        stubborn.dedup();
        if let Some(&bad) = stubborn.iter().find(|&&s| s >= n) {
            return Err(Error::StubbornOutOfRange(bad as u64));
        }
        let mut is_stubborn = vec![false; n];
        for &s in &stubborn {
            is_stubborn[s] = true;
        }
        let regular = (0..n).filter(|&i| !is_stubborn[i]).collect();
        Ok(Self {
            weights,
            labels,
            stubborn,
            regular,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.weights.nrows()
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    /// Original node labels, indexed by dense id.
    pub fn labels(&self) -> &[u64] {
        &self.labels
    }

    pub fn stubborn(&self) -> &[usize] {
        &self.stubborn
    }

    pub fn regular(&self) -> &[usize] {
        &self.regular
    }

    pub fn is_stubborn(&self, i: usize) -> bool {
        self.stubborn.binary_search(&i).is_ok()
    }

    /// Weighted degrees `w = W·1`.
    pub fn strengths(&self) -> DVector<f64> {
        row_sums(&self.weights)
    }

    /// Undirected edges `(i, j, W_ij)` with `i < j`, in row-major order.
    pub fn edges(&self) -> Vec<(usize, usize, f64)> {
        let n = self.n_nodes();
        let mut out = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                let w = self.weights[(i, j)];
                if w > 0.0 {
                    out.push((i, j, w));
                }
            }
        }
        out
    }

    pub fn n_edges(&self) -> usize {
        self.edges().len()
    }

    /// 0/1 adjacency matrix of the support of `W`.
    pub fn adjacency(&self) -> DMatrix<f64> {
        self.weights.map(|w| if w > 0.0 { 1.0 } else { 0.0 })
    }

    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.n_nodes()).filter(move |&j| self.weights[(i, j)] > 0.0)
    }

    /// Connected components, each sorted, ordered by smallest member.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let n = self.n_nodes();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            seen[start] = true;
            let mut comp = vec![start];
            let mut queue = VecDeque::from([start]);
            while let Some(u) = queue.pop_front() {
                for v in self.neighbors(u) {
                    if !seen[v] {
                        seen[v] = true;
                        comp.push(v);
                        queue.push_back(v);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    pub fn is_connected(&self) -> bool {
        self.components().len() <= 1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReachabilityReport {
    pub reachable: bool,
    /// Components that contain regular nodes but no stubborn node.
    pub orphan_components: Vec<Vec<usize>>,
    pub warnings: Vec<String>,
}

/// Checks that every connected component holding a regular node also holds
/// a stubborn node.
pub fn validate_reachability(g: &SocialGraph) -> ReachabilityReport {
    let mut warnings = Vec::new();
    if g.regular().is_empty() {
        warnings.push("no regular agents".to_string());
    }
    let orphan_components: Vec<Vec<usize>> = g
        .components()
        .into_iter()
        .filter(|c| c.iter().any(|&i| !g.is_stubborn(i)) && !c.iter().any(|&i| g.is_stubborn(i)))
        .collect();
    ReachabilityReport {
        reachable: orphan_components.is_empty(),
        orphan_components,
        warnings,
    }
}

/// Row-normalized interaction operators of a graph.
#[derive(Debug, Clone)]
pub struct NetworkOperators {
    /// Row-stochastic `P = [w]⁻¹ W` over all nodes.
    pub p: DMatrix<f64>,
    /// Regular block `P_RR`.
    pub a: DMatrix<f64>,
    /// Regular-to-stubborn block `P_RS`.
    pub b: DMatrix<f64>,
    /// Strengths `w_i = Σ_j W_ij` over all nodes.
    pub w: DVector<f64>,
    /// Spectral radius of `a`.
    pub rho: f64,
}

impl NetworkOperators {
    pub fn n_regular(&self) -> usize {
        self.a.nrows()
    }
}

pub fn normalize(g: &SocialGraph) -> Result<NetworkOperators> {
    if g.stubborn().is_empty() {
        return Err(Error::EmptyStubborn);
    }
    let w = g.strengths();
    if let Some(i) = (0..g.n_nodes()).find(|&i| w[i] <= 0.0) {
        return Err(Error::IsolatedNode(g.labels()[i]));
    }
    let report = validate_reachability(g);
    if !report.reachable {
        return Err(Error::Unreachable(report.orphan_components.len()));
    }
    let n = g.n_nodes();
    let p = DMatrix::from_fn(n, n, |i, j| g.weights()[(i, j)] / w[i]);
    let a = submatrix(&p, g.regular(), g.regular());
    let b = submatrix(&p, g.regular(), g.stubborn());
    let rho = spectral_radius(&a);
    if rho >= 1.0 - SCHUR_MARGIN {
        return Err(Error::NotSchurStable(rho));
    }
    Ok(NetworkOperators { p, a, b, w, rho })
}

/// Unit-weight graph joining distinct nodes linked by a path of length two.
pub fn two_hop_graph(g: &SocialGraph) -> SocialGraph {
    let adj = g.adjacency();
    let n = g.n_nodes();
    let sq = &adj * &adj;
    let weights = DMatrix::from_fn(n, n, |i, j| if i != j && sq[(i, j)] > 0.0 { 1.0 } else { 0.0 });
    SocialGraph::with_labels(weights, g.stubborn().iter().copied(), g.labels().to_vec())
        .expect("two-hop transform preserves graph invariants")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triangle_with_stubborn() -> SocialGraph {
        let w = DMatrix::from_row_slice(3, 3, &[0., 1., 1., 1., 0., 1., 1., 1., 0.]);
        SocialGraph::new(w, [2]).unwrap()
    }

    #[test]
    fn normalize_two_regulars_and_one_stubborn() {
        let ops = normalize(&triangle_with_stubborn()).unwrap();
        assert_eq!(ops.a, DMatrix::from_row_slice(2, 2, &[0.0, 0.5, 0.5, 0.0]));
        assert_eq!(ops.b, DMatrix::from_row_slice(2, 1, &[0.5, 0.5]));
        assert!((ops.rho - 0.5).abs() < 1e-10);
    }

    #[test]
    fn normalize_star_with_stubborn_leaf() {
        let w = DMatrix::from_row_slice(2, 2, &[0., 1., 1., 0.]);
        let ops = normalize(&SocialGraph::new(w, [1]).unwrap()).unwrap();
        assert_eq!(ops.a, DMatrix::from_element(1, 1, 0.0));
        assert_eq!(ops.b, DMatrix::from_element(1, 1, 1.0));
        assert_eq!(ops.rho, 0.0);
    }

    #[test]
    fn normalize_rejects_empty_stubborn_set() {
        let g = generate_cycle(5, 0).unwrap();
        assert!(matches!(normalize(&g), Err(Error::EmptyStubborn)));
    }

    #[test]
    fn normalize_rejects_orphan_component() {
        let mut w = DMatrix::zeros(4, 4);
        w[(0, 1)] = 1.0;
        w[(1, 0)] = 1.0;
        w[(2, 3)] = 1.0;
        w[(3, 2)] = 1.0;
        let g = SocialGraph::new(w, [0]).unwrap();
        assert!(matches!(normalize(&g), Err(Error::Unreachable(1))));
    }

    #[test]
    fn reachability_reports_orphans() {
        let mut w = DMatrix::zeros(5, 5);
        for (i, j) in [(0, 1), (2, 3), (3, 4)] {
            w[(i, j)] = 1.0;
            w[(j, i)] = 1.0;
        }
        let g = SocialGraph::new(w, [1]).unwrap();
        let r = validate_reachability(&g);
        assert!(!r.reachable);
        assert_eq!(r.orphan_components, vec![vec![2, 3, 4]]);
    }

    #[test]
    fn reachability_connected_graph() {
        let r = validate_reachability(&triangle_with_stubborn());
        assert!(r.reachable);
        assert!(r.warnings.is_empty());
    }

    #[test]
    fn reachability_stubborn_only() {
        let g = SocialGraph::new(DMatrix::zeros(3, 3), [0, 1, 2]).unwrap();
        let r = validate_reachability(&g);
        assert!(r.reachable);
        assert_eq!(r.warnings, vec!["no regular agents".to_string()]);
    }

    #[test]
    fn constructor_rejects_asymmetric_and_loops() {
        let w = DMatrix::from_row_slice(2, 2, &[0., 1., 2., 0.]);
        assert!(SocialGraph::new(w, [0]).is_err());
        let w = DMatrix::from_row_slice(2, 2, &[1., 1., 1., 0.]);
        assert!(matches!(SocialGraph::new(w, [0]), Err(Error::SelfLoop(0))));
        let w = DMatrix::from_row_slice(2, 2, &[0., 1., 1., 0.]);
        assert!(matches!(SocialGraph::new(w, [2]), Err(Error::StubbornOutOfRange(2))));
    }

    #[test]
    fn two_hop_of_cycle7_is_distance_two_circulant() {
        let g = two_hop_graph(&generate_cycle(7, 0).unwrap());
        for i in 0..7 {
            for j in 0..7 {
                let d = (i as i64 - j as i64).rem_euclid(7);
                let expected = if d == 2 || d == 5 { 1.0 } else { 0.0 };
                assert_eq!(g.weights()[(i, j)], expected, "({i}, {j})");
            }
        }
    }

    #[test]
    fn two_hop_of_single_edge_is_empty() {
        let w = DMatrix::from_row_slice(2, 2, &[0., 1., 1., 0.]);
        let g = two_hop_graph(&SocialGraph::new(w, [1]).unwrap());
        assert_eq!(g.n_edges(), 0);
    }

    #[test]
    fn two_hop_of_triangle_is_triangle() {
        let g = triangle_with_stubborn();
        assert_eq!(two_hop_graph(&g).weights(), &g.adjacency());
    }

    proptest::proptest! {
        #![proptest_config(proptest::test_runner::Config::with_cases(64))]

        #[test]
        fn prop_normalized_operators_are_substochastic(r in 1usize..25, s in 1usize..5, seed in 0u64..10_000) {
            let g = generate_random_reachable(RandomGraphParams::new(r, s), seed).unwrap();
            let ops = normalize(&g).unwrap();
            for i in 0..ops.p.nrows() {
                proptest::prop_assert!((ops.p.row(i).sum() - 1.0).abs() < 1e-12);
            }
            for i in 0..r {
                let total = ops.a.row(i).sum() + ops.b.row(i).sum();
                proptest::prop_assert!((total - 1.0).abs() < 1e-12);
            }
            proptest::prop_assert!(ops.rho < 1.0);
        }
    }
}
