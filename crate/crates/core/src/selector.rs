//! Cardinality-constrained maximization of the variance reduction `F`.
//!
//! [`greedy_select`] keeps `(C_KK)⁻¹` up to date by bordering it with one
//! row and column per round, so each marginal gain costs `O(|K|²)`:
//!
//! ```text
//! b = C_{K,i},  schur = C_ii − bᵀ M b,  gain = ((C1)_i − bᵀ M (C1)_K)² / schur
//! ```
//!
//! [`exact_select`] enumerates all subsets of the requested size and is the
//! oracle the greedy result is measured against.

use std::time::{Duration, Instant};

use log::warn;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::equilibrium::precision;
use crate::error::{Error, Result};
use crate::linalg::row_sums;
use crate::objective::{f_score, g_score, var_y, ObservationSet};

/// Schur complements at or below `SCHUR_GUARD · C_ii` are treated as degenerate.
pub const SCHUR_GUARD: f64 = 1e-12;

/// Default cap on the number of subsets `exact_select` will enumerate.
pub const DEFAULT_SUBSET_BUDGET: f64 = 1e7;

/// Incremental state of a greedy run.
#[derive(Debug, Clone)]
pub struct GreedyState {
    c1: DVector<f64>,
    chosen: Vec<usize>,
    /// `(C_KK)⁻¹`
    m: DMatrix<f64>,
    /// `M v`
    mv: DVector<f64>,
    f_current: f64,
    /// Marginal-gain evaluations performed so far by the driver.
    pub eval_count: usize,
}

struct CandidateEval {
    gain: f64,
    schur: f64,
    mb: DVector<f64>,
}

impl GreedyState {
    pub fn new(c: &DMatrix<f64>) -> Self {
        Self {
            c1: row_sums(c),
            chosen: Vec::new(),
            m: DMatrix::zeros(0, 0),
            mv: DVector::zeros(0),
            f_current: 0.0,
            eval_count: 0,
        }
    }

    pub fn chosen(&self) -> &[usize] {
        &self.chosen
    }

    pub fn inverse(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn f_current(&self) -> f64 {
        self.f_current
    }

    pub fn observation_set(&self) -> ObservationSet {
        ObservationSet::new(self.chosen.clone(), self.c1.len()).expect("greedy state holds a valid set")
    }

    fn evaluate(&self, c: &DMatrix<f64>, i: usize) -> Result<CandidateEval> {
        if i >= c.nrows() {
            return Err(Error::InvalidParameter(format!("candidate {i} out of range")));
        }
        if self.chosen.contains(&i) {
            return Err(Error::InvalidParameter(format!("candidate {i} already chosen")));
        }
        let b = DVector::from_iterator(self.chosen.len(), self.chosen.iter().map(|&k| c[(k, i)]));
        let mb = &self.m * &b;
        let cii = c[(i, i)];
        let schur = cii - b.dot(&mb);
        if !(schur > SCHUR_GUARD * cii) {
            return Err(Error::DegenerateCandidate { candidate: i, schur });
        }
        let num = self.c1[i] - b.dot(&self.mv);
        Ok(CandidateEval {
            gain: num * num / schur,
            schur,
            mb,
        })
    }
}

/// `F(K ∪ {i}) − F(K)` from the incremental state; does not mutate it.
pub fn marginal_gain(state: &GreedyState, c: &DMatrix<f64>, i: usize) -> Result<f64> {
    state.evaluate(c, i).map(|e| e.gain)
}

/// Adds `i` to the state, bordering `(C_KK)⁻¹` via its Schur complement.
pub fn extend_inverse(state: GreedyState, c: &DMatrix<f64>, i: usize) -> Result<GreedyState> {
    let CandidateEval { gain, schur, mb } = state.evaluate(c, i)?;
    let k = state.chosen.len();
    let mut m = DMatrix::zeros(k + 1, k + 1);
    m.view_mut((0, 0), (k, k))
        .copy_from(&(&state.m + &mb * mb.transpose() / schur));
    for r in 0..k {
        m[(r, k)] = -mb[r] / schur;
        m[(k, r)] = -mb[r] / schur;
    }
    m[(k, k)] = 1.0 / schur;
    let mut chosen = state.chosen;
    chosen.push(i);
    let v = DVector::from_iterator(k + 1, chosen.iter().map(|&j| state.c1[j]));
    let mv = &m * &v;
    Ok(GreedyState {
        c1: state.c1,
        chosen,
        m,
        mv,
        f_current: state.f_current + gain,
        eval_count: state.eval_count,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SelectionResult {
    /// Regular-block positions in selection order (ascending for exact).
    pub chosen: Vec<usize>,
    /// `F` increments per prefix.
    pub gains: Vec<f64>,
    /// `F` of each prefix, starting with `F(∅) = 0`.
    pub f_values: Vec<f64>,
    /// `1ᵀC1 − F` of each prefix.
    pub g_values: Vec<f64>,
    pub eval_count: usize,
    #[serde(serialize_with = "serialize_secs")]
    pub wall_time: Duration,
}

fn serialize_secs<S: serde::Serializer>(d: &Duration, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_f64(d.as_secs_f64())
}

impl SelectionResult {
    pub fn f_final(&self) -> f64 {
        *self.f_values.last().unwrap_or(&0.0)
    }

    /// `G / 1ᵀC1` per prefix.
    pub fn residual_fractions(&self) -> Vec<f64> {
        let total = self.f_values[0] + self.g_values[0];
        self.g_values
            .iter()
            .map(|g| if total > 0.0 { g / total } else { 0.0 })
            .collect()
    }
}

fn check_cardinality(c: &DMatrix<f64>, s: usize) -> Result<()> {
    if c.nrows() != c.ncols() {
        return Err(Error::DimensionMismatch {
            expected: c.nrows(),
            got: c.ncols(),
        });
    }
    if s > c.nrows() {
        return Err(Error::InvalidParameter(format!(
            "cardinality {s} exceeds the {} regular agents",
            c.nrows()
        )));
    }
    Ok(())
}

/// Greedy selection of `s` regular agents.
///
/// Each round evaluates every unchosen candidate and keeps the largest gain,
/// ties going to the smallest position. Rounds with zero gain still pick a
/// node. Performs exactly `n·s − s(s−1)/2` gain evaluations.
pub fn greedy_select(c: &DMatrix<f64>, s: usize) -> Result<SelectionResult> {
    check_cardinality(c, s)?;
    let start = Instant::now();
    let n = c.nrows();
    let total = var_y(c);
    let mut state = GreedyState::new(c);
    let mut gains = Vec::with_capacity(s);
    let mut f_values = vec![0.0];
    for round in 1..=s {
        let mut best: Option<(usize, f64)> = None;
        for i in 0..n {
            if state.chosen.contains(&i) {
                continue;
            }
            state.eval_count += 1;
            match marginal_gain(&state, c, i) {
                Ok(g) => {
                    if best.is_none_or(|(_, bg)| g > bg) {
                        best = Some((i, g));
                    }
                }
                Err(Error::DegenerateCandidate { candidate, schur }) => {
                    warn!("round {round}: skipping candidate {candidate} (Schur complement {schur:e})");
                }
                Err(e) => return Err(e),
            }
        }
        let (i, g) = best.ok_or(Error::DegenerateCandidates(round))?;
        state = extend_inverse(state, c, i)?;
        gains.push(g);
        f_values.push(state.f_current);
    }
    let g_values = f_values.iter().map(|f| total - f).collect();
    Ok(SelectionResult {
        chosen: state.chosen,
        gains,
        f_values,
        g_values,
        eval_count: state.eval_count,
        wall_time: start.elapsed(),
    })
}

/// `C(n, k)` as a float, to compare against budgets without overflow.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, j| acc * (n - j) as f64 / (j + 1) as f64)
}

/// Exhaustive maximization of `F` over subsets of size `s`.
///
/// Ties go to the lexicographically smallest index sequence. Refuses to run
/// when `C(n, s)` exceeds `budget`.
pub fn exact_select(c: &DMatrix<f64>, s: usize, budget: f64) -> Result<SelectionResult> {
    check_cardinality(c, s)?;
    let n = c.nrows();
    let subsets = binomial(n, s);
    if subsets > budget {
        return Err(Error::BudgetExceeded { subsets, budget });
    }
    let start = Instant::now();
    let mut idx: Vec<usize> = (0..s).collect();
    let mut best: Option<(Vec<usize>, f64)> = None;
    let mut evals = 0usize;
    loop {
        evals += 1;
        let f = f_score(c, &ObservationSet::new(idx.clone(), n)?)?;
        if best.as_ref().is_none_or(|(_, bf)| f > *bf) {
            best = Some((idx.clone(), f));
        }
        // next combination in lexicographic order
        let Some(pos) = (0..s).rev().find(|&p| idx[p] < n - s + p) else {
            break;
        };
        idx[pos] += 1;
        for q in pos + 1..s {
            idx[q] = idx[q - 1] + 1;
        }
    }
    let (chosen, _) = best.expect("at least one subset is enumerated");
    let total = var_y(c);
    let mut f_values = vec![0.0];
    for t in 1..=s {
        f_values.push(f_score(c, &ObservationSet::new(chosen[..t].to_vec(), n)?)?);
    }
    let gains = f_values.windows(2).map(|w| w[1] - w[0]).collect();
    let g_values = f_values.iter().map(|f| total - f).collect();
    Ok(SelectionResult {
        chosen,
        gains,
        f_values,
        g_values,
        eval_count: evals,
        wall_time: start.elapsed(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum AuditMode {
    Exhaustive,
    Sampled,
}

/// A triple `A ⊆ B`, `k ∉ B` of regular positions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditTriple {
    pub a: Vec<usize>,
    pub b: Vec<usize>,
    pub k: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct SubmodularityReport {
    pub mode: AuditMode,
    pub triples: usize,
    /// Smallest `[F(A∪k) − F(A)] − [F(B∪k) − F(B)]`.
    pub min_slack_f: f64,
    /// Smallest `[G(B∪k) − G(B)] − [G(A∪k) − G(A)]`.
    pub min_slack_g: f64,
    pub violations_f: usize,
    pub violations_g: usize,
    pub worst_f: Option<AuditTriple>,
    pub worst_g: Option<AuditTriple>,
}

impl SubmodularityReport {
    pub fn passed(&self) -> bool {
        self.violations_f == 0 && self.violations_g == 0
    }
}

#[derive(Debug, Clone, Copy)]
pub struct AuditOptions {
    /// Largest `|R|` audited exhaustively.
    pub exhaustive_limit: usize,
    /// Triples drawn in sampled mode.
    pub samples: usize,
    pub seed: u64,
}

impl Default for AuditOptions {
    fn default() -> Self {
        Self {
            exhaustive_limit: 8,
            samples: 2000,
            seed: 0,
        }
    }
}

/// Roundoff allowance for one diminishing-returns comparison.
pub fn audit_tolerance(values: &[f64]) -> f64 {
    1e-9 * (1.0 + values.iter().fold(0.0f64, |m, v| m.max(v.abs())))
}

struct Audit {
    report: SubmodularityReport,
}

impl Audit {
    fn new(mode: AuditMode) -> Self {
        Self {
            report: SubmodularityReport {
                mode,
                triples: 0,
                min_slack_f: f64::INFINITY,
                min_slack_g: f64::INFINITY,
                violations_f: 0,
                violations_g: 0,
                worst_f: None,
                worst_g: None,
            },
        }
    }

    /// `f` and `g` hold `[X(A), X(A∪k), X(B), X(B∪k)]`.
    fn record(&mut self, f: [f64; 4], g: [f64; 4], triple: impl Fn() -> AuditTriple) {
        let r = &mut self.report;
        r.triples += 1;
        let slack_f = (f[1] - f[0]) - (f[3] - f[2]);
        let slack_g = (g[3] - g[2]) - (g[1] - g[0]);
        if slack_f < r.min_slack_f {
            r.min_slack_f = slack_f;
            r.worst_f = Some(triple());
        }
        if slack_g < r.min_slack_g {
            r.min_slack_g = slack_g;
            r.worst_g = Some(triple());
        }
        if slack_f < -audit_tolerance(&f) {
            r.violations_f += 1;
        }
        if slack_g < -audit_tolerance(&g) {
            r.violations_g += 1;
        }
    }
}

fn mask_members(mask: usize, n: usize) -> Vec<usize> {
    (0..n).filter(|&i| mask >> i & 1 == 1).collect()
}

/// Checks diminishing returns of `F` and increasing returns of `G` over
/// triples `A ⊆ B ⊆ R`, `k ∉ B`.
///
/// Exhaustive when `|R| ≤ exhaustive_limit`, otherwise over randomly drawn
/// triples. `G` is evaluated from `H = C⁻¹`, independently of `F`.
pub fn submodularity_audit(c: &DMatrix<f64>, opts: &AuditOptions) -> Result<SubmodularityReport> {
    let n = c.nrows();
    let h = precision(c)?;
    if n <= opts.exhaustive_limit && n < usize::BITS as usize {
        let size = 1usize << n;
        let mut f = vec![0.0; size];
        let mut g = vec![0.0; size];
        for mask in 0..size {
            let k = ObservationSet::from_mask(mask as u64, n);
            f[mask] = f_score(c, &k)?;
            g[mask] = g_score(&h, &k)?;
        }
        let mut audit = Audit::new(AuditMode::Exhaustive);
        for b in 0..size {
            let mut a = b;
            loop {
                for k in (0..n).filter(|&k| b >> k & 1 == 0) {
                    let (ak, bk) = (a | 1 << k, b | 1 << k);
                    audit.record([f[a], f[ak], f[b], f[bk]], [g[a], g[ak], g[b], g[bk]], || AuditTriple {
                        a: mask_members(a, n),
                        b: mask_members(b, n),
                        k,
                    });
                }
                if a == 0 {
                    break;
                }
                a = (a - 1) & b;
            }
        }
        return Ok(audit.report);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut audit = Audit::new(AuditMode::Sampled);
    if n == 0 {
        return Ok(audit.report);
    }
    for _ in 0..opts.samples {
        let k = rng.random_range(0..n);
        let b: Vec<usize> = (0..n).filter(|&i| i != k && rng.random_bool(0.5)).collect();
        let a: Vec<usize> = b.iter().copied().filter(|_| rng.random_bool(0.5)).collect();
        let sets = [
            a.clone(),
            [a.as_slice(), &[k]].concat(),
            b.clone(),
            [b.as_slice(), &[k]].concat(),
        ];
        let mut fv = [0.0; 4];
        let mut gv = [0.0; 4];
        for (slot, members) in sets.into_iter().enumerate() {
            let set = ObservationSet::new(members, n)?;
            fv[slot] = f_score(c, &set)?;
            gv[slot] = g_score(&h, &set)?;
        }
        audit.record(fv, gv, || AuditTriple {
            a: a.clone(),
            b: b.clone(),
            k,
        });
    }
    Ok(audit.report)
}

/// Lower bound `1 − 1/e` on the greedy/optimal ratio for monotone submodular `F`.
pub fn greedy_bound() -> f64 {
    1.0 - (-1.0f64).exp()
}

#[derive(Debug, Clone, Serialize)]
pub struct GuaranteeReport {
    pub s: usize,
    pub f_greedy: f64,
    pub f_exact: f64,
    pub ratio: f64,
    pub bound: f64,
    pub passed: bool,
    pub greedy_set: Vec<usize>,
    pub exact_set: Vec<usize>,
}

/// Compares greedy against exhaustive search for cardinality `s`.
pub fn guarantee_check(c: &DMatrix<f64>, s: usize, budget: f64) -> Result<GuaranteeReport> {
    let exact = exact_select(c, s, budget)?;
    let greedy = greedy_select(c, s)?;
    let (f_greedy, f_exact) = (greedy.f_final(), exact.f_final());
    let ratio = if f_exact > 0.0 { f_greedy / f_exact } else { 1.0 };
    let bound = greedy_bound();
    let mut exact_set = exact.chosen;
    exact_set.sort_unstable();
    Ok(GuaranteeReport {
        s,
        f_greedy,
        f_exact,
        ratio,
        bound,
        passed: ratio >= bound - 1e-9,
        greedy_set: greedy.chosen,
        exact_set,
    })
}
