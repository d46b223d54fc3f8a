use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use pollsel::centrality::{KendallEntry, NodeScores};
use pollsel::equilibrium::MomentsMethod;
use serde::Serialize;
use tempfile::NamedTempFile;

use crate::error::{CliError, CliResult};
use crate::input::Instance;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Serialize)]
pub struct ResultDocument {
    pub schema: u32,
    pub command: &'static str,
    pub meta: Meta,
    pub graph: Option<GraphSummary>,
    pub moments_method: Option<MomentsMethod>,
    pub selection: Option<Selection>,
    pub curve: Option<Vec<CurveRow>>,
    pub scores: Option<Scores>,
    pub validation: Option<Validation>,
}

impl ResultDocument {
    pub fn new(command: &'static str, meta: Meta) -> Self {
        Self {
            schema: SCHEMA_VERSION,
            command,
            meta,
            graph: None,
            moments_method: None,
            selection: None,
            curve: None,
            scores: None,
            validation: None,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Meta {
    pub tool: &'static str,
    pub version: &'static str,
    pub seed: u64,
    pub tolerances: ToleranceSummary,
    /// Wall-clock figures; the only part of a document that varies between
    /// identical runs.
    pub timing: Timing,
    pub eval_count: Option<usize>,
    pub notes: Vec<String>,
}

#[derive(Debug, Serialize)]
pub struct ToleranceSummary {
    pub lyapunov: f64,
    pub symmetry: f64,
}

#[derive(Debug, Default, Serialize)]
pub struct Timing {
    pub total_s: f64,
    pub selection_s: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct GraphSummary {
    pub n: usize,
    pub n_stubborn: usize,
    pub n_regular: usize,
    pub n_edges: usize,
    pub spectral_radius: f64,
    /// Node ids of the regular agents; every per-agent array follows this order.
    pub regular_ids: Vec<u64>,
    pub stubborn_ids: Vec<u64>,
}

impl GraphSummary {
    pub fn of(inst: &Instance) -> Self {
        let g = &inst.graph;
        Self {
            n: g.n_nodes(),
            n_stubborn: g.stubborn().len(),
            n_regular: g.regular().len(),
            n_edges: g.n_edges(),
            spectral_radius: inst.ops.rho,
            regular_ids: g.regular().iter().map(|&i| g.labels()[i]).collect(),
            stubborn_ids: g.stubborn().iter().map(|&i| g.labels()[i]).collect(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Selection {
    pub method: &'static str,
    pub k: usize,
    /// Selected node ids in selection order.
    pub ids: Vec<u64>,
    pub gains: Vec<f64>,
    /// `F` of each prefix, starting from the empty set.
    pub f_values: Vec<f64>,
    pub g_values: Vec<f64>,
    pub residual_fractions: Vec<f64>,
    /// `1ᵀC1`.
    pub var_total: f64,
    pub estimator: Estimator,
}

/// Predictor of the average regular opinion from the selected agents.
#[derive(Debug, Serialize)]
pub struct Estimator {
    /// Coefficients aligned with `ids`.
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    /// Expected squared error, `G(K) / |R|²`.
    pub mse: f64,
}

#[derive(Debug, Serialize)]
pub struct CurveRow {
    pub k: usize,
    pub method: &'static str,
    pub residual_pct: f64,
}

#[derive(Debug, Serialize)]
pub struct Scores {
    pub attenuation: f64,
    pub base_matrix: String,
    pub measures: Vec<NodeScores>,
    /// Node id with the largest score, per measure.
    pub argmax_ids: Vec<Option<u64>>,
    pub kendall: Vec<KendallEntry>,
}

#[derive(Debug, Serialize)]
pub struct Validation {
    pub suite: &'static str,
    pub passed: bool,
    pub summary: String,
    pub reports: serde_json::Value,
}

/// Writes `text` to `out` through a temporary file in the same directory,
/// or to standard output.
pub fn emit(text: &str, out: Option<&Path>) -> CliResult<()> {
    match out {
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| CliError::io("<stdout>", e))
        }
        Some(path) => write_atomic(path, text.as_bytes()),
    }
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = NamedTempFile::new_in(dir).map_err(|e| CliError::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

pub fn to_json(doc: &ResultDocument) -> CliResult<String> {
    let mut s = serde_json::to_string_pretty(doc).map_err(|e| CliError::Output(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn to_csv(doc: &ResultDocument) -> String {
    let mut s = String::new();
    if let Some(rows) = &doc.curve {
        s.push_str("k,method,residual_pct\n");
        for r in rows {
            let _ = writeln!(s, "{},{},{}", r.k, r.method, r.residual_pct);
        }
    } else if let Some(sel) = &doc.selection {
        s.push_str("step,id,gain,f_value,g_value,residual_fraction\n");
        for t in 0..sel.f_values.len() {
            let (id, gain) = if t == 0 {
                (String::new(), String::new())
            } else {
                (sel.ids[t - 1].to_string(), sel.gains[t - 1].to_string())
            };
            let _ = writeln!(
                s,
                "{t},{id},{gain},{},{},{}",
                sel.f_values[t], sel.g_values[t], sel.residual_fractions[t]
            );
        }
    } else if let Some(scores) = &doc.scores {
        s.push_str("id");
        for m in &scores.measures {
            let _ = write!(s, ",{0},{0}_normalized", m.measure);
        }
        s.push('\n');
        let ids = doc.graph.as_ref().map(|g| g.regular_ids.clone()).unwrap_or_default();
        for (k, id) in ids.iter().enumerate() {
            let _ = write!(s, "{id}");
            for m in &scores.measures {
                let _ = write!(s, ",{},{}", m.scores[k], m.normalized[k]);
            }
            s.push('\n');
        }
    } else if let Some(v) = &doc.validation {
        s.push_str("suite,passed,summary\n");
        let _ = writeln!(s, "{},{},\"{}\"", v.suite, v.passed, v.summary.replace('"', "\"\""));
    }
    s
}
