use std::collections::HashMap;
use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use log::warn;
use nalgebra::DVector;
use pollsel::equilibrium::NoiseModel;
use pollsel::graph::{
    load_graph, normalize, parse_stubborn_list, read_stubborn_file, LoadOptions, NetworkOperators, SelfLoopPolicy,
    SocialGraph,
};

use crate::cli::{GraphArgs, SelfLoops};
use crate::error::{CliError, CliResult};

/// Everything needed to describe one graph on the command line.
pub struct GraphSource<'a> {
    pub graph: &'a Path,
    pub stubborn: Option<&'a str>,
    pub stubborn_file: Option<&'a Path>,
    pub sigma2: &'a str,
    pub opinions: &'a str,
    pub self_loops: SelfLoops,
}

impl<'a> From<&'a GraphArgs> for GraphSource<'a> {
    fn from(a: &'a GraphArgs) -> Self {
        Self {
            graph: &a.graph,
            stubborn: a.stubborn.as_deref(),
            stubborn_file: a.stubborn_file.as_deref(),
            sigma2: &a.sigma2,
            opinions: &a.opinions,
            self_loops: a.self_loops,
        }
    }
}

pub struct Instance {
    pub graph: SocialGraph,
    pub ops: NetworkOperators,
    pub noise: NoiseModel,
    pub u: DVector<f64>,
}

fn open(path: &Path) -> CliResult<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| CliError::io(path, e))
}

pub fn load_instance(src: GraphSource<'_>) -> CliResult<Instance> {
    let stubborn = match (src.stubborn, src.stubborn_file) {
        (Some(list), _) => parse_stubborn_list(list)?,
        (None, Some(path)) => read_stubborn_file(open(path)?)?,
        (None, None) => {
            return Err(CliError::Usage(
                "one of --stubborn or --stubborn-file is required".into(),
            ))
        }
    };
    let opts = LoadOptions {
        self_loops: match src.self_loops {
            SelfLoops::Reject => SelfLoopPolicy::Reject,
            SelfLoops::Zero => SelfLoopPolicy::Zero,
        },
    };
    let graph = load_graph(open(src.graph)?, &stubborn, opts)?;
    let ops = normalize(&graph)?;
    let regular_labels: Vec<u64> = graph.regular().iter().map(|&i| graph.labels()[i]).collect();
    let stubborn_labels: Vec<u64> = graph.stubborn().iter().map(|&i| graph.labels()[i]).collect();
    let sigma2 = per_node_values(src.sigma2, "--sigma2", &regular_labels, &stubborn_labels)?;
    let noise = NoiseModel::new(sigma2)?;
    let u = DVector::from_vec(per_node_values(
        src.opinions,
        "--opinions",
        &stubborn_labels,
        &regular_labels,
    )?);
    Ok(Instance { graph, ops, noise, u })
}

/// Parses `uniform:VALUE` or a two-column `node value` file into a vector
/// aligned with `targets`. Rows for `ignored` labels are skipped with a warning.
pub fn per_node_values(spec: &str, flag: &str, targets: &[u64], ignored: &[u64]) -> CliResult<Vec<f64>> {
    if let Some(v) = spec.strip_prefix("uniform:") {
        let value: f64 = v
            .parse()
            .map_err(|_| CliError::Usage(format!("{flag}: invalid value {v:?}")))?;
        return Ok(vec![value; targets.len()]);
    }
    let path = Path::new(spec);
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let index: HashMap<u64, usize> = targets.iter().enumerate().map(|(i, &l)| (l, i)).collect();
    let mut values = vec![None; targets.len()];
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|f| !f.is_empty())
            .collect();
        let bad = || CliError::Usage(format!("{}:{}: expected `node value`", path.display(), n + 1));
        let [label, value] = fields[..] else {
            return Err(bad());
        };
        let label: u64 = label.parse().map_err(|_| bad())?;
        let value: f64 = value.parse().map_err(|_| bad())?;
        match index.get(&label) {
            Some(&i) => {
                if values[i].replace(value).is_some() {
                    return Err(CliError::Usage(format!("{flag}: node {label} listed twice")));
                }
            }
            None if ignored.contains(&label) => warn!("{flag}: ignoring node {label}"),
            None => return Err(CliError::Usage(format!("{flag}: unknown node {label}"))),
        }
    }
    values
        .into_iter()
        .zip(targets)
        .map(|(v, l)| v.ok_or_else(|| CliError::Usage(format!("{flag}: no value for node {l}"))))
        .collect()
}
