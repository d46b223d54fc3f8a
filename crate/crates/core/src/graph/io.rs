use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, Write};

use log::warn;
use nalgebra::DMatrix;

use super::{validate_reachability, SocialGraph};
use crate::error::{Error, Result};

/// What to do with `i i w` records.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SelfLoopPolicy {
    #[default]
    Reject,
    /// Drop the record and log a warning.
    Zero,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct LoadOptions {
    pub self_loops: SelfLoopPolicy,
}

fn fields(line: &str) -> impl Iterator<Item = &str> {
    line.split(|c: char| c.is_whitespace() || c == ',')
        .filter(|f| !f.is_empty())
}

fn parse_id(field: &str, line: usize) -> Result<u64> {
    field.parse().map_err(|_| Error::Parse {
        line,
        message: format!("invalid node id {field:?}"),
    })
}

/// Reads a weighted edge list.
///
/// One `i j w` record per line, fields separated by whitespace or commas;
/// blank lines and lines starting with `#` are skipped. Labels are remapped
/// to dense indices in ascending label order. `stubborn` holds labels.
pub fn load_graph<R: BufRead>(reader: R, stubborn: &[u64], opts: LoadOptions) -> Result<SocialGraph> {
    let mut edges: BTreeMap<(u64, u64), f64> = BTreeMap::new();
    let mut ids = BTreeSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let f: Vec<&str> = fields(trimmed).collect();
        if f.len() != 3 {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected 3 fields `i j w`, found {}", f.len()),
            });
        }
        let i = parse_id(f[0], line_no)?;
        let j = parse_id(f[1], line_no)?;
        let w: f64 = f[2].parse().map_err(|_| Error::Parse {
            line: line_no,
            message: format!("invalid weight {:?}", f[2]),
        })?;
        if !(w.is_finite() && w > 0.0) {
            return Err(Error::Parse {
                line: line_no,
                message: format!("weight must be positive, got {w}"),
            });
        }
        ids.insert(i);
        ids.insert(j);
        if i == j {
            match opts.self_loops {
                SelfLoopPolicy::Reject => return Err(Error::SelfLoop(i)),
                SelfLoopPolicy::Zero => {
                    warn!("line {line_no}: dropping self-loop on node {i}");
                    continue;
                }
            }
        }
        let key = (i.min(j), i.max(j));
        match edges.get(&key) {
            Some(&prev) if prev != w => {
                return Err(Error::ConflictingEdge {
                    i: key.0,
                    j: key.1,
                    first: prev,
                    second: w,
                })
            }
            Some(_) => {}
            None => {
                edges.insert(key, w);
            }
        }
    }

    if stubborn.is_empty() {
        return Err(Error::EmptyStubborn);
    }
    let labels: Vec<u64> = ids.into_iter().collect();
    let index = |label: u64| labels.binary_search(&label).ok();
    let n = labels.len();
    let mut weights = DMatrix::zeros(n, n);
    for (&(i, j), &w) in &edges {
        let (a, b) = (index(i).unwrap(), index(j).unwrap());
        weights[(a, b)] = w;
        weights[(b, a)] = w;
    }
    let stubborn_idx = stubborn
        .iter()
        .map(|&s| index(s).ok_or(Error::StubbornOutOfRange(s)))
        .collect::<Result<Vec<_>>>()?;
    let g = SocialGraph::with_labels(weights, stubborn_idx, labels)?;
    if let Some(&i) = g.regular().iter().find(|&&i| g.neighbors(i).next().is_none()) {
        return Err(Error::IsolatedNode(g.labels()[i]));
    }
    let report = validate_reachability(&g);
    if !report.reachable {
        return Err(Error::Unreachable(report.orphan_components.len()));
    }
    Ok(g)
}

/// Parses a `3,7,12` style id list.
pub fn parse_stubborn_list(text: &str) -> Result<Vec<u64>> {
    fields(text).map(|f| parse_id(f, 1)).collect()
}

/// Reads one id per line; `#` comments and blank lines are skipped.
pub fn read_stubborn_file<R: BufRead>(reader: R) -> Result<Vec<u64>> {
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        out.push(parse_id(t, idx + 1)?);
    }
    Ok(out)
}

/// Writes the canonical edge list: original labels, `i < j` by dense index,
/// shortest round-trip float formatting.
pub fn write_edge_list<W: Write>(g: &SocialGraph, mut out: W) -> Result<()> {
    writeln!(out, "# nodes {} edges {}", g.n_nodes(), g.n_edges())?;
    let labels = g.labels();
    for (i, j, w) in g.edges() {
        writeln!(out, "{} {} {}", labels[i], labels[j], w)?;
    }
    Ok(())
}

pub fn write_stubborn_list<W: Write>(g: &SocialGraph, mut out: W) -> Result<()> {
    for &s in g.stubborn() {
        writeln!(out, "{}", g.labels()[s])?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn load(text: &str, stubborn: &[u64]) -> Result<SocialGraph> {
        load_graph(text.as_bytes(), stubborn, LoadOptions::default())
    }

    #[test]
    fn smallest_valid_instance() {
        let g = load("0 1 1.0\n", &[1]).unwrap();
        assert_eq!(g.regular(), &[0]);
        assert_eq!(g.stubborn(), &[1]);
        assert_eq!(g.weights()[(0, 1)], 1.0);
        assert_eq!(g.weights()[(1, 0)], 1.0);
    }

    #[test]
    fn empty_stubborn_set_is_an_error() {
        let err = load("0 1 1.0\n", &[]).unwrap_err();
        assert_eq!(err.to_string(), "stubborn set empty");
    }

    #[test]
    fn comments_commas_and_mirrored_duplicates() {
        let g = load("# header\n0,1,2.5\n\n1 0 2.5\n1\t2  1\n", &[2]).unwrap();
        assert_eq!(g.n_edges(), 2);
        assert_eq!(g.weights()[(1, 0)], 2.5);
    }

    #[test]
    fn conflicting_duplicate_is_an_error() {
        assert!(matches!(
            load("0 1 1.0\n1 0 2.0\n", &[1]),
            Err(Error::ConflictingEdge { i: 0, j: 1, .. })
        ));
    }

    #[test]
    fn malformed_records() {
        assert!(matches!(load("0 1\n", &[1]), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(load("0 x 1\n", &[1]), Err(Error::Parse { .. })));
        assert!(matches!(load("0 1 -1\n", &[1]), Err(Error::Parse { .. })));
        assert!(matches!(load("0 1 0\n", &[1]), Err(Error::Parse { .. })));
        assert!(matches!(load("-1 1 1\n", &[1]), Err(Error::Parse { .. })));
    }

    #[test]
    fn stubborn_out_of_range() {
        assert!(matches!(load("0 1 1\n", &[7]), Err(Error::StubbornOutOfRange(7))));
    }

    #[test]
    fn unreachable_component_rejected() {
        assert!(matches!(load("0 1 1\n2 3 1\n", &[0]), Err(Error::Unreachable(1))));
    }

    #[test]
    fn self_loops_policy() {
        assert!(matches!(load("0 0 1\n0 1 1\n", &[1]), Err(Error::SelfLoop(0))));
        let opts = LoadOptions {
            self_loops: SelfLoopPolicy::Zero,
        };
        let g = load_graph("0 0 1\n0 1 1\n".as_bytes(), &[1], opts).unwrap();
        assert_eq!(g.weights()[(0, 0)], 0.0);
        let err = load_graph("2 2 1\n0 1 1\n".as_bytes(), &[1], opts).unwrap_err();
        assert!(matches!(err, Error::IsolatedNode(2)));
    }

    #[test]
    fn sparse_labels_are_densified() {
        let g = load("10 30 1\n30 20 2\n", &[20]).unwrap();
        assert_eq!(g.labels(), &[10, 20, 30]);
        assert_eq!(g.stubborn(), &[1]);
        assert_eq!(g.weights()[(0, 2)], 1.0);
        assert_eq!(g.weights()[(1, 2)], 2.0);
    }

    #[test]
    fn stubborn_list_parsing() {
        assert_eq!(parse_stubborn_list("3,7, 12").unwrap(), vec![3, 7, 12]);
        assert_eq!(read_stubborn_file("# s\n4\n\n9\n".as_bytes()).unwrap(), vec![4, 9]);
        assert!(parse_stubborn_list("3,a").is_err());
    }

    #[test]
    fn save_then_load_is_identity() {
        let g = load("5 9 0.1\n9 11 3\n5 11 1e-3\n", &[9, 11]).unwrap();
        let mut edges = Vec::new();
        let mut stub = Vec::new();
        write_edge_list(&g, &mut edges).unwrap();
        write_stubborn_list(&g, &mut stub).unwrap();
        let s = read_stubborn_file(stub.as_slice()).unwrap();
        let back = load_graph(edges.as_slice(), &s, LoadOptions::default()).unwrap();
        assert_eq!(back, g);
    }
}
