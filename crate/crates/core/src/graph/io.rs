//! On-disk graph directory format.
//!
//! ```text
//! meta.json      {"num_nodes": N, "feat_dim": F, "num_labels": L}
//! edges.tsv      one "src<TAB>dst" pair per line, canonical (src < dst), ascending
//! features.tsv   N lines of F tab-separated reals
//! labels.tsv     N lines, one integer label each
//! ```
//!
//! A split is stored separately as `split.json` `{seed, train, validation, test}`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::DenseMatrix;

use super::{Graph, SplitSpec};

#[derive(Debug, Serialize, Deserialize)]
struct Meta {
    num_nodes: usize,
    feat_dim: usize,
    num_labels: usize,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    directed: bool,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn parse_err(file: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        file: file.to_path_buf(),
        line,
        msg: msg.into(),
    }
}

/// Non-blank lines with their 1-based line numbers.
fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty())
}

pub fn load_graph(dir: &Path) -> Result<Graph> {
    let meta_path = dir.join("meta.json");
    let meta: Meta =
        serde_json::from_str(&read(&meta_path)?).map_err(|e| Error::json(&meta_path, e))?;
    if meta.directed {
        return Err(Error::InvalidGraph("directed graphs are not supported".into()));
    }

    let edges_path = dir.join("edges.tsv");
    let mut edges = Vec::new();
    for (ln, line) in data_lines(&read(&edges_path)?) {
        let mut it = line.split('\t');
        let (Some(a), Some(b), None) = (it.next(), it.next(), it.next()) else {
            return Err(parse_err(&edges_path, ln, "expected `src<TAB>dst`"));
        };
        let u: usize = a.trim().parse().map_err(|e| parse_err(&edges_path, ln, format!("{e}")))?;
        let v: usize = b.trim().parse().map_err(|e| parse_err(&edges_path, ln, format!("{e}")))?;
        edges.push((u, v));
    }

    let feat_path = dir.join("features.tsv");
    let mut data = Vec::with_capacity(meta.num_nodes * meta.feat_dim);
    let mut rows = 0;
    for (ln, line) in data_lines(&read(&feat_path)?) {
        let before = data.len();
        for tok in line.split('\t') {
            let v: f64 = tok.trim().parse().map_err(|e| parse_err(&feat_path, ln, format!("{e}")))?;
            if !v.is_finite() {
                return Err(parse_err(&feat_path, ln, "non-finite feature"));
            }
            data.push(v);
        }
        if data.len() - before != meta.feat_dim {
            return Err(parse_err(
                &feat_path,
                ln,
                format!("expected {} values, got {}", meta.feat_dim, data.len() - before),
            ));
        }
        rows += 1;
    }
    if meta.feat_dim == 0 {
        rows = meta.num_nodes;
    }
    let features = DenseMatrix::new(rows, meta.feat_dim, data)?;

    let labels_path = dir.join("labels.tsv");
    let mut labels = Vec::with_capacity(meta.num_nodes);
    for (ln, line) in data_lines(&read(&labels_path)?) {
        labels.push(
            line.trim()
                .parse()
                .map_err(|e| parse_err(&labels_path, ln, format!("{e}")))?,
        );
    }

    Graph::new(meta.num_nodes, edges, features, labels, meta.num_labels)
}

pub fn save_graph(g: &Graph, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let meta = Meta {
        num_nodes: g.num_nodes(),
        feat_dim: g.feat_dim(),
        num_labels: g.num_labels(),
        directed: false,
    };
    write(
        &dir.join("meta.json"),
        serde_json::to_string_pretty(&meta).expect("meta serializes") + "\n",
    )?;

    let mut edges = String::with_capacity(g.num_edges() * 10);
    for &(u, v) in g.edges() {
        let _ = writeln!(edges, "{u}\t{v}");
    }
    write(&dir.join("edges.tsv"), edges)?;

    let mut feats = String::new();
    for r in 0..g.num_nodes() {
        for (j, v) in g.features().row(r).iter().enumerate() {
            if j > 0 {
                feats.push('\t');
            }
            let _ = write!(feats, "{v:?}");
        }
        feats.push('\n');
    }
    write(&dir.join("features.tsv"), feats)?;

    let mut labels = String::new();
    for l in g.labels() {
        let _ = writeln!(labels, "{l}");
    }
    write(&dir.join("labels.tsv"), labels)
}

fn write(path: &PathBuf, contents: String) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

pub fn save_split(split: &SplitSpec, path: &Path) -> Result<()> {
    let text = serde_json::to_string(split).expect("split serializes") + "\n";
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn load_split(path: &Path) -> Result<SplitSpec> {
    serde_json::from_str(&read(path)?).map_err(|e| Error::json(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Graph {
        let f = DenseMatrix::from_rows(&[vec![0.5, -1.0], vec![1.0 / 3.0, 2e-7], vec![0.0, 4.0]]);
        Graph::new(3, [(1, 0), (2, 1)], f, vec![1, 0, 1], 2).unwrap()
    }

    #[test]
    fn round_trip_and_byte_stability() {
        let dir = tempfile::tempdir().unwrap();
        let g = sample();
        let a = dir.path().join("a");
        let b = dir.path().join("b");
        save_graph(&g, &a).unwrap();
        save_graph(&g, &b).unwrap();
        assert_eq!(load_graph(&a).unwrap(), g);
        for f in ["meta.json", "edges.tsv", "features.tsv", "labels.tsv"] {
            assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
        }
    }

    #[test]
    fn empty_edge_graph_loads() {
        let dir = tempfile::tempdir().unwrap();
        let g = sample().with_edges([]).unwrap();
        save_graph(&g, dir.path()).unwrap();
        assert_eq!(load_graph(dir.path()).unwrap().num_edges(), 0);
    }

    #[test]
    fn malformed_edge_line_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        save_graph(&sample(), dir.path()).unwrap();
        fs::write(dir.path().join("edges.tsv"), "0\t1\n1 2\n").unwrap();
        let err = load_graph(dir.path()).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn dangling_and_directed_rejected() {
        let dir = tempfile::tempdir().unwrap();
        save_graph(&sample(), dir.path()).unwrap();
        fs::write(dir.path().join("edges.tsv"), "0\t5\n").unwrap();
        assert!(matches!(load_graph(dir.path()), Err(Error::InvalidGraph(_))));
        fs::write(dir.path().join("edges.tsv"), "2\t2\n").unwrap();
        assert!(matches!(load_graph(dir.path()), Err(Error::InvalidGraph(_))));
        fs::write(dir.path().join("edges.tsv"), "").unwrap();
        fs::write(
            dir.path().join("meta.json"),
            r#"{"num_nodes":3,"feat_dim":2,"num_labels":2,"directed":true}"#,
        )
        .unwrap();
        assert!(load_graph(dir.path()).is_err());
    }

    #[test]
    fn split_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let s = SplitSpec {
            seed: 4,
            train: vec![2],
            validation: vec![0],
            test: vec![1],
        };
        let p = dir.path().join("split.json");
        save_split(&s, &p).unwrap();
        assert_eq!(load_split(&p).unwrap(), s);
    }
}
