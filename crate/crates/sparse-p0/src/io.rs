//! Dataset ingestion: edge lists, typed node attributes, pruning and
//! covariate construction.
//!
//! Edge file: one ordered pair `from to` per line, separated by a comma, a
//! tab or spaces. Blank lines and lines starting with `#` are skipped.
//!
//! Attribute file: a header row whose first column names the node id and
//! whose other columns are `cat:<name>` (categorical) or `num:<name>`
//! (numeric), then one row per node in the order that defines node indices.
//!
//! Without an attribute file, nodes are numbered in order of first
//! appearance in the edge list.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sparse_p0_core::{DirectedNetwork, EdgeCovariates};

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}:{column}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{path}:{line}: edge refers to unknown node {id:?}")]
    ReferentialIntegrity { path: PathBuf, line: usize, id: String },
    #[error("{path}:{line}: self-loop on node {id:?}")]
    SelfLoop { path: PathBuf, line: usize, id: String },
    #[error("{path}:{line}: duplicate edge {from:?} -> {to:?}")]
    DuplicateEdge {
        path: PathBuf,
        line: usize,
        from: String,
        to: String,
    },
    #[error("{path}:{line}: node {id:?} listed twice")]
    DuplicateNode { path: PathBuf, line: usize, id: String },
    #[error("no node survives zero-degree pruning")]
    EmptyAfterPruning,
    #[error("attribute {attribute:?} is {kind:?} but rule {rule:?} needs a {needed:?} attribute")]
    RuleKindMismatch {
        attribute: String,
        kind: AttributeKind,
        rule: Rule,
        needed: AttributeKind,
    },
    #[error("unknown attribute {0:?}")]
    UnknownAttribute(String),
    #[error("invalid covariate specification: {0}")]
    Spec(String),
}

impl IoError {
    fn io(path: &Path, source: std::io::Error) -> Self {
        IoError::Io { path: path.to_path_buf(), source }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttributeKind {
    Categorical,
    Numeric,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AttributeValues {
    Categorical(Vec<String>),
    Numeric(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attribute {
    pub name: String,
    pub values: AttributeValues,
}

impl Attribute {
    pub fn kind(&self) -> AttributeKind {
        match self.values {
            AttributeValues::Categorical(_) => AttributeKind::Categorical,
            AttributeValues::Numeric(_) => AttributeKind::Numeric,
        }
    }

    fn select(&self, keep: &[usize]) -> Self {
        let values = match &self.values {
            AttributeValues::Categorical(v) => AttributeValues::Categorical(keep.iter().map(|&k| v[k].clone()).collect()),
            AttributeValues::Numeric(v) => AttributeValues::Numeric(keep.iter().map(|&k| v[k]).collect()),
        };
        Self { name: self.name.clone(), values }
    }
}

/// Nodes (in index order), their attributes and the directed edges between them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub node_ids: Vec<String>,
    pub attributes: Vec<Attribute>,
    pub edges: Vec<(usize, usize)>,
}

impl Dataset {
    pub fn n(&self) -> usize {
        self.node_ids.len()
    }

    pub fn network(&self) -> DirectedNetwork {
        DirectedNetwork::from_edges(self.n(), &self.edges).expect("dataset edges are validated on load")
    }

    pub fn attribute(&self, name: &str) -> Option<&Attribute> {
        self.attributes.iter().find(|a| a.name == name)
    }

    /// Out- and in-degrees.
    pub fn degrees(&self) -> (Vec<usize>, Vec<usize>) {
        let mut d = vec![0; self.n()];
        let mut b = vec![0; self.n()];
        for &(i, j) in &self.edges {
            d[i] += 1;
            b[j] += 1;
        }
        (d, b)
    }

    /// Restricts to the listed node indices (kept in the given order).
    pub fn subset(&self, keep: &[usize]) -> Self {
        let mut new_index = vec![usize::MAX; self.n()];
        for (k, &old) in keep.iter().enumerate() {
            new_index[old] = k;
        }
        Self {
            node_ids: keep.iter().map(|&k| self.node_ids[k].clone()).collect(),
            attributes: self.attributes.iter().map(|a| a.select(keep)).collect(),
            edges: self
                .edges
                .iter()
                .filter(|(i, j)| new_index[*i] != usize::MAX && new_index[*j] != usize::MAX)
                .map(|&(i, j)| (new_index[i], new_index[j]))
                .collect(),
        }
    }
}

fn read(path: &Path) -> Result<String, IoError> {
    std::fs::read_to_string(path).map_err(|e| IoError::io(path, e))
}

/// Splits a line into `(column, field)` pairs; columns are 1-based character offsets.
fn fields(line: &str) -> Vec<(usize, &str)> {
    let sep: Option<char> = if line.contains(',') {
        Some(',')
    } else if line.contains('\t') {
        Some('\t')
    } else {
        None
    };
    let mut out = Vec::new();
    match sep {
        Some(c) => {
            let mut start = 0;
            for part in line.split(c) {
                let lead = part.len() - part.trim_start().len();
                out.push((start + lead + 1, part.trim()));
                start += part.len() + 1;
            }
        }
        None => {
            let mut in_field = None;
            for (k, ch) in line.char_indices() {
                match (ch.is_whitespace(), in_field) {
                    (false, None) => in_field = Some(k),
                    (true, Some(s)) => {
                        out.push((s + 1, &line[s..k]));
                        in_field = None;
                    }
                    _ => {}
                }
            }
            if let Some(s) = in_field {
                out.push((s + 1, &line[s..]));
            }
        }
    }
    out
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(k, l)| (k + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
}

fn parse_attributes(path: &Path, text: &str) -> Result<(Vec<String>, Vec<Attribute>), IoError> {
    let parse_err = |line, column, message: String| IoError::Parse { path: path.to_path_buf(), line, column, message };
    let mut lines = content_lines(text);
    let (hline, header) = lines.next().ok_or_else(|| parse_err(1, 1, "missing header row".into()))?;
    let header = fields(header);
    let mut specs = Vec::new();
    for &(col, h) in header.iter().skip(1) {
        let (kind, name) = if let Some(name) = h.strip_prefix("cat:") {
            (AttributeKind::Categorical, name)
        } else if let Some(name) = h.strip_prefix("num:") {
            (AttributeKind::Numeric, name)
        } else {
            return Err(parse_err(hline, col, format!("column {h:?} must start with cat: or num:")));
        };
        if name.is_empty() {
            return Err(parse_err(hline, col, "empty attribute name".into()));
        }
        specs.push((kind, name.to_string()));
    }
    let mut ids = Vec::new();
    let mut seen = HashSet::new();
    let mut cat: Vec<Vec<String>> = vec![Vec::new(); specs.len()];
    let mut num: Vec<Vec<f64>> = vec![Vec::new(); specs.len()];
    for (line, l) in lines {
        let f = fields(l);
        if f.len() != header.len() {
            let column = f.get(header.len()).map_or(l.len() + 1, |x| x.0);
            return Err(parse_err(line, column, format!("expected {} fields, found {}", header.len(), f.len())));
        }
        let id = f[0].1.to_string();
        if id.is_empty() {
            return Err(parse_err(line, f[0].0, "empty node id".into()));
        }
        if !seen.insert(id.clone()) {
            return Err(IoError::DuplicateNode { path: path.to_path_buf(), line, id });
        }
        ids.push(id);
        for (k, (kind, _)) in specs.iter().enumerate() {
            let (col, raw) = f[k + 1];
            match kind {
                AttributeKind::Categorical => cat[k].push(raw.to_string()),
                AttributeKind::Numeric => {
                    let v: f64 = raw
                        .parse()
                        .ok()
                        .filter(|v: &f64| v.is_finite())
                        .ok_or_else(|| parse_err(line, col, format!("{raw:?} is not a finite number")))?;
                    num[k].push(v);
                }
            }
        }
    }
    let attributes = specs
        .into_iter()
        .enumerate()
        .map(|(k, (kind, name))| Attribute {
            name,
            values: match kind {
                AttributeKind::Categorical => AttributeValues::Categorical(std::mem::take(&mut cat[k])),
                AttributeKind::Numeric => AttributeValues::Numeric(std::mem::take(&mut num[k])),
            },
        })
        .collect();
    Ok((ids, attributes))
}

/// Loads an edge list and, optionally, a typed attribute table.
pub fn load_dataset(edge_file: &Path, attribute_file: Option<&Path>) -> Result<Dataset, IoError> {
    let (mut node_ids, attributes, fixed) = match attribute_file {
        Some(p) => {
            let (ids, attrs) = parse_attributes(p, &read(p)?)?;
            (ids, attrs, true)
        }
        None => (Vec::new(), Vec::new(), false),
    };
    let mut index: HashMap<String, usize> = node_ids.iter().enumerate().map(|(k, id)| (id.clone(), k)).collect();
    let text = read(edge_file)?;
    let mut edges = Vec::new();
    let mut seen = HashSet::new();
    let path = edge_file.to_path_buf();
    for (line, l) in content_lines(&text) {
        let f = fields(l);
        if f.len() != 2 {
            let column = f.get(2).map_or(l.len() + 1, |x| x.0);
            return Err(IoError::Parse {
                path,
                line,
                column,
                message: format!("expected 2 fields, found {}", f.len()),
            });
        }
        let mut lookup = |id: &str| -> Result<usize, IoError> {
            if let Some(&k) = index.get(id) {
                return Ok(k);
            }
            if fixed {
                return Err(IoError::ReferentialIntegrity { path: path.clone(), line, id: id.to_string() });
            }
            node_ids.push(id.to_string());
            index.insert(id.to_string(), node_ids.len() - 1);
            Ok(node_ids.len() - 1)
        };
        let (a, b) = (f[0].1, f[1].1);
        if a == b {
            return Err(IoError::SelfLoop { path, line, id: a.to_string() });
        }
        let (i, j) = (lookup(a)?, lookup(b)?);
        if !seen.insert((i, j)) {
            return Err(IoError::DuplicateEdge { path, line, from: a.to_string(), to: b.to_string() });
        }
        edges.push((i, j));
    }
    Ok(Dataset { node_ids, attributes, edges })
}

/// Repeatedly removes nodes with zero out- or in-degree until none remain.
/// Returns the pruned dataset and the ids removed, in removal order.
pub fn prune_zero_degree(ds: &Dataset) -> Result<(Dataset, Vec<String>), IoError> {
    let mut alive = vec![true; ds.n()];
    let mut removed = Vec::new();
    loop {
        let mut d = vec![0usize; ds.n()];
        let mut b = vec![0usize; ds.n()];
        for &(i, j) in &ds.edges {
            if alive[i] && alive[j] {
                d[i] += 1;
                b[j] += 1;
            }
        }
        let drop: Vec<usize> = (0..ds.n()).filter(|&k| alive[k] && (d[k] == 0 || b[k] == 0)).collect();
        if drop.is_empty() {
            break;
        }
        for k in drop {
            alive[k] = false;
            removed.push(ds.node_ids[k].clone());
        }
    }
    let keep: Vec<usize> = (0..ds.n()).filter(|&k| alive[k]).collect();
    if keep.is_empty() {
        return Err(IoError::EmptyAfterPruning);
    }
    Ok((ds.subset(&keep), removed))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    /// `z = 1` when both endpoints share the category, else 0.
    Match,
    /// `z = |x_i - x_j|`.
    AbsDiff,
}

impl Rule {
    fn needs(self) -> AttributeKind {
        match self {
            Rule::Match => AttributeKind::Categorical,
            Rule::AbsDiff => AttributeKind::Numeric,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CovariateRule {
    pub attribute: String,
    pub rule: Rule,
}

/// Which attributes enter the model and how; read from JSON such as
/// `{"covariates": [{"attribute": "status", "rule": "match"}], "bounded": false}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct AttributeSpec {
    pub covariates: Vec<CovariateRule>,
    /// Map every covariate through the logistic function `e^z / (1 + e^z)`.
    #[serde(default)]
    pub bounded: bool,
}

impl AttributeSpec {
    pub fn load(path: &Path) -> Result<Self, IoError> {
        serde_json::from_str(&read(path)?).map_err(|e| IoError::Parse {
            path: path.to_path_buf(),
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })
    }

    /// Covariate names in model order.
    pub fn names(&self) -> Vec<String> {
        self.covariates.iter().map(|c| c.attribute.clone()).collect()
    }
}

pub fn build_edge_covariates(ds: &Dataset, spec: &AttributeSpec) -> Result<EdgeCovariates, IoError> {
    let mut columns: Vec<(&AttributeValues, Rule)> = Vec::with_capacity(spec.covariates.len());
    for c in &spec.covariates {
        let attr = ds.attribute(&c.attribute).ok_or_else(|| IoError::UnknownAttribute(c.attribute.clone()))?;
        if attr.kind() != c.rule.needs() {
            return Err(IoError::RuleKindMismatch {
                attribute: attr.name.clone(),
                kind: attr.kind(),
                rule: c.rule,
                needed: c.rule.needs(),
            });
        }
        columns.push((&attr.values, c.rule));
    }
    let cov = EdgeCovariates::from_fn(ds.n(), columns.len(), |i, j, z| {
        for (slot, (values, _)) in z.iter_mut().zip(&columns) {
            *slot = match values {
                AttributeValues::Categorical(v) => f64::from(u8::from(v[i] == v[j])),
                AttributeValues::Numeric(v) => (v[i] - v[j]).abs(),
            };
        }
    })
    .map_err(|e| IoError::Spec(e.to_string()))?;
    Ok(if spec.bounded { cov.bounded() } else { cov })
}

/// Writes `ds` in the formats [`load_dataset`] reads.
pub fn write_dataset(ds: &Dataset, edge_file: &Path, attribute_file: &Path) -> Result<(), IoError> {
    for id in &ds.node_ids {
        if id.contains([',', '\t', ' ', '#']) || id.is_empty() {
            return Err(IoError::Spec(format!("node id {id:?} cannot be written unambiguously")));
        }
    }
    let mut attrs = String::from("id");
    for a in &ds.attributes {
        let prefix = match a.kind() {
            AttributeKind::Categorical => "cat",
            AttributeKind::Numeric => "num",
        };
        write!(attrs, ",{prefix}:{}", a.name).unwrap();
    }
    attrs.push('\n');
    for (k, id) in ds.node_ids.iter().enumerate() {
        attrs.push_str(id);
        for a in &ds.attributes {
            match &a.values {
                AttributeValues::Categorical(v) => write!(attrs, ",{}", v[k]).unwrap(),
                // `{}` on f64 prints the shortest string that parses back exactly.
                AttributeValues::Numeric(v) => write!(attrs, ",{}", v[k]).unwrap(),
            }
        }
        attrs.push('\n');
    }
    let mut edges = String::new();
    for &(i, j) in &ds.edges {
        writeln!(edges, "{},{}", ds.node_ids[i], ds.node_ids[j]).unwrap();
    }
    std::fs::write(attribute_file, attrs).map_err(|e| IoError::io(attribute_file, e))?;
    std::fs::write(edge_file, edges).map_err(|e| IoError::io(edge_file, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn field_splitting_reports_columns() {
        assert_eq!(fields("a, b"), vec![(1, "a"), (4, "b")]);
        assert_eq!(fields("  x   y"), vec![(3, "x"), (7, "y")]);
        assert_eq!(fields("p\tq"), vec![(1, "p"), (3, "q")]);
    }

    #[test]
    fn match_and_abs_diff() {
        let ds = Dataset {
            node_ids: vec!["a".into(), "b".into(), "c".into()],
            attributes: vec![
                Attribute {
                    name: "office".into(),
                    values: AttributeValues::Categorical(vec!["x".into(), "x".into(), "y".into()]),
                },
                Attribute { name: "years".into(), values: AttributeValues::Numeric(vec![10.0, 7.0, 1.0]) },
            ],
            edges: vec![],
        };
        let spec = AttributeSpec {
            covariates: vec![
                CovariateRule { attribute: "office".into(), rule: Rule::Match },
                CovariateRule { attribute: "years".into(), rule: Rule::AbsDiff },
            ],
            bounded: false,
        };
        let cov = build_edge_covariates(&ds, &spec).unwrap();
        assert_eq!(cov.get(0, 1), &[1.0, 3.0]);
        assert_eq!(cov.get(0, 2), &[0.0, 9.0]);
        let bad = AttributeSpec {
            covariates: vec![CovariateRule { attribute: "years".into(), rule: Rule::Match }],
            bounded: false,
        };
        assert!(matches!(build_edge_covariates(&ds, &bad), Err(IoError::RuleKindMismatch { .. })));
        let bounded = build_edge_covariates(&ds, &AttributeSpec { bounded: true, ..spec }).unwrap();
        let logistic = |x: f64| 1.0 / (1.0 + (-x).exp());
        assert!((bounded.get(0, 1)[0] - logistic(1.0)).abs() < 1e-15);
        assert!((bounded.get(0, 1)[1] - logistic(3.0)).abs() < 1e-15);
    }
}
