//! Graph file formats.
//!
//! JSON:
//!
//! ```json
//! {"vertices": ["a", "b"], "edges": [{"u": "a", "v": "b", "q_uv": 2.0, "q_vu": 1.0}],
//!  "measure": {"a": 1.0, "b": 2.0}}
//! ```
//!
//! `q_vu` defaults to `q_uv` and the measure defaults to `m ≡ 1`.
//!
//! TSV: one `u<TAB>v<TAB>rate` line per undirected edge, symmetric rates,
//! `m ≡ 1`. Blank lines and lines starting with `#` are skipped.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{build_components, build_graph, Graph, RateEntry};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeRecord {
    pub u: String,
    pub v: String,
    pub q_uv: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q_vu: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphFile {
    pub vertices: Vec<String>,
    pub edges: Vec<EdgeRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measure: Option<BTreeMap<String, f64>>,
}

impl GraphFile {
    /// Canonical encoding: edges `x < y` in index order, `q_vu` only when it
    /// differs, measure only when not identically 1.
    pub fn from_graph(g: &Graph) -> Self {
        let edges = g
            .edges()
            .into_iter()
            .map(|(x, y)| {
                let (a, b) = (g.rate(x, y), g.rate(y, x));
                EdgeRecord { u: g.label(x).into(), v: g.label(y).into(), q_uv: a, q_vu: (a != b).then_some(b) }
            })
            .collect();
        let measure = g
            .measure()
            .iter()
            .any(|&m| m != 1.0)
            .then(|| (0..g.n()).map(|x| (g.label(x).to_string(), g.mass(x))).collect());
        Self { vertices: g.labels().to_vec(), edges, measure }
    }

    fn parts(&self) -> Result<(Vec<String>, Vec<RateEntry>, Option<Vec<f64>>)> {
        let mut entries = Vec::with_capacity(2 * self.edges.len());
        for e in &self.edges {
            entries.push(RateEntry::new(&e.u, &e.v, e.q_uv));
            entries.push(RateEntry::new(&e.v, &e.u, e.q_vu.unwrap_or(e.q_uv)));
        }
        let measure = match &self.measure {
            None => None,
            Some(map) => {
                if let Some(k) = map.keys().find(|k| !self.vertices.contains(k)) {
                    return Err(Error::UnknownVertex(k.clone()));
                }
                let m = self
                    .vertices
                    .iter()
                    .map(|v| map.get(v).copied().ok_or_else(|| Error::BadParams(format!("measure is missing vertex {v:?}"))))
                    .collect::<Result<Vec<_>>>()?;
                Some(m)
            }
        };
        Ok((self.vertices.clone(), entries, measure))
    }

    pub fn to_graph(&self) -> Result<Graph> {
        let (v, e, m) = self.parts()?;
        build_graph(v, &e, m)
    }

    /// Connected components with at least one edge.
    pub fn to_components(&self) -> Result<Vec<Graph>> {
        let (v, e, m) = self.parts()?;
        build_components(v, &e, m)
    }
}

pub fn parse_json(text: &str) -> Result<GraphFile> {
    serde_json::from_str(text).map_err(|e| Error::Parse {
        line: e.line(),
        field: format!("column {}", e.column()),
        message: e.to_string(),
    })
}

pub fn parse_tsv(text: &str) -> Result<GraphFile> {
    let mut vertices: Vec<String> = Vec::new();
    let mut edges = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        let err = |field: &str, message: String| Error::Parse { line: i + 1, field: field.into(), message };
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(err("line", format!("expected 3 tab-separated fields, found {}", fields.len())));
        }
        let (u, v) = (fields[0].trim(), fields[1].trim());
        if u.is_empty() {
            return Err(err("u", "empty vertex id".into()));
        }
        if v.is_empty() {
            return Err(err("v", "empty vertex id".into()));
        }
        let rate: f64 = fields[2].trim().parse().map_err(|e| err("rate", format!("{e}: {:?}", fields[2])))?;
        for w in [u, v] {
            if !vertices.iter().any(|x| x == w) {
                vertices.push(w.to_string());
            }
        }
        edges.push(EdgeRecord { u: u.into(), v: v.into(), q_uv: rate, q_vu: None });
    }
    Ok(GraphFile { vertices, edges, measure: None })
}

/// Reads a graph file, choosing the format by extension (`.tsv`/`.txt` are
/// TSV, anything else JSON).
pub fn read_graph_file(path: &Path) -> Result<GraphFile> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::BadParams(format!("cannot read {}: {e}", path.display())))?;
    match path.extension().and_then(|e| e.to_str()) {
        Some("tsv") | Some("txt") => parse_tsv(&text),
        _ => parse_json(&text),
    }
}
