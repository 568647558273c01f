//! Text ingestion and emission for graphs: DIMACS edge format and a compact
//! JSON form `{"n": int, "edges": [[i,j], ...]}`.
//!
//! Both formats use 1-based vertex labels; conversion to the crate's 0-based
//! indexing happens here and nowhere else. Parsers never panic on arbitrary
//! input — every malformed byte sequence maps to a [`ParseError`].

use crate::graph::{Graph, GraphError, MAX_VERTICES};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("line {line}: {msg}")]
    Line { line: usize, msg: String },
    #[error("{0}")]
    Json(String),
    #[error("graph constraint violated: {0}")]
    Graph(#[from] GraphError),
}

fn line_err(line: usize, msg: impl Into<String>) -> ParseError {
    ParseError::Line { line, msg: msg.into() }
}

/// Parses DIMACS edge format: one `p edge <n> <m>` header, `e <i> <j>` edge
/// lines, `c ...` comments. Duplicate edges are merged silently; the declared
/// edge count `m` is not enforced (files in the wild get it wrong).
pub fn parse_dimacs(text: &str) -> Result<Graph, ParseError> {
    let mut n: Option<usize> = None;
    let mut edges: Vec<(usize, usize)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('c') {
            continue;
        }
        let mut tok = line.split_whitespace();
        match tok.next() {
            Some("p") => {
                if n.is_some() {
                    return Err(line_err(line_no, "duplicate problem line"));
                }
                match tok.next() {
                    Some("edge") | Some("edges") => {}
                    other => {
                        return Err(line_err(
                            line_no,
                            format!("expected 'p edge <n> <m>', found format {:?}", other),
                        ))
                    }
                }
                let nv: usize = tok
                    .next()
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| line_err(line_no, "malformed vertex count in problem line"))?;
                let _m: usize = tok
                    .next()
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| line_err(line_no, "malformed edge count in problem line"))?;
                if tok.next().is_some() {
                    return Err(line_err(line_no, "trailing tokens in problem line"));
                }
                if nv > MAX_VERTICES {
                    return Err(line_err(
                        line_no,
                        format!("{} vertices exceeds the cap of {}", nv, MAX_VERTICES),
                    ));
                }
                n = Some(nv);
            }
            Some("e") => {
                let n = n.ok_or_else(|| line_err(line_no, "edge line before problem line"))?;
                let mut endpoint = || -> Result<usize, ParseError> {
                    let v: usize = tok
                        .next()
                        .and_then(|s| s.parse().ok())
                        .ok_or_else(|| line_err(line_no, "malformed edge endpoint"))?;
                    if v < 1 || v > n {
                        return Err(line_err(
                            line_no,
                            format!("vertex {} out of range 1..={}", v, n),
                        ));
                    }
                    Ok(v)
                };
                let i = endpoint()?;
                let j = endpoint()?;
                if tok.next().is_some() {
                    return Err(line_err(line_no, "trailing tokens in edge line"));
                }
                if i == j {
                    return Err(line_err(line_no, format!("self-loop at vertex {}", i)));
                }
                edges.push((i - 1, j - 1));
            }
            Some(other) => {
                return Err(line_err(line_no, format!("unknown line type {:?}", other)));
            }
            None => unreachable!("blank lines are skipped"),
        }
    }
    let n = n.ok_or_else(|| line_err(text.lines().count().max(1), "missing problem line"))?;
    Ok(Graph::new(n, edges)?)
}

/// Emits canonical DIMACS: header, then edges sorted with `i < j`, 1-based.
pub fn emit_dimacs(g: &Graph) -> String {
    let mut out = format!("p edge {} {}\n", g.n(), g.m());
    for &(u, v) in g.edges() {
        out.push_str(&format!("e {} {}\n", u + 1, v + 1));
    }
    out
}

#[derive(Serialize, Deserialize)]
struct GraphJson {
    n: usize,
    edges: Vec<(usize, usize)>,
}

/// Parses the JSON graph form `{"n": int, "edges": [[i,j], ...]}` (1-based).
pub fn parse_graph_json(text: &str) -> Result<Graph, ParseError> {
    let raw: GraphJson =
        serde_json::from_str(text).map_err(|e| ParseError::Json(e.to_string()))?;
    if raw.n > MAX_VERTICES {
        return Err(ParseError::Graph(GraphError::TooManyVertices(raw.n)));
    }
    let mut edges = Vec::with_capacity(raw.edges.len());
    for (i, j) in raw.edges {
        if i < 1 || i > raw.n {
            return Err(ParseError::Json(format!(
                "edge endpoint {} out of range 1..={}",
                i, raw.n
            )));
        }
        if j < 1 || j > raw.n {
            return Err(ParseError::Json(format!(
                "edge endpoint {} out of range 1..={}",
                j, raw.n
            )));
        }
        edges.push((i - 1, j - 1));
    }
    Ok(Graph::new(raw.n, edges)?)
}

/// Emits the JSON graph form (canonical edge order, 1-based).
pub fn emit_graph_json(g: &Graph) -> String {
    let raw = GraphJson {
        n: g.n(),
        edges: g.edges().iter().map(|&(u, v)| (u + 1, v + 1)).collect(),
    };
    serde_json::to_string(&raw).expect("graph json serialization cannot fail")
}

/// Loads a graph from a path, dispatching on contents: files whose first
/// non-space byte is `{` are treated as JSON, everything else as DIMACS.
pub fn parse_auto(text: &str) -> Result<Graph, ParseError> {
    if text.trim_start().starts_with('{') {
        parse_graph_json(text)
    } else {
        parse_dimacs(text)
    }
}
