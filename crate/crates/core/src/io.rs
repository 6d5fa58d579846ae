//! Text and JSON graph formats.
//!
//! Text: a header `n m`, then `m` lines `tail head weight`, then optionally
//! a line `pi` followed by `n` lines `vertex weight`. Without the block,
//! `π ≡ 1`. Blank lines and lines starting with `#` are skipped.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::DiGraph;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphJson {
    pub n: usize,
    pub edges: Vec<(usize, usize, f64)>,
    pub pi: Vec<f64>,
}

impl From<&DiGraph> for GraphJson {
    fn from(g: &DiGraph) -> Self {
        GraphJson {
            n: g.n(),
            edges: g.edges().iter().map(|e| (e.tail, e.head, e.weight)).collect(),
            pi: g.pi().to_vec(),
        }
    }
}

impl GraphJson {
    pub fn into_graph(self) -> Result<DiGraph> {
        DiGraph::new(self.n, self.edges, self.pi)
    }
}

pub(crate) fn perr(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

pub(crate) fn field<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T> {
    let tok = tok.ok_or_else(|| perr(line, format!("missing {what}")))?;
    tok.parse().map_err(|_| perr(line, format!("bad {what} `{tok}`")))
}

/// Numbered content lines, skipping blanks and comments.
pub(crate) fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

pub fn parse_graph(text: &str) -> Result<DiGraph> {
    let mut lines = content_lines(text);
    let (ln, header) = lines.next().ok_or_else(|| perr(1, "empty input"))?;
    let mut it = header.split_whitespace();
    let n: usize = field(it.next(), ln, "n")?;
    let m: usize = field(it.next(), ln, "m")?;
    if it.next().is_some() {
        return Err(perr(ln, "header must be `n m`"));
    }
    let mut last = ln;
    let mut edges = Vec::with_capacity(m);
    for k in 0..m {
        let (ln, l) = lines.next().ok_or_else(|| perr(last + 1, format!("expected {m} edges, found {k}")))?;
        last = ln;
        let mut it = l.split_whitespace();
        let tail: usize = field(it.next(), ln, "tail")?;
        let head: usize = field(it.next(), ln, "head")?;
        let w: f64 = field(it.next(), ln, "weight")?;
        if it.next().is_some() {
            return Err(perr(ln, "edge line must be `tail head weight`"));
        }
        if tail >= n || head >= n {
            return Err(perr(ln, format!("vertex out of range 0..{n}")));
        }
        if !(w > 0.0 && w.is_finite()) {
            return Err(perr(ln, "edge weight must be positive"));
        }
        edges.push((tail, head, w));
    }
    let mut pi = vec![1.0; n];
    if let Some((ln, l)) = lines.next() {
        if l != "pi" {
            return Err(perr(ln, format!("unexpected line `{l}`")));
        }
        let mut seen = vec![false; n];
        last = ln;
        for k in 0..n {
            let (ln, l) = lines.next().ok_or_else(|| perr(last + 1, format!("expected {n} pi lines, found {k}")))?;
            last = ln;
            let mut it = l.split_whitespace();
            let v: usize = field(it.next(), ln, "vertex")?;
            let p: f64 = field(it.next(), ln, "pi")?;
            if v >= n || seen[v] {
                return Err(perr(ln, format!("bad or repeated vertex {v}")));
            }
            if !(p > 0.0 && p.is_finite()) {
                return Err(perr(ln, "pi must be positive"));
            }
            seen[v] = true;
            pi[v] = p;
        }
        if let Some((ln, l)) = lines.next() {
            return Err(perr(ln, format!("trailing content `{l}`")));
        }
    }
    DiGraph::new(n, edges, pi).map_err(|e| perr(0, e.to_string()))
}

/// Inverse of [`parse_graph`]; always writes the `pi` block.
pub fn graph_to_text(g: &DiGraph) -> String {
    let mut s = format!("{} {}\n", g.n(), g.m());
    for e in g.edges() {
        s.push_str(&format!("{} {} {}\n", e.tail, e.head, e.weight));
    }
    s.push_str("pi\n");
    for (i, p) in g.pi().iter().enumerate() {
        s.push_str(&format!("{i} {p}\n"));
    }
    s
}

pub fn parse_graph_json(text: &str) -> Result<DiGraph> {
    let raw: GraphJson = serde_json::from_str(text).map_err(|e| perr(e.line(), e.to_string()))?;
    raw.into_graph().map_err(|e| perr(0, e.to_string()))
}

/// JSON when the text starts with `{`, the line format otherwise.
pub fn parse_graph_any(text: &str) -> Result<DiGraph> {
    if text.trim_start().starts_with('{') {
        parse_graph_json(text)
    } else {
        parse_graph(text)
    }
}
