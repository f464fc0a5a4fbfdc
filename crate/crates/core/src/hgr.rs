//! `.hgr` hypergraph files and gadget sidecar files.
//!
//! ```text
//! % comment
//! <num_nodes> <num_hyperedges>
//! 1 2 3
//! 2 3 4
//! ```
//!
//! Every non-empty, non-comment line after the header is one hyperedge of 1-based node ids.
//! The sidecar holds one line per hyperedge, each a list of `c:delta` gadgets.

use std::fmt::Write as _;

use crate::error::{ParseError, ParseErrorKind, Result};
use crate::hypergraph::{GadgetParams, Hypergraph};
use crate::scalar::Scalar;

/// Structure of an `.hgr` file with ids already shifted to 0-based.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HgrFile {
    pub num_nodes: usize,
    pub edges: Vec<Vec<usize>>,
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r').trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('%'))
}

fn err(line: usize, kind: ParseErrorKind) -> ParseError {
    ParseError { line, kind }
}

pub fn parse_hgr(text: &str) -> Result<HgrFile, ParseError> {
    let mut lines = content_lines(text);
    let (hline, header) =
        lines.next().ok_or_else(|| err(1, ParseErrorKind::MalformedHeader("missing header".into())))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 2 {
        return Err(err(
            hline,
            ParseErrorKind::MalformedHeader(format!("expected `<num_nodes> <num_hyperedges>`, got `{header}`")),
        ));
    }
    let parse_count = |tok: &str| {
        tok.parse::<usize>().map_err(|_| err(hline, ParseErrorKind::MalformedHeader(format!("`{tok}` is not a count"))))
    };
    let num_nodes = parse_count(fields[0])?;
    let num_edges = parse_count(fields[1])?;

    let mut edges = Vec::with_capacity(num_edges);
    let mut last_line = hline;
    for (lineno, line) in lines {
        last_line = lineno;
        let mut edge = Vec::new();
        for tok in line.split_whitespace() {
            let id: usize = tok.parse().map_err(|_| err(lineno, ParseErrorKind::NonNumeric(tok.to_string())))?;
            if id == 0 || id > num_nodes {
                return Err(err(lineno, ParseErrorKind::NodeOutOfRange { id, num_nodes }));
            }
            if edge.contains(&(id - 1)) {
                return Err(err(lineno, ParseErrorKind::DuplicateNode(id)));
            }
            edge.push(id - 1);
        }
        if edge.len() < 2 {
            return Err(err(lineno, ParseErrorKind::EdgeTooSmall(edge.len())));
        }
        edges.push(edge);
    }
    if edges.len() != num_edges {
        return Err(err(last_line, ParseErrorKind::CountMismatch { expected: num_edges, found: edges.len() }));
    }
    Ok(HgrFile { num_nodes, edges })
}

/// Parses a gadget sidecar for a hypergraph with `num_edges` hyperedges.
pub fn parse_gadgets<T: Scalar>(text: &str, num_edges: usize) -> Result<Vec<Vec<GadgetParams<T>>>, ParseError> {
    let mut out = Vec::with_capacity(num_edges);
    let mut last_line = 0;
    for (lineno, line) in content_lines(text) {
        last_line = lineno;
        let mut list = Vec::new();
        for tok in line.split_whitespace() {
            let bad = || err(lineno, ParseErrorKind::BadGadget(tok.to_string()));
            let (c, d) = tok.split_once(':').ok_or_else(bad)?;
            let c: T = c.parse().map_err(|_| bad())?;
            let d: T = d.parse().map_err(|_| bad())?;
            list.push(GadgetParams::new(c, d).map_err(|_| bad())?);
        }
        out.push(list);
    }
    if out.len() != num_edges {
        return Err(err(last_line.max(1), ParseErrorKind::CountMismatch { expected: num_edges, found: out.len() }));
    }
    Ok(out)
}

impl<T: Scalar> Hypergraph<T> {
    /// Parses `.hgr` text and installs a uniform delta-linear gadget on every hyperedge.
    pub fn parse(text: &str, delta: T) -> Result<Self> {
        let file = parse_hgr(text)?;
        Self::with_delta(file.num_nodes, file.edges, delta)
    }

    /// Parses `.hgr` text together with its gadget sidecar.
    pub fn parse_with_gadgets(text: &str, gadgets: &str) -> Result<Self> {
        let file = parse_hgr(text)?;
        let gadgets = parse_gadgets(gadgets, file.edges.len())?;
        Self::new(file.num_nodes, file.edges, gadgets)
    }
}

pub fn write_hgr(num_nodes: usize, edges: &[Vec<usize>]) -> String {
    let mut s = format!("{} {}\n", num_nodes, edges.len());
    for e in edges {
        let mut first = true;
        for &v in e {
            if !first {
                s.push(' ');
            }
            first = false;
            let _ = write!(s, "{}", v + 1);
        }
        s.push('\n');
    }
    s
}

pub fn write_gadgets<T: Scalar>(h: &Hypergraph<T>) -> String {
    let mut s = String::new();
    for e in 0..h.num_edges() {
        let parts: Vec<String> = h.edge_gadgets(e).iter().map(|g| format!("{}:{}", g.c, g.delta)).collect();
        s.push_str(&parts.join(" "));
        s.push('\n');
    }
    s
}
