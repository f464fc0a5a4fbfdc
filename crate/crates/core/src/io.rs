//! Plain-text node lists, solution vectors and label files. Ids are 1-based on disk.

use std::fmt::Write as _;

use crate::error::{ParseError, ParseErrorKind};
use crate::hypergraph::NodeSet;
use crate::scalar::Scalar;

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('%') && !l.starts_with('#'))
}

fn node_id(tok: &str, line: usize, num_nodes: usize) -> Result<usize, ParseError> {
    let id: usize = tok.parse().map_err(|_| ParseError { line, kind: ParseErrorKind::NonNumeric(tok.to_string()) })?;
    if id == 0 || id > num_nodes {
        return Err(ParseError { line, kind: ParseErrorKind::NodeOutOfRange { id, num_nodes } });
    }
    Ok(id - 1)
}

/// Whitespace- or comma-separated 1-based ids; `%` and `#` start comment lines.
pub fn parse_node_list(text: &str, num_nodes: usize) -> Result<NodeSet, ParseError> {
    let mut ids = Vec::new();
    let mut seen = vec![false; num_nodes];
    for (line, l) in content_lines(text) {
        for tok in l.split(|c: char| c.is_whitespace() || c == ',').filter(|t| !t.is_empty()) {
            let v = node_id(tok, line, num_nodes)?;
            if std::mem::replace(&mut seen[v], true) {
                return Err(ParseError { line, kind: ParseErrorKind::DuplicateNode(v + 1) });
            }
            ids.push(v);
        }
    }
    Ok(NodeSet::new(num_nodes, ids).expect("ids checked while parsing"))
}

/// One 1-based id per line, ascending.
pub fn write_node_list(set: &NodeSet) -> String {
    let mut s = String::new();
    for v in set.iter() {
        let _ = writeln!(s, "{}", v + 1);
    }
    s
}

/// Positive entries in descending order of value (ties by id), under a `node_id,x` header.
pub fn write_solution<T: Scalar>(x: &[(usize, T)]) -> String {
    let mut rows: Vec<(usize, T)> = x.iter().copied().filter(|e| e.1 > T::zero()).collect();
    rows.sort_by(|a, b| b.1.partial_cmp(&a.1).expect("finite").then(a.0.cmp(&b.0)));
    let mut s = String::from("node_id,x\n");
    for (v, val) in rows {
        let _ = writeln!(s, "{},{}", v + 1, val);
    }
    s
}

/// Reads `node_id,x` rows; a first line that does not start with a digit is a header.
pub fn parse_solution<T: Scalar>(text: &str, num_nodes: usize) -> Result<Vec<(usize, T)>, ParseError> {
    let mut out = Vec::new();
    for (k, (line, l)) in content_lines(text).enumerate() {
        if k == 0 && !l.starts_with(|c: char| c.is_ascii_digit()) {
            continue;
        }
        let (id, val) = l.split_once(',').ok_or_else(|| ParseError {
            line,
            kind: ParseErrorKind::MalformedHeader(format!("expected `node_id,x`, got `{l}`")),
        })?;
        let v = node_id(id.trim(), line, num_nodes)?;
        let val = val.trim();
        let x: T = val.parse().map_err(|_| ParseError { line, kind: ParseErrorKind::NonNumeric(val.to_string()) })?;
        out.push((v, x));
    }
    Ok(out)
}

/// `node_id block_id` rows, both 1-based; returns 0-based block per node, in file order.
pub fn parse_labels(text: &str, num_nodes: usize) -> Result<Vec<usize>, ParseError> {
    let mut labels = vec![usize::MAX; num_nodes];
    let mut count = 0;
    let mut last = 0;
    for (line, l) in content_lines(text) {
        last = line;
        let toks: Vec<&str> = l.split_whitespace().collect();
        if toks.len() != 2 {
            return Err(ParseError {
                line,
                kind: ParseErrorKind::MalformedHeader(format!("expected `node_id block_id`, got `{l}`")),
            });
        }
        let v = node_id(toks[0], line, num_nodes)?;
        let b: usize = toks[1]
            .parse()
            .ok()
            .filter(|&b| b > 0)
            .ok_or_else(|| ParseError { line, kind: ParseErrorKind::NonNumeric(toks[1].to_string()) })?;
        if labels[v] != usize::MAX {
            return Err(ParseError { line, kind: ParseErrorKind::DuplicateNode(v + 1) });
        }
        labels[v] = b - 1;
        count += 1;
    }
    if count != num_nodes {
        return Err(ParseError {
            line: last.max(1),
            kind: ParseErrorKind::CountMismatch { expected: num_nodes, found: count },
        });
    }
    Ok(labels)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn node_lists() {
        let s = parse_node_list("# seeds\n3\n1, 2\n", 4).unwrap();
        assert_eq!(s.as_slice(), &[0, 1, 2]);
        assert_eq!(write_node_list(&s), "1\n2\n3\n");
        assert_eq!(parse_node_list("", 4).unwrap(), NodeSet::empty());
        assert_eq!(parse_node_list("1\n1\n", 4).unwrap_err().kind, ParseErrorKind::DuplicateNode(1));
        assert_eq!(parse_node_list("5\n", 4).unwrap_err().kind, ParseErrorKind::NodeOutOfRange { id: 5, num_nodes: 4 });
        assert_eq!(parse_node_list("% c\nx\n", 4).unwrap_err().line, 2);
    }

    #[test]
    fn solutions_round_trip() {
        let text = write_solution(&[(0, 0.25_f64), (2, 0.5), (1, 0.0), (3, 0.25)]);
        assert_eq!(text, "node_id,x\n3,0.5\n1,0.25\n4,0.25\n");
        let back: Vec<(usize, f64)> = parse_solution(&text, 4).unwrap();
        assert_eq!(back, vec![(2, 0.5), (0, 0.25), (3, 0.25)]);
        assert!(parse_solution::<f64>("1;0.5\n", 4).is_err());
        assert!(parse_solution::<f64>("1,abc\n", 4).is_err());
        assert_eq!(parse_solution::<f64>("2,1e-3\n", 4).unwrap(), vec![(1, 1e-3)]);
    }

    #[test]
    fn labels() {
        assert_eq!(parse_labels("1 1\n2 2\n3 1\n", 3).unwrap(), vec![0, 1, 0]);
        assert!(parse_labels("1 1\n2 2\n", 3).is_err());
        assert!(parse_labels("1 1\n1 2\n2 1\n", 3).is_err());
        assert!(parse_labels("1 0\n", 1).is_err());
    }
}
