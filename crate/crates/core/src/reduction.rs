//! Explicit gadget reduction of a hypergraph to a directed graph, and its localized cut graph.
//!
//! The push solvers never build these graphs; they exist for the oracles and for inspection.
//! Auxiliary ids are fixed: gadget `j` (flat gadget order) owns `a_j = n + 2j` and
//! `b_j = n + 2j + 1`. A localized graph appends the source and then the sink.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::hypergraph::{Hypergraph, NodeSet};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DirectedArc<T> {
    pub tail: usize,
    pub head: usize,
    pub weight: T,
}

#[derive(Clone, Debug)]
pub struct ReducedGraph<T> {
    pub num_original: usize,
    pub node_count: usize,
    pub arcs: Vec<DirectedArc<T>>,
    /// `(a, b)` ids per gadget.
    pub aux_pairs: Vec<(usize, usize)>,
    /// Hypergraph degree for original nodes, zero for auxiliary (and terminal) nodes.
    pub degrees: Vec<T>,
    pub source: Option<usize>,
    pub sink: Option<usize>,
}

pub fn build_reduced_graph<T: Scalar>(h: &Hypergraph<T>) -> ReducedGraph<T> {
    let n = h.num_nodes();
    let mut arcs = Vec::new();
    let mut aux_pairs = Vec::with_capacity(h.num_gadgets());
    for j in 0..h.num_gadgets() {
        let (a, b) = (n + 2 * j, n + 2 * j + 1);
        let g = h.gadget(j);
        let members = h.gadget_members(j);
        arcs.extend(members.iter().map(|&v| DirectedArc { tail: v, head: a, weight: g.c }));
        arcs.extend(members.iter().map(|&v| DirectedArc { tail: b, head: v, weight: g.c }));
        arcs.push(DirectedArc { tail: a, head: b, weight: g.c * g.delta });
        aux_pairs.push((a, b));
    }
    let node_count = n + 2 * h.num_gadgets();
    let mut degrees = h.degrees().to_vec();
    degrees.resize(node_count, T::zero());
    ReducedGraph { num_original: n, node_count, arcs, aux_pairs, degrees, source: None, sink: None }
}

/// Adds a source with arcs `(s, r)` of weight `γ d_r` for seeds and a sink with arcs
/// `(v, t)` of weight `γ d_v` for every other original node.
pub fn build_localized_cut_graph<T: Scalar>(g: &ReducedGraph<T>, seeds: &NodeSet, gamma: T) -> Result<ReducedGraph<T>> {
    if !(gamma > T::zero()) {
        return Err(Error::InvalidConfig(format!("gamma must be positive, got {gamma}")));
    }
    if g.source.is_some() {
        return Err(Error::InvalidConfig("graph is already localized".into()));
    }
    if seeds.is_empty() {
        return Err(Error::InvalidSeeds("seed set is empty".into()));
    }
    for r in seeds.iter() {
        if r >= g.num_original {
            return Err(Error::InvalidSeeds(format!("seed {} is not an original node", r + 1)));
        }
        if !(g.degrees[r] > T::zero()) {
            return Err(Error::InvalidSeeds(format!("seed {} has zero degree", r + 1)));
        }
    }
    let mut out = g.clone();
    let (s, t) = (g.node_count, g.node_count + 1);
    for v in 0..g.num_original {
        let w = gamma * g.degrees[v];
        if seeds.contains(v) {
            out.arcs.push(DirectedArc { tail: s, head: v, weight: w });
        } else {
            out.arcs.push(DirectedArc { tail: v, head: t, weight: w });
        }
    }
    out.node_count += 2;
    out.degrees.resize(out.node_count, T::zero());
    out.source = Some(s);
    out.sink = Some(t);
    Ok(out)
}

impl<T: Scalar> ReducedGraph<T> {
    /// Weight of arcs leaving `inside` (indexed by node id).
    pub fn directed_cut(&self, inside: &[bool]) -> T {
        directed_cut(self, inside)
    }

    /// `tail,head,weight` with 1-based ids for original nodes and raw ids otherwise.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("tail,head,weight\n");
        for a in &self.arcs {
            let _ = writeln!(s, "{},{},{}", a.tail + 1, a.head + 1, a.weight);
        }
        s
    }
}

pub fn directed_cut<T: Scalar>(g: &ReducedGraph<T>, inside: &[bool]) -> T {
    let is_in = |v: usize| inside.get(v).copied().unwrap_or(false);
    g.arcs.iter().filter(|a| is_in(a.tail) && !is_in(a.head)).map(|a| a.weight).sum()
}
