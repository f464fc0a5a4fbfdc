//! Sweep-cut rounding of a diffusion vector and set-overlap metrics.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::hypergraph::{conductance, splitting_penalty, Hypergraph, NodeSet};
use crate::scalar::Scalar;

/// Every prefix of the positive support of `x`, sorted by value (descending, ties by id).
#[derive(Clone, Debug, PartialEq)]
pub struct SweepProfile<T> {
    pub order: Vec<usize>,
    pub values: Vec<T>,
    pub prefix_volume: Vec<T>,
    pub prefix_cut: Vec<T>,
    /// `+inf` where the smaller side has zero volume; such prefixes are never chosen.
    pub prefix_conductance: Vec<T>,
    /// Length of the chosen prefix.
    pub best_len: usize,
    pub best_set: NodeSet,
    pub best_conductance: T,
    /// max over hyperedges cut by `best_set` and their gadgets of `min{δ_j, |e|/2}`; 0 if none is cut.
    pub boundary_delta_bar: T,
}

impl<T: Scalar> SweepProfile<T> {
    /// `rank,node,x,prefix_vol,prefix_cut,prefix_conductance`, 1-based ranks and ids.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("rank,node,x,prefix_vol,prefix_cut,prefix_conductance\n");
        for k in 0..self.order.len() {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{}",
                k + 1,
                self.order[k] + 1,
                self.values[k],
                self.prefix_volume[k],
                self.prefix_cut[k],
                self.prefix_conductance[k]
            );
        }
        s
    }
}

/// Sweeps the positive entries of the sparse vector `x`, maintaining the cut through per-edge
/// member counts.
pub fn sweepcut<T: Scalar>(h: &Hypergraph<T>, x: &[(usize, T)]) -> Result<SweepProfile<T>> {
    let mut entries: Vec<(usize, T)> = Vec::with_capacity(x.len());
    let mut listed = HashSet::with_capacity(x.len());
    for &(v, val) in x {
        if v >= h.num_nodes() {
            return Err(Error::InvalidVector(format!("node {} out of range 1..={}", v + 1, h.num_nodes())));
        }
        if !val.is_finite() || val < T::zero() {
            return Err(Error::InvalidVector(format!("entry {} of node {} is not a nonnegative number", val, v + 1)));
        }
        if !listed.insert(v) {
            return Err(Error::InvalidVector(format!("node {} listed twice", v + 1)));
        }
        if val > T::zero() {
            entries.push((v, val));
        }
    }
    if entries.is_empty() {
        return Err(Error::EmptyVector);
    }
    entries.sort_by(|a, b| b.1.partial_cmp(&a.1).expect("finite").then(a.0.cmp(&b.0)));

    let total = h.total_volume();
    let tol = T::EXACT_TOL;
    let mut inside: HashMap<usize, usize> = HashMap::new();
    let (mut cut, mut vol) = (T::zero(), T::zero());
    let n = entries.len();
    let mut p = SweepProfile {
        order: Vec::with_capacity(n),
        values: Vec::with_capacity(n),
        prefix_volume: Vec::with_capacity(n),
        prefix_cut: Vec::with_capacity(n),
        prefix_conductance: Vec::with_capacity(n),
        best_len: 0,
        best_set: NodeSet::empty(),
        best_conductance: T::infinity(),
        boundary_delta_bar: T::zero(),
    };
    for (k, &(v, val)) in entries.iter().enumerate() {
        for &e in h.node_edges(v) {
            let size = h.edge(e).len();
            let count = inside.entry(e).or_insert(0);
            let gadgets = h.edge_gadgets(e);
            cut = cut - splitting_penalty(gadgets, *count, size);
            *count += 1;
            cut = cut + splitting_penalty(gadgets, *count, size);
        }
        vol = vol + h.degree(v);
        let phi = conductance(cut, vol, total);
        p.order.push(v);
        p.values.push(val);
        p.prefix_volume.push(vol);
        p.prefix_cut.push(cut);
        p.prefix_conductance.push(phi);
        if p.best_len == 0 || phi < p.best_conductance * (T::one() - tol) {
            p.best_len = k + 1;
            p.best_conductance = phi;
        }
    }
    p.best_set = NodeSet::collect(p.order[..p.best_len].iter().copied());
    p.boundary_delta_bar = boundary_delta_bar(h, &p.best_set);
    Ok(p)
}

/// max over hyperedges cut by `s` and their gadgets of `min{δ_j, |e|/2}`.
pub fn boundary_delta_bar<T: Scalar>(h: &Hypergraph<T>, s: &NodeSet) -> T {
    let mut best = T::zero();
    let mut seen = HashSet::new();
    for v in s.iter() {
        for &e in h.node_edges(v) {
            if !seen.insert(e) {
                continue;
            }
            let members = h.edge(e);
            let k = members.iter().filter(|&&u| s.contains(u)).count();
            if k == members.len() {
                continue;
            }
            let half = T::count(members.len()) / T::lit(2.0);
            for g in h.edge_gadgets(e) {
                best = best.max(g.delta.min(half));
            }
        }
    }
    best
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Prf1 {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Precision and recall of `pred` against `truth`; every ratio with a zero denominator is 0.
pub fn prf1(pred: &NodeSet, truth: &NodeSet) -> Prf1 {
    let hit = pred.intersection_len(truth) as f64;
    let ratio = |num: f64, den: usize| if den == 0 { 0.0 } else { num / den as f64 };
    let precision = ratio(hit, pred.len());
    let recall = ratio(hit, truth.len());
    let f1 = if precision + recall > 0.0 { 2.0 * precision * recall / (precision + recall) } else { 0.0 };
    Prf1 { precision, recall, f1 }
}
