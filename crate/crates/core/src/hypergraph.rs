//! Hypergraph data model, cardinality-based splitting penalties, degrees, cuts and conductance.
//!
//! Node ids are 0-based dense indices everywhere inside the crate. Files carry 1-based ids and
//! are shifted by one on the way in and out (see [`crate::hgr`] and [`crate::io`]).

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// One directed gadget: splitting penalty `c * min{|A|, |e \ A|, delta}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GadgetParams<T> {
    pub c: T,
    pub delta: T,
}

impl<T: Scalar> GadgetParams<T> {
    pub fn new(c: T, delta: T) -> Result<Self> {
        if !(c > T::zero()) || !c.is_finite() {
            return Err(Error::InvalidHypergraph(format!("gadget scale must be positive, got {c}")));
        }
        if !(delta >= T::one()) || !delta.is_finite() {
            return Err(Error::InvalidHypergraph(format!("gadget threshold must be >= 1, got {delta}")));
        }
        Ok(Self { c, delta })
    }

    /// The delta-linear threshold penalty `min{|A|, |e \ A|, delta}` with unit scale.
    pub fn delta_linear(delta: T) -> Result<Self> {
        Self::new(T::one(), delta)
    }

    #[inline]
    pub fn penalty(&self, in_count: usize, edge_size: usize) -> T {
        let k = in_count.min(edge_size - in_count);
        self.c * T::count(k).min(self.delta)
    }
}

/// `Σ_j c_j · min{in_count, edge_size − in_count, δ_j}`.
pub fn splitting_penalty<T: Scalar>(gadgets: &[GadgetParams<T>], in_count: usize, edge_size: usize) -> T {
    debug_assert!(in_count <= edge_size);
    gadgets.iter().map(|g| g.penalty(in_count, edge_size)).sum()
}

/// Sorted set of distinct 0-based node ids.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct NodeSet {
    ids: Vec<usize>,
}

impl NodeSet {
    /// Validates that every id is below `num_nodes` and that no id repeats.
    pub fn new(num_nodes: usize, ids: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut ids: Vec<usize> = ids.into_iter().collect();
        ids.sort_unstable();
        for w in ids.windows(2) {
            if w[0] == w[1] {
                return Err(Error::InvalidSeeds(format!("node {} listed twice", w[0] + 1)));
            }
        }
        if let Some(&last) = ids.last() {
            if last >= num_nodes {
                return Err(Error::InvalidSeeds(format!("node {} out of range 1..={num_nodes}", last + 1)));
            }
        }
        Ok(Self { ids })
    }

    /// Same as [`NodeSet::new`] with 1-based ids.
    pub fn from_one_based(num_nodes: usize, ids: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut shifted = Vec::new();
        for id in ids {
            if id == 0 || id > num_nodes {
                return Err(Error::InvalidSeeds(format!("node {id} out of range 1..={num_nodes}")));
            }
            shifted.push(id - 1);
        }
        Self::new(num_nodes, shifted)
    }

    /// Builds a set from ids that may repeat; used internally where ids are known in range.
    pub(crate) fn collect(ids: impl IntoIterator<Item = usize>) -> Self {
        let mut ids: Vec<usize> = ids.into_iter().collect();
        ids.sort_unstable();
        ids.dedup();
        Self { ids }
    }

    pub fn empty() -> Self {
        Self::default()
    }

    #[inline]
    pub fn contains(&self, id: usize) -> bool {
        self.ids.binary_search(&id).is_ok()
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.ids.iter().copied()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.ids
    }

    pub fn to_one_based(&self) -> Vec<usize> {
        self.ids.iter().map(|&i| i + 1).collect()
    }

    pub fn complement(&self, num_nodes: usize) -> Self {
        Self { ids: (0..num_nodes).filter(|&i| !self.contains(i)).collect() }
    }

    pub fn intersection_len(&self, other: &NodeSet) -> usize {
        let (small, large) = if self.len() <= other.len() { (self, other) } else { (other, self) };
        small.iter().filter(|&i| large.contains(i)).count()
    }

    /// Membership mask of length `num_nodes`.
    pub fn mask(&self, num_nodes: usize) -> Vec<bool> {
        let mut m = vec![false; num_nodes];
        for &i in &self.ids {
            m[i] = true;
        }
        m
    }
}

/// Conductance of one node set, with its cut and volume.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SetMetrics<T> {
    pub cut: T,
    pub volume: T,
    pub conductance: T,
}

/// Immutable hypergraph with per-hyperedge gadget lists and precomputed degrees.
#[derive(Clone, Debug)]
pub struct Hypergraph<T> {
    num_nodes: usize,
    edges: Vec<Vec<usize>>,
    // flat gadget storage; gadgets of edge e live in gadget_start[e]..gadget_start[e + 1]
    gadget_params: Vec<GadgetParams<T>>,
    gadget_edge: Vec<usize>,
    gadget_start: Vec<usize>,
    // CSR node -> incident edges
    incidence_start: Vec<usize>,
    incidence: Vec<usize>,
    degrees: Vec<T>,
    total_volume: T,
    max_edge_size: usize,
    max_delta: T,
}

impl<T: Scalar> Hypergraph<T> {
    /// `edges` hold 0-based ids; `gadgets[e]` is the (nonempty) gadget list of edge `e`.
    pub fn new(num_nodes: usize, edges: Vec<Vec<usize>>, gadgets: Vec<Vec<GadgetParams<T>>>) -> Result<Self> {
        if gadgets.len() != edges.len() {
            return Err(Error::InvalidHypergraph(format!(
                "{} gadget lists for {} hyperedges",
                gadgets.len(),
                edges.len()
            )));
        }
        let mut seen = vec![usize::MAX; num_nodes];
        for (e, edge) in edges.iter().enumerate() {
            if edge.len() < 2 {
                return Err(Error::InvalidHypergraph(format!(
                    "hyperedge {} has {} node(s), at least 2 required",
                    e + 1,
                    edge.len()
                )));
            }
            for &v in edge {
                if v >= num_nodes {
                    return Err(Error::InvalidHypergraph(format!(
                        "hyperedge {} references node {} out of range 1..={num_nodes}",
                        e + 1,
                        v + 1
                    )));
                }
                if seen[v] == e {
                    return Err(Error::InvalidHypergraph(format!("hyperedge {} lists node {} twice", e + 1, v + 1)));
                }
                seen[v] = e;
            }
            if gadgets[e].is_empty() {
                return Err(Error::InvalidHypergraph(format!("hyperedge {} has no gadget", e + 1)));
            }
            for g in &gadgets[e] {
                GadgetParams::new(g.c, g.delta)?;
            }
        }

        let mut gadget_params = Vec::new();
        let mut gadget_edge = Vec::new();
        let mut gadget_start = Vec::with_capacity(edges.len() + 1);
        gadget_start.push(0);
        for (e, list) in gadgets.into_iter().enumerate() {
            for g in list {
                gadget_params.push(g);
                gadget_edge.push(e);
            }
            gadget_start.push(gadget_params.len());
        }

        let mut counts = vec![0usize; num_nodes + 1];
        for edge in &edges {
            for &v in edge {
                counts[v + 1] += 1;
            }
        }
        for i in 0..num_nodes {
            counts[i + 1] += counts[i];
        }
        let incidence_start = counts.clone();
        let mut fill = counts;
        let mut incidence = vec![0; incidence_start[num_nodes]];
        for (e, edge) in edges.iter().enumerate() {
            for &v in edge {
                incidence[fill[v]] = e;
                fill[v] += 1;
            }
        }

        let mut degrees = vec![T::zero(); num_nodes];
        for (e, edge) in edges.iter().enumerate() {
            let single = splitting_penalty(&gadget_params[gadget_start[e]..gadget_start[e + 1]], 1, edge.len());
            for &v in edge {
                degrees[v] = degrees[v] + single;
            }
        }
        let total_volume = degrees.iter().copied().sum();
        let max_edge_size = edges.iter().map(Vec::len).max().unwrap_or(0);
        let max_delta = gadget_params.iter().map(|g| g.delta).fold(T::zero(), T::max);

        Ok(Self {
            num_nodes,
            edges,
            gadget_params,
            gadget_edge,
            gadget_start,
            incidence_start,
            incidence,
            degrees,
            total_volume,
            max_edge_size,
            max_delta,
        })
    }

    /// Installs a single `(c = 1, delta)` gadget on every hyperedge.
    pub fn with_delta(num_nodes: usize, edges: Vec<Vec<usize>>, delta: T) -> Result<Self> {
        let g = GadgetParams::delta_linear(delta)?;
        let gadgets = vec![vec![g]; edges.len()];
        Self::new(num_nodes, edges, gadgets)
    }

    #[inline]
    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    #[inline]
    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    #[inline]
    pub fn num_gadgets(&self) -> usize {
        self.gadget_params.len()
    }

    #[inline]
    pub fn edge(&self, e: usize) -> &[usize] {
        &self.edges[e]
    }

    pub fn edges(&self) -> &[Vec<usize>] {
        &self.edges
    }

    #[inline]
    pub fn edge_gadgets(&self, e: usize) -> &[GadgetParams<T>] {
        &self.gadget_params[self.gadget_start[e]..self.gadget_start[e + 1]]
    }

    /// Flat gadget ids belonging to edge `e`.
    #[inline]
    pub fn edge_gadget_ids(&self, e: usize) -> std::ops::Range<usize> {
        self.gadget_start[e]..self.gadget_start[e + 1]
    }

    #[inline]
    pub fn gadget(&self, g: usize) -> GadgetParams<T> {
        self.gadget_params[g]
    }

    #[inline]
    pub fn gadget_edge(&self, g: usize) -> usize {
        self.gadget_edge[g]
    }

    /// Nodes of the hyperedge gadget `g` belongs to.
    #[inline]
    pub fn gadget_members(&self, g: usize) -> &[usize] {
        &self.edges[self.gadget_edge[g]]
    }

    #[inline]
    pub fn node_edges(&self, v: usize) -> &[usize] {
        &self.incidence[self.incidence_start[v]..self.incidence_start[v + 1]]
    }

    /// Flat ids of every gadget touching node `v`, in ascending order.
    pub fn node_gadgets(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.node_edges(v).iter().flat_map(move |&e| self.edge_gadget_ids(e))
    }

    #[inline]
    pub fn degree(&self, v: usize) -> T {
        self.degrees[v]
    }

    pub fn degrees(&self) -> &[T] {
        &self.degrees
    }

    pub fn total_volume(&self) -> T {
        self.total_volume
    }

    /// Largest hyperedge size.
    pub fn max_edge_size(&self) -> usize {
        self.max_edge_size
    }

    /// Largest gadget threshold, zero when there are no gadgets.
    pub fn max_delta(&self) -> T {
        self.max_delta
    }

    pub fn volume(&self, s: &NodeSet) -> T {
        s.iter().map(|v| self.degrees[v]).sum()
    }

    pub fn cut(&self, s: &NodeSet) -> T {
        let mut cut = T::zero();
        let mut touched: Vec<usize> = s.iter().flat_map(|v| self.node_edges(v).iter().copied()).collect();
        touched.sort_unstable();
        touched.dedup();
        for e in touched {
            let k = self.edges[e].iter().filter(|&&v| s.contains(v)).count();
            cut = cut + splitting_penalty(self.edge_gadgets(e), k, self.edges[e].len());
        }
        cut
    }

    /// Conductance is `+inf` when the smaller side has zero volume.
    pub fn set_metrics(&self, s: &NodeSet) -> SetMetrics<T> {
        let cut = self.cut(s);
        let volume = self.volume(s);
        let conductance = conductance(cut, volume, self.total_volume);
        SetMetrics { cut, volume, conductance }
    }
}

#[inline]
pub(crate) fn conductance<T: Scalar>(cut: T, volume: T, total: T) -> T {
    let side = volume.min(total - volume);
    if side > T::zero() {
        cut / side
    } else {
        T::infinity()
    }
}
