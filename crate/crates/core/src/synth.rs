//! Deterministic planted-cluster hypergraphs and seed sampling.
//!
//! All randomness comes from `ChaCha8Rng::seed_from_u64(rng_seed)`. Block `b` of a planted
//! hypergraph draws from stream `b` of that generator, so a block's edges do not depend on
//! how many blocks follow it. Within a block, edge `k` of `edges_per_block` draws its size
//! uniformly from the size range, then its members with `rand::seq::index::sample`. The last
//! `round(cross_fraction * edges_per_block)` edges of a block are cross edges: `k1` members,
//! uniform in `[1, size − 1]`, come from the block itself and the rest from a partner block.

use std::fmt::Write as _;
use std::ops::Range;

use rand::seq::index::sample;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::hgr::write_hgr;
use crate::hypergraph::{Hypergraph, NodeSet};
use crate::scalar::Scalar;

/// Which block a cross edge reaches into.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Topology {
    /// A uniformly random other block.
    #[default]
    Uniform,
    /// Block `b + 1`; the last block links back to `b − 1`.
    Chain,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlantedConfig {
    pub blocks: Vec<usize>,
    pub edges_per_block: usize,
    /// Inclusive hyperedge size range.
    pub edge_sizes: (usize, usize),
    pub cross_fraction: f64,
    pub topology: Topology,
    pub rng_seed: u64,
}

impl PlantedConfig {
    pub fn new(
        blocks: Vec<usize>,
        edges_per_block: usize,
        edge_sizes: (usize, usize),
        cross_fraction: f64,
        rng_seed: u64,
    ) -> Self {
        Self { blocks, edges_per_block, edge_sizes, cross_fraction, topology: Topology::Uniform, rng_seed }
    }

    pub fn with_topology(mut self, topology: Topology) -> Self {
        self.topology = topology;
        self
    }

    fn validate(&self) -> Result<()> {
        let bad = |what: String| Err(Error::Infeasible(what));
        let (lo, hi) = self.edge_sizes;
        if self.blocks.is_empty() {
            return bad("no blocks".into());
        }
        if lo < 2 || lo > hi {
            return bad(format!("edge size range {lo}:{hi} must satisfy 2 <= min <= max"));
        }
        if let Some(b) = self.blocks.iter().position(|&s| s < hi) {
            return bad(format!("block {} has {} nodes, fewer than the maximum edge size {hi}", b + 1, self.blocks[b]));
        }
        if !(0.0..=1.0).contains(&self.cross_fraction) {
            return bad(format!("cross fraction {} outside [0, 1]", self.cross_fraction));
        }
        Ok(())
    }
}

/// Generated edges (0-based ids) with the block of every node.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlantedInstance {
    pub num_nodes: usize,
    pub edges: Vec<Vec<usize>>,
    /// Block index (0-based) per node.
    pub labels: Vec<usize>,
    pub blocks: Vec<Range<usize>>,
}

impl PlantedInstance {
    pub fn hypergraph<T: Scalar>(&self, delta: T) -> Result<Hypergraph<T>> {
        Hypergraph::with_delta(self.num_nodes, self.edges.clone(), delta)
    }

    pub fn block(&self, b: usize) -> NodeSet {
        NodeSet::collect(self.blocks[b].clone())
    }

    pub fn to_hgr(&self) -> String {
        write_hgr(self.num_nodes, &self.edges)
    }

    /// `node_id block_id` per line, both 1-based.
    pub fn labels_text(&self) -> String {
        let mut s = String::new();
        for (v, b) in self.labels.iter().enumerate() {
            let _ = writeln!(s, "{} {}", v + 1, b + 1);
        }
        s
    }
}

fn partner(topology: Topology, b: usize, num_blocks: usize, rng: &mut ChaCha8Rng) -> usize {
    match topology {
        Topology::Uniform => {
            let r = rng.gen_range(0..num_blocks - 1);
            if r >= b {
                r + 1
            } else {
                r
            }
        }
        Topology::Chain if b + 1 < num_blocks => b + 1,
        Topology::Chain => b - 1,
    }
}

fn draw(rng: &mut ChaCha8Rng, block: &Range<usize>, k: usize, out: &mut Vec<usize>) {
    out.extend(sample(rng, block.len(), k).into_iter().map(|i| block.start + i));
}

pub fn planted_hypergraph(cfg: &PlantedConfig) -> Result<PlantedInstance> {
    cfg.validate()?;
    let mut blocks = Vec::with_capacity(cfg.blocks.len());
    let mut labels = Vec::new();
    for (b, &size) in cfg.blocks.iter().enumerate() {
        blocks.push(labels.len()..labels.len() + size);
        labels.extend(std::iter::repeat_n(b, size));
    }
    let num_blocks = blocks.len();
    let cross = if num_blocks > 1 { (cfg.cross_fraction * cfg.edges_per_block as f64).round() as usize } else { 0 };
    let (lo, hi) = cfg.edge_sizes;
    let mut edges = Vec::with_capacity(num_blocks * cfg.edges_per_block);
    for (b, range) in blocks.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
        rng.set_stream(b as u64);
        for k in 0..cfg.edges_per_block {
            let size = rng.gen_range(lo..=hi);
            let mut edge = Vec::with_capacity(size);
            if k + cross < cfg.edges_per_block {
                draw(&mut rng, range, size, &mut edge);
            } else {
                let other = partner(cfg.topology, b, num_blocks, &mut rng);
                let own = rng.gen_range(1..size);
                draw(&mut rng, range, own, &mut edge);
                draw(&mut rng, &blocks[other], size - own, &mut edge);
            }
            edge.sort_unstable();
            edges.push(edge);
        }
    }
    Ok(PlantedInstance { num_nodes: labels.len(), edges, labels, blocks })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SeedMode {
    #[default]
    Uniform,
    DegreeProportional,
}

/// `k` distinct positive-degree nodes of block `block`, drawn uniformly or with probability
/// proportional to degree (sequential draws without replacement).
pub fn sample_seeds<T: Scalar>(
    h: &Hypergraph<T>,
    labels: &[usize],
    block: usize,
    k: usize,
    mode: SeedMode,
    rng_seed: u64,
) -> Result<NodeSet> {
    let candidates: Vec<usize> =
        (0..labels.len().min(h.num_nodes())).filter(|&v| labels[v] == block && h.degree(v) > T::zero()).collect();
    if candidates.is_empty() {
        return Err(Error::Infeasible(format!("block {} has no node with positive degree", block + 1)));
    }
    if k > candidates.len() {
        return Err(Error::Infeasible(format!(
            "cannot draw {k} seeds from block {} with {} eligible nodes",
            block + 1,
            candidates.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let picked: Vec<usize> = match mode {
        SeedMode::Uniform => sample(&mut rng, candidates.len(), k).into_iter().map(|i| candidates[i]).collect(),
        SeedMode::DegreeProportional => candidates
            .choose_multiple_weighted(&mut rng, k, |&v| h.degree(v).as_f64())
            .map_err(|e| Error::Infeasible(format!("degree weights: {e}")))?
            .copied()
            .collect(),
    };
    Ok(NodeSet::collect(picked))
}

/// Uniform random hypergraph: `m` edges with sizes uniform in `sizes` (clamped to `n`),
/// members uniform without replacement, one delta-linear gadget per edge.
pub fn random_hypergraph<T: Scalar>(
    n: usize,
    m: usize,
    sizes: (usize, usize),
    delta: T,
    rng_seed: u64,
) -> Result<Hypergraph<T>> {
    let (lo, hi) = (sizes.0.max(2), sizes.1.min(n));
    if n < 2 || lo > hi {
        return Err(Error::Infeasible(format!("cannot build edges of size {}:{} on {n} nodes", sizes.0, sizes.1)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let edges = (0..m)
        .map(|_| {
            let size = rng.gen_range(lo..=hi);
            let mut e = sample(&mut rng, n, size).into_vec();
            e.sort_unstable();
            e
        })
        .collect();
    Hypergraph::with_delta(n, edges, delta)
}
