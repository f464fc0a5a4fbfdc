//! Strongly local diffusions on hypergraphs with cardinality-based splitting penalties.
//!
//! Every routine is generic over the scalar type ([`Scalar`], implemented for `f32` and
//! `f64`); the `*64` / `*32` aliases below fix it.
//!
//! ```
//! use hyperdiff::{solve, sweepcut, DiffusionConfig, Hypergraph64, NodeSet};
//!
//! let h = Hypergraph64::parse("4 2\n1 2 3\n2 3 4\n", 1.0).unwrap();
//! let seeds = NodeSet::from_one_based(4, [1]).unwrap();
//! let x = solve(&h, &seeds, &DiffusionConfig::new(0.05)).unwrap();
//! let profile = sweepcut(&h, &x.x).unwrap();
//! assert!(profile.best_set.contains(0));
//! ```

// `!(x > 0)` is how parameter checks reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diffusion;
pub mod error;
pub mod hgr;
pub mod hypergraph;
pub mod io;
pub mod oracles;
pub mod reduction;
pub mod scalar;
pub mod sweep;
pub mod synth;

pub use diffusion::{
    aux_residuals, node_residual, pnorm_node_residual, pnorm_push_volume_bound, pnorm_solve, push_volume_bound, solve,
    Diffusion, DiffusionConfig, DiffusionState, LhqdSolver, PnormSolver, PushContext, PushLedger, PushObserver,
};
pub use error::{Error, ParseError, ParseErrorKind, Result};
pub use hgr::{parse_gadgets, parse_hgr, write_gadgets, write_hgr, HgrFile};
pub use hypergraph::{splitting_penalty, GadgetParams, Hypergraph, NodeSet, SetMetrics};
pub use reduction::{build_localized_cut_graph, build_reduced_graph, directed_cut, DirectedArc, ReducedGraph};
pub use scalar::Scalar;
pub use sweep::{boundary_delta_bar, prf1, sweepcut, Prf1, SweepProfile};
pub use synth::{
    planted_hypergraph, random_hypergraph, sample_seeds, PlantedConfig, PlantedInstance, SeedMode, Topology,
};

pub type Hypergraph64 = Hypergraph<f64>;
pub type Hypergraph32 = Hypergraph<f32>;
pub type DiffusionConfig64 = DiffusionConfig<f64>;
pub type DiffusionConfig32 = DiffusionConfig<f32>;
pub type Diffusion64 = Diffusion<f64>;
pub type Diffusion32 = Diffusion<f32>;
pub type SweepProfile64 = SweepProfile<f64>;
pub type SweepProfile32 = SweepProfile<f32>;
