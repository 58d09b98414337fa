//! Exact flow programs over secured arenas.

pub mod builder;
pub mod simplex;
pub mod witness;

pub use builder::{
    build_assumption_lp, build_guarantee_lp, build_negspec_lp, build_spec_free_lp, scc_reachable, shifted_weights,
    Candidate, Edge, Subgraph, WorkGraph,
};
pub use simplex::{feasible, FeasiblePoint, LpInstance, Relation, Row};
pub use witness::{extract_witness, WitnessError, WitnessSchedule};
