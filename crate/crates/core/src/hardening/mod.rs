//! Turning formulas into noise-resilient ones by way of coded protocols.
pub mod reach;

pub use reach::{
    brute_force_tree, synthetic_protocol, Candidates, PathBudget, Phi, SchemeBranch, SchemeModel, TreeBranch, TreeModel,
};
pub mod materialize;

pub use materialize::{materialize_scheme, materialize_tree, reachable_count, MaterializeError};
pub mod harden;

pub use harden::{
    certify_protocol_resilience, harden, prune, Accounting, Certification, HardenError, HardenedArtifact, KindSummary,
    Workload, DEFAULT_WORKLOAD_CAP,
};
