//! Hierarchical preliminary-result aggregation: vote tallies and flip
//! solvers, a deterministic reporting-network simulator, in-flight attacks,
//! authenticated reporting, and historical discrepancy analysis.

pub mod adversary;
pub mod analysis;
pub mod cli;
pub mod secauth;
pub mod simnet;
pub mod tally;
