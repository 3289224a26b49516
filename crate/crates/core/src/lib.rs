//! Bayesian inference of hierarchical core–periphery structure in temporal
//! networks.
//!
//! A [`TemporalNetwork`] is a sequence of undirected simple graphs on a fixed
//! node set. A [`GroupAssignment`] gives every node-layer a membership
//! pattern over groups `1..k` (group 0 contains everyone); two node-layers
//! connect with a probability set by the highest group they share. The
//! [`sampler`] draws assignments and `k` from the posterior by
//! Metropolis–Hastings, [`generator`] samples from the model, and [`oracle`]
//! enumerates exact posteriors of tiny instances.

pub mod assignment;
pub mod cli;
pub mod error;
pub mod generator;
pub mod moves;
pub mod network;
pub mod oracle;
pub mod prob;
pub mod render;
pub mod sampler;
pub mod state;
pub mod stats;

pub use assignment::{GroupAssignment, MembershipPattern, MAX_GROUPS};
pub use error::{Error, Result};
pub use moves::{Move, MoveKind};
pub use network::TemporalNetwork;
pub use prob::{JTable, LogProb};
pub use sampler::{Mode, SampleRecord, SamplerConfig};
pub use state::ChainState;
pub use stats::SufficientStats;
