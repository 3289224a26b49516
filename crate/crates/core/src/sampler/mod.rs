//! Metropolis–Hastings sampling of group assignments.
//!
//! The acceptance probability compares only the marginal likelihood and the
//! layer-transition prior `F`. The first-layer prior and the prior on `k` are
//! carried by the asymmetry of the proposals instead: layer-one additions and
//! removals pick among non-members and members respectively, and the group
//! addition branch is taken with probability `1/(2k(n+1))`.

mod chain;
mod consensus;
mod proposal;
mod run;

pub use chain::{
    propose, standard_share, step, GroupAddition, Mode, MoveCounts, SamplerConfig, StepOutcome,
};
pub use consensus::{consensus, consensus_with, Consensus, ConsensusRule};
pub use proposal::{
    propose_group_addition, propose_multi_node, propose_standard, propose_standard_fixed_k,
};
pub use run::{
    random_assignment, read_records, run, run_chain, run_rng, write_records, Manifest, RunOutput,
    RunSummary, SampleRecord,
};

use crate::error::Result;
use crate::moves::Move;
use crate::network::TemporalNetwork;
use crate::prob::JTable;
use crate::state::ChainState;

/// Proposals are [`Move`]s.
pub type MoveProposal = Move;

/// Log acceptance ratio `min(0, delta)` of `proposal` from `state`.
pub fn log_acceptance_ratio(
    state: &mut ChainState,
    proposal: &Move,
    net: &TemporalNetwork,
    jt: &JTable,
) -> Result<f64> {
    Ok(state.evaluate(net, jt, proposal)?.log_acceptance())
}
