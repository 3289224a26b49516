use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::proposal::{
    propose_group_addition, propose_multi_node, propose_standard, propose_standard_fixed_k,
};
use crate::assignment::{GroupAssignment, MAX_GROUPS};
use crate::error::{Error, Result};
use crate::moves::{Move, MoveKind};
use crate::network::TemporalNetwork;
use crate::prob::JTable;
use crate::state::ChainState;

/// Which proposal mixture a chain uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Multi-node moves with probability `p`; otherwise standard moves with
    /// probability `1 - 1/(2k(n+1))` and group additions for the remainder.
    Main,
    /// Standard moves only, never changing `k`.
    FixedK,
    /// The main mixture without multi-node moves.
    NoMultiNode,
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "main" => Ok(Mode::Main),
            "fixed-k" => Ok(Mode::FixedK),
            "no-multi-node" => Ok(Mode::NoMultiNode),
            other => Err(Error::Config(format!("unknown mode {other:?}"))),
        }
    }
}

/// How the group-addition branch turns into a proposal.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GroupAddition {
    /// Draw a layer uniformly and add a group only when it is the first
    /// layer; otherwise do nothing. This matches the `1/L` factor of the
    /// removal move, which only arises from the first layer.
    #[default]
    LayerGated,
    /// Add a group whenever the branch is taken. The chain then proposes
    /// additions `L` times more often than their reverse removals allow for
    /// and over-weights larger `k`.
    Ungated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    /// MCMC steps per run; every proposal, including no-ops, is one step.
    pub steps: u64,
    pub runs: usize,
    pub init_k: usize,
    pub multi_node_prob: f64,
    /// Save interval in steps.
    pub thin: u64,
    pub seed: u64,
    pub k_max: usize,
    pub mode: Mode,
    /// Draw multi-node layers from the second layer onward only.
    pub restrict_multi_node_layer1: bool,
    /// Steps before the first saved record.
    #[serde(default)]
    pub burn_in: u64,
    #[serde(default)]
    pub group_addition: GroupAddition,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            steps: 1_000_000,
            runs: 5,
            init_k: 4,
            multi_node_prob: 1e-3,
            thin: 10_000,
            seed: 0,
            k_max: MAX_GROUPS,
            mode: Mode::Main,
            restrict_multi_node_layer1: false,
            burn_in: 0,
            group_addition: GroupAddition::LayerGated,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.steps == 0 {
            return fail("steps must be at least 1".into());
        }
        if self.thin == 0 {
            return fail("thin must be at least 1".into());
        }
        if self.runs == 0 {
            return fail("runs must be at least 1".into());
        }
        if !(1..=MAX_GROUPS).contains(&self.k_max) {
            return fail(format!("k_max must lie in 1..={MAX_GROUPS}"));
        }
        if !(1..=self.k_max).contains(&self.init_k) {
            return fail(format!(
                "init_k = {} must lie in 1..=k_max ({})",
                self.init_k, self.k_max
            ));
        }
        if !(0.0..=1.0).contains(&self.multi_node_prob) {
            return fail(format!(
                "multi-node probability {} outside [0, 1]",
                self.multi_node_prob
            ));
        }
        Ok(())
    }
}

/// Draws one proposal from the mixture selected by `config.mode`.
pub fn propose<R: Rng + ?Sized>(g: &GroupAssignment, config: &SamplerConfig, rng: &mut R) -> Move {
    match config.mode {
        Mode::FixedK => propose_standard_fixed_k(g, rng),
        Mode::Main if rng.gen::<f64>() < config.multi_node_prob => {
            propose_multi_node(g, rng, config.restrict_multi_node_layer1)
        }
        Mode::Main | Mode::NoMultiNode => {
            if rng.gen::<f64>() < standard_share(g.k(), g.node_count()) {
                propose_standard(g, rng)
            } else if config.group_addition == GroupAddition::LayerGated
                && rng.gen_range(0..g.layer_count()) != 0
            {
                Move::NoOp
            } else {
                propose_group_addition(g, config.k_max, rng)
            }
        }
    }
}

/// Probability `1 - 1/(2k(n+1))` of a standard move outside multi-node moves.
pub fn standard_share(k: usize, n: usize) -> f64 {
    1.0 - 1.0 / (2.0 * k as f64 * (n as f64 + 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub proposal: Move,
    pub log_ratio: f64,
    pub accepted: bool,
}

/// One Metropolis–Hastings step: propose, accept with `min(1, exp(delta))`.
/// No-op proposals (and swaps that change nothing) count as rejections.
pub fn step<R: Rng + ?Sized>(
    state: &mut ChainState,
    config: &SamplerConfig,
    net: &TemporalNetwork,
    jt: &JTable,
    rng: &mut R,
) -> Result<StepOutcome> {
    let proposal = propose(state.assignment(), config, rng);
    if proposal == Move::NoOp {
        return Ok(StepOutcome {
            proposal,
            log_ratio: 0.0,
            accepted: false,
        });
    }
    let eval = state.evaluate(net, jt, &proposal)?;
    if eval.is_identity() {
        return Ok(StepOutcome {
            proposal,
            log_ratio: 0.0,
            accepted: false,
        });
    }
    let log_alpha = eval.log_acceptance();
    let accepted = log_alpha >= 0.0 || rng.gen::<f64>().ln() < log_alpha;
    if accepted {
        state.commit(eval)?;
    }
    Ok(StepOutcome {
        proposal,
        log_ratio: eval.log_ratio,
        accepted,
    })
}

/// Proposal and acceptance tallies per move kind.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MoveCounts {
    pub proposed: BTreeMap<String, u64>,
    pub accepted: BTreeMap<String, u64>,
}

impl MoveCounts {
    pub fn record(&mut self, outcome: &StepOutcome) {
        let key = outcome.proposal.kind().to_string();
        *self.proposed.entry(key.clone()).or_default() += 1;
        if outcome.accepted {
            *self.accepted.entry(key).or_default() += 1;
        }
    }

    pub fn proposed(&self, kind: MoveKind) -> u64 {
        self.proposed.get(&kind.to_string()).copied().unwrap_or(0)
    }

    pub fn accepted(&self, kind: MoveKind) -> u64 {
        self.accepted.get(&kind.to_string()).copied().unwrap_or(0)
    }

    pub fn total_proposed(&self) -> u64 {
        self.proposed.values().sum()
    }

    pub fn total_accepted(&self) -> u64 {
        self.accepted.values().sum()
    }

    pub fn acceptance_rate(&self) -> f64 {
        let total = self.total_proposed();
        if total == 0 {
            0.0
        } else {
            self.total_accepted() as f64 / total as f64
        }
    }
}
