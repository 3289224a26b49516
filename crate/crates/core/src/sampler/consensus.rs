use std::collections::HashMap;

use super::run::SampleRecord;
use crate::assignment::{GroupAssignment, MembershipPattern};
use crate::error::{Error, Result};

/// How a node-layer's consensus membership is chosen among samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ConsensusRule {
    /// Most frequent full membership pattern (ties: smallest pattern value).
    #[default]
    Pattern,
    /// Majority vote per group indicator (ties: not a member).
    PerGroup,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Consensus {
    pub assignment: GroupAssignment,
    /// Most frequent `k` among the records (ties: the smaller `k`).
    pub modal_k: usize,
    /// Records with `k == modal_k`, the only ones that vote.
    pub used: usize,
    /// Records discarded because their `k` differs from the modal one.
    pub discarded: usize,
}

/// Consensus assignment with the default pattern-majority rule.
pub fn consensus(records: &[SampleRecord]) -> Result<GroupAssignment> {
    consensus_with(records, ConsensusRule::Pattern).map(|c| c.assignment)
}

/// Conditions on the modal `k`, then takes a per-node-layer majority.
pub fn consensus_with(records: &[SampleRecord], rule: ConsensusRule) -> Result<Consensus> {
    let first = records
        .first()
        .ok_or_else(|| Error::Empty("no sample records".into()))?;
    let (n, num_layers) = (
        first.assignment.node_count(),
        first.assignment.layer_count(),
    );
    if let Some(bad) = records
        .iter()
        .find(|r| r.assignment.node_count() != n || r.assignment.layer_count() != num_layers)
    {
        return Err(Error::DimensionMismatch(format!(
            "record (run {}, step {}) has a different shape",
            bad.run, bad.step
        )));
    }

    let mut k_votes: HashMap<usize, usize> = HashMap::new();
    for r in records {
        *k_votes.entry(r.k()).or_default() += 1;
    }
    let (modal_k, used) = k_votes
        .iter()
        .map(|(&k, &c)| (k, c))
        .max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0)))
        .expect("non-empty");
    let voters: Vec<&GroupAssignment> = records
        .iter()
        .filter(|r| r.k() == modal_k)
        .map(|r| &r.assignment)
        .collect();

    let mut patterns = Vec::with_capacity(n * num_layers);
    let mut tally: HashMap<MembershipPattern, usize> = HashMap::new();
    for layer in 0..num_layers {
        for node in 0..n {
            let p = match rule {
                ConsensusRule::Pattern => {
                    tally.clear();
                    for g in &voters {
                        *tally.entry(g.pattern(layer, node)).or_default() += 1;
                    }
                    tally
                        .iter()
                        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
                        .map(|(&p, _)| p)
                        .expect("non-empty")
                }
                ConsensusRule::PerGroup => {
                    let mut p = MembershipPattern::EMPTY;
                    for r in 1..modal_k {
                        let yes = voters
                            .iter()
                            .filter(|g| g.pattern(layer, node).contains(r))
                            .count();
                        if 2 * yes > voters.len() {
                            p = p.with(r);
                        }
                    }
                    p
                }
            };
            patterns.push(p);
        }
    }
    Ok(Consensus {
        assignment: GroupAssignment::from_patterns(n, num_layers, modal_k, patterns)?,
        modal_k,
        used,
        discarded: records.len() - used,
    })
}
