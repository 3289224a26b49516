//! A group assignment paired with incrementally maintained statistics.
//!
//! Moves are handled in two phases. [`ChainState::evaluate`] computes the log
//! ratio of the acceptance target (marginal likelihood times `F`) between the
//! proposed and the current state, touching only the layer and group cells
//! that the move changes; every other factor cancels. [`ChainState::commit`]
//! then applies the move using the deltas gathered during evaluation.

use crate::assignment::{highest_common, GroupAssignment, MembershipPattern, MAX_GROUPS};
use crate::error::{Error, Result};
use crate::moves::Move;
use crate::network::TemporalNetwork;
use crate::prob::{self, likelihood_term, transition_term, JTable, LogProb};
use crate::stats::SufficientStats;

#[derive(Debug, Clone, Default)]
struct Scratch {
    pair_delta: Vec<i64>,
    edge_delta: Vec<i64>,
    row: Vec<MembershipPattern>,
    pairs: Vec<u64>,
    adjacent: Vec<u64>,
    members: Vec<u64>,
    stay_in: [Vec<u64>; 2],
    stay_out: [Vec<u64>; 2],
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Pending {
    Nothing,
    Toggle {
        group: usize,
        layer: usize,
        node: usize,
        add: bool,
        stay_in: Option<[u64; 2]>,
        stay_out: Option<[u64; 2]>,
    },
    AddGroup(usize),
    RemoveGroup(usize),
    Swap(usize),
}

/// Result of [`ChainState::evaluate`]; consume it with [`ChainState::commit`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    /// `ln[P(A|g',k') F(g'|k')] - ln[P(A|g,k) F(g|k)]`.
    pub log_ratio: f64,
    pending: Pending,
    stamp: u64,
}

impl Evaluation {
    /// Log acceptance probability `min(0, log_ratio)`.
    pub fn log_acceptance(&self) -> f64 {
        self.log_ratio.min(0.0)
    }

    /// True when committing would leave the state unchanged.
    pub fn is_identity(&self) -> bool {
        self.pending == Pending::Nothing
    }
}

#[derive(Debug, Clone)]
pub struct ChainState {
    assignment: GroupAssignment,
    stats: SufficientStats,
    scratch: Scratch,
    stamp: u64,
}

impl ChainState {
    pub fn new(net: &TemporalNetwork, assignment: GroupAssignment) -> Result<Self> {
        let stats = SufficientStats::compute(net, &assignment)?;
        Ok(ChainState {
            assignment,
            stats,
            scratch: Scratch::default(),
            stamp: 0,
        })
    }

    pub fn assignment(&self) -> &GroupAssignment {
        &self.assignment
    }

    pub fn stats(&self) -> &SufficientStats {
        &self.stats
    }

    pub fn k(&self) -> usize {
        self.assignment.k()
    }

    pub fn into_assignment(self) -> GroupAssignment {
        self.assignment
    }

    /// `ln P(A|g,k) + ln F(g|k)` from the maintained statistics.
    pub fn log_target(&self, jt: &JTable) -> f64 {
        prob::log_target_terms(&self.stats, jt)
    }

    /// Unnormalized log posterior including the `k` and first-layer priors.
    pub fn log_joint(&self, net: &TemporalNetwork, jt: &JTable) -> Result<LogProb> {
        prob::log_joint(net, &self.assignment, &self.stats, jt)
    }

    /// Evaluates `mv` against the current state without changing it.
    pub fn evaluate(
        &mut self,
        net: &TemporalNetwork,
        jt: &JTable,
        mv: &Move,
    ) -> Result<Evaluation> {
        if jt.n_max() < self.assignment.node_count() {
            return Err(Error::Range {
                what: "node count",
                value: self.assignment.node_count(),
                limit: jt.n_max() + 1,
            });
        }
        self.stamp = self.stamp.wrapping_add(1);
        let (log_ratio, pending) = match *mv {
            Move::NoOp => (0.0, Pending::Nothing),
            Move::AddNode { group, layer, node } => {
                self.check_node_move(group, layer, node, false)?;
                self.eval_toggle(net, jt, group, layer, node, true)
            }
            Move::RemoveNode { group, layer, node } => {
                self.check_node_move(group, layer, node, true)?;
                self.eval_toggle(net, jt, group, layer, node, false)
            }
            Move::AddGroup { position } => {
                let k = self.k();
                if !(1..=k).contains(&position) {
                    return Err(Error::InvalidMove(format!(
                        "group insertion at {position} with k = {k}"
                    )));
                }
                if k >= MAX_GROUPS {
                    return Err(Error::InvalidMove(format!("k = {k} is at the group cap")));
                }
                let n = self.assignment.node_count();
                let transitions = (self.assignment.layer_count() - 1) as f64;
                (transitions * jt.log_j(0, n), Pending::AddGroup(position))
            }
            Move::RemoveGroup { group } => {
                let k = self.k();
                if !(1..k).contains(&group) {
                    return Err(Error::InvalidMove(format!(
                        "no group {group} to remove with k = {k}"
                    )));
                }
                if self.stats.members[group].iter().any(|&c| c > 0) {
                    return Err(Error::InvalidMove(format!("group {group} is not empty")));
                }
                let lost: f64 = (1..self.stats.layer_count())
                    .map(|layer| {
                        let (sizes, stays) = self.stats.transition_counts(group, layer);
                        transition_term(jt, sizes, stays)
                    })
                    .sum();
                (-lost, Pending::RemoveGroup(group))
            }
            Move::MultiNodeSwap {
                layer,
                first,
                second,
            } => {
                if layer >= self.assignment.layer_count() {
                    return Err(Error::InvalidMove(format!("layer {layer} out of range")));
                }
                let mask = crate::assignment::pattern_mask(self.k());
                if (first.0 | second.0) & !mask != 0 {
                    return Err(Error::InvalidMove(
                        "swap pattern uses groups beyond k".into(),
                    ));
                }
                self.eval_swap(net, jt, layer, first, second)
            }
        };
        Ok(Evaluation {
            log_ratio,
            pending,
            stamp: self.stamp,
        })
    }

    /// Applies an evaluated move. The evaluation must be the most recent one.
    pub fn commit(&mut self, eval: Evaluation) -> Result<()> {
        if eval.stamp != self.stamp {
            return Err(Error::Inconsistent("commit of a stale evaluation".into()));
        }
        self.stamp = self.stamp.wrapping_add(1);
        match eval.pending {
            Pending::Nothing => {}
            Pending::Toggle {
                group,
                layer,
                node,
                add,
                stay_in,
                stay_out,
            } => {
                self.assignment.set_member(group, layer, node, add);
                for r in 0..self.stats.k() {
                    let (dt, dm) = (self.scratch.pair_delta[r], self.scratch.edge_delta[r]);
                    if dt != 0 || dm != 0 {
                        let t = &mut self.stats.pairs[r][layer];
                        *t = (*t as i64 + dt) as u64;
                        let m = &mut self.stats.adjacent[r][layer];
                        *m = (*m as i64 + dm) as u64;
                    }
                }
                let members = &mut self.stats.members[group][layer];
                if add {
                    *members += 1;
                } else {
                    *members -= 1;
                }
                if let Some([s0, s1]) = stay_in {
                    self.stats.stay0[group][layer] = s0;
                    self.stats.stay1[group][layer] = s1;
                }
                if let Some([s0, s1]) = stay_out {
                    self.stats.stay0[group][layer + 1] = s0;
                    self.stats.stay1[group][layer + 1] = s1;
                }
            }
            Pending::AddGroup(position) => {
                self.assignment.insert_group(position)?;
                self.stats.insert_group_row(position);
            }
            Pending::RemoveGroup(group) => {
                self.assignment.remove_group(group)?;
                self.stats.remove_group_row(group);
            }
            Pending::Swap(layer) => {
                let n = self.assignment.node_count();
                for node in 0..n {
                    self.assignment
                        .set_pattern(layer, node, self.scratch.row[node]);
                }
                let has_next = layer + 1 < self.stats.layer_count();
                for r in 0..self.stats.k() {
                    self.stats.pairs[r][layer] = self.scratch.pairs[r];
                    self.stats.adjacent[r][layer] = self.scratch.adjacent[r];
                    self.stats.members[r][layer] = self.scratch.members[r];
                    if r == 0 {
                        continue;
                    }
                    if layer > 0 {
                        self.stats.stay0[r][layer] = self.scratch.stay_in[0][r];
                        self.stats.stay1[r][layer] = self.scratch.stay_in[1][r];
                    }
                    if has_next {
                        self.stats.stay0[r][layer + 1] = self.scratch.stay_out[0][r];
                        self.stats.stay1[r][layer + 1] = self.scratch.stay_out[1][r];
                    }
                }
            }
        }
        Ok(())
    }

    /// Evaluates and commits `mv`, returning its log ratio.
    pub fn apply_move(&mut self, net: &TemporalNetwork, jt: &JTable, mv: &Move) -> Result<f64> {
        let eval = self.evaluate(net, jt, mv)?;
        self.commit(eval)?;
        Ok(eval.log_ratio)
    }

    fn check_node_move(
        &self,
        group: usize,
        layer: usize,
        node: usize,
        present: bool,
    ) -> Result<()> {
        let g = &self.assignment;
        if !(1..g.k()).contains(&group) || layer >= g.layer_count() || node >= g.node_count() {
            return Err(Error::InvalidMove(format!(
                "node move (group {group}, layer {layer}, node {node}) out of range"
            )));
        }
        if g.pattern(layer, node).contains(group) != present {
            return Err(Error::InvalidMove(format!(
                "node {node} in layer {layer} is {}in group {group}",
                if present { "not " } else { "already " }
            )));
        }
        Ok(())
    }

    fn eval_toggle(
        &mut self,
        net: &TemporalNetwork,
        jt: &JTable,
        group: usize,
        layer: usize,
        node: usize,
        add: bool,
    ) -> (f64, Pending) {
        let k = self.stats.k();
        let n = self.assignment.node_count();
        let num_layers = self.assignment.layer_count();
        let row = self.assignment.layer_patterns(layer);
        let old = row[node];
        let new = if add {
            old.with(group)
        } else {
            old.without(group)
        };

        let sc = &mut self.scratch;
        sc.pair_delta.clear();
        sc.pair_delta.resize(k, 0);
        sc.edge_delta.clear();
        sc.edge_delta.resize(k, 0);
        for (j, &other) in row.iter().enumerate() {
            if j == node {
                continue;
            }
            let before = highest_common(old, other);
            let after = highest_common(new, other);
            if before != after {
                sc.pair_delta[before] -= 1;
                sc.pair_delta[after] += 1;
                if net.is_adjacent(layer, node, j) {
                    sc.edge_delta[before] -= 1;
                    sc.edge_delta[after] += 1;
                }
            }
        }
        let mut delta = 0.0;
        for r in 0..k {
            let (dt, dm) = (sc.pair_delta[r], sc.edge_delta[r]);
            if dt == 0 && dm == 0 {
                continue;
            }
            let t = self.stats.pairs[r][layer];
            let m = self.stats.adjacent[r][layer];
            let t2 = (t as i64 + dt) as u64;
            let m2 = (m as i64 + dm) as u64;
            delta += likelihood_term(t2, m2) - likelihood_term(t, m);
        }

        let (s_old, s_new) = (usize::from(!add), usize::from(add));
        let shift = |stays: &mut [u64; 2], neighbour: bool| {
            let s = usize::from(neighbour);
            if s == s_old {
                stays[s_old] -= 1;
            }
            if s == s_new {
                stays[s_new] += 1;
            }
        };

        let mut stay_in = None;
        if layer > 0 {
            let (sizes, stays) = self.stats.transition_counts(group, layer);
            let mut next = stays;
            shift(
                &mut next,
                self.assignment.pattern(layer - 1, node).contains(group),
            );
            delta += transition_term(jt, sizes, next) - transition_term(jt, sizes, stays);
            stay_in = Some(next);
        }
        let mut stay_out = None;
        if layer + 1 < num_layers {
            let (sizes, stays) = self.stats.transition_counts(group, layer + 1);
            let ones = if add { sizes[1] + 1 } else { sizes[1] - 1 };
            let new_sizes = [n as u64 - ones, ones];
            let mut next = stays;
            shift(
                &mut next,
                self.assignment.pattern(layer + 1, node).contains(group),
            );
            delta += transition_term(jt, new_sizes, next) - transition_term(jt, sizes, stays);
            stay_out = Some(next);
        }
        (
            delta,
            Pending::Toggle {
                group,
                layer,
                node,
                add,
                stay_in,
                stay_out,
            },
        )
    }

    fn eval_swap(
        &mut self,
        net: &TemporalNetwork,
        jt: &JTable,
        layer: usize,
        first: MembershipPattern,
        second: MembershipPattern,
    ) -> (f64, Pending) {
        if first == second {
            return (0.0, Pending::Nothing);
        }
        let k = self.stats.k();
        let n = self.assignment.node_count();
        let num_layers = self.assignment.layer_count();
        let sc = &mut self.scratch;
        sc.row.clear();
        let mut changed = false;
        for &p in self.assignment.layer_patterns(layer) {
            let q = if p == first {
                second
            } else if p == second {
                first
            } else {
                p
            };
            changed |= q != p;
            sc.row.push(q);
        }
        if !changed {
            return (0.0, Pending::Nothing);
        }

        for buf in [&mut sc.pairs, &mut sc.adjacent, &mut sc.members] {
            buf.clear();
            buf.resize(k, 0);
        }
        for i in 0..n {
            for j in (i + 1)..n {
                let h = highest_common(sc.row[i], sc.row[j]);
                sc.pairs[h] += 1;
                if net.is_adjacent(layer, i, j) {
                    sc.adjacent[h] += 1;
                }
            }
        }
        sc.members[0] = n as u64;
        for p in &sc.row {
            for r in p.groups() {
                sc.members[r] += 1;
            }
        }

        let mut delta = 0.0;
        for r in 0..k {
            delta += likelihood_term(sc.pairs[r], sc.adjacent[r])
                - likelihood_term(self.stats.pairs[r][layer], self.stats.adjacent[r][layer]);
        }

        for buf in sc.stay_in.iter_mut().chain(sc.stay_out.iter_mut()) {
            buf.clear();
            buf.resize(k, 0);
        }
        if layer > 0 {
            let prev = self.assignment.layer_patterns(layer - 1);
            for (a, b) in prev.iter().zip(&sc.row) {
                for r in 1..k {
                    let (x, y) = (a.contains(r), b.contains(r));
                    if x == y {
                        sc.stay_in[usize::from(x)][r] += 1;
                    }
                }
            }
            for r in 1..k {
                let (sizes, stays) = self.stats.transition_counts(r, layer);
                let next = [sc.stay_in[0][r], sc.stay_in[1][r]];
                delta += transition_term(jt, sizes, next) - transition_term(jt, sizes, stays);
            }
        }
        if layer + 1 < num_layers {
            let next_row = self.assignment.layer_patterns(layer + 1);
            for (a, b) in sc.row.iter().zip(next_row) {
                for r in 1..k {
                    let (x, y) = (a.contains(r), b.contains(r));
                    if x == y {
                        sc.stay_out[usize::from(x)][r] += 1;
                    }
                }
            }
            for r in 1..k {
                let (sizes, stays) = self.stats.transition_counts(r, layer + 1);
                let ones = sc.members[r];
                let new_sizes = [n as u64 - ones, ones];
                let next = [sc.stay_out[0][r], sc.stay_out[1][r]];
                delta += transition_term(jt, new_sizes, next) - transition_term(jt, sizes, stays);
            }
        }
        (delta, Pending::Swap(layer))
    }
}
