//! Exact posterior enumeration for tiny instances, distribution distances,
//! and exact proposal probabilities of the sampler's mixtures.
//!
//! A state of `k` groups on `n` nodes and `L` layers is encoded as an integer
//! whose bits `(k-1)*t .. (k-1)*(t+1)` hold the pattern of node-layer `t`
//! (layer-major).

use std::collections::{BTreeMap, HashMap};
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;

use crate::assignment::{GroupAssignment, MembershipPattern};
use crate::error::{Error, Result};
use crate::moves::Move;
use crate::network::TemporalNetwork;
use crate::prob::{
    log_f, log_first_layer_prior, log_k_prior, log_marginal_likelihood, JTable, LogProb,
};
use crate::sampler::{standard_share, GroupAddition, Mode};
use crate::stats::SufficientStats;

/// Default cap on the number of enumerated states.
pub const DEFAULT_STATE_LIMIT: u128 = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KMode {
    /// `P(g | A, k)` for one `k`; the prior on `k` is omitted.
    Fixed(usize),
    /// `P(g, k | A)` truncated to `1 <= k <= cap`.
    UpTo(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnumerationOptions {
    pub state_limit: u128,
    /// Compare every state's likelihood against an independent
    /// implementation and fail on disagreement beyond `1e-9`.
    pub cross_check: bool,
    /// Power-iteration sweeps allowed by [`stationary_distribution`].
    pub max_iterations: usize,
    /// L1 change between sweeps at which power iteration stops.
    pub tolerance: f64,
}

impl Default for EnumerationOptions {
    fn default() -> Self {
        EnumerationOptions {
            state_limit: DEFAULT_STATE_LIMIT,
            cross_check: false,
            max_iterations: 1_000_000,
            tolerance: 1e-14,
        }
    }
}

/// Normalized posterior over every state of the enumerated universe.
#[derive(Debug, Clone)]
pub struct ExactPosterior {
    n: usize,
    num_layers: usize,
    /// `(k, log probabilities indexed by code)`.
    blocks: Vec<(usize, Vec<f64>)>,
    log_normalizer: f64,
}

fn state_bits(k: usize, n: usize, num_layers: usize) -> u128 {
    ((k - 1) * n * num_layers) as u128
}

/// Number of states in the universe of `mode`.
pub fn state_count(n: usize, num_layers: usize, mode: KMode) -> u128 {
    let ks = match mode {
        KMode::Fixed(k) => k..=k,
        KMode::UpTo(cap) => 1..=cap,
    };
    ks.map(|k| {
        let bits = state_bits(k, n, num_layers);
        if bits >= 127 {
            u128::MAX / 2
        } else {
            1u128 << bits
        }
    })
    .fold(0u128, |a, b| a.saturating_add(b))
}

/// Assignment with `k` groups encoded by `code`.
pub fn decode(n: usize, num_layers: usize, k: usize, code: u64) -> Result<GroupAssignment> {
    let width = k - 1;
    let mask = if width == 0 { 0 } else { (1u64 << width) - 1 };
    let patterns = (0..n * num_layers)
        .map(|t| {
            MembershipPattern(if width == 0 {
                0
            } else {
                (code >> (width * t)) & mask
            })
        })
        .collect();
    GroupAssignment::from_patterns(n, num_layers, k, patterns)
}

/// Inverse of [`decode`]; `None` if the state does not fit in 64 bits.
pub fn encode(g: &GroupAssignment) -> Option<u64> {
    let width = g.k() - 1;
    if width * g.patterns().len() > 64 {
        return None;
    }
    Some(g.patterns().iter().enumerate().fold(0u64, |acc, (t, p)| {
        if width == 0 {
            acc
        } else {
            acc | p.0 << (width * t)
        }
    }))
}

/// `ln P(A | g, k)` computed pair by pair with explicit factorial sums,
/// sharing no code with the sufficient-statistics path.
pub fn independent_log_likelihood(net: &TemporalNetwork, g: &GroupAssignment) -> f64 {
    let ln_fact = |x: usize| (2..=x).map(|i| (i as f64).ln()).sum::<f64>();
    let k = g.k();
    let mut total = 0.0;
    for layer in 0..net.layer_count() {
        let mut pairs = vec![0usize; k];
        let mut edges = vec![0usize; k];
        for i in 0..net.node_count() {
            for j in i + 1..net.node_count() {
                let h = (1..k)
                    .rev()
                    .find(|&r| g.is_member(r, layer, i) && g.is_member(r, layer, j))
                    .unwrap_or(0);
                pairs[h] += 1;
                edges[h] += usize::from(net.is_adjacent(layer, i, j));
            }
        }
        for r in 0..k {
            total += ln_fact(edges[r]) + ln_fact(pairs[r] - edges[r]) - ln_fact(pairs[r] + 1);
        }
    }
    total
}

fn log_weight(
    net: &TemporalNetwork,
    jt: &JTable,
    g: &GroupAssignment,
    with_k_prior: bool,
    cross_check: bool,
) -> Result<f64> {
    let stats = SufficientStats::compute(net, g)?;
    let lik = log_marginal_likelihood(&stats)?;
    if cross_check {
        let other = independent_log_likelihood(net, g);
        if (lik.value() - other).abs() > 1e-9 {
            return Err(Error::Inconsistent(format!(
                "likelihood {} differs from independent value {other}",
                lik.value()
            )));
        }
    }
    let mut w = lik + log_first_layer_prior(g) + log_f(&stats, jt)?;
    if with_k_prior {
        w = w + log_k_prior(g.k())?;
    }
    Ok(w.value())
}

fn log_sum_exp(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = values.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Enumerates every assignment of the universe and normalizes in log space.
pub fn enumerate_posterior(
    net: &TemporalNetwork,
    mode: KMode,
    jt: &JTable,
    options: EnumerationOptions,
) -> Result<ExactPosterior> {
    let (n, num_layers) = (net.node_count(), net.layer_count());
    let (ks, with_k_prior) = match mode {
        KMode::Fixed(k) => (k..=k, false),
        KMode::UpTo(cap) => (1..=cap, true),
    };
    if ks.is_empty() || *ks.start() == 0 {
        return Err(Error::Config(format!("no valid group count in {mode:?}")));
    }
    let states = state_count(n, num_layers, mode);
    if states > options.state_limit {
        return Err(Error::StateSpaceTooLarge {
            states,
            limit: options.state_limit,
        });
    }
    if jt.n_max() < n {
        return Err(Error::Config(format!(
            "J table covers {} nodes, need {n}",
            jt.n_max()
        )));
    }
    let mut blocks = Vec::new();
    for k in ks {
        let size = 1u64 << state_bits(k, n, num_layers);
        let weights: Vec<f64> = (0..size)
            .into_par_iter()
            .map(|code| {
                let g = decode(n, num_layers, k, code)?;
                log_weight(net, jt, &g, with_k_prior, options.cross_check)
            })
            .collect::<Result<_>>()?;
        blocks.push((k, weights));
    }
    let log_normalizer = log_sum_exp(blocks.iter().flat_map(|(_, w)| w.iter().copied()));
    for (_, w) in &mut blocks {
        w.par_iter_mut().for_each(|v| *v -= log_normalizer);
    }
    Ok(ExactPosterior {
        n,
        num_layers,
        blocks,
        log_normalizer,
    })
}

impl ExactPosterior {
    /// Log of the normalizing constant of the enumerated weights.
    pub fn log_normalizer(&self) -> f64 {
        self.log_normalizer
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn layer_count(&self) -> usize {
        self.num_layers
    }

    pub fn ks(&self) -> Vec<usize> {
        self.blocks.iter().map(|(k, _)| *k).collect()
    }

    pub fn len(&self) -> usize {
        self.blocks.iter().map(|(_, w)| w.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn block(&self, k: usize) -> Option<&[f64]> {
        self.blocks
            .iter()
            .find(|(bk, _)| *bk == k)
            .map(|(_, w)| w.as_slice())
    }

    /// Log probability of the state `(k, code)`; `None` outside the universe.
    pub fn log_prob_code(&self, k: usize, code: u64) -> Option<f64> {
        self.block(k)?.get(code as usize).copied()
    }

    /// Log probability of `g`; `None` outside the universe.
    pub fn log_prob(&self, g: &GroupAssignment) -> Option<f64> {
        if g.node_count() != self.n || g.layer_count() != self.num_layers {
            return None;
        }
        self.log_prob_code(g.k(), encode(g)?)
    }

    pub fn prob(&self, g: &GroupAssignment) -> f64 {
        self.log_prob(g).map_or(0.0, f64::exp)
    }

    /// `(k, code, probability)` for every state.
    pub fn iter(&self) -> impl Iterator<Item = (usize, u64, f64)> + '_ {
        self.blocks.iter().flat_map(|(k, w)| {
            w.iter()
                .enumerate()
                .map(move |(c, v)| (*k, c as u64, v.exp()))
        })
    }

    pub fn k_marginal(&self) -> BTreeMap<usize, f64> {
        self.blocks
            .iter()
            .map(|(k, w)| (*k, w.iter().map(|v| v.exp()).sum()))
            .collect()
    }

    /// `k,code,probability` rows.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = std::io::BufWriter::new(file);
        let mut write = || -> std::io::Result<()> {
            writeln!(out, "k,code,probability")?;
            for (k, code, p) in self.iter() {
                writeln!(out, "{k},{code},{p:e}")?;
            }
            out.flush()
        };
        write().map_err(|e| Error::io(path, e))
    }
}

/// Visit counts of sampled states.
#[derive(Debug, Clone, Default)]
pub struct EmpiricalDistribution {
    shape: Option<(usize, usize)>,
    counts: HashMap<(usize, u64), u64>,
    total: u64,
}

impl EmpiricalDistribution {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, g: &GroupAssignment) -> Result<()> {
        let shape = (g.node_count(), g.layer_count());
        if *self.shape.get_or_insert(shape) != shape {
            return Err(Error::DimensionMismatch(
                "sampled states differ in shape".into(),
            ));
        }
        let code =
            encode(g).ok_or_else(|| Error::Validation("state too large to tabulate".into()))?;
        *self.counts.entry((g.k(), code)).or_default() += 1;
        self.total += 1;
        Ok(())
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn distinct(&self) -> usize {
        self.counts.len()
    }

    pub fn frequency(&self, g: &GroupAssignment) -> f64 {
        match encode(g) {
            Some(code) if self.total > 0 => {
                self.counts.get(&(g.k(), code)).copied().unwrap_or(0) as f64 / self.total as f64
            }
            _ => 0.0,
        }
    }

    pub fn k_marginal(&self) -> BTreeMap<usize, f64> {
        let mut out = BTreeMap::new();
        for (&(k, _), &c) in &self.counts {
            *out.entry(k).or_insert(0.0) += c as f64 / self.total as f64;
        }
        out
    }
}

/// Half the L1 distance between two distributions on the same indices.
pub fn total_variation(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch(format!(
            "distributions over {} and {} outcomes",
            p.len(),
            q.len()
        )));
    }
    Ok(0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>())
}

/// Total-variation distance between an exact posterior and sampled states.
pub fn tv_distance(p: &ExactPosterior, q: &EmpiricalDistribution) -> Result<f64> {
    if q.total == 0 {
        return Err(Error::Empty("no sampled states".into()));
    }
    if let Some(shape) = q.shape {
        if shape != (p.n, p.num_layers) {
            return Err(Error::DimensionMismatch(
                "sample shape differs from posterior".into(),
            ));
        }
    }
    let mut diff = 0.0;
    let mut covered = 0.0;
    for (&(k, code), &c) in &q.counts {
        let pp = p
            .log_prob_code(k, code)
            .ok_or_else(|| {
                Error::Validation(format!("sampled state with k = {k} outside the universe"))
            })?
            .exp();
        covered += pp;
        diff += (pp - c as f64 / q.total as f64).abs();
    }
    Ok((0.5 * (diff + (1.0 - covered).max(0.0))).min(1.0))
}

/// The proposal mixture whose transition probabilities are computed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProposalSpec {
    pub mode: Mode,
    pub multi_node_prob: f64,
    pub k_max: usize,
    pub restrict_multi_node_layer1: bool,
    pub group_addition: GroupAddition,
}

impl ProposalSpec {
    pub fn new(mode: Mode) -> Self {
        ProposalSpec {
            mode,
            multi_node_prob: 0.0,
            k_max: crate::assignment::MAX_GROUPS,
            restrict_multi_node_layer1: false,
            group_addition: GroupAddition::LayerGated,
        }
    }

    /// Probabilities of a standard move, a group addition and a multi-node
    /// move.
    fn branches(&self, k: usize, n: usize, num_layers: usize) -> (f64, f64, f64) {
        let std = standard_share(k, n);
        let gate = match self.group_addition {
            GroupAddition::LayerGated => 1.0 / num_layers as f64,
            GroupAddition::Ungated => 1.0,
        };
        let (q_std, q_add, q_mn) = match self.mode {
            Mode::FixedK => (1.0, 0.0, 0.0),
            Mode::NoMultiNode => (std, 1.0 - std, 0.0),
            Mode::Main => {
                let p = self.multi_node_prob;
                ((1.0 - p) * std, (1.0 - p) * (1.0 - std), p)
            }
        };
        (q_std, q_add * gate, q_mn)
    }
}

fn swap_layer(g: &GroupAssignment, layer: usize, a: u64, b: u64) -> GroupAssignment {
    let mut out = g.clone();
    for node in 0..g.node_count() {
        let p = g.pattern(layer, node).0;
        if p == a {
            out.set_pattern(layer, node, MembershipPattern(b));
        } else if p == b {
            out.set_pattern(layer, node, MembershipPattern(a));
        }
    }
    out
}

/// Probability that one proposal of `spec` takes `from` to `to != from`,
/// summed over every move with that outcome. Written from the closed forms
/// of the move definitions, independently of the proposal code.
pub fn proposal_probability(
    from: &GroupAssignment,
    to: &GroupAssignment,
    spec: &ProposalSpec,
) -> Result<f64> {
    let (n, num_layers, k) = (from.node_count(), from.layer_count(), from.k());
    if to.node_count() != n || to.layer_count() != num_layers {
        return Err(Error::DimensionMismatch("states differ in shape".into()));
    }
    if from == to {
        return Err(Error::InvalidMove("identical states".into()));
    }
    let (q_std, q_add, q_mn) = spec.branches(k, n, num_layers);
    let (nf, lf) = (n as f64, num_layers as f64);
    let mut total = 0.0;

    if to.k() == k {
        let diffs: Vec<(usize, usize, u64)> = (0..num_layers)
            .flat_map(|l| (0..n).map(move |i| (l, i)))
            .filter_map(|(l, i)| {
                let x = from.pattern(l, i).0 ^ to.pattern(l, i).0;
                (x != 0).then_some((l, i, x))
            })
            .collect();
        if let [(layer, node, x)] = diffs[..] {
            if x.count_ones() == 1 && k > 1 {
                let r = x.trailing_zeros() as usize + 1;
                let base = q_std / lf / (k - 1) as f64;
                total += if layer > 0 {
                    base / nf
                } else {
                    let members = from.group_size(r, 0) as f64;
                    if from.is_member(r, 0, node) {
                        base * 0.5 / members
                    } else {
                        base * 0.5 / (nf - members)
                    }
                };
            }
        }
        let layers: Vec<usize> = diffs.iter().map(|d| d.0).collect();
        let lo = usize::from(spec.restrict_multi_node_layer1);
        if q_mn > 0.0
            && !layers.is_empty()
            && layers.iter().all(|&l| l == layers[0])
            && layers[0] >= lo
        {
            let layer = layers[0];
            let subsets = 1u64 << (k - 1);
            let per_pair = q_mn / (num_layers - lo) as f64 / (subsets * subsets) as f64;
            for a in 0..subsets {
                for b in 0..subsets {
                    if a != b && swap_layer(from, layer, a, b) == *to {
                        total += per_pair;
                    }
                }
            }
        }
    } else if to.k() == k + 1 && k < spec.k_max {
        for position in 1..=k {
            let mut g = from.clone();
            g.insert_group(position)?;
            if g == *to {
                total += q_add / k as f64;
            }
        }
    } else if to.k() + 1 == k && spec.mode != Mode::FixedK {
        for r in 1..k {
            if from.is_group_empty(r) {
                let mut g = from.clone();
                g.remove_group(r)?;
                if g == *to {
                    total += q_std / lf / (k - 1) as f64 * 0.5;
                }
            }
        }
    }
    Ok(total)
}

/// State reached by applying `mv` to `g`.
pub fn apply(g: &GroupAssignment, mv: &Move) -> Result<GroupAssignment> {
    let mut out = g.clone();
    match *mv {
        Move::NoOp => {}
        Move::AddNode { group, layer, node } | Move::RemoveNode { group, layer, node } => {
            if group == 0 || group >= g.k() || layer >= g.layer_count() || node >= g.node_count() {
                return Err(Error::InvalidMove(format!("{mv:?} out of range")));
            }
            let add = matches!(mv, Move::AddNode { .. });
            if g.is_member(group, layer, node) == add {
                return Err(Error::InvalidMove(format!("{mv:?} changes nothing")));
            }
            out.set_member(group, layer, node, add);
        }
        Move::AddGroup { position } => out.insert_group(position)?,
        Move::RemoveGroup { group } => out.remove_group(group)?,
        Move::MultiNodeSwap {
            layer,
            first,
            second,
        } => {
            if layer >= g.layer_count() {
                return Err(Error::InvalidMove(format!("{mv:?} out of range")));
            }
            out = swap_layer(g, layer, first.0, second.0);
        }
    }
    Ok(out)
}

/// Forward and reverse log proposal probabilities of `mv` from `g`.
pub fn proposal_ratio_check(
    g: &GroupAssignment,
    mv: &Move,
    spec: &ProposalSpec,
) -> Result<(LogProb, LogProb)> {
    let to = apply(g, mv)?;
    let forward = proposal_probability(g, &to, spec)?;
    let reverse = proposal_probability(&to, g, spec)?;
    if forward == 0.0 || reverse == 0.0 {
        return Err(Error::InvalidMove(format!(
            "{mv:?} is not reversible under {:?}",
            spec.mode
        )));
    }
    Ok((LogProb::new(forward.ln()), LogProb::new(reverse.ln())))
}

/// Stationary distribution of the sampler's own Markov chain on the
/// universe of `mode`, built from [`proposal_probability`] and the
/// Metropolis–Hastings acceptance and found by power iteration. Unlike
/// [`enumerate_posterior`] this is what the chain converges to, so the two
/// differ exactly by the chain's bias.
///
/// `mode` must be closed under the moves of `spec`: `Fixed(k)` needs
/// [`Mode::FixedK`], and `UpTo(cap)` needs `spec.k_max == cap`.
pub fn stationary_distribution(
    net: &TemporalNetwork,
    mode: KMode,
    jt: &JTable,
    spec: &ProposalSpec,
    options: EnumerationOptions,
) -> Result<ExactPosterior> {
    let (n, num_layers) = (net.node_count(), net.layer_count());
    let ks = match mode {
        KMode::Fixed(k) if spec.mode == Mode::FixedK && k >= 1 => k..=k,
        KMode::UpTo(cap) if spec.mode != Mode::FixedK && spec.k_max == cap && cap >= 1 => 1..=cap,
        _ => {
            return Err(Error::Config(format!(
                "{mode:?} is not closed under the moves of {:?} with k_max {}",
                spec.mode, spec.k_max
            )))
        }
    };
    let states = state_count(n, num_layers, mode);
    if states > options.state_limit {
        return Err(Error::StateSpaceTooLarge {
            states,
            limit: options.state_limit,
        });
    }
    let mut index = Vec::new();
    let mut offset = 0usize;
    for k in ks.clone() {
        index.push((k, offset));
        offset += 1usize << state_bits(k, n, num_layers);
    }
    let total = offset;
    let locate = |g: &GroupAssignment| -> usize {
        let base = index
            .iter()
            .find(|(k, _)| *k == g.k())
            .expect("k in universe")
            .1;
        base + encode(g).expect("state fits") as usize
    };
    let with_multi_node = spec.mode == Mode::Main && spec.multi_node_prob > 0.0;

    let mut states_vec = Vec::with_capacity(total);
    for &(k, _) in &index {
        for code in 0..1u64 << state_bits(k, n, num_layers) {
            states_vec.push(decode(n, num_layers, k, code)?);
        }
    }
    let target: Vec<f64> = states_vec
        .par_iter()
        .map(|g| {
            let stats = SufficientStats::compute(net, g)?;
            Ok(independent_log_likelihood(net, g) + log_f(&stats, jt)?.value())
        })
        .collect::<Result<_>>()?;
    let rows: Vec<Vec<(usize, f64)>> = states_vec
        .par_iter()
        .enumerate()
        .map(|(i, g)| {
            let k = g.k();
            let mut candidates = Vec::new();
            for layer in 0..num_layers {
                for node in 0..n {
                    for r in 1..k {
                        let mut h = g.clone();
                        h.set_member(r, layer, node, !g.is_member(r, layer, node));
                        candidates.push(h);
                    }
                }
                if with_multi_node {
                    let subsets = 1u64 << (k - 1);
                    for a in 0..subsets {
                        for b in a + 1..subsets {
                            let h = swap_layer(g, layer, a, b);
                            if h != *g {
                                candidates.push(h);
                            }
                        }
                    }
                }
            }
            if spec.mode != Mode::FixedK {
                if k < spec.k_max {
                    for position in 1..=k {
                        let mut h = g.clone();
                        h.insert_group(position)?;
                        candidates.push(h);
                    }
                }
                for r in 1..k {
                    if g.is_group_empty(r) {
                        let mut h = g.clone();
                        h.remove_group(r)?;
                        candidates.push(h);
                    }
                }
            }
            let mut targets: Vec<usize> = candidates.iter().map(&locate).collect();
            targets.sort_unstable();
            targets.dedup();
            let mut row = Vec::with_capacity(targets.len());
            for j in targets {
                let q = proposal_probability(g, &states_vec[j], spec)?;
                if q > 0.0 {
                    row.push((j, q * (target[j] - target[i]).min(0.0).exp()));
                }
            }
            Ok(row)
        })
        .collect::<Result<_>>()?;

    let mut pi = vec![1.0 / total as f64; total];
    let mut next = vec![0.0; total];
    let mut converged = false;
    for _ in 0..options.max_iterations {
        next.copy_from_slice(&pi);
        for (i, row) in rows.iter().enumerate() {
            for &(j, p) in row {
                let flow = pi[i] * p;
                next[j] += flow;
                next[i] -= flow;
            }
        }
        let change: f64 = next.iter().zip(&pi).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut pi, &mut next);
        if change < options.tolerance {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Inconsistent(format!(
            "power iteration did not converge in {} sweeps",
            options.max_iterations
        )));
    }
    let sum: f64 = pi.iter().sum();
    let mut blocks = Vec::new();
    for &(k, start) in &index {
        let len = 1usize << state_bits(k, n, num_layers);
        let logs = pi[start..start + len]
            .iter()
            .map(|p| (p.max(0.0) / sum).ln())
            .collect();
        blocks.push((k, logs));
    }
    Ok(ExactPosterior {
        n,
        num_layers,
        blocks,
        log_normalizer: 0.0,
    })
}

/// Total-variation distance between two exact distributions on the same
/// universe.
pub fn exact_tv(p: &ExactPosterior, q: &ExactPosterior) -> Result<f64> {
    if p.ks() != q.ks() || (p.n, p.num_layers) != (q.n, q.num_layers) {
        return Err(Error::DimensionMismatch("different universes".into()));
    }
    let a: Vec<f64> = p.iter().map(|s| s.2).collect();
    let b: Vec<f64> = q.iter().map(|s| s.2).collect();
    total_variation(&a, &b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn posterior(net: &TemporalNetwork, mode: KMode) -> ExactPosterior {
        let jt = JTable::build(net.node_count().max(1)).unwrap();
        let options = EnumerationOptions {
            cross_check: true,
            ..Default::default()
        };
        enumerate_posterior(net, mode, &jt, options).unwrap()
    }

    #[test]
    fn single_node_is_symmetric() {
        let net = TemporalNetwork::empty(1, 1).unwrap();
        let p = posterior(&net, KMode::Fixed(2));
        let probs: Vec<f64> = p.iter().map(|s| s.2).collect();
        assert_eq!(probs.len(), 2);
        assert!((probs[0] - 0.5).abs() < 1e-12 && (probs[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn two_nodes_one_edge_by_hand() {
        // One pair, adjacent. The pair is in group 1 only if both nodes are.
        // Likelihood: 1!0!/2! = 1/2 whichever group holds the pair.
        // First-layer prior with n = 2: size s has weight s!(2-s)!/3!,
        // i.e. 1/3 for s in {0, 2} and 1/6 for s = 1.
        let net = TemporalNetwork::from_edges(2, 1, [(0, 0, 1)]).unwrap();
        let p = posterior(&net, KMode::Fixed(2));
        let expected = [1.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0, 1.0 / 3.0];
        for (code, want) in expected.iter().enumerate() {
            let got = p.log_prob_code(2, code as u64).unwrap().exp();
            assert!((got - want).abs() < 1e-12, "{code}: {got} vs {want}");
        }
    }

    #[test]
    fn normalization_and_k_prior() {
        let net = TemporalNetwork::from_edges(3, 2, [(0, 0, 1), (1, 1, 2)]).unwrap();
        let p = posterior(&net, KMode::UpTo(2));
        let total: f64 = p.iter().map(|s| s.2).sum();
        assert!((total - 1.0).abs() < 1e-10);
        assert_eq!(p.len(), 1 + 64);
        assert_eq!(p.ks(), vec![1, 2]);
        let fixed = posterior(&net, KMode::Fixed(2));
        assert!((fixed.iter().map(|s| s.2).sum::<f64>() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn state_limit_guard() {
        let net = TemporalNetwork::empty(6, 2).unwrap();
        let jt = JTable::build(6).unwrap();
        assert_eq!(state_count(6, 2, KMode::UpTo(3)), 1 + 4096 + (1 << 24));
        assert!(matches!(
            enumerate_posterior(&net, KMode::UpTo(3), &jt, EnumerationOptions::default()),
            Err(Error::StateSpaceTooLarge { .. })
        ));
    }

    #[test]
    fn encode_decode_round_trip() {
        for code in [0u64, 1, 37, 4095] {
            let g = decode(3, 2, 3, code).unwrap();
            assert_eq!(encode(&g), Some(code));
        }
        assert_eq!(encode(&decode(4, 2, 1, 0).unwrap()), Some(0));
    }

    #[test]
    fn tv_examples() {
        assert_eq!(total_variation(&[0.75, 0.25], &[0.5, 0.5]).unwrap(), 0.25);
        assert_eq!(total_variation(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 1.0);
        assert_eq!(total_variation(&[0.3, 0.7], &[0.3, 0.7]).unwrap(), 0.0);
        assert!(total_variation(&[1.0], &[0.5, 0.5]).is_err());

        let net = TemporalNetwork::empty(1, 1).unwrap();
        let p = posterior(&net, KMode::Fixed(2));
        let mut q = EmpiricalDistribution::new();
        q.add(&decode(1, 1, 2, 0).unwrap()).unwrap();
        q.add(&decode(1, 1, 2, 1).unwrap()).unwrap();
        assert!(tv_distance(&p, &q).unwrap().abs() < 1e-12);
        let mut one = EmpiricalDistribution::new();
        one.add(&decode(1, 1, 2, 0).unwrap()).unwrap();
        assert!((tv_distance(&p, &one).unwrap() - 0.5).abs() < 1e-12);
        let mut outside = EmpiricalDistribution::new();
        outside.add(&decode(1, 1, 3, 0).unwrap()).unwrap();
        assert!(tv_distance(&p, &outside).is_err());
    }

    #[test]
    fn proposal_ratios_closed_forms() {
        let n = 5;
        let spec = ProposalSpec::new(Mode::FixedK);
        let mut g = GroupAssignment::new(n, 2, 2).unwrap();
        g.set_member(1, 0, 0, true);
        g.set_member(1, 0, 1, true);
        let n1 = 2.0;
        let (f, r) = proposal_ratio_check(
            &g,
            &Move::AddNode {
                group: 1,
                layer: 0,
                node: 3,
            },
            &spec,
        )
        .unwrap();
        assert!(((f.value() - r.value()).exp() - (n1 + 1.0) / (n as f64 - n1)).abs() < 1e-12);
        let (f, r) = proposal_ratio_check(
            &g,
            &Move::AddNode {
                group: 1,
                layer: 1,
                node: 3,
            },
            &spec,
        )
        .unwrap();
        assert!((f.value() - r.value()).abs() < 1e-12);
        assert!(proposal_ratio_check(&g, &Move::AddGroup { position: 1 }, &spec).is_err());
    }

    #[test]
    fn group_addition_proposal_probability() {
        let (n, num_layers, k) = (4usize, 3usize, 2usize);
        let spec = ProposalSpec::new(Mode::NoMultiNode);
        let mut g = GroupAssignment::new(n, num_layers, k).unwrap();
        g.set_member(1, 1, 2, true);
        let (f, r) = proposal_ratio_check(&g, &Move::AddGroup { position: 2 }, &spec).unwrap();
        let add = 1.0 / (2.0 * k as f64 * (n as f64 + 1.0));
        let want_fwd = add / num_layers as f64 / k as f64;
        assert!((f.value() - want_fwd.ln()).abs() < 1e-12);
        let ungated = ProposalSpec {
            group_addition: GroupAddition::Ungated,
            ..spec
        };
        let (f, _) = proposal_ratio_check(&g, &Move::AddGroup { position: 2 }, &ungated).unwrap();
        assert!((f.value() - (add / k as f64).ln()).abs() < 1e-12);
        let std_next = standard_share(k + 1, n);
        let want_rev = std_next / num_layers as f64 / k as f64 * 0.5;
        assert!((r.value() - want_rev.ln()).abs() < 1e-12);
    }

    #[test]
    fn fixed_k_chain_is_exact() {
        let net = TemporalNetwork::from_edges(3, 2, [(0, 0, 1), (0, 1, 2), (1, 0, 2)]).unwrap();
        let jt = JTable::build(3).unwrap();
        let exact = posterior(&net, KMode::Fixed(2));
        let chain = stationary_distribution(
            &net,
            KMode::Fixed(2),
            &jt,
            &ProposalSpec::new(Mode::FixedK),
            EnumerationOptions::default(),
        )
        .unwrap();
        assert!(exact_tv(&exact, &chain).unwrap() < 1e-10);
    }

    #[test]
    fn first_layer_swaps_add_bias() {
        let net = TemporalNetwork::from_edges(3, 2, [(0, 0, 1), (1, 0, 1), (1, 1, 2)]).unwrap();
        let jt = JTable::build(3).unwrap();
        let base = ProposalSpec {
            k_max: 3,
            ..ProposalSpec::new(Mode::NoMultiNode)
        };
        let swaps = ProposalSpec {
            mode: Mode::Main,
            multi_node_prob: 0.3,
            ..base
        };
        let later = ProposalSpec {
            restrict_multi_node_layer1: true,
            ..swaps
        };
        let opts = EnumerationOptions::default();
        let exact = posterior(&net, KMode::UpTo(3));
        let tv = |s: &ProposalSpec| {
            let chain = stationary_distribution(&net, KMode::UpTo(3), &jt, s, opts).unwrap();
            exact_tv(&exact, &chain).unwrap()
        };
        let (b, s, l) = (tv(&base), tv(&swaps), tv(&later));
        // swaps in later layers are exactly balanced; first-layer swaps move
        // group sizes without the prior seeing it
        assert!((l - b).abs() < 1e-9, "{l} vs {b}");
        assert!(s > b + 3e-3, "{s} vs {b}");
    }

    #[test]
    fn gated_addition_beats_ungated() {
        let net = TemporalNetwork::from_edges(3, 2, [(0, 0, 1), (1, 0, 1), (1, 1, 2)]).unwrap();
        let jt = JTable::build(3).unwrap();
        let exact = posterior(&net, KMode::UpTo(3));
        let spec = ProposalSpec {
            k_max: 3,
            ..ProposalSpec::new(Mode::NoMultiNode)
        };
        let ungated = ProposalSpec {
            group_addition: GroupAddition::Ungated,
            ..spec
        };
        let opts = EnumerationOptions::default();
        let tv = |s: &ProposalSpec| {
            let chain = stationary_distribution(&net, KMode::UpTo(3), &jt, s, opts).unwrap();
            exact_tv(&exact, &chain).unwrap()
        };
        let (gated, plain) = (tv(&spec), tv(&ungated));
        assert!(gated < 0.03, "{gated}");
        assert!(plain > 5.0 * gated, "{plain} vs {gated}");
    }

    #[test]
    fn stationary_rejects_open_universes() {
        let net = TemporalNetwork::empty(2, 1).unwrap();
        let jt = JTable::build(2).unwrap();
        let opts = EnumerationOptions::default();
        let main = ProposalSpec::new(Mode::Main);
        assert!(stationary_distribution(&net, KMode::UpTo(2), &jt, &main, opts).is_err());
        assert!(stationary_distribution(&net, KMode::Fixed(2), &jt, &main, opts).is_err());
    }
}
