//! Forward sampling from the model: assignments from the prior, edges given
//! the assignment and per-group densities, and planted test instances.

use rand::seq::index::sample as sample_indices;
use rand::Rng;

use crate::assignment::{highest_common, GroupAssignment, MembershipPattern};
use crate::error::{Error, Result};
use crate::network::TemporalNetwork;
use crate::prob::JTable;

/// Edge probabilities `omega[r][layer]` for pairs whose highest common group
/// is `r`.
#[derive(Debug, Clone, PartialEq)]
pub struct OmegaTable {
    k: usize,
    num_layers: usize,
    values: Vec<f64>,
}

impl OmegaTable {
    /// `values[r][layer]`.
    pub fn new(values: Vec<Vec<f64>>) -> Result<Self> {
        let k = values.len();
        if k == 0 {
            return Err(Error::Validation("omega needs at least one group".into()));
        }
        let num_layers = values[0].len();
        if values.iter().any(|row| row.len() != num_layers) {
            return Err(Error::DimensionMismatch(
                "omega rows differ in length".into(),
            ));
        }
        let values: Vec<f64> = values.into_iter().flatten().collect();
        if let Some(bad) = values.iter().find(|w| !(0.0..=1.0).contains(*w)) {
            return Err(Error::Validation(format!(
                "edge probability {bad} outside [0, 1]"
            )));
        }
        Ok(OmegaTable {
            k,
            num_layers,
            values,
        })
    }

    /// The same density per group in every layer; `by_group[r]` is group `r`.
    pub fn constant(by_group: &[f64], num_layers: usize) -> Result<Self> {
        Self::new(by_group.iter().map(|&w| vec![w; num_layers]).collect())
    }

    /// Every entry independently uniform on `[0, 1]`.
    pub fn uniform<R: Rng + ?Sized>(k: usize, num_layers: usize, rng: &mut R) -> Self {
        OmegaTable {
            k,
            num_layers,
            values: (0..k * num_layers).map(|_| rng.gen::<f64>()).collect(),
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn layer_count(&self) -> usize {
        self.num_layers
    }

    pub fn get(&self, r: usize, layer: usize) -> f64 {
        self.values[r * self.num_layers + layer]
    }
}

/// First-layer indicators: per group a size uniform on `0..=n`, then a
/// uniform subset of that size.
pub fn sample_first_layer<R: Rng + ?Sized>(
    k: usize,
    n: usize,
    rng: &mut R,
) -> Vec<MembershipPattern> {
    let mut row = vec![MembershipPattern::EMPTY; n];
    for r in 1..k {
        let size = rng.gen_range(0..=n);
        for i in sample_indices(rng, n, size) {
            row[i] = row[i].with(r);
        }
    }
    row
}

/// Draws the flip count among `n` nodes, `P(d) = J(d, n)`, by inverse CDF
/// over the unfloored table.
fn sample_flip_count<R: Rng + ?Sized>(jt: &JTable, n: usize, rng: &mut R) -> usize {
    let u = rng.gen::<f64>();
    let mut acc = 0.0;
    for d in 0..n {
        acc += jt.raw_log(d, n).exp();
        if u < acc {
            return d;
        }
    }
    n
}

/// One group's indicators in the next layer given the previous layer's.
pub fn sample_transition<R: Rng + ?Sized>(prev: &[bool], jt: &JTable, rng: &mut R) -> Vec<bool> {
    let mut next = prev.to_vec();
    for side in [false, true] {
        let nodes: Vec<usize> = (0..prev.len()).filter(|&i| prev[i] == side).collect();
        if nodes.is_empty() {
            continue;
        }
        let flips = sample_flip_count(jt, nodes.len(), rng);
        for idx in sample_indices(rng, nodes.len(), flips) {
            next[nodes[idx]] = !side;
        }
    }
    next
}

/// An assignment drawn from the prior given `k`.
pub fn sample_assignment<R: Rng + ?Sized>(
    k: usize,
    n: usize,
    num_layers: usize,
    jt: &JTable,
    rng: &mut R,
) -> Result<GroupAssignment> {
    if jt.n_max() < n {
        return Err(Error::Config(format!(
            "J table covers {} nodes, need {n}",
            jt.n_max()
        )));
    }
    let mut g = GroupAssignment::new(n, num_layers, k)?;
    if num_layers == 0 {
        return Ok(g);
    }
    for (i, p) in sample_first_layer(k, n, rng).into_iter().enumerate() {
        g.set_pattern(0, i, p);
    }
    for r in 1..k {
        let mut row: Vec<bool> = (0..n).map(|i| g.is_member(r, 0, i)).collect();
        for layer in 1..num_layers {
            row = sample_transition(&row, jt, rng);
            for (i, &m) in row.iter().enumerate() {
                g.set_member(r, layer, i, m);
            }
        }
    }
    Ok(g)
}

/// Edges drawn independently with probability `omega[h][layer]`.
pub fn sample_network<R: Rng + ?Sized>(
    g: &GroupAssignment,
    omega: &OmegaTable,
    rng: &mut R,
) -> Result<TemporalNetwork> {
    if omega.k() != g.k() || omega.layer_count() != g.layer_count() {
        return Err(Error::DimensionMismatch(format!(
            "omega is {}x{}, assignment has k = {} and {} layers",
            omega.k(),
            omega.layer_count(),
            g.k(),
            g.layer_count()
        )));
    }
    let n = g.node_count();
    let mut net = TemporalNetwork::empty(n, g.layer_count())?;
    for layer in 0..g.layer_count() {
        let row = g.layer_patterns(layer);
        for i in 0..n {
            for j in i + 1..n {
                if rng.gen::<f64>() < omega.get(highest_common(row[i], row[j]), layer) {
                    net.add_edge(layer, i, j)?;
                }
            }
        }
    }
    Ok(net)
}

/// Parameters of a two-level planted instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantedParams {
    pub n: usize,
    pub num_layers: usize,
    pub core_fraction: f64,
    pub omega_core: f64,
    pub omega_base: f64,
    /// Probability that a node keeps its core membership between layers.
    pub persistence: f64,
}

impl Default for PlantedParams {
    fn default() -> Self {
        PlantedParams {
            n: 100,
            num_layers: 5,
            core_fraction: 0.3,
            omega_core: 0.7,
            omega_base: 0.05,
            persistence: 0.95,
        }
    }
}

/// A `k = 2` instance: a core of `ceil(core_fraction * n)` first-layer nodes
/// whose memberships then flip with probability `1 - persistence` per layer.
pub fn make_planted_instance<R: Rng + ?Sized>(
    params: &PlantedParams,
    rng: &mut R,
) -> Result<(TemporalNetwork, GroupAssignment)> {
    for (name, v) in [
        ("core fraction", params.core_fraction),
        ("core density", params.omega_core),
        ("base density", params.omega_base),
        ("persistence", params.persistence),
    ] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::Validation(format!("{name} {v} outside [0, 1]")));
        }
    }
    let n = params.n;
    let mut g = GroupAssignment::new(n, params.num_layers, 2)?;
    if params.num_layers > 0 {
        let core = ((params.core_fraction * n as f64).ceil() as usize).min(n);
        for i in sample_indices(rng, n, core) {
            g.set_member(1, 0, i, true);
        }
        for layer in 1..params.num_layers {
            for i in 0..n {
                let prev = g.is_member(1, layer - 1, i);
                let keep = rng.gen::<f64>() < params.persistence;
                g.set_member(1, layer, i, prev == keep);
            }
        }
    }
    let omega = OmegaTable::constant(&[params.omega_base, params.omega_core], params.num_layers)?;
    let net = sample_network(&g, &omega, rng)?;
    Ok((net, g))
}
