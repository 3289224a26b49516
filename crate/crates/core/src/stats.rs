//! Sufficient statistics of a group assignment on a network.
//!
//! Rows are indexed by group label `r` in `0..k` and columns by layer. Row 0
//! of the membership and transition tables describes the universal group and
//! is kept only so that every table relabels the same way when a group is
//! inserted or removed.

use crate::assignment::{highest_common, GroupAssignment};
use crate::error::{Error, Result};
use crate::network::TemporalNetwork;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SufficientStats {
    pub(crate) n: usize,
    pub(crate) num_layers: usize,
    /// `pairs[r][layer]`: node pairs whose highest common group is `r`.
    pub(crate) pairs: Vec<Vec<u64>>,
    /// `adjacent[r][layer]`: the adjacent subset of `pairs[r][layer]`.
    pub(crate) adjacent: Vec<Vec<u64>>,
    /// `members[r][layer]`: node-layers with indicator 1 for group `r`.
    pub(crate) members: Vec<Vec<u64>>,
    /// `stay0[r][layer]`: nodes with indicator 0 in both `layer - 1` and `layer`.
    /// Column 0 is always 0.
    pub(crate) stay0: Vec<Vec<u64>>,
    /// `stay1[r][layer]`: nodes with indicator 1 in both `layer - 1` and `layer`.
    pub(crate) stay1: Vec<Vec<u64>>,
}

impl SufficientStats {
    /// Recomputes every statistic from scratch.
    pub fn compute(net: &TemporalNetwork, g: &GroupAssignment) -> Result<Self> {
        let n = net.node_count();
        let num_layers = net.layer_count();
        if g.node_count() != n || g.layer_count() != num_layers {
            return Err(Error::DimensionMismatch(format!(
                "assignment is {}x{} but network is {n}x{num_layers}",
                g.node_count(),
                g.layer_count()
            )));
        }
        let k = g.k();
        let zeros = || vec![vec![0u64; num_layers]; k];
        let mut stats = SufficientStats {
            n,
            num_layers,
            pairs: zeros(),
            adjacent: zeros(),
            members: zeros(),
            stay0: zeros(),
            stay1: zeros(),
        };
        for layer in 0..num_layers {
            stats.fill_layer(net, g, layer);
        }
        Ok(stats)
    }

    /// Recomputes pair, membership and transition counts that depend on `layer`.
    pub(crate) fn fill_layer(&mut self, net: &TemporalNetwork, g: &GroupAssignment, layer: usize) {
        let k = g.k();
        let row = g.layer_patterns(layer);
        for r in 0..k {
            self.pairs[r][layer] = 0;
            self.adjacent[r][layer] = 0;
        }
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                let h = highest_common(row[i], row[j]);
                self.pairs[h][layer] += 1;
                if net.is_adjacent(layer, i, j) {
                    self.adjacent[h][layer] += 1;
                }
            }
        }
        self.members[0][layer] = self.n as u64;
        for r in 1..k {
            self.members[r][layer] = row.iter().filter(|p| p.contains(r)).count() as u64;
        }
        self.fill_transition(g, layer);
        if layer + 1 < self.num_layers {
            self.fill_transition(g, layer + 1);
        }
    }

    fn fill_transition(&mut self, g: &GroupAssignment, layer: usize) {
        self.stay0[0][layer] = 0;
        self.stay1[0][layer] = if layer == 0 { 0 } else { self.n as u64 };
        for r in 1..g.k() {
            let (mut s0, mut s1) = (0, 0);
            if layer > 0 {
                let prev = g.layer_patterns(layer - 1);
                let cur = g.layer_patterns(layer);
                for (a, b) in prev.iter().zip(cur) {
                    match (a.contains(r), b.contains(r)) {
                        (false, false) => s0 += 1,
                        (true, true) => s1 += 1,
                        _ => {}
                    }
                }
            }
            self.stay0[r][layer] = s0;
            self.stay1[r][layer] = s1;
        }
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn layer_count(&self) -> usize {
        self.num_layers
    }

    pub fn k(&self) -> usize {
        self.pairs.len()
    }

    /// `t_r` for `layer`: pairs whose highest common group is `r`.
    pub fn pair_count(&self, r: usize, layer: usize) -> u64 {
        self.pairs[r][layer]
    }

    /// `m_r` for `layer`: adjacent pairs whose highest common group is `r`.
    pub fn edge_count(&self, r: usize, layer: usize) -> u64 {
        self.adjacent[r][layer]
    }

    /// Node-layers in `layer` with indicator `s` for group `r`.
    pub fn indicator_count(&self, r: usize, layer: usize, s: bool) -> u64 {
        let ones = self.members[r][layer];
        if s {
            ones
        } else {
            self.n as u64 - ones
        }
    }

    /// Nodes with indicator `s` for group `r` in both `layer - 1` and `layer`.
    pub fn stay_count(&self, r: usize, layer: usize, s: bool) -> u64 {
        if s {
            self.stay1[r][layer]
        } else {
            self.stay0[r][layer]
        }
    }

    /// Indicator counts `(n_0, n_1)` of `layer - 1` and stay counts
    /// `(c_00, c_11)` of the transition into `layer` (which must be `>= 1`).
    pub fn transition_counts(&self, r: usize, layer: usize) -> ([u64; 2], [u64; 2]) {
        let n1 = self.members[r][layer - 1];
        (
            [self.n as u64 - n1, n1],
            [self.stay0[r][layer], self.stay1[r][layer]],
        )
    }

    /// Checks the counting identities that every consistent state satisfies.
    pub fn check_invariants(&self, net: &TemporalNetwork) -> Result<()> {
        let total_pairs = net.pair_count() as u64;
        for layer in 0..self.num_layers {
            let t: u64 = (0..self.k()).map(|r| self.pairs[r][layer]).sum();
            let m: u64 = (0..self.k()).map(|r| self.adjacent[r][layer]).sum();
            if t != total_pairs {
                return Err(Error::Inconsistent(format!(
                    "layer {layer}: pair counts sum to {t}, expected {total_pairs}"
                )));
            }
            if m as usize != net.edge_count(layer)? {
                return Err(Error::Inconsistent(format!(
                    "layer {layer}: edge counts sum to {m}"
                )));
            }
            for r in 0..self.k() {
                if self.adjacent[r][layer] > self.pairs[r][layer] {
                    return Err(Error::Inconsistent(format!(
                        "group {r} layer {layer}: more edges than pairs"
                    )));
                }
                if self.members[r][layer] > self.n as u64 {
                    return Err(Error::Inconsistent(format!(
                        "group {r} layer {layer}: membership exceeds n"
                    )));
                }
                if layer > 0 && r > 0 {
                    let ([n0, n1], [c0, c1]) = self.transition_counts(r, layer);
                    if c0 > n0 || c1 > n1 {
                        return Err(Error::Inconsistent(format!(
                            "group {r} layer {layer}: stay counts exceed previous sizes"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub(crate) fn insert_group_row(&mut self, r: usize) {
        let zeros = vec![0; self.num_layers];
        let mut all_stay = vec![self.n as u64; self.num_layers];
        all_stay[0] = 0;
        self.pairs.insert(r, zeros.clone());
        self.adjacent.insert(r, zeros.clone());
        self.members.insert(r, zeros.clone());
        self.stay0.insert(r, all_stay);
        self.stay1.insert(r, zeros);
    }

    pub(crate) fn remove_group_row(&mut self, r: usize) {
        self.pairs.remove(r);
        self.adjacent.remove(r);
        self.members.remove(r);
        self.stay0.remove(r);
        self.stay1.remove(r);
    }
}
