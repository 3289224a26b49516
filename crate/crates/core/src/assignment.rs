//! Hierarchical group assignments.
//!
//! Every node-layer belongs to group 0. Membership in groups `1..k` is stored
//! per node-layer as a [`MembershipPattern`] whose bit `r - 1` is set when the
//! node-layer is in group `r`. The highest common group of two node-layers is
//! therefore the highest set bit of the AND of their patterns.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::path::Path;

use crate::error::{Error, Result};

/// Largest supported group count. Patterns for groups `1..64` fit in a `u64`.
pub const MAX_GROUPS: usize = 64;

/// One node-layer's memberships in groups `1..k`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MembershipPattern(pub u64);

impl MembershipPattern {
    pub const EMPTY: MembershipPattern = MembershipPattern(0);

    /// Pattern containing exactly the given groups (each in `1..MAX_GROUPS`).
    pub fn from_groups(groups: &[usize]) -> Self {
        MembershipPattern(groups.iter().fold(0, |acc, &r| acc | group_bit(r)))
    }

    #[inline]
    pub fn contains(self, r: usize) -> bool {
        r >= 1 && self.0 & group_bit(r) != 0
    }

    #[inline]
    pub fn with(self, r: usize) -> Self {
        MembershipPattern(self.0 | group_bit(r))
    }

    #[inline]
    pub fn without(self, r: usize) -> Self {
        MembershipPattern(self.0 & !group_bit(r))
    }

    /// Highest stored group, or 0 for the empty pattern.
    #[inline]
    pub fn highest(self) -> usize {
        (u64::BITS - self.0.leading_zeros()) as usize
    }

    pub fn count(self) -> u32 {
        self.0.count_ones()
    }

    pub fn groups(self) -> impl Iterator<Item = usize> {
        (1..=MAX_GROUPS - 1).filter(move |&r| self.contains(r))
    }

    /// Opens an empty slot for a new group at label `r`; groups `>= r` move up.
    #[inline]
    pub(crate) fn insert_gap(self, r: usize) -> Self {
        let low = group_bit(r) - 1;
        MembershipPattern((self.0 & low) | ((self.0 & !low) << 1))
    }

    /// Drops group `r` (assumed absent); groups `> r` move down.
    #[inline]
    pub(crate) fn close_gap(self, r: usize) -> Self {
        let low = group_bit(r) - 1;
        MembershipPattern((self.0 & low) | ((self.0 >> 1) & !low))
    }
}

impl fmt::Display for MembershipPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_char('{')?;
        for (idx, r) in self.groups().enumerate() {
            if idx > 0 {
                f.write_char(',')?;
            }
            write!(f, "{r}")?;
        }
        f.write_char('}')
    }
}

#[inline]
fn group_bit(r: usize) -> u64 {
    debug_assert!((1..MAX_GROUPS).contains(&r), "group {r} has no stored bit");
    1u64 << (r - 1)
}

#[inline]
pub(crate) fn highest_common(a: MembershipPattern, b: MembershipPattern) -> usize {
    MembershipPattern(a.0 & b.0).highest()
}

/// Group memberships of every node-layer plus the group count `k`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GroupAssignment {
    n: usize,
    num_layers: usize,
    k: usize,
    patterns: Vec<MembershipPattern>,
}

impl GroupAssignment {
    /// All node-layers in group 0 only, with `k` groups.
    pub fn new(n: usize, num_layers: usize, k: usize) -> Result<Self> {
        if n == 0 || num_layers == 0 {
            return Err(Error::Validation(
                "assignment needs at least one node and one layer".into(),
            ));
        }
        check_k(k)?;
        Ok(GroupAssignment {
            n,
            num_layers,
            k,
            patterns: vec![MembershipPattern::EMPTY; n * num_layers],
        })
    }

    /// Builds from layer-major patterns (`patterns[layer * n + node]`).
    pub fn from_patterns(
        n: usize,
        num_layers: usize,
        k: usize,
        patterns: Vec<MembershipPattern>,
    ) -> Result<Self> {
        let mut g = Self::new(n, num_layers, k)?;
        if patterns.len() != n * num_layers {
            return Err(Error::DimensionMismatch(format!(
                "{} patterns for {n} nodes x {num_layers} layers",
                patterns.len()
            )));
        }
        let allowed = pattern_mask(k);
        if let Some(p) = patterns.iter().find(|p| p.0 & !allowed != 0) {
            return Err(Error::Validation(format!(
                "pattern {} uses groups beyond k = {k}",
                p.0
            )));
        }
        g.patterns = patterns;
        Ok(g)
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn layer_count(&self) -> usize {
        self.num_layers
    }

    /// Number of groups including the universal group 0.
    pub fn k(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn pattern(&self, layer: usize, node: usize) -> MembershipPattern {
        self.patterns[layer * self.n + node]
    }

    #[inline]
    pub fn set_pattern(&mut self, layer: usize, node: usize, p: MembershipPattern) {
        debug_assert_eq!(p.0 & !pattern_mask(self.k), 0);
        self.patterns[layer * self.n + node] = p;
    }

    pub fn layer_patterns(&self, layer: usize) -> &[MembershipPattern] {
        &self.patterns[layer * self.n..(layer + 1) * self.n]
    }

    pub fn patterns(&self) -> &[MembershipPattern] {
        &self.patterns
    }

    /// Indicator `g^r_(node, layer)`; group 0 always holds.
    pub fn is_member(&self, r: usize, layer: usize, node: usize) -> bool {
        r == 0 || self.pattern(layer, node).contains(r)
    }

    pub fn set_member(&mut self, r: usize, layer: usize, node: usize, member: bool) {
        assert!(
            (1..self.k).contains(&r),
            "group {r} not stored at k = {}",
            self.k
        );
        let p = self.pattern(layer, node);
        let p = if member { p.with(r) } else { p.without(r) };
        self.set_pattern(layer, node, p);
    }

    /// Largest group containing both node-layers, 0 if none of the stored ones do.
    pub fn highest_common_group(&self, i: usize, j: usize, layer: usize) -> Result<usize> {
        for (what, value, limit) in [
            ("node", i, self.n),
            ("node", j, self.n),
            ("layer", layer, self.num_layers),
        ] {
            if value >= limit {
                return Err(Error::Range { what, value, limit });
            }
        }
        Ok(highest_common(
            self.pattern(layer, i),
            self.pattern(layer, j),
        ))
    }

    /// Number of node-layers in `layer` that belong to group `r`.
    pub fn group_size(&self, r: usize, layer: usize) -> usize {
        if r == 0 {
            return self.n;
        }
        self.layer_patterns(layer)
            .iter()
            .filter(|p| p.contains(r))
            .count()
    }

    /// True when group `r` has no node-layer in any layer.
    pub fn is_group_empty(&self, r: usize) -> bool {
        r >= 1 && self.patterns.iter().all(|p| !p.contains(r))
    }

    /// Inserts an empty group at label `r` (`1 <= r <= k`), shifting `r..k` up.
    pub fn insert_group(&mut self, r: usize) -> Result<()> {
        if !(1..=self.k).contains(&r) {
            return Err(Error::InvalidMove(format!(
                "cannot insert group at {r} with k = {}",
                self.k
            )));
        }
        check_k(self.k + 1)?;
        for p in &mut self.patterns {
            *p = p.insert_gap(r);
        }
        self.k += 1;
        Ok(())
    }

    /// Removes the empty group `r` (`1 <= r < k`), shifting higher labels down.
    pub fn remove_group(&mut self, r: usize) -> Result<()> {
        if !(1..self.k).contains(&r) {
            return Err(Error::InvalidMove(format!(
                "no group {r} to remove with k = {}",
                self.k
            )));
        }
        if !self.is_group_empty(r) {
            return Err(Error::InvalidMove(format!("group {r} is not empty")));
        }
        for p in &mut self.patterns {
            *p = p.close_gap(r);
        }
        self.k -= 1;
        Ok(())
    }

    /// Text serialization: a `k <value>` line, then one `layer node pattern`
    /// line per node-layer.
    pub fn to_text(&self) -> String {
        let mut out = format!("k {}\n", self.k);
        for layer in 0..self.num_layers {
            for node in 0..self.n {
                let _ = writeln!(out, "{layer} {node} {}", self.pattern(layer, node).0);
            }
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut k = None;
        let mut records = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let parse_err = |message: String| Error::Parse {
                line: line_no,
                message,
            };
            let mut fields = line.split_whitespace();
            if k.is_none() {
                match (fields.next(), fields.next(), fields.next()) {
                    (Some("k"), Some(v), None) => {
                        k = Some(
                            v.parse::<usize>()
                                .map_err(|_| parse_err(format!("bad group count {v:?}")))?,
                        );
                    }
                    _ => return Err(parse_err(format!("expected \"k <value>\", found {line:?}"))),
                }
                continue;
            }
            let nums = fields
                .map(|tok| {
                    tok.parse::<u64>()
                        .map_err(|_| parse_err(format!("bad integer {tok:?}")))
                })
                .collect::<Result<Vec<_>>>()?;
            let [layer, node, pattern] = nums[..] else {
                return Err(parse_err(format!(
                    "expected \"layer node pattern\", found {line:?}"
                )));
            };
            if records
                .insert((layer as usize, node as usize), MembershipPattern(pattern))
                .is_some()
            {
                return Err(parse_err(format!("duplicate node-layer ({node}, {layer})")));
            }
        }
        let k = k.ok_or_else(|| Error::Parse {
            line: 0,
            message: "missing \"k <value>\" line".into(),
        })?;
        let num_layers = records.keys().map(|&(l, _)| l + 1).max().unwrap_or(0);
        let n = records.keys().map(|&(_, i)| i + 1).max().unwrap_or(0);
        if records.len() != n * num_layers {
            return Err(Error::Validation(format!(
                "{} records do not cover {n} nodes x {num_layers} layers",
                records.len()
            )));
        }
        Self::from_patterns(n, num_layers, k, records.into_values().collect())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }
}

/// Bits available to patterns when there are `k` groups.
#[inline]
pub(crate) fn pattern_mask(k: usize) -> u64 {
    if k <= 1 {
        0
    } else if k > 64 {
        u64::MAX
    } else {
        (1u64 << (k - 1)) - 1
    }
}

fn check_k(k: usize) -> Result<()> {
    if !(1..=MAX_GROUPS).contains(&k) {
        return Err(Error::Range {
            what: "group count",
            value: k,
            limit: MAX_GROUPS,
        });
    }
    Ok(())
}
