use std::fmt;

use crate::assignment::MembershipPattern;

/// A proposed change to a group assignment.
///
/// Layers are 0-based: layer 0 is the first layer, whose group sizes carry
/// the first-layer prior.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Move {
    /// Proposal that leaves the state unchanged ("do nothing" branches).
    NoOp,
    AddNode {
        group: usize,
        layer: usize,
        node: usize,
    },
    RemoveNode {
        group: usize,
        layer: usize,
        node: usize,
    },
    /// Insert a new empty group with label `position`, shifting labels
    /// `position..k` up by one.
    AddGroup { position: usize },
    /// Remove the empty group `group`, shifting higher labels down by one.
    RemoveGroup { group: usize },
    /// In `layer`, node-layers whose pattern is exactly `first` take `second`
    /// and vice versa.
    MultiNodeSwap {
        layer: usize,
        first: MembershipPattern,
        second: MembershipPattern,
    },
}

/// Coarse classification used for bookkeeping and diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MoveKind {
    NoOp,
    AddNode,
    RemoveNode,
    AddGroup,
    RemoveGroup,
    MultiNodeSwap,
}

impl MoveKind {
    pub const ALL: [MoveKind; 6] = [
        MoveKind::NoOp,
        MoveKind::AddNode,
        MoveKind::RemoveNode,
        MoveKind::AddGroup,
        MoveKind::RemoveGroup,
        MoveKind::MultiNodeSwap,
    ];
}

impl Move {
    pub fn kind(&self) -> MoveKind {
        match self {
            Move::NoOp => MoveKind::NoOp,
            Move::AddNode { .. } => MoveKind::AddNode,
            Move::RemoveNode { .. } => MoveKind::RemoveNode,
            Move::AddGroup { .. } => MoveKind::AddGroup,
            Move::RemoveGroup { .. } => MoveKind::RemoveGroup,
            Move::MultiNodeSwap { .. } => MoveKind::MultiNodeSwap,
        }
    }
}

impl fmt::Display for MoveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            MoveKind::NoOp => "no-op",
            MoveKind::AddNode => "add-node",
            MoveKind::RemoveNode => "remove-node",
            MoveKind::AddGroup => "add-group",
            MoveKind::RemoveGroup => "remove-group",
            MoveKind::MultiNodeSwap => "multi-node",
        };
        f.write_str(s)
    }
}
