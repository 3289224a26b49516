//! Proposal generators for the three move families.

use rand::Rng;

use crate::assignment::{pattern_mask, GroupAssignment, MembershipPattern};
use crate::moves::Move;

/// Standard move for a variable number of groups.
///
/// Picks a layer and a group `r` in `1..k` uniformly. In the first layer a
/// fair coin chooses between adding a non-member and removing a member, each
/// selected uniformly; adding when the layer is saturated does nothing, and
/// removing from a group with no first-layer members removes the group if it
/// is empty everywhere and does nothing otherwise. In later layers a uniform
/// node has its membership toggled.
pub fn propose_standard<R: Rng + ?Sized>(g: &GroupAssignment, rng: &mut R) -> Move {
    standard(g, rng, true)
}

/// Standard move for a fixed number of groups: identical to
/// [`propose_standard`] except that an empty group is never removed.
pub fn propose_standard_fixed_k<R: Rng + ?Sized>(g: &GroupAssignment, rng: &mut R) -> Move {
    standard(g, rng, false)
}

fn standard<R: Rng + ?Sized>(g: &GroupAssignment, rng: &mut R, may_remove_group: bool) -> Move {
    let k = g.k();
    if k <= 1 {
        return Move::NoOp;
    }
    let layer = rng.gen_range(0..g.layer_count());
    let group = rng.gen_range(1..k);
    if layer > 0 {
        let node = rng.gen_range(0..g.node_count());
        return if g.pattern(layer, node).contains(group) {
            Move::RemoveNode { group, layer, node }
        } else {
            Move::AddNode { group, layer, node }
        };
    }

    let add = rng.gen_bool(0.5);
    let row = g.layer_patterns(0);
    let members = row.iter().filter(|p| p.contains(group)).count();
    if add {
        let outsiders = row.len() - members;
        if outsiders == 0 {
            return Move::NoOp;
        }
        let node = nth_matching(row, rng.gen_range(0..outsiders), |p| !p.contains(group));
        Move::AddNode { group, layer, node }
    } else if members == 0 {
        if may_remove_group && g.is_group_empty(group) {
            Move::RemoveGroup { group }
        } else {
            Move::NoOp
        }
    } else {
        let node = nth_matching(row, rng.gen_range(0..members), |p| p.contains(group));
        Move::RemoveNode { group, layer, node }
    }
}

fn nth_matching(
    row: &[MembershipPattern],
    nth: usize,
    pred: impl Fn(MembershipPattern) -> bool,
) -> usize {
    row.iter()
        .enumerate()
        .filter(|(_, &p)| pred(p))
        .nth(nth)
        .map(|(i, _)| i)
        .expect("nth eligible node-layer exists")
}

/// Group addition: a new empty group at a label uniform on `1..=k`.
/// At the cap `k_max` the proposal is a no-op.
pub fn propose_group_addition<R: Rng + ?Sized>(
    g: &GroupAssignment,
    k_max: usize,
    rng: &mut R,
) -> Move {
    let k = g.k();
    if k >= k_max {
        log::debug!("group addition suppressed at k = {k}");
        return Move::NoOp;
    }
    Move::AddGroup {
        position: rng.gen_range(1..=k),
    }
}

/// Multi-node move: two independent uniform subsets of groups `1..k` and a
/// uniform layer (skipping the first layer when `restrict_first_layer`).
pub fn propose_multi_node<R: Rng + ?Sized>(
    g: &GroupAssignment,
    rng: &mut R,
    restrict_first_layer: bool,
) -> Move {
    let mask = pattern_mask(g.k());
    let first = MembershipPattern(rng.gen::<u64>() & mask);
    let second = MembershipPattern(rng.gen::<u64>() & mask);
    let lo = usize::from(restrict_first_layer);
    if lo >= g.layer_count() {
        return Move::NoOp;
    }
    Move::MultiNodeSwap {
        layer: rng.gen_range(lo..g.layer_count()),
        first,
        second,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moves::MoveKind;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_group_gives_noop() {
        let g = GroupAssignment::new(4, 2, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..100 {
            assert_eq!(propose_standard(&g, &mut rng), Move::NoOp);
            assert_eq!(propose_standard_fixed_k(&g, &mut rng), Move::NoOp);
        }
    }

    #[test]
    fn saturated_first_layer_add_is_noop() {
        let full = MembershipPattern::from_groups(&[1]);
        let g = GroupAssignment::from_patterns(3, 1, 2, vec![full; 3]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let kinds: Vec<_> = (0..200)
            .map(|_| propose_standard(&g, &mut rng).kind())
            .collect();
        assert!(kinds.contains(&MoveKind::NoOp));
        assert!(kinds.contains(&MoveKind::RemoveNode));
        assert!(!kinds.contains(&MoveKind::AddNode));
    }

    #[test]
    fn empty_group_removal_only_when_variable_k() {
        let g = GroupAssignment::new(3, 2, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let variable: Vec<_> = (0..400).map(|_| propose_standard(&g, &mut rng)).collect();
        assert!(variable.contains(&Move::RemoveGroup { group: 1 }));
        let fixed: Vec<_> = (0..400)
            .map(|_| propose_standard_fixed_k(&g, &mut rng))
            .collect();
        assert!(fixed.iter().all(|m| m.kind() != MoveKind::RemoveGroup));
        assert!(fixed.contains(&Move::NoOp));
    }

    #[test]
    fn group_member_in_later_layer_blocks_removal() {
        let one = MembershipPattern::from_groups(&[1]);
        let e = MembershipPattern::EMPTY;
        let g = GroupAssignment::from_patterns(2, 2, 2, vec![e, e, one, e]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..400 {
            assert_ne!(propose_standard(&g, &mut rng).kind(), MoveKind::RemoveGroup);
        }
    }

    #[test]
    fn later_layer_toggles() {
        let one = MembershipPattern::from_groups(&[1]);
        let g = GroupAssignment::from_patterns(1, 2, 2, vec![one, one]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let saw_remove = (0..200)
            .map(|_| propose_standard_fixed_k(&g, &mut rng))
            .any(|m| {
                m == Move::RemoveNode {
                    group: 1,
                    layer: 1,
                    node: 0,
                }
            });
        assert!(saw_remove);
    }

    #[test]
    fn group_addition_positions_and_cap() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let g = GroupAssignment::new(2, 1, 1).unwrap();
        for _ in 0..20 {
            assert_eq!(
                propose_group_addition(&g, 64, &mut rng),
                Move::AddGroup { position: 1 }
            );
        }
        let g = GroupAssignment::new(2, 1, 3).unwrap();
        assert_eq!(propose_group_addition(&g, 3, &mut rng), Move::NoOp);
    }

    #[test]
    fn multi_node_respects_layer_restriction() {
        let g = GroupAssignment::new(2, 3, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..200 {
            match propose_multi_node(&g, &mut rng, true) {
                Move::MultiNodeSwap {
                    layer,
                    first,
                    second,
                } => {
                    assert!(layer >= 1);
                    assert!(first.0 < 4 && second.0 < 4);
                }
                other => panic!("{other:?}"),
            }
        }
        let single = GroupAssignment::new(2, 1, 3).unwrap();
        assert_eq!(propose_multi_node(&single, &mut rng, true), Move::NoOp);
    }
}
