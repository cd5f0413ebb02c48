//! Particle-local decision logic: the spanning-forest rules parameterized by
//! a pluggable snake-formation rule, plus the hexagon and triangle rules.
//!
//! Everything here is a pure function of a [`NeighborView`] and a
//! [`SnakeRule`]; the functions cannot see coordinates, particle identities,
//! or the system size. All port arithmetic happens in local labels, which
//! compose with the owner's offset bijection.
//!
//! State machine, per activation:
//!
//! * **inactive** — becomes a root when touching a retired particle;
//!   otherwise follows an adjacent root or follower; otherwise waits.
//! * **follower** — contracted and touching a retired particle: becomes a
//!   root. Contracted with its parent expanded and reachable over the
//!   parent's tail: pushes in a handover. Expanded with a contracted child
//!   behind its tail: pulls it in a handover. Expanded, no tail child, no
//!   inactive neighbor: contracts.
//! * **root** — first consults the snake rule for retirement; otherwise
//!   walks clockwise around the retired structure (contracted), or hands
//!   over with a tail child, or contracts when no tail child and no
//!   inactive neighbor remain.
//! * **retired** — no further action.

use crate::grid::PortLabel;
use crate::model::{FlagAssignments, NeighborView, ParticleState, PortView};

/// The single movement or transition a particle intends after one
/// activation.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Action {
    /// Join the forest with the parent flag on this head port.
    BecomeFollower {
        port: PortLabel,
    },
    BecomeRoot,
    /// Plain expansion through this head port (the target was seen empty).
    Expand {
        label: PortLabel,
    },
    Contract,
    /// Push the expanded parent whose tail sits across this head port.
    HandoverPush {
        port: PortLabel,
    },
    /// Pull the contracted child sitting across this tail port.
    HandoverPull {
        tail_port: PortLabel,
    },
    /// Retire in place, publishing these flags atomically.
    Retire {
        flags: FlagAssignments,
    },
    NoOp,
}

/// Local observations that the spanning-forest proofs rule out; hitting one
/// means the run left the supported regime and must abort loudly.
#[derive(Clone, Copy, PartialEq, Eq, Debug, thiserror::Error)]
pub enum LogicError {
    #[error("root has no retired neighbor")]
    NoRetiredNeighbor,
    #[error("root is fully enclosed by retired particles")]
    Surrounded,
    #[error("root's retired neighbors form more than one arc")]
    NonContiguousRetiredArc,
}

/// A snake-formation rule: what the seed publishes initially, and when a
/// contracted root may retire and with which flags. This is the extension
/// point; new target shapes plug in here.
pub trait SnakeRule {
    /// Flags the seed presets at initialization.
    fn seed_init(&self) -> FlagAssignments;

    /// Retirement decision for a contracted root. Reads only the view;
    /// returns the flags to publish if the root retires now.
    fn retire_check(&self, view: &NeighborView) -> Option<FlagAssignments>;
}

/// Which side of the triangle a border flag marks.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum BorderType {
    Left,
    Right,
}

fn retired_at(view: &NeighborView, port: PortLabel) -> bool {
    view.head[port.index() as usize]
        .neighbor()
        .is_some_and(|n| n.state == ParticleState::Retired)
}

fn has_retired_neighbor(view: &NeighborView) -> bool {
    view.has_neighbor_in(ParticleState::Retired)
}

fn has_inactive_neighbor(view: &NeighborView) -> bool {
    view.has_neighbor_in(ParticleState::Inactive)
}

/// Followers whose parent flag crosses one of our tail edges. The first
/// contracted one is ready for a handover contraction; an expanded one
/// cannot hand over yet but still pins the tail node, so a plain
/// contraction would strand its flag.
struct TailChildren {
    pull_ready: Option<PortLabel>,
    any: bool,
}

fn tail_children(view: &NeighborView) -> TailChildren {
    let mut found = TailChildren {
        pull_ready: None,
        any: false,
    };
    let Some(tail) = view.tail.as_ref() else {
        return found;
    };
    for l in PortLabel::ALL {
        if let Some(n) = tail[l.index() as usize].neighbor() {
            if n.state == ParticleState::Follower && n.parent_flag {
                found.any = true;
                if !n.expanded && found.pull_ready.is_none() {
                    found.pull_ready = Some(l);
                }
            }
        }
    }
    found
}

/// The port a contracted root should expand through: starting from an edge
/// to a retired particle, rotate clockwise past the retired arc and return
/// the first port beyond it.
///
/// The retired neighbors of a legally walking root always form one
/// contiguous arc; anything else is reported instead of guessed around.
pub fn root_direction(view: &NeighborView) -> Result<PortLabel, LogicError> {
    debug_assert!(!view.expanded);
    let retired: Vec<bool> = PortLabel::ALL
        .iter()
        .map(|&l| retired_at(view, l))
        .collect();
    if retired.iter().all(|&r| !r) {
        return Err(LogicError::NoRetiredNeighbor);
    }
    if retired.iter().all(|&r| r) {
        return Err(LogicError::Surrounded);
    }
    let arcs = (0..6)
        .filter(|&i| !retired[i] && retired[(i + 1) % 6])
        .count();
    if arcs != 1 {
        return Err(LogicError::NonContiguousRetiredArc);
    }
    // The unique port just past the clockwise end of the retired arc.
    let end = (0..6)
        .find(|&i| retired[i] && !retired[(i + 1) % 6])
        .expect("arc end exists");
    Ok(PortLabel::new(end as u8 + 1))
}

/// One activation of the spanning-forest state machine.
pub fn activate(view: &NeighborView, rule: &dyn SnakeRule) -> Result<Action, LogicError> {
    match view.state {
        ParticleState::Inactive => Ok(activate_inactive(view)),
        ParticleState::Follower => Ok(activate_follower(view)),
        ParticleState::Root => activate_root(view, rule),
        ParticleState::Retired => Ok(Action::NoOp),
    }
}

fn activate_inactive(view: &NeighborView) -> Action {
    if has_retired_neighbor(view) {
        return Action::BecomeRoot;
    }
    // Smallest local port label with an active neighbor wins.
    let candidate = PortLabel::ALL.into_iter().find(|l| {
        view.head[l.index() as usize]
            .neighbor()
            .is_some_and(|n| n.state.is_active())
    });
    match candidate {
        Some(port) => Action::BecomeFollower { port },
        None => Action::NoOp,
    }
}

fn activate_follower(view: &NeighborView) -> Action {
    if !view.expanded {
        if has_retired_neighbor(view) {
            return Action::BecomeRoot;
        }
        // Push the expanded parent if the parent flag faces its tail.
        let port = view.parent_port.expect("follower carries a parent flag");
        if let Some(n) = view.head[port.index() as usize].neighbor() {
            if n.expanded && !n.at_head {
                return Action::HandoverPush { port };
            }
        }
        return Action::NoOp;
    }
    expanded_active_action(view)
}

fn activate_root(view: &NeighborView, rule: &dyn SnakeRule) -> Result<Action, LogicError> {
    if !view.expanded {
        if let Some(flags) = rule.retire_check(view) {
            return Ok(Action::Retire { flags });
        }
        let label = root_direction(view)?;
        // Another particle may hold the target; abort and retry later.
        return Ok(
            if matches!(view.head[label.index() as usize], PortView::Empty) {
                Action::Expand { label }
            } else {
                Action::NoOp
            },
        );
    }
    Ok(expanded_active_action(view))
}

/// Shared movement cases for expanded followers and roots: hand over with a
/// contracted tail child if one exists, else contract — unless a tail child
/// is still expanded or an inactive neighbor depends on this particle's
/// reach, in which case wait.
fn expanded_active_action(view: &NeighborView) -> Action {
    let children = tail_children(view);
    if let Some(tail_port) = children.pull_ready {
        return Action::HandoverPull { tail_port };
    }
    if !children.any && !has_inactive_neighbor(view) {
        return Action::Contract;
    }
    Action::NoOp
}

// ----- hexagon rule -----

/// Spiral snake: each retiree aims the snake at the next node around the
/// retired structure, so layers wrap into a hexagonal disk.
#[derive(Clone, Copy, Debug, Default)]
pub struct HexRule;

impl SnakeRule for HexRule {
    fn seed_init(&self) -> FlagAssignments {
        FlagAssignments {
            snakedir: Some(PortLabel::new(0)),
            ..Default::default()
        }
    }

    fn retire_check(&self, view: &NeighborView) -> Option<FlagAssignments> {
        if view.expanded || view.state != ParticleState::Root {
            return None;
        }
        let mut port = snakedir_provider_port(view)?;
        // Rotate clockwise past the retired run; the loop ends because not
        // all six neighbors are retired (that case never survives
        // root_direction on the way here).
        for _ in 0..6 {
            if !retired_at(view, port) {
                return Some(FlagAssignments {
                    snakedir: Some(port),
                    ..Default::default()
                });
            }
            port = port.next_clockwise();
        }
        None
    }
}

/// First port whose retired neighbor publishes a snakedir flag on the shared
/// edge — the retirement trigger.
fn snakedir_provider_port(view: &NeighborView) -> Option<PortLabel> {
    PortLabel::ALL.into_iter().find(|l| {
        view.head[l.index() as usize]
            .neighbor()
            .is_some_and(|n| n.state == ParticleState::Retired && n.snakedir_flag)
    })
}

// ----- triangle rule -----

/// Boustrophedon snake: rows fill alternately leftward and rightward between
/// two border rays propagated from the seed corner.
#[derive(Clone, Copy, Debug, Default)]
pub struct TriRule;

impl SnakeRule for TriRule {
    fn seed_init(&self) -> FlagAssignments {
        FlagAssignments {
            snakedir: Some(PortLabel::new(0)),
            border_left: Some(PortLabel::new(0)),
            border_right: Some(PortLabel::new(1)),
        }
    }

    fn retire_check(&self, view: &NeighborView) -> Option<FlagAssignments> {
        if view.expanded || view.state != ParticleState::Root {
            return None;
        }
        let provider = snakedir_provider_port(view)?;
        let Some((border_type, border_port)) = border_with_port(view, provider) else {
            // No border in sight: keep filling the current row, away from
            // the provider.
            return Some(FlagAssignments {
                snakedir: Some(provider.opposite()),
                ..Default::default()
            });
        };
        // Propagate the border beyond this node.
        let continuation = border_port.opposite();
        let (border_left, border_right) = match border_type {
            BorderType::Left => (Some(continuation), None),
            BorderType::Right => (None, Some(continuation)),
        };
        let snakedir = if border_port != provider {
            // The border came from a different particle than the snake: this
            // node ends a row; the next row starts along the border.
            continuation
        } else {
            // Border and snake flags come from the same particle: first node
            // of a fresh row; turn back over the previous row.
            match border_type {
                BorderType::Left => provider.rotated(5),
                BorderType::Right => provider.rotated(1),
            }
        };
        Some(FlagAssignments {
            snakedir: Some(snakedir),
            border_left,
            border_right,
        })
    }
}

/// The border flag visible on a shared edge, if any.
///
/// When several ports show border flags, the one shared with the snakedir
/// provider wins, then the smallest local label.
pub fn border(view: &NeighborView) -> Option<BorderType> {
    let provider = snakedir_provider_port(view);
    border_with_port(view, provider.unwrap_or(PortLabel::new(0))).map(|(t, _)| t)
}

fn border_with_port(view: &NeighborView, provider: PortLabel) -> Option<(BorderType, PortLabel)> {
    let border_at = |l: PortLabel| -> Option<BorderType> {
        let n = view.head[l.index() as usize].neighbor()?;
        if n.border_left_flag {
            Some(BorderType::Left)
        } else if n.border_right_flag {
            Some(BorderType::Right)
        } else {
            None
        }
    };
    if let Some(t) = border_at(provider) {
        return Some((t, provider));
    }
    PortLabel::ALL
        .into_iter()
        .find_map(|l| border_at(l).map(|t| (t, l)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::NeighborInfo;

    fn empty_view(state: ParticleState) -> NeighborView {
        NeighborView {
            state,
            expanded: false,
            parent_port: None,
            head: [PortView::Empty; 6],
            tail: None,
        }
    }

    fn neighbor(state: ParticleState) -> NeighborInfo {
        NeighborInfo {
            state,
            expanded: false,
            at_head: true,
            parent_flag: false,
            snakedir_flag: false,
            border_left_flag: false,
            border_right_flag: false,
        }
    }

    fn retired_with_snakedir() -> NeighborInfo {
        NeighborInfo {
            snakedir_flag: true,
            ..neighbor(ParticleState::Retired)
        }
    }

    #[test]
    fn inactive_next_to_retired_becomes_root() {
        let mut view = empty_view(ParticleState::Inactive);
        view.head[3] = PortView::Occupied(neighbor(ParticleState::Retired));
        view.head[1] = PortView::Occupied(neighbor(ParticleState::Follower));
        assert_eq!(activate(&view, &HexRule).unwrap(), Action::BecomeRoot);
    }

    #[test]
    fn inactive_follows_smallest_labeled_active_neighbor() {
        let mut view = empty_view(ParticleState::Inactive);
        view.head[2] = PortView::Occupied(neighbor(ParticleState::Follower));
        assert_eq!(
            activate(&view, &HexRule).unwrap(),
            Action::BecomeFollower {
                port: PortLabel::new(2)
            }
        );
        view.head[4] = PortView::Occupied(neighbor(ParticleState::Root));
        assert_eq!(
            activate(&view, &HexRule).unwrap(),
            Action::BecomeFollower {
                port: PortLabel::new(2)
            }
        );
        let lonely = empty_view(ParticleState::Inactive);
        assert_eq!(activate(&lonely, &HexRule).unwrap(), Action::NoOp);
    }

    #[test]
    fn contracted_follower_pushes_only_toward_parent_tail() {
        let mut view = empty_view(ParticleState::Follower);
        view.parent_port = Some(PortLabel::new(1));
        view.head[1] = PortView::Occupied(NeighborInfo {
            expanded: true,
            at_head: false,
            ..neighbor(ParticleState::Root)
        });
        assert_eq!(
            activate(&view, &HexRule).unwrap(),
            Action::HandoverPush {
                port: PortLabel::new(1)
            }
        );
        // Facing the parent's head instead: no push is possible yet.
        view.head[1] = PortView::Occupied(NeighborInfo {
            expanded: true,
            at_head: true,
            ..neighbor(ParticleState::Root)
        });
        assert_eq!(activate(&view, &HexRule).unwrap(), Action::NoOp);
        // Contracted parent: nothing to do either.
        view.head[1] = PortView::Occupied(neighbor(ParticleState::Root));
        assert_eq!(activate(&view, &HexRule).unwrap(), Action::NoOp);
    }

    #[test]
    fn expanded_follower_with_inactive_neighbor_does_not_contract() {
        let mut view = empty_view(ParticleState::Follower);
        view.expanded = true;
        view.parent_port = Some(PortLabel::new(0));
        view.tail = Some([PortView::Empty; 6]);
        view.tail.as_mut().unwrap()[2] = PortView::Occupied(neighbor(ParticleState::Inactive));
        assert_eq!(activate(&view, &HexRule).unwrap(), Action::NoOp);
        // Without the inactive neighbor the contraction goes through.
        view.tail.as_mut().unwrap()[2] = PortView::Empty;
        assert_eq!(activate(&view, &HexRule).unwrap(), Action::Contract);
    }

    #[test]
    fn expanded_particle_pulls_tail_child_first() {
        let mut view = empty_view(ParticleState::Root);
        view.expanded = true;
        view.tail = Some([PortView::Empty; 6]);
        view.tail.as_mut().unwrap()[4] = PortView::Occupied(NeighborInfo {
            parent_flag: true,
            ..neighbor(ParticleState::Follower)
        });
        // An inactive neighbor elsewhere does not block the handover.
        view.head[0] = PortView::Occupied(neighbor(ParticleState::Inactive));
        assert_eq!(
            activate(&view, &HexRule).unwrap(),
            Action::HandoverPull {
                tail_port: PortLabel::new(4)
            }
        );
        // A follower behind the tail without its flag on the shared edge is
        // not a child; with an inactive neighbor around, the root waits.
        view.tail.as_mut().unwrap()[4] = PortView::Occupied(neighbor(ParticleState::Follower));
        assert_eq!(activate(&view, &HexRule).unwrap(), Action::NoOp);
    }

    #[test]
    fn expanded_tail_child_blocks_contraction_until_it_contracts() {
        let mut view = empty_view(ParticleState::Follower);
        view.expanded = true;
        view.parent_port = Some(PortLabel::new(0));
        view.tail = Some([PortView::Empty; 6]);
        // An expanded child still pointing at our tail: no pull is possible
        // and contracting would strand its parent flag over an empty node.
        view.tail.as_mut().unwrap()[3] = PortView::Occupied(NeighborInfo {
            parent_flag: true,
            expanded: true,
            ..neighbor(ParticleState::Follower)
        });
        assert_eq!(activate(&view, &HexRule).unwrap(), Action::NoOp);
        // Once it contracts, the handover goes through.
        view.tail.as_mut().unwrap()[3] = PortView::Occupied(NeighborInfo {
            parent_flag: true,
            ..neighbor(ParticleState::Follower)
        });
        assert_eq!(
            activate(&view, &HexRule).unwrap(),
            Action::HandoverPull {
                tail_port: PortLabel::new(3)
            }
        );
    }

    #[test]
    fn root_direction_scans_past_the_retired_arc() {
        let mut view = empty_view(ParticleState::Root);
        view.head[2] = PortView::Occupied(neighbor(ParticleState::Retired));
        view.head[3] = PortView::Occupied(neighbor(ParticleState::Retired));
        assert_eq!(root_direction(&view).unwrap(), PortLabel::new(4));
        assert_eq!(
            activate(&view, &HexRule).unwrap(),
            Action::Expand {
                label: PortLabel::new(4)
            }
        );

        let mut view = empty_view(ParticleState::Root);
        view.head[5] = PortView::Occupied(neighbor(ParticleState::Retired));
        assert_eq!(root_direction(&view).unwrap(), PortLabel::new(0));
    }

    #[test]
    fn root_direction_rejects_degenerate_neighborhoods() {
        let view = empty_view(ParticleState::Root);
        assert_eq!(
            root_direction(&view).unwrap_err(),
            LogicError::NoRetiredNeighbor
        );

        let mut view = empty_view(ParticleState::Root);
        for l in 0..6 {
            view.head[l] = PortView::Occupied(neighbor(ParticleState::Retired));
        }
        assert_eq!(root_direction(&view).unwrap_err(), LogicError::Surrounded);

        let mut view = empty_view(ParticleState::Root);
        view.head[0] = PortView::Occupied(neighbor(ParticleState::Retired));
        view.head[3] = PortView::Occupied(neighbor(ParticleState::Retired));
        assert_eq!(
            root_direction(&view).unwrap_err(),
            LogicError::NonContiguousRetiredArc
        );
    }

    #[test]
    fn blocked_root_target_resolves_to_noop() {
        let mut view = empty_view(ParticleState::Root);
        view.head[2] = PortView::Occupied(neighbor(ParticleState::Retired));
        view.head[3] = PortView::Occupied(neighbor(ParticleState::Root));
        assert_eq!(activate(&view, &HexRule).unwrap(), Action::NoOp);
    }

    #[test]
    fn hex_seed_flags() {
        let flags = HexRule.seed_init();
        assert_eq!(flags.snakedir, Some(PortLabel::new(0)));
        assert_eq!(flags.border_left, None);
        assert_eq!(flags.border_right, None);
    }

    #[test]
    fn hex_retirement_rotates_clockwise_from_the_provider() {
        // Two-particle system: the root stands on the seed's snake target and
        // sees the seed (with its snakedir flag) on port 3.
        let mut view = empty_view(ParticleState::Root);
        view.head[3] = PortView::Occupied(retired_with_snakedir());
        let flags = HexRule.retire_check(&view).unwrap();
        assert_eq!(flags.snakedir, Some(PortLabel::new(4)));
        assert_eq!(flags.border_left, None);
        assert_eq!(flags.border_right, None);

        // A longer retired run: ports 1 and 2 retired too.
        let mut view = empty_view(ParticleState::Root);
        view.head[1] = PortView::Occupied(retired_with_snakedir());
        view.head[2] = PortView::Occupied(neighbor(ParticleState::Retired));
        let flags = HexRule.retire_check(&view).unwrap();
        assert_eq!(flags.snakedir, Some(PortLabel::new(3)));
    }

    #[test]
    fn hex_retirement_requires_the_shared_snakedir_edge() {
        // Retired neighbors without a snakedir flag on the shared edge.
        let mut view = empty_view(ParticleState::Root);
        view.head[2] = PortView::Occupied(neighbor(ParticleState::Retired));
        assert_eq!(HexRule.retire_check(&view), None);
        // Expanded roots never retire.
        let mut view = empty_view(ParticleState::Root);
        view.expanded = true;
        view.tail = Some([PortView::Empty; 6]);
        view.head[3] = PortView::Occupied(retired_with_snakedir());
        assert_eq!(HexRule.retire_check(&view), None);
    }

    #[test]
    fn tri_seed_flags() {
        let flags = TriRule.seed_init();
        assert_eq!(flags.snakedir, Some(PortLabel::new(0)));
        assert_eq!(flags.border_left, Some(PortLabel::new(0)));
        assert_eq!(flags.border_right, Some(PortLabel::new(1)));
    }

    #[test]
    fn tri_same_row_continues_opposite_the_provider() {
        let mut view = empty_view(ParticleState::Root);
        view.head[5] = PortView::Occupied(retired_with_snakedir());
        let flags = TriRule.retire_check(&view).unwrap();
        assert_eq!(flags.snakedir, Some(PortLabel::new(2)));
        assert_eq!(flags.border_left, None);
        assert_eq!(flags.border_right, None);
    }

    #[test]
    fn tri_new_row_starts_along_the_border() {
        // Snake arrives over port 5; a right border flag shows on port 4
        // from a different particle: the next row opens along the border.
        let mut view = empty_view(ParticleState::Root);
        view.head[5] = PortView::Occupied(retired_with_snakedir());
        view.head[4] = PortView::Occupied(NeighborInfo {
            border_right_flag: true,
            ..neighbor(ParticleState::Retired)
        });
        let flags = TriRule.retire_check(&view).unwrap();
        assert_eq!(flags.snakedir, Some(PortLabel::new(1)));
        assert_eq!(flags.border_right, Some(PortLabel::new(1)));
        assert_eq!(flags.border_left, None);
    }

    #[test]
    fn tri_border_and_snake_from_same_particle_turns_the_snake() {
        // Both flags over port 3 with a left border: second particle of the
        // smallest triangle.
        let mut view = empty_view(ParticleState::Root);
        view.head[3] = PortView::Occupied(NeighborInfo {
            border_left_flag: true,
            ..retired_with_snakedir()
        });
        let flags = TriRule.retire_check(&view).unwrap();
        assert_eq!(flags.border_left, Some(PortLabel::new(0)));
        assert_eq!(flags.snakedir, Some(PortLabel::new(2)));
        // Right-border mirror image.
        let mut view = empty_view(ParticleState::Root);
        view.head[3] = PortView::Occupied(NeighborInfo {
            border_right_flag: true,
            ..retired_with_snakedir()
        });
        let flags = TriRule.retire_check(&view).unwrap();
        assert_eq!(flags.border_right, Some(PortLabel::new(0)));
        assert_eq!(flags.snakedir, Some(PortLabel::new(4)));
    }

    #[test]
    fn border_prefers_the_provider_edge_then_smallest_label() {
        let mut view = empty_view(ParticleState::Root);
        view.head[2] = PortView::Occupied(NeighborInfo {
            border_left_flag: true,
            ..neighbor(ParticleState::Retired)
        });
        view.head[4] = PortView::Occupied(NeighborInfo {
            border_right_flag: true,
            ..retired_with_snakedir()
        });
        // Provider sits on port 4 and carries a border: it wins.
        assert_eq!(border(&view), Some(BorderType::Right));
        // Without a provider edge flag, the smallest label wins.
        let mut view = empty_view(ParticleState::Root);
        view.head[2] = PortView::Occupied(NeighborInfo {
            border_left_flag: true,
            ..neighbor(ParticleState::Retired)
        });
        view.head[4] = PortView::Occupied(NeighborInfo {
            border_right_flag: true,
            ..neighbor(ParticleState::Retired)
        });
        assert_eq!(border(&view), Some(BorderType::Left));
        assert_eq!(border(&empty_view(ParticleState::Root)), None);
    }

    #[test]
    fn retired_particles_do_nothing() {
        let view = empty_view(ParticleState::Retired);
        assert_eq!(activate(&view, &HexRule).unwrap(), Action::NoOp);
    }

    mod consistency {
        use super::*;
        use proptest::prelude::*;

        fn decode_port(bits: u8) -> PortView {
            let state = match bits & 0b111 {
                0 | 1 | 2 => return PortView::Empty,
                3 => ParticleState::Inactive,
                4 => ParticleState::Follower,
                5 => ParticleState::Root,
                _ => ParticleState::Retired,
            };
            PortView::Occupied(NeighborInfo {
                state,
                expanded: bits & 0b1000 != 0 && state != ParticleState::Retired,
                at_head: bits & 0b1_0000 != 0,
                parent_flag: bits & 0b10_0000 != 0 && state == ParticleState::Follower,
                snakedir_flag: bits & 0b100_0000 != 0 && state == ParticleState::Retired,
                border_left_flag: bits & 0b1000_0000 != 0 && state == ParticleState::Retired,
                border_right_flag: bits & 0b100_0000 != 0
                    && bits & 0b1000_0000 == 0
                    && state == ParticleState::Retired,
            })
        }

        fn decode_view(
            state: ParticleState,
            expanded: bool,
            parent: u8,
            head_bits: [u8; 6],
            tail_bits: [u8; 6],
        ) -> NeighborView {
            NeighborView {
                state,
                expanded,
                parent_port: (state == ParticleState::Follower)
                    .then_some(PortLabel::new(parent)),
                head: head_bits.map(decode_port),
                tail: expanded.then(|| tail_bits.map(decode_port)),
            }
        }

        fn port_view(view: &NeighborView, role_tail: bool, l: PortLabel) -> &PortView {
            if role_tail {
                &view.tail.as_ref().unwrap()[l.index() as usize]
            } else {
                &view.head[l.index() as usize]
            }
        }

        /// One activation never panics on a well-formed view, and whatever
        /// it returns respects the state machine and the preconditions of
        /// the chosen movement.
        fn check(view: &NeighborView, rule: &dyn SnakeRule) {
            let Ok(action) = activate(view, rule) else {
                // Degenerate root neighborhoods are reported, not acted on.
                assert_eq!(view.state, ParticleState::Root);
                return;
            };
            match view.state {
                ParticleState::Retired => assert_eq!(action, Action::NoOp),
                ParticleState::Inactive => match action {
                    Action::NoOp | Action::BecomeRoot => {}
                    Action::BecomeFollower { port } => {
                        let n = port_view(view, false, port).neighbor().unwrap();
                        assert!(n.state.is_active());
                    }
                    other => panic!("inactive emitted {other:?}"),
                },
                ParticleState::Follower => match action {
                    Action::NoOp => {}
                    Action::BecomeRoot => assert!(!view.expanded),
                    Action::HandoverPush { port } => {
                        assert!(!view.expanded);
                        assert_eq!(Some(port), view.parent_port);
                        let n = port_view(view, false, port).neighbor().unwrap();
                        assert!(n.expanded && !n.at_head);
                    }
                    Action::HandoverPull { tail_port } => {
                        let n = port_view(view, true, tail_port).neighbor().unwrap();
                        assert!(n.state == ParticleState::Follower && n.parent_flag && !n.expanded);
                    }
                    Action::Contract => assert!(view.expanded),
                    other => panic!("follower emitted {other:?}"),
                },
                ParticleState::Root => match action {
                    Action::NoOp => {}
                    Action::Retire { .. } => assert!(!view.expanded),
                    Action::Expand { label } => {
                        assert!(!view.expanded);
                        assert!(matches!(view.head[label.index() as usize], PortView::Empty));
                    }
                    Action::HandoverPull { tail_port } => {
                        let n = port_view(view, true, tail_port).neighbor().unwrap();
                        assert!(n.state == ParticleState::Follower && n.parent_flag && !n.expanded);
                    }
                    Action::Contract => assert!(view.expanded),
                    other => panic!("root emitted {other:?}"),
                },
            }
        }

        proptest! {
            #[test]
            fn activate_is_total_and_respects_preconditions(
                state_pick in 0u8..4,
                expanded in any::<bool>(),
                parent in 0u8..6,
                head_bits in any::<[u8; 6]>(),
                tail_bits in any::<[u8; 6]>(),
            ) {
                let state = match state_pick {
                    0 => ParticleState::Inactive,
                    1 => ParticleState::Follower,
                    2 => ParticleState::Root,
                    _ => ParticleState::Retired,
                };
                // Inactive and retired particles are always contracted.
                let expanded = expanded
                    && matches!(state, ParticleState::Follower | ParticleState::Root);
                let view = decode_view(state, expanded, parent, head_bits, tail_bits);
                check(&view, &HexRule);
                check(&view, &TriRule);
            }
        }
    }
}
