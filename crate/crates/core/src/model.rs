//! Particle and configuration state plus the atomic actions that mutate it:
//! expansion, contraction, the two handover variants, state transitions, and
//! retirement.
//!
//! This is the only layer that sees global coordinates. The decision logic
//! consumes [`NeighborView`]s produced by [`Configuration::observe`], which
//! expose exactly what the model grants a particle: its own state and flags,
//! and per-port observations of neighboring particles including the flags
//! they published on the shared edge. No coordinates, identifiers, or global
//! counts leak through a view.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{GlobalDir, Node, Offset, PortLabel};

/// Index of a particle within a [`Configuration`]. Bookkeeping identity only;
/// never visible to the decision logic.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ParticleId(pub usize);

impl std::fmt::Debug for ParticleId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "p{}", self.0)
    }
}

impl std::fmt::Display for ParticleId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// The four algorithm states. Transitions run one way:
/// Inactive → Follower → Root → Retired, with Inactive → Root allowed and
/// Retired absorbing.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub enum ParticleState {
    Inactive,
    Follower,
    Root,
    Retired,
}

impl ParticleState {
    /// Followers and roots are active; inactive and retired particles are not.
    pub fn is_active(self) -> bool {
        matches!(self, ParticleState::Follower | ParticleState::Root)
    }

    fn may_transition_to(self, next: ParticleState) -> bool {
        use ParticleState::*;
        matches!(
            (self, next),
            (Inactive, Follower) | (Inactive, Root) | (Follower, Root) | (Root, Retired)
        )
    }
}

impl std::fmt::Display for ParticleState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            ParticleState::Inactive => "inactive",
            ParticleState::Follower => "follower",
            ParticleState::Root => "root",
            ParticleState::Retired => "retired",
        };
        f.write_str(s)
    }
}

/// Shared-memory flags a particle may publish on one of its ports.
#[derive(Clone, Copy, PartialEq, Eq, Default, Debug, Serialize, Deserialize)]
pub struct EdgeFlags {
    /// Set by a follower on the edge toward its parent.
    pub parent: bool,
    /// Set at retirement: the edge toward the next position of the snake.
    pub snakedir: bool,
    /// Set at retirement (triangle rule): continuation of the left border.
    pub border_left: bool,
    /// Set at retirement (triangle rule): continuation of the right border.
    pub border_right: bool,
}

/// Flag writes performed in one retirement (or seed initialization), keyed by
/// local port label.
#[derive(Clone, Copy, PartialEq, Eq, Default, Debug)]
pub struct FlagAssignments {
    pub snakedir: Option<PortLabel>,
    pub border_left: Option<PortLabel>,
    pub border_right: Option<PortLabel>,
}

/// Whether a node is a particle's head or tail. A contracted particle's
/// single node counts as its head.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum NodeRole {
    Head,
    Tail,
}

/// One particle: state, label offset, occupied node(s), and its constant-size
/// per-port flag store.
///
/// Flags are keyed by local labels of the *head* node. Only two kinds of
/// writes occur: a follower's single parent flag (recomputed whenever the
/// follower moves) and the snake/border flags a particle writes at
/// retirement, after which it never moves again. So re-anchoring the store to
/// the head on movement never relocates a live flag.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Particle {
    pub state: ParticleState,
    pub offset: Offset,
    pub head: Node,
    pub tail: Node,
    pub is_seed: bool,
    flags: [EdgeFlags; 6],
}

impl Particle {
    fn new(state: ParticleState, offset: Offset, node: Node, is_seed: bool) -> Self {
        Particle {
            state,
            offset,
            head: node,
            tail: node,
            is_seed,
            flags: [EdgeFlags::default(); 6],
        }
    }

    pub fn is_expanded(&self) -> bool {
        self.head != self.tail
    }

    pub fn is_contracted(&self) -> bool {
        self.head == self.tail
    }

    /// Flags this particle published on head port `label`.
    pub fn flags_at(&self, label: PortLabel) -> EdgeFlags {
        self.flags[label.index() as usize]
    }

    /// The port carrying this particle's parent flag, if it is a follower.
    pub fn parent_port(&self) -> Option<PortLabel> {
        PortLabel::ALL
            .into_iter()
            .find(|l| self.flags[l.index() as usize].parent)
    }

    /// The global direction of the parent flag, if any.
    pub fn parent_dir(&self) -> Option<GlobalDir> {
        self.parent_port().map(|l| l.to_global(self.offset))
    }

    fn set_parent_port(&mut self, port: Option<PortLabel>) {
        for f in &mut self.flags {
            f.parent = false;
        }
        if let Some(l) = port {
            self.flags[l.index() as usize].parent = true;
        }
    }

    fn write_flags(&mut self, assignments: FlagAssignments) {
        if let Some(l) = assignments.snakedir {
            self.flags[l.index() as usize].snakedir = true;
        }
        if let Some(l) = assignments.border_left {
            self.flags[l.index() as usize].border_left = true;
        }
        if let Some(l) = assignments.border_right {
            self.flags[l.index() as usize].border_right = true;
        }
    }

    /// Global direction of this particle's snakedir flag, if set.
    pub fn snakedir_dir(&self) -> Option<GlobalDir> {
        PortLabel::ALL
            .into_iter()
            .find(|l| self.flags[l.index() as usize].snakedir)
            .map(|l| l.to_global(self.offset))
    }

    /// Global direction of a border flag, if set.
    pub fn border_dir(&self, left: bool) -> Option<GlobalDir> {
        PortLabel::ALL
            .into_iter()
            .find(|l| {
                let f = self.flags[l.index() as usize];
                if left {
                    f.border_left
                } else {
                    f.border_right
                }
            })
            .map(|l| l.to_global(self.offset))
    }
}

/// What a particle sees through one port.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum PortView {
    /// The adjacent node is unoccupied.
    Empty,
    /// The adjacent node is the other node of this same expanded particle.
    OwnBody,
    /// The adjacent node is occupied by another particle.
    Occupied(NeighborInfo),
}

impl PortView {
    pub fn neighbor(&self) -> Option<&NeighborInfo> {
        match self {
            PortView::Occupied(info) => Some(info),
            _ => None,
        }
    }
}

/// Observation of one neighboring particle across a shared edge.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct NeighborInfo {
    pub state: ParticleState,
    pub expanded: bool,
    /// True if the adjacent node is the neighbor's head.
    pub at_head: bool,
    /// True if the neighbor's parent flag sits on the shared edge, i.e. the
    /// neighbor is a follower pointing here.
    pub parent_flag: bool,
    /// Neighbor's snakedir flag on the shared edge.
    pub snakedir_flag: bool,
    /// Neighbor's border flags on the shared edge.
    pub border_left_flag: bool,
    pub border_right_flag: bool,
}

/// The complete local observation of one particle: its own externally
/// relevant state plus one [`PortView`] per port. Expanded particles see the
/// six ports of each occupied node (two of which are [`PortView::OwnBody`],
/// leaving the ten outward ports).
#[derive(Clone, Debug)]
pub struct NeighborView {
    pub state: ParticleState,
    pub expanded: bool,
    /// Own parent flag (a head port), if follower.
    pub parent_port: Option<PortLabel>,
    pub head: [PortView; 6],
    /// Ports of the tail node; `None` when contracted.
    pub tail: Option<[PortView; 6]>,
}

impl NeighborView {
    /// Iterates all outward port views (head then tail, label order).
    pub fn all_ports(&self) -> impl Iterator<Item = (NodeRole, PortLabel, &PortView)> {
        let head = PortLabel::ALL
            .iter()
            .map(move |&l| (NodeRole::Head, l, &self.head[l.index() as usize]));
        let tail = self.tail.iter().flat_map(|t| {
            PortLabel::ALL
                .iter()
                .map(move |&l| (NodeRole::Tail, l, &t[l.index() as usize]))
        });
        head.chain(tail)
    }

    /// True if some adjacent particle is in `state`.
    pub fn has_neighbor_in(&self, state: ParticleState) -> bool {
        self.all_ports()
            .any(|(_, _, p)| p.neighbor().is_some_and(|n| n.state == state))
    }
}

/// Occupancy map entry: which particle covers a node and with which of its
/// body nodes.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct Occupant {
    pub id: ParticleId,
    pub role: NodeRole,
}

/// Errors from constructing a configuration.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConfigError {
    #[error("duplicate node {0} in initial configuration")]
    DuplicateNode(Node),
    #[error("initial configuration is not connected")]
    NotConnected,
    #[error("initial configuration is empty")]
    Empty,
    #[error("seed index {0} out of range")]
    BadSeedIndex(usize),
    #[error("offset list length {got} does not match particle count {want}")]
    BadOffsets { got: usize, want: usize },
}

/// Errors from atomic actions. A `TargetOccupied` on expansion signals a
/// movement conflict; callers abort the movement and leave the configuration
/// unchanged.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum MoveError {
    #[error("expansion target {0} is occupied")]
    TargetOccupied(Node),
    #[error("particle {0} is already expanded")]
    AlreadyExpanded(ParticleId),
    #[error("particle {0} is not expanded")]
    NotExpanded(ParticleId),
    #[error("particle {0} is not adjacent to the partner's tail")]
    NotAdjacentToTail(ParticleId),
    #[error("handover requires one contracted and one expanded particle")]
    WrongShapes,
    #[error("retired particle {0} cannot move")]
    RetiredImmobile(ParticleId),
    #[error("illegal state transition {from} -> {to} for particle {id}")]
    InvalidTransition {
        id: ParticleId,
        from: ParticleState,
        to: ParticleState,
    },
    #[error("no eligible partner on the given port")]
    NoPartner,
}

/// The global state the scheduler mutates: every particle record plus the
/// node occupancy map, kept mutually consistent by the atomic actions, along
/// with the movement (work) counters.
#[derive(Clone, Debug)]
pub struct Configuration {
    particles: Vec<Particle>,
    occupancy: HashMap<Node, Occupant>,
    seed: ParticleId,
    work: u64,
    per_particle_work: Vec<u64>,
}

impl Configuration {
    /// Builds an initial configuration: all particles contracted, the seed
    /// retired with `seed_flags` preset, everyone else inactive.
    ///
    /// `nodes[i]` becomes particle `i`; the node set must be connected and
    /// duplicate free.
    pub fn new(
        nodes: &[Node],
        seed_index: usize,
        offsets: &[Offset],
        seed_flags: FlagAssignments,
    ) -> Result<Self, ConfigError> {
        if nodes.is_empty() {
            return Err(ConfigError::Empty);
        }
        if seed_index >= nodes.len() {
            return Err(ConfigError::BadSeedIndex(seed_index));
        }
        if offsets.len() != nodes.len() {
            return Err(ConfigError::BadOffsets {
                got: offsets.len(),
                want: nodes.len(),
            });
        }
        let mut occupancy = HashMap::with_capacity(nodes.len() * 2);
        let mut particles = Vec::with_capacity(nodes.len());
        for (i, &node) in nodes.iter().enumerate() {
            let id = ParticleId(i);
            if occupancy
                .insert(
                    node,
                    Occupant {
                        id,
                        role: NodeRole::Head,
                    },
                )
                .is_some()
            {
                return Err(ConfigError::DuplicateNode(node));
            }
            let is_seed = i == seed_index;
            let state = if is_seed {
                ParticleState::Retired
            } else {
                ParticleState::Inactive
            };
            let mut p = Particle::new(state, offsets[i], node, is_seed);
            if is_seed {
                p.write_flags(seed_flags);
            }
            particles.push(p);
        }
        let cfg = Configuration {
            per_particle_work: vec![0; particles.len()],
            particles,
            occupancy,
            seed: ParticleId(seed_index),
            work: 0,
        };
        if !cfg.is_connected() {
            return Err(ConfigError::NotConnected);
        }
        Ok(cfg)
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn seed_id(&self) -> ParticleId {
        self.seed
    }

    pub fn particle(&self, id: ParticleId) -> &Particle {
        &self.particles[id.0]
    }

    pub fn particles(&self) -> impl Iterator<Item = (ParticleId, &Particle)> {
        self.particles
            .iter()
            .enumerate()
            .map(|(i, p)| (ParticleId(i), p))
    }

    pub fn occupant(&self, node: Node) -> Option<Occupant> {
        self.occupancy.get(&node).copied()
    }

    /// All occupied nodes (unordered).
    pub fn occupied_nodes(&self) -> impl Iterator<Item = Node> + '_ {
        self.occupancy.keys().copied()
    }

    /// Total movements performed so far (one per expansion or contraction;
    /// a handover counts one movement for each involved particle).
    pub fn work(&self) -> u64 {
        self.work
    }

    pub fn particle_work(&self, id: ParticleId) -> u64 {
        self.per_particle_work[id.0]
    }

    pub fn max_particle_work(&self) -> u64 {
        self.per_particle_work.iter().copied().max().unwrap_or(0)
    }

    fn charge_movement(&mut self, id: ParticleId) {
        self.work += 1;
        self.per_particle_work[id.0] += 1;
    }

    /// True iff the occupied nodes induce a connected subgraph.
    pub fn is_connected(&self) -> bool {
        let Some(&start) = self.occupancy.keys().next() else {
            return true;
        };
        let mut seen = HashMap::with_capacity(self.occupancy.len());
        seen.insert(start, ());
        let mut stack = vec![start];
        while let Some(node) = stack.pop() {
            for nb in node.neighbors() {
                if self.occupancy.contains_key(&nb) && !seen.contains_key(&nb) {
                    seen.insert(nb, ());
                    stack.push(nb);
                }
            }
        }
        seen.len() == self.occupancy.len()
    }

    /// Ports of `id` whose shared edge carries a neighbor's parent flag, i.e.
    /// the followers treating `id` as their parent.
    pub fn children_of(&self, id: ParticleId) -> Vec<(NodeRole, PortLabel)> {
        let p = &self.particles[id.0];
        let mut out = Vec::new();
        for (role, node) in self.body_nodes(p) {
            for l in PortLabel::ALL {
                let target = node.neighbor(l.to_global(p.offset));
                if p.is_expanded() && (target == p.head || target == p.tail) {
                    continue;
                }
                if self.parent_flag_on_edge(target, node) {
                    out.push((role, l));
                }
            }
        }
        out
    }

    fn body_nodes(&self, p: &Particle) -> Vec<(NodeRole, Node)> {
        if p.is_expanded() {
            vec![(NodeRole::Head, p.head), (NodeRole::Tail, p.tail)]
        } else {
            vec![(NodeRole::Head, p.head)]
        }
    }

    /// True if the particle at `from` has its parent flag on the edge toward
    /// `to`.
    fn parent_flag_on_edge(&self, from: Node, to: Node) -> bool {
        let Some(occ) = self.occupancy.get(&from) else {
            return false;
        };
        // Parent flags live on head ports.
        if !matches!(occ.role, NodeRole::Head) {
            return false;
        }
        let q = &self.particles[occ.id.0];
        match q.parent_dir() {
            Some(dir) => from.neighbor(dir) == to,
            None => false,
        }
    }

    /// The complete local observation of `id`: deterministic, and free of
    /// coordinates and identities.
    pub fn observe(&self, id: ParticleId) -> NeighborView {
        let p = &self.particles[id.0];
        let head = self.ports_of(p, p.head);
        let tail = p.is_expanded().then(|| self.ports_of(p, p.tail));
        NeighborView {
            state: p.state,
            expanded: p.is_expanded(),
            parent_port: p.parent_port(),
            head,
            tail,
        }
    }

    fn ports_of(&self, p: &Particle, node: Node) -> [PortView; 6] {
        let mut views = [PortView::Empty; 6];
        for l in PortLabel::ALL {
            let target = node.neighbor(l.to_global(p.offset));
            views[l.index() as usize] = if p.is_expanded() && (target == p.head || target == p.tail)
            {
                PortView::OwnBody
            } else {
                match self.occupancy.get(&target) {
                    None => PortView::Empty,
                    Some(occ) => PortView::Occupied(self.neighbor_info(*occ, target, node)),
                }
            };
        }
        views
    }

    fn neighbor_info(&self, occ: Occupant, at: Node, toward: Node) -> NeighborInfo {
        let q = &self.particles[occ.id.0];
        let at_head = matches!(occ.role, NodeRole::Head);
        // Shared-edge flags: published on the neighbor's head ports only.
        let flags = if at_head {
            let dir = at
                .direction_to(toward)
                .expect("occupancy neighbors must be adjacent");
            q.flags_at(dir.to_local(q.offset))
        } else {
            EdgeFlags::default()
        };
        NeighborInfo {
            state: q.state,
            expanded: q.is_expanded(),
            at_head,
            parent_flag: flags.parent,
            snakedir_flag: flags.snakedir,
            border_left_flag: flags.border_left,
            border_right_flag: flags.border_right,
        }
    }

    // ----- atomic actions -----

    /// Expands contracted `id` through head port `label` into an unoccupied
    /// adjacent node, which becomes the new head.
    pub fn expand(&mut self, id: ParticleId, label: PortLabel) -> Result<(), MoveError> {
        let p = &self.particles[id.0];
        if p.state == ParticleState::Retired {
            return Err(MoveError::RetiredImmobile(id));
        }
        if p.is_expanded() {
            return Err(MoveError::AlreadyExpanded(id));
        }
        let target = p.head.neighbor(label.to_global(p.offset));
        if self.occupancy.contains_key(&target) {
            return Err(MoveError::TargetOccupied(target));
        }
        let p = &mut self.particles[id.0];
        p.tail = p.head;
        p.head = target;
        self.occupancy.insert(
            target,
            Occupant {
                id,
                role: NodeRole::Head,
            },
        );
        self.occupancy.insert(
            p.tail,
            Occupant {
                id,
                role: NodeRole::Tail,
            },
        );
        self.charge_movement(id);
        Ok(())
    }

    /// Contracts expanded `id` out of its tail; the head node is retained.
    pub fn contract(&mut self, id: ParticleId) -> Result<(), MoveError> {
        let p = &self.particles[id.0];
        if p.state == ParticleState::Retired {
            return Err(MoveError::RetiredImmobile(id));
        }
        if p.is_contracted() {
            return Err(MoveError::NotExpanded(id));
        }
        let tail = p.tail;
        self.occupancy.remove(&tail);
        let p = &mut self.particles[id.0];
        p.tail = p.head;
        self.charge_movement(id);
        Ok(())
    }

    /// Handover initiated by contracted `id` pushing the expanded particle
    /// whose tail sits across head port `port`: atomically, the partner
    /// contracts out of that tail and `id` expands into it.
    ///
    /// Returns the partner's id.
    pub fn handover_push(
        &mut self,
        id: ParticleId,
        port: PortLabel,
    ) -> Result<ParticleId, MoveError> {
        let p = &self.particles[id.0];
        if p.state == ParticleState::Retired {
            return Err(MoveError::RetiredImmobile(id));
        }
        if p.is_expanded() {
            return Err(MoveError::WrongShapes);
        }
        let target = p.head.neighbor(port.to_global(p.offset));
        let occ = self.occupancy.get(&target).ok_or(MoveError::NoPartner)?;
        let partner = occ.id;
        if !matches!(occ.role, NodeRole::Tail) {
            return Err(MoveError::NotAdjacentToTail(id));
        }
        let q = &self.particles[partner.0];
        if q.state == ParticleState::Retired {
            return Err(MoveError::RetiredImmobile(partner));
        }
        debug_assert!(q.is_expanded());
        // Partner contracts out of its tail; pusher expands into it.
        let qp = &mut self.particles[partner.0];
        qp.tail = qp.head;
        let pp = &mut self.particles[id.0];
        pp.tail = pp.head;
        pp.head = target;
        self.occupancy.insert(
            target,
            Occupant {
                id,
                role: NodeRole::Head,
            },
        );
        self.occupancy.insert(
            self.particles[id.0].tail,
            Occupant {
                id,
                role: NodeRole::Tail,
            },
        );
        self.charge_movement(id);
        self.charge_movement(partner);
        self.reanchor_parent_after_handover(id, partner);
        Ok(partner)
    }

    /// Handover initiated by expanded `id` pulling the contracted particle
    /// across tail port `tail_port`: atomically, the partner expands into
    /// `id`'s tail and `id` contracts to its head.
    ///
    /// Returns the partner's id.
    pub fn handover_pull(
        &mut self,
        id: ParticleId,
        tail_port: PortLabel,
    ) -> Result<ParticleId, MoveError> {
        let p = &self.particles[id.0];
        if p.state == ParticleState::Retired {
            return Err(MoveError::RetiredImmobile(id));
        }
        if p.is_contracted() {
            return Err(MoveError::WrongShapes);
        }
        let vacated = p.tail;
        let partner_node = vacated.neighbor(tail_port.to_global(p.offset));
        if partner_node == p.head {
            return Err(MoveError::NoPartner);
        }
        let occ = self
            .occupancy
            .get(&partner_node)
            .ok_or(MoveError::NoPartner)?;
        let partner = occ.id;
        let q = &self.particles[partner.0];
        if q.state == ParticleState::Retired {
            return Err(MoveError::RetiredImmobile(partner));
        }
        if q.is_expanded() {
            return Err(MoveError::WrongShapes);
        }
        // Puller contracts to its head; partner expands into the vacated tail.
        let pp = &mut self.particles[id.0];
        pp.tail = pp.head;
        let qp = &mut self.particles[partner.0];
        qp.tail = qp.head;
        qp.head = vacated;
        self.occupancy.insert(
            vacated,
            Occupant {
                id: partner,
                role: NodeRole::Head,
            },
        );
        self.occupancy.insert(
            self.particles[partner.0].tail,
            Occupant {
                id: partner,
                role: NodeRole::Tail,
            },
        );
        self.charge_movement(id);
        self.charge_movement(partner);
        self.reanchor_parent_after_handover(partner, id);
        Ok(partner)
    }

    /// After a handover, the follower that moved re-points its parent flag at
    /// the particle it handed over with: the first head port (clockwise from
    /// label 0) adjacent to that particle.
    fn reanchor_parent_after_handover(&mut self, moved: ParticleId, other: ParticleId) {
        if self.particles[moved.0].state != ParticleState::Follower {
            return;
        }
        let head = self.particles[moved.0].head;
        let offset = self.particles[moved.0].offset;
        let port = PortLabel::ALL.into_iter().find(|l| {
            let target = head.neighbor(l.to_global(offset));
            self.occupancy.get(&target).is_some_and(|o| o.id == other)
        });
        debug_assert!(port.is_some(), "handover partner must stay adjacent");
        self.particles[moved.0].set_parent_port(port);
    }

    /// Inactive `id` joins the spanning forest: sets its parent flag on
    /// `port` and becomes a follower. The port must face an active particle.
    pub fn become_follower(&mut self, id: ParticleId, port: PortLabel) -> Result<(), MoveError> {
        self.check_transition(id, ParticleState::Follower)?;
        let p = &self.particles[id.0];
        let target = p.head.neighbor(port.to_global(p.offset));
        let ok = self
            .occupancy
            .get(&target)
            .is_some_and(|o| self.particles[o.id.0].state.is_active());
        if !ok {
            return Err(MoveError::NoPartner);
        }
        let p = &mut self.particles[id.0];
        p.state = ParticleState::Follower;
        p.set_parent_port(Some(port));
        Ok(())
    }

    /// Promotes `id` (inactive or follower) to root, clearing any parent flag.
    pub fn become_root(&mut self, id: ParticleId) -> Result<(), MoveError> {
        self.check_transition(id, ParticleState::Root)?;
        let p = &mut self.particles[id.0];
        p.state = ParticleState::Root;
        p.set_parent_port(None);
        Ok(())
    }

    /// Retires contracted root `id`, writing `flags` in the same atomic
    /// action, and promotes the immediate dependents of the new retired node:
    /// followers whose parent flag points at it and inactive neighbors. Both
    /// would take exactly that transition at their next activation; folding
    /// the promotions into the retirement keeps every intermediate
    /// configuration free of dangling parent pointers and stranded inactives.
    ///
    /// Returns the promoted particles in port order.
    pub fn retire(
        &mut self,
        id: ParticleId,
        flags: FlagAssignments,
    ) -> Result<Vec<ParticleId>, MoveError> {
        self.check_transition(id, ParticleState::Retired)?;
        debug_assert!(self.particles[id.0].is_contracted());
        let node = self.particles[id.0].head;
        {
            let p = &mut self.particles[id.0];
            p.state = ParticleState::Retired;
            p.write_flags(flags);
        }
        let mut promoted = Vec::new();
        for nb in node.neighbors() {
            let Some(occ) = self.occupancy.get(&nb).copied() else {
                continue;
            };
            let q = &self.particles[occ.id.0];
            let adopt = match q.state {
                ParticleState::Inactive => true,
                ParticleState::Follower => self.parent_flag_on_edge_of(occ.id, node),
                _ => false,
            };
            if adopt && !promoted.contains(&occ.id) {
                let q = &mut self.particles[occ.id.0];
                q.state = ParticleState::Root;
                q.set_parent_port(None);
                promoted.push(occ.id);
            }
        }
        Ok(promoted)
    }

    fn parent_flag_on_edge_of(&self, id: ParticleId, target: Node) -> bool {
        let q = &self.particles[id.0];
        q.parent_dir()
            .is_some_and(|dir| q.head.neighbor(dir) == target)
    }

    fn check_transition(&self, id: ParticleId, to: ParticleState) -> Result<(), MoveError> {
        let from = self.particles[id.0].state;
        if from.may_transition_to(to) {
            Ok(())
        } else {
            Err(MoveError::InvalidTransition { id, from, to })
        }
    }

    /// Test and fault-injection hook: direct mutable particle access.
    /// Bypasses all safety rules; the scheduler never calls this.
    pub fn particle_mut_unchecked(&mut self, id: ParticleId) -> &mut Particle {
        &mut self.particles[id.0]
    }

    /// Fault-injection hook: overwrite a particle's parent flag without any
    /// legality checks, for exercising the runtime checkers.
    pub fn set_parent_flag_unchecked(&mut self, id: ParticleId, port: Option<PortLabel>) {
        self.particles[id.0].set_parent_port(port);
    }

    /// Fault-injection hook: relocate a contracted particle without any
    /// legality checks, for exercising the runtime checkers.
    pub fn teleport_unchecked(&mut self, id: ParticleId, to: Node) {
        let p = &mut self.particles[id.0];
        assert!(p.is_contracted());
        let from = p.head;
        p.head = to;
        p.tail = to;
        self.occupancy.remove(&from);
        self.occupancy.insert(
            to,
            Occupant {
                id,
                role: NodeRole::Head,
            },
        );
    }
}
