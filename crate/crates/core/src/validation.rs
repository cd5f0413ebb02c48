//! Executable oracles for the guarantees the algorithms are supposed to
//! uphold: per-step safety checkers (occupancy, connectivity, the
//! forest structure over parent pointers, parent liveness), terminal shape
//! validators for the hexagon and triangle, and the closed-form work lower
//! bounds for line starts. Everything here is a pure function of a
//! configuration snapshot, with integer arithmetic throughout.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{ring_nodes, GlobalDir, Node};
use crate::model::{Configuration, NodeRole, ParticleState};

/// Runtime checkers that can be evaluated after every atomic action.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Checker {
    Occupancy,
    Connectivity,
    Forest,
    FollowerParent,
}

impl Checker {
    pub const ALL: &'static [Checker] = &[
        Checker::Occupancy,
        Checker::Connectivity,
        Checker::Forest,
        Checker::FollowerParent,
    ];
}

impl std::fmt::Display for Checker {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Checker::Occupancy => "occupancy",
            Checker::Connectivity => "connectivity",
            Checker::Forest => "forest",
            Checker::FollowerParent => "follower-parent",
        };
        f.write_str(s)
    }
}

/// Evaluates one checker; `Err` carries a human-readable reason.
pub fn check(checker: Checker, cfg: &Configuration) -> Result<(), String> {
    match checker {
        Checker::Occupancy => occupancy_check(cfg),
        Checker::Connectivity => {
            if cfg.is_connected() {
                Ok(())
            } else {
                Err("occupied nodes are disconnected".into())
            }
        }
        Checker::Forest => {
            if forest_check(cfg) {
                Ok(())
            } else {
                Err("parent/expansion graph is not a forest with reachable inactives".into())
            }
        }
        Checker::FollowerParent => {
            if follower_parent_check(cfg) {
                Ok(())
            } else {
                Err("a follower's parent edge does not touch an active particle".into())
            }
        }
    }
}

/// Mutual consistency of particle records and the occupancy map: every body
/// node maps back to its particle with the right role, expanded particles
/// occupy adjacent pairs, and nothing else occupies anything.
pub fn occupancy_check(cfg: &Configuration) -> Result<(), String> {
    let mut expected = 0usize;
    for (id, p) in cfg.particles() {
        if p.is_expanded() && p.head.distance(p.tail) != 1 {
            return Err(format!("particle {id} occupies non-adjacent nodes"));
        }
        let nodes: &[(Node, NodeRole)] = if p.is_expanded() {
            &[(p.head, NodeRole::Head), (p.tail, NodeRole::Tail)]
        } else {
            &[(p.head, NodeRole::Head)]
        };
        expected += nodes.len();
        for &(node, role) in nodes {
            match cfg.occupant(node) {
                Some(occ) if occ.id == id && occ.role == role => {}
                other => {
                    return Err(format!(
                        "particle {id} record at {node} disagrees with occupancy {other:?}"
                    ))
                }
            }
        }
    }
    let actual = cfg.occupied_nodes().count();
    if actual != expected {
        return Err(format!(
            "occupancy holds {actual} nodes, particle records cover {expected}"
        ));
    }
    Ok(())
}

/// The directed graph over occupied nodes with a tail→head edge per expanded
/// particle and a head→parent edge per follower.
#[derive(Debug, Default)]
pub struct ForestGraph {
    /// Out-edges; each occupied node has at most one.
    edges: HashMap<Node, Node>,
    nodes: Vec<Node>,
}

impl ForestGraph {
    pub fn from_configuration(cfg: &Configuration) -> Self {
        let mut edges = HashMap::new();
        let mut nodes = Vec::new();
        for (_, p) in cfg.particles() {
            nodes.push(p.head);
            if p.is_expanded() {
                nodes.push(p.tail);
                edges.insert(p.tail, p.head);
            }
            if p.state == ParticleState::Follower {
                if let Some(dir) = p.parent_dir() {
                    edges.insert(p.head, p.head.neighbor(dir));
                }
            }
        }
        ForestGraph { edges, nodes }
    }

    /// True iff the graph contains no directed cycle. Every node has at most
    /// one out-edge, so chasing pointers with a visited set suffices.
    pub fn is_acyclic(&self) -> bool {
        let mut done: HashSet<Node> = HashSet::new();
        for &start in &self.nodes {
            if done.contains(&start) {
                continue;
            }
            let mut path = Vec::new();
            let mut on_path: HashSet<Node> = HashSet::new();
            let mut current = start;
            loop {
                if on_path.contains(&current) {
                    return false;
                }
                if done.contains(&current) {
                    break;
                }
                on_path.insert(current);
                path.push(current);
                match self.edges.get(&current) {
                    Some(&next) => current = next,
                    None => break,
                }
            }
            done.extend(path);
        }
        true
    }
}

/// The forest property: the tail→head / head→parent graph is acyclic, and —
/// while at least one active particle exists — every connected component of
/// inactive particles can make progress, i.e. contains a particle adjacent
/// to an active or retired particle (either neighbor lets an inactive
/// particle leave the inactive state at its next activation).
pub fn forest_check(cfg: &Configuration) -> bool {
    if !ForestGraph::from_configuration(cfg).is_acyclic() {
        return false;
    }
    let any_active = cfg.particles().any(|(_, p)| p.state.is_active());
    if !any_active {
        return true;
    }
    // Components over inactive-occupied nodes only.
    let inactive: HashSet<Node> = cfg
        .particles()
        .filter(|(_, p)| p.state == ParticleState::Inactive)
        .map(|(_, p)| p.head)
        .collect();
    let mut unvisited = inactive.clone();
    while let Some(&start) = unvisited.iter().next() {
        let mut component = vec![start];
        unvisited.remove(&start);
        let mut stack = vec![start];
        while let Some(node) = stack.pop() {
            for nb in node.neighbors() {
                if unvisited.remove(&nb) {
                    component.push(nb);
                    stack.push(nb);
                }
            }
        }
        let can_progress = component.iter().any(|node| {
            node.neighbors().iter().any(|nb| {
                cfg.occupant(*nb)
                    .is_some_and(|occ| cfg.particle(occ.id).state != ParticleState::Inactive)
            })
        });
        if !can_progress {
            return false;
        }
    }
    true
}

/// Parent liveness: every follower's parent edge ends at a node occupied by
/// a follower or root.
pub fn follower_parent_check(cfg: &Configuration) -> bool {
    cfg.particles()
        .filter(|(_, p)| p.state == ParticleState::Follower)
        .all(|(_, p)| {
            let Some(dir) = p.parent_dir() else {
                return false;
            };
            cfg.occupant(p.head.neighbor(dir))
                .is_some_and(|occ| cfg.particle(occ.id).state.is_active())
        })
}

/// Verdict of a terminal shape validation.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ShapeReport {
    pub valid: bool,
    /// Hexagon radius `r` or triangle side `s` of the complete part.
    pub radius_or_side: i64,
    pub complete_layers: i64,
    pub partial_layer_size: i64,
    /// Empty iff `valid`.
    pub failure_reason: String,
}

impl ShapeReport {
    fn ok(radius_or_side: i64, complete_layers: i64, partial_layer_size: i64) -> Self {
        ShapeReport {
            valid: true,
            radius_or_side,
            complete_layers,
            partial_layer_size,
            failure_reason: String::new(),
        }
    }

    fn fail(reason: impl Into<String>) -> Self {
        ShapeReport {
            valid: false,
            radius_or_side: -1,
            complete_layers: -1,
            partial_layer_size: -1,
            failure_reason: reason.into(),
        }
    }
}

/// Shape validation preconditions.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum ValidationError {
    #[error("run not terminated: particle {0} is still {1}")]
    NotTerminated(usize, ParticleState),
}

fn require_terminated(cfg: &Configuration) -> Result<(), ValidationError> {
    for (id, p) in cfg.particles() {
        if p.state != ParticleState::Retired || p.is_expanded() {
            return Err(ValidationError::NotTerminated(id.0, p.state));
        }
    }
    Ok(())
}

/// Validates a terminated configuration as a hexagon around the seed: every
/// node within some radius `r` occupied, and the remaining particles forming
/// one contiguous arc of the next ring.
pub fn validate_hexagon(cfg: &Configuration) -> Result<ShapeReport, ValidationError> {
    require_terminated(cfg)?;
    let center = cfg.particle(cfg.seed_id()).head;
    let occupied: HashSet<Node> = cfg.occupied_nodes().collect();
    let n = occupied.len() as i64;

    // Largest fully occupied disk.
    let mut r: u32 = 0;
    loop {
        let ring = ring_nodes(center, r + 1);
        if ring.iter().all(|node| occupied.contains(node)) {
            r += 1;
        } else {
            break;
        }
    }
    let disk_size = 1 + 3 * (r as i64) * (r as i64 + 1);
    let partial = n - disk_size;
    if partial == 0 {
        return Ok(ShapeReport::ok(r as i64, r as i64, 0));
    }

    // Everything beyond the disk must sit on ring r+1 as one contiguous arc.
    let ring = ring_nodes(center, r + 1);
    let on_ring: Vec<bool> = ring.iter().map(|node| occupied.contains(node)).collect();
    let on_ring_count = on_ring.iter().filter(|&&b| b).count() as i64;
    if on_ring_count != partial {
        return Ok(ShapeReport::fail(format!(
            "{} particles outside the radius-{} disk but only {} on ring {}",
            partial,
            r,
            on_ring_count,
            r + 1
        )));
    }
    let arcs = (0..on_ring.len())
        .filter(|&i| !on_ring[i] && on_ring[(i + 1) % on_ring.len()])
        .count();
    if arcs != 1 {
        return Ok(ShapeReport::fail(format!(
            "outer layer splits into {arcs} arcs"
        )));
    }
    Ok(ShapeReport::ok(r as i64, r as i64, partial))
}

/// Validates a terminated configuration as a triangle anchored at the seed
/// corner between its two flagged border directions: rows `1..=s` complete
/// (row `k` holding `k` nodes) plus one contiguous partial row attached to
/// either border.
pub fn validate_triangle(cfg: &Configuration) -> Result<ShapeReport, ValidationError> {
    require_terminated(cfg)?;
    let seed = cfg.particle(cfg.seed_id());
    let corner = seed.head;
    let (Some(left), Some(right)) = (seed.border_dir(true), seed.border_dir(false)) else {
        return Ok(ShapeReport::fail("seed borders are not flagged"));
    };
    if left.next_clockwise() != right {
        return Ok(ShapeReport::fail("seed border directions are not adjacent"));
    }

    // Integer coordinates in the (left, right) basis; adjacent directions
    // span a unimodular lattice basis, so the solve is exact.
    let coords = match triangle_coords(
        &cfg.occupied_nodes().collect::<Vec<_>>(),
        corner,
        left,
        right,
    ) {
        Ok(c) => c,
        Err(reason) => return Ok(ShapeReport::fail(reason)),
    };
    let n = coords.len() as i64;
    let cells: HashSet<(i64, i64)> = coords.into_iter().collect();

    // Longest complete row prefix.
    let mut s: i64 = 0;
    loop {
        let row = s; // row index s+1 has nodes with a+b == s
        let complete = (0..=row).all(|a| cells.contains(&(a, row - a)));
        if complete {
            s += 1;
        } else {
            break;
        }
    }
    let full_count = s * (s + 1) / 2;
    let partial = n - full_count;
    if partial == 0 {
        return Ok(ShapeReport::ok(s, s, 0));
    }
    let row: Vec<bool> = (0..=s).map(|a| cells.contains(&(a, s - a))).collect();
    let in_row = row.iter().filter(|&&b| b).count() as i64;
    if in_row != partial {
        return Ok(ShapeReport::fail(format!(
            "{partial} particles beyond {s} complete rows but only {in_row} on the next row"
        )));
    }
    let m = partial as usize;
    let left_anchored = (0..m).all(|t| row[s as usize - t]); // contains (s, 0)
    let right_anchored = (0..m).all(|t| row[t]); // contains (0, s)
    if !(left_anchored || right_anchored) {
        return Ok(ShapeReport::fail(
            "partial row is not contiguous from a border",
        ));
    }
    Ok(ShapeReport::ok(s, s, partial))
}

/// Solves `v - corner = a*left + b*right` per node; fails on any node with
/// negative coordinates (outside the wedge).
fn triangle_coords(
    nodes: &[Node],
    corner: Node,
    left: GlobalDir,
    right: GlobalDir,
) -> Result<Vec<(i64, i64)>, String> {
    let (lq, lr) = left.vector();
    let (rq, rr) = right.vector();
    let det = (lq * rr - lr * rq) as i64;
    debug_assert!(det == 1 || det == -1);
    let mut out = Vec::with_capacity(nodes.len());
    for &node in nodes {
        let dq = (node.q - corner.q) as i64;
        let dr = (node.r - corner.r) as i64;
        let a = (dq * rr as i64 - dr * rq as i64) / det;
        let b = (lq as i64 * dr - lr as i64 * dq) / det;
        if a < 0 || b < 0 {
            return Err(format!("node {node} lies outside the border wedge"));
        }
        out.push((a, b));
    }
    Ok(out)
}

/// Minimum movements any algorithm needs to solve the hexagon problem from a
/// line of `n` particles: `2 * Σ_{i=2}^{n-1} (i - 1 - ⌈(i-1)/6⌉)`.
pub fn hex_lower_bound(n: u64) -> u64 {
    let mut sum = 0;
    for i in 2..n {
        sum += (i - 1) - (i - 1).div_ceil(6);
    }
    2 * sum
}

/// Minimum movements any algorithm needs to solve the triangle problem from
/// a line of `n` particles: `2 * Σ_{i=1}^{n-1} (i - 1 - ⌈(i-1)/2⌉)`.
pub fn tri_lower_bound(n: u64) -> u64 {
    let mut sum = 0;
    for i in 1..n {
        sum += (i - 1) - (i - 1).div_ceil(2);
    }
    2 * sum
}
