//! Geometry of the infinite regular triangular grid.
//!
//! Nodes are addressed with axial integer coordinates `(q, r)`. The six edge
//! directions are indexed `0..5` in clockwise order with a fixed basis, so
//! direction `d` and `(d + 3) % 6` are opposite and consecutive indices are
//! 60° apart. Particles label their own ports `0..5` clockwise as well, but
//! with a private rotation offset; [`PortLabel::to_global`] and
//! [`GlobalDir::to_local`] convert between the two frames.

use serde::{Deserialize, Serialize};

/// Axial direction vectors, clockwise: index `d` maps to `DIR_VECTORS[d]`.
const DIR_VECTORS: [(i32, i32); 6] = [(1, 0), (0, 1), (-1, 1), (-1, 0), (0, -1), (1, -1)];

/// A lattice position on the infinite triangular grid.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Node {
    pub q: i32,
    pub r: i32,
}

impl Node {
    pub const ORIGIN: Node = Node { q: 0, r: 0 };

    pub const fn new(q: i32, r: i32) -> Self {
        Node { q, r }
    }

    /// The unique adjacent node in direction `d`.
    pub fn neighbor(self, d: GlobalDir) -> Node {
        let (dq, dr) = DIR_VECTORS[d.index() as usize];
        Node::new(self.q + dq, self.r + dr)
    }

    /// All six neighbors, in clockwise direction order.
    pub fn neighbors(self) -> [Node; 6] {
        GlobalDir::ALL.map(|d| self.neighbor(d))
    }

    /// Graph distance to `other`.
    ///
    /// Closed form `(|dq| + |dr| + |dq + dr|) / 2`; agrees with BFS on the
    /// lattice (checked in tests).
    pub fn distance(self, other: Node) -> u32 {
        let dq = self.q - other.q;
        let dr = self.r - other.r;
        ((dq.abs() + dr.abs() + (dq + dr).abs()) / 2) as u32
    }

    /// Direction from `self` to an adjacent node, if they are neighbors.
    pub fn direction_to(self, other: Node) -> Option<GlobalDir> {
        let (dq, dr) = (other.q - self.q, other.r - self.r);
        DIR_VECTORS
            .iter()
            .position(|&v| v == (dq, dr))
            .map(|i| GlobalDir::new(i as u8))
    }

    pub fn translate(self, dq: i32, dr: i32) -> Node {
        Node::new(self.q + dq, self.r + dr)
    }
}

impl std::fmt::Debug for Node {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{})", self.q, self.r)
    }
}

impl std::fmt::Display for Node {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{})", self.q, self.r)
    }
}

/// One of the six global edge directions, ordered clockwise.
///
/// The ordering is a shared chirality: every particle sees the same sense of
/// clockwise, whatever its label offset.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GlobalDir(u8);

impl GlobalDir {
    pub const ALL: [GlobalDir; 6] = [
        GlobalDir(0),
        GlobalDir(1),
        GlobalDir(2),
        GlobalDir(3),
        GlobalDir(4),
        GlobalDir(5),
    ];

    /// Wraps `index` into `0..5`.
    pub const fn new(index: u8) -> Self {
        GlobalDir(index % 6)
    }

    pub const fn index(self) -> u8 {
        self.0
    }

    /// The direction whose vector cancels this one: `(d + 3) % 6`.
    pub const fn opposite(self) -> GlobalDir {
        GlobalDir((self.0 + 3) % 6)
    }

    /// The next direction in clockwise order: `(d + 1) % 6`.
    pub const fn next_clockwise(self) -> GlobalDir {
        GlobalDir((self.0 + 1) % 6)
    }

    /// The port label this direction has for a particle with `offset`.
    pub const fn to_local(self, offset: Offset) -> PortLabel {
        PortLabel((self.0 + 6 - offset.0) % 6)
    }

    /// Axial vector of this direction.
    pub const fn vector(self) -> (i32, i32) {
        DIR_VECTORS[self.0 as usize]
    }
}

impl std::fmt::Debug for GlobalDir {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "d{}", self.0)
    }
}

/// A particle-local edge label in `0..5`, clockwise with the particle's offset.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PortLabel(u8);

impl PortLabel {
    pub const ALL: [PortLabel; 6] = [
        PortLabel(0),
        PortLabel(1),
        PortLabel(2),
        PortLabel(3),
        PortLabel(4),
        PortLabel(5),
    ];

    /// Wraps `label` into `0..5`.
    pub const fn new(label: u8) -> Self {
        PortLabel(label % 6)
    }

    pub const fn index(self) -> u8 {
        self.0
    }

    /// The label of the geometrically opposite edge: `(l + 3) % 6`.
    pub const fn opposite(self) -> PortLabel {
        PortLabel((self.0 + 3) % 6)
    }

    /// The next label in clockwise order: `(l + 1) % 6`.
    pub const fn next_clockwise(self) -> PortLabel {
        PortLabel((self.0 + 1) % 6)
    }

    /// Rotates the label clockwise by `steps`.
    pub const fn rotated(self, steps: u8) -> PortLabel {
        PortLabel((self.0 + steps % 6) % 6)
    }

    /// The global direction this label denotes for a particle with `offset`.
    pub const fn to_global(self, offset: Offset) -> GlobalDir {
        GlobalDir((self.0 + offset.0) % 6)
    }
}

impl std::fmt::Debug for PortLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "l{}", self.0)
    }
}

/// A particle's private rotation of its port labels, in `0..5`.
///
/// Label `l` of a particle with offset `o` denotes global direction
/// `(o + l) % 6`; the mapping is a bijection for every offset.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Offset(u8);

impl Offset {
    /// Wraps `offset` into `0..5`.
    pub const fn new(offset: u8) -> Self {
        Offset(offset % 6)
    }

    pub const fn index(self) -> u8 {
        self.0
    }
}

impl std::fmt::Debug for Offset {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "o{}", self.0)
    }
}

/// The `6k` nodes at distance exactly `k ≥ 1` from `center`, listed in one
/// clockwise traversal of the ring starting at `center + k·dir(0)`.
///
/// Each hexagon side from corner `d` to corner `d + 1` runs along direction
/// `d + 2`, so the walk takes `k` steps per side over six sides.
pub fn ring_nodes(center: Node, k: u32) -> Vec<Node> {
    assert!(k >= 1, "ring radius must be at least 1");
    let mut nodes = Vec::with_capacity(6 * k as usize);
    let mut current = center;
    for _ in 0..k {
        current = current.neighbor(GlobalDir::new(0));
    }
    for side in 0..6u8 {
        let step = GlobalDir::new(side + 2);
        for _ in 0..k {
            nodes.push(current);
            current = current.neighbor(step);
        }
    }
    nodes
}

/// All nodes at distance at most `k` from `center` (the radius-`k` disk).
pub fn disk_nodes(center: Node, k: u32) -> Vec<Node> {
    let mut nodes = vec![center];
    for ring in 1..=k {
        nodes.extend(ring_nodes(center, ring));
    }
    nodes
}
