//! Simulation and verification toolkit for shape formation in
//! self-organizing particle systems on the infinite triangular grid.
//!
//! Constant-memory particles occupy one or two adjacent lattice nodes, move
//! by expansions, contractions and handovers, and coordinate only through
//! per-edge shared flags. A spanning-forest rule set drives every particle
//! toward the structure growing around a seed, while a pluggable snake rule
//! decides where the structure accepts its next member; the hexagon and
//! triangle rules ship here. A deterministic asynchronous scheduler executes
//! runs, and the validation layer checks the safety invariants after every
//! atomic action plus the terminal shape and work bounds at the end.
//!
//! Crate layout follows the problem:
//!
//! * [`grid`] — triangular-lattice geometry and label arithmetic.
//! * [`model`] — particles, configurations, and the atomic actions.
//! * [`algorithms`] — the particle-local decision logic and snake rules.
//! * [`scheduler`] — fair asynchronous execution, rounds, traces.
//! * [`validation`] — runtime checkers, shape validators, work bounds.
//! * [`harness`] — generators, experiments, renderers, trace replay.

pub mod algorithms;
pub mod grid;
pub mod harness;
pub mod model;
pub mod scheduler;
pub mod validation;

pub use algorithms::{activate, root_direction, Action, BorderType, HexRule, SnakeRule, TriRule};
pub use grid::{ring_nodes, GlobalDir, Node, Offset, PortLabel};
pub use harness::{
    build_simulation, default_max_rounds, gen_line, gen_random_connected, Algorithm, Generator,
    InitialConfig,
};
pub use model::{
    Configuration, EdgeFlags, FlagAssignments, NeighborInfo, NeighborView, Particle, ParticleId,
    ParticleState, PortView,
};
pub use scheduler::{Event, EventKind, Policy, RunError, RunStats, Schedule, Simulation};
pub use validation::{
    follower_parent_check, forest_check, hex_lower_bound, tri_lower_bound, validate_hexagon,
    validate_triangle, Checker, ShapeReport,
};
