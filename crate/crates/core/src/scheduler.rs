//! Fair asynchronous execution: one particle is activated at a time, its
//! intended action is applied atomically, rounds and work are accounted, and
//! every event can be recorded for replay.
//!
//! A round is over once every live (non-retired) particle has been activated
//! at least once since the previous round boundary; activations whose action
//! is a no-op still count. The whole run is a deterministic function of the
//! initial configuration, the offsets, the policy, and the scheduler seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algorithms::{activate, Action, LogicError, SnakeRule};
use crate::grid::{Node, PortLabel};
use crate::model::{Configuration, MoveError, ParticleId, ParticleState};
use crate::validation::{self, Checker};

/// Activation orders. All three are fair: every live particle is activated
/// infinitely often in an unbounded run.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Policy {
    /// Each step activates a uniformly random live particle.
    UniformRandom,
    /// Fixed index order, skipping retired particles.
    RoundRobin,
    /// A stream of random permutations of the live particles; each
    /// permutation is consumed in full before the next is drawn.
    Adversarial,
}

impl std::fmt::Display for Policy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Policy::UniformRandom => "uniform",
            Policy::RoundRobin => "roundrobin",
            Policy::Adversarial => "adversarial",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for Policy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "uniform" => Ok(Policy::UniformRandom),
            "roundrobin" => Ok(Policy::RoundRobin),
            "adversarial" => Ok(Policy::Adversarial),
            other => Err(format!(
                "unknown policy '{other}' (uniform|roundrobin|adversarial)"
            )),
        }
    }
}

/// Activation policy plus its seed.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Schedule {
    pub policy: Policy,
    pub rng_seed: u64,
}

impl Schedule {
    pub fn new(policy: Policy, rng_seed: u64) -> Self {
        Schedule { policy, rng_seed }
    }
}

/// What happened in one atomic step.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum EventKind {
    BecameFollower {
        port: PortLabel,
        node: Node,
    },
    BecameRoot {
        node: Node,
    },
    Expanded {
        from: Node,
        to: Node,
    },
    Contracted {
        from: Node,
        to: Node,
    },
    /// Initiator expanded `from -> to`; the partner contracted out of `to`.
    HandoverPush {
        partner: ParticleId,
        from: Node,
        to: Node,
    },
    /// Initiator contracted to its head; the partner expanded into `node`.
    HandoverPull {
        partner: ParticleId,
        node: Node,
    },
    Retired {
        node: Node,
        adopted: Vec<ParticleId>,
    },
    NoOp,
    /// All particles are retired; nothing was mutated.
    Terminated,
}

impl EventKind {
    pub fn is_movement(&self) -> bool {
        matches!(
            self,
            EventKind::Expanded { .. }
                | EventKind::Contracted { .. }
                | EventKind::HandoverPush { .. }
                | EventKind::HandoverPull { .. }
        )
    }
}

/// One trace record: step index, round, acting particle, action, cumulative
/// work. Serializes to a stable single-line format.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Event {
    pub step: u64,
    pub round: u64,
    pub particle: Option<ParticleId>,
    pub kind: EventKind,
    pub work: u64,
}

impl std::fmt::Display for Event {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "step={} round={} particle=", self.step, self.round)?;
        match self.particle {
            Some(id) => write!(f, "{id}")?,
            None => write!(f, "-")?,
        }
        match &self.kind {
            EventKind::BecameFollower { port, node } => write!(
                f,
                " action=become-follower port={} node={node}",
                port.index()
            )?,
            EventKind::BecameRoot { node } => write!(f, " action=become-root node={node}")?,
            EventKind::Expanded { from, to } => write!(f, " action=expand from={from} to={to}")?,
            EventKind::Contracted { from, to } => {
                write!(f, " action=contract from={from} to={to}")?
            }
            EventKind::HandoverPush { partner, from, to } => write!(
                f,
                " action=handover-push partner={partner} from={from} to={to}"
            )?,
            EventKind::HandoverPull { partner, node } => {
                write!(f, " action=handover-pull partner={partner} node={node}")?
            }
            EventKind::Retired { node, adopted } => {
                write!(f, " action=retire node={node} adopted=[")?;
                for (i, id) in adopted.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{id}")?;
                }
                write!(f, "]")?
            }
            EventKind::NoOp => write!(f, " action=noop")?,
            EventKind::Terminated => write!(f, " action=terminated")?,
        }
        write!(f, " work={}", self.work)
    }
}

/// Aggregate counters for one run.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct RunStats {
    /// Total movements: expansions plus contractions (a handover adds two).
    pub movements: u64,
    pub rounds: u64,
    pub activations: u64,
    pub terminated: bool,
    /// Largest movement count any single particle performed.
    pub max_particle_movements: u64,
}

/// Failures of a run. Budget exhaustion carries the stats so callers can
/// distinguish a suspiciously long run from success.
#[derive(Debug, Error)]
pub enum RunError {
    #[error("round budget of {max_rounds} exhausted without termination")]
    BudgetExhausted {
        max_rounds: u64,
        stats: Box<RunStats>,
    },
    #[error("round budget must be positive")]
    ZeroBudget,
    #[error("invariant '{checker}' violated after step {step}: {detail}")]
    InvariantViolation {
        checker: Checker,
        step: u64,
        detail: String,
    },
    #[error("decision logic failed for particle {particle} at step {step}: {source}")]
    Logic {
        particle: ParticleId,
        step: u64,
        source: LogicError,
    },
    #[error("internal inconsistency applying an action at step {step}: {source}")]
    Internal { step: u64, source: MoveError },
    #[error("particle {0} is retired and cannot be activated")]
    NotLive(ParticleId),
}

/// One simulation: a configuration, a snake rule, an activation policy, and
/// the run bookkeeping. Single-threaded by construction; distinct
/// simulations are independent.
pub struct Simulation {
    cfg: Configuration,
    rule: Box<dyn SnakeRule>,
    policy: Policy,
    rng: ChaCha8Rng,
    live: Vec<ParticleId>,
    live_pos: Vec<Option<usize>>,
    /// Live particles not activated since the last round boundary.
    pending: Vec<bool>,
    pending_count: usize,
    rr_cursor: usize,
    permutation: Vec<ParticleId>,
    perm_cursor: usize,
    steps: u64,
    rounds: u64,
    activations: u64,
    terminated: bool,
    trace: Option<Vec<Event>>,
}

impl Simulation {
    pub fn new(cfg: Configuration, rule: Box<dyn SnakeRule>, schedule: Schedule) -> Self {
        let live: Vec<ParticleId> = cfg
            .particles()
            .filter(|(_, p)| p.state != ParticleState::Retired)
            .map(|(id, _)| id)
            .collect();
        let mut live_pos = vec![None; cfg.len()];
        for (pos, id) in live.iter().enumerate() {
            live_pos[id.0] = Some(pos);
        }
        let mut pending = vec![false; cfg.len()];
        for id in &live {
            pending[id.0] = true;
        }
        let pending_count = live.len();
        let terminated = live.is_empty();
        Simulation {
            cfg,
            rule,
            policy: schedule.policy,
            rng: ChaCha8Rng::seed_from_u64(schedule.rng_seed),
            live,
            live_pos,
            pending,
            pending_count,
            rr_cursor: 0,
            permutation: Vec::new(),
            perm_cursor: 0,
            steps: 0,
            rounds: 0,
            activations: 0,
            terminated,
            trace: None,
        }
    }

    /// Record every event for later replay or inspection.
    pub fn enable_trace(&mut self) {
        if self.trace.is_none() {
            self.trace = Some(Vec::new());
        }
    }

    pub fn trace(&self) -> Option<&[Event]> {
        self.trace.as_deref()
    }

    pub fn configuration(&self) -> &Configuration {
        &self.cfg
    }

    /// Fault-injection access for exercising the runtime checkers.
    pub fn configuration_mut(&mut self) -> &mut Configuration {
        &mut self.cfg
    }

    pub fn is_terminated(&self) -> bool {
        self.terminated
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn stats(&self) -> RunStats {
        RunStats {
            movements: self.cfg.work(),
            rounds: self.rounds,
            activations: self.activations,
            terminated: self.terminated,
            max_particle_movements: self.cfg.max_particle_work(),
        }
    }

    fn record(&mut self, event: &Event) {
        if let Some(trace) = &mut self.trace {
            trace.push(event.clone());
        }
    }

    fn next_particle(&mut self) -> ParticleId {
        match self.policy {
            Policy::UniformRandom => {
                let idx = self.rng.gen_range(0..self.live.len());
                self.live[idx]
            }
            Policy::RoundRobin => {
                let n = self.live_pos.len();
                loop {
                    let candidate = self.rr_cursor % n;
                    self.rr_cursor = (self.rr_cursor + 1) % n;
                    if self.live_pos[candidate].is_some() {
                        return ParticleId(candidate);
                    }
                }
            }
            Policy::Adversarial => loop {
                if self.perm_cursor >= self.permutation.len() {
                    self.permutation = self.live.clone();
                    // Fisher-Yates with the run's own generator.
                    for i in (1..self.permutation.len()).rev() {
                        let j = self.rng.gen_range(0..=i);
                        self.permutation.swap(i, j);
                    }
                    self.perm_cursor = 0;
                }
                let id = self.permutation[self.perm_cursor];
                self.perm_cursor += 1;
                if self.live_pos[id.0].is_some() {
                    return id;
                }
            },
        }
    }

    fn remove_from_live(&mut self, id: ParticleId) {
        if let Some(pos) = self.live_pos[id.0].take() {
            self.live.swap_remove(pos);
            if let Some(&moved) = self.live.get(pos) {
                self.live_pos[moved.0] = Some(pos);
            }
        }
    }

    /// Activates one particle chosen by the policy and applies its action.
    pub fn step(&mut self) -> Result<Event, RunError> {
        if self.terminated {
            let event = Event {
                step: self.steps,
                round: self.rounds,
                particle: None,
                kind: EventKind::Terminated,
                work: self.cfg.work(),
            };
            self.record(&event);
            return Ok(event);
        }
        let id = self.next_particle();
        self.step_chosen(id)
    }

    /// Activates a specific live particle; used by trace replay and tests.
    pub fn step_particle(&mut self, id: ParticleId) -> Result<Event, RunError> {
        if self.terminated || self.live_pos[id.0].is_none() {
            return Err(RunError::NotLive(id));
        }
        self.step_chosen(id)
    }

    fn step_chosen(&mut self, id: ParticleId) -> Result<Event, RunError> {
        // The activation belongs to the round it occurs in, even when it is
        // the one that completes the round.
        let round = self.rounds;
        self.activations += 1;
        if self.pending[id.0] {
            self.pending[id.0] = false;
            self.pending_count -= 1;
        }

        let view = self.cfg.observe(id);
        let action = activate(&view, self.rule.as_ref()).map_err(|source| RunError::Logic {
            particle: id,
            step: self.steps,
            source,
        })?;
        let kind = self
            .apply(id, action)
            .map_err(|source| RunError::Internal {
                step: self.steps,
                source,
            })?;

        if matches!(kind, EventKind::Retired { .. }) {
            self.remove_from_live(id);
            if self.live.is_empty() {
                self.terminated = true;
            }
        }

        // Round boundary: everyone live has been activated at least once.
        if self.pending_count == 0 {
            self.rounds += 1;
            if !self.terminated {
                for live_id in &self.live {
                    self.pending[live_id.0] = true;
                }
                self.pending_count = self.live.len();
            }
        }

        let event = Event {
            step: self.steps,
            round,
            particle: Some(id),
            kind,
            work: self.cfg.work(),
        };
        self.steps += 1;
        self.record(&event);
        Ok(event)
    }

    fn apply(&mut self, id: ParticleId, action: Action) -> Result<EventKind, MoveError> {
        match action {
            Action::NoOp => Ok(EventKind::NoOp),
            Action::BecomeFollower { port } => {
                self.cfg.become_follower(id, port)?;
                Ok(EventKind::BecameFollower {
                    port,
                    node: self.cfg.particle(id).head,
                })
            }
            Action::BecomeRoot => {
                self.cfg.become_root(id)?;
                Ok(EventKind::BecameRoot {
                    node: self.cfg.particle(id).head,
                })
            }
            Action::Expand { label } => {
                let from = self.cfg.particle(id).head;
                self.cfg.expand(id, label)?;
                Ok(EventKind::Expanded {
                    from,
                    to: self.cfg.particle(id).head,
                })
            }
            Action::Contract => {
                let from = self.cfg.particle(id).tail;
                self.cfg.contract(id)?;
                Ok(EventKind::Contracted {
                    from,
                    to: self.cfg.particle(id).head,
                })
            }
            Action::HandoverPush { port } => {
                let from = self.cfg.particle(id).head;
                let partner = self.cfg.handover_push(id, port)?;
                Ok(EventKind::HandoverPush {
                    partner,
                    from,
                    to: self.cfg.particle(id).head,
                })
            }
            Action::HandoverPull { tail_port } => {
                let node = self.cfg.particle(id).tail;
                let partner = self.cfg.handover_pull(id, tail_port)?;
                Ok(EventKind::HandoverPull { partner, node })
            }
            Action::Retire { flags } => {
                let node = self.cfg.particle(id).head;
                let adopted = self.cfg.retire(id, flags)?;
                Ok(EventKind::Retired { node, adopted })
            }
        }
    }

    /// Runs until every particle is retired or `max_rounds` is exceeded.
    pub fn run(&mut self, max_rounds: u64) -> Result<RunStats, RunError> {
        self.run_with_checks(max_rounds, &[])
    }

    /// As [`Simulation::run`], evaluating every checker after each atomic
    /// action. The first violation aborts; tracing is forced on so the
    /// failure is replayable.
    pub fn run_with_checks(
        &mut self,
        max_rounds: u64,
        checkers: &[Checker],
    ) -> Result<RunStats, RunError> {
        if max_rounds == 0 {
            return Err(RunError::ZeroBudget);
        }
        if !checkers.is_empty() {
            self.enable_trace();
            self.check(checkers)?; // the initial configuration must hold too
        }
        while !self.terminated {
            if self.rounds >= max_rounds {
                return Err(RunError::BudgetExhausted {
                    max_rounds,
                    stats: Box::new(self.stats()),
                });
            }
            self.step()?;
            if !checkers.is_empty() {
                self.check(checkers)?;
            }
        }
        Ok(self.stats())
    }

    fn check(&self, checkers: &[Checker]) -> Result<(), RunError> {
        for &checker in checkers {
            if let Err(detail) = validation::check(checker, &self.cfg) {
                return Err(RunError::InvariantViolation {
                    checker,
                    step: self.steps,
                    detail,
                });
            }
        }
        Ok(())
    }
}
