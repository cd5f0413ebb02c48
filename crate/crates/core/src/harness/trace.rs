//! Trace files: a header describing the initial configuration followed by
//! one line per atomic action. A trace replays without the original RNG —
//! the recorded particle sequence *is* the schedule — so any recorded run
//! can be re-executed under the full checker suite and compared event by
//! event.

use std::path::Path;

use thiserror::Error;

use super::Algorithm;
use crate::grid::{Node, Offset};
use crate::model::{Configuration, ParticleId};
use crate::scheduler::{Policy, RunError, RunStats, Schedule, Simulation};
use crate::validation::Checker;

const MAGIC: &str = "# amoebot trace v1";

/// One particle of the recorded initial configuration.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TraceParticle {
    pub node: Node,
    pub offset: Offset,
    pub is_seed: bool,
}

/// A parsed trace: enough to rebuild the initial configuration and the exact
/// activation sequence.
#[derive(Clone, Debug)]
pub struct Trace {
    pub algorithm: Algorithm,
    pub policy: Policy,
    pub sched_seed: u64,
    pub particles: Vec<TraceParticle>,
    /// Rendered event lines, in step order.
    pub events: Vec<String>,
}

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("trace i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("trace line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error(
        "trace replay diverged at step {step}:\n  recorded: {recorded}\n  replayed: {replayed}"
    )]
    Divergence {
        step: usize,
        recorded: String,
        replayed: String,
    },
    #[error("trace replay: {0}")]
    Run(#[from] RunError),
    #[error("trace ended but the run has not terminated")]
    Truncated,
}

/// Records a header for `cfg`. The header must describe the *initial*
/// placement, so capture it before stepping the simulation.
pub fn header_for(cfg: &Configuration, algorithm: Algorithm, schedule: Schedule) -> String {
    let mut out = String::new();
    out.push_str(MAGIC);
    out.push('\n');
    out.push_str(&format!("algorithm={algorithm}\n"));
    out.push_str(&format!("policy={}\n", schedule.policy));
    out.push_str(&format!("sched_seed={}\n", schedule.rng_seed));
    out.push_str(&format!("particles={}\n", cfg.len()));
    for (id, p) in cfg.particles() {
        out.push_str(&format!(
            "particle index={} node={} offset={} seed={}\n",
            id,
            p.head,
            p.offset.index(),
            p.is_seed
        ));
    }
    out
}

/// Appends rendered events to a header produced by [`header_for`].
pub fn with_events(header: String, sim: &Simulation) -> String {
    let mut out = header;
    for event in sim.trace().unwrap_or(&[]) {
        out.push_str(&event.to_string());
        out.push('\n');
    }
    out
}

pub fn write_trace(text: &str, path: &Path) -> Result<(), TraceError> {
    std::fs::write(path, text)?;
    Ok(())
}

pub fn read_trace(path: &Path) -> Result<Trace, TraceError> {
    parse_trace(&std::fs::read_to_string(path)?)
}

fn kv<'a>(token: &'a str, key: &str, line_no: usize) -> Result<&'a str, TraceError> {
    token
        .strip_prefix(key)
        .and_then(|rest| rest.strip_prefix('='))
        .ok_or_else(|| TraceError::Parse {
            line: line_no,
            reason: format!("expected '{key}=...', found '{token}'"),
        })
}

fn parse_node(text: &str, line_no: usize) -> Result<Node, TraceError> {
    let inner = text
        .strip_prefix('(')
        .and_then(|t| t.strip_suffix(')'))
        .ok_or_else(|| TraceError::Parse {
            line: line_no,
            reason: format!("bad node '{text}'"),
        })?;
    let (q, r) = inner.split_once(',').ok_or_else(|| TraceError::Parse {
        line: line_no,
        reason: format!("bad node '{text}'"),
    })?;
    let parse = |s: &str| {
        s.parse::<i32>().map_err(|_| TraceError::Parse {
            line: line_no,
            reason: format!("bad coordinate '{s}'"),
        })
    };
    Ok(Node::new(parse(q)?, parse(r)?))
}

pub fn parse_trace(text: &str) -> Result<Trace, TraceError> {
    let mut lines = text.lines().enumerate();
    let (_, first) = lines.next().ok_or(TraceError::Parse {
        line: 0,
        reason: "empty trace".into(),
    })?;
    if first.trim() != MAGIC {
        return Err(TraceError::Parse {
            line: 1,
            reason: format!("bad magic '{first}'"),
        });
    }
    let mut algorithm = None;
    let mut policy = None;
    let mut sched_seed = 0u64;
    let mut expected_particles = 0usize;
    let mut particles = Vec::new();
    let mut events = Vec::new();
    for (idx, raw) in lines {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(value) = line.strip_prefix("algorithm=") {
            algorithm = Some(value.parse::<Algorithm>().map_err(|e| TraceError::Parse {
                line: line_no,
                reason: e,
            })?);
        } else if let Some(value) = line.strip_prefix("policy=") {
            policy = Some(value.parse::<Policy>().map_err(|e| TraceError::Parse {
                line: line_no,
                reason: e,
            })?);
        } else if let Some(value) = line.strip_prefix("sched_seed=") {
            sched_seed = value.parse().map_err(|_| TraceError::Parse {
                line: line_no,
                reason: format!("bad seed '{value}'"),
            })?;
        } else if let Some(value) = line.strip_prefix("particles=") {
            expected_particles = value.parse().map_err(|_| TraceError::Parse {
                line: line_no,
                reason: format!("bad particle count '{value}'"),
            })?;
        } else if line.starts_with("particle ") {
            let mut node = None;
            let mut offset = None;
            let mut is_seed = false;
            for token in line.split_whitespace().skip(1) {
                if token.starts_with("index=") {
                    continue;
                } else if token.starts_with("node=") {
                    node = Some(parse_node(kv(token, "node", line_no)?, line_no)?);
                } else if token.starts_with("offset=") {
                    let o: u8 =
                        kv(token, "offset", line_no)?
                            .parse()
                            .map_err(|_| TraceError::Parse {
                                line: line_no,
                                reason: "bad offset".into(),
                            })?;
                    offset = Some(Offset::new(o));
                } else if token.starts_with("seed=") {
                    is_seed = kv(token, "seed", line_no)? == "true";
                }
            }
            let (Some(node), Some(offset)) = (node, offset) else {
                return Err(TraceError::Parse {
                    line: line_no,
                    reason: "particle line missing node/offset".into(),
                });
            };
            particles.push(TraceParticle {
                node,
                offset,
                is_seed,
            });
        } else if line.starts_with("step=") {
            events.push(line.to_string());
        } else {
            return Err(TraceError::Parse {
                line: line_no,
                reason: format!("unrecognized line '{line}'"),
            });
        }
    }
    let algorithm = algorithm.ok_or(TraceError::Parse {
        line: 0,
        reason: "missing algorithm".into(),
    })?;
    let policy = policy.unwrap_or(Policy::UniformRandom);
    if particles.len() != expected_particles {
        return Err(TraceError::Parse {
            line: 0,
            reason: format!(
                "header announces {expected_particles} particles, found {}",
                particles.len()
            ),
        });
    }
    Ok(Trace {
        algorithm,
        policy,
        sched_seed,
        particles,
        events,
    })
}

/// The acting particle recorded in an event line, or `None` for the
/// termination marker.
fn acting_particle(line: &str, idx: usize) -> Result<Option<usize>, TraceError> {
    for token in line.split_whitespace() {
        if let Some(value) = token.strip_prefix("particle=") {
            if value == "-" {
                return Ok(None);
            }
            return value.parse().map(Some).map_err(|_| TraceError::Parse {
                line: idx,
                reason: format!("bad particle '{value}'"),
            });
        }
    }
    Err(TraceError::Parse {
        line: idx,
        reason: "event line without particle".into(),
    })
}

/// Outcome of a verified replay.
#[derive(Debug)]
pub struct ReplayReport {
    pub steps: usize,
    pub stats: RunStats,
}

/// Re-executes a trace, activating exactly the recorded particles, with the
/// full checker suite after every action, and verifies that every replayed
/// event matches the recorded line byte for byte.
pub fn replay(trace: &Trace) -> Result<ReplayReport, TraceError> {
    let nodes: Vec<Node> = trace.particles.iter().map(|p| p.node).collect();
    let offsets: Vec<Offset> = trace.particles.iter().map(|p| p.offset).collect();
    let seed_index = trace
        .particles
        .iter()
        .position(|p| p.is_seed)
        .ok_or(TraceError::Parse {
            line: 0,
            reason: "no seed particle in header".into(),
        })?;
    let cfg = Configuration::new(
        &nodes,
        seed_index,
        &offsets,
        trace.algorithm.rule().seed_init(),
    )
    .map_err(|e| TraceError::Parse {
        line: 0,
        reason: e.to_string(),
    })?;
    let mut sim = Simulation::new(
        cfg,
        trace.algorithm.rule(),
        Schedule::new(trace.policy, trace.sched_seed),
    );

    let run_checkers = |sim: &Simulation, step: usize| -> Result<(), TraceError> {
        for &checker in Checker::ALL {
            if let Err(detail) = crate::validation::check(checker, sim.configuration()) {
                return Err(TraceError::Run(RunError::InvariantViolation {
                    checker,
                    step: step as u64,
                    detail,
                }));
            }
        }
        Ok(())
    };
    run_checkers(&sim, 0)?;

    let mut steps = 0usize;
    for (idx, recorded) in trace.events.iter().enumerate() {
        match acting_particle(recorded, idx)? {
            Some(p) => {
                let event = sim.step_particle(ParticleId(p))?;
                let replayed = event.to_string();
                if &replayed != recorded {
                    return Err(TraceError::Divergence {
                        step: idx,
                        recorded: recorded.clone(),
                        replayed,
                    });
                }
                run_checkers(&sim, idx + 1)?;
                steps += 1;
            }
            None => {
                // Termination marker: re-render it for byte equality.
                let event = sim.step()?;
                let replayed = event.to_string();
                if &replayed != recorded {
                    return Err(TraceError::Divergence {
                        step: idx,
                        recorded: recorded.clone(),
                        replayed,
                    });
                }
            }
        }
    }
    if !sim.is_terminated() {
        return Err(TraceError::Truncated);
    }
    Ok(ReplayReport {
        steps,
        stats: sim.stats(),
    })
}
