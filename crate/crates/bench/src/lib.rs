//! Benchmark-only crate; see `benches/` for the criterion targets.
//!
//! Shared helpers for the benchmark binaries live here.

use amoebot_core::harness::{build_simulation, gen_line, Algorithm};
use amoebot_core::scheduler::{Policy, Schedule, Simulation};
use amoebot_core::Offset;

/// A fresh line-start simulation, ready to run.
pub fn line_simulation(algorithm: Algorithm, n: usize, sched_seed: u64) -> Simulation {
    let init = gen_line(n);
    build_simulation(
        &init,
        algorithm,
        0,
        Offset::new(0),
        Schedule::new(Policy::UniformRandom, sched_seed),
    )
    .expect("line configurations are well-formed")
}
