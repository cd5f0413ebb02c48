//! Batch experiment runner: a JSON spec fans out into one run per
//! `(n, repetition, scheduler seed)` and produces one CSV row each, plus a
//! work-scaling summary for line starts.

use std::io::Write;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{gen_line, gen_random_connected, Algorithm, Generator};
use crate::grid::Offset;
use crate::scheduler::{Policy, RunError, Schedule};
use crate::validation::{self, Checker};

fn default_repetitions() -> usize {
    1
}

fn default_policy() -> Policy {
    Policy::UniformRandom
}

/// Declarative description of a batch of runs.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub algorithm: Algorithm,
    /// System sizes to run.
    pub n: Vec<usize>,
    pub generator: Generator,
    /// Initial configurations per size (distinct generator seeds).
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    #[serde(default = "default_policy")]
    pub policy: Policy,
    pub sched_seeds: Vec<u64>,
    #[serde(default)]
    pub offset_seed: u64,
    /// Absolute round budget; default is `50·n²` per run.
    #[serde(default)]
    pub max_rounds: Option<u64>,
    /// Evaluate all safety checkers after every atomic action.
    #[serde(default)]
    pub check: bool,
    #[serde(default)]
    pub csv_out: Option<PathBuf>,
    #[serde(default)]
    pub summary_out: Option<PathBuf>,
}

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("experiment spec: {0}")]
    BadSpec(String),
    #[error("reading spec: {0}")]
    Io(#[from] std::io::Error),
    #[error("parsing spec: {0}")]
    Json(#[from] serde_json::Error),
}

impl ExperimentSpec {
    pub fn from_json(text: &str) -> Result<Self, ExperimentError> {
        let spec: ExperimentSpec = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.repetitions < 1 {
            return Err(ExperimentError::BadSpec("repetitions must be >= 1".into()));
        }
        if self.n.is_empty() || self.n.iter().any(|&n| n < 1) {
            return Err(ExperimentError::BadSpec(
                "n list must be non-empty with every n >= 1".into(),
            ));
        }
        if self.sched_seeds.is_empty() {
            return Err(ExperimentError::BadSpec(
                "sched_seeds must be non-empty".into(),
            ));
        }
        Ok(())
    }
}

pub const CSV_HEADER: &str =
    "algorithm,n,init_seed,sched_seed,valid,work,rounds,activations,radius_or_side";

/// One run's outcome, in CSV column order.
#[derive(Clone, Debug)]
pub struct RunRow {
    pub algorithm: Algorithm,
    pub n: usize,
    pub init_seed: u64,
    pub sched_seed: u64,
    pub valid: bool,
    pub work: u64,
    pub rounds: u64,
    pub activations: u64,
    /// Hexagon radius / triangle side; `-1` when the run or validation failed.
    pub radius_or_side: i64,
}

impl RunRow {
    pub fn csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.algorithm,
            self.n,
            self.init_seed,
            self.sched_seed,
            self.valid,
            self.work,
            self.rounds,
            self.activations,
            self.radius_or_side
        )
    }
}

/// Batch result: all rows in deterministic parameter order, failure notes,
/// and the scaling fit.
#[derive(Clone, Debug, Default)]
pub struct ExperimentOutcome {
    pub rows: Vec<RunRow>,
    /// `(row index, reason)` for runs that errored or failed validation.
    pub failures: Vec<(usize, String)>,
    /// Log-log least-squares slope of median work against n, when the
    /// spec covers line starts with at least two sizes.
    pub line_slope: Option<f64>,
}

impl ExperimentOutcome {
    pub fn csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.csv());
            out.push('\n');
        }
        out
    }

    pub fn summary(&self) -> String {
        let mut out = format!(
            "runs={} failures={}\n",
            self.rows.len(),
            self.failures.len()
        );
        if let Some(slope) = self.line_slope {
            out.push_str(&format!("line work scaling: slope={slope:.3}\n"));
        }
        for (idx, reason) in &self.failures {
            out.push_str(&format!("failure row {idx}: {reason}\n"));
        }
        out
    }
}

/// Runs the whole batch. Individual run failures (budget exhaustion,
/// invariant violations, invalid shapes) mark their row and are collected;
/// they never abort the batch.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentOutcome, ExperimentError> {
    spec.validate()?;
    let mut outcome = ExperimentOutcome::default();
    for &n in &spec.n {
        for rep in 0..spec.repetitions {
            let init_seed = rep as u64 + 1;
            let init = match spec.generator {
                Generator::Line => gen_line(n),
                Generator::Random => gen_random_connected(n, init_seed),
            };
            for &sched_seed in &spec.sched_seeds {
                let row_index = outcome.rows.len();
                let mut row = RunRow {
                    algorithm: spec.algorithm,
                    n,
                    init_seed,
                    sched_seed,
                    valid: false,
                    work: 0,
                    rounds: 0,
                    activations: 0,
                    radius_or_side: -1,
                };
                match run_one(spec, &init, sched_seed) {
                    Ok((stats, report)) => {
                        row.work = stats.movements;
                        row.rounds = stats.rounds;
                        row.activations = stats.activations;
                        row.valid = report.valid;
                        row.radius_or_side = report.radius_or_side;
                        if !report.valid {
                            outcome
                                .failures
                                .push((row_index, report.failure_reason.clone()));
                        }
                    }
                    Err(err) => {
                        if let RunError::BudgetExhausted { stats, .. } = &err {
                            row.work = stats.movements;
                            row.rounds = stats.rounds;
                            row.activations = stats.activations;
                        }
                        outcome.failures.push((row_index, err.to_string()));
                    }
                }
                outcome.rows.push(row);
            }
        }
    }

    if spec.generator == Generator::Line {
        outcome.line_slope = work_scaling_slope(&outcome.rows);
    }

    if let Some(path) = &spec.csv_out {
        std::fs::File::create(path)?.write_all(outcome.csv().as_bytes())?;
    }
    if let Some(path) = &spec.summary_out {
        std::fs::File::create(path)?.write_all(outcome.summary().as_bytes())?;
    }
    Ok(outcome)
}

fn run_one(
    spec: &ExperimentSpec,
    init: &super::InitialConfig,
    sched_seed: u64,
) -> Result<(crate::scheduler::RunStats, validation::ShapeReport), RunError> {
    let mut sim = super::build_simulation(
        init,
        spec.algorithm,
        spec.offset_seed,
        Offset::new(0),
        Schedule::new(spec.policy, sched_seed),
    )
    .expect("generated configurations are well-formed");
    let budget = spec
        .max_rounds
        .unwrap_or_else(|| super::default_max_rounds(init.n()));
    let checkers: &[Checker] = if spec.check { Checker::ALL } else { &[] };
    let stats = sim.run_with_checks(budget, checkers)?;
    let report = match spec.algorithm {
        Algorithm::Hex => validation::validate_hexagon(sim.configuration()),
        Algorithm::Tri => validation::validate_triangle(sim.configuration()),
    }
    .expect("terminated runs validate");
    Ok((stats, report))
}

/// Median work per size, fitted as a log-log least-squares slope. Needs at
/// least two distinct sizes with nonzero work.
fn work_scaling_slope(rows: &[RunRow]) -> Option<f64> {
    let mut sizes: Vec<usize> = rows.iter().map(|r| r.n).collect();
    sizes.sort_unstable();
    sizes.dedup();
    let points: Vec<(f64, f64)> = sizes
        .iter()
        .map(|&n| {
            let mut works: Vec<u64> = rows.iter().filter(|r| r.n == n).map(|r| r.work).collect();
            (n as f64, median(&mut works))
        })
        .filter(|&(_, w)| w > 0.0)
        .collect();
    (points.len() >= 2).then(|| loglog_slope(&points))
}

/// Median of a non-empty sample.
pub fn median(values: &mut [u64]) -> f64 {
    assert!(!values.is_empty());
    values.sort_unstable();
    let mid = values.len() / 2;
    if values.len() % 2 == 1 {
        values[mid] as f64
    } else {
        (values[mid - 1] + values[mid]) as f64 / 2.0
    }
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(points: &[(f64, f64)]) -> f64 {
    let logs: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    let n = logs.len() as f64;
    let mean_x = logs.iter().map(|(x, _)| x).sum::<f64>() / n;
    let mean_y = logs.iter().map(|(_, y)| y).sum::<f64>() / n;
    let cov: f64 = logs.iter().map(|(x, y)| (x - mean_x) * (y - mean_y)).sum();
    let var: f64 = logs.iter().map(|(x, _)| (x - mean_x).powi(2)).sum();
    cov / var
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_parses_and_validates() {
        let spec = ExperimentSpec::from_json(
            r#"{
                "algorithm": "hex",
                "n": [4, 8],
                "generator": "line",
                "sched_seeds": [1, 2]
            }"#,
        )
        .unwrap();
        assert_eq!(spec.repetitions, 1);
        assert_eq!(spec.policy, Policy::UniformRandom);

        let err = ExperimentSpec::from_json(
            r#"{"algorithm":"tri","n":[],"generator":"line","sched_seeds":[1]}"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("n list"));
        let err = ExperimentSpec::from_json(
            r#"{"algorithm":"tri","n":[0],"generator":"line","sched_seeds":[1]}"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("n list"));
    }

    #[test]
    fn row_count_is_sizes_times_reps_times_seeds() {
        let spec = ExperimentSpec {
            algorithm: Algorithm::Hex,
            n: vec![3, 5],
            generator: Generator::Random,
            repetitions: 2,
            policy: Policy::UniformRandom,
            sched_seeds: vec![1, 2, 3],
            offset_seed: 0,
            max_rounds: None,
            check: false,
            csv_out: None,
            summary_out: None,
        };
        let outcome = run_experiment(&spec).unwrap();
        assert_eq!(outcome.rows.len(), 2 * 2 * 3);
        assert!(outcome.failures.is_empty(), "{:?}", outcome.failures);
        assert!(outcome.rows.iter().all(|r| r.valid));
        let csv = outcome.csv();
        assert!(csv.starts_with(CSV_HEADER));
        assert_eq!(csv.lines().count(), 1 + 12);
    }

    #[test]
    fn line_runs_scale_quadratically_at_small_sizes() {
        let spec = ExperimentSpec {
            algorithm: Algorithm::Hex,
            n: vec![8, 16, 32],
            generator: Generator::Line,
            repetitions: 1,
            policy: Policy::UniformRandom,
            sched_seeds: vec![1, 2, 3],
            offset_seed: 0,
            max_rounds: None,
            check: false,
            csv_out: None,
            summary_out: None,
        };
        let outcome = run_experiment(&spec).unwrap();
        let slope = outcome.line_slope.unwrap();
        assert!((1.5..2.5).contains(&slope), "slope={slope}");
        // Measured work dominates the closed-form floor on every row.
        for row in &outcome.rows {
            assert!(row.work >= validation::hex_lower_bound(row.n as u64));
        }
    }

    #[test]
    fn checked_runs_pass_the_per_step_checkers() {
        let spec = ExperimentSpec {
            algorithm: Algorithm::Tri,
            n: vec![6],
            generator: Generator::Line,
            repetitions: 1,
            policy: Policy::Adversarial,
            sched_seeds: vec![5],
            offset_seed: 1,
            max_rounds: None,
            check: true,
            csv_out: None,
            summary_out: None,
        };
        let outcome = run_experiment(&spec).unwrap();
        assert!(outcome.failures.is_empty(), "{:?}", outcome.failures);
    }

    #[test]
    fn slope_helper_recovers_exact_powers() {
        let points: Vec<(f64, f64)> = (1..=5).map(|i| (i as f64, (i * i) as f64)).collect();
        let slope = loglog_slope(&points);
        assert!((slope - 2.0).abs() < 1e-9);
    }

    #[test]
    fn median_helper() {
        assert_eq!(median(&mut [3, 1, 2]), 2.0);
        assert_eq!(median(&mut [4, 1, 2, 3]), 2.5);
    }
}
