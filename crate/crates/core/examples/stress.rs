use amoebot_core::harness::{build_simulation, default_max_rounds, gen_line, gen_random_connected, Algorithm};
use amoebot_core::scheduler::{Policy, Schedule};
use amoebot_core::validation::{validate_hexagon, validate_triangle, Checker};
use amoebot_core::Offset;

fn main() {
    let mut runs = 0usize;
    for &algorithm in &[Algorithm::Hex, Algorithm::Tri] {
        for policy in [Policy::UniformRandom, Policy::RoundRobin, Policy::Adversarial] {
            for n in [40usize, 75, 100] {
                for init_seed in 1..=4u64 {
                    for sched_seed in 1..=2u64 {
                        for (gen_name, init) in [
                            ("line", gen_line(n)),
                            ("random", gen_random_connected(n, init_seed)),
                        ] {
                            let seed_offset = Offset::new((init_seed % 6) as u8);
                            let mut sim = build_simulation(
                                &init, algorithm, sched_seed * 31 + init_seed, seed_offset,
                                Schedule::new(policy, sched_seed),
                            ).unwrap();
                            let stats = sim
                                .run_with_checks(default_max_rounds(n), Checker::ALL)
                                .unwrap_or_else(|e| panic!(
                                    "{algorithm} {policy} {gen_name} n={n} iseed={init_seed} sseed={sched_seed}: {e}"
                                ));
                            assert!(stats.terminated);
                            let report = match algorithm {
                                Algorithm::Hex => validate_hexagon(sim.configuration()).unwrap(),
                                Algorithm::Tri => validate_triangle(sim.configuration()).unwrap(),
                            };
                            assert!(report.valid, "{algorithm} {policy} {gen_name} n={n}: {}", report.failure_reason);
                            runs += 1;
                        }
                    }
                }
            }
        }
    }
    println!("stress: {runs} fully checked runs, zero violations");
}
