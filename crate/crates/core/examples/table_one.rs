//! Runs the three-vehicle intersection scenario and prints one line per
//! iteration. Pass a number to cap the learning iterations.

use lmpc_core::orchestrator::{run_with, verify_run, ScenarioConfig};
use lmpc_core::trajopt::SolverSettings;

fn main() {
    let config = ScenarioConfig::table_one();
    let cap = std::env::args().nth(1).map(|s| s.parse().expect("iteration count"));
    let record = run_with(&config, &SolverSettings::default(), cap, |it| {
        println!(
            "iteration {:>2}: completion times {:?}, global cost {}, min distance {:.3}",
            it.iteration,
            it.completion_times(),
            it.global_cost(),
            it.min_distance()
        );
    });
    match record {
        Ok(record) => {
            println!("converged at {:?}", record.converged_at);
            println!("violations: {}", verify_run(&record, &config).violations.len());
        }
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(1);
        }
    }
}
