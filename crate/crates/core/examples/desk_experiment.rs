//! A short multi-seed run with CSV outputs.

use geasd::explorer::Method;
use geasd::harness::{emit_outputs, median_first_success, ExperimentConfig};

fn main() -> anyhow::Result<()> {
    let cfg = ExperimentConfig {
        total_steps: 6_000,
        ..ExperimentConfig::desk(Method::GeasdL)
    };
    let result = geasd::harness::run_experiment(&cfg)?;
    for run in &result.runs {
        let last = run.records.last().expect("evaluated at the end");
        println!(
            "seed {}: first success {:?} final SR {:.2} entropy {:.3} MaxOcc {:.2}",
            run.seed, run.first_success, last.success_rate, last.entropy, last.max_occ
        );
    }
    println!(
        "median first success {:?}",
        median_first_success(&result.runs)
    );
    let out = std::env::temp_dir().join("geasd-desk-example");
    for f in emit_outputs(&[result], &out)? {
        println!("wrote {}", f.display());
    }
    Ok(())
}
