//! Ablation variants of a base configuration, with one suite run briefly.

use geasd::explorer::Method;
use geasd::harness::{ablation_variants, run_ablation, AblationSuite, ExperimentConfig};

fn main() -> anyhow::Result<()> {
    let base = ExperimentConfig {
        total_steps: 3_000,
        seeds: vec![0],
        ..ExperimentConfig::desk(Method::GeasdL)
    };
    for suite in AblationSuite::ALL {
        let names: Vec<String> = ablation_variants(suite, &base)
            .into_iter()
            .map(|c| c.name)
            .collect();
        println!("{suite}: {}", names.join(", "));
    }
    for result in run_ablation(AblationSuite::Temperature, &base)? {
        let last = result.runs[0].records.last().expect("evaluated at the end");
        println!(
            "{:<24} SR {:.2} entropy {:.3} AvgOcc {:.3}",
            result.config.name, last.success_rate, last.entropy, last.avg_occ
        );
    }
    Ok(())
}
