//! Freeze a trained agent and roll its policies out on unseen mazes.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use geasd::explorer::Method;
use geasd::harness::{
    evaluate_generalization, run_seed, ExperimentConfig, GeneralizationConfig, PolicyKind,
};
use geasd::maze::builtin;

fn main() -> anyhow::Result<()> {
    let cfg = ExperimentConfig {
        total_steps: 9_000,
        ..ExperimentConfig::desk(Method::GeasdL)
    };
    let run = run_seed(&cfg, 0)?;
    let gen = GeneralizationConfig::default();
    for target in ["spiral_c", "serpentine"] {
        let maze = builtin(target)?;
        for kind in [
            PolicyKind::Gc,
            PolicyKind::UniformGc,
            PolicyKind::SkillAdaptive,
            PolicyKind::SkillUniform,
        ] {
            let mut rng = ChaCha8Rng::seed_from_u64(6);
            let r = evaluate_generalization(&run.agent, &maze, kind, &gen, &mut rng)?;
            println!(
                "{target:<10} {:<14} SR {:.2} MaxOcc {:.2} AvgOcc {:.3}",
                kind.to_string(),
                r.success_rate,
                r.max_occ,
                r.avg_occ
            );
        }
    }
    Ok(())
}
