//! Skill-value regression: collect episodes, build batches for both target
//! schemes, check the gradient and take optimiser steps.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use geasd::explorer::{Explorer, ExplorerConfig, Method};
use geasd::maze::builtin;
use geasd::svf::{
    batch_loss, build_batch, gradient_check, train_step, Architecture, BatchConfig, DataScope,
    Optimizer, OptimizerKind, SkillValueModel, TargetScheme,
};

fn main() -> geasd::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let cfg = ExplorerConfig {
        method: Method::Geaps,
        ..ExplorerConfig::default()
    };
    let mut agent = Explorer::new(cfg, builtin("spiral")?, &mut rng)?;
    for _ in 0..20 {
        agent.collect_episode(cfg.episode_len, &mut rng)?;
    }
    println!("buffer: {} transitions", agent.buffer().len());

    let arch = Architecture::new(16, agent.skills().len(), cfg.context_horizon, true);
    let batch_cfg = BatchConfig::default();
    for scheme in [TargetScheme::High, TargetScheme::Low] {
        let mut model = SkillValueModel::random(arch, &mut rng);
        let mut opt = Optimizer::new(OptimizerKind::Adam, 1e-2, arch.param_count());
        let probe = build_batch(
            &model,
            agent.buffer(),
            agent.skills(),
            scheme,
            DataScope::All,
            &batch_cfg,
            &mut rng,
        )?;
        println!(
            "{scheme:?}: gradient check relative error {:.2e}",
            gradient_check(&model, &probe)?
        );
        let before = batch_loss(&model, &probe)?;
        for _ in 0..200 {
            let batch = build_batch(
                &model,
                agent.buffer(),
                agent.skills(),
                scheme,
                DataScope::All,
                &batch_cfg,
                &mut rng,
            )?;
            train_step(&mut model, &mut opt, &batch)?;
        }
        println!(
            "{scheme:?}: probe loss {before:.4} -> {:.4}",
            batch_loss(&model, &probe)?
        );
    }
    Ok(())
}
