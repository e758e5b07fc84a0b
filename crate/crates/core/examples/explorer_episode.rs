//! One exploration episode per method: sub-goal, switch step and the
//! start of the transition trace.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use geasd::explorer::{Explorer, ExplorerConfig, Method};
use geasd::maze::builtin;

fn main() -> geasd::Result<()> {
    for method in Method::ALL {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let cfg = ExplorerConfig {
            method,
            ..ExplorerConfig::default()
        };
        let mut agent = Explorer::new(cfg, builtin("spiral")?, &mut rng)?;
        let mut trace = agent.collect_episode(cfg.episode_len, &mut rng)?;
        for _ in 0..5 {
            agent.train(&mut rng)?;
            trace = agent.collect_episode(cfg.episode_len, &mut rng)?;
        }
        println!(
            "{method}: subgoal {} switch {:?} skill draws {} distinct cells {}",
            trace.subgoal,
            trace.switch_step,
            trace.draws.len(),
            trace.visited().len()
        );
        for line in trace.to_text().lines().take(4) {
            println!("  {line}");
        }
    }
    Ok(())
}
