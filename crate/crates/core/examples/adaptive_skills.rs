//! Dynamic temperature and the Boltzmann skill distribution.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use geasd::adaptive::{dynamic_temperature, sample_skill, skill_distribution, DEFAULT_T_MIN};
use geasd::maze::{builtin, Action};
use geasd::skills::SkillSet;

fn main() -> geasd::Result<()> {
    let h_max = 10f64.ln();
    println!("H_local  T");
    for i in 0..=5 {
        let h = h_max * i as f64 / 5.0;
        println!(
            "{h:.3}    {:.4}",
            dynamic_temperature(h, h_max, DEFAULT_T_MIN)?
        );
    }

    let values = [0.4, 0.1, -0.2, 0.35];
    for t in [1.0, 0.1, 0.01] {
        let p = skill_distribution(&values, t)?;
        println!("T = {t:<4}  p = {:.3?}", p);
    }

    let p = skill_distribution(&values, 0.1)?;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut counts = [0usize; 4];
    for _ in 0..10_000 {
        counts[sample_skill(&p, &mut rng)?] += 1;
    }
    println!("10000 draws at T = 0.1: {counts:?}");

    // Each skill is a noisy direction; the posterior recovers it from an action.
    let skills = SkillSet::directional(0.05, 2)?;
    let s = builtin("spiral")?.start_observation();
    println!("p(z | s0, E) = {:.3?}", skills.posterior(&s, Action::E)?);
    Ok(())
}
