//! Exhaustive checks of the skill-selection propositions on toy instances.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use geasd::history::HistoryContext;
use geasd::maze::{builtin, Action};
use geasd::oracle::{random_instance, run_suite, slemp_solve, verify_prop2, ToyInstance};
use geasd::skills::SkillSet;

fn main() -> geasd::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let report = run_suite(100, &mut rng);
    for check in ["prop1", "prop1-negative-control", "prop2"] {
        let (ok, n) = report.count(check);
        println!("{check}: {ok}/{n}");
    }

    // A toy instance enumerated from a real maze window.
    let maze = builtin("serpentine")?;
    let mut h = HistoryContext::new(4, maze.start_observation());
    for a in [Action::E, Action::E, Action::E] {
        h.push(a, maze.step(h.current(), a));
    }
    let inst = ToyInstance::from_maze(&maze, &h, &SkillSet::directional(0.05, 2)?)?;
    println!(
        "maze instance: disjoint coverage {}",
        inst.has_disjoint_coverage()
    );
    println!("entropy changes {:.4?}", inst.entropy_changes());
    let best = slemp_solve(&inst);
    println!(
        "coverage-entropy maximiser {:.4?} (H = {:.4})",
        best.distribution, best.entropy
    );

    let c = verify_prop2(&random_instance(&mut rng))?;
    println!("mixture {:.4?} >= expected {:.4?}", c.mixture, c.expected);
    Ok(())
}
