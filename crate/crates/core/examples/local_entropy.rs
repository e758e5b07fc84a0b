//! Local entropy over a sliding window, its per-step reward, and the
//! histogram and kernel estimates of buffer-level entropy.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use geasd::history::{local_entropy, r_info, GoalHistogram, HistoryContext, MaxEntropyTracker};
use geasd::kde::{GaussianKde, DEFAULT_BANDWIDTH};
use geasd::maze::{builtin, Action};

fn main() -> geasd::Result<()> {
    let maze = builtin("spiral")?;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut h = HistoryContext::new(10, maze.start_observation());
    let mut tracker = MaxEntropyTracker::new();
    let mut visited = vec![h.current().cell];
    tracker.observe(&h)?;

    println!("step  cell     H_local  r_info");
    for t in 1..=30 {
        let a = Action::from_index(rng.gen_range(0..Action::COUNT));
        let next = h.advanced(a, maze.step(h.current(), a));
        let r = r_info(&h, &next)?;
        h = next;
        tracker.observe(&h)?;
        visited.push(h.current().cell);
        println!(
            "{t:>4}  {:<7}  {:.4}   {r:+.4}",
            h.current().cell.to_string(),
            local_entropy(&h)?
        );
    }
    println!("max recorded local entropy {:.4}", tracker.max().unwrap());

    let hist = GoalHistogram::from_goals(&visited);
    let kde = GaussianKde::from_goals(&visited, maze.width(), maze.height(), DEFAULT_BANDWIDTH)
        .expect("non-empty");
    println!(
        "walk entropy: histogram {:.4} nats over {} cells, differential kernel estimate {:.4}",
        hist.entropy(),
        hist.distinct(),
        kde.entropy(1000, &mut rng)
    );
    Ok(())
}
