use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::history::GoalHistogram;
use crate::kde::{normalize_goal, GaussianKde, DEFAULT_BANDWIDTH};
use crate::maze::{Goal, MazeSpec};

use super::buffer::ReplayBuffer;

/// Per-cell pseudo-count keeping `p_ag` strictly positive.
pub const HISTOGRAM_SMOOTHING: f64 = 1e-4;

/// Achieved goals fed to the KDE density (a uniform subsample beyond this).
const KDE_SUPPORT: usize = 1_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DensityEstimator {
    Histogram,
    Kde,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SubGoalSelector {
    pub offset: f64,
    pub candidates: usize,
    pub density: DensityEstimator,
}

impl Default for SubGoalSelector {
    fn default() -> Self {
        SubGoalSelector {
            offset: -3.0,
            candidates: 100,
            density: DensityEstimator::Histogram,
        }
    }
}

/// `α = 1 / max(b + KL, 1)`, always in `(0, 1]`.
pub fn desired_goal_probability(offset: f64, kl: f64) -> f64 {
    1.0 / (offset + kl).max(1.0)
}

/// Smoothed achieved-goal probability of one cell.
pub fn smoothed_density(hist: &GoalHistogram, g: Goal, cell_count: usize) -> f64 {
    (hist.count(&g) as f64 + HISTOGRAM_SMOOTHING)
        / (hist.total() as f64 + HISTOGRAM_SMOOTHING * cell_count as f64)
}

/// `KL(p_dg ‖ p_ag)` with `p_dg` uniform over the desired goals.
pub fn kl_from_histogram(hist: &GoalHistogram, maze: &MazeSpec) -> f64 {
    let desired = maze.desired_goals();
    let mut pd = GoalHistogram::new();
    for g in desired {
        pd.add(*g);
    }
    let n = pd.total() as f64;
    pd.iter()
        .map(|(g, c)| {
            let p = *c as f64 / n;
            p * (p / smoothed_density(hist, *g, maze.cell_count())).ln()
        })
        .sum::<f64>()
        .max(0.0)
}

pub fn kl_desired_achieved(buffer: &ReplayBuffer, maze: &MazeSpec) -> f64 {
    kl_from_histogram(buffer.goal_histogram(), maze)
}

impl SubGoalSelector {
    pub fn alpha(&self, buffer: &ReplayBuffer, maze: &MazeSpec) -> f64 {
        desired_goal_probability(self.offset, kl_desired_achieved(buffer, maze))
    }

    /// A desired goal with probability `α`, otherwise the lowest-density goal
    /// among `candidates` achieved goals drawn from the buffer.
    pub fn select<R: Rng + ?Sized>(
        &self,
        buffer: &ReplayBuffer,
        maze: &MazeSpec,
        rng: &mut R,
    ) -> Goal {
        let desired = *maze
            .desired_goals()
            .choose(rng)
            .expect("maze has a desired goal");
        if buffer.is_empty() || rng.gen::<f64>() < self.alpha(buffer, maze) {
            return desired;
        }
        let recs = buffer.records();
        let candidates: Vec<Goal> = (0..self.candidates.max(1))
            .map(|_| recs[rng.gen_range(0..recs.len())].next_obs.cell)
            .collect();
        let density: Box<dyn Fn(Goal) -> f64> = match self.density {
            DensityEstimator::Histogram => {
                let hist = buffer.goal_histogram();
                Box::new(move |g| smoothed_density(hist, g, maze.cell_count()))
            }
            DensityEstimator::Kde => {
                let support: Vec<Goal> = (0..KDE_SUPPORT.min(recs.len()))
                    .map(|_| recs[rng.gen_range(0..recs.len())].next_obs.cell)
                    .collect();
                let kde = GaussianKde::from_goals(
                    &support,
                    maze.width(),
                    maze.height(),
                    DEFAULT_BANDWIDTH,
                )
                .expect("support is nonempty");
                Box::new(move |g| kde.density(normalize_goal(g, maze.width(), maze.height())))
            }
        };
        // First minimum wins so the choice is reproducible.
        let mut best = candidates[0];
        let mut best_d = density(best);
        for g in &candidates[1..] {
            let d = density(*g);
            if d < best_d {
                best = *g;
                best_d = d;
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::explorer::StepRecord;
    use crate::maze::{builtin, Action, Cell};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn alpha_examples() {
        assert_eq!(desired_goal_probability(-3.0, 4.0), 1.0);
        assert!((desired_goal_probability(-3.0, 13.0) - 0.1).abs() < 1e-15);
        assert_eq!(desired_goal_probability(-3.0, 0.0), 1.0);
    }

    #[test]
    fn kl_matched_and_unseen() {
        let maze = builtin("spiral").unwrap();
        let goal = maze.desired_goals()[0];
        let on_goal = GoalHistogram::from_goals(&vec![goal; 50]);
        let matched = ((50.0 + 1e-4 * 100.0) / (50.0 + 1e-4f64)).ln();
        assert!((kl_from_histogram(&on_goal, &maze) - matched).abs() < 1e-12);
        assert!(matched < 1e-3);

        let elsewhere = GoalHistogram::from_goals(&vec![Cell::new(0, 0); 50]);
        let closed = ((50.0 + 1e-4 * 100.0) / 1e-4f64).ln();
        assert!((kl_from_histogram(&elsewhere, &maze) - closed).abs() < 1e-9);
    }

    fn straight_line(maze: &MazeSpec, n: usize) -> ReplayBuffer {
        let mut buf = ReplayBuffer::new(1000);
        let mut s = maze.start_observation();
        let recs: Vec<StepRecord> = (0..n)
            .map(|t| {
                let next = maze.step(&s, Action::E);
                let r = StepRecord {
                    obs: s,
                    action: Action::E,
                    next_obs: next,
                    skill: None,
                    skill_start: false,
                    behavior_prob: 1.0,
                    subgoal: Cell::new(0, 0),
                    episode: 0,
                    step: t as u32,
                };
                s = next;
                r
            })
            .collect();
        buf.push_episode(&recs);
        buf
    }

    #[test]
    fn far_from_goal_picks_rarest_candidate() {
        let maze = builtin("serpentine").unwrap();
        // Moving east along the bottom row piles visits on the wall cell (9, 0).
        let buf = straight_line(&maze, 30);
        let sel = SubGoalSelector::default();
        let kl = ((31.0 + 1e-4 * 100.0) / 1e-4f64).ln();
        assert!((sel.alpha(&buf, &maze) - 1.0 / (kl - 3.0)).abs() < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut frontier = 0;
        for _ in 0..200 {
            let g = sel.select(&buf, &maze, &mut rng);
            if g != maze.desired_goals()[0] {
                assert_ne!(g, Cell::new(9, 0));
                frontier += 1;
            }
        }
        assert!(frontier > 150);
        let kde = SubGoalSelector {
            density: DensityEstimator::Kde,
            ..sel
        };
        let g = kde.select(&buf, &maze, &mut rng);
        assert!(maze.contains(g));
    }

    #[test]
    fn empty_buffer_returns_desired() {
        let maze = builtin("spiral").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let g = SubGoalSelector::default().select(&ReplayBuffer::new(10), &maze, &mut rng);
        assert_eq!(g, maze.desired_goals()[0]);
    }
}
