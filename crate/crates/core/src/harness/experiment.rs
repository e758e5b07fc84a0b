use std::collections::VecDeque;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::explorer::Explorer;

use super::config::ExperimentConfig;
use super::generalize::gc_rollout;
use super::metrics::{empirical_entropy_metric, max_and_mean, occupancy, MetricsRecord};

/// Offset separating the evaluation random stream from the training stream.
const EVAL_STREAM: u64 = 0x9e37_79b9_7f4a_7c15;

/// One seed's metrics and the trained agent.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub seed: u64,
    pub records: Vec<MetricsRecord>,
    /// Step of the first evaluation with nonzero success.
    pub first_success: Option<usize>,
    pub agent: Explorer,
}

impl RunResult {
    pub fn final_success(&self) -> f64 {
        self.records.last().map_or(0.0, |r| r.success_rate)
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub runs: Vec<RunResult>,
}

impl ExperimentResult {
    pub fn records(&self) -> Vec<Vec<MetricsRecord>> {
        self.runs.iter().map(|r| r.records.clone()).collect()
    }
}

/// Share of `episodes` greedy (or `ε`-greedy) runs that reach a desired goal.
pub fn evaluate_success(
    agent: &Explorer,
    episodes: usize,
    epsilon: f64,
    rng: &mut ChaCha8Rng,
) -> f64 {
    let maze = agent.maze();
    let goals = maze.desired_goals();
    let wins = (0..episodes)
        .filter(|i| {
            gc_rollout(
                maze,
                agent.gc_table(),
                goals[i % goals.len()],
                agent.config().episode_len,
                epsilon,
                rng,
            )
            .success
        })
        .count();
    wins as f64 / episodes as f64
}

/// Trains one seed: collect an episode, train on the step credit, and
/// evaluate whenever the step count crosses the evaluation cadence (and
/// once more at the end).
pub fn run_seed(cfg: &ExperimentConfig, seed: u64) -> Result<RunResult> {
    cfg.validate()?;
    let maze = cfg.load_maze()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut eval_rng = ChaCha8Rng::seed_from_u64(seed ^ EVAL_STREAM);
    let mut agent = Explorer::new(cfg.explorer, maze.clone(), &mut rng)?;
    let mut recent: VecDeque<f64> = VecDeque::with_capacity(cfg.occupancy_window);
    let mut records = Vec::new();
    let mut next_eval = cfg.eval_every;
    while agent.steps() < cfg.total_steps {
        let trace = agent.collect_episode(cfg.total_steps - agent.steps(), &mut rng)?;
        if recent.len() == cfg.occupancy_window {
            recent.pop_front();
        }
        recent.push_back(occupancy(&trace.visited(), &maze));
        agent.train(&mut rng)?;
        let steps = agent.steps();
        if steps >= next_eval || steps >= cfg.total_steps {
            let occ: Vec<f64> = recent.iter().copied().collect();
            let (max_occ, avg_occ) = max_and_mean(&occ);
            records.push(MetricsRecord {
                step: steps,
                seed,
                success_rate: evaluate_success(
                    &agent,
                    cfg.eval_episodes,
                    cfg.eval_epsilon,
                    &mut eval_rng,
                ),
                entropy: empirical_entropy_metric(
                    agent.buffer(),
                    &maze,
                    cfg.entropy_mode,
                    &mut eval_rng,
                ),
                max_occ,
                avg_occ,
            });
            while next_eval <= steps {
                next_eval += cfg.eval_every;
            }
        }
    }
    let first_success = records
        .iter()
        .find(|r| r.success_rate > 0.0)
        .map(|r| r.step);
    Ok(RunResult {
        seed,
        records,
        first_success,
        agent,
    })
}

/// Runs every seed of `cfg` on its own thread; results follow seed order.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let runs = std::thread::scope(|scope| {
        let handles: Vec<_> = cfg
            .seeds
            .iter()
            .map(|&seed| scope.spawn(move || run_seed(cfg, seed)))
            .collect();
        handles
            .into_iter()
            .map(|h| {
                h.join().unwrap_or_else(|_| {
                    Err(Error::InvalidArgument("a seed worker panicked".into()))
                })
            })
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(ExperimentResult {
        config: cfg.clone(),
        runs,
    })
}

/// Median of first-success steps; runs that never succeed count as later
/// than any step.
pub fn median_first_success(runs: &[RunResult]) -> Option<usize> {
    let mut v: Vec<Option<usize>> = runs.iter().map(|r| r.first_success).collect();
    v.sort_by_key(|x| x.unwrap_or(usize::MAX));
    v.get(v.len() / 2).copied().flatten()
}

pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
