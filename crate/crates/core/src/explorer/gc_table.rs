use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::maze::{achieved_goal, sparse_reward, Action, Goal, MazeSpec, Observation};

use super::buffer::{ReplayBuffer, StepRecord};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GcConfig {
    pub discount: f64,
    pub epsilon: f64,
    pub learning_rate: f64,
    /// Value every entry starts from.
    pub init_value: f64,
    pub batch_size: usize,
    /// Environment steps between two training batches.
    pub train_every: usize,
    pub relabel_ratio: f64,
    /// Hindsight goals swept backwards through each new episode.
    pub sweep_goals: usize,
}

impl Default for GcConfig {
    fn default() -> Self {
        GcConfig {
            discount: 0.98,
            epsilon: 0.1,
            learning_rate: 1.0,
            init_value: -50.0,
            batch_size: 64,
            train_every: 1,
            relabel_ratio: 0.8,
            sweep_goals: 16,
        }
    }
}

/// Tabular goal-conditioned action values `Q(cell, goal, action)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GoalConditionedValueTable {
    width: usize,
    height: usize,
    values: Vec<f64>,
    discount: f64,
    epsilon: f64,
    learning_rate: f64,
}

impl GoalConditionedValueTable {
    pub fn new(maze: &MazeSpec, cfg: &GcConfig) -> Self {
        let n = maze.cell_count();
        GoalConditionedValueTable {
            width: maze.width(),
            height: maze.height(),
            values: vec![cfg.init_value; n * n * Action::COUNT],
            discount: cfg.discount,
            epsilon: cfg.epsilon,
            learning_rate: cfg.learning_rate,
        }
    }

    pub fn discount(&self) -> f64 {
        self.discount
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    fn cell_index(&self, c: Goal) -> usize {
        c.y as usize * self.width + c.x as usize
    }

    fn contains(&self, c: Goal) -> bool {
        c.x >= 0 && c.y >= 0 && (c.x as usize) < self.width && (c.y as usize) < self.height
    }

    fn base(&self, s: &Observation, g: Goal) -> usize {
        let n = self.width * self.height;
        (self.cell_index(s.cell) * n + self.cell_index(g)) * Action::COUNT
    }

    pub fn values(&self, s: &Observation, g: Goal) -> &[f64] {
        let b = self.base(s, g);
        &self.values[b..b + Action::COUNT]
    }

    pub fn value(&self, s: &Observation, g: Goal, a: Action) -> f64 {
        self.values[self.base(s, g) + a.index()]
    }

    pub fn set_value(&mut self, s: &Observation, g: Goal, a: Action, v: f64) {
        let b = self.base(s, g);
        self.values[b + a.index()] = v;
    }

    /// Greedy action; ties go to the lowest action index.
    pub fn greedy(&self, s: &Observation, g: Goal) -> Action {
        if !self.contains(s.cell) || !self.contains(g) {
            return Action::N;
        }
        let q = self.values(s, g);
        let mut best = 0;
        for i in 1..Action::COUNT {
            if q[i] > q[best] {
                best = i;
            }
        }
        Action::from_index(best)
    }

    pub fn max_value(&self, s: &Observation, g: Goal) -> f64 {
        self.values(s, g)
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// ε-greedy action and its probability under the ε-greedy policy.
    pub fn act<R: Rng + ?Sized>(&self, s: &Observation, g: Goal, rng: &mut R) -> (Action, f64) {
        let greedy = self.greedy(s, g);
        let a = if rng.gen::<f64>() < self.epsilon {
            Action::from_index(rng.gen_range(0..Action::COUNT))
        } else {
            greedy
        };
        (a, self.action_prob(s, g, a))
    }

    pub fn action_prob(&self, s: &Observation, g: Goal, a: Action) -> f64 {
        let uniform = self.epsilon / Action::COUNT as f64;
        if a == self.greedy(s, g) {
            1.0 - self.epsilon + uniform
        } else {
            uniform
        }
    }

    /// Backup target: 0 on reaching the goal (absorbing), otherwise
    /// `−1 + γ max_a' Q(s', g, a')`.
    pub fn target(&self, next: &Observation, g: Goal) -> f64 {
        let r = sparse_reward(next, g);
        if r == 0.0 {
            0.0
        } else {
            r + self.discount * self.max_value(next, g)
        }
    }

    /// One-step backup; returns the squared TD error before the update.
    pub fn backup(&mut self, s: &Observation, a: Action, next: &Observation, g: Goal) -> f64 {
        let target = self.target(next, g);
        let idx = self.base(s, g) + a.index();
        let err = target - self.values[idx];
        self.values[idx] += self.learning_rate * err;
        err * err
    }
}

/// Backs up an episode's transitions from last to first for each goal, so
/// one sweep carries a goal's value along the whole trajectory.
pub fn sweep_episode(
    table: &mut GoalConditionedValueTable,
    records: &[StepRecord],
    goals: &[Goal],
) -> f64 {
    let mut total = 0.0;
    for g in goals {
        for r in records.iter().rev() {
            total += table.backup(&r.obs, r.action, &r.next_obs, *g);
        }
    }
    let n = goals.len() * records.len();
    if n == 0 {
        0.0
    } else {
        total / n as f64
    }
}

/// Samples `batch` records, relabels each goal to a future achieved goal
/// of the same episode with probability `relabel_ratio`, and backs them up.
/// Returns the mean squared TD error.
pub fn train_gc_policy<R: Rng + ?Sized>(
    table: &mut GoalConditionedValueTable,
    buffer: &ReplayBuffer,
    batch: usize,
    relabel_ratio: f64,
    rng: &mut R,
) -> f64 {
    if buffer.is_empty() || batch == 0 {
        return 0.0;
    }
    let mut total = 0.0;
    for _ in 0..batch {
        let i = rng.gen_range(0..buffer.len());
        let rec = buffer.get(i);
        let goal = if rng.gen::<f64>() < relabel_ratio {
            let ep = buffer.episode_of(i);
            let j = rng.gen_range(i..ep.end);
            achieved_goal(&buffer.get(j).next_obs)
        } else {
            rec.subgoal
        };
        total += table.backup(&rec.obs, rec.action, &rec.next_obs, goal);
    }
    total / batch as f64
}
