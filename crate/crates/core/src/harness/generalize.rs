use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::adaptive::{TemperatureConfig, TemperatureMode, DEFAULT_T_MIN};
use crate::error::{Error, Result};
use crate::explorer::{Explorer, GoalConditionedValueTable, SkillChooser, SkillValues};
use crate::history::HistoryContext;
use crate::maze::{Action, Goal, MazeSpec};
use crate::skills::SkillSet;

use super::metrics::{max_and_mean, occupancy};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyKind {
    /// The learned goal-conditioned controller aimed at the desired goal.
    Gc,
    /// Uniformly random primitive actions.
    UniformGc,
    /// Learned skill values with a static temperature.
    SkillAdaptive,
    /// Skills drawn uniformly.
    SkillUniform,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 4] = [
        PolicyKind::Gc,
        PolicyKind::UniformGc,
        PolicyKind::SkillAdaptive,
        PolicyKind::SkillUniform,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::Gc => "gc",
            PolicyKind::UniformGc => "uniform-gc",
            PolicyKind::SkillAdaptive => "skill-adaptive",
            PolicyKind::SkillUniform => "skill-uniform",
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PolicyKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown policy kind `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneralizationConfig {
    pub episodes: usize,
    pub static_temperature: f64,
    /// Exploration noise kept by the goal-conditioned policy.
    pub gc_epsilon: f64,
}

impl Default for GeneralizationConfig {
    fn default() -> Self {
        GeneralizationConfig {
            episodes: 50,
            static_temperature: 0.01,
            gc_epsilon: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneralizationResult {
    pub maze: String,
    pub policy: PolicyKind,
    pub success_rate: f64,
    pub max_occ: f64,
    pub avg_occ: f64,
    pub occupancies: Vec<f64>,
}

/// Visited cells of one rollout and whether a desired goal was reached.
#[derive(Debug, Clone, PartialEq)]
pub struct Rollout {
    pub visited: Vec<Goal>,
    pub success: bool,
}

/// `ε`-greedy goal-conditioned rollout towards `goal` (greedy at `ε = 0`);
/// stops on arrival.
pub fn gc_rollout<R: Rng + ?Sized>(
    maze: &MazeSpec,
    table: &GoalConditionedValueTable,
    goal: Goal,
    len: usize,
    epsilon: f64,
    rng: &mut R,
) -> Rollout {
    let mut s = maze.start_observation();
    let mut visited = vec![s.cell];
    for _ in 0..len {
        let a = if epsilon > 0.0 && rng.gen::<f64>() < epsilon {
            Action::from_index(rng.gen_range(0..Action::COUNT))
        } else {
            table.greedy(&s, goal)
        };
        s = maze.step(&s, a);
        visited.push(s.cell);
        if s.cell == goal {
            return Rollout {
                visited,
                success: true,
            };
        }
    }
    Rollout {
        visited,
        success: false,
    }
}

/// Uniformly random actions for `len` steps.
pub fn uniform_rollout<R: Rng + ?Sized>(maze: &MazeSpec, len: usize, rng: &mut R) -> Rollout {
    let mut s = maze.start_observation();
    let mut visited = vec![s.cell];
    let mut success = maze.desired_goals().contains(&s.cell);
    for _ in 0..len {
        s = maze.step(&s, Action::from_index(rng.gen_range(0..Action::COUNT)));
        visited.push(s.cell);
        success |= maze.desired_goals().contains(&s.cell);
    }
    Rollout { visited, success }
}

/// Skill-only rollout: a fresh skill every `k` steps from the start.
pub fn skill_rollout<R: Rng + ?Sized>(
    maze: &MazeSpec,
    chooser: &SkillChooser<'_>,
    horizon: usize,
    len: usize,
    rng: &mut R,
) -> Result<Rollout> {
    let k = chooser.skills.horizon();
    let mut s = maze.start_observation();
    let mut h = HistoryContext::new(horizon, s);
    let mut visited = vec![s.cell];
    let mut success = maze.desired_goals().contains(&s.cell);
    let mut z = 0;
    for t in 0..len {
        if t % k == 0 {
            z = chooser.draw(&h, None, rng)?.skill;
        }
        let (a, _) = chooser.skills.get(z).sample_action(&s, rng);
        s = maze.step(&s, a);
        h.push(a, s);
        visited.push(s.cell);
        success |= maze.desired_goals().contains(&s.cell);
    }
    Ok(Rollout { visited, success })
}

/// Runs `cfg.episodes` frozen-policy episodes on `target`. Nothing is learned.
pub fn evaluate_generalization<R: Rng + ?Sized>(
    trained: &Explorer,
    target: &MazeSpec,
    kind: PolicyKind,
    cfg: &GeneralizationConfig,
    rng: &mut R,
) -> Result<GeneralizationResult> {
    if (target.width(), target.height()) != (trained.maze().width(), trained.maze().height()) {
        return Err(Error::InvalidArgument(format!(
            "target maze {}x{} differs from the training maze {}x{}",
            target.width(),
            target.height(),
            trained.maze().width(),
            trained.maze().height()
        )));
    }
    let len = trained.config().episode_len;
    let horizon = trained.config().context_horizon;
    let skills: &SkillSet = trained.skills();
    let temperature = TemperatureConfig {
        mode: TemperatureMode::Static {
            temperature: cfg.static_temperature,
        },
        t_min: DEFAULT_T_MIN,
    };
    let values: Option<&dyn SkillValues> = match kind {
        PolicyKind::SkillAdaptive => Some(trained.model().ok_or_else(|| {
            Error::InvalidArgument("the trained agent has no skill value model".into())
        })?),
        _ => None,
    };
    let chooser = SkillChooser {
        skills,
        values,
        temperature,
    };
    let goals = target.desired_goals();
    let mut occ = Vec::with_capacity(cfg.episodes);
    let mut wins = 0;
    for i in 0..cfg.episodes {
        let r = match kind {
            PolicyKind::Gc => gc_rollout(
                target,
                trained.gc_table(),
                goals[i % goals.len()],
                len,
                cfg.gc_epsilon,
                rng,
            ),
            PolicyKind::UniformGc => uniform_rollout(target, len, rng),
            PolicyKind::SkillAdaptive | PolicyKind::SkillUniform => {
                skill_rollout(target, &chooser, horizon, len, rng)?
            }
        };
        wins += usize::from(r.success);
        occ.push(occupancy(&r.visited, target));
    }
    let (max_occ, avg_occ) = max_and_mean(&occ);
    Ok(GeneralizationResult {
        maze: target.name().to_string(),
        policy: kind,
        success_rate: wins as f64 / cfg.episodes.max(1) as f64,
        max_occ,
        avg_occ,
        occupancies: occ,
    })
}
