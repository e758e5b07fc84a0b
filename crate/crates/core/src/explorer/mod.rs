//! The two-stage exploration loop, its replay buffer, the tabular
//! goal-conditioned controller and sub-goal selection.

mod buffer;
mod episode;
mod gc_table;
mod subgoal;

pub use buffer::{ReplayBuffer, StepRecord, DEFAULT_BUFFER_CAPACITY};
pub use episode::{
    run_episode, EpisodeSetup, EpisodeTrace, Method, SkillChooser, SkillDraw, SkillValues,
};
pub use gc_table::{sweep_episode, train_gc_policy, GcConfig, GoalConditionedValueTable};
pub use subgoal::{
    desired_goal_probability, kl_desired_achieved, kl_from_histogram, smoothed_density,
    DensityEstimator, SubGoalSelector, HISTOGRAM_SMOOTHING,
};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::adaptive::TemperatureConfig;
use crate::error::{Error, Result};
use crate::history::MaxEntropyTracker;
use crate::maze::{MazeSpec, DEFAULT_EPISODE_LEN};
use crate::skills::{SkillSet, DEFAULT_SKILL_EPSILON, DEFAULT_SKILL_HORIZON};
use crate::svf::{
    build_batch, train_step, Architecture, BatchConfig, DataScope, Optimizer, OptimizerKind,
    SkillValueModel,
};

/// Skill-value learner settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvfConfig {
    pub hidden: usize,
    pub batch_size: usize,
    pub step_size: f64,
    pub optimizer: OptimizerKind,
    pub clip_ratio: f64,
    pub rho_max: f64,
    /// Environment steps between two gradient steps.
    pub train_every: usize,
}

impl Default for SvfConfig {
    fn default() -> Self {
        let b = BatchConfig::default();
        SvfConfig {
            hidden: 64,
            batch_size: b.batch_size,
            step_size: 1e-3,
            optimizer: OptimizerKind::Adam,
            clip_ratio: b.clip_ratio,
            rho_max: b.rho_max,
            train_every: 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExplorerConfig {
    pub method: Method,
    pub episode_len: usize,
    pub context_horizon: usize,
    pub skill_horizon: usize,
    pub skill_epsilon: f64,
    pub temperature: TemperatureConfig,
    pub include_actions: bool,
    pub data_scope: DataScope,
    pub svf: SvfConfig,
    pub gc: GcConfig,
    pub subgoal: SubGoalSelector,
    pub buffer_capacity: usize,
}

impl Default for ExplorerConfig {
    fn default() -> Self {
        ExplorerConfig {
            method: Method::GeasdL,
            episode_len: DEFAULT_EPISODE_LEN,
            context_horizon: 10,
            skill_horizon: DEFAULT_SKILL_HORIZON,
            skill_epsilon: DEFAULT_SKILL_EPSILON,
            temperature: TemperatureConfig::default(),
            include_actions: true,
            data_scope: DataScope::All,
            svf: SvfConfig::default(),
            gc: GcConfig::default(),
            subgoal: SubGoalSelector::default(),
            buffer_capacity: DEFAULT_BUFFER_CAPACITY,
        }
    }
}

impl ExplorerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.skill_horizon < 1 || self.context_horizon <= self.skill_horizon {
            return bad(format!(
                "need context_horizon > skill_horizon >= 1, got C = {} and k = {}",
                self.context_horizon, self.skill_horizon
            ));
        }
        if self.episode_len == 0 {
            return bad("episode_len must be positive".into());
        }
        if self.svf.hidden == 0 || self.svf.batch_size == 0 || self.svf.train_every == 0 {
            return bad("svf hidden, batch_size and train_every must be positive".into());
        }
        if !(self.svf.step_size > 0.0) {
            return bad(format!(
                "svf step_size {} must be positive",
                self.svf.step_size
            ));
        }
        if !(0.0..=1.0).contains(&self.svf.clip_ratio) || !(self.svf.rho_max > 0.0) {
            return bad("svf clip_ratio must lie in [0, 1] and rho_max be positive".into());
        }
        if self.gc.train_every == 0 || !(0.0..=1.0).contains(&self.gc.epsilon) {
            return bad("gc train_every must be positive and epsilon in [0, 1]".into());
        }
        if !(0.0..=1.0).contains(&self.gc.relabel_ratio) || !(0.0..1.0).contains(&self.gc.discount)
        {
            return bad("gc relabel_ratio must lie in [0, 1] and discount in [0, 1)".into());
        }
        if !(0.0..=1.0).contains(&self.skill_epsilon) {
            return bad(format!(
                "skill_epsilon {} outside [0, 1]",
                self.skill_epsilon
            ));
        }
        self.temperature.validate()
    }
}

/// Losses reported by [`Explorer::train`].
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TrainStats {
    pub gc_updates: usize,
    pub gc_loss: f64,
    pub svf_updates: usize,
    pub svf_loss: f64,
}

/// One agent: its buffer, controllers and learning state.
#[derive(Debug, Clone)]
pub struct Explorer {
    cfg: ExplorerConfig,
    maze: MazeSpec,
    skills: SkillSet,
    gc: GoalConditionedValueTable,
    model: Option<SkillValueModel>,
    optimizer: Option<Optimizer>,
    buffer: ReplayBuffer,
    tracker: MaxEntropyTracker,
    episodes: u64,
    steps: usize,
    gc_credit: usize,
    svf_credit: usize,
    /// Episodes collected since the last training call.
    pending: Vec<Vec<StepRecord>>,
}

impl Explorer {
    pub fn new<R: Rng + ?Sized>(cfg: ExplorerConfig, maze: MazeSpec, rng: &mut R) -> Result<Self> {
        cfg.validate()?;
        let skills = SkillSet::directional(cfg.skill_epsilon, cfg.skill_horizon)?;
        let (model, optimizer) = if cfg.method.scheme().is_some() {
            let arch = Architecture::new(
                cfg.svf.hidden,
                skills.len(),
                cfg.context_horizon,
                cfg.include_actions,
            );
            let model = SkillValueModel::random(arch, rng);
            let opt = Optimizer::new(cfg.svf.optimizer, cfg.svf.step_size, arch.param_count());
            (Some(model), Some(opt))
        } else {
            (None, None)
        };
        Ok(Explorer {
            gc: GoalConditionedValueTable::new(&maze, &cfg.gc),
            buffer: ReplayBuffer::new(cfg.buffer_capacity),
            cfg,
            maze,
            skills,
            model,
            optimizer,
            tracker: MaxEntropyTracker::new(),
            episodes: 0,
            steps: 0,
            gc_credit: 0,
            svf_credit: 0,
            pending: Vec::new(),
        })
    }

    pub fn config(&self) -> &ExplorerConfig {
        &self.cfg
    }

    pub fn maze(&self) -> &MazeSpec {
        &self.maze
    }

    pub fn skills(&self) -> &SkillSet {
        &self.skills
    }

    pub fn gc_table(&self) -> &GoalConditionedValueTable {
        &self.gc
    }

    pub fn model(&self) -> Option<&SkillValueModel> {
        self.model.as_ref()
    }

    pub fn buffer(&self) -> &ReplayBuffer {
        &self.buffer
    }

    pub fn tracker(&self) -> &MaxEntropyTracker {
        &self.tracker
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn episodes(&self) -> u64 {
        self.episodes
    }

    /// Selects a sub-goal, runs one episode of `len` steps (capped at the
    /// configured episode length) and stores it in the buffer.
    pub fn collect_episode<R: Rng + ?Sized>(
        &mut self,
        len: usize,
        rng: &mut R,
    ) -> Result<EpisodeTrace> {
        let subgoal = self.cfg.subgoal.select(&self.buffer, &self.maze, rng);
        let values = self.model.as_ref().map(|m| m as &dyn SkillValues);
        let setup = EpisodeSetup {
            maze: &self.maze,
            method: self.cfg.method,
            gc: &self.gc,
            chooser: SkillChooser {
                skills: &self.skills,
                values,
                temperature: self.cfg.temperature,
            },
            context_horizon: self.cfg.context_horizon,
            episode_len: len.min(self.cfg.episode_len),
        };
        let trace = run_episode(&setup, subgoal, self.episodes, &mut self.tracker, rng)?;
        self.buffer.push_episode(&trace.records);
        self.pending.push(trace.records.clone());
        self.episodes += 1;
        self.steps += trace.len();
        self.gc_credit += trace.len();
        self.svf_credit += trace.len();
        Ok(trace)
    }

    /// Spends the step credit accumulated since the last call on
    /// goal-conditioned backups and skill-value gradient steps.
    pub fn train<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<TrainStats> {
        let mut stats = TrainStats::default();
        if self.buffer.is_empty() {
            return Ok(stats);
        }
        for recs in std::mem::take(&mut self.pending) {
            if recs.is_empty() || self.cfg.gc.sweep_goals == 0 {
                continue;
            }
            let goals: Vec<_> = (0..self.cfg.gc.sweep_goals)
                .map(|_| recs[rng.gen_range(0..recs.len())].next_obs.cell)
                .collect();
            sweep_episode(&mut self.gc, &recs, &goals);
        }
        let gc_n = self.gc_credit / self.cfg.gc.train_every;
        self.gc_credit %= self.cfg.gc.train_every;
        for _ in 0..gc_n {
            stats.gc_loss += train_gc_policy(
                &mut self.gc,
                &self.buffer,
                self.cfg.gc.batch_size,
                self.cfg.gc.relabel_ratio,
                rng,
            );
        }
        stats.gc_updates = gc_n;
        if gc_n > 0 {
            stats.gc_loss /= gc_n as f64;
        }

        let svf_n = self.svf_credit / self.cfg.svf.train_every;
        self.svf_credit %= self.cfg.svf.train_every;
        if let (Some(model), Some(opt), Some(scheme)) = (
            self.model.as_mut(),
            self.optimizer.as_mut(),
            self.cfg.method.scheme(),
        ) {
            let bc = BatchConfig {
                batch_size: self.cfg.svf.batch_size,
                clip_ratio: self.cfg.svf.clip_ratio,
                rho_max: self.cfg.svf.rho_max,
            };
            for _ in 0..svf_n {
                let batch = build_batch(
                    model,
                    &self.buffer,
                    &self.skills,
                    scheme,
                    self.cfg.data_scope,
                    &bc,
                    rng,
                )?;
                if batch.is_empty() {
                    continue;
                }
                match train_step(model, opt, &batch) {
                    Ok(loss) => {
                        stats.svf_loss += loss;
                        stats.svf_updates += 1;
                    }
                    Err(Error::NonFinite(_)) => continue,
                    Err(e) => return Err(e),
                }
            }
            if stats.svf_updates > 0 {
                stats.svf_loss /= stats.svf_updates as f64;
            }
        }
        Ok(stats)
    }
}

#[cfg(test)]
mod tests;
