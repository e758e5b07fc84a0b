use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::adaptive::{dynamic_temperature, sample_skill, TemperatureConfig, TemperatureMode};
use crate::error::{Error, Result};
use crate::history::{local_entropy, HistoryContext, MaxEntropyTracker};
use crate::maze::{achieved_goal, Goal, MazeSpec};
use crate::skills::SkillSet;
use crate::svf::{SkillValueModel, TargetScheme};

use super::buffer::StepRecord;
use super::gc_table::GoalConditionedValueTable;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "geasd-l")]
    GeasdL,
    #[serde(rename = "geasd-h")]
    GeasdH,
    #[serde(rename = "geaps")]
    Geaps,
    #[serde(rename = "omega")]
    Omega,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::GeasdL, Method::GeasdH, Method::Geaps, Method::Omega];

    pub fn name(self) -> &'static str {
        match self {
            Method::GeasdL => "geasd-l",
            Method::GeasdH => "geasd-h",
            Method::Geaps => "geaps",
            Method::Omega => "omega",
        }
    }

    /// Whether the method enters the skill stage after reaching its sub-goal.
    pub fn uses_skills(self) -> bool {
        self != Method::Omega
    }

    /// Target scheme of the learned skill values, if any.
    pub fn scheme(self) -> Option<TargetScheme> {
        match self {
            Method::GeasdL => Some(TargetScheme::Low),
            Method::GeasdH => Some(TargetScheme::High),
            _ => None,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown method `{s}` (expected geasd-l, geasd-h, geaps or omega)"
                ))
            })
    }
}

/// Source of skill values for a context.
pub trait SkillValues {
    fn skill_values(&self, h: &HistoryContext) -> Vec<f64>;
}

impl SkillValues for SkillValueModel {
    fn skill_values(&self, h: &HistoryContext) -> Vec<f64> {
        self.forward(h)
    }
}

impl<F: Fn(&HistoryContext) -> Vec<f64>> SkillValues for F {
    fn skill_values(&self, h: &HistoryContext) -> Vec<f64> {
        self(h)
    }
}

/// How skills are chosen in the second stage.
pub struct SkillChooser<'a> {
    pub skills: &'a SkillSet,
    /// `None` draws skills uniformly.
    pub values: Option<&'a dyn SkillValues>,
    pub temperature: TemperatureConfig,
}

/// One skill draw: the step it happened at, the temperature used (absent
/// for uniform draws) and the distribution sampled from.
#[derive(Debug, Clone, PartialEq)]
pub struct SkillDraw {
    pub step: usize,
    pub skill: usize,
    pub temperature: Option<f64>,
    pub distribution: Vec<f64>,
}

impl SkillChooser<'_> {
    /// Draws a skill for `h`, reading (not updating) the entropy maximum.
    pub fn draw<R: Rng + ?Sized>(
        &self,
        h: &HistoryContext,
        h_max: Option<f64>,
        rng: &mut R,
    ) -> Result<SkillDraw> {
        let n = self.skills.len();
        let (distribution, temperature) = match (self.values, self.temperature.mode) {
            (None, _) | (_, TemperatureMode::Uniform) => (vec![1.0 / n as f64; n], None),
            (Some(v), mode) => {
                let values = v.skill_values(h);
                let h_local = local_entropy(h)?;
                let t = match mode {
                    TemperatureMode::Static { temperature } => temperature,
                    _ => {
                        dynamic_temperature(h_local, h_max.unwrap_or(0.0), self.temperature.t_min)?
                    }
                };
                (
                    self.temperature.distribution(&values, h_local, h_max)?,
                    Some(t),
                )
            }
        };
        let skill = sample_skill(&distribution, rng)?;
        Ok(SkillDraw {
            step: h.time() as usize,
            skill,
            temperature,
            distribution,
        })
    }
}

/// Everything one episode needs, borrowed from the explorer.
pub struct EpisodeSetup<'a> {
    pub maze: &'a MazeSpec,
    pub method: Method,
    pub gc: &'a GoalConditionedValueTable,
    pub chooser: SkillChooser<'a>,
    pub context_horizon: usize,
    pub episode_len: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeTrace {
    pub episode: u64,
    pub method: Method,
    pub subgoal: Goal,
    /// Step at which the navigation stage ended.
    pub switch_step: Option<usize>,
    pub records: Vec<StepRecord>,
    pub draws: Vec<SkillDraw>,
}

impl EpisodeTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Cells visited, including the initial one.
    pub fn visited(&self) -> Vec<Goal> {
        let mut v: Vec<Goal> = self
            .records
            .first()
            .map(|r| vec![r.obs.cell])
            .unwrap_or_default();
        v.extend(self.records.iter().map(|r| r.next_obs.cell));
        v
    }

    /// One whitespace-separated line per step:
    /// `episode step x y action nx ny skill xi behavior_prob gx gy`, with `-`
    /// for an absent skill.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "# method {} subgoal {} {} switch {}\n",
            self.method,
            self.subgoal.x,
            self.subgoal.y,
            self.switch_step.map_or("-".to_string(), |t| t.to_string())
        );
        for r in &self.records {
            out.push_str(&format!(
                "{} {} {} {} {} {} {} {} {} {:?} {} {}\n",
                r.episode,
                r.step,
                r.obs.cell.x,
                r.obs.cell.y,
                r.action.symbol(),
                r.next_obs.cell.x,
                r.next_obs.cell.y,
                r.skill.map_or("-".to_string(), |z| z.to_string()),
                u8::from(r.skill_start),
                r.behavior_prob,
                r.subgoal.x,
                r.subgoal.y
            ));
        }
        out
    }
}

/// Runs one episode of the two-stage loop: goal-conditioned navigation
/// towards `subgoal`, then (for skill methods) a fresh skill every `k`
/// steps until `episode_len` actions have been taken.
///
/// `tracker` sees every context of the episode, so its maximum spans all
/// episodes it has been used for.
pub fn run_episode<R: Rng + ?Sized>(
    setup: &EpisodeSetup<'_>,
    subgoal: Goal,
    episode: u64,
    tracker: &mut MaxEntropyTracker,
    rng: &mut R,
) -> Result<EpisodeTrace> {
    let maze = setup.maze;
    let k = setup.chooser.skills.horizon();
    let mut s = maze.start_observation();
    let mut h = HistoryContext::new(setup.context_horizon, s);
    tracker.observe(&h)?;
    let mut navigating = true;
    let mut dt = 0usize;
    let mut skill: Option<usize> = None;
    let mut fresh = false;
    let mut switch_step = None;
    let mut records = Vec::with_capacity(setup.episode_len);
    let mut draws = Vec::new();

    for t in 0..setup.episode_len {
        let (a, prob) = if navigating {
            setup.gc.act(&s, subgoal, rng)
        } else {
            dt += 1;
            let z = skill.expect("a skill is drawn on entering the second stage");
            setup.chooser.skills.get(z).sample_action(&s, rng)
        };
        let next = maze.step(&s, a);
        records.push(StepRecord {
            obs: s,
            action: a,
            next_obs: next,
            skill: if navigating { None } else { skill },
            skill_start: !navigating && fresh,
            behavior_prob: prob,
            subgoal,
            episode,
            step: t as u32,
        });
        fresh = false;
        h.push(a, next);
        tracker.observe(&h)?;
        s = next;
        let now = t + 1;
        if navigating && setup.method.uses_skills() && achieved_goal(&s) == subgoal {
            navigating = false;
            dt = 0;
            switch_step = Some(now);
        }
        if !navigating && dt % k == 0 && now < setup.episode_len {
            dt = 0;
            let d = setup.chooser.draw(&h, tracker.max(), rng)?;
            skill = Some(d.skill);
            fresh = true;
            draws.push(d);
        }
    }
    Ok(EpisodeTrace {
        episode,
        method: setup.method,
        subgoal,
        switch_step,
        records,
        draws,
    })
}
