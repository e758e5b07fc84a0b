use std::ops::Range;

use crate::history::{ContextEntry, GoalHistogram, HistoryContext};
use crate::maze::{Action, Goal, Observation};

/// Default replay capacity in transitions.
pub const DEFAULT_BUFFER_CAPACITY: usize = 5_000_000;

/// One low-level transition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub obs: Observation,
    pub action: Action,
    pub next_obs: Observation,
    /// Active skill, `None` during goal-conditioned navigation.
    pub skill: Option<usize>,
    /// `ξ`: this transition starts a fresh skill execution.
    pub skill_start: bool,
    /// `π_b(a|s)` of the policy that produced the action.
    pub behavior_prob: f64,
    pub subgoal: Goal,
    pub episode: u64,
    pub step: u32,
}

/// Append-only transition store. Episodes are stored contiguously; when the
/// capacity is exceeded the oldest whole episodes are dropped.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    records: Vec<StepRecord>,
    episodes: Vec<Range<usize>>,
    skill_indices: Vec<usize>,
    start_indices: Vec<usize>,
    goals: GoalHistogram,
    capacity: usize,
}

impl Default for ReplayBuffer {
    fn default() -> Self {
        ReplayBuffer::new(DEFAULT_BUFFER_CAPACITY)
    }
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        ReplayBuffer {
            records: Vec::new(),
            episodes: Vec::new(),
            skill_indices: Vec::new(),
            start_indices: Vec::new(),
            goals: GoalHistogram::new(),
            capacity: capacity.max(1),
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn records(&self) -> &[StepRecord] {
        &self.records
    }

    pub fn get(&self, i: usize) -> &StepRecord {
        &self.records[i]
    }

    pub fn episodes(&self) -> &[Range<usize>] {
        &self.episodes
    }

    /// Indices of transitions executed under a skill.
    pub fn skill_indices(&self) -> &[usize] {
        &self.skill_indices
    }

    /// Indices of transitions with `ξ = 1`.
    pub fn skill_start_indices(&self) -> &[usize] {
        &self.start_indices
    }

    /// Appends one episode's transitions. Records must share an episode id
    /// and be in step order.
    pub fn push_episode(&mut self, records: &[StepRecord]) {
        if records.is_empty() {
            return;
        }
        debug_assert!(records
            .windows(2)
            .all(|w| w[0].episode == w[1].episode && w[0].step < w[1].step));
        while !self.episodes.is_empty() && self.records.len() + records.len() > self.capacity {
            self.drop_oldest_episode();
        }
        let base = self.records.len();
        self.goals.add(records[0].obs.cell);
        for (i, r) in records.iter().enumerate() {
            self.goals.add(r.next_obs.cell);
            if r.skill.is_some() {
                self.skill_indices.push(base + i);
            }
            if r.skill_start {
                self.start_indices.push(base + i);
            }
        }
        self.records.extend_from_slice(records);
        self.episodes.push(base..self.records.len());
    }

    fn drop_oldest_episode(&mut self) {
        let first = self.episodes.remove(0);
        let n = first.end;
        self.goals.remove(self.records[0].obs.cell);
        for r in &self.records[..n] {
            self.goals.remove(r.next_obs.cell);
        }
        self.records.drain(..n);
        for e in &mut self.episodes {
            *e = e.start - n..e.end - n;
        }
        let shift = |v: &mut Vec<usize>| {
            v.retain(|i| *i >= n);
            for i in v.iter_mut() {
                *i -= n;
            }
        };
        shift(&mut self.skill_indices);
        shift(&mut self.start_indices);
    }

    /// Range of the episode containing record `i`.
    pub fn episode_of(&self, i: usize) -> Range<usize> {
        let k = self.episodes.partition_point(|e| e.end <= i);
        self.episodes[k].clone()
    }

    /// `h^C_t` ending at the observation of record `i`.
    pub fn context_at(&self, i: usize, horizon: usize) -> HistoryContext {
        let ep = self.episode_of(i);
        let first = ep.start.max((i + 1).saturating_sub(horizon));
        let entries: Vec<ContextEntry> = (first..=i)
            .map(|j| ContextEntry {
                action_in: (j > ep.start).then(|| self.records[j - 1].action),
                obs: self.records[j].obs,
            })
            .collect();
        HistoryContext::from_entries(horizon, &entries, self.records[i].step as u64)
            .expect("context has at least one entry")
    }

    /// `h^C_{t+1}`: the context after record `i`'s transition.
    pub fn next_context_at(&self, i: usize, horizon: usize) -> HistoryContext {
        let r = &self.records[i];
        self.context_at(i, horizon).advanced(r.action, r.next_obs)
    }

    /// Whether record `i` is the last transition of its episode.
    pub fn is_episode_end(&self, i: usize) -> bool {
        self.episode_of(i).end == i + 1
    }

    /// Histogram of [`Self::achieved_goals`], maintained incrementally.
    pub fn goal_histogram(&self) -> &GoalHistogram {
        &self.goals
    }

    /// Every achieved goal in the buffer: each episode's first state plus all next states.
    pub fn achieved_goals(&self) -> Vec<Goal> {
        let mut out = Vec::with_capacity(self.records.len() + self.episodes.len());
        for e in &self.episodes {
            out.push(self.records[e.start].obs.cell);
            out.extend(self.records[e.clone()].iter().map(|r| r.next_obs.cell));
        }
        out
    }
}
