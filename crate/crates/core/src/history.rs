//! Sliding historical context, local entropy of achieved goals and the
//! entropy-change intrinsic reward.

use std::collections::{BTreeMap, VecDeque};

use crate::error::{Error, Result};
use crate::maze::{achieved_goal, Action, Goal, Observation};

/// Shannon entropy (nats) of an empirical distribution given by counts.
pub fn entropy_of_counts<I>(counts: I) -> f64
where
    I: IntoIterator<Item = usize>,
{
    let counts: Vec<usize> = counts.into_iter().filter(|c| *c > 0).collect();
    let total: usize = counts.iter().sum();
    if total == 0 {
        return 0.0;
    }
    let t = total as f64;
    -counts
        .iter()
        .map(|&n| {
            let p = n as f64 / t;
            p * p.ln()
        })
        .sum::<f64>()
}

/// Shannon entropy (nats) of a probability vector. Zero entries contribute nothing.
pub fn entropy_of_probs(p: &[f64]) -> f64 {
    -p.iter()
        .filter(|v| **v > 0.0)
        .map(|v| v * v.ln())
        .sum::<f64>()
}

/// Goal occurrence counts inside a window.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GoalHistogram {
    counts: BTreeMap<Goal, usize>,
    total: usize,
}

impl GoalHistogram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_goals<'a, I: IntoIterator<Item = &'a Goal>>(goals: I) -> Self {
        let mut h = Self::new();
        for g in goals {
            h.add(*g);
        }
        h
    }

    pub fn add(&mut self, g: Goal) {
        *self.counts.entry(g).or_insert(0) += 1;
        self.total += 1;
    }

    pub fn remove(&mut self, g: Goal) {
        if let Some(n) = self.counts.get_mut(&g) {
            *n -= 1;
            self.total -= 1;
            if *n == 0 {
                self.counts.remove(&g);
            }
        }
    }

    pub fn count(&self, g: &Goal) -> usize {
        self.counts.get(g).copied().unwrap_or(0)
    }

    pub fn total(&self) -> usize {
        self.total
    }

    pub fn distinct(&self) -> usize {
        self.counts.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Goal, &usize)> {
        self.counts.iter()
    }

    pub fn entropy(&self) -> f64 {
        entropy_of_counts(self.counts.values().copied())
    }
}

/// One context entry: an observation and the action that led into it
/// (`None` for the first observation of an episode).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContextEntry {
    pub action_in: Option<Action>,
    pub obs: Observation,
}

/// The most recent `C` observations of the current episode, each paired
/// with its incoming action. `time` is the step index of the newest entry.
#[derive(Debug, Clone, PartialEq)]
pub struct HistoryContext {
    entries: VecDeque<ContextEntry>,
    capacity: usize,
    time: u64,
}

impl HistoryContext {
    /// A fresh context holding the episode's first observation at time 0.
    pub fn new(capacity: usize, s0: Observation) -> Self {
        assert!(capacity >= 1, "context horizon must be at least 1");
        let mut entries = VecDeque::with_capacity(capacity);
        entries.push_back(ContextEntry {
            action_in: None,
            obs: s0,
        });
        HistoryContext {
            entries,
            capacity,
            time: 0,
        }
    }

    /// Builds a context from explicit entries; only the last `capacity` are kept.
    pub fn from_entries(capacity: usize, entries: &[ContextEntry], time: u64) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::EmptyContext);
        }
        assert!(capacity >= 1, "context horizon must be at least 1");
        let skip = entries.len().saturating_sub(capacity);
        Ok(HistoryContext {
            entries: entries[skip..].iter().copied().collect(),
            capacity,
            time,
        })
    }

    /// Appends `(a, s')`, evicting the oldest entry when full.
    pub fn push(&mut self, action: Action, next: Observation) {
        if self.entries.len() == self.capacity {
            self.entries.pop_front();
        }
        self.entries.push_back(ContextEntry {
            action_in: Some(action),
            obs: next,
        });
        self.time += 1;
    }

    pub fn advanced(&self, action: Action, next: Observation) -> Self {
        let mut h = self.clone();
        h.push(action, next);
        h
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn time(&self) -> u64 {
        self.time
    }

    pub fn entries(&self) -> impl ExactSizeIterator<Item = &ContextEntry> + DoubleEndedIterator {
        self.entries.iter()
    }

    pub fn current(&self) -> &Observation {
        &self.entries.back().expect("context is never empty").obs
    }

    /// `Φ(h)`: achieved goals in time order.
    pub fn achieved(&self) -> Vec<Goal> {
        self.entries.iter().map(|e| achieved_goal(&e.obs)).collect()
    }

    pub fn histogram(&self) -> GoalHistogram {
        GoalHistogram::from_goals(self.achieved().iter())
    }

    /// Keeps only the most recent `len` entries.
    pub fn truncated(&self, len: usize) -> Self {
        let len = len.clamp(1, self.entries.len());
        let skip = self.entries.len() - len;
        HistoryContext {
            entries: self.entries.iter().skip(skip).copied().collect(),
            capacity: self.capacity,
            time: self.time,
        }
    }
}

/// Entropy of the empirical achieved-goal distribution over the window.
/// Windows shorter than `C` normalise by their actual length.
pub fn local_entropy(h: &HistoryContext) -> Result<f64> {
    if h.is_empty() {
        return Err(Error::EmptyContext);
    }
    Ok(h.histogram().entropy())
}

/// `H(Φ(h_next)) − H(Φ(h_t))` for contexts exactly one step apart.
pub fn r_info(h_t: &HistoryContext, h_next: &HistoryContext) -> Result<f64> {
    if h_next.time() != h_t.time() + 1 || h_next.capacity() != h_t.capacity() {
        return Err(Error::NotAdjacent);
    }
    // Everything in h_next except its newest entry must be a suffix of h_t.
    let carried = h_next.len() - 1;
    let expected = if h_t.len() == h_t.capacity() {
        h_t.len() - 1
    } else {
        h_t.len()
    };
    if carried != expected {
        return Err(Error::NotAdjacent);
    }
    let tail = h_t.entries().skip(h_t.len() - carried);
    if !tail.zip(h_next.entries()).all(|(a, b)| a == b) {
        return Err(Error::NotAdjacent);
    }
    Ok(local_entropy(h_next)? - local_entropy(h_t)?)
}

/// `β·H_past + (1−β)·H_local` with `β = C / |B|`.
pub fn overall_entropy_bound(
    h_past: f64,
    h_local: f64,
    horizon: usize,
    buffer_len: usize,
) -> Result<f64> {
    if horizon == 0 {
        return Err(Error::InvalidArgument(
            "context horizon must be positive".into(),
        ));
    }
    if buffer_len < horizon {
        return Err(Error::BufferTooSmall {
            horizon,
            buffer_len,
        });
    }
    let beta = horizon as f64 / buffer_len as f64;
    Ok(beta * h_past + (1.0 - beta) * h_local)
}

/// Concavity bound with the window's actual share of the buffer as its weight:
/// `(1 − C/|B|)·H_past + (C/|B|)·H_local`.
pub fn mixture_entropy_bound(
    h_past: f64,
    h_local: f64,
    horizon: usize,
    buffer_len: usize,
) -> Result<f64> {
    if horizon == 0 {
        return Err(Error::InvalidArgument(
            "context horizon must be positive".into(),
        ));
    }
    if buffer_len < horizon {
        return Err(Error::BufferTooSmall {
            horizon,
            buffer_len,
        });
    }
    let w = horizon as f64 / buffer_len as f64;
    Ok((1.0 - w) * h_past + w * h_local)
}

/// Running maximum of local entropy over every context seen in a run.
#[derive(Debug, Clone, Default)]
pub struct MaxEntropyTracker {
    max: Option<f64>,
}

impl MaxEntropyTracker {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn observe_entropy(&mut self, h: f64) -> f64 {
        let m = self.max.map_or(h, |m| m.max(h));
        self.max = Some(m);
        m
    }

    pub fn observe(&mut self, h: &HistoryContext) -> Result<f64> {
        Ok(self.observe_entropy(local_entropy(h)?))
    }

    /// The running maximum, or `None` before the first context.
    pub fn max(&self) -> Option<f64> {
        self.max
    }
}

/// Running maximum over a stream of contexts.
pub fn max_recorded_entropy<'a, I>(stream: I) -> Result<f64>
where
    I: IntoIterator<Item = &'a HistoryContext>,
{
    let mut tracker = MaxEntropyTracker::new();
    for h in stream {
        tracker.observe(h)?;
    }
    tracker.max().ok_or(Error::EmptyContext)
}
