use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::explorer::ReplayBuffer;
use crate::history::{local_entropy, r_info, HistoryContext};
use crate::skills::SkillSet;

use super::model::{encode_context, ForwardCache, SkillValueModel};

/// Probability that a training context is randomly cut to a shorter suffix.
pub const DEFAULT_CLIP_RATIO: f64 = 0.5;

/// Upper clip applied to importance ratios.
pub const DEFAULT_RHO_MAX: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetScheme {
    /// Skill-level entropy change over `k` steps, no bootstrap.
    High,
    /// One-step entropy change bootstrapped on the same skill.
    Low,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataScope {
    All,
    SkillOnly,
}

/// `γ̂ = 1 − 1/k`.
pub fn gamma_hat(k: usize) -> f64 {
    1.0 - 1.0 / k as f64
}

/// High-level target: the sum of one-step entropy changes across the
/// `k + 1` consecutive contexts `h_t, …, h_{t+k}` of one skill execution.
pub fn y_high(contexts: &[HistoryContext]) -> Result<f64> {
    if contexts.len() < 2 {
        return Err(Error::InvalidArgument(
            "a skill execution needs at least two contexts".into(),
        ));
    }
    contexts.windows(2).map(|w| r_info(&w[0], &w[1])).sum()
}

/// Low-level target `r_info + γ̂ · Q(h_{t+1}, z)`; the bootstrap is dropped
/// on an episode's final transition.
pub fn y_low(reward: f64, next_value: f64, gamma_hat: f64, terminal: bool) -> f64 {
    if terminal {
        reward
    } else {
        reward + gamma_hat * next_value
    }
}

/// One regression sample: an encoded context, the skill whose value is
/// regressed, its target and importance weight.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchSample {
    pub input: Vec<f64>,
    pub len: usize,
    pub skill: usize,
    pub target: f64,
    pub weight: f64,
    pub truncated: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ContextBatch {
    pub samples: Vec<BatchSample>,
}

impl ContextBatch {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BatchConfig {
    pub batch_size: usize,
    pub clip_ratio: f64,
    pub rho_max: f64,
}

impl Default for BatchConfig {
    fn default() -> Self {
        BatchConfig {
            batch_size: 64,
            clip_ratio: DEFAULT_CLIP_RATIO,
            rho_max: DEFAULT_RHO_MAX,
        }
    }
}

fn maybe_truncate<R: Rng + ?Sized>(
    h: &HistoryContext,
    clip_ratio: f64,
    rng: &mut R,
) -> (usize, bool) {
    if rng.gen::<f64>() < clip_ratio {
        (rng.gen_range(1..=h.len()), true)
    } else {
        (h.len(), false)
    }
}

/// Samples a training batch from the replay buffer.
///
/// The high scheme only uses `ξ = 1` records that have `k` transitions of
/// the same skill after them in their episode. The low scheme draws the
/// regressed skill from the skill posterior of the recorded action and
/// weights the sample by the clipped ratio `σ(a|ψ(s), z) / π_b(a|s)`.
pub fn build_batch<R: Rng + ?Sized>(
    model: &SkillValueModel,
    buffer: &ReplayBuffer,
    skills: &SkillSet,
    scheme: TargetScheme,
    scope: DataScope,
    cfg: &BatchConfig,
    rng: &mut R,
) -> Result<ContextBatch> {
    let arch = *model.arch();
    let horizon = arch.horizon;
    let k = skills.horizon();
    let mut batch = ContextBatch::default();

    match scheme {
        TargetScheme::High => {
            let starts = buffer.skill_start_indices();
            let eligible = |i: usize| {
                let ep = buffer.episode_of(i);
                let z = buffer.get(i).skill;
                i + k <= ep.end && (i..i + k).all(|j| buffer.get(j).skill == z)
            };
            if starts.is_empty() {
                return Ok(batch);
            }
            let mut attempts = 0;
            while batch.len() < cfg.batch_size && attempts < cfg.batch_size * 8 {
                attempts += 1;
                let i = starts[rng.gen_range(0..starts.len())];
                if !eligible(i) {
                    continue;
                }
                let mut contexts = Vec::with_capacity(k + 1);
                contexts.push(buffer.context_at(i, horizon));
                for j in i..i + k {
                    contexts.push(buffer.next_context_at(j, horizon));
                }
                let target = y_high(&contexts)?;
                let (len, truncated) = maybe_truncate(&contexts[0], cfg.clip_ratio, rng);
                let input = encode_context(&arch, &contexts[0].truncated(len));
                batch.samples.push(BatchSample {
                    len: input.len() / arch.input_width,
                    input,
                    skill: buffer
                        .get(i)
                        .skill
                        .expect("skill-start records carry a skill"),
                    target,
                    weight: 1.0,
                    truncated,
                });
            }
        }
        TargetScheme::Low => {
            let pool_len = match scope {
                DataScope::All => buffer.len(),
                DataScope::SkillOnly => buffer.skill_indices().len(),
            };
            if pool_len == 0 {
                return Ok(batch);
            }
            let g = gamma_hat(k);
            for _ in 0..cfg.batch_size {
                let pick = rng.gen_range(0..pool_len);
                let i = match scope {
                    DataScope::All => pick,
                    DataScope::SkillOnly => buffer.skill_indices()[pick],
                };
                let rec = buffer.get(i);
                let h_t = buffer.context_at(i, horizon);
                let h_next = h_t.advanced(rec.action, rec.next_obs);
                let reward = r_info(&h_t, &h_next)?;
                let posterior = skills.posterior(&rec.obs, rec.action)?;
                let z = crate::adaptive::sample_skill(&posterior, rng)?;
                let sigma = skills.get(z).prob(&rec.obs, rec.action);
                let rho = if rec.behavior_prob > 0.0 {
                    (sigma / rec.behavior_prob).clamp(0.0, cfg.rho_max)
                } else {
                    cfg.rho_max
                };
                let terminal = buffer.is_episode_end(i);
                let (len, truncated) = maybe_truncate(&h_t, cfg.clip_ratio, rng);
                let next_value = if terminal {
                    0.0
                } else {
                    model.forward(&h_next.truncated(len))[z]
                };
                let input = encode_context(&arch, &h_t.truncated(len));
                batch.samples.push(BatchSample {
                    len: input.len() / arch.input_width,
                    input,
                    skill: z,
                    target: y_low(reward, next_value, g, terminal),
                    weight: rho,
                    truncated,
                });
            }
        }
    }
    Ok(batch)
}

/// Weighted mean squared error and its gradient with respect to all parameters.
pub fn loss_and_gradient(model: &SkillValueModel, batch: &ContextBatch) -> Result<(f64, Vec<f64>)> {
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let n = batch.len() as f64;
    let nz = model.arch().skills;
    let mut grad = vec![0.0; model.params().len()];
    let mut cache = ForwardCache::default();
    let mut loss = 0.0;
    let mut dq = vec![0.0; nz];
    for s in &batch.samples {
        let q = model.forward_cached(&s.input, &mut cache);
        let err = q[s.skill] - s.target;
        loss += s.weight * err * err / n;
        dq.iter_mut().for_each(|v| *v = 0.0);
        dq[s.skill] = 2.0 * s.weight * err / n;
        model.backward(&s.input, &cache, &dq, &mut grad);
    }
    Ok((loss, grad))
}

pub fn batch_loss(model: &SkillValueModel, batch: &ContextBatch) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let n = batch.len() as f64;
    Ok(batch
        .samples
        .iter()
        .map(|s| {
            let err = model.forward_encoded(&s.input)[s.skill] - s.target;
            s.weight * err * err / n
        })
        .sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    Sgd,
    Adam,
}

/// First-order optimiser state over a flat parameter vector.
#[derive(Debug, Clone)]
pub struct Optimizer {
    kind: OptimizerKind,
    step_size: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, step_size: f64, params: usize) -> Self {
        let state = if kind == OptimizerKind::Adam {
            params
        } else {
            0
        };
        Optimizer {
            kind,
            step_size,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m: vec![0.0; state],
            v: vec![0.0; state],
            t: 0,
        }
    }

    pub fn sgd(step_size: f64) -> Self {
        Optimizer::new(OptimizerKind::Sgd, step_size, 0)
    }

    pub fn kind(&self) -> OptimizerKind {
        self.kind
    }

    pub fn apply(&mut self, params: &mut [f64], grad: &[f64]) {
        match self.kind {
            OptimizerKind::Sgd => {
                for (p, g) in params.iter_mut().zip(grad) {
                    *p -= self.step_size * g;
                }
            }
            OptimizerKind::Adam => {
                if self.m.len() != params.len() {
                    self.m = vec![0.0; params.len()];
                    self.v = vec![0.0; params.len()];
                }
                self.t += 1;
                let c1 = 1.0 - self.beta1.powi(self.t);
                let c2 = 1.0 - self.beta2.powi(self.t);
                for i in 0..params.len() {
                    let g = grad[i];
                    self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
                    self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
                    let mhat = self.m[i] / c1;
                    let vhat = self.v[i] / c2;
                    params[i] -= self.step_size * mhat / (vhat.sqrt() + self.eps);
                }
            }
        }
    }
}

/// One optimisation step on the weighted squared error. Returns the loss
/// before the update; a non-finite loss is reported and the step skipped.
pub fn train_step(
    model: &mut SkillValueModel,
    optimizer: &mut Optimizer,
    batch: &ContextBatch,
) -> Result<f64> {
    let (loss, grad) = loss_and_gradient(model, batch)?;
    if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::NonFinite(format!("training loss {loss}")));
    }
    optimizer.apply(model.params_mut(), &grad);
    Ok(loss)
}

/// Relative-error floor used when both gradients are tiny.
pub const GRADIENT_CHECK_FLOOR: f64 = 1e-6;

/// Maximum relative error between backpropagated and central-difference
/// gradients (perturbation `1e-5`) over every parameter.
pub fn gradient_check(model: &SkillValueModel, batch: &ContextBatch) -> Result<f64> {
    let (_, analytic) = loss_and_gradient(model, batch)?;
    let eps = 1e-5;
    let mut probe = model.clone();
    let mut worst: f64 = 0.0;
    for i in 0..analytic.len() {
        let orig = probe.params()[i];
        probe.params_mut()[i] = orig + eps;
        let plus = batch_loss(&probe, batch)?;
        probe.params_mut()[i] = orig - eps;
        let minus = batch_loss(&probe, batch)?;
        probe.params_mut()[i] = orig;
        let numeric = (plus - minus) / (2.0 * eps);
        let denom = analytic[i]
            .abs()
            .max(numeric.abs())
            .max(GRADIENT_CHECK_FLOOR);
        worst = worst.max((analytic[i] - numeric).abs() / denom);
    }
    Ok(worst)
}

/// Endpoint difference `H(Φ(h_{t+k})) − H(Φ(h_t))`.
pub fn endpoint_entropy_change(first: &HistoryContext, last: &HistoryContext) -> Result<f64> {
    Ok(local_entropy(last)? - local_entropy(first)?)
}
