//! Skill value functions `Q(h, z)`: a recurrent context encoder, the
//! entropy-change regression targets and a text checkpoint format.

mod model;
mod train;

use std::fmt::Write as _;
use std::path::Path;

pub use model::{
    encode_context, Architecture, SkillValueModel, DEFAULT_POSITION_SCALE, INPUT_WIDTH,
};
pub use train::{
    batch_loss, build_batch, endpoint_entropy_change, gamma_hat, gradient_check, loss_and_gradient,
    train_step, y_high, y_low, BatchConfig, BatchSample, ContextBatch, DataScope, Optimizer,
    OptimizerKind, TargetScheme, DEFAULT_CLIP_RATIO, DEFAULT_RHO_MAX, GRADIENT_CHECK_FLOOR,
};

use crate::error::{Error, Result};

const CHECKPOINT_MAGIC: &str = "geasd-svf v1";

/// Serialises the architecture header and flat parameters as text.
/// Parameters use Rust's shortest round-trip float formatting.
pub fn checkpoint_to_string(model: &SkillValueModel) -> String {
    let a = model.arch();
    let mut out = String::new();
    writeln!(out, "{CHECKPOINT_MAGIC}").unwrap();
    writeln!(out, "input_width {}", a.input_width).unwrap();
    writeln!(out, "hidden {}", a.hidden).unwrap();
    writeln!(out, "skills {}", a.skills).unwrap();
    writeln!(out, "horizon {}", a.horizon).unwrap();
    writeln!(out, "include_actions {}", a.include_actions).unwrap();
    writeln!(out, "position_scale {:?}", a.position_scale).unwrap();
    writeln!(out, "params {}", model.params().len()).unwrap();
    for p in model.params() {
        writeln!(out, "{p:?}").unwrap();
    }
    out
}

pub fn checkpoint_from_str(text: &str) -> Result<SkillValueModel> {
    let bad = |msg: String| Error::Checkpoint(msg);
    let mut lines = text.lines();
    if lines.next() != Some(CHECKPOINT_MAGIC) {
        return Err(bad("missing header".into()));
    }
    let mut field = |name: &str| -> Result<String> {
        let line = lines
            .next()
            .ok_or_else(|| bad(format!("missing `{name}`")))?;
        let (k, v) = line
            .split_once(' ')
            .ok_or_else(|| bad(format!("malformed line `{line}`")))?;
        if k != name {
            return Err(bad(format!("expected `{name}`, found `{k}`")));
        }
        Ok(v.to_string())
    };
    let num = |v: String| v.parse::<usize>().map_err(|e| bad(e.to_string()));
    let input_width = num(field("input_width")?)?;
    let hidden = num(field("hidden")?)?;
    let skills = num(field("skills")?)?;
    let horizon = num(field("horizon")?)?;
    let include_actions = field("include_actions")?
        .parse::<bool>()
        .map_err(|e| bad(e.to_string()))?;
    let position_scale = field("position_scale")?
        .parse::<f64>()
        .map_err(|e| bad(e.to_string()))?;
    let count = num(field("params")?)?;
    if input_width != INPUT_WIDTH {
        return Err(bad(format!("unsupported input width {input_width}")));
    }
    let arch = Architecture {
        input_width,
        hidden,
        skills,
        horizon,
        include_actions,
        position_scale,
    };
    let params: Vec<f64> = lines
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            l.trim()
                .parse::<f64>()
                .map_err(|e| bad(format!("parameter `{l}`: {e}")))
        })
        .collect::<Result<_>>()?;
    if params.len() != count || count != arch.param_count() {
        return Err(bad(format!(
            "expected {} parameters, header says {count}, found {}",
            arch.param_count(),
            params.len()
        )));
    }
    Ok(SkillValueModel::from_params(arch, params).expect("length checked"))
}

pub fn save_checkpoint(model: &SkillValueModel, path: &Path) -> Result<()> {
    std::fs::write(path, checkpoint_to_string(model)).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<SkillValueModel> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    checkpoint_from_str(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::explorer::{ReplayBuffer, StepRecord};
    use crate::history::{local_entropy, HistoryContext};
    use crate::maze::{builtin, Action, Cell, Observation};
    use crate::skills::SkillSet;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn obs(x: i32, y: i32) -> Observation {
        Observation {
            cell: Cell::new(x, y),
            offset: (0, 0),
            wall_bits: [false, true, false, false],
        }
    }

    fn random_context<R: Rng>(rng: &mut R, len: usize, horizon: usize) -> HistoryContext {
        let mut h = HistoryContext::new(horizon, obs(rng.gen_range(0..4), rng.gen_range(0..4)));
        for _ in 1..len {
            h.push(
                Action::from_index(rng.gen_range(0..4)),
                obs(rng.gen_range(0..4), rng.gen_range(0..4)),
            );
        }
        h
    }

    fn random_batch<R: Rng>(rng: &mut R, arch: &Architecture, n: usize) -> ContextBatch {
        let samples = (0..n)
            .map(|_| {
                let len = rng.gen_range(1..=arch.horizon);
                let h = random_context(rng, len, arch.horizon);
                let input = encode_context(arch, &h);
                BatchSample {
                    len: h.len(),
                    input,
                    skill: rng.gen_range(0..arch.skills),
                    target: rng.gen_range(-1.0..1.0),
                    weight: rng.gen_range(0.2..2.0),
                    truncated: false,
                }
            })
            .collect();
        ContextBatch { samples }
    }

    #[test]
    fn zero_model_outputs_zero_and_has_skill_shape() {
        let arch = Architecture::new(8, 4, 10, true);
        let m = SkillValueModel::zeros(arch);
        let h = random_context(&mut ChaCha8Rng::seed_from_u64(0), 5, 10);
        assert_eq!(m.forward(&h), vec![0.0; 4]);
        for len in 1..=10 {
            let h = random_context(&mut ChaCha8Rng::seed_from_u64(len as u64), len, 10);
            assert_eq!(m.forward(&h).len(), 4);
        }
    }

    #[test]
    fn forward_is_deterministic_and_truncates() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let arch = Architecture::new(6, 4, 3, true);
        let m = SkillValueModel::random(arch, &mut rng);
        let long = random_context(&mut rng, 8, 8);
        assert_eq!(m.forward(&long), m.forward(&long.clone()));
        // A context wider than the model's horizon only uses its last 3 entries.
        assert_eq!(m.forward(&long), m.forward(&long.truncated(3)));
    }

    #[test]
    fn excluding_actions_zeroes_action_channels() {
        let arch = Architecture::new(4, 4, 5, false);
        let h = random_context(&mut ChaCha8Rng::seed_from_u64(9), 5, 5);
        let x = encode_context(&arch, &h);
        for step in x.chunks(INPUT_WIDTH) {
            assert!(step[8..].iter().all(|v| *v == 0.0));
        }
        let with = encode_context(&Architecture::new(4, 4, 5, true), &h);
        assert!(with
            .chunks(INPUT_WIDTH)
            .skip(1)
            .all(|s| s[8..].iter().sum::<f64>() == 1.0));
    }

    #[test]
    fn gradient_check_random_small_models() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..5 {
            let arch = Architecture::new(rng.gen_range(2..=8), 4, 6, true);
            let m = SkillValueModel::random(arch, &mut rng);
            let batch = random_batch(&mut rng, &arch, 3);
            let err = gradient_check(&m, &batch).unwrap();
            assert!(err < 1e-4, "relative error {err}");
        }
    }

    #[test]
    fn gradient_check_head_only_model() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let arch = Architecture::new(4, 4, 6, true);
        let mut m = SkillValueModel::zeros(arch);
        // Only the head is non-zero, so the hidden state stays at zero and the
        // loss is quadratic in the head bias.
        let n = m.params().len();
        for p in &mut m.params_mut()[n - 4 * 4 - 4..] {
            *p = rng.gen_range(-0.5..0.5);
        }
        let batch = random_batch(&mut rng, &arch, 4);
        assert!(gradient_check(&m, &batch).unwrap() < 1e-6);
    }

    #[test]
    fn perfect_predictions_give_zero_loss_and_no_update() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let arch = Architecture::new(5, 4, 4, true);
        let mut m = SkillValueModel::random(arch, &mut rng);
        let mut batch = random_batch(&mut rng, &arch, 4);
        for s in &mut batch.samples {
            s.target = m.forward_encoded(&s.input)[s.skill];
        }
        let before = m.params().to_vec();
        for kind in [OptimizerKind::Sgd, OptimizerKind::Adam] {
            let mut opt = Optimizer::new(kind, 1e-3, before.len());
            let loss = train_step(&mut m, &mut opt, &batch).unwrap();
            assert_eq!(loss, 0.0);
            assert_eq!(m.params(), before.as_slice());
        }
    }

    #[test]
    fn small_step_decrease_matches_directional_derivative() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let arch = Architecture::new(6, 4, 5, true);
        let mut m = SkillValueModel::random(arch, &mut rng);
        let batch = random_batch(&mut rng, &arch, 1);
        let (loss, grad) = loss_and_gradient(&m, &batch).unwrap();
        let eta = 1e-4;
        let predicted = -eta * grad.iter().map(|g| g * g).sum::<f64>();
        let mut opt = Optimizer::sgd(eta);
        assert_eq!(train_step(&mut m, &mut opt, &batch).unwrap(), loss);
        let actual = batch_loss(&m, &batch).unwrap() - loss;
        assert!(actual < 0.0);
        assert!(
            (actual - predicted).abs() <= 1e-2 * predicted.abs(),
            "{actual} vs {predicted}"
        );
    }

    #[test]
    fn empty_and_non_finite_batches_are_errors() {
        let arch = Architecture::new(3, 4, 4, true);
        let mut m = SkillValueModel::zeros(arch);
        let mut opt = Optimizer::sgd(1e-3);
        assert!(matches!(
            train_step(&mut m, &mut opt, &ContextBatch::default()),
            Err(Error::EmptyBatch)
        ));
        let mut batch = random_batch(&mut ChaCha8Rng::seed_from_u64(1), &arch, 2);
        batch.samples[0].target = f64::NAN;
        let before = m.params().to_vec();
        assert!(matches!(
            train_step(&mut m, &mut opt, &batch),
            Err(Error::NonFinite(_))
        ));
        assert_eq!(m.params(), before.as_slice());
    }

    #[test]
    fn gamma_hat_examples_and_weight_bound() {
        assert_eq!(gamma_hat(2), 0.5);
        assert!((gamma_hat(25) - 0.96).abs() < 1e-15);
        for k in 1..=100usize {
            let w = gamma_hat(k).powi(k as i32 - 1);
            assert!(w > (-1.0f64).exp(), "k = {k}: {w}");
        }
    }

    #[test]
    fn y_low_examples() {
        assert_eq!(y_low(0.3, 0.0, 0.5, false), 0.3);
        assert_eq!(y_low(0.3, 10.0, 0.5, true), 0.3);
        assert_eq!(y_low(0.3, 0.2, 0.5, false), 0.4);
    }

    /// Two-step chain: the value of the first state is the discounted sum of
    /// the two entropy changes when the second transition ends the episode.
    #[test]
    fn terminal_handling_matches_finite_horizon_enumeration() {
        let h0 = HistoryContext::new(4, obs(0, 0));
        let h1 = h0.advanced(Action::E, obs(1, 0));
        let h2 = h1.advanced(Action::E, obs(2, 0));
        let r0 = crate::history::r_info(&h0, &h1).unwrap();
        let r1 = crate::history::r_info(&h1, &h2).unwrap();
        let g = gamma_hat(2);
        // Fixed point of the backups with the terminal bootstrap dropped.
        let v1 = y_low(r1, 123.0, g, true);
        let v0 = y_low(r0, v1, g, false);
        let enumerated = r0 + g * r1;
        assert!((v0 - enumerated).abs() < 1e-15);
    }

    #[test]
    fn y_high_telescopes_and_saturated_skill_is_zero() {
        let h0 = HistoryContext::new(3, obs(0, 0));
        let h1 = h0.advanced(Action::E, obs(1, 0));
        let h2 = h1.advanced(Action::E, obs(1, 0));
        let direct = local_entropy(&h2).unwrap() - local_entropy(&h0).unwrap();
        assert!((y_high(&[h0.clone(), h1, h2]).unwrap() - direct).abs() < 1e-15);

        let mut sat = HistoryContext::new(4, obs(3, 3));
        for _ in 0..3 {
            sat.push(Action::N, obs(3, 3));
        }
        let a = sat.advanced(Action::N, obs(3, 3));
        let b = a.advanced(Action::N, obs(3, 3));
        assert_eq!(y_high(&[sat, a, b]).unwrap(), 0.0);
    }

    #[test]
    fn y_high_sums_stepwise_changes() {
        // Entropy path 0 -> 0.325083 -> 0.562335 over k = 2 steps.
        let steps = [0.325083 - 0.0, 0.562335 - 0.325083];
        assert!((steps.iter().sum::<f64>() - 0.562335).abs() < 1e-12);

        let mut h = HistoryContext::new(10, obs(0, 0));
        for _ in 1..10 {
            h.push(Action::N, obs(0, 0));
        }
        let h1 = h.advanced(Action::E, obs(1, 0));
        assert!((local_entropy(&h1).unwrap() - 0.325083).abs() < 1e-6);
        let h2 = h1.advanced(Action::E, obs(2, 0));
        let y = y_high(&[h, h1, h2.clone()]).unwrap();
        assert!((y - local_entropy(&h2).unwrap()).abs() < 1e-15);
    }

    fn skill_buffer(eps: f64) -> (ReplayBuffer, SkillSet) {
        let maze = builtin("serpentine").unwrap();
        let skills = SkillSet::directional(eps, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut buf = ReplayBuffer::new(10_000);
        for ep in 0..5u64 {
            let mut s = maze.start_observation();
            let mut recs = Vec::new();
            let mut z = 0;
            for t in 0..30u32 {
                let start = t % 2 == 0;
                if start {
                    z = rng.gen_range(0..4);
                }
                let (a, p) = skills.get(z).sample_action(&s, &mut rng);
                let next = maze.step(&s, a);
                recs.push(StepRecord {
                    obs: s,
                    action: a,
                    next_obs: next,
                    skill: Some(z),
                    skill_start: start,
                    behavior_prob: p,
                    subgoal: maze.start(),
                    episode: ep,
                    step: t,
                });
                s = next;
            }
            buf.push_episode(&recs);
        }
        (buf, skills)
    }

    #[test]
    fn on_policy_deterministic_skills_have_unit_weights() {
        let (buf, skills) = skill_buffer(0.0);
        let arch = Architecture::new(4, 4, 10, true);
        let m = SkillValueModel::zeros(arch);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let batch = build_batch(
            &m,
            &buf,
            &skills,
            TargetScheme::Low,
            DataScope::SkillOnly,
            &BatchConfig::default(),
            &mut rng,
        )
        .unwrap();
        assert_eq!(batch.len(), 64);
        assert!(batch.samples.iter().all(|s| s.weight == 1.0));
    }

    #[test]
    fn high_scheme_targets_equal_endpoint_differences() {
        let (buf, skills) = skill_buffer(0.05);
        let arch = Architecture::new(4, 4, 10, true);
        let m = SkillValueModel::zeros(arch);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let cfg = BatchConfig {
            clip_ratio: 0.0,
            ..Default::default()
        };
        let batch = build_batch(
            &m,
            &buf,
            &skills,
            TargetScheme::High,
            DataScope::SkillOnly,
            &cfg,
            &mut rng,
        )
        .unwrap();
        assert_eq!(batch.len(), 64);
        for s in &batch.samples {
            assert_eq!(s.weight, 1.0);
            assert!(s.target.is_finite());
        }
        for &i in buf.skill_start_indices() {
            let ep = buf.episode_of(i);
            if i + 2 > ep.end {
                continue;
            }
            let ctx = [
                buf.context_at(i, 10),
                buf.next_context_at(i, 10),
                buf.next_context_at(i + 1, 10),
            ];
            let direct = endpoint_entropy_change(&ctx[0], &ctx[2]).unwrap();
            assert!((y_high(&ctx).unwrap() - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn truncation_frequency_matches_clip_ratio() {
        let (buf, skills) = skill_buffer(0.05);
        let arch = Architecture::new(2, 4, 10, true);
        let m = SkillValueModel::zeros(arch);
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let cfg = BatchConfig {
            batch_size: 4000,
            ..Default::default()
        };
        let batch = build_batch(
            &m,
            &buf,
            &skills,
            TargetScheme::Low,
            DataScope::All,
            &cfg,
            &mut rng,
        )
        .unwrap();
        let n = batch.len() as f64;
        let frac = batch.samples.iter().filter(|s| s.truncated).count() as f64 / n;
        let sigma = (0.25 / n).sqrt();
        assert!((frac - 0.5).abs() < 4.0 * sigma, "{frac}");
        // Truncated inputs are suffixes: their newest step equals the full context's newest step.
        for s in batch.samples.iter().take(50) {
            assert!(s.len >= 1 && s.len <= 10);
        }
    }

    #[test]
    fn checkpoint_round_trips() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let m = SkillValueModel::random(Architecture::new(5, 4, 7, false), &mut rng);
        let text = checkpoint_to_string(&m);
        let back = checkpoint_from_str(&text).unwrap();
        assert_eq!(back, m);
        assert!(checkpoint_from_str("nope").is_err());
        let truncated: String = text.lines().take(12).collect::<Vec<_>>().join("\n");
        assert!(checkpoint_from_str(&truncated).is_err());
    }
}
