//! Procedural directional skills.
//!
//! A skill persists in one heading: it puts mass `1 − ε` on its heading and
//! spreads `ε` evenly over the other three actions. Skills see only `ψ(s)`,
//! the agent-internal offset channels, so they act open-loop with respect
//! to walls and position.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::maze::{Action, Observation};

/// Default spread of a skill's mass over non-heading actions.
pub const DEFAULT_SKILL_EPSILON: f64 = 0.05;

/// Default skill horizon `k`.
pub const DEFAULT_SKILL_HORIZON: usize = 2;

/// Length of the `ψ` feature vector.
pub const PSI_LEN: usize = 2;

/// `ψ(s)`: the within-cell offset only.
pub fn psi(s: &Observation) -> [f64; PSI_LEN] {
    [s.offset.0 as f64, s.offset.1 as f64]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Skill {
    pub id: usize,
    pub direction: Action,
    pub epsilon: f64,
}

impl Skill {
    /// `σ(·|ψ(s), z)` as a probability vector over the four actions.
    pub fn action_probs(&self, _features: &[f64; PSI_LEN]) -> [f64; Action::COUNT] {
        let mut p = [self.epsilon / 3.0; Action::COUNT];
        p[self.direction.index()] = 1.0 - self.epsilon;
        p
    }

    pub fn prob(&self, s: &Observation, a: Action) -> f64 {
        self.action_probs(&psi(s))[a.index()]
    }

    /// Draws `a ~ σ(·|ψ(s), z)` and returns it with its probability.
    pub fn sample_action<R: Rng + ?Sized>(&self, s: &Observation, rng: &mut R) -> (Action, f64) {
        let p = self.action_probs(&psi(s));
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for (i, pi) in p.iter().enumerate() {
            acc += pi;
            if u < acc {
                return (Action::from_index(i), *pi);
            }
        }
        // u landed in the rounding gap above the cumulative sum.
        let last = p.iter().rposition(|v| *v > 0.0).unwrap_or(0);
        (Action::from_index(last), p[last])
    }
}

/// The skill set `𝒵` with a common horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkillSet {
    skills: Vec<Skill>,
    horizon: usize,
}

impl SkillSet {
    /// The four cardinal persisters (ids follow `Action::index`).
    pub fn directional(epsilon: f64, horizon: usize) -> Result<Self> {
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(Error::InvalidArgument(format!(
                "skill epsilon {epsilon} outside [0, 1]"
            )));
        }
        if horizon == 0 {
            return Err(Error::InvalidArgument(
                "skill horizon must be at least 1".into(),
            ));
        }
        let skills = Action::ALL
            .into_iter()
            .map(|direction| Skill {
                id: direction.index(),
                direction,
                epsilon,
            })
            .collect();
        Ok(SkillSet { skills, horizon })
    }

    pub fn len(&self) -> usize {
        self.skills.len()
    }

    pub fn is_empty(&self) -> bool {
        self.skills.is_empty()
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn get(&self, id: usize) -> &Skill {
        &self.skills[id]
    }

    pub fn iter(&self) -> impl Iterator<Item = &Skill> {
        self.skills.iter()
    }

    /// `p(z|s, a) ∝ σ(a|ψ(s), z)`, normalised over the skill set.
    pub fn posterior(&self, s: &Observation, a: Action) -> Result<Vec<f64>> {
        let mass: Vec<f64> = self.skills.iter().map(|z| z.prob(s, a)).collect();
        let total: f64 = mass.iter().sum();
        if total <= 0.0 {
            return Err(Error::ImpossibleAction);
        }
        Ok(mass.into_iter().map(|m| m / total).collect())
    }
}

/// `ξ`: whether a skill-phase step begins a fresh skill.
pub fn skill_start_flag(step_in_skill_phase: usize, k: usize) -> bool {
    step_in_skill_phase % k == 0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maze::{builtin, Cell};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn any_obs() -> Observation {
        Observation {
            cell: Cell::new(4, 4),
            offset: (0, 0),
            wall_bits: [true, false, true, false],
        }
    }

    #[test]
    fn psi_is_constant_and_hides_walls() {
        let a = any_obs();
        let b = Observation {
            cell: Cell::new(0, 9),
            offset: (0, 0),
            wall_bits: [false; 4],
        };
        assert_eq!(psi(&a), psi(&b));
        assert_eq!(psi(&a).len(), 2);
    }

    #[test]
    fn deterministic_skill_always_heads() {
        let set = SkillSet::directional(0.0, 2).unwrap();
        let east = set.get(Action::E.index());
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            assert_eq!(east.sample_action(&any_obs(), &mut rng), (Action::E, 1.0));
        }
    }

    #[test]
    fn stochastic_skill_mass_bookkeeping() {
        let set = SkillSet::directional(0.1, 2).unwrap();
        let p = set.get(Action::E.index()).action_probs(&psi(&any_obs()));
        assert!((p[Action::E.index()] - 0.9).abs() < 1e-15);
        for a in [Action::N, Action::S, Action::W] {
            assert!((p[a.index()] - 0.1 / 3.0).abs() < 1e-15);
        }
        for z in set.iter() {
            let s: f64 = z.action_probs(&psi(&any_obs())).iter().sum();
            assert!((s - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn sampled_probability_matches_sigma() {
        let set = SkillSet::directional(0.3, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for z in set.iter() {
            for _ in 0..50 {
                let (a, p) = z.sample_action(&any_obs(), &mut rng);
                assert_eq!(p, z.prob(&any_obs(), a));
            }
        }
    }

    #[test]
    fn posterior_examples() {
        let hard = SkillSet::directional(0.0, 2).unwrap();
        assert_eq!(
            hard.posterior(&any_obs(), Action::E).unwrap(),
            vec![0.0, 1.0, 0.0, 0.0]
        );

        let soft = SkillSet::directional(0.1, 2).unwrap();
        let post = soft.posterior(&any_obs(), Action::E).unwrap();
        let expected = 0.9 / (0.9 + 3.0 * (0.1 / 3.0));
        assert!((post[1] - expected).abs() < 1e-15);
        assert!((post[1] - 0.9).abs() < 1e-12);
        for a in Action::ALL {
            let s: f64 = soft.posterior(&any_obs(), a).unwrap().iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn posterior_concentrates_as_epsilon_vanishes() {
        let mut prev = 0.0;
        for eps in [0.5, 0.2, 0.05, 0.01, 0.0] {
            let set = SkillSet::directional(eps, 2).unwrap();
            let p = set.posterior(&any_obs(), Action::W).unwrap()[Action::W.index()];
            assert!(p >= prev);
            prev = p;
        }
        assert_eq!(prev, 1.0);
    }

    #[test]
    fn skill_start_flag_examples() {
        assert!(skill_start_flag(0, 2));
        assert!(!skill_start_flag(1, 2));
        assert!(skill_start_flag(4, 2));
        assert!(skill_start_flag(3, 1));
    }

    #[test]
    fn open_space_execution_moves_k_cells() {
        let maze = builtin("serpentine").unwrap();
        let set = SkillSet::directional(0.0, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut s = maze.observe(Cell::new(2, 0));
        let east = set.get(Action::E.index());
        for _ in 0..set.horizon() {
            let (a, _) = east.sample_action(&s, &mut rng);
            s = maze.step(&s, a);
        }
        assert_eq!(s.cell, Cell::new(5, 0));
    }

    #[test]
    fn rejects_bad_configuration() {
        assert!(SkillSet::directional(1.5, 2).is_err());
        assert!(SkillSet::directional(0.1, 0).is_err());
    }
}
