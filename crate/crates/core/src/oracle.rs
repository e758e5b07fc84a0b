//! Exhaustive checks on tiny instances: exact goal coverage of a skill
//! distribution, the Boltzmann form of the entropy-maximising distribution
//! under disjoint coverage, and the lower bound of expected per-trajectory
//! entropy change.

use std::collections::BTreeMap;
use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::adaptive::skill_distribution;
use crate::error::{Error, Result};
use crate::history::{entropy_of_probs, GoalHistogram, HistoryContext};
use crate::maze::{Action, Cell, Goal, MazeSpec};
use crate::skills::SkillSet;

pub const PROP1_TV_TOLERANCE: f64 = 2e-3;
pub const PROP1_GAP_TOLERANCE: f64 = 1e-6;
pub const PROP2_TOLERANCE: f64 = 1e-12;
pub const GRID_RESOLUTION: f64 = 1e-3;

/// One possible `k`-step outcome of a skill: its probability and the goals
/// achieved at steps `t+1, …, t+k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub prob: f64,
    pub goals: Vec<Goal>,
}

/// A context window and the exact `k`-step outcome distribution of each skill.
#[derive(Debug, Clone, PartialEq)]
pub struct ToyInstance {
    pub horizon: usize,
    pub skill_horizon: usize,
    /// `Φ(h^C_t)`, oldest first, exactly `horizon` goals.
    pub window: Vec<Goal>,
    pub skills: Vec<Vec<Trajectory>>,
}

/// Goal distribution as a sorted map.
pub type GoalDistribution = BTreeMap<Goal, f64>;

fn distribution_entropy(p: &GoalDistribution) -> f64 {
    entropy_of_probs(&p.values().copied().collect::<Vec<_>>())
}

impl ToyInstance {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.skill_horizon == 0 || self.skill_horizon > self.horizon {
            return bad(format!(
                "need 1 <= k <= C, got k = {} and C = {}",
                self.skill_horizon, self.horizon
            ));
        }
        if self.window.len() != self.horizon {
            return bad(format!(
                "window holds {} goals, expected {}",
                self.window.len(),
                self.horizon
            ));
        }
        if self.skills.is_empty() {
            return bad("instance has no skills".into());
        }
        for (z, trajs) in self.skills.iter().enumerate() {
            if trajs.len() > 4usize.pow(self.skill_horizon as u32) {
                return bad(format!("skill {z} has more than 4^k trajectories"));
            }
            let total: f64 = trajs.iter().map(|t| t.prob).sum();
            if (total - 1.0).abs() > 1e-9 || trajs.iter().any(|t| t.prob < 0.0) {
                return bad(format!("skill {z} trajectory probabilities sum to {total}"));
            }
            if trajs.iter().any(|t| t.goals.len() != self.skill_horizon) {
                return bad(format!("skill {z} has a trajectory of the wrong length"));
            }
        }
        Ok(())
    }

    /// Goals of `h^{C−k}_t` that survive into every next window.
    pub fn retained(&self) -> &[Goal] {
        &self.window[self.skill_horizon..]
    }

    /// `Φ(h^{C−k}_t ⊕ h^k_{t+k})` for one trajectory.
    pub fn next_window(&self, traj: &Trajectory) -> Vec<Goal> {
        let mut w = self.retained().to_vec();
        w.extend_from_slice(&traj.goals);
        w
    }

    /// Local entropy of the current window.
    pub fn current_entropy(&self) -> f64 {
        GoalHistogram::from_goals(&self.window).entropy()
    }

    /// Builds an instance by enumerating all `4^k` action sequences of each
    /// skill from the last state of `h`.
    pub fn from_maze(maze: &MazeSpec, h: &HistoryContext, skills: &SkillSet) -> Result<Self> {
        let k = skills.horizon();
        if h.len() != h.capacity() {
            return Err(Error::InvalidArgument(
                "the context window must be full".into(),
            ));
        }
        let mut per_skill = Vec::with_capacity(skills.len());
        for skill in skills.iter() {
            let mut outcomes: BTreeMap<Vec<Goal>, f64> = BTreeMap::new();
            for code in 0..4usize.pow(k as u32) {
                let mut s = *h.current();
                let mut prob = 1.0;
                let mut goals = Vec::with_capacity(k);
                let mut c = code;
                for _ in 0..k {
                    let a = Action::from_index(c % 4);
                    c /= 4;
                    prob *= skill.prob(&s, a);
                    s = maze.step(&s, a);
                    goals.push(s.cell);
                }
                if prob > 0.0 {
                    *outcomes.entry(goals).or_insert(0.0) += prob;
                }
            }
            per_skill.push(
                outcomes
                    .into_iter()
                    .map(|(goals, prob)| Trajectory { prob, goals })
                    .collect(),
            );
        }
        let inst = ToyInstance {
            horizon: h.capacity(),
            skill_horizon: k,
            window: h.achieved(),
            skills: per_skill,
        };
        inst.validate()?;
        Ok(inst)
    }

    /// Goal coverage `p_z` of each skill on its own.
    pub fn skill_coverages(&self) -> Vec<GoalDistribution> {
        (0..self.skills.len())
            .map(|z| {
                let mut d = vec![0.0; self.skills.len()];
                d[z] = 1.0;
                goal_coverage(self, &d)
            })
            .collect()
    }

    /// `ΔH(Φ(h^C_{t+k}) | h^C_t, z) = H(p_z) − H(Φ(h^C_t))` per skill.
    pub fn entropy_changes(&self) -> Vec<f64> {
        let base = self.current_entropy();
        self.skill_coverages()
            .iter()
            .map(|p| distribution_entropy(p) - base)
            .collect()
    }

    /// Whether no goal can be achieved under two different skills.
    pub fn has_disjoint_coverage(&self) -> bool {
        let mut owner: BTreeMap<Goal, usize> = BTreeMap::new();
        for (z, p) in self.skill_coverages().iter().enumerate() {
            for (g, v) in p {
                if *v <= 0.0 {
                    continue;
                }
                if let Some(prev) = owner.insert(*g, z) {
                    if prev != z {
                        return false;
                    }
                }
            }
        }
        true
    }
}

/// `p_D(g | h^C_t)`: expected goal frequencies of the next window under
/// `z ~ D` and the skills' trajectory distributions.
pub fn goal_coverage(inst: &ToyInstance, d: &[f64]) -> GoalDistribution {
    let c = inst.horizon as f64;
    let mut p = GoalDistribution::new();
    for (z, trajs) in inst.skills.iter().enumerate() {
        if d[z] == 0.0 {
            continue;
        }
        for t in trajs {
            let w = d[z] * t.prob / c;
            for g in inst.next_window(t) {
                *p.entry(g).or_insert(0.0) += w;
            }
        }
    }
    p
}

/// `H_D(G | h^C_t)`.
pub fn coverage_entropy(inst: &ToyInstance, d: &[f64]) -> f64 {
    distribution_entropy(&goal_coverage(inst, d))
}

/// Euclidean projection onto the probability simplex.
fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (i, ui) in u.iter().enumerate() {
        cum += ui;
        let t = (cum - 1.0) / (i + 1) as f64;
        if ui - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|x| (x - theta).max(0.0)).collect()
}

/// Maximiser of `H_D` over the simplex and its entropy.
#[derive(Debug, Clone, PartialEq)]
pub struct SlempSolution {
    pub distribution: Vec<f64>,
    pub entropy: f64,
}

/// Projected gradient ascent from the uniform distribution, then a pattern
/// search over pairwise mass transfers starting at the grid resolution and
/// halving down to `1e-9`.
pub fn slemp_solve(inst: &ToyInstance) -> SlempSolution {
    let n = inst.skills.len();
    // p_D = Σ_z D_z p_z.
    let covs = inst.skill_coverages();
    let mut d = vec![1.0 / n as f64; n];
    let mut f = coverage_entropy(inst, &d);
    let mut step = 0.5;
    for _ in 0..20_000 {
        let p = goal_coverage(inst, &d);
        let grad: Vec<f64> = covs
            .iter()
            .map(|cz| {
                -cz.iter()
                    .map(|(g, v)| v * (p.get(g).copied().unwrap_or(0.0).max(1e-300).ln() + 1.0))
                    .sum::<f64>()
            })
            .collect();
        let cand = project_simplex(
            &d.iter()
                .zip(&grad)
                .map(|(x, g)| x + step * g)
                .collect::<Vec<_>>(),
        );
        let fc = coverage_entropy(inst, &cand);
        if fc > f {
            let moved: f64 = cand.iter().zip(&d).map(|(a, b)| (a - b).abs()).sum();
            d = cand;
            f = fc;
            if moved < 1e-13 {
                break;
            }
        } else {
            step *= 0.5;
            if step < 1e-12 {
                break;
            }
        }
    }
    let mut delta = GRID_RESOLUTION;
    while delta >= 1e-9 {
        let mut improved = true;
        while improved {
            improved = false;
            for i in 0..n {
                for j in 0..n {
                    if i == j || d[j] < delta {
                        continue;
                    }
                    let mut cand = d.clone();
                    cand[i] += delta;
                    cand[j] -= delta;
                    let fc = coverage_entropy(inst, &cand);
                    if fc > f {
                        d = cand;
                        f = fc;
                        improved = true;
                    }
                }
            }
        }
        delta *= 0.5;
    }
    SlempSolution {
        distribution: d,
        entropy: f,
    }
}

pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prop1Check {
    pub boltzmann: Vec<f64>,
    pub solver: Vec<f64>,
    pub distance: f64,
    pub gap: f64,
    pub passed: bool,
}

/// Compares `softmax(ΔH)` with the searched maximiser. Instances whose
/// skills share an achievable goal are rejected.
pub fn verify_prop1(inst: &ToyInstance) -> Result<Prop1Check> {
    inst.validate()?;
    if !inst.has_disjoint_coverage() {
        return Err(Error::InvalidArgument(
            "a goal is covered by more than one skill".into(),
        ));
    }
    Ok(compare_boltzmann(inst))
}

/// The same comparison without the premise check, for negative controls.
pub fn compare_boltzmann(inst: &ToyInstance) -> Prop1Check {
    let boltzmann =
        skill_distribution(&inst.entropy_changes(), 1.0).expect("finite entropy changes");
    let sol = slemp_solve(inst);
    let distance = total_variation(&boltzmann, &sol.distribution);
    let gap = (sol.entropy - coverage_entropy(inst, &boltzmann)).abs();
    let passed = distance <= PROP1_TV_TOLERANCE && gap <= PROP1_GAP_TOLERANCE;
    Prop1Check {
        boltzmann,
        solver: sol.distribution,
        distance,
        gap,
        passed,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prop2Check {
    /// Per skill: `ΔH` of the mixture.
    pub mixture: Vec<f64>,
    /// Per skill: expected per-trajectory entropy change.
    pub expected: Vec<f64>,
    pub worst_violation: f64,
    pub passed: bool,
}

pub fn verify_prop2(inst: &ToyInstance) -> Result<Prop2Check> {
    inst.validate()?;
    let base = inst.current_entropy();
    let mixture = inst.entropy_changes();
    let expected: Vec<f64> = inst
        .skills
        .iter()
        .map(|trajs| {
            trajs
                .iter()
                .map(|t| {
                    t.prob * (GoalHistogram::from_goals(&inst.next_window(t)).entropy() - base)
                })
                .sum()
        })
        .collect();
    let worst_violation = expected
        .iter()
        .zip(&mixture)
        .map(|(e, m)| e - m)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(Prop2Check {
        passed: worst_violation <= PROP2_TOLERANCE,
        mixture,
        expected,
        worst_violation,
    })
}

fn random_probs<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..1.0)).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|x| x / s).collect()
}

fn grid_cells() -> Vec<Goal> {
    (0..5)
        .flat_map(|y| (0..5).map(move |x| Cell::new(x, y)))
        .collect()
}

/// A random instance whose skills cover pairwise disjoint goal sets:
/// `C = k` (nothing of the current window is retained) and each skill draws
/// its goals from a private pool.
pub fn random_disjoint_instance<R: Rng + ?Sized>(rng: &mut R) -> ToyInstance {
    let n = rng.gen_range(2..=4);
    let k = rng.gen_range(1..=3);
    let mut cells = grid_cells();
    cells.shuffle(rng);
    let window: Vec<Goal> = (0..k).map(|_| *cells.choose(rng).unwrap()).collect();
    let pools: Vec<Vec<Goal>> = cells.chunks(25 / n).take(n).map(|c| c.to_vec()).collect();
    let skills = pools
        .iter()
        .map(|pool| {
            let pool = &pool[..rng.gen_range(1..=pool.len().min(4))];
            random_trajectories(pool, k, rng)
        })
        .collect();
    ToyInstance {
        horizon: k,
        skill_horizon: k,
        window,
        skills,
    }
}

fn random_trajectories<R: Rng + ?Sized>(pool: &[Goal], k: usize, rng: &mut R) -> Vec<Trajectory> {
    let m = rng.gen_range(1..=3);
    let mut seen: BTreeMap<Vec<Goal>, ()> = BTreeMap::new();
    for _ in 0..m {
        seen.insert((0..k).map(|_| *pool.choose(rng).unwrap()).collect(), ());
    }
    let probs = random_probs(seen.len(), rng);
    seen.into_keys()
        .zip(probs)
        .map(|(goals, prob)| Trajectory { prob, goals })
        .collect()
}

/// A random instance with no disjointness: `k < C ≤ 6`, so retained goals
/// are shared by every skill, and skills draw from one common goal pool.
pub fn random_instance<R: Rng + ?Sized>(rng: &mut R) -> ToyInstance {
    let n = rng.gen_range(2..=4);
    let k = rng.gen_range(1..=3);
    let c = rng.gen_range(k + 1..=6);
    let mut cells = grid_cells();
    cells.shuffle(rng);
    let pool = &cells[..rng.gen_range(2..=6)];
    let window: Vec<Goal> = (0..c).map(|_| *cells[..8].choose(rng).unwrap()).collect();
    let skills = (0..n).map(|_| random_trajectories(pool, k, rng)).collect();
    ToyInstance {
        horizon: c,
        skill_horizon: k,
        window,
        skills,
    }
}

/// Outcome of the whole verification suite.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct OracleReport {
    pub lines: Vec<ReportLine>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportLine {
    pub check: &'static str,
    pub instance: usize,
    pub passed: bool,
    pub value: f64,
    pub detail: String,
}

impl OracleReport {
    pub fn passed(&self) -> bool {
        self.lines.iter().all(|l| l.passed)
    }

    pub fn count(&self, check: &str) -> (usize, usize) {
        let of: Vec<_> = self.lines.iter().filter(|l| l.check == check).collect();
        (of.iter().filter(|l| l.passed).count(), of.len())
    }
}

impl fmt::Display for OracleReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for l in &self.lines {
            writeln!(
                f,
                "{} {} {} value={:.3e} {}",
                if l.passed { "PASS" } else { "FAIL" },
                l.check,
                l.instance,
                l.value,
                l.detail
            )?;
        }
        Ok(())
    }
}

/// Sweeps `n` random instances through both checks and the negative
/// control. The negative control line passes when at least one overlapping
/// instance breaks the Boltzmann form.
pub fn run_suite<R: Rng + ?Sized>(n: usize, rng: &mut R) -> OracleReport {
    let mut report = OracleReport::default();
    for i in 0..n {
        let inst = random_disjoint_instance(rng);
        match verify_prop1(&inst) {
            Ok(c) => report.lines.push(ReportLine {
                check: "prop1",
                instance: i,
                passed: c.passed,
                value: c.distance,
                detail: format!(
                    "gap={:.3e} skills={} k={}",
                    c.gap,
                    inst.skills.len(),
                    inst.skill_horizon
                ),
            }),
            Err(e) => report.lines.push(ReportLine {
                check: "prop1",
                instance: i,
                passed: false,
                value: f64::NAN,
                detail: e.to_string(),
            }),
        }
    }
    let mut failures = 0;
    let mut worst: f64 = 0.0;
    for _ in 0..n {
        let c = compare_boltzmann(&random_instance(rng));
        worst = worst.max(c.distance);
        if !c.passed {
            failures += 1;
        }
    }
    report.lines.push(ReportLine {
        check: "prop1-negative-control",
        instance: 0,
        passed: failures > 0,
        value: worst,
        detail: format!("{failures}/{n} overlapping instances off the Boltzmann form"),
    });
    for i in 0..n {
        let inst = if i % 2 == 0 {
            random_instance(rng)
        } else {
            random_disjoint_instance(rng)
        };
        let c = verify_prop2(&inst).expect("generated instances are valid");
        report.lines.push(ReportLine {
            check: "prop2",
            instance: i,
            passed: c.passed,
            value: c.worst_violation,
            detail: format!(
                "skills={} C={} k={}",
                inst.skills.len(),
                inst.horizon,
                inst.skill_horizon
            ),
        });
    }
    report
}
