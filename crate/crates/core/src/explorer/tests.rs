use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::adaptive::TemperatureMode;
use crate::history::{local_entropy, HistoryContext};
use crate::maze::{builtin, Action, Cell};

fn setup<'a>(
    maze: &'a MazeSpec,
    method: Method,
    gc: &'a GoalConditionedValueTable,
    skills: &'a SkillSet,
    values: Option<&'a dyn SkillValues>,
) -> EpisodeSetup<'a> {
    EpisodeSetup {
        maze,
        method,
        gc,
        chooser: SkillChooser {
            skills,
            values,
            temperature: TemperatureConfig::default(),
        },
        context_horizon: 10,
        episode_len: 150,
    }
}

fn zero_values(_: &HistoryContext) -> Vec<f64> {
    vec![0.0; 4]
}

#[test]
fn start_cell_subgoal_switches_after_first_step() {
    let maze = builtin("spiral").unwrap();
    // ε = 0 with untouched values: greedy north bumps into the wall at the start.
    let gc = GoalConditionedValueTable::new(
        &maze,
        &GcConfig {
            epsilon: 0.0,
            ..Default::default()
        },
    );
    let skills = SkillSet::directional(0.05, 2).unwrap();
    let vals = zero_values;
    let s = setup(&maze, Method::GeasdL, &gc, &skills, Some(&vals));
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let trace = run_episode(&s, maze.start(), 0, &mut MaxEntropyTracker::new(), &mut rng).unwrap();
    assert_eq!(trace.switch_step, Some(1));
    assert_eq!(trace.draws[0].step, 1);
    assert!(trace.records[1].skill_start);
    assert_eq!(trace.records[0].skill, None);
}

#[test]
fn skill_stage_structure() {
    let maze = builtin("spiral").unwrap();
    let gc = GoalConditionedValueTable::new(&maze, &GcConfig::default());
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for k in 1..=4 {
        let skills = SkillSet::directional(0.05, k).unwrap();
        let vals = zero_values;
        let s = setup(&maze, Method::GeasdL, &gc, &skills, Some(&vals));
        for ep in 0..20 {
            let g = maze.cell_at(rng.gen_range(0..3));
            let trace = run_episode(&s, g, ep, &mut MaxEntropyTracker::new(), &mut rng).unwrap();
            assert_eq!(trace.len(), 150);
            let Some(ts) = trace.switch_step else {
                assert!(trace.records.iter().all(|r| r.skill.is_none()));
                continue;
            };
            assert_eq!(trace.draws.len(), (150 - ts).div_ceil(k));
            for r in &trace.records {
                let t = r.step as usize;
                if t < ts {
                    assert_eq!(r.skill, None);
                    assert!(!r.skill_start);
                } else {
                    assert!(r.skill.is_some());
                    assert_eq!(r.skill_start, (t - ts) % k == 0);
                    let p = skills.get(r.skill.unwrap()).prob(&r.obs, r.action);
                    assert_eq!(p, r.behavior_prob);
                }
            }
        }
    }
}

use rand::Rng;

#[test]
fn uniform_draws_are_uniform() {
    let maze = builtin("spiral").unwrap();
    let gc = GoalConditionedValueTable::new(&maze, &GcConfig::default());
    let skills = SkillSet::directional(0.05, 2).unwrap();
    let s = setup(&maze, Method::Geaps, &gc, &skills, None);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut counts = [0usize; 4];
    for ep in 0..100 {
        let trace = run_episode(
            &s,
            maze.start(),
            ep,
            &mut MaxEntropyTracker::new(),
            &mut rng,
        )
        .unwrap();
        for d in &trace.draws {
            assert!(d.temperature.is_none());
            counts[d.skill] += 1;
        }
    }
    let n: usize = counts.iter().sum();
    let sd = (n as f64 * 0.25 * 0.75).sqrt();
    for c in counts {
        assert!((c as f64 - n as f64 / 4.0).abs() < 4.0 * sd, "{counts:?}");
    }
}

#[test]
fn omega_never_uses_skills() {
    let maze = builtin("spiral").unwrap();
    let gc = GoalConditionedValueTable::new(&maze, &GcConfig::default());
    let skills = SkillSet::directional(0.05, 2).unwrap();
    let s = setup(&maze, Method::Omega, &gc, &skills, None);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let trace = run_episode(&s, maze.start(), 0, &mut MaxEntropyTracker::new(), &mut rng).unwrap();
    assert_eq!(trace.switch_step, None);
    assert!(trace.draws.is_empty());
    assert!(trace.records.iter().all(|r| r.skill.is_none()));
}

#[test]
fn corridor_preference_grows_local_entropy() {
    let path: Vec<Cell> = (0..30).map(|x| Cell::new(x, 0)).collect();
    let maze = MazeSpec::from_corridor("line", 30, 1, &path).unwrap();
    let gc = GoalConditionedValueTable::new(
        &maze,
        &GcConfig {
            epsilon: 0.0,
            ..Default::default()
        },
    );
    let skills = SkillSet::directional(0.0, 2).unwrap();
    // Continuing east ranks above reversing.
    let prefer_east = |_: &HistoryContext| vec![0.0, 1.0, 0.0, -1.0];
    let mut s = setup(&maze, Method::GeasdL, &gc, &skills, Some(&prefer_east));
    s.chooser.temperature.mode = TemperatureMode::Static { temperature: 0.01 };
    s.episode_len = 25;
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let trace = run_episode(&s, maze.start(), 0, &mut MaxEntropyTracker::new(), &mut rng).unwrap();
    assert_eq!(trace.switch_step, Some(1));
    let mut h = HistoryContext::new(10, maze.start_observation());
    let mut prev = local_entropy(&h).unwrap();
    for r in &trace.records {
        h.push(r.action, r.next_obs);
        let e = local_entropy(&h).unwrap();
        assert!(e >= prev - 1e-12, "entropy fell at step {}", r.step);
        prev = e;
    }
    assert!((prev - 10f64.ln()).abs() < 1e-12);
    assert!(trace.records[1..].iter().all(|r| r.action == Action::E));
}

#[test]
fn trace_text_has_one_line_per_step() {
    let maze = builtin("spiral").unwrap();
    let gc = GoalConditionedValueTable::new(&maze, &GcConfig::default());
    let skills = SkillSet::directional(0.05, 2).unwrap();
    let s = setup(&maze, Method::Geaps, &gc, &skills, None);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let trace = run_episode(&s, maze.start(), 7, &mut MaxEntropyTracker::new(), &mut rng).unwrap();
    let text = trace.to_text();
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 150);
    assert!(text.lines().nth(1).unwrap().starts_with("7 0 0 0 "));
}

#[test]
fn explorer_trains_all_components() {
    let maze = builtin("spiral").unwrap();
    let cfg = ExplorerConfig {
        svf: SvfConfig {
            hidden: 8,
            batch_size: 8,
            ..Default::default()
        },
        ..Default::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut ex = Explorer::new(cfg, maze, &mut rng).unwrap();
    ex.collect_episode(150, &mut rng).unwrap();
    let stats = ex.train(&mut rng).unwrap();
    assert_eq!(stats.gc_updates, 150);
    assert_eq!(stats.svf_updates, 37);
    assert_eq!(ex.steps(), 150);
    assert!(ex.tracker().max().unwrap() > 0.0);
    let bad = ExplorerConfig {
        context_horizon: 2,
        skill_horizon: 2,
        ..Default::default()
    };
    assert!(Explorer::new(bad, builtin("spiral").unwrap(), &mut rng).is_err());
}
