use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::explorer::ReplayBuffer;
use crate::kde::{GaussianKde, DEFAULT_BANDWIDTH, DEFAULT_ENTROPY_SAMPLES};
use crate::maze::{Goal, MazeSpec};

use super::config::EntropyMode;

/// Goals kept as KDE support when estimating entropy (a uniform subsample beyond this).
const KDE_SUPPORT: usize = 1_000;

/// One evaluation point of one seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub step: usize,
    pub seed: u64,
    pub success_rate: f64,
    pub entropy: f64,
    pub max_occ: f64,
    pub avg_occ: f64,
}

impl MetricsRecord {
    pub const HEADER: [&'static str; 6] = [
        "step",
        "seed",
        "success_rate",
        "entropy",
        "max_occ",
        "avg_occ",
    ];
}

/// Mean and sample standard deviation across seeds at one step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AggregateRecord {
    pub step: usize,
    pub seeds: usize,
    pub success_rate_mean: f64,
    pub success_rate_std: f64,
    pub entropy_mean: f64,
    pub entropy_std: f64,
    pub max_occ_mean: f64,
    pub max_occ_std: f64,
    pub avg_occ_mean: f64,
    pub avg_occ_std: f64,
}

impl AggregateRecord {
    pub const HEADER: [&'static str; 10] = [
        "step",
        "seeds",
        "success_rate_mean",
        "success_rate_std",
        "entropy_mean",
        "entropy_std",
        "max_occ_mean",
        "max_occ_std",
        "avg_occ_mean",
        "avg_occ_std",
    ];
}

pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (m, 0.0);
    }
    let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, v.sqrt())
}

/// Aggregates per-seed record streams at the steps every seed reported.
pub fn aggregate(runs: &[Vec<MetricsRecord>]) -> Vec<AggregateRecord> {
    let Some(first) = runs.first() else {
        return Vec::new();
    };
    first
        .iter()
        .filter_map(|r| {
            let at: Vec<&MetricsRecord> = runs
                .iter()
                .filter_map(|run| run.iter().find(|x| x.step == r.step))
                .collect();
            if at.len() != runs.len() {
                return None;
            }
            let col = |f: fn(&MetricsRecord) -> f64| {
                mean_std(&at.iter().map(|x| f(x)).collect::<Vec<_>>())
            };
            let (sm, ss) = col(|x| x.success_rate);
            let (em, es) = col(|x| x.entropy);
            let (mm, ms) = col(|x| x.max_occ);
            let (am, as_) = col(|x| x.avg_occ);
            Some(AggregateRecord {
                step: r.step,
                seeds: at.len(),
                success_rate_mean: sm,
                success_rate_std: ss,
                entropy_mean: em,
                entropy_std: es,
                max_occ_mean: mm,
                max_occ_std: ms,
                avg_occ_mean: am,
                avg_occ_std: as_,
            })
        })
        .collect()
}

/// Fraction of the maze's cells among `visited`.
pub fn occupancy(visited: &[Goal], maze: &MazeSpec) -> f64 {
    let mut seen = vec![false; maze.cell_count()];
    for g in visited {
        if maze.contains(*g) {
            seen[maze.cell_index(*g)] = true;
        }
    }
    seen.iter().filter(|b| **b).count() as f64 / maze.cell_count() as f64
}

/// `(max, mean)` of a nonempty list of occupancy ratios.
pub fn max_and_mean(occ: &[f64]) -> (f64, f64) {
    if occ.is_empty() {
        return (0.0, 0.0);
    }
    let max = occ.iter().copied().fold(0.0, f64::max);
    (max, occ.iter().sum::<f64>() / occ.len() as f64)
}

/// Entropy of the buffered achieved goals: exact over cells in histogram
/// mode, a Monte Carlo estimate of the KDE's differential entropy otherwise.
pub fn empirical_entropy_metric<R: Rng + ?Sized>(
    buffer: &ReplayBuffer,
    maze: &MazeSpec,
    mode: EntropyMode,
    rng: &mut R,
) -> f64 {
    if buffer.is_empty() {
        return 0.0;
    }
    match mode {
        EntropyMode::Histogram => buffer.goal_histogram().entropy(),
        EntropyMode::Kde => {
            let goals = buffer.achieved_goals();
            let support: Vec<Goal> = if goals.len() <= KDE_SUPPORT {
                goals
            } else {
                (0..KDE_SUPPORT)
                    .map(|_| goals[rng.gen_range(0..goals.len())])
                    .collect()
            };
            GaussianKde::from_goals(&support, maze.width(), maze.height(), DEFAULT_BANDWIDTH)
                .map_or(0.0, |k| k.entropy(DEFAULT_ENTROPY_SAMPLES, rng))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::explorer::StepRecord;
    use crate::maze::{builtin, Action, Cell};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn buffer_of(maze: &MazeSpec, goals: &[Cell]) -> ReplayBuffer {
        // Each goal is its own one-step episode that stays in place.
        let mut buf = ReplayBuffer::new(100_000);
        for (i, g) in goals.iter().enumerate() {
            let s = maze.observe(*g);
            let a = Action::ALL
                .into_iter()
                .find(|a| s.blocked(*a))
                .unwrap_or(Action::N);
            let rec = StepRecord {
                obs: s,
                action: a,
                next_obs: maze.step(&s, a),
                skill: None,
                skill_start: false,
                behavior_prob: 1.0,
                subgoal: *g,
                episode: i as u64,
                step: 0,
            };
            assert_eq!(rec.next_obs.cell, *g);
            buf.push_episode(&[rec]);
        }
        buf
    }

    #[test]
    fn histogram_entropy_examples() {
        let maze = builtin("spiral").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let one = buffer_of(&maze, &[Cell::new(3, 3); 20]);
        assert_eq!(
            empirical_entropy_metric(&one, &maze, EntropyMode::Histogram, &mut rng),
            0.0
        );
        let all: Vec<Cell> = maze.cells().collect();
        let uni = buffer_of(&maze, &all);
        let h = empirical_entropy_metric(&uni, &maze, EntropyMode::Histogram, &mut rng);
        assert!((h - 100f64.ln()).abs() < 1e-12);
        assert!((h - 4.60517).abs() < 1e-5);
    }

    #[test]
    fn kde_and_histogram_cross_check() {
        // Four tight clusters: the histogram sees ln 4 over cells; the KDE
        // sees ln 4 plus the differential entropy of one kernel.
        let maze = builtin("spiral").unwrap();
        let goals: Vec<Cell> = [(0, 0), (9, 0), (0, 9), (9, 9)]
            .iter()
            .flat_map(|&(x, y)| std::iter::repeat(Cell::new(x, y)).take(30))
            .collect();
        let buf = buffer_of(&maze, &goals);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let hist = empirical_entropy_metric(&buf, &maze, EntropyMode::Histogram, &mut rng);
        let kde = empirical_entropy_metric(&buf, &maze, EntropyMode::Kde, &mut rng);
        let kernel =
            (std::f64::consts::TAU * std::f64::consts::E * DEFAULT_BANDWIDTH * DEFAULT_BANDWIDTH)
                .ln();
        assert!((hist - 4f64.ln()).abs() < 1e-12);
        assert!((kde - kernel - hist).abs() < 0.15, "kde {kde} hist {hist}");
    }

    #[test]
    fn aggregate_of_constant_seeds_is_constant() {
        let rec = |seed| MetricsRecord {
            step: 10,
            seed,
            success_rate: 0.5,
            entropy: 1.25,
            max_occ: 0.3,
            avg_occ: 0.2,
        };
        let agg = aggregate(&[vec![rec(0)], vec![rec(1)], vec![rec(2)]]);
        assert_eq!(agg.len(), 1);
        assert_eq!(agg[0].success_rate_mean, 0.5);
        assert_eq!(agg[0].entropy_mean, 1.25);
        assert_eq!(agg[0].success_rate_std, 0.0);
        assert_eq!(agg[0].seeds, 3);
    }

    #[test]
    fn occupancy_counts_distinct_cells() {
        let maze = builtin("spiral").unwrap();
        let v = [Cell::new(0, 0), Cell::new(1, 0), Cell::new(0, 0)];
        assert!((occupancy(&v, &maze) - 0.02).abs() < 1e-15);
        assert_eq!(max_and_mean(&[0.1, 0.3]), (0.3, 0.2));
    }
}
