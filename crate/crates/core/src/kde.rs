//! Gaussian kernel density over goals normalised to the unit square.

use rand::Rng;

use crate::maze::Goal;

pub const DEFAULT_BANDWIDTH: f64 = 0.1;
pub const DEFAULT_ENTROPY_SAMPLES: usize = 1_000;

/// Isotropic Gaussian KDE on `[0, 1]²`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianKde {
    points: Vec<[f64; 2]>,
    bandwidth: f64,
}

/// Maps a cell to `[0, 1]²`; a single-cell axis maps to 0.5.
pub fn normalize_goal(g: Goal, width: usize, height: usize) -> [f64; 2] {
    let axis = |v: i32, n: usize| {
        if n <= 1 {
            0.5
        } else {
            v as f64 / (n - 1) as f64
        }
    };
    [axis(g.x, width), axis(g.y, height)]
}

impl GaussianKde {
    /// `None` for an empty point set or a non-positive bandwidth.
    pub fn new(points: Vec<[f64; 2]>, bandwidth: f64) -> Option<Self> {
        (!points.is_empty() && bandwidth > 0.0).then_some(GaussianKde { points, bandwidth })
    }

    pub fn from_goals(goals: &[Goal], width: usize, height: usize, bandwidth: f64) -> Option<Self> {
        Self::new(
            goals
                .iter()
                .map(|g| normalize_goal(*g, width, height))
                .collect(),
            bandwidth,
        )
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn density(&self, x: [f64; 2]) -> f64 {
        let inv = 1.0 / (2.0 * self.bandwidth * self.bandwidth);
        let norm = inv / std::f64::consts::PI;
        let s: f64 = self
            .points
            .iter()
            .map(|p| {
                let dx = x[0] - p[0];
                let dy = x[1] - p[1];
                (-(dx * dx + dy * dy) * inv).exp()
            })
            .sum();
        norm * s / self.points.len() as f64
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> [f64; 2] {
        let p = self.points[rng.gen_range(0..self.points.len())];
        [
            p[0] + self.bandwidth * std_normal(rng),
            p[1] + self.bandwidth * std_normal(rng),
        ]
    }

    /// Monte Carlo differential entropy `E[−ln p̂(x)]` over `samples` draws from the KDE.
    pub fn entropy<R: Rng + ?Sized>(&self, samples: usize, rng: &mut R) -> f64 {
        let n = samples.max(1);
        (0..n)
            .map(|_| -self.density(self.sample(rng)).ln())
            .sum::<f64>()
            / n as f64
    }
}

fn std_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    // Box-Muller; `1 − u` keeps the logarithm finite.
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maze::Cell;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn normalisation_spans_unit_square() {
        assert_eq!(normalize_goal(Cell::new(0, 0), 10, 10), [0.0, 0.0]);
        assert_eq!(normalize_goal(Cell::new(9, 9), 10, 10), [1.0, 1.0]);
        assert_eq!(normalize_goal(Cell::new(0, 3), 1, 7), [0.5, 0.5]);
    }

    #[test]
    fn single_point_density_peak() {
        let kde = GaussianKde::new(vec![[0.5, 0.5]], 0.1).unwrap();
        let want = 1.0 / (2.0 * std::f64::consts::PI * 0.01);
        assert!((kde.density([0.5, 0.5]) - want).abs() < 1e-9);
        assert!(GaussianKde::new(vec![], 0.1).is_none());
    }

    #[test]
    fn separated_clusters_match_closed_form() {
        // Four point clusters far apart relative to the bandwidth:
        // H = ln 4 + ln(2πeσ²).
        let goals: Vec<Cell> = [(0, 0), (9, 0), (0, 9), (9, 9)]
            .iter()
            .flat_map(|&(x, y)| std::iter::repeat(Cell::new(x, y)).take(25))
            .collect();
        let kde = GaussianKde::from_goals(&goals, 10, 10, DEFAULT_BANDWIDTH).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let h = kde.entropy(DEFAULT_ENTROPY_SAMPLES, &mut rng);
        let closed = 4f64.ln() + (std::f64::consts::TAU * std::f64::consts::E * 0.01).ln();
        assert!((h - closed).abs() < 0.15, "{h} vs {closed}");
    }
}
