//! Boltzmann skill distributions over skill values, with a temperature that
//! falls as the local entropy approaches its recorded maximum.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_T_MIN: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum TemperatureMode {
    Dynamic,
    Static { temperature: f64 },
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TemperatureConfig {
    #[serde(flatten)]
    pub mode: TemperatureMode,
    pub t_min: f64,
}

impl Default for TemperatureConfig {
    fn default() -> Self {
        TemperatureConfig {
            mode: TemperatureMode::Dynamic,
            t_min: DEFAULT_T_MIN,
        }
    }
}

impl TemperatureConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.t_min > 0.0 && self.t_min < 1.0) {
            return Err(Error::Config(format!(
                "t_min {} must lie in (0, 1)",
                self.t_min
            )));
        }
        if let TemperatureMode::Static { temperature } = self.mode {
            if !(temperature > 0.0 && temperature.is_finite()) {
                return Err(Error::Config(format!(
                    "static temperature {temperature} must be positive"
                )));
            }
        }
        Ok(())
    }

    /// Skill distribution for the given values and window entropies.
    /// `h_max` is `None` before any context has been recorded.
    pub fn distribution(
        &self,
        values: &[f64],
        h_local: f64,
        h_max: Option<f64>,
    ) -> Result<Vec<f64>> {
        match self.mode {
            TemperatureMode::Uniform => Ok(vec![1.0 / values.len() as f64; values.len()]),
            TemperatureMode::Static { temperature } => skill_distribution(values, temperature),
            TemperatureMode::Dynamic => {
                let t = dynamic_temperature(h_local, h_max.unwrap_or(0.0), self.t_min)?;
                skill_distribution(values, t)
            }
        }
    }
}

/// `T = T_min^min(H_local / H_max, 1)`, in `[T_min, 1]`. Evaluated as a
/// power so the endpoints and midpoint are exact: `1`, `T_min`, `√T_min`.
/// With no recorded entropy yet (`H_max = 0`) the temperature is 1.
pub fn dynamic_temperature(h_local: f64, h_max: f64, t_min: f64) -> Result<f64> {
    if h_local < 0.0 || h_max < 0.0 || h_local.is_nan() || h_max.is_nan() {
        return Err(Error::InvalidArgument(format!(
            "entropies must be non-negative (local {h_local}, max {h_max})"
        )));
    }
    if !(t_min > 0.0 && t_min < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "t_min {t_min} must lie in (0, 1)"
        )));
    }
    if h_max == 0.0 {
        return Ok(1.0);
    }
    let ratio = (h_local / h_max).min(1.0);
    Ok(t_min.powf(ratio))
}

/// `p(z) = exp(Q_z / T) / Σ exp(Q_z' / T)`, evaluated with max-subtraction.
pub fn skill_distribution(values: &[f64], temperature: f64) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(Error::InvalidArgument("no skill values".into()));
    }
    if !(temperature > 0.0) || !temperature.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "temperature {temperature} must be positive"
        )));
    }
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("skill value {v}")));
    }
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = values
        .iter()
        .map(|v| ((v - max) / temperature).exp())
        .collect();
    let sum: f64 = exps.iter().sum();
    Ok(exps.into_iter().map(|e| e / sum).collect())
}

/// Categorical draw from a skill distribution.
pub fn sample_skill<R: Rng + ?Sized>(dist: &[f64], rng: &mut R) -> Result<usize> {
    if dist.is_empty() || dist.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "malformed distribution {dist:?}"
        )));
    }
    let total: f64 = dist.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!(
            "distribution sums to {total}"
        )));
    }
    let u: f64 = rng.gen::<f64>() * total;
    let mut acc = 0.0;
    for (i, p) in dist.iter().enumerate() {
        acc += p;
        if u < acc {
            return Ok(i);
        }
    }
    Ok(dist
        .iter()
        .rposition(|p| *p > 0.0)
        .unwrap_or(dist.len() - 1))
}
