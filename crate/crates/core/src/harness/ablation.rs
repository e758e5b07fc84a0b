use std::fmt;
use std::str::FromStr;

use crate::adaptive::TemperatureMode;
use crate::error::{Error, Result};
use crate::svf::DataScope;

use super::config::ExperimentConfig;
use super::experiment::{run_experiment, ExperimentResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AblationSuite {
    Temperature,
    ActionHistory,
    DataScope,
    ContextHorizon,
}

impl AblationSuite {
    pub const ALL: [AblationSuite; 4] = [
        AblationSuite::Temperature,
        AblationSuite::ActionHistory,
        AblationSuite::DataScope,
        AblationSuite::ContextHorizon,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AblationSuite::Temperature => "temperature",
            AblationSuite::ActionHistory => "action-history",
            AblationSuite::DataScope => "data-scope",
            AblationSuite::ContextHorizon => "context-horizon",
        }
    }
}

impl fmt::Display for AblationSuite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AblationSuite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        AblationSuite::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown ablation suite `{s}`")))
    }
}

/// The configurations a suite expands `base` into, each with its own name.
pub fn ablation_variants(suite: AblationSuite, base: &ExperimentConfig) -> Vec<ExperimentConfig> {
    let stem = base.explorer.method.name();
    let variant = |label: String, f: &dyn Fn(&mut ExperimentConfig)| {
        let mut c = base.clone();
        f(&mut c);
        c.name = format!("{stem}_{label}");
        c
    };
    match suite {
        AblationSuite::Temperature => {
            let mut v = vec![variant("t-dynamic".into(), &|c| {
                c.explorer.temperature.mode = TemperatureMode::Dynamic
            })];
            for t in [0.01, 0.1, 1.0] {
                v.push(variant(format!("t-{t}"), &|c| {
                    c.explorer.temperature.mode = TemperatureMode::Static { temperature: t }
                }));
            }
            v
        }
        AblationSuite::ActionHistory => vec![
            variant("with-actions".into(), &|c| {
                c.explorer.include_actions = true
            }),
            variant("states-only".into(), &|c| {
                c.explorer.include_actions = false
            }),
        ],
        AblationSuite::DataScope => vec![
            variant("all-data".into(), &|c| {
                c.explorer.data_scope = DataScope::All
            }),
            variant("skill-data".into(), &|c| {
                c.explorer.data_scope = DataScope::SkillOnly
            }),
        ],
        AblationSuite::ContextHorizon => [3, 5, 10]
            .into_iter()
            .map(|h| variant(format!("c-{h}"), &|c| c.explorer.context_horizon = h))
            .collect(),
    }
}

pub fn run_ablation(
    suite: AblationSuite,
    base: &ExperimentConfig,
) -> Result<Vec<ExperimentResult>> {
    ablation_variants(suite, base)
        .iter()
        .map(run_experiment)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::Preset;

    #[test]
    fn suites_expand_to_their_axes() {
        let base = ExperimentConfig::preset(Preset::Desk);
        let t = ablation_variants(AblationSuite::Temperature, &base);
        assert_eq!(t.len(), 4);
        assert_eq!(t[0].explorer.temperature.mode, TemperatureMode::Dynamic);
        assert_eq!(
            t[3].explorer.temperature.mode,
            TemperatureMode::Static { temperature: 1.0 }
        );
        let c = ablation_variants(AblationSuite::ContextHorizon, &base);
        assert_eq!(
            c.iter()
                .map(|c| c.explorer.context_horizon)
                .collect::<Vec<_>>(),
            vec![3, 5, 10]
        );
        assert!(c.iter().all(|c| c.validate().is_ok()));
        let names: std::collections::BTreeSet<_> = AblationSuite::ALL
            .iter()
            .flat_map(|s| ablation_variants(*s, &base))
            .map(|c| c.name)
            .collect();
        assert_eq!(names.len(), 11);
        assert_eq!(
            "data-scope".parse::<AblationSuite>().unwrap(),
            AblationSuite::DataScope
        );
    }
}
