use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::explorer::{ExplorerConfig, Method, SvfConfig};
use crate::maze::{builtin, load_maze_named, MazeSpec};

/// Estimator used for the achieved-goal entropy metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntropyMode {
    Histogram,
    Kde,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    /// Label used for output file names.
    pub name: String,
    /// A built-in maze name or a path to a layout file.
    pub maze: String,
    pub seeds: Vec<u64>,
    pub total_steps: usize,
    /// Environment steps between two evaluations.
    pub eval_every: usize,
    pub eval_episodes: usize,
    /// Exploration noise of the evaluation policy (0 is greedy).
    pub eval_epsilon: f64,
    pub entropy_mode: EntropyMode,
    /// Training episodes averaged into the occupancy metrics.
    pub occupancy_window: usize,
    #[serde(flatten)]
    pub explorer: ExplorerConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            name: "run".into(),
            maze: "spiral".into(),
            seeds: vec![0, 1, 2, 3, 4],
            total_steps: 200_000,
            eval_every: 1_000,
            eval_episodes: 1,
            eval_epsilon: 0.0,
            entropy_mode: EntropyMode::Histogram,
            occupancy_window: 50,
            explorer: ExplorerConfig::default(),
        }
    }
}

/// Named starting points for a configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// Full budgets.
    Full,
    /// Small budgets for a single machine.
    Desk,
}

impl std::str::FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Preset::Full),
            "desk" => Ok(Preset::Desk),
            _ => Err(Error::Config(format!(
                "unknown preset `{s}` (expected full or desk)"
            ))),
        }
    }
}

impl ExperimentConfig {
    pub fn preset(p: Preset) -> Self {
        match p {
            Preset::Full => Self::default(),
            Preset::Desk => ExperimentConfig {
                seeds: vec![0, 1, 2],
                total_steps: 20_000,
                eval_every: 300,
                explorer: ExplorerConfig {
                    svf: SvfConfig {
                        hidden: 32,
                        batch_size: 32,
                        ..SvfConfig::default()
                    },
                    ..ExplorerConfig::default()
                },
                ..Self::default()
            },
        }
    }

    pub fn desk(method: Method) -> Self {
        let mut c = Self::preset(Preset::Desk);
        c.explorer.method = method;
        c.name = method.name().into();
        c
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::Config("at least one seed is required".into()));
        }
        if self.eval_every == 0 || self.eval_episodes == 0 || self.occupancy_window == 0 {
            return Err(Error::Config(
                "eval_every, eval_episodes and occupancy_window must be positive".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.eval_epsilon) {
            return Err(Error::Config(format!(
                "eval_epsilon {} outside [0, 1]",
                self.eval_epsilon
            )));
        }
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return Err(Error::Config(format!(
                "name `{}` is not a plain file stem",
                self.name
            )));
        }
        self.explorer.validate()
    }

    /// Resolves the maze: built-in names first, then a layout file path.
    pub fn load_maze(&self) -> Result<MazeSpec> {
        match builtin(&self.maze) {
            Ok(m) => Ok(m),
            Err(Error::UnknownMaze(_)) if Path::new(&self.maze).exists() => {
                let text =
                    std::fs::read_to_string(&self.maze).map_err(|e| Error::io(&self.maze, e))?;
                let stem = Path::new(&self.maze)
                    .file_stem()
                    .and_then(|s| s.to_str())
                    .unwrap_or("maze");
                load_maze_named(stem, &text)
            }
            Err(e) => Err(e),
        }
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Starts from `base`, merges the TOML document `doc` (if any) over it and
    /// then applies `key=value` overrides with dotted keys, e.g.
    /// `svf.hidden=16` or `temperature.mode=static`.
    pub fn layered(base: &Self, doc: Option<&str>, overrides: &[String]) -> Result<Self> {
        let cfg_err = |e: String| Error::Config(e);
        let mut table: toml::Table =
            toml::Table::try_from(base).map_err(|e| cfg_err(e.to_string()))?;
        if let Some(doc) = doc {
            let over: toml::Table = doc
                .parse()
                .map_err(|e: toml::de::Error| cfg_err(e.to_string()))?;
            merge(&mut table, over);
        }
        for o in overrides {
            let (key, raw) = o
                .split_once('=')
                .ok_or_else(|| cfg_err(format!("override `{o}` is not key=value")))?;
            set_dotted(&mut table, key.trim(), parse_value(raw.trim()))?;
        }
        let cfg: Self = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| cfg_err(e.to_string()))?;
        cfg.validate()?;
        // Every override must name a field of the resulting configuration.
        let known: toml::Table = toml::Table::try_from(&cfg).map_err(|e| cfg_err(e.to_string()))?;
        for o in overrides {
            let key = o.split_once('=').map_or(o.as_str(), |(k, _)| k.trim());
            if !has_dotted(&known, key) {
                return Err(cfg_err(format!("unknown configuration key `{key}`")));
            }
        }
        Ok(cfg)
    }
}

fn merge(into: &mut toml::Table, from: toml::Table) {
    for (k, v) in from {
        match (into.get_mut(&k), v) {
            (Some(toml::Value::Table(a)), toml::Value::Table(b)) => merge(a, b),
            (_, v) => {
                into.insert(k, v);
            }
        }
    }
}

fn parse_value(raw: &str) -> toml::Value {
    // Anything that does not parse as a TOML value is taken as a bare string.
    format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

fn has_dotted(table: &toml::Table, key: &str) -> bool {
    let mut cur = table;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, p) in parts.iter().enumerate() {
        match cur.get(*p) {
            Some(toml::Value::Table(t)) if i + 1 < parts.len() => cur = t,
            Some(_) if i + 1 == parts.len() => return true,
            _ => return false,
        }
    }
    false
}

fn set_dotted(table: &mut toml::Table, key: &str, value: toml::Value) -> Result<()> {
    let mut parts: Vec<&str> = key.split('.').collect();
    let last = parts
        .pop()
        .filter(|s| !s.is_empty())
        .ok_or_else(|| Error::Config(format!("empty key in `{key}`")))?;
    let mut cur = table;
    for p in parts {
        let entry = cur
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("`{p}` in `{key}` is not a table")))?;
    }
    cur.insert(last.to_string(), value);
    Ok(())
}
