use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use geasd::harness::{
    emit_outputs, evaluate_generalization, median_first_success, run_ablation, run_experiment,
    write_generalization_csv, AblationSuite, ExperimentConfig, GeneralizationConfig, PolicyKind,
    Preset,
};
use geasd::maze::{builtin, BUILTIN_MAZES};
use geasd::oracle::run_suite;

#[derive(Parser)]
#[command(
    name = "geasd",
    version,
    about = "Adaptive-skill goal exploration on grid mazes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one configuration over the given seeds and write metrics.
    Run {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Seeds to run (repeatable).
        #[arg(long = "seed", required = true, num_args = 1..)]
        seeds: Vec<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Expand a base configuration over one ablation axis.
    Ablate {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// temperature, action-history, data-scope or context-horizon.
        #[arg(long)]
        suite: AblationSuite,
        #[arg(long = "seed", num_args = 1..)]
        seeds: Vec<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train on one maze, then evaluate frozen policies on others.
    Generalize {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long = "seed", num_args = 1..)]
        seeds: Vec<u64>,
        /// Target mazes (built-in names or layout files).
        #[arg(long = "target", num_args = 1.., default_values_t = ["spiral_c".to_string(), "serpentine".to_string()])]
        targets: Vec<String>,
        #[arg(long, default_value_t = 50)]
        episodes: usize,
        #[arg(long, default_value_t = 0.01)]
        static_temperature: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the exhaustive proposition checks on random toy instances.
    Verify {
        #[arg(long, default_value_t = 100)]
        instances: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Print every line instead of the summary.
        #[arg(long)]
        verbose: bool,
    },
    /// Check built-in mazes, configuration presets and the verification suite.
    Doctor,
    /// List built-in mazes or print one.
    Mazes {
        /// Print this maze's layout document.
        name: Option<String>,
        /// Draw the maze instead of printing its document.
        #[arg(long)]
        render: bool,
    },
}

#[derive(Args)]
struct ConfigArgs {
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Starting point before the file and overrides.
    #[arg(long, default_value = "full")]
    preset: Preset,
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    maze: Option<String>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    name: Option<String>,
    /// Any configuration field as `key=value`; dotted keys reach nested tables.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl ConfigArgs {
    fn load(&self, seeds: &[u64]) -> Result<ExperimentConfig> {
        let doc = match &self.config {
            Some(p) => Some(
                std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?,
            ),
            None => None,
        };
        let mut overrides = Vec::new();
        if let Some(m) = &self.method {
            overrides.push(format!("method=\"{m}\""));
        }
        if let Some(m) = &self.maze {
            overrides.push(format!("maze=\"{m}\""));
        }
        if let Some(s) = self.steps {
            overrides.push(format!("total_steps={s}"));
        }
        if let Some(n) = &self.name {
            overrides.push(format!("name=\"{n}\""));
        }
        if !seeds.is_empty() {
            let list: Vec<String> = seeds.iter().map(u64::to_string).collect();
            overrides.push(format!("seeds=[{}]", list.join(",")));
        }
        overrides.extend(self.set.iter().cloned());
        let mut cfg = ExperimentConfig::layered(
            &ExperimentConfig::preset(self.preset),
            doc.as_deref(),
            &overrides,
        )?;
        if self.name.is_none()
            && !self.set.iter().any(|s| s.trim_start().starts_with("name"))
            && cfg.name == "run"
        {
            cfg.name = cfg.explorer.method.name().to_string();
        }
        Ok(cfg)
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Run { cfg, seeds, out } => {
            let cfg = cfg.load(&seeds)?;
            let res = run_experiment(&cfg)?;
            for r in &res.runs {
                println!(
                    "seed {}: first success {}, final success {:.2}",
                    r.seed,
                    r.first_success
                        .map_or("never".to_string(), |s| s.to_string()),
                    r.final_success()
                );
            }
            let files = emit_outputs(std::slice::from_ref(&res), &out)?;
            println!("wrote {} files to {}", files.len(), out.display());
        }
        Command::Ablate {
            cfg,
            suite,
            seeds,
            out,
        } => {
            let cfg = cfg.load(&seeds)?;
            let results = run_ablation(suite, &cfg)?;
            for r in &results {
                println!(
                    "{}: median first success {}",
                    r.config.name,
                    median_first_success(&r.runs).map_or("never".to_string(), |s| s.to_string())
                );
            }
            let files = emit_outputs(&results, &out)?;
            println!("wrote {} files to {}", files.len(), out.display());
        }
        Command::Generalize {
            cfg,
            seeds,
            targets,
            episodes,
            static_temperature,
            out,
        } => {
            let cfg = cfg.load(&seeds)?;
            let res = run_experiment(&cfg)?;
            let gcfg = GeneralizationConfig {
                episodes,
                static_temperature,
                ..GeneralizationConfig::default()
            };
            let mut rows = Vec::new();
            for target in &targets {
                let tcfg = ExperimentConfig {
                    maze: target.clone(),
                    ..cfg.clone()
                };
                let maze = tcfg.load_maze()?;
                for run in &res.runs {
                    let mut rng = ChaCha8Rng::seed_from_u64(run.seed);
                    for kind in PolicyKind::ALL {
                        if kind == PolicyKind::SkillAdaptive && run.agent.model().is_none() {
                            continue;
                        }
                        let r = evaluate_generalization(&run.agent, &maze, kind, &gcfg, &mut rng)?;
                        println!(
                            "seed {} {} {:>14}: SR {:.2} MaxOcc {:.2} AvgOcc {:.4}",
                            run.seed, r.maze, r.policy, r.success_rate, r.max_occ, r.avg_occ
                        );
                        rows.push((cfg.name.clone(), run.seed, r));
                    }
                }
            }
            emit_outputs(std::slice::from_ref(&res), &out)?;
            let p = out.join("generalization.csv");
            write_generalization_csv(&p, &rows)?;
            println!("wrote {}", p.display());
        }
        Command::Verify {
            instances,
            seed,
            verbose,
        } => {
            let report = run_suite(instances, &mut ChaCha8Rng::seed_from_u64(seed));
            if verbose {
                print!("{report}");
            }
            for check in ["prop1", "prop1-negative-control", "prop2"] {
                let (pass, total) = report.count(check);
                println!("{check}: {pass}/{total} passed");
            }
            if !report.passed() {
                println!("verification FAILED");
                return Ok(ExitCode::FAILURE);
            }
            println!("verification passed");
        }
        Command::Doctor => {
            let mut healthy = true;
            for name in BUILTIN_MAZES {
                match builtin(name) {
                    Ok(m) => println!("ok   maze {name} ({}x{})", m.width(), m.height()),
                    Err(e) => {
                        healthy = false;
                        println!("FAIL maze {name}: {e}");
                    }
                }
            }
            for p in [Preset::Full, Preset::Desk] {
                match ExperimentConfig::preset(p).validate() {
                    Ok(()) => println!("ok   preset {p:?}"),
                    Err(e) => {
                        healthy = false;
                        println!("FAIL preset {p:?}: {e}");
                    }
                }
            }
            let report = run_suite(100, &mut ChaCha8Rng::seed_from_u64(0));
            for check in ["prop1", "prop1-negative-control", "prop2"] {
                let (pass, total) = report.count(check);
                println!(
                    "{}  {check}: {pass}/{total}",
                    if pass == total { "ok  " } else { "FAIL" }
                );
            }
            healthy &= report.passed();
            if !healthy {
                println!("unhealthy");
                return Ok(ExitCode::FAILURE);
            }
            println!("healthy");
        }
        Command::Mazes { name, render } => match name {
            None => {
                for n in BUILTIN_MAZES {
                    let m = builtin(n)?;
                    println!(
                        "{n}\t{}x{}\tstart {}\tgoal {}",
                        m.width(),
                        m.height(),
                        m.start(),
                        m.desired_goals()[0]
                    );
                }
            }
            Some(n) => {
                let m = ExperimentConfig {
                    maze: n.clone(),
                    ..ExperimentConfig::default()
                }
                .load_maze()?;
                if render {
                    print!("{}", m.render());
                } else {
                    print!("{}", m.to_document());
                }
            }
        },
    }
    Ok(ExitCode::SUCCESS)
}
