//! Command-line front end: configuration, commands, and heatmap export.

pub mod config;
pub mod heatmap;

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::SensorKind;
use crate::histogram::aggregate_image;
use crate::rl::td3::train_with_progress;
use crate::rl::Checkpoint;
use crate::sim::{evaluate_records, run_episode, sensor_label, EnvConfig, Evaluation, Policy};

pub use config::{load_config, DynamicsKind, RunConfig};
pub use heatmap::{export_heatmap, read_pgm};

#[derive(Debug, Parser)]
#[command(name = "activeloc", version, about = "Active multi-target localization")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub overrides: Overrides,
}

/// Flags that override the configuration file.
#[derive(Debug, Default, Clone, clap::Args)]
pub struct Overrides {
    /// TOML run configuration; defaults apply to absent keys.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub episodes: Option<usize>,
    /// bearing or range
    #[arg(long, global = true)]
    pub model: Option<SensorKind>,
    #[arg(long, global = true)]
    pub targets: Option<usize>,
    /// static or brownian
    #[arg(long, global = true)]
    pub dynamics: Option<DynamicsKind>,
    /// offline, greedy, random or rl:CHECKPOINT
    #[arg(long, global = true)]
    pub policy: Option<String>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Run one episode with the oracle Fisher planner.
    PlanOffline,
    /// Run one episode with the expected-entropy planner.
    PlanGreedy,
    /// Train a TD3 heading policy and write a checkpoint.
    Train,
    /// Evaluate a policy over seeded episodes.
    Eval,
    /// Run one episode and write the final belief heatmap.
    ExportHeatmap,
    /// Evaluate every configured method on the full scenario grid.
    Tables,
}

impl Overrides {
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => load_config(path)?,
            None => RunConfig::default(),
        };
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.episodes {
            cfg.episodes = v;
        }
        if let Some(v) = self.model {
            if v != cfg.model {
                // an explicit sigma belongs to the configured model
                cfg.sigma = None;
            }
            cfg.model = v;
        }
        if let Some(v) = self.targets {
            cfg.targets = v;
        }
        if let Some(v) = self.dynamics {
            cfg.dynamics = v;
        }
        if let Some(v) = &self.out {
            cfg.out = v.clone();
        }
        cfg.env()?;
        Ok(cfg)
    }
}

/// Policy selection from `--policy` or `table_methods`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PolicySpec {
    Offline,
    Greedy,
    Random,
    Rl(PathBuf),
}

impl std::str::FromStr for PolicySpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "offline" => Ok(PolicySpec::Offline),
            "greedy" => Ok(PolicySpec::Greedy),
            "random" => Ok(PolicySpec::Random),
            _ => match s.strip_prefix("rl:") {
                Some(path) if !path.is_empty() => Ok(PolicySpec::Rl(PathBuf::from(path))),
                _ => Err(Error::InvalidConfig(format!(
                    "unknown policy `{s}` (expected offline, greedy, random or rl:CHECKPOINT)"
                ))),
            },
        }
    }
}

impl PolicySpec {
    pub fn label(&self) -> &'static str {
        match self {
            PolicySpec::Offline => "offline",
            PolicySpec::Greedy => "greedy",
            PolicySpec::Random => "random",
            PolicySpec::Rl(_) => "rl",
        }
    }

    /// Builds the policy; a checkpoint must match the environment's state size.
    pub fn build(&self, cfg: &RunConfig, env: &EnvConfig) -> Result<Policy> {
        Ok(match self {
            PolicySpec::Offline => Policy::Offline(cfg.action_set()?),
            PolicySpec::Greedy => Policy::Greedy(cfg.action_set()?, cfg.greedy()),
            PolicySpec::Random => Policy::Random,
            PolicySpec::Rl(path) => {
                let actor = Checkpoint::load(path)?.actor()?;
                if actor.input_dim() != env.state_dim() {
                    return Err(Error::Checkpoint(format!(
                        "{} expects {} inputs but the environment has {} targets (state size {})",
                        path.display(),
                        actor.input_dim(),
                        env.targets,
                        env.state_dim()
                    )));
                }
                Policy::Actor(actor)
            }
        })
    }
}

/// One CSV row per episode.
#[derive(Debug, Clone, Serialize)]
struct ResultRow<'a> {
    method: &'a str,
    model: &'a str,
    m: usize,
    dynamics: &'a str,
    seed: u64,
    episode: usize,
    final_error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CellSummary {
    pub method: String,
    pub model: String,
    pub m: usize,
    pub dynamics: String,
    pub episodes: usize,
    pub mean: f64,
    pub std: f64,
    pub median: f64,
}

fn dynamics_label(d: DynamicsKind) -> &'static str {
    match d {
        DynamicsKind::Static => "static",
        DynamicsKind::Brownian => "brownian",
    }
}

fn write_rows<W: Write>(
    w: &mut csv::Writer<W>,
    method: &str,
    cfg: &RunConfig,
    eval: &Evaluation,
) -> Result<()> {
    for (i, (&seed, &err)) in eval.seeds.iter().zip(&eval.finals).enumerate() {
        w.serialize(ResultRow {
            method,
            model: sensor_label(cfg.model),
            m: cfg.targets,
            dynamics: dynamics_label(cfg.dynamics),
            seed,
            episode: i,
            final_error: err,
        })?;
    }
    Ok(())
}

fn summary(method: &str, cfg: &RunConfig, eval: &Evaluation) -> CellSummary {
    CellSummary {
        method: method.to_string(),
        model: sensor_label(cfg.model).to_string(),
        m: cfg.targets,
        dynamics: dynamics_label(cfg.dynamics).to_string(),
        episodes: eval.finals.len(),
        mean: eval.mean,
        std: eval.std,
        median: eval.median(),
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}

fn heatmap_for(record_env: &EnvConfig, ep: &crate::sim::Episode, path: &Path) -> Result<()> {
    let img = aggregate_image(&ep.state.stack, record_env.image_width, record_env.image_height)?;
    export_heatmap(
        &img,
        path,
        &record_env.extent,
        &ep.state.trajectory,
        &ep.state.targets,
        &ep.state.predictions(),
    )
}

fn single_episode(cfg: &RunConfig, spec: &PolicySpec, out: &mut impl Write) -> Result<()> {
    let env = cfg.env()?;
    let policy = spec.build(cfg, &env)?;
    let ep = run_episode(&policy, &env, cfg.seed)?;
    std::fs::create_dir_all(&cfg.out)?;
    let stem = format!("{}_seed{}", spec.label(), cfg.seed);
    let jsonl = cfg.out.join(format!("{stem}.jsonl"));
    std::fs::write(&jsonl, ep.record.to_jsonl()?)?;
    let pgm = cfg.out.join(format!("{stem}.pgm"));
    heatmap_for(&env, &ep, &pgm)?;
    writeln!(
        out,
        "{} seed {}: final error {:.4} after {} steps; wrote {} and {}",
        spec.label(),
        cfg.seed,
        ep.record.final_error(),
        env.horizon,
        jsonl.display(),
        pgm.display()
    )?;
    Ok(())
}

fn train_cmd(cfg: &RunConfig, out: &mut impl Write) -> Result<()> {
    let env = cfg.env()?;
    let td3 = cfg.td3();
    std::fs::create_dir_all(&cfg.out)?;
    let every = (td3.episodes / 20).max(1);
    let outcome = train_with_progress(&env, &td3, cfg.seed, |ep, ret| {
        if (ep + 1) % every == 0 {
            eprintln!("episode {:>6}/{}: return {ret:.3}", ep + 1, td3.episodes);
        }
    })?;
    let ckpt_path = cfg.out.join("checkpoint.json");
    Checkpoint::new(&outcome.agent.actor, &env, &td3, cfg.seed).save(&ckpt_path)?;
    let curve_path = cfg.out.join("learning_curve.csv");
    let mut w = csv::Writer::from_path(&curve_path)?;
    w.write_record(["episode", "return", "final_error"])?;
    for (i, (r, e)) in outcome.returns.iter().zip(&outcome.final_errors).enumerate() {
        w.write_record([i.to_string(), r.to_string(), e.to_string()])?;
    }
    w.flush()?;
    writeln!(out, "wrote {} and {}", ckpt_path.display(), curve_path.display())?;
    Ok(())
}

fn eval_cmd(cfg: &RunConfig, spec: &PolicySpec, out: &mut impl Write) -> Result<()> {
    let env = cfg.env()?;
    let policy = spec.build(cfg, &env)?;
    let (eval, _) = evaluate_records(&policy, &env, cfg.episodes, cfg.seed)?;
    std::fs::create_dir_all(&cfg.out)?;
    let csv_path = cfg.out.join(format!("eval_{}.csv", spec.label()));
    let mut w = csv::Writer::from_path(&csv_path)?;
    write_rows(&mut w, spec.label(), cfg, &eval)?;
    w.flush()?;
    let json_path = cfg.out.join(format!("eval_{}.json", spec.label()));
    write_json(&json_path, &summary(spec.label(), cfg, &eval))?;
    writeln!(
        out,
        "{} over {} episodes: mean {:.4}, std {:.4}, median {:.4}",
        spec.label(),
        cfg.episodes,
        eval.mean,
        eval.std,
        eval.median()
    )?;
    Ok(())
}

fn export_cmd(cfg: &RunConfig, spec: &PolicySpec, out: &mut impl Write) -> Result<()> {
    let env = cfg.env()?;
    let policy = spec.build(cfg, &env)?;
    let ep = run_episode(&policy, &env, cfg.seed)?;
    let pgm = cfg.out.join(format!("heatmap_{}_seed{}.pgm", spec.label(), cfg.seed));
    heatmap_for(&env, &ep, &pgm)?;
    writeln!(out, "wrote {}", pgm.display())?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct TablesSummary {
    seed: u64,
    episodes: usize,
    cells: Vec<CellSummary>,
}

fn tables_cmd(cfg: &RunConfig, out: &mut impl Write) -> Result<()> {
    let specs = cfg
        .table_methods
        .iter()
        .map(|s| s.parse())
        .collect::<Result<Vec<PolicySpec>>>()?;
    if specs.is_empty() {
        return Err(Error::InvalidConfig("table_methods is empty".into()));
    }
    std::fs::create_dir_all(cfg.out.join("heatmaps"))?;
    let csv_path = cfg.out.join("tables.csv");
    let mut w = csv::Writer::from_path(&csv_path)?;
    let mut cells = Vec::new();
    for &dynamics in &cfg.table_dynamics {
        for &model in &cfg.table_models {
            for &m in &cfg.table_targets {
                let mut cell = RunConfig {
                    dynamics,
                    model,
                    targets: m,
                    ..cfg.clone()
                };
                if model != cfg.model {
                    cell.sigma = None;
                }
                let env = cell.env()?;
                for (i, spec) in specs.iter().enumerate() {
                    let policy = match spec.build(&cell, &env) {
                        Ok(p) => p,
                        // a checkpoint only covers the scenario it was trained on
                        Err(Error::Checkpoint(msg)) if matches!(spec, PolicySpec::Rl(_)) => {
                            eprintln!("skipping rl for {} m={m}: {msg}", sensor_label(model));
                            continue;
                        }
                        Err(e) => return Err(e),
                    };
                    let (eval, _) = evaluate_records(&policy, &env, cell.episodes, cell.seed)?;
                    write_rows(&mut w, spec.label(), &cell, &eval)?;
                    cells.push(summary(spec.label(), &cell, &eval));
                    if i == 0 {
                        let ep = run_episode(&policy, &env, cell.seed)?;
                        let name = format!(
                            "{}_{}_m{m}_{}.pgm",
                            dynamics_label(dynamics),
                            sensor_label(model),
                            spec.label()
                        );
                        heatmap_for(&env, &ep, &cfg.out.join("heatmaps").join(name))?;
                    }
                    writeln!(
                        out,
                        "{:<8} {:<7} {:<5} m={:<2} mean {:.4} std {:.4}",
                        dynamics_label(dynamics),
                        sensor_label(model),
                        spec.label(),
                        m,
                        eval.mean,
                        eval.std
                    )?;
                }
            }
        }
    }
    w.flush()?;
    let json_path = cfg.out.join("tables.json");
    write_json(
        &json_path,
        &TablesSummary {
            seed: cfg.seed,
            episodes: cfg.episodes,
            cells,
        },
    )?;
    writeln!(out, "wrote {} and {}", csv_path.display(), json_path.display())?;
    Ok(())
}

/// Executes a command, writing progress lines to `out`.
pub fn run(cli: &Cli, out: &mut impl Write) -> Result<()> {
    let cfg = cli.overrides.resolve()?;
    let policy = |default: PolicySpec| -> Result<PolicySpec> {
        cli.overrides.policy.as_deref().map_or(Ok(default), str::parse)
    };
    match cli.command {
        Command::PlanOffline => single_episode(&cfg, &PolicySpec::Offline, out),
        Command::PlanGreedy => single_episode(&cfg, &PolicySpec::Greedy, out),
        Command::Train => train_cmd(&cfg, out),
        Command::Eval => eval_cmd(&cfg, &policy(PolicySpec::Offline)?, out),
        Command::ExportHeatmap => export_cmd(&cfg, &policy(PolicySpec::Offline)?, out),
        Command::Tables => tables_cmd(&cfg, out),
    }
}
