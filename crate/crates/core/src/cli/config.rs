//! Flat TOML run configuration. Every key is optional; absent keys take the
//! reference experiment values (20×20 area, step 0.5, horizon 50, bearing
//! σ = 0.2 or range σ = 1, 200×200 grid).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{MeasurementModel, Rect, SensorKind};
use crate::planners::{ActionSet, GreedyConfig};
use crate::rl::{RewardKind, Td3Config};
use crate::sim::{Dynamics, EnvConfig};

pub const DEFAULT_BEARING_SIGMA: f64 = 0.2;
pub const DEFAULT_RANGE_SIGMA: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DynamicsKind {
    Static,
    Brownian,
}

impl std::str::FromStr for DynamicsKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "static" => Ok(DynamicsKind::Static),
            "brownian" => Ok(DynamicsKind::Brownian),
            other => Err(Error::InvalidConfig(format!(
                "unknown dynamics `{other}` (expected static or brownian)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    // environment
    pub extent_width: f64,
    pub extent_height: f64,
    pub step_size: f64,
    pub horizon: usize,
    pub model: SensorKind,
    /// Defaults to 0.2 rad for bearing and 1.0 for range.
    pub sigma: Option<f64>,
    pub targets: usize,
    pub dynamics: DynamicsKind,
    pub brownian_variance: f64,
    pub grid_width: usize,
    pub grid_height: usize,
    pub image_width: usize,
    pub image_height: usize,
    // planners
    pub actions: usize,
    pub greedy_samples: usize,
    // TD3
    pub gamma: f64,
    pub tau: f64,
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub batch_size: usize,
    pub policy_delay: usize,
    pub target_noise: f64,
    pub noise_clip: f64,
    pub exploration_noise: f64,
    pub buffer_capacity: usize,
    pub train_episodes: usize,
    pub hidden: Vec<usize>,
    pub warmup_steps: usize,
    pub reward: RewardKind,
    pub reward_scale: f64,
    // run
    pub seed: u64,
    pub episodes: usize,
    pub out: PathBuf,
    // tables grid
    pub table_methods: Vec<String>,
    pub table_models: Vec<SensorKind>,
    pub table_targets: Vec<usize>,
    pub table_dynamics: Vec<DynamicsKind>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let env = EnvConfig::default();
        let td3 = Td3Config::default();
        Self {
            extent_width: env.extent.width(),
            extent_height: env.extent.height(),
            step_size: env.delta_p,
            horizon: env.horizon,
            model: SensorKind::Bearing,
            sigma: None,
            targets: env.targets,
            dynamics: DynamicsKind::Static,
            brownian_variance: 0.1,
            grid_width: env.grid_width,
            grid_height: env.grid_height,
            image_width: env.image_width,
            image_height: env.image_height,
            actions: 36,
            greedy_samples: GreedyConfig::default().samples,
            gamma: td3.gamma,
            tau: td3.tau,
            actor_lr: td3.actor_lr,
            critic_lr: td3.critic_lr,
            batch_size: td3.batch_size,
            policy_delay: td3.policy_delay,
            target_noise: td3.target_noise,
            noise_clip: td3.noise_clip,
            exploration_noise: td3.exploration_noise,
            buffer_capacity: td3.buffer_capacity,
            train_episodes: td3.episodes,
            hidden: td3.hidden,
            warmup_steps: td3.warmup_steps,
            reward: td3.reward,
            reward_scale: td3.reward_scale,
            seed: 0,
            episodes: 100,
            out: PathBuf::from("results"),
            table_methods: vec!["offline".into(), "greedy".into(), "random".into()],
            table_models: vec![SensorKind::Bearing, SensorKind::Range],
            table_targets: vec![2, 4, 8],
            table_dynamics: vec![DynamicsKind::Static, DynamicsKind::Brownian],
        }
    }
}

const KNOWN_KEYS: &[&str] = &[
    "extent_width",
    "extent_height",
    "step_size",
    "horizon",
    "model",
    "sigma",
    "targets",
    "dynamics",
    "brownian_variance",
    "grid_width",
    "grid_height",
    "image_width",
    "image_height",
    "actions",
    "greedy_samples",
    "gamma",
    "tau",
    "actor_lr",
    "critic_lr",
    "batch_size",
    "policy_delay",
    "target_noise",
    "noise_clip",
    "exploration_noise",
    "buffer_capacity",
    "train_episodes",
    "hidden",
    "warmup_steps",
    "reward",
    "reward_scale",
    "seed",
    "episodes",
    "out",
    "table_methods",
    "table_models",
    "table_targets",
    "table_dynamics",
];

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.rfind('\n').map_or(before.len(), |nl| before.len() - nl - 1) + 1;
    (line, col)
}

fn parse_error(path: &Path, text: &str, e: toml::de::Error) -> Error {
    let (line, column) = e.span().map_or((1, 1), |s| line_col(text, s.start));
    Error::ConfigParse {
        path: path.to_path_buf(),
        line,
        column,
        message: e.message().trim().to_string(),
    }
}

impl RunConfig {
    /// Parses configuration text; `path` is only used in error messages.
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let table: toml::Table = toml::from_str(text).map_err(|e| parse_error(path, text, e))?;
        if let Some(key) = table.keys().find(|k| !KNOWN_KEYS.contains(&k.as_str())) {
            return Err(Error::UnknownKey(key.clone()));
        }
        let cfg: RunConfig = toml::from_str(text).map_err(|e| parse_error(path, text, e))?;
        cfg.env()?;
        cfg.td3().validate()?;
        Ok(cfg)
    }

    pub fn sigma(&self) -> f64 {
        self.sigma.unwrap_or(match self.model {
            SensorKind::Bearing => DEFAULT_BEARING_SIGMA,
            SensorKind::Range => DEFAULT_RANGE_SIGMA,
        })
    }

    pub fn env(&self) -> Result<EnvConfig> {
        let env = EnvConfig {
            extent: Rect::square(self.extent_width, self.extent_height)?,
            delta_p: self.step_size,
            horizon: self.horizon,
            model: MeasurementModel::new(self.model, self.sigma())?,
            targets: self.targets,
            dynamics: match self.dynamics {
                DynamicsKind::Static => Dynamics::Static,
                DynamicsKind::Brownian => Dynamics::brownian_isotropic(self.brownian_variance),
            },
            grid_width: self.grid_width,
            grid_height: self.grid_height,
            image_width: self.image_width,
            image_height: self.image_height,
        };
        env.validate()?;
        Ok(env)
    }

    pub fn td3(&self) -> Td3Config {
        Td3Config {
            gamma: self.gamma,
            tau: self.tau,
            actor_lr: self.actor_lr,
            critic_lr: self.critic_lr,
            batch_size: self.batch_size,
            policy_delay: self.policy_delay,
            target_noise: self.target_noise,
            noise_clip: self.noise_clip,
            exploration_noise: self.exploration_noise,
            buffer_capacity: self.buffer_capacity,
            episodes: self.train_episodes,
            hidden: self.hidden.clone(),
            warmup_steps: self.warmup_steps,
            reward: self.reward,
            reward_scale: self.reward_scale,
        }
    }

    pub fn action_set(&self) -> Result<ActionSet> {
        ActionSet::new(self.actions)
    }

    pub fn greedy(&self) -> GreedyConfig {
        GreedyConfig {
            samples: self.greedy_samples,
        }
    }
}

/// Reads and parses a configuration file.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)?;
    RunConfig::parse(&text, path)
}
