//! Active localization of multiple static or drifting targets by a single
//! mobile sensor taking noisy bearing or range measurements.
//!
//! The crate provides the measurement geometry, Fisher-information
//! uncertainty measures, a per-target grid histogram filter, two planners
//! (an oracle Fisher planner and a myopic expected-entropy planner), a TD3
//! learner for a heading policy, an episode simulator, and a command-line
//! front end.

pub mod cli;
pub mod error;
pub mod geometry;
pub mod histogram;
pub mod planners;
pub mod rl;
pub mod sim;
pub mod uncertainty;

pub use error::{Error, Result};
pub use geometry::{MeasurementModel, Point2, Rect, SensorKind};
pub use histogram::{aggregate_image, BeliefImage, BeliefStack, GridHistogram};
pub use planners::{greedy_local_step, offline_fisher_plan, offline_fisher_step, ActionSet, GreedyConfig, Trajectory};
pub use sim::{evaluate, run_episode, Dynamics, EnvConfig, EpisodeRecord, Evaluation, Policy};
pub use uncertainty::{fim_accumulate, gdop, total_uncertainty, Fim2x2};
