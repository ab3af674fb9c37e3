//! Episodic localization environment: a holonomic robot stepping a fixed
//! distance per action, static or Brownian targets, per-step measurements of
//! every target, and the belief stack they feed.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    bearing_to, sample_measurement, Measurement, MeasurementModel, Point2, Rect, SensorKind,
};
use crate::histogram::{aggregate_image, BeliefStack};
use crate::planners::{greedy_local_step, offline_fisher_step, ActionSet, GreedyConfig};
use crate::rl::mlp::Mlp;
use crate::rl::state::{build_state_multimodal, reward_image, reward_multimodal, select_action, StateVector};

const MAX_PLACEMENT_TRIES: usize = 1000;
const TARGET_WALL_MARGIN: f64 = 1.0;
const TARGET_ROBOT_CLEARANCE: f64 = 1.0;
/// Offset mixed into the episode seed for the policy's own random stream.
const POLICY_STREAM: u64 = 0x05ee_d0fa_11ce;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum Dynamics {
    Static,
    /// Per-step zero-mean Gaussian displacement with covariance `[[c11, c12], [c12, c22]]`.
    Brownian { cov: [[f64; 2]; 2] },
}

impl Dynamics {
    pub fn brownian_isotropic(var: f64) -> Self {
        Dynamics::Brownian {
            cov: [[var, 0.0], [0.0, var]],
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Dynamics::Static => "static",
            Dynamics::Brownian { .. } => "brownian",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvConfig {
    pub extent: Rect,
    pub delta_p: f64,
    pub horizon: usize,
    pub model: MeasurementModel,
    pub targets: usize,
    pub dynamics: Dynamics,
    pub grid_width: usize,
    pub grid_height: usize,
    /// Resolution of the belief image behind the image reward.
    pub image_width: usize,
    pub image_height: usize,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            extent: Rect::square(20.0, 20.0).expect("non-empty"),
            delta_p: 0.5,
            horizon: 50,
            model: MeasurementModel::bearing(0.2).expect("positive sigma"),
            targets: 2,
            dynamics: Dynamics::Static,
            grid_width: 200,
            grid_height: 200,
            image_width: 200,
            image_height: 200,
        }
    }
}

impl EnvConfig {
    pub fn validate(&self) -> Result<()> {
        Rect::new(self.extent.min, self.extent.max)?;
        MeasurementModel::new(self.model.kind, self.model.sigma)?;
        if self.delta_p.is_nan() || self.delta_p <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "step size must be positive, got {}",
                self.delta_p
            )));
        }
        if self.targets == 0 {
            return Err(Error::InvalidConfig("need at least one target".into()));
        }
        if self.grid_width == 0 || self.grid_height == 0 || self.image_width == 0 || self.image_height == 0 {
            return Err(Error::InvalidConfig("grid and image sizes must be positive".into()));
        }
        if let Dynamics::Brownian { cov } = self.dynamics {
            let det = cov[0][0] * cov[1][1] - cov[0][1] * cov[1][0];
            if cov[0][0] < 0.0 || cov[1][1] < 0.0 || det < -1e-12 || cov[0][1] != cov[1][0] {
                return Err(Error::InvalidConfig(
                    "Brownian covariance must be symmetric positive semidefinite".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn state_dim(&self) -> usize {
        StateVector::dim(self.targets)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeState {
    pub t: usize,
    /// Robot position.
    pub p: Point2,
    /// True target positions.
    pub targets: Vec<Point2>,
    pub stack: BeliefStack,
    /// Latest observation of each target, taken at `p`.
    pub measurements: Vec<Measurement>,
    /// Every robot position so far, including the start.
    pub trajectory: Vec<Point2>,
}

impl EpisodeState {
    pub fn predictions(&self) -> Vec<Point2> {
        self.stack.predict_map()
    }

    /// Mean distance between MAP predictions and true target positions.
    pub fn localization_error(&self) -> f64 {
        let preds = self.predictions();
        preds
            .iter()
            .zip(&self.targets)
            .map(|(a, b)| a.distance(b))
            .sum::<f64>()
            / self.targets.len() as f64
    }

    pub fn observation(&self, cfg: &EnvConfig) -> Result<StateVector> {
        build_state_multimodal(
            self.p,
            &self.measurements,
            &self.predictions(),
            cfg.model.kind,
            &cfg.extent,
        )
    }
}

fn measure_all<R: Rng + ?Sized>(
    model: &MeasurementModel,
    p: Point2,
    targets: &[Point2],
    rng: &mut R,
) -> Result<Vec<Measurement>> {
    targets
        .iter()
        .enumerate()
        .map(|(i, &q)| sample_measurement(model, p, q, i, rng))
        .collect()
}

fn uniform_in<R: Rng + ?Sized>(r: &Rect, rng: &mut R) -> Point2 {
    Point2::new(
        rng.random_range(r.min.x..=r.max.x),
        rng.random_range(r.min.y..=r.max.y),
    )
}

/// Random robot start, random targets (one unit from the walls and from the
/// robot), uniform beliefs, and a first observation from the start position.
/// The first observation is part of the policy input only; beliefs start uniform.
pub fn reset<R: Rng + ?Sized>(cfg: &EnvConfig, rng: &mut R) -> Result<EpisodeState> {
    cfg.validate()?;
    let robot = uniform_in(&cfg.extent, rng);
    let inner = cfg.extent.shrink(TARGET_WALL_MARGIN)?;
    let mut targets = Vec::with_capacity(cfg.targets);
    for _ in 0..cfg.targets {
        let mut placed = None;
        for _ in 0..MAX_PLACEMENT_TRIES {
            let q = uniform_in(&inner, rng);
            if q.distance(&robot) >= TARGET_ROBOT_CLEARANCE {
                placed = Some(q);
                break;
            }
        }
        targets.push(placed.ok_or(Error::PlacementFailed(MAX_PLACEMENT_TRIES))?);
    }
    reset_with(cfg, robot, targets, rng)
}

/// Episode start from given robot and target positions.
pub fn reset_with<R: Rng + ?Sized>(
    cfg: &EnvConfig,
    robot: Point2,
    targets: Vec<Point2>,
    rng: &mut R,
) -> Result<EpisodeState> {
    cfg.validate()?;
    if targets.len() != cfg.targets {
        return Err(Error::LengthMismatch {
            expected: cfg.targets,
            got: targets.len(),
        });
    }
    if !cfg.extent.contains(robot) || targets.iter().any(|q| !cfg.extent.contains(*q)) {
        return Err(Error::InvalidConfig("start positions must lie inside the extent".into()));
    }
    let stack = BeliefStack::uniform(cfg.targets, cfg.grid_width, cfg.grid_height, cfg.extent)?;
    let measurements = measure_all(&cfg.model, robot, &targets, rng)?;
    Ok(EpisodeState {
        t: 0,
        p: robot,
        targets,
        stack,
        measurements,
        trajectory: vec![robot],
    })
}

/// Gaussian displacement with covariance `cov`, clamped to `extent`.
pub fn brownian_step<R: Rng + ?Sized>(q: Point2, cov: &[[f64; 2]; 2], extent: &Rect, rng: &mut R) -> Point2 {
    let n1: f64 = StandardNormal.sample(rng);
    let n2: f64 = StandardNormal.sample(rng);
    // Cholesky factor of a PSD 2×2
    let l11 = cov[0][0].max(0.0).sqrt();
    let l21 = if l11 > 0.0 { cov[1][0] / l11 } else { 0.0 };
    let l22 = (cov[1][1] - l21 * l21).max(0.0).sqrt();
    extent.clamp(Point2::new(q.x + l11 * n1, q.y + l21 * n1 + l22 * n2))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRewards {
    pub multimodal: f64,
    pub image: f64,
}

/// Moves the robot, advances the targets, measures every target from the new
/// position, and folds the measurements into the beliefs. Rewards for the new
/// state come from [`rewards`].
pub fn step<R: Rng + ?Sized>(state: &mut EpisodeState, heading: f64, cfg: &EnvConfig, rng: &mut R) -> Result<()> {
    if state.t >= cfg.horizon {
        return Err(Error::InvalidConfig(format!(
            "episode already reached its horizon of {} steps",
            cfg.horizon
        )));
    }
    state.p = cfg.extent.clamp(state.p.advance(heading, cfg.delta_p));
    if let Dynamics::Brownian { cov } = &cfg.dynamics {
        for q in &mut state.targets {
            *q = brownian_step(*q, cov, &cfg.extent, rng);
        }
    }
    state.measurements = measure_all(&cfg.model, state.p, &state.targets, rng)?;
    state.stack.update(state.p, &state.measurements, &cfg.model)?;
    state.trajectory.push(state.p);
    state.t += 1;
    Ok(())
}

pub fn rewards(state: &EpisodeState, cfg: &EnvConfig) -> Result<StepRewards> {
    let img = aggregate_image(&state.stack, cfg.image_width, cfg.image_height)?;
    Ok(StepRewards {
        multimodal: reward_multimodal(&state.targets, &state.predictions())?,
        image: reward_image(&img),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum Policy {
    /// Oracle Fisher planner with access to the true targets.
    Offline(ActionSet),
    /// Myopic expected-entropy planner.
    Greedy(ActionSet, GreedyConfig),
    /// Uniformly random heading.
    Random,
    /// Deterministic actor network.
    Actor(Mlp),
    /// Circles target `target` at `radius`, one chord of length `delta_p` per step.
    Circle { target: usize, radius: f64 },
}

impl Policy {
    pub fn label(&self) -> &'static str {
        match self {
            Policy::Offline(_) => "offline",
            Policy::Greedy(..) => "greedy",
            Policy::Random => "random",
            Policy::Actor(_) => "rl",
            Policy::Circle { .. } => "circle",
        }
    }

    pub fn heading<R: Rng + ?Sized>(&self, state: &EpisodeState, cfg: &EnvConfig, rng: &mut R) -> Result<f64> {
        match self {
            Policy::Offline(actions) => {
                let k = offline_fisher_step(
                    &state.trajectory,
                    &state.targets,
                    cfg.delta_p,
                    actions,
                    &cfg.model,
                    &cfg.extent,
                )?;
                Ok(actions.heading(k))
            }
            Policy::Greedy(actions, gcfg) => {
                let k = greedy_local_step(
                    &state.stack,
                    state.p,
                    actions,
                    cfg.delta_p,
                    &cfg.model,
                    gcfg,
                    &cfg.extent,
                    rng,
                )?;
                Ok(actions.heading(k))
            }
            Policy::Random => Ok(rng.random_range(0.0..TAU)),
            Policy::Actor(actor) => select_action(actor, &state.observation(cfg)?, 0.0, rng),
            Policy::Circle { target, radius } => {
                let q = *state.targets.get(*target).ok_or(Error::LengthMismatch {
                    expected: target + 1,
                    got: state.targets.len(),
                })?;
                let theta = bearing_to(q, state.p)?;
                let next = q.advance(theta + cfg.delta_p / radius, *radius);
                bearing_to(state.p, next)
            }
        }
    }
}

/// One line of an episode record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub t: usize,
    pub p: Point2,
    /// Heading that led to this position; absent at `t = 0`.
    pub heading: Option<f64>,
    pub measurements: Vec<f64>,
    pub targets: Vec<Point2>,
    pub map: Vec<Point2>,
    pub error: f64,
    pub reward_multimodal: f64,
    pub reward_image: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub steps: Vec<StepRecord>,
}

impl EpisodeRecord {
    pub fn final_error(&self) -> f64 {
        self.steps.last().map_or(f64::NAN, |s| s.error)
    }

    pub fn trajectory(&self) -> Vec<Point2> {
        self.steps.iter().map(|s| s.p).collect()
    }

    /// One JSON object per line, one line per step.
    pub fn to_jsonl(&self) -> Result<String> {
        let mut out = String::new();
        for s in &self.steps {
            out.push_str(&serde_json::to_string(s)?);
            out.push('\n');
        }
        Ok(out)
    }

    pub fn from_jsonl(text: &str) -> Result<Self> {
        let steps = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(serde_json::from_str)
            .collect::<std::result::Result<Vec<_>, _>>()?;
        Ok(Self { steps })
    }
}

fn record_step(state: &EpisodeState, heading: Option<f64>, rewards: StepRewards) -> StepRecord {
    StepRecord {
        t: state.t,
        p: state.p,
        heading,
        measurements: state.measurements.iter().map(|m| m.value).collect(),
        targets: state.targets.clone(),
        map: state.predictions(),
        error: state.localization_error(),
        reward_multimodal: rewards.multimodal,
        reward_image: rewards.image,
    }
}

/// Result of a finished episode: its record and the final state.
#[derive(Debug, Clone)]
pub struct Episode {
    pub record: EpisodeRecord,
    pub state: EpisodeState,
}

/// Runs one seeded episode. The environment (placement, measurement noise,
/// target motion) draws from a stream seeded by `seed`; the policy draws from a
/// separate stream, so different policies see the same placements.
pub fn run_episode(policy: &Policy, cfg: &EnvConfig, seed: u64) -> Result<Episode> {
    let mut env_rng = ChaCha8Rng::seed_from_u64(seed);
    let state = reset(cfg, &mut env_rng)?;
    run_from(policy, cfg, state, &mut env_rng, seed)
}

/// Runs an episode from a prepared start state.
pub fn run_from<R: Rng + ?Sized>(
    policy: &Policy,
    cfg: &EnvConfig,
    mut state: EpisodeState,
    env_rng: &mut R,
    seed: u64,
) -> Result<Episode> {
    let mut policy_rng = ChaCha8Rng::seed_from_u64(seed ^ POLICY_STREAM);
    let mut steps = Vec::with_capacity(cfg.horizon + 1);
    steps.push(record_step(&state, None, rewards(&state, cfg)?));
    while state.t < cfg.horizon {
        let heading = policy.heading(&state, cfg, &mut policy_rng)?;
        step(&mut state, heading, cfg, env_rng)?;
        steps.push(record_step(&state, Some(heading), rewards(&state, cfg)?));
    }
    Ok(Episode {
        record: EpisodeRecord { steps },
        state,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub mean: f64,
    /// Population standard deviation (zero for a single episode).
    pub std: f64,
    /// Final-step error per episode, in episode order.
    pub finals: Vec<f64>,
    pub seeds: Vec<u64>,
}

impl Evaluation {
    pub fn from_finals(finals: Vec<f64>, seeds: Vec<u64>) -> Self {
        let mut sorted = finals.clone();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len() as f64;
        let mean = sorted.iter().sum::<f64>() / n;
        let var = sorted.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / n;
        Self {
            mean,
            std: var.sqrt(),
            finals,
            seeds,
        }
    }

    pub fn median(&self) -> f64 {
        median(&self.finals)
    }
}

pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Episode `i` uses seed `seed + i`.
pub fn episode_seeds(seed: u64, n: usize) -> Vec<u64> {
    (0..n as u64).map(|i| seed.wrapping_add(i)).collect()
}

/// Runs `n` seeded episodes in parallel and summarizes final-step errors.
pub fn evaluate(policy: &Policy, cfg: &EnvConfig, n: usize, seed: u64) -> Result<Evaluation> {
    Ok(evaluate_records(policy, cfg, n, seed)?.0)
}

/// Like [`evaluate`], also returning every episode record.
pub fn evaluate_records(
    policy: &Policy,
    cfg: &EnvConfig,
    n: usize,
    seed: u64,
) -> Result<(Evaluation, Vec<EpisodeRecord>)> {
    if n == 0 {
        return Err(Error::InvalidConfig("need at least one episode".into()));
    }
    let seeds = episode_seeds(seed, n);
    let records = seeds
        .par_iter()
        .map(|&s| run_episode(policy, cfg, s).map(|e| e.record))
        .collect::<Result<Vec<_>>>()?;
    let finals = records.iter().map(EpisodeRecord::final_error).collect();
    Ok((Evaluation::from_finals(finals, seeds), records))
}

pub fn sensor_label(kind: SensorKind) -> &'static str {
    match kind {
        SensorKind::Bearing => "bearing",
        SensorKind::Range => "range",
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn small_cfg() -> EnvConfig {
        EnvConfig {
            grid_width: 50,
            grid_height: 50,
            image_width: 50,
            image_height: 50,
            horizon: 10,
            ..EnvConfig::default()
        }
    }

    #[test]
    fn reset_is_deterministic() {
        let cfg = small_cfg();
        let a = reset(&cfg, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        let b = reset(&cfg, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        assert_eq!(a, b);
        let inner = cfg.extent.shrink(1.0).unwrap();
        assert!(a.targets.iter().all(|q| inner.contains(*q) && q.distance(&a.p) >= 1.0));
    }

    #[test]
    fn reset_beliefs_are_uniform() {
        let cfg = EnvConfig {
            targets: 8,
            ..small_cfg()
        };
        let s = reset(&cfg, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(s.stack.len(), 8);
        assert!(s
            .stack
            .histograms()
            .iter()
            .all(|h| h.values().iter().all(|&v| v == 1.0)));
        assert_eq!(s.measurements.len(), 8);
        let r = rewards(&s, &cfg).unwrap();
        assert_eq!(r.image, -1.0);
    }

    #[test]
    fn placement_failure_is_reported() {
        // targets must be a unit from every wall and from the robot, which a
        // 2.2-wide box with the robot in it cannot always satisfy
        let cfg = EnvConfig {
            extent: Rect::square(2.05, 2.05).unwrap(),
            ..small_cfg()
        };
        let mut failures = 0;
        for seed in 0..20 {
            if let Err(Error::PlacementFailed(_)) = reset(&cfg, &mut ChaCha8Rng::seed_from_u64(seed)) {
                failures += 1;
            }
        }
        assert!(failures > 0);
    }

    #[test]
    fn step_moves_and_clamps() {
        let cfg = small_cfg();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut s = reset_with(&cfg, Point2::new(5.0, 5.0), vec![Point2::new(9.0, 9.0); 2], &mut rng).unwrap();
        step(&mut s, 0.0, &cfg, &mut rng).unwrap();
        assert_relative_eq!(s.p.x, 5.5, epsilon = 1e-15);
        assert_relative_eq!(s.p.y, 5.0, epsilon = 1e-15);
        let mut s = reset_with(&cfg, Point2::new(19.8, 3.0), vec![Point2::new(9.0, 9.0); 2], &mut rng).unwrap();
        step(&mut s, 0.0, &cfg, &mut rng).unwrap();
        assert_eq!(s.p, Point2::new(20.0, 3.0));
        assert_eq!(s.t, 1);
        assert_eq!(s.trajectory.len(), 2);
    }

    #[test]
    fn stepping_past_the_horizon_fails() {
        let cfg = EnvConfig { horizon: 1, ..small_cfg() };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut s = reset(&cfg, &mut rng).unwrap();
        step(&mut s, 1.0, &cfg, &mut rng).unwrap();
        assert!(step(&mut s, 1.0, &cfg, &mut rng).is_err());
    }

    #[test]
    fn brownian_zero_covariance_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let q = Point2::new(3.0, 4.0);
        let ext = Rect::square(20.0, 20.0).unwrap();
        assert_eq!(brownian_step(q, &[[0.0, 0.0], [0.0, 0.0]], &ext, &mut rng), q);
    }

    #[test]
    fn brownian_statistics() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let ext = Rect::square(1e6, 1e6).unwrap();
        let q = Point2::new(5e5, 5e5);
        let n = 100_000;
        let cov = [[0.1, 0.0], [0.0, 0.1]];
        let d: Vec<(f64, f64)> = (0..n)
            .map(|_| {
                let r = brownian_step(q, &cov, &ext, &mut rng);
                (r.x - q.x, r.y - q.y)
            })
            .collect();
        let mx = d.iter().map(|v| v.0).sum::<f64>() / n as f64;
        let my = d.iter().map(|v| v.1).sum::<f64>() / n as f64;
        let tol = 4.0 * (0.1f64 / n as f64).sqrt();
        assert!(mx.abs() < tol && my.abs() < tol, "{mx} {my}");
        let vx = d.iter().map(|v| (v.0 - mx).powi(2)).sum::<f64>() / (n - 1) as f64;
        let vy = d.iter().map(|v| (v.1 - my).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!((0.095..=0.105).contains(&vx), "{vx}");
        assert!((0.095..=0.105).contains(&vy), "{vy}");
    }

    #[test]
    fn brownian_targets_stay_inside() {
        let cfg = EnvConfig {
            dynamics: Dynamics::brownian_isotropic(4.0),
            horizon: 30,
            ..small_cfg()
        };
        let ep = run_episode(&Policy::Random, &cfg, 5).unwrap();
        for s in &ep.record.steps {
            assert!(cfg.extent.contains(s.p));
            assert!(s.targets.iter().all(|q| cfg.extent.contains(*q)));
        }
    }

    #[test]
    fn zero_horizon_records_initial_state_only() {
        let cfg = EnvConfig { horizon: 0, ..small_cfg() };
        let ep = run_episode(&Policy::Random, &cfg, 1).unwrap();
        assert_eq!(ep.record.steps.len(), 1);
        assert_eq!(ep.record.steps[0].heading, None);
    }

    #[test]
    fn episodes_are_reproducible_and_serializable() {
        let cfg = small_cfg();
        let a = run_episode(&Policy::Random, &cfg, 21).unwrap().record;
        let b = run_episode(&Policy::Random, &cfg, 21).unwrap().record;
        assert_eq!(a, b);
        let text = a.to_jsonl().unwrap();
        assert_eq!(text.lines().count(), cfg.horizon + 1);
        assert_eq!(EpisodeRecord::from_jsonl(&text).unwrap(), a);
    }

    #[test]
    fn same_seed_same_placement_across_policies() {
        let cfg = small_cfg();
        let a = run_episode(&Policy::Random, &cfg, 4).unwrap().record;
        let b = run_episode(&Policy::Offline(ActionSet::default()), &cfg, 4).unwrap().record;
        assert_eq!(a.steps[0].targets, b.steps[0].targets);
        assert_eq!(a.steps[0].p, b.steps[0].p);
    }

    #[test]
    fn single_episode_evaluation_has_zero_std() {
        let e = evaluate(&Policy::Random, &small_cfg(), 1, 3).unwrap();
        assert_eq!(e.std, 0.0);
        assert_eq!(e.finals.len(), 1);
        assert_eq!(e.mean, e.finals[0]);
        assert!(evaluate(&Policy::Random, &small_cfg(), 0, 3).is_err());
    }

    #[test]
    fn evaluation_is_deterministic() {
        let a = evaluate(&Policy::Random, &small_cfg(), 4, 10).unwrap();
        let b = evaluate(&Policy::Random, &small_cfg(), 4, 10).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn config_validation() {
        assert!(EnvConfig { delta_p: 0.0, ..EnvConfig::default() }.validate().is_err());
        assert!(EnvConfig { targets: 0, ..EnvConfig::default() }.validate().is_err());
        assert!(EnvConfig {
            dynamics: Dynamics::Brownian { cov: [[1.0, 2.0], [2.0, 1.0]] },
            ..EnvConfig::default()
        }
        .validate()
        .is_err());
    }
}
