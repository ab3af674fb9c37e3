//! Twin-critic delayed deterministic policy gradient.
//!
//! The actor emits a 2-vector whose direction is the heading; critics see the
//! action as `(cos a, sin a)`, which keeps the heading space free of a wrap
//! discontinuity.

use ndarray::{concatenate, s, Array2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rl::adam::{adam_step, AdamState};
use crate::rl::mlp::{Mlp, MlpGrads};
use crate::rl::replay::{ReplayBuffer, Transition};
use crate::histogram::aggregate_image;
use crate::rl::state::{heading_of, reward_image, reward_multimodal, select_action};
use crate::sim::{reset, step, EnvConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RewardKind {
    /// Negative mean squared MAP error (uses the true targets).
    Multimodal,
    /// Negative mean belief-image intensity.
    Image,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Td3Config {
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
    pub episodes: usize,
    pub hidden: Vec<usize>,
    /// Environment steps taken with uniformly random headings before the actor is used.
    pub warmup_steps: usize,
    pub reward: RewardKind,
    /// Multiplier applied to rewards before they enter the buffer.
    pub reward_scale: f64,
}

impl Default for Td3Config {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            tau: 0.005,
            actor_lr: 3e-4,
            critic_lr: 3e-4,
            batch_size: 256,
            policy_delay: 2,
            target_noise: 0.2,
            noise_clip: 0.5,
            exploration_noise: 0.1,
            buffer_capacity: 100_000,
            episodes: 2000,
            hidden: vec![128, 128],
            warmup_steps: 10_000,
            reward: RewardKind::Multimodal,
            reward_scale: 0.1,
        }
    }
}

impl Td3Config {
    pub fn validate(&self) -> Result<()> {
        let rates = [
            ("tau", self.tau),
            ("actor_lr", self.actor_lr),
            ("critic_lr", self.critic_lr),
        ];
        for (name, v) in rates {
            if v.is_nan() || v <= 0.0 {
                return Err(Error::InvalidConfig(format!("{name} must be positive, got {v}")));
            }
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::InvalidConfig(format!("gamma must lie in [0, 1], got {}", self.gamma)));
        }
        if self.tau > 1.0 {
            return Err(Error::InvalidConfig(format!("tau must be at most 1, got {}", self.tau)));
        }
        if self.batch_size == 0 || self.policy_delay == 0 || self.buffer_capacity == 0 {
            return Err(Error::InvalidConfig(
                "batch_size, policy_delay and buffer_capacity must be positive".into(),
            ));
        }
        if self.target_noise < 0.0 || self.noise_clip < 0.0 || self.exploration_noise < 0.0 {
            return Err(Error::InvalidConfig("noise scales must be non-negative".into()));
        }
        Ok(())
    }
}

/// Online and target networks with their optimizer states.
#[derive(Debug, Clone)]
pub struct Td3Agent {
    pub actor: Mlp,
    pub actor_target: Mlp,
    pub critics: [Mlp; 2],
    pub critic_targets: [Mlp; 2],
    actor_opt: AdamState,
    critic_opts: [AdamState; 2],
    updates: u64,
}

fn optimizer_for(net: &Mlp) -> AdamState {
    AdamState::for_params(&net.param_slices())
}

impl Td3Agent {
    pub fn new<R: Rng + ?Sized>(state_dim: usize, hidden: &[usize], rng: &mut R) -> Result<Self> {
        let mut actor_sizes = vec![state_dim];
        actor_sizes.extend_from_slice(hidden);
        actor_sizes.push(2);
        let mut critic_sizes = vec![state_dim + 2];
        critic_sizes.extend_from_slice(hidden);
        critic_sizes.push(1);
        let actor = Mlp::new(&actor_sizes, rng)?;
        let critics = [Mlp::new(&critic_sizes, rng)?, Mlp::new(&critic_sizes, rng)?];
        Ok(Self {
            actor_target: actor.clone(),
            critic_targets: critics.clone(),
            actor_opt: optimizer_for(&actor),
            critic_opts: [optimizer_for(&critics[0]), optimizer_for(&critics[1])],
            actor,
            critics,
            updates: 0,
        })
    }

    pub fn state_dim(&self) -> usize {
        self.actor.input_dim()
    }

    pub fn updates(&self) -> u64 {
        self.updates
    }

    /// `θ′ ← τθ + (1 − τ)θ′` for the actor and both critics.
    pub fn blend_targets(&mut self, tau: f64) {
        self.actor_target.blend_from(&self.actor, tau);
        for (t, c) in self.critic_targets.iter_mut().zip(&self.critics) {
            t.blend_from(c, tau);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Losses {
    pub critic: [f64; 2],
    /// Present on delayed actor updates only.
    pub actor: Option<f64>,
}

/// A sampled minibatch laid out as matrices.
pub struct Batch {
    pub states: Array2<f64>,
    /// `(cos a, sin a)` per row.
    pub actions: Array2<f64>,
    pub next_states: Array2<f64>,
    pub rewards: Vec<f64>,
    pub dones: Vec<bool>,
}

impl Batch {
    pub fn from_transitions(ts: &[&Transition]) -> Self {
        let b = ts.len();
        let d = ts[0].state.len();
        let mut states = Array2::zeros((b, d));
        let mut next_states = Array2::zeros((b, d));
        let mut actions = Array2::zeros((b, 2));
        for (i, t) in ts.iter().enumerate() {
            states.row_mut(i).assign(&ndarray::ArrayView1::from(&t.state[..]));
            next_states
                .row_mut(i)
                .assign(&ndarray::ArrayView1::from(&t.next_state[..]));
            actions[[i, 0]] = t.action.cos();
            actions[[i, 1]] = t.action.sin();
        }
        Self {
            states,
            actions,
            next_states,
            rewards: ts.iter().map(|t| t.reward).collect(),
            dones: ts.iter().map(|t| t.done).collect(),
        }
    }
}

impl Batch {
    pub fn from_buffer(buffer: &ReplayBuffer, indices: &[usize]) -> Self {
        let d = buffer.dim();
        let b = indices.len();
        let mut states = Array2::zeros((b, d));
        let mut next_states = Array2::zeros((b, d));
        let mut actions = Array2::zeros((b, 2));
        for (row, &i) in indices.iter().enumerate() {
            states.row_mut(row).assign(&ndarray::ArrayView1::from(buffer.state(i)));
            next_states
                .row_mut(row)
                .assign(&ndarray::ArrayView1::from(buffer.next_state(i)));
            actions[[row, 0]] = buffer.action(i).cos();
            actions[[row, 1]] = buffer.action(i).sin();
        }
        Self {
            states,
            actions,
            next_states,
            rewards: indices.iter().map(|&i| buffer.reward(i)).collect(),
            dones: indices.iter().map(|&i| buffer.done(i)).collect(),
        }
    }
}

fn hstack(a: &Array2<f64>, b: &Array2<f64>) -> Array2<f64> {
    concatenate(Axis(1), &[a.view(), b.view()]).expect("matching row counts")
}

/// Target-policy headings with clipped Gaussian smoothing, encoded as `(cos, sin)`.
fn smoothed_target_actions<R: Rng + ?Sized>(
    actor_target: &Mlp,
    next_states: &Array2<f64>,
    cfg: &Td3Config,
    rng: &mut R,
) -> Result<Array2<f64>> {
    let u = actor_target.forward(next_states)?;
    let mut enc = Array2::zeros((u.nrows(), 2));
    for (i, row) in u.rows().into_iter().enumerate() {
        let e: f64 = StandardNormal.sample(rng);
        let noise = (cfg.target_noise * e).clamp(-cfg.noise_clip, cfg.noise_clip);
        let a = heading_of(&[row[0], row[1]]) + noise;
        enc[[i, 0]] = a.cos();
        enc[[i, 1]] = a.sin();
    }
    Ok(enc)
}

/// Target critic values `(Q1′, Q2′, min)` at `(s′, π′(s′) + ε)`.
pub fn target_values<R: Rng + ?Sized>(
    agent: &Td3Agent,
    batch: &Batch,
    cfg: &Td3Config,
    rng: &mut R,
) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let enc = smoothed_target_actions(&agent.actor_target, &batch.next_states, cfg, rng)?;
    let x = hstack(&batch.next_states, &enc);
    let q1 = agent.critic_targets[0].forward(&x)?.column(0).to_vec();
    let q2 = agent.critic_targets[1].forward(&x)?.column(0).to_vec();
    let min = q1.iter().zip(&q2).map(|(a, b)| a.min(*b)).collect();
    Ok((q1, q2, min))
}

fn apply(net: &mut Mlp, grads: &MlpGrads, opt: &mut AdamState, lr: f64) {
    let g = grads.slices();
    let mut p = net.param_slices_mut();
    adam_step(&mut p, &g, opt, lr);
}

/// One TD3 update on an explicit minibatch.
pub fn td3_update_batch<R: Rng + ?Sized>(
    agent: &mut Td3Agent,
    batch: &Batch,
    cfg: &Td3Config,
    rng: &mut R,
) -> Result<Losses> {
    let b = batch.rewards.len() as f64;
    let (_, _, q_next) = target_values(agent, batch, cfg, rng)?;
    let y: Vec<f64> = batch
        .rewards
        .iter()
        .zip(&batch.dones)
        .zip(&q_next)
        .map(|((r, &done), q)| r + if done { 0.0 } else { cfg.gamma * q })
        .collect();

    let x = hstack(&batch.states, &batch.actions);
    let mut critic_losses = [0.0; 2];
    for (k, loss_k) in critic_losses.iter_mut().enumerate() {
        let cache = agent.critics[k].forward_cached(&x)?;
        let q = cache.output();
        let mut up = Array2::zeros(q.dim());
        let mut loss = 0.0;
        for i in 0..q.nrows() {
            let diff = q[[i, 0]] - y[i];
            loss += diff * diff;
            up[[i, 0]] = 2.0 * diff / b;
        }
        *loss_k = loss / b;
        let (grads, _) = agent.critics[k].backward(&cache, &up)?;
        apply(&mut agent.critics[k], &grads, &mut agent.critic_opts[k], cfg.critic_lr);
    }
    agent.updates += 1;

    let mut actor_loss = None;
    if agent.updates.is_multiple_of(cfg.policy_delay as u64) {
        let actor_cache = agent.actor.forward_cached(&batch.states)?;
        let u = actor_cache.output();
        let mut dirs = Array2::zeros(u.dim());
        let mut norms = Vec::with_capacity(u.nrows());
        for (i, row) in u.rows().into_iter().enumerate() {
            let n = row[0].hypot(row[1]).max(1e-8);
            dirs[[i, 0]] = row[0] / n;
            dirs[[i, 1]] = row[1] / n;
            norms.push(n);
        }
        let xa = hstack(&batch.states, &dirs);
        let critic_cache = agent.critics[0].forward_cached(&xa)?;
        actor_loss = Some(-critic_cache.output().sum() / b);
        let up = Array2::from_elem((u.nrows(), 1), -1.0 / b);
        let (_, d_input) = agent.critics[0].backward(&critic_cache, &up)?;
        let d_dirs = d_input.slice(s![.., batch.states.ncols()..]);
        // through u ↦ u/|u|: (I − n nᵀ)/|u|
        let mut d_u = Array2::zeros(u.dim());
        for i in 0..u.nrows() {
            let (n0, n1) = (dirs[[i, 0]], dirs[[i, 1]]);
            let (g0, g1) = (d_dirs[[i, 0]], d_dirs[[i, 1]]);
            let dot = n0 * g0 + n1 * g1;
            d_u[[i, 0]] = (g0 - n0 * dot) / norms[i];
            d_u[[i, 1]] = (g1 - n1 * dot) / norms[i];
        }
        let (grads, _) = agent.actor.backward(&actor_cache, &d_u)?;
        apply(&mut agent.actor, &grads, &mut agent.actor_opt, cfg.actor_lr);
        agent.blend_targets(cfg.tau);
    }
    Ok(Losses {
        critic: critic_losses,
        actor: actor_loss,
    })
}

/// Samples a minibatch and updates; `None` while the buffer holds fewer than
/// `batch_size` transitions.
pub fn td3_update<R: Rng + ?Sized>(
    agent: &mut Td3Agent,
    buffer: &ReplayBuffer,
    cfg: &Td3Config,
    rng: &mut R,
) -> Result<Option<Losses>> {
    if buffer.len() < cfg.batch_size {
        return Ok(None);
    }
    let batch = Batch::from_buffer(buffer, &buffer.sample(cfg.batch_size, rng));
    td3_update_batch(agent, &batch, cfg, rng).map(Some)
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub agent: Td3Agent,
    /// Undiscounted, unscaled return of each training episode.
    pub returns: Vec<f64>,
    /// Final localization error of each training episode.
    pub final_errors: Vec<f64>,
}

/// Trains an agent from scratch; fully determined by `seed`.
pub fn train(env: &EnvConfig, cfg: &Td3Config, seed: u64) -> Result<TrainOutcome> {
    train_with_progress(env, cfg, seed, |_, _| {})
}

pub fn train_with_progress(
    env: &EnvConfig,
    cfg: &Td3Config,
    seed: u64,
    mut progress: impl FnMut(usize, f64),
) -> Result<TrainOutcome> {
    env.validate()?;
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut agent = Td3Agent::new(env.state_dim(), &cfg.hidden, &mut rng)?;
    let mut buffer = ReplayBuffer::new(cfg.buffer_capacity);
    let mut returns = Vec::with_capacity(cfg.episodes);
    let mut final_errors = Vec::with_capacity(cfg.episodes);
    let mut total_steps = 0usize;
    for episode in 0..cfg.episodes {
        let mut state = reset(env, &mut rng)?;
        let mut obs = state.observation(env)?;
        let mut ret = 0.0;
        while state.t < env.horizon {
            let heading = if total_steps < cfg.warmup_steps {
                rng.random_range(0.0..std::f64::consts::TAU)
            } else {
                select_action(&agent.actor, &obs, cfg.exploration_noise, &mut rng)?
            };
            step(&mut state, heading, env, &mut rng)?;
            let r = match cfg.reward {
                RewardKind::Multimodal => reward_multimodal(&state.targets, &state.predictions())?,
                RewardKind::Image => reward_image(&aggregate_image(&state.stack, env.image_width, env.image_height)?),
            };
            ret += r;
            let next_obs = state.observation(env)?;
            buffer.push(Transition {
                state: obs.0,
                action: heading,
                next_state: next_obs.0.clone(),
                reward: cfg.reward_scale * r,
                done: state.t == env.horizon,
            })?;
            obs = next_obs;
            total_steps += 1;
            if let Some(losses) = td3_update(&mut agent, &buffer, cfg, &mut rng)? {
                let finite = losses.critic.iter().all(|l| l.is_finite())
                    && losses.actor.is_none_or(f64::is_finite);
                if !finite || !agent.actor.is_finite() {
                    return Err(Error::Divergence {
                        episode,
                        detail: format!("non-finite loss {losses:?} after {} updates", agent.updates),
                    });
                }
            }
        }
        final_errors.push(state.localization_error());
        returns.push(ret);
        progress(episode, ret);
    }
    Ok(TrainOutcome {
        agent,
        returns,
        final_errors,
    })
}
