//! Trajectory planners: the oracle Fisher planner, which sees the true target
//! positions, and the myopic expected-entropy baseline, which sees only the
//! beliefs.

use std::f64::consts::TAU;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{wrap_angle, Measurement, MeasurementModel, Point2, Rect, SensorKind};
use crate::histogram::{BeliefStack, GridHistogram};
use crate::uncertainty::Fim2x2;

/// Cells more than this many nats below the belief maximum are left out of
/// trial entropy evaluations. Their total weight is below `e^-40 · cells`.
const SUPPORT_LOG_CUTOFF: f64 = 40.0;

/// `K` equally spaced candidate headings `2πk/K`, `k = 0..K`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionSet {
    headings: Vec<f64>,
}

impl ActionSet {
    pub fn new(k: usize) -> Result<Self> {
        if k < 4 {
            return Err(Error::InvalidConfig(format!(
                "action set needs at least 4 headings, got {k}"
            )));
        }
        Ok(Self {
            headings: (0..k).map(|i| TAU * i as f64 / k as f64).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.headings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.headings.is_empty()
    }

    pub fn headings(&self) -> &[f64] {
        &self.headings
    }

    pub fn heading(&self, k: usize) -> f64 {
        self.headings[k]
    }

    /// Position reached from `p` under each heading, clamped to `extent`.
    pub fn candidates(&self, p: Point2, step: f64, extent: &Rect) -> Vec<Point2> {
        self.headings
            .iter()
            .map(|&a| extent.clamp(p.advance(a, step)))
            .collect()
    }
}

impl Default for ActionSet {
    fn default() -> Self {
        Self::new(36).expect("36 headings")
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Trajectory {
    pub points: Vec<Point2>,
}

/// Total-uncertainty score of one candidate: targets left untriangulated first,
/// then the sum of `det(F⁻¹)` over the rest. Compared lexicographically, this
/// orders like `Σ det(F⁻¹)` whenever that sum is finite.
#[derive(Debug, Clone, Copy, PartialEq)]
struct FisherScore {
    untriangulated: usize,
    finite_sum: f64,
}

impl FisherScore {
    fn better_than(&self, other: &FisherScore) -> bool {
        (self.untriangulated, self.finite_sum) < (other.untriangulated, other.finite_sum)
    }

    fn total(&self) -> f64 {
        if self.untriangulated > 0 {
            f64::INFINITY
        } else {
            self.finite_sum
        }
    }
}

fn score_candidate(
    accumulated: &[Fim2x2],
    candidate: Point2,
    targets: &[Point2],
    model: &MeasurementModel,
) -> FisherScore {
    let mut score = FisherScore {
        untriangulated: 0,
        finite_sum: 0.0,
    };
    for (f, &q) in accumulated.iter().zip(targets) {
        let mut f = *f;
        let u = match f.add_measurement(model, candidate, q) {
            Ok(()) => f.inverse_det(),
            Err(_) => f64::INFINITY,
        };
        if u.is_finite() {
            score.finite_sum += u;
        } else {
            score.untriangulated += 1;
        }
    }
    score
}

/// One step of the oracle planner: the action whose next position minimizes
/// the total uncertainty of all targets given the measurement history.
/// Returns the action index; ties go to the lowest index.
pub fn offline_fisher_step(
    history: &[Point2],
    targets: &[Point2],
    delta_p: f64,
    actions: &ActionSet,
    model: &MeasurementModel,
    extent: &Rect,
) -> Result<usize> {
    let current = *history
        .last()
        .ok_or_else(|| Error::InvalidConfig("empty trajectory history".into()))?;
    let accumulated = targets
        .iter()
        .map(|&q| {
            let mut f = Fim2x2::ZERO;
            for &p in history {
                // a past position on top of a target contributes nothing usable
                let _ = f.add_measurement(model, p, q);
            }
            f
        })
        .collect::<Vec<_>>();
    Ok(best_fisher_action(&accumulated, current, targets, delta_p, actions, model, extent).0)
}

fn best_fisher_action(
    accumulated: &[Fim2x2],
    current: Point2,
    targets: &[Point2],
    delta_p: f64,
    actions: &ActionSet,
    model: &MeasurementModel,
    extent: &Rect,
) -> (usize, Point2, FisherScore) {
    let candidates = actions.candidates(current, delta_p, extent);
    let mut best = (
        0,
        candidates[0],
        score_candidate(accumulated, candidates[0], targets, model),
    );
    for (k, &c) in candidates.iter().enumerate().skip(1) {
        let s = score_candidate(accumulated, c, targets, model);
        if s.better_than(&best.2) {
            best = (k, c, s);
        }
    }
    best
}

/// Oracle planner over a full horizon: `horizon` positions starting at `start`,
/// each chosen greedily to minimize the total Fisher uncertainty of the known
/// `targets`.
pub fn offline_fisher_plan(
    targets: &[Point2],
    start: Point2,
    horizon: usize,
    delta_p: f64,
    actions: &ActionSet,
    model: &MeasurementModel,
    extent: &Rect,
) -> Result<Trajectory> {
    if horizon < 2 {
        return Err(Error::InvalidConfig(format!(
            "planning horizon must be at least 2, got {horizon}"
        )));
    }
    if targets.is_empty() {
        return Err(Error::InvalidConfig("no targets to plan for".into()));
    }
    let mut accumulated = targets
        .iter()
        .map(|&q| {
            let mut f = Fim2x2::ZERO;
            f.add_measurement(model, start, q)?;
            Ok(f)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut points = Vec::with_capacity(horizon);
    points.push(start);
    let mut current = start;
    for _ in 1..horizon {
        let (_, next, _) =
            best_fisher_action(&accumulated, current, targets, delta_p, actions, model, extent);
        for (f, &q) in accumulated.iter_mut().zip(targets) {
            let _ = f.add_measurement(model, next, q);
        }
        points.push(next);
        current = next;
    }
    Ok(Trajectory { points })
}

/// Total uncertainty after each prefix of a trajectory.
pub fn uncertainty_profile(
    trajectory: &Trajectory,
    targets: &[Point2],
    model: &MeasurementModel,
) -> Vec<f64> {
    let mut acc = vec![Fim2x2::ZERO; targets.len()];
    trajectory
        .points
        .iter()
        .map(|&p| {
            let mut untriangulated = 0;
            let mut sum = 0.0;
            for (f, &q) in acc.iter_mut().zip(targets) {
                let _ = f.add_measurement(model, p, q);
                let u = f.inverse_det();
                if u.is_finite() {
                    sum += u;
                } else {
                    untriangulated += 1;
                }
            }
            FisherScore {
                untriangulated,
                finite_sum: sum,
            }
            .total()
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GreedyConfig {
    /// Hypothetical measurements drawn per target and candidate.
    pub samples: usize,
}

impl Default for GreedyConfig {
    fn default() -> Self {
        Self { samples: 8 }
    }
}

/// Cells of one belief carrying non-negligible weight.
struct Support {
    centers: Vec<Point2>,
    logs: Vec<f64>,
}

impl Support {
    fn of(h: &GridHistogram) -> Self {
        let mut centers = Vec::new();
        let mut logs = Vec::new();
        for (i, &l) in h.log_values().iter().enumerate() {
            if l > -SUPPORT_LOG_CUTOFF {
                centers.push(h.center_of_index(i));
                logs.push(l);
            }
        }
        Self { centers, logs }
    }
}

/// Expected posterior entropy of one belief if the robot measured from `p`,
/// averaged over the hypothetical observations in `z_hats`.
fn expected_entropy(
    h: &GridHistogram,
    support: &Support,
    p: Point2,
    z_hats: &[f64],
    model: &MeasurementModel,
    scratch: &mut Vec<f64>,
) -> f64 {
    let sensor_cell = match model.kind {
        SensorKind::Bearing => h.cell_of(p).map(|(ix, iy)| h.cell_center(ix, iy)),
        SensorKind::Range => None,
    };
    // noise-free observation of every support cell, shared by all samples
    let z_cells: Vec<Option<f64>> = support
        .centers
        .iter()
        .map(|&c| {
            if Some(c) == sensor_cell {
                None
            } else {
                model.observe(p, c).ok()
            }
        })
        .collect();
    let inv_two_var = 1.0 / (2.0 * model.variance());
    let mut total = 0.0;
    for &z in z_hats {
        scratch.clear();
        let mut max = f64::NEG_INFINITY;
        for (l, zc) in support.logs.iter().zip(&z_cells) {
            let r = match zc {
                Some(zc) => model.residual(*zc, z),
                None => 0.0,
            };
            let v = l - r * r * inv_two_var;
            max = max.max(v);
            scratch.push(v);
        }
        total += crate::histogram::entropy_of_logs(scratch.iter().map(|v| v - max));
    }
    total / z_hats.len() as f64
}

/// Myopic baseline: the heading index whose next position minimizes the summed
/// expected posterior entropy of all beliefs. Hypothetical measurements are
/// drawn around each belief's MAP point, with the same noise draws reused for
/// every candidate.
#[allow(clippy::too_many_arguments)]
pub fn greedy_local_step<R: Rng + ?Sized>(
    stack: &BeliefStack,
    p: Point2,
    actions: &ActionSet,
    delta_p: f64,
    model: &MeasurementModel,
    cfg: &GreedyConfig,
    extent: &Rect,
    rng: &mut R,
) -> Result<usize> {
    if cfg.samples == 0 {
        return Err(Error::InvalidConfig("greedy planner needs at least one sample".into()));
    }
    let maps = stack.predict_map();
    let noise: Vec<Vec<f64>> = (0..stack.len())
        .map(|_| (0..cfg.samples).map(|_| StandardNormal.sample(rng)).collect())
        .collect();
    let supports: Vec<Support> = stack.histograms().iter().map(Support::of).collect();
    let candidates = actions.candidates(p, delta_p, extent);
    let mut scratch = Vec::new();
    let mut best = (0, f64::INFINITY);
    for (k, &c) in candidates.iter().enumerate() {
        if candidates[..k].contains(&c) {
            continue;
        }
        let mut score = 0.0;
        for (i, h) in stack.histograms().iter().enumerate() {
            let z_hats = hypothetical_measurements(model, c, maps[i], &noise[i]);
            score += expected_entropy(h, &supports[i], c, &z_hats, model, &mut scratch);
        }
        if score < best.1 {
            best = (k, score);
        }
    }
    Ok(best.0)
}

/// Observations of `q_map` from `p` perturbed by `sigma · noise`.
pub fn hypothetical_measurements(
    model: &MeasurementModel,
    p: Point2,
    q_map: Point2,
    noise: &[f64],
) -> Vec<f64> {
    let truth = model.observe(p, q_map).unwrap_or(0.0);
    noise
        .iter()
        .map(|e| {
            let z = truth + model.sigma * e;
            match model.kind {
                SensorKind::Bearing => wrap_angle(z),
                SensorKind::Range => z,
            }
        })
        .collect()
}

/// Exhaustive reference for [`greedy_local_step`]: full trial updates and full
/// entropies, no support truncation. Returns per-candidate scores.
#[allow(clippy::too_many_arguments)]
pub fn greedy_scores_exhaustive<R: Rng + ?Sized>(
    stack: &BeliefStack,
    p: Point2,
    actions: &ActionSet,
    delta_p: f64,
    model: &MeasurementModel,
    cfg: &GreedyConfig,
    extent: &Rect,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let maps = stack.predict_map();
    let noise: Vec<Vec<f64>> = (0..stack.len())
        .map(|_| (0..cfg.samples).map(|_| StandardNormal.sample(rng)).collect())
        .collect();
    actions
        .candidates(p, delta_p, extent)
        .into_iter()
        .map(|c| {
            let mut score = 0.0;
            for (i, h) in stack.histograms().iter().enumerate() {
                let z_hats = hypothetical_measurements(model, c, maps[i], &noise[i]);
                let mut sum = 0.0;
                for z in z_hats {
                    let m = Measurement {
                        value: z,
                        target_index: i,
                    };
                    sum += h.updated(c, &m, model)?.entropy();
                }
                score += sum / cfg.samples as f64;
            }
            Ok(score)
        })
        .collect()
}
