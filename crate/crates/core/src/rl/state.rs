//! Policy inputs, action decoding, and the two per-step rewards.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::geometry::{wrap_heading, Measurement, Point2, Rect, SensorKind};
use crate::histogram::BeliefImage;
use crate::rl::mlp::Mlp;

/// `(p_t, ẑ_t, q̂_t)` scaled into `[-1, 1]`; dimension `2 + m + 2m`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector(pub Vec<f64>);

impl StateVector {
    pub fn dim(targets: usize) -> usize {
        2 + targets + 2 * targets
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

fn scale_point(p: Point2, extent: &Rect) -> [f64; 2] {
    [
        2.0 * (p.x - extent.min.x) / extent.width() - 1.0,
        2.0 * (p.y - extent.min.y) / extent.height() - 1.0,
    ]
}

/// Robot position, one observation per target, and the flattened predicted
/// target positions. Positions map the extent onto `[-1, 1]²`; bearings are
/// divided by π; ranges map `[0, diagonal]` onto `[-1, 1]`.
pub fn build_state_multimodal(
    p: Point2,
    z_hats: &[Measurement],
    q_hats: &[Point2],
    kind: SensorKind,
    extent: &Rect,
) -> Result<StateVector> {
    if z_hats.len() != q_hats.len() {
        return Err(Error::LengthMismatch {
            expected: q_hats.len(),
            got: z_hats.len(),
        });
    }
    let m = q_hats.len();
    let mut v = Vec::with_capacity(StateVector::dim(m));
    v.extend(scale_point(p, extent));
    let diag = extent.diagonal();
    for z in z_hats {
        v.push(match kind {
            SensorKind::Bearing => crate::geometry::wrap_angle(z.value) / PI,
            SensorKind::Range => 2.0 * z.value / diag - 1.0,
        });
    }
    for &q in q_hats {
        v.extend(scale_point(q, extent));
    }
    Ok(StateVector(v))
}

/// Heading encoded by a 2-vector, `0` for the zero vector.
pub fn heading_of(u: &[f64]) -> f64 {
    if u[0] == 0.0 && u[1] == 0.0 {
        0.0
    } else {
        wrap_heading(u[1].atan2(u[0]))
    }
}

/// Actor heading in `[0, 2π)` with optional Gaussian exploration noise.
pub fn select_action<R: Rng + ?Sized>(
    actor: &Mlp,
    state: &StateVector,
    exploration_noise: f64,
    rng: &mut R,
) -> Result<f64> {
    if actor.output_dim() != 2 {
        return Err(Error::LengthMismatch {
            expected: 2,
            got: actor.output_dim(),
        });
    }
    let u = actor.forward_one(state.as_slice())?;
    let mut a = heading_of(&u);
    if exploration_noise > 0.0 {
        let noise = Normal::new(0.0, exploration_noise)
            .map_err(|e| Error::InvalidConfig(e.to_string()))?;
        a += noise.sample(rng);
    }
    Ok(wrap_heading(a))
}

/// `−(1/m) Σ ‖q_i − q̂_i‖²`.
pub fn reward_multimodal(q: &[Point2], q_hat: &[Point2]) -> Result<f64> {
    if q.len() != q_hat.len() || q.is_empty() {
        return Err(Error::LengthMismatch {
            expected: q.len(),
            got: q_hat.len(),
        });
    }
    let sq: f64 = q
        .iter()
        .zip(q_hat)
        .map(|(a, b)| (a.x - b.x).powi(2) + (a.y - b.y).powi(2))
        .sum();
    Ok(-sq / q.len() as f64)
}

/// Negative mean intensity of a belief image.
pub fn reward_image(img: &BeliefImage) -> f64 {
    -img.mean()
}
