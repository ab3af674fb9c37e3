//! Planar geometry and the two relative sensor models.

use std::f64::consts::{PI, TAU};

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    /// Point displaced by `step` along `heading`.
    pub fn advance(&self, heading: f64, step: f64) -> Self {
        Self::new(self.x + step * heading.cos(), self.y + step * heading.sin())
    }

    pub fn distance(&self, other: &Point2) -> f64 {
        range_to(*self, *other)
    }
}

impl From<(f64, f64)> for Point2 {
    fn from((x, y): (f64, f64)) -> Self {
        Self::new(x, y)
    }
}

/// Axis-aligned environment rectangle `[min.x, max.x] × [min.y, max.y]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub min: Point2,
    pub max: Point2,
}

impl Rect {
    pub fn new(min: Point2, max: Point2) -> Result<Self> {
        let r = Self { min, max };
        if !(min.is_finite() && max.is_finite()) || r.width() <= 0.0 || r.height() <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "empty extent [{}, {}] x [{}, {}]",
                min.x, max.x, min.y, max.y
            )));
        }
        Ok(r)
    }

    /// `[0, w] × [0, h]`.
    pub fn square(w: f64, h: f64) -> Result<Self> {
        Self::new(Point2::new(0.0, 0.0), Point2::new(w, h))
    }

    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }

    pub fn center(&self) -> Point2 {
        Point2::new(
            0.5 * (self.min.x + self.max.x),
            0.5 * (self.min.y + self.max.y),
        )
    }

    pub fn contains(&self, p: Point2) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    pub fn clamp(&self, p: Point2) -> Point2 {
        Point2::new(
            p.x.clamp(self.min.x, self.max.x),
            p.y.clamp(self.min.y, self.max.y),
        )
    }

    /// Rectangle shrunk by `margin` on every side, if anything is left.
    pub fn shrink(&self, margin: f64) -> Result<Self> {
        Self::new(
            Point2::new(self.min.x + margin, self.min.y + margin),
            Point2::new(self.max.x - margin, self.max.y - margin),
        )
    }

    pub fn diagonal(&self) -> f64 {
        self.width().hypot(self.height())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SensorKind {
    Bearing,
    Range,
}

impl std::fmt::Display for SensorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SensorKind::Bearing => "bearing",
            SensorKind::Range => "range",
        })
    }
}

impl std::str::FromStr for SensorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bearing" => Ok(SensorKind::Bearing),
            "range" => Ok(SensorKind::Range),
            other => Err(Error::InvalidConfig(format!(
                "unknown sensor model `{other}` (expected bearing or range)"
            ))),
        }
    }
}

/// Sensor kind plus Gaussian noise standard deviation (radians for bearing,
/// meters for range).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasurementModel {
    pub kind: SensorKind,
    pub sigma: f64,
}

impl MeasurementModel {
    pub fn new(kind: SensorKind, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "sensor sigma must be positive, got {sigma}"
            )));
        }
        Ok(Self { kind, sigma })
    }

    pub fn bearing(sigma: f64) -> Result<Self> {
        Self::new(SensorKind::Bearing, sigma)
    }

    pub fn range(sigma: f64) -> Result<Self> {
        Self::new(SensorKind::Range, sigma)
    }

    pub fn variance(&self) -> f64 {
        self.sigma * self.sigma
    }

    /// Noise-free measurement of `q` from `p`.
    pub fn observe(&self, p: Point2, q: Point2) -> Result<f64> {
        match self.kind {
            SensorKind::Bearing => bearing_to(p, q),
            SensorKind::Range => Ok(range_to(p, q)),
        }
    }

    /// Difference between a predicted and an observed value; wrapped for bearings.
    pub fn residual(&self, predicted: f64, observed: f64) -> f64 {
        match self.kind {
            SensorKind::Bearing => wrap_angle(predicted - observed),
            SensorKind::Range => predicted - observed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub value: f64,
    pub target_index: usize,
}

pub fn bearing_to(p: Point2, q: Point2) -> Result<f64> {
    let (dx, dy) = (q.x - p.x, q.y - p.y);
    if dx == 0.0 && dy == 0.0 {
        return Err(Error::DegenerateGeometry);
    }
    Ok(wrap_angle(dy.atan2(dx)))
}

pub fn range_to(p: Point2, q: Point2) -> f64 {
    (q.x - p.x).hypot(q.y - p.y)
}

/// Maps an angle into `(-π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    if a > -PI && a <= PI {
        return a;
    }
    let r = (a + PI).rem_euclid(TAU) - PI;
    if r <= -PI {
        r + TAU
    } else {
        r
    }
}

/// Maps an angle into `[0, 2π)`.
pub fn wrap_heading(a: f64) -> f64 {
    let r = a.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// True value plus a `N(0, sigma²)` draw. Range values are not clamped at zero.
pub fn sample_measurement<R: Rng + ?Sized>(
    model: &MeasurementModel,
    p: Point2,
    q: Point2,
    target_index: usize,
    rng: &mut R,
) -> Result<Measurement> {
    let truth = model.observe(p, q)?;
    let e: f64 = StandardNormal.sample(rng);
    let value = truth + model.sigma * e;
    let value = match model.kind {
        SensorKind::Bearing => wrap_angle(value),
        SensorKind::Range => value,
    };
    Ok(Measurement {
        value,
        target_index,
    })
}
