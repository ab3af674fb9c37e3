//! Fisher information for relative measurements and the scalar uncertainty
//! measures built on it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{bearing_to, range_to, MeasurementModel, Point2, SensorKind};

/// Relative tolerance below which a 2×2 information matrix counts as singular.
const SINGULAR_RTOL: f64 = 1e-12;

/// Symmetric 2×2 Fisher information matrix for one target position.
///
/// Entries are accumulated in double-double arithmetic (`a11 + lo[0]`, ...)
/// so that the determinant of a nearly rank-one matrix keeps its relative
/// accuracy; the public fields hold the leading parts.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Fim2x2 {
    pub a11: f64,
    pub a12: f64,
    pub a22: f64,
    #[serde(skip)]
    lo: [f64; 3],
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

/// `(hi, lo) + (hi2, lo2)` renormalized.
fn dd_add((ah, al): (f64, f64), (bh, bl): (f64, f64)) -> (f64, f64) {
    let (s, e) = two_sum(ah, bh);
    two_sum(s, e + al + bl)
}

fn dd_mul((ah, al): (f64, f64), (bh, bl): (f64, f64)) -> (f64, f64) {
    let (p, e) = two_prod(ah, bh);
    two_sum(p, e + ah * bl + al * bh)
}

impl Fim2x2 {
    pub const ZERO: Fim2x2 = Fim2x2 {
        a11: 0.0,
        a12: 0.0,
        a22: 0.0,
        lo: [0.0; 3],
    };

    pub fn new(a11: f64, a12: f64, a22: f64) -> Self {
        Self {
            a11,
            a12,
            a22,
            lo: [0.0; 3],
        }
    }

    fn entries(&self) -> [(f64, f64); 3] {
        [(self.a11, self.lo[0]), (self.a12, self.lo[1]), (self.a22, self.lo[2])]
    }

    fn from_entries(e: [(f64, f64); 3]) -> Self {
        Self {
            a11: e[0].0,
            a12: e[1].0,
            a22: e[2].0,
            lo: [e[0].1, e[1].1, e[2].1],
        }
    }

    pub fn identity() -> Self {
        Self::new(1.0, 0.0, 1.0)
    }

    pub fn det(&self) -> f64 {
        let [a11, a12, a22] = self.entries();
        let (nh, nl) = dd_mul(a12, a12);
        dd_add(dd_mul(a11, a22), (-nh, -nl)).0
    }

    pub fn trace(&self) -> f64 {
        self.a11 + self.a22
    }

    /// `det <= rtol * trace²`; a rank-one matrix built in floating point
    /// rarely has an exactly zero determinant.
    pub fn is_singular(&self) -> bool {
        let tr = self.trace();
        self.det() <= SINGULAR_RTOL * tr * tr
    }

    /// Eigenvalues, largest first.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let mean = 0.5 * self.trace();
        let half_diff = 0.5 * (self.a11 - self.a22);
        let r = half_diff.hypot(self.a12);
        (mean + r, mean - r)
    }

    /// Adds the information of one measurement of `q` taken from `p`.
    pub fn add_measurement(
        &mut self,
        model: &MeasurementModel,
        p: Point2,
        q: Point2,
    ) -> Result<()> {
        let (gx, gy) = measurement_gradient(model, p, q)?;
        let (sx, sy) = (gx / model.sigma, gy / model.sigma);
        let [a11, a12, a22] = self.entries();
        *self = Self::from_entries([
            dd_add(a11, two_prod(sx, sx)),
            dd_add(a12, two_prod(sx, sy)),
            dd_add(a22, two_prod(sy, sy)),
        ]);
        Ok(())
    }

    /// `det(F⁻¹)`, or `+inf` when `F` is singular.
    pub fn inverse_det(&self) -> f64 {
        if self.is_singular() {
            f64::INFINITY
        } else {
            1.0 / self.det()
        }
    }
}

impl std::ops::Add for Fim2x2 {
    type Output = Fim2x2;

    fn add(self, o: Fim2x2) -> Fim2x2 {
        let (a, b) = (self.entries(), o.entries());
        Fim2x2::from_entries([dd_add(a[0], b[0]), dd_add(a[1], b[1]), dd_add(a[2], b[2])])
    }
}

/// Gradient of the noise-free measurement with respect to the target position.
///
/// Bearing: `(-sin φ, cos φ) / d`. Range: the unit vector from `p` to `q`.
pub fn measurement_gradient(
    model: &MeasurementModel,
    p: Point2,
    q: Point2,
) -> Result<(f64, f64)> {
    let d = range_to(p, q);
    if d == 0.0 {
        return Err(Error::DegenerateGeometry);
    }
    Ok(match model.kind {
        SensorKind::Bearing => {
            let phi = bearing_to(p, q)?;
            (-phi.sin() / d, phi.cos() / d)
        }
        SensorKind::Range => ((q.x - p.x) / d, (q.y - p.y) / d),
    })
}

/// Fisher information about `q` from measurements at every point in `sensors`.
pub fn fim_accumulate(sensors: &[Point2], q: Point2, model: &MeasurementModel) -> Result<Fim2x2> {
    let mut f = Fim2x2::ZERO;
    for &p in sensors {
        f.add_measurement(model, p, q)?;
    }
    Ok(f)
}

/// Pairwise closed form of the bearing-only information determinant:
/// `σ⁻⁴ Σ_{i<j} sin²(φ_i − φ_j) / (d_i² d_j²)`. Zero with fewer than two sensors.
pub fn fim_det_bearing_closed_form(sensors: &[Point2], q: Point2, sigma2: f64) -> Result<f64> {
    let rays = sensors
        .iter()
        .map(|&p| Ok((bearing_to(p, q)?, range_to(p, q))))
        .collect::<Result<Vec<_>>>()?;
    let mut sum = 0.0;
    for (i, &(phi_i, d_i)) in rays.iter().enumerate() {
        for &(phi_j, d_j) in &rays[i + 1..] {
            let s = (phi_i - phi_j).sin();
            sum += s * s / (d_i * d_i * d_j * d_j);
        }
    }
    Ok(sum / (sigma2 * sigma2))
}

/// Semi-axis lengths of the Cramér-Rao ellipse, largest first: the square roots
/// of the eigenvalues of `F⁻¹`.
pub fn uncertainty_ellipse_axes(f: &Fim2x2) -> Result<(f64, f64)> {
    if f.is_singular() {
        return Err(Error::UnboundedUncertainty);
    }
    let (hi, lo) = f.eigenvalues();
    Ok(((1.0 / lo).sqrt(), (1.0 / hi).sqrt()))
}

/// `Σ_i det(F_{q_i}⁻¹)`; `+inf` if any target is not triangulated.
pub fn total_uncertainty(
    sensors: &[Point2],
    targets: &[Point2],
    model: &MeasurementModel,
) -> Result<f64> {
    let mut total = 0.0;
    for &q in targets {
        total += fim_accumulate(sensors, q, model)?.inverse_det();
    }
    Ok(total)
}

/// Geometric dilution of precision of a sensor pair: `d_i d_j / |sin(φ_i − φ_j)|`.
/// Returns `+inf` for coincident sensors, collinear rays, or a sensor on the target.
pub fn gdop(p_i: Point2, p_j: Point2, q: Point2) -> f64 {
    let (Ok(phi_i), Ok(phi_j)) = (bearing_to(p_i, q), bearing_to(p_j, q)) else {
        return f64::INFINITY;
    };
    let s = (phi_i - phi_j).sin().abs();
    if s < 1e-15 {
        return f64::INFINITY;
    }
    range_to(p_i, q) * range_to(p_j, q) / s
}
