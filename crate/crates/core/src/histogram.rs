//! Grid-based Bayesian histogram filter.
//!
//! Each target gets its own grid over the environment. Cells hold the
//! accumulated log-likelihood of the target being at the cell center, shifted
//! so the largest cell is `0` (linear value `1`). Linear values are only
//! materialized on demand; fifty products of narrow Gaussians would
//! otherwise underflow.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Measurement, MeasurementModel, Point2, Rect, SensorKind};

#[derive(Debug, Clone, PartialEq)]
pub struct GridHistogram {
    width: usize,
    height: usize,
    extent: Rect,
    log_values: Vec<f64>,
}

/// Gaussian density of the residual between the noise-free measurement of `v`
/// from `p` and the observed `z_hat`. A point on top of the sensor has no
/// bearing; it gets the peak density.
pub fn point_likelihood(v: Point2, p: Point2, z_hat: &Measurement, model: &MeasurementModel) -> f64 {
    let residual = match model.observe(p, v) {
        Ok(z_v) => model.residual(z_v, z_hat.value),
        Err(_) => 0.0,
    };
    let var = model.variance();
    (-(residual * residual) / (2.0 * var)).exp() / (2.0 * PI * var).sqrt()
}

impl GridHistogram {
    /// Every cell at likelihood 1.
    pub fn uniform(width: usize, height: usize, extent: Rect) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidConfig(format!(
                "histogram must have at least one cell, got {width}x{height}"
            )));
        }
        let extent = Rect::new(extent.min, extent.max)?;
        Ok(Self {
            width,
            height,
            extent,
            log_values: vec![0.0; width * height],
        })
    }

    /// Builds a histogram from linear, row-major values (row 0 is the lowest y).
    /// Values are rescaled so the maximum is 1.
    pub fn from_values(width: usize, height: usize, extent: Rect, values: &[f64]) -> Result<Self> {
        let mut h = Self::uniform(width, height, extent)?;
        if values.len() != width * height {
            return Err(Error::LengthMismatch {
                expected: width * height,
                got: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidConfig(
                "histogram values must be finite and non-negative".into(),
            ));
        }
        h.log_values = values.iter().map(|v| v.ln()).collect();
        h.renormalize()?;
        Ok(h)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn extent(&self) -> Rect {
        self.extent
    }

    pub fn len(&self) -> usize {
        self.log_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_values.is_empty()
    }

    pub fn cell_size(&self) -> (f64, f64) {
        (
            self.extent.width() / self.width as f64,
            self.extent.height() / self.height as f64,
        )
    }

    pub fn index(&self, ix: usize, iy: usize) -> usize {
        iy * self.width + ix
    }

    pub fn cell_center(&self, ix: usize, iy: usize) -> Point2 {
        let (dx, dy) = self.cell_size();
        Point2::new(
            self.extent.min.x + (ix as f64 + 0.5) * dx,
            self.extent.min.y + (iy as f64 + 0.5) * dy,
        )
    }

    pub fn center_of_index(&self, idx: usize) -> Point2 {
        self.cell_center(idx % self.width, idx / self.width)
    }

    /// Cell containing `p`, if `p` lies inside the extent.
    pub fn cell_of(&self, p: Point2) -> Option<(usize, usize)> {
        if !self.extent.contains(p) {
            return None;
        }
        let (dx, dy) = self.cell_size();
        let ix = (((p.x - self.extent.min.x) / dx) as usize).min(self.width - 1);
        let iy = (((p.y - self.extent.min.y) / dy) as usize).min(self.height - 1);
        Some((ix, iy))
    }

    /// Log-likelihood relative to the maximum cell (so `<= 0`).
    pub fn log_values(&self) -> &[f64] {
        &self.log_values
    }

    pub fn value(&self, ix: usize, iy: usize) -> f64 {
        self.log_values[self.index(ix, iy)].exp()
    }

    /// Linear values in `[0, 1]`, row-major.
    pub fn values(&self) -> Vec<f64> {
        self.log_values.iter().map(|l| l.exp()).collect()
    }

    fn renormalize(&mut self) -> Result<()> {
        let max = self
            .log_values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        if !max.is_finite() {
            return Err(Error::NumericalDegeneracy(
                "every histogram cell has zero likelihood".into(),
            ));
        }
        for l in &mut self.log_values {
            *l -= max;
        }
        Ok(())
    }

    /// Multiplies every cell by the measurement likelihood at its center and
    /// rescales so the maximum cell is 1.
    pub fn update(&mut self, p: Point2, z_hat: &Measurement, model: &MeasurementModel) -> Result<()> {
        let inv_two_var = 1.0 / (2.0 * model.variance());
        let log_norm = -0.5 * (2.0 * PI * model.variance()).ln();
        let (dx, dy) = self.cell_size();
        let (x0, y0) = (self.extent.min.x, self.extent.min.y);
        let z = z_hat.value;
        let w = self.width;
        for (iy, row) in self.log_values.chunks_exact_mut(w).enumerate() {
            let ry = y0 + (iy as f64 + 0.5) * dy - p.y;
            match model.kind {
                SensorKind::Bearing => {
                    for (ix, l) in row.iter_mut().enumerate() {
                        let rx = x0 + (ix as f64 + 0.5) * dx - p.x;
                        let r = crate::geometry::wrap_angle(ry.atan2(rx) - z);
                        *l += log_norm - r * r * inv_two_var;
                    }
                }
                SensorKind::Range => {
                    for (ix, l) in row.iter_mut().enumerate() {
                        let rx = x0 + (ix as f64 + 0.5) * dx - p.x;
                        let r = rx.hypot(ry) - z;
                        *l += log_norm - r * r * inv_two_var;
                    }
                }
            }
        }
        if model.kind == SensorKind::Bearing {
            if let Some((ix, iy)) = self.cell_of(p) {
                // undo the arbitrary-bearing term, credit the peak instead
                let idx = self.index(ix, iy);
                let c = self.cell_center(ix, iy);
                let r = match model.observe(p, c) {
                    Ok(z_v) => model.residual(z_v, z),
                    Err(_) => 0.0,
                };
                self.log_values[idx] += r * r * inv_two_var;
            }
        }
        self.renormalize()
    }

    /// Non-mutating form of [`GridHistogram::update`].
    pub fn updated(&self, p: Point2, z_hat: &Measurement, model: &MeasurementModel) -> Result<Self> {
        let mut h = self.clone();
        h.update(p, z_hat, model)?;
        Ok(h)
    }

    /// Row-major index of the largest cell; ties go to the lowest index.
    pub fn map_index(&self) -> usize {
        let mut best = 0;
        for (i, &l) in self.log_values.iter().enumerate() {
            if l > self.log_values[best] {
                best = i;
            }
        }
        best
    }

    /// Center of the maximum-likelihood cell.
    pub fn predict_map(&self) -> Point2 {
        self.center_of_index(self.map_index())
    }

    /// Shannon entropy (nats) of the cells renormalized to sum to one.
    pub fn entropy(&self) -> f64 {
        entropy_of_logs(self.log_values.iter().copied())
    }
}

/// Entropy of the distribution proportional to `exp(l)`, given logs whose
/// maximum is near zero.
pub(crate) fn entropy_of_logs(logs: impl Iterator<Item = f64>) -> f64 {
    let (mut z, mut wl) = (0.0, 0.0);
    for l in logs {
        if l == f64::NEG_INFINITY {
            continue;
        }
        let w = l.exp();
        z += w;
        wl += w * l;
    }
    z.ln() - wl / z
}

/// Per-target histograms sharing one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct BeliefStack {
    histograms: Vec<GridHistogram>,
}

impl BeliefStack {
    pub fn uniform(targets: usize, width: usize, height: usize, extent: Rect) -> Result<Self> {
        if targets == 0 {
            return Err(Error::InvalidConfig("need at least one target".into()));
        }
        let h = GridHistogram::uniform(width, height, extent)?;
        Ok(Self {
            histograms: vec![h; targets],
        })
    }

    pub fn from_histograms(histograms: Vec<GridHistogram>) -> Result<Self> {
        let Some(first) = histograms.first() else {
            return Err(Error::InvalidConfig("empty belief stack".into()));
        };
        let shape = (first.width, first.height, first.extent);
        if histograms
            .iter()
            .any(|h| (h.width, h.height, h.extent) != shape)
        {
            return Err(Error::InvalidConfig(
                "histograms in a stack must share grid shape and extent".into(),
            ));
        }
        Ok(Self { histograms })
    }

    pub fn len(&self) -> usize {
        self.histograms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.histograms.is_empty()
    }

    pub fn histograms(&self) -> &[GridHistogram] {
        &self.histograms
    }

    pub fn get(&self, i: usize) -> &GridHistogram {
        &self.histograms[i]
    }

    /// Folds each measurement into the histogram of its target.
    pub fn update(&mut self, p: Point2, measurements: &[Measurement], model: &MeasurementModel) -> Result<()> {
        let n = self.histograms.len();
        for z in measurements {
            let h = self
                .histograms
                .get_mut(z.target_index)
                .ok_or(Error::LengthMismatch {
                    expected: z.target_index + 1,
                    got: n,
                })?;
            h.update(p, z, model)?;
        }
        Ok(())
    }

    pub fn predict_map(&self) -> Vec<Point2> {
        self.histograms.iter().map(GridHistogram::predict_map).collect()
    }

    pub fn total_entropy(&self) -> f64 {
        self.histograms.iter().map(GridHistogram::entropy).sum()
    }
}

/// Grayscale belief image, row-major with row 0 at the lowest y.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeliefImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<f64>,
}

impl BeliefImage {
    pub fn new(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self> {
        if pixels.len() != width * height {
            return Err(Error::LengthMismatch {
                expected: width * height,
                got: pixels.len(),
            });
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, v: f64) -> Self {
        Self {
            width,
            height,
            pixels: vec![v; width * height],
        }
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.pixels[y * self.width + x]
    }

    pub fn mean(&self) -> f64 {
        self.pixels.iter().sum::<f64>() / self.pixels.len() as f64
    }

    /// Bilinear resampling with half-pixel alignment. Constant images stay
    /// constant and a same-size resize is the identity.
    pub fn resize_bilinear(&self, out_w: usize, out_h: usize) -> Result<Self> {
        if out_w == 0 || out_h == 0 {
            return Err(Error::InvalidConfig("image dimensions must be positive".into()));
        }
        if (out_w, out_h) == (self.width, self.height) {
            return Ok(self.clone());
        }
        let sx = self.width as f64 / out_w as f64;
        let sy = self.height as f64 / out_h as f64;
        let sample_axis = |o: usize, scale: f64, n: usize| {
            let s = ((o as f64 + 0.5) * scale - 0.5).clamp(0.0, (n - 1) as f64);
            let i0 = s.floor() as usize;
            let i1 = (i0 + 1).min(n - 1);
            (i0, i1, s - i0 as f64)
        };
        let mut pixels = Vec::with_capacity(out_w * out_h);
        for oy in 0..out_h {
            let (y0, y1, fy) = sample_axis(oy, sy, self.height);
            for ox in 0..out_w {
                let (x0, x1, fx) = sample_axis(ox, sx, self.width);
                let top = self.get(x0, y0) * (1.0 - fx) + self.get(x1, y0) * fx;
                let bot = self.get(x0, y1) * (1.0 - fx) + self.get(x1, y1) * fx;
                pixels.push(top * (1.0 - fy) + bot * fy);
            }
        }
        Ok(Self {
            width: out_w,
            height: out_h,
            pixels,
        })
    }
}

/// Sum of the per-target histograms, scaled into `[0, 1]` by its maximum and
/// resampled to `out_w × out_h`.
pub fn aggregate_image(stack: &BeliefStack, out_w: usize, out_h: usize) -> Result<BeliefImage> {
    let first = stack
        .histograms
        .first()
        .ok_or_else(|| Error::InvalidConfig("empty belief stack".into()))?;
    let mut sum = vec![0.0; first.len()];
    for h in &stack.histograms {
        for (s, l) in sum.iter_mut().zip(&h.log_values) {
            *s += l.exp();
        }
    }
    let max = sum.iter().copied().fold(0.0, f64::max);
    if max > 0.0 {
        for s in &mut sum {
            *s /= max;
        }
    }
    BeliefImage::new(first.width, first.height, sum)?.resize_bilinear(out_w, out_h)
}
