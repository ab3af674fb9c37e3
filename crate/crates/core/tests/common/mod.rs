//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use activeloc::rl::Mlp;
use activeloc::sim::{reset_with, run_from, EnvConfig, Episode, Policy};
use activeloc::Point2;
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Gauss–Hermite rule for expectations under N(0, 1): nodes and weights with
/// `Σ w_k f(x_k) ≈ E[f(X)]`. Newton iteration on the physicists' Hermite
/// polynomials, then rescaled.
pub fn gauss_hermite(n: usize) -> Vec<(f64, f64)> {
    let pi_4 = std::f64::consts::PI.powf(-0.25);
    let mut out = vec![(0.0, 0.0); n];
    let m = n.div_ceil(2);
    let mut z: f64 = 0.0;
    for i in 0..m {
        z = match i {
            0 => (2.0 * n as f64 + 1.0).sqrt() - 1.85575 * (2.0 * n as f64 + 1.0).powf(-1.0 / 6.0),
            1 => z - 1.14 * (n as f64).powf(0.426) / z,
            2 => 1.86 * z - 0.86 * out[0].0,
            3 => 1.91 * z - 0.91 * out[1].0,
            _ => 2.0 * z - out[i - 2].0,
        };
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p1 = pi_4;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                p1 = z * (2.0 / (j as f64 + 1.0)).sqrt() * p2 - (j as f64 / (j as f64 + 1.0)).sqrt() * p3;
            }
            pp = (2.0 * n as f64).sqrt() * p2;
            let dz = p1 / pp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        out[i] = (z, 2.0 / (pp * pp));
        out[n - 1 - i] = (-z, 2.0 / (pp * pp));
    }
    // physicists' nodes/weights → standard normal
    let s = std::f64::consts::PI.sqrt();
    out.into_iter()
        .map(|(x, w)| (x * std::f64::consts::SQRT_2, w / s))
        .collect()
}

fn wrap(a: f64) -> f64 {
    let mut r = a % std::f64::consts::TAU;
    if r > std::f64::consts::PI {
        r -= std::f64::consts::TAU;
    } else if r <= -std::f64::consts::PI {
        r += std::f64::consts::TAU;
    }
    r
}

/// Noise-free bearing or range from `p` to `q`, written out independently of the crate.
pub fn observe(bearing: bool, p: Point2, q: Point2) -> f64 {
    let (dx, dy) = (q.x - p.x, q.y - p.y);
    if bearing {
        dy.atan2(dx)
    } else {
        (dx * dx + dy * dy).sqrt()
    }
}

/// `log p(z | q)` up to a constant.
fn log_lik(bearing: bool, sigma: f64, p: Point2, q: Point2, z: f64) -> f64 {
    let h = observe(bearing, p, q);
    let r = if bearing { wrap(z - h) } else { z - h };
    -r * r / (2.0 * sigma * sigma)
}

/// Fourth-order central difference of `f` at `x`.
pub fn d5(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (-f(x + 2.0 * h) + 8.0 * f(x + h) - 8.0 * f(x - h) + f(x - 2.0 * h)) / (12.0 * h)
}

/// Fisher information as the expected outer product of the score,
/// `E_z[∇_q log p(z|q) ∇_q log p(z|q)ᵀ]`, with the expectation taken by
/// Gauss–Hermite quadrature and the score by finite differences.
pub fn fisher_oracle(bearing: bool, sigma: f64, sensors: &[Point2], q: Point2) -> [[f64; 2]; 2] {
    let rule = gauss_hermite(12);
    let h = 1e-3;
    let mut f = [[0.0; 2]; 2];
    for &p in sensors {
        let h0 = observe(bearing, p, q);
        for &(x, w) in &rule {
            let z = h0 + sigma * x;
            let gx = d5(|t| log_lik(bearing, sigma, p, Point2::new(t, q.y), z), q.x, h);
            let gy = d5(|t| log_lik(bearing, sigma, p, Point2::new(q.x, t), z), q.y, h);
            f[0][0] += w * gx * gx;
            f[0][1] += w * gx * gy;
            f[1][1] += w * gy * gy;
        }
    }
    f[1][0] = f[0][1];
    f
}

pub fn det2(f: &[[f64; 2]; 2]) -> f64 {
    f[0][0] * f[1][1] - f[0][1] * f[1][0]
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

pub fn random_point<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> Point2 {
    Point2::new(rng.random_range(lo..hi), rng.random_range(lo..hi))
}

/// A point in `[lo, hi)²` at least `clearance` from `q`.
pub fn point_away_from<R: Rng>(rng: &mut R, q: Point2, clearance: f64, lo: f64, hi: f64) -> Point2 {
    loop {
        let p = random_point(rng, lo, hi);
        if p.distance(&q) >= clearance {
            return p;
        }
    }
}

/// One-target episode that starts on a circle of `radius` around the target
/// and follows it for the whole horizon. The target is placed so the circle
/// stays inside the extent.
pub fn circle_episode(cfg: &EnvConfig, radius: f64, seed: u64) -> Episode {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let inner = cfg.extent.shrink(radius + 0.5).unwrap();
    let q = Point2::new(
        rng.random_range(inner.min.x..inner.max.x),
        rng.random_range(inner.min.y..inner.max.y),
    );
    let start = q.advance(rng.random_range(0.0..std::f64::consts::TAU), radius);
    let state = reset_with(cfg, start, vec![q], &mut rng).unwrap();
    let policy = Policy::Circle { target: 0, radius };
    run_from(&policy, cfg, state, &mut rng, seed).unwrap()
}

/// Central-difference gradient of `L(θ) = Σ upstream ⊙ net(x)` with respect to
/// every parameter, in `param_slices` order.
pub fn numeric_param_grads(net: &Mlp, x: &Array2<f64>, upstream: &Array2<f64>, h: f64) -> Vec<Vec<f64>> {
    let loss = |n: &Mlp| (n.forward(x).unwrap() * upstream).sum();
    let shapes: Vec<usize> = net.param_slices().iter().map(|s| s.len()).collect();
    let mut out = Vec::new();
    for (t, &len) in shapes.iter().enumerate() {
        let mut g = vec![0.0; len];
        for (i, gi) in g.iter_mut().enumerate() {
            let at = |delta: f64| {
                let mut n = net.clone();
                n.param_slices_mut()[t][i] += delta;
                loss(&n)
            };
            *gi = (at(h) - at(-h)) / (2.0 * h);
        }
        out.push(g);
    }
    out
}

/// Central-difference gradient of the same loss with respect to the input.
pub fn numeric_input_grads(net: &Mlp, x: &Array2<f64>, upstream: &Array2<f64>, h: f64) -> Array2<f64> {
    let mut g = Array2::zeros(x.dim());
    for idx in ndarray::indices(x.dim()) {
        let at = |delta: f64| {
            let mut xp = x.clone();
            xp[idx] += delta;
            (net.forward(&xp).unwrap() * upstream).sum()
        };
        g[idx] = (at(h) - at(-h)) / (2.0 * h);
    }
    g
}
