//! Fully connected network with tanh hidden units and a linear output layer,
//! batched over rows, with hand-written backpropagation.

use ndarray::{Array1, Array2, Axis};
use rand::Rng;

use crate::error::{Error, Result};

/// `tanh` through a single `exp`; faster than the libm routine and within one
/// ulp-scale absolute error of it.
#[inline]
pub fn tanh(v: f64) -> f64 {
    let e = (-2.0 * v.abs()).exp();
    ((1.0 - e) / (1.0 + e)).copysign(v)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    /// `outputs × inputs`
    pub weights: Array2<f64>,
    pub biases: Array1<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    sizes: Vec<usize>,
    layers: Vec<Dense>,
}

/// Gradients with the same layout as the network parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpGrads {
    pub layers: Vec<Dense>,
}

/// Layer inputs recorded during a forward pass, consumed by `backward`.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    inputs: Vec<Array2<f64>>,
    output: Array2<f64>,
}

impl ForwardCache {
    pub fn output(&self) -> &Array2<f64> {
        &self.output
    }
}

impl Mlp {
    /// Uniform `±1/√fan_in` initialization for weights and biases.
    pub fn new<R: Rng + ?Sized>(sizes: &[usize], rng: &mut R) -> Result<Self> {
        let mut net = Self::zeros(sizes)?;
        for layer in &mut net.layers {
            let bound = 1.0 / (layer.weights.ncols() as f64).sqrt();
            layer
                .weights
                .iter_mut()
                .chain(layer.biases.iter_mut())
                .for_each(|w| *w = rng.random_range(-bound..bound));
        }
        Ok(net)
    }

    pub fn zeros(sizes: &[usize]) -> Result<Self> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(Error::InvalidConfig(format!(
                "network needs at least two non-empty layers, got {sizes:?}"
            )));
        }
        let layers = sizes
            .windows(2)
            .map(|w| Dense {
                weights: Array2::zeros((w[1], w[0])),
                biases: Array1::zeros(w[1]),
            })
            .collect();
        Ok(Self {
            sizes: sizes.to_vec(),
            layers,
        })
    }

    pub fn from_layers(layers: Vec<Dense>) -> Result<Self> {
        let Some(first) = layers.first() else {
            return Err(Error::InvalidConfig("network has no layers".into()));
        };
        let mut sizes = vec![first.weights.ncols()];
        for l in &layers {
            if l.weights.ncols() != *sizes.last().unwrap() || l.biases.len() != l.weights.nrows() {
                return Err(Error::InvalidConfig("inconsistent layer shapes".into()));
            }
            sizes.push(l.weights.nrows());
        }
        Ok(Self { sizes, layers })
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Dense] {
        &mut self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.biases.len())
            .sum()
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(l.biases.iter()).all(|w| w.is_finite()))
    }

    fn check_input(&self, x: &Array2<f64>) -> Result<()> {
        if x.ncols() != self.input_dim() {
            return Err(Error::LengthMismatch {
                expected: self.input_dim(),
                got: x.ncols(),
            });
        }
        Ok(())
    }

    /// Forward pass over a batch (one example per row).
    pub fn forward(&self, x: &Array2<f64>) -> Result<Array2<f64>> {
        Ok(self.forward_cached(x)?.output)
    }

    /// Forward pass for a single example.
    pub fn forward_one(&self, x: &[f64]) -> Result<Vec<f64>> {
        let x = Array2::from_shape_vec((1, x.len()), x.to_vec()).expect("row vector");
        Ok(self.forward(&x)?.into_raw_vec_and_offset().0)
    }

    pub fn forward_cached(&self, x: &Array2<f64>) -> Result<ForwardCache> {
        self.check_input(x)?;
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut h = x.clone();
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let mut z = h.dot(&layer.weights.t());
            z += &layer.biases;
            if i < last {
                z.mapv_inplace(tanh);
            }
            inputs.push(h);
            h = z;
        }
        Ok(ForwardCache { inputs, output: h })
    }

    /// Backpropagates `upstream = ∂L/∂output` through a cached forward pass.
    /// Returns parameter gradients and `∂L/∂input`.
    pub fn backward(
        &self,
        cache: &ForwardCache,
        upstream: &Array2<f64>,
    ) -> Result<(MlpGrads, Array2<f64>)> {
        if upstream.dim() != cache.output.dim() {
            return Err(Error::LengthMismatch {
                expected: cache.output.len(),
                got: upstream.len(),
            });
        }
        let mut grads = Vec::with_capacity(self.layers.len());
        let mut delta = upstream.clone();
        for (i, layer) in self.layers.iter().enumerate().rev() {
            let input = &cache.inputs[i];
            let gw = delta.t().dot(input).as_standard_layout().into_owned();
            let gb = delta.sum_axis(Axis(0));
            let mut d_in = delta.dot(&layer.weights);
            if i > 0 {
                // input of this layer is tanh output of the previous one
                ndarray::Zip::from(&mut d_in)
                    .and(input)
                    .for_each(|d, &a| *d *= 1.0 - a * a);
            }
            grads.push(Dense {
                weights: gw,
                biases: gb,
            });
            delta = d_in;
        }
        grads.reverse();
        Ok((MlpGrads { layers: grads }, delta))
    }

    /// Convenience: forward then backward from the raw input.
    pub fn gradients(&self, x: &Array2<f64>, upstream: &Array2<f64>) -> Result<(MlpGrads, Array2<f64>)> {
        let cache = self.forward_cached(x)?;
        self.backward(&cache, upstream)
    }

    /// Parameters as flat slices, weights then biases per layer.
    pub fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        self.layers
            .iter_mut()
            .flat_map(|l| {
                [
                    l.weights.as_slice_mut().expect("standard layout"),
                    l.biases.as_slice_mut().expect("standard layout"),
                ]
            })
            .collect()
    }

    pub fn param_slices(&self) -> Vec<&[f64]> {
        self.layers
            .iter()
            .flat_map(|l| {
                [
                    l.weights.as_slice().expect("standard layout"),
                    l.biases.as_slice().expect("standard layout"),
                ]
            })
            .collect()
    }

    /// `self ← tau · online + (1 − tau) · self`, entrywise.
    pub fn blend_from(&mut self, online: &Mlp, tau: f64) {
        for (dst, src) in self.param_slices_mut().into_iter().zip(online.param_slices()) {
            for (d, s) in dst.iter_mut().zip(src) {
                *d = tau * s + (1.0 - tau) * *d;
            }
        }
    }
}

impl MlpGrads {
    pub fn slices(&self) -> Vec<&[f64]> {
        self.layers
            .iter()
            .flat_map(|l| {
                [
                    l.weights.as_slice().expect("standard layout"),
                    l.biases.as_slice().expect("standard layout"),
                ]
            })
            .collect()
    }
}
