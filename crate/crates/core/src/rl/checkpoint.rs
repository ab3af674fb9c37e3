//! Versioned plain-text (JSON) record of a trained actor.
//!
//! Layout: `{"format": "activeloc-td3-checkpoint", "version": 1, "seed": u64,
//! "env": EnvConfig, "td3": Td3Config, "actor": {"sizes": [..], "layers":
//! [{"weights": [..], "biases": [..]}, ..]}}`. Weights are row-major
//! `outputs × inputs`. Floats are written in shortest round-trip form, so a
//! save/load cycle is exact.

use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rl::mlp::{Dense, Mlp};
use crate::rl::td3::Td3Config;
use crate::sim::EnvConfig;

pub const CHECKPOINT_FORMAT: &str = "activeloc-td3-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerRecord {
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkRecord {
    pub sizes: Vec<usize>,
    pub layers: Vec<LayerRecord>,
}

impl NetworkRecord {
    pub fn from_mlp(net: &Mlp) -> Self {
        Self {
            sizes: net.sizes().to_vec(),
            layers: net
                .layers()
                .iter()
                .map(|l| LayerRecord {
                    weights: l.weights.iter().copied().collect(),
                    biases: l.biases.to_vec(),
                })
                .collect(),
        }
    }

    pub fn to_mlp(&self) -> Result<Mlp> {
        if self.sizes.len() != self.layers.len() + 1 {
            return Err(Error::Checkpoint(format!(
                "{} layer sizes for {} layers",
                self.sizes.len(),
                self.layers.len()
            )));
        }
        let layers = self
            .sizes
            .windows(2)
            .zip(&self.layers)
            .map(|(w, l)| {
                let weights = Array2::from_shape_vec((w[1], w[0]), l.weights.clone())
                    .map_err(|e| Error::Checkpoint(format!("weight shape: {e}")))?;
                if l.biases.len() != w[1] {
                    return Err(Error::Checkpoint(format!(
                        "expected {} biases, found {}",
                        w[1],
                        l.biases.len()
                    )));
                }
                Ok(Dense {
                    weights,
                    biases: Array1::from(l.biases.clone()),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let net = Mlp::from_layers(layers)?;
        if !net.is_finite() {
            return Err(Error::Checkpoint("non-finite parameters".into()));
        }
        Ok(net)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub seed: u64,
    pub env: EnvConfig,
    pub td3: Td3Config,
    pub actor: NetworkRecord,
}

impl Checkpoint {
    pub fn new(actor: &Mlp, env: &EnvConfig, td3: &Td3Config, seed: u64) -> Self {
        Self {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            seed,
            env: env.clone(),
            td3: td3.clone(),
            actor: NetworkRecord::from_mlp(actor),
        }
    }

    pub fn actor(&self) -> Result<Mlp> {
        self.actor.to_mlp()
    }

    pub fn to_string_pretty(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let ck: Checkpoint =
            serde_json::from_str(text).map_err(|e| Error::Checkpoint(e.to_string()))?;
        if ck.format != CHECKPOINT_FORMAT {
            return Err(Error::Checkpoint(format!("unrecognized format `{}`", ck.format)));
        }
        if ck.version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported version {} (expected {CHECKPOINT_VERSION})",
                ck.version
            )));
        }
        ck.actor()?;
        Ok(ck)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = self.to_string_pretty()?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn round_trip_is_exact() {
        let actor = Mlp::new(&[7, 16, 16, 2], &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let ck = Checkpoint::new(&actor, &EnvConfig::default(), &Td3Config::default(), 5);
        let back = Checkpoint::parse(&ck.to_string_pretty().unwrap()).unwrap();
        assert_eq!(back, ck);
        assert_eq!(back.actor().unwrap(), actor);
    }

    #[test]
    fn rejects_wrong_version_and_shapes() {
        let actor = Mlp::new(&[3, 2], &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        let mut ck = Checkpoint::new(&actor, &EnvConfig::default(), &Td3Config::default(), 0);
        ck.version = 99;
        assert!(Checkpoint::parse(&ck.to_string_pretty().unwrap()).is_err());
        ck.version = CHECKPOINT_VERSION;
        ck.actor.layers[0].biases.pop();
        assert!(Checkpoint::parse(&ck.to_string_pretty().unwrap()).is_err());
        assert!(Checkpoint::parse("{}").is_err());
    }
}
