use std::path::Path;

use serde::{Deserialize, Serialize};

use super::forward::{predict_raw, Mode};
use super::params::{architecture, ModelParams, TargetScale, PARAM_COUNT};
use crate::autodiff::Tensor;
use crate::error::{Error, Result};
use crate::features::{FeatureMatrix, FEATURE_NAMES};
use crate::graph::Graph;

pub const MAGIC: &[u8; 5] = b"GNNT1";

/// How a checkpoint was produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    /// "init", "pretrained" or "finetuned".
    pub stage: String,
    pub seed: u64,
    pub epochs: usize,
    pub lr: f64,
    pub final_loss: Option<f64>,
    pub graphs: usize,
    /// Content hash of the network a fine-tuned model was adapted to.
    pub network_hash: Option<String>,
    pub labeled_nodes: Option<usize>,
}

impl TrainingMeta {
    pub fn init(seed: u64) -> TrainingMeta {
        TrainingMeta {
            stage: "init".into(),
            seed,
            epochs: 0,
            lr: 0.0,
            final_loss: None,
            graphs: 0,
            network_hash: None,
            labeled_nodes: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorEntry {
    pub name: String,
    pub shape: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub feature_names: Vec<String>,
    pub param_count: usize,
    pub tensors: Vec<TensorEntry>,
    pub target_scale: TargetScale,
    pub training: TrainingMeta,
}

/// Trained weights with the target scale they predict in.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub params: ModelParams,
    pub scale: TargetScale,
    pub meta: TrainingMeta,
}

impl Checkpoint {
    pub fn new(params: ModelParams, scale: TargetScale, meta: TrainingMeta) -> Checkpoint {
        Checkpoint { params, scale, meta }
    }

    /// Freshly initialized, untrained model.
    pub fn untrained(seed: u64) -> Checkpoint {
        Checkpoint::new(ModelParams::init(seed), TargetScale::IDENTITY, TrainingMeta::init(seed))
    }

    /// Predicted infected fraction per node.
    pub fn predict(&self, g: &Graph, x: &FeatureMatrix, mode: Mode) -> Result<Vec<f64>> {
        let raw = predict_raw(&self.params, g, x, mode)?;
        Ok(raw.into_iter().map(|z| self.scale.restore(z)).collect())
    }

    fn manifest(&self) -> Manifest {
        Manifest {
            feature_names: FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
            param_count: self.params.count(),
            tensors: architecture()
                .into_iter()
                .map(|s| TensorEntry {
                    name: s.name,
                    shape: s.shape,
                })
                .collect(),
            target_scale: self.scale,
            training: self.meta.clone(),
        }
    }

    /// `MAGIC`, manifest length (u32 LE), JSON manifest, then every weight as
    /// an f32 LE in manifest order.
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let manifest = serde_json::to_vec(&self.manifest())?;
        let mut out = Vec::with_capacity(MAGIC.len() + 4 + manifest.len() + 4 * PARAM_COUNT);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(manifest.len() as u32).to_le_bytes());
        out.extend_from_slice(&manifest);
        for t in self.params.tensors() {
            for &x in t.data() {
                out.extend_from_slice(&(x as f32).to_le_bytes());
            }
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Checkpoint> {
        if bytes.len() < MAGIC.len() || &bytes[..MAGIC.len()] != MAGIC {
            return Err(Error::BadMagic);
        }
        let rest = &bytes[MAGIC.len()..];
        if rest.len() < 4 {
            return Err(Error::Truncated("missing manifest length".into()));
        }
        let len = u32::from_le_bytes(rest[..4].try_into().expect("four bytes")) as usize;
        let rest = &rest[4..];
        if rest.len() < len {
            return Err(Error::Truncated(format!("manifest needs {len} bytes, {} present", rest.len())));
        }
        let manifest: Manifest = serde_json::from_slice(&rest[..len])?;
        let expected_features: Vec<String> = FEATURE_NAMES.iter().map(|s| s.to_string()).collect();
        if manifest.feature_names != expected_features {
            return Err(Error::FeatureSchemaMismatch {
                expected: expected_features,
                found: manifest.feature_names,
            });
        }
        let arch = architecture();
        if manifest.tensors.len() != arch.len() {
            return Err(Error::CheckpointShape {
                name: "<tensor count>".into(),
                expected: vec![arch.len()],
                found: vec![manifest.tensors.len()],
            });
        }
        for (spec, entry) in arch.iter().zip(&manifest.tensors) {
            if spec.name != entry.name || spec.shape != entry.shape {
                return Err(Error::CheckpointShape {
                    name: entry.name.clone(),
                    expected: spec.shape.clone(),
                    found: entry.shape.clone(),
                });
            }
        }
        let weights = &rest[len..];
        let needed = 4 * PARAM_COUNT;
        if weights.len() < needed {
            return Err(Error::Truncated(format!("weights need {needed} bytes, {} present", weights.len())));
        }
        if weights.len() > needed {
            return Err(Error::format("checkpoint", format!("{} trailing bytes", weights.len() - needed)));
        }
        let mut values = weights
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("four bytes")) as f64);
        let tensors = arch
            .iter()
            .map(|spec| {
                let n = spec.shape.iter().product();
                Tensor::new(spec.shape.clone(), values.by_ref().take(n).collect())
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Checkpoint {
            params: ModelParams::from_tensors(tensors),
            scale: manifest.target_scale,
            meta: manifest.training,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Checkpoint> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Checkpoint::from_bytes(&bytes)
    }
}
