//! Active-learning adaptation of a pretrained model to one target network:
//! cluster the node features, score cluster cores by MC-dropout variance,
//! label the most uncertain ones and fine-tune on them.

mod kmeans;

pub use kmeans::{kmeans, ClusterResult, KMeansOptions};

use std::fmt::Write as _;

use log::info;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FeatureMatrix, NUM_FEATURES};
use crate::graph::Graph;
use crate::model::{train, Checkpoint, Mode, TrainReport, TrainingGraph, TrainingMeta, DROPOUT_RATE};
use crate::propagation::InfluenceLabels;
use crate::rng::{derive_seed, domain};
use crate::table::fmt_real;

pub const DEFAULT_PASSES: usize = 20;

/// Per-node variance of the predicted infected fraction across stochastic
/// passes.
#[derive(Debug, Clone, PartialEq)]
pub struct UncertaintyScores {
    pub variance: Vec<f64>,
    pub passes: usize,
    pub rate: f64,
}

/// Sample variance over `passes` dropout passes at the model's dropout rate.
pub fn mc_dropout_uncertainty(
    ck: &Checkpoint,
    g: &Graph,
    x: &FeatureMatrix,
    passes: usize,
    seed: u64,
) -> Result<UncertaintyScores> {
    let keys: Vec<u64> = (0..passes as u64).collect();
    mc_dropout_uncertainty_with(ck, g, x, &keys, seed, DROPOUT_RATE)
}

/// One pass per entry of `keys`; repeating a key repeats its dropout masks.
pub fn mc_dropout_uncertainty_with(
    ck: &Checkpoint,
    g: &Graph,
    x: &FeatureMatrix,
    keys: &[u64],
    seed: u64,
    rate: f64,
) -> Result<UncertaintyScores> {
    if keys.len() < 2 {
        return Err(Error::InvalidParameter(format!("need at least 2 passes, got {}", keys.len())));
    }
    let runs: Vec<Vec<f64>> = keys
        .par_iter()
        .map(|&pass| ck.predict(g, x, Mode::Sample { seed, pass, rate }))
        .collect::<Result<_>>()?;
    let t = runs.len() as f64;
    let variance = (0..g.num_nodes())
        .map(|v| {
            let mean = runs.iter().map(|r| r[v]).sum::<f64>() / t;
            runs.iter().map(|r| (r[v] - mean).powi(2)).sum::<f64>() / (t - 1.0)
        })
        .collect();
    Ok(UncertaintyScores {
        variance,
        passes: keys.len(),
        rate,
    })
}

/// Requested labeling budget clipped to a tenth of the network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleBudget {
    pub requested: usize,
    /// `ceil(num_nodes / 10)`.
    pub cap: usize,
    pub effective: usize,
}

impl SampleBudget {
    pub fn new(requested: usize, num_nodes: usize) -> Result<SampleBudget> {
        if requested == 0 || num_nodes == 0 {
            return Err(Error::InvalidParameter(format!(
                "budget {requested} on {num_nodes} nodes selects nothing"
            )));
        }
        let cap = num_nodes.div_ceil(10);
        Ok(SampleBudget {
            requested,
            cap,
            effective: requested.min(cap),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    /// Most uncertain first.
    pub nodes: Vec<usize>,
    pub clusters: ClusterResult,
    pub uncertainty: UncertaintyScores,
    pub budget: SampleBudget,
}

impl Selection {
    /// `node_id,cluster_id,uncertainty`, one row per selected node.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("node_id,cluster_id,uncertainty\n");
        for &v in &self.nodes {
            let _ = writeln!(
                out,
                "{v},{},{}",
                self.clusters.assignments[v],
                fmt_real(self.uncertainty.variance[v])
            );
        }
        out
    }
}

/// Clusters the features into `2 * effective` groups and keeps the
/// `effective` most uncertain cluster cores. Ties go to the lowest node id.
pub fn select_samples(
    ck: &Checkpoint,
    g: &Graph,
    x: &FeatureMatrix,
    budget: SampleBudget,
    passes: usize,
    seed: u64,
) -> Result<Selection> {
    let n = g.num_nodes();
    if x.num_nodes != n {
        return Err(Error::LengthMismatch(x.num_nodes, n));
    }
    let k = (2 * budget.effective).min(n);
    let clusters = kmeans(&x.values, NUM_FEATURES, k, derive_seed(seed, domain::KMEANS), &KMeansOptions::default())?;
    let uncertainty = mc_dropout_uncertainty(ck, g, x, passes, derive_seed(seed, domain::DROPOUT))?;
    let mut candidates = clusters.cores.clone();
    candidates.sort_by(|&a, &b| {
        uncertainty.variance[b]
            .total_cmp(&uncertainty.variance[a])
            .then(a.cmp(&b))
    });
    candidates.truncate(budget.effective);
    if candidates.len() < budget.effective {
        return Err(Error::InvalidParameter(format!(
            "only {} distinct feature clusters for a budget of {}",
            candidates.len(),
            budget.effective
        )));
    }
    Ok(Selection {
        nodes: candidates,
        clusters,
        uncertainty,
        budget,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FinetuneConfig {
    pub lr: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for FinetuneConfig {
    fn default() -> Self {
        FinetuneConfig {
            lr: 1e-4,
            epochs: 100,
            seed: 0,
        }
    }
}

/// Trains every weight of `base` on the labeled nodes of `g` only, keeping
/// the base target scale. The result is tagged with the network's hash.
pub fn finetune(
    base: &Checkpoint,
    g: &Graph,
    labels: &InfluenceLabels,
    config: &FinetuneConfig,
) -> Result<(Checkpoint, TrainReport)> {
    let sample = TrainingGraph::new(g.clone(), labels)?;
    let mut params = base.params.clone();
    let report = train(
        &mut params,
        std::slice::from_ref(&sample),
        &base.scale,
        config.lr,
        config.epochs,
        config.seed,
        |e, loss| info!("finetune epoch {} loss {loss:.6e}", e + 1),
    )?;
    let meta = TrainingMeta {
        stage: "finetuned".into(),
        seed: config.seed,
        epochs: config.epochs,
        lr: config.lr,
        final_loss: report.final_loss(),
        graphs: 1,
        network_hash: Some(g.content_hash()),
        labeled_nodes: Some(labels.len()),
    };
    Ok((Checkpoint::new(params, base.scale, meta), report))
}
