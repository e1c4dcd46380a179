use log::{info, warn};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::checkpoint::{Checkpoint, TrainingMeta};
use super::forward::{bind_params, forward_on_tape, Mode, MAX_SEQUENCE};
use super::params::{ModelParams, TargetScale};
use crate::autodiff::{adam_step, AdamConfig, AdamState, Tape, Tensor};
use crate::error::{Error, Result};
use crate::features::{feature_matrix, FeatureMatrix};
use crate::generators::GeneratorSpec;
use crate::graph::Graph;
use crate::propagation::{epidemic_threshold, sir_label, InfluenceLabels};
use crate::rng::{derive_seed, domain, substream};

/// A graph with regression targets on some or all of its nodes.
#[derive(Debug, Clone)]
pub struct TrainingGraph {
    pub graph: Graph,
    pub features: FeatureMatrix,
    pub nodes: Vec<usize>,
    /// Infected fraction per entry of `nodes`.
    pub targets: Vec<f64>,
}

impl TrainingGraph {
    pub fn new(graph: Graph, labels: &InfluenceLabels) -> Result<TrainingGraph> {
        labels.check_graph(&graph)?;
        let features = feature_matrix(&graph)?;
        Ok(TrainingGraph {
            features,
            nodes: labels.node_ids.clone(),
            targets: labels.fractions(),
            graph,
        })
    }

    fn covers_all_nodes(&self) -> bool {
        self.nodes.len() == self.graph.num_nodes() && self.nodes.iter().enumerate().all(|(i, &v)| i == v)
    }
}

/// MSE over the labeled nodes, in standardized units, and its gradient for
/// every weight.
pub fn loss_and_grads(
    params: &ModelParams,
    sample: &TrainingGraph,
    scale: &TargetScale,
    mode: Mode,
) -> Result<(f64, Vec<Tensor>)> {
    let mut tape = Tape::new();
    let vars = bind_params(&mut tape, params, true);
    let out = forward_on_tape(&mut tape, &vars, &sample.graph, &sample.features, mode)?;
    let pred = if sample.covers_all_nodes() {
        out
    } else {
        tape.gather_rows(out, &sample.nodes)?
    };
    let targets: Vec<f64> = sample.targets.iter().map(|&y| scale.standardize(y)).collect();
    let loss = tape.mse_loss(pred, &targets)?;
    let grads = tape.backward(loss)?;
    let g = vars
        .iter()
        .zip(params.tensors())
        .map(|(v, t)| grads.get_or_zeros(*v, t.shape()))
        .collect();
    Ok((tape.value(loss).item(), g))
}

/// Mean loss of every epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub epoch_losses: Vec<f64>,
}

impl TrainReport {
    pub fn final_loss(&self) -> Option<f64> {
        self.epoch_losses.last().copied()
    }
}

/// Adam over `data`, one graph per step, graphs visited in a fresh keyed
/// order each epoch. `on_epoch` sees `(epoch, mean loss)`.
pub fn train<F: FnMut(usize, f64)>(
    params: &mut ModelParams,
    data: &[TrainingGraph],
    scale: &TargetScale,
    lr: f64,
    epochs: usize,
    seed: u64,
    mut on_epoch: F,
) -> Result<TrainReport> {
    if !(lr > 0.0) {
        return Err(Error::InvalidParameter(format!("learning rate {lr} must be positive")));
    }
    if data.is_empty() {
        return Err(Error::InvalidParameter("no training graphs".into()));
    }
    let cfg = AdamConfig::with_lr(lr);
    let mut state = AdamState::new();
    let mut step = 0u64;
    let mut epoch_losses = Vec::with_capacity(epochs);
    for epoch in 0..epochs {
        let mut order: Vec<usize> = (0..data.len()).collect();
        order.shuffle(&mut substream(seed ^ domain::EPOCH_ORDER, epoch as u64, 0));
        let mut total = 0.0;
        for &i in &order {
            let (loss, grads) = loss_and_grads(params, &data[i], scale, Mode::Train { seed, step })?;
            adam_step(params.tensors_mut(), &grads, &mut state, &cfg)?;
            total += loss;
            step += 1;
        }
        let mean = total / data.len() as f64;
        if !mean.is_finite() {
            return Err(Error::Diverged(format!("non-finite loss at epoch {}", epoch + 1)));
        }
        on_epoch(epoch, mean);
        epoch_losses.push(mean);
    }
    Ok(TrainReport { epoch_losses })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub lr: f64,
    pub epochs: usize,
    pub seed: u64,
    pub graphs: Vec<GeneratorSpec>,
    pub sir_runs: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr: 1e-3,
            epochs: 200,
            seed: 0,
            graphs: GeneratorSpec::default_mix(20, 100, 300),
            sir_runs: 1000,
        }
    }
}

/// Generates and SIR-labels the synthetic training set. Graphs with a
/// singular epidemic threshold are skipped with a warning.
pub fn build_dataset(config: &TrainConfig) -> Result<Vec<TrainingGraph>> {
    let mut data = Vec::new();
    for (i, spec) in config.graphs.iter().enumerate() {
        let g = spec.generate(derive_seed(config.seed, i as u64))?;
        if g.num_nodes() > MAX_SEQUENCE {
            return Err(Error::SequenceTooLong {
                len: g.num_nodes(),
                cap: MAX_SEQUENCE,
            });
        }
        let beta = match epidemic_threshold(&g) {
            Ok(b) => b,
            Err(e @ Error::SingularThreshold { .. }) => {
                warn!("skipping training graph {i} ({spec:?}): {e}");
                continue;
            }
            Err(e) => return Err(e),
        };
        let nodes: Vec<usize> = (0..g.num_nodes()).collect();
        let label_seed = derive_seed(config.seed, 0x4c41_4245_0000 + i as u64);
        let labels = sir_label(&g, &nodes, config.sir_runs, beta.transmission, label_seed)?;
        data.push(TrainingGraph::new(g, &labels)?);
    }
    if data.is_empty() {
        return Err(Error::InvalidParameter("every training graph was skipped".into()));
    }
    Ok(data)
}

/// Builds the synthetic dataset, trains from a seeded initialization and
/// returns the pretrained checkpoint.
pub fn pretrain(config: &TrainConfig) -> Result<Checkpoint> {
    let data = build_dataset(config)?;
    pretrain_on(config, &data)
}

pub fn pretrain_on(config: &TrainConfig, data: &[TrainingGraph]) -> Result<Checkpoint> {
    if config.epochs == 0 {
        return Err(Error::InvalidParameter("epochs must be >= 1".into()));
    }
    let mut params = ModelParams::init(config.seed);
    let scale = TargetScale::fit(data.iter().flat_map(|d| &d.targets));
    let report = train(&mut params, data, &scale, config.lr, config.epochs, config.seed, |e, loss| {
        info!("pretrain epoch {} loss {loss:.6e}", e + 1)
    })?;
    Ok(Checkpoint::new(
        params,
        scale,
        TrainingMeta {
            stage: "pretrained".into(),
            seed: config.seed,
            epochs: config.epochs,
            lr: config.lr,
            final_loss: report.final_loss(),
            graphs: data.len(),
            network_hash: None,
            labeled_nodes: None,
        },
    ))
}
