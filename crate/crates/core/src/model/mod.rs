//! Influence regressor: two GraphSAGE layers with LSTM aggregation, a
//! two-layer encoder/decoder Transformer over the node sequence, and a
//! 32 -> 16 -> 1 head predicting each node's SIR infected fraction.

mod checkpoint;
mod forward;
mod params;
mod train;

pub use checkpoint::{Checkpoint, Manifest, TensorEntry, TrainingMeta, MAGIC};
pub use forward::{forward_on_tape, predict_raw, Mode, MAX_SEQUENCE};
pub use params::{
    architecture, ModelParams, ParamSpec, TargetScale, DECODER_LAYERS, DROPOUT_RATE, ENCODER_LAYERS, FF_DIM, HEADS, HEAD_HIDDEN,
    MODEL_DIM, PARAM_COUNT,
};
pub use train::{build_dataset, loss_and_grads, pretrain, pretrain_on, train, TrainConfig, TrainReport, TrainingGraph};
