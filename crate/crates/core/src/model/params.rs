use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::Tensor;
use crate::features::NUM_FEATURES;
use crate::rng::{domain, substream};

pub const MODEL_DIM: usize = 32;
pub const HEADS: usize = 4;
pub const FF_DIM: usize = 64;
pub const HEAD_HIDDEN: usize = 16;
pub const ENCODER_LAYERS: usize = 2;
pub const DECODER_LAYERS: usize = 2;
pub const DROPOUT_RATE: f64 = 0.1;

/// Total number of scalar weights in the frozen architecture.
pub const PARAM_COUNT: usize = 55_209;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Init {
    Xavier,
    Zeros,
    Ones,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamSpec {
    pub name: String,
    pub shape: Vec<usize>,
    pub(crate) init: Init,
}

struct Builder(Vec<ParamSpec>);

impl Builder {
    fn add(&mut self, name: String, shape: &[usize], init: Init) {
        self.0.push(ParamSpec {
            name,
            shape: shape.to_vec(),
            init,
        });
    }

    fn linear(&mut self, prefix: &str, d_in: usize, d_out: usize) {
        self.add(format!("{prefix}.w"), &[d_in, d_out], Init::Xavier);
        self.add(format!("{prefix}.b"), &[d_out], Init::Zeros);
    }

    fn lstm(&mut self, prefix: &str, d_in: usize, hidden: usize) {
        self.add(format!("{prefix}.w_ih"), &[d_in, 4 * hidden], Init::Xavier);
        self.add(format!("{prefix}.w_hh"), &[hidden, 4 * hidden], Init::Xavier);
        self.add(format!("{prefix}.bias"), &[4 * hidden], Init::Zeros);
    }

    fn sage(&mut self, prefix: &str, d_in: usize, d_out: usize) {
        self.lstm(&format!("{prefix}.lstm"), d_in, d_in);
        self.linear(&format!("{prefix}.combine"), 2 * d_in, d_out);
    }

    fn attention(&mut self, prefix: &str) {
        for p in ["q", "k", "v", "o"] {
            self.linear(&format!("{prefix}.{p}"), MODEL_DIM, MODEL_DIM);
        }
    }

    fn norm(&mut self, prefix: &str) {
        self.add(format!("{prefix}.gamma"), &[MODEL_DIM], Init::Ones);
        self.add(format!("{prefix}.beta"), &[MODEL_DIM], Init::Zeros);
    }

    fn feed_forward(&mut self, prefix: &str) {
        self.linear(&format!("{prefix}.ff1"), MODEL_DIM, FF_DIM);
        self.linear(&format!("{prefix}.ff2"), FF_DIM, MODEL_DIM);
    }
}

/// Names, shapes and initializers of every weight, in checkpoint order.
pub fn architecture() -> Vec<ParamSpec> {
    let mut b = Builder(Vec::new());
    b.sage("sage1", NUM_FEATURES, MODEL_DIM);
    b.sage("sage2", MODEL_DIM, MODEL_DIM);
    for l in 0..ENCODER_LAYERS {
        let p = format!("encoder{l}");
        b.attention(&format!("{p}.self_attn"));
        b.norm(&format!("{p}.norm1"));
        b.feed_forward(&p);
        b.norm(&format!("{p}.norm2"));
    }
    for l in 0..DECODER_LAYERS {
        let p = format!("decoder{l}");
        b.attention(&format!("{p}.self_attn"));
        b.norm(&format!("{p}.norm1"));
        b.attention(&format!("{p}.cross_attn"));
        b.norm(&format!("{p}.norm2"));
        b.feed_forward(&p);
        b.norm(&format!("{p}.norm3"));
    }
    b.linear("head.fc1", MODEL_DIM, HEAD_HIDDEN);
    b.linear("head.fc2", HEAD_HIDDEN, 1);
    b.0
}

/// Affine map between infected fractions and the standardized units the
/// network is trained in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetScale {
    pub mean: f64,
    pub std: f64,
}

impl TargetScale {
    pub const IDENTITY: TargetScale = TargetScale { mean: 0.0, std: 1.0 };

    /// Population mean and standard deviation of `targets`; a constant set
    /// keeps unit scale.
    pub fn fit<'a, I: IntoIterator<Item = &'a f64>>(targets: I) -> TargetScale {
        let (mut n, mut sum, mut sum_sq) = (0usize, 0.0, 0.0);
        for &y in targets {
            n += 1;
            sum += y;
            sum_sq += y * y;
        }
        if n == 0 {
            return TargetScale::IDENTITY;
        }
        let mean = sum / n as f64;
        let var = (sum_sq / n as f64 - mean * mean).max(0.0);
        let std = if var.sqrt() > 1e-12 { var.sqrt() } else { 1.0 };
        TargetScale { mean, std }
    }

    pub fn standardize(&self, y: f64) -> f64 {
        (y - self.mean) / self.std
    }

    pub fn restore(&self, z: f64) -> f64 {
        self.mean + self.std * z
    }
}

/// Weights of the influence regressor, in [`architecture`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub(crate) tensors: Vec<Tensor>,
}

impl ModelParams {
    /// Xavier-uniform weights, zero biases, unit norm scales. Each tensor
    /// draws from its own stream so the layout, not the draw order, fixes it.
    pub fn init(seed: u64) -> ModelParams {
        let tensors = architecture()
            .iter()
            .enumerate()
            .map(|(i, spec)| {
                let n: usize = spec.shape.iter().product();
                let data = match spec.init {
                    Init::Zeros => vec![0.0; n],
                    Init::Ones => vec![1.0; n],
                    Init::Xavier => {
                        let (fan_in, fan_out) = (spec.shape[0], spec.shape[1]);
                        let a = (6.0 / (fan_in + fan_out) as f64).sqrt();
                        let mut rng = substream(seed ^ domain::PARAM_INIT, i as u64, 0);
                        (0..n).map(|_| a * (2.0 * rng.random::<f64>() - 1.0)).collect()
                    }
                };
                Tensor::new(spec.shape.clone(), data).expect("architecture shapes are consistent")
            })
            .collect();
        ModelParams { tensors }
    }

    pub(crate) fn from_tensors(tensors: Vec<Tensor>) -> ModelParams {
        ModelParams { tensors }
    }

    pub fn tensors(&self) -> &[Tensor] {
        &self.tensors
    }

    pub fn tensors_mut(&mut self) -> &mut [Tensor] {
        &mut self.tensors
    }

    pub fn count(&self) -> usize {
        self.tensors.iter().map(Tensor::len).sum()
    }

    /// Rounds every weight to the nearest `f32`, the checkpoint precision.
    pub fn round_to_f32(&mut self) {
        for t in &mut self.tensors {
            for x in t.data_mut() {
                *x = *x as f32 as f64;
            }
        }
    }

    pub fn all_finite(&self) -> bool {
        self.tensors.iter().all(|t| t.data().iter().all(|x| x.is_finite()))
    }
}
