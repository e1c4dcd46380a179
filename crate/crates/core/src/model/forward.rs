use rand::seq::SliceRandom;

use super::params::{ModelParams, DECODER_LAYERS, DROPOUT_RATE, ENCODER_LAYERS, HEADS};
use crate::autodiff::{linear, lstm_cell, multi_head_attention, AttentionVars, LstmVars, Tape, Tensor, Var};
use crate::error::{Error, Result};
use crate::features::{FeatureMatrix, NUM_FEATURES};
use crate::graph::Graph;
use crate::rng::{domain, substream, Stream};

/// Longest node sequence the attention stack sees at once. Larger graphs are
/// scored in consecutive windows of this many node ids.
pub const MAX_SEQUENCE: usize = 2000;

/// How a forward pass treats its stochastic parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mode {
    /// No dropout, neighbors in ascending id order.
    Eval,
    /// Dropout at the model rate and shuffled neighbor sequences, keyed by
    /// `(seed, step)`.
    Train { seed: u64, step: u64 },
    /// Dropout at `rate` with ascending neighbor order; `pass` keys the masks.
    Sample { seed: u64, pass: u64, rate: f64 },
}

struct Dropout {
    seed: u64,
    step: u64,
    rate: f64,
    site: u64,
}

impl Dropout {
    fn for_mode(mode: Mode) -> Option<Dropout> {
        match mode {
            Mode::Eval => None,
            Mode::Train { seed, step } => Some(Dropout {
                seed,
                step,
                rate: DROPOUT_RATE,
                site: 0,
            }),
            Mode::Sample { seed, pass, rate } => Some(Dropout {
                seed,
                step: pass,
                rate,
                site: 0,
            }),
        }
    }
}

fn dropout(tape: &mut Tape, x: Var, d: &mut Option<Dropout>) -> Result<Var> {
    match d {
        None => Ok(x),
        Some(d) => {
            let mut rng = substream(d.seed ^ domain::DROPOUT, d.step, d.site);
            d.site += 1;
            tape.dropout(x, d.rate, Some(&mut rng))
        }
    }
}

struct Sage {
    lstm: LstmVars,
    w: Var,
    b: Var,
}

struct Encoder {
    attn: AttentionVars,
    norm1: (Var, Var),
    ff1: (Var, Var),
    ff2: (Var, Var),
    norm2: (Var, Var),
}

struct Decoder {
    self_attn: AttentionVars,
    norm1: (Var, Var),
    cross_attn: AttentionVars,
    norm2: (Var, Var),
    ff1: (Var, Var),
    ff2: (Var, Var),
    norm3: (Var, Var),
}

struct Layers {
    sage: [Sage; 2],
    encoders: Vec<Encoder>,
    decoders: Vec<Decoder>,
    fc1: (Var, Var),
    fc2: (Var, Var),
}

/// Hands out tape variables in architecture order.
struct Cursor<'a> {
    vars: &'a [Var],
    pos: usize,
}

impl Cursor<'_> {
    fn next(&mut self) -> Var {
        let v = self.vars[self.pos];
        self.pos += 1;
        v
    }

    fn pair(&mut self) -> (Var, Var) {
        (self.next(), self.next())
    }

    fn sage(&mut self) -> Sage {
        let lstm = LstmVars {
            w_ih: self.next(),
            w_hh: self.next(),
            bias: self.next(),
        };
        let (w, b) = self.pair();
        Sage { lstm, w, b }
    }

    fn attention(&mut self) -> AttentionVars {
        let (wq, bq) = self.pair();
        let (wk, bk) = self.pair();
        let (wv, bv) = self.pair();
        let (wo, bo) = self.pair();
        AttentionVars {
            wq,
            bq,
            wk,
            bk,
            wv,
            bv,
            wo,
            bo,
        }
    }
}

impl Layers {
    fn bind(vars: &[Var]) -> Layers {
        let mut c = Cursor { vars, pos: 0 };
        let sage = [c.sage(), c.sage()];
        let encoders = (0..ENCODER_LAYERS)
            .map(|_| Encoder {
                attn: c.attention(),
                norm1: c.pair(),
                ff1: c.pair(),
                ff2: c.pair(),
                norm2: c.pair(),
            })
            .collect();
        let decoders = (0..DECODER_LAYERS)
            .map(|_| Decoder {
                self_attn: c.attention(),
                norm1: c.pair(),
                cross_attn: c.attention(),
                norm2: c.pair(),
                ff1: c.pair(),
                ff2: c.pair(),
                norm3: c.pair(),
            })
            .collect();
        let fc1 = c.pair();
        let fc2 = c.pair();
        debug_assert_eq!(c.pos, vars.len());
        Layers {
            sage,
            encoders,
            decoders,
            fc1,
            fc2,
        }
    }
}

/// Nodes sorted by descending degree (ties by id) so that the nodes still
/// reading neighbors at LSTM step `t` are always a prefix of the order.
struct NeighborPlan {
    order: Vec<usize>,
    position: Vec<usize>,
    /// `active[t]`: number of nodes with degree > t.
    active: Vec<usize>,
    sequences: Vec<Vec<usize>>,
}

impl NeighborPlan {
    fn new(g: &Graph, shuffle: Option<&mut Stream>) -> NeighborPlan {
        let n = g.num_nodes();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| g.degree(b).cmp(&g.degree(a)).then(a.cmp(&b)));
        let mut position = vec![0; n];
        for (i, &v) in order.iter().enumerate() {
            position[v] = i;
        }
        let max_deg = g.max_degree();
        let active = (0..max_deg).map(|t| order.partition_point(|&v| g.degree(v) > t)).collect();
        let mut sequences: Vec<Vec<usize>> = (0..n).map(|v| g.neighbors(v).to_vec()).collect();
        if let Some(rng) = shuffle {
            for s in &mut sequences {
                s.shuffle(rng);
            }
        }
        NeighborPlan {
            order,
            position,
            active,
            sequences,
        }
    }
}

/// One GraphSAGE layer: each node's neighbor sequence runs through the LSTM,
/// the last hidden state is the aggregate, and the output is
/// `relu([h_v, aggregate_v] W + b)`.
fn sage_layer(tape: &mut Tape, h: Var, plan: &NeighborPlan, p: &Sage) -> Result<Var> {
    let n = plan.order.len();
    let hidden = tape.shape(p.lstm.w_hh)[0];
    let mut finished = Vec::new();
    if let Some(&first) = plan.active.first() {
        let mut state = tape.constant(Tensor::zeros(&[first, hidden]));
        let mut cell = state;
        for (t, &rows) in plan.active.iter().enumerate() {
            if tape.shape(state)[0] > rows {
                state = tape.slice(state, 0, 0, rows)?;
                cell = tape.slice(cell, 0, 0, rows)?;
            }
            let idx: Vec<usize> = plan.order[..rows].iter().map(|&v| plan.sequences[v][t]).collect();
            let x = tape.gather_rows(h, &idx)?;
            (state, cell) = lstm_cell(tape, x, state, cell, &p.lstm)?;
            let still = plan.active.get(t + 1).copied().unwrap_or(0);
            if still < rows {
                finished.push(tape.slice(state, 0, still, rows - still)?);
            }
        }
    }
    finished.reverse();
    let isolated = n - plan.active.first().copied().unwrap_or(0);
    if isolated > 0 {
        finished.push(tape.constant(Tensor::zeros(&[isolated, hidden])));
    }
    let sorted = tape.concat(&finished, 0)?;
    let aggregate = tape.gather_rows(sorted, &plan.position)?;
    let joined = tape.concat(&[h, aggregate], 1)?;
    let out = linear(tape, joined, p.w, p.b)?;
    Ok(tape.relu(out))
}

fn add_norm(tape: &mut Tape, x: Var, sub: Var, norm: (Var, Var), d: &mut Option<Dropout>) -> Result<Var> {
    let sub = dropout(tape, sub, d)?;
    let sum = tape.add(x, sub)?;
    tape.layer_norm(sum, norm.0, norm.1)
}

fn feed_forward(tape: &mut Tape, x: Var, ff1: (Var, Var), ff2: (Var, Var), d: &mut Option<Dropout>) -> Result<Var> {
    let h = linear(tape, x, ff1.0, ff1.1)?;
    let h = tape.relu(h);
    let h = dropout(tape, h, d)?;
    linear(tape, h, ff2.0, ff2.1)
}

fn transformer(tape: &mut Tape, seq: Var, layers: &Layers, d: &mut Option<Dropout>) -> Result<Var> {
    let mut memory = seq;
    for e in &layers.encoders {
        let a = multi_head_attention(tape, memory, memory, HEADS, &e.attn, None)?.output;
        memory = add_norm(tape, memory, a, e.norm1, d)?;
        let f = feed_forward(tape, memory, e.ff1, e.ff2, d)?;
        memory = add_norm(tape, memory, f, e.norm2, d)?;
    }
    let mut y = seq;
    for dec in &layers.decoders {
        let s = multi_head_attention(tape, y, y, HEADS, &dec.self_attn, None)?.output;
        y = add_norm(tape, y, s, dec.norm1, d)?;
        let c = multi_head_attention(tape, y, memory, HEADS, &dec.cross_attn, None)?.output;
        y = add_norm(tape, y, c, dec.norm2, d)?;
        let f = feed_forward(tape, y, dec.ff1, dec.ff2, d)?;
        y = add_norm(tape, y, f, dec.norm3, d)?;
    }
    let h = linear(tape, y, layers.fc1.0, layers.fc1.1)?;
    let h = tape.relu(h);
    linear(tape, h, layers.fc2.0, layers.fc2.1)
}

pub(crate) fn features_tensor(x: &FeatureMatrix) -> Result<Tensor> {
    Tensor::matrix(x.num_nodes, NUM_FEATURES, x.values.clone())
}

/// Records the full forward pass on `tape` and returns the `[N, 1]` score
/// column. `vars` are the model weights already placed on the tape.
pub fn forward_on_tape(tape: &mut Tape, vars: &[Var], g: &Graph, x: &FeatureMatrix, mode: Mode) -> Result<Var> {
    let n = g.num_nodes();
    if x.num_nodes != n {
        return Err(Error::LengthMismatch(x.num_nodes, n));
    }
    if n == 0 {
        return Err(Error::InvalidParameter("graph has no nodes".into()));
    }
    let layers = Layers::bind(vars);
    let shuffle_seed = match mode {
        Mode::Train { seed, step } => Some((seed, step)),
        _ => None,
    };
    let mut h = tape.constant(features_tensor(x)?);
    for (l, sage) in layers.sage.iter().enumerate() {
        let mut rng = shuffle_seed.map(|(s, step)| substream(s ^ domain::NEIGHBOR_ORDER, step, l as u64));
        let plan = NeighborPlan::new(g, rng.as_mut());
        h = sage_layer(tape, h, &plan, sage)?;
    }
    let mut d = Dropout::for_mode(mode);
    if n <= MAX_SEQUENCE {
        return transformer(tape, h, &layers, &mut d);
    }
    let mut parts = Vec::new();
    for start in (0..n).step_by(MAX_SEQUENCE) {
        let len = MAX_SEQUENCE.min(n - start);
        let window = tape.slice(h, 0, start, len)?;
        parts.push(transformer(tape, window, &layers, &mut d)?);
    }
    tape.concat(&parts, 0)
}

/// Places the weights on `tape`, trainable or constant.
pub(crate) fn bind_params(tape: &mut Tape, params: &ModelParams, trainable: bool) -> Vec<Var> {
    params
        .tensors()
        .iter()
        .map(|t| {
            if trainable {
                tape.param(t.clone())
            } else {
                tape.constant(t.clone())
            }
        })
        .collect()
}

/// Raw head output per node, in standardized target units.
pub fn predict_raw(params: &ModelParams, g: &Graph, x: &FeatureMatrix, mode: Mode) -> Result<Vec<f64>> {
    let mut tape = Tape::new();
    let vars = bind_params(&mut tape, params, false);
    let out = forward_on_tape(&mut tape, &vars, g, x, mode)?;
    Ok(tape.value(out).data().to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::grad_check;
    use crate::features::feature_matrix;
    use crate::model::params::architecture;

    #[test]
    fn output_shape_for_various_sizes() {
        let params = ModelParams::init(1);
        for n in [1usize, 5, 300] {
            let g = if n == 1 {
                Graph::empty(1)
            } else {
                crate::generators::gen_ba(n, 2, n as u64).unwrap()
            };
            let x = feature_matrix(&g).unwrap();
            let s = predict_raw(&params, &g, &x, Mode::Eval).unwrap();
            assert_eq!(s.len(), n);
            assert!(s.iter().all(|v| v.is_finite()));
        }
    }

    #[test]
    fn eval_is_deterministic_and_train_is_not() {
        let params = ModelParams::init(2);
        let g = crate::generators::gen_er(30, 0.15, 2).unwrap();
        let x = feature_matrix(&g).unwrap();
        let a = predict_raw(&params, &g, &x, Mode::Eval).unwrap();
        assert_eq!(a, predict_raw(&params, &g, &x, Mode::Eval).unwrap());
        let t1 = predict_raw(&params, &g, &x, Mode::Train { seed: 1, step: 0 }).unwrap();
        let t2 = predict_raw(&params, &g, &x, Mode::Train { seed: 1, step: 1 }).unwrap();
        assert_ne!(t1, t2);
        assert_eq!(t1, predict_raw(&params, &g, &x, Mode::Train { seed: 1, step: 0 }).unwrap());
        let zero = Mode::Sample {
            seed: 1,
            pass: 3,
            rate: 0.0,
        };
        assert_eq!(a, predict_raw(&params, &g, &x, zero).unwrap());
    }

    /// The degree-sorted batched LSTM must equal running each node's sequence
    /// through the cell on its own.
    #[test]
    fn batched_aggregation_matches_per_node_loop() {
        let g = Graph::from_edges(6, [(0, 1), (0, 2), (0, 3), (1, 2), (3, 4)]).unwrap();
        let params = ModelParams::init(3);
        let x = feature_matrix(&g).unwrap();
        let mut tape = Tape::new();
        let vars = bind_params(&mut tape, &params, false);
        let layers = Layers::bind(&vars);
        let h = tape.constant(features_tensor(&x).unwrap());
        let plan = NeighborPlan::new(&g, None);
        let out = sage_layer(&mut tape, h, &plan, &layers.sage[0]).unwrap();
        let hidden = tape.shape(layers.sage[0].lstm.w_hh)[0];
        for v in 0..6 {
            let mut state = tape.constant(Tensor::zeros(&[1, hidden]));
            let mut cell = state;
            for &u in g.neighbors(v) {
                let xu = tape.gather_rows(h, &[u]).unwrap();
                (state, cell) = lstm_cell(&mut tape, xu, state, cell, &layers.sage[0].lstm).unwrap();
            }
            let hv = tape.gather_rows(h, &[v]).unwrap();
            let joined = tape.concat(&[hv, state], 1).unwrap();
            let o = linear(&mut tape, joined, layers.sage[0].w, layers.sage[0].b).unwrap();
            let o = tape.relu(o);
            for (a, b) in tape.value(o).data().iter().zip(tape.value(out).row(v)) {
                assert!((a - b).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn edgeless_graph_uses_zero_aggregate() {
        let g = Graph::empty(4);
        let params = ModelParams::init(4);
        let x = FeatureMatrix::from_raw(&[[1.0; NUM_FEATURES], [2.0; NUM_FEATURES], [0.5; NUM_FEATURES], [3.0; NUM_FEATURES]]);
        let mut tape = Tape::new();
        let vars = bind_params(&mut tape, &params, false);
        let layers = Layers::bind(&vars);
        let h = tape.constant(features_tensor(&x).unwrap());
        let out = sage_layer(&mut tape, h, &NeighborPlan::new(&g, None), &layers.sage[0]).unwrap();
        let w = tape.value(layers.sage[0].w).clone();
        let b = tape.value(layers.sage[0].b).clone();
        for v in 0..4 {
            for j in 0..w.shape()[1] {
                let mut s = b.data()[j];
                for i in 0..NUM_FEATURES {
                    s += x.get(v, i) * w.at(i, j);
                }
                assert!((tape.value(out).at(v, j) - s.max(0.0)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn sage_layer_gradients_on_five_nodes() {
        let g = Graph::from_edges(5, [(0, 1), (1, 2), (2, 3), (3, 4), (4, 0), (0, 2)]).unwrap();
        let x = feature_matrix(&g).unwrap();
        let params = ModelParams::init(5);
        let arch = architecture();
        // sage1 weights plus the input features
        let mut inputs: Vec<Tensor> = params.tensors()[..5].to_vec();
        inputs.push(features_tensor(&x).unwrap());
        assert!(arch[..5].iter().all(|s| s.name.starts_with("sage1")));
        let report = grad_check(&inputs, 1e-5, |tape, v| {
            let sage = Sage {
                lstm: LstmVars {
                    w_ih: v[0],
                    w_hh: v[1],
                    bias: v[2],
                },
                w: v[3],
                b: v[4],
            };
            let plan = NeighborPlan::new(&g, None);
            let out = sage_layer(tape, v[5], &plan, &sage)?;
            let t = tape.tanh(out);
            Ok(tape.sum(t))
        })
        .unwrap();
        assert!(report.max_rel_error < 1e-4, "{report:?}");
    }

    #[test]
    fn windowed_scoring_covers_every_node() {
        let g = Graph::from_edges(MAX_SEQUENCE + 7, (0..MAX_SEQUENCE + 6).map(|i| (i, i + 1))).unwrap();
        let x = feature_matrix(&g).unwrap();
        let s = predict_raw(&ModelParams::init(1), &g, &x, Mode::Eval).unwrap();
        assert_eq!(s.len(), MAX_SEQUENCE + 7);
        assert!(s.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn full_model_gradients_on_eight_nodes() {
        let g = Graph::from_edges(8, [(0, 1), (0, 2), (0, 3), (1, 2), (3, 4), (4, 5), (5, 6), (6, 7), (7, 4)]).unwrap();
        let x = feature_matrix(&g).unwrap();
        let params = ModelParams::init(8);
        let targets: Vec<f64> = (0..8).map(|i| 0.05 * i as f64).collect();
        for mode in [Mode::Train { seed: 3, step: 7 }] {
            let report = grad_check(params.tensors(), 1e-5, |tape, v| {
                let out = forward_on_tape(tape, v, &g, &x, mode)?;
                tape.mse_loss(out, &targets)
            })
            .unwrap();
            assert!(report.max_rel_error < 1e-4, "{mode:?}: {report:?}");
        }
    }
}
