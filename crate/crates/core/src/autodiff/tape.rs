use rand::Rng;

use super::tensor::{matmul_at_into, matmul_bt_into, matmul_into, Tensor};
use crate::error::{Error, Result};

pub const LAYER_NORM_EPS: f64 = 1e-5;

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(pub(crate) usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    Concat { parts: Vec<Var>, axis: usize },
    Slice { src: Var, axis: usize, start: usize },
    Transpose(Var),
    Relu(Var),
    Sigmoid(Var),
    Tanh(Var),
    Softmax(Var),
    LayerNorm { x: Var, gamma: Var, beta: Var, xhat: Vec<f64>, rstd: Vec<f64> },
    Dropout { x: Var, mask: Vec<f64> },
    GatherRows { src: Var, idx: Vec<usize> },
    Sum(Var),
    Mean(Var),
    MseLoss { pred: Var, target: Vec<f64> },
}

#[derive(Debug)]
struct Node {
    value: Tensor,
    op: Op,
    requires_grad: bool,
}

/// Records a computation for one forward pass; [`Tape::backward`] walks it in
/// reverse.
#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

/// Gradients of a scalar with respect to every tape entry that needs one.
#[derive(Debug)]
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
}

impl Gradients {
    pub fn get(&self, v: Var) -> Option<&Tensor> {
        self.grads.get(v.0).and_then(Option::as_ref)
    }

    /// Gradient of `v`, zeros if nothing flowed into it.
    pub fn get_or_zeros(&self, v: Var, shape: &[usize]) -> Tensor {
        self.get(v).cloned().unwrap_or_else(|| Tensor::zeros(shape))
    }
}

fn mismatch(op: &'static str, a: &Tensor, b: &Tensor) -> Error {
    Error::ShapeMismatch {
        op,
        lhs: a.shape().to_vec(),
        rhs: b.shape().to_vec(),
    }
}

fn split_axis(shape: &[usize], axis: usize) -> (usize, usize, usize) {
    let outer = shape[..axis].iter().product();
    let inner = shape[axis + 1..].iter().product();
    (outer, shape[axis], inner)
}

impl Tape {
    pub fn new() -> Tape {
        Tape::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Tensor, op: Op, inputs: &[Var]) -> Var {
        let requires_grad = inputs.iter().any(|v| self.nodes[v.0].requires_grad);
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    /// Trainable input; gradients flow into it.
    pub fn param(&mut self, value: Tensor) -> Var {
        self.nodes.push(Node {
            value,
            op: Op::Leaf,
            requires_grad: true,
        });
        Var(self.nodes.len() - 1)
    }

    /// Constant input.
    pub fn constant(&mut self, value: Tensor) -> Var {
        self.nodes.push(Node {
            value,
            op: Op::Leaf,
            requires_grad: false,
        });
        Var(self.nodes.len() - 1)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> &[usize] {
        self.nodes[v.0].value.shape()
    }

    /// `[m, k] x [k, n]`.
    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ta, tb) = (self.value(a), self.value(b));
        if ta.shape().len() != 2 || tb.shape().len() != 2 || ta.shape()[1] != tb.shape()[0] {
            return Err(mismatch("matmul", ta, tb));
        }
        let (m, k, n) = (ta.shape()[0], ta.shape()[1], tb.shape()[1]);
        let mut out = vec![0.0; m * n];
        matmul_into(ta.data(), tb.data(), &mut out, m, k, n);
        Ok(self.push(Tensor::from_parts(vec![m, n], out), Op::MatMul(a, b), &[a, b]))
    }

    /// Elementwise sum; `b` may have a shape equal to a suffix of `a`'s and is
    /// then broadcast over the leading dimensions.
    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ta, tb) = (self.value(a), self.value(b));
        let sa = ta.shape();
        let sb = tb.shape();
        if sb.len() > sa.len() || sa[sa.len() - sb.len()..] != *sb {
            return Err(mismatch("add", ta, tb));
        }
        let block = tb.len();
        let data: Vec<f64> = if block == 0 {
            ta.data().to_vec()
        } else {
            ta.data()
                .iter()
                .enumerate()
                .map(|(i, x)| x + tb.data()[i % block])
                .collect()
        };
        Ok(self.push(Tensor::from_parts(sa.to_vec(), data), Op::Add(a, b), &[a, b]))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ta, tb) = (self.value(a), self.value(b));
        if ta.shape() != tb.shape() {
            return Err(mismatch("sub", ta, tb));
        }
        let data = ta.data().iter().zip(tb.data()).map(|(x, y)| x - y).collect();
        Ok(self.push(Tensor::from_parts(ta.shape().to_vec(), data), Op::Sub(a, b), &[a, b]))
    }

    /// Elementwise product of equal shapes.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ta, tb) = (self.value(a), self.value(b));
        if ta.shape() != tb.shape() {
            return Err(mismatch("mul", ta, tb));
        }
        let data = ta.data().iter().zip(tb.data()).map(|(x, y)| x * y).collect();
        Ok(self.push(Tensor::from_parts(ta.shape().to_vec(), data), Op::Mul(a, b), &[a, b]))
    }

    pub fn scale(&mut self, a: Var, s: f64) -> Var {
        let ta = self.value(a);
        let data = ta.data().iter().map(|x| x * s).collect();
        self.push(Tensor::from_parts(ta.shape().to_vec(), data), Op::Scale(a, s), &[a])
    }

    pub fn concat(&mut self, parts: &[Var], axis: usize) -> Result<Var> {
        let first = parts
            .first()
            .ok_or_else(|| Error::InvalidParameter("concat of zero tensors".into()))?;
        let base = self.value(*first).shape().to_vec();
        if axis >= base.len() {
            return Err(Error::InvalidParameter(format!("concat axis {axis} for rank {}", base.len())));
        }
        let mut total = 0;
        for &p in parts {
            let s = self.value(p).shape();
            let same_rank = s.len() == base.len();
            if !same_rank || s.iter().zip(&base).enumerate().any(|(d, (x, y))| d != axis && x != y) {
                return Err(mismatch("concat", self.value(*first), self.value(p)));
            }
            total += s[axis];
        }
        let mut shape = base.clone();
        shape[axis] = total;
        let (outer, _, inner) = split_axis(&base, axis);
        let mut data = Vec::with_capacity(shape.iter().product());
        for o in 0..outer {
            for &p in parts {
                let t = self.value(p);
                let block = t.shape()[axis] * inner;
                data.extend_from_slice(&t.data()[o * block..(o + 1) * block]);
            }
        }
        Ok(self.push(
            Tensor::from_parts(shape, data),
            Op::Concat {
                parts: parts.to_vec(),
                axis,
            },
            parts,
        ))
    }

    /// Entries `start..start + len` along `axis`.
    pub fn slice(&mut self, src: Var, axis: usize, start: usize, len: usize) -> Result<Var> {
        let t = self.value(src);
        let s = t.shape();
        if axis >= s.len() || start + len > s[axis] {
            return Err(Error::InvalidParameter(format!(
                "slice {start}..{} on axis {axis} of shape {s:?}",
                start + len
            )));
        }
        let (outer, dim, inner) = split_axis(s, axis);
        let mut shape = s.to_vec();
        shape[axis] = len;
        let mut data = Vec::with_capacity(outer * len * inner);
        for o in 0..outer {
            let base = o * dim * inner + start * inner;
            data.extend_from_slice(&t.data()[base..base + len * inner]);
        }
        Ok(self.push(Tensor::from_parts(shape, data), Op::Slice { src, axis, start }, &[src]))
    }

    pub fn transpose(&mut self, a: Var) -> Result<Var> {
        let t = self.value(a);
        if t.shape().len() != 2 {
            return Err(Error::InvalidParameter(format!("transpose of rank {}", t.shape().len())));
        }
        let (r, c) = (t.shape()[0], t.shape()[1]);
        let mut data = vec![0.0; r * c];
        for i in 0..r {
            for j in 0..c {
                data[j * r + i] = t.data()[i * c + j];
            }
        }
        Ok(self.push(Tensor::from_parts(vec![c, r], data), Op::Transpose(a), &[a]))
    }

    fn unary(&mut self, a: Var, f: impl Fn(f64) -> f64, op: Op) -> Var {
        let t = self.value(a);
        let data = t.data().iter().map(|&x| f(x)).collect();
        self.push(Tensor::from_parts(t.shape().to_vec(), data), op, &[a])
    }

    pub fn relu(&mut self, a: Var) -> Var {
        self.unary(a, |x| x.max(0.0), Op::Relu(a))
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        self.unary(a, sigmoid, Op::Sigmoid(a))
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        self.unary(a, f64::tanh, Op::Tanh(a))
    }

    /// Softmax over the last dimension.
    pub fn softmax(&mut self, a: Var) -> Var {
        let t = self.value(a);
        let d = t.last_dim();
        let mut data = t.data().to_vec();
        for row in data.chunks_mut(d.max(1)) {
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mut z = 0.0;
            for x in row.iter_mut() {
                *x = (*x - max).exp();
                z += *x;
            }
            for x in row.iter_mut() {
                *x /= z;
            }
        }
        self.push(Tensor::from_parts(t.shape().to_vec(), data), Op::Softmax(a), &[a])
    }

    /// Normalizes over the last dimension, then applies `gamma * x + beta`.
    pub fn layer_norm(&mut self, x: Var, gamma: Var, beta: Var) -> Result<Var> {
        let t = self.value(x);
        let d = t.last_dim();
        for p in [gamma, beta] {
            if self.value(p).shape() != [d] {
                return Err(mismatch("layer_norm", t, self.value(p)));
            }
        }
        let (g, b) = (self.value(gamma).data(), self.value(beta).data());
        let rows = t.outer_len();
        let mut xhat = vec![0.0; t.len()];
        let mut rstd = vec![0.0; rows];
        let mut out = vec![0.0; t.len()];
        for r in 0..rows {
            let row = t.row(r);
            let mean = row.iter().sum::<f64>() / d as f64;
            let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / d as f64;
            let rs = 1.0 / (var + LAYER_NORM_EPS).sqrt();
            rstd[r] = rs;
            for j in 0..d {
                let h = (row[j] - mean) * rs;
                xhat[r * d + j] = h;
                out[r * d + j] = g[j] * h + b[j];
            }
        }
        let shape = t.shape().to_vec();
        Ok(self.push(
            Tensor::from_parts(shape, out),
            Op::LayerNorm {
                x,
                gamma,
                beta,
                xhat,
                rstd,
            },
            &[x, gamma, beta],
        ))
    }

    /// Inverted dropout. With no stream (evaluation) or a zero rate the
    /// input is returned unchanged.
    pub fn dropout<R: Rng>(&mut self, x: Var, rate: f64, rng: Option<&mut R>) -> Result<Var> {
        if !(0.0..1.0).contains(&rate) {
            return Err(Error::InvalidParameter(format!("dropout rate {rate} outside [0, 1)")));
        }
        let Some(rng) = rng else { return Ok(x) };
        if rate == 0.0 {
            return Ok(x);
        }
        let keep = 1.0 / (1.0 - rate);
        let t = self.value(x);
        let mask: Vec<f64> = (0..t.len())
            .map(|_| if rng.random::<f64>() < rate { 0.0 } else { keep })
            .collect();
        let data = t.data().iter().zip(&mask).map(|(a, m)| a * m).collect();
        let shape = t.shape().to_vec();
        Ok(self.push(Tensor::from_parts(shape, data), Op::Dropout { x, mask }, &[x]))
    }

    /// Rows `idx` of a 2-D tensor, in order; indices may repeat.
    pub fn gather_rows(&mut self, src: Var, idx: &[usize]) -> Result<Var> {
        let t = self.value(src);
        if t.shape().len() != 2 {
            return Err(Error::InvalidParameter("gather_rows needs a matrix".into()));
        }
        let (rows, d) = (t.shape()[0], t.shape()[1]);
        let mut data = Vec::with_capacity(idx.len() * d);
        for &i in idx {
            if i >= rows {
                return Err(Error::InvalidParameter(format!("row {i} out of {rows}")));
            }
            data.extend_from_slice(t.row(i));
        }
        Ok(self.push(
            Tensor::from_parts(vec![idx.len(), d], data),
            Op::GatherRows {
                src,
                idx: idx.to_vec(),
            },
            &[src],
        ))
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let s = self.value(a).data().iter().sum();
        self.push(Tensor::scalar(s), Op::Sum(a), &[a])
    }

    pub fn mean(&mut self, a: Var) -> Var {
        let t = self.value(a);
        let s = t.data().iter().sum::<f64>() / t.len().max(1) as f64;
        self.push(Tensor::scalar(s), Op::Mean(a), &[a])
    }

    /// Mean squared error against a constant target with the same number of
    /// elements.
    pub fn mse_loss(&mut self, pred: Var, target: &[f64]) -> Result<Var> {
        let t = self.value(pred);
        if t.len() != target.len() {
            return Err(Error::LengthMismatch(t.len(), target.len()));
        }
        if target.is_empty() {
            return Err(Error::InvalidParameter("mse of empty tensors".into()));
        }
        let s = t
            .data()
            .iter()
            .zip(target)
            .map(|(p, y)| (p - y) * (p - y))
            .sum::<f64>()
            / target.len() as f64;
        Ok(self.push(
            Tensor::scalar(s),
            Op::MseLoss {
                pred,
                target: target.to_vec(),
            },
            &[pred],
        ))
    }

    /// Reverse pass from the scalar `loss`.
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        let lv = self.value(loss);
        if lv.len() != 1 {
            return Err(Error::InvalidParameter(format!(
                "backward from non-scalar of shape {:?}",
                lv.shape()
            )));
        }
        let mut grads: Vec<Option<Tensor>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[loss.0] = Some(Tensor::full(lv.shape(), 1.0));
        for i in (0..=loss.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            let node = &self.nodes[i];
            if node.requires_grad {
                self.propagate(node, &g, &mut grads);
            }
            grads[i] = Some(g);
        }
        for (g, n) in grads.iter_mut().zip(&self.nodes) {
            if !n.requires_grad {
                *g = None;
            }
        }
        Ok(Gradients { grads })
    }

    fn accumulate(&self, grads: &mut [Option<Tensor>], v: Var, delta: Tensor) {
        if !self.nodes[v.0].requires_grad {
            return;
        }
        match &mut grads[v.0] {
            Some(g) => g.add_assign(&delta),
            slot @ None => *slot = Some(delta),
        }
    }

    fn like(&self, v: Var, data: Vec<f64>) -> Tensor {
        Tensor::from_parts(self.value(v).shape().to_vec(), data)
    }

    fn propagate(&self, node: &Node, g: &Tensor, grads: &mut [Option<Tensor>]) {
        let gd = g.data();
        match &node.op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                let (ta, tb) = (self.value(*a), self.value(*b));
                let (m, k, n) = (ta.shape()[0], ta.shape()[1], tb.shape()[1]);
                if self.nodes[a.0].requires_grad {
                    let mut da = vec![0.0; m * k];
                    matmul_bt_into(gd, tb.data(), &mut da, m, n, k);
                    self.accumulate(grads, *a, self.like(*a, da));
                }
                if self.nodes[b.0].requires_grad {
                    let mut db = vec![0.0; k * n];
                    matmul_at_into(ta.data(), gd, &mut db, m, k, n);
                    self.accumulate(grads, *b, self.like(*b, db));
                }
            }
            Op::Add(a, b) => {
                self.accumulate(grads, *a, g.clone());
                if self.nodes[b.0].requires_grad {
                    let block = self.value(*b).len();
                    let mut db = vec![0.0; block];
                    if block > 0 {
                        for (i, x) in gd.iter().enumerate() {
                            db[i % block] += x;
                        }
                    }
                    self.accumulate(grads, *b, self.like(*b, db));
                }
            }
            Op::Sub(a, b) => {
                self.accumulate(grads, *a, g.clone());
                self.accumulate(grads, *b, self.like(*b, gd.iter().map(|x| -x).collect()));
            }
            Op::Mul(a, b) => {
                let (ta, tb) = (self.value(*a), self.value(*b));
                let da = gd.iter().zip(tb.data()).map(|(x, y)| x * y).collect();
                let db = gd.iter().zip(ta.data()).map(|(x, y)| x * y).collect();
                self.accumulate(grads, *a, self.like(*a, da));
                self.accumulate(grads, *b, self.like(*b, db));
            }
            Op::Scale(a, s) => {
                self.accumulate(grads, *a, self.like(*a, gd.iter().map(|x| x * s).collect()));
            }
            Op::Concat { parts, axis } => {
                let (outer, _, inner) = split_axis(node.value.shape(), *axis);
                let mut pieces: Vec<Vec<f64>> = parts
                    .iter()
                    .map(|p| Vec::with_capacity(self.value(*p).len()))
                    .collect();
                let mut pos = 0;
                for _ in 0..outer {
                    for (k, p) in parts.iter().enumerate() {
                        let block = self.value(*p).shape()[*axis] * inner;
                        pieces[k].extend_from_slice(&gd[pos..pos + block]);
                        pos += block;
                    }
                }
                for (p, data) in parts.iter().zip(pieces) {
                    self.accumulate(grads, *p, self.like(*p, data));
                }
            }
            Op::Slice { src, axis, start } => {
                let s = self.value(*src).shape();
                let (outer, dim, inner) = split_axis(s, *axis);
                let len = node.value.shape()[*axis];
                let mut d = vec![0.0; self.value(*src).len()];
                for o in 0..outer {
                    let base = o * dim * inner + start * inner;
                    d[base..base + len * inner].copy_from_slice(&gd[o * len * inner..(o + 1) * len * inner]);
                }
                self.accumulate(grads, *src, self.like(*src, d));
            }
            Op::Transpose(a) => {
                let (r, c) = (self.value(*a).shape()[0], self.value(*a).shape()[1]);
                let mut d = vec![0.0; r * c];
                for i in 0..r {
                    for j in 0..c {
                        d[i * c + j] = gd[j * r + i];
                    }
                }
                self.accumulate(grads, *a, self.like(*a, d));
            }
            Op::Relu(a) => {
                let x = self.value(*a).data();
                let d = gd.iter().zip(x).map(|(g, &x)| if x > 0.0 { *g } else { 0.0 }).collect();
                self.accumulate(grads, *a, self.like(*a, d));
            }
            Op::Sigmoid(a) => {
                let y = node.value.data();
                let d = gd.iter().zip(y).map(|(g, y)| g * y * (1.0 - y)).collect();
                self.accumulate(grads, *a, self.like(*a, d));
            }
            Op::Tanh(a) => {
                let y = node.value.data();
                let d = gd.iter().zip(y).map(|(g, y)| g * (1.0 - y * y)).collect();
                self.accumulate(grads, *a, self.like(*a, d));
            }
            Op::Softmax(a) => {
                let y = node.value.data();
                let d = node.value.last_dim().max(1);
                let mut dx = vec![0.0; y.len()];
                for ((yr, gr), out) in y.chunks(d).zip(gd.chunks(d)).zip(dx.chunks_mut(d)) {
                    let dot: f64 = yr.iter().zip(gr).map(|(a, b)| a * b).sum();
                    for j in 0..d {
                        out[j] = yr[j] * (gr[j] - dot);
                    }
                }
                self.accumulate(grads, *a, self.like(*a, dx));
            }
            Op::LayerNorm {
                x,
                gamma,
                beta,
                xhat,
                rstd,
            } => {
                let gam = self.value(*gamma).data();
                let d = gam.len();
                let mut dgamma = vec![0.0; d];
                let mut dbeta = vec![0.0; d];
                let mut dx = vec![0.0; xhat.len()];
                let mut dxhat = vec![0.0; d];
                for (r, &rs) in rstd.iter().enumerate() {
                    let gr = &gd[r * d..(r + 1) * d];
                    let hr = &xhat[r * d..(r + 1) * d];
                    let mut sum_dh = 0.0;
                    let mut sum_dh_h = 0.0;
                    for j in 0..d {
                        dgamma[j] += gr[j] * hr[j];
                        dbeta[j] += gr[j];
                        dxhat[j] = gr[j] * gam[j];
                        sum_dh += dxhat[j];
                        sum_dh_h += dxhat[j] * hr[j];
                    }
                    let inv_d = 1.0 / d as f64;
                    for j in 0..d {
                        dx[r * d + j] = rs * (dxhat[j] - inv_d * sum_dh - hr[j] * inv_d * sum_dh_h);
                    }
                }
                self.accumulate(grads, *x, self.like(*x, dx));
                self.accumulate(grads, *gamma, self.like(*gamma, dgamma));
                self.accumulate(grads, *beta, self.like(*beta, dbeta));
            }
            Op::Dropout { x, mask } => {
                let d = gd.iter().zip(mask).map(|(g, m)| g * m).collect();
                self.accumulate(grads, *x, self.like(*x, d));
            }
            Op::GatherRows { src, idx } => {
                let t = self.value(*src);
                let d = t.shape()[1];
                let mut ds = vec![0.0; t.len()];
                for (k, &i) in idx.iter().enumerate() {
                    for j in 0..d {
                        ds[i * d + j] += gd[k * d + j];
                    }
                }
                self.accumulate(grads, *src, self.like(*src, ds));
            }
            Op::Sum(a) => {
                let n = self.value(*a).len();
                self.accumulate(grads, *a, self.like(*a, vec![gd[0]; n]));
            }
            Op::Mean(a) => {
                let n = self.value(*a).len();
                self.accumulate(grads, *a, self.like(*a, vec![gd[0] / n.max(1) as f64; n]));
            }
            Op::MseLoss { pred, target } => {
                let p = self.value(*pred).data();
                let c = 2.0 * gd[0] / target.len() as f64;
                let d = p.iter().zip(target).map(|(p, y)| c * (p - y)).collect();
                self.accumulate(grads, *pred, self.like(*pred, d));
            }
        }
    }
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}
