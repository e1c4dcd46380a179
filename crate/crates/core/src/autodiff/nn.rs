use super::tape::{Tape, Var};
use crate::error::{Error, Result};

/// `x W + b`.
pub fn linear(tape: &mut Tape, x: Var, w: Var, b: Var) -> Result<Var> {
    let xw = tape.matmul(x, w)?;
    tape.add(xw, b)
}

/// LSTM weights with gates stacked in the order input, forget, candidate,
/// output: `w_ih` is `[d_in, 4h]`, `w_hh` is `[h, 4h]`, `bias` is `[4h]`.
#[derive(Debug, Clone, Copy)]
pub struct LstmVars {
    pub w_ih: Var,
    pub w_hh: Var,
    pub bias: Var,
}

/// One LSTM step for a batch: `x` is `[b, d_in]`, `h` and `c` are `[b, h]`.
pub fn lstm_cell(tape: &mut Tape, x: Var, h: Var, c: Var, p: &LstmVars) -> Result<(Var, Var)> {
    let hidden = tape.shape(p.w_hh)[0];
    if tape.shape(p.w_hh) != [hidden, 4 * hidden] || tape.shape(p.bias) != [4 * hidden] {
        return Err(Error::ShapeMismatch {
            op: "lstm_cell",
            lhs: tape.shape(p.w_hh).to_vec(),
            rhs: tape.shape(p.bias).to_vec(),
        });
    }
    if tape.shape(h) != tape.shape(c) || tape.shape(h).last() != Some(&hidden) {
        return Err(Error::ShapeMismatch {
            op: "lstm_cell",
            lhs: tape.shape(h).to_vec(),
            rhs: tape.shape(c).to_vec(),
        });
    }
    let xi = tape.matmul(x, p.w_ih)?;
    let hh = tape.matmul(h, p.w_hh)?;
    let pre = tape.add(xi, hh)?;
    let gates = tape.add(pre, p.bias)?;
    let gate = |tape: &mut Tape, k: usize| tape.slice(gates, 1, k * hidden, hidden);
    let i = gate(tape, 0)?;
    let i = tape.sigmoid(i);
    let f = gate(tape, 1)?;
    let f = tape.sigmoid(f);
    let g = gate(tape, 2)?;
    let g = tape.tanh(g);
    let o = gate(tape, 3)?;
    let o = tape.sigmoid(o);
    let keep = tape.mul(f, c)?;
    let write = tape.mul(i, g)?;
    let c_next = tape.add(keep, write)?;
    let squashed = tape.tanh(c_next);
    let h_next = tape.mul(o, squashed)?;
    Ok((h_next, c_next))
}

/// Projections of a multi-head attention block, all `[d, d]` / `[d]`.
#[derive(Debug, Clone, Copy)]
pub struct AttentionVars {
    pub wq: Var,
    pub bq: Var,
    pub wk: Var,
    pub bk: Var,
    pub wv: Var,
    pub bv: Var,
    pub wo: Var,
    pub bo: Var,
}

#[derive(Debug, Clone)]
pub struct Attention {
    pub output: Var,
    /// Per-head `[len_q, len_k]` weight matrices.
    pub weights: Vec<Var>,
}

/// Scaled dot-product attention with `heads` heads. `query` is `[lq, d]`,
/// `memory` (keys and values) is `[lk, d]`. `mask`, if given, is an
/// `[lq, lk]` additive bias applied to every head's scores.
pub fn multi_head_attention(
    tape: &mut Tape,
    query: Var,
    memory: Var,
    heads: usize,
    p: &AttentionVars,
    mask: Option<Var>,
) -> Result<Attention> {
    let d = *tape.shape(query).last().unwrap_or(&0);
    if heads == 0 || d % heads != 0 {
        return Err(Error::InvalidParameter(format!(
            "model dim {d} is not divisible by {heads} heads"
        )));
    }
    let dk = d / heads;
    let q = linear(tape, query, p.wq, p.bq)?;
    let k = linear(tape, memory, p.wk, p.bk)?;
    let v = linear(tape, memory, p.wv, p.bv)?;
    let scale = 1.0 / (dk as f64).sqrt();
    let mut outs = Vec::with_capacity(heads);
    let mut weights = Vec::with_capacity(heads);
    for h in 0..heads {
        let qh = tape.slice(q, 1, h * dk, dk)?;
        let kh = tape.slice(k, 1, h * dk, dk)?;
        let vh = tape.slice(v, 1, h * dk, dk)?;
        let kt = tape.transpose(kh)?;
        let raw = tape.matmul(qh, kt)?;
        let mut scores = tape.scale(raw, scale);
        if let Some(m) = mask {
            scores = tape.add(scores, m)?;
        }
        let a = tape.softmax(scores);
        outs.push(tape.matmul(a, vh)?);
        weights.push(a);
    }
    let joined = tape.concat(&outs, 1)?;
    let output = linear(tape, joined, p.wo, p.bo)?;
    Ok(Attention { output, weights })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::check::grad_check;
    use crate::autodiff::tensor::Tensor;
    use crate::rng::substream;
    use rand::Rng;

    fn random(rng: &mut impl Rng, shape: &[usize], scale: f64) -> Tensor {
        let n = shape.iter().product();
        Tensor::new(shape.to_vec(), (0..n).map(|_| scale * (2.0 * rng.random::<f64>() - 1.0)).collect()).unwrap()
    }

    #[test]
    fn zero_lstm_gives_zero_hidden() {
        let mut tape = Tape::new();
        let x = tape.constant(Tensor::full(&[3, 4], 0.7));
        let h = tape.constant(Tensor::zeros(&[3, 5]));
        let c = tape.constant(Tensor::zeros(&[3, 5]));
        let p = LstmVars {
            w_ih: tape.param(Tensor::zeros(&[4, 20])),
            w_hh: tape.param(Tensor::zeros(&[5, 20])),
            bias: tape.param(Tensor::zeros(&[20])),
        };
        let (h1, c1) = lstm_cell(&mut tape, x, h, c, &p).unwrap();
        assert!(tape.value(h1).data().iter().all(|&v| v == 0.0));
        assert!(tape.value(c1).data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn lstm_matches_hand_computation() {
        // Scalar cell: all weights 1, bias 0, x = 1, h = 0, c = 0.5.
        let mut tape = Tape::new();
        let x = tape.constant(Tensor::full(&[1, 1], 1.0));
        let h = tape.constant(Tensor::zeros(&[1, 1]));
        let c = tape.constant(Tensor::full(&[1, 1], 0.5));
        let p = LstmVars {
            w_ih: tape.param(Tensor::full(&[1, 4], 1.0)),
            w_hh: tape.param(Tensor::full(&[1, 4], 1.0)),
            bias: tape.param(Tensor::zeros(&[4])),
        };
        let (h1, c1) = lstm_cell(&mut tape, x, h, c, &p).unwrap();
        let s = 1.0 / (1.0 + (-1.0f64).exp());
        let c_exp = s * 0.5 + s * 1.0f64.tanh();
        assert!((tape.value(c1).item() - c_exp).abs() < 1e-15);
        assert!((tape.value(h1).item() - s * c_exp.tanh()).abs() < 1e-15);
    }

    #[test]
    fn lstm_gradients() {
        let mut rng = substream(11, 0, 0);
        let inputs = vec![
            random(&mut rng, &[3, 4], 1.0),
            random(&mut rng, &[3, 5], 1.0),
            random(&mut rng, &[3, 5], 1.0),
            random(&mut rng, &[4, 20], 0.5),
            random(&mut rng, &[5, 20], 0.5),
            random(&mut rng, &[20], 0.5),
        ];
        let report = grad_check(&inputs, 1e-5, |tape, v| {
            let p = LstmVars {
                w_ih: v[3],
                w_hh: v[4],
                bias: v[5],
            };
            let (h, c) = lstm_cell(tape, v[0], v[1], v[2], &p)?;
            let hc = tape.mul(h, c)?;
            let s = tape.add(h, hc)?;
            Ok(tape.sum(s))
        })
        .unwrap();
        assert!(report.max_rel_error < 1e-4, "{report:?}");
    }

    fn attention_inputs(rng: &mut impl Rng, lq: usize, lk: usize, d: usize) -> Vec<Tensor> {
        let mut v = vec![random(rng, &[lq, d], 1.0), random(rng, &[lk, d], 1.0)];
        for _ in 0..4 {
            v.push(random(rng, &[d, d], 0.4));
            v.push(random(rng, &[d], 0.2));
        }
        v
    }

    fn vars(v: &[Var]) -> AttentionVars {
        AttentionVars {
            wq: v[2],
            bq: v[3],
            wk: v[4],
            bk: v[5],
            wv: v[6],
            bv: v[7],
            wo: v[8],
            bo: v[9],
        }
    }

    #[test]
    fn attention_weights_sum_to_one() {
        let mut rng = substream(12, 0, 0);
        let inputs = attention_inputs(&mut rng, 5, 7, 8);
        let mut tape = Tape::new();
        let v: Vec<Var> = inputs.iter().map(|t| tape.constant(t.clone())).collect();
        let att = multi_head_attention(&mut tape, v[0], v[1], 4, &vars(&v), None).unwrap();
        assert_eq!(tape.shape(att.output), &[5, 8]);
        assert_eq!(att.weights.len(), 4);
        for w in &att.weights {
            for r in 0..5 {
                let s: f64 = tape.value(*w).row(r).iter().sum();
                assert!((s - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn attention_over_one_element_passes_values_through() {
        let mut rng = substream(13, 0, 0);
        let inputs = attention_inputs(&mut rng, 1, 1, 8);
        let mut tape = Tape::new();
        let v: Vec<Var> = inputs.iter().map(|t| tape.constant(t.clone())).collect();
        let p = vars(&v);
        let att = multi_head_attention(&mut tape, v[0], v[1], 4, &p, None).unwrap();
        let vv = linear(&mut tape, v[1], p.wv, p.bv).unwrap();
        let expect = linear(&mut tape, vv, p.wo, p.bo).unwrap();
        for (a, b) in tape.value(att.output).data().iter().zip(tape.value(expect).data()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn attention_rejects_indivisible_heads() {
        let mut rng = substream(14, 0, 0);
        let inputs = attention_inputs(&mut rng, 2, 2, 6);
        let mut tape = Tape::new();
        let v: Vec<Var> = inputs.iter().map(|t| tape.constant(t.clone())).collect();
        assert!(multi_head_attention(&mut tape, v[0], v[1], 4, &vars(&v), None).is_err());
    }

    #[test]
    fn attention_gradients() {
        let mut rng = substream(15, 0, 0);
        let inputs = attention_inputs(&mut rng, 4, 3, 8);
        let mask = Tensor::new(
            vec![4, 3],
            vec![0.0, -1e9, 0.0, 0.0, 0.0, 0.0, -1e9, 0.0, 0.0, 0.0, 0.0, -1e9],
        )
        .unwrap();
        let report = grad_check(&inputs, 1e-5, |tape, v| {
            let m = tape.constant(mask.clone());
            let att = multi_head_attention(tape, v[0], v[1], 2, &vars(v), Some(m))?;
            let t = tape.tanh(att.output);
            Ok(tape.sum(t))
        })
        .unwrap();
        assert!(report.max_rel_error < 1e-4, "{report:?}");
    }
}
