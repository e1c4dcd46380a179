use rayon::prelude::*;

use super::tape::{Tape, Var};
use super::tensor::Tensor;
use crate::error::{Error, Result};

/// Denominator floor for the relative error, so coordinates whose true
/// gradient is ~0 are judged on absolute error.
pub const REL_ERROR_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    /// `(input, element)` of the worst coordinate.
    pub worst: Option<(usize, usize)>,
    pub checked: usize,
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_ERROR_FLOOR)
}

fn evaluate<F>(f: &F, inputs: &[Tensor]) -> Result<f64>
where
    F: Fn(&mut Tape, &[Var]) -> Result<Var>,
{
    let mut tape = Tape::new();
    let vars: Vec<Var> = inputs.iter().map(|t| tape.param(t.clone())).collect();
    let out = f(&mut tape, &vars)?;
    let v = tape.value(out);
    if v.len() != 1 {
        return Err(Error::InvalidParameter("grad_check needs a scalar function".into()));
    }
    Ok(v.item())
}

/// Compares tape gradients of the scalar `f` against central differences
/// with step `eps` at every input coordinate.
pub fn grad_check<F>(inputs: &[Tensor], eps: f64, f: F) -> Result<GradCheckReport>
where
    F: Fn(&mut Tape, &[Var]) -> Result<Var> + Sync,
{
    let mut tape = Tape::new();
    let vars: Vec<Var> = inputs.iter().map(|t| tape.param(t.clone())).collect();
    let out = f(&mut tape, &vars)?;
    let grads = tape.backward(out)?;
    let analytic: Vec<Tensor> = vars
        .iter()
        .zip(inputs)
        .map(|(v, t)| grads.get_or_zeros(*v, t.shape()))
        .collect();
    drop(tape);

    let coords: Vec<(usize, usize)> = inputs
        .iter()
        .enumerate()
        .flat_map(|(k, t)| (0..t.len()).map(move |i| (k, i)))
        .collect();
    let errors: Vec<f64> = coords
        .par_iter()
        .map(|&(k, i)| -> Result<f64> {
            let mut shifted = inputs.to_vec();
            let x = inputs[k].data()[i];
            shifted[k].data_mut()[i] = x + eps;
            let up = evaluate(&f, &shifted)?;
            shifted[k].data_mut()[i] = x - eps;
            let down = evaluate(&f, &shifted)?;
            let numeric = (up - down) / (2.0 * eps);
            Ok(relative_error(analytic[k].data()[i], numeric))
        })
        .collect::<Result<_>>()?;

    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst: None,
        checked: coords.len(),
    };
    for (c, e) in coords.into_iter().zip(errors) {
        if e > report.max_rel_error || e.is_nan() {
            report.max_rel_error = e;
            report.worst = Some(c);
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;
    use rand::Rng;

    fn random(rng: &mut impl Rng, shape: &[usize]) -> Tensor {
        let n = shape.iter().product();
        Tensor::new(shape.to_vec(), (0..n).map(|_| 2.0 * rng.random::<f64>() - 1.0).collect()).unwrap()
    }

    #[test]
    fn square_derivative() {
        let mut tape = Tape::new();
        let x = tape.param(Tensor::scalar(3.0));
        let y = tape.mul(x, x).unwrap();
        let g = tape.backward(y).unwrap();
        assert_eq!(g.get(x).unwrap().item(), 6.0);
    }

    #[test]
    fn sum_of_squares() {
        let x: Vec<f64> = (0..12).map(|i| 0.5 + i as f64 / 24.0).collect();
        let r = grad_check(&[Tensor::matrix(4, 3, x).unwrap()], 1e-5, |t, v| {
            let sq = t.mul(v[0], v[0])?;
            Ok(t.sum(sq))
        })
        .unwrap();
        assert!(r.max_rel_error < 1e-9, "{r:?}");
        assert_eq!(r.checked, 12);
    }

    #[test]
    fn three_layer_tanh_mlp() {
        let mut rng = substream(2, 0, 0);
        let shapes: [&[usize]; 7] = [&[5, 6], &[6, 8], &[8], &[8, 8], &[8], &[8, 1], &[1]];
        let inputs: Vec<Tensor> = shapes.iter().map(|s| random(&mut rng, s)).collect();
        let r = grad_check(&inputs, 1e-5, |t, v| {
            let mut h = v[0];
            for l in 0..3 {
                let z = t.matmul(h, v[1 + 2 * l])?;
                let z = t.add(z, v[2 + 2 * l])?;
                h = t.tanh(z);
            }
            t.mse_loss(h, &[0.1, -0.2, 0.3, 0.0, 0.5])
        })
        .unwrap();
        assert!(r.max_rel_error < 1e-5, "{r:?}");
    }

    type Build = fn(&mut Tape, &[Var]) -> Result<Var>;

    /// Every op, checked through a tanh-weighted sum so that the upstream
    /// gradient is not constant.
    #[test]
    fn every_op_passes_on_random_shapes() {
        let ops: Vec<(&str, usize, Build)> = vec![
            ("matmul", 2, |t, v| t.matmul(v[0], v[1])),
            ("add", 2, |t, v| t.add(v[0], v[1])),
            ("add_broadcast", 2, |t, v| t.add(v[0], v[1])),
            ("sub", 2, |t, v| t.sub(v[0], v[1])),
            ("mul", 2, |t, v| t.mul(v[0], v[1])),
            ("scale", 1, |t, v| Ok(t.scale(v[0], -1.7))),
            ("concat0", 2, |t, v| t.concat(&[v[0], v[1]], 0)),
            ("concat1", 2, |t, v| t.concat(&[v[0], v[1], v[0]], 1)),
            ("slice", 1, |t, v| {
                let c = t.shape(v[0])[1];
                t.slice(v[0], 1, c / 2, c - c / 2)
            }),
            ("transpose", 1, |t, v| t.transpose(v[0])),
            ("relu", 1, |t, v| Ok(t.relu(v[0]))),
            ("sigmoid", 1, |t, v| Ok(t.sigmoid(v[0]))),
            ("tanh", 1, |t, v| Ok(t.tanh(v[0]))),
            ("softmax", 1, |t, v| Ok(t.softmax(v[0]))),
            ("layer_norm", 3, |t, v| t.layer_norm(v[0], v[1], v[2])),
            ("dropout", 1, |t, v| {
                let mut rng = substream(99, 0, 0);
                t.dropout(v[0], 0.3, Some(&mut rng))
            }),
            ("gather_rows", 1, |t, v| {
                let r = t.shape(v[0])[0];
                t.gather_rows(v[0], &[r - 1, 0, r - 1])
            }),
            ("mean", 1, |t, v| Ok(t.mean(v[0]))),
            ("mse", 1, |t, v| {
                let n = t.value(v[0]).len();
                let target: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
                t.mse_loss(v[0], &target)
            }),
        ];
        let mut rng = substream(3, 0, 0);
        for (name, arity, build) in ops {
            for trial in 0..100 {
                let r = rng.random_range(1..5usize);
                let c = rng.random_range(1..5usize);
                let inputs: Vec<Tensor> = match (name, arity) {
                    ("matmul", _) => {
                        let k = rng.random_range(1..5usize);
                        vec![random(&mut rng, &[r, k]), random(&mut rng, &[k, c])]
                    }
                    ("add_broadcast", _) => vec![random(&mut rng, &[r, c]), random(&mut rng, &[c])],
                    ("concat0", _) => {
                        let r2 = rng.random_range(1..5usize);
                        vec![random(&mut rng, &[r, c]), random(&mut rng, &[r2, c])]
                    }
                    ("concat1", _) => {
                        let c2 = rng.random_range(1..5usize);
                        vec![random(&mut rng, &[r, c]), random(&mut rng, &[r, c2])]
                    }
                    ("layer_norm", _) => {
                        let c = rng.random_range(2..6usize);
                        vec![random(&mut rng, &[r, c]), random(&mut rng, &[c]), random(&mut rng, &[c])]
                    }
                    (_, 1) => vec![random(&mut rng, &[r, c])],
                    _ => vec![random(&mut rng, &[r, c]), random(&mut rng, &[r, c])],
                };
                let weights = {
                    let mut t = Tape::new();
                    let vs: Vec<Var> = inputs.iter().map(|x| t.constant(x.clone())).collect();
                    let out = build(&mut t, &vs).unwrap();
                    random(&mut rng, t.shape(out))
                };
                let report = grad_check(&inputs, 1e-5, |t, v| {
                    let out = build(t, v)?;
                    let w = t.constant(weights.clone());
                    let th = t.tanh(out);
                    let prod = t.mul(th, w)?;
                    Ok(t.sum(prod))
                })
                .unwrap();
                assert!(
                    report.max_rel_error < 1e-4,
                    "{name} trial {trial}: {report:?} for shapes {:?}",
                    inputs.iter().map(|x| x.shape().to_vec()).collect::<Vec<_>>()
                );
            }
        }
    }

    #[test]
    fn fan_out_accumulates() {
        let mut tape = Tape::new();
        let x = tape.param(Tensor::vector(vec![2.0, -1.0]));
        let a = tape.scale(x, 3.0);
        let b = tape.mul(x, x).unwrap();
        let s = tape.add(a, b).unwrap();
        let s = tape.add(s, x).unwrap();
        let l = tape.sum(s);
        let g = tape.backward(l).unwrap();
        // d/dx (3x + x^2 + x) = 4 + 2x
        assert_eq!(g.get(x).unwrap().data(), &[8.0, 2.0]);
    }

    #[test]
    fn replay_is_bit_identical() {
        let run = || {
            let mut rng = substream(5, 1, 2);
            let mut t = Tape::new();
            let x = t.param(random(&mut substream(4, 0, 0), &[6, 5]));
            let d = t.dropout(x, 0.1, Some(&mut rng)).unwrap();
            let s = t.softmax(d);
            let l = t.mse_loss(s, &[0.2; 30]).unwrap();
            let g = t.backward(l).unwrap();
            (t.value(l).item().to_bits(), g.get(x).unwrap().clone())
        };
        assert_eq!(run(), run());
    }
}
