//! Rank agreement between node score sequences.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::CentralityVector;
use crate::table::fmt_real;

/// Per-node scores from one method.
pub type ScoreSequence = CentralityVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TauVariant {
    TauA,
    #[default]
    TauB,
}

fn check_finite(xs: &[f64]) -> Result<()> {
    match xs.iter().position(|x| !x.is_finite()) {
        Some(i) => Err(Error::InvalidParameter(format!("score at node {i} is not finite"))),
        None => Ok(()),
    }
}

/// Node ids by descending score, ties by ascending id.
pub fn rank_order(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order
}

/// Pair counts behind Kendall's tau.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairCounts {
    pub pairs: u64,
    /// Pairs tied in the first sequence.
    pub ties_a: u64,
    /// Pairs tied in the second sequence.
    pub ties_b: u64,
    /// Concordant minus discordant pairs.
    pub score: i64,
}

impl PairCounts {
    pub fn tau(&self, variant: TauVariant) -> f64 {
        let num = self.score as f64;
        let den = match variant {
            TauVariant::TauA => self.pairs as f64,
            TauVariant::TauB => (((self.pairs - self.ties_a) as f64) * ((self.pairs - self.ties_b) as f64)).sqrt(),
        };
        if den == 0.0 {
            0.0
        } else {
            num / den
        }
    }
}

fn tied_pairs(sorted: &[f64]) -> u64 {
    let mut total = 0u64;
    let mut run = 1u64;
    for w in sorted.windows(2) {
        if w[0] == w[1] {
            run += 1;
        } else {
            total += run * (run - 1) / 2;
            run = 1;
        }
    }
    total + run * (run - 1) / 2
}

/// Sorts `v` and returns the number of inversions.
fn merge_count(v: &mut [f64], buf: &mut Vec<f64>) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut swaps = merge_count(&mut v[..mid], buf) + merge_count(&mut v[mid..], buf);
    buf.clear();
    let (mut i, mut j) = (0, mid);
    while i < mid && j < n {
        if v[j] < v[i] {
            buf.push(v[j]);
            swaps += (mid - i) as u64;
            j += 1;
        } else {
            buf.push(v[i]);
            i += 1;
        }
    }
    buf.extend_from_slice(&v[i..mid]);
    buf.extend_from_slice(&v[j..n]);
    v.copy_from_slice(buf);
    swaps
}

/// Kendall pair counts in `O(l log l)` by merge-sort inversion counting.
pub fn pair_counts(a: &[f64], b: &[f64]) -> Result<PairCounts> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(a.len(), b.len()));
    }
    if a.len() < 2 {
        return Err(Error::InvalidParameter("kendall tau needs at least 2 entries".into()));
    }
    check_finite(a)?;
    check_finite(b)?;
    let n = a.len() as u64;
    let mut idx: Vec<usize> = (0..a.len()).collect();
    idx.sort_by(|&i, &j| a[i].total_cmp(&a[j]).then(b[i].total_cmp(&b[j])));

    let mut ties_a = 0u64;
    let mut ties_ab = 0u64;
    let (mut run_a, mut run_ab) = (1u64, 1u64);
    for w in idx.windows(2) {
        let (p, q) = (w[0], w[1]);
        if a[p] == a[q] {
            run_a += 1;
            if b[p] == b[q] {
                run_ab += 1;
            } else {
                ties_ab += run_ab * (run_ab - 1) / 2;
                run_ab = 1;
            }
        } else {
            ties_a += run_a * (run_a - 1) / 2;
            ties_ab += run_ab * (run_ab - 1) / 2;
            run_a = 1;
            run_ab = 1;
        }
    }
    ties_a += run_a * (run_a - 1) / 2;
    ties_ab += run_ab * (run_ab - 1) / 2;

    let mut bs: Vec<f64> = idx.iter().map(|&i| b[i]).collect();
    let mut buf = Vec::with_capacity(bs.len());
    let swaps = merge_count(&mut bs, &mut buf);
    let ties_b = tied_pairs(&bs);
    let pairs = n * (n - 1) / 2;
    let score = pairs as i64 - ties_a as i64 - ties_b as i64 + ties_ab as i64 - 2 * swaps as i64;
    Ok(PairCounts {
        pairs,
        ties_a,
        ties_b,
        score,
    })
}

/// Kendall rank correlation. A sequence with no untied pairs has an
/// undefined tau_b, reported as 0.
pub fn kendall_tau(a: &[f64], b: &[f64], variant: TauVariant) -> Result<f64> {
    Ok(pair_counts(a, b)?.tau(variant))
}

/// The `k` highest-scored nodes, ties by ascending id.
pub fn top_k(scores: &[f64], k: usize) -> Vec<usize> {
    let mut order = rank_order(scores);
    order.truncate(k);
    order
}

/// Jaccard similarity of the top-`k` node sets.
pub fn jaccard_topk(a: &[f64], b: &[f64], k: usize) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(a.len(), b.len()));
    }
    if k == 0 || k > a.len() {
        return Err(Error::InvalidParameter(format!("k = {k} outside 1..={}", a.len())));
    }
    check_finite(a)?;
    check_finite(b)?;
    let mut in_u = vec![false; a.len()];
    for v in top_k(a, k) {
        in_u[v] = true;
    }
    let inter = top_k(b, k).into_iter().filter(|&v| in_u[v]).count();
    Ok(inter as f64 / (2 * k - inter) as f64)
}

/// Pairwise Kendall correlations between methods.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodMatrix {
    pub methods: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

impl MethodMatrix {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i][j]
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("method");
        for m in &self.methods {
            out.push(',');
            out.push_str(m);
        }
        out.push('\n');
        for (m, row) in self.methods.iter().zip(&self.values) {
            out.push_str(m);
            for &v in row {
                let _ = write!(out, ",{}", fmt_real(v));
            }
            out.push('\n');
        }
        out
    }
}

pub fn method_matrix(sequences: &[ScoreSequence], variant: TauVariant) -> Result<MethodMatrix> {
    if sequences.len() < 2 {
        return Err(Error::InvalidParameter("method matrix needs at least 2 sequences".into()));
    }
    let k = sequences.len();
    let pairs: Vec<(usize, usize)> = (0..k).flat_map(|i| (i + 1..k).map(move |j| (i, j))).collect();
    let taus = pairs
        .par_iter()
        .map(|&(i, j)| kendall_tau(&sequences[i].scores, &sequences[j].scores, variant))
        .collect::<Result<Vec<f64>>>()?;
    let mut values = vec![vec![1.0; k]; k];
    for (&(i, j), t) in pairs.iter().zip(taus) {
        values[i][j] = t;
        values[j][i] = t;
    }
    Ok(MethodMatrix {
        methods: sequences.iter().map(|s| s.method.clone()).collect(),
        values,
    })
}
