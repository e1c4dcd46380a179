//! Structural node descriptors and the standardized feature matrix fed to the
//! influence regressor.

use std::collections::BTreeSet;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::table;

pub const NUM_FEATURES: usize = 10;

/// Column order of [`FeatureMatrix`]. Checkpoints store this list and refuse to
/// load against a different one.
pub const FEATURE_NAMES: [&str; NUM_FEATURES] = [
    "degree",
    "two_hop_size",
    "neighbor_degree_sum",
    "neighbor_degree_mean",
    "clustering",
    "triangles",
    "k_shell",
    "neighbor_k_shell_mean",
    "h_index",
    "pagerank",
];

/// Per-node scores from one method.
#[derive(Debug, Clone, PartialEq)]
pub struct CentralityVector {
    pub method: String,
    pub scores: Vec<f64>,
}

impl CentralityVector {
    pub fn new(method: impl Into<String>, scores: Vec<f64>) -> Self {
        CentralityVector {
            method: method.into(),
            scores,
        }
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn to_csv(&self) -> String {
        table::write_columns(&[self.method.as_str()], self.scores.len(), |_, v| {
            self.scores[v]
        })
    }
}

/// Coreness by iterative peeling. Among minimum-degree nodes the lowest id is
/// removed first.
pub fn k_shell(g: &Graph) -> CentralityVector {
    let n = g.num_nodes();
    let mut deg: Vec<usize> = g.degrees();
    let mut queue: BTreeSet<(usize, usize)> = (0..n).map(|v| (deg[v], v)).collect();
    let mut removed = vec![false; n];
    let mut core = vec![0usize; n];
    let mut level = 0;
    while let Some((d, v)) = queue.pop_first() {
        level = level.max(d);
        core[v] = level;
        removed[v] = true;
        for &w in g.neighbors(v) {
            if !removed[w] && deg[w] > 0 {
                queue.remove(&(deg[w], w));
                deg[w] -= 1;
                queue.insert((deg[w], w));
            }
        }
    }
    CentralityVector::new("k_shell", core.into_iter().map(|c| c as f64).collect())
}

/// Largest `h` with at least `h` neighbors of degree `>= h`.
pub fn h_index_of(neighbor_degrees: &mut [usize]) -> usize {
    neighbor_degrees.sort_unstable_by(|a, b| b.cmp(a));
    neighbor_degrees
        .iter()
        .enumerate()
        .take_while(|&(i, &d)| d > i)
        .count()
}

pub fn h_index(g: &Graph) -> CentralityVector {
    let scores = (0..g.num_nodes())
        .map(|v| {
            let mut ds: Vec<usize> = g.neighbors(v).iter().map(|&w| g.degree(w)).collect();
            h_index_of(&mut ds) as f64
        })
        .collect();
    CentralityVector::new("h_index", scores)
}

fn sorted_intersection_len(a: &[usize], b: &[usize]) -> usize {
    let (mut i, mut j, mut count) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                count += 1;
                i += 1;
                j += 1;
            }
        }
    }
    count
}

/// Triangles through each node.
pub fn triangles(g: &Graph) -> Vec<usize> {
    (0..g.num_nodes())
        .into_par_iter()
        .map(|v| {
            let nv = g.neighbors(v);
            nv.iter()
                .map(|&u| sorted_intersection_len(nv, g.neighbors(u)))
                .sum::<usize>()
                / 2
        })
        .collect()
}

pub fn clustering_coefficient(g: &Graph) -> CentralityVector {
    let tri = triangles(g);
    let scores = (0..g.num_nodes())
        .map(|v| {
            let d = g.degree(v);
            if d < 2 {
                0.0
            } else {
                2.0 * tri[v] as f64 / (d * (d - 1)) as f64
            }
        })
        .collect();
    CentralityVector::new("clustering", scores)
}

pub const PAGERANK_MAX_ITER: usize = 1000;

/// Power-iteration PageRank; isolated nodes spread their mass uniformly.
pub fn pagerank(g: &Graph, damping: f64, tol: f64) -> Result<CentralityVector> {
    let n = g.num_nodes();
    if n == 0 {
        return Err(Error::InvalidParameter("pagerank on empty graph".into()));
    }
    let nf = n as f64;
    let mut rank = vec![1.0 / nf; n];
    let mut next = vec![0.0; n];
    let mut residual = f64::INFINITY;
    for _ in 0..PAGERANK_MAX_ITER {
        let dangling: f64 = (0..n).filter(|&v| g.degree(v) == 0).map(|v| rank[v]).sum();
        let base = (1.0 - damping) / nf + damping * dangling / nf;
        for (v, slot) in next.iter_mut().enumerate() {
            let inflow: f64 = g
                .neighbors(v)
                .iter()
                .map(|&u| rank[u] / g.degree(u) as f64)
                .sum();
            *slot = base + damping * inflow;
        }
        // Renormalize against drift so the L1 sum stays at 1.
        let total: f64 = next.iter().sum();
        next.iter_mut().for_each(|x| *x /= total);
        residual = rank.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut rank, &mut next);
        if residual < tol {
            return Ok(CentralityVector::new("pagerank", rank));
        }
    }
    Err(Error::NoConvergence {
        iterations: PAGERANK_MAX_ITER,
        residual,
    })
}

pub fn degree_centrality(g: &Graph) -> CentralityVector {
    CentralityVector::new("degree", g.degrees().into_iter().map(|d| d as f64).collect())
}

/// Number of distinct nodes at distance 1 or 2 from `v`.
fn two_hop_size(g: &Graph, v: usize, mark: &mut [usize], stamp: usize) -> usize {
    mark[v] = stamp;
    let mut count = 0;
    for &u in g.neighbors(v) {
        if mark[u] != stamp {
            mark[u] = stamp;
            count += 1;
        }
        for &w in g.neighbors(u) {
            if mark[w] != stamp {
                mark[w] = stamp;
                count += 1;
            }
        }
    }
    count
}

/// Raw (unstandardized) feature columns, in [`FEATURE_NAMES`] order.
pub fn raw_features(g: &Graph) -> Result<Vec<[f64; NUM_FEATURES]>> {
    let n = g.num_nodes();
    let deg: Vec<f64> = g.degrees().into_iter().map(|d| d as f64).collect();
    let tri = triangles(g);
    let clust = clustering_coefficient(g).scores;
    let core = k_shell(g).scores;
    let hidx = h_index(g).scores;
    let pr = pagerank(g, 0.85, 1e-9)?.scores;
    let mut mark = vec![usize::MAX; n];
    let mut rows = Vec::with_capacity(n);
    for v in 0..n {
        let nb = g.neighbors(v);
        let d = nb.len();
        let nsum: f64 = nb.iter().map(|&u| deg[u]).sum();
        let (nmean, core_mean) = if d == 0 {
            (0.0, 0.0)
        } else {
            (
                nsum / d as f64,
                nb.iter().map(|&u| core[u]).sum::<f64>() / d as f64,
            )
        };
        rows.push([
            deg[v],
            two_hop_size(g, v, &mut mark, v) as f64,
            nsum,
            nmean,
            clust[v],
            tri[v] as f64,
            core[v],
            core_mean,
            hidx[v],
            pr[v],
        ]);
    }
    Ok(rows)
}

/// N x 10 per-network z-scored features.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    /// Row-major, `num_nodes * NUM_FEATURES`.
    pub values: Vec<f64>,
    pub num_nodes: usize,
    pub means: [f64; NUM_FEATURES],
    /// Population standard deviations; zero marks a constant column, which is
    /// emitted as all zeros.
    pub stds: [f64; NUM_FEATURES],
}

impl FeatureMatrix {
    pub fn feature_names() -> Vec<String> {
        FEATURE_NAMES.iter().map(|s| s.to_string()).collect()
    }

    pub fn row(&self, v: usize) -> &[f64] {
        &self.values[v * NUM_FEATURES..(v + 1) * NUM_FEATURES]
    }

    pub fn get(&self, v: usize, col: usize) -> f64 {
        self.values[v * NUM_FEATURES + col]
    }

    pub fn from_raw(rows: &[[f64; NUM_FEATURES]]) -> FeatureMatrix {
        let n = rows.len();
        let nf = n.max(1) as f64;
        let mut means = [0.0; NUM_FEATURES];
        let mut stds = [0.0; NUM_FEATURES];
        for c in 0..NUM_FEATURES {
            let mean = rows.iter().map(|r| r[c]).sum::<f64>() / nf;
            let var = rows.iter().map(|r| (r[c] - mean).powi(2)).sum::<f64>() / nf;
            let std = var.sqrt();
            means[c] = mean;
            // Relative cutoff: a column that differs only by rounding noise is
            // constant.
            stds[c] = if std <= 1e-12 * mean.abs().max(1.0) { 0.0 } else { std };
        }
        let mut values = Vec::with_capacity(n * NUM_FEATURES);
        for r in rows {
            for c in 0..NUM_FEATURES {
                values.push(if stds[c] == 0.0 {
                    0.0
                } else {
                    (r[c] - means[c]) / stds[c]
                });
            }
        }
        FeatureMatrix {
            values,
            num_nodes: n,
            means,
            stds,
        }
    }

    pub fn to_csv(&self) -> String {
        table::write_columns(&FEATURE_NAMES, self.num_nodes, |c, v| self.get(v, c))
    }
}

pub fn feature_matrix(g: &Graph) -> Result<FeatureMatrix> {
    Ok(FeatureMatrix::from_raw(&raw_features(g)?))
}
