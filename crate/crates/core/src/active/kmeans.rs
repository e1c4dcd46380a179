use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng::{domain, substream};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KMeansOptions {
    pub max_iter: usize,
    /// Converged once no centroid moves farther than this.
    pub tol: f64,
}

impl Default for KMeansOptions {
    fn default() -> Self {
        KMeansOptions {
            max_iter: 300,
            tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterResult {
    pub k: usize,
    pub dim: usize,
    /// Cluster id per point.
    pub assignments: Vec<usize>,
    /// Row-major `k * dim`.
    pub centroids: Vec<f64>,
    /// Point closest to its centroid, one per non-empty cluster in cluster
    /// order. Ties go to the lowest point index.
    pub cores: Vec<usize>,
    /// Within-cluster sum of squares after every assignment step.
    pub objective: Vec<f64>,
    pub iterations: usize,
}

impl ClusterResult {
    pub fn centroid(&self, c: usize) -> &[f64] {
        &self.centroids[c * self.dim..(c + 1) * self.dim]
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &c in &self.assignments {
            sizes[c] += 1;
        }
        sizes
    }
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// k-means++ seeding: first center uniform, then each next center drawn with
/// probability proportional to squared distance from the nearest chosen one.
fn seed_centers<R: Rng>(points: &[f64], dim: usize, k: usize, rng: &mut R) -> Vec<f64> {
    let n = points.len() / dim;
    let row = |i: usize| &points[i * dim..(i + 1) * dim];
    let mut centers = Vec::with_capacity(k * dim);
    let first = rng.random_range(0..n);
    centers.extend_from_slice(row(first));
    let mut d2: Vec<f64> = (0..n).map(|i| dist2(row(i), row(first))).collect();
    for _ in 1..k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = None;
            for (i, &w) in d2.iter().enumerate() {
                if w > 0.0 {
                    chosen = Some(i);
                    if target < w {
                        break;
                    }
                    target -= w;
                }
            }
            chosen.expect("positive total has a positive weight")
        } else {
            rng.random_range(0..n)
        };
        centers.extend_from_slice(row(pick));
        for (i, d) in d2.iter_mut().enumerate() {
            *d = d.min(dist2(row(i), row(pick)));
        }
    }
    centers
}

fn assign(points: &[f64], dim: usize, centers: &[f64]) -> Vec<(usize, f64)> {
    let k = centers.len() / dim;
    points
        .par_chunks(dim)
        .map(|p| {
            let mut best = (0, f64::INFINITY);
            for c in 0..k {
                let d = dist2(p, &centers[c * dim..(c + 1) * dim]);
                if d < best.1 {
                    best = (c, d);
                }
            }
            best
        })
        .collect()
}

/// Lloyd's algorithm over `points` (row-major, `dim` columns) with k-means++
/// seeding drawn from the clustering stream of `seed`.
pub fn kmeans(points: &[f64], dim: usize, k: usize, seed: u64, opts: &KMeansOptions) -> Result<ClusterResult> {
    if dim == 0 || points.len() % dim != 0 {
        return Err(Error::InvalidParameter(format!(
            "{} values do not form rows of width {dim}",
            points.len()
        )));
    }
    let n = points.len() / dim;
    if k == 0 || k > n {
        return Err(Error::InvalidParameter(format!("k = {k} must be in 1..={n}")));
    }
    if points.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidParameter("non-finite point coordinate".into()));
    }
    let row = |i: usize| &points[i * dim..(i + 1) * dim];
    let mut rng = substream(seed ^ domain::KMEANS, 0, 0);
    let mut centers = seed_centers(points, dim, k, &mut rng);
    let mut objective = Vec::new();
    let mut assignments = vec![0; n];
    let mut iterations = 0;
    while iterations < opts.max_iter.max(1) {
        iterations += 1;
        let nearest = assign(points, dim, &centers);
        objective.push(nearest.iter().map(|&(_, d)| d).sum());
        assignments = nearest.iter().map(|&(c, _)| c).collect();

        let mut sums = vec![0.0; k * dim];
        let mut counts = vec![0usize; k];
        for (i, &c) in assignments.iter().enumerate() {
            counts[c] += 1;
            for (s, x) in sums[c * dim..(c + 1) * dim].iter_mut().zip(row(i)) {
                *s += x;
            }
        }
        let mut updated = centers.clone();
        let mut taken = vec![false; n];
        for c in 0..k {
            let slot = &mut updated[c * dim..(c + 1) * dim];
            if counts[c] > 0 {
                for (u, s) in slot.iter_mut().zip(&sums[c * dim..(c + 1) * dim]) {
                    *u = s / counts[c] as f64;
                }
            } else {
                // Empty cluster: move it onto the point worst served by its
                // current centroid.
                let far = (0..n)
                    .filter(|&i| !taken[i])
                    .max_by(|&a, &b| nearest[a].1.total_cmp(&nearest[b].1).then(b.cmp(&a)));
                if let Some(i) = far {
                    taken[i] = true;
                    slot.copy_from_slice(row(i));
                }
            }
        }
        let shift = (0..k)
            .map(|c| dist2(&updated[c * dim..(c + 1) * dim], &centers[c * dim..(c + 1) * dim]).sqrt())
            .fold(0.0, f64::max);
        centers = updated;
        if shift < opts.tol {
            break;
        }
    }

    let mut best: Vec<Option<(usize, f64)>> = vec![None; k];
    for (i, &c) in assignments.iter().enumerate() {
        let d = dist2(row(i), &centers[c * dim..(c + 1) * dim]);
        if best[c].is_none_or(|(_, bd)| d < bd) {
            best[c] = Some((i, d));
        }
    }
    Ok(ClusterResult {
        k,
        dim,
        assignments,
        centroids: centers,
        cores: best.into_iter().flatten().map(|(i, _)| i).collect(),
        objective,
        iterations,
    })
}
