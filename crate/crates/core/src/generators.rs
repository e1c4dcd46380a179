//! Synthetic network families used for pre-training.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::rng::{domain, substream};

/// Erdős–Rényi G(n, p).
pub fn gen_er(n: usize, p: f64, seed: u64) -> Result<Graph> {
    if n == 0 {
        return Err(Error::InvalidParameter("ER: n must be >= 1".into()));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!("ER: p = {p} not in [0, 1]")));
    }
    let mut rng = substream(seed, domain::GENERATOR, 0);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.random::<f64>() < p {
                edges.push((u, v));
            }
        }
    }
    Graph::from_edges(n, edges)
}

/// Barabási–Albert preferential attachment. Starts from a clique on `m + 1`
/// nodes; every later node attaches to `m` distinct existing nodes chosen
/// proportionally to degree.
pub fn gen_ba(n: usize, m: usize, seed: u64) -> Result<Graph> {
    if m < 1 || m >= n {
        return Err(Error::InvalidParameter(format!(
            "BA: need 1 <= m < n, got m = {m}, n = {n}"
        )));
    }
    let mut rng = substream(seed, domain::GENERATOR, 1);
    let mut edges = Vec::with_capacity(m * n);
    // Each endpoint appears once per incident edge, so uniform sampling from
    // this list is degree-proportional.
    let mut endpoints: Vec<usize> = Vec::with_capacity(2 * m * n);
    for u in 0..=m {
        for v in u + 1..=m {
            edges.push((u, v));
            endpoints.push(u);
            endpoints.push(v);
        }
    }
    let mut targets = Vec::with_capacity(m);
    for new in m + 1..n {
        targets.clear();
        while targets.len() < m {
            let t = endpoints[rng.random_range(0..endpoints.len())];
            if !targets.contains(&t) {
                targets.push(t);
            }
        }
        for &t in &targets {
            edges.push((t, new));
            endpoints.push(t);
            endpoints.push(new);
        }
    }
    Graph::from_edges(n, edges)
}

/// Watts–Strogatz small world: ring lattice with `k / 2` neighbors per side,
/// each lattice edge rewired with probability `beta` to a uniformly chosen
/// endpoint that creates neither a loop nor a duplicate.
pub fn gen_ws(n: usize, k: usize, beta: f64, seed: u64) -> Result<Graph> {
    if k % 2 != 0 || k >= n {
        return Err(Error::InvalidParameter(format!(
            "WS: need even k < n, got k = {k}, n = {n}"
        )));
    }
    if !(0.0..=1.0).contains(&beta) {
        return Err(Error::InvalidParameter(format!(
            "WS: beta = {beta} not in [0, 1]"
        )));
    }
    let mut rng = substream(seed, domain::GENERATOR, 2);
    let mut adj: Vec<std::collections::BTreeSet<usize>> = vec![Default::default(); n];
    for u in 0..n {
        for j in 1..=k / 2 {
            let v = (u + j) % n;
            adj[u].insert(v);
            adj[v].insert(u);
        }
    }
    for j in 1..=k / 2 {
        for u in 0..n {
            let v = (u + j) % n;
            if rng.random::<f64>() >= beta {
                continue;
            }
            // Saturated node: no legal target left.
            if adj[u].len() >= n - 1 {
                continue;
            }
            let w = loop {
                let w = rng.random_range(0..n);
                if w != u && !adj[u].contains(&w) {
                    break w;
                }
            };
            if adj[u].remove(&v) {
                adj[v].remove(&u);
                adj[u].insert(w);
                adj[w].insert(u);
            }
        }
    }
    let edges = adj
        .iter()
        .enumerate()
        .flat_map(|(u, s)| s.iter().filter(move |&&v| u < v).map(move |&v| (u, v)));
    Graph::from_edges(n, edges.collect::<Vec<_>>())
}

/// Serializable generator recipe.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum GeneratorSpec {
    Er { n: usize, p: f64 },
    Ba { n: usize, m: usize },
    Ws { n: usize, k: usize, beta: f64 },
}

impl GeneratorSpec {
    pub fn generate(&self, seed: u64) -> Result<Graph> {
        match *self {
            GeneratorSpec::Er { n, p } => gen_er(n, p, seed),
            GeneratorSpec::Ba { n, m } => gen_ba(n, m, seed),
            GeneratorSpec::Ws { n, k, beta } => gen_ws(n, k, beta, seed),
        }
    }

    pub fn num_nodes(&self) -> usize {
        match *self {
            GeneratorSpec::Er { n, .. } | GeneratorSpec::Ba { n, .. } | GeneratorSpec::Ws { n, .. } => n,
        }
    }

    /// Default pre-training mix: `count` graphs cycling BA, ER, WS with sizes
    /// spread evenly over `[min_nodes, max_nodes]` and mean degree near 4–6.
    pub fn default_mix(count: usize, min_nodes: usize, max_nodes: usize) -> Vec<GeneratorSpec> {
        (0..count)
            .map(|i| {
                let n = if count <= 1 {
                    min_nodes
                } else {
                    min_nodes + (max_nodes - min_nodes) * i / (count - 1)
                };
                match i % 3 {
                    0 => GeneratorSpec::Ba { n, m: 2 + (i / 3) % 2 },
                    1 => GeneratorSpec::Er {
                        n,
                        p: (4.0 + (i / 3 % 3) as f64) / (n as f64 - 1.0),
                    },
                    _ => GeneratorSpec::Ws {
                        n,
                        k: 4 + 2 * ((i / 3) % 2),
                        beta: 0.1 + 0.1 * ((i / 3) % 3) as f64,
                    },
                }
            })
            .collect()
    }
}
