//! Undirected simple graphs in compressed adjacency form.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::Read;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Immutable undirected simple graph.
///
/// Neighbor lists are stored back to back in `neighbors`; node `v` owns
/// `neighbors[offsets[v]..offsets[v + 1]]`, sorted ascending. Every edge is
/// stored in both directions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    offsets: Vec<usize>,
    neighbors: Vec<usize>,
    labels: Option<Vec<String>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DegreeStats {
    pub mean_degree: f64,
    pub mean_square_degree: f64,
}

impl Graph {
    /// Build a canonical graph from an arbitrary edge list. Self-loops and
    /// duplicate edges are dropped.
    pub fn from_edges<I>(num_nodes: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); num_nodes];
        for (u, v) in edges {
            for node in [u, v] {
                if node >= num_nodes {
                    return Err(Error::NodeOutOfRange { node, num_nodes });
                }
            }
            if u != v {
                adj[u].push(v);
                adj[v].push(u);
            }
        }
        Ok(Self::from_adjacency(adj))
    }

    fn from_adjacency(mut adj: Vec<Vec<usize>>) -> Self {
        let mut offsets = Vec::with_capacity(adj.len() + 1);
        offsets.push(0);
        let mut neighbors = Vec::new();
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
            neighbors.extend_from_slice(list);
            offsets.push(neighbors.len());
        }
        Graph {
            offsets,
            neighbors,
            labels: None,
        }
    }

    pub fn empty(num_nodes: usize) -> Self {
        Graph {
            offsets: vec![0; num_nodes + 1],
            neighbors: Vec::new(),
            labels: None,
        }
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.num_nodes() {
            return Err(Error::LengthMismatch(labels.len(), self.num_nodes()));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    #[inline]
    pub fn num_nodes(&self) -> usize {
        self.offsets.len() - 1
    }

    #[inline]
    pub fn num_edges(&self) -> usize {
        self.neighbors.len() / 2
    }

    #[inline]
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.neighbors[self.offsets[v]..self.offsets[v + 1]]
    }

    #[inline]
    pub fn degree(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    pub fn degrees(&self) -> Vec<usize> {
        (0..self.num_nodes()).map(|v| self.degree(v)).collect()
    }

    pub fn max_degree(&self) -> usize {
        (0..self.num_nodes()).map(|v| self.degree(v)).max().unwrap_or(0)
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.neighbors(u).binary_search(&v).is_ok()
    }

    /// Edges with `u < v`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.num_nodes()).flat_map(move |u| {
            self.neighbors(u)
                .iter()
                .copied()
                .filter(move |&v| u < v)
                .map(move |v| (u, v))
        })
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    /// Original token for `v`, or its integer id when the graph was not loaded
    /// from text.
    pub fn label(&self, v: usize) -> String {
        match &self.labels {
            Some(l) => l[v].clone(),
            None => v.to_string(),
        }
    }

    pub fn check_node(&self, node: usize) -> Result<()> {
        if node >= self.num_nodes() {
            return Err(Error::NodeOutOfRange {
                node,
                num_nodes: self.num_nodes(),
            });
        }
        Ok(())
    }

    pub fn degree_stats(&self) -> DegreeStats {
        let n = self.num_nodes();
        if n == 0 {
            return DegreeStats {
                mean_degree: 0.0,
                mean_square_degree: 0.0,
            };
        }
        // Integer sums keep the result exact up to the final division.
        let (sum, sum_sq) = (0..n).fold((0u128, 0u128), |(s, sq), v| {
            let d = self.degree(v) as u128;
            (s + d, sq + d * d)
        });
        DegreeStats {
            mean_degree: sum as f64 / n as f64,
            mean_square_degree: sum_sq as f64 / n as f64,
        }
    }

    /// Induced subgraph on the largest connected component. Ties between
    /// equally large components go to the one holding the lowest node id.
    /// Surviving nodes keep their relative order.
    pub fn largest_component(&self) -> Graph {
        let n = self.num_nodes();
        if n == 0 {
            return self.clone();
        }
        let mut comp = vec![usize::MAX; n];
        let mut best = (0usize, 0usize);
        let mut queue = Vec::new();
        let mut next_id = 0;
        for start in 0..n {
            if comp[start] != usize::MAX {
                continue;
            }
            let id = next_id;
            next_id += 1;
            comp[start] = id;
            queue.clear();
            queue.push(start);
            let mut head = 0;
            while head < queue.len() {
                let u = queue[head];
                head += 1;
                for &w in self.neighbors(u) {
                    if comp[w] == usize::MAX {
                        comp[w] = id;
                        queue.push(w);
                    }
                }
            }
            if queue.len() > best.1 {
                best = (id, queue.len());
            }
        }
        let keep: Vec<usize> = (0..n).filter(|&v| comp[v] == best.0).collect();
        self.induced_subgraph(&keep)
    }

    /// Subgraph induced by `nodes` (which must be sorted and distinct); node
    /// `nodes[i]` becomes `i`.
    pub fn induced_subgraph(&self, nodes: &[usize]) -> Graph {
        let mut remap = vec![usize::MAX; self.num_nodes()];
        for (i, &v) in nodes.iter().enumerate() {
            remap[v] = i;
        }
        let adj: Vec<Vec<usize>> = nodes
            .iter()
            .map(|&v| {
                self.neighbors(v)
                    .iter()
                    .filter_map(|&w| (remap[w] != usize::MAX).then_some(remap[w]))
                    .collect()
            })
            .collect();
        let mut g = Self::from_adjacency(adj);
        if let Some(labels) = &self.labels {
            g.labels = Some(nodes.iter().map(|&v| labels[v].clone()).collect());
        }
        g
    }

    /// Relabel nodes: old node `v` becomes `perm[v]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Graph> {
        if perm.len() != self.num_nodes() {
            return Err(Error::LengthMismatch(perm.len(), self.num_nodes()));
        }
        Graph::from_edges(
            self.num_nodes(),
            self.edges().map(|(u, v)| (perm[u], perm[v])),
        )
    }

    /// Breadth-first relabeling after which [`Graph::to_edge_list`] followed
    /// by [`Graph::load_edge_list`] keeps every node id. Isolated nodes, which
    /// an edge list cannot hold, take the highest ids.
    pub fn relabeled_for_listing(&self) -> Graph {
        let n = self.num_nodes();
        let mut perm = vec![usize::MAX; n];
        let mut next = 0;
        let mut queue = std::collections::VecDeque::new();
        for start in (0..n).filter(|&v| self.degree(v) > 0) {
            if perm[start] != usize::MAX {
                continue;
            }
            perm[start] = next;
            next += 1;
            queue.push_back(start);
            while let Some(u) = queue.pop_front() {
                for &w in self.neighbors(u) {
                    if perm[w] == usize::MAX {
                        perm[w] = next;
                        next += 1;
                        queue.push_back(w);
                    }
                }
            }
        }
        for p in perm.iter_mut().filter(|p| **p == usize::MAX) {
            *p = next;
            next += 1;
        }
        self.permuted(&perm).expect("breadth-first order is a permutation")
    }

    /// Canonical edge-list text: `u v` per line with `u < v`, sorted.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::with_capacity(self.num_edges() * 8);
        for (u, v) in self.edges() {
            let _ = writeln!(out, "{u} {v}");
        }
        out
    }

    /// SHA-256 of the canonical edge list plus node count, hex encoded. Used to
    /// detect stale caches.
    pub fn content_hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(format!("nodes {}\n", self.num_nodes()).as_bytes());
        h.update(self.to_edge_list().as_bytes());
        hex_digest(&h.finalize())
    }

    pub fn load_edge_list(text: &str) -> Result<Graph> {
        let mut ids: HashMap<&str, usize> = HashMap::new();
        let mut labels: Vec<String> = Vec::new();
        let mut edges = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let tokens: Vec<&str> = trimmed.split_whitespace().collect();
            if tokens.len() != 2 {
                return Err(Error::Parse {
                    line: lineno + 1,
                    msg: format!("expected 2 tokens, found {}", tokens.len()),
                });
            }
            let mut pair = [0usize; 2];
            for (slot, tok) in pair.iter_mut().zip(tokens) {
                *slot = *ids.entry(tok).or_insert_with(|| {
                    labels.push(tok.to_string());
                    labels.len() - 1
                });
            }
            edges.push((pair[0], pair[1]));
        }
        if labels.is_empty() {
            return Err(Error::EmptyInput);
        }
        let n = labels.len();
        Graph::from_edges(n, edges)?.with_labels(labels)
    }

    pub fn read_edge_list<R: Read>(mut reader: R) -> Result<Graph> {
        let mut text = String::new();
        reader
            .read_to_string(&mut text)
            .map_err(|e| Error::io("<reader>", e))?;
        Self::load_edge_list(&text)
    }

    pub fn load_path(path: impl AsRef<Path>) -> Result<Graph> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::load_edge_list(&text)
    }
}

pub(crate) fn hex_digest(bytes: &[u8]) -> String {
    let mut s = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        let _ = write!(s, "{b:02x}");
    }
    s
}
