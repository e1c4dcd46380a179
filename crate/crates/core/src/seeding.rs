//! Influence-maximization seed sets from a node ranking.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::metrics::rank_order;
use crate::propagation::{ic_spread, lt_spread, si_spread_curve, SpreadResult};
use crate::table::fmt_real;

/// Nodes in descending score order, ties by ascending id.
#[derive(Debug, Clone, PartialEq)]
pub struct Ranking {
    pub method: String,
    pub order: Vec<usize>,
    /// Score per node id.
    pub scores: Vec<f64>,
}

impl Ranking {
    pub fn from_scores(method: impl Into<String>, scores: Vec<f64>) -> Result<Ranking> {
        if scores.is_empty() {
            return Err(Error::EmptyInput);
        }
        if let Some(v) = scores.iter().position(|s| !s.is_finite()) {
            return Err(Error::InvalidParameter(format!("score of node {v} is not finite")));
        }
        Ok(Ranking {
            method: method.into(),
            order: rank_order(&scores),
            scores,
        })
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// `rank,node_id,score` with rank starting at 1.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("rank,node_id,score\n");
        for (r, &v) in self.order.iter().enumerate() {
            let _ = writeln!(out, "{},{v},{}", r + 1, fmt_real(self.scores[v]));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    /// Picked while no neighbor was already a seed.
    Diversity,
    /// Picked by score alone.
    Fill,
}

impl std::fmt::Display for Phase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Phase::Diversity => "diversity",
            Phase::Fill => "fill",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeedSet {
    pub method: String,
    pub nodes: Vec<usize>,
    pub phases: Vec<Phase>,
    /// Scores of `nodes`, copied from the ranking.
    pub scores: Vec<f64>,
}

impl SeedSet {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `rank,node_id,score,phase` in selection order.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("rank,node_id,score,phase\n");
        for (r, ((&v, &s), p)) in self.nodes.iter().zip(&self.scores).zip(&self.phases).enumerate() {
            let _ = writeln!(out, "{},{v},{},{p}", r + 1, fmt_real(s));
        }
        out
    }
}

fn check_k(ranking: &Ranking, k: usize) -> Result<()> {
    if k == 0 || k > ranking.len() {
        return Err(Error::InvalidParameter(format!(
            "seed set size {k} must be in 1..={}",
            ranking.len()
        )));
    }
    Ok(())
}

/// The first `k` nodes of the ranking.
pub fn top_k_seeds(ranking: &Ranking, k: usize) -> Result<SeedSet> {
    check_k(ranking, k)?;
    let nodes = ranking.order[..k].to_vec();
    Ok(SeedSet {
        method: ranking.method.clone(),
        phases: vec![Phase::Fill; k],
        scores: nodes.iter().map(|&v| ranking.scores[v]).collect(),
        nodes,
    })
}

/// Two passes over the ranking: first take every node none of whose
/// neighbors is already a seed, then top up with the best remaining nodes.
pub fn diverse_seeds(ranking: &Ranking, g: &Graph, k: usize) -> Result<SeedSet> {
    check_k(ranking, k)?;
    if ranking.len() != g.num_nodes() {
        return Err(Error::LengthMismatch(ranking.len(), g.num_nodes()));
    }
    let n = g.num_nodes();
    let mut selected = vec![false; n];
    let mut seeded_neighbors = vec![0usize; n];
    let mut nodes = Vec::with_capacity(k);
    let mut phases = Vec::with_capacity(k);
    for &v in &ranking.order {
        if nodes.len() == k {
            break;
        }
        if seeded_neighbors[v] == 0 {
            selected[v] = true;
            nodes.push(v);
            phases.push(Phase::Diversity);
            for &u in g.neighbors(v) {
                seeded_neighbors[u] += 1;
            }
        }
    }
    for &v in &ranking.order {
        if nodes.len() == k {
            break;
        }
        if !selected[v] {
            selected[v] = true;
            nodes.push(v);
            phases.push(Phase::Fill);
        }
    }
    Ok(SeedSet {
        method: format!("{}-ds", ranking.method),
        scores: nodes.iter().map(|&v| ranking.scores[v]).collect(),
        nodes,
        phases,
    })
}

/// Spreading process used to score a seed set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "UPPERCASE")]
pub enum SpreadProcess {
    Ic { p: f64 },
    Lt,
    Si { beta: f64, max_steps: usize },
}

pub fn evaluate_seed_set(
    g: &Graph,
    seeds: &SeedSet,
    process: SpreadProcess,
    runs: usize,
    master_seed: u64,
) -> Result<SpreadResult> {
    let mut result = match process {
        SpreadProcess::Ic { p } => ic_spread(g, &seeds.nodes, p, runs, master_seed)?,
        SpreadProcess::Lt => lt_spread(g, &seeds.nodes, runs, master_seed)?,
        SpreadProcess::Si { beta, max_steps } => si_spread_curve(g, &seeds.nodes, beta, runs, max_steps, master_seed)?,
    };
    result.method = Some(seeds.method.clone());
    Ok(result)
}
