//! Monte Carlo spreading engines: SIR for node labels, SI for spread-speed
//! curves, Independent Cascade and Linear Threshold for seed-set evaluation.
//!
//! All engines are synchronous. Within a step, infection attempts run in
//! ascending `(source, target)` order, and every run draws from its own keyed
//! stream, so results are a pure function of `(graph, params, master_seed)`.

mod cascade;
mod labels;
mod sir;

pub use cascade::{ic_run, ic_spread, lt_run, lt_spread, lt_spread_with, si_run, si_spread_curve, LtThresholds};
pub use labels::{InfluenceLabels, LabelMeta};
pub use sir::{sir_estimate, sir_label, sir_run, sir_run_observed, StepCounts};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;

/// Factor between the epidemic threshold and the simulated transmission
/// probability.
pub const THRESHOLD_FACTOR: f64 = 1.01;

/// Epidemic threshold and the transmission probability used for simulation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Beta {
    pub threshold: f64,
    pub transmission: f64,
    /// Set when `1.01 * threshold` exceeded 1 and was clamped.
    pub clamped: bool,
}

impl Beta {
    pub fn from_threshold(threshold: f64) -> Beta {
        let raw = THRESHOLD_FACTOR * threshold;
        Beta {
            threshold,
            transmission: raw.min(1.0),
            clamped: raw > 1.0,
        }
    }
}

/// `beta = <k> / (<k^2> - <k>)`, simulated at `1.01 * beta`.
///
/// The node count cancels, so the ratio is taken over integer degree sums
/// and rounds only once.
pub fn epidemic_threshold(g: &Graph) -> Result<Beta> {
    let (sum, sum_sq) = g.degrees().iter().fold((0u128, 0u128), |(s, sq), &d| {
        let d = d as u128;
        (s + d, sq + d * d)
    });
    if sum_sq <= sum {
        let st = g.degree_stats();
        return Err(Error::SingularThreshold {
            mean: st.mean_degree,
            mean_sq: st.mean_square_degree,
        });
    }
    let beta = Beta::from_threshold(sum as f64 / (sum_sq - sum) as f64);
    if beta.clamped {
        log::warn!(
            "transmission 1.01 * {} exceeds 1; clamped to 1",
            beta.threshold
        );
    }
    Ok(beta)
}

pub fn check_probability(name: &str, p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!("{name} = {p} not in [0, 1]")));
    }
    Ok(())
}

/// Running sums of integer outcomes; exact and order-independent.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunStats {
    pub runs: u64,
    pub sum: u64,
    pub sum_sq: u128,
}

impl RunStats {
    pub fn push(&mut self, x: usize) {
        self.runs += 1;
        self.sum += x as u64;
        self.sum_sq += (x as u128) * (x as u128);
    }

    pub fn mean(&self) -> f64 {
        self.sum as f64 / self.runs as f64
    }

    /// Standard error of the mean, from the unbiased sample variance.
    pub fn std_err(&self) -> f64 {
        if self.runs < 2 {
            return 0.0;
        }
        let n = self.runs as f64;
        let mean = self.mean();
        let var = ((self.sum_sq as f64) - n * mean * mean) / (n - 1.0);
        (var.max(0.0) / n).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum SpreadModel {
    Si,
    Ic,
    Lt,
}

impl std::fmt::Display for SpreadModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SpreadModel::Si => "SI",
            SpreadModel::Ic => "IC",
            SpreadModel::Lt => "LT",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpreadResult {
    pub model: SpreadModel,
    pub seeds: Vec<usize>,
    pub mean_final_active: f64,
    pub std_err: f64,
    /// Mean infected count per step, starting with the seeds at step 0. SI only.
    pub per_step_mean: Vec<f64>,
    pub per_step_std_err: Vec<f64>,
    pub runs: usize,
    /// Provenance label of the seed set, filled in by seed-set evaluation.
    pub method: Option<String>,
}

pub(crate) fn validate_seeds(g: &Graph, seeds: &[usize]) -> Result<Vec<usize>> {
    if seeds.is_empty() {
        return Err(Error::InvalidParameter("seed set is empty".into()));
    }
    for &s in seeds {
        g.check_node(s)?;
    }
    let mut sorted = seeds.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != seeds.len() {
        return Err(Error::InvalidParameter("seed set contains duplicates".into()));
    }
    Ok(sorted)
}
