use rand::Rng;
use rayon::prelude::*;

use super::{check_probability, validate_seeds, RunStats, SpreadModel, SpreadResult};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::rng::{domain, substream};

fn check_runs(runs: usize) -> Result<()> {
    if runs == 0 {
        return Err(Error::InvalidParameter("runs must be >= 1".into()));
    }
    Ok(())
}

/// Runs `f(run)` for every run in parallel and returns outcomes in run order.
fn collect_runs<T: Send, F: Fn(u64) -> T + Sync + Send>(runs: usize, f: F) -> Vec<T> {
    (0..runs as u64).into_par_iter().map(f).collect()
}

fn stream_for(master_seed: u64, model: SpreadModel, run: u64) -> crate::rng::Stream {
    let tag = match model {
        SpreadModel::Si => 1,
        SpreadModel::Ic => 2,
        SpreadModel::Lt => 3,
    };
    substream(master_seed ^ domain::SPREAD, tag, run)
}

/// One Independent Cascade run from sorted, distinct `seeds`.
pub fn ic_run<R: Rng>(g: &Graph, seeds: &[usize], p: f64, rng: &mut R) -> usize {
    let mut active = vec![false; g.num_nodes()];
    let mut frontier: Vec<usize> = seeds.to_vec();
    for &s in seeds {
        active[s] = true;
    }
    let mut total = seeds.len();
    let mut next = Vec::new();
    while !frontier.is_empty() {
        for &u in &frontier {
            for &v in g.neighbors(u) {
                if !active[v] && rng.random::<f64>() < p {
                    active[v] = true;
                    next.push(v);
                }
            }
        }
        total += next.len();
        next.sort_unstable();
        std::mem::swap(&mut frontier, &mut next);
        next.clear();
    }
    total
}

pub fn ic_spread(g: &Graph, seeds: &[usize], p: f64, runs: usize, master_seed: u64) -> Result<SpreadResult> {
    let seeds = validate_seeds(g, seeds)?;
    check_probability("p", p)?;
    check_runs(runs)?;
    let outcomes = collect_runs(runs, |run| {
        ic_run(g, &seeds, p, &mut stream_for(master_seed, SpreadModel::Ic, run))
    });
    Ok(final_only(SpreadModel::Ic, seeds, &outcomes))
}

fn final_only(model: SpreadModel, seeds: Vec<usize>, outcomes: &[usize]) -> SpreadResult {
    let mut st = RunStats::default();
    outcomes.iter().for_each(|&x| st.push(x));
    SpreadResult {
        model,
        seeds,
        mean_final_active: st.mean(),
        std_err: st.std_err(),
        per_step_mean: Vec::new(),
        per_step_std_err: Vec::new(),
        runs: outcomes.len(),
        method: None,
    }
}

/// How Linear Threshold node thresholds are drawn.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LtThresholds {
    /// Fresh `Uniform(0, 1]` per node and run.
    Uniform,
    /// The same value for every node; for exact hull checks.
    Fixed(f64),
}

/// One Linear Threshold run. Incoming weights are `1 / deg(v)`, so `v`
/// activates once the fraction of its active neighbors reaches its threshold.
pub fn lt_run<R: Rng>(g: &Graph, seeds: &[usize], thresholds: LtThresholds, rng: &mut R) -> usize {
    let n = g.num_nodes();
    let theta: Vec<f64> = match thresholds {
        // 1 - U(0,1] lands in (0, 1].
        LtThresholds::Uniform => (0..n).map(|_| 1.0 - rng.random::<f64>()).collect(),
        LtThresholds::Fixed(t) => vec![t; n],
    };
    let mut active = vec![false; n];
    let mut active_nbrs = vec![0usize; n];
    for &s in seeds {
        active[s] = true;
    }
    let mut frontier: Vec<usize> = seeds.to_vec();
    let mut total = seeds.len();
    let mut candidates = Vec::new();
    while !frontier.is_empty() {
        candidates.clear();
        for &u in &frontier {
            for &v in g.neighbors(u) {
                if !active[v] {
                    active_nbrs[v] += 1;
                    candidates.push(v);
                }
            }
        }
        candidates.sort_unstable();
        candidates.dedup();
        frontier.clear();
        // Decisions use the pressure accumulated up to the end of the
        // previous round, so the update is synchronous.
        for &v in &candidates {
            if active_nbrs[v] as f64 / g.degree(v) as f64 >= theta[v] {
                frontier.push(v);
            }
        }
        for &v in &frontier {
            active[v] = true;
        }
        total += frontier.len();
    }
    total
}

pub fn lt_spread(g: &Graph, seeds: &[usize], runs: usize, master_seed: u64) -> Result<SpreadResult> {
    lt_spread_with(g, seeds, runs, master_seed, LtThresholds::Uniform)
}

pub fn lt_spread_with(
    g: &Graph,
    seeds: &[usize],
    runs: usize,
    master_seed: u64,
    thresholds: LtThresholds,
) -> Result<SpreadResult> {
    let seeds = validate_seeds(g, seeds)?;
    check_runs(runs)?;
    let outcomes = collect_runs(runs, |run| {
        lt_run(g, &seeds, thresholds, &mut stream_for(master_seed, SpreadModel::Lt, run))
    });
    Ok(final_only(SpreadModel::Lt, seeds, &outcomes))
}

/// One SI run. Entry `t` of the result is the infected count after `t`
/// steps; the vector stops at `max_steps` or once no infected node has a
/// susceptible neighbor, whichever comes first.
pub fn si_run<R: Rng>(g: &Graph, seeds: &[usize], beta: f64, max_steps: usize, rng: &mut R) -> Vec<usize> {
    let n = g.num_nodes();
    let mut infected = vec![false; n];
    let mut members: Vec<usize> = seeds.to_vec();
    for &s in seeds {
        infected[s] = true;
    }
    let mut curve = vec![members.len()];
    let mut new = Vec::new();
    for _ in 0..max_steps {
        let mut exposed = false;
        for &u in &members {
            for &v in g.neighbors(u) {
                if !infected[v] {
                    exposed = true;
                    if rng.random::<f64>() < beta {
                        infected[v] = true;
                        new.push(v);
                    }
                }
            }
        }
        if !exposed {
            break;
        }
        members.append(&mut new);
        members.sort_unstable();
        curve.push(members.len());
    }
    curve
}

/// Mean SI infection curve over `runs`. Runs that froze early hold their final
/// value; the curve is truncated once every run has frozen.
pub fn si_spread_curve(
    g: &Graph,
    seeds: &[usize],
    beta: f64,
    runs: usize,
    max_steps: usize,
    master_seed: u64,
) -> Result<SpreadResult> {
    let seeds = validate_seeds(g, seeds)?;
    check_probability("beta", beta)?;
    check_runs(runs)?;
    let curves = collect_runs(runs, |run| {
        si_run(g, &seeds, beta, max_steps, &mut stream_for(master_seed, SpreadModel::Si, run))
    });
    let len = curves.iter().map(Vec::len).max().unwrap_or(1);
    let mut per_step = vec![RunStats::default(); len];
    for c in &curves {
        let last = *c.last().unwrap();
        for (t, st) in per_step.iter_mut().enumerate() {
            st.push(c.get(t).copied().unwrap_or(last));
        }
    }
    let finals: Vec<usize> = curves.iter().map(|c| *c.last().unwrap()).collect();
    let mut result = final_only(SpreadModel::Si, seeds, &finals);
    result.per_step_mean = per_step.iter().map(RunStats::mean).collect();
    result.per_step_std_err = per_step.iter().map(RunStats::std_err).collect();
    Ok(result)
}
