use rand::Rng;
use rayon::prelude::*;

use super::{check_probability, InfluenceLabels, RunStats};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::rng::{substream, Stream};

const S: u8 = 0;
const I: u8 = 1;
const R: u8 = 2;

/// Compartment sizes at the start of a step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepCounts {
    pub susceptible: usize,
    pub infected: usize,
    pub recovered: usize,
}

/// Reusable per-worker buffers; only touched nodes are reset between runs.
pub(crate) struct Workspace {
    state: Vec<u8>,
    touched: Vec<usize>,
    current: Vec<usize>,
    next: Vec<usize>,
}

impl Workspace {
    pub(crate) fn new(n: usize) -> Self {
        Workspace {
            state: vec![S; n],
            touched: Vec::new(),
            current: Vec::new(),
            next: Vec::new(),
        }
    }

    fn reset(&mut self) {
        for &v in &self.touched {
            self.state[v] = S;
        }
        self.touched.clear();
        self.current.clear();
        self.next.clear();
    }
}

/// Discrete-time SIR with an infectious period of exactly one step. Returns
/// the final number of recovered nodes, source included.
pub fn sir_run<Rn: Rng>(g: &Graph, source: usize, beta: f64, rng: &mut Rn) -> usize {
    sir_run_observed(g, source, beta, rng, |_| {})
}

/// As [`sir_run`], calling `observe` with the compartment sizes at the start
/// of every step (and once more after the last infected node recovers).
pub fn sir_run_observed<Rn: Rng, F: FnMut(StepCounts)>(
    g: &Graph,
    source: usize,
    beta: f64,
    rng: &mut Rn,
    observe: F,
) -> usize {
    let mut ws = Workspace::new(g.num_nodes());
    run_in(&mut ws, g, source, beta, rng, observe)
}

fn run_in<Rn: Rng, F: FnMut(StepCounts)>(
    ws: &mut Workspace,
    g: &Graph,
    source: usize,
    beta: f64,
    rng: &mut Rn,
    mut observe: F,
) -> usize {
    ws.reset();
    let n = g.num_nodes();
    ws.state[source] = I;
    ws.touched.push(source);
    ws.current.push(source);
    let mut recovered = 0;
    loop {
        observe(StepCounts {
            susceptible: n - ws.current.len() - recovered,
            infected: ws.current.len(),
            recovered,
        });
        if ws.current.is_empty() {
            return recovered;
        }
        for &u in &ws.current {
            for &v in g.neighbors(u) {
                if ws.state[v] == S && rng.random::<f64>() < beta {
                    ws.state[v] = I;
                    ws.touched.push(v);
                    ws.next.push(v);
                }
            }
        }
        for &u in &ws.current {
            ws.state[u] = R;
        }
        recovered += ws.current.len();
        std::mem::swap(&mut ws.current, &mut ws.next);
        ws.next.clear();
        ws.current.sort_unstable();
    }
}

fn node_stats(g: &Graph, source: usize, beta: f64, runs: usize, master_seed: u64, ws: &mut Workspace) -> RunStats {
    let mut stats = RunStats::default();
    for run in 0..runs {
        let mut rng: Stream = substream(master_seed, source as u64, run as u64);
        stats.push(run_in(ws, g, source, beta, &mut rng, |_| {}));
    }
    stats
}

/// Mean outbreak size from `source` with its standard error, using the same
/// streams as [`sir_label`].
pub fn sir_estimate(g: &Graph, source: usize, beta: f64, runs: usize, master_seed: u64) -> Result<(f64, f64)> {
    g.check_node(source)?;
    check_probability("beta", beta)?;
    if runs == 0 {
        return Err(Error::InvalidParameter("runs must be >= 1".into()));
    }
    let mut ws = Workspace::new(g.num_nodes());
    let st = node_stats(g, source, beta, runs, master_seed, &mut ws);
    Ok((st.mean(), st.std_err()))
}

/// Mean SIR outbreak size for each node in `nodes`, averaged over `runs`
/// independent simulations seeded by `substream(master_seed, node, run)`.
///
/// Parallel over nodes; every node's runs are summed in run order, so the
/// output does not depend on the worker count.
pub fn sir_label(
    g: &Graph,
    nodes: &[usize],
    runs: usize,
    beta: f64,
    master_seed: u64,
) -> Result<InfluenceLabels> {
    if nodes.is_empty() {
        return Err(Error::InvalidParameter("no nodes to label".into()));
    }
    if runs == 0 {
        return Err(Error::InvalidParameter("runs must be >= 1".into()));
    }
    check_probability("beta", beta)?;
    for &v in nodes {
        g.check_node(v)?;
    }
    let n = g.num_nodes();
    let means: Vec<f64> = nodes
        .par_iter()
        .map_init(
            || Workspace::new(n),
            |ws, &v| node_stats(g, v, beta, runs, master_seed, ws).mean(),
        )
        .collect();
    Ok(InfluenceLabels {
        node_ids: nodes.to_vec(),
        mean_infected: means,
        runs,
        beta_th: beta,
        master_seed,
        graph_hash: g.content_hash(),
        num_nodes: n,
    })
}
