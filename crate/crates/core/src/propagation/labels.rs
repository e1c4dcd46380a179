use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::table::{fmt_real, Table};

/// Mean SIR outbreak size per labeled node.
#[derive(Debug, Clone, PartialEq)]
pub struct InfluenceLabels {
    pub node_ids: Vec<usize>,
    /// Mean count of finally recovered nodes, source included.
    pub mean_infected: Vec<f64>,
    pub runs: usize,
    pub beta_th: f64,
    pub master_seed: u64,
    pub graph_hash: String,
    pub num_nodes: usize,
}

/// Sidecar metadata stored next to a label CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelMeta {
    pub graph_hash: String,
    pub num_nodes: usize,
    pub labeled_nodes: usize,
    pub runs: usize,
    pub beta_th: f64,
    pub master_seed: u64,
    pub model: String,
}

pub const LABEL_HEADER: &str = "node_id,mean_infected,runs,beta_th,master_seed";

impl InfluenceLabels {
    pub fn len(&self) -> usize {
        self.node_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.node_ids.is_empty()
    }

    pub fn get(&self, node: usize) -> Option<f64> {
        self.node_ids
            .iter()
            .position(|&v| v == node)
            .map(|i| self.mean_infected[i])
    }

    /// Labels as infected fractions of the network size, the regression
    /// target scale.
    pub fn fractions(&self) -> Vec<f64> {
        let n = self.num_nodes as f64;
        self.mean_infected.iter().map(|&m| m / n).collect()
    }

    /// Dense per-node vector when every node of the graph is labeled.
    pub fn dense(&self) -> Option<Vec<f64>> {
        if self.node_ids.len() != self.num_nodes {
            return None;
        }
        let mut out = vec![f64::NAN; self.num_nodes];
        for (&v, &m) in self.node_ids.iter().zip(&self.mean_infected) {
            out[v] = m;
        }
        out.iter().all(|x| !x.is_nan()).then_some(out)
    }

    /// Subset for `nodes`, in the order given; `None` if a node is unlabeled.
    pub fn restrict(&self, nodes: &[usize]) -> Option<InfluenceLabels> {
        let index: HashMap<usize, usize> = self.node_ids.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let mean_infected = nodes
            .iter()
            .map(|v| index.get(v).map(|&i| self.mean_infected[i]))
            .collect::<Option<Vec<_>>>()?;
        Some(InfluenceLabels {
            node_ids: nodes.to_vec(),
            mean_infected,
            ..self.clone()
        })
    }

    pub fn check_graph(&self, g: &Graph) -> Result<()> {
        let found = g.content_hash();
        if found != self.graph_hash {
            return Err(Error::HashMismatch {
                expected: self.graph_hash.clone(),
                found,
            });
        }
        Ok(())
    }

    pub fn meta(&self) -> LabelMeta {
        LabelMeta {
            graph_hash: self.graph_hash.clone(),
            num_nodes: self.num_nodes,
            labeled_nodes: self.node_ids.len(),
            runs: self.runs,
            beta_th: self.beta_th,
            master_seed: self.master_seed,
            model: "SIR".into(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(LABEL_HEADER);
        out.push('\n');
        let beta = fmt_real(self.beta_th);
        for (&v, &m) in self.node_ids.iter().zip(&self.mean_infected) {
            let _ = writeln!(out, "{v},{},{},{beta},{}", fmt_real(m), self.runs, self.master_seed);
        }
        out
    }

    pub fn from_csv(text: &str, meta: &LabelMeta) -> Result<InfluenceLabels> {
        let t = Table::parse(text)?;
        let (c_id, c_mean) = (t.column("node_id")?, t.column("mean_infected")?);
        let (c_runs, c_beta, c_seed) = (t.column("runs")?, t.column("beta_th")?, t.column("master_seed")?);
        let mut node_ids = Vec::with_capacity(t.rows.len());
        let mut mean_infected = Vec::with_capacity(t.rows.len());
        for r in 0..t.rows.len() {
            let v: usize = t.parse_cell(r, c_id)?;
            if v >= meta.num_nodes {
                return Err(Error::format("label csv", format!("node {v} out of range")));
            }
            let runs: usize = t.parse_cell(r, c_runs)?;
            let beta: f64 = t.parse_cell(r, c_beta)?;
            let seed: u64 = t.parse_cell(r, c_seed)?;
            if runs != meta.runs || beta.to_bits() != meta.beta_th.to_bits() || seed != meta.master_seed {
                return Err(Error::format("label csv", format!("row {} disagrees with sidecar metadata", r + 1)));
            }
            node_ids.push(v);
            mean_infected.push(t.parse_cell(r, c_mean)?);
        }
        if node_ids.len() != meta.labeled_nodes {
            return Err(Error::format(
                "label csv",
                format!("{} rows, sidecar says {}", node_ids.len(), meta.labeled_nodes),
            ));
        }
        Ok(InfluenceLabels {
            node_ids,
            mean_infected,
            runs: meta.runs,
            beta_th: meta.beta_th,
            master_seed: meta.master_seed,
            graph_hash: meta.graph_hash.clone(),
            num_nodes: meta.num_nodes,
        })
    }

    pub fn sidecar_path(csv_path: &Path) -> PathBuf {
        csv_path.with_extension("json")
    }

    /// Writes the CSV and its JSON sidecar.
    pub fn save(&self, csv_path: &Path) -> Result<()> {
        std::fs::write(csv_path, self.to_csv()).map_err(|e| Error::io(csv_path, e))?;
        let side = Self::sidecar_path(csv_path);
        let json = serde_json::to_string_pretty(&self.meta())?;
        std::fs::write(&side, json + "\n").map_err(|e| Error::io(side, e))
    }

    pub fn load(csv_path: &Path) -> Result<InfluenceLabels> {
        let side = Self::sidecar_path(csv_path);
        let meta: LabelMeta = serde_json::from_str(
            &std::fs::read_to_string(&side).map_err(|e| Error::io(&side, e))?,
        )?;
        let text = std::fs::read_to_string(csv_path).map_err(|e| Error::io(csv_path, e))?;
        Self::from_csv(&text, &meta)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::test_graphs::*;
    use crate::propagation::sir_label;

    #[test]
    fn csv_round_trip_and_sidecar() {
        let g = cycle(5);
        let labels = sir_label(&g, &[0, 2, 4], 30, 0.4, 8).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("labels.csv");
        labels.save(&file).unwrap();
        assert!(std::fs::read_to_string(&file).unwrap().starts_with(LABEL_HEADER));
        let back = InfluenceLabels::load(&file).unwrap();
        assert_eq!(back, labels);
        back.check_graph(&g).unwrap();
        assert!(matches!(back.check_graph(&path(5)), Err(Error::HashMismatch { .. })));
    }

    #[test]
    fn dense_and_restrict() {
        let g = path(3);
        let full = sir_label(&g, &[0, 1, 2], 10, 1.0, 1).unwrap();
        assert_eq!(full.dense().unwrap(), vec![3.0; 3]);
        let part = full.restrict(&[2, 0]).unwrap();
        assert_eq!(part.node_ids, vec![2, 0]);
        assert!(part.dense().is_none());
        assert_eq!(full.fractions(), vec![1.0; 3]);
    }

    #[test]
    fn rejects_inconsistent_rows() {
        let g = path(3);
        let labels = sir_label(&g, &[0], 10, 0.5, 1).unwrap();
        let mut meta = labels.meta();
        meta.runs = 11;
        assert!(InfluenceLabels::from_csv(&labels.to_csv(), &meta).is_err());
    }
}
