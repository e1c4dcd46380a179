//! Desk-scale test networks: small public graphs and micro-graphs with
//! exhaustively enumerated spread expectations.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;

/// Directory searched for fixtures that are not bundled.
pub const FIXTURE_DIR_ENV: &str = "CRITNET_FIXTURES";

const MANIFEST: &str = include_str!("../fixtures/manifest.json");
const EXPECTATIONS: &str = include_str!("../fixtures/micro/expectations.json");

const BUNDLED: [(&str, &str); 6] = [
    ("lesmis", include_str!("../fixtures/lesmis.edges")),
    ("star", include_str!("../fixtures/micro/star.edges")),
    ("path", include_str!("../fixtures/micro/path.edges")),
    ("k3", include_str!("../fixtures/micro/k3.edges")),
    ("k4", include_str!("../fixtures/micro/k4.edges")),
    ("two_triangles_bridge", include_str!("../fixtures/micro/two_triangles_bridge.edges")),
];

pub const MICRO_GRAPHS: [&str; 5] = ["star", "path", "k3", "k4", "two_triangles_bridge"];

/// Public networks used for evaluation, smallest first.
pub const NETWORKS: [&str; 3] = ["dolphins", "lesmis", "jazz"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fixture {
    pub name: String,
    pub file: String,
    #[serde(rename = "N")]
    pub nodes: usize,
    #[serde(rename = "E")]
    pub edges: usize,
    pub bundled: bool,
    pub provenance: String,
}

impl Fixture {
    pub fn mean_degree(&self) -> f64 {
        2.0 * self.edges as f64 / self.nodes as f64
    }

    fn check(&self, g: &Graph) -> Result<()> {
        if g.num_nodes() != self.nodes || g.num_edges() != self.edges {
            return Err(Error::Fixture {
                name: self.name.clone(),
                msg: format!(
                    "expected {} nodes and {} edges, loaded {} and {}",
                    self.nodes,
                    self.edges,
                    g.num_nodes(),
                    g.num_edges()
                ),
            });
        }
        Ok(())
    }
}

pub fn manifest() -> Vec<Fixture> {
    serde_json::from_str(MANIFEST).expect("bundled fixture manifest is valid")
}

pub fn fixture(name: &str) -> Result<Fixture> {
    manifest().into_iter().find(|f| f.name == name).ok_or_else(|| Error::Fixture {
        name: name.into(),
        msg: "not in the fixture manifest".into(),
    })
}

/// `$CRITNET_FIXTURES` if set, else the fixture directory of this crate.
pub fn fixture_dir() -> PathBuf {
    std::env::var_os(FIXTURE_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures"))
}

/// Loads a fixture and checks its declared node and edge counts.
pub fn load(name: &str) -> Result<Graph> {
    load_from(name, &fixture_dir())
}

pub fn load_from(name: &str, dir: &Path) -> Result<Graph> {
    let f = fixture(name)?;
    let g = match BUNDLED.iter().find(|(n, _)| *n == name) {
        Some((_, text)) => Graph::load_edge_list(text)?,
        None => {
            let path = dir.join(&f.file);
            if !path.exists() {
                return Err(Error::Fixture {
                    name: name.into(),
                    msg: format!("{} not found; fetch it from the source in the manifest", path.display()),
                });
            }
            Graph::load_path(&path)?
        }
    };
    f.check(&g)?;
    Ok(g)
}

pub fn lesmis() -> Result<Graph> {
    load("lesmis")
}

/// The public networks that can be loaded here, with their names.
pub fn available_networks() -> Vec<(String, Graph)> {
    NETWORKS
        .iter()
        .filter_map(|&n| load(n).ok().map(|g| (n.to_string(), g)))
        .collect()
}

/// Exact expected final size of an IC or one-step SIR process on a
/// micro-graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Expectation {
    pub graph: String,
    /// "IC" or "SIR".
    pub model: String,
    /// Edge probability for IC, transmission rate for SIR.
    pub p: f64,
    pub seeds: Vec<usize>,
    pub expected: f64,
}

pub fn expectations() -> Vec<Expectation> {
    serde_json::from_str(EXPECTATIONS).expect("bundled expectations are valid")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FixtureStatus {
    Verified,
    Missing,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixtureReport {
    pub entries: Vec<(Fixture, FixtureStatus)>,
}

impl FixtureReport {
    pub fn missing(&self) -> Vec<&str> {
        self.entries
            .iter()
            .filter(|(_, s)| *s == FixtureStatus::Missing)
            .map(|(f, _)| f.name.as_str())
            .collect()
    }
}

/// Loads every fixture found in `dir`. Missing optional fixtures are
/// reported; a present fixture with wrong counts is an error naming it.
pub fn verify_fixtures(dir: &Path) -> Result<FixtureReport> {
    let mut entries = Vec::new();
    for f in manifest() {
        let status = if f.bundled || dir.join(&f.file).exists() {
            load_from(&f.name, dir)?;
            FixtureStatus::Verified
        } else {
            FixtureStatus::Missing
        };
        entries.push((f, status));
    }
    Ok(FixtureReport { entries })
}
