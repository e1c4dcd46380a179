use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

pub const OUT_DIR_ENV: &str = "CRITNET_OUT";

#[derive(Debug, Parser)]
#[command(name = "critnet", version, about = "Critical-node identification pipeline")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Serialize)]
pub struct Global {
    /// Output directory.
    #[arg(long, global = true, env = OUT_DIR_ENV, default_value = "critnet-out")]
    pub out: PathBuf,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Flat JSON object of defaults keyed by flag name; flags win.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// More logging (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Write a synthetic network as an edge list.
    Generate(GenerateArgs),
    /// SIR-label every node of a network (cached).
    Label(LabelArgs),
    /// Pre-train the influence model on synthetic networks.
    Pretrain(PretrainArgs),
    /// Pick the nodes to label for fine-tuning.
    Select(SelectArgs),
    /// Fine-tune a checkpoint on the selected nodes of a network.
    Finetune(FinetuneArgs),
    /// Score every node with a model or a centrality baseline.
    Rank(RankArgs),
    /// Score one model against SIR labels.
    Evaluate(EvaluateArgs),
    /// Choose influence-maximization seeds from a ranking.
    Imp(ImpArgs),
    /// Simulate spread from the seed sets of every ranking.
    Spread(SpreadArgs),
    /// Compare every ranking of a network with SIR labels and each other.
    Compare(CompareArgs),
    /// Check the fixture networks against their manifest.
    Fixtures(FixturesArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Generate(_) => "generate",
            Command::Label(_) => "label",
            Command::Pretrain(_) => "pretrain",
            Command::Select(_) => "select",
            Command::Finetune(_) => "finetune",
            Command::Rank(_) => "rank",
            Command::Evaluate(_) => "evaluate",
            Command::Imp(_) => "imp",
            Command::Spread(_) => "spread",
            Command::Compare(_) => "compare",
            Command::Fixtures(_) => "fixtures",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Er,
    Ba,
    Ws,
}

#[derive(Debug, Args, Serialize)]
pub struct GenerateArgs {
    #[arg(long, value_enum)]
    pub family: Family,
    #[arg(long)]
    pub nodes: usize,
    /// Edge probability (ER).
    #[arg(long)]
    pub p: Option<f64>,
    /// Edges per new node (BA).
    #[arg(long)]
    pub m: Option<usize>,
    /// Ring degree (WS).
    #[arg(long)]
    pub ring_degree: Option<usize>,
    /// Rewiring probability (WS).
    #[arg(long)]
    pub rewire: Option<f64>,
    #[arg(long)]
    pub seed: u64,
    /// File stem; defaults to `<family><nodes>_s<seed>`.
    #[arg(long)]
    pub name: Option<String>,
}

/// A network given as an edge-list path or a fixture name.
#[derive(Debug, Args, Serialize)]
pub struct GraphArg {
    #[arg(long)]
    pub graph: String,
}

#[derive(Debug, Args, Serialize)]
pub struct LabelArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub graph: GraphArg,
    #[arg(long, default_value_t = 1000)]
    pub runs: usize,
    #[arg(long)]
    pub seed: u64,
    /// Transmission rate; defaults to 1.01 times the epidemic threshold.
    #[arg(long)]
    pub beta: Option<f64>,
    /// Overwrite a cache built for a different version of the network.
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct PretrainArgs {
    #[arg(long, default_value_t = 20)]
    pub graphs: usize,
    #[arg(long, default_value_t = 100)]
    pub min_nodes: usize,
    #[arg(long, default_value_t = 300)]
    pub max_nodes: usize,
    #[arg(long, default_value_t = 200)]
    pub epochs: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub lr: f64,
    #[arg(long, default_value_t = 1000)]
    pub runs: usize,
    #[arg(long)]
    pub seed: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct SelectArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub graph: GraphArg,
    /// Defaults to the pre-trained checkpoint in the output directory.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Requested sample count, capped at a tenth of the nodes.
    #[arg(long, default_value_t = 50)]
    pub budget: usize,
    /// Stochastic passes for the uncertainty estimate.
    #[arg(long, default_value_t = 20)]
    pub passes: usize,
    #[arg(long)]
    pub seed: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct FinetuneArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub graph: GraphArg,
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Defaults to the `select` output for the network.
    #[arg(long)]
    pub samples: Option<PathBuf>,
    #[arg(long, default_value_t = 1000)]
    pub runs: usize,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long, default_value_t = 1e-4)]
    pub finetune_lr: f64,
    #[arg(long, default_value_t = 100)]
    pub finetune_epochs: usize,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Baseline {
    Degree,
    KShell,
    HIndex,
    Pagerank,
    Clustering,
}

impl Baseline {
    pub fn name(self) -> &'static str {
        match self {
            Baseline::Degree => "degree",
            Baseline::KShell => "k_shell",
            Baseline::HIndex => "h_index",
            Baseline::Pagerank => "pagerank",
            Baseline::Clustering => "clustering",
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct RankArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub graph: GraphArg,
    /// Model checkpoint; the fine-tuned one for the network is preferred
    /// when omitted.
    #[arg(long, conflicts_with = "method")]
    pub checkpoint: Option<PathBuf>,
    /// Centrality baseline instead of a model.
    #[arg(long, value_enum)]
    pub method: Option<Baseline>,
    /// Ranking name; defaults to the baseline, or gnnt / gnntal by stage.
    #[arg(long)]
    pub name: Option<String>,
}

#[derive(Debug, Args, Serialize)]
pub struct EvaluateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub graph: GraphArg,
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// SIR label CSV; defaults to the `label` output for the network.
    #[arg(long)]
    pub against: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', default_values_t = [10, 20, 50])]
    pub top_k: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    /// Diversity-constrained greedy.
    Diverse,
    /// Plain top-k.
    Top,
}

#[derive(Debug, Args, Serialize)]
pub struct ImpArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub graph: GraphArg,
    /// Ranking name in the output directory, or a ranking CSV path.
    #[arg(long)]
    pub ranking: String,
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    #[arg(long, value_enum, default_value_t = Strategy::Diverse)]
    pub strategy: Strategy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProcessKind {
    Ic,
    Lt,
    Si,
}

#[derive(Debug, Args, Serialize)]
pub struct SpreadArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub graph: GraphArg,
    #[arg(long, value_enum)]
    pub model: ProcessKind,
    /// Seed-set sizes 1..=max-size for IC and LT; the single size for SI.
    #[arg(long, default_value_t = 10)]
    pub max_size: usize,
    #[arg(long, default_value_t = 1000)]
    pub runs: usize,
    #[arg(long)]
    pub seed: u64,
    /// IC edge probability; defaults to 1.01 times the epidemic threshold.
    #[arg(long)]
    pub p: Option<f64>,
    /// SI infection rate; defaults to 1.01 times the epidemic threshold.
    #[arg(long)]
    pub beta: Option<f64>,
    /// SI steps.
    #[arg(long, default_value_t = 50)]
    pub steps: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    TauA,
    TauB,
}

#[derive(Debug, Args, Serialize)]
pub struct CompareArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub graph: GraphArg,
    #[arg(long)]
    pub against: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', default_values_t = [10, 20, 50])]
    pub top_k: Vec<usize>,
    /// Statistic used for the method matrix.
    #[arg(long, value_enum, default_value_t = Variant::TauB)]
    pub variant: Variant,
}

#[derive(Debug, Args, Serialize)]
pub struct FixturesArgs {
    /// Where user-fetched fixtures live.
    #[arg(long)]
    pub dir: Option<PathBuf>,
}
