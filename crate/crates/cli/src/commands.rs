use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use critnet_core::active::{finetune, select_samples, FinetuneConfig, SampleBudget};
use critnet_core::features::{
    clustering_coefficient, degree_centrality, feature_matrix, h_index, k_shell, pagerank, CentralityVector,
};
use critnet_core::fixtures;
use critnet_core::generators::GeneratorSpec;
use critnet_core::metrics::{jaccard_topk, kendall_tau, method_matrix, TauVariant};
use critnet_core::model::{build_dataset, pretrain_on, Checkpoint, Mode, TrainConfig};
use critnet_core::propagation::{epidemic_threshold, sir_label, InfluenceLabels, LabelMeta};
use critnet_core::seeding::{diverse_seeds, evaluate_seed_set, top_k_seeds, Ranking, SpreadProcess};
use critnet_core::table::{fmt_real, Table};
use critnet_core::Graph;
use log::{info, warn};
use serde_json::json;

use crate::args::*;
use crate::error::{CliError, CliResult};
use crate::manifest::Recorder;

pub struct Ctx {
    pub out: PathBuf,
    pub rec: Recorder,
}

impl Ctx {
    fn dir(&self, sub: &str) -> PathBuf {
        self.out.join(sub)
    }

    fn write(&mut self, path: &Path, text: &str) -> CliResult<()> {
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| CliError::runtime(format!("{}: {e}", parent.display())))?;
        }
        std::fs::write(path, text).map_err(|e| CliError::runtime(format!("{}: {e}", path.display())))?;
        self.rec.output(path);
        Ok(())
    }

    fn mkdir(&self, path: &Path) -> CliResult<()> {
        std::fs::create_dir_all(path).map_err(|e| CliError::runtime(format!("{}: {e}", path.display())))
    }

    /// Loads `--graph`: an edge-list path, else a fixture name. Returns the
    /// graph and the stem naming its artifacts.
    fn graph(&mut self, spec: &str) -> CliResult<(Graph, String)> {
        let path = Path::new(spec);
        let (g, stem) = if path.is_file() {
            self.rec.input(path);
            let stem = path
                .file_stem()
                .and_then(|s| s.to_str())
                .ok_or_else(|| CliError::validation(format!("cannot name artifacts after {spec}")))?;
            (Graph::load_path(path)?, stem.to_string())
        } else if let Ok(f) = fixtures::fixture(spec) {
            let g = fixtures::load(spec)?;
            let file = fixtures::fixture_dir().join(&f.file);
            if file.is_file() {
                self.rec.input(&file);
            }
            (g, spec.to_string())
        } else {
            return Err(CliError::validation(format!(
                "graph `{spec}` is neither a file nor a fixture name"
            )));
        };
        self.rec.graph_hashes.push(g.content_hash());
        Ok((g, stem))
    }

    fn checkpoint(&mut self, path: &Path, stage: &str) -> CliResult<Checkpoint> {
        if !path.is_file() {
            return Err(CliError::missing("checkpoint", path, stage));
        }
        self.rec.input(path);
        Ok(Checkpoint::load(path)?)
    }

    fn pretrained_path(&self) -> PathBuf {
        self.dir("models").join("pretrained.ckpt")
    }

    fn finetuned_path(&self, stem: &str) -> PathBuf {
        self.dir("models").join(format!("{stem}.finetuned.ckpt"))
    }

    /// Explicit checkpoint, else the network's fine-tuned model, else the
    /// pre-trained one.
    fn model_for(&mut self, explicit: Option<&PathBuf>, stem: &str) -> CliResult<Checkpoint> {
        let path = match explicit {
            Some(p) => p.clone(),
            None if self.finetuned_path(stem).is_file() => self.finetuned_path(stem),
            None => self.pretrained_path(),
        };
        self.checkpoint(&path, "pretrain")
    }

    fn labels_path(&self, stem: &str) -> PathBuf {
        self.dir("labels").join(format!("{stem}.csv"))
    }

    /// Dense SIR oracle from a label CSV; only `node_id` and `mean_infected`
    /// are read.
    fn oracle(&mut self, against: Option<&PathBuf>, stem: &str, n: usize) -> CliResult<Vec<f64>> {
        let path = against.cloned().unwrap_or_else(|| self.labels_path(stem));
        if !path.is_file() {
            return Err(CliError::missing("SIR labels", &path, "label"));
        }
        self.rec.input(&path);
        let values = read_table(&path)?.dense_column("mean_infected")?;
        if values.len() != n {
            return Err(CliError::validation(format!(
                "{} labels {} nodes, the network has {n}",
                path.display(),
                values.len()
            )));
        }
        Ok(values)
    }

    /// Every ranking CSV written for `stem`, sorted by name.
    fn rankings(&mut self, stem: &str, n: usize) -> CliResult<Vec<Ranking>> {
        let dir = self.dir("rankings");
        let prefix = format!("{stem}.");
        let mut found = Vec::new();
        if let Ok(entries) = std::fs::read_dir(&dir) {
            for e in entries.flatten() {
                let name = e.file_name().to_string_lossy().to_string();
                if let Some(method) = name.strip_prefix(&prefix).and_then(|r| r.strip_suffix(".csv")) {
                    if !method.contains('.') {
                        found.push((method.to_string(), e.path()));
                    }
                }
            }
        }
        if found.is_empty() {
            return Err(CliError::missing("rankings", &dir.join(format!("{stem}.*.csv")), "rank"));
        }
        found.sort();
        found
            .into_iter()
            .map(|(method, path)| self.ranking_file(&path, &method, n))
            .collect()
    }

    fn ranking_file(&mut self, path: &Path, method: &str, n: usize) -> CliResult<Ranking> {
        self.rec.input(path);
        let scores = read_table(path)?.dense_column("score")?;
        if scores.len() != n {
            return Err(CliError::validation(format!(
                "{} ranks {} nodes, the network has {n}",
                path.display(),
                scores.len()
            )));
        }
        Ok(Ranking::from_scores(method, scores)?)
    }
}

fn read_table(path: &Path) -> CliResult<Table> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::validation(format!("{}: {e}", path.display())))?;
    Table::parse(&text).map_err(|e| CliError::validation(format!("{}: {e}", path.display())))
}

fn transmission(g: &Graph, explicit: Option<f64>) -> CliResult<f64> {
    match explicit {
        Some(b) if (0.0..=1.0).contains(&b) => Ok(b),
        Some(b) => Err(CliError::validation(format!("rate {b} is not a probability"))),
        None => Ok(epidemic_threshold(g)?.transmission),
    }
}

pub fn generate(ctx: &mut Ctx, a: &GenerateArgs) -> CliResult<()> {
    ctx.rec.seed = Some(a.seed);
    let need = |what: &str| CliError::validation(format!("--{what} is required for {:?}", a.family));
    let spec = match a.family {
        Family::Er => GeneratorSpec::Er {
            n: a.nodes,
            p: a.p.ok_or_else(|| need("p"))?,
        },
        Family::Ba => GeneratorSpec::Ba {
            n: a.nodes,
            m: a.m.ok_or_else(|| need("m"))?,
        },
        Family::Ws => GeneratorSpec::Ws {
            n: a.nodes,
            k: a.ring_degree.ok_or_else(|| need("ring-degree"))?,
            beta: a.rewire.ok_or_else(|| need("rewire"))?,
        },
    };
    let g = spec.generate(a.seed)?.relabeled_for_listing();
    let isolated = (0..g.num_nodes()).filter(|&v| g.degree(v) == 0).count();
    if isolated > 0 {
        warn!("{isolated} isolated nodes cannot be written to an edge list and are dropped");
    }
    let name = a
        .name
        .clone()
        .unwrap_or_else(|| format!("{:?}{}_s{}", a.family, a.nodes, a.seed).to_lowercase());
    let path = ctx.dir("graphs").join(format!("{name}.edges"));
    let header = format!(
        "# {} seed {}\n# {} nodes, {} edges, {isolated} isolated dropped\n",
        serde_json::to_string(&spec)?,
        a.seed,
        g.num_nodes(),
        g.num_edges()
    );
    ctx.write(&path, &(header + &g.to_edge_list()))?;
    ctx.rec.graph_hashes.push(g.content_hash());
    println!("{}", path.display());
    Ok(())
}

fn stale(path: &Path, meta: &LabelMeta, g: &Graph) -> CliError {
    CliError::validation(format!(
        "stale label cache {}: built for graph {} but the network now hashes to {}; delete it or rerun with --force",
        path.display(),
        meta.graph_hash,
        g.content_hash()
    ))
}

fn cached_meta(path: &Path) -> Option<LabelMeta> {
    let side = InfluenceLabels::sidecar_path(path);
    let text = std::fs::read_to_string(side).ok()?;
    serde_json::from_str(&text).ok()
}

pub fn label(ctx: &mut Ctx, a: &LabelArgs) -> CliResult<()> {
    ctx.rec.seed = Some(a.seed);
    let (g, stem) = ctx.graph(&a.graph.graph)?;
    let beta = transmission(&g, a.beta)?;
    let path = ctx.labels_path(&stem);
    if path.is_file() {
        if let Some(meta) = cached_meta(&path) {
            if meta.graph_hash != g.content_hash() && !a.force {
                return Err(stale(&path, &meta, &g));
            }
            let fresh = meta.graph_hash == g.content_hash()
                && meta.runs == a.runs
                && meta.beta_th.to_bits() == beta.to_bits()
                && meta.master_seed == a.seed
                && meta.labeled_nodes == g.num_nodes();
            if fresh {
                InfluenceLabels::load(&path)?.check_graph(&g)?;
                info!("reusing cached labels {}", path.display());
                ctx.rec.output(&path);
                println!("{}", path.display());
                return Ok(());
            }
        }
    }
    let nodes: Vec<usize> = (0..g.num_nodes()).collect();
    let labels = sir_label(&g, &nodes, a.runs, beta, a.seed)?;
    ctx.mkdir(&ctx.dir("labels"))?;
    labels.save(&path)?;
    ctx.rec.output(&path);
    ctx.rec.output(&InfluenceLabels::sidecar_path(&path));
    println!("{}", path.display());
    Ok(())
}

pub fn pretrain(ctx: &mut Ctx, a: &PretrainArgs) -> CliResult<()> {
    ctx.rec.seed = Some(a.seed);
    if a.graphs == 0 || a.min_nodes < 4 || a.min_nodes > a.max_nodes {
        return Err(CliError::validation(format!(
            "need at least one graph and 4 <= min-nodes <= max-nodes (got {}, {}..{})",
            a.graphs, a.min_nodes, a.max_nodes
        )));
    }
    let config = TrainConfig {
        lr: a.lr,
        epochs: a.epochs,
        seed: a.seed,
        graphs: GeneratorSpec::default_mix(a.graphs, a.min_nodes, a.max_nodes),
        sir_runs: a.runs,
    };
    let data = build_dataset(&config)?;
    for d in &data {
        ctx.rec.graph_hashes.push(d.graph.content_hash());
    }
    let ck = pretrain_on(&config, &data)?;
    let path = ctx.pretrained_path();
    ctx.mkdir(&ctx.dir("models"))?;
    ck.save(&path)?;
    ctx.rec.output(&path);
    info!("final loss {:?}", ck.meta.final_loss);
    println!("{}", path.display());
    Ok(())
}

pub fn select(ctx: &mut Ctx, a: &SelectArgs) -> CliResult<()> {
    ctx.rec.seed = Some(a.seed);
    let (g, stem) = ctx.graph(&a.graph.graph)?;
    let path = a.checkpoint.clone().unwrap_or_else(|| ctx.pretrained_path());
    let ck = ctx.checkpoint(&path, "pretrain")?;
    let x = feature_matrix(&g)?;
    let budget = SampleBudget::new(a.budget, g.num_nodes())?;
    if budget.effective < budget.requested {
        info!(
            "budget {} capped at {} for {} nodes",
            budget.requested,
            budget.cap,
            g.num_nodes()
        );
    }
    let sel = select_samples(&ck, &g, &x, budget, a.passes, a.seed)?;
    let out = ctx.dir("samples").join(format!("{stem}.csv"));
    ctx.write(&out, &sel.to_csv())?;
    println!("{}", out.display());
    Ok(())
}

fn sample_nodes(path: &Path, n: usize) -> CliResult<Vec<usize>> {
    let t = read_table(path)?;
    let col = t.column("node_id")?;
    let nodes = (0..t.rows.len())
        .map(|r| t.parse_cell::<usize>(r, col))
        .collect::<critnet_core::Result<Vec<_>>>()?;
    if nodes.is_empty() {
        return Err(CliError::validation(format!("{} selects no nodes", path.display())));
    }
    if let Some(&v) = nodes.iter().find(|&&v| v >= n) {
        return Err(CliError::validation(format!("{}: node {v} out of range", path.display())));
    }
    Ok(nodes)
}

pub fn finetune_cmd(ctx: &mut Ctx, a: &FinetuneArgs) -> CliResult<()> {
    ctx.rec.seed = Some(a.seed);
    let (g, stem) = ctx.graph(&a.graph.graph)?;
    let base_path = a.checkpoint.clone().unwrap_or_else(|| ctx.pretrained_path());
    let base = ctx.checkpoint(&base_path, "pretrain")?;
    let samples = a
        .samples
        .clone()
        .unwrap_or_else(|| ctx.dir("samples").join(format!("{stem}.csv")));
    if !samples.is_file() {
        return Err(CliError::missing("selected samples", &samples, "select"));
    }
    ctx.rec.input(&samples);
    let nodes = sample_nodes(&samples, g.num_nodes())?;
    let beta = transmission(&g, a.beta)?;

    let full = ctx.labels_path(&stem);
    let mut labels = None;
    if let Some(meta) = full.is_file().then(|| cached_meta(&full)).flatten() {
        if meta.graph_hash != g.content_hash() && !a.force {
            return Err(stale(&full, &meta, &g));
        }
        if meta.graph_hash == g.content_hash()
            && meta.runs == a.runs
            && meta.beta_th.to_bits() == beta.to_bits()
            && meta.master_seed == a.seed
        {
            labels = InfluenceLabels::load(&full)?.restrict(&nodes);
            if labels.is_some() {
                info!("selected labels taken from {}", full.display());
                ctx.rec.input(&full);
            }
        }
    }
    let labels = match labels {
        Some(l) => l,
        None => {
            let l = sir_label(&g, &nodes, a.runs, beta, a.seed)?;
            let path = ctx.dir("labels").join(format!("{stem}.selected.csv"));
            ctx.mkdir(&ctx.dir("labels"))?;
            l.save(&path)?;
            ctx.rec.output(&path);
            l
        }
    };
    let config = FinetuneConfig {
        lr: a.finetune_lr,
        epochs: a.finetune_epochs,
        seed: a.seed,
    };
    let (ck, _) = finetune(&base, &g, &labels, &config)?;
    let path = ctx.finetuned_path(&stem);
    ctx.mkdir(&ctx.dir("models"))?;
    ck.save(&path)?;
    ctx.rec.primary(&path);
    println!("{}", path.display());
    Ok(())
}

fn baseline_scores(g: &Graph, method: Baseline) -> CliResult<CentralityVector> {
    Ok(match method {
        Baseline::Degree => degree_centrality(g),
        Baseline::KShell => k_shell(g),
        Baseline::HIndex => h_index(g),
        Baseline::Pagerank => pagerank(g, 0.85, 1e-9)?,
        Baseline::Clustering => clustering_coefficient(g),
    })
}

fn model_name(ck: &Checkpoint) -> &'static str {
    if ck.meta.stage == "finetuned" {
        "gnntal"
    } else {
        "gnnt"
    }
}

pub fn rank(ctx: &mut Ctx, a: &RankArgs) -> CliResult<()> {
    let (g, stem) = ctx.graph(&a.graph.graph)?;
    let (default_name, scores) = match a.method {
        Some(m) => (m.name().to_string(), baseline_scores(&g, m)?.scores),
        None => {
            let ck = ctx.model_for(a.checkpoint.as_ref(), &stem)?;
            if let Some(h) = &ck.meta.network_hash {
                if *h != g.content_hash() {
                    warn!("checkpoint was fine-tuned on a different network");
                }
            }
            let x = feature_matrix(&g)?;
            (model_name(&ck).to_string(), ck.predict(&g, &x, Mode::Eval)?)
        }
    };
    let name = a.name.clone().unwrap_or(default_name);
    if name.is_empty() || name.contains(['.', '/', '\\']) {
        return Err(CliError::validation(format!("ranking name `{name}` may not contain '.' or path separators")));
    }
    let ranking = Ranking::from_scores(&name, scores)?;
    let path = ctx.dir("rankings").join(format!("{stem}.{name}.csv"));
    ctx.write(&path, &ranking.to_csv())?;
    println!("{}", path.display());
    Ok(())
}

fn clipped_ks(ks: &[usize], n: usize) -> Vec<usize> {
    let mut out: Vec<usize> = ks.iter().map(|&k| k.clamp(1, n)).collect();
    out.dedup();
    out
}

pub fn evaluate(ctx: &mut Ctx, a: &EvaluateArgs) -> CliResult<()> {
    let (g, stem) = ctx.graph(&a.graph.graph)?;
    let ck = ctx.model_for(a.checkpoint.as_ref(), &stem)?;
    let oracle = ctx.oracle(a.against.as_ref(), &stem, g.num_nodes())?;
    let x = feature_matrix(&g)?;
    let scores = ck.predict(&g, &x, Mode::Eval)?;
    let name = model_name(&ck);
    let mut jaccard = serde_json::Map::new();
    for k in clipped_ks(&a.top_k, g.num_nodes()) {
        jaccard.insert(k.to_string(), json!(jaccard_topk(&scores, &oracle, k)?));
    }
    let report = json!({
        "method": name,
        "graph": stem,
        "nodes": g.num_nodes(),
        "kendall_tau_b": kendall_tau(&scores, &oracle, TauVariant::TauB)?,
        "kendall_tau_a": kendall_tau(&scores, &oracle, TauVariant::TauA)?,
        "jaccard_top_k": jaccard,
    });
    let path = ctx.dir("eval").join(format!("{stem}.{name}.json"));
    ctx.write(&path, &(serde_json::to_string_pretty(&report)? + "\n"))?;
    println!("{report}");
    Ok(())
}

pub fn compare(ctx: &mut Ctx, a: &CompareArgs) -> CliResult<()> {
    let (g, stem) = ctx.graph(&a.graph.graph)?;
    let n = g.num_nodes();
    let oracle = ctx.oracle(a.against.as_ref(), &stem, n)?;
    let rankings = ctx.rankings(&stem, n)?;
    let ks = clipped_ks(&a.top_k, n);
    let mut table = String::from("method,kendall_tau_b,kendall_tau_a");
    for k in &ks {
        let _ = write!(table, ",jaccard_top{k}");
    }
    table.push('\n');
    for r in &rankings {
        let _ = write!(
            table,
            "{},{},{}",
            r.method,
            fmt_real(kendall_tau(&r.scores, &oracle, TauVariant::TauB)?),
            fmt_real(kendall_tau(&r.scores, &oracle, TauVariant::TauA)?)
        );
        for &k in &ks {
            let _ = write!(table, ",{}", fmt_real(jaccard_topk(&r.scores, &oracle, k)?));
        }
        table.push('\n');
    }
    let path = ctx.dir("compare").join(format!("{stem}.csv"));
    ctx.write(&path, &table)?;

    let mut sequences = vec![CentralityVector::new("sir", oracle)];
    sequences.extend(rankings.iter().map(|r| CentralityVector::new(r.method.clone(), r.scores.clone())));
    let variant = match a.variant {
        Variant::TauA => TauVariant::TauA,
        Variant::TauB => TauVariant::TauB,
    };
    let matrix = method_matrix(&sequences, variant)?;
    let mpath = ctx.dir("compare").join(format!("{stem}.matrix.csv"));
    ctx.write(&mpath, &matrix.to_csv())?;
    print!("{table}");
    Ok(())
}

fn resolve_ranking(ctx: &mut Ctx, spec: &str, stem: &str, n: usize) -> CliResult<Ranking> {
    let as_path = Path::new(spec);
    if as_path.is_file() {
        let file = as_path.file_stem().and_then(|s| s.to_str()).unwrap_or(spec);
        let method = file.strip_prefix(&format!("{stem}.")).unwrap_or(file).to_string();
        return ctx.ranking_file(as_path, &method, n);
    }
    let path = ctx.dir("rankings").join(format!("{stem}.{spec}.csv"));
    if !path.is_file() {
        return Err(CliError::missing("ranking", &path, "rank"));
    }
    ctx.ranking_file(&path, spec, n)
}

pub fn imp(ctx: &mut Ctx, a: &ImpArgs) -> CliResult<()> {
    let (g, stem) = ctx.graph(&a.graph.graph)?;
    let ranking = resolve_ranking(ctx, &a.ranking, &stem, g.num_nodes())?;
    let (seeds, tag) = match a.strategy {
        Strategy::Diverse => (diverse_seeds(&ranking, &g, a.k)?, "diverse"),
        Strategy::Top => (top_k_seeds(&ranking, a.k)?, "top"),
    };
    let path = ctx
        .dir("seeds")
        .join(format!("{stem}.{}.{tag}.k{}.csv", ranking.method, a.k));
    ctx.write(&path, &seeds.to_csv())?;
    println!("{}", path.display());
    Ok(())
}

pub fn spread(ctx: &mut Ctx, a: &SpreadArgs) -> CliResult<()> {
    ctx.rec.seed = Some(a.seed);
    let (g, stem) = ctx.graph(&a.graph.graph)?;
    let n = g.num_nodes();
    let rankings = ctx.rankings(&stem, n)?;
    let max_size = a.max_size.clamp(1, n);
    let (process, label) = match a.model {
        ProcessKind::Ic => (SpreadProcess::Ic { p: transmission(&g, a.p)? }, "IC"),
        ProcessKind::Lt => (SpreadProcess::Lt, "LT"),
        ProcessKind::Si => (
            SpreadProcess::Si {
                beta: transmission(&g, a.beta)?,
                max_steps: a.steps,
            },
            "SI",
        ),
    };
    let mut out = String::from("method,model,seed_size,step,mean,stderr\n");
    for r in &rankings {
        let mut strategies = vec![(r.method.clone(), false)];
        if r.method.starts_with("gnnt") {
            strategies.push((format!("{}-ds", r.method), true));
        }
        for (method, diverse) in strategies {
            let sizes: Vec<usize> = match a.model {
                ProcessKind::Si => vec![max_size],
                _ => (1..=max_size).collect(),
            };
            for k in sizes {
                let seeds = if diverse {
                    diverse_seeds(r, &g, k)?
                } else {
                    top_k_seeds(r, k)?
                };
                let res = evaluate_seed_set(&g, &seeds, process, a.runs, a.seed)?;
                if let ProcessKind::Si = a.model {
                    for (t, (m, s)) in res.per_step_mean.iter().zip(&res.per_step_std_err).enumerate() {
                        let _ = writeln!(out, "{method},{label},{k},{t},{},{}", fmt_real(*m), fmt_real(*s));
                    }
                } else {
                    let _ = writeln!(
                        out,
                        "{method},{label},{k},,{},{}",
                        fmt_real(res.mean_final_active),
                        fmt_real(res.std_err)
                    );
                }
            }
        }
    }
    let path = ctx
        .dir("spread")
        .join(format!("{stem}.{}.csv", label.to_lowercase()));
    ctx.write(&path, &out)?;
    println!("{}", path.display());
    Ok(())
}

pub fn fixtures_cmd(a: &FixturesArgs) -> CliResult<()> {
    let dir = a.dir.clone().unwrap_or_else(fixtures::fixture_dir);
    let report = fixtures::verify_fixtures(&dir)?;
    for (f, status) in &report.entries {
        println!("{:<22} N={:<5} E={:<5} {:?}", f.name, f.nodes, f.edges, status);
    }
    Ok(())
}
