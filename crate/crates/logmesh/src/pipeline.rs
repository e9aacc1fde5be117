//! Stage functions shared by the subcommands, and the end-to-end run.

use std::num::NonZeroUsize;
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::{info, warn};
use logmesh_core::drain::TemplateCatalog;
use logmesh_core::eval::metrics::{average_precision, roc_auc};
use logmesh_core::eval::split::{contaminate, split};
use logmesh_core::eval::synth::{gen_synthetic, NODE_NAMES};
use logmesh_core::explain::{explain, top_nodes};
use logmesh_core::graph::{build_graph, LogGraph};
use logmesh_core::grouping::{
    group_by_identifier, label_groups, window_split, GroundTruth, Label, LogGroup, LogRecord,
};
use logmesh_core::semantics::{onehot_table, semantic_table, EmbeddingMode, TemplateEmbeddingTable};
use logmesh_core::svdd::{fit, OneClassModel};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{GroupBy, PipelineConfig, Source};
use crate::error::{Error, Result};
use crate::io::{self, EvalReport, ExplanationLine, ScoreLine};
use crate::labels::read_labels;
use crate::logformat::{load_masks, FormatDescriptor, LineParser};
use crate::parse::{parse_file, ParseOutput};
use crate::vectors::read_vectors;

pub fn build_groups(
    records: &[LogRecord],
    by: GroupBy,
    window: usize,
    truth: Option<&GroundTruth>,
) -> Result<Vec<LogGroup>> {
    let mut groups = group_by_identifier(records)?;
    if by == GroupBy::IdWindow {
        let w = NonZeroUsize::new(window).ok_or_else(|| Error::config("grouping window must be at least 1"))?;
        groups = groups.iter().flat_map(|g| window_split(g, w)).collect();
    }
    label_groups(&mut groups, truth);
    Ok(groups)
}

pub fn build_embeddings(
    catalog: &TemplateCatalog,
    mode: EmbeddingMode,
    vectors: Option<&Path>,
) -> Result<TemplateEmbeddingTable> {
    match mode {
        EmbeddingMode::Onehot => Ok(onehot_table(catalog.len())),
        EmbeddingMode::Semantic => {
            let path = vectors.ok_or_else(|| Error::config("semantic embedding needs a vector file"))?;
            let table = read_vectors(path)?;
            Ok(semantic_table(&catalog.token_lists(), &table)?)
        }
    }
}

/// One graph per group, nodes in canonical (template id) order.
pub fn build_graphs(groups: &[LogGroup], table: &TemplateEmbeddingTable) -> Result<Vec<LogGraph>> {
    groups.iter().map(|g| Ok(build_graph(g, table)?.canonical())).collect()
}

pub fn score_graphs(model: &OneClassModel, graphs: &[LogGraph]) -> Result<Vec<ScoreLine>> {
    graphs
        .iter()
        .map(|g| {
            Ok(ScoreLine {
                group_key: g.group_key.clone(),
                label: g.label,
                score: model.score(g)?,
            })
        })
        .collect()
}

/// Metrics over the labelled lines; `None` unless both classes occur.
pub fn evaluate(scores: &[ScoreLine]) -> Option<EvalReport> {
    let (s, l): (Vec<f64>, Vec<bool>) = scores
        .iter()
        .filter_map(|x| x.label.as_bool().map(|b| (x.score, b)))
        .unzip();
    let n_pos = l.iter().filter(|&&b| b).count();
    let n_neg = l.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return None;
    }
    Some(EvalReport {
        roc_auc: roc_auc(&s, &l).ok()?,
        ap: average_precision(&s, &l).ok()?,
        n_pos,
        n_neg,
    })
}

/// Explanations for `graphs`; graphs that cannot be explained are logged
/// and skipped. DOT files go to `dot_dir` when given.
pub fn explain_graphs(
    model: &OneClassModel,
    graphs: &[&LogGraph],
    template_text: &dyn Fn(usize) -> String,
    top: usize,
    dot_dir: Option<&Path>,
) -> Result<Vec<ExplanationLine>> {
    let mut out = Vec::new();
    for g in graphs {
        let e = match explain(g, model, template_text) {
            Ok(e) => e,
            Err(err) => {
                warn!("{}: no explanation ({err})", g.group_key);
                continue;
            }
        };
        if let Some(dir) = dot_dir {
            io::write_dot(&dir.join(format!("{}.dot", io::file_stem(&g.group_key))), g, &e)?;
        }
        let top = top_nodes(&e, top).iter().map(|n| n.node).collect();
        out.push(ExplanationLine { explanation: e, top });
    }
    Ok(out)
}

pub fn catalog_text(catalog: &TemplateCatalog) -> impl Fn(usize) -> String + '_ {
    move |t| catalog.get(t).map_or_else(|| format!("E{t}"), |x| x.text())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub metrics: Option<EvalReport>,
    pub stages: Vec<StageTiming>,
    pub malformed_lines: usize,
    pub n_templates: usize,
    pub n_graphs: usize,
    pub n_train: usize,
    pub n_validation: usize,
    pub n_test: usize,
    pub n_injected: usize,
    pub validation_shortfall: usize,
    pub explained: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub config_sha256: String,
    pub seed: u64,
    pub synthetic_seed: Option<u64>,
    pub stages: Vec<StageVersion>,
    pub config: PipelineConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageVersion {
    pub stage: String,
    pub version: String,
}

struct Timer {
    stages: Vec<StageTiming>,
}

impl Timer {
    fn run<T>(&mut self, stage: &'static str, f: impl FnOnce() -> Result<T>) -> Result<T> {
        let start = Instant::now();
        let out = f().map_err(Error::in_stage(stage));
        let seconds = start.elapsed().as_secs_f64();
        info!("{stage}: {seconds:.3}s");
        self.stages.push(StageTiming {
            stage: stage.into(),
            seconds,
        });
        out
    }
}

#[derive(Debug, Clone, Serialize)]
struct SplitFile<'a> {
    train: Vec<&'a str>,
    validation: Vec<&'a str>,
    test: Vec<&'a str>,
}

pub fn config_hash(cfg: &PipelineConfig) -> String {
    let bytes = serde_json::to_vec(cfg).expect("config serializes");
    Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Runs every stage in order, writing each artifact into `cfg.out_dir`.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<RunReport> {
    cfg.validate()?;
    let out = cfg.out_dir.clone();
    let at = |name: &str| -> PathBuf { out.join(name) };
    std::fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;

    let mut timer = Timer { stages: Vec::new() };
    let mut stage_names = Vec::new();
    let mut malformed = 0;
    let catalog: TemplateCatalog;

    let graphs: Vec<LogGraph> = match &cfg.source {
        Source::Synthetic(spec) => {
            stage_names.push("synthesize");
            let samples = timer.run("synthesize", || Ok(gen_synthetic(spec)))?;
            catalog = TemplateCatalog::from_token_lists(NODE_NAMES.iter().map(|n| vec![n.to_string()]).collect());
            samples.into_iter().map(|s| s.graph).collect()
        }
        Source::Logs(src) => {
            stage_names.extend(["parse", "group", "embed", "graphs"]);
            let parsed: ParseOutput = timer.run("parse", || {
                let fmt = FormatDescriptor::load(&src.format)?;
                let masks = match &src.mask {
                    Some(m) => load_masks(m)?,
                    None => Vec::new(),
                };
                let parser = LineParser::new(&fmt, &masks)?;
                let parsed = parse_file(&src.path, &parser, cfg.drain)?;
                io::write_jsonl(&at("records.jsonl"), &parsed.records)?;
                io::write_catalog(&at("catalog.json"), &parsed.catalog)?;
                Ok(parsed)
            })?;
            if parsed.malformed > 0 {
                warn!("{} malformed lines skipped", parsed.malformed);
            }
            malformed = parsed.malformed;
            catalog = parsed.catalog;
            let groups = timer.run("group", || {
                let truth = src.labels.as_deref().map(read_labels).transpose()?;
                let groups = build_groups(&parsed.records, cfg.grouping.by, cfg.grouping.window, truth.as_ref())?;
                io::write_jsonl(&at("groups.jsonl"), &groups)?;
                Ok(groups)
            })?;
            let table = timer.run("embed", || {
                let table = build_embeddings(&catalog, cfg.embedding.mode, cfg.embedding.vectors.as_deref())?;
                io::write_embeddings(&at("embeddings.json"), &table)?;
                Ok(table)
            })?;
            timer.run("graphs", || build_graphs(&groups, &table))?
        }
    };
    io::write_graphs(&at("graphs.jsonl"), &graphs)?;

    stage_names.extend(["split", "train", "score", "explain", "eval"]);
    let (train, val, test, shortfall, injected) = timer.run("split", || {
        let s = split(
            (0..graphs.len()).collect(),
            |&i| graphs[i].label == Label::Anomalous,
            cfg.split,
            cfg.seed,
        )?;
        if s.validation_shortfall > 0 {
            warn!("validation split is {} anomalies short", s.validation_shortfall);
        }
        let mut train = s.train;
        let mut test = s.test;
        let mut injected = 0;
        if cfg.contamination > 0.0 {
            let pool: Vec<usize> = test
                .iter()
                .copied()
                .filter(|&i| graphs[i].label == Label::Anomalous)
                .collect();
            let mixed = contaminate(train, &pool, cfg.contamination, cfg.seed)?;
            let taken: Vec<usize> = mixed
                .items
                .iter()
                .zip(&mixed.injected)
                .filter(|(_, &inj)| inj)
                .map(|(&i, _)| i)
                .collect();
            injected = taken.len();
            test.retain(|i| !taken.contains(i));
            train = mixed.items;
        }
        let keys = |ix: &[usize]| ix.iter().map(|&i| graphs[i].group_key.as_str()).collect::<Vec<_>>();
        io::write_json(
            &at("split.json"),
            &SplitFile {
                train: keys(&train),
                validation: keys(&s.validation),
                test: keys(&test),
            },
        )?;
        Ok((train, s.validation, test, s.validation_shortfall, injected))
    })?;
    let pick = |ix: &[usize]| ix.iter().map(|&i| graphs[i].clone()).collect::<Vec<_>>();
    let (train_g, val_g, test_g) = (pick(&train), pick(&val), pick(&test));

    let model = timer.run("train", || {
        let mut tc = cfg.train;
        tc.seed = cfg.seed;
        let labels: Vec<bool> = val_g.iter().map(|g| g.label == Label::Anomalous).collect();
        let validation = (!val_g.is_empty()).then_some((val_g.as_slice(), labels.as_slice()));
        let (model, report) = fit(&train_g, cfg.model, &tc, validation)?;
        info!(
            "trained {} epochs, final loss {:?}, selected epoch {:?}",
            report.losses.len(),
            model.meta.final_loss,
            model.meta.selected_epoch
        );
        io::write_model(&at("model.json"), &model)?;
        Ok(model)
    })?;

    let scores = timer.run("score", || {
        let scores = score_graphs(&model, &test_g)?;
        io::write_jsonl(&at("scores.jsonl"), &scores)?;
        Ok(scores)
    })?;

    let explained = timer.run("explain", || {
        let k = ((cfg.report_quantile * test_g.len() as f64).ceil() as usize).clamp(1, test_g.len().max(1));
        let mut order: Vec<usize> = (0..test_g.len()).collect();
        order.sort_by(|&a, &b| scores[b].score.total_cmp(&scores[a].score).then(a.cmp(&b)));
        let chosen: Vec<&LogGraph> = order.iter().take(k).map(|&i| &test_g[i]).collect();
        let text = catalog_text(&catalog);
        let lines = explain_graphs(&model, &chosen, &text, cfg.explain_top, Some(&at("dot")))?;
        io::write_jsonl(&at("explanations.jsonl"), &lines)?;
        Ok(lines.len())
    })?;

    let metrics = timer.run("eval", || Ok(evaluate(&scores)))?;
    let report = RunReport {
        metrics,
        stages: timer.stages,
        malformed_lines: malformed,
        n_templates: catalog.len(),
        n_graphs: graphs.len(),
        n_train: train_g.len(),
        n_validation: val_g.len(),
        n_test: test_g.len(),
        n_injected: injected,
        validation_shortfall: shortfall,
        explained,
    };
    io::write_json(&at("report.json"), &report)?;
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config_sha256: config_hash(cfg),
        seed: cfg.seed,
        synthetic_seed: match &cfg.source {
            Source::Synthetic(s) => Some(s.seed),
            Source::Logs(_) => None,
        },
        stages: stage_names
            .into_iter()
            .map(|s| StageVersion {
                stage: s.into(),
                version: env!("CARGO_PKG_VERSION").into(),
            })
            .collect(),
        config: cfg.clone(),
    };
    io::write_json(&at("manifest.json"), &manifest)?;
    Ok(report)
}
