//! Command-line interface. Each subcommand is one pipeline stage over the
//! documented file formats; `run` chains them all.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use log::{info, warn};
use logmesh_core::digcn::ModelConfig;
use logmesh_core::drain::DrainConfig;
use logmesh_core::grouping::{Label, LogGroup, LogRecord};
use logmesh_core::semantics::EmbeddingMode;
use logmesh_core::svdd::{fit, TrainConfig};
use serde::{Deserialize, Serialize};

use crate::bench::{run_bench_to, BenchSpec};
use crate::config::{GroupBy, PipelineConfig, SEED_ENV};
use crate::error::{Error, Result};
use crate::io::{self, ScoreLine};
use crate::labels::read_labels;
use crate::logformat::{load_masks, FormatDescriptor, LineParser};
use crate::parse::parse_file;
use crate::pipeline::{self, build_embeddings, build_graphs, build_groups, evaluate, explain_graphs, score_graphs};

#[derive(Debug, Parser)]
#[command(name = "logmesh", version, about = "Graph-based log anomaly detection")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum GroupByArg {
    Id,
    IdWindow,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse a log file into records and a template catalog.
    Parse {
        #[arg(long)]
        format: PathBuf,
        #[arg(long)]
        mask: Option<PathBuf>,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out_records: PathBuf,
        #[arg(long)]
        out_catalog: PathBuf,
        #[arg(long, default_value_t = 4)]
        depth: usize,
        #[arg(long, default_value_t = 0.4)]
        st: f64,
        #[arg(long, default_value_t = 100)]
        max_children: usize,
    },
    /// Group records by identifier, optionally in fixed windows.
    Group {
        #[arg(long)]
        records: PathBuf,
        #[arg(long, value_enum, default_value = "id")]
        by: GroupByArg,
        #[arg(long, default_value_t = 100)]
        window: usize,
        #[arg(long)]
        labels: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Attribute vectors for every template.
    Embed {
        #[arg(long)]
        catalog: PathBuf,
        #[arg(long, required_unless_present = "onehot")]
        vectors: Option<PathBuf>,
        #[arg(long)]
        onehot: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build one log graph per group.
    Graphs {
        #[arg(long)]
        groups: PathBuf,
        #[arg(long)]
        embeddings: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train on the graphs not labelled anomalous.
    Train {
        #[arg(long)]
        graphs: PathBuf,
        /// JSON with optional `model` and `train` sections.
        #[arg(long)]
        cfg: Option<PathBuf>,
        /// Labelled graphs for checkpoint selection.
        #[arg(long)]
        validation: Option<PathBuf>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Anomaly score of every graph.
    Score {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        graphs: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Node importances for every graph in the file.
    Explain {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        graphs: PathBuf,
        /// Catalog for template text in labels.
        #[arg(long)]
        catalog: Option<PathBuf>,
        #[arg(long, default_value_t = 3)]
        top: usize,
        #[arg(long)]
        dot_dir: Option<PathBuf>,
        /// Skip graphs not labelled anomalous.
        #[arg(long)]
        anomalous_only: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// ROC AUC and average precision of a score file.
    Eval {
        #[arg(long)]
        scores: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Synthetic structural benchmark.
    BenchSynth {
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Every stage from one configuration file.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out_dir: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        epochs: Option<usize>,
    },
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainSpec {
    pub model: ModelConfig,
    pub train: TrainConfig,
}

fn env_seed() -> Result<Option<u64>> {
    match std::env::var(SEED_ENV) {
        Ok(raw) => raw
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Error::config(format!("{SEED_ENV}={raw:?} is not an unsigned integer"))),
        Err(_) => Ok(None),
    }
}

fn non_anomalous(graphs: Vec<logmesh_core::graph::LogGraph>) -> Vec<logmesh_core::graph::LogGraph> {
    graphs.into_iter().filter(|g| g.label != Label::Anomalous).collect()
}

pub fn execute(command: Command) -> Result<()> {
    match command {
        Command::Parse {
            format,
            mask,
            input,
            out_records,
            out_catalog,
            depth,
            st,
            max_children,
        } => {
            let fmt = FormatDescriptor::load(&format)?;
            let masks = mask.as_deref().map(load_masks).transpose()?.unwrap_or_default();
            let parser = LineParser::new(&fmt, &masks)?;
            let drain = DrainConfig {
                depth,
                similarity_threshold: st,
                max_children,
            };
            let out = parse_file(&input, &parser, drain)?;
            if out.malformed > 0 {
                warn!("{} malformed lines skipped", out.malformed);
            }
            io::write_jsonl(&out_records, &out.records)?;
            io::write_catalog(&out_catalog, &out.catalog)?;
            info!("{} records, {} templates", out.records.len(), out.catalog.len());
        }
        Command::Group {
            records,
            by,
            window,
            labels,
            out,
        } => {
            let records: Vec<LogRecord> = io::read_jsonl(&records)?;
            let truth = labels.as_deref().map(read_labels).transpose()?;
            let by = match by {
                GroupByArg::Id => GroupBy::Id,
                GroupByArg::IdWindow => GroupBy::IdWindow,
            };
            let groups = build_groups(&records, by, window, truth.as_ref())?;
            io::write_jsonl(&out, &groups)?;
            info!("{} groups", groups.len());
        }
        Command::Embed {
            catalog,
            vectors,
            onehot,
            out,
        } => {
            let catalog = io::read_catalog(&catalog)?;
            let mode = if onehot {
                EmbeddingMode::Onehot
            } else {
                EmbeddingMode::Semantic
            };
            let table = build_embeddings(&catalog, mode, vectors.as_deref())?;
            io::write_embeddings(&out, &table)?;
        }
        Command::Graphs {
            groups,
            embeddings,
            out,
        } => {
            let groups: Vec<LogGroup> = io::read_jsonl(&groups)?;
            let table = io::read_embeddings(&embeddings)?;
            io::write_graphs(&out, &build_graphs(&groups, &table)?)?;
        }
        Command::Train {
            graphs,
            cfg,
            validation,
            epochs,
            seed,
            out,
        } => {
            let mut spec: TrainSpec = cfg.as_deref().map(io::read_json).transpose()?.unwrap_or_default();
            if let Some(s) = env_seed()? {
                spec.train.seed = s;
            }
            if let Some(s) = seed {
                spec.train.seed = s;
            }
            if let Some(e) = epochs {
                spec.train.epochs = e;
            }
            spec.model.validate()?;
            spec.train.validate()?;
            let train = non_anomalous(io::read_graphs(&graphs)?);
            let val = validation.as_deref().map(io::read_graphs).transpose()?;
            let labels: Vec<bool> = val.iter().flatten().map(|g| g.label == Label::Anomalous).collect();
            let (model, report) = fit(
                &train,
                spec.model,
                &spec.train,
                val.as_deref().map(|v| (v, labels.as_slice())),
            )?;
            info!("final loss {:?}", report.losses.last());
            io::write_model(&out, &model)?;
        }
        Command::Score { model, graphs, out } => {
            let model = io::read_model(&model)?;
            let graphs = io::read_graphs(&graphs)?;
            io::write_jsonl(&out, &score_graphs(&model, &graphs)?)?;
        }
        Command::Explain {
            model,
            graphs,
            catalog,
            top,
            dot_dir,
            anomalous_only,
            out,
        } => {
            if top == 0 {
                return Err(Error::config("--top must be at least 1"));
            }
            let model = io::read_model(&model)?;
            let graphs = io::read_graphs(&graphs)?;
            let catalog = catalog
                .as_deref()
                .map(io::read_catalog)
                .transpose()?
                .unwrap_or_default();
            let chosen: Vec<_> = graphs
                .iter()
                .filter(|g| !anomalous_only || g.label == Label::Anomalous)
                .collect();
            let text = pipeline::catalog_text(&catalog);
            let lines = explain_graphs(&model, &chosen, &text, top, dot_dir.as_deref())?;
            io::write_jsonl(&out, &lines)?;
        }
        Command::Eval { scores, out } => {
            let scores: Vec<ScoreLine> = io::read_jsonl(&scores)?;
            let report = evaluate(&scores)
                .ok_or_else(|| Error::config("scores need at least one normal and one anomalous label"))?;
            io::write_json(&out, &report)?;
            println!(
                "roc_auc={:.6} ap={:.6} n_pos={} n_neg={}",
                report.roc_auc, report.ap, report.n_pos, report.n_neg
            );
        }
        Command::BenchSynth { spec, out_dir } => {
            let mut spec: BenchSpec = spec.as_deref().map(io::read_json).transpose()?.unwrap_or_default();
            if let Some(s) = env_seed()? {
                spec.train.seed = s;
            }
            spec.model.validate()?;
            spec.train.validate()?;
            let report = run_bench_to(&spec, &out_dir)?;
            for t in &report.per_type {
                println!("{} roc_auc={:.6} ap={:.6} n={}", t.kind.code(), t.roc_auc, t.ap, t.n);
            }
        }
        Command::Run {
            config,
            out_dir,
            seed,
            epochs,
        } => {
            let mut cfg = PipelineConfig::load(&config)?;
            resolve_relative(&mut cfg, config.parent().unwrap_or(Path::new(".")));
            cfg.apply_env()?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(e) = epochs {
                cfg.train.epochs = e;
            }
            if let Some(o) = out_dir {
                cfg.out_dir = o;
            }
            let report = pipeline::run_pipeline(&cfg)?;
            if let Some(m) = report.metrics {
                println!(
                    "roc_auc={:.6} ap={:.6} n_pos={} n_neg={}",
                    m.roc_auc, m.ap, m.n_pos, m.n_neg
                );
            }
            println!("artifacts in {}", cfg.out_dir.display());
        }
    }
    Ok(())
}

/// Paths in a config file are relative to the file itself.
fn resolve_relative(cfg: &mut PipelineConfig, base: &Path) {
    let fix = |p: &mut PathBuf| {
        if p.is_relative() {
            *p = base.join(&*p);
        }
    };
    if let crate::config::Source::Logs(src) = &mut cfg.source {
        fix(&mut src.path);
        fix(&mut src.format);
        src.mask.as_mut().map(fix);
        src.labels.as_mut().map(fix);
    }
    cfg.embedding.vectors.as_mut().map(fix);
}

/// Parses arguments, runs, and maps the outcome to an exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
