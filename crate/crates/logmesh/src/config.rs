//! Pipeline configuration: one JSON file, every field defaulted.

use std::path::{Path, PathBuf};

use logmesh_core::digcn::ModelConfig;
use logmesh_core::drain::DrainConfig;
use logmesh_core::eval::split::SplitRatios;
use logmesh_core::eval::synth::SyntheticSpec;
use logmesh_core::semantics::EmbeddingMode;
use logmesh_core::svdd::TrainConfig;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SEED_ENV: &str = "LOGMESH_SEED";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Logs(LogSource),
    Synthetic(SyntheticSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogSource {
    pub path: PathBuf,
    /// Format descriptor JSON.
    pub format: PathBuf,
    /// Extra masking regexes, one per line.
    #[serde(default)]
    pub mask: Option<PathBuf>,
    #[serde(default)]
    pub labels: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GroupBy {
    Id,
    IdWindow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct GroupingConfig {
    pub by: GroupBy,
    pub window: usize,
}

impl Default for GroupingConfig {
    fn default() -> Self {
        GroupingConfig {
            by: GroupBy::Id,
            window: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EmbeddingConfig {
    pub mode: EmbeddingMode,
    pub vectors: Option<PathBuf>,
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        EmbeddingConfig {
            mode: EmbeddingMode::Onehot,
            vectors: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub source: Source,
    pub drain: DrainConfig,
    pub grouping: GroupingConfig,
    pub embedding: EmbeddingConfig,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub split: SplitRatios,
    /// Drives splitting, contamination and parameter initialisation.
    pub seed: u64,
    /// Fraction of anomalies in the training set.
    pub contamination: f64,
    /// Highest-scoring fraction of the test set that gets explanations.
    pub report_quantile: f64,
    /// Nodes listed per explanation.
    pub explain_top: usize,
    pub out_dir: PathBuf,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            source: Source::Synthetic(SyntheticSpec::default()),
            drain: DrainConfig::default(),
            grouping: GroupingConfig::default(),
            embedding: EmbeddingConfig::default(),
            model: ModelConfig::default(),
            train: TrainConfig::default(),
            split: SplitRatios::default(),
            seed: 0,
            contamination: 0.0,
            report_quantile: 0.01,
            explain_top: 3,
            out_dir: PathBuf::from("logmesh-out"),
        }
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self> {
        crate::io::read_json(path)
    }

    /// Applies `LOGMESH_SEED` when set.
    pub fn apply_env(&mut self) -> Result<()> {
        if let Ok(raw) = std::env::var(SEED_ENV) {
            self.seed = raw
                .trim()
                .parse()
                .map_err(|_| Error::config(format!("{SEED_ENV}={raw:?} is not an unsigned integer")))?;
        }
        Ok(())
    }

    /// Every problem found, not just the first.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut need_file = |what: &str, p: &Path| {
            if !p.is_file() {
                out.push(format!("{what} {} does not exist", p.display()));
            }
        };
        if let Source::Logs(src) = &self.source {
            need_file("log file", &src.path);
            need_file("format descriptor", &src.format);
            if let Some(m) = &src.mask {
                need_file("mask file", m);
            }
            if let Some(l) = &src.labels {
                need_file("label file", l);
            }
        }
        if self.embedding.mode == EmbeddingMode::Semantic {
            match &self.embedding.vectors {
                None => out.push("semantic embedding needs a vector file".into()),
                Some(p) => need_file("vector file", p),
            }
            if matches!(self.source, Source::Synthetic(_)) {
                out.push("synthetic graphs use one-hot attributes only".into());
            }
        }
        if let Err(e) = self.model.validate() {
            out.push(e.to_string());
        }
        if let Err(e) = self.train.validate() {
            out.push(e.to_string());
        }
        if let Err(e) = self.split.validate() {
            out.push(e.to_string());
        }
        if !(self.drain.similarity_threshold > 0.0 && self.drain.similarity_threshold < 1.0) {
            out.push("drain similarity threshold must lie in (0, 1)".into());
        }
        if self.drain.depth < 3 {
            out.push("drain depth must be at least 3".into());
        }
        if self.drain.max_children == 0 {
            out.push("drain max_children must be positive".into());
        }
        if self.grouping.window == 0 {
            out.push("grouping window must be at least 1".into());
        }
        if !(0.0..=0.5).contains(&self.contamination) {
            out.push(format!("contamination {} outside [0, 0.5]", self.contamination));
        }
        if !(self.report_quantile > 0.0 && self.report_quantile <= 1.0) {
            out.push(format!("report quantile {} outside (0, 1]", self.report_quantile));
        }
        if self.explain_top == 0 {
            out.push("explain_top must be at least 1".into());
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let problems = self.problems();
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems))
        }
    }
}
