//! On-disk artifact formats. Every stage reads and writes only these.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use logmesh_core::digcn::{LayerParams, ModelConfig};
use logmesh_core::drain::TemplateCatalog;
use logmesh_core::explain::{render_dot, Explanation};
use logmesh_core::graph::LogGraph;
use logmesh_core::grouping::Label;
use logmesh_core::semantics::{EmbeddingMode, TemplateEmbeddingTable};
use logmesh_core::svdd::{OneClassModel, TrainingMeta};
use logmesh_core::Matrix;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MODEL_VERSION: u32 = 1;

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_reader(BufReader::new(file)).map_err(|source| Error::Json {
        path: path.into(),
        line: source.line(),
        source,
    })
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|source| Error::Json {
        path: path.into(),
        line: 0,
        source,
    })?;
    w.write_all(b"\n")
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

/// One JSON value per non-blank line.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|source| Error::Json {
            path: path.into(),
            line: i + 1,
            source,
        })?);
    }
    Ok(out)
}

pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    let mut w = create(path)?;
    for (i, item) in items.iter().enumerate() {
        serde_json::to_writer(&mut w, item).map_err(|source| Error::Json {
            path: path.into(),
            line: i + 1,
            source,
        })?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Catalog file: a JSON array of template token lists.
pub fn write_catalog(path: &Path, catalog: &TemplateCatalog) -> Result<()> {
    write_json(path, &catalog.token_lists())
}

pub fn read_catalog(path: &Path) -> Result<TemplateCatalog> {
    let lists: Vec<Vec<String>> = read_json(path)?;
    Ok(TemplateCatalog::from_token_lists(lists))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingsFile {
    pub mode: EmbeddingMode,
    pub dim: usize,
    /// Keyed by template id.
    pub embeddings: BTreeMap<usize, Vec<f64>>,
}

impl EmbeddingsFile {
    pub fn from_table(table: &TemplateEmbeddingTable) -> Self {
        EmbeddingsFile {
            mode: table.mode,
            dim: table.dim,
            embeddings: table.rows.iter().cloned().enumerate().collect(),
        }
    }

    pub fn into_table(self, path: &Path) -> Result<TemplateEmbeddingTable> {
        let schema = |message: String| Error::Schema {
            path: path.into(),
            message,
        };
        let mut rows = Vec::with_capacity(self.embeddings.len());
        for (expected, (id, row)) in self.embeddings.into_iter().enumerate() {
            if id != expected {
                return Err(schema(format!("template ids must be dense; missing {expected}")));
            }
            if row.len() != self.dim {
                return Err(schema(format!(
                    "template {id} has {} values, expected {}",
                    row.len(),
                    self.dim
                )));
            }
            rows.push(row);
        }
        Ok(TemplateEmbeddingTable {
            mode: self.mode,
            dim: self.dim,
            rows,
        })
    }
}

pub fn write_embeddings(path: &Path, table: &TemplateEmbeddingTable) -> Result<()> {
    write_json(path, &EmbeddingsFile::from_table(table))
}

pub fn read_embeddings(path: &Path) -> Result<TemplateEmbeddingTable> {
    read_json::<EmbeddingsFile>(path)?.into_table(path)
}

/// One line of a graph file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphLine {
    pub group_key: String,
    pub label: Label,
    pub nodes: Vec<usize>,
    pub edges: Vec<(usize, usize, u64)>,
    pub x: Vec<Vec<f64>>,
}

impl GraphLine {
    pub fn from_graph(g: &LogGraph) -> Self {
        GraphLine {
            group_key: g.group_key.clone(),
            label: g.label,
            nodes: g.node_templates.clone(),
            edges: g.edges(),
            x: g.x.to_rows(),
        }
    }

    pub fn into_graph(self) -> logmesh_core::Result<LogGraph> {
        let x = if self.x.is_empty() {
            Matrix::zeros(0, 0)
        } else {
            Matrix::from_rows(&self.x)?
        };
        LogGraph::from_parts(self.group_key, self.label, self.nodes, &self.edges, x)
    }
}

pub fn write_graphs(path: &Path, graphs: &[LogGraph]) -> Result<()> {
    let lines: Vec<GraphLine> = graphs.iter().map(GraphLine::from_graph).collect();
    write_jsonl(path, &lines)
}

pub fn read_graphs(path: &Path) -> Result<Vec<LogGraph>> {
    read_jsonl::<GraphLine>(path)?
        .into_iter()
        .enumerate()
        .map(|(i, l)| {
            l.into_graph().map_err(|e| Error::Schema {
                path: path.into(),
                message: format!("graph on line {}: {e}", i + 1),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub version: u32,
    pub config: ModelConfig,
    pub d_attr: usize,
    /// `theta[layer][branch][row][col]`.
    pub theta: Vec<Vec<Vec<Vec<f64>>>>,
    pub center: Vec<f64>,
    pub meta: TrainingMeta,
}

impl ModelFile {
    pub fn from_model(model: &OneClassModel) -> Self {
        ModelFile {
            version: MODEL_VERSION,
            config: model.config,
            d_attr: model.d_attr,
            theta: model
                .layers
                .iter()
                .map(|l| l.thetas.iter().map(Matrix::to_rows).collect())
                .collect(),
            center: model.center.clone(),
            meta: model.meta.clone(),
        }
    }

    pub fn into_model(self, path: &Path) -> Result<OneClassModel> {
        let schema = |message: String| Error::Schema {
            path: path.into(),
            message,
        };
        if self.version != MODEL_VERSION {
            return Err(schema(format!(
                "model version {} is not supported (expected {MODEL_VERSION})",
                self.version
            )));
        }
        self.config.validate()?;
        let mut layers = Vec::with_capacity(self.theta.len());
        for (l, branches) in self.theta.into_iter().enumerate() {
            let mut thetas = Vec::with_capacity(branches.len());
            for rows in branches {
                let m = Matrix::from_rows(&rows)?;
                if m.shape() != (self.config.input_dim(l, self.d_attr), self.config.hidden) {
                    return Err(schema(format!("layer {l} theta has shape {:?}", m.shape())));
                }
                thetas.push(m);
            }
            if thetas.len() != self.config.branches() {
                return Err(schema(format!("layer {l} has {} branches", thetas.len())));
            }
            layers.push(LayerParams { thetas });
        }
        if layers.len() != self.config.layers {
            return Err(schema(format!(
                "{} layers stored, config says {}",
                layers.len(),
                self.config.layers
            )));
        }
        if self.center.len() != self.config.output_dim() {
            return Err(schema(format!("center has {} values", self.center.len())));
        }
        Ok(OneClassModel {
            config: self.config,
            d_attr: self.d_attr,
            layers,
            center: self.center,
            meta: self.meta,
        })
    }
}

pub fn write_model(path: &Path, model: &OneClassModel) -> Result<()> {
    write_json(path, &ModelFile::from_model(model))
}

pub fn read_model(path: &Path) -> Result<OneClassModel> {
    read_json::<ModelFile>(path)?.into_model(path)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreLine {
    pub group_key: String,
    pub label: Label,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplanationLine {
    #[serde(flatten)]
    pub explanation: Explanation,
    /// Node indices of the most important nodes, most important first.
    pub top: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub roc_auc: f64,
    pub ap: f64,
    pub n_pos: usize,
    pub n_neg: usize,
}

pub fn write_dot(path: &Path, graph: &LogGraph, explanation: &Explanation) -> Result<()> {
    let mut w = create(path)?;
    w.write_all(render_dot(graph, explanation).as_bytes())
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

/// File-name-safe form of a group key.
pub fn file_stem(key: &str) -> String {
    key.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}
