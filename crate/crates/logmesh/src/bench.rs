//! The synthetic structural benchmark: train on normal 4-cycles, score
//! held-out normals against each anomaly type separately.

use std::path::Path;

use logmesh_core::digcn::ModelConfig;
use logmesh_core::eval::metrics::{average_precision, roc_auc};
use logmesh_core::eval::synth::{gen_synthetic, AnomalyType, SyntheticSample, SyntheticSpec};
use logmesh_core::graph::LogGraph;
use logmesh_core::svdd::{fit, OneClassModel, TrainConfig};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{self, EvalReport};
use crate::pipeline::{evaluate, score_graphs};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchSpec {
    #[serde(flatten)]
    pub synthetic: SyntheticSpec,
    /// Normals used for training; the rest are held out. Defaults to 80%.
    pub n_train: Option<usize>,
    pub model: ModelConfig,
    pub train: TrainConfig,
}

impl BenchSpec {
    pub fn n_train(&self) -> usize {
        self.n_train
            .unwrap_or(self.synthetic.n_normal * 4 / 5)
            .min(self.synthetic.n_normal)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypeResult {
    pub kind: AnomalyType,
    pub roc_auc: f64,
    pub ap: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub per_type: Vec<TypeResult>,
    pub overall: Option<EvalReport>,
    pub n_train: usize,
    pub n_test_normal: usize,
}

#[derive(Debug, Clone)]
pub struct BenchRun {
    pub model: OneClassModel,
    pub train: Vec<LogGraph>,
    pub test: Vec<SyntheticSample>,
    pub test_scores: Vec<f64>,
    pub report: BenchReport,
}

pub fn run_bench(spec: &BenchSpec) -> Result<BenchRun> {
    let samples = gen_synthetic(&spec.synthetic);
    let n_train = spec.n_train();
    if n_train == 0 {
        return Err(Error::config("benchmark needs at least one training normal"));
    }
    // normals come first in generation order
    let train: Vec<LogGraph> = samples[..n_train].iter().map(|s| s.graph.clone()).collect();
    let test: Vec<SyntheticSample> = samples[n_train..].to_vec();
    let (model, _) = fit(&train, spec.model, &spec.train, None)?;
    let test_scores = test
        .iter()
        .map(|s| model.score(&s.graph))
        .collect::<logmesh_core::Result<Vec<f64>>>()?;

    let normal_scores: Vec<f64> = test
        .iter()
        .zip(&test_scores)
        .filter(|(s, _)| s.kind.is_none())
        .map(|(_, &v)| v)
        .collect();
    let mut per_type = Vec::new();
    for &kind in &spec.synthetic.anomaly_types {
        let anomalous: Vec<f64> = test
            .iter()
            .zip(&test_scores)
            .filter(|(s, _)| s.kind == Some(kind))
            .map(|(_, &v)| v)
            .collect();
        if anomalous.is_empty() || normal_scores.is_empty() {
            continue;
        }
        let scores: Vec<f64> = normal_scores.iter().chain(&anomalous).copied().collect();
        let labels: Vec<bool> = (0..scores.len()).map(|i| i >= normal_scores.len()).collect();
        per_type.push(TypeResult {
            kind,
            roc_auc: roc_auc(&scores, &labels)?,
            ap: average_precision(&scores, &labels)?,
            n: anomalous.len(),
        });
    }
    let lines = score_graphs(&model, &test.iter().map(|s| s.graph.clone()).collect::<Vec<_>>())?;
    let report = BenchReport {
        per_type,
        overall: evaluate(&lines),
        n_train,
        n_test_normal: normal_scores.len(),
    };
    Ok(BenchRun {
        model,
        train,
        test,
        test_scores,
        report,
    })
}

/// Runs the benchmark and writes graphs, model, scores and report.
pub fn run_bench_to(spec: &BenchSpec, out_dir: &Path) -> Result<BenchReport> {
    let run = run_bench(spec)?;
    io::write_graphs(&out_dir.join("train_graphs.jsonl"), &run.train)?;
    let test_graphs: Vec<LogGraph> = run.test.iter().map(|s| s.graph.clone()).collect();
    io::write_graphs(&out_dir.join("test_graphs.jsonl"), &test_graphs)?;
    io::write_model(&out_dir.join("model.json"), &run.model)?;
    io::write_jsonl(&out_dir.join("scores.jsonl"), &score_graphs(&run.model, &test_graphs)?)?;
    io::write_json(&out_dir.join("report.json"), &run.report)?;
    Ok(run.report)
}
