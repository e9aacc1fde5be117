//! Synthetic structural benchmark.
//!
//! The normal graph is the directed 4-cycle A→B→C→D→A with unit weights and
//! one-hot attributes (templates 0..4). Each anomaly type perturbs exactly one
//! edge of a fresh copy:
//!
//! * S1 reverses an edge,
//! * S2 moves an edge's head to another node (never a self-loop or an
//!   existing edge),
//! * S3 deletes an edge,
//! * S4 adds an absent, non-loop edge.
//!
//! The rotation fixture emits the four rotations of the cycle as log groups.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::graph::LogGraph;
use crate::grouping::{Label, LogGroup, LogRecord};
use crate::linalg::Matrix;

pub const CYCLE_NODES: usize = 4;
pub const CYCLE_EDGES: [(usize, usize); 4] = [(0, 1), (1, 2), (2, 3), (3, 0)];
pub const NODE_NAMES: [&str; 4] = ["A", "B", "C", "D"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum AnomalyType {
    #[serde(rename = "S1")]
    ReverseEdge,
    #[serde(rename = "S2")]
    ChangeEndpoint,
    #[serde(rename = "S3")]
    DeleteEdge,
    #[serde(rename = "S4")]
    AddEdge,
}

impl AnomalyType {
    pub const ALL: [AnomalyType; 4] = [
        AnomalyType::ReverseEdge,
        AnomalyType::ChangeEndpoint,
        AnomalyType::DeleteEdge,
        AnomalyType::AddEdge,
    ];

    pub fn code(self) -> &'static str {
        match self {
            AnomalyType::ReverseEdge => "S1",
            AnomalyType::ChangeEndpoint => "S2",
            AnomalyType::DeleteEdge => "S3",
            AnomalyType::AddEdge => "S4",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticSpec {
    pub n_normal: usize,
    pub n_per_anomaly_type: usize,
    pub anomaly_types: Vec<AnomalyType>,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            n_normal: 10_000,
            n_per_anomaly_type: 200,
            anomaly_types: AnomalyType::ALL.to_vec(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSample {
    pub graph: LogGraph,
    /// `None` for normal graphs.
    pub kind: Option<AnomalyType>,
    /// The edge that was added (S4), kept for explanation checks.
    pub injected_edge: Option<(usize, usize)>,
}

/// A graph over `n` one-hot nodes with unit-weight `edges`.
pub fn cycle_graph(key: String, label: Label, edges: &[(usize, usize)], n: usize) -> LogGraph {
    let mut weights = Matrix::zeros(n, n);
    for &(i, j) in edges {
        weights[(i, j)] = 1.0;
    }
    LogGraph {
        group_key: key,
        label,
        node_templates: (0..n).collect(),
        weights,
        x: Matrix::identity(n),
    }
}

/// Perturbed edge list and the added edge, if any.
type Perturbed = (Vec<(usize, usize)>, Option<(usize, usize)>);

fn perturb(kind: AnomalyType, rng: &mut ChaCha8Rng) -> Perturbed {
    let mut edges = CYCLE_EDGES.to_vec();
    let pick = *CYCLE_EDGES.choose(rng).expect("non-empty");
    let idx = edges.iter().position(|&e| e == pick).expect("present");
    match kind {
        AnomalyType::ReverseEdge => {
            edges[idx] = (pick.1, pick.0);
            (edges, None)
        }
        AnomalyType::ChangeEndpoint => {
            let (u, v) = pick;
            let options: Vec<usize> = (0..CYCLE_NODES)
                .filter(|&w| w != u && w != v && !edges.contains(&(u, w)))
                .collect();
            let w = *options.choose(rng).expect("a 4-cycle always has two options");
            edges[idx] = (u, w);
            (edges, None)
        }
        AnomalyType::DeleteEdge => {
            edges.remove(idx);
            (edges, None)
        }
        AnomalyType::AddEdge => {
            let absent: Vec<(usize, usize)> = (0..CYCLE_NODES)
                .flat_map(|i| (0..CYCLE_NODES).map(move |j| (i, j)))
                .filter(|&(i, j)| i != j && !CYCLE_EDGES.contains(&(i, j)))
                .collect();
            let e = *absent.choose(rng).expect("eight absent edges");
            edges.push(e);
            (edges, Some(e))
        }
    }
}

/// Normals first, then each anomaly type in the order given.
pub fn gen_synthetic(spec: &SyntheticSpec) -> Vec<SyntheticSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut out = Vec::with_capacity(spec.n_normal + spec.n_per_anomaly_type * spec.anomaly_types.len());
    for i in 0..spec.n_normal {
        out.push(SyntheticSample {
            graph: cycle_graph(format!("normal-{i}"), Label::Normal, &CYCLE_EDGES, CYCLE_NODES),
            kind: None,
            injected_edge: None,
        });
    }
    for &kind in &spec.anomaly_types {
        for i in 0..spec.n_per_anomaly_type {
            let (edges, injected_edge) = perturb(kind, &mut rng);
            out.push(SyntheticSample {
                graph: cycle_graph(
                    format!("{}-{i}", kind.code().to_ascii_lowercase()),
                    Label::Anomalous,
                    &edges,
                    CYCLE_NODES,
                ),
                kind: Some(kind),
                injected_edge,
            });
        }
    }
    out
}

/// Template ids of the cycle walked once starting at node `start`,
/// e.g. `start = 1` gives B→C→D→A→B.
pub fn rotation_sequence(start: usize) -> Vec<usize> {
    (0..=CYCLE_NODES).map(|k| (start + k) % CYCLE_NODES).collect()
}

fn sequence_group(key: String, seq: &[usize]) -> LogGroup {
    LogGroup {
        group_key: key.clone(),
        label: Label::Normal,
        records: seq
            .iter()
            .enumerate()
            .map(|(i, &t)| LogRecord {
                line_no: i as u64,
                timestamp: String::new(),
                identifier: key.clone(),
                template_id: t,
                content: alloc::vec![NODE_NAMES[t].to_string()],
            })
            .collect(),
    }
}

/// Training groups: rotations starting at A, B, C (`per_rotation` each).
/// Test groups: the unseen rotation starting at D.
pub fn rotation_fixture(per_rotation: usize) -> (Vec<LogGroup>, Vec<LogGroup>) {
    let mut train = Vec::with_capacity(3 * per_rotation);
    for (start, name) in NODE_NAMES.iter().enumerate().take(3) {
        let seq = rotation_sequence(start);
        for i in 0..per_rotation {
            train.push(sequence_group(format!("rot{name}-{i}"), &seq));
        }
    }
    let seq = rotation_sequence(3);
    let test = (0..per_rotation)
        .map(|i| sequence_group(format!("rotD-{i}"), &seq))
        .collect();
    (train, test)
}
