//! Node-level attribution of anomaly scores.
//!
//! The importance of node `j` is the relative change in score when its final
//! layer embedding is left out of the readout:
//! `|score(G) - score(G without z_j)| / score(G)`. Propagation operators are
//! not rebuilt; only the readout input changes. With one layer the final-layer
//! rows are the input log events, so no further relevance propagation is needed.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::digcn::{readout, Readout};
use crate::error::{Error, Result};
use crate::graph::LogGraph;
use crate::linalg::Matrix;
use crate::svdd::{distance, OneClassModel, PreparedGraph};

/// Scores below this are treated as zero; the ratio would be meaningless.
pub const MIN_SCORE: f64 = 1e-12;

const DOT_LABEL_MAX: usize = 40;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeImportance {
    pub node: usize,
    pub template_id: usize,
    pub template: String,
    pub importance: f64,
    /// 1 is most important.
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Explanation {
    pub group_key: String,
    pub score: f64,
    /// In node order.
    pub nodes: Vec<NodeImportance>,
}

impl Explanation {
    pub fn importances(&self) -> Vec<f64> {
        self.nodes.iter().map(|n| n.importance).collect()
    }
}

/// Importances from final-layer node rows and the center.
pub fn importance_from_nodes(nodes: &Matrix, center: &[f64], mode: Readout) -> Result<Vec<f64>> {
    let n = nodes.rows();
    if mode == Readout::Max {
        return Err(Error::NotAttributable("max readout"));
    }
    let full = readout(nodes, mode)?;
    let score = distance(&full, center);
    if score < MIN_SCORE {
        return Err(Error::ZeroScore { score });
    }
    if n == 1 {
        return Ok(vec![1.0]);
    }
    let mut out = Vec::with_capacity(n);
    for j in 0..n {
        let rest = Matrix::from_fn(n - 1, nodes.cols(), |i, c| nodes[(if i < j { i } else { i + 1 }, c)]);
        let without = readout(&rest, mode)?;
        if mode == Readout::Mean {
            // n·mean = (n-1)·mean_without + z_j
            debug_assert!(full.iter().zip(&without).zip(nodes.row(j)).all(|((m, w), z)| {
                libm::fabs(n as f64 * m - (n - 1) as f64 * w - z) <= 1e-9 * (1.0 + libm::fabs(*z))
            }));
        }
        out.push(libm::fabs(score - distance(&without, center)) / score);
    }
    Ok(out)
}

pub fn node_importance(graph: &LogGraph, model: &OneClassModel) -> Result<Vec<f64>> {
    let fwd = model.forward(&PreparedGraph::new(graph, &model.config)?)?;
    importance_from_nodes(&fwd.nodes, &model.center, model.config.readout)
}

/// 1-based ranks; equal importances rank the lower index first.
pub fn ranks(importance: &[f64]) -> Vec<usize> {
    let order = order_by_importance(importance);
    let mut ranks = vec![0; importance.len()];
    for (r, &i) in order.iter().enumerate() {
        ranks[i] = r + 1;
    }
    ranks
}

fn order_by_importance(importance: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..importance.len()).collect();
    order.sort_by(|&a, &b| importance[b].total_cmp(&importance[a]).then(a.cmp(&b)));
    order
}

pub fn explain(
    graph: &LogGraph,
    model: &OneClassModel,
    template_text: impl Fn(usize) -> String,
) -> Result<Explanation> {
    let fwd = model.forward(&PreparedGraph::new(graph, &model.config)?)?;
    let score = distance(&fwd.z, &model.center);
    let importance = importance_from_nodes(&fwd.nodes, &model.center, model.config.readout)?;
    let ranks = ranks(&importance);
    let nodes = importance
        .iter()
        .enumerate()
        .map(|(j, &imp)| {
            let t = graph.node_templates[j];
            NodeImportance {
                node: j,
                template_id: t,
                template: template_text(t),
                importance: imp,
                rank: ranks[j],
            }
        })
        .collect();
    Ok(Explanation {
        group_key: graph.group_key.clone(),
        score,
        nodes,
    })
}

/// The `k` most important nodes, most important first.
pub fn top_nodes(explanation: &Explanation, k: usize) -> Vec<&NodeImportance> {
    order_by_importance(&explanation.importances())
        .into_iter()
        .take(k)
        .map(|i| &explanation.nodes[i])
        .collect()
}

fn dot_label(text: &str) -> String {
    let mut s: String = text.chars().take(DOT_LABEL_MAX).collect();
    if text.chars().count() > DOT_LABEL_MAX {
        s.push_str("...");
    }
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '"' | '\\' => {
                out.push('\\');
                out.push(c);
            }
            '\n' | '\r' => out.push(' '),
            _ => out.push(c),
        }
    }
    out
}

/// Red fill whose depth follows importance relative to the maximum; white
/// everywhere when no node stands out.
pub fn fill_color(importance: f64, max: f64) -> String {
    let s = if max > 0.0 {
        (importance / max).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let c = libm::round(255.0 * (1.0 - s)) as u8;
    format!("#ff{c:02x}{c:02x}")
}

/// The graph as DOT text with shaded nodes and weight-labelled edges.
pub fn render_dot(graph: &LogGraph, explanation: &Explanation) -> String {
    let max = explanation.nodes.iter().map(|n| n.importance).fold(0.0, f64::max);
    let mut out = String::new();
    let _ = writeln!(out, "digraph \"{}\" {{", dot_label(&graph.group_key));
    let _ = writeln!(out, "  node [shape=box, style=filled];");
    for n in &explanation.nodes {
        let _ = writeln!(
            out,
            "  n{} [label=\"{}\", fillcolor=\"{}\"];",
            n.node,
            dot_label(&n.template),
            fill_color(n.importance, max)
        );
    }
    for (i, j, w) in graph.edges() {
        let _ = writeln!(out, "  n{i} -> n{j} [label=\"{w}\"];");
    }
    out.push_str("}\n");
    out
}
