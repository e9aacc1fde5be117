//! Attributed, directed, edge-weighted log graphs.
//!
//! Nodes are the distinct templates of a group. `weights[(i, j)]` counts how
//! often template `i` was immediately followed by template `j`; the adjacency
//! matrix is the support of `weights`. Consecutive repeats become self-loops.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::grouping::{Label, LogGroup};
use crate::linalg::Matrix;
use crate::semantics::TemplateEmbeddingTable;

#[derive(Debug, Clone, PartialEq)]
pub struct LogGraph {
    pub group_key: String,
    pub label: Label,
    /// Node index to template id; each template appears once.
    pub node_templates: Vec<usize>,
    /// Non-negative integer edge weights, `n x n`.
    pub weights: Matrix,
    /// Node attributes, `n x d_attr`.
    pub x: Matrix,
}

impl LogGraph {
    /// Builds a graph from a template id sequence. Nodes follow first occurrence.
    pub fn from_sequence(
        group_key: String,
        label: Label,
        sequence: &[usize],
        embeddings: &TemplateEmbeddingTable,
    ) -> Result<LogGraph> {
        if sequence.is_empty() {
            return Err(Error::EmptyGraph);
        }
        let mut node_templates: Vec<usize> = Vec::new();
        let node_of = |t: usize, nodes: &mut Vec<usize>| match nodes.iter().position(|&n| n == t) {
            Some(i) => i,
            None => {
                nodes.push(t);
                nodes.len() - 1
            }
        };
        let idx: Vec<usize> = sequence.iter().map(|&t| node_of(t, &mut node_templates)).collect();
        let n = node_templates.len();
        let mut weights = Matrix::zeros(n, n);
        for pair in idx.windows(2) {
            weights[(pair[0], pair[1])] += 1.0;
        }
        let mut rows = Vec::with_capacity(n);
        for &t in &node_templates {
            rows.push(embeddings.row(t).ok_or(Error::MissingEmbedding { template_id: t })?);
        }
        let x = if rows.is_empty() {
            Matrix::zeros(0, embeddings.dim)
        } else {
            Matrix::from_rows(&rows)?
        };
        Ok(LogGraph {
            group_key,
            label,
            node_templates,
            weights,
            x,
        })
    }

    /// Assembles a graph from stored parts, checking every invariant.
    pub fn from_parts(
        group_key: String,
        label: Label,
        node_templates: Vec<usize>,
        edges: &[(usize, usize, u64)],
        x: Matrix,
    ) -> Result<LogGraph> {
        let n = node_templates.len();
        if n == 0 {
            return Err(Error::EmptyGraph);
        }
        if x.rows() != n {
            return Err(Error::ShapeMismatch {
                op: "graph attributes",
                expected: (n, x.cols()),
                found: x.shape(),
            });
        }
        let mut sorted = node_templates.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidGraph("template repeated across nodes".into()));
        }
        let mut weights = Matrix::zeros(n, n);
        for &(i, j, w) in edges {
            if i >= n || j >= n {
                return Err(Error::InvalidGraph("edge endpoint out of range".into()));
            }
            weights[(i, j)] += w as f64;
        }
        Ok(LogGraph {
            group_key,
            label,
            node_templates,
            weights,
            x,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.node_templates.len()
    }

    pub fn adjacency(&self) -> Matrix {
        self.weights.map(|w| if w > 0.0 { 1.0 } else { 0.0 })
    }

    /// Non-zero edges `(i, j, weight)` in row-major order.
    pub fn edges(&self) -> Vec<(usize, usize, u64)> {
        let n = self.n_nodes();
        let mut out = Vec::new();
        for i in 0..n {
            for j in 0..n {
                let w = self.weights[(i, j)];
                if w > 0.0 {
                    out.push((i, j, w as u64));
                }
            }
        }
        out
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.as_slice().iter().sum()
    }

    /// Relabels nodes by the permutation `order` (new node `k` is old node `order[k]`).
    pub fn permuted(&self, order: &[usize]) -> LogGraph {
        let n = self.n_nodes();
        debug_assert_eq!(order.len(), n);
        LogGraph {
            group_key: self.group_key.clone(),
            label: self.label,
            node_templates: order.iter().map(|&o| self.node_templates[o]).collect(),
            weights: Matrix::from_fn(n, n, |i, j| self.weights[(order[i], order[j])]),
            x: Matrix::from_fn(n, self.x.cols(), |i, c| self.x[(order[i], c)]),
        }
    }

    /// Nodes sorted by template id, so structurally equal groups compare equal.
    pub fn canonical(&self) -> LogGraph {
        let mut order: Vec<usize> = (0..self.n_nodes()).collect();
        order.sort_by_key(|&i| self.node_templates[i]);
        self.permuted(&order)
    }

    /// Same structure and attributes, ignoring key and label.
    pub fn same_structure(&self, other: &LogGraph) -> bool {
        self.node_templates == other.node_templates && self.weights == other.weights && self.x == other.x
    }
}

pub fn build_graph(group: &LogGroup, embeddings: &TemplateEmbeddingTable) -> Result<LogGraph> {
    let sequence: Vec<usize> = group.template_ids().collect();
    LogGraph::from_sequence(group.group_key.clone(), group.label, &sequence, embeddings)
}

/// Occurrences of each template in the group.
pub fn count_vector(group: &LogGroup, catalog_size: usize) -> Result<Vec<u64>> {
    let mut counts = vec![0u64; catalog_size];
    for t in group.template_ids() {
        *counts.get_mut(t).ok_or(Error::TemplateOutOfRange {
            template_id: t,
            catalog_size,
        })? += 1;
    }
    Ok(counts)
}
