//! Digraph inception convolution.
//!
//! Per graph the propagation operators are built once:
//!
//! * `Ã = A⊙Y + I` (edge weights plus a unit self-loop),
//! * `P¹ = D̃⁻¹Ã`, the row-stochastic first-order proximity,
//! * `π`, the stationary distribution of `(1-α)P¹ + (α/n)𝟙𝟙ᵀ`,
//! * `Ψ = ½(Π^½ P¹ Π^-½ + Π^-½ P¹ᵀ Π^½)` with `Π = diag(π)`,
//! * for second order, `P² = ¼·Intersect(P¹P¹ᵀ, P¹ᵀP¹)` and
//!   `Φ = W^-½ P² W^-½` with `W = diag(rowsum P²)`.
//!
//! A layer computes `Z = relu(Γ(HΘ⁰, ΨHΘ¹[, ΦHΘ²]))` where `Γ` sums or
//! concatenates the branches. There are no bias terms anywhere. The graph
//! vector is a mean, sum or max readout over the last layer's rows.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::LogGraph;
use crate::linalg::Matrix;

pub const PPR_TOLERANCE: f64 = 1e-10;
pub const PPR_MAX_ITERATIONS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Fusion {
    Sum,
    Concat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Readout {
    Mean,
    Sum,
    Max,
}

impl Readout {
    pub fn name(self) -> &'static str {
        match self {
            Readout::Mean => "mean",
            Readout::Sum => "sum",
            Readout::Max => "max",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    /// Number of convolution layers, L.
    pub layers: usize,
    /// Proximity order, k.
    pub order: usize,
    /// Output width of every branch, d.
    pub hidden: usize,
    /// Teleport probability, α.
    pub alpha: f64,
    pub fusion: Fusion,
    pub readout: Readout,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            layers: 1,
            order: 1,
            hidden: 128,
            alpha: 0.1,
            fusion: Fusion::Sum,
            readout: Readout::Mean,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.layers == 0 {
            return Err(Error::InvalidConfig("layers must be at least 1".into()));
        }
        if !(1..=2).contains(&self.order) {
            return Err(Error::InvalidConfig(alloc::format!(
                "proximity order k={} is unsupported; supported range is 1..=2",
                self.order
            )));
        }
        if self.hidden == 0 {
            return Err(Error::InvalidConfig("hidden dimension must be at least 1".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidConfig(alloc::format!(
                "teleport alpha={} must lie in (0, 1)",
                self.alpha
            )));
        }
        Ok(())
    }

    pub fn branches(&self) -> usize {
        self.order + 1
    }

    /// Width of each layer's output (and of the graph vector).
    pub fn output_dim(&self) -> usize {
        match self.fusion {
            Fusion::Sum => self.hidden,
            Fusion::Concat => self.hidden * self.branches(),
        }
    }

    pub fn input_dim(&self, layer: usize, d_attr: usize) -> usize {
        if layer == 0 {
            d_attr
        } else {
            self.output_dim()
        }
    }
}

/// `Ã = A⊙Y + I`.
pub fn weighted_tilde_adjacency(adjacency: &Matrix, weights: &Matrix) -> Result<Matrix> {
    if adjacency.shape() != weights.shape() || adjacency.rows() != adjacency.cols() {
        return Err(Error::ShapeMismatch {
            op: "weighted_tilde_adjacency",
            expected: adjacency.shape(),
            found: weights.shape(),
        });
    }
    let n = adjacency.rows();
    Ok(Matrix::from_fn(n, n, |i, j| {
        adjacency[(i, j)] * weights[(i, j)] + if i == j { 1.0 } else { 0.0 }
    }))
}

/// `D̃⁻¹Ã`.
pub fn first_order_proximity(tilde: &Matrix) -> Matrix {
    let sums = tilde.row_sums();
    Matrix::from_fn(tilde.rows(), tilde.cols(), |i, j| tilde[(i, j)] / sums[i])
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stationary {
    pub pi: Vec<f64>,
    /// `‖πᵀP_ppr − πᵀ‖₁` at the returned `π`.
    pub residual: f64,
    pub iterations: usize,
}

/// One step of the teleporting chain: `πᵀ((1-α)P + (α/n)𝟙𝟙ᵀ)`.
pub fn ppr_step(p: &Matrix, pi: &[f64], alpha: f64) -> Vec<f64> {
    let n = pi.len();
    let total: f64 = pi.iter().sum();
    let teleport = alpha * total / n as f64;
    let mut next = vec![teleport; n];
    for (i, &mass) in pi.iter().enumerate() {
        let m = (1.0 - alpha) * mass;
        for (nj, &pij) in next.iter_mut().zip(p.row(i)) {
            *nj += m * pij;
        }
    }
    next
}

/// Stationary distribution of the personalised-PageRank chain, by power
/// iteration from the uniform vector.
pub fn ppr_stationary(p: &Matrix, alpha: f64) -> Result<Stationary> {
    let n = p.rows();
    if n == 0 || p.cols() != n {
        return Err(Error::ShapeMismatch {
            op: "ppr_stationary",
            expected: (n, n),
            found: p.shape(),
        });
    }
    let mut pi = vec![1.0 / n as f64; n];
    let mut residual = f64::INFINITY;
    for it in 0..PPR_MAX_ITERATIONS {
        let next = ppr_step(p, &pi, alpha);
        residual = next.iter().zip(&pi).map(|(a, b)| libm::fabs(a - b)).sum();
        if residual < PPR_TOLERANCE {
            return Ok(Stationary {
                pi,
                residual,
                iterations: it,
            });
        }
        let total: f64 = next.iter().sum();
        pi = next.into_iter().map(|v| v / total).collect();
    }
    Err(Error::NoConvergence {
        iterations: PPR_MAX_ITERATIONS,
        residual,
    })
}

/// `Ψ = ½(Π^½ P Π^-½ + Π^-½ Pᵀ Π^½)`.
pub fn psi(p: &Matrix, pi: &[f64]) -> Matrix {
    let n = pi.len();
    let root: Vec<f64> = pi.iter().map(|&v| libm::sqrt(v)).collect();
    let t = Matrix::from_fn(n, n, |i, j| root[i] * p[(i, j)] / root[j]);
    Matrix::from_fn(n, n, |i, j| 0.5 * (t[(i, j)] + t[(j, i)]))
}

/// Entry-wise intersection: `(M₁ + M₂)ᵢⱼ` where both are non-zero, else 0.
pub fn intersect(m1: &Matrix, m2: &Matrix) -> Matrix {
    Matrix::from_fn(m1.rows(), m1.cols(), |i, j| {
        let (a, b) = (m1[(i, j)], m2[(i, j)]);
        if a != 0.0 && b != 0.0 {
            a + b
        } else {
            0.0
        }
    })
}

/// Second-order proximity `P²` and its normalisation `Φ`.
pub fn second_order(p: &Matrix) -> (Matrix, Matrix) {
    let m1 = p.matmul_t(p).expect("square");
    let m2 = p.t_matmul(p).expect("square");
    let p2 = intersect(&m1, &m2).scale(0.25);
    let inv_root: Vec<f64> = p2
        .row_sums()
        .into_iter()
        .map(|w| if w == 0.0 { 1.0 } else { 1.0 / libm::sqrt(w) })
        .collect();
    let n = p.rows();
    let phi = Matrix::from_fn(n, n, |i, j| inv_root[i] * p2[(i, j)] * inv_root[j]);
    let phi = Matrix::from_fn(n, n, |i, j| 0.5 * (phi[(i, j)] + phi[(j, i)]));
    (p2, phi)
}

/// Cached per-graph operators.
#[derive(Debug, Clone, PartialEq)]
pub struct PropagationOperators {
    pub p1: Matrix,
    pub pi: Vec<f64>,
    pub psi: Matrix,
    pub p2: Option<Matrix>,
    pub phi: Option<Matrix>,
    pub alpha: f64,
    pub ppr_residual: f64,
}

impl PropagationOperators {
    pub fn new(adjacency: &Matrix, weights: &Matrix, alpha: f64, order: usize) -> Result<Self> {
        let tilde = weighted_tilde_adjacency(adjacency, weights)?;
        let p1 = first_order_proximity(&tilde);
        let stationary = ppr_stationary(&p1, alpha)?;
        let psi = psi(&p1, &stationary.pi);
        let (p2, phi) = if order >= 2 {
            let (p2, phi) = second_order(&p1);
            (Some(p2), Some(phi))
        } else {
            (None, None)
        };
        Ok(PropagationOperators {
            p1,
            pi: stationary.pi,
            psi,
            p2,
            phi,
            alpha,
            ppr_residual: stationary.residual,
        })
    }

    pub fn for_graph(graph: &LogGraph, config: &ModelConfig) -> Result<Self> {
        if graph.n_nodes() == 0 {
            return Err(Error::EmptyGraph);
        }
        Self::new(&graph.adjacency(), &graph.weights, config.alpha, config.order)
    }

    /// Branch operator `b` applied to `h`: identity, Ψ or Φ.
    fn propagate(&self, branch: usize, h: &Matrix) -> Result<Matrix> {
        match branch {
            0 => Ok(h.clone()),
            1 => self.psi.matmul(h),
            _ => self
                .phi
                .as_ref()
                .ok_or_else(|| Error::InvalidConfig("second-order operator was not built".into()))?
                .matmul(h),
        }
    }

    /// Transposed branch operator applied to `g`.
    fn propagate_t(&self, branch: usize, g: &Matrix) -> Result<Matrix> {
        match branch {
            0 => Ok(g.clone()),
            1 => self.psi.t_matmul(g),
            _ => self
                .phi
                .as_ref()
                .ok_or_else(|| Error::InvalidConfig("second-order operator was not built".into()))?
                .t_matmul(g),
        }
    }
}

/// Θ matrices of one layer, one per branch (`d_in x d`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerParams {
    pub thetas: Vec<Matrix>,
}

impl LayerParams {
    pub fn zeros_like(&self) -> LayerParams {
        LayerParams {
            thetas: self.thetas.iter().map(|t| Matrix::zeros(t.rows(), t.cols())).collect(),
        }
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.thetas.iter().map(Matrix::frobenius_sq).sum()
    }
}

/// Intermediates of one layer kept for the backward pass.
#[derive(Debug, Clone)]
pub struct LayerCache {
    /// Branch inputs `S_b H`.
    pub propagated: Vec<Matrix>,
    /// Fused pre-activation.
    pub pre: Matrix,
}

fn check_layer(h: &Matrix, params: &LayerParams, config: &ModelConfig) -> Result<()> {
    if params.thetas.len() != config.branches() {
        return Err(Error::ShapeMismatch {
            op: "layer branches",
            expected: (config.branches(), 0),
            found: (params.thetas.len(), 0),
        });
    }
    for t in &params.thetas {
        if t.rows() != h.cols() || t.cols() != config.hidden {
            return Err(Error::ShapeMismatch {
                op: "layer theta",
                expected: (h.cols(), config.hidden),
                found: t.shape(),
            });
        }
    }
    Ok(())
}

fn layer_forward_cached(
    h: &Matrix,
    ops: &PropagationOperators,
    params: &LayerParams,
    config: &ModelConfig,
) -> Result<(Matrix, LayerCache)> {
    check_layer(h, params, config)?;
    let mut propagated = Vec::with_capacity(config.branches());
    let mut outputs = Vec::with_capacity(config.branches());
    for (b, theta) in params.thetas.iter().enumerate() {
        let sh = ops.propagate(b, h)?;
        outputs.push(sh.matmul(theta)?);
        propagated.push(sh);
    }
    let pre = match config.fusion {
        Fusion::Sum => {
            let mut acc = outputs[0].clone();
            for o in &outputs[1..] {
                acc.add_assign(o)?;
            }
            acc
        }
        Fusion::Concat => Matrix::hstack(&outputs)?,
    };
    let z = pre.map(|v| v.max(0.0));
    Ok((z, LayerCache { propagated, pre }))
}

/// One inception block: `relu(Γ(HΘ⁰, ΨHΘ¹, …))`.
pub fn layer_forward(
    h: &Matrix,
    ops: &PropagationOperators,
    params: &LayerParams,
    config: &ModelConfig,
) -> Result<Matrix> {
    layer_forward_cached(h, ops, params, config).map(|(z, _)| z)
}

pub fn readout(z: &Matrix, mode: Readout) -> Result<Vec<f64>> {
    let n = z.rows();
    if n == 0 {
        return Err(Error::EmptyGraph);
    }
    let mut out = z.row(0).to_vec();
    for i in 1..n {
        for (o, &v) in out.iter_mut().zip(z.row(i)) {
            match mode {
                Readout::Mean | Readout::Sum => *o += v,
                Readout::Max => *o = o.max(v),
            }
        }
    }
    if mode == Readout::Mean {
        let inv = n as f64;
        out.iter_mut().for_each(|o| *o /= inv);
    }
    Ok(out)
}

/// Forward pass result for one graph.
#[derive(Debug, Clone)]
pub struct Forward {
    /// Graph vector.
    pub z: Vec<f64>,
    /// Final-layer node embeddings (the rows fed to the readout).
    pub nodes: Matrix,
    pub caches: Vec<LayerCache>,
}

pub fn forward(
    x: &Matrix,
    ops: &PropagationOperators,
    layers: &[LayerParams],
    config: &ModelConfig,
) -> Result<Forward> {
    if x.rows() == 0 {
        return Err(Error::EmptyGraph);
    }
    if layers.len() != config.layers {
        return Err(Error::ShapeMismatch {
            op: "layer count",
            expected: (config.layers, 0),
            found: (layers.len(), 0),
        });
    }
    let mut h = x.clone();
    let mut caches = Vec::with_capacity(layers.len());
    for params in layers {
        let (z, cache) = layer_forward_cached(&h, ops, params, config)?;
        caches.push(cache);
        h = z;
    }
    let z = readout(&h, config.readout)?;
    Ok(Forward { z, nodes: h, caches })
}

/// Gradient of a scalar loss with respect to every Θ, given `∂loss/∂z`.
pub fn backward(
    fwd: &Forward,
    dz: &[f64],
    ops: &PropagationOperators,
    layers: &[LayerParams],
    config: &ModelConfig,
) -> Result<Vec<LayerParams>> {
    let n = fwd.nodes.rows();
    let width = fwd.nodes.cols();
    if dz.len() != width {
        return Err(Error::ShapeMismatch {
            op: "backward dz",
            expected: (1, width),
            found: (1, dz.len()),
        });
    }
    // readout
    let mut grad = Matrix::zeros(n, width);
    match config.readout {
        Readout::Mean | Readout::Sum => {
            let s = if config.readout == Readout::Mean {
                1.0 / n as f64
            } else {
                1.0
            };
            for i in 0..n {
                for (g, &d) in grad.row_mut(i).iter_mut().zip(dz) {
                    *g = s * d;
                }
            }
        }
        Readout::Max => {
            for c in 0..width {
                let mut arg = 0;
                for i in 1..n {
                    if fwd.nodes[(i, c)] > fwd.nodes[(arg, c)] {
                        arg = i;
                    }
                }
                grad[(arg, c)] = dz[c];
            }
        }
    }

    let mut grads: Vec<LayerParams> = layers.iter().map(LayerParams::zeros_like).collect();
    for l in (0..layers.len()).rev() {
        let cache = &fwd.caches[l];
        // relu
        let mut dpre = grad;
        for (g, &p) in dpre.as_mut_slice().iter_mut().zip(cache.pre.as_slice()) {
            if p <= 0.0 {
                *g = 0.0;
            }
        }
        let mut dh: Option<Matrix> = None;
        for (b, theta) in layers[l].thetas.iter().enumerate() {
            let dbranch = match config.fusion {
                Fusion::Sum => dpre.clone(),
                Fusion::Concat => dpre.columns(b * config.hidden, config.hidden),
            };
            grads[l].thetas[b] = cache.propagated[b].t_matmul(&dbranch)?;
            if l > 0 {
                let back = ops.propagate_t(b, &dbranch.matmul_t(theta)?)?;
                match dh.as_mut() {
                    Some(acc) => acc.add_assign(&back)?,
                    None => dh = Some(back),
                }
            }
        }
        grad = match dh {
            Some(d) => d,
            None => break,
        };
    }
    Ok(grads)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[f64]]) -> Matrix {
        Matrix::from_rows(rows).unwrap()
    }

    #[test]
    fn tilde_adjacency_cases() {
        let a = m(&[&[0.0, 1.0], &[0.0, 0.0]]);
        assert_eq!(
            weighted_tilde_adjacency(&a, &a).unwrap(),
            m(&[&[1.0, 1.0], &[0.0, 1.0]])
        );
        let y = m(&[&[0.0, 3.0], &[0.0, 0.0]]);
        assert_eq!(
            weighted_tilde_adjacency(&a, &y).unwrap(),
            m(&[&[1.0, 3.0], &[0.0, 1.0]])
        );
        let a = m(&[&[1.0, 0.0], &[0.0, 0.0]]);
        let y = m(&[&[2.0, 0.0], &[0.0, 0.0]]);
        assert_eq!(weighted_tilde_adjacency(&a, &y).unwrap()[(0, 0)], 3.0);
        assert!(weighted_tilde_adjacency(&a, &Matrix::zeros(3, 3)).is_err());
    }

    #[test]
    fn first_order_cases() {
        assert_eq!(
            first_order_proximity(&m(&[&[1.0, 1.0], &[0.0, 1.0]])),
            m(&[&[0.5, 0.5], &[0.0, 1.0]])
        );
        assert_eq!(
            first_order_proximity(&m(&[&[1.0, 3.0], &[0.0, 1.0]])),
            m(&[&[0.25, 0.75], &[0.0, 1.0]])
        );
        assert_eq!(first_order_proximity(&Matrix::identity(3)), Matrix::identity(3));
    }

    #[test]
    fn ppr_symmetric_and_trivial() {
        let cycle = m(&[&[0.0, 1.0], &[1.0, 0.0]]);
        for alpha in [0.05, 0.1, 0.5] {
            let s = ppr_stationary(&cycle, alpha).unwrap();
            assert!((s.pi[0] - 0.5).abs() < 1e-12 && (s.pi[1] - 0.5).abs() < 1e-12);
        }
        assert_eq!(ppr_stationary(&Matrix::identity(1), 0.1).unwrap().pi, vec![1.0]);
    }

    #[test]
    fn ppr_two_node_closed_form() {
        // P_ppr = [[0.5, 0.5], [0.05, 0.95]]; balance 0.5·π0 = 0.05·π1
        let p = m(&[&[0.5, 0.5], &[0.0, 1.0]]);
        let s = ppr_stationary(&p, 0.1).unwrap();
        assert!((s.pi[0] - 1.0 / 11.0).abs() < 1e-10);
        assert!((s.pi[1] - 10.0 / 11.0).abs() < 1e-10);
        assert!(s.residual < PPR_TOLERANCE);
    }

    #[test]
    fn psi_cases() {
        assert_eq!(psi(&Matrix::identity(3), &[0.2, 0.3, 0.5]), Matrix::identity(3));
        let cycle = m(&[&[0.0, 1.0], &[1.0, 0.0]]);
        assert_eq!(psi(&cycle, &[0.5, 0.5]), cycle);
        let p = m(&[&[0.5, 0.5], &[0.0, 1.0]]);
        let pi = [1.0 / 11.0, 10.0 / 11.0];
        let off = 0.5 * 0.5 * libm::sqrt(pi[0] / pi[1]);
        let expected = m(&[&[0.5, off], &[off, 1.0]]);
        assert!(psi(&p, &pi).max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn second_order_cases() {
        let cycle = m(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let (p2, phi) = second_order(&cycle);
        assert_eq!(p2, Matrix::identity(2).scale(0.5));
        assert!(phi.max_abs_diff(&Matrix::identity(2)) < 1e-15);

        let (p2, phi) = second_order(&Matrix::identity(3));
        assert_eq!(p2, Matrix::identity(3).scale(0.5));
        assert!(phi.max_abs_diff(&Matrix::identity(3)) < 1e-15);
    }

    #[test]
    fn second_order_path_brute_force() {
        // P¹ of the path 0→1→2 with self-loops
        let p = m(&[&[0.5, 0.5, 0.0], &[0.0, 0.5, 0.5], &[0.0, 0.0, 1.0]]);
        let n = 3;
        let mut m1 = [[0.0; 3]; 3];
        let mut m2 = [[0.0; 3]; 3];
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    m1[i][j] += p[(i, k)] * p[(j, k)];
                    m2[i][j] += p[(k, i)] * p[(k, j)];
                }
            }
        }
        let mut expected = Matrix::zeros(3, 3);
        for i in 0..n {
            for j in 0..n {
                if m1[i][j] != 0.0 && m2[i][j] != 0.0 {
                    expected[(i, j)] = 0.25 * (m1[i][j] + m2[i][j]);
                }
            }
        }
        let (p2, phi) = second_order(&p);
        assert!(p2.max_abs_diff(&expected) < 1e-15);
        // M₁[0][2] = 0 so the corner is masked out
        assert_eq!(p2[(0, 2)], 0.0);
        assert!(phi.max_abs_diff(&phi.transpose()) == 0.0);
    }

    fn ops_for(adj: &Matrix, order: usize) -> PropagationOperators {
        PropagationOperators::new(adj, adj, 0.1, order).unwrap()
    }

    #[test]
    fn layer_zero_input() {
        let cfg = ModelConfig {
            hidden: 3,
            ..ModelConfig::default()
        };
        let adj = m(&[&[0.0, 1.0], &[0.0, 0.0]]);
        let ops = ops_for(&adj, 1);
        let params = LayerParams {
            thetas: vec![Matrix::from_fn(2, 3, |i, j| (i + j) as f64); 2],
        };
        let z = layer_forward(&Matrix::zeros(2, 2), &ops, &params, &cfg).unwrap();
        assert_eq!(z, Matrix::zeros(2, 3));
    }

    #[test]
    fn layer_identity_branch() {
        let cfg = ModelConfig {
            hidden: 2,
            ..ModelConfig::default()
        };
        let adj = m(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let ops = ops_for(&adj, 1);
        let params = LayerParams {
            thetas: vec![Matrix::identity(2), Matrix::zeros(2, 2)],
        };
        let x = m(&[&[1.0, -2.0], &[-0.5, 3.0]]);
        let z = layer_forward(&x, &ops, &params, &cfg).unwrap();
        assert_eq!(z, x.map(|v| v.max(0.0)));
    }

    #[test]
    fn layer_matches_direct_evaluation() {
        let adj = m(&[&[0.0, 1.0], &[0.0, 0.0]]);
        let x = m(&[&[0.3, -0.7], &[1.1, 0.4]]);
        let t0 = m(&[&[0.2, -0.1], &[0.5, 0.3]]);
        let t1 = m(&[&[-0.4, 0.6], &[0.1, 0.9]]);
        let t2 = m(&[&[0.7, 0.2], &[-0.3, 0.05]]);
        for (order, fusion) in [(1, Fusion::Sum), (2, Fusion::Sum), (2, Fusion::Concat)] {
            let cfg = ModelConfig {
                hidden: 2,
                order,
                fusion,
                ..ModelConfig::default()
            };
            let ops = ops_for(&adj, order);
            let mut thetas = vec![t0.clone(), t1.clone()];
            if order == 2 {
                thetas.push(t2.clone());
            }
            let z = layer_forward(&x, &ops, &LayerParams { thetas: thetas.clone() }, &cfg).unwrap();
            // direct element-wise evaluation
            let ops_list: Vec<Matrix> = [Some(Matrix::identity(2)), Some(ops.psi.clone()), ops.phi.clone()]
                .into_iter()
                .take(order + 1)
                .map(Option::unwrap)
                .collect();
            let mut branch_out = Vec::new();
            for (s, t) in ops_list.iter().zip(&thetas) {
                let mut o = [[0.0; 2]; 2];
                for i in 0..2 {
                    for c in 0..2 {
                        for k in 0..2 {
                            for f in 0..2 {
                                o[i][c] += s[(i, k)] * x[(k, f)] * t[(f, c)];
                            }
                        }
                    }
                }
                branch_out.push(o);
            }
            for i in 0..2 {
                for c in 0..cfg.output_dim() {
                    let v = match fusion {
                        Fusion::Sum => branch_out.iter().map(|o| o[i][c]).sum::<f64>(),
                        Fusion::Concat => branch_out[c / 2][i][c % 2],
                    };
                    assert!((z[(i, c)] - v.max(0.0)).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn readout_modes() {
        let one = m(&[&[1.0, -2.0]]);
        for mode in [Readout::Mean, Readout::Sum, Readout::Max] {
            assert_eq!(readout(&one, mode).unwrap(), vec![1.0, -2.0]);
        }
        let same = m(&[&[1.0, 2.0], &[1.0, 2.0]]);
        assert_eq!(readout(&same, Readout::Mean).unwrap(), vec![1.0, 2.0]);
        let two = m(&[&[0.0, 4.0], &[2.0, 0.0]]);
        assert_eq!(readout(&two, Readout::Mean).unwrap(), vec![1.0, 2.0]);
        assert_eq!(readout(&two, Readout::Max).unwrap(), vec![2.0, 4.0]);
        assert_eq!(readout(&Matrix::zeros(0, 2), Readout::Mean), Err(Error::EmptyGraph));
    }

    #[test]
    fn config_validation() {
        assert!(ModelConfig::default().validate().is_ok());
        let k3 = ModelConfig {
            order: 3,
            ..ModelConfig::default()
        };
        match k3.validate() {
            Err(Error::InvalidConfig(msg)) => assert!(msg.contains("1..=2")),
            other => panic!("{other:?}"),
        }
        assert!(ModelConfig {
            alpha: 1.0,
            ..ModelConfig::default()
        }
        .validate()
        .is_err());
    }
}
