//! One-class hypersphere training on top of the digraph convolution.
//!
//! The objective over `M` training graphs is
//!
//! ```text
//! (1/M) Σₘ ‖DiGCN(Gₘ) − o‖² + (λ/2) Σₗ ‖Hˡ‖²_F
//! ```
//!
//! with `o` the mean graph vector of an initial forward pass, frozen for the
//! whole run. The network has no bias terms and uses an unbounded rectifier,
//! so the constant map onto `o` is not reachable for free. A graph's anomaly
//! score is its (unsquared) distance to `o`.

use alloc::vec;
use alloc::vec::Vec;

use rand::distributions::{Distribution, Uniform};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::digcn::{self, Forward, LayerParams, ModelConfig, PropagationOperators};
use crate::error::{Error, Result};
use crate::eval::metrics::roc_auc;
use crate::graph::LogGraph;
use crate::linalg::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Optimizer {
    Sgd,
    Adam,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub optimizer: Optimizer,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub epochs: usize,
    pub seed: u64,
    pub shuffle: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 128,
            optimizer: Optimizer::Sgd,
            learning_rate: 0.01,
            weight_decay: 1e-4,
            epochs: 100,
            seed: 0,
            shuffle: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidConfig(alloc::format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.weight_decay.is_nan() || self.weight_decay < 0.0 {
            return Err(Error::InvalidConfig(alloc::format!(
                "weight decay must be non-negative, got {}",
                self.weight_decay
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch size must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub seed: u64,
    pub epochs_run: usize,
    pub final_loss: Option<f64>,
    /// Epoch (1-based) kept by validation-based selection.
    pub selected_epoch: Option<usize>,
    pub validation_auc: Option<f64>,
}

/// A graph with its propagation operators built once.
#[derive(Debug, Clone)]
pub struct PreparedGraph {
    pub x: Matrix,
    pub ops: PropagationOperators,
}

impl PreparedGraph {
    pub fn new(graph: &LogGraph, config: &ModelConfig) -> Result<Self> {
        Ok(PreparedGraph {
            x: graph.x.clone(),
            ops: PropagationOperators::for_graph(graph, config)?,
        })
    }
}

pub fn prepare_all(graphs: &[LogGraph], config: &ModelConfig) -> Result<Vec<PreparedGraph>> {
    graphs.iter().map(|g| PreparedGraph::new(g, config)).collect()
}

/// Glorot-uniform Θ for every layer and branch, drawn from a seeded stream.
pub fn init_params(config: &ModelConfig, d_attr: usize, seed: u64) -> Vec<LayerParams> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..config.layers)
        .map(|l| {
            let fan_in = config.input_dim(l, d_attr);
            let fan_out = config.hidden;
            let bound = libm::sqrt(6.0 / (fan_in + fan_out) as f64);
            let dist = Uniform::new_inclusive(-bound, bound);
            LayerParams {
                thetas: (0..config.branches())
                    .map(|_| Matrix::from_fn(fan_in, fan_out, |_, _| dist.sample(&mut rng)))
                    .collect(),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OneClassModel {
    pub config: ModelConfig,
    pub d_attr: usize,
    pub layers: Vec<LayerParams>,
    pub center: Vec<f64>,
    pub meta: TrainingMeta,
}

impl OneClassModel {
    /// Fresh parameters with a zero center; call [`init_center`] before training.
    pub fn new(config: ModelConfig, d_attr: usize, seed: u64) -> Result<Self> {
        config.validate()?;
        Ok(OneClassModel {
            config,
            d_attr,
            layers: init_params(&config, d_attr, seed),
            center: vec![0.0; config.output_dim()],
            meta: TrainingMeta {
                seed,
                ..TrainingMeta::default()
            },
        })
    }

    pub fn forward(&self, g: &PreparedGraph) -> Result<Forward> {
        if g.x.cols() != self.d_attr {
            return Err(Error::ShapeMismatch {
                op: "model input",
                expected: (g.x.rows(), self.d_attr),
                found: g.x.shape(),
            });
        }
        digcn::forward(&g.x, &g.ops, &self.layers, &self.config)
    }

    pub fn embed(&self, g: &PreparedGraph) -> Result<Vec<f64>> {
        self.forward(g).map(|f| f.z)
    }

    pub fn score_prepared(&self, g: &PreparedGraph) -> Result<f64> {
        Ok(distance(&self.embed(g)?, &self.center))
    }

    /// Euclidean distance of the graph vector from the center.
    pub fn score(&self, graph: &LogGraph) -> Result<f64> {
        self.score_prepared(&PreparedGraph::new(graph, &self.config)?)
    }

    pub fn score_all(&self, graphs: &[LogGraph]) -> Result<Vec<f64>> {
        graphs.iter().map(|g| self.score(g)).collect()
    }

    pub fn weight_norm_sq(&self) -> f64 {
        self.layers.iter().map(LayerParams::frobenius_sq).sum()
    }
}

pub fn distance(z: &[f64], center: &[f64]) -> f64 {
    libm::sqrt(squared_distance(z, center))
}

fn squared_distance(z: &[f64], center: &[f64]) -> f64 {
    z.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// Mean graph vector of the training set under the current parameters.
pub fn init_center(model: &OneClassModel, train: &[PreparedGraph]) -> Result<Vec<f64>> {
    if train.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    let mut center = vec![0.0; model.config.output_dim()];
    for g in train {
        for (c, v) in center.iter_mut().zip(model.embed(g)?) {
            *c += v;
        }
    }
    let m = train.len() as f64;
    center.iter_mut().for_each(|c| *c /= m);
    Ok(center)
}

/// Objective over `batch`.
pub fn objective(model: &OneClassModel, batch: &[&PreparedGraph], lambda: f64) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    let mut dist = 0.0;
    for g in batch {
        dist += squared_distance(&model.embed(g)?, &model.center);
    }
    Ok(dist / batch.len() as f64 + 0.5 * lambda * model.weight_norm_sq())
}

/// Objective over `batch` and its gradient with respect to every Θ
/// (weight-decay term included).
pub fn loss_and_gradient(
    model: &OneClassModel,
    batch: &[&PreparedGraph],
    lambda: f64,
) -> Result<(f64, Vec<LayerParams>)> {
    if batch.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    let m = batch.len() as f64;
    let mut grads: Vec<LayerParams> = model.layers.iter().map(LayerParams::zeros_like).collect();
    let mut dist = 0.0;
    for g in batch {
        let fwd = model.forward(g)?;
        let dz: Vec<f64> = fwd
            .z
            .iter()
            .zip(&model.center)
            .map(|(a, b)| 2.0 * (a - b) / m)
            .collect();
        dist += squared_distance(&fwd.z, &model.center);
        let g_grads = digcn::backward(&fwd, &dz, &g.ops, &model.layers, &model.config)?;
        for (acc, gl) in grads.iter_mut().zip(&g_grads) {
            for (a, t) in acc.thetas.iter_mut().zip(&gl.thetas) {
                a.add_assign(t)?;
            }
        }
    }
    if lambda != 0.0 {
        for (acc, layer) in grads.iter_mut().zip(&model.layers) {
            for (a, t) in acc.thetas.iter_mut().zip(&layer.thetas) {
                a.axpy(lambda, t)?;
            }
        }
    }
    let loss = dist / m + 0.5 * lambda * model.weight_norm_sq();
    Ok((loss, grads))
}

#[derive(Debug, Clone)]
struct AdamState {
    m: Vec<LayerParams>,
    v: Vec<LayerParams>,
    t: i32,
}

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

fn apply_update(model: &mut OneClassModel, grads: &[LayerParams], cfg: &TrainConfig, adam: &mut Option<AdamState>) {
    match cfg.optimizer {
        Optimizer::Sgd => {
            for (layer, g) in model.layers.iter_mut().zip(grads) {
                for (t, gt) in layer.thetas.iter_mut().zip(&g.thetas) {
                    t.axpy(-cfg.learning_rate, gt).expect("gradient shape");
                }
            }
        }
        Optimizer::Adam => {
            let state = adam.get_or_insert_with(|| AdamState {
                m: grads.iter().map(LayerParams::zeros_like).collect(),
                v: grads.iter().map(LayerParams::zeros_like).collect(),
                t: 0,
            });
            state.t += 1;
            let c1 = 1.0 - libm::pow(ADAM_BETA1, state.t as f64);
            let c2 = 1.0 - libm::pow(ADAM_BETA2, state.t as f64);
            for (l, layer) in model.layers.iter_mut().enumerate() {
                for (b, theta) in layer.thetas.iter_mut().enumerate() {
                    let g = grads[l].thetas[b].as_slice();
                    let m = state.m[l].thetas[b].as_mut_slice();
                    let v = state.v[l].thetas[b].as_mut_slice();
                    for (i, w) in theta.as_mut_slice().iter_mut().enumerate() {
                        m[i] = ADAM_BETA1 * m[i] + (1.0 - ADAM_BETA1) * g[i];
                        v[i] = ADAM_BETA2 * v[i] + (1.0 - ADAM_BETA2) * g[i] * g[i];
                        let mhat = m[i] / c1;
                        let vhat = v[i] / c2;
                        *w -= cfg.learning_rate * mhat / (libm::sqrt(vhat) + ADAM_EPS);
                    }
                }
            }
        }
    }
}

/// Labelled graphs for epoch-end model selection.
#[derive(Debug, Clone, Copy)]
pub struct Validation<'a> {
    pub graphs: &'a [PreparedGraph],
    pub labels: &'a [bool],
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    /// Mean objective over the batches of each epoch.
    pub losses: Vec<f64>,
    /// Validation ROC AUC after each epoch, when validation was usable.
    pub validation_auc: Vec<f64>,
}

/// Mini-batch descent on the frozen-center objective.
pub fn train(
    model: &mut OneClassModel,
    train: &[PreparedGraph],
    cfg: &TrainConfig,
    validation: Option<Validation<'_>>,
) -> Result<TrainReport> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    let validation = validation
        .filter(|v| v.labels.iter().any(|&l| l) && v.labels.iter().any(|&l| !l) && v.graphs.len() == v.labels.len());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed_5eed_5eed_5eed);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut adam = None;
    let mut report = TrainReport {
        losses: Vec::with_capacity(cfg.epochs),
        validation_auc: Vec::new(),
    };
    let mut best: Option<(f64, usize, Vec<LayerParams>)> = None;

    for epoch in 0..cfg.epochs {
        if cfg.shuffle {
            order.shuffle(&mut rng);
        }
        let mut epoch_loss = 0.0;
        let mut batches = 0usize;
        for (b, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let batch: Vec<&PreparedGraph> = chunk.iter().map(|&i| &train[i]).collect();
            let (loss, grads) = loss_and_gradient(model, &batch, cfg.weight_decay)?;
            if !loss.is_finite() {
                return Err(Error::NonFiniteLoss { epoch, batch: b });
            }
            apply_update(model, &grads, cfg, &mut adam);
            epoch_loss += loss;
            batches += 1;
        }
        report.losses.push(epoch_loss / batches as f64);
        model.meta.epochs_run = epoch + 1;

        if let Some(v) = validation {
            let scores = v
                .graphs
                .iter()
                .map(|g| model.score_prepared(g))
                .collect::<Result<Vec<_>>>()?;
            let auc = roc_auc(&scores, v.labels)?;
            report.validation_auc.push(auc);
            if best.as_ref().is_none_or(|(a, _, _)| auc > *a) {
                best = Some((auc, epoch + 1, model.layers.clone()));
            }
        }
    }

    model.meta.final_loss = report.losses.last().copied();
    if let Some((auc, epoch, layers)) = best {
        model.layers = layers;
        model.meta.selected_epoch = Some(epoch);
        model.meta.validation_auc = Some(auc);
    }
    Ok(report)
}

/// Initialise parameters and center from `graphs`, then train.
pub fn fit(
    graphs: &[LogGraph],
    config: ModelConfig,
    cfg: &TrainConfig,
    validation: Option<(&[LogGraph], &[bool])>,
) -> Result<(OneClassModel, TrainReport)> {
    let first = graphs.first().ok_or(Error::EmptyTrainingSet)?;
    let mut model = OneClassModel::new(config, first.x.cols(), cfg.seed)?;
    let prepared = prepare_all(graphs, &config)?;
    model.center = init_center(&model, &prepared)?;
    let val_prepared = match validation {
        Some((g, _)) => Some(prepare_all(g, &config)?),
        None => None,
    };
    let val = match (&val_prepared, validation) {
        (Some(p), Some((_, labels))) => Some(Validation { graphs: p, labels }),
        _ => None,
    };
    let report = train(&mut model, &prepared, cfg, val)?;
    Ok((model, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::synth::{cycle_graph, rotation_sequence};
    use crate::grouping::Label;
    use crate::semantics::onehot_table;
    use alloc::string::ToString;

    fn small_cfg() -> ModelConfig {
        ModelConfig {
            hidden: 6,
            ..ModelConfig::default()
        }
    }

    #[test]
    fn init_is_seeded_and_bounded() {
        let cfg = small_cfg();
        let a = init_params(&cfg, 4, 7);
        assert_eq!(a, init_params(&cfg, 4, 7));
        assert_ne!(a, init_params(&cfg, 4, 8));
        let big = ModelConfig {
            hidden: 40,
            ..ModelConfig::default()
        };
        let p = init_params(&big, 25, 3);
        let bound = libm::sqrt(6.0 / 65.0);
        let vals: Vec<f64> = p[0].thetas.iter().flat_map(|t| t.as_slice().to_vec()).collect();
        assert!(vals.len() >= 1000);
        assert!(vals.iter().all(|v| v.abs() <= bound));
        let (lo, hi) = vals
            .iter()
            .fold((f64::MAX, f64::MIN), |(l, h), &v| (l.min(v), h.max(v)));
        assert!(lo < -0.9 * bound && hi > 0.9 * bound);
    }

    #[test]
    fn center_of_single_graph_scores_zero() {
        let g = cycle_graph("c".to_string(), Label::Normal, &[(0, 1), (1, 2), (2, 0)], 3);
        let mut model = OneClassModel::new(small_cfg(), 3, 1).unwrap();
        let prepared = prepare_all(core::slice::from_ref(&g), &model.config).unwrap();
        model.center = init_center(&model, &prepared).unwrap();
        assert_eq!(model.score(&g).unwrap(), 0.0);
        assert_eq!(init_center(&model, &[]), Err(Error::EmptyTrainingSet));
    }

    #[test]
    fn degenerate_loss_is_weight_decay_only() {
        let g = cycle_graph("c".to_string(), Label::Normal, &[(0, 1), (1, 0)], 2);
        let mut model = OneClassModel::new(small_cfg(), 2, 4).unwrap();
        let prepared = prepare_all(&[g.clone(), g.clone(), g], &model.config).unwrap();
        model.center = init_center(&model, &prepared).unwrap();
        let batch: Vec<&PreparedGraph> = prepared.iter().collect();
        let lambda = 0.01;
        let (loss, grads) = loss_and_gradient(&model, &batch, lambda).unwrap();
        assert_eq!(loss, 0.5 * lambda * model.weight_norm_sq());
        for (gl, l) in grads.iter().zip(&model.layers) {
            for (gt, t) in gl.thetas.iter().zip(&l.thetas) {
                assert!(gt.max_abs_diff(&t.scale(lambda)) < 1e-15);
            }
        }
    }

    #[test]
    fn zero_parameters_map_everything_to_zero() {
        let t = onehot_table(4);
        let g1 = LogGraph::from_sequence("a".into(), Label::Normal, &rotation_sequence(0), &t).unwrap();
        let g2 = LogGraph::from_sequence("b".into(), Label::Normal, &[0, 0, 2], &t).unwrap();
        let mut model = OneClassModel::new(small_cfg(), 4, 0).unwrap();
        for l in &mut model.layers {
            *l = l.zeros_like();
        }
        model.center = vec![0.5; 6];
        let expected = libm::sqrt(6.0 * 0.25);
        assert_eq!(model.score(&g1).unwrap(), expected);
        assert_eq!(model.score(&g2).unwrap(), expected);
    }

    #[test]
    fn training_is_deterministic_and_descends() {
        let t = onehot_table(4);
        let graphs: Vec<LogGraph> = (0..10)
            .map(|i| {
                let mut seq = rotation_sequence(i % 4);
                if i % 3 == 0 {
                    seq.push(seq[1]);
                }
                LogGraph::from_sequence(alloc::format!("g{i}"), Label::Normal, &seq, &t).unwrap()
            })
            .collect();
        let cfg = TrainConfig {
            epochs: 50,
            batch_size: 4,
            seed: 11,
            ..TrainConfig::default()
        };
        let (a, ra) = fit(&graphs, small_cfg(), &cfg, None).unwrap();
        let (b, rb) = fit(&graphs, small_cfg(), &cfg, None).unwrap();
        assert_eq!(ra, rb);
        assert_eq!(a.score_all(&graphs).unwrap(), b.score_all(&graphs).unwrap());

        let mut init = OneClassModel::new(small_cfg(), 4, 11).unwrap();
        let prepared = prepare_all(&graphs, &init.config).unwrap();
        init.center = init_center(&init, &prepared).unwrap();
        let mean =
            |m: &OneClassModel| m.score_all(&graphs).unwrap().iter().map(|s| s * s).sum::<f64>() / graphs.len() as f64;
        assert_eq!(init.center, a.center);
        assert!(mean(&a) <= mean(&init));
    }

    #[test]
    fn single_graph_loss_decreases_without_decay() {
        let t = onehot_table(3);
        let g = LogGraph::from_sequence("x".into(), Label::Normal, &[0, 1, 2, 1], &t).unwrap();
        let mut model = OneClassModel::new(small_cfg(), 3, 5).unwrap();
        let prepared = prepare_all(core::slice::from_ref(&g), &model.config).unwrap();
        // a center away from the initial vector so there is a distance to close
        model.center = model.embed(&prepared[0]).unwrap().iter().map(|v| v + 0.3).collect();
        let cfg = TrainConfig {
            epochs: 200,
            weight_decay: 0.0,
            learning_rate: 0.005,
            ..TrainConfig::default()
        };
        let report = train(&mut model, &prepared, &cfg, None).unwrap();
        assert!(report.losses.windows(2).all(|w| w[1] <= w[0] + 1e-15));
        assert!(report.losses.last().unwrap() < &report.losses[0]);
    }

    #[test]
    fn adam_runs_and_is_deterministic() {
        let t = onehot_table(3);
        let graphs: Vec<LogGraph> = [[0usize, 1, 2], [2, 1, 0], [0, 2, 1]]
            .iter()
            .map(|s| LogGraph::from_sequence("a".into(), Label::Normal, s, &t).unwrap())
            .collect();
        let cfg = TrainConfig {
            optimizer: Optimizer::Adam,
            learning_rate: 0.001,
            epochs: 5,
            ..TrainConfig::default()
        };
        let (a, _) = fit(&graphs, small_cfg(), &cfg, None).unwrap();
        let (b, _) = fit(&graphs, small_cfg(), &cfg, None).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn validation_selection_records_epoch() {
        let t = onehot_table(4);
        let normal = LogGraph::from_sequence("n".into(), Label::Normal, &rotation_sequence(0), &t).unwrap();
        let odd = LogGraph::from_sequence("a".into(), Label::Anomalous, &[0, 2, 1, 3], &t).unwrap();
        let train_set = [normal.clone(), normal.clone()];
        let val = [normal, odd];
        let cfg = TrainConfig {
            epochs: 3,
            ..TrainConfig::default()
        };
        let (model, report) = fit(&train_set, small_cfg(), &cfg, Some((&val, &[false, true]))).unwrap();
        assert_eq!(report.validation_auc.len(), 3);
        assert!(model.meta.selected_epoch.is_some());
    }

    #[test]
    fn config_rejections() {
        assert!(TrainConfig {
            learning_rate: -0.1,
            ..TrainConfig::default()
        }
        .validate()
        .is_err());
        assert!(TrainConfig {
            batch_size: 0,
            ..TrainConfig::default()
        }
        .validate()
        .is_err());
    }
}
