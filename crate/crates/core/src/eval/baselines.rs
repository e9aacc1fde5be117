//! Count-vector baselines: PCA residual and histogram-based outlier scores.
//!
//! Both take an event count matrix (one row per group, one column per
//! template) and return higher scores for more unusual rows.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;

pub const HBOS_EPSILON: f64 = 1e-9;

/// Count vectors stacked as an `f64` matrix.
pub fn count_matrix(counts: &[Vec<u64>]) -> Result<Matrix> {
    let rows: Vec<Vec<f64>> = counts.iter().map(|r| r.iter().map(|&c| c as f64).collect()).collect();
    Matrix::from_rows(&rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// Retained principal directions, one per row.
    pub components: Matrix,
    /// All eigenvalues of the covariance, descending.
    pub eigenvalues: Vec<f64>,
}

impl PcaModel {
    /// Keeps the fewest leading components whose variance reaches
    /// `variance_fraction` of the total.
    pub fn fit(data: &Matrix, variance_fraction: f64) -> Result<PcaModel> {
        if !(0.0..=1.0).contains(&variance_fraction) {
            return Err(Error::InvalidConfig("variance fraction must lie in [0, 1]".into()));
        }
        let (m, f) = data.shape();
        if m == 0 {
            return Err(Error::EmptyTrainingSet);
        }
        let mut mean = vec![0.0; f];
        for i in 0..m {
            for (mu, &v) in mean.iter_mut().zip(data.row(i)) {
                *mu += v / m as f64;
            }
        }
        let centered = DMatrix::from_fn(m, f, |i, j| data[(i, j)] - mean[j]);
        let cov = centered.transpose() * &centered / m as f64;
        let eig = SymmetricEigen::new(cov);
        let mut order: Vec<usize> = (0..f).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i].max(0.0)).collect();
        let total: f64 = eigenvalues.iter().sum();
        let mut keep = 0;
        if total > 0.0 {
            let mut acc = 0.0;
            while keep < f && acc < variance_fraction * total {
                acc += eigenvalues[keep];
                keep += 1;
            }
        }
        let components = Matrix::from_fn(keep, f, |r, c| eig.eigenvectors[(c, order[r])]);
        Ok(PcaModel {
            mean,
            components,
            eigenvalues,
        })
    }

    /// Squared norm of each row's residual off the retained subspace.
    pub fn score(&self, data: &Matrix) -> Result<Vec<f64>> {
        if data.cols() != self.mean.len() {
            return Err(Error::ShapeMismatch {
                op: "pca score",
                expected: (data.rows(), self.mean.len()),
                found: data.shape(),
            });
        }
        let k = self.components.rows();
        Ok((0..data.rows())
            .map(|i| {
                let mut r: Vec<f64> = data.row(i).iter().zip(&self.mean).map(|(x, m)| x - m).collect();
                for c in 0..k {
                    let v = self.components.row(c);
                    let proj: f64 = r.iter().zip(v).map(|(a, b)| a * b).sum();
                    r.iter_mut().zip(v).for_each(|(a, b)| *a -= proj * b);
                }
                r.iter().map(|a| a * a).sum()
            })
            .collect())
    }
}

pub fn pca_baseline(data: &Matrix, variance_fraction: f64) -> Result<Vec<f64>> {
    PcaModel::fit(data, variance_fraction)?.score(data)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureHistogram {
    pub min: f64,
    pub width: f64,
    /// Fraction of training rows per bin.
    pub density: Vec<f64>,
}

impl FeatureHistogram {
    fn bin(&self, v: f64) -> usize {
        let bins = self.density.len();
        if self.width <= 0.0 {
            return 0;
        }
        let b = libm::floor((v - self.min) / self.width);
        if b < 0.0 {
            0
        } else {
            (b as usize).min(bins - 1)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HbosModel {
    pub features: Vec<FeatureHistogram>,
}

impl HbosModel {
    /// Equal-width histograms over each column's training range.
    pub fn fit(data: &Matrix, bins: usize) -> Result<HbosModel> {
        if bins == 0 {
            return Err(Error::InvalidConfig("hbos needs at least one bin".into()));
        }
        let (m, f) = data.shape();
        if m == 0 {
            return Err(Error::EmptyTrainingSet);
        }
        let features = (0..f)
            .map(|c| {
                let col = (0..m).map(|i| data[(i, c)]);
                let min = col.clone().fold(f64::INFINITY, f64::min);
                let max = col.fold(f64::NEG_INFINITY, f64::max);
                let mut h = FeatureHistogram {
                    min,
                    width: (max - min) / bins as f64,
                    density: vec![0.0; bins],
                };
                for i in 0..m {
                    let b = h.bin(data[(i, c)]);
                    h.density[b] += 1.0 / m as f64;
                }
                h
            })
            .collect();
        Ok(HbosModel { features })
    }

    /// `Σ_f ln(1 / (density_f + ε))`; values outside the training range use
    /// the nearest edge bin.
    pub fn score(&self, data: &Matrix) -> Result<Vec<f64>> {
        if data.cols() != self.features.len() {
            return Err(Error::ShapeMismatch {
                op: "hbos score",
                expected: (data.rows(), self.features.len()),
                found: data.shape(),
            });
        }
        Ok((0..data.rows())
            .map(|i| {
                self.features
                    .iter()
                    .zip(data.row(i))
                    .map(|(h, &v)| -libm::log(h.density[h.bin(v)] + HBOS_EPSILON))
                    .sum()
            })
            .collect())
    }
}

pub fn hbos_baseline(data: &Matrix, bins: usize) -> Result<Vec<f64>> {
    HbosModel::fit(data, bins)?.score(data)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_one_data_has_no_residual() {
        let data = Matrix::from_fn(5, 3, |i, j| (i as f64 + 1.0) * [1.0, 2.0, -1.0][j]);
        let scores = pca_baseline(&data, 0.95).unwrap();
        assert!(scores.iter().all(|&s| s.abs() < 1e-18 + 1e-12));
    }

    #[test]
    fn constant_data_scores_zero() {
        let data = Matrix::from_fn(4, 2, |_, _| 3.0);
        assert_eq!(pca_baseline(&data, 0.95).unwrap(), vec![0.0; 4]);
    }

    #[test]
    fn hbos_uniform_feature() {
        let data = Matrix::from_fn(10, 1, |i, _| i as f64);
        let s = hbos_baseline(&data, 10).unwrap();
        assert!(s.iter().all(|&v| (v - s[0]).abs() < 1e-12));
        assert!((s[0] + libm::log(0.1 + HBOS_EPSILON)).abs() < 1e-12);
    }

    #[test]
    fn hbos_clamps_out_of_range() {
        let train = Matrix::from_vec(4, 1, vec![0.0, 0.0, 0.0, 10.0]).unwrap();
        let model = HbosModel::fit(&train, 2).unwrap();
        let s = model.score(&Matrix::from_vec(2, 1, vec![-5.0, 50.0]).unwrap()).unwrap();
        assert!((s[0] + libm::log(0.75 + HBOS_EPSILON)).abs() < 1e-12);
        assert!((s[1] + libm::log(0.25 + HBOS_EPSILON)).abs() < 1e-12);
    }

    #[test]
    fn count_matrix_shape() {
        let m = count_matrix(&[vec![1, 0], vec![2, 5]]).unwrap();
        assert_eq!(m.shape(), (2, 2));
        assert_eq!(m[(1, 1)], 5.0);
    }
}
