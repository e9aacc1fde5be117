//! Train/validation/test splitting and training-set contamination.

use alloc::vec::Vec;

use rand::seq::{index, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fractions of the *normal* instances going to train, validation and test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitRatios {
    pub train: f64,
    pub validation: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        SplitRatios {
            train: 0.70,
            validation: 0.05,
            test: 0.25,
        }
    }
}

impl SplitRatios {
    pub fn validate(&self) -> Result<()> {
        let parts = [self.train, self.validation, self.test];
        if parts.iter().any(|&r| !(0.0..=1.0).contains(&r)) {
            return Err(Error::InvalidConfig("split ratios must lie in [0, 1]".into()));
        }
        let total: f64 = parts.iter().sum();
        if libm::fabs(total - 1.0) > 1e-9 {
            return Err(Error::InvalidConfig(alloc::format!(
                "split ratios must sum to 1, got {total}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Split<T> {
    /// Normal instances only.
    pub train: Vec<T>,
    /// Normals plus an equal number of anomalies.
    pub validation: Vec<T>,
    /// Remaining normals and anomalies.
    pub test: Vec<T>,
    /// Anomalies the validation quota asked for but could not get.
    pub validation_shortfall: usize,
}

/// Seeded split: normals are shuffled and cut by `ratios`; validation gets as
/// many anomalies as validation normals (or all there are); every other
/// anomaly goes to test.
pub fn split<T>(items: Vec<T>, is_anomaly: impl Fn(&T) -> bool, ratios: SplitRatios, seed: u64) -> Result<Split<T>> {
    ratios.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut anomalies, mut normals): (Vec<T>, Vec<T>) = items.into_iter().partition(|t| is_anomaly(t));
    normals.shuffle(&mut rng);
    anomalies.shuffle(&mut rng);

    let n = normals.len() as f64;
    let n_train = libm::round(ratios.train * n) as usize;
    let n_val = (libm::round(ratios.validation * n) as usize).min(normals.len() - n_train);

    let mut rest = normals.split_off(n_train);
    let train = normals;
    let test_normals = rest.split_off(n_val);
    let mut validation = rest;

    let take = n_val.min(anomalies.len());
    let test_anomalies = anomalies.split_off(take);
    validation.extend(anomalies);
    let mut test = test_normals;
    test.extend(test_anomalies);
    Ok(Split {
        train,
        validation,
        test,
        validation_shortfall: n_val - take,
    })
}

/// Number of anomalies to add to `n_normal` normals so they make up `rate`
/// of the result.
pub fn contamination_count(n_normal: usize, rate: f64) -> usize {
    // nudge before flooring so 0.1·900/0.9 lands on 100
    libm::floor(rate * n_normal as f64 / (1.0 - rate) + 1e-9) as usize
}

#[derive(Debug, Clone, PartialEq)]
pub struct Contaminated<T> {
    pub items: Vec<T>,
    /// Parallel to `items`: true where an anomaly was injected.
    pub injected: Vec<bool>,
}

/// Mixes sampled anomalies from `pool` into the normal training set.
/// Sampling is without replacement; the result is shuffled.
pub fn contaminate<T: Clone>(normals: Vec<T>, pool: &[T], rate: f64, seed: u64) -> Result<Contaminated<T>> {
    if !(0.0..=0.5).contains(&rate) {
        return Err(Error::InvalidConfig(alloc::format!(
            "contamination rate {rate} outside [0, 0.5]"
        )));
    }
    let needed = contamination_count(normals.len(), rate);
    if needed > pool.len() {
        return Err(Error::PoolTooSmall {
            needed,
            available: pool.len(),
        });
    }
    if needed == 0 {
        let injected = alloc::vec![false; normals.len()];
        return Ok(Contaminated {
            items: normals,
            injected,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picks = index::sample(&mut rng, pool.len(), needed);
    let mut tagged: Vec<(T, bool)> = normals.into_iter().map(|t| (t, false)).collect();
    tagged.extend(picks.iter().map(|i| (pool[i].clone(), true)));
    tagged.shuffle(&mut rng);
    let (items, injected) = tagged.into_iter().unzip();
    Ok(Contaminated { items, injected })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn split_counts() {
        let items: Vec<(usize, bool)> = (0..120).map(|i| (i, i >= 100)).collect();
        let s = split(items, |t| t.1, SplitRatios::default(), 3).unwrap();
        let count = |v: &[(usize, bool)], a: bool| v.iter().filter(|t| t.1 == a).count();
        assert_eq!((count(&s.train, false), count(&s.train, true)), (70, 0));
        assert_eq!((count(&s.validation, false), count(&s.validation, true)), (5, 5));
        assert_eq!((count(&s.test, false), count(&s.test, true)), (25, 15));
        assert_eq!(s.validation_shortfall, 0);
    }

    #[test]
    fn split_without_anomalies_warns() {
        let items: Vec<usize> = (0..100).collect();
        let s = split(items, |_| false, SplitRatios::default(), 1).unwrap();
        assert_eq!(s.validation.len(), 5);
        assert_eq!(s.validation_shortfall, 5);
        assert_eq!(s.train.len() + s.validation.len() + s.test.len(), 100);
    }

    #[test]
    fn split_is_seeded() {
        let mk = || (0..50).map(|i| (i, i % 7 == 0)).collect::<Vec<_>>();
        let a = split(mk(), |t| t.1, SplitRatios::default(), 5).unwrap();
        let b = split(mk(), |t| t.1, SplitRatios::default(), 5).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn bad_ratios() {
        let r = SplitRatios {
            train: 0.7,
            validation: 0.1,
            test: 0.25,
        };
        assert!(split(vec![1], |_| false, r, 0).is_err());
    }

    #[test]
    fn contamination_arithmetic() {
        assert_eq!(contamination_count(900, 0.1), 100);
        assert_eq!(contamination_count(900, 0.0), 0);
        let normals: Vec<(usize, bool)> = (0..900).map(|i| (i, false)).collect();
        let pool: Vec<(usize, bool)> = (0..150).map(|i| (1000 + i, true)).collect();
        let c = contaminate(normals.clone(), &pool, 0.1, 2).unwrap();
        assert_eq!(c.items.len(), 1000);
        assert_eq!(c.injected.iter().filter(|&&b| b).count(), 100);
        assert!(c.items.iter().zip(&c.injected).all(|(t, &inj)| t.1 == inj));
        let mut distinct: Vec<usize> = c.items.iter().map(|t| t.0).collect();
        distinct.sort_unstable();
        distinct.dedup();
        assert_eq!(distinct.len(), 1000);

        let same = contaminate(normals.clone(), &pool, 0.0, 2).unwrap();
        assert_eq!(same.items, normals);
        assert_eq!(
            contaminate(normals, &pool[..10], 0.1, 2),
            Err(Error::PoolTooSmall {
                needed: 100,
                available: 10
            })
        );
    }
}
