//! Acquisition scores and top-B batch selection.

use std::cmp::Ordering;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::seed::derive_seed;
use crate::surrogate::Prediction;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AcquisitionError {
    #[error("pool has {available} unacquired molecules, batch needs {requested}")]
    PoolExhausted { requested: usize, available: usize },
    #[error("batch size must be >= 1")]
    ZeroBatch,
    #[error("fraction {0} must lie in (0, 1]")]
    InvalidFraction(f64),
    #[error("beta {0} must be finite and >= 0")]
    InvalidBeta(f64),
    #[error("{pool} pool indices but {predictions} predictions")]
    LengthMismatch { pool: usize, predictions: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// Predicted mean.
    #[default]
    Greedy,
    /// `mean + beta · sqrt(variance)`.
    Ucb,
    /// Uniform draw, ignoring the model.
    Random,
}

impl Strategy {
    pub fn name(self) -> &'static str {
        match self {
            Strategy::Greedy => "greedy",
            Strategy::Ucb => "ucb",
            Strategy::Random => "random",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcquisitionConfig {
    pub strategy: Strategy,
    /// Exploration weight, read only by [`Strategy::Ucb`].
    pub beta: f64,
    pub batch_size: usize,
    pub seed: u64,
}

impl AcquisitionConfig {
    pub fn validate(&self) -> Result<(), AcquisitionError> {
        if !(self.beta.is_finite() && self.beta >= 0.0) {
            return Err(AcquisitionError::InvalidBeta(self.beta));
        }
        if self.batch_size == 0 {
            return Err(AcquisitionError::ZeroBatch);
        }
        Ok(())
    }
}

/// Acquisition value of `p` for library row `index`. The random strategy
/// draws a uniform value from a stream keyed by `(seed, index)`.
pub fn acquisition_score(p: &Prediction, cfg: &AcquisitionConfig, index: usize) -> f64 {
    match cfg.strategy {
        Strategy::Greedy => p.mean,
        Strategy::Ucb if cfg.beta == 0.0 => p.mean,
        Strategy::Ucb => p.mean + cfg.beta * p.variance.max(0.0).sqrt(),
        Strategy::Random => {
            let bits = derive_seed(cfg.seed, "random-acquisition", index as u64);
            (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
        }
    }
}

/// Higher score first, then lower index. NaN ranks below every number.
fn rank(a: &(f64, usize), b: &(f64, usize)) -> Ordering {
    let key = |s: f64| if s.is_nan() { f64::NEG_INFINITY } else { s };
    key(b.0).total_cmp(&key(a.0)).then(a.1.cmp(&b.1))
}

/// The `batch_size` unacquired pool members with the highest acquisition
/// score, ties to the lower index, returned in ascending index order.
///
/// `predictions[i]` belongs to library row `pool[i]`; `acquired` is a mask
/// over library rows.
pub fn select_batch(
    pool: &[usize],
    predictions: &[Prediction],
    acquired: &[bool],
    cfg: &AcquisitionConfig,
) -> Result<Vec<usize>, AcquisitionError> {
    cfg.validate()?;
    if pool.len() != predictions.len() {
        return Err(AcquisitionError::LengthMismatch { pool: pool.len(), predictions: predictions.len() });
    }
    let mut scored: Vec<(f64, usize)> = pool
        .par_iter()
        .zip(predictions)
        .filter(|(&i, _)| !acquired.get(i).copied().unwrap_or(false))
        .map(|(&i, p)| (acquisition_score(p, cfg, i), i))
        .collect();
    let b = cfg.batch_size;
    if scored.len() < b {
        return Err(AcquisitionError::PoolExhausted { requested: b, available: scored.len() });
    }
    if scored.len() > b {
        scored.select_nth_unstable_by(b - 1, rank);
        scored.truncate(b);
    }
    let mut batch: Vec<usize> = scored.into_iter().map(|(_, i)| i).collect();
    batch.sort_unstable();
    Ok(batch)
}

/// `ceil(frac · n)`, at least 1. Products within 1e-9 relative of an integer
/// count as that integer, so `0.07 · 100` is 7, not 8.
pub fn fraction_count(n: usize, frac: f64) -> Result<usize, AcquisitionError> {
    if !(frac > 0.0 && frac <= 1.0) {
        return Err(AcquisitionError::InvalidFraction(frac));
    }
    let x = frac * n as f64;
    let nearest = x.round();
    let count = if (x - nearest).abs() <= 1e-9 * nearest.max(1.0) { nearest } else { x.ceil() };
    Ok((count as usize).clamp(1.min(n), n))
}

/// `ceil(frac · n)` distinct indices drawn uniformly from `0..n`, ascending.
pub fn initial_batch(n: usize, frac: f64, seed: u64) -> Result<Vec<usize>, AcquisitionError> {
    if !(frac > 0.0 && frac < 1.0) {
        return Err(AcquisitionError::InvalidFraction(frac));
    }
    let k = fraction_count(n, frac)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picks = rand::seq::index::sample(&mut rng, n, k).into_vec();
    picks.sort_unstable();
    Ok(picks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::{prop_assert, prop_assert_eq, proptest};
    use proptest::strategy::Strategy as Gen;

    fn cfg(strategy: Strategy, beta: f64, batch_size: usize) -> AcquisitionConfig {
        AcquisitionConfig { strategy, beta, batch_size, seed: 0 }
    }

    fn preds(means: &[f64]) -> Vec<Prediction> {
        means.iter().map(|&mean| Prediction { mean, variance: 1.0 }).collect()
    }

    #[test]
    fn score_examples() {
        let p = Prediction { mean: 9.1, variance: 0.3 };
        assert_eq!(acquisition_score(&p, &cfg(Strategy::Greedy, 2.0, 1), 0), 9.1);
        let q = Prediction { mean: 5.0, variance: 4.0 };
        assert_eq!(acquisition_score(&q, &cfg(Strategy::Ucb, 2.0, 1), 0), 9.0);
        assert_eq!(acquisition_score(&q, &cfg(Strategy::Ucb, 0.0, 1), 0), 5.0);
        let r = acquisition_score(&q, &cfg(Strategy::Random, 0.0, 1), 3);
        assert!((0.0..1.0).contains(&r));
        assert_eq!(r, acquisition_score(&p, &cfg(Strategy::Random, 0.0, 1), 3));
    }

    #[test]
    fn select_examples() {
        let pool: Vec<usize> = (0..5).collect();
        let none = vec![false; 5];
        let c = cfg(Strategy::Greedy, 0.0, 2);
        assert_eq!(select_batch(&pool, &preds(&[1.0, 5.0, 3.0, 2.0, 4.0]), &none, &c).unwrap(), [1, 4]);
        assert_eq!(select_batch(&pool, &preds(&[7.0; 5]), &none, &c).unwrap(), [0, 1]);
        let mut acq = none.clone();
        acq[1] = true;
        let one = cfg(Strategy::Greedy, 0.0, 1);
        assert_eq!(select_batch(&pool, &preds(&[1.0, 5.0, 3.0, 2.0, 4.0]), &acq, &one).unwrap(), [4]);
        let all = vec![true; 5];
        assert_eq!(
            select_batch(&pool, &preds(&[1.0; 5]), &all, &one),
            Err(AcquisitionError::PoolExhausted { requested: 1, available: 0 })
        );
        assert_eq!(select_batch(&pool, &preds(&[1.0; 5]), &none, &cfg(Strategy::Greedy, 0.0, 0)), Err(AcquisitionError::ZeroBatch));
        assert!(select_batch(&pool, &preds(&[1.0; 4]), &none, &one).is_err());
        assert_eq!(select_batch(&pool, &preds(&[f64::NAN, 0.0, 1.0, 2.0, 3.0]), &none, &cfg(Strategy::Greedy, 0.0, 4)).unwrap(), [1, 2, 3, 4]);
    }

    #[test]
    fn ucb_prefers_uncertain() {
        let pool = [0, 1];
        let p = [Prediction { mean: 1.0, variance: 0.0 }, Prediction { mean: 0.5, variance: 1.0 }];
        let mask = [false, false];
        assert_eq!(select_batch(&pool, &p, &mask, &cfg(Strategy::Greedy, 0.0, 1)).unwrap(), [0]);
        assert_eq!(select_batch(&pool, &p, &mask, &cfg(Strategy::Ucb, 2.0, 1)).unwrap(), [1]);
    }

    #[test]
    fn initial_batch_sizes() {
        assert_eq!(initial_batch(50240, 0.01, 1).unwrap().len(), 503);
        assert_eq!(initial_batch(1000, 0.001, 1).unwrap().len(), 1);
        assert_eq!(initial_batch(100, 0.07, 1).unwrap().len(), 7);
        assert_eq!(initial_batch(1000, 0.05, 9).unwrap(), initial_batch(1000, 0.05, 9).unwrap());
        assert_ne!(initial_batch(1000, 0.05, 9).unwrap(), initial_batch(1000, 0.05, 10).unwrap());
        assert!(initial_batch(100, 0.0, 1).is_err());
        assert!(initial_batch(100, 1.0, 1).is_err());
        assert_eq!(fraction_count(10_000, 0.01).unwrap(), 100);
        assert_eq!(fraction_count(50, 0.001).unwrap(), 1);
    }

    #[test]
    fn random_selection_is_uniform() {
        let (n, b, trials) = (100, 10, 1000);
        let pool: Vec<usize> = (0..n).collect();
        let p = preds(&vec![0.0; n]);
        let mask = vec![false; n];
        let mut counts = vec![0usize; n];
        for t in 0..trials {
            let c = AcquisitionConfig { strategy: Strategy::Random, beta: 0.0, batch_size: b, seed: t as u64 };
            for i in select_batch(&pool, &p, &mask, &c).unwrap() {
                counts[i] += 1;
            }
        }
        let q = b as f64 / n as f64;
        let se = (q * (1.0 - q) / trials as f64).sqrt();
        for (i, &c) in counts.iter().enumerate() {
            let f = c as f64 / trials as f64;
            assert!((f - q).abs() <= 4.0 * se, "item {i}: {f}");
        }
    }

    fn pool_strategy() -> impl Gen<Value = (Vec<(f64, f64)>, Vec<bool>, usize)> {
        (5usize..60).prop_flat_map(|n| {
            (
                proptest::collection::vec((-20i32..20, 0u32..10), n)
                    .prop_map(|v| v.into_iter().map(|(m, s)| (f64::from(m) * 0.5, f64::from(s))).collect()),
                proptest::collection::vec(proptest::bool::weighted(0.3), n),
                1usize..5,
            )
        })
    }

    proptest! {
        #[test]
        fn ucb_beta_zero_equals_greedy((pv, mask, b) in pool_strategy()) {
            let pool: Vec<usize> = (0..pv.len()).collect();
            let p: Vec<Prediction> = pv.iter().map(|&(mean, variance)| Prediction { mean, variance }).collect();
            let g = select_batch(&pool, &p, &mask, &cfg(Strategy::Greedy, 0.0, b));
            let u = select_batch(&pool, &p, &mask, &cfg(Strategy::Ucb, 0.0, b));
            prop_assert_eq!(g, u);
        }

        #[test]
        fn shift_invariance_and_disjointness((pv, mask, b) in pool_strategy(), shift in -100i32..100) {
            let pool: Vec<usize> = (0..pv.len()).collect();
            let p: Vec<Prediction> = pv.iter().map(|&(mean, variance)| Prediction { mean, variance }).collect();
            let shifted: Vec<Prediction> = p.iter().map(|q| Prediction { mean: q.mean + f64::from(shift), ..*q }).collect();
            let c = cfg(Strategy::Greedy, 0.0, b);
            let free = mask.iter().filter(|m| !**m).count();
            match select_batch(&pool, &p, &mask, &c) {
                Ok(batch) => {
                    prop_assert_eq!(batch.len(), b);
                    prop_assert!(batch.iter().all(|&i| !mask[i]));
                    prop_assert!(batch.windows(2).all(|w| w[0] < w[1]));
                    prop_assert_eq!(select_batch(&pool, &shifted, &mask, &c).unwrap(), batch);
                }
                Err(e) => prop_assert_eq!(e, AcquisitionError::PoolExhausted { requested: b, available: free }),
            }
        }

        #[test]
        fn matches_full_sort((pv, mask, b) in pool_strategy()) {
            let pool: Vec<usize> = (0..pv.len()).collect();
            let p: Vec<Prediction> = pv.iter().map(|&(mean, variance)| Prediction { mean, variance }).collect();
            let c = cfg(Strategy::Ucb, 2.0, b);
            let mut all: Vec<(f64, usize)> = pool.iter().filter(|&&i| !mask[i]).map(|&i| (p[i].mean + 2.0 * p[i].variance.sqrt(), i)).collect();
            all.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
            if all.len() >= b {
                let mut expect: Vec<usize> = all[..b].iter().map(|x| x.1).collect();
                expect.sort_unstable();
                prop_assert_eq!(select_batch(&pool, &p, &mask, &c).unwrap(), expect);
            }
        }
    }
}
