use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{grow_tree, Binned, GrowParams, RegressionTree};
use super::{
    check_training_data, population_variance, FeatureMatrix, Prediction, SavedModel, Surrogate, SurrogateError,
    TrainConfig,
};
use crate::seed::derive_seed;

/// Per-split feature subset size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaxFeatures {
    /// `ceil(sqrt(d))`
    Sqrt,
    All,
    Count(usize),
}

impl MaxFeatures {
    pub fn resolve(self, d: usize) -> usize {
        match self {
            MaxFeatures::Sqrt => ((d as f64).sqrt().ceil() as usize).max(1),
            MaxFeatures::All => d,
            MaxFeatures::Count(n) => n.clamp(1, d.max(1)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestParams {
    pub n_trees: usize,
    /// `None` grows until leaves are pure.
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    pub bootstrap: bool,
    pub max_features: MaxFeatures,
    pub max_bins: usize,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 100,
            max_depth: Some(8),
            min_samples_leaf: 1,
            bootstrap: true,
            max_features: MaxFeatures::Sqrt,
            max_bins: 255,
        }
    }
}

/// Bagged squared-error trees; the spread of per-tree predictions is the
/// uncertainty estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    params: ForestParams,
    n_features: Option<usize>,
    trees: Vec<RegressionTree>,
}

impl RandomForest {
    pub fn new(params: ForestParams) -> Self {
        RandomForest { params, n_features: None, trees: Vec::new() }
    }

    pub fn params(&self) -> &ForestParams {
        &self.params
    }

    pub fn trees(&self) -> &[RegressionTree] {
        &self.trees
    }

    /// Per-tree predictions for one row.
    pub fn member_predictions(&self, x: &FeatureMatrix, row: usize) -> Vec<f64> {
        self.trees.iter().map(|t| t.predict_row(x, row)).collect()
    }
}

impl Surrogate for RandomForest {
    fn name(&self) -> &'static str {
        "random_forest"
    }

    fn fit(&mut self, x: &FeatureMatrix, y: &[f64], cfg: &TrainConfig) -> Result<(), SurrogateError> {
        check_training_data(x, y)?;
        if self.params.n_trees == 0 {
            return Err(SurrogateError::InvalidConfig("n_trees must be >= 1".into()));
        }
        let n = x.rows();
        let binned = Binned::new(x, self.params.max_bins);
        let grow = GrowParams {
            max_depth: self.params.max_depth,
            max_leaves: None,
            min_samples_leaf: self.params.min_samples_leaf,
            max_features: Some(self.params.max_features.resolve(x.cols())),
            require_gain: false,
        };
        let trees = (0..self.params.n_trees)
            .into_par_iter()
            .map(|t| {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, "forest-tree", t as u64));
                let mut weights = vec![0.0; n];
                if self.params.bootstrap {
                    for _ in 0..n {
                        weights[rng.random_range(0..n)] += 1.0;
                    }
                } else {
                    weights.fill(1.0);
                }
                let rows: Vec<u32> = (0..n as u32).filter(|&r| weights[r as usize] > 0.0).collect();
                grow_tree(&binned, rows, &weights, y, &grow, &mut rng)
            })
            .collect();
        self.trees = trees;
        self.n_features = Some(x.cols());
        Ok(())
    }

    fn predict(&self, x: &FeatureMatrix) -> Result<Vec<Prediction>, SurrogateError> {
        let d = self.n_features.ok_or(SurrogateError::Untrained)?;
        if x.cols() != d {
            return Err(SurrogateError::DimensionMismatch { expected: d, found: x.cols() });
        }
        Ok((0..x.rows())
            .into_par_iter()
            .map(|r| {
                let members = self.member_predictions(x, r);
                let mean = members.iter().sum::<f64>() / members.len() as f64;
                let variance = if members.len() > 1 { population_variance(&members) } else { 0.0 };
                Prediction { mean, variance }
            })
            .collect())
    }

    fn snapshot(&self) -> Option<SavedModel> {
        Some(SavedModel::RandomForest(self.clone()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surrogate::FeatureSource;
    use crate::synthetic::standard_normal as normal;

    fn random_bits(n: usize, d: usize, p: f64, seed: u64) -> FeatureMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows: Vec<Vec<usize>> = (0..n).map(|_| (0..d).filter(|_| rng.random_bool(p)).collect()).collect();
        FeatureMatrix::from_bit_rows(&rows, d, FeatureSource::AtomPairBits)
    }

    #[test]
    fn constant_targets() {
        let x = random_bits(50, 64, 0.3, 1);
        let y = vec![7.25; 50];
        let mut rf = RandomForest::new(ForestParams::default());
        rf.fit(&x, &y, &TrainConfig::default()).unwrap();
        for p in rf.predict(&x).unwrap() {
            assert!((p.mean - 7.25).abs() < 1e-6);
            assert_eq!(p.variance, 0.0);
        }
    }

    #[test]
    fn single_unlimited_tree_memorizes() {
        let x = random_bits(200, 128, 0.2, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let y: Vec<f64> = (0..200).map(|_| rng.random_range(-10.0..0.0)).collect();
        let params = ForestParams {
            n_trees: 1,
            max_depth: None,
            bootstrap: false,
            max_features: MaxFeatures::All,
            ..Default::default()
        };
        let mut rf = RandomForest::new(params);
        rf.fit(&x, &y, &TrainConfig::default()).unwrap();
        let preds = rf.predict(&x).unwrap();
        for (p, t) in preds.iter().zip(&y) {
            assert_eq!(p.mean, *t);
            assert_eq!(p.variance, 0.0);
        }
    }

    #[test]
    fn held_out_r2_on_linear_signal() {
        let (n, d) = (2000, 32);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let w: Vec<f64> = (0..d).map(|_| normal(&mut rng)).collect();
        let vectors: Vec<Vec<f32>> = (0..n).map(|_| (0..d).map(|_| normal(&mut rng) as f32).collect()).collect();
        let y: Vec<f64> = vectors
            .iter()
            .map(|v| v.iter().zip(&w).map(|(a, b)| f64::from(*a) * b).sum::<f64>() + 0.3 * normal(&mut rng))
            .collect();
        let x = FeatureMatrix::from_vectors(&vectors);
        let train: Vec<usize> = (0..1500).collect();
        let test: Vec<usize> = (1500..n).collect();
        let mut rf = RandomForest::new(ForestParams { max_depth: None, ..Default::default() });
        let ytr: Vec<f64> = train.iter().map(|&i| y[i]).collect();
        rf.fit(&x.subset(&train), &ytr, &TrainConfig::default()).unwrap();
        let preds = rf.predict(&x.subset(&test)).unwrap();
        let yte: Vec<f64> = test.iter().map(|&i| y[i]).collect();
        let mean = yte.iter().sum::<f64>() / yte.len() as f64;
        let ss_tot: f64 = yte.iter().map(|v| (v - mean).powi(2)).sum();
        let ss_res: f64 = preds.iter().zip(&yte).map(|(p, v)| (p.mean - v).powi(2)).sum();
        let r2 = 1.0 - ss_res / ss_tot;
        assert!(r2 > 0.5, "r2 = {r2}");
    }

    #[test]
    fn seeded_determinism_and_errors() {
        let x = random_bits(80, 64, 0.3, 4);
        let y: Vec<f64> = (0..80).map(|i| (i % 7) as f64).collect();
        let cfg = TrainConfig { seed: 9, ..Default::default() };
        let mut a = RandomForest::new(ForestParams::default());
        let mut b = RandomForest::new(ForestParams::default());
        a.fit(&x, &y, &cfg).unwrap();
        b.fit(&x, &y, &cfg).unwrap();
        assert_eq!(a.predict(&x).unwrap(), b.predict(&x).unwrap());
        assert!(a.predict(&x).unwrap().iter().all(|p| p.variance >= 0.0));

        let untrained = RandomForest::new(ForestParams::default());
        assert_eq!(untrained.predict(&x), Err(SurrogateError::Untrained));
        let narrow = random_bits(3, 128, 0.3, 5);
        assert!(matches!(a.predict(&narrow), Err(SurrogateError::DimensionMismatch { expected: 64, found: 128 })));
        let mut c = RandomForest::new(ForestParams::default());
        assert!(matches!(c.fit(&x.subset(&[0, 1, 2, 3]), &y[..4], &cfg), Err(SurrogateError::TooFewSamples { got: 4, .. })));
        let mut bad = y.clone();
        bad[3] = f64::NAN;
        assert_eq!(c.fit(&x, &bad, &cfg), Err(SurrogateError::NonFiniteTarget { index: 3 }));
    }

    #[test]
    fn depth_limit() {
        let x = random_bits(300, 64, 0.3, 6);
        let y: Vec<f64> = (0..300).map(|i| (i * 37 % 101) as f64).collect();
        let mut rf = RandomForest::new(ForestParams { n_trees: 5, ..Default::default() });
        rf.fit(&x, &y, &TrainConfig::default()).unwrap();
        assert!(rf.trees().iter().all(|t| t.depth() <= 8));
    }
}
