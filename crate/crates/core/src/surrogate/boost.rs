use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{grow_tree, Binned, GrowParams, RegressionTree};
use super::{
    check_training_data, population_variance, FeatureMatrix, Prediction, SavedModel, Surrogate, SurrogateError,
    TrainConfig,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BoostParams {
    pub n_trees: usize,
    pub learning_rate: f64,
    /// Leaf cap per tree; `None` grows until no split improves the loss.
    pub max_leaves: Option<usize>,
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    pub max_bins: usize,
}

impl Default for BoostParams {
    fn default() -> Self {
        BoostParams {
            n_trees: 100,
            learning_rate: 0.1,
            max_leaves: Some(31),
            max_depth: None,
            min_samples_leaf: 20,
            max_bins: 255,
        }
    }
}

/// Leaf-wise squared-error gradient boosting.
///
/// Uncertainty is the population variance of the staged cumulative
/// predictions `F_1(x), ..., F_M(x)`, where `F_m` is the base score plus the
/// first `m` shrunken trees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientBoostedTrees {
    params: BoostParams,
    n_features: Option<usize>,
    base_score: f64,
    trees: Vec<RegressionTree>,
}

impl GradientBoostedTrees {
    pub fn new(params: BoostParams) -> Self {
        GradientBoostedTrees { params, n_features: None, base_score: 0.0, trees: Vec::new() }
    }

    pub fn params(&self) -> &BoostParams {
        &self.params
    }

    /// `F_1(x) .. F_M(x)` for one row.
    pub fn staged_predictions(&self, x: &FeatureMatrix, row: usize) -> Vec<f64> {
        let mut acc = self.base_score;
        self.trees
            .iter()
            .map(|t| {
                acc += self.params.learning_rate * t.predict_row(x, row);
                acc
            })
            .collect()
    }
}

impl Surrogate for GradientBoostedTrees {
    fn name(&self) -> &'static str {
        "gradient_boosted_trees"
    }

    fn fit(&mut self, x: &FeatureMatrix, y: &[f64], cfg: &TrainConfig) -> Result<(), SurrogateError> {
        check_training_data(x, y)?;
        let p = &self.params;
        if p.n_trees == 0 || p.learning_rate.is_nan() || p.learning_rate <= 0.0 {
            return Err(SurrogateError::InvalidConfig("n_trees >= 1 and learning_rate > 0 required".into()));
        }
        let n = x.rows();
        let binned = Binned::new(x, p.max_bins);
        let grow = GrowParams {
            max_depth: p.max_depth,
            max_leaves: p.max_leaves,
            min_samples_leaf: p.min_samples_leaf,
            max_features: None,
            require_gain: true,
        };
        let base = y.iter().sum::<f64>() / n as f64;
        let mut current = vec![base; n];
        let ones = vec![1.0; n];
        // no sampling, so the stream only matters for API symmetry
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut trees = Vec::with_capacity(p.n_trees);
        for _ in 0..p.n_trees {
            let residual: Vec<f64> = y.iter().zip(&current).map(|(t, c)| t - c).collect();
            let tree = grow_tree(&binned, (0..n as u32).collect(), &ones, &residual, &grow, &mut rng);
            for (r, c) in current.iter_mut().enumerate() {
                *c += p.learning_rate * tree.predict_row(x, r);
            }
            trees.push(tree);
        }
        self.base_score = base;
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
                let staged = self.staged_predictions(x, r);
                let mean = *staged.last().expect("at least one tree");
                let variance = if staged.len() > 1 { population_variance(&staged) } else { 0.0 };
                Prediction { mean, variance }
            })
            .collect())
    }

    fn snapshot(&self) -> Option<SavedModel> {
        Some(SavedModel::GradientBoosted(self.clone()))
    }
}
