//! Surrogate regressors returning a predicted utility mean and variance.
//!
//! Every model implements [`Surrogate`]: `fit` always retrains from scratch on
//! the full labelled set it is given, `predict` is read-only.

mod boost;
mod checkpoint;
mod features;
mod forest;
mod mlp;
mod tree;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use boost::{BoostParams, GradientBoostedTrees};
pub use checkpoint::{load_checkpoint, save_checkpoint, SavedModel, CHECKPOINT_VERSION};
pub use features::{FeatureMatrix, FeatureSource};
pub use forest::{ForestParams, MaxFeatures, RandomForest};
pub use mlp::{Mlp, MlpParams};

/// Lower bound applied to predicted variances in the likelihood loss.
pub const VARIANCE_FLOOR: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SurrogateError {
    #[error("need at least {min} training samples, got {got}")]
    TooFewSamples { got: usize, min: usize },
    #[error("target {index} is not finite")]
    NonFiniteTarget { index: usize },
    #[error("{rows} feature rows but {targets} targets")]
    LengthMismatch { rows: usize, targets: usize },
    #[error("feature dimension mismatch: model expects {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("model has not been trained")]
    Untrained,
    #[error("need at least two ensemble members, got {0}")]
    TooFewMembers(usize),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
}

/// Predicted utility and its variance for one molecule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub mean: f64,
    pub variance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TrainMode {
    /// Squared error on the mean only.
    #[default]
    Mse,
    /// Gaussian negative log-likelihood on mean and variance.
    Nll,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub mode: TrainMode,
    /// Fraction of rows used for training by models with a validation split.
    pub split_fraction: f64,
    /// Epochs without validation improvement before stopping.
    pub patience: usize,
    pub max_epochs: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { mode: TrainMode::Mse, split_fraction: 0.8, patience: 10, max_epochs: 50, seed: 0 }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), SurrogateError> {
        if !(self.split_fraction > 0.0 && self.split_fraction < 1.0) {
            return Err(SurrogateError::InvalidConfig(format!(
                "split_fraction {} must lie in (0, 1)",
                self.split_fraction
            )));
        }
        if self.patience == 0 {
            return Err(SurrogateError::InvalidConfig("patience must be >= 1".into()));
        }
        if self.max_epochs == 0 {
            return Err(SurrogateError::InvalidConfig("max_epochs must be >= 1".into()));
        }
        Ok(())
    }
}

pub const MIN_TRAINING_SAMPLES: usize = 5;

pub trait Surrogate: Send + Sync {
    fn name(&self) -> &'static str;

    /// Train from scratch on `(x, y)`.
    fn fit(&mut self, x: &FeatureMatrix, y: &[f64], cfg: &TrainConfig) -> Result<(), SurrogateError>;

    fn predict(&self, x: &FeatureMatrix) -> Result<Vec<Prediction>, SurrogateError>;

    /// Serializable copy of the trained state, if the model supports checkpoints.
    fn snapshot(&self) -> Option<SavedModel> {
        None
    }
}

pub(crate) fn check_training_data(x: &FeatureMatrix, y: &[f64]) -> Result<(), SurrogateError> {
    if x.rows() != y.len() {
        return Err(SurrogateError::LengthMismatch { rows: x.rows(), targets: y.len() });
    }
    if y.len() < MIN_TRAINING_SAMPLES {
        return Err(SurrogateError::TooFewSamples { got: y.len(), min: MIN_TRAINING_SAMPLES });
    }
    if let Some(index) = y.iter().position(|v| !v.is_finite()) {
        return Err(SurrogateError::NonFiniteTarget { index });
    }
    Ok(())
}

/// Gaussian negative log-likelihood `½(ln v + (mean − y)²/v)` with
/// `v = max(var, VARIANCE_FLOOR)`.
pub fn nll_loss(y: f64, mean: f64, var: f64) -> f64 {
    let v = var.max(VARIANCE_FLOOR);
    0.5 * (v.ln() + (mean - y).powi(2) / v)
}

/// Loss and gradients with respect to the mean and the log-variance output.
///
/// Below the floor the clamped variance is constant, so the log-variance
/// gradient is zero there.
pub fn nll_loss_grad(y: f64, mean: f64, log_var: f64) -> (f64, f64, f64) {
    let raw = log_var.exp();
    let v = raw.max(VARIANCE_FLOOR);
    let r = mean - y;
    let loss = 0.5 * (v.ln() + r * r / v);
    let d_mean = r / v;
    let d_log_var = if raw > VARIANCE_FLOOR { 0.5 * (1.0 - r * r / v) } else { 0.0 };
    (loss, d_mean, d_log_var)
}

/// Population variance (divide by M) of ensemble member predictions.
pub fn ensemble_variance(members: &[f64]) -> Result<f64, SurrogateError> {
    if members.len() < 2 {
        return Err(SurrogateError::TooFewMembers(members.len()));
    }
    Ok(population_variance(members))
}

pub(crate) fn population_variance(members: &[f64]) -> f64 {
    let first = members[0];
    if members.iter().all(|&m| m == first) {
        return 0.0;
    }
    let m = members.len() as f64;
    let mean = members.iter().sum::<f64>() / m;
    members.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / m
}

/// Seeded shuffle of `0..n` split into `(train, validation)` with
/// `round(fraction · n)` training rows, at least one row on each side.
pub fn train_validation_split(n: usize, fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_train = ((fraction * n as f64).round() as usize).clamp(1.min(n), n.saturating_sub(1).max(1));
    let validation = idx.split_off(n_train.min(n));
    (idx, validation)
}

/// Patience-based early stopping on a validation loss.
#[derive(Debug, Clone)]
pub struct EarlyStopping {
    patience: usize,
    best_loss: f64,
    best_epoch: Option<usize>,
    stale: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopDecision {
    /// New best; caller should snapshot its parameters.
    Improved,
    Continue,
    /// Patience exhausted; caller should restore the snapshot from `best_epoch`.
    Stop { best_epoch: usize },
}

impl EarlyStopping {
    pub fn new(patience: usize) -> Self {
        EarlyStopping { patience, best_loss: f64::INFINITY, best_epoch: None, stale: 0 }
    }

    pub fn best_epoch(&self) -> Option<usize> {
        self.best_epoch
    }

    pub fn observe(&mut self, epoch: usize, loss: f64) -> StopDecision {
        if loss < self.best_loss || self.best_epoch.is_none() {
            self.best_loss = loss;
            self.best_epoch = Some(epoch);
            self.stale = 0;
            return StopDecision::Improved;
        }
        self.stale += 1;
        if self.stale >= self.patience {
            StopDecision::Stop { best_epoch: self.best_epoch.expect("set on first observation") }
        } else {
            StopDecision::Continue
        }
    }
}

/// Model choice with its hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SurrogateSpec {
    RandomForest(ForestParams),
    GradientBoosted(BoostParams),
    /// Feed-forward head over fingerprint bits.
    FingerprintMlp(MlpParams),
    /// Feed-forward head over externally supplied embedding vectors.
    EmbeddingMlp(MlpParams),
}

impl SurrogateSpec {
    pub fn build(&self) -> Box<dyn Surrogate> {
        match self {
            SurrogateSpec::RandomForest(p) => Box::new(RandomForest::new(p.clone())),
            SurrogateSpec::GradientBoosted(p) => Box::new(GradientBoostedTrees::new(p.clone())),
            SurrogateSpec::FingerprintMlp(p) | SurrogateSpec::EmbeddingMlp(p) => Box::new(Mlp::new(p.clone())),
        }
    }

    pub fn is_neural(&self) -> bool {
        matches!(self, SurrogateSpec::FingerprintMlp(_) | SurrogateSpec::EmbeddingMlp(_))
    }

    pub fn short_name(&self) -> &'static str {
        match self {
            SurrogateSpec::RandomForest(_) => "rf",
            SurrogateSpec::GradientBoosted(_) => "gbt",
            SurrogateSpec::FingerprintMlp(_) => "mlp",
            SurrogateSpec::EmbeddingMlp(_) => "embed-mlp",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn nll_examples() {
        assert_eq!(nll_loss(0.0, 0.0, 1.0), 0.0);
        assert_eq!(nll_loss(1.0, 0.0, 1.0), 0.5);
        let clamped = nll_loss(0.0, 0.0, 1e-6);
        assert!((clamped - (-5.756462732485114)).abs() < 1e-9, "{clamped}");
        assert!((clamped - 0.5 * 1e-5f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn nll_gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let y: f64 = rng.random_range(-5.0..5.0);
            let mean: f64 = rng.random_range(-5.0..5.0);
            let log_var: f64 = rng.random_range(1e-4f64.ln()..3.0);
            let (_, dm, ds) = nll_loss_grad(y, mean, log_var);
            let h = 1e-5;
            let f = |m: f64, s: f64| nll_loss(y, m, s.exp());
            let fd_m = (f(mean + h, log_var) - f(mean - h, log_var)) / (2.0 * h);
            let fd_s = (f(mean, log_var + h) - f(mean, log_var - h)) / (2.0 * h);
            assert!((dm - fd_m).abs() <= 1e-5 * fd_m.abs().max(1.0), "{dm} vs {fd_m}");
            assert!((ds - fd_s).abs() <= 1e-5 * fd_s.abs().max(1.0), "{ds} vs {fd_s}");
        }
    }

    #[test]
    fn ensemble_variance_examples() {
        assert_eq!(ensemble_variance(&[2.5, 2.5, 2.5]).unwrap(), 0.0);
        assert_eq!(ensemble_variance(&[1.0, 3.0]).unwrap(), 1.0);
        assert_eq!(ensemble_variance(&[1.0, 2.0, 3.0, 4.0]).unwrap(), 1.25);
        assert_eq!(ensemble_variance(&[1.0]), Err(SurrogateError::TooFewMembers(1)));
    }

    #[test]
    fn split_sizes() {
        let (train, val) = train_validation_split(100, 0.8, 3);
        assert_eq!((train.len(), val.len()), (80, 20));
        let mut all: Vec<_> = train.iter().chain(&val).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..100).collect::<Vec<_>>());
        assert_eq!(train_validation_split(100, 0.8, 3), (train, val));
        let (t, v) = train_validation_split(5, 0.8, 1);
        assert_eq!((t.len(), v.len()), (4, 1));
        let (t, v) = train_validation_split(5, 0.99, 1);
        assert_eq!((t.len(), v.len()), (4, 1));
    }

    #[test]
    fn early_stopping_on_rising_loss() {
        // validation loss strictly increasing from epoch 1
        let mut stop = EarlyStopping::new(10);
        let mut stopped_at = None;
        for epoch in 1..=50 {
            match stop.observe(epoch, epoch as f64) {
                StopDecision::Stop { best_epoch } => {
                    stopped_at = Some((epoch, best_epoch));
                    break;
                }
                StopDecision::Improved => assert_eq!(epoch, 1),
                StopDecision::Continue => {}
            }
        }
        assert_eq!(stopped_at, Some((11, 1)));
    }

    #[test]
    fn early_stopping_resets_on_improvement() {
        let mut stop = EarlyStopping::new(2);
        let losses = [5.0, 4.0, 4.5, 3.0, 3.5, 3.6];
        let decisions: Vec<_> = losses.iter().enumerate().map(|(e, &l)| stop.observe(e + 1, l)).collect();
        assert_eq!(decisions.last(), Some(&StopDecision::Stop { best_epoch: 4 }));
        assert_eq!(decisions[3], StopDecision::Improved);
    }

    #[test]
    fn train_config_validation() {
        assert!(TrainConfig::default().validate().is_ok());
        assert!(TrainConfig { split_fraction: 1.0, ..Default::default() }.validate().is_err());
        assert!(TrainConfig { patience: 0, ..Default::default() }.validate().is_err());
    }

    proptest! {
        #[test]
        fn ensemble_variance_nonnegative(v in proptest::collection::vec(-1e3f64..1e3, 2..50)) {
            prop_assert!(ensemble_variance(&v).unwrap() >= 0.0);
        }
    }
}
