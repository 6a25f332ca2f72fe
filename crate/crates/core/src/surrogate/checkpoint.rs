//! Versioned JSON dump of a trained surrogate.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{GradientBoostedTrees, Mlp, RandomForest, Surrogate, SurrogateError};

pub const CHECKPOINT_VERSION: u32 = 1;
const FORMAT: &str = "vscreen-surrogate";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "state", rename_all = "snake_case")]
pub enum SavedModel {
    RandomForest(RandomForest),
    GradientBoosted(GradientBoostedTrees),
    Mlp(Mlp),
}

impl SavedModel {
    pub fn into_surrogate(self) -> Box<dyn Surrogate> {
        match self {
            SavedModel::RandomForest(m) => Box::new(m),
            SavedModel::GradientBoosted(m) => Box::new(m),
            SavedModel::Mlp(m) => Box::new(m),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct Envelope {
    format: String,
    version: u32,
    model: SavedModel,
}

pub fn save_checkpoint(path: &Path, model: &SavedModel) -> Result<(), SurrogateError> {
    let env = Envelope { format: FORMAT.into(), version: CHECKPOINT_VERSION, model: model.clone() };
    let text = serde_json::to_string(&env).map_err(|e| SurrogateError::Checkpoint(e.to_string()))?;
    fs::write(path, text).map_err(|e| SurrogateError::Checkpoint(format!("{}: {e}", path.display())))
}

pub fn load_checkpoint(path: &Path) -> Result<SavedModel, SurrogateError> {
    let text = fs::read_to_string(path).map_err(|e| SurrogateError::Checkpoint(format!("{}: {e}", path.display())))?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| SurrogateError::Checkpoint(e.to_string()))?;
    if value.get("format").and_then(|f| f.as_str()) != Some(FORMAT) {
        return Err(SurrogateError::Checkpoint("not a surrogate checkpoint".into()));
    }
    let version = value.get("version").and_then(|v| v.as_u64());
    if version != Some(u64::from(CHECKPOINT_VERSION)) {
        return Err(SurrogateError::Checkpoint(format!("unsupported checkpoint version {version:?}")));
    }
    let env: Envelope = serde_json::from_value(value).map_err(|e| SurrogateError::Checkpoint(e.to_string()))?;
    Ok(env.model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surrogate::{BoostParams, FeatureMatrix, FeatureSource, ForestParams, MlpParams, TrainConfig, TrainMode};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn roundtrip_every_model() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rows: Vec<Vec<usize>> = (0..60).map(|_| (0..64).filter(|_| rng.random_bool(0.3)).collect()).collect();
        let x = FeatureMatrix::from_bit_rows(&rows, 64, FeatureSource::AtomPairBits);
        let y: Vec<f64> = rows.iter().map(|r| r.len() as f64 * 0.37 - 3.1).collect();
        let cfg = TrainConfig { mode: TrainMode::Nll, max_epochs: 3, ..Default::default() };
        let mut models: Vec<Box<dyn Surrogate>> = vec![
            Box::new(RandomForest::new(ForestParams { n_trees: 5, ..Default::default() })),
            Box::new(GradientBoostedTrees::new(BoostParams { n_trees: 5, ..Default::default() })),
            Box::new(Mlp::new(MlpParams { hidden: vec![8, 4], ..Default::default() })),
        ];
        let dir = tempfile::tempdir().unwrap();
        for (i, m) in models.iter_mut().enumerate() {
            m.fit(&x, &y, &cfg).unwrap();
            let path = dir.path().join(format!("m{i}.json"));
            save_checkpoint(&path, &m.snapshot().unwrap()).unwrap();
            let back = load_checkpoint(&path).unwrap().into_surrogate();
            assert_eq!(back.predict(&x).unwrap(), m.predict(&x).unwrap());
        }
    }

    #[test]
    fn rejects_foreign_and_future_files() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.json");
        fs::write(&p, r#"{"format":"other","version":1}"#).unwrap();
        assert!(load_checkpoint(&p).is_err());
        fs::write(&p, r#"{"format":"vscreen-surrogate","version":99,"model":null}"#).unwrap();
        let err = load_checkpoint(&p).unwrap_err();
        assert!(err.to_string().contains("version"), "{err}");
    }
}
