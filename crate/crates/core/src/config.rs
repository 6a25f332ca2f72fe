//! Run configuration files and run manifests.
//!
//! A config file is TOML with one table per stage:
//!
//! ```toml
//! [library]
//! path = "scores.csv"
//! smiles_col = "smiles"
//! score_col = "score"
//! direction = "min"
//!
//! [features]
//! kind = "atom-pair"
//!
//! [surrogate]
//! kind = "gbt"
//!
//! [acquisition]
//! strategy = "ucb"
//! beta = 2.0
//!
//! [campaign]
//! init_frac = 0.01
//! batch_frac = 0.01
//! iterations = 5
//! seeds = [0, 1, 2]
//!
//! [output]
//! dir = "runs/ucb"
//! ```
//!
//! Relative paths are resolved against the directory holding the file.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Deserializer, Serialize};
use thiserror::Error;
use xxhash_rust::xxh64::xxh64;

use crate::campaign::{AcquisitionSettings, CampaignConfig, DiversityConfig, FeatureConfig, FeatureKind, TrainingSettings};
use crate::library::{Direction, EmbeddingOptions, IngestOptions, Library, LibraryError};
use crate::surrogate::{BoostParams, ForestParams, MlpParams, SurrogateSpec};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}:{line}:{column}: {message}")]
    Parse { path: PathBuf, line: usize, column: usize, message: String },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LibrarySection {
    pub path: Option<PathBuf>,
    pub smiles_col: String,
    pub score_col: String,
    pub delimiter: char,
    pub direction: Direction,
    /// Reject the whole file on the first bad row.
    pub strict: bool,
    /// Optional precomputed embedding file (text or `SFEM`).
    pub embeddings: Option<PathBuf>,
}

impl Default for LibrarySection {
    fn default() -> Self {
        let d = IngestOptions::default();
        LibrarySection {
            path: None,
            smiles_col: d.smiles_column,
            score_col: d.score_column,
            delimiter: d.delimiter,
            direction: d.direction,
            strict: false,
            embeddings: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SurrogateKind {
    Rf,
    #[default]
    Gbt,
    Mlp,
    EmbedMlp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct SurrogateSection {
    pub kind: SurrogateKind,
    pub rf: ForestParams,
    pub gbt: BoostParams,
    pub mlp: MlpParams,
    pub training: TrainingSettings,
}

impl SurrogateSection {
    pub fn spec(&self) -> SurrogateSpec {
        match self.kind {
            SurrogateKind::Rf => SurrogateSpec::RandomForest(self.rf.clone()),
            SurrogateKind::Gbt => SurrogateSpec::GradientBoosted(self.gbt.clone()),
            SurrogateKind::Mlp => SurrogateSpec::FingerprintMlp(self.mlp.clone()),
            SurrogateKind::EmbedMlp => SurrogateSpec::EmbeddingMlp(self.mlp.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CampaignSection {
    pub init_frac: f64,
    pub batch_frac: f64,
    pub iterations: usize,
    pub top_k: usize,
    /// One campaign per seed. `seed = 3` is accepted as a single-element list.
    #[serde(alias = "seed", deserialize_with = "one_or_many")]
    pub seeds: Vec<u64>,
    pub diversity: DiversityConfig,
    /// Worker threads; 0 uses every core.
    pub jobs: usize,
}

impl Default for CampaignSection {
    fn default() -> Self {
        let d = CampaignConfig::default();
        CampaignSection {
            init_frac: d.init_frac,
            batch_frac: d.batch_frac,
            iterations: d.iterations,
            top_k: d.top_k,
            seeds: vec![d.seed],
            diversity: d.diversity,
            jobs: 0,
        }
    }
}

fn one_or_many<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<u64>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Seeds {
        One(u64),
        Many(Vec<u64>),
    }
    Ok(match Seeds::deserialize(d)? {
        Seeds::One(s) => vec![s],
        Seeds::Many(v) => v,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
    /// Continue from existing per-seed traces instead of starting over.
    pub resume: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { dir: PathBuf::from("vscreen-out"), resume: false }
    }
}

/// Everything needed to reproduce a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub library: LibrarySection,
    pub features: FeatureConfig,
    pub surrogate: SurrogateSection,
    pub acquisition: AcquisitionSettings,
    pub campaign: CampaignSection,
    pub output: OutputSection,
}

impl RunConfig {
    /// Parse TOML text; `origin` names the source in error messages.
    pub fn from_toml(text: &str, origin: &Path) -> Result<RunConfig, ConfigError> {
        toml::from_str(text).map_err(|e| {
            let offset = e.span().map_or(0, |s| s.start);
            let (line, column) = line_column(text, offset);
            ConfigError::Parse { path: origin.into(), line, column, message: e.message().trim().to_string() }
        })
    }

    /// Read a config file, resolving its relative paths against its directory.
    pub fn load(path: &Path) -> Result<RunConfig, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.into(), source })?;
        let mut cfg = RunConfig::from_toml(&text, path)?;
        let base = path.parent().unwrap_or(Path::new(""));
        let rebase = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        cfg.library.path.as_mut().map(rebase);
        cfg.library.embeddings.as_mut().map(rebase);
        rebase(&mut cfg.output.dir);
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn ingest_options(&self) -> IngestOptions {
        IngestOptions {
            smiles_column: self.library.smiles_col.clone(),
            score_column: self.library.score_col.clone(),
            delimiter: self.library.delimiter,
            direction: self.library.direction,
            strict: self.library.strict,
        }
    }

    /// Campaign settings for one seed.
    pub fn campaign_config(&self, seed: u64) -> CampaignConfig {
        CampaignConfig {
            features: self.features.clone(),
            surrogate: self.surrogate.spec(),
            training: self.surrogate.training.clone(),
            acquisition: self.acquisition.clone(),
            init_frac: self.campaign.init_frac,
            batch_frac: self.campaign.batch_frac,
            iterations: self.campaign.iterations,
            top_k: self.campaign.top_k,
            seed,
            diversity: self.campaign.diversity.clone(),
        }
    }

    /// Checks that need neither the library nor the filesystem.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.library.path.is_none() {
            return Err(ConfigError::Invalid("no library file given (library.path or --library)".into()));
        }
        if self.campaign.seeds.is_empty() {
            return Err(ConfigError::Invalid("campaign.seeds is empty".into()));
        }
        if self.features.kind == FeatureKind::Embedding && self.library.embeddings.is_none() {
            return Err(ConfigError::Invalid("embedding features need an embedding file (library.embeddings or --embeddings)".into()));
        }
        let mut seen = std::collections::HashSet::new();
        if let Some(s) = self.campaign.seeds.iter().find(|s| !seen.insert(**s)) {
            return Err(ConfigError::Invalid(format!("seed {s} listed twice")));
        }
        self.campaign_config(self.campaign.seeds[0]).validate().map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    /// Load the library and, when configured, its embeddings.
    pub fn load_library(&self) -> Result<Library, LibraryError> {
        let path = self.library.path.as_deref().unwrap_or(Path::new(""));
        let mut lib = Library::load(path, &self.ingest_options())?;
        if let Some(emb) = &self.library.embeddings {
            let opts = EmbeddingOptions { strict: self.library.strict, ..Default::default() };
            lib.load_embeddings(emb, &opts)?;
        }
        Ok(lib)
    }

    /// Input files with their content checksums.
    pub fn input_checksums(&self) -> Result<Vec<InputFile>, ConfigError> {
        self.library
            .path
            .iter()
            .chain(&self.library.embeddings)
            .map(|p| InputFile::checksum(p))
            .collect()
    }
}

/// 1-based line and column of a byte offset.
fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputFile {
    pub path: PathBuf,
    pub bytes: u64,
    /// xxh64 of the file contents, hex.
    pub xxh64: String,
}

impl InputFile {
    pub fn checksum(path: &Path) -> Result<InputFile, ConfigError> {
        let data = fs::read(path).map_err(|source| ConfigError::Io { path: path.into(), source })?;
        Ok(InputFile { path: path.into(), bytes: data.len() as u64, xxh64: format!("{:016x}", xxh64(&data, 0)) })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Running,
    Complete,
    Incomplete,
}

/// Written next to the outputs of every run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub config: RunConfig,
    pub inputs: Vec<InputFile>,
    pub started: String,
    pub finished: Option<String>,
    pub status: RunStatus,
    pub error: Option<String>,
    /// Seeds whose campaign finished.
    pub completed_seeds: Vec<u64>,
}

impl RunManifest {
    pub fn start(config: RunConfig, inputs: Vec<InputFile>) -> RunManifest {
        RunManifest {
            tool: "vscreen".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            config,
            inputs,
            started: now(),
            finished: None,
            status: RunStatus::Running,
            error: None,
            completed_seeds: Vec::new(),
        }
    }

    pub fn finish(&mut self, error: Option<String>) {
        self.finished = Some(now());
        self.status = if error.is_none() { RunStatus::Complete } else { RunStatus::Incomplete };
        self.error = error;
    }

    pub fn write(&self, path: &Path) -> std::io::Result<()> {
        let tmp = path.with_extension("json.tmp");
        fs::write(&tmp, serde_json::to_string_pretty(self).expect("manifest serializes") + "\n")?;
        fs::rename(tmp, path)
    }
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}
