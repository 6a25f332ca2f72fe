//! The retrospective screening loop and its metrics.
//!
//! Iteration 0 labels a random initial batch. Each later iteration fits the
//! surrogate from scratch on everything labelled so far, scores the
//! unlabelled pool, acquires the best batch and looks up its true scores.
//! Metrics are taken on the cumulative labelled set after every iteration.

use std::collections::HashSet;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::acquisition::{fraction_count, initial_batch, select_batch, AcquisitionConfig, AcquisitionError, Strategy};
use crate::fingerprint::{mean_pairwise_dice, FingerprintError, FingerprintSpec, PairSampling, DEFAULT_WIDTH};
use crate::library::{Direction, Library, LibraryError};
use crate::seed::derive_seed;
use crate::surrogate::{FeatureMatrix, FeatureSource, Prediction, Surrogate, SurrogateError, SurrogateSpec, TrainConfig, TrainMode};

pub const TRACE_FORMAT: &str = "vscreen-trace";
pub const TRACE_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CampaignError {
    #[error("invalid campaign configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Library(#[from] LibraryError),
    #[error(transparent)]
    Surrogate(#[from] SurrogateError),
    #[error(transparent)]
    Acquisition(#[from] AcquisitionError),
    #[error(transparent)]
    Fingerprint(#[from] FingerprintError),
    #[error("explored fraction is zero")]
    DivisionByZero,
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("cannot resume from {path}: {reason}")]
    Resume { path: PathBuf, reason: String },
}

impl CampaignError {
    fn io(path: &Path) -> impl FnOnce(std::io::Error) -> CampaignError + '_ {
        move |source| CampaignError::Io { path: path.into(), source }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    #[default]
    #[serde(alias = "atom-pair")]
    AtomPair,
    Morgan,
    Embedding,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureConfig {
    pub kind: FeatureKind,
    pub width: usize,
    /// Morgan radius.
    pub radius: u32,
    /// Atom-pair distance range.
    pub min_radius: u32,
    pub max_radius: u32,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig { kind: FeatureKind::AtomPair, width: DEFAULT_WIDTH, radius: 3, min_radius: 1, max_radius: 3 }
    }
}

impl FeatureConfig {
    /// Fingerprint flavour, or `None` for external embeddings.
    pub fn fingerprint_spec(&self) -> Option<FingerprintSpec> {
        match self.kind {
            FeatureKind::AtomPair => Some(FingerprintSpec::AtomPair {
                min_radius: self.min_radius,
                max_radius: self.max_radius,
                width: self.width,
            }),
            FeatureKind::Morgan => Some(FingerprintSpec::Morgan { radius: self.radius, width: self.width }),
            FeatureKind::Embedding => None,
        }
    }

    /// Feature matrix over every library row.
    pub fn build_matrix(&self, library: &Library) -> Result<FeatureMatrix, CampaignError> {
        let all: Vec<usize> = (0..library.len()).collect();
        match self.fingerprint_spec() {
            Some(spec) => {
                spec.validate()?;
                let source = match self.kind {
                    FeatureKind::Morgan => FeatureSource::MorganBits,
                    _ => FeatureSource::AtomPairBits,
                };
                Ok(FeatureMatrix::from_fingerprints(&library.fingerprints(&all, spec)?, source))
            }
            None => {
                let d = library.embedding_dim().ok_or_else(|| {
                    CampaignError::Config("embedding features selected but the library has no embeddings".into())
                })?;
                let mut values = Vec::with_capacity(library.len() * d);
                for r in library.records() {
                    let e = r
                        .embedding
                        .as_ref()
                        .ok_or_else(|| LibraryError::MissingEmbedding { index: r.index, smiles: r.smiles.clone() })?;
                    values.extend_from_slice(e);
                }
                Ok(FeatureMatrix::from_dense(library.len(), d, values))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DiversityMode {
    Off,
    /// Exact below `exact_below` molecules, sampled pairs above.
    #[default]
    Auto,
    Exact,
    Subsample,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DiversityConfig {
    pub mode: DiversityMode,
    pub pairs: usize,
    pub exact_below: usize,
    /// Also measure after every iteration, not only the last.
    pub each_iteration: bool,
}

impl Default for DiversityConfig {
    fn default() -> Self {
        DiversityConfig { mode: DiversityMode::Auto, pairs: 100_000, exact_below: 5_000, each_iteration: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainingSettings {
    /// `None` picks likelihood training for neural models under UCB and
    /// squared error otherwise.
    pub mode: Option<TrainMode>,
    pub split_fraction: f64,
    pub patience: usize,
    pub max_epochs: usize,
}

impl Default for TrainingSettings {
    fn default() -> Self {
        let d = TrainConfig::default();
        TrainingSettings { mode: None, split_fraction: d.split_fraction, patience: d.patience, max_epochs: d.max_epochs }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AcquisitionSettings {
    pub strategy: Strategy,
    pub beta: f64,
}

impl Default for AcquisitionSettings {
    fn default() -> Self {
        AcquisitionSettings { strategy: Strategy::Greedy, beta: 2.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CampaignConfig {
    pub features: FeatureConfig,
    pub surrogate: SurrogateSpec,
    pub training: TrainingSettings,
    pub acquisition: AcquisitionSettings,
    pub init_frac: f64,
    pub batch_frac: f64,
    pub iterations: usize,
    pub top_k: usize,
    pub seed: u64,
    pub diversity: DiversityConfig,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        CampaignConfig {
            features: FeatureConfig::default(),
            surrogate: SurrogateSpec::GradientBoosted(Default::default()),
            training: TrainingSettings::default(),
            acquisition: AcquisitionSettings::default(),
            init_frac: 0.01,
            batch_frac: 0.01,
            iterations: 5,
            top_k: 500,
            seed: 0,
            diversity: DiversityConfig::default(),
        }
    }
}

impl CampaignConfig {
    /// Checks that do not need the library.
    pub fn validate(&self) -> Result<(), CampaignError> {
        let bad = |m: String| Err(CampaignError::Config(m));
        if !(self.init_frac > 0.0 && self.init_frac < 1.0) {
            return bad(format!("init_frac {} must lie in (0, 1)", self.init_frac));
        }
        if !(self.batch_frac > 0.0 && self.batch_frac <= 1.0) {
            return bad(format!("batch_frac {} must lie in (0, 1]", self.batch_frac));
        }
        if self.init_frac + self.iterations as f64 * self.batch_frac > 1.0 + 1e-9 {
            return bad(format!(
                "init_frac + iterations * batch_frac = {} exceeds 1",
                self.init_frac + self.iterations as f64 * self.batch_frac
            ));
        }
        if self.top_k == 0 {
            return bad("top_k must be >= 1".into());
        }
        if !(self.acquisition.beta.is_finite() && self.acquisition.beta >= 0.0) {
            return bad(format!("beta {} must be finite and >= 0", self.acquisition.beta));
        }
        if let Some(spec) = self.features.fingerprint_spec() {
            spec.validate().map_err(|e| CampaignError::Config(e.to_string()))?;
        }
        if matches!(self.surrogate, SurrogateSpec::EmbeddingMlp(_)) && self.features.kind != FeatureKind::Embedding {
            return bad("the embedding MLP needs embedding features".into());
        }
        if self.diversity.mode == DiversityMode::Subsample && self.diversity.pairs == 0 {
            return bad("diversity pairs must be >= 1".into());
        }
        self.train_config(0).validate().map_err(|e| CampaignError::Config(e.to_string()))
    }

    /// Checks against a loaded library.
    pub fn validate_for(&self, library: &Library) -> Result<(), CampaignError> {
        self.validate()?;
        let n = library.len();
        if self.top_k > n {
            return Err(CampaignError::Config(format!("top_k {} exceeds library size {n}", self.top_k)));
        }
        let need = self.budget(n)?;
        if need > n {
            return Err(CampaignError::Config(format!("campaign needs {need} molecules, library has {n}")));
        }
        Ok(())
    }

    /// Labelled molecules at the end of the run: `ceil(init·N) + n·ceil(batch·N)`.
    pub fn budget(&self, n: usize) -> Result<usize, CampaignError> {
        Ok(fraction_count(n, self.init_frac)? + self.iterations * fraction_count(n, self.batch_frac)?)
    }

    pub fn train_mode(&self) -> TrainMode {
        self.training.mode.unwrap_or(if self.acquisition.strategy == Strategy::Ucb && self.surrogate.is_neural() {
            TrainMode::Nll
        } else {
            TrainMode::Mse
        })
    }

    /// Training settings for the fit at the start of `iteration`.
    pub fn train_config(&self, iteration: usize) -> TrainConfig {
        TrainConfig {
            mode: self.train_mode(),
            split_fraction: self.training.split_fraction,
            patience: self.training.patience,
            max_epochs: self.training.max_epochs,
            seed: derive_seed(self.seed, "fit", iteration as u64),
        }
    }
}

/// `|acquired ∩ truth| / |truth|`.
pub fn topk_retrieval(acquired: &[usize], truth: &[usize]) -> f64 {
    if truth.is_empty() {
        return 0.0;
    }
    let set: HashSet<usize> = acquired.iter().copied().collect();
    let hits = truth.iter().collect::<HashSet<_>>().into_iter().filter(|t| set.contains(t)).count();
    hits as f64 / truth.len() as f64
}

/// Retrieval relative to random selection at the same explored fraction.
pub fn enrichment_factor(retrieval: f64, explored_fraction: f64) -> Result<f64, CampaignError> {
    if explored_fraction == 0.0 {
        return Err(CampaignError::DivisionByZero);
    }
    Ok(retrieval / explored_fraction)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Molecules labelled in this iteration, ascending.
    pub acquired_indices: Vec<usize>,
    pub cumulative_acquired: usize,
    pub explored_fraction: f64,
    pub topk_retrieval: f64,
    pub enrichment_factor: f64,
    pub mean_dice: Option<f64>,
}

/// Wall-clock seconds per phase; kept apart from the trace so traces stay
/// byte-reproducible.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct IterationTiming {
    pub iteration: usize,
    pub fit_seconds: f64,
    pub predict_seconds: f64,
    pub select_seconds: f64,
    pub metrics_seconds: f64,
    pub total_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LibrarySummary {
    pub rows: usize,
    pub checksum: String,
    pub direction: Direction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignTrace {
    pub format: String,
    pub version: u32,
    pub config: CampaignConfig,
    pub library: LibrarySummary,
    pub records: Vec<IterationRecord>,
    /// Cumulative labelled set, ascending.
    pub final_acquired: Vec<usize>,
    pub complete: bool,
}

impl CampaignTrace {
    pub fn last(&self) -> Option<&IterationRecord> {
        self.records.last()
    }

    /// Iteration at which each labelled molecule was acquired, ascending by index.
    pub fn acquisition_iterations(&self) -> Vec<(usize, usize)> {
        let mut out: Vec<(usize, usize)> =
            self.records.iter().flat_map(|r| r.acquired_indices.iter().map(move |&i| (i, r.iteration))).collect();
        out.sort_unstable();
        out
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("trace serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<CampaignTrace, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// Atomically replace `path` with the JSON trace.
    pub fn write(&self, path: &Path) -> Result<(), CampaignError> {
        let tmp = path.with_extension("json.tmp");
        fs::write(&tmp, self.to_json()).map_err(CampaignError::io(&tmp))?;
        fs::rename(&tmp, path).map_err(CampaignError::io(path))
    }

    /// Per-iteration table: `iteration,explored_fraction,topk_retrieval,ef,mean_dice`.
    pub fn iteration_table(&self) -> String {
        let mut s = String::from("iteration,explored_fraction,topk_retrieval,ef,mean_dice\n");
        for r in &self.records {
            let dice = r.mean_dice.map(|d| d.to_string()).unwrap_or_default();
            s.push_str(&format!(
                "{},{},{},{},{}\n",
                r.iteration, r.explored_fraction, r.topk_retrieval, r.enrichment_factor, dice
            ));
        }
        s
    }
}

#[derive(Debug, Clone)]
pub struct CampaignOutcome {
    pub trace: CampaignTrace,
    /// Timings of the iterations run in this process (resumed ones are absent).
    pub timings: Vec<IterationTiming>,
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Trace rewritten after every iteration.
    pub checkpoint: Option<PathBuf>,
    /// Continue from `checkpoint` if it holds a partial trace of the same run.
    pub resume: bool,
    /// Stop after this iteration, leaving an incomplete trace.
    pub stop_after: Option<usize>,
}

/// Run with the configured surrogate and no checkpointing.
pub fn run_campaign(cfg: &CampaignConfig, library: &Library) -> Result<CampaignOutcome, CampaignError> {
    run_campaign_with(cfg, library, &|| cfg.surrogate.build(), &RunOptions::default(), &mut |_, _| {})
}

/// Full driver. `make_surrogate` yields a fresh untrained model per fit;
/// `on_iteration` sees every completed iteration.
pub fn run_campaign_with(
    cfg: &CampaignConfig,
    library: &Library,
    make_surrogate: &(dyn Fn() -> Box<dyn Surrogate> + Sync),
    options: &RunOptions,
    on_iteration: &mut dyn FnMut(&IterationRecord, &IterationTiming),
) -> Result<CampaignOutcome, CampaignError> {
    cfg.validate_for(library)?;
    let n = library.len();
    let summary = LibrarySummary { rows: n, checksum: library.checksum(), direction: library.direction() };
    let truth = library.topk_truth(cfg.top_k)?;
    let batch_size = fraction_count(n, cfg.batch_frac)?;

    let mut trace = CampaignTrace {
        format: TRACE_FORMAT.into(),
        version: TRACE_VERSION,
        config: cfg.clone(),
        library: summary,
        records: Vec::with_capacity(cfg.iterations + 1),
        final_acquired: Vec::new(),
        complete: false,
    };
    if options.resume {
        if let Some(previous) = load_resumable(options, &trace)? {
            trace = previous;
        }
    }
    if trace.complete {
        return Ok(CampaignOutcome { trace, timings: Vec::new() });
    }

    let needs_model = cfg.acquisition.strategy != Strategy::Random;
    let features = if needs_model { Some(cfg.features.build_matrix(library)?) } else { None };
    let mut acquired_mask = vec![false; n];
    let mut acquired: Vec<usize> = Vec::new();
    for r in &trace.records {
        for &i in &r.acquired_indices {
            acquired_mask[i] = true;
            acquired.push(i);
        }
    }
    let mut timings = Vec::new();
    let start_iteration = trace.records.len();

    for iteration in start_iteration..=cfg.iterations {
        let t_iter = Instant::now();
        let mut timing = IterationTiming { iteration, ..Default::default() };
        let batch = if iteration == 0 {
            initial_batch(n, cfg.init_frac, derive_seed(cfg.seed, "init", 0))?
        } else {
            let pool: Vec<usize> = (0..n).filter(|&i| !acquired_mask[i]).collect();
            let predictions = match &features {
                Some(x) => {
                    let t = Instant::now();
                    let y: Vec<f64> = acquired.iter().map(|&i| library.oracle(i)).collect::<Result<_, _>>()?;
                    let mut model = make_surrogate();
                    model.fit(&x.subset(&acquired), &y, &cfg.train_config(iteration))?;
                    timing.fit_seconds = t.elapsed().as_secs_f64();
                    let t = Instant::now();
                    let p = model.predict(&x.subset(&pool))?;
                    timing.predict_seconds = t.elapsed().as_secs_f64();
                    p
                }
                None => vec![Prediction { mean: 0.0, variance: 0.0 }; pool.len()],
            };
            let t = Instant::now();
            let acq = AcquisitionConfig {
                strategy: cfg.acquisition.strategy,
                beta: cfg.acquisition.beta,
                batch_size,
                seed: derive_seed(cfg.seed, "acquire", iteration as u64),
            };
            let b = select_batch(&pool, &predictions, &acquired_mask, &acq)?;
            timing.select_seconds = t.elapsed().as_secs_f64();
            b
        };
        for &i in &batch {
            acquired_mask[i] = true;
        }
        acquired.extend_from_slice(&batch);

        let t = Instant::now();
        let explored = acquired.len() as f64 / n as f64;
        let retrieval = topk_retrieval(&acquired, &truth);
        let measure_dice = cfg.diversity.mode != DiversityMode::Off
            && (iteration == cfg.iterations || cfg.diversity.each_iteration);
        let mean_dice = if measure_dice { diversity(cfg, library, &acquired, iteration)? } else { None };
        let record = IterationRecord {
            iteration,
            acquired_indices: batch,
            cumulative_acquired: acquired.len(),
            explored_fraction: explored,
            topk_retrieval: retrieval,
            enrichment_factor: enrichment_factor(retrieval, explored)?,
            mean_dice,
        };
        timing.metrics_seconds = t.elapsed().as_secs_f64();
        timing.total_seconds = t_iter.elapsed().as_secs_f64();
        on_iteration(&record, &timing);
        trace.records.push(record);
        timings.push(timing);

        trace.complete = iteration == cfg.iterations;
        if trace.complete {
            let mut all = acquired.clone();
            all.sort_unstable();
            trace.final_acquired = all;
        }
        if let Some(path) = &options.checkpoint {
            trace.write(path)?;
        }
        if options.stop_after == Some(iteration) && !trace.complete {
            break;
        }
    }
    Ok(CampaignOutcome { trace, timings })
}

fn load_resumable(options: &RunOptions, fresh: &CampaignTrace) -> Result<Option<CampaignTrace>, CampaignError> {
    let Some(path) = &options.checkpoint else { return Ok(None) };
    if !path.exists() {
        return Ok(None);
    }
    let fail = |reason: String| CampaignError::Resume { path: path.clone(), reason };
    let text = fs::read_to_string(path).map_err(CampaignError::io(path))?;
    let previous = CampaignTrace::from_json(&text).map_err(|e| fail(e.to_string()))?;
    if previous.format != TRACE_FORMAT || previous.version != TRACE_VERSION {
        return Err(fail("unrecognized trace format".into()));
    }
    if previous.config != fresh.config {
        return Err(fail("configuration differs from the checkpointed run".into()));
    }
    if previous.library != fresh.library {
        return Err(fail("library differs from the checkpointed run".into()));
    }
    Ok(Some(previous))
}

fn diversity(cfg: &CampaignConfig, library: &Library, acquired: &[usize], iteration: usize) -> Result<Option<f64>, CampaignError> {
    if acquired.len() < 2 {
        return Ok(None);
    }
    let mut sorted = acquired.to_vec();
    sorted.sort_unstable();
    let fps = library.fingerprints(&sorted, FingerprintSpec::MORGAN_DEFAULT)?;
    let d = &cfg.diversity;
    let seed = derive_seed(cfg.seed, "diversity", iteration as u64);
    let sampling = match d.mode {
        DiversityMode::Off => return Ok(None),
        DiversityMode::Exact => PairSampling::Exact,
        DiversityMode::Auto => PairSampling::Subsample { threshold: d.exact_below.saturating_sub(1), pairs: d.pairs, seed },
        DiversityMode::Subsample => PairSampling::Subsample { threshold: 1, pairs: d.pairs, seed },
    };
    Ok(Some(mean_pairwise_dice(&fps, sampling)?))
}

/// Mean and sample standard deviation over seeds, per iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub iteration: usize,
    pub runs: usize,
    pub explored_fraction: f64,
    pub topk_retrieval_mean: f64,
    pub topk_retrieval_std: f64,
    pub ef_mean: f64,
    pub ef_std: f64,
    pub mean_dice_mean: Option<f64>,
    pub mean_dice_std: Option<f64>,
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (m, 0.0);
    }
    (m, (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt())
}

pub fn aggregate(traces: &[CampaignTrace]) -> Vec<AggregateRow> {
    let iterations = traces.iter().map(|t| t.records.len()).min().unwrap_or(0);
    (0..iterations)
        .map(|i| {
            let recs: Vec<&IterationRecord> = traces.iter().map(|t| &t.records[i]).collect();
            let (rm, rs) = mean_std(&recs.iter().map(|r| r.topk_retrieval).collect::<Vec<_>>());
            let (em, es) = mean_std(&recs.iter().map(|r| r.enrichment_factor).collect::<Vec<_>>());
            let dice: Option<Vec<f64>> = recs.iter().map(|r| r.mean_dice).collect();
            let dice = dice.map(|d| mean_std(&d));
            AggregateRow {
                iteration: i,
                runs: recs.len(),
                explored_fraction: recs.iter().map(|r| r.explored_fraction).sum::<f64>() / recs.len() as f64,
                topk_retrieval_mean: rm,
                topk_retrieval_std: rs,
                ef_mean: em,
                ef_std: es,
                mean_dice_mean: dice.map(|d| d.0),
                mean_dice_std: dice.map(|d| d.1),
            }
        })
        .collect()
}

pub fn aggregate_table(rows: &[AggregateRow]) -> String {
    let mut s = String::from(
        "iteration,runs,explored_fraction,topk_retrieval_mean,topk_retrieval_std,ef_mean,ef_std,mean_dice_mean,mean_dice_std\n",
    );
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.iteration,
            r.runs,
            r.explored_fraction,
            r.topk_retrieval_mean,
            r.topk_retrieval_std,
            r.ef_mean,
            r.ef_std,
            opt(r.mean_dice_mean),
            opt(r.mean_dice_std)
        ));
    }
    s
}

/// `index,smiles,score,iteration_acquired` for every labelled molecule.
pub fn write_acquired(path: &Path, trace: &CampaignTrace, library: &Library) -> Result<(), CampaignError> {
    let mut out = Vec::new();
    writeln!(out, "index,smiles,score,iteration_acquired").expect("vec write");
    for (i, it) in trace.acquisition_iterations() {
        let r = library.record(i)?;
        writeln!(out, "{},{},{},{}", i, r.smiles, r.score, it).expect("vec write");
    }
    fs::write(path, out).map_err(CampaignError::io(path))
}

pub fn timings_table(timings: &[IterationTiming]) -> String {
    let mut s = String::from("iteration,fit_seconds,predict_seconds,select_seconds,metrics_seconds,total_seconds\n");
    for t in timings {
        s.push_str(&format!(
            "{},{:.6},{:.6},{:.6},{:.6},{:.6}\n",
            t.iteration, t.fit_seconds, t.predict_seconds, t.select_seconds, t.metrics_seconds, t.total_seconds
        ));
    }
    s
}
