//! Scored compound library: ingestion, oracle lookup, ground-truth top-k and
//! per-record fingerprint/embedding access.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufReader, Read, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, OnceLock};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use xxhash_rust::xxh64::Xxh64;

use crate::fingerprint::{Fingerprint, FingerprintSpec, HASH_SEED};
use crate::smiles::parse_smiles;

/// Magic bytes of the binary embedding layout.
pub const SFEM_MAGIC: &[u8; 4] = b"SFEM";
pub const SFEM_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum LibraryError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("required column {0:?} not found in header")]
    MissingColumn(String),
    #[error("library contains no usable records")]
    EmptyLibrary,
    #[error("malformed row at line {line}: {reason}")]
    MalformedRow { line: u64, reason: String },
    #[error("index {index} out of range for library of {len} records")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("k = {k} exceeds library size {len}")]
    KTooLarge { k: usize, len: usize },
    #[error("k must be at least 1")]
    ZeroK,
    #[error("embedding dimension mismatch: expected {expected}, found {found} ({context})")]
    DimensionMismatch { expected: usize, found: usize, context: String },
    #[error("no embedding for record {index} ({smiles})")]
    MissingEmbedding { index: usize, smiles: String },
    #[error("malformed embedding file: {0}")]
    BadEmbeddingFile(String),
}

impl LibraryError {
    /// Variant name, used in diagnostics.
    pub fn name(&self) -> &'static str {
        match self {
            LibraryError::Io { .. } => "Io",
            LibraryError::Csv { .. } => "Csv",
            LibraryError::MissingColumn(_) => "MissingColumn",
            LibraryError::EmptyLibrary => "EmptyLibrary",
            LibraryError::MalformedRow { .. } => "MalformedRow",
            LibraryError::IndexOutOfRange { .. } => "IndexOutOfRange",
            LibraryError::KTooLarge { .. } => "KTooLarge",
            LibraryError::ZeroK => "ZeroK",
            LibraryError::DimensionMismatch { .. } => "DimensionMismatch",
            LibraryError::MissingEmbedding { .. } => "MissingEmbedding",
            LibraryError::BadEmbeddingFile(_) => "BadEmbeddingFile",
        }
    }
}

/// Objective orientation of the raw score column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// Lower is better (docking energies); utility is the negated score.
    #[default]
    #[serde(alias = "min")]
    Minimize,
    /// Higher is better (shape-overlay scores); utility is the score.
    #[serde(alias = "max")]
    Maximize,
}

impl Direction {
    pub fn utility(self, score: f64) -> f64 {
        match self {
            Direction::Minimize => -score,
            Direction::Maximize => score,
        }
    }

    pub fn score(self, utility: f64) -> f64 {
        self.utility(utility)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct IngestOptions {
    pub smiles_column: String,
    pub score_column: String,
    /// Field delimiter, `,` or `\t` in practice.
    pub delimiter: char,
    pub direction: Direction,
    /// Fail on the first bad row instead of skipping it.
    pub strict: bool,
}

impl Default for IngestOptions {
    fn default() -> Self {
        IngestOptions {
            smiles_column: "smiles".into(),
            score_column: "score".into(),
            delimiter: ',',
            direction: Direction::Minimize,
            strict: false,
        }
    }
}

/// Counts of rows dropped or merged during ingestion.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    pub rows_read: usize,
    pub invalid_smiles: usize,
    pub invalid_scores: usize,
    pub duplicates_collapsed: usize,
}

impl IngestReport {
    pub fn skipped(&self) -> usize {
        self.invalid_smiles + self.invalid_scores
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompoundRecord {
    pub index: usize,
    pub smiles: String,
    pub score: f64,
    pub utility: f64,
    pub embedding: Option<Vec<f32>>,
}

type FingerprintColumn = Arc<Vec<OnceLock<Fingerprint>>>;

/// Immutable scored compound pool.
///
/// Fingerprints are computed on first use and cached per [`FingerprintSpec`];
/// the cache is safe to fill from several threads.
#[derive(Debug)]
pub struct Library {
    records: Vec<CompoundRecord>,
    direction: Direction,
    report: IngestReport,
    embedding_dim: Option<usize>,
    fp_cache: Mutex<HashMap<FingerprintSpec, FingerprintColumn>>,
}

impl Library {
    /// Load a delimited file with a header row.
    pub fn load(path: impl AsRef<Path>, options: &IngestOptions) -> Result<Library, LibraryError> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|source| LibraryError::Io { path: path.into(), source })?;
        let csv_err = |source| LibraryError::Csv { path: path.into(), source };
        let mut reader = csv::ReaderBuilder::new()
            .delimiter(delimiter_byte(options.delimiter)?)
            .flexible(true)
            .from_reader(BufReader::new(file));
        let headers = reader.headers().map_err(csv_err)?.clone();
        let column = |name: &str| {
            headers
                .iter()
                .position(|h| h.trim() == name)
                .ok_or_else(|| LibraryError::MissingColumn(name.to_string()))
        };
        let smiles_col = column(&options.smiles_column)?;
        let score_col = column(&options.score_column)?;

        let mut rows = Vec::new();
        for result in reader.records() {
            let record = result.map_err(csv_err)?;
            let line = record.position().map_or(0, |p| p.line());
            let smiles = record.get(smiles_col).map(|s| s.trim().to_string());
            let score = record.get(score_col).and_then(|s| s.trim().parse::<f64>().ok());
            rows.push((line, smiles, score));
        }
        Self::build(rows, options)
    }

    /// Build from in-memory `(smiles, score)` pairs with the same validation
    /// and deduplication rules as [`Library::load`].
    pub fn from_scores<S: Into<String>>(
        rows: impl IntoIterator<Item = (S, f64)>,
        options: &IngestOptions,
    ) -> Result<Library, LibraryError> {
        let rows = rows
            .into_iter()
            .enumerate()
            .map(|(i, (s, score))| (i as u64 + 2, Some(s.into()), Some(score)))
            .collect();
        Self::build(rows, options)
    }

    fn build(
        rows: Vec<(u64, Option<String>, Option<f64>)>,
        options: &IngestOptions,
    ) -> Result<Library, LibraryError> {
        let mut report = IngestReport { rows_read: rows.len(), ..Default::default() };
        let parsed: Vec<_> = rows
            .into_par_iter()
            .map(|(line, smiles, score)| {
                let Some(smiles) = smiles.filter(|s| !s.is_empty()) else {
                    return (line, Err(("missing smiles".to_string(), true)));
                };
                if let Err(e) = parse_smiles(&smiles) {
                    return (line, Err((format!("{smiles:?}: {e}"), true)));
                }
                match score.filter(|v| v.is_finite()) {
                    Some(v) => (line, Ok((smiles, v))),
                    None => (line, Err((format!("{smiles:?}: missing or non-finite score"), false))),
                }
            })
            .collect();

        let mut records: Vec<CompoundRecord> = Vec::new();
        let mut seen: HashMap<String, usize> = HashMap::new();
        for (line, row) in parsed {
            let (smiles, score) = match row {
                Ok(ok) => ok,
                Err((reason, bad_smiles)) => {
                    if options.strict {
                        return Err(LibraryError::MalformedRow { line, reason });
                    }
                    if bad_smiles {
                        report.invalid_smiles += 1;
                    } else {
                        report.invalid_scores += 1;
                    }
                    continue;
                }
            };
            let utility = options.direction.utility(score);
            if let Some(&existing) = seen.get(&smiles) {
                report.duplicates_collapsed += 1;
                let rec = &mut records[existing];
                if utility > rec.utility {
                    rec.score = score;
                    rec.utility = utility;
                }
                continue;
            }
            seen.insert(smiles.clone(), records.len());
            records.push(CompoundRecord { index: records.len(), smiles, score, utility, embedding: None });
        }
        if records.is_empty() {
            return Err(LibraryError::EmptyLibrary);
        }
        Ok(Library {
            records,
            direction: options.direction,
            report,
            embedding_dim: None,
            fp_cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[CompoundRecord] {
        &self.records
    }

    pub fn record(&self, index: usize) -> Result<&CompoundRecord, LibraryError> {
        self.records
            .get(index)
            .ok_or(LibraryError::IndexOutOfRange { index, len: self.records.len() })
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn ingest_report(&self) -> &IngestReport {
        &self.report
    }

    pub fn embedding_dim(&self) -> Option<usize> {
        self.embedding_dim
    }

    /// Precomputed utility of record `index`. Never evaluates anything.
    pub fn oracle(&self, index: usize) -> Result<f64, LibraryError> {
        self.record(index).map(|r| r.utility)
    }

    /// The `k` best records by utility, best first; ties by ascending index.
    pub fn topk_ranked(&self, k: usize) -> Result<Vec<usize>, LibraryError> {
        let n = self.records.len();
        if k == 0 {
            return Err(LibraryError::ZeroK);
        }
        if k > n {
            return Err(LibraryError::KTooLarge { k, len: n });
        }
        let cmp = |a: &usize, b: &usize| {
            self.records[*b]
                .utility
                .total_cmp(&self.records[*a].utility)
                .then(a.cmp(b))
        };
        let mut idx: Vec<usize> = (0..n).collect();
        if k < n {
            idx.select_nth_unstable_by(k - 1, cmp);
            idx.truncate(k);
        }
        idx.sort_unstable_by(cmp);
        Ok(idx)
    }

    /// Index set of the true top-`k`, ascending.
    pub fn topk_truth(&self, k: usize) -> Result<Vec<usize>, LibraryError> {
        let mut idx = self.topk_ranked(k)?;
        idx.sort_unstable();
        Ok(idx)
    }

    /// Hex digest over `(smiles, score)` of every record and the direction.
    pub fn checksum(&self) -> String {
        let mut h = Xxh64::new(HASH_SEED);
        h.update(&[self.direction as u8]);
        for r in &self.records {
            h.update(r.smiles.as_bytes());
            h.update(&[0]);
            h.update(&r.score.to_bits().to_le_bytes());
        }
        format!("{:016x}", h.digest())
    }

    /// Cached fingerprint of one record.
    pub fn fingerprint(&self, index: usize, spec: FingerprintSpec) -> Result<Fingerprint, LibraryError> {
        let record = self.record(index)?;
        let column = self.column(spec);
        Ok(column[index].get_or_init(|| compute_fp(&record.smiles, spec)).clone())
    }

    /// Cached fingerprints for `indices`, computed in parallel as needed.
    pub fn fingerprints(&self, indices: &[usize], spec: FingerprintSpec) -> Result<Vec<Fingerprint>, LibraryError> {
        if let Some(&bad) = indices.iter().find(|&&i| i >= self.records.len()) {
            return Err(LibraryError::IndexOutOfRange { index: bad, len: self.records.len() });
        }
        let column = self.column(spec);
        Ok(indices
            .par_iter()
            .map(|&i| column[i].get_or_init(|| compute_fp(&self.records[i].smiles, spec)).clone())
            .collect())
    }

    /// Fill the fingerprint cache for every record.
    pub fn precompute_fingerprints(&self, spec: FingerprintSpec) {
        let column = self.column(spec);
        column.par_iter().zip(&self.records).for_each(|(cell, rec)| {
            cell.get_or_init(|| compute_fp(&rec.smiles, spec));
        });
    }

    fn column(&self, spec: FingerprintSpec) -> FingerprintColumn {
        let mut cache = self.fp_cache.lock().expect("fingerprint cache poisoned");
        cache
            .entry(spec)
            .or_insert_with(|| Arc::new((0..self.records.len()).map(|_| OnceLock::new()).collect()))
            .clone()
    }

    /// Attach one vector per record, in index order.
    pub fn set_embeddings(&mut self, vectors: Vec<Vec<f32>>) -> Result<(), LibraryError> {
        if vectors.len() != self.records.len() {
            return Err(LibraryError::DimensionMismatch {
                expected: self.records.len(),
                found: vectors.len(),
                context: "number of vectors".into(),
            });
        }
        let d = vectors.first().map_or(0, Vec::len);
        if let Some((i, v)) = vectors.iter().enumerate().find(|(_, v)| v.len() != d) {
            return Err(LibraryError::DimensionMismatch { expected: d, found: v.len(), context: format!("vector {i}") });
        }
        for (rec, v) in self.records.iter_mut().zip(vectors) {
            rec.embedding = Some(v);
        }
        self.embedding_dim = Some(d);
        Ok(())
    }

    /// Read an embedding file (text or `SFEM` binary) and attach it.
    pub fn load_embeddings(
        &mut self,
        path: impl AsRef<Path>,
        options: &EmbeddingOptions,
    ) -> Result<EmbeddingReport, LibraryError> {
        let path = path.as_ref();
        let io = |source| LibraryError::Io { path: path.into(), source };
        let mut bytes = Vec::new();
        File::open(path).and_then(|mut f| f.read_to_end(&mut bytes)).map_err(io)?;
        let slots = if bytes.starts_with(SFEM_MAGIC) {
            self.read_sfem(&bytes)?
        } else {
            self.read_text_embeddings(&bytes, options)?
        };

        let mut report = EmbeddingReport::default();
        let d = slots.iter().flatten().map(Vec::len).next().unwrap_or(0);
        let mut vectors = Vec::with_capacity(slots.len());
        for (i, slot) in slots.into_iter().enumerate() {
            match slot {
                Some(v) => vectors.push(v),
                None if options.strict => {
                    return Err(LibraryError::MissingEmbedding { index: i, smiles: self.records[i].smiles.clone() })
                }
                None => {
                    report.zero_filled += 1;
                    vectors.push(vec![0.0; d]);
                }
            }
        }
        report.dim = d;
        self.set_embeddings(vectors)?;
        Ok(report)
    }

    fn read_sfem(&self, bytes: &[u8]) -> Result<Vec<Option<Vec<f32>>>, LibraryError> {
        let bad = |m: &str| LibraryError::BadEmbeddingFile(m.to_string());
        if bytes.len() < 20 {
            return Err(bad("truncated header"));
        }
        let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
        if version != SFEM_VERSION {
            return Err(LibraryError::BadEmbeddingFile(format!("unsupported version {version}")));
        }
        let n = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
        let d = u32::from_le_bytes(bytes[16..20].try_into().unwrap()) as usize;
        let body = &bytes[20..];
        if body.len() != n * d * 4 {
            return Err(LibraryError::BadEmbeddingFile(format!(
                "expected {} payload bytes for N={n}, d={d}, found {}",
                n * d * 4,
                body.len()
            )));
        }
        if n > self.records.len() {
            return Err(LibraryError::DimensionMismatch {
                expected: self.records.len(),
                found: n,
                context: "embedding rows".into(),
            });
        }
        let mut slots: Vec<Option<Vec<f32>>> = body
            .chunks_exact(d * 4)
            .map(|row| Some(row.chunks_exact(4).map(|b| f32::from_le_bytes(b.try_into().unwrap())).collect()))
            .collect();
        if d == 0 {
            slots = vec![Some(Vec::new()); n];
        }
        slots.resize(self.records.len(), None);
        Ok(slots)
    }

    fn read_text_embeddings(
        &self,
        bytes: &[u8],
        options: &EmbeddingOptions,
    ) -> Result<Vec<Option<Vec<f32>>>, LibraryError> {
        let by_smiles: HashMap<&str, usize> =
            self.records.iter().map(|r| (r.smiles.as_str(), r.index)).collect();
        let mut reader = csv::ReaderBuilder::new()
            .delimiter(delimiter_byte(options.delimiter)?)
            .has_headers(false)
            .flexible(true)
            .from_reader(bytes);
        let mut slots = vec![None; self.records.len()];
        let mut dim: Option<usize> = None;
        for (row_no, result) in reader.records().enumerate() {
            let row = result.map_err(|e| LibraryError::BadEmbeddingFile(e.to_string()))?;
            let key = row.get(0).unwrap_or("").trim();
            let values: Result<Vec<f32>, _> = row.iter().skip(1).map(|v| v.trim().parse::<f32>()).collect();
            let values = match values {
                Ok(v) => v,
                // a non-numeric first row is a header
                Err(_) if row_no == 0 => continue,
                Err(e) => {
                    return Err(LibraryError::BadEmbeddingFile(format!("row {}: {e}", row_no + 1)));
                }
            };
            if values.iter().any(|v| !v.is_finite()) {
                return Err(LibraryError::BadEmbeddingFile(format!("row {}: non-finite value", row_no + 1)));
            }
            match dim {
                None => dim = Some(values.len()),
                Some(d) if d != values.len() => {
                    return Err(LibraryError::DimensionMismatch {
                        expected: d,
                        found: values.len(),
                        context: format!("row {}", row_no + 1),
                    })
                }
                _ => {}
            }
            let index = by_smiles
                .get(key)
                .copied()
                .or_else(|| key.parse::<usize>().ok().filter(|&i| i < self.records.len()));
            match index {
                Some(i) => slots[i] = Some(values),
                None if options.strict => {
                    return Err(LibraryError::BadEmbeddingFile(format!("row {}: unknown key {key:?}", row_no + 1)))
                }
                None => {}
            }
        }
        Ok(slots)
    }
}

fn compute_fp(smiles: &str, spec: FingerprintSpec) -> Fingerprint {
    // records are validated at ingestion
    let g = parse_smiles(smiles).expect("library SMILES was validated at load");
    spec.compute(&g)
}

fn delimiter_byte(c: char) -> Result<u8, LibraryError> {
    u8::try_from(c)
        .ok()
        .filter(u8::is_ascii)
        .ok_or_else(|| LibraryError::BadEmbeddingFile(format!("unsupported delimiter {c:?}")))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct EmbeddingOptions {
    pub delimiter: char,
    /// Missing rows are an error instead of being zero-filled.
    pub strict: bool,
}

impl Default for EmbeddingOptions {
    fn default() -> Self {
        EmbeddingOptions { delimiter: ',', strict: true }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmbeddingReport {
    pub dim: usize,
    pub zero_filled: usize,
}

/// Write vectors in the `SFEM` binary layout.
pub fn write_sfem(path: impl AsRef<Path>, vectors: &[Vec<f32>]) -> std::io::Result<()> {
    let d = vectors.first().map_or(0, Vec::len);
    let mut out = Vec::with_capacity(20 + vectors.len() * d * 4);
    out.extend_from_slice(SFEM_MAGIC);
    out.extend_from_slice(&SFEM_VERSION.to_le_bytes());
    out.extend_from_slice(&(vectors.len() as u64).to_le_bytes());
    out.extend_from_slice(&(d as u32).to_le_bytes());
    for v in vectors {
        assert_eq!(v.len(), d, "ragged vectors");
        for x in v {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    File::create(path)?.write_all(&out)
}
