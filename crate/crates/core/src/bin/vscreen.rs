//! `vscreen` command-line driver.
//!
//! Exit codes: 0 success, 2 configuration error, 3 data error, 4 runtime error.

use std::fs;
use std::io::{self, BufRead, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use vscreen::campaign::{
    aggregate, aggregate_table, run_campaign_with, timings_table, write_acquired, CampaignError, DiversityMode,
    FeatureKind, RunOptions,
};
use vscreen::acquisition::Strategy;
use vscreen::config::{ConfigError, RunConfig, RunManifest, SurrogateKind};
use vscreen::fingerprint::{FingerprintSpec, DEFAULT_WIDTH};
use vscreen::library::{Direction, IngestOptions, Library, LibraryError};
use vscreen::smiles::parse_smiles;

#[derive(Parser)]
#[command(name = "vscreen", version, about = "Retrospective active-learning virtual screening")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one campaign per seed and write traces, tables and a manifest.
    Run(Box<RunArgs>),
    /// Dump fingerprints for a file of SMILES, one per line.
    Fingerprint(FingerprintArgs),
    /// List the true top-k of a scored library, best first.
    Topk(TopkArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum DirectionArg {
    Min,
    Max,
}

impl From<DirectionArg> for Direction {
    fn from(d: DirectionArg) -> Direction {
        match d {
            DirectionArg::Min => Direction::Minimize,
            DirectionArg::Max => Direction::Maximize,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FeaturesArg {
    AtomPair,
    Morgan,
    Embedding,
}

#[derive(Clone, Copy, ValueEnum)]
enum SurrogateArg {
    Rf,
    Gbt,
    Mlp,
    EmbedMlp,
}

#[derive(Clone, Copy, ValueEnum)]
enum AcquisitionArg {
    Greedy,
    Ucb,
    Random,
}

#[derive(Clone, Copy, ValueEnum)]
enum DiversityArg {
    Off,
    Auto,
    Exact,
    Subsample,
}

#[derive(Args)]
struct RunArgs {
    /// TOML run configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Scored library (CSV/TSV with a header row).
    #[arg(long)]
    library: Option<PathBuf>,
    #[arg(long)]
    score_col: Option<String>,
    #[arg(long)]
    smiles_col: Option<String>,
    #[arg(long, value_enum)]
    direction: Option<DirectionArg>,
    #[arg(long, value_enum)]
    features: Option<FeaturesArg>,
    /// Embedding file (text rows `smiles,v1,...` or SFEM binary).
    #[arg(long)]
    embeddings: Option<PathBuf>,
    #[arg(long, value_enum)]
    surrogate: Option<SurrogateArg>,
    #[arg(long, value_enum)]
    acquisition: Option<AcquisitionArg>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    init_frac: Option<f64>,
    #[arg(long)]
    batch_frac: Option<f64>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    top_k: Option<usize>,
    /// One or more comma-separated seeds.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    seed: Option<Vec<u64>>,
    #[arg(long, value_enum)]
    diversity: Option<DiversityArg>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (0 = all cores).
    #[arg(long)]
    jobs: Option<usize>,
    /// Fail on the first malformed library or embedding row.
    #[arg(long)]
    strict: bool,
    /// Continue from traces already present in the output directory.
    #[arg(long)]
    resume: bool,
}

#[derive(Args)]
struct FingerprintArgs {
    /// SMILES file; the first whitespace-separated token of each line is used.
    input: PathBuf,
    #[arg(long, value_enum, default_value = "morgan")]
    kind: FingerprintKindArg,
    #[arg(long, default_value_t = 3)]
    radius: u32,
    #[arg(long, default_value_t = 1)]
    min_radius: u32,
    #[arg(long, default_value_t = 3)]
    max_radius: u32,
    #[arg(long, default_value_t = DEFAULT_WIDTH)]
    width: usize,
    /// Output file (default stdout). Rows are `smiles<TAB>popcount<TAB>hex`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Reject listing (default `<out>.rejects`, or stderr without `--out`).
    #[arg(long)]
    rejects: Option<PathBuf>,
    /// Exit with a data error if any row fails to parse.
    #[arg(long)]
    strict: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum FingerprintKindArg {
    Morgan,
    AtomPair,
}

#[derive(Args)]
struct TopkArgs {
    library: PathBuf,
    #[arg(short, long)]
    k: usize,
    #[arg(long, value_enum, default_value = "min")]
    direction: DirectionArg,
    #[arg(long, default_value = "smiles")]
    smiles_col: String,
    #[arg(long, default_value = "score")]
    score_col: String,
    /// Output CSV (default stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Config(String),
    Data(String),
    Runtime(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Data(_) => 3,
            Failure::Runtime(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Data(m) | Failure::Runtime(m) => m,
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Failure {
        Failure::Config(e.to_string())
    }
}

impl From<LibraryError> for Failure {
    fn from(e: LibraryError) -> Failure {
        Failure::Data(format!("{}: {e}", e.name()))
    }
}

impl From<CampaignError> for Failure {
    fn from(e: CampaignError) -> Failure {
        match e {
            CampaignError::Config(_) | CampaignError::Resume { .. } => Failure::Config(e.to_string()),
            CampaignError::Library(l) => l.into(),
            CampaignError::Fingerprint(_) => Failure::Data(e.to_string()),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

fn io_failure(path: &Path) -> impl FnOnce(io::Error) -> Failure + '_ {
    move |e| Failure::Runtime(format!("{}: {e}", path.display()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => cmd_run(*args),
        Command::Fingerprint(args) => cmd_fingerprint(args),
        Command::Topk(args) => cmd_topk(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("vscreen: error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

fn resolve_config(args: &RunArgs) -> Result<RunConfig, Failure> {
    let mut cfg = match &args.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let lib = &mut cfg.library;
    if let Some(p) = &args.library {
        lib.path = Some(p.clone());
    }
    if let Some(c) = &args.score_col {
        lib.score_col = c.clone();
    }
    if let Some(c) = &args.smiles_col {
        lib.smiles_col = c.clone();
    }
    if let Some(d) = args.direction {
        lib.direction = d.into();
    }
    if let Some(p) = &args.embeddings {
        lib.embeddings = Some(p.clone());
    }
    if args.strict {
        lib.strict = true;
    }
    if let Some(f) = args.features {
        cfg.features.kind = match f {
            FeaturesArg::AtomPair => FeatureKind::AtomPair,
            FeaturesArg::Morgan => FeatureKind::Morgan,
            FeaturesArg::Embedding => FeatureKind::Embedding,
        };
    }
    if let Some(s) = args.surrogate {
        cfg.surrogate.kind = match s {
            SurrogateArg::Rf => SurrogateKind::Rf,
            SurrogateArg::Gbt => SurrogateKind::Gbt,
            SurrogateArg::Mlp => SurrogateKind::Mlp,
            SurrogateArg::EmbedMlp => SurrogateKind::EmbedMlp,
        };
    }
    if let Some(a) = args.acquisition {
        cfg.acquisition.strategy = match a {
            AcquisitionArg::Greedy => Strategy::Greedy,
            AcquisitionArg::Ucb => Strategy::Ucb,
            AcquisitionArg::Random => Strategy::Random,
        };
    }
    if let Some(b) = args.beta {
        cfg.acquisition.beta = b;
    }
    let c = &mut cfg.campaign;
    if let Some(v) = args.init_frac {
        c.init_frac = v;
    }
    if let Some(v) = args.batch_frac {
        c.batch_frac = v;
    }
    if let Some(v) = args.iterations {
        c.iterations = v;
    }
    if let Some(v) = args.top_k {
        c.top_k = v;
    }
    if let Some(v) = &args.seed {
        c.seeds = v.clone();
    }
    if let Some(d) = args.diversity {
        c.diversity.mode = match d {
            DiversityArg::Off => DiversityMode::Off,
            DiversityArg::Auto => DiversityMode::Auto,
            DiversityArg::Exact => DiversityMode::Exact,
            DiversityArg::Subsample => DiversityMode::Subsample,
        };
    }
    if let Some(j) = args.jobs {
        c.jobs = j;
    }
    if let Some(o) = &args.out {
        cfg.output.dir = o.clone();
    }
    if args.resume {
        cfg.output.resume = true;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn cmd_run(args: RunArgs) -> Result<(), Failure> {
    let cfg = resolve_config(&args)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.campaign.jobs)
        .build()
        .map_err(|e| Failure::Runtime(format!("thread pool: {e}")))?;
    pool.install(|| execute_run(cfg))
}

fn execute_run(cfg: RunConfig) -> Result<(), Failure> {
    let library = cfg.load_library()?;
    let report = library.ingest_report();
    if report.skipped() > 0 || report.duplicates_collapsed > 0 {
        eprintln!(
            "vscreen: library: {} rows read, {} invalid SMILES, {} invalid scores, {} duplicates collapsed",
            report.rows_read, report.invalid_smiles, report.invalid_scores, report.duplicates_collapsed
        );
    }
    for &seed in &cfg.campaign.seeds {
        cfg.campaign_config(seed).validate_for(&library)?;
    }
    let inputs = cfg.input_checksums()?;

    let out = cfg.output.dir.clone();
    fs::create_dir_all(&out).map_err(io_failure(&out))?;
    let manifest_path = out.join("manifest.json");
    let mut manifest = RunManifest::start(cfg.clone(), inputs);
    manifest.write(&manifest_path).map_err(io_failure(&manifest_path))?;

    let result = run_seeds(&cfg, &library, &out, &mut manifest);
    manifest.finish(result.as_ref().err().map(|f| f.message().to_string()));
    manifest.write(&manifest_path).map_err(io_failure(&manifest_path))?;
    result
}

fn run_seeds(cfg: &RunConfig, library: &Library, out: &Path, manifest: &mut RunManifest) -> Result<(), Failure> {
    let mut traces = Vec::new();
    for &seed in &cfg.campaign.seeds {
        let campaign = cfg.campaign_config(seed);
        let trace_path = out.join(format!("trace_seed{seed}.json"));
        let options = RunOptions { checkpoint: Some(trace_path.clone()), resume: cfg.output.resume, stop_after: None };
        let started = Instant::now();
        let outcome = run_campaign_with(&campaign, library, &|| campaign.surrogate.build(), &options, &mut |r, t| {
            eprintln!(
                "seed {seed} iteration {}: {} labelled, top-{} retrieval {:.4}, EF {:.2} ({:.1}s)",
                r.iteration, r.cumulative_acquired, campaign.top_k, r.topk_retrieval, r.enrichment_factor, t.total_seconds
            );
        })?;
        let trace = outcome.trace;
        trace.write(&trace_path)?;
        let table = out.join(format!("iterations_seed{seed}.csv"));
        fs::write(&table, trace.iteration_table()).map_err(io_failure(&table))?;
        write_acquired(&out.join(format!("acquired_seed{seed}.csv")), &trace, library)?;
        let timings = out.join(format!("timings_seed{seed}.csv"));
        fs::write(&timings, timings_table(&outcome.timings)).map_err(io_failure(&timings))?;
        eprintln!("seed {seed} finished in {:.1}s", started.elapsed().as_secs_f64());
        manifest.completed_seeds.push(seed);
        traces.push(trace);
    }
    if traces.len() > 1 {
        let path = out.join("aggregate.csv");
        fs::write(&path, aggregate_table(&aggregate(&traces))).map_err(io_failure(&path))?;
    }
    Ok(())
}

fn cmd_fingerprint(args: FingerprintArgs) -> Result<(), Failure> {
    let spec = match args.kind {
        FingerprintKindArg::Morgan => FingerprintSpec::Morgan { radius: args.radius, width: args.width },
        FingerprintKindArg::AtomPair => {
            FingerprintSpec::AtomPair { min_radius: args.min_radius, max_radius: args.max_radius, width: args.width }
        }
    };
    spec.validate().map_err(|e| Failure::Config(e.to_string()))?;

    let file = fs::File::open(&args.input)
        .map_err(|e| Failure::Data(format!("cannot read {}: {e}", args.input.display())))?;
    let mut rows = Vec::new();
    for (i, line) in io::BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Failure::Data(format!("{}: {e}", args.input.display())))?;
        if let Some(tok) = line.split_whitespace().next() {
            rows.push((i + 1, tok.to_string()));
        }
    }
    let results: Vec<_> = rows
        .par_iter()
        .map(|(line, smi)| (*line, smi, parse_smiles(smi).map(|g| spec.compute(&g))))
        .collect();

    let mut out: Box<dyn Write> = match &args.out {
        Some(p) => Box::new(BufWriter::new(fs::File::create(p).map_err(io_failure(p))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    let rejects_path = args.rejects.clone().or_else(|| args.out.as_ref().map(|p| with_suffix(p, ".rejects")));
    let mut rejects: Box<dyn Write> = match &rejects_path {
        Some(p) => Box::new(BufWriter::new(fs::File::create(p).map_err(io_failure(p))?)),
        None => Box::new(io::stderr().lock()),
    };
    let write_err = |e: io::Error| Failure::Runtime(format!("write failed: {e}"));
    let mut n_rejected = 0;
    for (line, smi, result) in results {
        match result {
            Ok(fp) => writeln!(out, "{smi}\t{}\t{}", fp.popcount(), fp.to_hex()).map_err(write_err)?,
            Err(e) => {
                n_rejected += 1;
                writeln!(rejects, "{line}\t{smi}\t{}\t{e}", e.name()).map_err(write_err)?;
            }
        }
    }
    out.flush().map_err(write_err)?;
    rejects.flush().map_err(write_err)?;
    if args.strict && n_rejected > 0 {
        return Err(Failure::Data(format!("{n_rejected} SMILES failed to parse")));
    }
    Ok(())
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn cmd_topk(args: TopkArgs) -> Result<(), Failure> {
    let options = IngestOptions {
        smiles_column: args.smiles_col,
        score_column: args.score_col,
        direction: args.direction.into(),
        ..Default::default()
    };
    let library = Library::load(&args.library, &options)?;
    let ranked = library.topk_ranked(args.k)?;
    let mut text = String::from("rank,index,smiles,score\n");
    for (rank, &i) in ranked.iter().enumerate() {
        let r = &library.records()[i];
        text.push_str(&format!("{},{},{},{}\n", rank + 1, i, r.smiles, r.score));
    }
    match &args.out {
        Some(p) => fs::write(p, text).map_err(io_failure(p)),
        None => io::stdout().write_all(text.as_bytes()).map_err(|e| Failure::Runtime(e.to_string())),
    }
}
