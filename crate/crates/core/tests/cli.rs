use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use vscreen::campaign::CampaignTrace;
use vscreen::synthetic::sparse_linear_library;

fn vscreen(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vscreen")).args(args).output().expect("spawn vscreen")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn library_file(dir: &Path, n: usize) -> PathBuf {
    let path = dir.join("lib.csv");
    fs::write(&path, sparse_linear_library(n, 8, 3.0, 11).to_csv()).unwrap();
    path
}

fn manifest(out: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap()
}

const SMALL_RF: &str = "[surrogate]\nkind = \"rf\"\nrf = { n_trees = 8 }\n";

#[test]
fn three_seeds_give_three_traces_and_an_aggregate() {
    let dir = tempfile::tempdir().unwrap();
    let lib = library_file(dir.path(), 1000);
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, format!("{SMALL_RF}[campaign]\niterations = 2\ntop_k = 50\nbatch_frac = 0.02\n")).unwrap();
    let out = dir.path().join("out");
    let o = vscreen(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--library",
        lib.to_str().unwrap(),
        "--seed",
        "0,1,2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    for seed in 0..3 {
        let trace = CampaignTrace::from_json(&fs::read_to_string(out.join(format!("trace_seed{seed}.json"))).unwrap())
            .unwrap();
        assert!(trace.complete);
        assert_eq!(trace.config.seed, seed);
        assert_eq!(trace.records.len(), 3);
        for f in ["iterations", "acquired", "timings"] {
            assert!(out.join(format!("{f}_seed{seed}.csv")).is_file(), "{f}");
        }
        let acquired = fs::read_to_string(out.join(format!("acquired_seed{seed}.csv"))).unwrap();
        assert_eq!(acquired.lines().count(), 1 + 10 + 2 * 20);
    }
    let agg = fs::read_to_string(out.join("aggregate.csv")).unwrap();
    assert_eq!(agg.lines().count(), 4, "{agg}");
    let m = manifest(&out);
    assert_eq!(m["status"], "complete");
    assert_eq!(m["completed_seeds"], serde_json::json!([0, 1, 2]));
    assert_eq!(m["version"], env!("CARGO_PKG_VERSION"));
    assert!(m["started"].is_string() && m["finished"].is_string());
    assert_eq!(m["inputs"][0]["xxh64"].as_str().unwrap().len(), 16);
}

#[test]
fn rerun_and_resume_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let lib = library_file(dir.path(), 800);
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, format!("{SMALL_RF}[campaign]\niterations = 2\ntop_k = 40\n")).unwrap();
    let run = |out: &Path, extra: &[&str]| {
        let mut args = vec!["run", "--config", cfg.to_str().unwrap(), "--library", lib.to_str().unwrap()];
        args.extend(["--out", out.to_str().unwrap()]);
        args.extend(extra);
        let o = vscreen(&args);
        assert!(o.status.success(), "{}", stderr(&o));
        fs::read(out.join("trace_seed0.json")).unwrap()
    };
    let a = run(&dir.path().join("a"), &[]);
    let b = run(&dir.path().join("b"), &["--jobs", "1"]);
    assert_eq!(a, b);
    let c = run(&dir.path().join("a"), &["--resume"]);
    assert_eq!(a, c);
}

#[test]
fn missing_library_is_a_data_error_naming_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nowhere.csv");
    let o = vscreen(&["run", "--library", missing.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("nowhere.csv"), "{}", stderr(&o));
}

#[test]
fn config_errors_report_file_and_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "[campaign]\niterations = 3\nbeta = 2.0\n").unwrap();
    let o = vscreen(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let msg = stderr(&o);
    assert!(msg.contains("bad.toml:3:"), "{msg}");

    let o = vscreen(&["run", "--config", dir.path().join("absent.toml").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));

    let lib = library_file(dir.path(), 100);
    let o = vscreen(&["run", "--library", lib.to_str().unwrap(), "--init-frac", "1.5"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    let o = vscreen(&["run", "--library", lib.to_str().unwrap(), "--top-k", "1000"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    let o = vscreen(&["run", "--library", lib.to_str().unwrap(), "--acquisition", "thompson"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn flag_beats_file_for_beta() {
    let dir = tempfile::tempdir().unwrap();
    let lib = library_file(dir.path(), 500);
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, format!("{SMALL_RF}[acquisition]\nstrategy = \"greedy\"\nbeta = 2.0\n[campaign]\niterations = 1\ntop_k = 20\n"))
        .unwrap();
    let out = dir.path().join("out");
    let o = vscreen(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--library",
        lib.to_str().unwrap(),
        "--acquisition",
        "ucb",
        "--beta",
        "5",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let m = manifest(&out);
    assert_eq!(m["config"]["acquisition"]["beta"], 5.0);
    assert_eq!(m["config"]["acquisition"]["strategy"], "ucb");
    let trace = CampaignTrace::from_json(&fs::read_to_string(out.join("trace_seed0.json")).unwrap()).unwrap();
    assert_eq!(trace.config.acquisition.beta, 5.0);
}

#[test]
fn every_flag_overrides_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let lib_rows = sparse_linear_library(400, 6, 3.0, 5);
    let lib_text = lib_rows.to_csv().replace("smiles,score", "mol,dock");
    let lib = dir.path().join("flag_lib.csv");
    fs::write(&lib, lib_text).unwrap();
    let emb = dir.path().join("emb.csv");
    let emb_text: String = lib_rows
        .rows
        .iter()
        .enumerate()
        .map(|(i, (s, _))| format!("{s},{},{},{}\n", i % 7, (i % 3) as f64 * 0.5, lib_rows.signal[i]))
        .collect();
    fs::write(&emb, emb_text).unwrap();

    let cfg = dir.path().join("file.toml");
    fs::write(
        &cfg,
        r#"
[library]
path = "file_lib.csv"
smiles_col = "smiles"
score_col = "score"
direction = "max"
strict = false

[features]
kind = "morgan"

[surrogate]
kind = "gbt"
mlp = { hidden = [8], batch_size = 16 }
training = { max_epochs = 3, patience = 2 }

[acquisition]
strategy = "greedy"
beta = 1.0

[campaign]
init_frac = 0.05
batch_frac = 0.05
iterations = 4
top_k = 30
seeds = [9]
jobs = 3
diversity = { mode = "off" }

[output]
dir = "file_out"
"#,
    )
    .unwrap();
    let out = dir.path().join("flag_out");
    let o = vscreen(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--library",
        lib.to_str().unwrap(),
        "--smiles-col",
        "mol",
        "--score-col",
        "dock",
        "--direction",
        "min",
        "--features",
        "embedding",
        "--embeddings",
        emb.to_str().unwrap(),
        "--surrogate",
        "embed-mlp",
        "--acquisition",
        "ucb",
        "--beta",
        "3.5",
        "--init-frac",
        "0.02",
        "--batch-frac",
        "0.03",
        "--iterations",
        "2",
        "--top-k",
        "10",
        "--seed",
        "4",
        "--diversity",
        "exact",
        "--jobs",
        "2",
        "--strict",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let c = &manifest(&out)["config"];
    assert_eq!(c["library"]["path"], lib.to_str().unwrap());
    assert_eq!(c["library"]["smiles_col"], "mol");
    assert_eq!(c["library"]["score_col"], "dock");
    assert_eq!(c["library"]["direction"], "minimize");
    assert_eq!(c["library"]["embeddings"], emb.to_str().unwrap());
    assert_eq!(c["library"]["strict"], true);
    assert_eq!(c["features"]["kind"], "embedding");
    assert_eq!(c["surrogate"]["kind"], "embed-mlp");
    assert_eq!(c["acquisition"]["strategy"], "ucb");
    assert_eq!(c["acquisition"]["beta"], 3.5);
    assert_eq!(c["campaign"]["init_frac"], 0.02);
    assert_eq!(c["campaign"]["batch_frac"], 0.03);
    assert_eq!(c["campaign"]["iterations"], 2);
    assert_eq!(c["campaign"]["top_k"], 10);
    assert_eq!(c["campaign"]["seeds"], serde_json::json!([4]));
    assert_eq!(c["campaign"]["diversity"]["mode"], "exact");
    assert_eq!(c["campaign"]["jobs"], 2);
    assert_eq!(c["output"]["dir"], out.to_str().unwrap());

    let trace = CampaignTrace::from_json(&fs::read_to_string(out.join("trace_seed4.json")).unwrap()).unwrap();
    assert_eq!(trace.records.len(), 3);
    assert_eq!(trace.records[0].acquired_indices.len(), 8);
    assert_eq!(trace.records[1].acquired_indices.len(), 12);
    assert!(trace.last().unwrap().mean_dice.is_some());
}

#[test]
fn failed_seed_leaves_an_incomplete_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let lib = library_file(dir.path(), 500);
    let out = dir.path().join("out");
    // a directory where the second seed's trace should go
    fs::create_dir_all(out.join("trace_seed1.json")).unwrap();
    let o = vscreen(&[
        "run",
        "--library",
        lib.to_str().unwrap(),
        "--acquisition",
        "random",
        "--iterations",
        "2",
        "--top-k",
        "20",
        "--seed",
        "0,1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
    let m = manifest(&out);
    assert_eq!(m["status"], "incomplete");
    assert_eq!(m["completed_seeds"], serde_json::json!([0]));
    assert!(m["error"].as_str().unwrap().contains("trace_seed1"), "{}", m["error"]);
    assert!(!out.join("aggregate.csv").exists());
}

#[test]
fn fingerprint_dump() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.smi");
    fs::write(&input, "CCO ethanol\nOCC\n\nC1CC\nc1ccccc1\n").unwrap();
    let out = dir.path().join("fp.tsv");
    let o = vscreen(&["fingerprint", input.to_str().unwrap(), "--kind", "morgan", "--radius", "3", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(&out).unwrap();
    let rows: Vec<Vec<&str>> = text.lines().map(|l| l.split('\t').collect()).collect();
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[0][0], "CCO");
    assert_eq!(rows[0][1..], rows[1][1..]);
    assert_eq!(rows[0][2].len(), 2048 / 4);
    let popcount: usize = rows[0][1].parse().unwrap();
    let ones: u32 = hex::decode(rows[0][2]).unwrap().iter().map(|b| b.count_ones()).sum();
    assert_eq!(popcount, ones as usize);
    let rejects = fs::read_to_string(dir.path().join("fp.tsv.rejects")).unwrap();
    assert_eq!(rejects.lines().count(), 1);
    assert!(rejects.starts_with("4\tC1CC\tUnmatchedRingClosure\t"), "{rejects}");

    let o = vscreen(&["fingerprint", input.to_str().unwrap(), "--strict", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));

    let o = vscreen(&["fingerprint", input.to_str().unwrap(), "--kind", "atom-pair", "--width", "0"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn fingerprint_empty_input() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("empty.smi");
    fs::write(&input, "").unwrap();
    let o = vscreen(&["fingerprint", input.to_str().unwrap(), "--kind", "atom-pair"]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    assert!(o.stderr.is_empty());
}

#[test]
fn topk_listing() {
    let dir = tempfile::tempdir().unwrap();
    let lib = dir.path().join("three.csv");
    fs::write(&lib, "smiles,score\nCCO,-5.0\nCCN,-9.5\nCCC,-7.25\n").unwrap();
    let o = vscreen(&["topk", lib.to_str().unwrap(), "-k", "1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(String::from_utf8(o.stdout).unwrap(), "rank,index,smiles,score\n1,1,CCN,-9.5\n");

    let o = vscreen(&["topk", lib.to_str().unwrap(), "-k", "3"]);
    let text = String::from_utf8(o.stdout).unwrap();
    let order: Vec<&str> = text.lines().skip(1).map(|l| l.split(',').nth(2).unwrap()).collect();
    assert_eq!(order, ["CCN", "CCC", "CCO"]);

    let o = vscreen(&["topk", lib.to_str().unwrap(), "-k", "3", "--direction", "max"]);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.lines().nth(1).unwrap().contains("CCO"), "{text}");

    let o = vscreen(&["topk", lib.to_str().unwrap(), "-k", "4"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("KTooLarge"), "{}", stderr(&o));
}
