use std::path::Path;
use std::process::{Command, Output};
use std::time::Instant;

use marl::config::{Algorithm, EnvSpec, ExperimentConfig};
use marl::harness::{run, RunOptions};
use marl::{io, Error};

fn marl(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_marl")).args(args).current_dir(cwd).output().unwrap()
}

fn goodstate_vl(dir: &Path, episodes: usize) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::preset("goodstate-vlearning").unwrap();
    cfg.episodes = Some(episodes);
    cfg.seeds = vec![7];
    cfg.output.dir = dir.to_path_buf();
    cfg.output.trace = true;
    cfg
}

#[test]
fn smoke_run_is_fast_and_complete() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("vl");
    let start = Instant::now();
    let out = run(&goodstate_vl(&dir, 100), RunOptions::default()).unwrap();
    assert!(start.elapsed().as_secs_f64() < 5.0);
    for f in ["config.json", "game.json", "summary.csv", "curve.csv", "timing.csv"] {
        assert!(dir.join(f).is_file(), "{f}");
    }
    for f in ["metrics.csv", "trace.jsonl", "gap.json"] {
        assert!(dir.join("seed-7").join(f).is_file(), "{f}");
    }
    let report = io::read_gap_report(&dir.join("seed-7/gap.json")).unwrap();
    assert_eq!(report.len(), 2);
    assert_eq!(out.values("cce_bound", Some(0)), vec![report["0"].cce_bound]);
    let metrics = std::fs::read_to_string(dir.join("seed-7/metrics.csv")).unwrap();
    assert_eq!(metrics.lines().next().unwrap(), "run_id,seed,episode,return_0,return_1,stages_completed");
    assert_eq!(metrics.lines().count(), 101);
}

#[test]
fn reruns_are_bitwise_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfgs = vec![goodstate_vl(Path::new(""), 60)];
    let mut pg = ExperimentConfig::preset("goodstate-pg").unwrap();
    pg.iterations = Some(300);
    pg.eval_every = 50;
    pg.seeds = vec![1, 2, 3];
    cfgs.push(pg);
    let mut q = ExperimentConfig::preset("goodstate-independent-q").unwrap();
    q.episodes = Some(200);
    q.seeds = vec![4, 5];
    cfgs.push(q);
    for (i, mut cfg) in cfgs.into_iter().enumerate() {
        let mut texts = Vec::new();
        for rep in 0..2 {
            let dir = tmp.path().join(format!("{i}-{rep}"));
            cfg.output.dir = dir.clone();
            run(&cfg, RunOptions::default()).unwrap();
            let mut files = Vec::new();
            for seed in &cfg.seeds {
                files.push(dir.join(format!("seed-{seed}/metrics.csv")));
            }
            files.push(dir.join("summary.csv"));
            files.push(dir.join("curve.csv"));
            texts.push(files.iter().map(|f| std::fs::read(f).unwrap()).collect::<Vec<_>>());
        }
        assert_eq!(texts[0], texts[1], "config {i}");
    }
}

#[test]
fn refuses_to_overwrite_without_force() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("o");
    let mut cfg = ExperimentConfig::preset("goodstate-oracle").unwrap();
    cfg.output.dir = dir.clone();
    let o = run(&cfg, RunOptions::default()).unwrap();
    assert!((o.mean("oracle_value_raw", None).unwrap() - 40.5).abs() < 1e-9);
    assert!(matches!(run(&cfg, RunOptions::default()), Err(Error::Exists(_))));
    run(&cfg, RunOptions { force: true }).unwrap();
}

#[test]
fn every_algorithm_runs_on_a_random_game() {
    let tmp = tempfile::tempdir().unwrap();
    for (i, algorithm) in [
        Algorithm::VlearningCce,
        Algorithm::VlearningCe,
        Algorithm::PgExact,
        Algorithm::PgStorm,
        Algorithm::PgVanilla,
        Algorithm::IndependentQ,
        Algorithm::CentralizedOracle,
    ]
    .into_iter()
    .enumerate()
    {
        let mut cfg = ExperimentConfig::preset("goodstate-oracle").unwrap();
        cfg.env = EnvSpec::Random { seed: 11, agents: 3, horizon: 2, states: 2, actions: 2, team: false };
        cfg.algorithm = algorithm;
        cfg.episodes = Some(50);
        cfg.iterations = Some(50);
        cfg.seeds = vec![0, 1];
        cfg.output.dir = tmp.path().join(i.to_string());
        let out = run(&cfg, RunOptions::default()).unwrap();
        assert!(!out.rows.is_empty(), "{algorithm:?}");
        assert_eq!(out.values("window_return_raw", Some(2)).len(), 2, "{algorithm:?}");
    }
}

#[test]
fn boxpushing_smoke() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::preset("goodstate-vlearning").unwrap();
    cfg.env = EnvSpec::Boxpushing(Default::default());
    cfg.episodes = Some(200);
    cfg.seeds = vec![0];
    cfg.output.dir = tmp.path().join("bp");
    let out = run(&cfg, RunOptions::default()).unwrap();
    assert!(out.values("window_return_raw", Some(0))[0].is_finite());
}

#[test]
fn binary_subcommands_and_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let cwd = tmp.path();

    let o = marl(&["make-env", "goodstate", "--horizon", "10", "--eps", "0.1", "--out", "g.json"], cwd);
    assert!(o.status.success());
    let o = marl(&["oracle", "g.json"], cwd);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!((v["value_raw"].as_f64().unwrap() - 40.5).abs() < 1e-9);

    std::fs::write(
        cwd.join("vl.toml"),
        "name = \"vl\"\nalgorithm = \"vlearning-cce\"\nepisodes = 50\nseeds = [2]\n\
         [env]\nkind = \"file\"\npath = \"g.json\"\n[output]\ndir = \"out\"\ntrace = true\n",
    )
    .unwrap();
    assert!(marl(&["run", "vl.toml"], cwd).status.success());
    assert_eq!(marl(&["run", "vl.toml"], cwd).status.code(), Some(1));
    assert!(marl(&["run", "vl.toml", "--force", "--episodes", "40"], cwd).status.success());

    let o = marl(&["eval-gap", "out/seed-2/trace.jsonl", "--game", "g.json"], cwd);
    assert!(o.status.success());
    let from_cli: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let stored: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(cwd.join("out/seed-2/gap.json")).unwrap()).unwrap();
    assert_eq!(from_cli, stored);

    assert!(marl(&["make-env", "matrix-team", "--out", "m.json"], cwd).status.success());
    assert_eq!(marl(&["eval-gap", "out/seed-2/trace.jsonl", "--game", "m.json"], cwd).status.code(), Some(1));
    assert_eq!(marl(&["oracle", "missing.json"], cwd).status.code(), Some(1));
    assert_eq!(marl(&["run", "--preset", "nope"], cwd).status.code(), Some(1));
    assert_eq!(marl(&["frobnicate"], cwd).status.code(), Some(1));
    std::fs::write(cwd.join("bad.toml"), "name = \"x\"\nalgorithm = \"pg-storm\"\nseeds = []\n[env]\nkind = \"matrix-team\"\n").unwrap();
    assert_eq!(marl(&["run", "bad.toml"], cwd).status.code(), Some(1));

    // output under a regular file cannot be created
    std::fs::write(cwd.join("blocker"), "").unwrap();
    assert_eq!(marl(&["run", "vl.toml", "--out", "blocker/run"], cwd).status.code(), Some(2));
}

#[test]
fn shipped_configs_load_and_run() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let tmp = tempfile::tempdir().unwrap();
    let mut seen = Vec::new();
    for entry in std::fs::read_dir(&root).unwrap() {
        let path = entry.unwrap().path();
        let mut cfg = ExperimentConfig::load(&path).unwrap();
        seen.push(cfg.algorithm);
        // shrink to a smoke run
        cfg.seeds.truncate(1);
        cfg.episodes = cfg.episodes.map(|k| k.min(200));
        cfg.iterations = cfg.iterations.map(|t| t.min(200));
        cfg.window = cfg.window.min(50);
        cfg.eval_every = cfg.eval_every.min(50);
        cfg.output.dir = tmp.path().join(&cfg.name);
        run(&cfg, RunOptions::default()).unwrap();
    }
    for a in [
        Algorithm::VlearningCce,
        Algorithm::VlearningCe,
        Algorithm::PgExact,
        Algorithm::PgStorm,
        Algorithm::PgVanilla,
        Algorithm::IndependentQ,
        Algorithm::CentralizedOracle,
    ] {
        assert!(seen.contains(&a), "no config for {a:?}");
    }
}
