//! Multi-seed experiment driver.
//!
//! Output layout under `output.dir`:
//!
//! ```text
//! config.json            resolved configuration
//! game.json              the game that was run
//! summary.csv            run_id,seed,metric,agent,value
//! curve.csv              step,mean_return_0..mean_return_{N-1} (raw, averaged over seeds)
//! timing.csv             run_id,seed,seconds
//! oracle.json            centralized-oracle only
//! seed-<seed>/metrics.csv
//! seed-<seed>/gap.json   V-learning
//! seed-<seed>/trace.jsonl V-learning, when output.trace is set
//! seed-<seed>/policy.json policy gradient and independent Q-learning
//! ```
//!
//! Per-seed metrics columns:
//!
//! * V-learning: `run_id,seed,episode,return_0..,stages_completed`
//! * independent Q-learning: `run_id,seed,episode,return_0..`
//! * policy gradient: `run_id,seed,iteration,return_0..,eta,momentum,ne_gap`
//!
//! Returns are raw. Gap metrics and certified values are normalized, as are
//! `eta` and `momentum` (whatever the solver used). `ne_gap` is empty on
//! iterations that were not evaluated. Everything except `timing.csv` is a
//! pure function of the configuration.

use std::path::{Path, PathBuf};
use std::time::Instant;

use marl_core::baselines::{centralized_oracle, independent_q, IndependentQConfig};
use marl_core::certify::{evaluate_certified, l2_equilibrium_gap, MAX_EXACT_EPISODES};
use marl_core::dp::{evaluate_policy, ne_gap};
use marl_core::env::EpisodeRecord;
use marl_core::pg::{run_pg, DirectPolicy, PgConfig, PgMode};
use marl_core::vlearning::{run_vlearning, Mode, PolicyTrace, StageSchedule, StepRule, TraceIndex, VLearningConfig};
use marl_core::{MarkovGame, ProductPolicy};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Algorithm, ExperimentConfig};
use crate::error::{Error, Result};
use crate::io;

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    pub force: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub seed: u64,
    pub metric: &'static str,
    pub agent: Option<usize>,
    pub value: f64,
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub dir: PathBuf,
    pub rows: Vec<SummaryRow>,
    pub seconds: Vec<f64>,
}

impl Outcome {
    pub fn values(&self, metric: &str, agent: Option<usize>) -> Vec<f64> {
        self.rows.iter().filter(|r| r.metric == metric && r.agent == agent).map(|r| r.value).collect()
    }

    /// Mean over seeds, `None` when the metric was not recorded.
    pub fn mean(&self, metric: &str, agent: Option<usize>) -> Option<f64> {
        let v = self.values(metric, agent);
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    }
}

struct SeedRun {
    rows: Vec<SummaryRow>,
    /// Raw per-agent return per step.
    curve: Vec<Vec<f64>>,
    seconds: f64,
}

pub fn run(cfg: &ExperimentConfig, opts: RunOptions) -> Result<Outcome> {
    cfg.validate()?;
    let game = cfg.env.build()?;
    let dir = cfg.output.dir.clone();
    claim_dir(&dir, opts.force)?;
    io::write_json(&dir.join("config.json"), cfg)?;
    io::save_game(&dir.join("game.json"), &game)?;

    if cfg.algorithm == Algorithm::CentralizedOracle {
        return run_oracle(cfg, &game, dir);
    }

    let runs: Vec<SeedRun> = cfg.seeds.par_iter().map(|&seed| run_seed(cfg, &game, &dir, seed)).collect::<Result<_>>()?;

    let mut rows = Vec::new();
    let mut seconds = Vec::new();
    for r in &runs {
        rows.extend(r.rows.iter().cloned());
        seconds.push(r.seconds);
    }
    write_summary(&dir.join("summary.csv"), &cfg.name, &rows)?;
    write_curve(&dir.join("curve.csv"), game.n_agents, &runs)?;
    let mut w = csv_writer(&dir.join("timing.csv"))?;
    write_row(&mut w, &dir, ["run_id", "seed", "seconds"])?;
    for (&seed, s) in cfg.seeds.iter().zip(&seconds) {
        write_row(&mut w, &dir, [run_id(cfg, seed), seed.to_string(), s.to_string()])?;
    }
    flush(w, &dir)?;
    Ok(Outcome { dir, rows, seconds })
}

fn claim_dir(dir: &Path, force: bool) -> Result<()> {
    let occupied = match std::fs::read_dir(dir) {
        Ok(mut entries) => entries.next().is_some(),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => false,
        Err(e) => return Err(Error::io(dir, e)),
    };
    if occupied && !force {
        return Err(Error::Exists(dir.to_path_buf()));
    }
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn run_id(cfg: &ExperimentConfig, seed: u64) -> String {
    format!("{}-{seed}", cfg.name)
}

#[derive(Serialize)]
struct OracleFile<'a> {
    value: f64,
    value_raw: f64,
    agent_values: &'a [f64],
    agent_values_raw: Vec<f64>,
    policy: &'a ProductPolicy,
}

fn run_oracle(cfg: &ExperimentConfig, game: &MarkovGame, dir: PathBuf) -> Result<Outcome> {
    let start = Instant::now();
    let o = centralized_oracle(game)?;
    let raw = |v: f64| game.reward_scale.value_to_raw(v, game.horizon);
    io::write_json(
        &dir.join("oracle.json"),
        &OracleFile {
            value: o.value,
            value_raw: raw(o.value),
            agent_values: &o.agent_values,
            agent_values_raw: o.agent_values.iter().map(|&v| raw(v)).collect(),
            policy: &o.policy,
        },
    )?;
    let mut rows = Vec::new();
    for &seed in &cfg.seeds {
        rows.push(SummaryRow { seed, metric: "oracle_value_raw", agent: None, value: raw(o.value) });
        for (i, &v) in o.agent_values.iter().enumerate() {
            rows.push(SummaryRow { seed, metric: "window_return_raw", agent: Some(i), value: raw(v) });
        }
    }
    write_summary(&dir.join("summary.csv"), &cfg.name, &rows)?;
    let seconds = vec![start.elapsed().as_secs_f64(); cfg.seeds.len()];
    Ok(Outcome { dir, rows, seconds })
}

fn run_seed(cfg: &ExperimentConfig, game: &MarkovGame, dir: &Path, seed: u64) -> Result<SeedRun> {
    let start = Instant::now();
    let seed_dir = dir.join(format!("seed-{seed}"));
    std::fs::create_dir_all(&seed_dir).map_err(|e| Error::io(&seed_dir, e))?;
    let raw = |v: f64| game.reward_scale.value_to_raw(v, game.horizon);
    let n = game.n_agents;
    let mut rows = Vec::new();
    let mut push = |metric: &'static str, agent: Option<usize>, value: f64| rows.push(SummaryRow { seed, metric, agent, value });

    let curve: Vec<Vec<f64>> = match cfg.algorithm {
        Algorithm::VlearningCce | Algorithm::VlearningCe => {
            let mode = if cfg.algorithm == Algorithm::VlearningCce { Mode::Cce } else { Mode::Ce };
            let vc = VLearningConfig {
                mode,
                episodes: cfg.episodes.unwrap_or_default(),
                iota: cfg.iota(game),
                step_rule: cfg.hyper.step_rule.unwrap_or(StepRule::Theory),
            };
            let run = run_vlearning(game, &vc, seed)?;
            let curve = raw_returns(&run.records, raw);
            let stages = stages_completed(&run.trace, game.n_states);
            write_episodes(&seed_dir.join("metrics.csv"), &run_id(cfg, seed), seed, &curve, Some(&stages))?;
            if cfg.output.trace {
                io::write_trace(&seed_dir.join("trace.jsonl"), &run.trace)?;
            }
            if run.trace.episodes <= MAX_EXACT_EPISODES {
                let index = TraceIndex::new(&run.trace)?;
                let report = evaluate_certified(&index, game)?;
                io::write_gap_report(&seed_dir.join("gap.json"), &report)?;
                for i in 0..n {
                    push("certified_value", Some(i), report.certified_value[i]);
                    push("cce_bound", Some(i), report.cce_bound[i]);
                    push("ce_bound", Some(i), report.ce_bound[i]);
                }
            }
            curve
        }
        Algorithm::IndependentQ => {
            let qc = IndependentQConfig {
                episodes: cfg.episodes.unwrap_or_default(),
                bonus_scale: cfg.hyper.bonus_scale.unwrap_or(1.0),
                iota: cfg.iota(game),
            };
            let run = independent_q(game, &qc, seed)?;
            let curve = raw_returns(&run.records, raw);
            write_episodes(&seed_dir.join("metrics.csv"), &run_id(cfg, seed), seed, &curve, None)?;
            let greedy = run.greedy_policy(game);
            io::write_json(&seed_dir.join("policy.json"), &greedy)?;
            let values = evaluate_policy(game, &greedy)?;
            for i in 0..n {
                push("greedy_value_raw", Some(i), raw(values.initial_value(&game.initial_dist, i)));
            }
            push("greedy_ne_gap", None, ne_gap(game, &greedy)?.max);
            curve
        }
        Algorithm::PgExact | Algorithm::PgStorm | Algorithm::PgVanilla => {
            let pc = pg_config(cfg);
            let run = run_pg(game, &pc, seed)?;
            let curve: Vec<Vec<f64>> = run.records.iter().map(|r| r.returns.iter().map(|&v| raw(v)).collect()).collect();
            write_pg_metrics(&seed_dir.join("metrics.csv"), &run_id(cfg, seed), seed, &run.records, &curve)?;
            io::write_json(
                &seed_dir.join("policy.json"),
                &io::PolicySnapshot { last: run.last.clone(), sampled: run.sampled.clone(), tau: run.tau },
            )?;
            for (label, policy) in [("last", &run.last), ("sampled", &run.sampled)] {
                let (value_metric, gap_metric) = match label {
                    "last" => ("last_value_raw", "last_ne_gap"),
                    _ => ("sampled_value_raw", "sampled_ne_gap"),
                };
                let realized = policy.realized();
                let values = evaluate_policy(game, &realized)?;
                for i in 0..n {
                    push(value_metric, Some(i), raw(values.initial_value(&game.initial_dist, i)));
                }
                push(gap_metric, None, ne_gap(game, &realized)?.max);
            }
            if let Some(l2) = one_shot_l2(game, &run.last)? {
                push("last_l2_gap", None, l2);
            }
            push("tau", None, run.tau as f64);
            curve
        }
        Algorithm::CentralizedOracle => unreachable!("handled before seeds are dispatched"),
    };

    let window = if cfg.window == 0 { curve.len() } else { cfg.window.min(curve.len()) };
    for i in 0..n {
        let tail = &curve[curve.len() - window..];
        push("window_return_raw", Some(i), tail.iter().map(|r| r[i]).sum::<f64>() / window as f64);
    }
    Ok(SeedRun { rows, curve, seconds: start.elapsed().as_secs_f64() })
}

pub fn pg_config(cfg: &ExperimentConfig) -> PgConfig {
    let h = &cfg.hyper;
    let mode = match cfg.algorithm {
        Algorithm::PgExact => PgMode::ExactPga,
        Algorithm::PgVanilla => PgMode::VanillaSga,
        Algorithm::PgStorm if h.eta.is_some() => PgMode::ConstantStorm,
        Algorithm::PgStorm => PgMode::Storm,
        other => panic!("{other:?} is not a policy-gradient algorithm"),
    };
    let mut pc = PgConfig::new(mode, cfg.iterations.unwrap_or_default());
    pc.eps_greedy = h.eps_greedy.unwrap_or(if mode == PgMode::ExactPga { 0.0 } else { pc.eps_greedy });
    pc.init = h.init.unwrap_or(pc.init);
    pc.eta = h.eta;
    pc.momentum = h.momentum;
    pc.b = h.b.unwrap_or(pc.b);
    pc.units = h.units.unwrap_or(pc.units);
    pc.eval_every = cfg.eval_every;
    pc
}

fn one_shot_l2(game: &MarkovGame, policy: &DirectPolicy) -> Result<Option<f64>> {
    if game.horizon != 1 || game.n_states != 1 || game.n_agents != 2 {
        return Ok(None);
    }
    Ok(Some(l2_equilibrium_gap(game, &policy.realized().tables)?))
}

fn raw_returns(records: &[EpisodeRecord], raw: impl Fn(f64) -> f64) -> Vec<Vec<f64>> {
    records.iter().map(|r| r.returns.iter().map(|&v| raw(v)).collect()).collect()
}

/// Stages completed over all `(h, s)` after each episode.
fn stages_completed(trace: &PolicyTrace, n_states: usize) -> Vec<usize> {
    let schedule = StageSchedule::new(trace.horizon);
    let cells = trace.horizon * n_states;
    let mut visits = vec![0usize; cells];
    let mut len = vec![schedule.first_length(); cells];
    let mut next_end = len.clone();
    let mut total = 0;
    let mut out = Vec::with_capacity(trace.episodes);
    for k in 0..trace.episodes {
        for h in 0..trace.horizon {
            let c = h * n_states + trace.state(k, h);
            visits[c] += 1;
            if visits[c] == next_end[c] {
                total += 1;
                len[c] = schedule.next_length(len[c]);
                next_end[c] += len[c];
            }
        }
        out.push(total);
    }
    out
}

fn csv_writer(path: &Path) -> Result<csv::Writer<std::io::BufWriter<std::fs::File>>> {
    Ok(csv::Writer::from_writer(io::create(path)?))
}

fn write_row<W: std::io::Write, I, T>(w: &mut csv::Writer<W>, path: &Path, record: I) -> Result<()>
where
    I: IntoIterator<Item = T>,
    T: AsRef<[u8]>,
{
    w.write_record(record).map_err(|e| Error::format(path, e))
}

fn flush<W: std::io::Write>(mut w: csv::Writer<W>, path: &Path) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

fn return_columns(n: usize) -> impl Iterator<Item = String> {
    (0..n).map(|i| format!("return_{i}"))
}

fn write_episodes(path: &Path, id: &str, seed: u64, curve: &[Vec<f64>], stages: Option<&[usize]>) -> Result<()> {
    let n = curve.first().map_or(0, Vec::len);
    let mut w = csv_writer(path)?;
    let mut header: Vec<String> = vec!["run_id".into(), "seed".into(), "episode".into()];
    header.extend(return_columns(n));
    if stages.is_some() {
        header.push("stages_completed".into());
    }
    write_row(&mut w, path, &header)?;
    let seed = seed.to_string();
    for (k, returns) in curve.iter().enumerate() {
        let mut row = vec![id.to_string(), seed.clone(), k.to_string()];
        row.extend(returns.iter().map(f64::to_string));
        if let Some(s) = stages {
            row.push(s[k].to_string());
        }
        write_row(&mut w, path, &row)?;
    }
    flush(w, path)
}

fn write_pg_metrics(path: &Path, id: &str, seed: u64, records: &[marl_core::pg::PgRecord], curve: &[Vec<f64>]) -> Result<()> {
    let n = curve.first().map_or(0, Vec::len);
    let mut w = csv_writer(path)?;
    let mut header: Vec<String> = vec!["run_id".into(), "seed".into(), "iteration".into()];
    header.extend(return_columns(n));
    header.extend(["eta", "momentum", "ne_gap"].map(String::from));
    write_row(&mut w, path, &header)?;
    let seed = seed.to_string();
    for (r, returns) in records.iter().zip(curve) {
        let mut row = vec![id.to_string(), seed.clone(), r.iteration.to_string()];
        row.extend(returns.iter().map(f64::to_string));
        row.push(r.eta.to_string());
        row.push(r.momentum.to_string());
        row.push(r.ne_gap.map(|g| g.to_string()).unwrap_or_default());
        write_row(&mut w, path, &row)?;
    }
    flush(w, path)
}

fn write_summary(path: &Path, name: &str, rows: &[SummaryRow]) -> Result<()> {
    let mut w = csv_writer(path)?;
    write_row(&mut w, path, ["run_id", "seed", "metric", "agent", "value"])?;
    for r in rows {
        let agent = r.agent.map(|a| a.to_string()).unwrap_or_default();
        write_row(&mut w, path, [format!("{name}-{}", r.seed), r.seed.to_string(), r.metric.to_string(), agent, r.value.to_string()])?;
    }
    flush(w, path)
}

fn write_curve(path: &Path, n: usize, runs: &[SeedRun]) -> Result<()> {
    let mut w = csv_writer(path)?;
    let mut header = vec!["step".to_string()];
    header.extend((0..n).map(|i| format!("mean_return_{i}")));
    write_row(&mut w, path, &header)?;
    let steps = runs.iter().map(|r| r.curve.len()).min().unwrap_or(0);
    let m = runs.len() as f64;
    for t in 0..steps {
        let mut row = vec![t.to_string()];
        for i in 0..n {
            row.push((runs.iter().map(|r| r.curve[t][i]).sum::<f64>() / m).to_string());
        }
        write_row(&mut w, path, &row)?;
    }
    flush(w, path)
}
