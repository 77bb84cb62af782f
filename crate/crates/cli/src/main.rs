use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use marl::config::EnvSpec;
use marl::harness::{self, RunOptions};
use marl::{io, Error, ExperimentConfig, Result};
use marl_core::baselines::centralized_oracle;
use marl_core::certify::{evaluate_certified, MAX_EXACT_EPISODES};
use marl_core::envs::BoxPushingConfig;
use marl_core::vlearning::TraceIndex;

#[derive(Parser)]
#[command(name = "marl", version, about = "Run and evaluate tabular Markov game learners")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment from a config file or a named preset.
    Run {
        /// TOML or JSON experiment config.
        config: Option<PathBuf>,
        /// matrix-team, goodstate-pg, goodstate-vlearning, goodstate-independent-q or goodstate-oracle.
        #[arg(long, conflicts_with = "config")]
        preset: Option<String>,
        /// Comma-separated seed list, replacing the configured one.
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
        /// Output directory, replacing `output.dir`.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        episodes: Option<usize>,
        #[arg(long)]
        iterations: Option<usize>,
        /// Overwrite a non-empty output directory.
        #[arg(long)]
        force: bool,
    },
    /// Certified value and gap bounds of a V-learning trace.
    EvalGap {
        /// trace.jsonl written by a V-learning run.
        trace: PathBuf,
        /// Game JSON the trace was recorded on.
        #[arg(long)]
        game: PathBuf,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Optimal joint value of a game file.
    Oracle { game: PathBuf },
    /// Write one of the built-in games as JSON.
    MakeEnv {
        name: EnvName,
        #[arg(long, default_value_t = 10)]
        horizon: usize,
        #[arg(long, default_value_t = 0.1)]
        eps: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 2)]
        agents: usize,
        #[arg(long, default_value_t = 2)]
        states: usize,
        #[arg(long, default_value_t = 2)]
        actions: usize,
        #[arg(long)]
        /// Random games only: one shared reward for all agents.
        #[arg(long)]
        team: bool,
        /// Defaults to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum EnvName {
    MatrixTeam,
    Goodstate,
    Boxpushing,
    Random,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

// A closed pipe downstream (`| head`) is not an error worth reporting.
fn say(line: &str) {
    let _ = writeln!(std::io::stdout().lock(), "{line}");
}

fn print_json<T: serde::Serialize>(value: &T) {
    say(&serde_json::to_string_pretty(value).expect("serializable"));
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Run { config, preset, seeds, out, episodes, iterations, force } => {
            let mut cfg = match (config, preset) {
                (Some(path), _) => ExperimentConfig::load(&path)?,
                (None, Some(name)) => ExperimentConfig::preset(&name)
                    .ok_or_else(|| Error::Config(format!("unknown preset {name}; known: {}", ExperimentConfig::PRESETS.join(", "))))?,
                (None, None) => return Err(Error::Config("give a config file or --preset".into())),
            };
            if let Some(s) = seeds {
                cfg.seeds = s;
            }
            if let Some(dir) = out {
                cfg.output.dir = dir;
            }
            if episodes.is_some() {
                cfg.episodes = episodes;
            }
            if iterations.is_some() {
                cfg.iterations = iterations;
            }
            let outcome = harness::run(&cfg, RunOptions { force })?;
            let mut metrics: Vec<(&str, Option<usize>)> = outcome.rows.iter().map(|r| (r.metric, r.agent)).collect();
            metrics.sort();
            metrics.dedup();
            for (metric, agent) in metrics {
                let v = outcome.values(metric, agent);
                let mean = v.iter().sum::<f64>() / v.len() as f64;
                let agent = agent.map(|a| format!("[{a}]")).unwrap_or_default();
                say(&format!("{metric}{agent}: mean {mean:.6} over {} seeds", v.len()));
            }
            say(&format!("wrote {}", outcome.dir.display()));
        }
        Command::EvalGap { trace, game, out } => {
            let game = io::load_game(&game)?;
            let t = io::read_trace(&trace)?;
            t.check_game(&game).map_err(|e| Error::Config(e.to_string()))?;
            if t.episodes > MAX_EXACT_EPISODES {
                return Err(Error::Config(format!(
                    "trace has {} episodes; exact evaluation is limited to {MAX_EXACT_EPISODES}",
                    t.episodes
                )));
            }
            let report = evaluate_certified(&TraceIndex::new(&t)?, &game)?;
            match out {
                Some(path) => io::write_gap_report(&path, &report)?,
                None => print_json(&io::gap_report_json(&report)),
            }
        }
        Command::Oracle { game } => {
            let g = io::load_game(&game)?;
            let o = centralized_oracle(&g)?;
            let raw = |v: f64| g.reward_scale.value_to_raw(v, g.horizon);
            print_json(&serde_json::json!({
                "value": o.value,
                "value_raw": raw(o.value),
                "agent_values": o.agent_values,
                "agent_values_raw": o.agent_values.iter().map(|&v| raw(v)).collect::<Vec<_>>(),
            }));
        }
        Command::MakeEnv { name, horizon, eps, seed, agents, states, actions, team, out } => {
            let spec = match name {
                EnvName::MatrixTeam => EnvSpec::MatrixTeam,
                EnvName::Goodstate => EnvSpec::Goodstate { horizon, eps },
                EnvName::Boxpushing => EnvSpec::Boxpushing(BoxPushingConfig { horizon, ..Default::default() }),
                EnvName::Random => EnvSpec::Random { seed, agents, horizon, states, actions, team },
            };
            let game = spec.build()?;
            match out {
                Some(path) => io::save_game(&path, &game)?,
                None => print_json(&game),
            }
        }
    }
    Ok(())
}
