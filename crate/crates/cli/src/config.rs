//! Experiment configuration, read from TOML or JSON.
//!
//! See `configs/` at the repository root for one file per algorithm.

use std::path::{Path, PathBuf};

use marl_core::envs::{self, BoxPushingConfig};
use marl_core::pg::{Init, RewardUnits};
use marl_core::vlearning::StepRule;
use marl_core::MarkovGame;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum EnvSpec {
    MatrixTeam,
    Goodstate {
        horizon: usize,
        eps: f64,
    },
    Boxpushing(BoxPushingConfig),
    Random {
        seed: u64,
        agents: usize,
        horizon: usize,
        states: usize,
        actions: usize,
        #[serde(default)]
        team: bool,
    },
    File {
        path: PathBuf,
    },
}

impl EnvSpec {
    pub fn build(&self) -> Result<MarkovGame> {
        let game = match self {
            EnvSpec::MatrixTeam => envs::matrix_team(),
            EnvSpec::Goodstate { horizon, eps } => {
                if *horizon == 0 || !(*eps > 0.0 && *eps < 1.0) {
                    return Err(Error::Config(format!("goodstate needs horizon >= 1 and eps in (0, 1), got {horizon}, {eps}")));
                }
                envs::goodstate(*horizon, *eps)
            }
            EnvSpec::Boxpushing(cfg) => envs::boxpushing(cfg).map_err(|e| Error::Config(e.to_string()))?,
            EnvSpec::Random { seed, agents, horizon, states, actions, team } => {
                if [*agents, *horizon, *states, *actions].contains(&0) {
                    return Err(Error::Config("random game dimensions must be positive".into()));
                }
                envs::random_game(*seed, *agents, *horizon, *states, *actions, *team)
            }
            EnvSpec::File { path } => io::load_game(path)?,
        };
        Ok(game)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    VlearningCce,
    VlearningCe,
    PgExact,
    /// STORM; with `eta` and `momentum` set the schedule is constant.
    PgStorm,
    PgVanilla,
    IndependentQ,
    CentralizedOracle,
}

impl Algorithm {
    pub fn is_episodic(self) -> bool {
        matches!(self, Algorithm::VlearningCce | Algorithm::VlearningCe | Algorithm::IndependentQ)
    }

    pub fn is_pg(self) -> bool {
        matches!(self, Algorithm::PgExact | Algorithm::PgStorm | Algorithm::PgVanilla)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Hyper {
    /// Log factor; derived from `p` when absent.
    pub iota: Option<f64>,
    pub p: Option<f64>,
    pub step_rule: Option<StepRule>,
    pub eps_greedy: Option<f64>,
    pub eta: Option<f64>,
    pub momentum: Option<f64>,
    /// STORM batch constant.
    pub b: Option<f64>,
    pub init: Option<Init>,
    pub units: Option<RewardUnits>,
    pub bonus_scale: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Output {
    pub dir: PathBuf,
    /// Write the V-learning trace next to the gap report.
    pub trace: bool,
}

impl Default for Output {
    fn default() -> Self {
        Self { dir: PathBuf::from("runs"), trace: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub env: EnvSpec,
    pub algorithm: Algorithm,
    /// `K`, for the episodic learners.
    #[serde(default)]
    pub episodes: Option<usize>,
    /// `T`, for policy gradient.
    #[serde(default)]
    pub iterations: Option<usize>,
    pub seeds: Vec<u64>,
    /// Evaluate the exact NE gap every this many PG iterations; 0 disables.
    #[serde(default)]
    pub eval_every: usize,
    /// Length of the trailing window averaged in the summary; 0 means the
    /// whole run.
    #[serde(default)]
    pub window: usize,
    #[serde(default)]
    pub hyper: Hyper,
    #[serde(default)]
    pub output: Output,
}

pub const DEFAULT_P: f64 = 0.05;

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let json = match path.extension().and_then(|e| e.to_str()) {
            Some("json") => true,
            Some("toml") => false,
            _ => text.trim_start().starts_with('{'),
        };
        let cfg: Self = if json {
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
        } else {
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.name.is_empty() {
            return bad("name is empty".into());
        }
        if self.seeds.is_empty() {
            return bad("seeds is empty".into());
        }
        let mut sorted = self.seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.seeds.len() {
            return bad("seeds contain duplicates".into());
        }
        let h = &self.hyper;
        if self.algorithm.is_episodic() && !matches!(self.episodes, Some(k) if k > 0) {
            return bad(format!("{:?} needs episodes > 0", self.algorithm));
        }
        if self.algorithm.is_pg() && !matches!(self.iterations, Some(t) if t > 0) {
            return bad(format!("{:?} needs iterations > 0", self.algorithm));
        }
        if let Some(iota) = h.iota {
            if !(iota > 0.0) {
                return bad(format!("iota must be positive, got {iota}"));
            }
        }
        if let Some(p) = h.p {
            if !(p > 0.0 && p < 1.0) {
                return bad(format!("p must be in (0, 1), got {p}"));
            }
        }
        if let Some(e) = h.eps_greedy {
            if !(0.0..1.0).contains(&e) {
                return bad(format!("eps_greedy must be in [0, 1), got {e}"));
            }
        }
        if matches!(self.algorithm, Algorithm::PgStorm | Algorithm::PgVanilla) && !(h.eps_greedy.unwrap_or(0.1) > 0.0) {
            return bad("stochastic policy gradient needs eps_greedy > 0".into());
        }
        if self.algorithm == Algorithm::PgStorm && h.eta.is_some() != h.momentum.is_some() {
            return bad("pg-storm takes either both eta and momentum (constant schedule) or neither".into());
        }
        if let Some(eta) = h.eta {
            if !(eta > 0.0) {
                return bad(format!("eta must be positive, got {eta}"));
            }
        }
        if let Some(a) = h.momentum {
            if !(a > 0.0 && a <= 1.0) {
                return bad(format!("momentum must be in (0, 1], got {a}"));
            }
        }
        if let Some(StepRule::Scaled { denom }) = h.step_rule {
            if !(denom > 0.0) {
                return bad(format!("step rule denominator must be positive, got {denom}"));
            }
        }
        if let Some(c) = h.bonus_scale {
            if !(c >= 0.0) {
                return bad(format!("bonus_scale must be nonnegative, got {c}"));
            }
        }
        Ok(())
    }

    pub fn iota(&self, game: &MarkovGame) -> f64 {
        self.hyper
            .iota
            .unwrap_or_else(|| marl_core::vlearning::default_iota(game, self.episodes.unwrap_or(1), self.hyper.p.unwrap_or(DEFAULT_P)))
    }

    pub fn preset(name: &str) -> Option<Self> {
        let base = |name: &str, env: EnvSpec, algorithm: Algorithm| Self {
            name: name.to_string(),
            env,
            algorithm,
            episodes: None,
            iterations: None,
            seeds: (0..20).collect(),
            eval_every: 0,
            window: 0,
            hyper: Hyper::default(),
            output: Output { dir: PathBuf::from("runs").join(name), trace: false },
        };
        let good = EnvSpec::Goodstate { horizon: 10, eps: 0.1 };
        let cfg = match name {
            "matrix-team" => {
                let mut c = base(name, EnvSpec::MatrixTeam, Algorithm::PgStorm);
                c.iterations = Some(5000);
                c.hyper = Hyper {
                    eta: Some(1e-4),
                    momentum: Some(0.5),
                    eps_greedy: Some(0.01),
                    units: Some(RewardUnits::Raw),
                    ..Hyper::default()
                };
                c.window = 1;
                c
            }
            "goodstate-pg" => {
                let mut c = base(name, good, Algorithm::PgStorm);
                c.iterations = Some(50_000);
                c.hyper = Hyper {
                    eta: Some(1e-4),
                    momentum: Some(0.5),
                    eps_greedy: Some(0.05),
                    units: Some(RewardUnits::Raw),
                    ..Hyper::default()
                };
                c.window = 5000;
                c
            }
            "goodstate-vlearning" => {
                let mut c = base(name, good, Algorithm::VlearningCce);
                c.episodes = Some(50_000);
                c.hyper.step_rule = Some(StepRule::Scaled { denom: 5.0 });
                c.window = 5000;
                c
            }
            "goodstate-independent-q" => {
                let mut c = base(name, good, Algorithm::IndependentQ);
                c.episodes = Some(50_000);
                c.hyper.bonus_scale = Some(1.0);
                c.window = 5000;
                c
            }
            "goodstate-oracle" => {
                let mut c = base(name, good, Algorithm::CentralizedOracle);
                c.seeds = vec![0];
                c
            }
            _ => return None,
        };
        Some(cfg)
    }

    pub const PRESETS: &'static [&'static str] =
        &["matrix-team", "goodstate-pg", "goodstate-vlearning", "goodstate-independent-q", "goodstate-oracle"];
}
