use alloc::vec::Vec;

use rand::Rng;

use super::{exact_policy_gradient, project_rows, reinforce_gradient, sample_trajectory, DirectPolicy, StormSchedule, StormState};
use crate::dp::{evaluate_policy, ne_gap};
use crate::game::MarkovGame;
use crate::rng::stream;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum PgMode {
    /// Exact gradients, `η = 1 / (4 N A_max H³)` unless overridden.
    ExactPga,
    /// REINFORCE with the theory STORM schedule.
    Storm,
    /// REINFORCE with a constant step and no momentum.
    VanillaSga,
    /// REINFORCE with constant step and constant momentum.
    ConstantStorm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum Init {
    Uniform,
    /// Flat Dirichlet rows drawn from the run seed.
    Random,
}

/// Units of the returns fed to the REINFORCE estimator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum RewardUnits {
    Normalized,
    Raw,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PgConfig {
    pub mode: PgMode,
    pub iterations: usize,
    pub eps_greedy: f64,
    pub init: Init,
    pub eta: Option<f64>,
    pub momentum: Option<f64>,
    /// Free constant of the theory schedule.
    pub b: f64,
    pub units: RewardUnits,
    /// Nash gap of the played policy every this many iterations; 0 disables.
    pub eval_every: usize,
}

impl PgConfig {
    pub fn new(mode: PgMode, iterations: usize) -> Self {
        Self {
            mode,
            iterations,
            eps_greedy: 0.1,
            init: Init::Uniform,
            eta: None,
            momentum: None,
            b: 1.0,
            units: RewardUnits::Normalized,
            eval_every: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PgRecord {
    pub iteration: usize,
    /// Normalized per-agent return: sampled for stochastic modes, exact
    /// `V_1(ρ)` for exact mode.
    pub returns: Vec<f64>,
    pub eta: f64,
    pub momentum: f64,
    pub ne_gap: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct PgRun {
    pub last: DirectPolicy,
    /// Iterate chosen uniformly among the `T` pre-update iterates.
    pub sampled: DirectPolicy,
    pub tau: usize,
    pub records: Vec<PgRecord>,
}

pub fn run_pg(game: &MarkovGame, config: &PgConfig, seed: u64) -> Result<PgRun> {
    if config.iterations == 0 {
        return Err(Error::InvalidParameter { name: "iterations", value: 0.0 });
    }
    if !(0.0..1.0).contains(&config.eps_greedy) {
        return Err(Error::InvalidParameter { name: "eps_greedy", value: config.eps_greedy });
    }
    let n = game.n_agents;
    let mut env_rng = stream(seed, 0);
    let mut aux_rng = stream(seed, n as u64 + 1);
    let mut policy = match config.init {
        Init::Uniform => DirectPolicy::uniform(game, config.eps_greedy),
        Init::Random => DirectPolicy::random(game, config.eps_greedy, &mut aux_rng),
    };
    let schedule = match config.mode {
        PgMode::ExactPga => {
            let eta = config.eta.unwrap_or(1.0 / (4.0 * n as f64 * game.max_actions() as f64 * crate::math::powi(game.horizon as f64, 3)));
            StormSchedule::Constant { eta, momentum: 1.0 }
        }
        PgMode::Storm => StormSchedule::theory(config.b, game.max_actions(), game.horizon, config.eps_greedy)?,
        PgMode::VanillaSga => StormSchedule::Constant { eta: config.eta.unwrap_or(1e-4), momentum: 1.0 },
        PgMode::ConstantStorm => StormSchedule::Constant { eta: config.eta.unwrap_or(1e-4), momentum: config.momentum.unwrap_or(0.5) },
    };
    if let StormSchedule::Constant { eta, momentum } = schedule {
        if !(eta > 0.0) {
            return Err(Error::InvalidParameter { name: "eta", value: eta });
        }
        if !(momentum > 0.0 && momentum <= 1.0) {
            return Err(Error::InvalidParameter { name: "momentum", value: momentum });
        }
    }
    let mut storms: Vec<StormState> = (0..n).map(|_| StormState::new(schedule)).collect();
    let mut previous = policy.clone();
    let mut sampled = policy.clone();
    let mut tau = 0;
    let mut records = Vec::with_capacity(config.iterations);
    for t in 0..config.iterations {
        if aux_rng.gen_range(0..=t) == 0 {
            sampled = policy.clone();
            tau = t;
        }
        let ne = if config.eval_every > 0 && t % config.eval_every == 0 { Some(ne_gap(game, &policy.realized())?.max) } else { None };
        let (eta, momentum) = (storms[0].eta(), storms[0].momentum);
        let returns = if config.mode == PgMode::ExactPga {
            let values = evaluate_policy(game, &policy.realized())?;
            let grads = exact_policy_gradient(game, &policy)?;
            for (i, g) in grads.iter().enumerate() {
                for (x, d) in policy.theta[i].iter_mut().zip(g) {
                    *x += eta * d;
                }
                project_rows(&mut policy.theta[i], game.action_counts[i])?;
            }
            (0..n).map(|i| values.initial_value(&game.initial_dist, i)).collect()
        } else {
            let traj = sample_trajectory(game, &policy, &mut env_rng);
            let fed = match config.units {
                RewardUnits::Normalized => traj.clone(),
                RewardUnits::Raw => traj.to_raw(&game.reward_scale),
            };
            let current = policy.clone();
            for (i, storm) in storms.iter_mut().enumerate() {
                let g_new = reinforce_gradient(&fed, &current, i)?;
                let g_old = if t == 0 { Vec::new() } else { reinforce_gradient(&fed, &previous, i)? };
                storm.step(&g_new, &g_old, &mut policy.theta[i], game.action_counts[i])?;
            }
            previous = current;
            traj.returns
        };
        records.push(PgRecord { iteration: t, returns, eta, momentum, ne_gap: ne });
    }
    Ok(PgRun { last: policy, sampled, tau, records })
}
