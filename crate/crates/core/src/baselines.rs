//! Reference learners: independent optimistic Q-learning, where each agent
//! treats the others as part of the environment, and a centralized planner
//! that controls the joint action with full knowledge of the model.

use alloc::vec;
use alloc::vec::Vec;

use crate::dp::{evaluate_policy, joint_value_iteration};
use crate::env::{drive, EpisodeRecord, LocalLearner, LocalTransition};
use crate::game::MarkovGame;
use crate::math::{argmax, sqrt};
use crate::policy::ProductPolicy;
use crate::rng::StreamRng;
use crate::{Error, Result};

/// Tabular Q-learning over the agent's own actions with step size
/// `(H + 1)/(H + t)`, a Hoeffding bonus `c sqrt(H³ ι / t)` and greedy play.
#[derive(Debug, Clone, PartialEq)]
pub struct QLearner {
    horizon: usize,
    n_states: usize,
    n_actions: usize,
    bonus_scale: f64,
    iota: f64,
    /// `H x S x A`
    q: Vec<f64>,
    /// `(H + 1) x S`
    v: Vec<f64>,
    counts: Vec<usize>,
}

impl QLearner {
    pub fn new(horizon: usize, n_states: usize, n_actions: usize, bonus_scale: f64, iota: f64) -> Self {
        let mut q = vec![0.0; horizon * n_states * n_actions];
        let mut v = vec![0.0; (horizon + 1) * n_states];
        for h in 0..horizon {
            let top = (horizon - h) as f64;
            q[h * n_states * n_actions..(h + 1) * n_states * n_actions].iter_mut().for_each(|x| *x = top);
            v[h * n_states..(h + 1) * n_states].iter_mut().for_each(|x| *x = top);
        }
        Self { horizon, n_states, n_actions, bonus_scale, iota, q, v, counts: vec![0; horizon * n_states * n_actions] }
    }

    pub fn q_row(&self, h: usize, s: usize) -> &[f64] {
        let start = (h * self.n_states + s) * self.n_actions;
        &self.q[start..start + self.n_actions]
    }

    pub fn value(&self, h: usize, s: usize) -> f64 {
        self.v[h * self.n_states + s]
    }

    pub fn greedy(&self, h: usize, s: usize) -> usize {
        argmax(self.q_row(h, s))
    }

    /// Greedy actions as an `H x S` table.
    pub fn greedy_table(&self) -> Vec<usize> {
        (0..self.horizon).flat_map(|h| (0..self.n_states).map(move |s| (h, s))).map(|(h, s)| self.greedy(h, s)).collect()
    }
}

impl LocalLearner for QLearner {
    fn act(&mut self, step: usize, state: usize, _rng: &mut StreamRng) -> usize {
        self.greedy(step, state)
    }

    fn observe(&mut self, t: &LocalTransition) -> Result<()> {
        if t.action >= self.n_actions {
            return Err(Error::ActionOutOfRange { action: t.action, n_actions: self.n_actions });
        }
        let (h, s) = (t.step, t.state);
        let idx = (h * self.n_states + s) * self.n_actions + t.action;
        self.counts[idx] += 1;
        let n = self.counts[idx] as f64;
        let hf = self.horizon as f64;
        let alpha = (hf + 1.0) / (hf + n);
        let bonus = self.bonus_scale * sqrt(hf * hf * hf * self.iota / n);
        let next = t.next_state.map_or(0.0, |s2| self.value(h + 1, s2));
        self.q[idx] = (1.0 - alpha) * self.q[idx] + alpha * (t.reward + next + bonus);
        let best = self.q_row(h, s).iter().copied().fold(f64::NEG_INFINITY, f64::max);
        self.v[h * self.n_states + s] = best.min(hf - h as f64);
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndependentQConfig {
    pub episodes: usize,
    pub bonus_scale: f64,
    pub iota: f64,
}

#[derive(Debug, Clone)]
pub struct IndependentQRun {
    pub learners: Vec<QLearner>,
    pub records: Vec<EpisodeRecord>,
}

impl IndependentQRun {
    /// The agents' current greedy policies.
    pub fn greedy_policy(&self, game: &MarkovGame) -> ProductPolicy {
        let actions: Vec<Vec<usize>> = self.learners.iter().map(QLearner::greedy_table).collect();
        ProductPolicy::deterministic(game.horizon, game.n_states, &game.action_counts, &actions)
    }
}

pub fn independent_q(game: &MarkovGame, config: &IndependentQConfig, seed: u64) -> Result<IndependentQRun> {
    if !(config.bonus_scale >= 0.0) {
        return Err(Error::InvalidParameter { name: "bonus_scale", value: config.bonus_scale });
    }
    let mut learners: Vec<QLearner> =
        game.action_counts.iter().map(|&a| QLearner::new(game.horizon, game.n_states, a, config.bonus_scale, config.iota)).collect();
    let records = drive(game, &mut learners, config.episodes, seed, |_, _, _, _| {}, |_, _, _, _| {})?;
    Ok(IndependentQRun { learners, records })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CentralizedOracle {
    /// Optimal mean-over-agents value `max V_1(ρ)`, normalized.
    pub value: f64,
    /// Each agent's value under the optimal joint plan, normalized.
    pub agent_values: Vec<f64>,
    pub policy: ProductPolicy,
}

/// Exact backward induction over joint actions.
pub fn centralized_oracle(game: &MarkovGame) -> Result<CentralizedOracle> {
    let opt = joint_value_iteration(game)?;
    let policy = opt.to_policy(game);
    let values = evaluate_policy(game, &policy)?;
    Ok(CentralizedOracle {
        value: opt.initial_value(&game.initial_dist),
        agent_values: (0..game.n_agents).map(|i| values.initial_value(&game.initial_dist, i)).collect(),
        policy,
    })
}
