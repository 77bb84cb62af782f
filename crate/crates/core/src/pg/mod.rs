//! Independent projected policy gradient for potential games under direct
//! parameterization with uniform exploration mixed in.

mod run;
mod storm;

pub use run::{run_pg, Init, PgConfig, PgMode, PgRecord, PgRun, RewardUnits};
pub use storm::{smoothness_constants, storm_constants, StormSchedule, StormState};

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::dp::{evaluate_policy, occupancy};
use crate::game::{MarkovGame, RewardScale};
use crate::math::ln;
use crate::policy::{joint_distribution_from, ProductPolicy};
use crate::rng::sample_categorical;
use crate::{Error, Result};

/// Euclidean projection onto the probability simplex.
pub fn project_simplex(v: &[f64]) -> Result<Vec<f64>> {
    let mut out = v.to_vec();
    project_simplex_in_place(&mut out)?;
    Ok(out)
}

pub fn project_simplex_in_place(v: &mut [f64]) -> Result<()> {
    if v.iter().any(|x| x.is_nan()) {
        return Err(Error::Nan);
    }
    let mut sorted = v.to_vec();
    sorted.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (j, &u) in sorted.iter().enumerate() {
        cum += u;
        let t = (cum - 1.0) / (j + 1) as f64;
        if u - t > 0.0 {
            theta = t;
        }
    }
    v.iter_mut().for_each(|x| *x = (*x - theta).max(0.0));
    Ok(())
}

/// Projects every `A`-sized row of an `H x S x A` table.
pub fn project_rows(table: &mut [f64], n_actions: usize) -> Result<()> {
    table.chunks_mut(n_actions).try_for_each(project_simplex_in_place)
}

/// `θ` per agent on the simplex at every `(h, s)`; the played policy is
/// `(1 - ε̃) θ + ε̃ / A_i`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DirectPolicy {
    pub horizon: usize,
    pub n_states: usize,
    pub action_counts: Vec<usize>,
    pub eps_greedy: f64,
    /// Per agent, `H x S x A_i`.
    pub theta: Vec<Vec<f64>>,
}

impl DirectPolicy {
    pub fn uniform(game: &MarkovGame, eps_greedy: f64) -> Self {
        let p = ProductPolicy::uniform_for(game);
        Self { horizon: game.horizon, n_states: game.n_states, action_counts: game.action_counts.clone(), eps_greedy, theta: p.tables }
    }

    /// Every row drawn from a flat Dirichlet.
    pub fn random<R: Rng + ?Sized>(game: &MarkovGame, eps_greedy: f64, rng: &mut R) -> Self {
        let mut policy = Self::uniform(game, eps_greedy);
        for (i, table) in policy.theta.iter_mut().enumerate() {
            for row in table.chunks_mut(game.action_counts[i]) {
                row.iter_mut().for_each(|x| *x = -ln(1.0 - rng.gen::<f64>()));
                let total: f64 = row.iter().sum();
                row.iter_mut().for_each(|x| *x /= total);
            }
        }
        policy
    }

    pub fn from_theta(game: &MarkovGame, eps_greedy: f64, theta: Vec<Vec<f64>>) -> Result<Self> {
        if !(0.0..1.0).contains(&eps_greedy) {
            return Err(Error::InvalidParameter { name: "eps_greedy", value: eps_greedy });
        }
        ProductPolicy::from_tables(game.horizon, game.n_states, game.action_counts.clone(), theta.clone())?.check_matches(game)?;
        Ok(Self { horizon: game.horizon, n_states: game.n_states, action_counts: game.action_counts.clone(), eps_greedy, theta })
    }

    pub fn theta_row(&self, agent: usize, h: usize, s: usize) -> &[f64] {
        let a = self.action_counts[agent];
        let start = (h * self.n_states + s) * a;
        &self.theta[agent][start..start + a]
    }

    /// Played probability of `a` at `(h, s)`.
    #[inline]
    pub fn prob(&self, agent: usize, h: usize, s: usize, a: usize) -> f64 {
        let n = self.action_counts[agent];
        (1.0 - self.eps_greedy) * self.theta[agent][(h * self.n_states + s) * n + a] + self.eps_greedy / n as f64
    }

    pub fn realized(&self) -> ProductPolicy {
        let tables = self
            .theta
            .iter()
            .zip(&self.action_counts)
            .map(|(t, &n)| t.iter().map(|&x| (1.0 - self.eps_greedy) * x + self.eps_greedy / n as f64).collect())
            .collect();
        ProductPolicy { horizon: self.horizon, n_states: self.n_states, action_counts: self.action_counts.clone(), tables }
    }
}

/// `∂V_{1,i}(ρ)/∂θ_i = (1 - ε̃) d_h(s) E_{a_{-i}}[Q_{h,i}(s, a, a_{-i})]` for
/// every agent.
pub fn exact_policy_gradient(game: &MarkovGame, policy: &DirectPolicy) -> Result<Vec<Vec<f64>>> {
    let realized = policy.realized();
    let values = evaluate_policy(game, &realized)?;
    let occ = occupancy(game, &realized)?;
    let n = game.n_agents;
    let acts = game.joint_action_table();
    let mut weights = Vec::with_capacity(game.n_joint());
    let mut grads: Vec<Vec<f64>> = policy.theta.iter().map(|t| vec![0.0; t.len()]).collect();
    for (i, grad) in grads.iter_mut().enumerate() {
        let a_count = game.action_counts[i];
        let ones = vec![1.0; a_count];
        for h in 0..game.horizon {
            for s in 0..game.n_states {
                let d = occ.get(h, s);
                if d == 0.0 {
                    continue;
                }
                joint_distribution_from(game, |l| if l == i { &ones[..] } else { realized.row(l, h, s) }, &mut weights);
                let row = &mut grad[(h * game.n_states + s) * a_count..][..a_count];
                for (j, &w) in weights.iter().enumerate() {
                    row[acts[j * n + i]] += w * values.q(h, s, j, i);
                }
                row.iter_mut().for_each(|x| *x *= (1.0 - policy.eps_greedy) * d);
            }
        }
    }
    Ok(grads)
}

/// One sampled episode.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub n_agents: usize,
    /// `H`
    pub states: Vec<usize>,
    /// `H x N`
    pub actions: Vec<usize>,
    /// `H x N`
    pub rewards: Vec<f64>,
    /// `N`
    pub returns: Vec<f64>,
}

impl Trajectory {
    pub fn horizon(&self) -> usize {
        self.states.len()
    }

    pub fn action(&self, h: usize, agent: usize) -> usize {
        self.actions[h * self.n_agents + agent]
    }

    /// Rewards and returns mapped back to raw units.
    pub fn to_raw(&self, scale: &RewardScale) -> Trajectory {
        let rewards: Vec<f64> = self.rewards.iter().map(|&r| scale.to_raw(r)).collect();
        let mut returns = vec![0.0; self.n_agents];
        for row in rewards.chunks(self.n_agents) {
            returns.iter_mut().zip(row).for_each(|(g, r)| *g += r);
        }
        Trajectory { rewards, returns, ..self.clone() }
    }
}

pub fn sample_trajectory<R: Rng + ?Sized>(game: &MarkovGame, policy: &DirectPolicy, rng: &mut R) -> Trajectory {
    let n = game.n_agents;
    let mut traj = Trajectory {
        n_agents: n,
        states: Vec::with_capacity(game.horizon),
        actions: Vec::with_capacity(game.horizon * n),
        rewards: Vec::with_capacity(game.horizon * n),
        returns: vec![0.0; n],
    };
    let mut probs = Vec::with_capacity(game.max_actions());
    let mut s = sample_categorical(&game.initial_dist, rng);
    let mut joint = vec![0; n];
    for h in 0..game.horizon {
        traj.states.push(s);
        for (i, a) in joint.iter_mut().enumerate() {
            probs.clear();
            probs.extend((0..game.action_counts[i]).map(|b| policy.prob(i, h, s, b)));
            *a = sample_categorical(&probs, rng);
        }
        traj.actions.extend_from_slice(&joint);
        let j = game.joint_index(&joint);
        let r = game.reward_row(h, s, j);
        traj.rewards.extend_from_slice(r);
        traj.returns.iter_mut().zip(r).for_each(|(g, x)| *g += x);
        s = sample_categorical(game.transition_row(h, s, j), rng);
    }
    traj
}

/// `R_i Σ_h ∇_θ log π_{h,i}(a_{h,i} | s_h)`: the only nonzero entry at each
/// step is `(1 - ε̃) R_i / π(a_{h,i} | s_h)` at the action taken.
pub fn reinforce_gradient(traj: &Trajectory, policy: &DirectPolicy, agent: usize) -> Result<Vec<f64>> {
    if policy.eps_greedy <= 0.0 {
        return Err(Error::ZeroExploration);
    }
    let a_count = policy.action_counts[agent];
    let mut grad = vec![0.0; policy.theta[agent].len()];
    let ret = traj.returns[agent];
    if ret == 0.0 {
        return Ok(grad);
    }
    for (h, &s) in traj.states.iter().enumerate() {
        let a = traj.action(h, agent);
        grad[(h * policy.n_states + s) * a_count + a] += (1.0 - policy.eps_greedy) * ret / policy.prob(agent, h, s, a);
    }
    Ok(grad)
}
