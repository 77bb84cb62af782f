//! Exact backward/forward recursions over a known game: policy evaluation,
//! occupancy measures, best responses and Nash gaps.

use alloc::vec;
use alloc::vec::Vec;

use crate::game::MarkovGame;
use crate::math::argmax;
use crate::policy::ProductPolicy;
use crate::{Error, Result};

/// Exact `V` and `Q` for every agent.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueTable {
    pub n_agents: usize,
    pub horizon: usize,
    pub n_states: usize,
    pub n_joint: usize,
    /// `(H + 1) x S x N`, the last layer is zero.
    pub v: Vec<f64>,
    /// `H x S x J x N`
    pub q: Vec<f64>,
}

impl ValueTable {
    #[inline]
    pub fn v(&self, h: usize, s: usize, agent: usize) -> f64 {
        self.v[(h * self.n_states + s) * self.n_agents + agent]
    }

    #[inline]
    pub fn q(&self, h: usize, s: usize, joint: usize, agent: usize) -> f64 {
        self.q[((h * self.n_states + s) * self.n_joint + joint) * self.n_agents + agent]
    }

    pub fn advantage(&self, h: usize, s: usize, joint: usize, agent: usize) -> f64 {
        self.q(h, s, joint, agent) - self.v(h, s, agent)
    }

    /// `V_{1,i}(rho)`.
    pub fn initial_value(&self, rho: &[f64], agent: usize) -> f64 {
        rho.iter().enumerate().map(|(s, &p)| p * self.v(0, s, agent)).sum()
    }
}

pub fn evaluate_policy(game: &MarkovGame, policy: &ProductPolicy) -> Result<ValueTable> {
    policy.check_matches(game)?;
    let (n, hs, ss, jj) = (game.n_agents, game.horizon, game.n_states, game.n_joint());
    let mut v = vec![0.0; (hs + 1) * ss * n];
    let mut q = vec![0.0; hs * ss * jj * n];
    let mut joint = Vec::with_capacity(jj);
    for h in (0..hs).rev() {
        let (head, next) = v.split_at_mut((h + 1) * ss * n);
        let cur = &mut head[h * ss * n..];
        for s in 0..ss {
            policy.joint_distribution(game, h, s, &mut joint);
            for (j, &pj) in joint.iter().enumerate() {
                let rewards = game.reward_row(h, s, j);
                let trans = game.transition_row(h, s, j);
                let qbase = ((h * ss + s) * jj + j) * n;
                for i in 0..n {
                    let mut cont = 0.0;
                    if h + 1 < hs {
                        for (s2, &p) in trans.iter().enumerate() {
                            cont += p * next[s2 * n + i];
                        }
                    }
                    let qv = rewards[i] + cont;
                    q[qbase + i] = qv;
                    cur[s * n + i] += pj * qv;
                }
            }
        }
    }
    Ok(ValueTable { n_agents: n, horizon: hs, n_states: ss, n_joint: jj, v, q })
}

/// State-visitation probabilities `d_h(s)` from the initial distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyTable {
    pub horizon: usize,
    pub n_states: usize,
    pub d: Vec<f64>,
}

impl OccupancyTable {
    pub fn get(&self, h: usize, s: usize) -> f64 {
        self.d[h * self.n_states + s]
    }

    pub fn row(&self, h: usize) -> &[f64] {
        &self.d[h * self.n_states..(h + 1) * self.n_states]
    }
}

pub fn occupancy(game: &MarkovGame, policy: &ProductPolicy) -> Result<OccupancyTable> {
    policy.check_matches(game)?;
    let (hs, ss) = (game.horizon, game.n_states);
    let mut d = vec![0.0; hs * ss];
    d[..ss].copy_from_slice(&game.initial_dist);
    let mut joint = Vec::new();
    for h in 0..hs.saturating_sub(1) {
        for s in 0..ss {
            let ds = d[h * ss + s];
            if ds == 0.0 {
                continue;
            }
            policy.joint_distribution(game, h, s, &mut joint);
            for (j, &pj) in joint.iter().enumerate() {
                if pj == 0.0 {
                    continue;
                }
                for (s2, &p) in game.transition_row(h, s, j).iter().enumerate() {
                    d[(h + 1) * ss + s2] += ds * pj * p;
                }
            }
        }
    }
    Ok(OccupancyTable { horizon: hs, n_states: ss, d })
}

/// A deterministic Markov best response and its exact value.
#[derive(Debug, Clone, PartialEq)]
pub struct BestResponse {
    pub agent: usize,
    pub n_actions: usize,
    pub n_states: usize,
    /// `H x S` chosen actions.
    pub actions: Vec<usize>,
    /// `(H + 1) x S`
    pub values: Vec<f64>,
}

impl BestResponse {
    pub fn action(&self, h: usize, s: usize) -> usize {
        self.actions[h * self.n_states + s]
    }

    pub fn value(&self, h: usize, s: usize) -> f64 {
        self.values[h * self.n_states + s]
    }

    pub fn initial_value(&self, rho: &[f64]) -> f64 {
        rho.iter().enumerate().map(|(s, &p)| p * self.value(0, s)).sum()
    }

    /// One-hot `H x S x A_i` table for the responding agent.
    pub fn policy_table(&self) -> Vec<f64> {
        let mut table = vec![0.0; self.actions.len() * self.n_actions];
        for (cell, &a) in self.actions.iter().enumerate() {
            table[cell * self.n_actions + a] = 1.0;
        }
        table
    }

    /// `policy` with the responding agent's table replaced by this response.
    pub fn apply_to(&self, policy: &ProductPolicy) -> ProductPolicy {
        let mut out = policy.clone();
        out.tables[self.agent] = self.policy_table();
        out
    }
}

/// Backward induction on the single-agent MDP induced by the other agents'
/// policies. Ties go to the lowest action index.
pub fn best_response(game: &MarkovGame, policy: &ProductPolicy, agent: usize) -> Result<BestResponse> {
    policy.check_matches(game)?;
    if agent >= game.n_agents {
        return Err(Error::Dimension { what: "agent index", expected: game.n_agents, found: agent });
    }
    let (n, hs, ss, jj) = (game.n_agents, game.horizon, game.n_states, game.n_joint());
    let a_count = game.action_counts[agent];
    let acts = game.joint_action_table();
    let mut values = vec![0.0; (hs + 1) * ss];
    let mut actions = vec![0; hs * ss];
    let mut q_own = vec![0.0; a_count];
    for h in (0..hs).rev() {
        for s in 0..ss {
            q_own.iter_mut().for_each(|x| *x = 0.0);
            for j in 0..jj {
                let ja = &acts[j * n..(j + 1) * n];
                let mut w = 1.0;
                for k in (0..n).filter(|&k| k != agent) {
                    w *= policy.row(k, h, s)[ja[k]];
                }
                if w == 0.0 {
                    continue;
                }
                let cont = if h + 1 < hs { game.expected_next(h, s, j, |s2| values[(h + 1) * ss + s2]) } else { 0.0 };
                q_own[ja[agent]] += w * (game.reward(h, s, j, agent) + cont);
            }
            let best = argmax(&q_own);
            actions[h * ss + s] = best;
            values[h * ss + s] = q_own[best];
        }
    }
    Ok(BestResponse { agent, n_actions: a_count, n_states: ss, actions, values })
}

#[derive(Debug, Clone, PartialEq)]
pub struct NashGap {
    pub per_agent: Vec<f64>,
    pub max: f64,
}

/// `gap_i = V^{BR}_{1,i}(rho) - V^{pi}_{1,i}(rho)`.
pub fn ne_gap(game: &MarkovGame, policy: &ProductPolicy) -> Result<NashGap> {
    let values = evaluate_policy(game, policy)?;
    let mut per_agent = Vec::with_capacity(game.n_agents);
    for i in 0..game.n_agents {
        let br = best_response(game, policy, i)?;
        per_agent.push(br.initial_value(&game.initial_dist) - values.initial_value(&game.initial_dist, i));
    }
    let max = per_agent.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(NashGap { per_agent, max })
}

/// Potential of an identical-interest game: the common value `V_1(rho)`.
pub fn potential_value(game: &MarkovGame, policy: &ProductPolicy) -> Result<f64> {
    if !game.is_team() {
        return Err(Error::NotTeamGame);
    }
    Ok(evaluate_policy(game, policy)?.initial_value(&game.initial_dist, 0))
}

/// Optimal deterministic joint plan for the agents' mean reward.
#[derive(Debug, Clone, PartialEq)]
pub struct JointOptimum {
    pub n_states: usize,
    /// `(H + 1) x S`
    pub values: Vec<f64>,
    /// `H x S` joint action indices.
    pub actions: Vec<usize>,
}

impl JointOptimum {
    pub fn value(&self, h: usize, s: usize) -> f64 {
        self.values[h * self.n_states + s]
    }

    pub fn initial_value(&self, rho: &[f64]) -> f64 {
        rho.iter().enumerate().map(|(s, &p)| p * self.value(0, s)).sum()
    }

    /// The plan as a product policy (deterministic joint actions factor).
    pub fn to_policy(&self, game: &MarkovGame) -> ProductPolicy {
        let mut per_agent = vec![vec![0; self.actions.len()]; game.n_agents];
        let mut buf = vec![0; game.n_agents];
        for (cell, &j) in self.actions.iter().enumerate() {
            game.decode_joint(j, &mut buf);
            for (i, &a) in buf.iter().enumerate() {
                per_agent[i][cell] = a;
            }
        }
        ProductPolicy::deterministic(game.horizon, game.n_states, &game.action_counts, &per_agent)
    }
}

pub const JOINT_TABLE_LIMIT: usize = 1_000_000;

/// Backward induction over the joint action space.
pub fn joint_value_iteration(game: &MarkovGame) -> Result<JointOptimum> {
    let (n, hs, ss, jj) = (game.n_agents, game.horizon, game.n_states, game.n_joint());
    let entries = hs * ss * jj;
    if entries > JOINT_TABLE_LIMIT {
        return Err(Error::TooLarge { entries, limit: JOINT_TABLE_LIMIT });
    }
    let mut values = vec![0.0; (hs + 1) * ss];
    let mut actions = vec![0; hs * ss];
    let mut q = vec![0.0; jj];
    for h in (0..hs).rev() {
        for s in 0..ss {
            for (j, qj) in q.iter_mut().enumerate() {
                let r: f64 = game.reward_row(h, s, j).iter().sum::<f64>() / n as f64;
                let cont = if h + 1 < hs { game.expected_next(h, s, j, |s2| values[(h + 1) * ss + s2]) } else { 0.0 };
                *qj = r + cont;
            }
            let best = argmax(&q);
            actions[h * ss + s] = best;
            values[h * ss + s] = q[best];
        }
    }
    Ok(JointOptimum { n_states: ss, values, actions })
}
