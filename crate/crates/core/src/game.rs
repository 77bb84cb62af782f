//! The tabular episodic Markov game.
//!
//! Tensors are dense and row-major. Joint actions are flattened with agent 0
//! as the most significant digit, so the reward of agent `i` lives at
//! `[h][s][a_0]..[a_{N-1}][i]` and the transition law at
//! `[h][s][a_0]..[a_{N-1}][s']`. Steps are 0-based in code: `h` runs over
//! `0..horizon` and the value at step `h` is bounded by `horizon - h`.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::math::abs;
use crate::{Error, Result};

const SUM_TOL: f64 = 1e-12;

/// Affine map from the stored `[0, 1]` rewards back to the raw scale of an
/// environment: `raw = scale * r + offset`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RewardScale {
    pub scale: f64,
    pub offset: f64,
}

impl Default for RewardScale {
    fn default() -> Self {
        Self::IDENTITY
    }
}

impl RewardScale {
    pub const IDENTITY: Self = Self { scale: 1.0, offset: 0.0 };

    /// Maps `[min, max]` onto `[0, 1]`.
    pub fn from_range(min: f64, max: f64) -> Self {
        if max > min {
            Self { scale: max - min, offset: min }
        } else {
            Self { scale: 1.0, offset: min }
        }
    }

    pub fn normalize(&self, raw: f64) -> f64 {
        (raw - self.offset) / self.scale
    }

    pub fn to_raw(&self, reward: f64) -> f64 {
        self.scale * reward + self.offset
    }

    /// Raw value of a normalized return accumulated over `steps` rewards.
    pub fn value_to_raw(&self, value: f64, steps: usize) -> f64 {
        self.scale * value + self.offset * steps as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MarkovGame {
    #[cfg_attr(feature = "serde", serde(default))]
    pub name: String,
    pub n_agents: usize,
    pub horizon: usize,
    pub n_states: usize,
    pub action_counts: Vec<usize>,
    /// `H x S x A_1 x .. x A_N x N`
    pub rewards: Vec<f64>,
    /// `H x S x A_1 x .. x A_N x S`
    pub transitions: Vec<f64>,
    pub initial_dist: Vec<f64>,
    #[cfg_attr(feature = "serde", serde(default))]
    pub reward_scale: RewardScale,
}

impl MarkovGame {
    /// Builds and validates a game.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: impl Into<String>,
        horizon: usize,
        n_states: usize,
        action_counts: Vec<usize>,
        rewards: Vec<f64>,
        transitions: Vec<f64>,
        initial_dist: Vec<f64>,
        reward_scale: RewardScale,
    ) -> Result<Self> {
        let game = Self {
            name: name.into(),
            n_agents: action_counts.len(),
            horizon,
            n_states,
            action_counts,
            rewards,
            transitions,
            initial_dist,
            reward_scale,
        };
        game.validate()?;
        Ok(game)
    }

    pub fn n_joint(&self) -> usize {
        self.action_counts.iter().product()
    }

    pub fn max_actions(&self) -> usize {
        self.action_counts.iter().copied().max().unwrap_or(0)
    }

    /// Point mass on `state`.
    pub fn point_mass(n_states: usize, state: usize) -> Vec<f64> {
        let mut d = vec![0.0; n_states];
        d[state] = 1.0;
        d
    }

    /// Checks every structural invariant and reports the first violation.
    pub fn validate(&self) -> Result<()> {
        let n = self.n_agents;
        let (hs, s_count) = (self.horizon, self.n_states);
        if n == 0 || self.action_counts.len() != n {
            return Err(Error::Dimension { what: "action_counts", expected: n.max(1), found: self.action_counts.len() });
        }
        if hs == 0 {
            return Err(Error::InvalidParameter { name: "horizon", value: 0.0 });
        }
        if s_count == 0 {
            return Err(Error::InvalidParameter { name: "n_states", value: 0.0 });
        }
        if let Some(&a) = self.action_counts.iter().find(|&&a| a == 0) {
            return Err(Error::InvalidParameter { name: "action_count", value: a as f64 });
        }
        let joint = self.n_joint();
        let cells = hs * s_count * joint;
        if self.rewards.len() != cells * n {
            return Err(Error::Dimension { what: "rewards", expected: cells * n, found: self.rewards.len() });
        }
        if self.transitions.len() != cells * s_count {
            return Err(Error::Dimension { what: "transitions", expected: cells * s_count, found: self.transitions.len() });
        }
        if self.initial_dist.len() != s_count {
            return Err(Error::Dimension { what: "initial_dist", expected: s_count, found: self.initial_dist.len() });
        }
        if !self.reward_scale.scale.is_finite() || self.reward_scale.scale <= 0.0 {
            return Err(Error::InvalidParameter { name: "reward_scale.scale", value: self.reward_scale.scale });
        }
        for h in 0..hs {
            for s in 0..s_count {
                for j in 0..joint {
                    for (i, &r) in self.reward_row(h, s, j).iter().enumerate() {
                        if !(0.0..=1.0).contains(&r) {
                            return Err(Error::RewardOutOfRange { h, s, joint: j, agent: i, value: r });
                        }
                    }
                    let row = self.transition_row(h, s, j);
                    let mut sum = 0.0;
                    for (next, &p) in row.iter().enumerate() {
                        if !(p >= 0.0) {
                            return Err(Error::NegativeTransition { h, s, joint: j, next, p });
                        }
                        sum += p;
                    }
                    if abs(sum - 1.0) > SUM_TOL {
                        return Err(Error::TransitionRowSum { h, s, joint: j, sum });
                    }
                }
            }
        }
        let mut sum = 0.0;
        for &p in &self.initial_dist {
            if !(p >= 0.0) {
                return Err(Error::InitialDistribution { sum: p });
            }
            sum += p;
        }
        if abs(sum - 1.0) > SUM_TOL {
            return Err(Error::InitialDistribution { sum });
        }
        Ok(())
    }

    #[inline]
    fn cell(&self, h: usize, s: usize, joint: usize) -> usize {
        (h * self.n_states + s) * self.n_joint() + joint
    }

    #[inline]
    pub fn reward(&self, h: usize, s: usize, joint: usize, agent: usize) -> f64 {
        self.rewards[self.cell(h, s, joint) * self.n_agents + agent]
    }

    /// Rewards of all agents for one `(h, s, joint)` cell.
    #[inline]
    pub fn reward_row(&self, h: usize, s: usize, joint: usize) -> &[f64] {
        let start = self.cell(h, s, joint) * self.n_agents;
        &self.rewards[start..start + self.n_agents]
    }

    #[inline]
    pub fn transition_row(&self, h: usize, s: usize, joint: usize) -> &[f64] {
        let start = self.cell(h, s, joint) * self.n_states;
        &self.transitions[start..start + self.n_states]
    }

    /// Flattens per-agent actions into a joint index.
    pub fn joint_index(&self, actions: &[usize]) -> usize {
        actions.iter().zip(&self.action_counts).fold(0, |acc, (&a, &count)| acc * count + a)
    }

    /// Inverse of [`joint_index`](Self::joint_index).
    pub fn decode_joint(&self, mut joint: usize, out: &mut [usize]) {
        for i in (0..self.n_agents).rev() {
            let count = self.action_counts[i];
            out[i] = joint % count;
            joint /= count;
        }
    }

    /// Table of decoded joint actions, `n_joint x n_agents`.
    pub fn joint_action_table(&self) -> Vec<usize> {
        let n = self.n_agents;
        let mut table = vec![0; self.n_joint() * n];
        for (j, chunk) in table.chunks_mut(n).enumerate() {
            self.decode_joint(j, chunk);
        }
        table
    }

    /// True when every agent receives the same reward everywhere.
    pub fn is_team(&self) -> bool {
        self.rewards.chunks(self.n_agents).all(|row| row.iter().all(|&r| r == row[0]))
    }

    /// `E_{s' ~ P_h(.|s,a)} values[s']`.
    #[inline]
    pub fn expected_next(&self, h: usize, s: usize, joint: usize, values: impl Fn(usize) -> f64) -> f64 {
        self.transition_row(h, s, joint).iter().enumerate().filter(|(_, &p)| p > 0.0).map(|(next, &p)| p * values(next)).sum()
    }
}
