//! Markov product policies: one table `pi_{h,i}(a | s)` per agent.

use alloc::vec;
use alloc::vec::Vec;

use crate::game::MarkovGame;
use crate::math::abs;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ProductPolicy {
    pub horizon: usize,
    pub n_states: usize,
    pub action_counts: Vec<usize>,
    /// Per agent, `H x S x A_i`.
    pub tables: Vec<Vec<f64>>,
}

impl ProductPolicy {
    pub fn uniform(horizon: usize, n_states: usize, action_counts: &[usize]) -> Self {
        let tables = action_counts.iter().map(|&a| vec![1.0 / a as f64; horizon * n_states * a]).collect();
        Self { horizon, n_states, action_counts: action_counts.to_vec(), tables }
    }

    pub fn uniform_for(game: &MarkovGame) -> Self {
        Self::uniform(game.horizon, game.n_states, &game.action_counts)
    }

    /// Deterministic policy; `actions[i][h * S + s]` is agent `i`'s action.
    pub fn deterministic(horizon: usize, n_states: usize, action_counts: &[usize], actions: &[Vec<usize>]) -> Self {
        let mut policy = Self::uniform(horizon, n_states, action_counts);
        for (i, table) in policy.tables.iter_mut().enumerate() {
            let a_count = action_counts[i];
            table.iter_mut().for_each(|p| *p = 0.0);
            for (cell, &a) in actions[i].iter().enumerate() {
                table[cell * a_count + a] = 1.0;
            }
        }
        policy
    }

    /// Every agent plays the same action at every `(h, s)`.
    pub fn constant(game: &MarkovGame, actions: &[usize]) -> Self {
        let cells = game.horizon * game.n_states;
        let per_agent: Vec<Vec<usize>> = actions.iter().map(|&a| vec![a; cells]).collect();
        Self::deterministic(game.horizon, game.n_states, &game.action_counts, &per_agent)
    }

    pub fn from_tables(horizon: usize, n_states: usize, action_counts: Vec<usize>, tables: Vec<Vec<f64>>) -> Result<Self> {
        let policy = Self { horizon, n_states, action_counts, tables };
        policy.validate()?;
        Ok(policy)
    }

    pub fn n_agents(&self) -> usize {
        self.action_counts.len()
    }

    #[inline]
    pub fn row(&self, agent: usize, h: usize, s: usize) -> &[f64] {
        let a = self.action_counts[agent];
        let start = (h * self.n_states + s) * a;
        &self.tables[agent][start..start + a]
    }

    #[inline]
    pub fn row_mut(&mut self, agent: usize, h: usize, s: usize) -> &mut [f64] {
        let a = self.action_counts[agent];
        let start = (h * self.n_states + s) * a;
        &mut self.tables[agent][start..start + a]
    }

    pub fn validate(&self) -> Result<()> {
        if self.tables.len() != self.action_counts.len() {
            return Err(Error::Dimension { what: "policy tables", expected: self.action_counts.len(), found: self.tables.len() });
        }
        for (agent, table) in self.tables.iter().enumerate() {
            let expected = self.horizon * self.n_states * self.action_counts[agent];
            if table.len() != expected {
                return Err(Error::Dimension { what: "policy table", expected, found: table.len() });
            }
            for h in 0..self.horizon {
                for s in 0..self.n_states {
                    let row = self.row(agent, h, s);
                    let sum: f64 = row.iter().sum();
                    if row.iter().any(|&p| !(p >= 0.0)) || abs(sum - 1.0) > 1e-12 {
                        return Err(Error::PolicyRow { agent, h, s, sum });
                    }
                }
            }
        }
        Ok(())
    }

    /// Dimension check against a game.
    pub fn check_matches(&self, game: &MarkovGame) -> Result<()> {
        if self.action_counts != game.action_counts {
            return Err(Error::Dimension { what: "policy agents/actions", expected: game.n_agents, found: self.action_counts.len() });
        }
        if self.horizon != game.horizon {
            return Err(Error::Dimension { what: "policy horizon", expected: game.horizon, found: self.horizon });
        }
        if self.n_states != game.n_states {
            return Err(Error::Dimension { what: "policy states", expected: game.n_states, found: self.n_states });
        }
        Ok(())
    }

    /// Product distribution over joint actions at `(h, s)`, written into `out`.
    pub fn joint_distribution(&self, game: &MarkovGame, h: usize, s: usize, out: &mut Vec<f64>) {
        joint_distribution_from(game, |i| self.row(i, h, s), out);
    }
}

/// Product of per-agent distributions over the flattened joint action space.
pub fn joint_distribution_from<'a>(game: &MarkovGame, rows: impl Fn(usize) -> &'a [f64], out: &mut Vec<f64>) {
    out.clear();
    out.push(1.0);
    for i in 0..game.n_agents {
        let row = rows(i);
        let (len, width) = (out.len(), row.len());
        out.resize(len * width, 0.0);
        // expand in place from the back; writes never overtake unread entries
        for idx in (0..len).rev() {
            let p = out[idx];
            for a in (0..width).rev() {
                out[idx * width + a] = p * row[a];
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs;

    #[test]
    fn joint_distribution_is_product() {
        let g = envs::matrix_team();
        let mut p = ProductPolicy::uniform_for(&g);
        p.row_mut(0, 0, 0).copy_from_slice(&[0.5, 0.5, 0.0]);
        let mut joint = Vec::new();
        p.joint_distribution(&g, 0, 0, &mut joint);
        assert_eq!(joint.len(), 9);
        assert!((joint[0] - 0.5 / 3.0).abs() < 1e-15);
        assert_eq!(joint[6], 0.0);
        assert!((joint.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn validate_rejects_bad_row() {
        let g = envs::matrix_team();
        let mut p = ProductPolicy::uniform_for(&g);
        p.row_mut(1, 0, 0)[0] = 0.9;
        assert!(matches!(p.validate(), Err(Error::PolicyRow { agent: 1, .. })));
    }
}
