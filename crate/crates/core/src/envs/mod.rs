//! Benchmark environments and random game generators.
//!
//! Builders take raw reward tables, record the affine map to `[0, 1]` in
//! [`RewardScale`] and store normalized rewards.

pub mod boxpushing;

pub use boxpushing::{boxpushing, BoxPushingConfig};

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::game::{MarkovGame, RewardScale};
use crate::math::ln;
use crate::rng;

/// Normalizes raw rewards in place and returns the scale used.
pub(crate) fn normalize_rewards(raw: &mut [f64]) -> RewardScale {
    let min = raw.iter().copied().fold(f64::INFINITY, f64::min);
    let max = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let scale = RewardScale::from_range(min, max);
    for r in raw.iter_mut() {
        *r = scale.normalize(*r).clamp(0.0, 1.0);
    }
    scale
}

/// Raw team table; agent 1 picks the row, agent 2 the column.
pub const MATRIX_TEAM_RAW: [[f64; 3]; 3] = [[10.0, 0.0, -10.0], [0.0, 2.0, 0.0], [-10.0, 0.0, 10.0]];

/// Three-action coordination team game (one step, one state).
pub fn matrix_team() -> MarkovGame {
    let mut rewards = Vec::with_capacity(18);
    for row in MATRIX_TEAM_RAW {
        for r in row {
            rewards.push(r);
            rewards.push(r);
        }
    }
    let scale = normalize_rewards(&mut rewards);
    MarkovGame::new("matrix-team", 1, 1, vec![3, 3], rewards, vec![1.0; 9], vec![1.0], scale).expect("matrix team is well formed")
}

/// Raw GoodState rewards in the good state `s0`, indexed `[a][b]`; the bad
/// state `s1` pays zero.
pub const GOODSTATE_RAW: [[f64; 2]; 2] = [[-2.0, 5.0], [2.0, -2.0]];

pub const GOOD: usize = 0;
pub const BAD: usize = 1;

/// Two-state team game. The pair `(a0, b1)` moves to the good state with
/// probability `1 - eps` from either state; every other pair moves to the
/// bad state with probability `1 - eps`. Episodes start in the bad state.
pub fn goodstate(horizon: usize, eps: f64) -> MarkovGame {
    assert!(horizon >= 1, "horizon must be positive");
    assert!(eps > 0.0 && eps < 1.0, "eps must lie in (0, 1)");
    let mut rewards = Vec::with_capacity(horizon * 2 * 4 * 2);
    let mut transitions = Vec::with_capacity(horizon * 2 * 4 * 2);
    for _h in 0..horizon {
        for s in [GOOD, BAD] {
            for a in 0..2 {
                for b in 0..2 {
                    let r = if s == GOOD { GOODSTATE_RAW[a][b] } else { 0.0 };
                    rewards.extend_from_slice(&[r, r]);
                    let to_good = if (a, b) == (0, 1) { 1.0 - eps } else { eps };
                    transitions.extend_from_slice(&[to_good, 1.0 - to_good]);
                }
            }
        }
    }
    let scale = normalize_rewards(&mut rewards);
    MarkovGame::new("goodstate", horizon, 2, vec![2, 2], rewards, transitions, MarkovGame::point_mass(2, BAD), scale)
        .expect("goodstate is well formed")
}

/// Random game with i.i.d. uniform rewards and Dirichlet(1) transitions,
/// starting from state 0. With `team`, all agents share one reward draw.
pub fn random_game(seed: u64, n_agents: usize, horizon: usize, n_states: usize, n_actions: usize, team: bool) -> MarkovGame {
    let mut rng = rng::stream(seed, 0);
    let action_counts = vec![n_actions; n_agents];
    let joint: usize = action_counts.iter().product();
    let cells = horizon * n_states * joint;
    let mut rewards = Vec::with_capacity(cells * n_agents);
    let mut transitions = Vec::with_capacity(cells * n_states);
    for _ in 0..cells {
        if team {
            let r: f64 = rng.gen();
            rewards.extend(core::iter::repeat_n(r, n_agents));
        } else {
            rewards.extend((0..n_agents).map(|_| rng.gen::<f64>()));
        }
        let start = transitions.len();
        let mut total = 0.0;
        for _ in 0..n_states {
            let u: f64 = rng.gen();
            let x = -ln(1.0 - u);
            total += x;
            transitions.push(x);
        }
        let row = &mut transitions[start..];
        row.iter_mut().for_each(|p| *p /= total);
        // keep the row sum exact to machine precision
        let drift: f64 = 1.0 - row.iter().sum::<f64>();
        let largest = crate::math::argmax(row);
        row[largest] += drift;
    }
    MarkovGame::new(
        "random",
        horizon,
        n_states,
        action_counts,
        rewards,
        transitions,
        MarkovGame::point_mass(n_states, 0),
        RewardScale::IDENTITY,
    )
    .expect("random game is well formed")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_team_tables() {
        let g = matrix_team();
        assert!(g.validate().is_ok());
        let raw = |a: usize, b: usize| g.reward_scale.to_raw(g.reward(0, 0, g.joint_index(&[a, b]), 0));
        assert!((raw(0, 0) - 10.0).abs() < 1e-12);
        assert!((raw(2, 2) - 10.0).abs() < 1e-12);
        assert!((raw(1, 1) - 2.0).abs() < 1e-12);
        assert_eq!(g.reward(0, 0, g.joint_index(&[0, 2]), 0), 0.0);
        assert!(g.is_team());
    }

    #[test]
    fn goodstate_tables() {
        let g = goodstate(10, 0.1);
        let j = g.joint_index(&[0, 1]);
        assert!((g.reward_scale.to_raw(g.reward(0, GOOD, j, 0)) - 5.0).abs() < 1e-12);
        assert!((g.transition_row(3, BAD, j)[GOOD] - 0.9).abs() < 1e-15);
        // next-state law depends only on the joint action
        for h in 0..10 {
            for j in 0..4 {
                assert_eq!(g.transition_row(h, GOOD, j), g.transition_row(h, BAD, j));
            }
        }
        assert!(g.is_team());
    }

    #[test]
    fn random_games_reproducible() {
        let a = random_game(7, 2, 3, 4, 2, false);
        let b = random_game(7, 2, 3, 4, 2, false);
        assert_eq!(a, b);
        assert_ne!(a, random_game(8, 2, 3, 4, 2, false));
        let t = random_game(7, 3, 2, 2, 2, true);
        assert!(t.is_team());
        let single = random_game(1, 1, 3, 2, 3, false);
        assert!(crate::dp::joint_value_iteration(&single).is_ok());
    }
}
