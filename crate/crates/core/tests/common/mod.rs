#![allow(dead_code)]

use marl_core::rng::StreamRng;
use marl_core::{MarkovGame, ProductPolicy};
use rand::Rng;

/// `V_{1,i}(rho)` for every agent by backward induction over explicit joint
/// actions. Tables need not be normalized.
pub fn values(game: &MarkovGame, tables: &[Vec<f64>]) -> Vec<f64> {
    let (n, ss) = (game.n_agents, game.n_states);
    let mut next = vec![0.0; ss * n];
    let mut actions = vec![0; n];
    for h in (0..game.horizon).rev() {
        let mut cur = vec![0.0; ss * n];
        for s in 0..ss {
            for j in 0..game.n_joint() {
                game.decode_joint(j, &mut actions);
                let prob: f64 = actions.iter().enumerate().map(|(i, &a)| tables[i][(h * ss + s) * game.action_counts[i] + a]).product();
                let p = game.transition_row(h, s, j);
                for i in 0..n {
                    let future: f64 = (0..ss).map(|t| p[t] * next[t * n + i]).sum();
                    cur[s * n + i] += prob * (game.reward(h, s, j, i) + future);
                }
            }
        }
        next = cur;
    }
    (0..n).map(|i| (0..ss).map(|s| game.initial_dist[s] * next[s * n + i]).sum()).collect()
}

pub fn random_tables(game: &MarkovGame, rng: &mut StreamRng) -> Vec<Vec<f64>> {
    game.action_counts
        .iter()
        .map(|&a| {
            let mut t: Vec<f64> = (0..game.horizon * game.n_states * a).map(|_| rng.gen::<f64>() + 1e-3).collect();
            for row in t.chunks_mut(a) {
                let z: f64 = row.iter().sum();
                row.iter_mut().for_each(|x| *x /= z);
            }
            t
        })
        .collect()
}

pub fn product(game: &MarkovGame, tables: Vec<Vec<f64>>) -> ProductPolicy {
    ProductPolicy::from_tables(game.horizon, game.n_states, game.action_counts.clone(), tables).unwrap()
}

/// Best value agent `i` can reach against `tables` by enumerating every
/// deterministic policy of its own.
pub fn brute_force_best(game: &MarkovGame, tables: &[Vec<f64>], agent: usize) -> f64 {
    let a = game.action_counts[agent];
    let cells = game.horizon * game.n_states;
    let mut best = f64::NEG_INFINITY;
    for code in 0..a.pow(cells as u32) {
        let mut t = tables.to_vec();
        t[agent].iter_mut().for_each(|x| *x = 0.0);
        let mut c = code;
        for cell in 0..cells {
            t[agent][cell * a + c % a] = 1.0;
            c /= a;
        }
        best = best.max(values(game, &t)[agent]);
    }
    best
}
