mod common;

use marl_core::envs;
use marl_core::pg::{exact_policy_gradient, project_simplex, reinforce_gradient, DirectPolicy, StormSchedule, StormState, Trajectory};
use marl_core::rng::stream;
use marl_core::MarkovGame;
use proptest::prelude::*;

fn realized(policy: &DirectPolicy) -> Vec<Vec<f64>> {
    let e = policy.eps_greedy;
    policy.theta.iter().zip(&policy.action_counts).map(|(t, &a)| t.iter().map(|&x| (1.0 - e) * x + e / a as f64).collect()).collect()
}

/// Probability, states, joint actions and rewards of a partial trajectory.
type Prefix = (f64, Vec<usize>, Vec<usize>, Vec<f64>);

/// Exact expectation of the REINFORCE estimator by enumerating every
/// trajectory of a small game.
fn enumerated_reinforce(game: &MarkovGame, policy: &DirectPolicy, agent: usize) -> Vec<f64> {
    let n = game.n_agents;
    let mut out = vec![0.0; policy.theta[agent].len()];
    let tables = realized(policy);
    let mut actions = vec![0; n];
    let mut prefixes: Vec<Prefix> =
        (0..game.n_states).filter(|&s| game.initial_dist[s] > 0.0).map(|s| (game.initial_dist[s], vec![s], vec![], vec![])).collect();
    for h in 0..game.horizon {
        let mut next = Vec::new();
        for (p, states, joints, rewards) in &prefixes {
            let s = states[h];
            for j in 0..game.n_joint() {
                game.decode_joint(j, &mut actions);
                let pj: f64 =
                    actions.iter().enumerate().map(|(i, &a)| tables[i][(h * game.n_states + s) * game.action_counts[i] + a]).product();
                let mut r = rewards.clone();
                r.extend_from_slice(game.reward_row(h, s, j));
                let mut js = joints.clone();
                js.push(j);
                if h + 1 == game.horizon {
                    next.push((p * pj, states.clone(), js, r));
                } else {
                    for (t, &pt) in game.transition_row(h, s, j).iter().enumerate() {
                        if pt > 0.0 {
                            let mut st = states.clone();
                            st.push(t);
                            next.push((p * pj * pt, st, js.clone(), r.clone()));
                        }
                    }
                }
            }
        }
        prefixes = next;
    }
    for (p, states, joints, rewards) in prefixes {
        let mut acts = Vec::new();
        for &j in &joints {
            game.decode_joint(j, &mut actions);
            acts.extend_from_slice(&actions);
        }
        let returns: Vec<f64> = (0..n).map(|i| (0..game.horizon).map(|h| rewards[h * n + i]).sum()).collect();
        let traj = Trajectory { n_agents: n, states: states[..game.horizon].to_vec(), actions: acts, rewards, returns };
        for (o, g) in out.iter_mut().zip(reinforce_gradient(&traj, policy, agent).unwrap()) {
            *o += p * g;
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn gradient_matches_finite_differences(seed in any::<u64>(), n in 1usize..=3, h in 1usize..=3, s in 1usize..=2, a in 2usize..=3, eps in 0.0f64..0.5) {
        let game = envs::random_game(seed, n, h, s, a, false);
        let policy = DirectPolicy::random(&game, eps, &mut stream(seed, 1));
        let exact = exact_policy_gradient(&game, &policy).unwrap();
        let delta = 1e-5;
        for i in 0..n {
            let mut err = 0.0;
            let mut norm = 0.0;
            for c in 0..policy.theta[i].len() {
                let mut up = policy.clone();
                up.theta[i][c] += delta;
                let mut down = policy.clone();
                down.theta[i][c] -= delta;
                let fd = (common::values(&game, &realized(&up))[i] - common::values(&game, &realized(&down))[i]) / (2.0 * delta);
                err += (fd - exact[i][c]).powi(2);
                norm += exact[i][c].powi(2);
            }
            prop_assert!(err.sqrt() <= 1e-6 * norm.sqrt() + 1e-12);
        }
    }

    #[test]
    fn reinforce_bias_is_constant_within_rows(seed in any::<u64>(), h in 1usize..=3, s in 1usize..=2, eps in 0.05f64..0.5) {
        let game = envs::random_game(seed, 2, h, s, 2, false);
        let policy = DirectPolicy::random(&game, eps, &mut stream(seed, 2));
        let exact = exact_policy_gradient(&game, &policy).unwrap();
        for i in 0..2 {
            let mean = enumerated_reinforce(&game, &policy, i);
            for (row_e, row_m) in exact[i].chunks(2).zip(mean.chunks(2)) {
                let d0 = row_m[0] - row_e[0];
                let d1 = row_m[1] - row_e[1];
                prop_assert!((d0 - d1).abs() < 1e-10);
                prop_assert!(d0 >= -1e-12);
            }
            // no earlier rewards at the first step
            for (e, m) in exact[i][..s * 2].iter().zip(&mean[..s * 2]) {
                prop_assert!((e - m).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn projection_is_nearest_simplex_point(v in prop::collection::vec(-3.0f64..3.0, 1..8), probes in prop::collection::vec(prop::collection::vec(0.0f64..1.0, 8), 20)) {
        let p = project_simplex(&v).unwrap();
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(p.iter().all(|&x| x >= 0.0));
        let d = |q: &[f64]| q.iter().zip(&v).map(|(x, y)| (x - y) * (x - y)).sum::<f64>();
        let dp = d(&p);
        for probe in probes {
            let mut q = probe[..v.len()].to_vec();
            let z: f64 = q.iter().sum::<f64>().max(1e-12);
            q.iter_mut().for_each(|x| *x /= z);
            prop_assert!(dp <= d(&q) + 1e-12);
        }
        // shifting every coordinate leaves the projection unchanged
        let shifted: Vec<f64> = v.iter().map(|x| x + 0.75).collect();
        let ps = project_simplex(&shifted).unwrap();
        for (x, y) in p.iter().zip(&ps) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn storm_iterates_stay_feasible(g in prop::collection::vec(-50.0f64..50.0, 12), eta in 1e-4f64..1.0, momentum in 0.01f64..=1.0) {
        let mut state = StormState::new(StormSchedule::Constant { eta, momentum });
        let mut x = vec![0.25; 12];
        state.step(&g, &[], &mut x, 4).unwrap();
        let g2: Vec<f64> = g.iter().map(|v| -v).collect();
        state.step(&g2, &g, &mut x, 4).unwrap();
        for row in x.chunks(4) {
            prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!(row.iter().all(|&v| v >= 0.0));
        }
    }
}
