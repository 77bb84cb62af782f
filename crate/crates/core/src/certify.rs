//! Exact evaluation of the certified policy replayed from a V-learning
//! trace, and upper bounds on how much one agent can gain by deviating.
//!
//! All recursions run backwards over steps with one table per layer indexed
//! by `(s, k)`. The value at `(h, s, k)` averages, over the visits `k'` of the
//! last completed stage of `(h, s)`, the one-step value of playing the
//! distributions of episode `k'` and continuing from `(h + 1, ., k')`. While
//! the first stage of `(h, s)` runs, episode `k` itself is played.

use alloc::vec;
use alloc::vec::Vec;

use crate::game::MarkovGame;
use crate::policy::joint_distribution_from;
use crate::vlearning::TraceIndex;
use crate::{Error, Result};

/// Largest trace length evaluated exactly.
pub const MAX_EXACT_EPISODES: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Kind {
    Value,
    CceDev(usize),
    CeDev(usize),
}

/// Per-agent evaluation of a certified policy, in normalized units.
#[derive(Debug, Clone, PartialEq)]
pub struct GapReport {
    pub certified_value: Vec<f64>,
    pub cce_bound: Vec<f64>,
    pub ce_bound: Vec<f64>,
}

/// `V^{π̄}_{1,i}(ρ)` for every agent.
pub fn certified_value(index: &TraceIndex<'_>, game: &MarkovGame) -> Result<Vec<f64>> {
    recursion(index, game, Kind::Value)
}

/// Deviation value minus certified value for `agent`, with the deviation
/// allowed to pick its own action freely at every step and every replayed
/// episode. Upper-bounds the coarse correlated gap.
pub fn cce_gap_bound(index: &TraceIndex<'_>, game: &MarkovGame, agent: usize) -> Result<f64> {
    check_agent(game, agent)?;
    let dev = recursion(index, game, Kind::CceDev(agent))?[0];
    Ok(dev - certified_value(index, game)?[agent])
}

/// Same with the deviation restricted to remapping the recommended action,
/// one target per recommended action. Upper-bounds the correlated gap.
pub fn ce_gap_bound(index: &TraceIndex<'_>, game: &MarkovGame, agent: usize) -> Result<f64> {
    check_agent(game, agent)?;
    let dev = recursion(index, game, Kind::CeDev(agent))?[0];
    Ok(dev - certified_value(index, game)?[agent])
}

pub fn evaluate_certified(index: &TraceIndex<'_>, game: &MarkovGame) -> Result<GapReport> {
    let certified_value = certified_value(index, game)?;
    let mut cce_bound = Vec::with_capacity(game.n_agents);
    let mut ce_bound = Vec::with_capacity(game.n_agents);
    for i in 0..game.n_agents {
        cce_bound.push(recursion(index, game, Kind::CceDev(i))?[0] - certified_value[i]);
        ce_bound.push(recursion(index, game, Kind::CeDev(i))?[0] - certified_value[i]);
    }
    Ok(GapReport { certified_value, cce_bound, ce_bound })
}

fn check_agent(game: &MarkovGame, agent: usize) -> Result<()> {
    if agent >= game.n_agents {
        return Err(Error::Dimension { what: "agent index", expected: game.n_agents, found: agent });
    }
    Ok(())
}

fn recursion(index: &TraceIndex<'_>, game: &MarkovGame, kind: Kind) -> Result<Vec<f64>> {
    let trace = index.trace();
    trace.check_game(game)?;
    if trace.episodes > MAX_EXACT_EPISODES {
        return Err(Error::TooLarge { entries: trace.episodes, limit: MAX_EXACT_EPISODES });
    }
    let (n, ss, kk, jj) = (game.n_agents, game.n_states, trace.episodes, game.n_joint());
    let width = if kind == Kind::Value { n } else { 1 };
    let acts = game.joint_action_table();
    let mut next = vec![0.0; ss * kk * width];
    let mut cur = vec![0.0; ss * kk * width];
    let mut joint = Vec::with_capacity(jj);
    let max_a = game.max_actions();
    // per-k one-step quantity: Value -> N values, Dev -> A_i values
    let mut play = vec![0.0; kk * width.max(max_a)];
    let stride = width.max(max_a);
    let mut agg = vec![0.0; stride * max_a];
    for h in (0..game.horizon).rev() {
        for s in 0..ss {
            for k in 0..kk {
                let row = &mut play[k * stride..(k + 1) * stride];
                row.iter_mut().for_each(|x| *x = 0.0);
                let cont = |j: usize, comp: usize| -> f64 {
                    if h + 1 < game.horizon {
                        game.expected_next(h, s, j, |s2| next[(s2 * kk + k) * width + comp])
                    } else {
                        0.0
                    }
                };
                match kind {
                    Kind::Value => {
                        joint_distribution_from(game, |i| index.mu(i, h, s, k), &mut joint);
                        for (j, &pj) in joint.iter().enumerate() {
                            if pj == 0.0 {
                                continue;
                            }
                            let r = game.reward_row(h, s, j);
                            for i in 0..n {
                                row[i] += pj * (r[i] + cont(j, i));
                            }
                        }
                    }
                    Kind::CceDev(i) | Kind::CeDev(i) => {
                        let ones = vec![1.0; game.action_counts[i]];
                        joint_distribution_from(game, |l| if l == i { &ones[..] } else { index.mu(l, h, s, k) }, &mut joint);
                        for (j, &pj) in joint.iter().enumerate() {
                            if pj == 0.0 {
                                continue;
                            }
                            row[acts[j * n + i]] += pj * (game.reward(h, s, j, i) + cont(j, 0));
                        }
                    }
                }
            }
            let mut cached: Option<(usize, Vec<f64>)> = None;
            for k in 0..kk {
                let out = &mut cur[(s * kk + k) * width..(s * kk + k + 1) * width];
                match index.stage(h, s, k) {
                    Some((m, list)) => {
                        if cached.as_ref().map(|c| c.0) != Some(m) {
                            let value = aggregate(kind, game, index, h, s, list, &play, stride, &mut agg);
                            cached = Some((m, value));
                        }
                        out.copy_from_slice(&cached.as_ref().unwrap().1);
                    }
                    None => {
                        let value = aggregate(kind, game, index, h, s, &[k], &play, stride, &mut agg);
                        out.copy_from_slice(&value);
                    }
                }
            }
        }
        core::mem::swap(&mut cur, &mut next);
    }
    let mut result = vec![0.0; width];
    for (s, &p) in game.initial_dist.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        for k in 0..kk {
            for c in 0..width {
                result[c] += p * next[(s * kk + k) * width + c] / kk as f64;
            }
        }
    }
    Ok(result)
}

#[allow(clippy::too_many_arguments)]
fn aggregate(
    kind: Kind,
    game: &MarkovGame,
    index: &TraceIndex<'_>,
    h: usize,
    s: usize,
    list: &[usize],
    play: &[f64],
    stride: usize,
    agg: &mut [f64],
) -> Vec<f64> {
    let w = 1.0 / list.len() as f64;
    match kind {
        Kind::Value => {
            let mut out = vec![0.0; game.n_agents];
            for &k in list {
                for (o, x) in out.iter_mut().zip(&play[k * stride..]) {
                    *o += w * x;
                }
            }
            out
        }
        Kind::CceDev(i) => {
            let a = game.action_counts[i];
            let mut totals = vec![0.0; a];
            for &k in list {
                for (t, x) in totals.iter_mut().zip(&play[k * stride..k * stride + a]) {
                    *t += w * x;
                }
            }
            vec![totals.into_iter().fold(f64::NEG_INFINITY, f64::max)]
        }
        Kind::CeDev(i) => {
            // agg[a][a'] = mean_j mu^{k_j}(a) * G_{k_j}(a')
            let a = game.action_counts[i];
            let m = &mut agg[..a * a];
            m.iter_mut().for_each(|x| *x = 0.0);
            for &k in list {
                let mu = index.mu(i, h, s, k);
                let g = &play[k * stride..k * stride + a];
                for from in 0..a {
                    if mu[from] == 0.0 {
                        continue;
                    }
                    for to in 0..a {
                        m[from * a + to] += w * mu[from] * g[to];
                    }
                }
            }
            let total = (0..a).map(|from| m[from * a..(from + 1) * a].iter().copied().fold(f64::NEG_INFINITY, f64::max)).sum();
            vec![total]
        }
    }
}

/// `||μ - e_{BR(ν)}||² + ||ν - e_{BR(μ)}||²` for a one-shot two-agent game,
/// best responses by enumeration with ties to the lowest index.
pub fn l2_equilibrium_gap(game: &MarkovGame, strategies: &[Vec<f64>]) -> Result<f64> {
    if game.horizon != 1 || game.n_states != 1 || game.n_agents != 2 {
        return Err(Error::NotOneShot);
    }
    if strategies.len() != 2 {
        return Err(Error::Dimension { what: "strategies", expected: 2, found: strategies.len() });
    }
    for (i, st) in strategies.iter().enumerate() {
        if st.len() != game.action_counts[i] {
            return Err(Error::Dimension { what: "strategy", expected: game.action_counts[i], found: st.len() });
        }
    }
    let a1 = game.action_counts[1];
    let mut gap = 0.0;
    for i in 0..2 {
        let other = &strategies[1 - i];
        let own = &strategies[i];
        let payoff: Vec<f64> = (0..game.action_counts[i])
            .map(|a| {
                (0..game.action_counts[1 - i])
                    .map(|b| {
                        let j = if i == 0 { a * a1 + b } else { b * a1 + a };
                        other[b] * game.reward(0, 0, j, i)
                    })
                    .sum()
            })
            .collect();
        let best = crate::math::argmax(&payoff);
        gap += own
            .iter()
            .enumerate()
            .map(|(a, &p)| {
                let d = p - if a == best { 1.0 } else { 0.0 };
                d * d
            })
            .sum::<f64>();
    }
    Ok(gap)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dp::evaluate_policy;
    use crate::envs;
    use crate::policy::ProductPolicy;
    use crate::vlearning::{run_vlearning, Mode, PolicyTrace, StepRule, VLearningConfig};

    fn one_shot_trace(game: &MarkovGame, dists: &[Vec<Vec<f64>>]) -> PolicyTrace {
        // dists[k][i] is agent i's distribution in episode k
        let kk = dists.len();
        PolicyTrace {
            horizon: 1,
            n_states: 1,
            action_counts: game.action_counts.clone(),
            episodes: kk,
            states: vec![0; kk],
            stage_counts: vec![0; kk],
            joint_actions: vec![0; kk],
            dists: (0..game.n_agents).map(|i| dists.iter().flat_map(|d| d[i].clone()).collect()).collect(),
            final_tables: (0..game.n_agents).map(|i| dists[kk - 1][i].clone()).collect(),
        }
    }

    #[test]
    fn zero_reward_game_is_zero() {
        let mut g = envs::random_game(2, 2, 3, 2, 2, false);
        g.rewards.iter_mut().for_each(|r| *r = 0.0);
        let cfg = VLearningConfig { mode: Mode::Cce, episodes: 40, iota: 1.0, step_rule: StepRule::Theory };
        let run = run_vlearning(&g, &cfg, 1).unwrap();
        let idx = TraceIndex::new(&run.trace).unwrap();
        let rep = evaluate_certified(&idx, &g).unwrap();
        assert_eq!(rep.certified_value, vec![0.0, 0.0]);
        assert_eq!(rep.cce_bound, vec![0.0, 0.0]);
        assert_eq!(rep.ce_bound, vec![0.0, 0.0]);
    }

    #[test]
    fn single_episode_matches_policy_evaluation() {
        let g = envs::random_game(5, 2, 3, 1, 3, false);
        let cfg = VLearningConfig { mode: Mode::Cce, episodes: 1, iota: 1.0, step_rule: StepRule::Theory };
        let run = run_vlearning(&g, &cfg, 9).unwrap();
        let tables = (0..2).map(|i| (0..3).flat_map(|h| run.trace.dist(i, 0, h).to_vec()).collect()).collect();
        let policy = ProductPolicy::from_tables(3, 1, vec![3, 3], tables).unwrap();
        let exact = evaluate_policy(&g, &policy).unwrap();
        let idx = TraceIndex::new(&run.trace).unwrap();
        let v = certified_value(&idx, &g).unwrap();
        for i in 0..2 {
            assert!((v[i] - exact.initial_value(&g.initial_dist, i)).abs() < 1e-12);
        }
    }

    #[test]
    fn pure_nash_trace_has_zero_bounds() {
        let g = envs::matrix_team();
        let ne = vec![vec![1.0, 0.0, 0.0], vec![1.0, 0.0, 0.0]];
        let trace = one_shot_trace(&g, &vec![ne; 7]);
        let idx = TraceIndex::new(&trace).unwrap();
        for i in 0..2 {
            assert!(cce_gap_bound(&idx, &g, i).unwrap().abs() < 1e-10);
            assert!(ce_gap_bound(&idx, &g, i).unwrap().abs() < 1e-10);
        }
    }

    #[test]
    fn ce_bound_matches_modification_enumeration() {
        let g = envs::random_game(13, 2, 1, 1, 2, false);
        let dists = vec![
            vec![vec![0.3, 0.7], vec![0.6, 0.4]],
            vec![vec![0.9, 0.1], vec![0.2, 0.8]],
            vec![vec![0.5, 0.5], vec![1.0, 0.0]],
            vec![vec![0.1, 0.9], vec![0.5, 0.5]],
        ];
        let trace = one_shot_trace(&g, &dists);
        let idx = TraceIndex::new(&trace).unwrap();
        let r = |a: usize, b: usize| g.reward(0, 0, a * 2 + b, 0);
        // episodes replayed for each starting k (H = 1: stages {0}, {1, 2}, ...)
        let replays: Vec<Vec<usize>> = vec![vec![0], vec![0], vec![0], vec![1, 2]];
        let mut dev = 0.0;
        let mut val = 0.0;
        for list in &replays {
            let w = 1.0 / list.len() as f64;
            let mut best = f64::NEG_INFINITY;
            for code in 0..4 {
                let psi = [code & 1, (code >> 1) & 1];
                let mut total = 0.0;
                for &k in list {
                    for a in 0..2 {
                        for b in 0..2 {
                            total += w * dists[k][0][a] * dists[k][1][b] * r(psi[a], b);
                        }
                    }
                }
                best = f64::max(best, total);
            }
            dev += best / 4.0;
            for &k in list {
                for a in 0..2 {
                    for b in 0..2 {
                        val += w * dists[k][0][a] * dists[k][1][b] * r(a, b) / 4.0;
                    }
                }
            }
        }
        assert!((ce_gap_bound(&idx, &g, 0).unwrap() - (dev - val)).abs() < 1e-12);
    }

    #[test]
    fn single_action_agent_has_zero_ce_bound() {
        let g = MarkovGame::new("one", 1, 1, vec![1, 2], vec![0.2, 0.9, 0.4, 0.1], vec![1.0, 1.0], vec![1.0], Default::default()).unwrap();
        let trace = one_shot_trace(&g, &[vec![vec![1.0], vec![0.3, 0.7]], vec![vec![1.0], vec![0.6, 0.4]]]);
        let idx = TraceIndex::new(&trace).unwrap();
        assert!(ce_gap_bound(&idx, &g, 0).unwrap().abs() < 1e-15);
    }

    #[test]
    fn bounds_are_ordered_on_learned_traces() {
        for seed in 0..4 {
            let g = envs::random_game(seed, 2, 3, 2, 2, false);
            for mode in [Mode::Cce, Mode::Ce] {
                let cfg = VLearningConfig { mode, episodes: 150, iota: 0.5, step_rule: StepRule::Theory };
                let run = run_vlearning(&g, &cfg, seed).unwrap();
                let idx = TraceIndex::new(&run.trace).unwrap();
                let rep = evaluate_certified(&idx, &g).unwrap();
                for i in 0..2 {
                    assert!(rep.cce_bound[i] >= -1e-12);
                    assert!(rep.ce_bound[i] + 1e-12 >= rep.cce_bound[i]);
                    assert!((0.0..=3.0).contains(&rep.certified_value[i]));
                }
            }
        }
    }

    #[test]
    fn l2_gap_examples() {
        let g = envs::matrix_team();
        let e0 = vec![1.0, 0.0, 0.0];
        assert_eq!(l2_equilibrium_gap(&g, &[e0.clone(), e0]).unwrap(), 0.0);
        let u = vec![1.0 / 3.0; 3];
        let b1 = vec![0.0, 1.0, 0.0];
        assert!((l2_equilibrium_gap(&g, &[u, b1]).unwrap() - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(l2_equilibrium_gap(&envs::goodstate(2, 0.1), &[vec![1.0, 0.0], vec![1.0, 0.0]]), Err(Error::NotOneShot));
    }

    #[test]
    fn l2_gap_constant_game() {
        let g = MarkovGame::new("flat", 1, 1, vec![2, 2], vec![0.5; 8], vec![1.0; 4], vec![1.0], Default::default()).unwrap();
        let s = [vec![1.0, 0.0], vec![1.0, 0.0]];
        assert_eq!(l2_equilibrium_gap(&g, &s).unwrap(), 0.0);
    }
}
