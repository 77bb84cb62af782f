use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::stage_ends;
use crate::game::MarkovGame;
use crate::math::abs;
use crate::rng::{sample_categorical, uniform_index, StreamRng};
use crate::{Error, Result};

/// Everything needed to replay the certified policy of a V-learning run.
///
/// Per episode `k` and step `h` the trace keeps the visited state, the
/// number of visits to it in the running stage, the realized joint action
/// and every agent's distribution at that state. Distributions at states
/// that were not visited are recovered from the next visit (or from the
/// final tables), since a bandit only moves when its state is visited.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PolicyTrace {
    pub horizon: usize,
    pub n_states: usize,
    pub action_counts: Vec<usize>,
    pub episodes: usize,
    /// `K x H`
    pub states: Vec<usize>,
    /// `K x H`, visits to `(h, s_h^k)` in its running stage before episode `k`.
    pub stage_counts: Vec<usize>,
    /// `K x H` joint action indices.
    pub joint_actions: Vec<usize>,
    /// Per agent, `K x H x A_i`.
    pub dists: Vec<Vec<f64>>,
    /// Per agent, `H x S x A_i` after the last episode.
    pub final_tables: Vec<Vec<f64>>,
}

impl PolicyTrace {
    pub fn empty(game: &MarkovGame, episodes: usize) -> Self {
        let steps = episodes * game.horizon;
        Self {
            horizon: game.horizon,
            n_states: game.n_states,
            action_counts: game.action_counts.clone(),
            episodes,
            states: Vec::with_capacity(steps),
            stage_counts: Vec::with_capacity(steps),
            joint_actions: Vec::with_capacity(steps),
            dists: game.action_counts.iter().map(|&a| Vec::with_capacity(steps * a)).collect(),
            final_tables: Vec::new(),
        }
    }

    pub fn n_agents(&self) -> usize {
        self.action_counts.len()
    }

    pub fn state(&self, k: usize, h: usize) -> usize {
        self.states[k * self.horizon + h]
    }

    /// Agent `i`'s distribution at the state visited in episode `k`, step `h`.
    pub fn dist(&self, agent: usize, k: usize, h: usize) -> &[f64] {
        let a = self.action_counts[agent];
        let start = (k * self.horizon + h) * a;
        &self.dists[agent][start..start + a]
    }

    pub fn final_row(&self, agent: usize, h: usize, s: usize) -> &[f64] {
        let a = self.action_counts[agent];
        let start = (h * self.n_states + s) * a;
        &self.final_tables[agent][start..start + a]
    }

    pub fn validate(&self) -> Result<()> {
        let steps = self.episodes * self.horizon;
        let check = |what: &'static str, expected: usize, found: usize| {
            if expected == found {
                Ok(())
            } else {
                Err(Error::Dimension { what, expected, found })
            }
        };
        if self.episodes == 0 {
            return Err(Error::TraceMismatch("trace has no episodes".into()));
        }
        check("trace states", steps, self.states.len())?;
        check("trace stage counts", steps, self.stage_counts.len())?;
        check("trace joint actions", steps, self.joint_actions.len())?;
        check("trace agents", self.n_agents(), self.dists.len())?;
        check("trace final tables", self.n_agents(), self.final_tables.len())?;
        if let Some(&s) = self.states.iter().find(|&&s| s >= self.n_states) {
            return Err(Error::TraceMismatch(format!("state {s} out of range")));
        }
        for (i, &a) in self.action_counts.iter().enumerate() {
            check("trace distributions", steps * a, self.dists[i].len())?;
            check("trace final table", self.horizon * self.n_states * a, self.final_tables[i].len())?;
            for (row, chunk) in self.dists[i].chunks(a).chain(self.final_tables[i].chunks(a)).enumerate() {
                let sum: f64 = chunk.iter().sum();
                if chunk.iter().any(|&p| !(p >= 0.0)) || abs(sum - 1.0) > 1e-9 {
                    return Err(Error::NotStochastic { row, sum });
                }
            }
        }
        Ok(())
    }

    pub fn check_game(&self, game: &MarkovGame) -> Result<()> {
        if self.horizon != game.horizon || self.n_states != game.n_states || self.action_counts != game.action_counts {
            return Err(Error::TraceMismatch(format!(
                "trace shape (H={}, S={}, A={:?}) does not match game (H={}, S={}, A={:?})",
                self.horizon, self.n_states, self.action_counts, game.horizon, game.n_states, game.action_counts
            )));
        }
        Ok(())
    }
}

/// Visit lists per `(h, s)` and the stage boundaries over them.
#[derive(Debug, Clone)]
pub struct TraceIndex<'t> {
    trace: &'t PolicyTrace,
    /// Episodes visiting `(h, s)`, in order; indexed `h * S + s`.
    visits: Vec<Vec<usize>>,
    ends: Vec<usize>,
}

impl<'t> TraceIndex<'t> {
    pub fn new(trace: &'t PolicyTrace) -> Result<Self> {
        trace.validate()?;
        let mut visits = vec![Vec::new(); trace.horizon * trace.n_states];
        for k in 0..trace.episodes {
            for h in 0..trace.horizon {
                visits[h * trace.n_states + trace.state(k, h)].push(k);
            }
        }
        Ok(Self { trace, visits, ends: stage_ends(trace.horizon, trace.episodes) })
    }

    pub fn trace(&self) -> &'t PolicyTrace {
        self.trace
    }

    pub fn visits(&self, h: usize, s: usize) -> &[usize] {
        &self.visits[h * self.trace.n_states + s]
    }

    /// The last stage of `(h, s)` completed before episode `k`, as its index
    /// and the episodes of its visits. `None` while the first stage runs.
    pub fn stage(&self, h: usize, s: usize, k: usize) -> Option<(usize, &[usize])> {
        let visits = self.visits(h, s);
        let before = visits.partition_point(|&e| e < k);
        let done = self.ends.partition_point(|&end| end <= before);
        if done == 0 {
            return None;
        }
        let start = if done >= 2 { self.ends[done - 2] } else { 0 };
        Some((done - 1, &visits[start..self.ends[done - 1]]))
    }

    /// `μ_{h,i}^k(. | s)`: the distribution agent `i` would have played at
    /// `(h, s)` in episode `k`.
    pub fn mu(&self, agent: usize, h: usize, s: usize, k: usize) -> &'t [f64] {
        let visits = self.visits(h, s);
        let next = visits.partition_point(|&e| e < k);
        match visits.get(next) {
            Some(&e) => self.trace.dist(agent, e, h),
            None => self.trace.final_row(agent, h, s),
        }
    }
}

/// One episode of the certified policy. Draws `k` uniformly, then at every
/// step replaces `k` by a uniform visit of the last completed stage of the
/// current `(h, s)` (keeping `k` while the first stage runs) and plays the
/// product of the stored distributions of episode `k`. All agents share
/// `rng`. Returns normalized per-agent returns.
pub fn certified_rollout(index: &TraceIndex<'_>, game: &MarkovGame, rng: &mut StreamRng) -> Result<Vec<f64>> {
    let trace = index.trace();
    trace.check_game(game)?;
    let n = game.n_agents;
    let mut k = uniform_index(trace.episodes, rng);
    let mut s = sample_categorical(&game.initial_dist, rng);
    let mut actions = vec![0; n];
    let mut returns = vec![0.0; n];
    for h in 0..game.horizon {
        if let Some((_, list)) = index.stage(h, s, k) {
            k = list[uniform_index(list.len(), rng)];
        }
        for (i, a) in actions.iter_mut().enumerate() {
            *a = sample_categorical(index.mu(i, h, s, k), rng);
        }
        let j = game.joint_index(&actions);
        for (ret, r) in returns.iter_mut().zip(game.reward_row(h, s, j)) {
            *ret += r;
        }
        s = sample_categorical(game.transition_row(h, s, j), rng);
    }
    Ok(returns)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs;
    use crate::rng::stream;
    use crate::vlearning::{run_vlearning, Mode, StepRule, VLearningConfig};

    fn cfg(episodes: usize) -> VLearningConfig {
        VLearningConfig { mode: Mode::Cce, episodes, iota: 1.0, step_rule: StepRule::Theory }
    }

    #[test]
    fn recorded_stage_counts_match_index() {
        let g = envs::goodstate(3, 0.2);
        let run = run_vlearning(&g, &cfg(200), 3).unwrap();
        let idx = TraceIndex::new(&run.trace).unwrap();
        let ends = stage_ends(3, 200);
        for k in 0..200 {
            for h in 0..3 {
                let s = run.trace.state(k, h);
                let before = idx.visits(h, s).partition_point(|&e| e < k);
                let last_end = ends.iter().copied().rfind(|&e| e <= before).unwrap_or(0);
                assert_eq!(run.trace.stage_counts[k * 3 + h], before - last_end);
            }
        }
    }

    #[test]
    fn reconstructed_mu_matches_stored() {
        let g = envs::goodstate(2, 0.3);
        let run = run_vlearning(&g, &cfg(60), 8).unwrap();
        let idx = TraceIndex::new(&run.trace).unwrap();
        for k in 0..60 {
            for h in 0..2 {
                let s = run.trace.state(k, h);
                assert_eq!(idx.mu(1, h, s, k), run.trace.dist(1, k, h));
            }
        }
        assert_eq!(idx.mu(0, 1, 0, 60), run.trace.final_row(0, 1, 0));
    }

    #[test]
    fn stage_lists_are_previous_stage_visits() {
        let g = envs::matrix_team();
        let run = run_vlearning(&g, &cfg(10), 1).unwrap();
        let idx = TraceIndex::new(&run.trace).unwrap();
        // H = 1: stages of length 1, 2, 4, ...
        assert!(idx.stage(0, 0, 0).is_none());
        assert_eq!(idx.stage(0, 0, 1), Some((0, &[0usize][..])));
        assert_eq!(idx.stage(0, 0, 2), Some((0, &[0usize][..])));
        assert_eq!(idx.stage(0, 0, 3), Some((1, &[1usize, 2][..])));
        assert_eq!(idx.stage(0, 0, 7), Some((2, &[3usize, 4, 5, 6][..])));
    }

    #[test]
    fn single_episode_trace_replays_itself() {
        let g = envs::goodstate(4, 0.1);
        let run = run_vlearning(&g, &cfg(1), 4).unwrap();
        let idx = TraceIndex::new(&run.trace).unwrap();
        for h in 0..4 {
            assert!(idx.stage(h, run.trace.state(0, h), 0).is_none());
        }
    }

    #[test]
    fn deterministic_replay_reproduces_return() {
        // deterministic dynamics and point-mass distributions
        let g = MarkovGame::new(
            "det",
            2,
            2,
            vec![2],
            vec![0.0, 1.0, 0.5, 0.25, 0.0, 1.0, 0.5, 0.25],
            vec![1.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 1.0],
            vec![1.0, 0.0],
            Default::default(),
        )
        .unwrap();
        let trace = PolicyTrace {
            horizon: 2,
            n_states: 2,
            action_counts: vec![2],
            episodes: 1,
            states: vec![0, 1],
            stage_counts: vec![0, 0],
            joint_actions: vec![1, 0],
            dists: vec![vec![0.0, 1.0, 1.0, 0.0]],
            final_tables: vec![vec![0.0, 1.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0]],
        };
        let idx = TraceIndex::new(&trace).unwrap();
        let mut rng = stream(0, 0);
        for _ in 0..10 {
            let ret = certified_rollout(&idx, &g, &mut rng).unwrap();
            assert_eq!(ret, vec![1.0 + 0.5]);
        }
    }

    #[test]
    fn mismatched_game_rejected() {
        let g = envs::goodstate(2, 0.3);
        let run = run_vlearning(&g, &cfg(5), 8).unwrap();
        let idx = TraceIndex::new(&run.trace).unwrap();
        let other = envs::goodstate(3, 0.3);
        assert!(matches!(certified_rollout(&idx, &other, &mut stream(0, 0)), Err(Error::TraceMismatch(_))));
    }
}
