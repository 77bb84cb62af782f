//! Sampling facade over a [`MarkovGame`] and the per-agent observation type.

use alloc::vec;
use alloc::vec::Vec;

use crate::game::MarkovGame;
use crate::rng::{self, StreamRng};
use crate::{Error, Result};

/// What one agent sees of a single step: the state, its own action and
/// reward, and the next state. Opponents' actions and rewards are not part
/// of the type, so a learner fed through it cannot condition on them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalTransition {
    pub episode: usize,
    pub step: usize,
    pub state: usize,
    pub action: usize,
    pub reward: f64,
    /// `None` after the last step of the episode.
    pub next_state: Option<usize>,
}

/// A decentralized learner: acts from the state alone and learns only from
/// its own [`LocalTransition`]s.
pub trait LocalLearner {
    fn act(&mut self, step: usize, state: usize, rng: &mut StreamRng) -> usize;
    fn observe(&mut self, transition: &LocalTransition) -> Result<()>;
}

#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub rewards: Vec<f64>,
    pub next_state: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct EnvHandle<'g> {
    game: &'g MarkovGame,
    state: usize,
    step: usize,
    done: bool,
    rng: StreamRng,
}

impl<'g> EnvHandle<'g> {
    pub fn new(game: &'g MarkovGame, seed: u64) -> Self {
        Self::with_rng(game, rng::stream(seed, 0))
    }

    pub fn with_rng(game: &'g MarkovGame, rng: StreamRng) -> Self {
        Self { game, state: 0, step: 0, done: true, rng }
    }

    pub fn game(&self) -> &'g MarkovGame {
        self.game
    }

    /// Starts an episode; returns `s_1 ~ rho`.
    pub fn reset(&mut self) -> usize {
        self.state = rng::sample_categorical(&self.game.initial_dist, &mut self.rng);
        self.step = 0;
        self.done = false;
        self.state
    }

    pub fn state(&self) -> usize {
        self.state
    }

    pub fn step_index(&self) -> usize {
        self.step
    }

    pub fn step(&mut self, actions: &[usize]) -> Result<StepOutcome> {
        if self.done {
            return Err(Error::EpisodeFinished);
        }
        let game = self.game;
        if actions.len() != game.n_agents {
            return Err(Error::Dimension { what: "joint action", expected: game.n_agents, found: actions.len() });
        }
        for (&a, &count) in actions.iter().zip(&game.action_counts) {
            if a >= count {
                return Err(Error::ActionOutOfRange { action: a, n_actions: count });
            }
        }
        let joint = game.joint_index(actions);
        let rewards = game.reward_row(self.step, self.state, joint).to_vec();
        let next = rng::sample_categorical(game.transition_row(self.step, self.state, joint), &mut self.rng);
        self.step += 1;
        let next_state = if self.step < game.horizon {
            self.state = next;
            Some(next)
        } else {
            self.done = true;
            None
        };
        Ok(StepOutcome { rewards, next_state })
    }
}

/// Per-episode summary emitted by the episode drivers.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRecord {
    pub episode: usize,
    /// Normalized per-agent returns.
    pub returns: Vec<f64>,
}

/// Runs `episodes` episodes of independent learners. `before_act` sees the
/// learners at each step before they act, which is where traces are taken.
pub fn drive<L: LocalLearner>(
    game: &MarkovGame,
    learners: &mut [L],
    episodes: usize,
    seed: u64,
    mut before_act: impl FnMut(usize, usize, usize, &[L]),
    mut after_step: impl FnMut(usize, usize, usize, &[usize]),
) -> Result<Vec<EpisodeRecord>> {
    if learners.len() != game.n_agents {
        return Err(Error::Dimension { what: "learners", expected: game.n_agents, found: learners.len() });
    }
    let mut env = EnvHandle::new(game, seed);
    let mut agent_rngs: Vec<StreamRng> = (0..game.n_agents).map(|i| rng::stream(seed, i as u64 + 1)).collect();
    let mut records = Vec::with_capacity(episodes);
    let mut actions = vec![0; game.n_agents];
    for k in 0..episodes {
        let mut state = env.reset();
        let mut returns = vec![0.0; game.n_agents];
        for h in 0..game.horizon {
            before_act(k, h, state, learners);
            for (i, learner) in learners.iter_mut().enumerate() {
                actions[i] = learner.act(h, state, &mut agent_rngs[i]);
            }
            after_step(k, h, state, &actions);
            let out = env.step(&actions)?;
            for (i, learner) in learners.iter_mut().enumerate() {
                returns[i] += out.rewards[i];
                learner.observe(&LocalTransition {
                    episode: k,
                    step: h,
                    state,
                    action: actions[i],
                    reward: out.rewards[i],
                    next_state: out.next_state,
                })?;
            }
            if let Some(next) = out.next_state {
                state = next;
            }
        }
        records.push(EpisodeRecord { episode: k, returns });
    }
    Ok(records)
}
