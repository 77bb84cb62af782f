//! Stage-based V-learning.
//!
//! Each agent keeps, per `(h, s)`, an optimistic value `V̄` that only changes
//! when a stage of visits ends, and an adversarial bandit that chooses its
//! action. Stage lengths grow by a factor `1 + 1/H`. The learning loop
//! records a [`PolicyTrace`] from which the certified output policy is
//! replayed.

mod trace;

pub use trace::{certified_rollout, PolicyTrace, TraceIndex};

use alloc::vec;
use alloc::vec::Vec;

use crate::bandit::{Exp3IxState, SwapFtrlState};
use crate::env::{drive, EpisodeRecord, LocalLearner, LocalTransition};
use crate::game::MarkovGame;
use crate::math::{ln, sqrt};
use crate::rng::{sample_categorical, StreamRng};
use crate::{Error, Result};

/// Stage lengths `e_1 = H`, `e_{j+1} = floor((1 + 1/H) e_j)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StageSchedule {
    pub horizon: usize,
}

impl StageSchedule {
    pub fn new(horizon: usize) -> Self {
        assert!(horizon >= 1, "horizon must be positive");
        Self { horizon }
    }

    pub fn first_length(&self) -> usize {
        self.horizon
    }

    pub fn next_length(&self, len: usize) -> usize {
        len * (self.horizon + 1) / self.horizon
    }

    pub fn lengths(&self) -> impl Iterator<Item = usize> + '_ {
        core::iter::successors(Some(self.first_length()), move |&e| Some(self.next_length(e)))
    }

    /// Whether `n` is a cumulative stage end.
    pub fn contains(&self, n: usize) -> bool {
        let mut total = 0;
        for e in self.lengths() {
            total += e;
            if total >= n {
                return total == n;
            }
        }
        unreachable!()
    }
}

/// All cumulative stage ends not exceeding `up_to`.
pub fn stage_ends(horizon: usize, up_to: usize) -> Vec<usize> {
    let schedule = StageSchedule::new(horizon);
    let mut out = Vec::new();
    let mut total = 0;
    for e in schedule.lengths() {
        total += e;
        if total > up_to {
            break;
        }
        out.push(total);
    }
    out
}

pub fn bonus_cce(n_stage: usize, horizon: usize, n_actions: usize, iota: f64) -> Result<f64> {
    if n_stage == 0 {
        return Err(Error::ZeroVisits);
    }
    let h = horizon as f64;
    Ok(6.0 * sqrt(h * h * n_actions as f64 * iota / n_stage as f64))
}

pub fn bonus_ce(n_stage: usize, horizon: usize, n_actions: usize, iota: f64) -> Result<f64> {
    if n_stage == 0 {
        return Err(Error::ZeroVisits);
    }
    let (h, a) = (horizon as f64, n_actions as f64);
    Ok(11.0 * sqrt(h * h * a * a * iota / n_stage as f64))
}

/// `log(2 N S A_max K H / p)`.
pub fn default_iota(game: &MarkovGame, episodes: usize, p: f64) -> f64 {
    let prod = 2.0 * game.n_agents as f64 * game.n_states as f64 * game.max_actions() as f64 * episodes as f64 * game.horizon as f64;
    ln(prod / p)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum Mode {
    /// Exp3-IX at every `(h, s)`; the certified policy is an approximate CCE.
    Cce,
    /// Swap-regret FTRL at every `(h, s)`; the certified policy is an approximate CE.
    Ce,
}

/// How the bandit step sizes are derived from the stage-length target `Ť`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum StepRule {
    /// `η = sqrt(ι / (A Ť))`, `γ = η / 2` for CCE; `η = sqrt(ι / Ť)`, `γ = η` for CE.
    Theory,
    /// `η = 1 / (denom sqrt(A Ť))`, `γ = η / 2`.
    Scaled { denom: f64 },
}

impl StepRule {
    pub fn rates(&self, mode: Mode, n_actions: usize, target: usize, iota: f64) -> (f64, f64) {
        let (a, t) = (n_actions as f64, target as f64);
        match (self, mode) {
            (StepRule::Theory, Mode::Cce) => {
                let eta = sqrt(iota / (a * t));
                (eta, eta / 2.0)
            }
            (StepRule::Theory, Mode::Ce) => {
                let eta = sqrt(iota / t);
                (eta, eta)
            }
            (StepRule::Scaled { denom }, _) => {
                let eta = 1.0 / (denom * sqrt(a * t));
                (eta, eta / 2.0)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Bandits {
    Exp3(Vec<Exp3IxState>),
    Swap(Vec<SwapFtrlState>),
}

/// One agent's stage-based V-learning state.
#[derive(Debug, Clone, PartialEq)]
pub struct VLearner {
    mode: Mode,
    rule: StepRule,
    iota: f64,
    horizon: usize,
    n_states: usize,
    n_actions: usize,
    schedule: StageSchedule,
    /// `(H + 1) x S`, last layer zero.
    vbar: Vec<f64>,
    vtilde: Vec<f64>,
    visits: Vec<usize>,
    stage_visits: Vec<usize>,
    stage_reward: Vec<f64>,
    stage_next: Vec<f64>,
    target: Vec<usize>,
    stages_done: Vec<usize>,
    bandits: Bandits,
}

impl VLearner {
    pub fn new(mode: Mode, rule: StepRule, iota: f64, horizon: usize, n_states: usize, n_actions: usize) -> Self {
        let cells = horizon * n_states;
        let mut vbar = vec![0.0; (horizon + 1) * n_states];
        for h in 0..horizon {
            vbar[h * n_states..(h + 1) * n_states].iter_mut().for_each(|v| *v = (horizon - h) as f64);
        }
        let bandits = match mode {
            Mode::Cce => Bandits::Exp3(vec![Exp3IxState::new(n_actions); cells]),
            Mode::Ce => Bandits::Swap(vec![SwapFtrlState::new(n_actions); cells]),
        };
        Self {
            mode,
            rule,
            iota,
            horizon,
            n_states,
            n_actions,
            schedule: StageSchedule::new(horizon),
            vtilde: vbar[..cells].to_vec(),
            vbar,
            visits: vec![0; cells],
            stage_visits: vec![0; cells],
            stage_reward: vec![0.0; cells],
            stage_next: vec![0.0; cells],
            target: vec![horizon; cells],
            stages_done: vec![0; cells],
            bandits,
        }
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    #[inline]
    fn cell(&self, h: usize, s: usize) -> usize {
        h * self.n_states + s
    }

    /// `V̄_h(s)`; `h == H` gives zero.
    pub fn vbar(&self, h: usize, s: usize) -> f64 {
        self.vbar[h * self.n_states + s]
    }

    pub fn vtilde(&self, h: usize, s: usize) -> f64 {
        self.vtilde[self.cell(h, s)]
    }

    pub fn visits(&self, h: usize, s: usize) -> usize {
        self.visits[self.cell(h, s)]
    }

    /// Visits in the current, unfinished stage.
    pub fn stage_visits(&self, h: usize, s: usize) -> usize {
        self.stage_visits[self.cell(h, s)]
    }

    pub fn stage_target(&self, h: usize, s: usize) -> usize {
        self.target[self.cell(h, s)]
    }

    pub fn stages_completed(&self, h: usize, s: usize) -> usize {
        self.stages_done[self.cell(h, s)]
    }

    pub fn total_stages_completed(&self) -> usize {
        self.stages_done.iter().sum()
    }

    /// Current action distribution at `(h, s)`.
    pub fn policy(&self, h: usize, s: usize) -> &[f64] {
        let c = self.cell(h, s);
        match &self.bandits {
            Bandits::Exp3(b) => b[c].probs(),
            Bandits::Swap(b) => b[c].probs(),
        }
    }

    /// All current distributions as an `H x S x A` table.
    pub fn policy_table(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.horizon * self.n_states * self.n_actions);
        for h in 0..self.horizon {
            for s in 0..self.n_states {
                out.extend_from_slice(self.policy(h, s));
            }
        }
        out
    }

    fn end_stage(&mut self, c: usize, h: usize) -> Result<()> {
        let n = self.stage_visits[c];
        let bonus = match self.mode {
            Mode::Cce => bonus_cce(n, self.horizon, self.n_actions, self.iota)?,
            Mode::Ce => bonus_ce(n, self.horizon, self.n_actions, self.iota)?,
        };
        let nf = n as f64;
        self.vtilde[c] = self.stage_reward[c] / nf + self.stage_next[c] / nf + bonus;
        self.vbar[c] = self.vtilde[c].min((self.horizon - h) as f64);
        self.stage_visits[c] = 0;
        self.stage_reward[c] = 0.0;
        self.stage_next[c] = 0.0;
        self.target[c] = self.schedule.next_length(self.target[c]);
        self.stages_done[c] += 1;
        match &mut self.bandits {
            Bandits::Exp3(b) => b[c].reset(),
            Bandits::Swap(b) => b[c].reset(),
        }
        Ok(())
    }
}

impl LocalLearner for VLearner {
    fn act(&mut self, step: usize, state: usize, rng: &mut StreamRng) -> usize {
        sample_categorical(self.policy(step, state), rng)
    }

    fn observe(&mut self, t: &LocalTransition) -> Result<()> {
        let (h, s) = (t.step, t.state);
        let c = self.cell(h, s);
        self.visits[c] += 1;
        self.stage_visits[c] += 1;
        let next_value = t.next_state.map_or(0.0, |s2| self.vbar(h + 1, s2));
        self.stage_reward[c] += t.reward;
        self.stage_next[c] += next_value;
        let hf = self.horizon as f64;
        let loss = ((hf - h as f64 - (t.reward + next_value)) / hf).clamp(0.0, 1.0);
        let (eta, gamma) = self.rule.rates(self.mode, self.n_actions, self.target[c], self.iota);
        match &mut self.bandits {
            Bandits::Exp3(b) => b[c].update(t.action, loss, eta, gamma)?,
            Bandits::Swap(b) => b[c].update(t.action, loss, eta, gamma)?,
        }
        if self.stage_visits[c] == self.target[c] {
            self.end_stage(c, h)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VLearningConfig {
    pub mode: Mode,
    pub episodes: usize,
    pub iota: f64,
    pub step_rule: StepRule,
}

#[derive(Debug, Clone)]
pub struct VLearningRun {
    pub trace: PolicyTrace,
    pub learners: Vec<VLearner>,
    pub records: Vec<EpisodeRecord>,
}

/// Runs `episodes` episodes of independent V-learners on `game` and records
/// the trace of played distributions.
pub fn run_vlearning(game: &MarkovGame, config: &VLearningConfig, seed: u64) -> Result<VLearningRun> {
    if config.episodes == 0 {
        return Err(Error::InvalidParameter { name: "episodes", value: 0.0 });
    }
    if !(config.iota > 0.0) {
        return Err(Error::InvalidParameter { name: "iota", value: config.iota });
    }
    let mut learners: Vec<VLearner> = game
        .action_counts
        .iter()
        .map(|&a| VLearner::new(config.mode, config.step_rule, config.iota, game.horizon, game.n_states, a))
        .collect();
    let mut trace = PolicyTrace::empty(game, config.episodes);
    let records = drive(
        game,
        &mut learners,
        config.episodes,
        seed,
        |_, h, s, ls| {
            trace.stage_counts.push(ls[0].stage_visits(h, s));
            trace.states.push(s);
            for (i, l) in ls.iter().enumerate() {
                trace.dists[i].extend_from_slice(l.policy(h, s));
            }
        },
        |_, _, _, actions| trace.joint_actions.push(game.joint_index(actions)),
    )?;
    trace.final_tables = learners.iter().map(VLearner::policy_table).collect();
    Ok(VLearningRun { trace, learners, records })
}
