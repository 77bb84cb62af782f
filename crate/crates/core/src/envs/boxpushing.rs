//! A fully observable two-agent box-pushing grid.
//!
//! The agents walk along a row of `width` cells. Above column `0` and column
//! `width - 1` sit two small boxes; the columns in between sit under one large
//! box. A small box is pushed away by a single agent standing below it; the
//! large box needs both agents pushing in the same step, after which the
//! boxes and the agents are reset. The state is the pair of positions plus
//! which small boxes remain, `4 * width^2` states in total (100 for the
//! default width of 5). This is a reconstruction of the classic task in a
//! fully observable form, not its canonical partially observable version.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::normalize_rewards;
use crate::game::MarkovGame;
use crate::{Error, Result};

pub const LEFT: usize = 0;
pub const RIGHT: usize = 1;
pub const STAY: usize = 2;
pub const PUSH: usize = 3;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct BoxPushingConfig {
    pub width: usize,
    pub horizon: usize,
    pub small_reward: f64,
    pub large_reward: f64,
    pub collision_penalty: f64,
    pub step_cost: f64,
    /// Probability that a move action leaves the agent in place.
    pub slip: f64,
}

impl Default for BoxPushingConfig {
    fn default() -> Self {
        Self { width: 5, horizon: 15, small_reward: 10.0, large_reward: 100.0, collision_penalty: 5.0, step_cost: 0.1, slip: 0.1 }
    }
}

struct Layout {
    width: usize,
}

impl Layout {
    fn state(&self, boxes: usize, p1: usize, p2: usize) -> usize {
        (boxes * self.width + p1) * self.width + p2
    }

    fn decode(&self, s: usize) -> (usize, usize, usize) {
        let p2 = s % self.width;
        let p1 = (s / self.width) % self.width;
        (s / (self.width * self.width), p1, p2)
    }

    fn target(&self, p: usize, action: usize) -> usize {
        match action {
            LEFT => p.saturating_sub(1),
            RIGHT => (p + 1).min(self.width - 1),
            _ => p,
        }
    }
}

const LEFT_BOX: usize = 1;
const RIGHT_BOX: usize = 2;
const ALL_BOXES: usize = LEFT_BOX | RIGHT_BOX;

pub fn boxpushing(cfg: &BoxPushingConfig) -> Result<MarkovGame> {
    if cfg.width < 3 {
        return Err(Error::Config(format!("box pushing needs width >= 3, got {}", cfg.width)));
    }
    if cfg.horizon == 0 {
        return Err(Error::Config("box pushing needs a positive horizon".into()));
    }
    if !(0.0..1.0).contains(&cfg.slip) {
        return Err(Error::Config(format!("slip probability {} outside [0, 1)", cfg.slip)));
    }
    if cfg.large_reward <= cfg.small_reward * 2.0 {
        return Err(Error::Config("the large box must pay more than both small boxes together".into()));
    }
    let w = cfg.width;
    let layout = Layout { width: w };
    let n_states = 4 * w * w;
    let start = |boxes: usize| layout.state(boxes, 0, w - 1);
    let (mut rewards, mut transitions) = (Vec::new(), Vec::new());
    let mut row = vec![0.0; n_states];
    let mut one_step = Vec::with_capacity(n_states * 16);
    let mut one_trans = Vec::with_capacity(n_states * 16 * n_states);
    for s in 0..n_states {
        let (boxes, p1, p2) = layout.decode(s);
        for a1 in 0..4 {
            for a2 in 0..4 {
                row.iter_mut().for_each(|p| *p = 0.0);
                let mut r = -cfg.step_cost;
                let in_middle = |p: usize| p >= 1 && p + 1 < w;
                if a1 == PUSH && a2 == PUSH && in_middle(p1) && in_middle(p2) {
                    r += cfg.large_reward;
                    row[start(ALL_BOXES)] = 1.0;
                } else {
                    let mut remaining = boxes;
                    for (p, a) in [(p1, a1), (p2, a2)] {
                        if a != PUSH {
                            continue;
                        }
                        if p == 0 && remaining & LEFT_BOX != 0 {
                            remaining &= !LEFT_BOX;
                            r += cfg.small_reward;
                        } else if p == w - 1 && remaining & RIGHT_BOX != 0 {
                            remaining &= !RIGHT_BOX;
                            r += cfg.small_reward;
                        }
                    }
                    let (t1, t2) = (layout.target(p1, a1), layout.target(p2, a2));
                    let collide = p1 != p2 && (t1 == t2 || (t1 == p2 && t2 == p1));
                    if collide {
                        r -= cfg.collision_penalty;
                        row[layout.state(remaining, p1, p2)] = 1.0;
                    } else {
                        let moves = |p: usize, t: usize| -> [(usize, f64); 2] {
                            if t == p {
                                [(p, 1.0), (p, 0.0)]
                            } else {
                                [(t, 1.0 - cfg.slip), (p, cfg.slip)]
                            }
                        };
                        for (q1, w1) in moves(p1, t1) {
                            for (q2, w2) in moves(p2, t2) {
                                // a slipped agent stays put; never end on the same cell
                                let (q1, q2) = if q1 == q2 && p1 != p2 { (p1, p2) } else { (q1, q2) };
                                row[layout.state(remaining, q1, q2)] += w1 * w2;
                            }
                        }
                    }
                }
                one_step.extend_from_slice(&[r, r]);
                one_trans.extend_from_slice(&row);
            }
        }
    }
    for _ in 0..cfg.horizon {
        rewards.extend_from_slice(&one_step);
        transitions.extend_from_slice(&one_trans);
    }
    let scale = normalize_rewards(&mut rewards);
    MarkovGame::new(
        "boxpushing",
        cfg.horizon,
        n_states,
        vec![4, 4],
        rewards,
        transitions,
        MarkovGame::point_mass(n_states, start(ALL_BOXES)),
        scale,
    )
}
