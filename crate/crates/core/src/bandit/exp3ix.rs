use alloc::vec;
use alloc::vec::Vec;

use super::check_feedback;
use crate::math::softmin_into;
use crate::Result;

/// Exponential weights over importance-weighted loss estimates with implicit
/// exploration: the estimate for the played action is divided by `p(a) + gamma`.
#[derive(Debug, Clone, PartialEq)]
pub struct Exp3IxState {
    cum_loss: Vec<f64>,
    probs: Vec<f64>,
}

impl Exp3IxState {
    pub fn new(n_actions: usize) -> Self {
        Self { cum_loss: vec![0.0; n_actions], probs: vec![1.0 / n_actions as f64; n_actions] }
    }

    pub fn n_actions(&self) -> usize {
        self.probs.len()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn cumulative_losses(&self) -> &[f64] {
        &self.cum_loss
    }

    /// Back to uniform play with zero accumulated loss.
    pub fn reset(&mut self) {
        let n = self.probs.len();
        self.cum_loss.iter_mut().for_each(|l| *l = 0.0);
        self.probs.iter_mut().for_each(|p| *p = 1.0 / n as f64);
    }

    pub fn update(&mut self, action: usize, loss: f64, eta: f64, gamma: f64) -> Result<()> {
        check_feedback(self.n_actions(), action, loss)?;
        self.cum_loss[action] += loss / (self.probs[action] + gamma);
        softmin_into(&self.cum_loss, eta, &mut self.probs);
        Ok(())
    }
}
