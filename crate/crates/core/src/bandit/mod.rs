//! Adversarial bandit subroutines used inside V-learning, plus regret meters.
//!
//! Step sizes are supplied by the caller on every update; the learners own no
//! schedule.

mod exp3ix;
mod regret;
mod swap;

pub use exp3ix::Exp3IxState;
pub use regret::{external_regret, swap_regret};
pub use swap::{stationary_distribution, SwapFtrlState, STATIONARY_MAX_ITERS, STATIONARY_TOL};

use crate::{Error, Result};

fn check_feedback(n_actions: usize, action: usize, loss: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&loss) {
        return Err(Error::LossOutOfRange(loss));
    }
    if action >= n_actions {
        return Err(Error::ActionOutOfRange { action, n_actions });
    }
    Ok(())
}
