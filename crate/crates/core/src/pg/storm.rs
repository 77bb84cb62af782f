use alloc::vec::Vec;

use super::project_rows;
use crate::math::{cbrt, sqrt};
use crate::{Error, Result};

/// `(k, c, w)` for a given `b`, variance bound `σ` and smoothness `L`.
pub fn storm_constants(b: f64, sigma: f64, smooth: f64) -> Result<(f64, f64, f64)> {
    for (name, value) in [("b", b), ("sigma", sigma), ("smoothness", smooth)] {
        if !(value > 0.0) {
            return Err(Error::InvalidParameter { name, value });
        }
    }
    let k = b * cbrt(sigma * sigma) / smooth;
    let c = smooth * smooth * (32.0 + 1.0 / (7.0 * b * b * b));
    let tail = 32.0 * b + 1.0 / (7.0 * b * b);
    let w = sigma * sigma * f64::max(f64::max((4.0 * b) * (4.0 * b) * (4.0 * b), 2.0), tail * tail * tail / 64.0);
    Ok((k, c, w))
}

/// `(σ², L²) = (A² H⁴ / ε̃, A³ H³ / ε̃³)` for the REINFORCE estimator under
/// ε̃-greedy direct parameterization.
pub fn smoothness_constants(max_actions: usize, horizon: usize, eps_greedy: f64) -> Result<(f64, f64)> {
    if !(eps_greedy > 0.0) {
        return Err(Error::ZeroExploration);
    }
    let (a, h) = (max_actions as f64, horizon as f64);
    Ok((a * a * h * h * h * h / eps_greedy, a * a * a * h * h * h / (eps_greedy * eps_greedy * eps_greedy)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StormSchedule {
    /// `η_t = k / (w + σ² t)^{1/3}`, `a_{t+1} = min(1, c η_t²)`.
    Theory {
        k: f64,
        c: f64,
        w: f64,
        sigma: f64,
    },
    Constant {
        eta: f64,
        momentum: f64,
    },
}

impl StormSchedule {
    /// Theory schedule from `b` and the estimator constants.
    pub fn theory(b: f64, max_actions: usize, horizon: usize, eps_greedy: f64) -> Result<Self> {
        let (sigma2, l2) = smoothness_constants(max_actions, horizon, eps_greedy)?;
        let sigma = sqrt(sigma2);
        let (k, c, w) = storm_constants(b, sigma, sqrt(l2))?;
        Ok(StormSchedule::Theory { k, c, w, sigma })
    }

    pub fn eta(&self, t: usize) -> f64 {
        match *self {
            StormSchedule::Theory { k, w, sigma, .. } => k / cbrt(w + sigma * sigma * t as f64),
            StormSchedule::Constant { eta, .. } => eta,
        }
    }

    /// `a_{t+1}` given `η_t`.
    pub fn momentum_after(&self, eta: f64) -> f64 {
        match *self {
            StormSchedule::Theory { c, .. } => (c * eta * eta).min(1.0),
            StormSchedule::Constant { momentum, .. } => momentum,
        }
    }
}

/// Projected STORM for one agent, in ascent form.
#[derive(Debug, Clone, PartialEq)]
pub struct StormState {
    pub schedule: StormSchedule,
    /// Momentum estimate `d_t`; empty before the first step.
    pub d: Vec<f64>,
    /// Step index `t`, starting at 1.
    pub t: usize,
    /// Momentum applied at the next step, `a_{t}`.
    pub momentum: f64,
}

impl StormState {
    pub fn new(schedule: StormSchedule) -> Self {
        Self { schedule, d: Vec::new(), t: 1, momentum: 1.0 }
    }

    pub fn eta(&self) -> f64 {
        self.schedule.eta(self.t)
    }

    /// `d ← g(x_t; ξ_t) + (1 - a_t)(d - g(x_{t-1}; ξ_t))` (just `g(x_1; ξ_1)` on
    /// the first call), then `x ← Proj(x + η_t d)` row by row and the
    /// schedule advances.
    pub fn step(&mut self, grad_new_at_new: &[f64], grad_new_at_old: &[f64], x: &mut [f64], n_actions: usize) -> Result<()> {
        if grad_new_at_new.len() != x.len() {
            return Err(Error::Dimension { what: "gradient", expected: x.len(), found: grad_new_at_new.len() });
        }
        if self.d.is_empty() {
            self.d = grad_new_at_new.to_vec();
        } else {
            if grad_new_at_old.len() != x.len() {
                return Err(Error::Dimension { what: "gradient", expected: x.len(), found: grad_new_at_old.len() });
            }
            let keep = 1.0 - self.momentum;
            for ((d, &g), &g_old) in self.d.iter_mut().zip(grad_new_at_new).zip(grad_new_at_old) {
                *d = g + keep * (*d - g_old);
            }
        }
        let eta = self.eta();
        for (xi, &d) in x.iter_mut().zip(&self.d) {
            *xi += eta * d;
        }
        project_rows(x, n_actions)?;
        self.momentum = self.schedule.momentum_after(eta);
        self.t += 1;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn constants_examples() {
        let (k, c, w) = storm_constants(1.0, 1.0, 1.0).unwrap();
        assert_eq!(k, 1.0);
        assert!((c - (32.0 + 1.0 / 7.0)).abs() < 1e-12);
        let tail: f64 = 32.0 + 1.0 / 7.0;
        assert!((w - f64::max(64.0, tail.powi(3) / 64.0)).abs() < 1e-9);
        assert!(storm_constants(1.0, 0.0, 1.0).is_err());
        let (sigma2, _) = smoothness_constants(2, 10, 0.1).unwrap();
        assert!((sigma2 - 4e5).abs() < 1e-6);
    }

    #[test]
    fn constant_schedule_arithmetic() {
        let s = StormSchedule::Theory { k: 1.0, c: 1.0, w: 8.0, sigma: 0.0 };
        for t in 1..5 {
            assert!((s.eta(t) - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn theory_step_is_small_enough() {
        // η_t ≤ 1/(4L) and a_{t+1} ≤ 1
        let (sigma2, l2) = smoothness_constants(3, 4, 0.1).unwrap();
        let s = StormSchedule::theory(1.0, 3, 4, 0.1).unwrap();
        assert!(s.eta(1) <= 1.0 / (4.0 * l2.sqrt()) + 1e-15);
        assert!(s.momentum_after(s.eta(1)) <= 1.0);
        assert!(sigma2 > 0.0);
    }

    #[test]
    fn full_momentum_is_plain_gradient() {
        let mut st = StormState::new(StormSchedule::Constant { eta: 0.1, momentum: 1.0 });
        let mut x = vec![0.5, 0.5];
        st.step(&[1.0, 0.0], &[0.0, 0.0], &mut x, 2).unwrap();
        st.step(&[0.0, 2.0], &[9.0, 9.0], &mut x, 2).unwrap();
        assert_eq!(st.d, vec![0.0, 2.0]);
    }

    #[test]
    fn zero_gradients_never_move() {
        let mut st = StormState::new(StormSchedule::Constant { eta: 0.5, momentum: 0.5 });
        let mut x = vec![0.2, 0.3, 0.5];
        for _ in 0..10 {
            st.step(&[0.0; 3], &[0.0; 3], &mut x, 3).unwrap();
        }
        assert_eq!(x, vec![0.2, 0.3, 0.5]);
    }

    #[test]
    fn dimension_mismatch() {
        let mut st = StormState::new(StormSchedule::Constant { eta: 0.5, momentum: 0.5 });
        let mut x = vec![0.5, 0.5];
        assert!(st.step(&[0.0; 3], &[0.0; 3], &mut x, 2).is_err());
    }
}
