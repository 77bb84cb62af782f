use alloc::vec;
use alloc::vec::Vec;

use super::check_feedback;
use crate::math::{abs, softmin_into};
use crate::{Error, Result};

pub const STATIONARY_TOL: f64 = 1e-12;
pub const STATIONARY_MAX_ITERS: usize = 100_000;
const ACCEPT_TOL: f64 = 1e-10;

/// No-swap-regret learner built from one exponential-weights expert per
/// action. Expert `a` keeps losses `L(a' | a)` and recommends `q(. | a)`;
/// play is the fixed point `p = sum_a p(a) q(. | a)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SwapFtrlState {
    n: usize,
    /// `L(a' | a)` at `[a * n + a']`.
    cum_loss: Vec<f64>,
    /// `q(a' | a)` at `[a * n + a']`.
    recommendations: Vec<f64>,
    probs: Vec<f64>,
}

impl SwapFtrlState {
    pub fn new(n_actions: usize) -> Self {
        let u = 1.0 / n_actions as f64;
        Self {
            n: n_actions,
            cum_loss: vec![0.0; n_actions * n_actions],
            recommendations: vec![u; n_actions * n_actions],
            probs: vec![u; n_actions],
        }
    }

    pub fn n_actions(&self) -> usize {
        self.n
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Row-major `q(a' | a)`.
    pub fn recommendations(&self) -> &[f64] {
        &self.recommendations
    }

    pub fn cumulative_losses(&self) -> &[f64] {
        &self.cum_loss
    }

    pub fn reset(&mut self) {
        *self = Self::new(self.n);
    }

    /// `|| p - p Q ||_1` for the current play and recommendations.
    pub fn fixed_point_residual(&self) -> f64 {
        residual(&self.probs, &self.recommendations, self.n)
    }

    /// Expert `a` is charged `p(a) * loss / (p(a_t) + gamma)` on the played
    /// action `a_t`; each expert's recommendation is then recomputed and the
    /// play distribution is set to their stationary distribution.
    pub fn update(&mut self, action: usize, loss: f64, eta: f64, gamma: f64) -> Result<()> {
        check_feedback(self.n, action, loss)?;
        let n = self.n;
        let denom = self.probs[action] + gamma;
        for a in 0..n {
            self.cum_loss[a * n + action] += self.probs[a] * loss / denom;
            softmin_into(&self.cum_loss[a * n..(a + 1) * n], eta, &mut self.recommendations[a * n..(a + 1) * n]);
        }
        self.probs = stationary_distribution(&self.recommendations, n)?;
        Ok(())
    }
}

fn residual(p: &[f64], q: &[f64], n: usize) -> f64 {
    (0..n)
        .map(|b| {
            let pq: f64 = (0..n).map(|a| p[a] * q[a * n + b]).sum();
            abs(p[b] - pq)
        })
        .sum()
}

/// Stationary distribution of a row-stochastic `n x n` matrix: power
/// iteration from uniform, falling back to a direct solve of
/// `(Q^T - I) p = 0, sum p = 1` when iteration stalls.
pub fn stationary_distribution(q: &[f64], n: usize) -> Result<Vec<f64>> {
    if q.len() != n * n {
        return Err(Error::Dimension { what: "recommendation matrix", expected: n * n, found: q.len() });
    }
    for row in 0..n {
        let r = &q[row * n..(row + 1) * n];
        let sum: f64 = r.iter().sum();
        if r.iter().any(|&x| !(x >= 0.0)) || abs(sum - 1.0) > 1e-9 {
            return Err(Error::NotStochastic { row, sum });
        }
    }
    let mut p = vec![1.0 / n as f64; n];
    let mut next = vec![0.0; n];
    for _ in 0..STATIONARY_MAX_ITERS {
        next.iter_mut().for_each(|x| *x = 0.0);
        for a in 0..n {
            let pa = p[a];
            for b in 0..n {
                next[b] += pa * q[a * n + b];
            }
        }
        let total: f64 = next.iter().sum();
        let change: f64 = p.iter().zip(&next).map(|(x, y)| abs(x - y / total)).sum();
        for (x, y) in p.iter_mut().zip(&next) {
            *x = y / total;
        }
        if change <= STATIONARY_TOL {
            return Ok(p);
        }
    }
    let solved = solve_stationary(q, n);
    let res = residual(&solved, q, n);
    if res <= ACCEPT_TOL {
        Ok(solved)
    } else {
        Err(Error::FixedPoint(res))
    }
}

fn solve_stationary(q: &[f64], n: usize) -> Vec<f64> {
    // rows 0..n-1 of (Q^T - I), last row replaced by the normalization
    let mut m = vec![0.0; n * (n + 1)];
    for r in 0..n {
        for c in 0..n {
            m[r * (n + 1) + c] = if r == n - 1 { 1.0 } else { q[c * n + r] - if r == c { 1.0 } else { 0.0 } };
        }
    }
    m[(n - 1) * (n + 1) + n] = 1.0;
    for col in 0..n {
        let pivot = (col..n).max_by(|&a, &b| abs(m[a * (n + 1) + col]).total_cmp(&abs(m[b * (n + 1) + col]))).unwrap_or(col);
        if pivot != col {
            for c in 0..=n {
                m.swap(col * (n + 1) + c, pivot * (n + 1) + c);
            }
        }
        let d = m[col * (n + 1) + col];
        if d == 0.0 {
            continue;
        }
        for r in 0..n {
            if r != col {
                let f = m[r * (n + 1) + col] / d;
                if f != 0.0 {
                    for c in col..=n {
                        m[r * (n + 1) + c] -= f * m[col * (n + 1) + c];
                    }
                }
            }
        }
    }
    let mut p: Vec<f64> = (0..n)
        .map(|r| {
            let d = m[r * (n + 1) + r];
            if d == 0.0 {
                0.0
            } else {
                (m[r * (n + 1) + n] / d).max(0.0)
            }
        })
        .collect();
    let total: f64 = p.iter().sum();
    p.iter_mut().for_each(|x| *x /= total);
    p
}
