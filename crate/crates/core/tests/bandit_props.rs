use marl_core::bandit::{external_regret, stationary_distribution, swap_regret, Exp3IxState, SwapFtrlState};
use marl_core::rng::{sample_categorical, stream};
use proptest::prelude::*;
use rand::Rng;

/// `p Q = p`, `sum p = 1` by Gaussian elimination.
fn linear_stationary(q: &[f64], n: usize) -> Vec<f64> {
    let w = n + 1;
    let mut m = vec![0.0; n * w];
    for r in 0..n - 1 {
        for c in 0..n {
            m[r * w + c] = q[c * n + r] - if r == c { 1.0 } else { 0.0 };
        }
    }
    for c in 0..=n {
        m[(n - 1) * w + c] = 1.0;
    }
    for col in 0..n {
        let piv = (col..n).max_by(|&a, &b| m[a * w + col].abs().total_cmp(&m[b * w + col].abs())).unwrap();
        for c in 0..w {
            m.swap(col * w + c, piv * w + c);
        }
        for r in 0..n {
            if r != col {
                let f = m[r * w + col] / m[col * w + col];
                for c in col..w {
                    m[r * w + c] -= f * m[col * w + c];
                }
            }
        }
    }
    (0..n).map(|r| m[r * w + n] / m[r * w + r]).collect()
}

fn stochastic(raw: &[f64], n: usize) -> Vec<f64> {
    let mut q = raw[..n * n].to_vec();
    for row in q.chunks_mut(n) {
        let z: f64 = row.iter().sum();
        row.iter_mut().for_each(|x| *x /= z);
    }
    q
}

/// Swap regret by trying every map from actions to actions.
fn brute_swap(losses: &[Vec<f64>], plays: &[Vec<f64>], n: usize) -> f64 {
    let incurred: f64 = losses.iter().zip(plays).map(|(l, p)| l.iter().zip(p).map(|(a, b)| a * b).sum::<f64>()).sum();
    let mut best = f64::INFINITY;
    for code in 0..n.pow(n as u32) {
        let map: Vec<usize> = (0..n).map(|a| code / n.pow(a as u32) % n).collect();
        let swapped: f64 = losses.iter().zip(plays).map(|(l, p)| (0..n).map(|a| p[a] * l[map[a]]).sum::<f64>()).sum();
        best = best.min(swapped);
    }
    incurred - best
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn stationary_matches_linear_solve(n in 2usize..=8, raw in prop::collection::vec(0.01f64..1.0, 64)) {
        let q = stochastic(&raw, n);
        let p = stationary_distribution(&q, n).unwrap();
        let o = linear_stationary(&q, n);
        for (a, b) in p.iter().zip(&o) {
            prop_assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn swap_learner_keeps_a_fixed_point(n in 2usize..=5, seed in any::<u64>(), steps in 1usize..200) {
        let mut rng = stream(seed, 0);
        let mut learner = SwapFtrlState::new(n);
        let rate = ((n as f64).ln() / steps as f64).sqrt();
        for _ in 0..steps {
            let a = sample_categorical(learner.probs(), &mut rng);
            learner.update(a, rng.gen::<f64>(), rate, rate).unwrap();
            prop_assert!(learner.fixed_point_residual() < 1e-10);
            prop_assert!((learner.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn swap_regret_dominates_external(n in 2usize..=4, seed in any::<u64>(), t in 1usize..40) {
        let mut rng = stream(seed, 1);
        let losses: Vec<Vec<f64>> = (0..t).map(|_| (0..n).map(|_| rng.gen::<f64>()).collect()).collect();
        let plays: Vec<Vec<f64>> = (0..t).map(|_| stochastic(&(0..n * n).map(|_| rng.gen::<f64>() + 1e-3).collect::<Vec<_>>(), n)[..n].to_vec()).collect();
        let swap = swap_regret(&losses, &plays);
        prop_assert!(swap >= external_regret(&losses, &plays) - 1e-12);
        prop_assert!((swap - brute_swap(&losses, &plays, n)).abs() < 1e-10);
    }
}

#[test]
fn exp3ix_concentrates_on_the_best_arm() {
    let means = [0.9, 0.1, 0.5];
    let t = 20_000;
    let eta = (2.0 * 3f64.ln() / (3.0 * t as f64)).sqrt();
    let mut rng = stream(3, 0);
    let mut learner = Exp3IxState::new(3);
    for _ in 0..t {
        let a = sample_categorical(learner.probs(), &mut rng);
        let loss = if rng.gen::<f64>() < means[a] { 1.0 } else { 0.0 };
        learner.update(a, loss, eta, eta / 2.0).unwrap();
    }
    assert!(learner.probs()[1] > 0.9, "{:?}", learner.probs());
}
