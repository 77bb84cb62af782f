use alloc::vec;

/// `sum_t <p_t, l_t> - min_a sum_t l_t(a)`.
pub fn external_regret(losses: &[impl AsRef<[f64]>], plays: &[impl AsRef<[f64]>]) -> f64 {
    assert_eq!(losses.len(), plays.len(), "losses and plays must have equal length");
    let Some(first) = losses.first() else { return 0.0 };
    let n = first.as_ref().len();
    let mut totals = vec![0.0; n];
    let mut incurred = 0.0;
    for (l, p) in losses.iter().zip(plays) {
        let (l, p) = (l.as_ref(), p.as_ref());
        for a in 0..n {
            totals[a] += l[a];
            incurred += p[a] * l[a];
        }
    }
    incurred - totals.iter().copied().fold(f64::INFINITY, f64::min)
}

/// `max_F sum_t (<p_t, l_t> - <F . p_t, l_t>)` over all maps `F` from actions
/// to actions. The maximum splits into one independent choice of target per
/// source action.
pub fn swap_regret(losses: &[impl AsRef<[f64]>], plays: &[impl AsRef<[f64]>]) -> f64 {
    assert_eq!(losses.len(), plays.len(), "losses and plays must have equal length");
    let Some(first) = losses.first() else { return 0.0 };
    let n = first.as_ref().len();
    // weighted[a][b] = sum_t p_t(a) l_t(b)
    let mut weighted = vec![0.0; n * n];
    let mut incurred = 0.0;
    for (l, p) in losses.iter().zip(plays) {
        let (l, p) = (l.as_ref(), p.as_ref());
        for a in 0..n {
            incurred += p[a] * l[a];
            for b in 0..n {
                weighted[a * n + b] += p[a] * l[b];
            }
        }
    }
    let swapped: f64 = (0..n).map(|a| weighted[a * n..(a + 1) * n].iter().copied().fold(f64::INFINITY, f64::min)).sum();
    incurred - swapped
}
