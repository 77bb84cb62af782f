//! Float helpers routed through `libm` so the crate builds without `std`.

#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub fn cbrt(x: f64) -> f64 {
    libm::cbrt(x)
}

#[inline]
pub fn powi(x: f64, n: i32) -> f64 {
    libm::pow(x, n as f64)
}

#[inline]
pub fn abs(x: f64) -> f64 {
    libm::fabs(x)
}

/// Probabilities proportional to `exp(-rate * loss)`, written into `out`.
pub fn softmin_into(losses: &[f64], rate: f64, out: &mut [f64]) {
    let min = losses.iter().copied().fold(f64::INFINITY, f64::min);
    let mut total = 0.0;
    for (o, &l) in out.iter_mut().zip(losses) {
        *o = exp(-rate * (l - min));
        total += *o;
    }
    for o in out.iter_mut() {
        *o /= total;
    }
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}
