//! Population moments (divisor `n`), the convention used throughout the
//! variance formulas so that they line up with least-squares algebra.

pub fn mean(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    x.iter().sum::<f64>() / x.len() as f64
}

/// `sum_i (x_i - mean)^2`, two-pass.
pub fn centered_sum_of_squares(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|&v| (v - m) * (v - m)).sum()
}

pub fn variance(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    centered_sum_of_squares(x) / x.len() as f64
}

pub fn covariance(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    if x.is_empty() {
        return 0.0;
    }
    let (mx, my) = (mean(x), mean(y));
    x.iter()
        .zip(y)
        .map(|(&a, &b)| (a - mx) * (b - my))
        .sum::<f64>()
        / x.len() as f64
}

/// Pearson correlation, or `None` when either side is constant.
pub fn correlation(x: &[f64], y: &[f64]) -> Option<f64> {
    let (vx, vy) = (variance(x), variance(y));
    if vx <= 0.0 || vy <= 0.0 {
        return None;
    }
    Some(covariance(x, y) / libm::sqrt(vx * vy))
}

/// Sample variance with divisor `n - 1`.
pub fn sample_variance(x: &[f64]) -> f64 {
    if x.len() < 2 {
        return 0.0;
    }
    centered_sum_of_squares(x) / (x.len() - 1) as f64
}
