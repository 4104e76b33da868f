//! Small numeric helpers shared by the analysis modules.
//!
//! Sums use Kahan compensation and every routine consumes its input in a
//! fixed order, so results do not depend on thread count.

/// Compensated sum over a slice.
pub fn kahan_sum(values: &[f64]) -> f64 {
    let mut sum = 0.0;
    let mut carry = 0.0;
    for &v in values {
        let y = v - carry;
        let t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
    sum
}

pub fn mean(values: &[f64]) -> f64 {
    kahan_sum(values) / values.len() as f64
}

/// Sample standard deviation (n - 1 denominator).
pub fn sample_std(values: &[f64]) -> f64 {
    let n = values.len();
    debug_assert!(n >= 2);
    let m = mean(values);
    let sq: Vec<f64> = values.iter().map(|v| (v - m) * (v - m)).collect();
    (kahan_sum(&sq) / (n - 1) as f64).sqrt()
}

/// Pearson correlation. `None` when either side has zero variance.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Option<f64> {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len();
    if n < 2 {
        return None;
    }
    let mx = mean(xs);
    let my = mean(ys);
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for i in 0..n {
        let dx = xs[i] - mx;
        let dy = ys[i] - my;
        cov += dx * dy;
        vx += dx * dx;
        vy += dy * dy;
    }
    if vx == 0.0 || vy == 0.0 {
        return None;
    }
    Some(cov / (vx * vy).sqrt())
}

/// Ranks with ties assigned the average rank (1-based).
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation. `None` when either side is constant.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Option<f64> {
    pearson(&average_ranks(xs), &average_ranks(ys))
}

/// Sample autocorrelation at lags `1..=max_lag`, sharing the global mean.
/// `None` when the series has zero variance.
pub fn autocorrelation(series: &[f64], max_lag: usize) -> Option<Vec<f64>> {
    let n = series.len();
    assert!(max_lag < n);
    let m = mean(series);
    let centered: Vec<f64> = series.iter().map(|x| x - m).collect();
    let denom = kahan_sum(&centered.iter().map(|d| d * d).collect::<Vec<_>>());
    if denom == 0.0 {
        return None;
    }
    let mut out = Vec::with_capacity(max_lag);
    for lag in 1..=max_lag {
        let mut num = 0.0;
        for i in 0..n - lag {
            num += centered[i] * centered[i + lag];
        }
        out.push(num / denom);
    }
    Some(out)
}

/// Linear-interpolation quantile on a pre-sorted slice (the R-7 rule).
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    debug_assert!((0.0..=1.0).contains(&q));
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Empirical CDF: distinct sorted values with cumulative fractions that end
/// at exactly 1.
#[derive(Debug, Clone, PartialEq)]
pub struct EcdfSeries {
    pub values: Vec<f64>,
    pub fractions: Vec<f64>,
}

pub fn ecdf(mut values: Vec<f64>) -> EcdfSeries {
    let n = values.len();
    values.sort_by(f64::total_cmp);
    let mut out_values = Vec::new();
    let mut fractions = Vec::new();
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[j + 1] == values[i] {
            j += 1;
        }
        out_values.push(values[i]);
        fractions.push((j + 1) as f64 / n as f64);
        i = j + 1;
    }
    EcdfSeries { values: out_values, fractions }
}
