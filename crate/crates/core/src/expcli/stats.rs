//! Growth fits, Kolmogorov-Smirnov statistics and per-decade trend summaries.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::montecarlo::mean_se;

/// Least-squares fit of `count = intercept + slope * log N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogFit {
    pub intercept: f64,
    pub slope: f64,
    /// `None` when the counts are constant.
    pub r2: Option<f64>,
}

pub fn fit_log_growth(curve: &[(f64, f64)]) -> Result<LogFit> {
    if curve.len() < 4 {
        return Err(Error::InvalidArgument(format!("need at least 4 points, got {}", curve.len())));
    }
    if curve.iter().any(|&(n, c)| !(n > 0.0) || !c.is_finite()) {
        return Err(Error::InvalidArgument("horizons must be positive and counts finite".into()));
    }
    let k = curve.len() as f64;
    let xs: Vec<f64> = curve.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = curve.iter().map(|p| p.1).collect();
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("all horizons are equal".into()));
    }
    if syy == 0.0 {
        return Ok(LogFit { intercept: my, slope: 0.0, r2: None });
    }
    let slope = sxy / sxx;
    Ok(LogFit { intercept: my - slope * mx, slope, r2: Some(sxy * sxy / (sxx * syy)) })
}

/// `sup |F_hat - F|` for the empirical CDF of `samples` against a continuous CDF.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut v = samples.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < v.len() {
        let mut j = i;
        while j + 1 < v.len() && v[j + 1] == v[i] {
            j += 1;
        }
        let f = cdf(v[i]);
        d = d.max((f - i as f64 / n).abs()).max(((j + 1) as f64 / n - f).abs());
        i = j + 1;
    }
    d
}

/// Kolmogorov-Smirnov distance between `samples` and Exp(1).
pub fn ks_exponential(samples: &[f64]) -> Result<f64> {
    if samples.len() < 30 {
        return Err(Error::InvalidArgument(format!("need at least 30 samples, got {}", samples.len())));
    }
    if samples.iter().any(|&x| !(x >= 0.0)) {
        return Err(Error::InvalidArgument("samples must be nonnegative".into()));
    }
    Ok(ks_statistic(samples, |x| 1.0 - (-x).exp()))
}

/// Two-sample Kolmogorov-Smirnov distance.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidArgument("empty sample".into()));
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] == x {
            i += 1;
        }
        while j < b.len() && b[j] == x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

/// Per-decade increments of cumulative per-trial counts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trend {
    /// Decade horizons `10^a, ..., 10^b`.
    pub horizons: Vec<u64>,
    /// Mean count at each horizon.
    pub means: Vec<f64>,
    /// Mean and standard error of the increment over each decade.
    pub increments: Vec<(f64, f64)>,
    /// Smallest `mean / se` over the increments.
    pub min_z: f64,
    /// Last increment over first increment, with its delta-method standard error.
    pub ratio: f64,
    pub ratio_se: f64,
}

fn z_score(mean: f64, se: f64) -> f64 {
    if se > 0.0 {
        mean / se
    } else if mean > 0.0 {
        f64::INFINITY
    } else {
        0.0
    }
}

/// `rows[t][i]` is the cumulative count of trial `t` at `horizons[i]`.
pub fn trend(horizons: &[u64], rows: &[Vec<f64>]) -> Result<Trend> {
    if horizons.len() < 3 {
        return Err(Error::InvalidArgument("a trend needs at least three horizons".into()));
    }
    if rows.len() < 2 || rows.iter().any(|r| r.len() != horizons.len()) {
        return Err(Error::InvalidArgument("need at least two complete trials".into()));
    }
    let means = (0..horizons.len()).map(|i| mean_se(rows.iter().map(|r| r[i])).0).collect();
    let incs: Vec<Vec<f64>> = rows.iter().map(|r| r.windows(2).map(|w| w[1] - w[0]).collect()).collect();
    let k = horizons.len() - 1;
    let increments: Vec<(f64, f64)> = (0..k).map(|i| mean_se(incs.iter().map(|r| r[i]))).collect();
    let min_z = increments.iter().map(|&(m, s)| z_score(m, s)).fold(f64::INFINITY, f64::min);
    let (f, l) = (increments[0].0, increments[k - 1].0);
    let ratio = if f > 0.0 { l / f } else { f64::NAN };
    let n = rows.len() as f64;
    let cov = |a: usize, b: usize| {
        let (ma, mb) = (increments[a].0, increments[b].0);
        incs.iter().map(|r| (r[a] - ma) * (r[b] - mb)).sum::<f64>() / (n - 1.0) / n
    };
    let var = (cov(k - 1, k - 1) - 2.0 * ratio * cov(0, k - 1) + ratio * ratio * cov(0, 0)) / (f * f);
    Ok(Trend { horizons: horizons.to_vec(), means, increments, min_z, ratio, ratio_se: var.max(0.0).sqrt() })
}

/// Powers of ten from `10^from` up to `n_max`.
pub fn decades(from: u32, n_max: u64) -> Vec<u64> {
    (from..20).map(|k| 10u64.pow(k)).take_while(|&d| d <= n_max).collect()
}
