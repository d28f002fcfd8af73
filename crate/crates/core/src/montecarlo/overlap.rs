//! Rao-Blackwellized meeting probabilities: exact in the walks, Monte Carlo
//! only over environments.

use rayon::prelude::*;
use serde::Serialize;

use super::product::mean_se;
use crate::engine::exact::initial_half_width;
use crate::engine::{build_chain, BoundaryMode, DistVector, WindowChain, WINDOW_CAP};
use crate::env::{make_env, EnvSpec, Medium, Site};
use crate::error::{Error, Result};
use crate::rng::{self, domain};

/// `sum_k prod_j P^{y_j}_{env_j}[Z_n = k]` for `n = 0..=n_max`.
///
/// Each walk evolves on its own absorbing window; windows are doubled until
/// every walk leaks at most `tol`. The returned error bound is the total
/// absorbed mass, which bounds the error of every entry.
pub fn overlaps<M: Medium + ?Sized>(envs: &[&M], starts: &[Site], n_max: u64, tol: f64) -> Result<(Vec<f64>, f64)> {
    let times: Vec<u64> = (0..=n_max).collect();
    overlaps_at(envs, starts, &times, tol)
}

/// Same as [`overlaps`], evaluated only at the strictly increasing `times`.
pub fn overlaps_at<M: Medium + ?Sized>(envs: &[&M], starts: &[Site], times: &[u64], tol: f64) -> Result<(Vec<f64>, f64)> {
    if times.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("times must be strictly increasing".into()));
    }
    let n_max = times.last().copied().unwrap_or(0);
    if envs.is_empty() || envs.len() != starts.len() {
        return Err(Error::InvalidArgument("need one start per environment".into()));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance {tol} must be positive")));
    }
    let mut half = initial_half_width(n_max);
    loop {
        let half_eff = half.min(n_max as Site + 1);
        let chains: Vec<WindowChain> = envs
            .iter()
            .zip(starts)
            .map(|(e, &y)| build_chain(*e, y - half_eff, y + half_eff, BoundaryMode::Absorbing))
            .collect::<Result<_>>()?;
        let mut dists: Vec<DistVector> = chains.iter().zip(starts).map(|(c, &y)| c.point(y)).collect::<Result<_>>()?;
        let mut scratch = Vec::new();
        let mut out = Vec::with_capacity(times.len());
        let mut now = 0u64;
        for &n in times {
            while now < n {
                for (d, c) in dists.iter_mut().zip(&chains) {
                    d.step(c, &mut scratch);
                }
                now += 1;
            }
            out.push(overlap(&dists));
        }
        let leak: f64 = dists.iter().map(|d| d.leaked()).sum();
        if dists.iter().all(|d| d.leaked() <= tol) {
            return Ok((out, leak));
        }
        if 2 * half as usize + 1 > WINDOW_CAP {
            return Err(Error::WindowCapExceeded { cap: WINDOW_CAP, tol, leak });
        }
        half *= 2;
    }
}

fn overlap(dists: &[DistVector]) -> f64 {
    let (first, rest) = dists.split_first().unwrap();
    first
        .iter()
        .filter(|&(_, p)| p != 0.0)
        .map(|(x, p)| rest.iter().fold(p, |acc, d| acc * d.at(x)))
        .sum()
}

/// Environments `0..count` of trial `t`.
pub fn trial_envs(spec: &EnvSpec, seed: u64, t: u64, count: usize) -> Result<Vec<crate::env::Environment>> {
    (0..count)
        .map(|i| make_env(spec.with_seed(rng::key(&[seed, t, domain::ENV, i as u64])), i as u64))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CollisionPoint {
    pub n: u64,
    pub mean: f64,
    pub se: f64,
    /// Mean over environments of the absorbed-mass error bound.
    pub error: f64,
}

/// Estimates of `P[Z^(1)_n = Z^(2)_n]` for two walks from 0 in independent
/// environments at each `n` of `grid`. The same environment pairs are used at
/// every `n`, and `diffs[i]` holds the mean and standard error of the paired
/// difference between grid points `i` and `i + 1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CollisionCurve {
    pub points: Vec<CollisionPoint>,
    pub diffs: Vec<(f64, f64)>,
    pub samples: Vec<Vec<f64>>,
}

pub fn collision_curve(spec: &EnvSpec, grid: &[u64], trials: usize, seed: u64, tol: f64) -> Result<CollisionCurve> {
    spec.validate()?;
    if grid.is_empty() {
        return Err(Error::InvalidArgument("empty grid".into()));
    }
    let mut times = grid.to_vec();
    times.sort_unstable();
    times.dedup();
    let rows: Vec<(Vec<f64>, f64)> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let envs = trial_envs(spec, seed, t, 2)?;
            let (ov, leak) = overlaps_at(&[&envs[0], &envs[1]], &[0, 0], &times, tol)?;
            Ok((grid.iter().map(|n| ov[times.binary_search(n).unwrap()]).collect(), leak))
        })
        .collect::<Result<_>>()?;
    let (err, _) = mean_se(rows.iter().map(|r| r.1));
    let points = grid
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            let (mean, se) = mean_se(rows.iter().map(|r| r.0[i]));
            CollisionPoint { n, mean, se, error: err }
        })
        .collect();
    let diffs = (0..grid.len().saturating_sub(1))
        .map(|i| mean_se(rows.iter().map(|r| r.0[i] - r.0[i + 1])))
        .collect();
    let samples = rows.into_iter().map(|r| r.0).collect();
    Ok(CollisionCurve { points, diffs, samples })
}

/// Single-point estimate of `P[Z^(1)_n = Z^(2)_n]` over independent environments.
pub fn collision_prob_indep(spec: &EnvSpec, n: u64, trials: usize, seed: u64) -> Result<CollisionPoint> {
    let c = collision_curve(spec, &[n], trials, seed, 1e-10)?;
    Ok(c.points[0].clone())
}

/// `(1 / log N) sum_{1 <= n <= N} (1/n) sum_k prod_j P^{y_j}[Z_n = k]` with
/// its running values at the checkpoints.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeetingSum {
    pub value: f64,
    pub curve: Vec<(u64, f64)>,
    pub error: f64,
}

pub fn meeting_sum<M: Medium + ?Sized>(envs: &[&M], starts: &[Site], n_max: u64, checkpoints: &[u64], tol: f64) -> Result<MeetingSum> {
    if n_max < 2 {
        return Err(Error::InvalidArgument("meeting sums need N >= 2".into()));
    }
    let (ov, leak) = overlaps(envs, starts, n_max, tol)?;
    let mut curve = Vec::with_capacity(checkpoints.len());
    let mut sum = 0.0;
    let mut next = 0;
    for n in 1..=n_max {
        sum += ov[n as usize] / n as f64;
        while next < checkpoints.len() && checkpoints[next] == n {
            let norm = if n >= 2 { (n as f64).ln() } else { 1.0 };
            curve.push((n, sum / norm));
            next += 1;
        }
    }
    let ln = (n_max as f64).ln();
    let harmonic: f64 = (1..=n_max).map(|n| 1.0 / n as f64).sum();
    Ok(MeetingSum { value: sum / ln, curve, error: leak * harmonic / ln })
}

/// `r` walks from `starts` sharing one environment.
pub fn same_env_meeting_sum<M: Medium + ?Sized>(env: &M, starts: &[Site], n_max: u64, checkpoints: &[u64], tol: f64) -> Result<MeetingSum> {
    if starts.is_empty() {
        return Err(Error::InvalidArgument("need at least one walk".into()));
    }
    let p0 = starts[0].rem_euclid(2);
    if starts.iter().any(|y| y.rem_euclid(2) != p0) {
        return Err(Error::InvalidArgument("starts must share one parity".into()));
    }
    let envs: Vec<&M> = vec![env; starts.len()];
    meeting_sum(&envs, starts, n_max, checkpoints, tol)
}
