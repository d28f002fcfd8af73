//! Products of `m` simple random walks and `r` walks in random environments.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::walk::{Coin, Tape};
use crate::engine::log_checkpoints;
use crate::env::{make_env, EnvSpec, Environment, Site};
use crate::error::{Error, Result};
use crate::rng::{self, domain};

fn default_per_decade() -> u32 {
    20
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductConfig {
    /// Number of simple random walks.
    pub m: usize,
    /// Number of walks in random environments.
    pub r: usize,
    /// Number of independent environments; walks `0..envs` get their own.
    pub envs: usize,
    /// Environment index for each walk `envs..r`. Empty means round-robin.
    #[serde(default)]
    pub assignment: Vec<usize>,
    pub env: EnvSpec,
    /// Start sites, simple walks first. Empty means all at 0.
    #[serde(default)]
    pub starts: Vec<Site>,
    pub horizon: u64,
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_per_decade")]
    pub per_decade: u32,
    /// Reuse the environments of trial 0 in every trial.
    #[serde(default)]
    pub quenched: bool,
}

impl ProductConfig {
    pub fn new(m: usize, r: usize, envs: usize, env: EnvSpec, horizon: u64, trials: usize, seed: u64) -> Self {
        ProductConfig {
            m,
            r,
            envs,
            assignment: Vec::new(),
            env,
            starts: Vec::new(),
            horizon,
            trials,
            seed,
            per_decade: default_per_decade(),
            quenched: false,
        }
    }

    pub fn dim(&self) -> usize {
        self.m + self.r
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |s: String| Err(Error::InvalidArgument(s));
        if self.dim() == 0 {
            return bad("m + r must be at least 1".into());
        }
        if self.envs > self.r {
            return bad(format!("envs = {} exceeds r = {}", self.envs, self.r));
        }
        if self.r > 0 && self.envs == 0 {
            return bad("walks in random environments need at least one environment".into());
        }
        if !self.assignment.is_empty() {
            if self.assignment.len() != self.r - self.envs {
                return bad(format!("assignment needs {} entries", self.r - self.envs));
            }
            if self.assignment.iter().any(|&j| j >= self.envs) {
                return bad("assignment refers to a missing environment".into());
            }
        }
        if !self.starts.is_empty() && self.starts.len() != self.dim() {
            return bad(format!("starts needs {} entries", self.dim()));
        }
        if self.per_decade == 0 {
            return bad("per_decade must be positive".into());
        }
        self.env.validate()
    }

    /// Environment index of random walk `j` (`0 <= j < r`).
    pub fn env_of(&self, j: usize) -> usize {
        if j < self.envs {
            j
        } else if self.assignment.is_empty() {
            (j - self.envs) % self.envs
        } else {
            self.assignment[j - self.envs]
        }
    }

    pub fn start(&self, k: usize) -> Site {
        self.starts.get(k).copied().unwrap_or(0)
    }

    pub fn checkpoints(&self) -> Vec<u64> {
        log_checkpoints(self.horizon, self.per_decade)
    }

    /// Environments used by `trial`.
    pub fn environments(&self, trial: u64) -> Result<Vec<Environment>> {
        let t = if self.quenched { 0 } else { trial };
        (0..self.envs)
            .map(|i| {
                let seed = rng::key(&[self.seed, t, domain::ENV, i as u64]);
                make_env(self.env.with_seed(seed), i as u64)
            })
            .collect()
    }
}

/// Cumulative counts at each checkpoint, per trial.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeetingStats {
    pub checkpoints: Vec<u64>,
    /// `meets[t][c]`: number of `n <= checkpoints[c]` with all coordinates equal.
    pub meets: Vec<Vec<u32>>,
    /// `returns[t][c]`: number of `n <= checkpoints[c]` with `Y_n = 0`.
    pub returns: Vec<Vec<u32>>,
}

/// Mean and standard error.
pub fn mean_se(xs: impl IntoIterator<Item = f64>) -> (f64, f64) {
    let v: Vec<f64> = xs.into_iter().collect();
    let n = v.len() as f64;
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

impl MeetingStats {
    pub fn trials(&self) -> usize {
        self.meets.len()
    }

    fn column(counts: &[Vec<u32>], c: usize) -> (f64, f64) {
        mean_se(counts.iter().map(|row| row[c] as f64))
    }

    pub fn meet_curve(&self) -> Vec<(u64, f64, f64)> {
        (0..self.checkpoints.len())
            .map(|c| {
                let (m, s) = Self::column(&self.meets, c);
                (self.checkpoints[c], m, s)
            })
            .collect()
    }

    pub fn return_curve(&self) -> Vec<(u64, f64, f64)> {
        (0..self.checkpoints.len())
            .map(|c| {
                let (m, s) = Self::column(&self.returns, c);
                (self.checkpoints[c], m, s)
            })
            .collect()
    }

    /// Index of the checkpoint equal to `n`.
    pub fn checkpoint_index(&self, n: u64) -> Option<usize> {
        self.checkpoints.iter().position(|&c| c == n)
    }
}

/// Counts for one trial.
fn run_trial(cfg: &ProductConfig, trial: u64, checkpoints: &[u64]) -> Result<(Vec<u32>, Vec<u32>)> {
    let envs = cfg.environments(trial)?;
    let half = (cfg.horizon as f64).sqrt().ceil() as Site + 16;
    let mut tapes: Vec<Tape<Environment>> = envs.iter().map(|e| Tape::new(e, 0, half)).collect();
    let env_of: Vec<usize> = (0..cfg.r).map(|j| cfg.env_of(j)).collect();
    let d = cfg.dim();
    let mut pos: Vec<Site> = (0..d).map(|k| cfg.start(k)).collect();
    let mut rngs: Vec<rng::StreamRng> =
        (0..d).map(|k| rng::stream(&[cfg.seed, trial, domain::WALKER, k as u64])).collect();
    let mut coins = vec![Coin::default(); cfg.m];

    let mut meets = Vec::with_capacity(checkpoints.len());
    let mut returns = Vec::with_capacity(checkpoints.len());
    let (mut a_count, mut y_count) = (0u32, 0u32);
    let mut next = 0usize;
    for n in 1..=cfg.horizon {
        for k in 0..cfg.m {
            pos[k] = coins[k].step(pos[k], &mut rngs[k]);
        }
        for j in 0..cfg.r {
            let k = cfg.m + j;
            pos[k] = tapes[env_of[j]].step(pos[k], &mut rngs[k]);
        }
        let first = pos[0];
        if pos.iter().all(|&x| x == first) {
            a_count += 1;
            if first == 0 {
                y_count += 1;
            }
        } else if pos.iter().all(|&x| x == 0) {
            y_count += 1;
        }
        while next < checkpoints.len() && checkpoints[next] == n {
            meets.push(a_count);
            returns.push(y_count);
            next += 1;
        }
    }
    Ok((meets, returns))
}

/// Simulate `cfg.trials` independent trials and record meeting and return
/// counts at log-spaced horizons. Trials run on the current rayon pool; the
/// result does not depend on scheduling.
pub fn simulate_product(cfg: &ProductConfig) -> Result<MeetingStats> {
    cfg.validate()?;
    let checkpoints = cfg.checkpoints();
    let rows: Vec<(Vec<u32>, Vec<u32>)> = (0..cfg.trials as u64)
        .into_par_iter()
        .map(|t| run_trial(cfg, t, &checkpoints))
        .collect::<Result<_>>()?;
    let (meets, returns) = rows.into_iter().unzip();
    Ok(MeetingStats { checkpoints, meets, returns })
}

/// `(sum_n P[A_n])^2 / sum_{n, m} P[A_n & A_m]` estimated as
/// `E[C]^2 / E[C^2]` with `C` the number of meetings up to the horizon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KochenStone {
    pub horizon: u64,
    /// `None` when no meeting was observed.
    pub ratio: Option<f64>,
    /// Delta-method standard error of the ratio.
    pub se: Option<f64>,
    pub mean_count: f64,
    pub mean_square: f64,
}

pub fn kochen_stone_ratio(cfg: &ProductConfig) -> Result<KochenStone> {
    if cfg.m != 2 {
        return Err(Error::InvalidArgument("the Kochen-Stone ratio is defined for m = 2".into()));
    }
    let stats = simulate_product(cfg)?;
    Ok(kochen_stone_from(&stats, stats.checkpoints.len() - 1))
}

/// Ratio at checkpoint index `c` of existing statistics.
pub fn kochen_stone_from(stats: &MeetingStats, c: usize) -> KochenStone {
    let counts: Vec<f64> = stats.meets.iter().map(|row| row[c] as f64).collect();
    let n = counts.len() as f64;
    let m1 = counts.iter().sum::<f64>() / n;
    let m2 = counts.iter().map(|x| x * x).sum::<f64>() / n;
    let horizon = stats.checkpoints[c];
    if m2 == 0.0 {
        return KochenStone { horizon, ratio: None, se: None, mean_count: m1, mean_square: m2 };
    }
    let ratio = m1 * m1 / m2;
    // Gradient of f(m1, m2) = m1^2 / m2 applied to the sample covariance.
    let (g1, g2) = (2.0 * m1 / m2, -m1 * m1 / (m2 * m2));
    let var = counts
        .iter()
        .map(|&x| {
            let d = g1 * (x - m1) + g2 * (x * x - m2);
            d * d
        })
        .sum::<f64>()
        / (n - 1.0).max(1.0);
    KochenStone { horizon, ratio: Some(ratio), se: Some((var / n).sqrt()), mean_count: m1, mean_square: m2 }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(m: usize, r: usize, envs: usize) -> ProductConfig {
        ProductConfig::new(m, r, envs, EnvSpec::two_point(0.3, 1), 2000, 8, 11)
    }

    #[test]
    fn validation() {
        assert!(cfg(0, 0, 0).validate().is_err());
        assert!(cfg(1, 1, 2).validate().is_err());
        assert!(cfg(1, 1, 0).validate().is_err());
        let mut c = cfg(1, 3, 2);
        c.assignment = vec![2];
        assert!(c.validate().is_err());
        c.assignment = vec![1];
        assert!(c.validate().is_ok());
        assert_eq!(c.env_of(2), 1);
    }

    #[test]
    fn parity_obstruction() {
        let mut c = cfg(2, 0, 0);
        c.starts = vec![0, 1];
        let s = simulate_product(&c).unwrap();
        assert!(s.meets.iter().all(|row| row.iter().all(|&x| x == 0)));
    }

    #[test]
    fn deterministic_and_monotone() {
        let c = cfg(1, 2, 1);
        let a = simulate_product(&c).unwrap();
        let b = simulate_product(&c).unwrap();
        assert_eq!(a, b);
        for row in a.meets.iter().chain(a.returns.iter()) {
            assert!(row.windows(2).all(|w| w[0] <= w[1]));
        }
        assert_eq!(*a.checkpoints.last().unwrap(), 2000);
    }

    #[test]
    fn single_walker_meets_itself_every_step() {
        let s = simulate_product(&cfg(1, 0, 0)).unwrap();
        let last = s.checkpoints.len() - 1;
        assert!(s.meets.iter().all(|row| row[last] == 2000));
    }

    #[test]
    fn kochen_stone_undefined_without_meetings() {
        let mut c = cfg(2, 0, 0);
        c.starts = vec![0, 1];
        let k = kochen_stone_ratio(&c).unwrap();
        assert!(k.ratio.is_none());
    }
}
