//! Monte Carlo estimate of `P[Z_n not in Xi_n]`.

use rayon::prelude::*;
use serde::Serialize;

use super::overlap::trial_envs;
use super::walk::Tape;
use crate::env::{EnvSpec, Site};
use crate::error::{Error, Result};
use crate::landscape::xi_set;
use crate::rng::{self, domain};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalizationEstimate {
    pub n: u64,
    pub c2: f64,
    pub trials: usize,
    /// Trials whose landscape could not be resolved within the search cap.
    pub undetermined: usize,
    pub outside: usize,
    /// `outside / (trials - undetermined)`.
    pub rate: f64,
    /// Binomial standard error of `rate`.
    pub se: f64,
}

/// Per-trial outcome at one horizon: `None` when undetermined.
pub type Membership = Option<bool>;

/// Outcomes for each trial at each `n` of `grid`. A trial draws one
/// environment and one trajectory; `Xi_n` is recomputed for every `n`.
pub fn localization_samples(spec: &EnvSpec, grid: &[u64], trials: usize, c2: f64, seed: u64) -> Result<Vec<Vec<Membership>>> {
    spec.validate()?;
    if let Some(&n) = grid.iter().find(|&&n| n < 1000) {
        return Err(Error::InvalidArgument(format!("n = {n} below 1000")));
    }
    let mut sorted = grid.to_vec();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) || sorted != grid {
        return Err(Error::InvalidArgument("grid must be strictly increasing".into()));
    }
    for &n in grid {
        crate::landscape::valleys::xi_levels(n, c2)?;
    }
    (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let env = trial_envs(spec, seed, t, 1)?.remove(0);
            let n_max = *grid.last().unwrap_or(&0);
            let mut tape = Tape::new(&env, 0, (n_max as f64).sqrt() as Site + 16);
            let mut rng = rng::stream(&[seed, t, domain::WALKER, 0]);
            let mut z: Site = 0;
            let mut out = Vec::with_capacity(grid.len());
            let mut time = 0u64;
            for &n in grid {
                while time < n {
                    z = tape.step(z, &mut rng);
                    time += 1;
                }
                out.push(match xi_set(&env, n, c2) {
                    Ok(xi) => Some(xi.contains(z)),
                    Err(Error::LandscapeUndetermined(_)) => None,
                    Err(e) => return Err(e),
                });
            }
            Ok(out)
        })
        .collect()
}

pub fn summarize(grid: &[u64], c2: f64, samples: &[Vec<Membership>]) -> Vec<LocalizationEstimate> {
    grid.iter()
        .enumerate()
        .map(|(i, &n)| {
            let undetermined = samples.iter().filter(|s| s[i].is_none()).count();
            let outside = samples.iter().filter(|s| s[i] == Some(false)).count();
            let k = samples.len() - undetermined;
            let rate = if k == 0 { f64::NAN } else { outside as f64 / k as f64 };
            let se = if k == 0 { f64::NAN } else { (rate * (1.0 - rate) / k as f64).sqrt() };
            LocalizationEstimate { n, c2, trials: samples.len(), undetermined, outside, rate, se }
        })
        .collect()
}

pub fn localization_rate(spec: &EnvSpec, n: u64, trials: usize, c2: f64, seed: u64) -> Result<LocalizationEstimate> {
    let s = localization_samples(spec, &[n], trials, c2, seed)?;
    Ok(summarize(&[n], c2, &s).remove(0))
}
