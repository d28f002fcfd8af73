//! Reversible measures of the walk and of the walk reflected in a valley.

use serde::Serialize;

use super::exact::log_add_exp;
use crate::env::{Medium, Site};
use crate::error::{Error, Result};

/// `mu(x) = exp(-V(x)) + exp(-V(x-1))`.
pub fn mu<M: Medium + ?Sized>(env: &M, x: Site) -> f64 {
    log_mu(env, x).exp()
}

pub fn log_mu<M: Medium + ?Sized>(env: &M, x: Site) -> f64 {
    log_add_exp(-env.potential(x), -env.potential(x - 1))
}

/// Log of the reversible measure of the walk reflected at `x0` and `x2`:
/// `exp(-V(x0))` at `x0`, `exp(-V(x2 - 1))` at `x2`, `mu` in between.
pub fn log_mu_hat<M: Medium + ?Sized>(env: &M, x0: Site, x2: Site, x: Site) -> f64 {
    if x < x0 || x > x2 {
        f64::NEG_INFINITY
    } else if x == x0 {
        -env.potential(x0)
    } else if x == x2 {
        -env.potential(x2 - 1)
    } else {
        log_mu(env, x)
    }
}

/// Probability measure on the even sites of `[x0, x2]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvenMeasure {
    pub sites: Vec<Site>,
    pub probs: Vec<f64>,
}

impl EvenMeasure {
    pub fn get(&self, x: Site) -> f64 {
        match self.sites.binary_search(&x) {
            Ok(i) => self.probs[i],
            Err(_) => 0.0,
        }
    }

    pub fn pairs(&self) -> Vec<(Site, f64)> {
        self.sites.iter().copied().zip(self.probs.iter().copied()).collect()
    }

    /// Inverse-CDF draw for a uniform `u` in `[0, 1)`.
    pub fn sample(&self, u: f64) -> Site {
        let mut acc = 0.0;
        for (x, p) in self.sites.iter().zip(&self.probs) {
            acc += p;
            if u < acc {
                return *x;
            }
        }
        *self.sites.last().unwrap()
    }
}

/// `nu_hat`: the normalized restriction of `mu_hat` to even sites, invariant
/// for two steps of the reflected walk.
pub fn reflected_nu<M: Medium + ?Sized>(env: &M, x0: Site, x2: Site) -> Result<EvenMeasure> {
    if x0 >= x2 {
        return Err(Error::InvalidArgument(format!("need x0 < x2, got ({x0}, {x2})")));
    }
    if x0.rem_euclid(2) != 0 || x2.rem_euclid(2) != 0 {
        return Err(Error::InvalidArgument(format!("endpoints ({x0}, {x2}) must be even")));
    }
    let sites: Vec<Site> = (x0..=x2).step_by(2).collect();
    let logs: Vec<f64> = sites.iter().map(|&x| log_mu_hat(env, x0, x2, x)).collect();
    let m = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = logs.iter().map(|l| (l - m).exp()).collect();
    let total: f64 = w.iter().sum();
    Ok(EvenMeasure { sites, probs: w.into_iter().map(|x| x / total).collect() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::FixedEnv;

    #[test]
    fn fair_mu_is_two() {
        let env = FixedEnv::fair();
        for x in -5..5 {
            assert!((mu(&env, x) - 2.0).abs() < 1e-14);
        }
    }

    #[test]
    fn two_site_valley() {
        let env = FixedEnv::from_fn(0.1, |x| if x == 1 { 0.37 } else { 0.5 });
        let nu = reflected_nu(&env, 0, 2).unwrap();
        assert_eq!(nu.sites, vec![0, 2]);
        assert!((nu.probs[0] - 0.63).abs() < 1e-14);
        assert!((nu.probs[1] - 0.37).abs() < 1e-14);
        let fair = reflected_nu(&FixedEnv::fair(), 0, 2).unwrap();
        assert!((fair.probs[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn odd_endpoints_rejected() {
        assert!(reflected_nu(&FixedEnv::fair(), 1, 4).is_err());
        assert!(reflected_nu(&FixedEnv::fair(), 4, 4).is_err());
    }

    #[test]
    fn sampling_follows_cdf() {
        let nu = EvenMeasure { sites: vec![0, 2, 4], probs: vec![0.2, 0.5, 0.3] };
        assert_eq!(nu.sample(0.0), 0);
        assert_eq!(nu.sample(0.2), 2);
        assert_eq!(nu.sample(0.69), 2);
        assert_eq!(nu.sample(0.99), 4);
    }
}
