//! Random environments on Z and their potential.
//!
//! An [`Environment`] is a lazily evaluated i.i.d. field of transition
//! probabilities `omega_x`. Site values come from a keyed hash of
//! `(seed, tag, x)`, so any window can be materialized on demand and two
//! instances built from the same `(spec, tag)` agree site by site.

use std::fmt;
use std::sync::{Arc, RwLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// Site of the integer lattice.
pub type Site = i64;

/// Law of `log rho_0 = log((1 - omega_0) / omega_0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum Law {
    /// `omega` equals `p_low` or `1 - p_low` with probability 1/2 each.
    TwoPoint { p_low: f64 },
    /// `log rho` uniform on `[-half_width, half_width]`.
    LogUniform { half_width: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvSpec {
    #[serde(flatten)]
    pub law: Law,
    pub epsilon0: f64,
    pub seed: u64,
}

/// JSON form of an environment: the spec plus its identity tag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvDocument {
    #[serde(flatten)]
    pub spec: EnvSpec,
    #[serde(default)]
    pub tag: u64,
}

impl EnvSpec {
    pub fn two_point(p_low: f64, seed: u64) -> Self {
        EnvSpec { law: Law::TwoPoint { p_low }, epsilon0: p_low, seed }
    }

    pub fn log_uniform(half_width: f64, epsilon0: f64, seed: u64) -> Self {
        EnvSpec { law: Law::LogUniform { half_width }, epsilon0, seed }
    }

    /// Same law, different seed.
    pub fn with_seed(self, seed: u64) -> Self {
        EnvSpec { seed, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        let eps = self.epsilon0;
        if !(eps > 0.0 && eps < 0.5) {
            return Err(Error::InvalidSpec(format!("epsilon0 = {eps} not in (0, 1/2)")));
        }
        match self.law {
            Law::TwoPoint { p_low } => {
                if p_low == 0.5 {
                    return Err(Error::InvalidSpec(
                        "TwoPoint(0.5) is deterministic: sigma^2 = 0".into(),
                    ));
                }
                if !(p_low >= eps && p_low < 0.5) {
                    return Err(Error::InvalidSpec(format!(
                        "p_low = {p_low} not in [epsilon0, 1/2) with epsilon0 = {eps}"
                    )));
                }
            }
            Law::LogUniform { half_width } => {
                let cap = ((1.0 - eps) / eps).ln();
                if !(half_width > 0.0 && half_width <= cap) {
                    return Err(Error::InvalidSpec(format!(
                        "half_width = {half_width} not in (0, {cap}]"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Population variance of `log rho_0`.
    pub fn sigma2(&self) -> f64 {
        match self.law {
            Law::TwoPoint { p_low } => ((1.0 - p_low) / p_low).ln().powi(2),
            Law::LogUniform { half_width } => half_width * half_width / 3.0,
        }
    }

    /// Bound on `|V(x) - V(x-1)|` implied by the law.
    pub fn max_increment(&self) -> f64 {
        match self.law {
            Law::TwoPoint { p_low } => ((1.0 - p_low) / p_low).ln(),
            Law::LogUniform { half_width } => half_width,
        }
    }

    /// `(omega_x, log rho_x)` for a given key uniform.
    #[inline]
    fn draw(&self, u: f64) -> (f64, f64) {
        match self.law {
            Law::TwoPoint { p_low } => {
                let w = if u < 0.5 { p_low } else { 1.0 - p_low };
                (w, ((1.0 - w) / w).ln())
            }
            Law::LogUniform { half_width } => {
                let lr = (2.0 * u - 1.0) * half_width;
                (1.0 / (1.0 + lr.exp()), lr)
            }
        }
    }
}

impl fmt::Display for EnvSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.law {
            Law::TwoPoint { p_low } => write!(f, "TwoPoint({p_low})"),
            Law::LogUniform { half_width } => write!(f, "LogUniform({half_width})"),
        }?;
        write!(f, " eps0={} seed={}", self.epsilon0, self.seed)
    }
}

/// Anything that assigns an up-probability to every site.
///
/// Implemented by random [`Environment`]s and by deterministic
/// [`FixedEnv`]s (fair or hand-built media used as oracles).
pub trait Medium: Send + Sync {
    fn omega_at(&self, x: Site) -> f64;

    /// `log((1 - omega_x) / omega_x)`.
    fn log_rho(&self, x: Site) -> f64 {
        let w = self.omega_at(x);
        ((1.0 - w) / w).ln()
    }

    /// Potential anchored at `V(0) = 0`.
    fn potential(&self, x: Site) -> f64;

    /// `V(a), ..., V(b)`.
    fn potential_range(&self, a: Site, b: Site) -> Vec<f64> {
        (a..=b).map(|x| self.potential(x)).collect()
    }

    fn omega_range(&self, a: Site, b: Site) -> Vec<f64> {
        (a..=b).map(|x| self.omega_at(x)).collect()
    }

    /// Ellipticity constant: every `omega_x` lies in `[eps0, 1 - eps0]`.
    fn epsilon0(&self) -> f64;
}

/// Prefix sums of `log rho` anchored at 0, grown on demand in either
/// direction. Growth always continues from the current ends, so every value
/// is produced by the same sequence of additions whatever the query order.
#[derive(Debug, Default)]
struct PotentialCache {
    /// `right[i] = V(i)` for `i >= 0`.
    right: Vec<f64>,
    /// `left[i] = V(-(i + 1))`.
    left: Vec<f64>,
}

impl PotentialCache {
    fn new() -> Self {
        PotentialCache { right: vec![0.0], left: Vec::new() }
    }

    fn get(&self, x: Site) -> Option<f64> {
        if x >= 0 {
            self.right.get(x as usize).copied()
        } else {
            self.left.get((-x - 1) as usize).copied()
        }
    }

    fn grow_to(&mut self, x: Site, log_rho: impl Fn(Site) -> f64) {
        if x >= 0 {
            let target = (x as usize + 1).max(2 * self.right.len());
            while self.right.len() < target {
                let k = self.right.len() as Site;
                let last = *self.right.last().unwrap();
                self.right.push(last + log_rho(k));
            }
        } else {
            let target = ((-x) as usize).max(2 * self.left.len());
            while self.left.len() < target {
                // V(y - 1) = V(y) - log rho_y with y = -len.
                let y = -(self.left.len() as Site);
                let above = if y == 0 { 0.0 } else { *self.left.last().unwrap() };
                self.left.push(above - log_rho(y));
            }
        }
    }
}

fn cached_potential(
    cache: &RwLock<PotentialCache>,
    x: Site,
    log_rho: impl Fn(Site) -> f64,
) -> f64 {
    if let Some(v) = cache.read().unwrap().get(x) {
        return v;
    }
    let mut guard = cache.write().unwrap();
    if guard.get(x).is_none() {
        guard.grow_to(x, log_rho);
    }
    guard.get(x).unwrap()
}

fn cached_range(
    cache: &RwLock<PotentialCache>,
    a: Site,
    b: Site,
    log_rho: impl Fn(Site) -> f64 + Copy,
) -> Vec<f64> {
    if a > b {
        return Vec::new();
    }
    // Ensure both ends are present, then copy under one read lock.
    cached_potential(cache, a, log_rho);
    cached_potential(cache, b, log_rho);
    let guard = cache.read().unwrap();
    (a..=b).map(|x| guard.get(x).unwrap()).collect()
}

/// A random environment: i.i.d. `omega_x` drawn from `spec.law`.
#[derive(Debug)]
pub struct Environment {
    spec: EnvSpec,
    tag: u64,
    cache: RwLock<PotentialCache>,
}

impl Clone for Environment {
    fn clone(&self) -> Self {
        Environment { spec: self.spec, tag: self.tag, cache: RwLock::new(PotentialCache::new()) }
    }
}

/// Build a lazily evaluated environment. Distinct tags under one seed give
/// independent fields; equal `(spec, tag)` give identical fields.
pub fn make_env(spec: EnvSpec, tag: u64) -> Result<Environment> {
    spec.validate()?;
    Ok(Environment { spec, tag, cache: RwLock::new(PotentialCache::new()) })
}

impl Environment {
    pub fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    pub fn tag(&self) -> u64 {
        self.tag
    }

    #[inline]
    fn site_draw(&self, x: Site) -> (f64, f64) {
        let u = rng::unit_f64(rng::key(&[self.spec.seed, self.tag, x as u64]));
        self.spec.draw(u)
    }

    /// Rows `(x, omega_x, V(x))` for `x` in `[a, b]`.
    pub fn sample_range(&self, a: Site, b: Site) -> Vec<(Site, f64, f64)> {
        let v = self.potential_range(a, b);
        (a..=b).zip(v).map(|(x, vx)| (x, self.omega_at(x), vx)).collect()
    }
}

impl Medium for Environment {
    #[inline]
    fn omega_at(&self, x: Site) -> f64 {
        self.site_draw(x).0
    }

    #[inline]
    fn log_rho(&self, x: Site) -> f64 {
        self.site_draw(x).1
    }

    fn potential(&self, x: Site) -> f64 {
        cached_potential(&self.cache, x, |y| self.site_draw(y).1)
    }

    fn potential_range(&self, a: Site, b: Site) -> Vec<f64> {
        cached_range(&self.cache, a, b, |y| self.site_draw(y).1)
    }

    fn epsilon0(&self) -> f64 {
        self.spec.epsilon0
    }
}

/// Deterministic medium given by an explicit rule `x -> omega_x`.
#[derive(Clone)]
pub struct FixedEnv {
    rule: Arc<dyn Fn(Site) -> f64 + Send + Sync>,
    epsilon0: f64,
    cache: Arc<RwLock<PotentialCache>>,
}

impl fmt::Debug for FixedEnv {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FixedEnv").field("epsilon0", &self.epsilon0).finish()
    }
}

impl FixedEnv {
    /// `rule` must return values in `[epsilon0, 1 - epsilon0]`.
    pub fn from_fn(epsilon0: f64, rule: impl Fn(Site) -> f64 + Send + Sync + 'static) -> Self {
        FixedEnv {
            rule: Arc::new(rule),
            epsilon0,
            cache: Arc::new(RwLock::new(PotentialCache::new())),
        }
    }

    /// Simple symmetric random walk: `omega_x = 1/2` everywhere.
    pub fn fair() -> Self {
        Self::from_fn(0.5 - f64::EPSILON, |_| 0.5)
    }

    /// Medium whose potential is the given function (with `V(0) = 0`).
    /// Requires `|V(x) - V(x-1)| <= log((1 - eps0) / eps0)`.
    pub fn from_potential(epsilon0: f64, v: impl Fn(Site) -> f64 + Send + Sync + 'static) -> Self {
        Self::from_fn(epsilon0, move |x| {
            let lr = v(x) - v(x - 1);
            1.0 / (1.0 + lr.exp())
        })
    }
}

impl Medium for FixedEnv {
    fn omega_at(&self, x: Site) -> f64 {
        (self.rule)(x)
    }

    fn potential(&self, x: Site) -> f64 {
        cached_potential(&self.cache, x, |y| self.log_rho(y))
    }

    fn potential_range(&self, a: Site, b: Site) -> Vec<f64> {
        cached_range(&self.cache, a, b, |y| self.log_rho(y))
    }

    fn epsilon0(&self) -> f64 {
        self.epsilon0
    }
}

impl<M: Medium + ?Sized> Medium for &M {
    fn omega_at(&self, x: Site) -> f64 {
        (**self).omega_at(x)
    }
    fn log_rho(&self, x: Site) -> f64 {
        (**self).log_rho(x)
    }
    fn potential(&self, x: Site) -> f64 {
        (**self).potential(x)
    }
    fn potential_range(&self, a: Site, b: Site) -> Vec<f64> {
        (**self).potential_range(a, b)
    }
    fn omega_range(&self, a: Site, b: Site) -> Vec<f64> {
        (**self).omega_range(a, b)
    }
    fn epsilon0(&self) -> f64 {
        (**self).epsilon0()
    }
}

/// Sample mean and (population) variance of `log rho` over `[a, b]`.
pub fn env_moments<M: Medium + ?Sized>(env: &M, a: Site, b: Site) -> Result<(f64, f64)> {
    if a > b {
        return Err(Error::EmptyWindow);
    }
    let mut n = 0.0;
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for x in a..=b {
        let v = env.log_rho(x);
        n += 1.0;
        let d = v - mean;
        mean += d / n;
        m2 += d * (v - mean);
    }
    Ok((mean, m2 / n))
}

/// Whether `n^(1/2 - gamma) <= max_{0..n} V <= n^(1/2 + gamma)`.
pub fn max_potential_in_scaling_band<M: Medium + ?Sized>(env: &M, n: u64, gamma: f64) -> bool {
    let max = env
        .potential_range(0, n as Site)
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max);
    let nf = n as f64;
    nf.powf(0.5 - gamma) <= max && max <= nf.powf(0.5 + gamma)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_specs() {
        assert!(make_env(EnvSpec::two_point(0.5, 1), 0).is_err());
        let mut s = EnvSpec::two_point(0.3, 1);
        s.epsilon0 = 0.0;
        assert!(make_env(s, 0).is_err());
        s.epsilon0 = 0.5;
        assert!(make_env(s, 0).is_err());
        assert!(make_env(EnvSpec::two_point(0.2, 1).with_seed(3), 0).is_ok());
        let mut t = EnvSpec::two_point(0.2, 1);
        t.epsilon0 = 0.25;
        assert!(make_env(t, 0).is_err(), "p_low below epsilon0");
        assert!(make_env(EnvSpec::log_uniform(2.0, 0.3, 1), 0).is_err());
        assert!(make_env(EnvSpec::log_uniform(0.8, 0.3, 1), 0).is_ok());
    }

    #[test]
    fn two_point_support_and_determinism() {
        let env = make_env(EnvSpec::two_point(0.3, 9), 0).unwrap();
        for x in -500..500 {
            let w = env.omega_at(x);
            assert!(w == 0.3 || w == 0.7);
        }
        let again = make_env(EnvSpec::two_point(0.3, 9), 0).unwrap();
        assert_eq!(env.omega_at(17), again.omega_at(17));
        assert_eq!(env.omega_at(17), env.omega_at(17));
    }

    #[test]
    fn tags_give_different_fields() {
        let a = make_env(EnvSpec::two_point(0.3, 9), 0).unwrap();
        let b = make_env(EnvSpec::two_point(0.3, 9), 1).unwrap();
        let same = (0..1000).filter(|&x| a.omega_at(x) == b.omega_at(x)).count();
        assert!(same > 400 && same < 600, "{same}");
    }

    #[test]
    fn log_uniform_support() {
        let env = make_env(EnvSpec::log_uniform(0.8, 0.3, 4), 2).unwrap();
        for x in -300..300 {
            let w = env.omega_at(x);
            assert!((0.3..=0.7).contains(&w));
            assert!(((1.0 - w) / w).ln().abs() <= 0.8 + 1e-12);
        }
    }

    #[test]
    fn potential_definition_branches() {
        let env = make_env(EnvSpec::two_point(0.3, 5), 0).unwrap();
        assert_eq!(env.potential(0), 0.0);
        assert!((env.potential(-1) + env.log_rho(0)).abs() < 1e-15);
        assert!((env.potential(2) - env.log_rho(1) - env.log_rho(2)).abs() < 1e-15);
    }

    #[test]
    fn two_sites_at_low_value() {
        // Find a seed with omega_1 = omega_2 = 0.3.
        let env = (0..)
            .map(|s| make_env(EnvSpec::two_point(0.3, s), 0).unwrap())
            .find(|e| e.omega_at(1) == 0.3 && e.omega_at(2) == 0.3)
            .unwrap();
        let expect = 2.0 * (7.0f64 / 3.0).ln();
        assert!((env.potential(2) - expect).abs() < 1e-14);
    }

    #[test]
    fn range_matches_pointwise_in_any_order() {
        let a = make_env(EnvSpec::log_uniform(0.5, 0.3, 11), 3).unwrap();
        let b = make_env(EnvSpec::log_uniform(0.5, 0.3, 11), 3).unwrap();
        let pts: Vec<f64> = [40, -7, 3, -90, 77].iter().map(|&x| a.potential(x)).collect();
        let r = b.potential_range(-100, 100);
        for (i, &x) in [40i64, -7, 3, -90, 77].iter().enumerate() {
            assert_eq!(pts[i].to_bits(), r[(x + 100) as usize].to_bits());
        }
    }

    #[test]
    fn moments_of_single_site() {
        let env = (0..)
            .map(|s| make_env(EnvSpec::two_point(0.3, s), 0).unwrap())
            .find(|e| e.omega_at(1) == 0.3)
            .unwrap();
        let (m, v) = env_moments(&env, 1, 1).unwrap();
        assert!((m - (7.0f64 / 3.0).ln()).abs() < 1e-15);
        assert_eq!(v, 0.0);
        assert_eq!(env_moments(&env, 2, 1), Err(Error::EmptyWindow));
    }

    #[test]
    fn fixed_env_from_potential_roundtrips() {
        let env = FixedEnv::from_potential(0.1, |x| 0.5 * (x as f64).abs());
        for x in -20..20 {
            assert!((env.potential(x) - 0.5 * (x as f64).abs()).abs() < 1e-12);
        }
    }

    #[test]
    fn spec_json_shape() {
        let doc = EnvDocument { spec: EnvSpec::two_point(0.3, 7), tag: 2 };
        let s = serde_json::to_string(&doc).unwrap();
        assert_eq!(s, r#"{"law":"two_point","p_low":0.3,"epsilon0":0.3,"seed":7,"tag":2}"#);
        let back: EnvDocument =
            serde_json::from_str(r#"{"law":"log_uniform","half_width":0.5,"epsilon0":0.3,"seed":1}"#)
                .unwrap();
        assert_eq!(back.tag, 0);
        assert_eq!(back.spec.law, Law::LogUniform { half_width: 0.5 });
    }
}
