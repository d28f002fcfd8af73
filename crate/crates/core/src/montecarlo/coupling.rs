//! Coupling of the walk started at the bottom of the central valley with the
//! walk reflected in that valley and started from its invariant law.

use rand::RngCore;
use serde::Serialize;

use super::walk::Tape;
use crate::engine::{point_series, reflected_nu, EvenMeasure};
use crate::env::{Medium, Site};
use crate::error::{Error, Result};
use crate::landscape::{delta_checks, Eps, GoodEnvReport, Side};
use crate::rng::{self, domain};

/// Everything the coupling needs from the landscape of one environment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CouplingPlan {
    pub n: u64,
    pub eps: Eps,
    pub side: Side,
    pub b_hat: Site,
    /// `x_hat_0, x_hat_1, x_hat_2`.
    pub x_hat: [Site; 3],
    /// Reflection window: `x_hat_0` rounded up and `x_hat_2` rounded down to even sites.
    pub lo: Site,
    pub hi: Site,
    pub l_minus: Site,
    pub l_plus: Site,
    #[serde(skip)]
    pub nu: EvenMeasure,
}

fn even_up(x: Site) -> Site {
    x + x.rem_euclid(2)
}

fn even_down(x: Site) -> Site {
    x - x.rem_euclid(2)
}

/// `Ok(Err(report))` when the environment fails the good-environment checks.
pub fn plan_coupling<M: Medium + ?Sized>(env: &M, n: u64, eps: &Eps) -> Result<std::result::Result<CouplingPlan, GoodEnvReport>> {
    let report = delta_checks(env, n, eps)?;
    if !report.passes() {
        return Ok(Err(report));
    }
    let missing = || Error::LandscapeUndetermined("passing report without landmarks".into());
    let x_hat = report.x_hat.ok_or_else(missing)?;
    let b_hat = report.b_hat.ok_or_else(missing)?;
    let side = report.side.ok_or_else(missing)?;
    let (l_minus, l_plus) = (report.l_minus.ok_or_else(missing)?, report.l_plus.ok_or_else(missing)?);
    let (lo, hi) = (even_up(x_hat[0]), even_down(x_hat[2]));
    if !(lo < b_hat && b_hat < hi) {
        return Err(Error::InvalidArgument(format!("b_hat = {b_hat} not inside ({lo}, {hi})")));
    }
    let nu = reflected_nu(env, lo, hi)?;
    Ok(Ok(CouplingPlan { n, eps: *eps, side, b_hat, x_hat, lo, hi, l_minus, l_plus, nu }))
}

/// One run of the coupling together with the approach phase.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CouplingOutcome {
    pub trial: u64,
    pub z_hat_0: Site,
    /// First `k` with `Z_k = Z_hat_k`, if it happened by time `N`.
    pub tau_meet: Option<u64>,
    /// First `k > tau_meet` with `Z_k` outside the reflection window.
    pub tau_exit: Option<u64>,
    /// `tau(b_hat)` before the outer wall, for the walk started at `y`.
    /// `None` if neither was hit within `N` steps.
    pub d1: Option<bool>,
    /// `tau(wall) ^ tau(b_hat) <= N^(1 - eps1)`.
    pub d2: bool,
    /// `Z` from `b_hat` stays strictly inside `(x_hat_0, x_hat_2)` up to time `N - 1`.
    pub d3: bool,
    pub tau_l_minus: Option<u64>,
    pub tau_l_plus: Option<u64>,
    pub times: Vec<u64>,
    /// `Z_n` at the requested times.
    pub z_at: Vec<Site>,
    /// `Z_n = b_hat` at the requested times.
    pub hits: Vec<bool>,
}

/// Full trajectories, for checking the construction.
#[derive(Debug, Clone, Default)]
pub struct Trace {
    pub z: Vec<Site>,
    pub z_hat: Vec<Site>,
}

/// Reflected step: forced up at `lo`, forced down at `hi`.
fn reflected_step<M: Medium + ?Sized>(tape: &mut Tape<M>, lo: Site, hi: Site, x: Site, u: u64) -> Site {
    if x <= lo {
        x + 1
    } else if x >= hi {
        x - 1
    } else {
        tape.step_with(x, u)
    }
}

fn set_first(slot: &mut Option<u64>, k: u64) {
    if slot.is_none() {
        *slot = Some(k);
    }
}

/// Run the approach phase from `y` and the coupling from `b_hat` for `N`
/// steps. `times` are the horizons at which `Z` is recorded.
pub fn run_coupling<M: Medium + ?Sized>(env: &M, plan: &CouplingPlan, y: Site, times: &[u64], seed: u64, trial: u64, trace: Option<&mut Trace>) -> CouplingOutcome {
    let n = plan.n;
    let half = (plan.hi - plan.lo).max((n as f64).sqrt() as Site) + 16;
    let mut tape = Tape::new(env, plan.b_hat, half);

    // Approach: from y until b_hat or the outer wall.
    let wall = match plan.side {
        Side::Right => plan.x_hat[0],
        Side::Left => plan.x_hat[2],
    };
    let mut rng_a = rng::stream(&[seed, trial, domain::APPROACH, 0]);
    let d2_limit = (n as f64).powf(1.0 - plan.eps.eps1).floor() as u64;
    let (mut x, mut k) = (y, 0u64);
    let mut d1 = None;
    let mut first_hit = if x == plan.b_hat || x == wall { Some(0) } else { None };
    if first_hit.is_some() {
        d1 = Some(x == plan.b_hat);
    }
    while first_hit.is_none() && k < n {
        x = tape.step(x, &mut rng_a);
        k += 1;
        if x == plan.b_hat || x == wall {
            first_hit = Some(k);
            d1 = Some(x == plan.b_hat);
        }
    }
    let d2 = first_hit.is_some_and(|t| t <= d2_limit);

    // Coupling.
    let mut rng_z = rng::stream(&[seed, trial, domain::COUPLING, 0]);
    let mut rng_h = rng::stream(&[seed, trial, domain::COUPLING, 1]);
    let u0 = rng::unit_f64(rng::stream(&[seed, trial, domain::COUPLING, 2]).next_u64());
    let z_hat_0 = plan.nu.sample(u0);
    let (lo, hi) = (plan.lo, plan.hi);
    let (mut z, mut zh) = (plan.b_hat, z_hat_0);
    let mut tau_meet = if z == zh { Some(0) } else { None };
    let mut tau_exit = None;
    let mut d3 = true;
    let (mut t_lm, mut t_lp) = (None, None);
    let mut trace = trace;
    let mut order: Vec<usize> = (0..times.len()).collect();
    order.sort_by_key(|&i| times[i]);
    let mut by_time = vec![0; times.len()];
    let mut next = 0;
    let record = |k: u64, z: Site, next: &mut usize, by_time: &mut Vec<Site>| {
        while *next < order.len() && times[order[*next]] == k {
            by_time[order[*next]] = z;
            *next += 1;
        }
    };
    let check = |k: u64, z: Site, t_lm: &mut Option<u64>, t_lp: &mut Option<u64>, d3: &mut bool| {
        if z == plan.l_minus {
            set_first(t_lm, k);
        }
        if z == plan.l_plus {
            set_first(t_lp, k);
        }
        if k < n && (z <= plan.x_hat[0] || z >= plan.x_hat[2]) {
            *d3 = false;
        }
    };
    check(0, z, &mut t_lm, &mut t_lp, &mut d3);
    record(0, z, &mut next, &mut by_time);
    if let Some(t) = trace.as_deref_mut() {
        t.z.push(z);
        t.z_hat.push(zh);
    }
    for k in 1..=n {
        let u = rng_z.next_u64();
        let locked = tau_meet.is_some() && tau_exit.is_none();
        let new_z = tape.step_with(z, u);
        zh = if locked {
            reflected_step(&mut tape, lo, hi, zh, u)
        } else {
            reflected_step(&mut tape, lo, hi, zh, rng_h.next_u64())
        };
        z = new_z;
        if locked && !(lo..=hi).contains(&z) {
            tau_exit = Some(k);
        }
        if tau_meet.is_none() && z == zh {
            tau_meet = Some(k);
        }
        check(k, z, &mut t_lm, &mut t_lp, &mut d3);
        record(k, z, &mut next, &mut by_time);
        if let Some(t) = trace.as_deref_mut() {
            t.z.push(z);
            t.z_hat.push(zh);
        }
    }
    let z_at = by_time;
    let hits = z_at.iter().map(|&s| s == plan.b_hat).collect();
    CouplingOutcome {
        trial,
        z_hat_0,
        tau_meet,
        tau_exit,
        d1,
        d2,
        d3,
        tau_l_minus: t_lm,
        tau_l_plus: t_lp,
        times: times.to_vec(),
        z_at,
        hits,
    }
}

/// Positions of an uncoupled walk from `b_hat` at `times`, on its own stream.
pub fn plain_walk_at<M: Medium + ?Sized>(env: &M, start: Site, times: &[u64], seed: u64, trial: u64) -> Vec<Site> {
    let n_max = times.iter().copied().max().unwrap_or(0);
    let mut tape = Tape::new(env, start, (n_max as f64).sqrt() as Site + 16);
    let mut rng = rng::stream(&[seed, trial, domain::PLAIN, 0]);
    let mut sorted: Vec<(u64, usize)> = times.iter().copied().zip(0..).collect();
    sorted.sort_unstable();
    let mut out = vec![0; times.len()];
    let (mut z, mut k) = (start, 0u64);
    for (t, i) in sorted {
        while k < t {
            z = tape.step(z, &mut rng);
            k += 1;
        }
        out[i] = z;
    }
    out
}

/// `min P^y[Z_n = target]` over even `n` in `[ceil(N^0.9), N]`, computed
/// exactly, with the minimizing `n` and the absorbed-mass error bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LocalizationFloor {
    pub value: f64,
    pub argmin: u64,
    pub error: f64,
}

pub fn localization_floor<M: Medium + ?Sized>(env: &M, y: Site, target: Site, n: u64, tol: f64) -> Result<LocalizationFloor> {
    if (target - y).rem_euclid(2) != 0 {
        return Err(Error::InvalidArgument(format!("{y} and {target} differ in parity")));
    }
    let (p, error) = point_series(env, y, target, n, tol)?;
    let start = (n as f64).powf(0.9).ceil() as u64;
    let start = start + start % 2;
    let (mut value, mut argmin) = (f64::INFINITY, start);
    for m in (start..=n).step_by(2) {
        if p[m as usize] < value {
            value = p[m as usize];
            argmin = m;
        }
    }
    if value == f64::INFINITY {
        return Err(Error::InvalidArgument(format!("no even n in [N^0.9, N] for N = {n}")));
    }
    Ok(LocalizationFloor { value, argmin, error })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::FixedEnv;

    /// Deep symmetric valley around 0 with walls of slope `s`.
    fn valley(s: f64) -> FixedEnv {
        FixedEnv::from_potential(1e-6, move |x| s * (x as f64).abs())
    }

    fn toy_plan(env: &FixedEnv, n: u64) -> CouplingPlan {
        let (lo, hi) = (-20, 20);
        CouplingPlan {
            n,
            eps: Eps::default(),
            side: Side::Right,
            b_hat: 0,
            x_hat: [lo, 0, hi],
            lo,
            hi,
            l_minus: -8,
            l_plus: 8,
            nu: reflected_nu(env, lo, hi).unwrap(),
        }
    }

    #[test]
    fn lock_invariant() {
        let env = valley(0.4);
        let plan = toy_plan(&env, 3000);
        for trial in 0..50 {
            let mut tr = Trace::default();
            let o = run_coupling(&env, &plan, 0, &[1000], 7, trial, Some(&mut tr));
            assert_eq!(tr.z.len(), 3001);
            if let Some(m) = o.tau_meet {
                let end = o.tau_exit.unwrap_or(3001);
                assert!(o.tau_exit.is_none_or(|e| e > m));
                for k in m as usize..end as usize {
                    assert_eq!(tr.z[k], tr.z_hat[k]);
                }
            }
            assert!(tr.z_hat.iter().all(|&x| (plan.lo..=plan.hi).contains(&x)));
        }
    }

    #[test]
    fn deep_valley_meets_and_stays() {
        let env = valley(0.8);
        let plan = toy_plan(&env, 2000);
        let o = run_coupling(&env, &plan, 0, &[1000, 2000], 3, 0, None);
        assert!(o.tau_meet.is_some());
        assert!(o.d3);
        assert_eq!(o.d1, Some(true));
        assert!(o.d2);
        assert_eq!(o.times, vec![1000, 2000]);
    }

    #[test]
    fn coupled_marginal_is_the_walk() {
        let env = valley(0.2);
        let plan = toy_plan(&env, 400);
        let mut a: Vec<Site> = (0..4000).map(|t| run_coupling(&env, &plan, 0, &[200], 1, t, None).z_at[0]).collect();
        let mut b: Vec<Site> = (0..4000).map(|t| plain_walk_at(&env, 0, &[200], 1, t)[0]).collect();
        a.sort_unstable();
        b.sort_unstable();
        let (ma, _) = crate::montecarlo::mean_se(a.iter().map(|&x| x as f64));
        let (mb, _) = crate::montecarlo::mean_se(b.iter().map(|&x| x as f64));
        assert!((ma - mb).abs() < 0.5);
    }

    #[test]
    fn floor_on_fair_walk() {
        let env = FixedEnv::fair();
        let f = localization_floor(&env, 0, 0, 100, 1e-12).unwrap();
        // P[S_n = 0] decreases in even n, so the floor sits at N.
        assert_eq!(f.argmin, 100);
        assert!(localization_floor(&env, 0, 1, 100, 1e-12).is_err());
    }

    #[test]
    fn even_rounding() {
        assert_eq!((even_up(-5), even_up(-4), even_up(3)), (-4, -4, 4));
        assert_eq!((even_down(-5), even_down(7), even_down(6)), (-6, 6, 6));
    }
}
