//! Central valley at depth scale `log N`: the landmarks `theta_N`, `beta_N`,
//! the even bottom `b_hat(N)` and the good-environment events `Delta_N`.

use serde::{Deserialize, Serialize};

use super::extrema::{h_extrema, ExtremaDecomposition, ExtremumKind};
use super::{search_window, MAX_HALF_WIDTH};
use crate::env::{Medium, Site};
use crate::error::{Error, Result};

/// Values of `V` within this distance of the running minimum count as ties.
pub const TIE_TOL: f64 = 1e-9;

/// Parameters `eps_1, ..., eps_6` of the good-environment events.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Eps {
    pub eps1: f64,
    pub eps2: f64,
    pub eps3: f64,
    pub eps4: f64,
    pub eps5: f64,
    pub eps6: f64,
}

impl Default for Eps {
    fn default() -> Self {
        Eps { eps1: 0.05, eps2: 0.05, eps3: 0.02, eps4: 0.05, eps5: 0.05, eps6: 0.05 }
    }
}

impl Eps {
    pub fn validate(&self) -> Result<()> {
        let all = [self.eps1, self.eps2, self.eps3, self.eps4, self.eps5, self.eps6];
        if all.iter().any(|e| !(*e > 0.0 && *e < 1.0)) {
            return Err(Error::InvalidArgument(format!("eps values must lie in (0, 1): {all:?}")));
        }
        if self.eps1 >= 0.5 {
            return Err(Error::InvalidArgument("eps1 must be below 1/2".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    #[serde(rename = "R")]
    Right,
    #[serde(rename = "L")]
    Left,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CentralLandmarks {
    pub n: u64,
    pub eps1: f64,
    pub theta_r: Site,
    pub beta_r: Site,
    pub theta_l: Site,
    pub beta_l: Site,
    pub side: Side,
    /// Even site: `2 floor(beta / 2)` on the selected side.
    pub b_hat: Site,
}

fn check_n(n: u64) -> Result<f64> {
    if n < 3 {
        return Err(Error::InvalidArgument(format!("N = {n} must be at least 3")));
    }
    Ok((n as f64).ln())
}

/// First `i >= 0` (or last `i <= 0` when `dir = -1`) where `V` has risen by
/// `rise` above its running minimum since 0, with the matching argmin:
/// the last minimiser going right, the first going left.
fn theta_beta<M: Medium + ?Sized>(env: &M, rise: f64, dir: Site) -> Option<(Site, Site)> {
    let mut min = env.potential(0);
    let mut arg: Site = 0;
    let mut done: Site = 0;
    let mut block: Site = 256;
    while done < MAX_HALF_WIDTH {
        let (a, b) = (done + 1, (done + block).min(MAX_HALF_WIDTH));
        let vals = if dir > 0 {
            env.potential_range(a, b)
        } else {
            let mut v = env.potential_range(-b, -a);
            v.reverse();
            v
        };
        for (k, v) in vals.into_iter().enumerate() {
            let i = dir * (a + k as Site);
            if v - min >= rise {
                return Some((i, arg));
            }
            // Ties move the argmin outward: the last minimiser going right,
            // the first one going left.
            if v <= min + TIE_TOL {
                arg = i;
                min = min.min(v);
            }
        }
        done = b;
        block *= 2;
    }
    None
}

/// `theta_N`, `beta_N` on both sides of 0 and `b_hat(N)`.
pub fn central_landmarks<M: Medium + ?Sized>(env: &M, n: u64, eps1: f64) -> Result<CentralLandmarks> {
    let ln = check_n(n)?;
    if !(eps1 > 0.0 && eps1 < 0.5) {
        return Err(Error::InvalidArgument(format!("eps1 = {eps1} must lie in (0, 1/2)")));
    }
    let rise = (1.0 + eps1) * ln;
    let not_found = |s: &str| {
        Error::LandscapeUndetermined(format!("theta_N on the {s} not found within {MAX_HALF_WIDTH} sites"))
    };
    let (theta_r, beta_r) = theta_beta(env, rise, 1).ok_or_else(|| not_found("right"))?;
    let (theta_l, beta_l) = theta_beta(env, rise, -1).ok_or_else(|| not_found("left"))?;
    let h = (1.0 - 2.0 * eps1) * ln;
    let initial = theta_r.max(-theta_l) + 1;
    let (side, _) = search_window(env, initial, "x_0 at level (1 - 2 eps1) log N", |path| {
        let d = h_extrema(path, h)?;
        Ok(d.origin_index().map(|k| side_of(&d, k)))
    })?;
    let beta = match side {
        Side::Right => beta_r,
        Side::Left => beta_l,
    };
    Ok(CentralLandmarks {
        n,
        eps1,
        theta_r,
        beta_r,
        theta_l,
        beta_l,
        side,
        b_hat: 2 * beta.div_euclid(2),
    })
}

/// Right iff `x_1` is a minimum, i.e. `x_0` is a maximum.
fn side_of(d: &ExtremaDecomposition, origin: usize) -> Side {
    match d.extrema[origin].kind {
        ExtremumKind::Max => Side::Right,
        ExtremumKind::Min => Side::Left,
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct DeltaFlags {
    pub d0: bool,
    pub d1: bool,
    pub d2: bool,
    pub d3: bool,
    pub d4: bool,
    pub d5: bool,
    pub d6: bool,
    pub d6_r: bool,
    pub d6_l: bool,
}

impl DeltaFlags {
    pub fn all(&self) -> bool {
        self.d0 && self.d1 && self.d2 && self.d3 && self.d4 && self.d5 && self.d6
    }
}

/// Evaluation of the good-environment events for one environment.
///
/// Quantities that could not be determined inside the largest window are
/// `None`, and every event depending on them is false.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GoodEnvReport {
    pub n: u64,
    pub eps: Eps,
    /// `(1 - 2 eps1) log N`.
    pub level: f64,
    pub flags: DeltaFlags,
    pub side: Option<Side>,
    /// `x_{-1}, x_0, x_1, x_2` at `level`.
    pub x: [Option<Site>; 4],
    /// `H(T_{-1}), H(T_0), H(T_1)`.
    pub heights: [Option<f64>; 3],
    pub theta_r: Option<Site>,
    pub beta_r: Option<Site>,
    pub theta_l: Option<Site>,
    pub beta_l: Option<Site>,
    pub b_hat: Option<Site>,
    /// Central valley `x_hat_0 < x_hat_1 < x_hat_2`.
    pub x_hat: Option<[Site; 3]>,
    pub l_minus: Option<Site>,
    pub l_plus: Option<Site>,
}

impl GoodEnvReport {
    pub fn passes(&self) -> bool {
        self.flags.all()
    }
}

fn max_on<M: Medium + ?Sized>(env: &M, a: Site, b: Site) -> f64 {
    env.potential_range(a.min(b), a.max(b)).into_iter().fold(f64::NEG_INFINITY, f64::max)
}

fn min_on<M: Medium + ?Sized>(env: &M, a: Site, b: Site) -> f64 {
    env.potential_range(a.min(b), a.max(b)).into_iter().fold(f64::INFINITY, f64::min)
}

/// First site from `from` in direction `dir` with `V - V(from) >= rise`.
fn first_rise<M: Medium + ?Sized>(env: &M, from: Site, dir: Site, rise: f64) -> Option<Site> {
    let base = env.potential(from);
    let mut k = from;
    while (k - from).abs() <= MAX_HALF_WIDTH {
        if env.potential(k) - base >= rise {
            return Some(k);
        }
        k += dir;
    }
    None
}

/// Evaluate `Delta_N^{(0)}, ..., Delta_N^{(6)}` on `V`.
pub fn delta_checks<M: Medium + ?Sized>(env: &M, n: u64, eps: &Eps) -> Result<GoodEnvReport> {
    eps.validate()?;
    let ln = check_n(n)?;
    let level = (1.0 - 2.0 * eps.eps1) * ln;
    let mut report = GoodEnvReport {
        n,
        eps: *eps,
        level,
        flags: DeltaFlags { d0: true, ..DeltaFlags::default() },
        side: None,
        x: [None; 4],
        heights: [None; 3],
        theta_r: None,
        beta_r: None,
        theta_l: None,
        beta_l: None,
        b_hat: None,
        x_hat: None,
        l_minus: None,
        l_plus: None,
    };

    let rise = (1.0 + eps.eps1) * ln;
    let right = theta_beta(env, rise, 1);
    let left = theta_beta(env, rise, -1);
    if let Some((t, b)) = right {
        report.theta_r = Some(t);
        report.beta_r = Some(b);
        let vb = env.potential(b);
        let s: f64 = env.potential_range(0, t - 1).iter().map(|v| (vb - v).exp()).sum();
        report.flags.d6_r = s <= 1.0 / eps.eps6;
    }
    if let Some((t, b)) = left {
        report.theta_l = Some(t);
        report.beta_l = Some(b);
        let vb = env.potential(b);
        let s: f64 = env.potential_range(t, -1).iter().map(|v| (vb - v).exp()).sum();
        report.flags.d6_l = s <= 1.0 / eps.eps6;
    }
    report.flags.d6 = report.flags.d6_r && report.flags.d6_l;

    // The side needs only x_0; everything else needs x_{-1}, ..., x_2.
    let reach = (eps.eps3.recip() * ln * ln).ceil() as Site;
    let initial = right.map_or(0, |r| r.0).max(left.map_or(0, |l| -l.0)).max(reach) + 1;
    let found = search_window(env, initial, "x_{-1}..x_2", |path| {
        let d = h_extrema(path, level)?;
        let ready = (-1..=2).all(|k| d.x(k).is_some());
        Ok(ready.then_some(d))
    });
    let d = match found {
        Ok((d, _)) => d,
        Err(Error::LandscapeUndetermined(_)) => {
            // Fall back to whatever the largest window determines.
            let path = super::potential_window(env, -MAX_HALF_WIDTH, MAX_HALF_WIDTH)?;
            h_extrema(&path, level)?
        }
        Err(e) => return Err(e),
    };

    let Some(origin) = d.origin_index() else {
        return Ok(report);
    };
    let side = side_of(&d, origin);
    report.side = Some(side);
    for (slot, k) in report.x.iter_mut().zip(-1..=2) {
        *slot = d.x(k).map(|e| e.site);
    }
    for (slot, k) in report.heights.iter_mut().zip(-1..=1) {
        *slot = d.slope(k).map(|s| s.height);
    }
    report.b_hat = match side {
        Side::Right => report.beta_r,
        Side::Left => report.beta_l,
    }
    .map(|b| 2 * b.div_euclid(2));

    let target = (1.0 + 2.0 * eps.eps1) * ln;
    report.flags.d1 = report.heights.iter().all(|h| h.is_some_and(|h| h >= target));

    let [xm1, x0, x1, x2] = report.x;
    if let (Some(x0), Some(x1)) = (x0, x1) {
        let (v0, v1) = (env.potential(x0), env.potential(x1));
        report.flags.d2 = match side {
            Side::Right => max_on(env, 0, x1) < v0 - eps.eps2 * ln,
            Side::Left => max_on(env, x0, 0) < v1 - eps.eps2 * ln,
        };
        report.flags.d4 = v0.abs() > eps.eps4 * ln && v1.abs() > eps.eps4 * ln;
        report.flags.d5 = match side {
            Side::Left => min_on(env, 0, x1) > v0 + eps.eps5 * ln,
            Side::Right => min_on(env, x0, 0) > v1 + eps.eps5 * ln,
        };
    }
    if let (Some(xm1), Some(x2)) = (xm1, x2) {
        let bound = ln * ln / eps.eps3;
        report.flags.d3 = -bound <= xm1 as f64 && x2 as f64 <= bound;
    }
    report.x_hat = match side {
        Side::Right => x0.zip(x1).zip(x2).map(|((a, b), c)| [a, b, c]),
        Side::Left => xm1.zip(x0).zip(x1).map(|((a, b), c)| [a, b, c]),
    };
    if let Some(b) = report.b_hat {
        let rise = (1.0 - eps.eps1) * ln;
        report.l_minus = first_rise(env, b, -1, rise);
        report.l_plus = first_rise(env, b, 1, rise);
    }
    Ok(report)
}
