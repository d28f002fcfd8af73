//! Exact quenched quantities for a single walk in a fixed environment.

use super::chain::{build_chain, evolve, BoundaryMode, DistVector, WindowChain};
use crate::env::{Medium, Site};
use crate::error::{Error, Result};

/// Largest window (in sites) the adaptive routines will build.
pub const WINDOW_CAP: usize = 1 << 20;

/// `log(sum_i exp(x_i))`.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// `log(e^a + e^b)`.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// Initial half-width for horizon `n`.
pub fn initial_half_width(n: u64) -> Site {
    let l = (n.max(1) as f64).ln();
    ((4.0 * l * l + 16.0) / 2.0).ceil() as Site
}

fn check_tol(tol: f64) -> Result<()> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance {tol} must be positive")));
    }
    Ok(())
}

/// Law of `Z_n` under `P^y` on an absorbing window around `y`, widened until
/// the absorbed mass is at most `tol`. The absorbed mass bounds the error of
/// every point probability.
pub fn distribution<M: Medium + ?Sized>(env: &M, y: Site, n: u64, tol: f64) -> Result<DistVector> {
    check_tol(tol)?;
    let mut half = initial_half_width(n);
    loop {
        // Mass cannot reach the ends in n steps when half > n.
        let half_eff = half.min(n as Site + 1);
        let chain = build_chain(env, y - half_eff, y + half_eff, BoundaryMode::Absorbing)?;
        let d = evolve(&chain, &chain.point(y)?, n);
        if d.leaked() <= tol {
            return Ok(d);
        }
        if 2 * half as usize + 1 > WINDOW_CAP {
            return Err(Error::WindowCapExceeded { cap: WINDOW_CAP, tol, leak: d.leaked() });
        }
        half *= 2;
    }
}

/// `P^y[Z_n = k]` with an error bound.
pub fn point_prob<M: Medium + ?Sized>(env: &M, y: Site, n: u64, k: Site, tol: f64) -> Result<(f64, f64)> {
    check_tol(tol)?;
    if n == 0 {
        return Ok((if y == k { 1.0 } else { 0.0 }, 0.0));
    }
    if (y + n as Site - k).rem_euclid(2) == 1 || (k - y).unsigned_abs() > n {
        return Ok((0.0, 0.0));
    }
    let d = distribution(env, y, n, tol)?;
    Ok((d.at(k), d.leaked()))
}

/// `P^b[tau(c) < tau(a)]` for `a < b < c`, from the potential.
pub fn hitting_prob<M: Medium + ?Sized>(env: &M, a: Site, b: Site, c: Site) -> Result<f64> {
    check_triple(a, b, c)?;
    let v = env.potential_range(a, c - 1);
    let num = log_sum_exp(&v[..(b - a) as usize]);
    let den = log_sum_exp(&v);
    Ok((num - den).exp())
}

fn check_triple(a: Site, b: Site, c: Site) -> Result<()> {
    if !(a < b && b < c) {
        return Err(Error::InvalidArgument(format!("need a < b < c, got ({a}, {b}, {c})")));
    }
    Ok(())
}

/// Solve `u(i) = rhs + p_i u(i+1) + (1 - p_i) u(i-1)` on the interior
/// sites `1..=m` with `u(0) = left`, `u(m+1) = right`.
///
/// Tridiagonal elimination; the pivots are carried through their
/// complements `1 - c_i` so that no step subtracts nearby numbers.
pub fn first_step_solve(p: &[f64], rhs: f64, left: f64, right: f64) -> Vec<f64> {
    let m = p.len();
    let mut cp = vec![0.0; m];
    let mut dp = vec![0.0; m];
    let mut e_prev = 1.0;
    let mut d_prev = left;
    for i in 0..m {
        let (pi, qi) = (p[i], 1.0 - p[i]);
        let den = pi + qi * e_prev;
        cp[i] = pi / den;
        dp[i] = (rhs + qi * d_prev) / den;
        e_prev = qi * e_prev / den;
        d_prev = dp[i];
    }
    let mut u = vec![0.0; m];
    let mut next = right;
    for i in (0..m).rev() {
        u[i] = cp[i] * next + dp[i];
        next = u[i];
    }
    u
}

/// `P^b[tau(c) < tau(a)]` by solving the first-step equations directly.
pub fn hitting_prob_oracle<M: Medium + ?Sized>(env: &M, a: Site, b: Site, c: Site) -> Result<f64> {
    check_triple(a, b, c)?;
    let p = env.omega_range(a + 1, c - 1);
    let u = first_step_solve(&p, 0.0, 0.0, 1.0);
    Ok(u[(b - a - 1) as usize])
}

/// `E^b[tau(a) ^ tau(c)]` for `a < b < c`.
pub fn expected_exit<M: Medium + ?Sized>(env: &M, a: Site, b: Site, c: Site) -> Result<f64> {
    check_triple(a, b, c)?;
    let p = env.omega_range(a + 1, c - 1);
    let m = first_step_solve(&p, 1.0, 0.0, 0.0);
    Ok(m[(b - a - 1) as usize])
}

/// Result of an adaptive computation: value and a bound on its error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounded {
    pub value: f64,
    pub error: f64,
}

/// Absorbing chain from `b` towards `target` with a wall `dist` sites beyond
/// `b` on the other side. Returns the chain and the start distribution.
fn target_chain<M: Medium + ?Sized>(env: &M, b: Site, target: Site, dist: Site) -> Result<(WindowChain, DistVector, bool)> {
    let up = target > b;
    let (lo, hi) = if up { (b - dist, target) } else { (target, b + dist) };
    let chain = build_chain(env, lo, hi, BoundaryMode::Absorbing)?;
    let d = chain.point(b)?;
    Ok((chain, d, up))
}

/// `P^b[tau(target) < k]`, absorbing at `target` and at a wall on the far
/// side whose absorbed mass is reported as the error.
pub fn hitting_tail<M: Medium + ?Sized>(env: &M, b: Site, target: Site, k: u64, tol: f64) -> Result<Bounded> {
    check_tol(tol)?;
    if b == target {
        return Err(Error::InvalidArgument("start and target coincide".into()));
    }
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    let gap = (target - b).abs();
    if k as Site <= gap {
        return Ok(Bounded { value: 0.0, error: 0.0 });
    }
    let steps = k - 1;
    let mut dist = 4 * gap.max(1);
    loop {
        // A wall farther than the number of steps is never reached.
        let d_eff = dist.min(steps as Site + 1);
        let (chain, d0, up) = target_chain(env, b, target, d_eff)?;
        let d = evolve(&chain, &d0, steps);
        let (low, high) = d.leaked_sides();
        let (hit, wall) = if up { (high, low) } else { (low, high) };
        if wall <= tol {
            return Ok(Bounded { value: hit, error: wall });
        }
        if (gap + d_eff) as usize + 1 > WINDOW_CAP {
            return Err(Error::WindowCapExceeded { cap: WINDOW_CAP, tol, leak: wall });
        }
        dist *= 2;
    }
}

/// `P^b[tau(a) = k]` exactly (`tau` counts steps from time 1).
pub fn first_visit_prob<M: Medium + ?Sized>(env: &M, b: Site, a: Site, k: u64) -> Result<f64> {
    if a == b {
        return Err(Error::InvalidArgument("a and b must differ".into()));
    }
    let gap = (a - b).unsigned_abs();
    if k < gap {
        return Ok(0.0);
    }
    // The wall is out of reach, so the absorbed mass at `a` is exact.
    let (chain, d0, up) = target_chain(env, b, a, k as Site + 1)?;
    let before = evolve(&chain, &d0, k - 1);
    let after = evolve(&chain, &before, 1);
    let pick = |d: &DistVector| if up { d.leaked_sides().1 } else { d.leaked_sides().0 };
    Ok(pick(&after) - pick(&before))
}

/// `P^y[hit a before b]` for `y` between `a` and `b` (time 0 included).
pub fn hit_before<M: Medium + ?Sized>(env: &M, y: Site, a: Site, b: Site) -> Result<f64> {
    let (lo, hi) = (a.min(b), a.max(b));
    if a == b || y < lo || y > hi {
        return Err(Error::InvalidArgument(format!("{y} is not between {a} and {b}")));
    }
    let v = env.potential_range(lo, hi - 1);
    let den = log_sum_exp(&v);
    // P^y[hit hi before lo] = sum_{lo..y-1} e^V / sum_{lo..hi-1} e^V.
    let up = if y == lo { 0.0 } else { (log_sum_exp(&v[..(y - lo) as usize]) - den).exp() };
    Ok(if a == hi { up } else { 1.0 - up })
}

/// `P^b[tau(a) < tau(b)]` where `tau(b)` is the return time to `b`.
pub fn escape_prob<M: Medium + ?Sized>(env: &M, b: Site, a: Site) -> Result<f64> {
    if a == b {
        return Err(Error::InvalidArgument("a and b must differ".into()));
    }
    let w = env.omega_at(b);
    if a < b {
        Ok((1.0 - w) * hit_before(env, b - 1, a, b)?)
    } else {
        Ok(w * hit_before(env, b + 1, a, b)?)
    }
}

/// Whether `P^b[tau(a) = k] <= P^b[tau(a) < tau(b)]`.
pub fn first_visit_bound_check<M: Medium + ?Sized>(env: &M, a: Site, b: Site, k: u64) -> Result<bool> {
    let left = first_visit_prob(env, b, a, k)?;
    let right = escape_prob(env, b, a)?;
    Ok(left <= right * (1.0 + 1e-12) + 1e-300)
}

/// `P^y[Z_n = k]` for `n = 0..=n_max`, with the absorbed mass bounding the
/// error of each entry.
pub fn point_series<M: Medium + ?Sized>(env: &M, y: Site, k: Site, n_max: u64, tol: f64) -> Result<(Vec<f64>, f64)> {
    check_tol(tol)?;
    let mut half = initial_half_width(n_max).max((k - y).abs() + 2);
    loop {
        let half_eff = half.min(n_max as Site + 1).max((k - y).abs() + 2);
        let chain = build_chain(env, y - half_eff, y + half_eff, BoundaryMode::Absorbing)?;
        let mut d = chain.point(y)?;
        let mut scratch = Vec::new();
        let mut out = Vec::with_capacity(n_max as usize + 1);
        out.push(d.at(k));
        for _ in 0..n_max {
            d.step(&chain, &mut scratch);
            out.push(d.at(k));
        }
        if d.leaked() <= tol || half_eff > n_max as Site {
            return Ok((out, d.leaked()));
        }
        if 2 * half as usize + 1 > WINDOW_CAP {
            return Err(Error::WindowCapExceeded { cap: WINDOW_CAP, tol, leak: d.leaked() });
        }
        half *= 2;
    }
}

/// `P^0[Z_n = 0]` for `n = 0..=n_max`, with the absorbed mass bounding the
/// error of each entry.
pub fn return_probabilities<M: Medium + ?Sized>(env: &M, n_max: u64, tol: f64) -> Result<(Vec<f64>, f64)> {
    point_series(env, 0, 0, n_max, tol)
}

/// Checkpoints `1 <= n <= n_max`, `per_decade` per factor of 10, always
/// including `n_max`.
pub fn log_checkpoints(n_max: u64, per_decade: u32) -> Vec<u64> {
    let mut out: Vec<u64> = Vec::new();
    let top = (n_max.max(1) as f64).log10();
    let count = (top * per_decade as f64).ceil() as u32;
    for i in 0..=count {
        let n = 10f64.powf(i as f64 / per_decade as f64).round() as u64;
        let n = n.clamp(1, n_max.max(1));
        if out.last() != Some(&n) {
            out.push(n);
        }
    }
    if out.last() != Some(&n_max) && n_max >= 1 {
        out.push(n_max);
    }
    out
}

/// Partial sums `sum_{1 <= n <= N} P^0[Z_n = 0] / n^theta` at the checkpoints.
pub fn return_prob_series<M: Medium + ?Sized>(env: &M, n_max: u64, theta: f64) -> Result<Vec<(u64, f64)>> {
    if !(0.0..=1.0).contains(&theta) {
        return Err(Error::InvalidArgument(format!("theta = {theta} must lie in [0, 1]")));
    }
    let (p, _) = return_probabilities(env, n_max, 1e-9)?;
    Ok(series_from(&p, theta, &log_checkpoints(n_max, 20)))
}

/// Partial sums of `p[n] / n^theta` evaluated at the given checkpoints.
pub fn series_from(p: &[f64], theta: f64, checkpoints: &[u64]) -> Vec<(u64, f64)> {
    let mut out = Vec::with_capacity(checkpoints.len());
    let mut sum = 0.0;
    let mut n = 0u64;
    for &c in checkpoints {
        while n < c {
            n += 1;
            let pn = p[n as usize];
            if pn != 0.0 {
                sum += pn / (n as f64).powf(theta);
            }
        }
        out.push((c, sum));
    }
    out
}
