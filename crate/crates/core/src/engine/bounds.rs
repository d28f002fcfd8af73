//! Right-hand sides of the classical exit-time and hitting-time bounds,
//! written in terms of the potential.

use crate::env::{Medium, Site};
use crate::error::{Error, Result};

fn check(a: Site, b: Site, c: Site) -> Result<()> {
    if !(a < b && b < c) {
        return Err(Error::InvalidArgument(format!("need a < b < c, got ({a}, {b}, {c})")));
    }
    Ok(())
}

/// `eps0^-1 (c-a)^2 exp(max_{a <= l <= k <= c-1, k >= b} (V(k) - V(l)))`.
pub fn exit_bound_rise<M: Medium + ?Sized>(env: &M, a: Site, b: Site, c: Site) -> Result<f64> {
    check(a, b, c)?;
    let v = env.potential_range(a, c - 1);
    let mut run_min = f64::INFINITY;
    let mut best = f64::NEG_INFINITY;
    for (i, &vk) in v.iter().enumerate() {
        run_min = run_min.min(vk);
        if a + i as Site >= b {
            best = best.max(vk - run_min);
        }
    }
    let w = (c - a) as f64;
    Ok(w * w / env.epsilon0() * best.exp())
}

/// `eps0^-1 (c-a)^2 exp(max_{a <= l <= k <= c-1, l <= b-1} (V(l) - V(k)))`.
pub fn exit_bound_fall<M: Medium + ?Sized>(env: &M, a: Site, b: Site, c: Site) -> Result<f64> {
    check(a, b, c)?;
    let v = env.potential_range(a, c - 1);
    let mut suffix_min = vec![0.0; v.len()];
    let mut m = f64::INFINITY;
    for i in (0..v.len()).rev() {
        m = m.min(v[i]);
        suffix_min[i] = m;
    }
    let best = (0..(b - a) as usize)
        .map(|i| v[i] - suffix_min[i])
        .fold(f64::NEG_INFINITY, f64::max);
    let w = (c - a) as f64;
    Ok(w * w / env.epsilon0() * best.exp())
}

/// `k exp(min_{[b, c-1]} V - V(c-1))`, bounding `P^b[tau(c) < k]` for `b < c`.
pub fn tail_bound_up<M: Medium + ?Sized>(env: &M, b: Site, c: Site, k: u64) -> Result<f64> {
    if b >= c {
        return Err(Error::InvalidArgument(format!("need b < c, got ({b}, {c})")));
    }
    let v = env.potential_range(b, c - 1);
    let min = v.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(k as f64 * (min - v[v.len() - 1]).exp())
}

/// `k exp(min_{[a, b-1]} V - V(a))`, bounding `P^b[tau(a) < k]` for `a < b`.
pub fn tail_bound_down<M: Medium + ?Sized>(env: &M, a: Site, b: Site, k: u64) -> Result<f64> {
    if a >= b {
        return Err(Error::InvalidArgument(format!("need a < b, got ({a}, {b})")));
    }
    let v = env.potential_range(a, b - 1);
    let min = v.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(k as f64 * (min - v[0]).exp())
}
