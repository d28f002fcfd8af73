//! Independent oracles shared by the integration tests and the acceptance harness.

#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use sinai_lab::engine::{
    build_chain, evolve, expected_exit, first_visit_prob, hitting_prob, hitting_tail, point_prob, reflected_nu, BoundaryMode,
};
use sinai_lab::env::{make_env, EnvSpec, Environment, Medium, Site};
use sinai_lab::landscape::{h_extrema, ExtremumKind, PathWindow};

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

/// A two-point or log-uniform law with random parameters and seed.
pub fn random_spec(r: &mut StdRng) -> EnvSpec {
    let seed = r.gen();
    if r.gen_bool(0.5) {
        EnvSpec::two_point(r.gen_range(0.1..0.45), seed)
    } else {
        let hw: f64 = r.gen_range(0.3..2.5);
        EnvSpec::log_uniform(hw, 0.5 / (1.0 + hw.exp()), seed)
    }
}

pub fn random_env(r: &mut StdRng) -> Environment {
    make_env(random_spec(r), r.gen_range(0..8)).unwrap()
}

/// Law of `Z_n` from `y` by summing over all `2^n` paths.
pub fn path_enumeration<M: Medium + ?Sized>(env: &M, y: Site, n: u32) -> BTreeMap<Site, f64> {
    let mut out = BTreeMap::new();
    for mask in 0u32..(1 << n) {
        let (mut x, mut p) = (y, 1.0);
        for i in 0..n {
            let w = env.omega_at(x);
            if mask >> i & 1 == 1 {
                p *= w;
                x += 1;
            } else {
                p *= 1.0 - w;
                x -= 1;
            }
        }
        *out.entry(x).or_insert(0.0) += p;
    }
    out
}

/// Largest `|point_prob - enumeration|` over all reachable sites.
pub fn enumeration_error<M: Medium + ?Sized>(env: &M, y: Site, n: u32) -> f64 {
    let exact = path_enumeration(env, y, n);
    let mut worst: f64 = 0.0;
    for k in y - n as Site - 1..=y + n as Site + 1 {
        let (p, _) = point_prob(env, y, n as u64, k, 1e-15).unwrap();
        worst = worst.max((p - exact.get(&k).copied().unwrap_or(0.0)).abs());
    }
    worst
}

/// Solves `u(x) = omega_x u(x+1) + (1 - omega_x) u(x-1) + rhs` on `a < x < c`
/// with `u(a) = left`, `u(c) = right`, eliminating from the right end.
///
/// Writes `u(x) = alpha_x u(x-1) + beta_x` and carries `1 - alpha_x`
/// separately, so no step subtracts nearby numbers.
pub fn tridiagonal<M: Medium + ?Sized>(env: &M, a: Site, c: Site, rhs: f64, left: f64, right: f64) -> Vec<f64> {
    let n = (c - a - 1) as usize;
    let mut alpha = vec![0.0; n];
    let mut beta = vec![0.0; n];
    let (mut gamma_next, mut beta_next) = (1.0, right);
    for i in (0..n).rev() {
        let w = env.omega_at(a + 1 + i as Site);
        let d = (1.0 - w) + w * gamma_next;
        alpha[i] = (1.0 - w) / d;
        beta[i] = (w * beta_next + rhs) / d;
        gamma_next = w * gamma_next / d;
        beta_next = beta[i];
    }
    let mut u = vec![0.0; n];
    let mut prev = left;
    for i in 0..n {
        u[i] = alpha[i] * prev + beta[i];
        prev = u[i];
    }
    u
}

/// `P^b[tau(c) < tau(a)]` from the tridiagonal system.
pub fn ruin_oracle<M: Medium + ?Sized>(env: &M, a: Site, b: Site, c: Site) -> f64 {
    tridiagonal(env, a, c, 0.0, 0.0, 1.0)[(b - a - 1) as usize]
}

/// Relative error of the closed-form hitting probability on a random instance.
pub fn ruin_instance(r: &mut StdRng) -> f64 {
    let env = random_env(r);
    let a = r.gen_range(-40..0);
    let c = r.gen_range(1..40);
    let b = r.gen_range(a + 1..c);
    let exact = ruin_oracle(&env, a, b, c);
    let closed = hitting_prob(&env, a, b, c).unwrap();
    ((closed - exact) / exact).abs()
}

/// Edge-conductance measure of the walk reflected inside `[lo, hi]`.
pub fn window_measure<M: Medium + ?Sized>(env: &M, lo: Site, hi: Site) -> Vec<f64> {
    let v: Vec<f64> = (lo..hi).map(|x| env.potential(x)).collect();
    let vmin = v.iter().copied().fold(f64::INFINITY, f64::min);
    let cond: Vec<f64> = v.iter().map(|&x| (-(x - vmin)).exp()).collect();
    let mut mu = vec![0.0; (hi - lo + 1) as usize];
    for (i, &c) in cond.iter().enumerate() {
        mu[i] += c;
        mu[i + 1] += c;
    }
    let top = mu.iter().copied().fold(0.0, f64::max);
    mu.iter().map(|m| m / top).collect()
}

/// Largest `|P^b[Z_k = x] mu(b) - P^x[Z_k = b] mu(x)|` over a random reflecting
/// window, with `mu` scaled to maximum 1.
pub fn reversibility_instance(r: &mut StdRng) -> f64 {
    let env = random_env(r);
    let lo = r.gen_range(-30..0);
    let hi = lo + r.gen_range(2..40);
    let chain = build_chain(&env, lo, hi, BoundaryMode::Reflecting).unwrap();
    let mu = window_measure(&env, lo, hi);
    let k = r.gen_range(0..=200);
    let mut worst: f64 = 0.0;
    for _ in 0..4 {
        let b = r.gen_range(lo..=hi);
        let from_b = evolve(&chain, &chain.point(b).unwrap(), k);
        for x in lo..=hi {
            let from_x = evolve(&chain, &chain.point(x).unwrap(), k);
            let lhs = from_b.at(x) * mu[(b - lo) as usize];
            let rhs = from_x.at(b) * mu[(x - lo) as usize];
            worst = worst.max((lhs - rhs).abs());
        }
    }
    worst
}

/// L1 distance between the even measure of the reflected walk and its image after two steps.
pub fn nu_stationarity_instance(r: &mut StdRng) -> f64 {
    let env = random_env(r);
    let x0 = 2 * r.gen_range(-15..0);
    let x2 = 2 * r.gen_range(1..15);
    let nu = reflected_nu(&env, x0, x2).unwrap();
    let chain = build_chain(&env, x0, x2, BoundaryMode::Reflecting).unwrap();
    let d = evolve(&chain, &chain.from_weights(&nu.pairs()).unwrap(), 2);
    (x0..=x2).map(|x| (d.at(x) - nu.get(x)).abs()).sum()
}

fn v_range<M: Medium + ?Sized>(env: &M, a: Site, b: Site) -> Vec<f64> {
    (a..=b).map(|x| env.potential(x)).collect()
}

/// Right-hand side of the exit-time bound with `k >= b`, by brute force.
pub fn rise_bound<M: Medium + ?Sized>(env: &M, a: Site, b: Site, c: Site) -> f64 {
    let v = v_range(env, a, c - 1);
    let mut best = f64::NEG_INFINITY;
    for l in a..c {
        for k in l.max(b)..c {
            best = best.max(v[(k - a) as usize] - v[(l - a) as usize]);
        }
    }
    ((c - a) * (c - a)) as f64 / env.epsilon0() * best.exp()
}

/// Right-hand side of the exit-time bound with `l <= b - 1`, by brute force.
pub fn fall_bound<M: Medium + ?Sized>(env: &M, a: Site, b: Site, c: Site) -> f64 {
    let v = v_range(env, a, c - 1);
    let mut best = f64::NEG_INFINITY;
    for l in a..b {
        for k in l..c {
            best = best.max(v[(l - a) as usize] - v[(k - a) as usize]);
        }
    }
    ((c - a) * (c - a)) as f64 / env.epsilon0() * best.exp()
}

/// Which inequality an instance exercises.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bound {
    ExitRise,
    ExitFall,
    TailUp,
    TailDown,
    FirstVisit,
}

/// `(lhs, rhs)` for one random instance; the inequality is `lhs <= rhs`.
pub fn inequality_instance(which: Bound, r: &mut StdRng) -> (f64, f64) {
    let env = random_env(r);
    let a = r.gen_range(-25..0);
    let c = r.gen_range(1..25);
    let b = r.gen_range(a + 1..c);
    match which {
        Bound::ExitRise => {
            let e = expected_exit(&env, a, b, c).unwrap();
            let oracle = tridiagonal(&env, a, c, 1.0, 0.0, 0.0)[(b - a - 1) as usize];
            assert!((e - oracle).abs() <= 1e-9 * oracle, "expected exit {e} vs oracle {oracle}");
            (e, rise_bound(&env, a, b, c))
        }
        Bound::ExitFall => (expected_exit(&env, a, b, c).unwrap(), fall_bound(&env, a, b, c)),
        Bound::TailUp => {
            let k = r.gen_range(1..400);
            let t = hitting_tail(&env, b, c, k, 1e-14).unwrap();
            let v = v_range(&env, b, c - 1);
            let min = v.iter().copied().fold(f64::INFINITY, f64::min);
            (t.value + t.error, k as f64 * (min - v[v.len() - 1]).exp())
        }
        Bound::TailDown => {
            let k = r.gen_range(1..400);
            let t = hitting_tail(&env, b, a, k, 1e-14).unwrap();
            let v = v_range(&env, a, b - 1);
            let min = v.iter().copied().fold(f64::INFINITY, f64::min);
            (t.value + t.error, k as f64 * (min - v[0]).exp())
        }
        Bound::FirstVisit => {
            let (x, y) = if r.gen_bool(0.5) { (a, b) } else { (c, b) };
            let k = r.gen_range(1..300);
            (first_visit_prob(&env, y, x, k).unwrap(), escape_oracle(&env, y, x))
        }
    }
}

/// `P^b[tau(a) < tau(b)]` from the tridiagonal system.
pub fn escape_oracle<M: Medium + ?Sized>(env: &M, b: Site, a: Site) -> f64 {
    let w = env.omega_at(b);
    if a < b {
        // From b - 1, hit a before b.
        let u = if b - 1 == a { 1.0 } else { 1.0 - ruin_oracle(env, a, b - 1, b) };
        (1.0 - w) * u
    } else {
        let u = if b + 1 == a { 1.0 } else { ruin_oracle(env, b, b + 1, a) };
        w * u
    }
}

/// h-extrema of `w` by exhaustive search of witnesses `a < y < c`. Runs of
/// one kind are reported at their first site.
pub fn brute_extrema(w: &[f64], h: f64) -> Vec<(usize, ExtremumKind)> {
    let n = w.len();
    let is_min = |y: usize, s: f64| {
        let val = s * w[y];
        let left = (0..y).any(|a| (a..=y).all(|i| s * w[i] >= val) && s * w[a] >= val + h);
        let right = (y + 1..n).any(|c| (y..=c).all(|i| s * w[i] >= val) && s * w[c] >= val + h);
        left && right
    };
    let mut found: Vec<(usize, ExtremumKind)> = Vec::new();
    for y in 0..n {
        let kind = if is_min(y, 1.0) {
            ExtremumKind::Min
        } else if is_min(y, -1.0) {
            ExtremumKind::Max
        } else {
            continue;
        };
        if found.last().map(|l| l.1) != Some(kind) {
            found.push((y, kind));
        }
    }
    found
}

/// Random integer-valued path of width at most 60 and a level `h`.
pub fn random_path(r: &mut StdRng) -> (Vec<f64>, f64) {
    let len = r.gen_range(1..=60);
    let mut x = 0.0;
    let w = (0..len)
        .map(|_| {
            x += r.gen_range(-3i32..=3) as f64;
            x
        })
        .collect();
    (w, r.gen_range(1..8) as f64)
}

/// Whether the scan and the brute-force checker agree on one path.
pub fn extrema_agree(w: &[f64], h: f64) -> bool {
    let path = PathWindow::new(0, w.to_vec()).unwrap();
    let d = h_extrema(&path, h).unwrap();
    let scan: Vec<(usize, ExtremumKind)> = d.certified().map(|e| (e.site as usize, e.kind)).collect();
    scan == brute_extrema(w, h)
}
