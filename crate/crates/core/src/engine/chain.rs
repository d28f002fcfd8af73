//! Birth-death chains restricted to a finite window and exact propagation
//! of probability vectors.

use serde::{Deserialize, Serialize};

use crate::env::{Medium, Site};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryMode {
    /// Mass reaching either endpoint is removed from the window.
    Absorbing,
    /// Forced steps inward at the endpoints: up-probability 1 at `a`, 0 at `b`.
    Reflecting,
}

/// Transition operator of the walk on `[a, b]`.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowChain {
    a: Site,
    b: Site,
    mode: BoundaryMode,
    up: Vec<f64>,
    down: Vec<f64>,
}

pub fn build_chain<M: Medium + ?Sized>(env: &M, a: Site, b: Site, mode: BoundaryMode) -> Result<WindowChain> {
    if b - a < 2 {
        return Err(Error::InvalidArgument(format!("window [{a}, {b}] is narrower than 2")));
    }
    let mut up = env.omega_range(a, b);
    if mode == BoundaryMode::Reflecting {
        up[0] = 1.0;
        *up.last_mut().unwrap() = 0.0;
    }
    let down = up.iter().map(|p| 1.0 - p).collect();
    Ok(WindowChain { a, b, mode, up, down })
}

impl WindowChain {
    pub fn window(&self) -> (Site, Site) {
        (self.a, self.b)
    }

    pub fn mode(&self) -> BoundaryMode {
        self.mode
    }

    pub fn len(&self) -> usize {
        self.up.len()
    }

    pub fn is_empty(&self) -> bool {
        self.up.is_empty()
    }

    pub fn contains(&self, x: Site) -> bool {
        x >= self.a && x <= self.b
    }

    /// Up-probability used by the chain at `x`.
    pub fn up(&self, x: Site) -> f64 {
        self.up[(x - self.a) as usize]
    }

    /// Sites that may carry mass at the start of a step.
    fn live(&self) -> (usize, usize) {
        match self.mode {
            BoundaryMode::Absorbing => (1, self.up.len() - 2),
            BoundaryMode::Reflecting => (0, self.up.len() - 1),
        }
    }

    /// Point mass at `x`.
    pub fn point(&self, x: Site) -> Result<DistVector> {
        let (lo, hi) = self.live();
        let i = x - self.a;
        if i < lo as Site || i > hi as Site {
            return Err(Error::InvalidArgument(format!(
                "start {x} is not a live site of [{}, {}] ({:?})",
                self.a, self.b, self.mode
            )));
        }
        let mut mass = vec![0.0; self.up.len()];
        mass[i as usize] = 1.0;
        Ok(DistVector {
            start: self.a,
            mass,
            leaked_low: 0.0,
            leaked_high: 0.0,
            time: 0,
            lo: i as usize,
            hi: i as usize,
        })
    }

    /// Distribution with the given weights on sites of one parity.
    pub fn from_weights(&self, weights: &[(Site, f64)]) -> Result<DistVector> {
        let (lo, hi) = self.live();
        let mut mass = vec![0.0; self.up.len()];
        let mut band: Option<(usize, usize)> = None;
        let mut parity = None;
        for &(x, w) in weights {
            let i = x - self.a;
            if i < lo as Site || i > hi as Site {
                return Err(Error::InvalidArgument(format!("site {x} is outside the live window")));
            }
            if *parity.get_or_insert(x.rem_euclid(2)) != x.rem_euclid(2) {
                return Err(Error::InvalidArgument("weights must sit on one parity".into()));
            }
            let i = i as usize;
            mass[i] += w;
            band = Some(band.map_or((i, i), |(l, h)| (l.min(i), h.max(i))));
        }
        let (lo, hi) = band.ok_or(Error::EmptyWindow)?;
        Ok(DistVector { start: self.a, mass, leaked_low: 0.0, leaked_high: 0.0, time: 0, lo, hi })
    }
}

/// Probability vector on a window, with the mass absorbed at each end.
///
/// All mass sits on sites of a single parity, which alternates with time.
#[derive(Debug, Clone, PartialEq)]
pub struct DistVector {
    start: Site,
    mass: Vec<f64>,
    leaked_low: f64,
    leaked_high: f64,
    time: u64,
    /// Band of sites that may carry mass; both ends have the live parity.
    lo: usize,
    hi: usize,
}

impl DistVector {
    pub fn time(&self) -> u64 {
        self.time
    }

    /// Mass at `x` (0 outside the window).
    pub fn at(&self, x: Site) -> f64 {
        let i = x - self.start;
        if i < self.lo as Site || i > self.hi as Site || (i - self.lo as Site) % 2 != 0 {
            return 0.0;
        }
        self.mass[i as usize]
    }

    pub fn window(&self) -> (Site, Site) {
        (self.start, self.start + self.mass.len() as Site - 1)
    }

    /// Sites that may carry mass, as an inclusive range.
    pub fn support(&self) -> (Site, Site) {
        (self.start + self.lo as Site, self.start + self.hi as Site)
    }

    /// Parity (0 or 1) of the occupied sites.
    pub fn parity(&self) -> i64 {
        (self.start + self.lo as Site).rem_euclid(2)
    }

    /// `(site, mass)` for nonzero masses.
    pub fn iter(&self) -> impl Iterator<Item = (Site, f64)> + '_ {
        (self.lo..=self.hi)
            .step_by(2)
            .map(move |i| (self.start + i as Site, self.mass[i]))
            .filter(|&(_, m)| m != 0.0)
    }

    pub fn in_window(&self) -> f64 {
        (self.lo..=self.hi).step_by(2).map(|i| self.mass[i]).sum()
    }

    pub fn leaked(&self) -> f64 {
        self.leaked_low + self.leaked_high
    }

    /// Mass absorbed at the left and right endpoints.
    pub fn leaked_sides(&self) -> (f64, f64) {
        (self.leaked_low, self.leaked_high)
    }

    /// Advance by one step in place. `scratch` may be shared between
    /// vectors; its contents are overwritten.
    pub fn step(&mut self, chain: &WindowChain, scratch: &mut Vec<f64>) {
        debug_assert_eq!(chain.a, self.start);
        let n = self.mass.len();
        if scratch.len() != n {
            scratch.clear();
            scratch.resize(n, 0.0);
        }
        let (lo, hi) = (self.lo, self.hi);
        let (m, up, down) = (&self.mass, &chain.up, &chain.down);
        let to_left = m[lo] * down[lo];
        let to_right = m[hi] * up[hi];
        let mut j = lo + 1;
        while j < hi {
            scratch[j] = m[j - 1] * up[j - 1] + m[j + 1] * down[j + 1];
            j += 2;
        }
        let absorbing = chain.mode == BoundaryMode::Absorbing;
        let (live_lo, live_hi) = chain.live();
        let mut new_lo = if lo > live_lo {
            scratch[lo - 1] = to_left;
            lo - 1
        } else {
            if absorbing {
                self.leaked_low += to_left;
            }
            lo + 1
        };
        let new_hi = if hi < live_hi {
            scratch[hi + 1] = to_right;
            hi + 1
        } else {
            if absorbing {
                self.leaked_high += to_right;
            }
            hi - 1
        };
        if new_lo > new_hi {
            // Only possible when everything was absorbed in a width-2 window.
            new_lo = new_hi + 2;
            scratch[new_lo] = 0.0;
        }
        std::mem::swap(&mut self.mass, scratch);
        self.lo = new_lo;
        self.hi = new_lo.max(new_hi);
        self.time += 1;
    }
}

/// `steps`-step pushforward of `dist` under `chain`.
pub fn evolve(chain: &WindowChain, dist: &DistVector, steps: u64) -> DistVector {
    let mut d = dist.clone();
    let mut scratch = Vec::with_capacity(d.mass.len());
    for _ in 0..steps {
        d.step(chain, &mut scratch);
    }
    d
}
