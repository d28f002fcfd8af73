//! Single-step samplers for simple random walks and walks in a medium.

use rand::RngCore;

use crate::env::{Medium, Site};

/// `omega` as a threshold for comparison against a uniform `u64`.
#[inline]
pub fn threshold(w: f64) -> u64 {
    if w >= 1.0 {
        u64::MAX
    } else if w <= 0.0 {
        0
    } else {
        (w * 18_446_744_073_709_551_616.0) as u64
    }
}

/// Local copy of the up-thresholds of a medium, grown geometrically when a
/// walker leaves the covered range.
pub struct Tape<'a, M: Medium + ?Sized> {
    env: &'a M,
    lo: Site,
    thr: Vec<u64>,
}

impl<'a, M: Medium + ?Sized> Tape<'a, M> {
    pub fn new(env: &'a M, center: Site, half: Site) -> Self {
        let half = half.max(16);
        let lo = center - half;
        let thr = env.omega_range(lo, center + half).into_iter().map(threshold).collect();
        Tape { env, lo, thr }
    }

    pub fn env(&self) -> &'a M {
        self.env
    }

    #[inline]
    pub fn get(&mut self, x: Site) -> u64 {
        let i = x.wrapping_sub(self.lo) as usize;
        if i < self.thr.len() {
            self.thr[i]
        } else {
            self.grow(x);
            self.thr[(x - self.lo) as usize]
        }
    }

    #[cold]
    fn grow(&mut self, x: Site) {
        let len = self.thr.len() as Site;
        let hi = self.lo + len - 1;
        let new_lo = if x < self.lo { (self.lo - len).min(x) } else { self.lo };
        let new_hi = if x > hi { (hi + len).max(x) } else { hi };
        let mut thr = Vec::with_capacity((new_hi - new_lo + 1) as usize);
        if new_lo < self.lo {
            thr.extend(self.env.omega_range(new_lo, self.lo - 1).into_iter().map(threshold));
        }
        thr.extend_from_slice(&self.thr);
        if new_hi > hi {
            thr.extend(self.env.omega_range(hi + 1, new_hi).into_iter().map(threshold));
        }
        self.lo = new_lo;
        self.thr = thr;
    }

    /// One step of the walk from `x` driven by the uniform `u`.
    #[inline]
    pub fn step_with(&mut self, x: Site, u: u64) -> Site {
        if u < self.get(x) {
            x + 1
        } else {
            x - 1
        }
    }

    #[inline]
    pub fn step<R: RngCore>(&mut self, x: Site, rng: &mut R) -> Site {
        let u = rng.next_u64();
        self.step_with(x, u)
    }
}

/// Fair coin flips drawn 64 at a time.
#[derive(Debug, Clone, Default)]
pub struct Coin {
    word: u64,
    left: u32,
}

impl Coin {
    #[inline]
    pub fn flip<R: RngCore>(&mut self, rng: &mut R) -> bool {
        if self.left == 0 {
            self.word = rng.next_u64();
            self.left = 64;
        }
        let b = self.word & 1 == 1;
        self.word >>= 1;
        self.left -= 1;
        b
    }

    #[inline]
    pub fn step<R: RngCore>(&mut self, x: Site, rng: &mut R) -> Site {
        if self.flip(rng) {
            x + 1
        } else {
            x - 1
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{make_env, EnvSpec};
    use crate::rng;

    #[test]
    fn thresholds() {
        assert_eq!(threshold(1.0), u64::MAX);
        assert_eq!(threshold(0.0), 0);
        assert_eq!(threshold(0.5), 1u64 << 63);
    }

    #[test]
    fn tape_grows_both_ways() {
        let env = make_env(EnvSpec::two_point(0.3, 5), 0).unwrap();
        let mut t = Tape::new(&env, 0, 16);
        for x in [-500, 40, 3000, -7] {
            assert_eq!(t.get(x), threshold(env.omega_at(x)));
        }
    }

    #[test]
    fn coin_is_fair() {
        let mut r = rng::stream(&[1, 2]);
        let mut c = Coin::default();
        let n = 100_000;
        let heads = (0..n).filter(|_| c.flip(&mut r)).count();
        assert!((heads as f64 / n as f64 - 0.5).abs() < 0.01);
    }
}
