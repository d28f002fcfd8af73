//! Valleys of the potential at level `h`: bottoms `b_i`, barriers `M_i`,
//! the localization set `Xi_n` and the landmarks `M_j^-`, `M_j^+`.

use std::ops::RangeInclusive;

use serde::Serialize;

use super::extrema::{h_extrema, ExtremaDecomposition, Extremum, ExtremumKind, PathWindow};
use super::search_window;
use crate::env::{Medium, Site};
use crate::error::{Error, Result};

pub const DEFAULT_C2: f64 = 8.0;
pub const DEFAULT_ALPHA: f64 = 3.0;

/// Bottoms and barriers labelled around the origin.
///
/// `b_0` is the first h-minimum at or right of `x_0`; `M_i` is the
/// h-maximum between `b_i` and `b_{i+1}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValleyLandmarks {
    pub h: f64,
    /// Label of `bottoms[0]`.
    pub first_b: i64,
    pub bottoms: Vec<Extremum>,
    /// Label of `barriers[0]`.
    pub first_m: i64,
    pub barriers: Vec<Extremum>,
}

impl ValleyLandmarks {
    pub fn bottom(&self, i: i64) -> Option<&Extremum> {
        let k = i - self.first_b;
        if k < 0 {
            return None;
        }
        self.bottoms.get(k as usize)
    }

    pub fn barrier(&self, i: i64) -> Option<&Extremum> {
        let k = i - self.first_m;
        if k < 0 {
            return None;
        }
        self.barriers.get(k as usize)
    }

    /// Site of `b_i`.
    pub fn b(&self, i: i64) -> Option<Site> {
        self.bottom(i).map(|e| e.site)
    }

    /// Site of `M_i`.
    pub fn m(&self, i: i64) -> Option<Site> {
        self.barrier(i).map(|e| e.site)
    }

    pub fn has_bottoms(&self, r: &RangeInclusive<i64>) -> bool {
        r.clone().all(|i| self.bottom(i).is_some())
    }

    pub fn has_barriers(&self, r: &RangeInclusive<i64>) -> bool {
        r.clone().all(|i| self.barrier(i).is_some())
    }
}

/// Relabel the certified extrema of `decomp` as bottoms and barriers.
pub fn valley_landmarks(decomp: &ExtremaDecomposition) -> Result<ValleyLandmarks> {
    let undetermined = |msg: &str| Error::LandscapeUndetermined(msg.to_string());
    let k = decomp
        .origin_index()
        .ok_or_else(|| undetermined("origin is not bracketed by certified extrema"))?;
    let c0 = decomp
        .extrema
        .iter()
        .position(|e| e.certified)
        .expect("origin extremum is certified");
    let cert: Vec<Extremum> = decomp.certified().copied().collect();
    for pair in cert.windows(2) {
        assert_ne!(pair[0].kind, pair[1].kind, "h-extrema must alternate");
    }
    let pc = k - c0;
    let p0 = match cert[pc].kind {
        ExtremumKind::Min => pc,
        ExtremumKind::Max => pc + 1,
    };
    if p0 >= cert.len() {
        return Err(undetermined("no certified minimum right of x_0"));
    }

    let b_start = p0 % 2;
    let m_start = (p0 + 1) % 2;
    let bottoms: Vec<Extremum> = cert.iter().skip(b_start).step_by(2).copied().collect();
    let barriers: Vec<Extremum> = cert.iter().skip(m_start).step_by(2).copied().collect();
    Ok(ValleyLandmarks {
        h: decomp.h,
        first_b: (b_start as i64 - p0 as i64) / 2,
        bottoms,
        first_m: (m_start as i64 - p0 as i64 - 1) / 2,
        barriers,
    })
}

/// Landmarks together with the window of `V` they were certified on.
#[derive(Debug, Clone)]
pub struct Valleys {
    pub landmarks: ValleyLandmarks,
    pub path: PathWindow,
}

/// Smallest window `[-w, w]`, `w = initial * 2^k`, on which the bottoms
/// `b_i, i in need_b` and barriers `M_i, i in need_m` are all certified.
pub fn valleys_around<M: Medium + ?Sized>(
    env: &M,
    h: f64,
    need_b: RangeInclusive<i64>,
    need_m: RangeInclusive<i64>,
    initial: Site,
) -> Result<Valleys> {
    let what = format!("b_{need_b:?} and M_{need_m:?} at h = {h}");
    let (landmarks, path) = search_window(env, initial, &what, |path| {
        let d = h_extrema(path, h)?;
        match valley_landmarks(&d) {
            Ok(l) if l.has_bottoms(&need_b) && l.has_barriers(&need_m) => Ok(Some(l)),
            Ok(_) | Err(Error::LandscapeUndetermined(_)) => Ok(None),
            Err(e) => Err(e),
        }
    })?;
    Ok(Valleys { landmarks, path })
}

/// `(h_n, C2 log log n)` with `h_n = log n - 5 C2 log log n`.
pub fn xi_levels(n: u64, c2: f64) -> Result<(f64, f64)> {
    if n < 3 {
        return Err(Error::InvalidArgument(format!("n = {n} must be at least 3")));
    }
    if !(c2 > 0.0) {
        return Err(Error::InvalidArgument(format!("C2 = {c2} must be positive")));
    }
    let ln = (n as f64).ln();
    let slack = c2 * ln.ln();
    let h_n = ln - 5.0 * slack;
    if !(h_n > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "h_n = log n - 5 C2 log log n = {h_n} is not positive (n = {n}, C2 = {c2})"
        )));
    }
    Ok((h_n, slack))
}

fn initial_half_width(n: u64) -> Site {
    (n as f64).ln().powf(DEFAULT_ALPHA).ceil() as Site
}

/// Localization set: the sites of the five central valleys whose potential
/// is within `C2 log log n` of the valley bottom.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct XiSet {
    pub n: u64,
    pub c2: f64,
    pub h_n: f64,
    pub slack: f64,
    /// `b_{-2}, ..., b_2`.
    pub bottoms: Vec<Site>,
    /// `M_{-3}, ..., M_2`.
    pub barriers: Vec<Site>,
    /// Sorted, without repetition.
    pub sites: Vec<Site>,
}

impl XiSet {
    pub fn contains(&self, x: Site) -> bool {
        self.sites.binary_search(&x).is_ok()
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    /// `[M_{-3}, M_2]`.
    pub fn span(&self) -> (Site, Site) {
        (self.barriers[0], *self.barriers.last().unwrap())
    }
}

pub fn xi_set<M: Medium + ?Sized>(env: &M, n: u64, c2: f64) -> Result<XiSet> {
    let (h_n, slack) = xi_levels(n, c2)?;
    let v = valleys_around(env, h_n, -2..=2, -3..=2, initial_half_width(n))?;
    let l = &v.landmarks;
    let bottoms: Vec<Site> = (-2..=2).map(|j| l.b(j).unwrap()).collect();
    let barriers: Vec<Site> = (-3..=2).map(|j| l.m(j).unwrap()).collect();
    let mut sites = Vec::new();
    for (k, j) in (-2..=2i64).enumerate() {
        let cap = v.path.at(bottoms[k]) + slack;
        for x in barriers[k]..=barriers[k + 1] {
            if v.path.at(x) <= cap && sites.last() != Some(&x) {
                sites.push(x);
            }
        }
        debug_assert!(sites.contains(&l.b(j).unwrap()));
    }
    Ok(XiSet { n, c2, h_n, slack, bottoms, barriers, sites })
}

/// `(M_j^-, M_j^+)`: the sites where the potential first comes back within
/// `C2 log log n` of `V(b_j)` beyond the barriers `M_{j-1}` and `M_j`,
/// capped by the neighbouring bottoms.
pub fn m_pm<M: Medium + ?Sized>(env: &M, n: u64, c2: f64, j: i64) -> Result<(Site, Site)> {
    let (h_n, slack) = xi_levels(n, c2)?;
    let v = valleys_around(env, h_n, j - 1..=j + 1, j - 1..=j, initial_half_width(n))?;
    let l = &v.landmarks;
    let (b_prev, b_j, b_next) = (l.b(j - 1).unwrap(), l.b(j).unwrap(), l.b(j + 1).unwrap());
    let (m_prev, m_j) = (l.m(j - 1).unwrap(), l.m(j).unwrap());
    let cap = v.path.at(b_j) + slack;
    let plus = (m_j..b_next).find(|&k| v.path.at(k) <= cap).unwrap_or(b_next);
    let minus = (b_prev + 1..=m_prev).rev().find(|&k| v.path.at(k) <= cap).unwrap_or(b_prev);
    Ok((minus, plus))
}
