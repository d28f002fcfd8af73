//! h-extrema of a path restricted to a finite window.
//!
//! A site `y` is an h-minimum of `w` if some `a < y < c` satisfy
//! `w(y) = min_[a,c] w`, `w(a) >= w(y) + h` and `w(c) >= w(y) + h`;
//! h-maxima are h-minima of `-w`. On a window only witnesses `a, c` inside
//! the window can be checked; extrema whose witnesses may lie outside are
//! reported with `certified = false`.

use serde::Serialize;

use crate::env::Site;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ExtremumKind {
    Min,
    Max,
}

impl ExtremumKind {
    pub fn flip(self) -> Self {
        match self {
            ExtremumKind::Min => ExtremumKind::Max,
            ExtremumKind::Max => ExtremumKind::Min,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Extremum {
    pub site: Site,
    pub kind: ExtremumKind,
    pub value: f64,
    pub certified: bool,
}

/// Segment of the path between two consecutive extrema.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Slope {
    pub from: Site,
    pub to: Site,
    /// `|w(to) - w(from)|`.
    pub height: f64,
    /// `height - h`.
    pub excess: f64,
    /// Both endpoints certified.
    pub certified: bool,
}

/// Values of a path on the contiguous window `[start, start + len - 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathWindow {
    start: Site,
    values: Vec<f64>,
}

impl PathWindow {
    pub fn new(start: Site, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyWindow);
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("path values must be finite".into()));
        }
        Ok(PathWindow { start, values })
    }

    pub fn start(&self) -> Site {
        self.start
    }

    pub fn end(&self) -> Site {
        self.start + self.values.len() as Site - 1
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn contains(&self, x: Site) -> bool {
        x >= self.start && x <= self.end()
    }

    /// Value at site `x`; panics outside the window.
    pub fn at(&self, x: Site) -> f64 {
        self.values[(x - self.start) as usize]
    }

    pub fn get(&self, x: Site) -> Option<f64> {
        if self.contains(x) {
            Some(self.at(x))
        } else {
            None
        }
    }

    /// Values on `[a, b]` (clipped to the window).
    pub fn slice(&self, a: Site, b: Site) -> &[f64] {
        let lo = (a.max(self.start) - self.start) as usize;
        let hi = (b.min(self.end()) - self.start) as usize;
        if lo > hi {
            &[]
        } else {
            &self.values[lo..=hi]
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtremaDecomposition {
    pub h: f64,
    pub window: (Site, Site),
    /// Alternating kinds, increasing sites.
    pub extrema: Vec<Extremum>,
    /// `slopes[k]` joins `extrema[k]` and `extrema[k + 1]`.
    pub slopes: Vec<Slope>,
}

impl ExtremaDecomposition {
    pub fn certified(&self) -> impl Iterator<Item = &Extremum> {
        self.extrema.iter().filter(|e| e.certified)
    }

    pub fn certified_slopes(&self) -> impl Iterator<Item = &Slope> {
        self.slopes.iter().filter(|s| s.certified)
    }

    /// Index in `extrema` of `x_0`, the last h-extremum at or left of 0,
    /// provided it is certified and the next extremum is known to lie right
    /// of 0.
    pub fn origin_index(&self) -> Option<usize> {
        let k = self.extrema.iter().rposition(|e| e.site <= 0)?;
        if !self.extrema[k].certified {
            return None;
        }
        match self.extrema.get(k + 1) {
            Some(next) if next.site > 0 => Some(k),
            _ => None,
        }
    }

    /// `x_k` in the origin-anchored labelling, if certified.
    pub fn x(&self, k: i64) -> Option<&Extremum> {
        let i = self.origin_index()? as i64 + k;
        if i < 0 {
            return None;
        }
        self.extrema.get(i as usize).filter(|e| e.certified)
    }

    /// `T_k`, the slope from `x_k` to `x_{k+1}`, if both ends are certified.
    pub fn slope(&self, k: i64) -> Option<&Slope> {
        let i = self.origin_index()? as i64 + k;
        if i < 0 {
            return None;
        }
        self.slopes.get(i as usize).filter(|s| s.certified)
    }
}

#[derive(Clone, Copy)]
struct Point {
    idx: usize,
    val: f64,
}

/// Single left-to-right scan for the h-extrema of `path`.
///
/// Consecutive extrema of one kind can only occur on exact ties
/// of the extremal value; such runs are reported once, at their earliest
/// site.
pub fn h_extrema(path: &PathWindow, h: f64) -> Result<ExtremaDecomposition> {
    if path.is_empty() {
        return Err(Error::EmptyWindow);
    }
    if !(h > 0.0) {
        return Err(Error::InvalidArgument(format!("h = {h} must be positive")));
    }
    let w = path.values();
    let mut raw: Vec<(usize, ExtremumKind, bool)> = Vec::new();

    let mut lo = Point { idx: 0, val: w[0] };
    let mut hi = Point { idx: 0, val: w[0] };
    let mut pending: Option<(ExtremumKind, Point)> = None;

    for (i, &v) in w.iter().enumerate().skip(1) {
        match pending {
            None => {
                if v < lo.val {
                    lo = Point { idx: i, val: v };
                }
                if v > hi.val {
                    hi = Point { idx: i, val: v };
                }
                if v - lo.val >= h {
                    // No left witness can exist for the first extremum.
                    raw.push((lo.idx, ExtremumKind::Min, false));
                    pending = Some((ExtremumKind::Max, Point { idx: i, val: v }));
                } else if hi.val - v >= h {
                    raw.push((hi.idx, ExtremumKind::Max, false));
                    pending = Some((ExtremumKind::Min, Point { idx: i, val: v }));
                }
            }
            Some((ExtremumKind::Max, ref mut p)) => {
                if v > p.val {
                    *p = Point { idx: i, val: v };
                } else if p.val - v >= h {
                    raw.push((p.idx, ExtremumKind::Max, true));
                    pending = Some((ExtremumKind::Min, Point { idx: i, val: v }));
                }
            }
            Some((ExtremumKind::Min, ref mut p)) => {
                if v < p.val {
                    *p = Point { idx: i, val: v };
                } else if v - p.val >= h {
                    raw.push((p.idx, ExtremumKind::Min, true));
                    pending = Some((ExtremumKind::Max, Point { idx: i, val: v }));
                }
            }
        }
    }
    if let Some((kind, p)) = pending {
        raw.push((p.idx, kind, false));
    }

    let start = path.start();
    let extrema: Vec<Extremum> = raw
        .into_iter()
        .map(|(idx, kind, certified)| Extremum {
            site: start + idx as Site,
            kind,
            value: w[idx],
            certified,
        })
        .collect();
    let slopes = extrema
        .windows(2)
        .map(|pair| {
            let height = (pair[1].value - pair[0].value).abs();
            Slope {
                from: pair[0].site,
                to: pair[1].site,
                height,
                excess: height - h,
                certified: pair[0].certified && pair[1].certified,
            }
        })
        .collect();
    Ok(ExtremaDecomposition { h, window: (path.start(), path.end()), extrema, slopes })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn decomp(vals: &[f64], start: Site, h: f64) -> ExtremaDecomposition {
        h_extrema(&PathWindow::new(start, vals.to_vec()).unwrap(), h).unwrap()
    }

    #[test]
    fn small_example() {
        let d = decomp(&[0.0, 3.0, 1.0, 5.0, 0.0], 0, 2.0);
        let cert: Vec<(Site, ExtremumKind)> = d.certified().map(|e| (e.site, e.kind)).collect();
        assert_eq!(
            cert,
            vec![(1, ExtremumKind::Max), (2, ExtremumKind::Min), (3, ExtremumKind::Max)]
        );
        assert!(!d.extrema.first().unwrap().certified);
        assert!(!d.extrema.last().unwrap().certified);
    }

    #[test]
    fn monotone_and_constant() {
        let inc: Vec<f64> = (0..50).map(|i| i as f64 * 0.7).collect();
        let d = decomp(&inc, -10, 1.0);
        assert_eq!(d.certified().count(), 0);
        let flat = vec![2.5; 40];
        let d = decomp(&flat, 0, 0.1);
        assert!(d.extrema.is_empty());
    }

    #[test]
    fn errors() {
        assert!(PathWindow::new(0, vec![]).is_err());
        let p = PathWindow::new(0, vec![1.0, 2.0]).unwrap();
        assert!(h_extrema(&p, 0.0).is_err());
        assert!(PathWindow::new(0, vec![f64::NAN]).is_err());
    }

    #[test]
    fn ties_collapse_to_earliest() {
        // Two equal minima at 2 and 4 with a rise of only 1 between them.
        let d = decomp(&[5.0, 3.0, 0.0, 1.0, 0.0, 3.0, 5.0, 0.0], 0, 3.0);
        let cert: Vec<Site> = d.certified().map(|e| e.site).collect();
        assert_eq!(cert, vec![2, 6]);
    }

    #[test]
    fn alternation_and_heights() {
        let vals: Vec<f64> = (0..400).map(|i| ((i as f64) * 0.37).sin() * 4.0 + (i % 7) as f64).collect();
        let d = decomp(&vals, -200, 2.5);
        for pair in d.extrema.windows(2) {
            assert_ne!(pair[0].kind, pair[1].kind);
            assert!(pair[0].site < pair[1].site);
        }
        for s in d.certified_slopes() {
            assert!(s.height >= 2.5 && s.excess >= 0.0);
        }
    }

    #[test]
    fn origin_labelling() {
        // min at -4, max at -1, min at 3, with guards at the ends.
        let vals = [9.0, 8.0, 0.0, 2.0, 4.0, 6.0, 3.0, 1.0, 0.5, -1.0, 4.0, 9.0];
        let d = decomp(&vals, -6, 3.0);
        let x0 = d.x(0).unwrap();
        assert_eq!((x0.site, x0.kind), (-1, ExtremumKind::Max));
        assert_eq!(d.x(1).unwrap().site, 3);
        assert_eq!(d.x(-1).unwrap().site, -4);
        assert!(d.x(2).is_none());
    }
}
