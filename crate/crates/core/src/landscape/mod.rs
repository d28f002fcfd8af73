//! Valley structure of the potential: h-extrema, valleys, the localization
//! set and the central landmarks used by the coupling.

pub mod central;
pub mod extrema;
pub mod valleys;

pub use central::{
    central_landmarks, delta_checks, CentralLandmarks, DeltaFlags, Eps, GoodEnvReport, Side,
};
pub use extrema::{h_extrema, ExtremaDecomposition, Extremum, ExtremumKind, PathWindow, Slope};
pub use valleys::{
    m_pm, valley_landmarks, valleys_around, xi_set, ValleyLandmarks, Valleys, XiSet,
    DEFAULT_ALPHA, DEFAULT_C2,
};

use crate::env::{Medium, Site};
use crate::error::{Error, Result};

/// Largest half-width `w` of a search window `[-w, w]`.
pub const MAX_HALF_WIDTH: Site = 1 << 22;

/// `V` on `[a, b]` as a path window.
pub fn potential_window<M: Medium + ?Sized>(env: &M, a: Site, b: Site) -> Result<PathWindow> {
    if a > b {
        return Err(Error::EmptyWindow);
    }
    PathWindow::new(a, env.potential_range(a, b))
}

/// Run `probe` on `V` over `[-w, w]` for `w = initial, 2 initial, ...` until
/// it yields a value or `w` passes [`MAX_HALF_WIDTH`].
pub(crate) fn search_window<M, T>(
    env: &M,
    initial: Site,
    what: &str,
    mut probe: impl FnMut(&PathWindow) -> Result<Option<T>>,
) -> Result<(T, PathWindow)>
where
    M: Medium + ?Sized,
{
    let mut w = initial.clamp(4, MAX_HALF_WIDTH);
    loop {
        let path = potential_window(env, -w, w)?;
        if let Some(t) = probe(&path)? {
            return Ok((t, path));
        }
        if w >= MAX_HALF_WIDTH {
            return Err(Error::LandscapeUndetermined(format!(
                "{what} not certified within [-{w}, {w}]"
            )));
        }
        w = (2 * w).min(MAX_HALF_WIDTH);
    }
}
