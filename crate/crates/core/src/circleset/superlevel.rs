//! Superlevel sets `{x : |p(x)| > θ}` of trigonometric polynomials.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{ArcSet, CircleError, DEFAULT_TOL_X};
use crate::trigpoly::{moduli_on_grid, pow2_at_least, TrigPoly};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExtractionMode {
    /// Arc endpoints snapped outward to the neighbouring grid nodes.
    Conservative,
    /// Endpoints refined by bisection on `|p|² - θ²` to `tol_x`.
    Refined,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuperlevelOptions {
    /// The grid has `2^k >= 4 (D + 1) oversample` nodes, `D` the centred degree.
    pub oversample: u32,
    pub mode: ExtractionMode,
    pub tol_x: f64,
}

impl Default for SuperlevelOptions {
    fn default() -> Self {
        Self {
            oversample: 2,
            mode: ExtractionMode::Conservative,
            tol_x: DEFAULT_TOL_X,
        }
    }
}

impl SuperlevelOptions {
    pub fn grid_for(&self, p: &TrigPoly) -> usize {
        pow2_at_least(4 * (p.half_span() + 1) * self.oversample.max(1) as u64)
    }
}

pub fn superlevel_arcs(p: &TrigPoly, theta: f64, opts: &SuperlevelOptions) -> Result<ArcSet, CircleError> {
    superlevel_arcs_bounded(p, theta, None, opts)
}

/// As [`superlevel_arcs`], skipping all work when a known certified upper
/// bound for `‖p‖∞` is already at most `theta`.
pub fn superlevel_arcs_bounded(
    p: &TrigPoly,
    theta: f64,
    sup_upper: Option<f64>,
    opts: &SuperlevelOptions,
) -> Result<ArcSet, CircleError> {
    if !(theta > 0.0 && theta.is_finite()) {
        return Err(CircleError::InvalidThreshold(theta));
    }
    if sup_upper.is_some_and(|u| u <= theta) {
        return Ok(ArcSet::empty());
    }
    let deg = p.half_span();
    let grid = opts.grid_for(p);
    let moduli = moduli_on_grid(p, grid);
    let peak = moduli.iter().copied().fold(0.0, f64::max);
    if peak / (1.0 - PI * deg as f64 / grid as f64) <= theta {
        return Ok(ArcSet::empty());
    }

    let hot: Vec<bool> = moduli.iter().map(|&v| v > theta).collect();
    let crossings = (0..grid).filter(|&k| hot[k] != hot[(k + 1) % grid]).count();
    let limit = 8 * deg.max(1) as usize;
    if crossings > limit {
        return Err(CircleError::ResolutionExceeded { crossings, limit });
    }
    if crossings == 0 {
        return Ok(if hot[0] { ArcSet::full() } else { ArcSet::empty() });
    }

    let h = 2.0 * PI / grid as f64;
    // Rotate so that scanning starts on a cold node; runs never wrap then.
    let start = hot.iter().position(|&b| !b).unwrap();
    let mut raw = Vec::with_capacity(crossings / 2);
    let mut i = 0;
    while i < grid {
        let k = (start + i) % grid;
        if !hot[k] {
            i += 1;
            continue;
        }
        let first = start + i;
        while i < grid && hot[(start + i) % grid] {
            i += 1;
        }
        let last = start + i - 1;
        // Cold neighbours: `first - 1` and `last + 1`, as unwrapped indices.
        let lo = (first - 1) as f64 * h;
        let hi = (last + 1) as f64 * h;
        raw.push(match opts.mode {
            ExtractionMode::Conservative => (lo, hi),
            ExtractionMode::Refined => {
                let level = |x: f64| p.eval(x).norm_sqr() - theta * theta;
                (
                    bisect(&level, lo, lo + h, opts.tol_x),
                    bisect(&level, hi - h, hi, opts.tol_x),
                )
            }
        });
    }
    Ok(ArcSet::from_arcs(raw))
}

/// Root of `f` in `[a, b]` given a sign change; returns the midpoint once the
/// bracket is shorter than `tol`.
fn bisect(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let fa_pos = f(a) > 0.0;
    while b - a > tol {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        if (f(mid) > 0.0) == fa_pos {
            a = mid;
        } else {
            b = mid;
        }
    }
    0.5 * (a + b)
}
