//! Certified norm brackets.
//!
//! All norms are normalised so that `‖1‖ = 1`. Every bound works with the
//! centred degree (`half_span`), which is the degree of `|p|` as a function
//! of `x` once the carrier is removed.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::grid::{moduli_on_grid, node, pow2_at_least};
use super::{TrigError, TrigPoly};

/// Smallest accepted oversampling factor for [`sup_norm`].
pub const MIN_OVERSAMPLE: u32 = 8;

/// `lower <= ‖·‖ <= upper`. For sup norms `lower` is attained at `at`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormBracket {
    pub lower: f64,
    pub upper: f64,
    pub at: f64,
}

impl NormBracket {
    pub fn exact(value: f64) -> Self {
        Self {
            lower: value,
            upper: value,
            at: 0.0,
        }
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lower <= v && v <= self.upper
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

/// Certified sup norm. The grid has `G = 2^k >= oversample * (D + 1)` nodes
/// and every point is within `π/G` of a node, so Bernstein's inequality gives
/// `‖p‖∞ <= max_k |p(x_k)| / (1 - π D / G)`. `oversample` below
/// [`MIN_OVERSAMPLE`] is raised to it.
pub fn sup_norm(p: &TrigPoly, oversample: u32) -> NormBracket {
    let os = oversample.max(MIN_OVERSAMPLE) as u64;
    let deg = p.half_span();
    let grid = pow2_at_least(os * (deg + 1));
    let moduli = moduli_on_grid(p, grid);
    let (k, lower) = moduli
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (k, v)| if v > best.1 { (k, v) } else { best });
    let upper = if deg == 0 {
        lower
    } else {
        lower / (1.0 - PI * deg as f64 / grid as f64)
    };
    NormBracket {
        lower,
        upper,
        at: node(k, grid),
    }
}

/// Normalised L1 norm from the rectangle rule on `|p|`, with error at most
/// `π D ‖p‖∞ / grid` since `|p|` is Lipschitz with constant `D ‖p‖∞`.
pub fn l1_norm(p: &TrigPoly, grid: usize) -> Result<NormBracket, TrigError> {
    let deg = p.half_span();
    if (grid as u64) <= 2 * deg {
        return Err(TrigError::GridTooSmall { grid, degree: deg });
    }
    let moduli = moduli_on_grid(p, grid);
    let mean = moduli.iter().sum::<f64>() / grid as f64;
    if deg == 0 {
        return Ok(NormBracket::exact(mean));
    }
    let err = PI * deg as f64 * sup_norm(p, MIN_OVERSAMPLE).upper / grid as f64;
    Ok(NormBracket {
        lower: (mean - err).max(0.0),
        upper: mean + err,
        at: 0.0,
    })
}

/// `‖p‖₂ = sqrt(Σ |c_s|²)` by Parseval.
pub fn l2_norm(p: &TrigPoly) -> f64 {
    p.coeffs().iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

/// `‖p‖₂` from grid quadrature of `|p|²` on a grid where it is exact.
pub fn l2_by_quadrature(p: &TrigPoly) -> f64 {
    let grid = pow2_at_least(2 * p.half_span() + 2);
    let moduli = moduli_on_grid(p, grid);
    (moduli.iter().map(|v| v * v).sum::<f64>() / grid as f64).sqrt()
}
