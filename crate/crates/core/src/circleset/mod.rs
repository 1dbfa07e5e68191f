//! Finite unions of arcs on the circle `[0, 2π)`.
//!
//! Boundaries are resolved toward "inside": arcs closer than
//! [`MERGE_TOL`] are merged, and lattice points within `tol_x` of an arc
//! count as covered. Both choices can only grow the bad sets of the
//! construction and shrink the surviving lattice.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};
use thiserror::Error;

mod superlevel;

pub use superlevel::{superlevel_arcs, superlevel_arcs_bounded, ExtractionMode, SuperlevelOptions};

/// Default endpoint resolution, `2π · 2^-40`.
pub const DEFAULT_TOL_X: f64 = TAU / (1u64 << 40) as f64;
/// Arcs separated by at most this much are one component.
pub const MERGE_TOL: f64 = 2.0 * DEFAULT_TOL_X;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CircleError {
    #[error("threshold must be positive and finite, got {0}")]
    InvalidThreshold(f64),
    #[error("{crossings} level crossings detected, more than the {limit} a polynomial of this degree allows")]
    ResolutionExceeded { crossings: usize, limit: usize },
}

/// Sorted, pairwise disjoint arcs `(start, end)` with `0 <= start < 2π` and
/// `start < end <= start + 2π`. Only the last arc may run past `2π`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ArcSet {
    full: bool,
    arcs: Vec<(f64, f64)>,
}

impl ArcSet {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn full() -> Self {
        Self {
            full: true,
            arcs: Vec::new(),
        }
    }

    /// Normalise arbitrary arcs `(start, end)`, `end >= start`, read mod 2π.
    pub fn from_arcs<I: IntoIterator<Item = (f64, f64)>>(raw: I) -> Self {
        let mut pieces: Vec<(f64, f64)> = Vec::new();
        for (s, e) in raw {
            let len = e - s;
            if len.is_nan() || len <= 0.0 {
                continue;
            }
            if len >= TAU - MERGE_TOL {
                return Self::full();
            }
            let mut s0 = s.rem_euclid(TAU);
            if s0 >= TAU {
                s0 = 0.0;
            }
            let e0 = s0 + len;
            if e0 > TAU {
                pieces.push((s0, TAU));
                pieces.push((0.0, e0 - TAU));
            } else {
                pieces.push((s0, e0));
            }
        }
        pieces.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));

        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(pieces.len());
        for (s, e) in pieces {
            match merged.last_mut() {
                Some(last) if s <= last.1 + MERGE_TOL => last.1 = last.1.max(e),
                _ => merged.push((s, e)),
            }
        }
        if let [(s, e)] = merged[..] {
            if s <= MERGE_TOL && e >= TAU - MERGE_TOL {
                return Self::full();
            }
        }
        if merged.len() > 1 {
            let first = merged[0];
            let last = *merged.last().unwrap();
            if first.0 + TAU <= last.1 + MERGE_TOL {
                merged.remove(0);
                let wrapped = (last.0, first.1 + TAU);
                if wrapped.1 - wrapped.0 >= TAU - MERGE_TOL {
                    return Self::full();
                }
                *merged.last_mut().unwrap() = wrapped;
            }
        }
        Self {
            full: false,
            arcs: merged,
        }
    }

    pub fn is_full(&self) -> bool {
        self.full
    }

    pub fn is_empty(&self) -> bool {
        !self.full && self.arcs.is_empty()
    }

    pub fn arcs(&self) -> &[(f64, f64)] {
        &self.arcs
    }

    /// Lebesgue measure, in `[0, 2π]`.
    pub fn measure(&self) -> f64 {
        if self.full {
            TAU
        } else {
            self.arcs.iter().fold(0.0, |acc, (s, e)| acc + (e - s))
        }
    }

    /// Number of connected components in the circle topology.
    pub fn components(&self) -> usize {
        if self.full {
            1
        } else {
            self.arcs.len()
        }
    }

    /// Whether `x` lies in the closed arcs widened by `tol`.
    pub fn contains(&self, x: f64, tol: f64) -> bool {
        if self.full {
            return true;
        }
        if self.arcs.is_empty() {
            return false;
        }
        let x = x.rem_euclid(TAU);
        let hit = |i: usize| {
            let (s, e) = self.arcs[i];
            [x - TAU, x, x + TAU].iter().any(|&y| s - tol <= y && y <= e + tol)
        };
        let idx = self.arcs.partition_point(|&(s, _)| s <= x + tol);
        let last = self.arcs.len() - 1;
        (idx > 0 && hit(idx - 1)) || (idx <= last && hit(idx)) || hit(0) || hit(last)
    }

    /// Grow every arc by `eps` on both sides.
    pub fn expand(&self, eps: f64) -> Self {
        if self.full || eps <= 0.0 {
            return self.clone();
        }
        Self::from_arcs(self.arcs.iter().map(|&(s, e)| (s - eps, e + eps)))
    }

    pub fn union<'a, I: IntoIterator<Item = &'a ArcSet>>(sets: I) -> Self {
        let mut raw = Vec::new();
        for set in sets {
            if set.full {
                return Self::full();
            }
            raw.extend_from_slice(&set.arcs);
        }
        Self::from_arcs(raw)
    }

    /// The lattice points `l ∈ {1..d}` whose angle `2πl/d` is not covered,
    /// with points within `tol` of an arc counted as covered.
    pub fn survivors(&self, d: u64, tol: f64) -> Lattice {
        assert!(d >= 1);
        if self.full {
            return Lattice {
                d,
                excluded: (1..=d).collect(),
            };
        }
        let mut covered = vec![false; d as usize];
        let df = d as f64;
        for &(s, e) in &self.arcs {
            let (lo, hi) = (s - tol, e + tol);
            let first = (lo * df / TAU).floor() as i64 - 1;
            let last = (hi * df / TAU).ceil() as i64 + 1;
            for r in first..=last {
                let idx = r.rem_euclid(d as i64) as u64;
                let x = lattice_angle(idx, d);
                if [x - TAU, x, x + TAU].iter().any(|&y| lo <= y && y <= hi) {
                    covered[idx as usize] = true;
                }
            }
        }
        let excluded = (1..=d).filter(|&l| covered[(l % d) as usize]).collect();
        Lattice { d, excluded }
    }
}

/// `2π l / d` reduced into `[0, 2π)`.
pub fn lattice_angle(l: u64, d: u64) -> f64 {
    TAU * (l % d) as f64 / d as f64
}

/// A subset of `{1..d}` stored by its complement, which is small whenever
/// the bad sets are.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lattice {
    pub d: u64,
    /// Sorted members of `{1..d}` that are not in the set.
    pub excluded: Vec<u64>,
}

impl Lattice {
    pub fn full(d: u64) -> Self {
        Self {
            d,
            excluded: Vec::new(),
        }
    }

    pub fn len(&self) -> u64 {
        self.d - self.excluded.len() as u64
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_full(&self) -> bool {
        self.excluded.is_empty()
    }

    pub fn contains(&self, l: u64) -> bool {
        (1..=self.d).contains(&l) && self.excluded.binary_search(&l).is_err()
    }

    pub fn members(&self) -> impl Iterator<Item = u64> + '_ {
        (1..=self.d).filter(move |l| self.excluded.binary_search(l).is_err())
    }
}
