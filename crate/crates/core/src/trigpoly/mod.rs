//! Trigonometric polynomials with a contiguous block of frequencies.
//!
//! A [`TrigPoly`] stores `c_s` for `s = min_freq .. min_freq + len`. This is
//! the shape of every object in the construction: single blocks `δ_n`,
//! partial sums `S_n` (blocks are laid out in increasing frequency), and
//! Fejér kernels centred at zero.

use num_complex::Complex64;
use thiserror::Error;

mod grid;
mod norms;
mod real;

pub use grid::{grid_eval, grid_samples, moduli_on_grid, pow2_at_least};
pub use norms::{l1_norm, l2_by_quadrature, l2_norm, sup_norm, NormBracket, MIN_OVERSAMPLE};
pub use real::{real_part, real_sup_norm, Modulated, RealTrigPoly};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TrigError {
    #[error("grid of {grid} points is too small for degree {degree}")]
    GridTooSmall { grid: usize, degree: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrigPoly {
    min_freq: i64,
    coeffs: Vec<Complex64>,
    padded: bool,
}

impl TrigPoly {
    /// Build from a coefficient block, trimming exact zeros at both ends.
    /// An all-zero block becomes the padded zero polynomial.
    pub fn new(min_freq: i64, coeffs: Vec<Complex64>) -> Self {
        let zero = Complex64::new(0.0, 0.0);
        let Some(first) = coeffs.iter().position(|c| *c != zero) else {
            return Self::zero_at(min_freq);
        };
        let last = coeffs.iter().rposition(|c| *c != zero).unwrap();
        Self {
            min_freq: min_freq + first as i64,
            coeffs: coeffs[first..=last].to_vec(),
            padded: false,
        }
    }

    /// Keep the block as given, zeros included. Panics on an empty block.
    pub fn padded(min_freq: i64, coeffs: Vec<Complex64>) -> Self {
        assert!(!coeffs.is_empty(), "a coefficient block needs at least one entry");
        Self {
            min_freq,
            coeffs,
            padded: true,
        }
    }

    fn zero_at(freq: i64) -> Self {
        Self::padded(freq, vec![Complex64::new(0.0, 0.0)])
    }

    pub fn zero() -> Self {
        Self::zero_at(0)
    }

    /// `c e^{i freq x}`.
    pub fn monomial(freq: i64, c: Complex64) -> Self {
        Self::new(freq, vec![c])
    }

    /// The Fejér kernel `K_d`, normalised so its mean is ½:
    /// `c_k = ½ (1 - |k|/(d+1))` for `|k| <= d`.
    pub fn fejer(d: u64) -> Self {
        let d = d as i64;
        let coeffs = (-d..=d)
            .map(|k| Complex64::new(0.5 * (1.0 - k.abs() as f64 / (d + 1) as f64), 0.0))
            .collect();
        Self::new(-d, coeffs)
    }

    pub fn min_freq(&self) -> i64 {
        self.min_freq
    }

    pub fn max_freq(&self) -> i64 {
        self.min_freq + self.coeffs.len() as i64 - 1
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn is_padded(&self) -> bool {
        self.padded
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.norm_sqr() == 0.0)
    }

    /// `max(|min_freq|, |max_freq|)`.
    pub fn degree(&self) -> u64 {
        self.min_freq.unsigned_abs().max(self.max_freq().unsigned_abs())
    }

    /// Frequency at the middle of the block (rounded down).
    pub fn center(&self) -> i64 {
        self.min_freq + (self.coeffs.len() as i64 - 1) / 2
    }

    /// Degree of `e^{-i center x} p(x)`. Moduli are unchanged by that shift,
    /// so this is the degree that governs `|p|` and every bound on it.
    pub fn half_span(&self) -> u64 {
        (self.coeffs.len() as u64) / 2
    }

    pub fn coeff(&self, s: i64) -> Complex64 {
        let k = s - self.min_freq;
        if (0..self.coeffs.len() as i64).contains(&k) {
            self.coeffs[k as usize]
        } else {
            Complex64::new(0.0, 0.0)
        }
    }

    /// `Σ |c_s|`, the scale for round-off slack.
    pub fn l1_mass(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).sum()
    }

    /// Evaluate at one point.
    pub fn eval(&self, x: f64) -> Complex64 {
        let w = Complex64::from_polar(1.0, x);
        let mut acc = Complex64::new(0.0, 0.0);
        for c in self.coeffs.iter().rev() {
            acc = acc * w + c;
        }
        acc * Complex64::from_polar(1.0, self.min_freq as f64 * x)
    }

    /// Multiply by `e^{i shift x}`.
    pub fn modulate(&self, shift: i64) -> Self {
        Self {
            min_freq: self.min_freq + shift,
            coeffs: self.coeffs.clone(),
            padded: self.padded,
        }
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self::new(self.min_freq, self.coeffs.iter().map(|c| c * factor).collect())
    }

    pub fn negate(&self) -> Self {
        Self {
            min_freq: self.min_freq,
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
            padded: self.padded,
        }
    }

    /// Coefficient-wise sum over the union of supports. Panics on an empty
    /// slice. A sum that cancels completely is the padded zero polynomial.
    pub fn sum<'a, I>(polys: I) -> Self
    where
        I: IntoIterator<Item = &'a TrigPoly>,
    {
        let polys: Vec<&TrigPoly> = polys.into_iter().collect();
        assert!(!polys.is_empty(), "sum of no polynomials");
        let lo = polys.iter().map(|p| p.min_freq).min().unwrap();
        let hi = polys.iter().map(|p| p.max_freq()).max().unwrap();
        let mut coeffs = vec![Complex64::new(0.0, 0.0); (hi - lo + 1) as usize];
        for p in &polys {
            let off = (p.min_freq - lo) as usize;
            for (slot, c) in coeffs[off..].iter_mut().zip(&p.coeffs) {
                *slot += c;
            }
        }
        let out = Self::new(lo, coeffs);
        if out.is_zero() {
            Self::zero_at(lo)
        } else {
            out
        }
    }

    pub fn add(&self, other: &TrigPoly) -> Self {
        Self::sum([self, other])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    /// Closed form `K_d(x) = 2/(d+1) (sin((d+1)x/2) / (2 sin(x/2)))^2`.
    pub(crate) fn fejer_closed_form(d: u64, x: f64) -> f64 {
        let n = (d + 1) as f64;
        let s = (x / 2.0).sin();
        if s.abs() < 1e-12 {
            return n / 2.0;
        }
        2.0 / n * ((n * x / 2.0).sin() / (2.0 * s)).powi(2)
    }

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn fejer_small_cases() {
        let k0 = TrigPoly::fejer(0);
        assert_eq!(k0.min_freq(), 0);
        assert_eq!(k0.coeffs(), &[c(0.5)]);

        let k2 = TrigPoly::fejer(2);
        assert_eq!(k2.min_freq(), -2);
        let expected = [1.0 / 6.0, 1.0 / 3.0, 0.5, 1.0 / 3.0, 1.0 / 6.0];
        for (got, want) in k2.coeffs().iter().zip(expected) {
            assert!((got.re - want).abs() < 1e-15 && got.im == 0.0);
        }
        assert!((k2.eval(0.0).re - 1.5).abs() < 1e-14);
        assert!((fejer_closed_form(2, 1e-7) - 1.5).abs() < 1e-9);
    }

    #[test]
    fn fejer_matches_closed_form() {
        for d in [0u64, 1, 5, 17] {
            let k = TrigPoly::fejer(d);
            for i in 1..50 {
                let x = -PI + 2.0 * PI * i as f64 / 50.0 + 0.013;
                assert!((k.eval(x).re - fejer_closed_form(d, x)).abs() < 1e-12, "d={d} x={x}");
                assert!(k.eval(x).im.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn degree_and_half_span() {
        let p = TrigPoly::new(5, vec![c(1.0), c(2.0), c(3.0)]);
        assert_eq!(p.degree(), 7);
        assert_eq!(p.half_span(), 1);
        assert_eq!(p.center(), 6);
        assert_eq!(TrigPoly::fejer(4).degree(), 4);
        assert_eq!(TrigPoly::fejer(4).half_span(), 4);
    }

    #[test]
    fn trimming_and_padding() {
        let p = TrigPoly::new(0, vec![c(0.0), c(1.0), c(0.0)]);
        assert_eq!((p.min_freq(), p.len()), (1, 1));
        let z = TrigPoly::new(3, vec![c(0.0), c(0.0)]);
        assert!(z.is_padded() && z.is_zero());
        let q = TrigPoly::padded(0, vec![c(0.0), c(1.0)]);
        assert_eq!(q.len(), 2);
    }

    #[test]
    fn modulate_shifts_support() {
        let p = TrigPoly::fejer(1).modulate(5);
        assert_eq!((p.min_freq(), p.max_freq()), (4, 6));
        let k = TrigPoly::fejer(3);
        assert_eq!(k.modulate(0), k);
    }

    #[test]
    fn sums() {
        let a = TrigPoly::new(0, vec![c(1.0), c(2.0)]);
        let b = TrigPoly::new(5, vec![c(3.0)]);
        let s = TrigPoly::sum([&a, &b]);
        assert_eq!(s.min_freq(), 0);
        assert_eq!(s.len(), 6);
        assert!((l2_norm(&s).powi(2) - l2_norm(&a).powi(2) - l2_norm(&b).powi(2)).abs() < 1e-12);

        let cancel = a.add(&a.negate());
        assert!(cancel.is_zero() && cancel.is_padded());
        assert_eq!(l2_norm(&cancel), 0.0);

        let e1 = TrigPoly::monomial(1, c(1.0));
        let copies = vec![e1.clone(); 7];
        let s = TrigPoly::sum(&copies);
        assert_eq!(s.coeff(1), c(7.0));
        assert_eq!(s.len(), 1);
    }

    #[test]
    fn point_eval_matches_direct_sum() {
        let p = TrigPoly::new(
            -3,
            (0..9).map(|k| Complex64::new(k as f64 * 0.3 - 1.0, (k * k) as f64 * 0.1)).collect(),
        );
        for i in 0..20 {
            let x = 0.31 * i as f64;
            let direct: Complex64 = (p.min_freq()..=p.max_freq())
                .map(|s| p.coeff(s) * Complex64::from_polar(1.0, s as f64 * x))
                .sum();
            assert!((p.eval(x) - direct).norm() < 1e-12);
        }
    }
}
