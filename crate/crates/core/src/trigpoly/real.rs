use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::grid::{grid_samples, node, pow2_at_least};
use super::norms::{sup_norm, NormBracket, MIN_OVERSAMPLE};
use super::TrigPoly;

/// `Σ_k a_k cos kx + b_k sin kx` for `k = min_freq .. min_freq + len`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealTrigPoly {
    pub min_freq: u64,
    pub cos: Vec<f64>,
    pub sin: Vec<f64>,
}

impl RealTrigPoly {
    pub fn degree(&self) -> u64 {
        let last = self
            .cos
            .iter()
            .zip(&self.sin)
            .rposition(|(a, b)| *a != 0.0 || *b != 0.0)
            .unwrap_or(0);
        self.min_freq + last as u64
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.cos
            .iter()
            .zip(&self.sin)
            .enumerate()
            .map(|(i, (a, b))| {
                let (s, c) = ((self.min_freq + i as u64) as f64 * x).sin_cos();
                a * c + b * s
            })
            .sum()
    }

    /// The same function as a complex block on `-deg..=deg`.
    pub fn to_complex(&self) -> TrigPoly {
        let top = self.min_freq as i64 + self.cos.len() as i64 - 1;
        let mut coeffs = vec![Complex64::new(0.0, 0.0); (2 * top + 1) as usize];
        for (i, (a, b)) in self.cos.iter().zip(&self.sin).enumerate() {
            let k = self.min_freq as i64 + i as i64;
            if k == 0 {
                coeffs[top as usize] += a;
            } else {
                coeffs[(top + k) as usize] += Complex64::new(a / 2.0, -b / 2.0);
                coeffs[(top - k) as usize] += Complex64::new(a / 2.0, b / 2.0);
            }
        }
        TrigPoly::new(-top, coeffs)
    }
}

/// `Re p` as cosine and sine coefficients.
pub fn real_part(p: &TrigPoly) -> RealTrigPoly {
    let (lo, hi) = (p.min_freq(), p.max_freq());
    let (kmin, kmax) = if lo >= 0 {
        (lo as u64, hi as u64)
    } else if hi <= 0 {
        (hi.unsigned_abs(), lo.unsigned_abs())
    } else {
        (0, lo.unsigned_abs().max(hi as u64))
    };
    let len = (kmax - kmin + 1) as usize;
    let mut cos = vec![0.0; len];
    let mut sin = vec![0.0; len];
    for (i, c) in p.coeffs().iter().enumerate() {
        let s = lo + i as i64;
        let k = (s.unsigned_abs() - kmin) as usize;
        cos[k] += c.re;
        sin[k] -= s.signum() as f64 * c.im;
    }
    RealTrigPoly {
        min_freq: kmin,
        cos,
        sin,
    }
}

/// Certified bracket for `‖Re p‖∞`. The upper end is also capped by the
/// upper end for `‖p‖∞`, since `|Re z| <= |z|`.
pub fn real_sup_norm(p: &TrigPoly, oversample: u32) -> NormBracket {
    let os = oversample.max(MIN_OVERSAMPLE) as u64;
    let deg = p.degree();
    let grid = pow2_at_least(os * (deg + 1));
    let samples = grid_samples(p, grid);
    let (k, lower) = samples
        .iter()
        .map(|z| z.re.abs())
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (k, v)| if v > best.1 { (k, v) } else { best });
    let own = if deg == 0 {
        lower
    } else {
        lower / (1.0 - PI * deg as f64 / grid as f64)
    };
    NormBracket {
        lower,
        upper: own.min(sup_norm(p, oversample).upper),
        at: node(k, grid),
    }
}

/// A block written as `e^{i carrier x} F(x)` with `F` real-valued, so that
/// `Re δ = F(x) cos(carrier x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Modulated {
    pub carrier: i64,
    /// Coefficients of `F`, Hermitian around frequency 0.
    pub envelope: TrigPoly,
}

impl Modulated {
    pub fn poly(&self) -> TrigPoly {
        self.envelope.modulate(self.carrier)
    }

    /// `F` as a real polynomial.
    pub fn envelope_real(&self) -> RealTrigPoly {
        real_part(&self.envelope)
    }

    pub fn envelope_degree(&self) -> u64 {
        self.envelope.degree()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn real_part_of_exponential_is_cosine() {
        let r = real_part(&TrigPoly::monomial(6, c(1.0, 0.0)));
        assert_eq!(r.min_freq, 6);
        assert_eq!(r.cos, vec![1.0]);
        assert_eq!(r.sin, vec![0.0]);
        for i in 0..10 {
            let x = 0.4 * i as f64;
            assert!((r.eval(x) - (6.0 * x).cos()).abs() < 1e-14);
        }
    }

    #[test]
    fn real_part_matches_pointwise() {
        let p = TrigPoly::new(-4, (0..11).map(|k| c(0.3 * k as f64 - 1.0, 0.17 * (k * k) as f64 - 2.0)).collect());
        let r = real_part(&p);
        let back = r.to_complex();
        for i in 0..25 {
            let x = 0.27 * i as f64;
            assert!((r.eval(x) - p.eval(x).re).abs() < 1e-12);
            assert!((back.eval(x).re - p.eval(x).re).abs() < 1e-12);
            assert!(back.eval(x).im.abs() < 1e-12);
        }
    }

    #[test]
    fn modulated_real_part_factorizes() {
        let env = TrigPoly::fejer(3).scale(0.25);
        let block = Modulated {
            carrier: 40,
            envelope: env,
        };
        let re = real_part(&block.poly());
        let f = block.envelope_real();
        assert_eq!(block.envelope_degree(), 3);
        for i in 0..30 {
            let x = 0.21 * i as f64;
            assert!((re.eval(x) - f.eval(x) * (40.0 * x).cos()).abs() < 1e-13);
        }
    }

    #[test]
    fn real_sup_is_dominated() {
        let p = TrigPoly::new(3, (0..9).map(|k| c((k as f64).cos(), (2.0 * k as f64).sin())).collect());
        let whole = sup_norm(&p, 16);
        let re = real_sup_norm(&p, 16);
        assert!(re.upper <= whole.upper);
        assert!(re.lower <= re.upper);
    }
}
