//! Coefficient-space synthesis of a block
//! `δ = (1/d) e^{i(m+K)x} Σ_{l∈Λ} K_K(x - 2πl/d)`, `K = ⌊(d-1)/2⌋`.
//!
//! The translate `K_K(x - 2πl/d)` has coefficient `½(1 - |k|/(K+1)) e^{-ik2πl/d}`
//! at offset `k`, so the block's envelope coefficient is the kernel weight
//! times the character sum `χ(k) = Σ_{l∈Λ} e^{-2πikl/d}`.

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::circleset::Lattice;
use crate::trigpoly::{Modulated, TrigPoly};

/// Above this many (point, frequency) pairs the character sums go through
/// one FFT of length `d` instead of a direct double loop.
const DIRECT_SUM_LIMIT: u64 = 1 << 24;

/// `Σ_{l∈set} e^{-2πikl/d}` for `k = 0..=kmax`.
fn character_sums(set: &[u64], d: u64, kmax: u64) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); kmax as usize + 1];
    if set.is_empty() {
        return out;
    }
    if (set.len() as u64).saturating_mul(kmax + 1) <= DIRECT_SUM_LIMIT {
        for (k, slot) in out.iter_mut().enumerate() {
            for &l in set {
                // Reduce the angle in integers so that it stays exact.
                let r = (k as u128 * l as u128 % d as u128) as f64;
                *slot += Complex64::from_polar(1.0, -std::f64::consts::TAU * r / d as f64);
            }
        }
    } else {
        let mut buf = vec![Complex64::new(0.0, 0.0); d as usize];
        for &l in set {
            buf[(l % d) as usize] += 1.0;
        }
        FftPlanner::new().plan_fft_forward(d as usize).process(&mut buf);
        out.copy_from_slice(&buf[..=kmax as usize]);
    }
    out
}

/// Build `δ` for frequency `m`, width `d` and survivor set `lambda`.
/// The spectrum is `[m, m + 2K] ⊆ [m, m + d)`. Panics unless `lambda.d == d`.
pub fn synthesize_block(m: u64, d: u64, lambda: &Lattice) -> Modulated {
    assert_eq!(lambda.d, d, "survivor lattice must match the block width");
    let half = (d - 1) / 2;
    let width = (half + 1) as f64;
    let size = lambda.len();

    // χ over Λ, computed through whichever of Λ and its complement is smaller;
    // over the full lattice χ(k) = 0 for 0 < k <= K < d.
    let chi: Vec<Complex64> = if size * 2 >= d {
        character_sums(&lambda.excluded, d, half).into_iter().map(|c| -c).collect()
    } else {
        let members: Vec<u64> = lambda.members().collect();
        character_sums(&members, d, half)
    };

    let mut coeffs = vec![Complex64::new(0.0, 0.0); (2 * half + 1) as usize];
    coeffs[half as usize] = Complex64::new(0.5 * (size as f64 / d as f64), 0.0);
    for k in 1..=half {
        let weight = 0.5 * (1.0 - k as f64 / width) / d as f64;
        let c = chi[k as usize] * weight;
        coeffs[(half + k) as usize] = c;
        coeffs[(half - k) as usize] = c.conj();
    }
    Modulated {
        carrier: (m + half) as i64,
        envelope: TrigPoly::new(-(half as i64), coeffs),
    }
}

/// The first block, `e^{i m x}`.
pub fn first_block(m: u64) -> Modulated {
    Modulated {
        carrier: m as i64,
        envelope: TrigPoly::monomial(0, Complex64::new(1.0, 0.0)),
    }
}
