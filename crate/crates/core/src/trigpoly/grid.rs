use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use super::{TrigError, TrigPoly};

pub fn pow2_at_least(n: u64) -> usize {
    n.max(1).next_power_of_two() as usize
}

/// Values of `e^{-i shift x} p(x)` at `x_k = 2πk/grid`.
///
/// Coefficients are folded modulo `grid` before the transform, so the values
/// are exact at the nodes whatever the degree.
fn shifted_samples(p: &TrigPoly, grid: usize, shift: i64) -> Vec<Complex64> {
    assert!(grid > 0);
    let g = grid as i64;
    let mut buf = vec![Complex64::new(0.0, 0.0); grid];
    let start = (p.min_freq() - shift).rem_euclid(g) as usize;
    for (i, c) in p.coeffs().iter().enumerate() {
        let idx = (start + i) % grid;
        buf[idx] += c;
    }
    let fft = FftPlanner::new().plan_fft_inverse(grid);
    fft.process(&mut buf);
    buf
}

/// Samples `p(2πk/grid)`, `k = 0..grid`, with no aliasing check.
pub fn grid_samples(p: &TrigPoly, grid: usize) -> Vec<Complex64> {
    shifted_samples(p, grid, 0)
}

/// Samples on a grid fine enough that no two frequencies of `p` alias.
pub fn grid_eval(p: &TrigPoly, grid: usize) -> Result<Vec<Complex64>, TrigError> {
    if (grid as u64) <= 2 * p.degree() {
        return Err(TrigError::GridTooSmall {
            grid,
            degree: p.degree(),
        });
    }
    Ok(grid_samples(p, grid))
}

/// `|p(2πk/grid)|`, computed from the centred block.
pub fn moduli_on_grid(p: &TrigPoly, grid: usize) -> Vec<f64> {
    shifted_samples(p, grid, p.center()).into_iter().map(|z| z.norm()).collect()
}

/// Node `k` of a grid of `grid` points.
pub(crate) fn node(k: usize, grid: usize) -> f64 {
    2.0 * PI * k as f64 / grid as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn single_frequency_gives_roots_of_unity() {
        let p = TrigPoly::monomial(3, c(1.0, 0.0));
        let s = grid_eval(&p, 8).unwrap();
        for (k, z) in s.iter().enumerate() {
            let want = Complex64::from_polar(1.0, 2.0 * PI * 3.0 * k as f64 / 8.0);
            assert!((z - want).norm() < 1e-14);
        }
    }

    #[test]
    fn fejer_samples_are_real_and_nonnegative() {
        let s = grid_eval(&TrigPoly::fejer(2), 16).unwrap();
        for z in s {
            assert!(z.im.abs() < 1e-14);
            assert!(z.re >= -1e-12);
        }
    }

    #[test]
    fn small_grid_rejected() {
        let p = TrigPoly::monomial(4, c(1.0, 0.0));
        assert_eq!(grid_eval(&p, 8), Err(TrigError::GridTooSmall { grid: 8, degree: 4 }));
        assert!(grid_eval(&p, 9).is_ok());
    }

    #[test]
    fn folded_samples_are_exact_when_aliased() {
        let p = TrigPoly::new(10, vec![c(1.0, 0.5), c(-0.25, 2.0), c(0.75, 0.0)]);
        let s = grid_samples(&p, 4);
        for (k, z) in s.iter().enumerate() {
            assert!((z - p.eval(node(k, 4))).norm() < 1e-13);
        }
    }

    #[test]
    fn moduli_ignore_the_carrier() {
        let base = TrigPoly::new(-2, vec![c(1.0, 0.0), c(0.0, 1.0), c(2.0, -1.0), c(0.5, 0.5), c(0.1, 0.0)]);
        let far = base.modulate(1_000_003);
        let a = moduli_on_grid(&base, 64);
        let b = moduli_on_grid(&far, 64);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn linearity_on_disjoint_blocks(
            a in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..20),
            b in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..20),
            gap in 0i64..30,
        ) {
            let pa = TrigPoly::padded(3, a.iter().map(|&(r, i)| c(r, i)).collect());
            let pb = TrigPoly::padded(3 + a.len() as i64 + gap, b.iter().map(|&(r, i)| c(r, i)).collect());
            let sum = pa.add(&pb);
            let grid = pow2_at_least(2 * sum.degree() + 1);
            let sa = grid_eval(&pa, grid).unwrap();
            let sb = grid_eval(&pb, grid).unwrap();
            let ss = grid_eval(&sum, grid).unwrap();
            let tol = 1e-10 * (pa.l1_mass() + pb.l1_mass());
            for k in 0..grid {
                prop_assert!((ss[k] - sa[k] - sb[k]).norm() <= tol);
            }
        }
    }
}
