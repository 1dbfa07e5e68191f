//! Lacunary trigonometric polynomials with controlled partial sums.
//!
//! A run picks blocks `δ_n` supported on `[m_n, m_n + d_n)` so that every
//! partial sum `S_N = δ_1 + … + δ_N` stays uniformly small while each block
//! keeps `‖δ_n‖₁ >= 1/8`.

pub mod circleset;
pub mod construct;
pub mod io;
pub mod plan;
pub mod trigpoly;
pub mod verify;
