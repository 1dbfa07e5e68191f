use serde::{Deserialize, Serialize};

use crate::plan::FrequencyPlan;

/// Constants of the construction and of the bound on `‖S_N‖∞`.
///
/// `beta` follows `7 sqrt(2 c_H)` unless overridden. `c_H` defaults to 1.0,
/// a placeholder: no numeric value of the Carleson–Hunt constant is known.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantProfile {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub c_h: f64,
    pub a_offset: f64,
    pub a_slope: f64,
    #[serde(default)]
    pub beta_overridden: bool,
}

pub const PAPER_ALPHA: f64 = 316.0;
pub const PAPER_GAMMA: f64 = 210.0;
pub const PAPER_A_OFFSET: f64 = 45.0;
pub const PAPER_A_SLOPE: f64 = 30.0;
pub const DEFAULT_C_H: f64 = 1.0;

fn beta_from(c_h: f64) -> f64 {
    7.0 * (2.0 * c_h).sqrt()
}

impl Default for ConstantProfile {
    fn default() -> Self {
        Self::paper(DEFAULT_C_H)
    }
}

impl ConstantProfile {
    pub fn paper(c_h: f64) -> Self {
        Self {
            alpha: PAPER_ALPHA,
            beta: beta_from(c_h),
            gamma: PAPER_GAMMA,
            c_h,
            a_offset: PAPER_A_OFFSET,
            a_slope: PAPER_A_SLOPE,
            beta_overridden: false,
        }
    }

    pub fn with_c_h(mut self, c_h: f64) -> Self {
        self.c_h = c_h;
        if !self.beta_overridden {
            self.beta = beta_from(c_h);
        }
        self
    }

    pub fn with_beta(mut self, beta: f64) -> Self {
        self.beta = beta;
        self.beta_overridden = true;
        self
    }

    pub fn with_a(mut self, offset: f64, slope: f64) -> Self {
        self.a_offset = offset;
        self.a_slope = slope;
        self
    }

    /// Whether the construction constants are the ones the bounds are proved
    /// for. Under any other profile the checks are informational.
    pub fn is_paper(&self) -> bool {
        self.alpha == PAPER_ALPHA
            && self.gamma == PAPER_GAMMA
            && self.a_offset == PAPER_A_OFFSET
            && self.a_slope == PAPER_A_SLOPE
            && !self.beta_overridden
            && self.beta == beta_from(self.c_h)
    }

    pub fn validate(&self) -> Result<(), String> {
        let fields = [
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("gamma", self.gamma),
            ("c_h", self.c_h),
            ("a_offset", self.a_offset),
            ("a_slope", self.a_slope),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v > 0.0) {
                return Err(format!("{name} must be positive and finite, got {v}"));
            }
        }
        if !self.beta_overridden && self.beta != beta_from(self.c_h) {
            return Err("beta differs from 7 sqrt(2 c_H) but is not marked overridden".into());
        }
        Ok(())
    }

    /// Right-hand side `α + β√N + γ max_{j<=N} log_q max(m_j/d_j, 1/ln q, 1)`,
    /// using the original widths `d_j`.
    pub fn theorem_rhs(&self, plan: &FrequencyPlan, n: usize) -> f64 {
        let log_term = (1..=n).map(|j| plan.log_term(j)).fold(f64::NEG_INFINITY, f64::max);
        self.alpha + self.beta * (n as f64).sqrt() + self.gamma * log_term
    }
}

/// `a_n = a_offset + a_slope · log_q(m_n / d_eff_n)`.
pub fn compute_a(n: usize, plan: &FrequencyPlan, profile: &ConstantProfile) -> f64 {
    let b = plan.block(n);
    profile.a_offset + profile.a_slope * ((b.m as f64 / b.d_eff as f64).ln() / plan.q().ln())
}
