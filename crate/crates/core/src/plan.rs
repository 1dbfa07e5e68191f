//! Frequency plans: the ratio `q`, the lacunary frequencies `m_j` and the
//! block widths `d_j`, together with the width reduction that enforces
//! `m_j / d_j >= max(1, 1 / ln q)`.
//!
//! The ratio is compared exactly. A floating `q` is read as the decimal
//! number printed by its shortest round-trip representation (`1.3` means
//! 13/10, not the binary neighbour of 1.3), and `m_{j+1} >= q * m_j` is then
//! decided in integer arithmetic with ties passing.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest integer accepted in a plan document; above this a JSON number can
/// no longer be represented exactly by a float reader.
pub const MAX_EXACT_INT: u64 = 1 << 53;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlanError {
    #[error("plan has no blocks")]
    EmptyPlan,
    #[error("ratio q = {0} is not a finite number greater than 1")]
    NonLacunaryRatio(f64),
    #[error("block {0}: frequency and width must be positive integers")]
    NonPositive(usize),
    #[error("block {0}: integer exceeds 2^53")]
    TooLarge(usize),
    #[error("ratio violated at block {0}: m_(j+1) < q * m_j")]
    RatioViolation(usize),
    #[error("width violated at block {0}: need 1 <= d_j <= m_(j+1) - m_j")]
    WidthViolation(usize),
    #[error("block {0}: effective width must satisfy 1 <= d_eff <= d and m/d_eff >= max(1, 1/ln q)")]
    EffectiveWidthViolation(usize),
    #[error("block {0}: m_j < 1/ln q, no width >= 1 satisfies the reduction condition")]
    UnreducibleBlock(usize),
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
    #[error("invalid preset parameter `{name}`: {reason}")]
    InvalidParam { name: String, reason: String },
}

/// A ratio `q > 1` held as `digits * 10^exp10`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DecimalRatio {
    digits: u128,
    exp10: i32,
}

impl DecimalRatio {
    pub fn from_f64(q: f64) -> Result<Self, PlanError> {
        if !q.is_finite() || q <= 1.0 {
            return Err(PlanError::NonLacunaryRatio(q));
        }
        // `{:e}` is the shortest representation that round-trips.
        let text = format!("{q:e}");
        let (mantissa, exp) = text.split_once('e').expect("exponent marker");
        let exp: i32 = exp.parse().expect("exponent digits");
        let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
        let digits: u128 = format!("{int_part}{frac_part}").parse().expect("mantissa digits");
        Ok(Self {
            digits,
            exp10: exp - frac_part.len() as i32,
        })
    }

    /// `q * m` as an exact fraction `(numerator, denominator)`; `None` if the
    /// product overflows, which for plan-sized `m` means "larger than any u64".
    fn times(&self, m: u64) -> Option<(u128, u128)> {
        let num = self.digits.checked_mul(m as u128)?;
        if self.exp10 >= 0 {
            let scale = 10u128.checked_pow(self.exp10 as u32)?;
            Some((num.checked_mul(scale)?, 1))
        } else {
            Some((num, 10u128.checked_pow((-self.exp10) as u32)?))
        }
    }

    /// Whether `next >= q * m`, exactly.
    pub fn admits(&self, m: u64, next: u64) -> bool {
        match self.times(m) {
            Some((num, den)) => match (next as u128).checked_mul(den) {
                Some(lhs) => lhs >= num,
                None => true,
            },
            None => false,
        }
    }

    /// `ceil(q * m)`, exactly; `None` on overflow.
    pub fn ceil_times(&self, m: u64) -> Option<u64> {
        let (num, den) = self.times(m)?;
        u64::try_from(num.div_ceil(den)).ok()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub m: u64,
    pub d: u64,
    pub d_eff: u64,
}

/// A validated plan. Construct through [`FrequencyPlan::validate`],
/// [`preset`] or [`FrequencyPlan::from_json`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrequencyPlan {
    q: f64,
    blocks: Vec<Block>,
    #[serde(skip)]
    reduced: bool,
    #[serde(skip)]
    warnings: Vec<String>,
}

#[derive(Deserialize)]
struct PlanDocument {
    q: f64,
    blocks: Vec<Block>,
}

/// `m / d >= max(1, 1 / ln q)` in the form the reduction guarantees.
pub fn satisfies_reduction(q: f64, m: u64, d: u64) -> bool {
    d >= 1 && (m as f64) / (d as f64) >= f64::max(1.0, 1.0 / q.ln())
}

impl FrequencyPlan {
    pub fn validate(q: f64, pairs: &[(u64, u64)]) -> Result<Self, PlanError> {
        let ratio = DecimalRatio::from_f64(q)?;
        if pairs.is_empty() {
            return Err(PlanError::EmptyPlan);
        }
        for (i, &(m, d)) in pairs.iter().enumerate() {
            if m == 0 || d == 0 {
                return Err(PlanError::NonPositive(i + 1));
            }
            if m > MAX_EXACT_INT || d > MAX_EXACT_INT {
                return Err(PlanError::TooLarge(i + 1));
            }
        }
        let mut warnings = Vec::new();
        for (i, &(m, d)) in pairs.iter().enumerate() {
            let j = i + 1;
            match pairs.get(i + 1) {
                Some(&(next, _)) => {
                    if !ratio.admits(m, next) {
                        return Err(PlanError::RatioViolation(j));
                    }
                    if d > next - m {
                        return Err(PlanError::WidthViolation(j));
                    }
                }
                None if d > m => warnings.push(format!(
                    "last block width d_{j} = {d} exceeds m_{j} = {m}; no successor constrains it"
                )),
                None => {}
            }
        }
        Ok(Self {
            q,
            blocks: pairs.iter().map(|&(m, d)| Block { m, d, d_eff: d }).collect(),
            reduced: false,
            warnings,
        })
    }

    /// Clamp every width to `d_eff = min(d, floor(m * min(1, ln q)))`, the
    /// largest width with `m / d_eff >= max(1, 1/ln q)`. Idempotent.
    pub fn reduce_widths(&self) -> Result<Self, PlanError> {
        let q = self.q;
        let factor = f64::min(1.0, q.ln());
        let mut blocks = self.blocks.clone();
        for (i, b) in blocks.iter_mut().enumerate() {
            let mut cap = ((b.m as f64) * factor).floor() as u64;
            // The floor can land one off the exact condition in floating point.
            while cap > 0 && !satisfies_reduction(q, b.m, cap) {
                cap -= 1;
            }
            while satisfies_reduction(q, b.m, cap + 1) && cap < b.d {
                cap += 1;
            }
            if cap < 1 {
                return Err(PlanError::UnreducibleBlock(i + 1));
            }
            b.d_eff = b.d.min(cap);
        }
        Ok(Self {
            q,
            blocks,
            reduced: true,
            warnings: self.warnings.clone(),
        })
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// Block `j`, 1-based as in the construction.
    pub fn block(&self, j: usize) -> &Block {
        &self.blocks[j - 1]
    }

    pub fn is_reduced(&self) -> bool {
        self.reduced
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// `log_q max(m_j / d_j, 1 / ln q, 1)` with the original width `d_j`.
    pub fn log_term(&self, j: usize) -> f64 {
        let b = self.block(j);
        let inner = f64::max(b.m as f64 / b.d as f64, f64::max(1.0 / self.q.ln(), 1.0));
        inner.ln() / self.q.ln()
    }

    pub fn to_json(&self) -> String {
        crate::io::to_json_pretty(self)
    }

    /// Parse and re-validate a plan document. A document whose `d_eff`
    /// differs from `d` must already satisfy the reduction condition.
    pub fn from_json(text: &str) -> Result<Self, crate::io::IoError> {
        let doc: PlanDocument = serde_json::from_str(text)?;
        let pairs: Vec<(u64, u64)> = doc.blocks.iter().map(|b| (b.m, b.d)).collect();
        let mut plan = Self::validate(doc.q, &pairs)?;
        let mut all_reduced = true;
        for (i, (slot, b)) in plan.blocks.iter_mut().zip(&doc.blocks).enumerate() {
            if b.d_eff < 1 || b.d_eff > b.d || b.d_eff > MAX_EXACT_INT {
                return Err(PlanError::EffectiveWidthViolation(i + 1).into());
            }
            all_reduced &= satisfies_reduction(doc.q, b.m, b.d_eff);
            slot.d_eff = b.d_eff;
        }
        plan.reduced = all_reduced;
        Ok(plan)
    }
}

impl fmt::Display for FrequencyPlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "q = {}", self.q)?;
        for (i, b) in self.blocks.iter().enumerate() {
            writeln!(f, "  j={:<3} m={:<10} d={:<10} d_eff={}", i + 1, b.m, b.d, b.d_eff)?;
        }
        Ok(())
    }
}

/// Parameter schema of a preset, for `presets` listings.
#[derive(Debug, Clone, Serialize)]
pub struct PresetInfo {
    pub name: &'static str,
    pub params: &'static [(&'static str, &'static str)],
    pub summary: &'static str,
}

pub const PRESETS: &[PresetInfo] = &[
    PresetInfo {
        name: "dyadic",
        params: &[("N", "number of blocks, 1..=50")],
        summary: "q = 2, m_j = 2^(j+1), d_j = m_(j+1) - m_j = 2^(j+1)",
    },
    PresetInfo {
        name: "geometric",
        params: &[
            ("N", "number of blocks"),
            ("q", "ratio > 1"),
            ("m1", "first frequency >= 1"),
        ],
        summary: "m_(j+1) = ceil(q m_j), d_j = m_(j+1) - m_j (last width from a virtual successor)",
    },
    PresetInfo {
        name: "corollary",
        params: &[
            ("N", "number of blocks, 1..=50"),
            ("eps", "exponent in [0, 1)"),
            ("c0", "frequency offset, default 1"),
        ],
        summary: "q = 2, m_j = 2^(j+c0), d_j = max(1, floor(2^((j+c0) - (j+c0)^eps)))",
    },
];

fn param(params: &BTreeMap<String, f64>, name: &str) -> Result<f64, PlanError> {
    params.get(name).copied().ok_or_else(|| PlanError::InvalidParam {
        name: name.into(),
        reason: "missing".into(),
    })
}

fn int_param(params: &BTreeMap<String, f64>, name: &str, min: u64, max: u64) -> Result<u64, PlanError> {
    let v = param(params, name)?;
    if v.fract() != 0.0 || v < min as f64 || v > max as f64 {
        return Err(PlanError::InvalidParam {
            name: name.into(),
            reason: format!("expected an integer in {min}..={max}, got {v}"),
        });
    }
    Ok(v as u64)
}

/// Build a named plan. Every preset is validated with the `q` it declares
/// and returned with widths already reduced.
pub fn preset(name: &str, params: &BTreeMap<String, f64>) -> Result<FrequencyPlan, PlanError> {
    let pairs: Vec<(u64, u64)>;
    let q;
    match name {
        "dyadic" => {
            let n = int_param(params, "N", 1, 50)?;
            q = 2.0;
            pairs = (1..=n).map(|j| (1u64 << (j + 1), 1u64 << (j + 1))).collect();
        }
        "geometric" => {
            let n = int_param(params, "N", 1, 100_000)?;
            q = param(params, "q")?;
            let ratio = DecimalRatio::from_f64(q).map_err(|_| PlanError::InvalidParam {
                name: "q".into(),
                reason: format!("expected a finite ratio > 1, got {q}"),
            })?;
            let m1 = int_param(params, "m1", 1, MAX_EXACT_INT)?;
            let overflow = || PlanError::InvalidParam {
                name: "N".into(),
                reason: "frequencies exceed 2^53".into(),
            };
            let mut ms = vec![m1];
            for _ in 0..n {
                let last = *ms.last().unwrap();
                let next = ratio.ceil_times(last).filter(|&v| v <= MAX_EXACT_INT).ok_or_else(overflow)?;
                ms.push(next);
            }
            pairs = ms.windows(2).map(|w| (w[0], w[1] - w[0])).collect();
        }
        "corollary" => {
            let n = int_param(params, "N", 1, 50)?;
            let eps = param(params, "eps")?;
            if !(0.0..1.0).contains(&eps) {
                return Err(PlanError::InvalidParam {
                    name: "eps".into(),
                    reason: format!("expected 0 <= eps < 1, got {eps}"),
                });
            }
            let c0 = if params.contains_key("c0") { int_param(params, "c0", 1, 8)? } else { 1 };
            q = 2.0;
            pairs = (1..=n)
                .map(|j| {
                    let e = (j + c0) as f64;
                    let width = (e - e.powf(eps)).exp2().floor().max(1.0) as u64;
                    (1u64 << (j + c0), width)
                })
                .collect();
        }
        other => return Err(PlanError::UnknownPreset(other.into())),
    }
    FrequencyPlan::validate(q, &pairs)?.reduce_widths()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(kv: &[(&str, f64)]) -> BTreeMap<String, f64> {
        kv.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    // Largest d' <= d with m/d' >= max(1, 1/ln q), by exhaustive search.
    fn brute_reduced(q: f64, m: u64, d: u64) -> u64 {
        (1..=d).rev().find(|&w| (m as f64) / (w as f64) >= f64::max(1.0, 1.0 / q.ln())).unwrap_or(0)
    }

    #[test]
    fn equality_boundary_of_width_is_valid() {
        let plan = FrequencyPlan::validate(2.0, &[(2, 2), (4, 4), (8, 8), (16, 1)]).unwrap();
        assert_eq!(plan.len(), 4);
        assert!(plan.blocks().iter().all(|b| b.d_eff == b.d));
        assert!(!plan.is_reduced());
    }

    #[test]
    fn ratio_and_width_violations() {
        assert_eq!(
            FrequencyPlan::validate(2.0, &[(4, 1), (6, 1)]),
            Err(PlanError::RatioViolation(1))
        );
        assert_eq!(
            FrequencyPlan::validate(2.0, &[(4, 5), (8, 1)]),
            Err(PlanError::WidthViolation(1))
        );
        assert_eq!(FrequencyPlan::validate(2.0, &[]), Err(PlanError::EmptyPlan));
        assert_eq!(FrequencyPlan::validate(2.0, &[(4, 0)]), Err(PlanError::NonPositive(1)));
        assert!(matches!(
            FrequencyPlan::validate(1.0, &[(4, 1)]),
            Err(PlanError::NonLacunaryRatio(_))
        ));
    }

    #[test]
    fn ratio_ties_pass_in_decimal() {
        // 1.3 * 50 = 65 exactly; the binary value of 1.3 is slightly larger.
        assert!(FrequencyPlan::validate(1.3, &[(50, 15), (65, 1)]).is_ok());
        assert_eq!(
            FrequencyPlan::validate(1.3, &[(50, 15), (64, 1)]),
            Err(PlanError::RatioViolation(1))
        );
        assert!(FrequencyPlan::validate(1.5, &[(2, 1), (3, 1)]).is_ok());
    }

    #[test]
    fn decimal_ratio_arithmetic() {
        let r = DecimalRatio::from_f64(1.3).unwrap();
        assert_eq!(r.ceil_times(50), Some(65));
        assert_eq!(r.ceil_times(65), Some(85));
        assert_eq!(r.ceil_times(85), Some(111));
        let big = DecimalRatio::from_f64(1e300).unwrap();
        assert!(!big.admits(2, u64::MAX));
        assert_eq!(big.ceil_times(2), None);
        let tiny = DecimalRatio::from_f64(1.0000000000000002).unwrap();
        assert!(tiny.admits(1 << 40, (1 << 40) + 1));
        assert!(!tiny.admits(1 << 40, 1 << 40));
    }

    #[test]
    fn last_block_wider_than_frequency_warns() {
        let plan = FrequencyPlan::validate(2.0, &[(4, 4), (8, 9)]).unwrap();
        assert_eq!(plan.warnings().len(), 1);
    }

    #[test]
    fn reduction_examples() {
        let e = std::f64::consts::E;
        let p = FrequencyPlan::validate(e, &[(10, 5)]).unwrap().reduce_widths().unwrap();
        assert_eq!(p.block(1).d_eff, 5);

        let p = FrequencyPlan::validate(2.0, &[(4, 4)]).unwrap().reduce_widths().unwrap();
        assert_eq!(p.block(1).d_eff, 2);
        assert_eq!(brute_reduced(2.0, 4, 4), 2);

        let p = FrequencyPlan::validate(1.1, &[(100, 20)]).unwrap().reduce_widths().unwrap();
        assert_eq!(p.block(1).d_eff, 9);
        assert_eq!(brute_reduced(1.1, 100, 20), 9);
        assert!(100.0 / 9.0 >= 1.0 / 1.1f64.ln());
    }

    #[test]
    fn unreducible_block_aborts() {
        // 1/ln 1.01 ~ 100.5 > m = 50.
        let plan = FrequencyPlan::validate(1.01, &[(50, 1), (51, 1)]).unwrap();
        assert_eq!(plan.reduce_widths(), Err(PlanError::UnreducibleBlock(1)));
    }

    #[test]
    fn presets_match_their_formulas() {
        let p = preset("dyadic", &params(&[("N", 3.0)])).unwrap();
        let ms: Vec<u64> = p.blocks().iter().map(|b| b.m).collect();
        let ds: Vec<u64> = p.blocks().iter().map(|b| b.d).collect();
        assert_eq!(ms, vec![4, 8, 16]);
        assert_eq!(ds, vec![4, 8, 16]);

        let p = preset("geometric", &params(&[("N", 3.0), ("q", 1.3), ("m1", 50.0)])).unwrap();
        let ms: Vec<u64> = p.blocks().iter().map(|b| b.m).collect();
        let ds: Vec<u64> = p.blocks().iter().map(|b| b.d).collect();
        assert_eq!(ms, vec![50, 65, 85]);
        assert_eq!(ds, vec![15, 20, 26]);

        // eps = 0: 2^((j+1) - 1) = m_j / 2.
        let p = preset("corollary", &params(&[("N", 3.0), ("eps", 0.0)])).unwrap();
        for b in p.blocks() {
            assert_eq!(b.d, (b.m / 2).max(1));
        }
        assert!(p.is_reduced());
    }

    #[test]
    fn preset_errors() {
        assert_eq!(
            preset("sparse", &params(&[("N", 3.0)])),
            Err(PlanError::UnknownPreset("sparse".into()))
        );
        assert!(matches!(preset("dyadic", &params(&[])), Err(PlanError::InvalidParam { .. })));
        assert!(matches!(
            preset("corollary", &params(&[("N", 3.0), ("eps", 1.0)])),
            Err(PlanError::InvalidParam { .. })
        ));
        assert!(matches!(
            preset("geometric", &params(&[("N", 3.0), ("q", 0.9), ("m1", 5.0)])),
            Err(PlanError::InvalidParam { .. })
        ));
    }

    #[test]
    fn json_round_trip_and_exactness() {
        let p = preset("geometric", &params(&[("N", 5.0), ("q", 1.3), ("m1", 50.0)])).unwrap();
        let back = FrequencyPlan::from_json(&p.to_json()).unwrap();
        assert_eq!(back.blocks(), p.blocks());
        assert_eq!(back.q(), p.q());
        assert!(back.is_reduced());

        let too_big = r#"{"q": 2, "blocks": [{"m": 18014398509481984, "d": 1, "d_eff": 1}]}"#;
        assert!(FrequencyPlan::from_json(too_big).is_err());
        let float_int = r#"{"q": 2, "blocks": [{"m": 4.0, "d": 1, "d_eff": 1}]}"#;
        assert!(FrequencyPlan::from_json(float_int).is_err());
        let bad_eff = r#"{"q": 2, "blocks": [{"m": 4, "d": 2, "d_eff": 3}]}"#;
        assert!(FrequencyPlan::from_json(bad_eff).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn reduction_is_maximal_and_idempotent(q in 1.05f64..4.0, m in 30u64..5000, frac in 0.01f64..1.0) {
                let next = DecimalRatio::from_f64(q).unwrap().ceil_times(m).unwrap();
                let d = ((next - m) as f64 * frac).ceil().max(1.0) as u64;
                let plan = FrequencyPlan::validate(q, &[(m, d), (next, 1)]).unwrap();
                match plan.reduce_widths() {
                    Ok(once) => {
                        let b = once.block(1);
                        prop_assert!(satisfies_reduction(q, b.m, b.d_eff));
                        prop_assert_eq!(b.d_eff, brute_reduced(q, m, d));
                        let twice = once.reduce_widths().unwrap();
                        prop_assert_eq!(twice.blocks(), once.blocks());
                    }
                    Err(e) => prop_assert!(matches!(e, PlanError::UnreducibleBlock(_))),
                }
            }

            #[test]
            fn geometric_presets_validate(q in 1.05f64..3.0, m1 in 1u64..500, n in 1u64..20) {
                let ps: BTreeMap<String, f64> =
                    [("N".to_string(), n as f64), ("q".to_string(), q), ("m1".to_string(), m1 as f64)].into();
                match preset("geometric", &ps) {
                    Ok(p) => {
                        let pairs: Vec<(u64, u64)> = p.blocks().iter().map(|b| (b.m, b.d)).collect();
                        prop_assert!(FrequencyPlan::validate(p.q(), &pairs).is_ok());
                    }
                    Err(e) => prop_assert!(matches!(e, PlanError::UnreducibleBlock(_))),
                }
            }
        }
    }
}
