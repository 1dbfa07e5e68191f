//! Checks a finished run against the quantitative claims of the
//! construction.
//!
//! A verdict passes only when the inequality holds on the safe side of the
//! relevant bracket: upper ends for `<=` claims, exact or lower values for
//! `>=` claims. Under a non-default constant profile the checks that depend
//! on the constants are informational.

use std::f64::consts::{PI, TAU};
use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::construct::{ConstantProfile, RunSettings, RunState, StepRecord};
use crate::plan::FrequencyPlan;
use crate::trigpoly::{grid_samples, l2_by_quadrature, pow2_at_least, TrigPoly};

/// Relative slack for comparisons where both sides are grid quantities.
pub const MEASURE_REL_TOL: f64 = 1e-6;
/// Relative agreement required between coefficient and quadrature L2 norms.
pub const PARSEVAL_REL_TOL: f64 = 1e-9;
/// Pointwise slack, as a multiple of the coefficient L1 mass.
pub const POINTWISE_REL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VerifyError {
    #[error("series diverges for q = {0}")]
    DivergentInput(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Informational,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = ">=")]
    Ge,
}

impl Relation {
    fn symbol(self) -> &'static str {
        match self {
            Relation::Lt => "<",
            Relation::Le => "<=",
            Relation::Gt => ">",
            Relation::Ge => ">=",
        }
    }

    fn margin(self, value: f64, bound: f64) -> f64 {
        match self {
            Relation::Lt | Relation::Le => bound - value,
            Relation::Gt | Relation::Ge => value - bound,
        }
    }

    fn holds(self, value: f64, bound: f64) -> bool {
        match self {
            Relation::Lt => value < bound,
            Relation::Le => value <= bound,
            Relation::Gt => value > bound,
            Relation::Ge => value >= bound,
        }
    }
}

/// One checked inequality `value relation bound`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub check: String,
    pub n: Option<usize>,
    pub j: Option<usize>,
    pub relation: Relation,
    pub bound: f64,
    pub value: f64,
    pub margin: f64,
    pub holds: bool,
    pub status: Status,
}

impl Verdict {
    fn new(check: &str, n: Option<usize>, j: Option<usize>, value: f64, relation: Relation, bound: f64) -> Self {
        let holds = relation.holds(value, bound);
        Self {
            check: check.to_string(),
            n,
            j,
            relation,
            bound,
            value,
            margin: relation.margin(value, bound),
            holds,
            status: if holds { Status::Pass } else { Status::Fail },
        }
    }

    /// Override the outcome, e.g. for a check done in exact arithmetic.
    fn with_holds(mut self, holds: bool) -> Self {
        self.holds = holds;
        self.status = if holds { Status::Pass } else { Status::Fail };
        self
    }

    fn informational_if(mut self, flag: bool) -> Self {
        if flag {
            self.status = Status::Informational;
        }
        self
    }
}

/// Block properties of one step: `‖δ‖₁ >= 1/8` exactly, `‖δ‖∞ <= 7`, the
/// L1/sup ordering, spectrum containment and the exact L1 value lying in
/// its certified bracket.
pub fn check_block(rec: &StepRecord, delta: &TrigPoly, informational: bool) -> Vec<Verdict> {
    let n = Some(rec.n);
    let exact = rec.delta_l1_exact;
    let l1 = Verdict::new("block_l1", n, None, exact.value(), Relation::Ge, 0.125)
        .with_holds(8 * exact.num as u128 >= exact.den as u128)
        .informational_if(informational);
    let sup = Verdict::new("block_sup", n, None, rec.delta_sup.upper, Relation::Le, 7.0).informational_if(informational);
    let order = Verdict::new("block_order", n, None, rec.delta_l1.lower, Relation::Le, rec.delta_sup.upper);
    let top = (rec.m + rec.d_eff) as f64;
    let spectrum_ok = delta.min_freq() >= rec.m as i64 && delta.max_freq() < (rec.m + rec.d_eff) as i64;
    let spectrum = Verdict::new("spectrum", n, None, delta.max_freq() as f64, Relation::Lt, top).with_holds(spectrum_ok);
    let bracket_ok = rec.delta_l1.contains(exact.value());
    let bracket =
        Verdict::new("l1_bracket", n, None, exact.value(), Relation::Le, rec.delta_l1.upper).with_holds(bracket_ok);
    vec![l1, sup, order, spectrum, bracket]
}

pub fn check_blocks(state: &RunState) -> Vec<Verdict> {
    let info = !state.profile().is_paper();
    (1..=state.completed())
        .flat_map(|n| check_block(state.record(n), &state.delta(n), info))
        .collect()
}

/// `‖S_N‖∞ <= α + β√N + γ max_j log_q max(m_j/d_j, 1/ln q, 1)` with the
/// original widths.
pub fn check_theorem_bound(state: &RunState, steps: usize) -> Verdict {
    let rhs = state.profile().theorem_rhs(state.plan(), steps);
    Verdict::new("theorem_bound", Some(steps), None, state.record(steps).s_sup.upper, Relation::Le, rhs)
        .informational_if(!state.profile().is_paper())
}

/// Measure, connectivity and lattice-size inequalities of one step.
pub fn intermediate_verdicts(rec: &StepRecord, plan: &FrequencyPlan, informational: bool) -> Vec<Verdict> {
    if rec.lambda_synthetic {
        return Vec::new();
    }
    let n = Some(rec.n);
    let d = rec.d_eff as f64;
    let mut out = vec![Verdict::new("measure_b", n, None, rec.b_measure, Relation::Lt, PI)];
    for e in &rec.level_sets {
        let bound = 4.0 * plan.block(e.j).m as f64;
        out.push(Verdict::new("conn_e", n, Some(e.j), e.components as f64, Relation::Lt, bound));
    }
    out.push(
        Verdict::new("conn_btilde", n, None, rec.btilde_components as f64, Relation::Lt, d / 8.0)
            .with_holds(8 * (rec.btilde_components as u128) < rec.d_eff as u128),
    );
    out.push(Verdict::new("measure_btilde", n, None, rec.btilde_measure, Relation::Lt, 1.25 * PI));
    out.push(
        Verdict::new("lambda_size", n, None, rec.lambda_size as f64, Relation::Gt, d / 4.0)
            .with_holds(4 * rec.lambda_size as u128 > rec.d_eff as u128),
    );
    out.into_iter().map(|v| v.informational_if(informational)).collect()
}

pub fn check_intermediate(state: &RunState) -> Vec<Verdict> {
    let info = !state.profile().is_paper();
    state
        .records()
        .iter()
        .flat_map(|r| intermediate_verdicts(r, state.plan(), info))
        .collect()
}

/// Recorded coefficient L2 norm of `S_n` against grid quadrature.
pub fn check_parseval(state: &RunState) -> Vec<Verdict> {
    (1..=state.completed())
        .map(|n| {
            let recorded = state.record(n).s_l2;
            let quad = l2_by_quadrature(state.partial_sum(n));
            let diff = (recorded - quad).abs();
            Verdict::new("parseval", Some(n), None, diff, Relation::Le, PARSEVAL_REL_TOL * recorded)
        })
        .collect()
}

/// Statistics of `S*_{n-1} = max_{j<n} |S_j|` at one step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MajorantStats {
    pub n: usize,
    /// `‖S*_{n-1}‖₂²` by grid quadrature.
    pub star_l2_sq: f64,
    /// `‖S_{n-1}‖₂²` from coefficients.
    pub prev_l2_sq: f64,
    /// Empirical lower witness for the maximal-function constant.
    pub ratio: f64,
    pub b_measure: f64,
    /// `2π ‖S*‖₂² / (β² n)`.
    pub chebyshev_bound: f64,
    pub chebyshev_holds: bool,
}

/// Grid fine enough for quadrature of `|S_j|²`, `j < upto`.
fn majorant_grid(state: &RunState, upto: usize) -> usize {
    let s = state.partial_sum(upto - 1);
    let span = (s.max_freq() - s.min_freq()) as u64;
    pow2_at_least(16 * (span + 1))
}

/// [`MajorantStats`] for `n = 2..=upto`, in one pass over a shared grid.
pub fn majorant_profile(state: &RunState, upto: usize) -> Vec<MajorantStats> {
    assert!(upto <= state.completed());
    if upto < 2 {
        return Vec::new();
    }
    let grid = majorant_grid(state, upto);
    let mut running = vec![Complex64::new(0.0, 0.0); grid];
    let mut star = vec![0.0f64; grid];
    let beta = state.profile().beta;
    let mut out = Vec::with_capacity(upto - 1);
    for j in 1..upto {
        for ((acc, m), v) in running.iter_mut().zip(star.iter_mut()).zip(grid_samples(&state.delta(j), grid)) {
            *acc += v;
            *m = m.max(acc.norm());
        }
        let n = j + 1;
        let star_l2_sq = star.iter().map(|v| v * v).sum::<f64>() / grid as f64;
        let prev_l2_sq = state.record(j).s_l2.powi(2);
        let chebyshev_bound = TAU * star_l2_sq / (beta * beta * n as f64);
        let b_measure = state.record(n).b_measure;
        out.push(MajorantStats {
            n,
            star_l2_sq,
            prev_l2_sq,
            ratio: star_l2_sq / prev_l2_sq,
            b_measure,
            chebyshev_bound,
            chebyshev_holds: b_measure <= chebyshev_bound * (1.0 + MEASURE_REL_TOL),
        });
    }
    out
}

pub fn majorant_check(state: &RunState, n: usize) -> MajorantStats {
    assert!(n >= 2);
    majorant_profile(state, n).pop().expect("n >= 2")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesIdentity {
    pub closed_form: f64,
    /// `2a² q^{3-a} / (q-1)³`, stated for `a >= 1` only.
    pub bound: Option<f64>,
    pub oracle_diff: f64,
    pub terms: u64,
}

/// `Σ_{s>=a} s² q^{-s}` in closed form, with a partial-sum cross-check.
pub fn series_identity(q: f64, a: u64) -> Result<SeriesIdentity, VerifyError> {
    if !(q > 1.0 && q.is_finite()) {
        return Err(VerifyError::DivergentInput(q));
    }
    let af = a as f64;
    let closed_form = q.powf(3.0 - af) / (q - 1.0).powi(3)
        * (af * af + (1.0 + 2.0 * af - 2.0 * af * af) / q + (af - 1.0).powi(2) / (q * q));
    let bound = (a >= 1).then(|| 2.0 * af * af * q.powf(3.0 - af) / (q - 1.0).powi(3));

    // Neumaier-compensated partial sum, stopped once a geometric bound on
    // the tail is below 1e-12 of the total.
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    let mut s = a;
    loop {
        let sf = s as f64;
        let term = sf * sf * q.powf(-sf);
        let t = sum + term;
        comp += if sum.abs() >= term.abs() { (sum - t) + term } else { (term - t) + sum };
        sum = t;
        s += 1;
        let next = (s as f64).powi(2) * q.powf(-(s as f64));
        let ratio = ((s + 1) as f64 / s as f64).powi(2) / q;
        if ratio < 1.0 && next / (1.0 - ratio) < 1e-12 * closed_form.abs() {
            break;
        }
    }
    Ok(SeriesIdentity {
        closed_form,
        bound,
        oracle_diff: (closed_form - (sum + comp)).abs(),
        terms: s - a,
    })
}

/// Upper bound for `Σ_{s>=a} 1/s²` (partial sum plus integral tail).
pub fn inverse_square_tail(a: u64) -> f64 {
    assert!(a >= 1);
    let cut = a + 100_000;
    let partial: f64 = (a..cut).rev().map(|s| 1.0 / (s as f64).powi(2)).sum();
    partial + 1.0 / (cut - 1) as f64
}

/// Far-block decay at sampled points: `|δ_t(x)| <= 2/(t - τ(x) - 1)²` for
/// `t >= τ(x) + a_n + 1`, and the sum of those terms below 1 when `a_n > 3`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailDiagnostics {
    pub n: usize,
    pub a_n: f64,
    pub points: usize,
    /// Points with no qualifying `t`; skipped.
    pub undefined_tau: usize,
    pub pairs_checked: usize,
    pub decay_violations: usize,
    /// Largest `|δ_t(x)| - 2/s²` seen.
    pub max_excess: Option<f64>,
    pub max_far_sum: f64,
    pub sum_violations: usize,
    pub vacuous: bool,
}

pub fn tail_bound_check(state: &RunState, n: usize, xs: &[f64]) -> TailDiagnostics {
    let a_n = state.record(n).a_n;
    let taus = state.tau_profile(n, xs);
    let deltas: Vec<TrigPoly> = (1..=n).map(|t| state.delta(t)).collect();
    let mut diag = TailDiagnostics {
        n,
        a_n,
        points: xs.len(),
        undefined_tau: 0,
        pairs_checked: 0,
        decay_violations: 0,
        max_excess: None,
        max_far_sum: 0.0,
        sum_violations: 0,
        vacuous: true,
    };
    for (&x, &tau) in xs.iter().zip(&taus) {
        if tau == 0 {
            diag.undefined_tau += 1;
            continue;
        }
        if tau as f64 >= n as f64 - a_n {
            continue;
        }
        let first = (tau as f64 + a_n + 1.0).ceil() as usize;
        let mut far_sum = 0.0;
        let mut far_slack = 0.0;
        for t in first..=n {
            let delta = &deltas[t - 1];
            let value = delta.eval(x).norm();
            let s = (t - tau - 1) as f64;
            let bound = 2.0 / (s * s);
            let slack = POINTWISE_REL_TOL * delta.l1_mass();
            diag.pairs_checked += 1;
            diag.vacuous = false;
            diag.max_excess = Some(diag.max_excess.map_or(value - bound, |m| m.max(value - bound)));
            if value > bound + slack {
                diag.decay_violations += 1;
            }
            far_sum += value;
            far_slack += slack;
        }
        diag.max_far_sum = diag.max_far_sum.max(far_sum);
        if a_n > 3.0 && far_sum >= 1.0 + far_slack {
            diag.sum_violations += 1;
        }
    }
    diag
}

/// One row of the per-step table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepSummary {
    pub n: usize,
    pub m: u64,
    pub d_eff: u64,
    pub lambda_size: u64,
    pub delta_l1: f64,
    pub delta_sup_upper: f64,
    pub sum_sup_lower: f64,
    pub sum_sup_upper: f64,
}

impl From<&StepRecord> for StepSummary {
    fn from(r: &StepRecord) -> Self {
        Self {
            n: r.n,
            m: r.m,
            d_eff: r.d_eff,
            lambda_size: r.lambda_size,
            delta_l1: r.delta_l1_exact.value(),
            delta_sup_upper: r.delta_sup.upper,
            sum_sup_lower: r.s_sup.lower,
            sum_sup_upper: r.s_sup.upper,
        }
    }
}

/// Everything `verify` reports about a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub steps: usize,
    pub profile: ConstantProfile,
    pub default_profile: bool,
    pub settings: RunSettings,
    /// Blocks whose width was clamped before construction.
    pub clamped_blocks: Vec<usize>,
    pub notes: Vec<String>,
    pub table: Vec<StepSummary>,
    pub verdicts: Vec<Verdict>,
    pub theorem: Verdict,
    pub majorant: Vec<MajorantStats>,
    /// Largest `‖S*‖₂² / ‖S‖₂²` seen; a lower witness, not a constant.
    pub majorant_witness: f64,
    pub tail: TailDiagnostics,
}

/// Number of sample points for the far-block diagnostics.
pub const TAIL_SAMPLES: usize = 256;

pub fn verify_run(state: &RunState) -> VerificationReport {
    let steps = state.completed();
    let info = !state.profile().is_paper();
    let mut verdicts = check_blocks(state);
    verdicts.extend(check_intermediate(state));
    verdicts.extend(check_parseval(state));
    let majorant = majorant_profile(state, steps);
    for m in &majorant {
        verdicts.push(
            Verdict::new("chebyshev", Some(m.n), None, m.b_measure, Relation::Le, m.chebyshev_bound * (1.0 + MEASURE_REL_TOL))
                .informational_if(info),
        );
    }
    let clamped_blocks: Vec<usize> = state
        .plan()
        .blocks()
        .iter()
        .enumerate()
        .filter(|(_, b)| b.d_eff < b.d)
        .map(|(i, _)| i + 1)
        .collect();
    let mut notes = vec![format!("beta = {} (c_H = {})", state.profile().beta, state.profile().c_h)];
    if !clamped_blocks.is_empty() {
        notes.push(
            "widths clamped to d_eff = min(d, floor(m min(1, ln q))) before construction; the bound uses the original d"
                .to_string(),
        );
    }
    if info {
        notes.push("non-default constant profile: constant-dependent checks are informational".to_string());
    }
    let xs: Vec<f64> = (0..TAIL_SAMPLES).map(|k| TAU * k as f64 / TAIL_SAMPLES as f64).collect();
    VerificationReport {
        steps,
        profile: state.profile().clone(),
        default_profile: !info,
        settings: state.settings().clone(),
        clamped_blocks,
        notes,
        table: state.records().iter().map(StepSummary::from).collect(),
        theorem: check_theorem_bound(state, steps),
        majorant_witness: majorant.iter().map(|m| m.ratio).fold(1.0, f64::max),
        majorant,
        tail: tail_bound_check(state, steps, &xs),
        verdicts,
    }
}

impl VerificationReport {
    /// No verdict failed; informational ones never count.
    pub fn passed(&self) -> bool {
        self.theorem.status != Status::Fail && self.verdicts.iter().all(|v| v.status != Status::Fail)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Verdict> {
        std::iter::once(&self.theorem)
            .chain(&self.verdicts)
            .filter(|v| v.status == Status::Fail)
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "steps: {}", self.steps);
        for note in &self.notes {
            let _ = writeln!(out, "note: {note}");
        }
        let _ = writeln!(
            out,
            "{:>4} {:>12} {:>10} {:>10} {:>10} {:>12} {:>12} {:>12}",
            "n", "m", "d_eff", "|lambda|", "L1", "sup delta", "sup S lo", "sup S hi"
        );
        for r in &self.table {
            let _ = writeln!(
                out,
                "{:>4} {:>12} {:>10} {:>10} {:>10.6} {:>12.6} {:>12.6} {:>12.6}",
                r.n, r.m, r.d_eff, r.lambda_size, r.delta_l1, r.delta_sup_upper, r.sum_sup_lower, r.sum_sup_upper
            );
        }
        let _ = writeln!(out);
        let _ = writeln!(
            out,
            "{:<16} {:>4} {:>4} {:>24}    {:>24} {:>24} status",
            "check", "n", "j", "value", "bound", "margin"
        );
        let opt = |v: Option<usize>| v.map_or("-".to_string(), |x| x.to_string());
        for v in self.verdicts.iter().chain(std::iter::once(&self.theorem)) {
            let status = match v.status {
                Status::Pass => "pass",
                Status::Fail => "FAIL",
                Status::Informational => "info",
            };
            let _ = writeln!(
                out,
                "{:<16} {:>4} {:>4} {:>24.16e} {:>2} {:>24.16e} {:>24.16e} {}",
                v.check,
                opt(v.n),
                opt(v.j),
                v.value,
                v.relation.symbol(),
                v.bound,
                v.margin,
                status
            );
        }
        let _ = writeln!(out, "majorant witness: {:.6}", self.majorant_witness);
        let t = &self.tail;
        let _ = writeln!(
            out,
            "far blocks at n = {}: {} pairs, {} decay violations, {} sum violations{}",
            t.n,
            t.pairs_checked,
            t.decay_violations,
            t.sum_violations,
            if t.vacuous { " (vacuous)" } else { "" }
        );
        let _ = writeln!(out, "result: {}", if self.passed() { "PASS" } else { "FAIL" });
        out
    }
}
