//! The inductive construction.
//!
//! Step `n` looks at where the earlier partial sums are large,
//! `E_n^j = {|S_j| > β√n}`, widens the old ones into `B̃_n`, keeps the
//! lattice points `2πl/d_n` outside `B̃_n`, and places a normalised Fejér
//! kernel at each of them, modulated to frequency `m_n`.

use std::f64::consts::TAU;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circleset::{superlevel_arcs_bounded, ArcSet, CircleError, Lattice, SuperlevelOptions};
use crate::plan::FrequencyPlan;
use crate::trigpoly::{l1_norm, l2_norm, pow2_at_least, sup_norm, Modulated, NormBracket, TrigPoly};

mod profile;
mod synth;

pub use profile::{compute_a, ConstantProfile, DEFAULT_C_H};
pub use synth::{first_block, synthesize_block};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConstructError {
    #[error("plan widths have not been reduced")]
    PlanNotReduced,
    #[error("requested {requested} steps but the plan has {available} blocks")]
    StepsExceedPlan { requested: usize, available: usize },
    #[error("invalid profile: {0}")]
    InvalidProfile(String),
    #[error("step {n}: every lattice point of width {d_eff} is covered (B̃ measure {btilde_measure}, {btilde_components} components)")]
    LambdaCollapse {
        n: usize,
        d_eff: u64,
        btilde_measure: f64,
        btilde_components: usize,
    },
    #[error("step {n}, level set of S_{j}: {source}")]
    Resolution {
        n: usize,
        j: usize,
        #[source]
        source: CircleError,
    },
    #[error("inconsistent run data: {0}")]
    Inconsistent(String),
}

/// Numerical settings of a run; all echoed into the manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSettings {
    /// Oversampling for certified sup and L1 brackets.
    pub norm_oversample: u32,
    pub superlevel: SuperlevelOptions,
}

impl Default for RunSettings {
    fn default() -> Self {
        Self {
            norm_oversample: 16,
            superlevel: SuperlevelOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSetSummary {
    pub j: usize,
    pub measure: f64,
    pub components: usize,
}

/// Exact fraction `num / den`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ratio {
    pub num: u64,
    pub den: u64,
}

impl Ratio {
    pub fn value(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// `self >= other`, by cross-multiplication.
    pub fn ge(&self, other: Ratio) -> bool {
        self.num as u128 * other.den as u128 >= other.num as u128 * self.den as u128
    }
}

/// Everything one step produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub n: usize,
    pub m: u64,
    pub d_eff: u64,
    pub a_n: f64,
    pub theta: f64,
    /// `1..=j_max` with `j_max = ⌊n - a_n⌋`; `None` when `n - a_n < 1`.
    pub used_j: Option<(usize, usize)>,
    pub level_sets: Vec<LevelSetSummary>,
    pub b_measure: f64,
    pub b_components: usize,
    pub btilde_measure: f64,
    pub btilde_components: usize,
    pub lambda: Lattice,
    pub lambda_size: u64,
    /// Set for the first block, which is not kernel-synthesised.
    pub lambda_synthetic: bool,
    pub carrier: i64,
    pub envelope_degree: u64,
    pub delta_l1_exact: Ratio,
    pub delta_l1: NormBracket,
    pub delta_sup: NormBracket,
    pub s_sup: NormBracket,
    pub s_l2: f64,
}

/// The level sets behind one step, handed to observers.
#[derive(Debug, Clone, PartialEq)]
pub struct StepSets {
    /// `E_n^j` for `j = 1..n`.
    pub level_sets: Vec<ArcSet>,
    pub b: ArcSet,
    pub b_tilde: ArcSet,
}

#[derive(Debug, Clone)]
pub struct RunState {
    plan: FrequencyPlan,
    profile: ConstantProfile,
    settings: RunSettings,
    blocks: Vec<Modulated>,
    partial_sums: Vec<TrigPoly>,
    records: Vec<StepRecord>,
}

/// Observer invoked after every completed step.
pub type StepHook<'a> = dyn FnMut(&RunState, &StepRecord, &StepSets) + 'a;

fn l1_grid(p: &TrigPoly, oversample: u32) -> usize {
    pow2_at_least(oversample.max(8) as u64 * (p.half_span() + 1))
}

impl RunState {
    /// Start a run with `δ_1 = e^{i m_1 x}`.
    pub fn init(plan: FrequencyPlan, profile: ConstantProfile, settings: RunSettings) -> Result<Self, ConstructError> {
        if !plan.is_reduced() {
            return Err(ConstructError::PlanNotReduced);
        }
        profile.validate().map_err(ConstructError::InvalidProfile)?;
        let first = plan.block(1);
        let block = first_block(first.m);
        let poly = block.poly();
        let record = StepRecord {
            n: 1,
            m: first.m,
            d_eff: first.d_eff,
            a_n: compute_a(1, &plan, &profile),
            theta: profile.beta,
            used_j: None,
            level_sets: Vec::new(),
            b_measure: 0.0,
            b_components: 0,
            btilde_measure: 0.0,
            btilde_components: 0,
            lambda: Lattice::full(first.d_eff),
            lambda_size: first.d_eff,
            lambda_synthetic: true,
            carrier: block.carrier,
            envelope_degree: 0,
            delta_l1_exact: Ratio { num: 1, den: 1 },
            delta_l1: NormBracket::exact(1.0),
            delta_sup: sup_norm(&poly, settings.norm_oversample),
            s_sup: sup_norm(&poly, settings.norm_oversample),
            s_l2: l2_norm(&poly),
        };
        Ok(Self {
            plan,
            profile,
            settings,
            blocks: vec![block],
            partial_sums: vec![poly],
            records: vec![record],
        })
    }

    /// Reassemble a run from stored blocks and records.
    pub fn from_parts(
        plan: FrequencyPlan,
        profile: ConstantProfile,
        settings: RunSettings,
        deltas: Vec<TrigPoly>,
        records: Vec<StepRecord>,
    ) -> Result<Self, ConstructError> {
        if deltas.is_empty() || deltas.len() != records.len() {
            return Err(ConstructError::Inconsistent(format!(
                "{} blocks but {} records",
                deltas.len(),
                records.len()
            )));
        }
        if deltas.len() > plan.len() {
            return Err(ConstructError::StepsExceedPlan {
                requested: deltas.len(),
                available: plan.len(),
            });
        }
        let mut blocks = Vec::with_capacity(deltas.len());
        let mut partial_sums: Vec<TrigPoly> = Vec::with_capacity(deltas.len());
        for (i, (delta, rec)) in deltas.into_iter().zip(&records).enumerate() {
            if rec.n != i + 1 {
                return Err(ConstructError::Inconsistent(format!("record {} has n = {}", i + 1, rec.n)));
            }
            let envelope = TrigPoly::new(delta.min_freq() - rec.carrier, delta.coeffs().to_vec());
            let s = match partial_sums.last() {
                Some(prev) => prev.add(&delta),
                None => TrigPoly::new(delta.min_freq(), delta.coeffs().to_vec()),
            };
            blocks.push(Modulated {
                carrier: rec.carrier,
                envelope,
            });
            partial_sums.push(s);
        }
        Ok(Self {
            plan,
            profile,
            settings,
            blocks,
            partial_sums,
            records,
        })
    }

    pub fn plan(&self) -> &FrequencyPlan {
        &self.plan
    }

    pub fn profile(&self) -> &ConstantProfile {
        &self.profile
    }

    pub fn settings(&self) -> &RunSettings {
        &self.settings
    }

    pub fn completed(&self) -> usize {
        self.blocks.len()
    }

    /// `δ_n`, 1-based.
    pub fn delta(&self, n: usize) -> TrigPoly {
        self.blocks[n - 1].poly()
    }

    pub fn block(&self, n: usize) -> &Modulated {
        &self.blocks[n - 1]
    }

    /// `S_n = δ_1 + … + δ_n`.
    pub fn partial_sum(&self, n: usize) -> &TrigPoly {
        &self.partial_sums[n - 1]
    }

    pub fn record(&self, n: usize) -> &StepRecord {
        &self.records[n - 1]
    }

    pub fn records(&self) -> &[StepRecord] {
        &self.records
    }

    /// `θ = β √n`.
    pub fn threshold(&self, n: usize) -> f64 {
        self.profile.beta * (n as f64).sqrt()
    }

    /// `E_n^j` for `j = 1..n`, without committing anything.
    pub fn level_sets(&self, n: usize) -> Result<Vec<ArcSet>, ConstructError> {
        let theta = self.threshold(n);
        let opts = self.settings.superlevel;
        (1..n)
            .into_par_iter()
            .map(|j| {
                superlevel_arcs_bounded(self.partial_sum(j), theta, Some(self.record(j).s_sup.upper), &opts)
                    .map_err(|source| ConstructError::Resolution { n, j, source })
            })
            .collect()
    }

    /// `B̃_n` from the level sets: `E_n^j` widened by `2π (n-j)²/d_n` for
    /// `1 <= j <= n - a_n`.
    pub fn widened_union(&self, n: usize, level_sets: &[ArcSet]) -> (Option<(usize, usize)>, ArcSet) {
        let a_n = compute_a(n, &self.plan, &self.profile);
        let reach = n as f64 - a_n;
        if reach < 1.0 {
            return (None, ArcSet::empty());
        }
        let j_max = (reach.floor() as usize).min(n - 1);
        let d = self.plan.block(n).d_eff as f64;
        let widened: Vec<ArcSet> = (1..=j_max)
            .map(|j| level_sets[j - 1].expand(TAU * ((n - j) as f64).powi(2) / d))
            .collect();
        (Some((1, j_max)), ArcSet::union(&widened))
    }

    /// Run step `n = completed() + 1` and commit `δ_n`.
    pub fn step(&mut self) -> Result<(StepRecord, StepSets), ConstructError> {
        let n = self.completed() + 1;
        if n > self.plan.len() {
            return Err(ConstructError::StepsExceedPlan {
                requested: n,
                available: self.plan.len(),
            });
        }
        let level_sets = self.level_sets(n)?;
        let b = ArcSet::union(&level_sets);
        let (used_j, b_tilde) = self.widened_union(n, &level_sets);
        let blk = *self.plan.block(n);
        let lambda = b_tilde.survivors(blk.d_eff, self.settings.superlevel.tol_x);
        if lambda.is_empty() {
            return Err(ConstructError::LambdaCollapse {
                n,
                d_eff: blk.d_eff,
                btilde_measure: b_tilde.measure(),
                btilde_components: b_tilde.components(),
            });
        }
        let block = synthesize_block(blk.m, blk.d_eff, &lambda);
        let poly = block.poly();
        let sum = self.partial_sum(n - 1).add(&poly);
        let os = self.settings.norm_oversample;
        let record = StepRecord {
            n,
            m: blk.m,
            d_eff: blk.d_eff,
            a_n: compute_a(n, &self.plan, &self.profile),
            theta: self.threshold(n),
            used_j,
            level_sets: level_sets
                .iter()
                .enumerate()
                .map(|(i, e)| LevelSetSummary {
                    j: i + 1,
                    measure: e.measure(),
                    components: e.components(),
                })
                .collect(),
            b_measure: b.measure(),
            b_components: b.components(),
            btilde_measure: b_tilde.measure(),
            btilde_components: b_tilde.components(),
            lambda_size: lambda.len(),
            lambda,
            lambda_synthetic: false,
            carrier: block.carrier,
            envelope_degree: block.envelope_degree(),
            delta_l1_exact: Ratio {
                num: 0,
                den: 1,
            },
            delta_l1: l1_norm(&block.envelope, l1_grid(&block.envelope, os)).expect("grid sized for the envelope"),
            delta_sup: sup_norm(&block.envelope, os),
            s_sup: sup_norm(&sum, os),
            s_l2: l2_norm(&sum),
        };
        let record = StepRecord {
            delta_l1_exact: Ratio {
                num: record.lambda_size,
                den: 2 * blk.d_eff,
            },
            ..record
        };
        self.blocks.push(block);
        self.partial_sums.push(sum);
        self.records.push(record.clone());
        Ok((
            record,
            StepSets {
                level_sets,
                b,
                b_tilde,
            },
        ))
    }

    /// `τ(x) = max{t < n : |S_t(x)| <= β√n}`, or 0 where no `t` qualifies.
    pub fn tau_profile(&self, n: usize, xs: &[f64]) -> Vec<usize> {
        assert!(n >= 1 && n <= self.completed());
        let theta = self.threshold(n);
        let deltas: Vec<TrigPoly> = (1..n).map(|t| self.delta(t)).collect();
        xs.par_iter()
            .map(|&x| {
                let mut s = num_complex::Complex64::new(0.0, 0.0);
                let mut tau = 0;
                for (i, delta) in deltas.iter().enumerate() {
                    let t = i + 1;
                    s += delta.eval(x);
                    if s.norm() <= theta {
                        tau = t;
                    }
                }
                tau
            })
            .collect()
    }
}

/// Run `steps` steps. `hook` sees the state after each step, including the
/// first, for which the level sets are empty.
pub fn run(
    plan: FrequencyPlan,
    profile: ConstantProfile,
    settings: RunSettings,
    steps: usize,
    mut hook: Option<&mut StepHook<'_>>,
) -> Result<RunState, ConstructError> {
    if steps == 0 || steps > plan.len() {
        return Err(ConstructError::StepsExceedPlan {
            requested: steps,
            available: plan.len(),
        });
    }
    let mut state = RunState::init(plan, profile, settings)?;
    if let Some(h) = hook.as_deref_mut() {
        let empty = StepSets {
            level_sets: Vec::new(),
            b: ArcSet::empty(),
            b_tilde: ArcSet::empty(),
        };
        h(&state, state.record(1), &empty);
    }
    while state.completed() < steps {
        let (record, sets) = state.step()?;
        if let Some(h) = hook.as_deref_mut() {
            h(&state, &record, &sets);
        }
    }
    Ok(state)
}
