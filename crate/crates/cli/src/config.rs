//! Run configuration: an optional JSON file with explicit flags layered on
//! top.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use lacuna::circleset::{ExtractionMode, SuperlevelOptions};
use lacuna::construct::{ConstantProfile, RunSettings, DEFAULT_C_H};
use lacuna::plan::{preset, FrequencyPlan};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Every field is optional so that a file and the flags can be merged.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub plan: Option<PathBuf>,
    #[serde(rename = "N", skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c_h: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a_offset: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a_slope: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub norm_oversample: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub superlevel_oversample: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub extraction: Option<ExtractionMode>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
}

macro_rules! take {
    ($base:ident, $over:ident, $($field:ident),*) => {
        $(if $over.$field.is_some() {
            $base.$field = $over.$field;
        })*
    };
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::missing(path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))
    }

    /// `over` wins field by field; preset parameters merge key by key.
    pub fn merged(mut self, over: RunConfig) -> Self {
        take!(
            self,
            over,
            preset,
            plan,
            steps,
            c_h,
            beta,
            a_offset,
            a_slope,
            norm_oversample,
            superlevel_oversample,
            extraction,
            out,
            threads
        );
        self.params.extend(over.params);
        self
    }

    pub fn resolve(&self) -> Result<Resolved, CliError> {
        let plan = match (&self.preset, &self.plan) {
            (Some(_), Some(_)) => return Err(CliError::config("give either a preset or a plan file, not both")),
            (None, None) => return Err(CliError::config("no plan: give --preset or --plan")),
            (Some(name), None) => {
                let mut params = self.params.clone();
                if let Some(n) = self.steps {
                    params.entry("N".into()).or_insert(n as f64);
                }
                preset(name, &params).map_err(|e| CliError::new("invalid_plan", e.to_string()))?
            }
            (None, Some(path)) => {
                let text = fs::read_to_string(path).map_err(|e| CliError::missing(path, e))?;
                let plan = FrequencyPlan::from_json(&text).map_err(|e| CliError::new("invalid_plan", e.to_string()))?;
                if plan.is_reduced() {
                    plan
                } else {
                    plan.reduce_widths().map_err(|e| CliError::new("invalid_plan", e.to_string()))?
                }
            }
        };
        let steps = self.steps.unwrap_or(plan.len());
        if steps == 0 || steps > plan.len() {
            return Err(CliError::config(format!("N = {steps} but the plan has {} blocks", plan.len())));
        }

        let mut profile = ConstantProfile::paper(self.c_h.unwrap_or(DEFAULT_C_H));
        if let Some(beta) = self.beta {
            profile = profile.with_beta(beta);
        }
        if self.a_offset.is_some() || self.a_slope.is_some() {
            let offset = self.a_offset.unwrap_or(profile.a_offset);
            let slope = self.a_slope.unwrap_or(profile.a_slope);
            profile = profile.with_a(offset, slope);
        }
        profile.validate().map_err(CliError::config)?;

        let defaults = RunSettings::default();
        let settings = RunSettings {
            norm_oversample: self.norm_oversample.unwrap_or(defaults.norm_oversample),
            superlevel: SuperlevelOptions {
                oversample: self.superlevel_oversample.unwrap_or(defaults.superlevel.oversample),
                mode: self.extraction.unwrap_or(defaults.superlevel.mode),
                ..defaults.superlevel
            },
        };
        if settings.norm_oversample == 0 || settings.superlevel.oversample == 0 {
            return Err(CliError::config("oversampling factors must be positive"));
        }
        let out = self.out.clone().ok_or_else(|| CliError::config("no output directory: give --out"))?;
        Ok(Resolved {
            plan,
            steps,
            profile,
            settings,
            out,
        })
    }
}

pub struct Resolved {
    pub plan: FrequencyPlan,
    pub steps: usize,
    pub profile: ConstantProfile,
    pub settings: RunSettings,
    pub out: PathBuf,
}

/// Parse `key=value` with a numeric value.
pub fn parse_param(text: &str) -> Result<(String, f64), String> {
    let (k, v) = text.split_once('=').ok_or_else(|| format!("expected key=value, got {text:?}"))?;
    let v: f64 = v.trim().parse().map_err(|_| format!("{k}: not a number: {v:?}"))?;
    Ok((k.trim().to_string(), v))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let file: RunConfig =
            serde_json::from_str(r#"{"preset": "dyadic", "params": {"N": 4}, "c_h": 2.0, "N": 3, "out": "a"}"#).unwrap();
        let flags = RunConfig {
            c_h: Some(0.5),
            params: BTreeMap::from([("N".to_string(), 5.0)]),
            ..Default::default()
        };
        let merged = file.merged(flags);
        assert_eq!(merged.c_h, Some(0.5));
        assert_eq!(merged.steps, Some(3));
        assert_eq!(merged.params["N"], 5.0);
        assert_eq!(merged.out, Some(PathBuf::from("a")));
        let r = merged.resolve().unwrap();
        assert_eq!((r.plan.len(), r.steps), (5, 3));
        assert!(r.profile.is_paper());
    }

    #[test]
    fn unknown_keys_and_conflicts_rejected() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"bogus": 1}"#).is_err());
        let both = RunConfig {
            preset: Some("dyadic".into()),
            plan: Some("p.json".into()),
            ..Default::default()
        };
        assert_eq!(both.resolve().err().unwrap().code, "invalid_config");
    }

    #[test]
    fn params_parse() {
        assert_eq!(parse_param("q=1.3"), Ok(("q".into(), 1.3)));
        assert!(parse_param("q").is_err());
        assert!(parse_param("q=x").is_err());
    }
}
