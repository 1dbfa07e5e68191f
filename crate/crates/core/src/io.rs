//! Serialization: JSON with 17-significant-digit floats, the `LACF` binary
//! coefficient format, and run directories.
//!
//! `LACF` layout (little-endian): magic `b"LACF"`, `u16` version = 1,
//! `i64` min_freq, `u64` count, then `count` pairs of `f64` (re, im).

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};
use thiserror::Error;

use crate::construct::{ConstantProfile, RunSettings, RunState, StepRecord};
use crate::plan::{FrequencyPlan, PlanError};
use crate::trigpoly::TrigPoly;

pub const LACF_MAGIC: &[u8; 4] = b"LACF";
pub const LACF_VERSION: u16 = 1;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("i/o: {0}")]
    Io(#[from] io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("plan: {0}")]
    Plan(#[from] PlanError),
    #[error("format: {0}")]
    Format(String),
}

/// Writes every float as `{:.16e}`, i.e. 17 significant digits.
fn write_f17<W: ?Sized + Write>(writer: &mut W, value: f64) -> io::Result<()> {
    if value.is_finite() {
        write!(writer, "{value:.16e}")
    } else {
        writer.write_all(b"null")
    }
}

/// Shared float formatting for data files.
pub fn fmt_f17(value: f64) -> String {
    format!("{value:.16e}")
}

struct Compact17;

impl Formatter for Compact17 {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write_f17(writer, value)
    }
    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        write_f17(writer, value as f64)
    }
}

struct Pretty17<'a>(PrettyFormatter<'a>);

macro_rules! forward {
    ($($name:ident($($arg:ident: $ty:ty),*)),* $(,)?) => {
        $(fn $name<W: ?Sized + Write>(&mut self, writer: &mut W $(, $arg: $ty)*) -> io::Result<()> {
            self.0.$name(writer $(, $arg)*)
        })*
    };
}

impl Formatter for Pretty17<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write_f17(writer, value)
    }
    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        write_f17(writer, value as f64)
    }
    forward!(
        begin_array(),
        end_array(),
        begin_array_value(first: bool),
        end_array_value(),
        begin_object(),
        end_object(),
        begin_object_key(first: bool),
        begin_object_value(),
        end_object_value(),
    );
}

fn serialize_with<T: Serialize + ?Sized, F: Formatter>(value: &T, formatter: F) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, formatter);
    value.serialize(&mut ser).expect("in-memory serialization");
    String::from_utf8(out).expect("json is utf-8")
}

pub fn to_json_compact<T: Serialize + ?Sized>(value: &T) -> String {
    serialize_with(value, Compact17)
}

pub fn to_json_pretty<T: Serialize + ?Sized>(value: &T) -> String {
    serialize_with(value, Pretty17(PrettyFormatter::new()))
}

pub fn encode_lacf(p: &TrigPoly) -> Vec<u8> {
    let mut out = Vec::with_capacity(22 + 16 * p.len());
    out.extend_from_slice(LACF_MAGIC);
    out.extend_from_slice(&LACF_VERSION.to_le_bytes());
    out.extend_from_slice(&p.min_freq().to_le_bytes());
    out.extend_from_slice(&(p.len() as u64).to_le_bytes());
    for c in p.coeffs() {
        out.extend_from_slice(&c.re.to_le_bytes());
        out.extend_from_slice(&c.im.to_le_bytes());
    }
    out
}

pub fn decode_lacf(bytes: &[u8]) -> Result<TrigPoly, IoError> {
    let bad = |m: &str| IoError::Format(format!("lacf: {m}"));
    if bytes.len() < 22 || &bytes[..4] != LACF_MAGIC {
        return Err(bad("missing magic"));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != LACF_VERSION {
        return Err(bad(&format!("unsupported version {version}")));
    }
    let min_freq = i64::from_le_bytes(bytes[6..14].try_into().unwrap());
    let count = u64::from_le_bytes(bytes[14..22].try_into().unwrap());
    let body = &bytes[22..];
    if count == 0 || count.checked_mul(16) != Some(body.len() as u64) {
        return Err(bad("coefficient count does not match payload"));
    }
    let coeffs = body
        .chunks_exact(16)
        .map(|ch| {
            Complex64::new(
                f64::from_le_bytes(ch[..8].try_into().unwrap()),
                f64::from_le_bytes(ch[8..].try_into().unwrap()),
            )
        })
        .collect();
    Ok(TrigPoly::padded(min_freq, coeffs))
}

pub fn delta_file_name(n: usize) -> String {
    format!("delta_{n:03}.lacf")
}

pub fn sum_file_name(n: usize) -> String {
    format!("sum_{n:03}.lacf")
}

/// Writes `plan.json`, `profile.json`, one `delta_NNN.lacf` per block, the
/// final partial sum as `sum_NNN.lacf`, `records.jsonl` and `manifest.json`.
/// Every file except the manifest is a deterministic function of the state.
pub fn write_run_dir(dir: &Path, state: &RunState, manifest: &serde_json::Value) -> Result<(), IoError> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("plan.json"), state.plan().to_json() + "\n")?;
    fs::write(dir.join("profile.json"), to_json_pretty(state.profile()) + "\n")?;
    for n in 1..=state.completed() {
        fs::write(dir.join(delta_file_name(n)), encode_lacf(&state.delta(n)))?;
    }
    let last = state.completed();
    fs::write(dir.join(sum_file_name(last)), encode_lacf(state.partial_sum(last)))?;
    let mut records = String::new();
    for r in state.records() {
        records.push_str(&to_json_compact(r));
        records.push('\n');
    }
    fs::write(dir.join("records.jsonl"), records)?;
    fs::write(dir.join("manifest.json"), to_json_pretty(manifest) + "\n")?;
    Ok(())
}

fn read_text(path: &Path) -> Result<String, IoError> {
    fs::read_to_string(path).map_err(|e| IoError::Io(io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

/// Rebuild a run from its directory alone.
pub fn read_run_dir(dir: &Path) -> Result<RunState, IoError> {
    let plan = FrequencyPlan::from_json(&read_text(&dir.join("plan.json"))?)?;
    let profile: ConstantProfile = serde_json::from_str(&read_text(&dir.join("profile.json"))?)?;
    let manifest: serde_json::Value = serde_json::from_str(&read_text(&dir.join("manifest.json"))?)?;
    let settings: RunSettings = serde_json::from_value(
        manifest
            .get("settings")
            .cloned()
            .ok_or_else(|| IoError::Format("manifest.json has no settings".into()))?,
    )?;
    let records: Vec<StepRecord> = read_text(&dir.join("records.jsonl"))?
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(serde_json::from_str)
        .collect::<Result<_, _>>()?;
    let mut deltas = Vec::with_capacity(records.len());
    for n in 1..=records.len() {
        let path = dir.join(delta_file_name(n));
        let bytes = fs::read(&path).map_err(|e| IoError::Io(io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
        deltas.push(decode_lacf(&bytes)?);
    }
    RunState::from_parts(plan, profile, settings, deltas, records).map_err(|e| IoError::Format(e.to_string()))
}
