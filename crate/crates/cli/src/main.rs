use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use lacuna::circleset::ExtractionMode;
use lacuna::construct::{run, ConstructError, RunState, StepRecord, StepSets};
use lacuna::io::{fmt_f17, read_run_dir, to_json_compact, to_json_pretty, write_run_dir};
use lacuna::plan::PRESETS;
use lacuna::trigpoly::{grid_samples, TrigPoly};
use lacuna::verify::verify_run;
use serde_json::json;

mod config;

use config::{parse_param, RunConfig};

/// Error reported on stderr as one JSON line.
#[derive(Debug)]
pub struct CliError {
    pub code: &'static str,
    pub detail: String,
}

impl CliError {
    pub fn new(code: &'static str, detail: impl Into<String>) -> Self {
        Self {
            code,
            detail: detail.into(),
        }
    }

    pub fn config(detail: impl Into<String>) -> Self {
        Self::new("invalid_config", detail)
    }

    pub fn missing(path: &Path, err: io::Error) -> Self {
        Self::new("missing_file", format!("{}: {err}", path.display()))
    }

    fn io(path: &Path, err: impl std::fmt::Display) -> Self {
        Self::new("io", format!("{}: {err}", path.display()))
    }
}

impl From<ConstructError> for CliError {
    fn from(e: ConstructError) -> Self {
        let code = match e {
            ConstructError::LambdaCollapse { .. } => "lambda_collapse",
            ConstructError::Resolution { .. } => "resolution_exceeded",
            ConstructError::InvalidProfile(_) => "invalid_config",
            _ => "construction_failed",
        };
        Self::new(code, e.to_string())
    }
}

#[derive(Parser)]
#[command(name = "lacuna", version, about = "Construct and verify lacunary blocks with small partial sums")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the construction and write a run directory.
    Construct(ConstructArgs),
    /// Check a run directory; writes report.json and report.txt. Exit 0 iff every binding check passes.
    Verify {
        dir: PathBuf,
    },
    /// Write grid samples of S_n or δ_n, or the per-step bound table, as CSV.
    Export(ExportArgs),
    /// List plan presets and their parameters.
    Presets {
        #[arg(long)]
        json: bool,
    },
}

#[derive(clap::Args)]
struct ConstructArgs {
    /// JSON file with the same keys as the flags; flags win.
    #[arg(long)]
    config: Option<PathBuf>,
    /// dyadic, geometric or corollary.
    #[arg(long)]
    preset: Option<String>,
    /// Preset parameter, e.g. --param q=1.3 --param m1=50.
    #[arg(long = "param", value_parser = parse_param)]
    params: Vec<(String, f64)>,
    /// Plan document instead of a preset.
    #[arg(long)]
    plan: Option<PathBuf>,
    /// Number of steps [default: plan length].
    #[arg(long = "N")]
    steps: Option<usize>,
    /// Maximal-function constant; sets beta = 7 sqrt(2 c_H) [default: 1.0].
    #[arg(long = "c-h")]
    c_h: Option<f64>,
    /// Override beta directly; the run is then informational.
    #[arg(long)]
    beta: Option<f64>,
    /// [default: 45]
    #[arg(long = "a-offset")]
    a_offset: Option<f64>,
    /// [default: 30]
    #[arg(long = "a-slope")]
    a_slope: Option<f64>,
    /// Oversampling for certified norms [default: 16].
    #[arg(long = "norm-oversample")]
    norm_oversample: Option<u32>,
    /// Oversampling for level-set extraction [default: 2].
    #[arg(long = "superlevel-oversample")]
    superlevel_oversample: Option<u32>,
    /// [default: conservative]
    #[arg(long, value_enum)]
    extraction: Option<Extraction>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; LACUNA_THREADS is used when absent [default: all cores].
    #[arg(long)]
    threads: Option<usize>,
    /// Suppress per-step progress on stdout.
    #[arg(long, short)]
    quiet: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Extraction {
    Conservative,
    Refined,
}

#[derive(Clone, Copy, ValueEnum)]
enum PolyKind {
    #[value(name = "S")]
    Sum,
    #[value(name = "delta")]
    Delta,
}

#[derive(clap::Args)]
struct ExportArgs {
    dir: PathBuf,
    #[arg(long, value_enum, default_value = "S")]
    poly: PolyKind,
    /// Step index [default: last].
    #[arg(long)]
    n: Option<usize>,
    /// Number of sample points.
    #[arg(long, default_value_t = 4096)]
    grid: usize,
    /// Write the table N,sup_lower,sup_upper,rhs_theorem instead of samples.
    #[arg(long)]
    bounds: bool,
    /// Output file [default: stdout].
    #[arg(long)]
    out: Option<PathBuf>,
}

impl ConstructArgs {
    fn to_config(&self) -> RunConfig {
        RunConfig {
            preset: self.preset.clone(),
            params: self.params.iter().cloned().collect(),
            plan: self.plan.clone(),
            steps: self.steps,
            c_h: self.c_h,
            beta: self.beta,
            a_offset: self.a_offset,
            a_slope: self.a_slope,
            norm_oversample: self.norm_oversample,
            superlevel_oversample: self.superlevel_oversample,
            extraction: self.extraction.map(|e| match e {
                Extraction::Conservative => ExtractionMode::Conservative,
                Extraction::Refined => ExtractionMode::Refined,
            }),
            out: self.out.clone(),
            threads: self.threads,
        }
    }
}

fn thread_count(flag: Option<usize>) -> Result<Option<usize>, CliError> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var("LACUNA_THREADS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .map(Some)
            .ok_or_else(|| CliError::config(format!("LACUNA_THREADS must be a positive integer, got {v:?}"))),
        Err(_) => Ok(None),
    }
}

fn construct(args: &ConstructArgs) -> Result<(), CliError> {
    let file = match &args.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let config = file.merged(args.to_config());
    let threads = thread_count(config.threads)?;
    if let Some(n) = threads {
        // Fails only if a pool already exists, which cannot happen here.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let resolved = config.resolve()?;
    for w in resolved.plan.warnings() {
        eprintln!("{}", to_json_compact(&json!({ "warning": w })));
    }

    let quiet = args.quiet;
    let total = resolved.steps;
    let mut progress = |_: &RunState, rec: &StepRecord, _: &StepSets| {
        if !quiet {
            println!(
                "step {:>3}/{total}: m = {}, |Λ| = {}/{}, ‖S‖∞ <= {:.6}",
                rec.n, rec.m, rec.lambda_size, rec.d_eff, rec.s_sup.upper
            );
        }
    };
    let state = run(
        resolved.plan,
        resolved.profile,
        resolved.settings.clone(),
        resolved.steps,
        Some(&mut progress),
    )?;

    let manifest = json!({
        "tool": "lacuna",
        "version": env!("CARGO_PKG_VERSION"),
        "steps": state.completed(),
        "settings": resolved.settings,
        "threads": threads,
        "config": config,
        "plan_warnings": state.plan().warnings(),
    });
    write_run_dir(&resolved.out, &state, &manifest).map_err(|e| CliError::io(&resolved.out, e))?;
    if !quiet {
        println!("wrote {}", resolved.out.display());
    }
    Ok(())
}

fn load(dir: &Path) -> Result<RunState, CliError> {
    if !dir.is_dir() {
        return Err(CliError::new("missing_file", format!("{}: not a run directory", dir.display())));
    }
    read_run_dir(dir).map_err(|e| CliError::new("invalid_run", format!("{}: {e}", dir.display())))
}

fn verify(dir: &Path) -> Result<bool, CliError> {
    let state = load(dir)?;
    let report = verify_run(&state);
    let text = report.render_text();
    fs::write(dir.join("report.json"), to_json_pretty(&report) + "\n").map_err(|e| CliError::io(dir, e))?;
    fs::write(dir.join("report.txt"), &text).map_err(|e| CliError::io(dir, e))?;
    print!("{text}");
    Ok(report.passed())
}

fn sample_csv(p: &TrigPoly, grid: usize) -> String {
    let mut out = String::with_capacity(grid * 100 + 16);
    out.push_str("x,re,im,abs\n");
    for (k, z) in grid_samples(p, grid).iter().enumerate() {
        let x = std::f64::consts::TAU * k as f64 / grid as f64;
        let _ = writeln!(out, "{},{},{},{}", fmt_f17(x), fmt_f17(z.re), fmt_f17(z.im), fmt_f17(z.norm()));
    }
    out
}

fn bounds_csv(state: &RunState) -> String {
    let mut out = String::from("N,sup_lower,sup_upper,rhs_theorem\n");
    for r in state.records() {
        let rhs = state.profile().theorem_rhs(state.plan(), r.n);
        let _ = writeln!(out, "{},{},{},{}", r.n, fmt_f17(r.s_sup.lower), fmt_f17(r.s_sup.upper), fmt_f17(rhs));
    }
    out
}

fn export(args: &ExportArgs) -> Result<(), CliError> {
    let state = load(&args.dir)?;
    let csv = if args.bounds {
        bounds_csv(&state)
    } else {
        let n = args.n.unwrap_or(state.completed());
        if n == 0 || n > state.completed() {
            return Err(CliError::config(format!("--n {n} outside 1..={}", state.completed())));
        }
        if args.grid == 0 {
            return Err(CliError::config("--grid must be positive"));
        }
        match args.poly {
            PolyKind::Sum => sample_csv(state.partial_sum(n), args.grid),
            PolyKind::Delta => sample_csv(&state.delta(n), args.grid),
        }
    };
    match &args.out {
        Some(path) => fs::write(path, csv).map_err(|e| CliError::io(path, e)),
        None => io::stdout().write_all(csv.as_bytes()).map_err(|e| CliError::io(Path::new("<stdout>"), e)),
    }
}

fn presets(as_json: bool) {
    if as_json {
        println!("{}", to_json_pretty(PRESETS));
        return;
    }
    for p in PRESETS {
        println!("{}: {}", p.name, p.summary);
        for (name, about) in p.params {
            println!("    {name:<4} {about}");
        }
    }
}

fn fail(err: &CliError) -> ExitCode {
    eprintln!("{}", to_json_compact(&json!({ "error": err.code, "detail": err.detail })));
    ExitCode::from(2)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let detail = e.render().to_string();
            let first = detail.lines().next().unwrap_or("").trim_start_matches("error: ").to_string();
            return fail(&CliError::config(first));
        }
    };
    let result = match &cli.command {
        Command::Construct(args) => construct(args).map(|_| true),
        Command::Verify { dir } => verify(dir),
        Command::Export(args) => export(args).map(|_| true),
        Command::Presets { json } => {
            presets(*json);
            Ok(true)
        }
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => fail(&e),
    }
}
