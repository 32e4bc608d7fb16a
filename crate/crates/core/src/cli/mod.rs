//! Command-line driver: construct, validate, run, convergence and point-debug.
//!
//! Exit codes: 0 success, 1 bound or validation failure, 2 configuration error,
//! 3 runtime abort.

pub mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::diagnostics::identities::{algebraic_suite, convergence_table};
use crate::diagnostics::{bound_checks, volume_band, write_csv, BoundCheck, DiagnosticsRecord, JsonlWriter};
use crate::error::{GkError, Result};
use crate::flow::{run, StepSink};
use crate::gkconstruct::{validate_gk, GkState};
use crate::linalg4::{angle, associated_triple, GkPoint, EPS_ND};

pub use config::Config;

/// Environment variable that overrides `--out-dir`.
pub const OUT_DIR_ENV: &str = "GKRF_OUT_DIR";

#[derive(Parser, Debug)]
#[command(name = "gkrf", version, about = "Generalized Kahler-Ricci flow lab on flat 4-tori")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Run configuration (TOML, or JSON by extension).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, default_value = "out")]
    pub out_dir: PathBuf,
    /// Worker threads for the field operators.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Overrides `flow.snapshot_every`.
    #[arg(long, global = true)]
    pub snapshot_every: Option<usize>,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Build the configured initial data and write a snapshot with its residual report.
    Construct,
    /// Residual report for the input snapshot or the constructed state.
    Validate,
    /// Integrate the flow and stream diagnostics.
    Run,
    /// Differential identity suite over a grid ladder with observed orders.
    Convergence,
    /// Pointwise algebraic identities at random points, and optionally one grid point.
    PointDebug,
}

/// Written to `manifest.json` by every command, including failed runs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: Command,
    pub code_version: String,
    /// SHA-256 of `config`.
    pub config_hash: String,
    /// Canonical JSON of the parsed configuration.
    pub config: String,
    pub snapshots: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub wall_clock_seconds: f64,
    /// Exact convergence rows report `f64::MAX` slack, since JSON has no infinity.
    pub checks: Vec<BoundCheck>,
    pub passed: bool,
    pub error: Option<String>,
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<RunManifest> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| GkError::Format(e.to_string()))
    }
}

/// Exit code for a command result.
pub fn exit_code(result: &Result<RunManifest>) -> u8 {
    match result {
        Ok(m) if m.passed => 0,
        Ok(_) => 1,
        Err(GkError::ValidationFailed(_)) => 1,
        Err(GkError::Config(_)) => 2,
        Err(_) => 3,
    }
}

struct Outputs {
    dir: PathBuf,
    snapshots: Vec<PathBuf>,
    files: Vec<PathBuf>,
}

impl Outputs {
    fn new(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Outputs { dir: dir.to_path_buf(), snapshots: Vec::new(), files: Vec::new() })
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let path = self.dir.join(name);
        let text = serde_json::to_string_pretty(value).map_err(|e| GkError::Format(e.to_string()))?;
        std::fs::write(&path, text + "\n")?;
        self.files.push(path);
        Ok(())
    }

    fn snapshot(&mut self, name: &str, state: &GkState) -> Result<()> {
        let path = self.dir.join(name);
        state.to_snapshot().save(&path)?;
        self.snapshots.push(path);
        Ok(())
    }
}

#[derive(Serialize)]
struct ValidationOutput<'a> {
    t: f64,
    report: &'a crate::gkconstruct::GkReport,
    triple: Option<&'a crate::gkconstruct::TripleReport>,
    max_residual: f64,
    tolerance: f64,
}

fn residual_check(report: &crate::gkconstruct::GkReport, tol: f64) -> BoundCheck {
    let worst = report.max_residual();
    BoundCheck { name: "gk_residuals".into(), pass: worst <= tol, slack: tol - worst }
}

struct RunSink<'a> {
    jsonl: JsonlWriter,
    records: Vec<DiagnosticsRecord>,
    out: &'a mut Outputs,
}

impl StepSink for RunSink<'_> {
    fn record(&mut self, rec: &DiagnosticsRecord) -> Result<()> {
        self.jsonl.write(rec)?;
        self.records.push(rec.clone());
        Ok(())
    }

    fn snapshot(&mut self, state: &GkState, step: usize) -> Result<()> {
        std::fs::create_dir_all(self.out.dir.join("snapshots"))?;
        self.out.snapshot(&format!("snapshots/step_{step:06}.gks"), state)
    }
}

#[derive(Serialize)]
struct PointDump {
    index: usize,
    g: Vec<f64>,
    i: Vec<f64>,
    j: Vec<f64>,
    p: f64,
    triple: Option<[Vec<f64>; 3]>,
}

fn body(cmd: Command, cfg: &Config, out: &mut Outputs) -> Result<Vec<BoundCheck>> {
    match cmd {
        Command::Construct => {
            let c = cfg.construct_at(cfg.grid.n)?;
            out.snapshot("initial.gks", &c.state)?;
            let check = residual_check(&c.report, cfg.limits.residual_tol);
            out.json(
                "construct_report.json",
                &ValidationOutput {
                    t: c.state.t,
                    report: &c.report,
                    triple: c.triple.as_ref(),
                    max_residual: c.report.max_residual(),
                    tolerance: cfg.limits.residual_tol,
                },
            )?;
            Ok(vec![check])
        }
        Command::Validate => {
            let state = cfg.initial_state()?;
            let report = validate_gk(&state)?;
            out.json(
                "validation_report.json",
                &ValidationOutput {
                    t: state.t,
                    report: &report,
                    triple: None,
                    max_residual: report.max_residual(),
                    tolerance: cfg.limits.residual_tol,
                },
            )?;
            Ok(vec![residual_check(&report, cfg.limits.residual_tol)])
        }
        Command::Run => {
            let state = cfg.initial_state()?;
            let path = out.dir.join("diagnostics.jsonl");
            let mut sink = RunSink { jsonl: JsonlWriter::create(&path)?, records: Vec::new(), out: &mut *out };
            let result = run(&state, &cfg.flow, &mut sink);
            let records = std::mem::take(&mut sink.records);
            drop(sink);
            out.files.push(path);
            let csv = out.dir.join("diagnostics.csv");
            write_csv(&csv, &records)?;
            out.files.push(csv);
            let outcome = result?;
            out.snapshot("final.gks", &outcome.state)?;
            let mut checks = bound_checks(&records);
            let band = volume_band(&records);
            checks.push(BoundCheck { name: "volume_band_c".into(), pass: band.is_finite(), slack: band });
            Ok(checks)
        }
        Command::Convergence => {
            let table = convergence_table(&cfg.convergence.ladder, |n| Ok(cfg.construct_at(n)?.state))?;
            print!("{}", table.render());
            out.json("convergence.json", &table)?;
            Ok(table
                .rows
                .iter()
                .map(|r| BoundCheck {
                    name: r.name.clone(),
                    pass: r.passes(cfg.convergence.min_order),
                    slack: if r.exact { f64::MAX } else { r.min_order() - cfg.convergence.min_order },
                })
                .collect())
        }
        Command::PointDebug => {
            let suite = algebraic_suite(cfg.point_debug.points, cfg.seed)?;
            let tol = cfg.point_debug.tolerance;
            let checks: Vec<BoundCheck> = suite
                .named()
                .into_iter()
                .map(|(name, v)| BoundCheck { name: name.into(), pass: v < tol, slack: tol - v })
                .collect();
            out.json("point_debug.json", &suite)?;
            if let Some(index) = cfg.point_debug.index {
                let state = cfg.initial_state()?;
                if index >= state.grid().len() {
                    return Err(GkError::Config(format!("point index {index} outside the grid")));
                }
                let pt = GkPoint { g: state.g.get(index).to_mat(), i: state.i.get(index), j: state.j.get(index) };
                let flat = |m: &crate::linalg4::Mat4| m.transpose().iter().copied().collect::<Vec<f64>>();
                let triple = associated_triple(&pt, EPS_ND).ok().map(|k| k.each_ref().map(|m| flat(m)));
                out.json(
                    "point.json",
                    &PointDump { index, g: flat(&pt.g), i: flat(&pt.i), j: flat(&pt.j), p: angle(&pt), triple },
                )?;
            }
            Ok(checks)
        }
    }
}

/// Runs one command and writes its manifest, also when the command fails after the
/// configuration was read.
pub fn execute(cmd: Command, config: &Path, out_dir: &Path, snapshot_every: Option<usize>) -> Result<RunManifest> {
    let mut cfg = Config::load(config)?;
    if let Some(every) = snapshot_every {
        cfg.flow.snapshot_every = every;
    }
    let start = Instant::now();
    let mut out = Outputs::new(out_dir)?;
    let result = body(cmd, &cfg, &mut out);
    let (checks, error) = match &result {
        Ok(c) => (c.clone(), None),
        Err(e) => (Vec::new(), Some(e.to_string())),
    };
    let manifest = RunManifest {
        command: cmd,
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        config_hash: cfg.hash(),
        config: cfg.canonical(),
        snapshots: out.snapshots.clone(),
        outputs: out.files.clone(),
        wall_clock_seconds: start.elapsed().as_secs_f64(),
        passed: result.is_ok() && checks.iter().all(|c| c.pass),
        checks,
        error,
    };
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| GkError::Format(e.to_string()))?;
    std::fs::write(out_dir.join("manifest.json"), text + "\n")?;
    result.map(|_| manifest)
}

/// Entry point of the `gkrf` binary.
pub fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(w) = cli.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(w).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let Some(config) = cli.config.as_deref() else {
        eprintln!("error: --config is required");
        return ExitCode::from(2);
    };
    let out_dir = std::env::var_os(OUT_DIR_ENV).map(PathBuf::from).unwrap_or(cli.out_dir);
    let result = execute(cli.command, config, &out_dir, cli.snapshot_every);
    match &result {
        Ok(m) => {
            for c in &m.checks {
                println!("{:<30} {} slack {:.3e}", c.name, if c.pass { "pass" } else { "FAIL" }, c.slack);
            }
        }
        Err(e) => eprintln!("error: {e}"),
    }
    ExitCode::from(exit_code(&result))
}
