//! Command-line front end: model ingestion, command dispatch and
//! machine-readable outputs.
//!
//! Exit codes: 0 success, 1 a mathematical check failed, 2 invalid input,
//! 3 numerical or resource failure.

use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use thiserror::Error;

use rmc_core::closure::{certificate_defect, optimal_affine_dual, AGREEMENT_TOL};
use rmc_core::linalg;
use rmc_core::model::ModelError;

pub mod pipeline;
pub mod report;
pub mod schema;

use pipeline::{Analysis, Loaded};
use report::{CertificateJson, ClosureJson, RunReport, Timings, ValidationJson};

/// Tolerance for the moment-identity check, relative to `max(1, max|V G|)`.
pub const IDENTITY_TOL: f64 = 1e-9;
/// Slack allowed between an observed error and its bound.
pub const SOUNDNESS_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Check(String),
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Check(_) => 1,
            CliError::Input(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }

    pub(crate) fn from_model(e: ModelError) -> Self {
        match e {
            ModelError::StateCap { .. } => CliError::Numerical(e.to_string()),
            other => CliError::Input(other.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "rmc", version, about = "Optimal affine moment closure for bounded chemical master equations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check that the network keeps probability on its box.
    Validate(CommonArgs),
    /// Dump G, V, H, A, b and r as dense text.
    Matrices(CommonArgs),
    /// Compute the optimal affine closure and its worst-case error.
    Closure(CommonArgs),
    /// Propagate the exact CME and the closed moments; write CSV.
    Simulate(CommonArgs),
    /// Compute the a-priori error bound per moment block.
    Bound(CommonArgs),
    /// Run every consistency check; exit 1 naming the first failure.
    Crosscheck(CrosscheckArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Model file (JSON).
    #[arg(long)]
    pub model: PathBuf,
    /// Closure order.
    #[arg(long)]
    pub n: Option<u32>,
    /// Time horizon.
    #[arg(long)]
    pub horizon: Option<f64>,
    /// Number of time grid points.
    #[arg(long)]
    pub grid: Option<usize>,
    /// Number of quadrature intervals for the bound.
    #[arg(long)]
    pub quad: Option<usize>,
    /// Write the primary output here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Accept networks that fire out of the box by dropping those transitions.
    #[arg(long)]
    pub force_truncate: bool,
    /// Simplex iteration cap per linear program.
    #[arg(long)]
    pub lp_iterations: Option<usize>,
    /// Include wall-clock timings in reports (makes output nondeterministic).
    #[arg(long)]
    pub timings: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Fault {
    /// Perturb the first entry of the derived matrix A.
    MomentMatrix,
}

#[derive(Debug, Clone, Args)]
pub struct CrosscheckArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, hide = true)]
    pub inject_fault: Option<Fault>,
}

/// What a command produced.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    /// Primary output (to `--out` or standard output).
    pub primary: String,
    /// Secondary report (standard output when `--out` is set, else standard error).
    pub secondary: Option<String>,
    pub exit_code: i32,
    /// Message for standard error.
    pub message: Option<String>,
}

impl Outcome {
    fn ok(primary: String) -> Self {
        Outcome {
            primary,
            secondary: None,
            exit_code: 0,
            message: None,
        }
    }
}

impl Command {
    pub fn common(&self) -> &CommonArgs {
        match self {
            Command::Validate(a)
            | Command::Matrices(a)
            | Command::Closure(a)
            | Command::Simulate(a)
            | Command::Bound(a) => a,
            Command::Crosscheck(c) => &c.common,
        }
    }
}

pub fn execute(cmd: &Command) -> Result<Outcome, CliError> {
    match cmd {
        Command::Validate(a) => cmd_validate(a),
        Command::Matrices(a) => cmd_matrices(a),
        Command::Closure(a) => cmd_closure(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Bound(a) => cmd_bound(a),
        Command::Crosscheck(c) => cmd_crosscheck(&c.common, c.inject_fault),
    }
}

pub fn cmd_validate(args: &CommonArgs) -> Result<Outcome, CliError> {
    let loaded = Loaded::new(args)?;
    let json = ValidationJson::new(&loaded.net, &loaded.validation);
    let mut out = Outcome::ok(report::to_json(&json));
    if !loaded.validation.accepted {
        out.exit_code = 1;
        out.message = loaded.require_valid().err().map(|e| e.to_string());
    }
    Ok(out)
}

pub fn cmd_matrices(args: &CommonArgs) -> Result<Outcome, CliError> {
    let loaded = Loaded::new(args)?;
    let (ss, g, ms, mm) = Analysis::matrices(&loaded)?;
    let mut out = String::new();
    out.push_str("# dense row-major matrices; a header `# NAME ROWS COLS` precedes each\n");
    out.push_str("# states are enumerated row-major over the box (last species fastest)\n");
    let species: Vec<&str> = loaded.net.species().iter().map(|s| s.name.as_str()).collect();
    out.push_str(&format!("# species {}\n", species.join(" ")));
    out.push_str(&format!("# n {} max_degree {}\n", mm.n, mm.l));
    let state_list: Vec<String> = ss
        .states()
        .iter()
        .map(|s| s.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(":"))
        .collect();
    out.push_str(&format!("# states {}\n", state_list.join(" ")));
    let v_rows: Vec<String> = mm.v_basis.iter().map(|m| m.to_string()).collect();
    let h_rows: Vec<String> = mm.h_basis.iter().map(|m| m.to_string()).collect();
    out.push_str(&format!("# V rows {}\n", v_rows.join(" ")));
    out.push_str(&format!("# H rows {}\n", h_rows.join(" ")));
    report::write_matrix(&mut out, "G", "", g.matrix.view());
    report::write_matrix(&mut out, "V", "", mm.v.view());
    report::write_matrix(&mut out, "H", "", mm.h.view());
    report::write_matrix(&mut out, "A", "", ms.a.view());
    report::write_matrix(&mut out, "b", "", ms.b.view());
    report::write_matrix(&mut out, "r", "", report::column(ms.r.view()).view());
    Ok(Outcome::ok(out))
}

pub fn cmd_closure(args: &CommonArgs) -> Result<Outcome, CliError> {
    let loaded = Loaded::new(args)?;
    let an = Analysis::run(&loaded)?;
    let json = ClosureJson::new(&an.mm, &an.closure, AGREEMENT_TOL);
    let mut out = Outcome::ok(report::to_json(&json));
    if !json.agreement {
        out.exit_code = 1;
        out.message = Some(format!(
            "optimal values disagree by {:e} (tolerance {AGREEMENT_TOL:e})",
            json.agreement_gap
        ));
    }
    Ok(out)
}

fn run_report(
    loaded: &Loaded,
    args: &CommonArgs,
    started: Instant,
) -> Result<(RunReport, Option<pipeline::Simulation>, Analysis), CliError> {
    let an = Analysis::run(loaded)?;
    let horizon = pipeline::resolve_horizon(&loaded.settings, &an)?;
    let sim = match loaded.file.initial_state {
        Some(_) => Some(pipeline::simulate(loaded, &an, horizon.value)?),
        None => None,
    };
    let cert = pipeline::certificate(loaded, &an, horizon.value, sim.as_ref())?;
    let mut warnings = loaded.validation.warnings.clone();
    warnings.extend(horizon.warnings.iter().cloned());
    if sim.is_none() {
        warnings.push("model has no initial_state; observed errors are not reported".into());
    }
    let report = RunReport {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        model: args.model.display().to_string(),
        settings: loaded.settings.clone(),
        grid_points: sim.as_ref().map_or(0, |s| s.cme.len()),
        closure: ClosureJson::new(&an.mm, &an.closure, AGREEMENT_TOL),
        certificate: CertificateJson::new(&cert, horizon, SOUNDNESS_TOL),
        max_mass_defect: sim.as_ref().map_or(0.0, |s| s.cme.mass_defect()),
        warnings,
        timings: args.timings.then(|| Timings {
            total_ms: started.elapsed().as_secs_f64() * 1e3,
        }),
    };
    Ok((report, sim, an))
}

fn soundness_failure(report: &RunReport) -> Option<String> {
    report
        .certificate
        .blocks
        .iter()
        .find(|b| b.sound == Some(false))
        .map(|b| {
            format!(
                "block {}: observed error {:e} exceeds bound {:e}",
                b.block,
                b.observed.unwrap_or(f64::NAN),
                b.bound
            )
        })
}

pub fn cmd_simulate(args: &CommonArgs) -> Result<Outcome, CliError> {
    let started = Instant::now();
    let loaded = Loaded::new(args)?;
    loaded.file.initial_state.as_ref().ok_or_else(|| {
        CliError::Input("simulate needs an initial_state in the model file".into())
    })?;
    let (report, sim, an) = run_report(&loaded, args, started)?;
    let sim = sim.expect("initial state checked above");
    let mut out = Outcome::ok(report::trajectory_csv(&an.mm, &sim));
    out.secondary = Some(report::to_json(&report));
    if let Some(msg) = soundness_failure(&report) {
        out.exit_code = 1;
        out.message = Some(msg);
    }
    Ok(out)
}

pub fn cmd_bound(args: &CommonArgs) -> Result<Outcome, CliError> {
    let started = Instant::now();
    let loaded = Loaded::new(args)?;
    let (report, _, _) = run_report(&loaded, args, started)?;
    let mut out = Outcome::ok(report::to_json(&report.certificate));
    for w in &report.warnings {
        let msg = out.message.get_or_insert_with(String::new);
        if !msg.is_empty() {
            msg.push('\n');
        }
        msg.push_str("warning: ");
        msg.push_str(w);
    }
    if let Some(msg) = soundness_failure(&report) {
        out.exit_code = 1;
        out.message = Some(msg);
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CrosscheckReport {
    pub tool: &'static str,
    pub version: &'static str,
    pub model: String,
    pub n: u32,
    pub states: usize,
    pub rho_affine: f64,
    pub rho_dual: f64,
    pub rho_nl: f64,
    pub checks: Vec<Check>,
    pub passed: bool,
    pub first_failure: Option<&'static str>,
}

fn check(name: &'static str, value: f64, tolerance: f64) -> Check {
    Check {
        name,
        value,
        tolerance,
        passed: value.is_finite() && value <= tolerance,
    }
}

pub fn cmd_crosscheck(args: &CommonArgs, fault: Option<Fault>) -> Result<Outcome, CliError> {
    let loaded = Loaded::new(args)?;
    let mut an = Analysis::run(&loaded)?;
    if fault == Some(Fault::MomentMatrix) {
        let a = an.ms.a[[0, 0]];
        an.ms.a[[0, 0]] = a + 0.1 * (1.0 + a.abs());
    }
    let (mm, c) = (&an.mm, &an.closure);
    let mut checks = Vec::new();

    let g_scale = linalg::max_abs(an.g.matrix.view()).max(1.0);
    checks.push(check(
        "generator_conservation",
        an.g.column_sum_defect() / g_scale,
        1e-12,
    ));

    let vg_scale = linalg::max_abs(mm.v.dot(&an.g.matrix).view()).max(1.0);
    let identity = an
        .ms
        .identity_residual(mm, &an.g)
        .map_err(|e| CliError::Numerical(e.to_string()))?;
    checks.push(check("moment_identity", identity / vg_scale, IDENTITY_TOL));

    checks.push(check(
        "rho_dual_agreement",
        (c.rho_affine - c.rho_dual).abs(),
        AGREEMENT_TOL,
    ));
    checks.push(check(
        "rho_nl_agreement",
        (c.rho_affine - c.rho_nl).abs(),
        AGREEMENT_TOL,
    ));

    // worst case over the simplex, by brute force over its vertices
    let vertex_max = (0..mm.states())
        .map(|j| {
            let fit = c.k.dot(&mm.v.column(j)) + &c.k0;
            (&mm.h.column(j) - &fit)
                .iter()
                .fold(0.0f64, |a, v| a.max(v.abs()))
        })
        .fold(0.0f64, f64::max);
    checks.push(check(
        "lemma_vertex_norm",
        (vertex_max - c.rho_affine).abs(),
        AGREEMENT_TOL,
    ));

    let dual = optimal_affine_dual(mm, &loaded.settings.lp_config())
        .map_err(|e| CliError::Numerical(e.to_string()))?;
    checks.push(check("dual_certificate", certificate_defect(mm, &dual), 1e-8));

    if loaded.file.initial_state.is_some() {
        let horizon = pipeline::resolve_horizon(&loaded.settings, &an)?;
        let sim = pipeline::simulate(&loaded, &an, horizon.value)?;
        checks.push(check("probability_conservation", sim.cme.mass_defect(), 1e-9));
        let cert = pipeline::certificate(&loaded, &an, horizon.value, Some(&sim))?;
        checks.push(check(
            "bound_soundness",
            cert.worst_excess().unwrap_or(f64::NEG_INFINITY).max(-1.0),
            SOUNDNESS_TOL,
        ));
    }

    let first_failure = checks.iter().find(|c| !c.passed).map(|c| c.name);
    let report = CrosscheckReport {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        model: args.model.display().to_string(),
        n: loaded.settings.n,
        states: mm.states(),
        rho_affine: c.rho_affine,
        rho_dual: c.rho_dual,
        rho_nl: c.rho_nl,
        passed: first_failure.is_none(),
        first_failure,
        checks,
    };
    let mut out = Outcome::ok(report::to_json(&report));
    if let Some(name) = first_failure {
        out.exit_code = 1;
        out.message = Some(format!("crosscheck failed: {name}"));
    }
    Ok(out)
}
