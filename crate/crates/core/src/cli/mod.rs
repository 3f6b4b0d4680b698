//! Command-line front end.
//!
//! ```text
//! specfloor <command> [--config <path>] [--out <dir>] [--n-list a,b,c] [--dump-matrix]
//! ```
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 certification or
//! audit failure. `SPECFLOOR_THREADS` caps the worker pool.

pub mod config;
pub mod report;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::Value;

use crate::certifier::{certify, CertifiedBound};
use crate::covmodels::{decay_audit, radial_lag_samples, IsotropicCovariance, MatrixCovarianceModel};
use crate::designs::{make_grid_design, min_distance, Design, MinDistanceReport};
use crate::matrixops::{
    assemble_sigma, eigenvalues, matrix_to_csv, schur_product, smallest_eigenvalue, taper_floor,
    tridiag_toeplitz_eigs, wendland_taper, TaperMatrix,
};
use crate::spectral::{inversion_audit, spectral_floor, FrequencyBox, InversionQuad, SpectralFloor};
use crate::{AuditReport, Error, Result};

pub use config::{parse_config, parse_config_str, RunConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_FAILURE: i32 = 2;

/// Sizes used by `counterexample` when `--n-list` is absent.
pub const COUNTEREXAMPLE_SIZES: [usize; 5] = [4, 16, 64, 256, 512];

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Audit,
    Certify,
    Spectrum,
    Sweep,
    Counterexample,
    Taper,
}

#[derive(Debug, Parser)]
#[command(name = "specfloor", version, about = "Certified smallest-eigenvalue bounds for multivariate spatial covariance matrices")]
pub struct Args {
    #[arg(value_enum)]
    pub command: Command,
    /// TOML run configuration (optional for `counterexample`).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory; overrides `output.dir`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Comma-separated sizes for `sweep` and `counterexample`.
    #[arg(long, value_delimiter = ',')]
    pub n_list: Option<Vec<usize>>,
    /// Also write Σ as dense CSV.
    #[arg(long)]
    pub dump_matrix: bool,
}

/// Files produced by a command plus the text shown on stdout.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub exit_code: i32,
    pub stdout: String,
    pub artifacts: Vec<PathBuf>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Assumptions {
    pub decay: AuditReport,
    pub spectral: SpectralAudit,
    pub min_distance: MinDistanceReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inversion: Option<Value>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectralAudit {
    pub pass: bool,
    #[serde(flatten)]
    pub floor: SpectralFloor,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub command: String,
    pub config: Value,
    pub assumptions: Assumptions,
    pub n_total: usize,
    pub bound: Option<CertifiedBound>,
    pub failure_reason: Option<String>,
    pub lambda1: Option<f64>,
    pub margin: Option<f64>,
}

/// Parses arguments and runs; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(args) {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    configure_threads();
    match run_args(&args) {
        Ok(out) => {
            print!("{}", out.stdout);
            out.exit_code
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}

fn configure_threads() {
    if let Some(n) = std::env::var("SPECFLOOR_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        if n > 0 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

pub fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::Certification(_) | Error::SpectralFloor { .. } | Error::Saturation { .. } => EXIT_FAILURE,
        _ => EXIT_USAGE,
    }
}

pub fn run_args(args: &Args) -> Result<Outcome> {
    let cfg = match &args.config {
        Some(p) => Some(parse_config(p)?),
        None if args.command == Command::Counterexample => None,
        None => return Err(Error::Config(format!("`{:?}` needs --config", args.command).to_lowercase())),
    };
    let out_dir = args
        .out
        .clone()
        .or_else(|| cfg.as_ref().map(|c| c.output.dir.clone()))
        .unwrap_or_else(|| PathBuf::from("out"));
    match (args.command, cfg) {
        (Command::Counterexample, cfg) => {
            let sizes = args.n_list.clone().unwrap_or_else(|| COUNTEREXAMPLE_SIZES.to_vec());
            counterexample(cfg.as_ref(), &sizes, &out_dir)
        }
        (cmd, Some(cfg)) => run(cmd, &cfg, &out_dir, args.n_list.as_deref(), args.dump_matrix),
        (_, None) => unreachable!("config presence checked above"),
    }
}

/// Runs a configured command, writing artifacts under `out_dir`.
pub fn run(
    command: Command,
    cfg: &RunConfig,
    out_dir: &Path,
    n_list: Option<&[usize]>,
    dump_matrix: bool,
) -> Result<Outcome> {
    let model = cfg.build_model()?;
    let design = cfg.build_design(None)?;
    let mut artifacts = Vec::new();
    if dump_matrix {
        let sigma = assemble_sigma(&model, &design)?;
        let path = out_dir.join("sigma.csv");
        report::write_file(&path, &matrix_to_csv(&sigma.entries))?;
        artifacts.push(path);
    }
    let outcome = match command {
        Command::Audit => audit_cmd(cfg, &model, &design, out_dir),
        Command::Certify => certify_cmd(cfg, &model, &design, out_dir),
        Command::Spectrum => spectrum_cmd(cfg, &model, &design, out_dir),
        Command::Sweep => sweep_cmd(cfg, &model, n_list.unwrap_or(&[25, 100, 400]), out_dir),
        Command::Taper => taper_cmd(cfg, &model, &design, out_dir),
        Command::Counterexample => counterexample(Some(cfg), n_list.unwrap_or(&COUNTEREXAMPLE_SIZES), out_dir),
    }?;
    artifacts.extend(outcome.artifacts);
    Ok(Outcome { artifacts, ..outcome })
}

fn config_value(cfg: &RunConfig) -> Result<Value> {
    serde_json::to_value(cfg).map_err(|e| Error::Config(format!("cannot serialize config: {e}")))
}

fn assumptions(cfg: &RunConfig, model: &MatrixCovarianceModel, design: &Design, with_inversion: bool) -> Result<Assumptions> {
    let samples = radial_lag_samples(model.d(), 12.0 * model.max_range().max(1.0), cfg.audit.decay_samples.max(2));
    let decay = decay_audit(model, &samples)?;
    let fb = FrequencyBox::symmetric(model.d(), cfg.audit.spectral_half_width)?;
    let resolution = cfg.certify_options().resolution(model.d());
    let floor = spectral_floor(model, &fb, resolution)?;
    let spectral = SpectralAudit {
        pass: floor.value > crate::certifier::FLOOR_EPS,
        floor,
    };
    let min_distance = min_distance(design)?;
    let inversion = if !with_inversion {
        None
    } else if model.d() == 1 {
        let lags: Vec<Vec<f64>> = cfg.audit.inversion_lags.iter().map(|&x| vec![x]).collect();
        let rep = inversion_audit(model, &lags, &InversionQuad::default(), cfg.audit.inversion_tol)?;
        Some(serde_json::to_value(rep).map_err(|e| Error::Config(e.to_string()))?)
    } else {
        Some(serde_json::json!({ "pass": null, "note": "inversion audit runs for d = 1 only" }))
    };
    Ok(Assumptions {
        decay,
        spectral,
        min_distance,
        inversion,
    })
}

fn emit_json<T: Serialize>(value: &T, path: PathBuf, exit_code: i32) -> Result<Outcome> {
    let text = report::to_json(value)?;
    report::write_file(&path, &text)?;
    Ok(Outcome {
        exit_code,
        stdout: text,
        artifacts: vec![path],
    })
}

fn audit_cmd(cfg: &RunConfig, model: &MatrixCovarianceModel, design: &Design, out_dir: &Path) -> Result<Outcome> {
    let a = assumptions(cfg, model, design, true)?;
    let inversion_ok = a
        .inversion
        .as_ref()
        .and_then(|v| v.get("pass"))
        .is_none_or(|p| p.as_bool() != Some(false));
    let pass = a.decay.pass && a.spectral.pass && inversion_ok;
    let report = serde_json::json!({
        "command": "audit",
        "config": config_value(cfg)?,
        "assumptions": a,
        "pass": pass,
    });
    emit_json(&report, out_dir.join("audit.json"), if pass { EXIT_OK } else { EXIT_FAILURE })
}

/// `λ₁(Σ)` when `N` is within the cap.
fn lambda1_capped(cfg: &RunConfig, model: &MatrixCovarianceModel, design: &Design) -> Result<Option<f64>> {
    if design.total() > cfg.certify.eigen_cap {
        return Ok(None);
    }
    let sigma = assemble_sigma(model, design)?;
    smallest_eigenvalue(&sigma.entries, 1e-12).map(Some)
}

/// Full certification report. Certification failures become a report with
/// `bound: null` rather than an error.
pub fn certify_report(cfg: &RunConfig, model: &MatrixCovarianceModel, design: &Design) -> Result<RunReport> {
    let a = assumptions(cfg, model, design, false)?;
    let (bound, failure_reason) = match certify(model, design, &cfg.certify_options()) {
        Ok(b) => (Some(b), None),
        Err(e @ (Error::Certification(_) | Error::SpectralFloor { .. } | Error::Precondition(_))) => {
            (None, Some(failure_text(&e)))
        }
        Err(e) => return Err(e),
    };
    let lambda1 = lambda1_capped(cfg, model, design)?;
    let margin = match (&bound, lambda1) {
        (Some(b), Some(l)) => Some(l - b.value),
        _ => None,
    };
    Ok(RunReport {
        command: "certify".into(),
        config: config_value(cfg)?,
        assumptions: a,
        n_total: design.total(),
        bound,
        failure_reason,
        lambda1,
        margin,
    })
}

fn failure_text(e: &Error) -> String {
    let s = e.to_string();
    s.strip_prefix("certification failed: ").map(str::to_string).unwrap_or(s)
}

fn certify_cmd(cfg: &RunConfig, model: &MatrixCovarianceModel, design: &Design, out_dir: &Path) -> Result<Outcome> {
    let rep = certify_report(cfg, model, design)?;
    let code = if rep.bound.is_some() { EXIT_OK } else { EXIT_FAILURE };
    emit_json(&rep, out_dir.join("certify.json"), code)
}

fn spectrum_cmd(cfg: &RunConfig, model: &MatrixCovarianceModel, design: &Design, out_dir: &Path) -> Result<Outcome> {
    if design.total() > cfg.certify.eigen_cap {
        return Err(Error::Config(format!(
            "N = {} exceeds certify.eigen_cap = {}",
            design.total(),
            cfg.certify.eigen_cap
        )));
    }
    let sigma = assemble_sigma(model, design)?;
    let ev = eigenvalues(&sigma.entries)?;
    let (l1, lmax) = (ev[0], ev[ev.len() - 1]);
    let report = serde_json::json!({
        "command": "spectrum",
        "config": config_value(cfg)?,
        "n_total": design.total(),
        "lambda1": l1,
        "lambda_max": lmax,
        "condition_number": if l1 > 0.0 { lmax / l1 } else { f64::INFINITY },
    });
    emit_json(&report, out_dir.join("spectrum.json"), EXIT_OK)
}

/// One sweep row: `(n, N, λ₁ or None above the cap, bound or None on failure)`.
pub type SweepRow = (usize, usize, Option<f64>, Option<f64>);

pub fn sweep_rows(cfg: &RunConfig, model: &MatrixCovarianceModel, sizes: &[usize]) -> Result<Vec<SweepRow>> {
    let p = cfg.model_p();
    sizes
        .par_iter()
        .map(|&n| {
            let design = cfg.build_design(Some(&vec![n; p]))?;
            let bound = match certify(model, &design, &cfg.certify_options()) {
                Ok(b) => Some(b.value),
                Err(Error::Certification(_) | Error::SpectralFloor { .. }) => None,
                Err(e) => return Err(e),
            };
            Ok((n, design.total(), lambda1_capped(cfg, model, &design)?, bound))
        })
        .collect()
}

fn opt_float(v: Option<f64>) -> String {
    v.map_or_else(String::new, report::format_float)
}

fn sweep_cmd(cfg: &RunConfig, model: &MatrixCovarianceModel, sizes: &[usize], out_dir: &Path) -> Result<Outcome> {
    if cfg.design.kind == config::DesignKind::File {
        return Err(Error::Config("sweep needs a generated design (grid or random)".into()));
    }
    let rows = sweep_rows(cfg, model, sizes)?;
    let mut csv = String::from("n,N,lambda1,bound\n");
    for (n, total, l1, b) in &rows {
        csv.push_str(&format!("{n},{total},{},{}\n", opt_float(*l1), opt_float(*b)));
    }
    let path = out_dir.join("sweep.csv");
    report::write_file(&path, &csv)?;
    let failed = rows.iter().any(|r| r.3.is_none());
    Ok(Outcome {
        exit_code: if failed { EXIT_FAILURE } else { EXIT_OK },
        stdout: csv,
        artifacts: vec![path],
    })
}

/// Triangular covariance on `{0.5, 1, …, n/2}`: numeric `λ₁` against `1 + cos(nπ/(n+1))`.
pub fn counterexample_rows(sizes: &[usize]) -> Result<Vec<(usize, f64, f64)>> {
    let model = MatrixCovarianceModel::univariate(IsotropicCovariance::triangular(1.0, 1.0)?, 1)?;
    sizes
        .par_iter()
        .map(|&n| {
            if n == 0 {
                return Err(Error::Parameter("sizes must be ≥ 1".into()));
            }
            let design = make_grid_design(1, &[n], 0.5, Some(&[vec![0.5]]))?;
            let sigma = assemble_sigma(&model, &design)?;
            let numeric = smallest_eigenvalue(&sigma.entries, 1e-12)?;
            let closed = *tridiag_toeplitz_eigs(n, 1.0, 0.5).last().expect("n ≥ 1");
            Ok((n, closed, numeric))
        })
        .collect()
}

fn counterexample(_cfg: Option<&RunConfig>, sizes: &[usize], out_dir: &Path) -> Result<Outcome> {
    let rows = counterexample_rows(sizes)?;
    let mut csv = String::from("n,lambda1_closed_form,lambda1_numeric,abs_diff\n");
    for (n, closed, numeric) in &rows {
        csv.push_str(&format!(
            "{n},{},{},{}\n",
            report::format_float(*closed),
            report::format_float(*numeric),
            report::format_float((closed - numeric).abs())
        ));
    }
    let path = out_dir.join("counterexample.csv");
    report::write_file(&path, &csv)?;
    Ok(Outcome {
        exit_code: EXIT_OK,
        stdout: csv,
        artifacts: vec![path],
    })
}

fn taper_cmd(cfg: &RunConfig, model: &MatrixCovarianceModel, design: &Design, out_dir: &Path) -> Result<Outcome> {
    let tc = cfg
        .taper
        .as_ref()
        .ok_or_else(|| Error::Config("the taper command needs a [taper] section".into()))?;
    let n = design.total();
    if n > cfg.certify.eigen_cap {
        return Err(Error::Config(format!("N = {n} exceeds certify.eigen_cap = {}", cfg.certify.eigen_cap)));
    }
    let taper = match tc.kind {
        config::TaperKind::Wendland => wendland_taper(design, tc.range)?,
        config::TaperKind::Identity => TaperMatrix::new(nalgebra::DMatrix::identity(n, n))?,
        config::TaperKind::Ones => TaperMatrix::new(nalgebra::DMatrix::from_element(n, n, 1.0))?,
    };
    let sigma = assemble_sigma(model, design)?;
    let l1 = smallest_eigenvalue(&sigma.entries, 1e-12)?;
    let bound = taper_floor(l1.max(0.0), &taper)?;
    let tapered = smallest_eigenvalue(&schur_product(&sigma.entries, &taper)?, 1e-12)?;
    let report = serde_json::json!({
        "command": "taper",
        "config": config_value(cfg)?,
        "n_total": n,
        "lambda1_sigma": l1,
        "taper_diag_min": taper.diag_min(),
        "taper_lambda1": taper.lambda1(),
        "bound": bound,
        "lambda1_tapered": tapered,
        "slack": tapered - bound,
    });
    emit_json(&report, out_dir.join("taper.json"), EXIT_OK)
}
