//! Batch driver behind the `langevin-contract` binary.
//!
//! Each command reads one JSON config (see [`config`]), fans out over its
//! grid on the rayon pool and writes CSV or JSON artifacts. Output depends
//! only on the config, so two runs produce byte-identical files.

pub mod config;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::certificates::{certify_theorem, check_certificate, max_certified_step, CertificateReport, StepRestriction};
use crate::coupling::{
    default_burn_in, empirical_rate, run_coupled_pair, theorem_rate, verify_trace_bound, write_trace_csv,
};
use crate::error::Error;
use crate::gaussian::{gaussian_scan, kinetic_em_threshold, stability_threshold, write_scan_csv, ScanEntry};
use crate::glc::{
    deviation_scan, limit_map, rate_collapse_scan, write_collapse_csv, write_deviation_csv, CollapseOptions,
    DEFAULT_GAMMA_GRID,
};
use crate::integrators::{SchemeId, StepParams};

pub use config::{parse_config, CertifyMode, ConfigError, ExperimentConfig, Resolved};

/// Caps the rayon worker count when set to a positive integer.
pub const WORKERS_ENV: &str = "LANGEVIN_CONTRACT_WORKERS";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Couple,
    Certify,
    GaussianScan,
    GlcScan,
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Run inadmissible parameters and keep going past divergence.
    pub force: bool,
    /// Overrides `output.dir`.
    pub out: Option<PathBuf>,
}

#[derive(Debug)]
pub enum RunError {
    Config(ConfigError),
    Divergence(String),
    Io(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Divergence(_) => 3,
            RunError::Io(_) => 1,
        }
    }
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Config(e) => write!(f, "config error: {e}"),
            RunError::Divergence(msg) => write!(f, "divergence: {msg} (rerun with --force to record it)"),
            RunError::Io(msg) => write!(f, "i/o error: {msg}"),
        }
    }
}

impl std::error::Error for RunError {}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Config(e)
    }
}

/// Library errors raised while running a grid point.
fn lib_error(e: Error) -> RunError {
    match e {
        Error::NonFiniteState | Error::Diverged { .. } => RunError::Divergence(e.to_string()),
        other => RunError::Config(ConfigError::new(other.to_string())),
    }
}

/// Paths written by a run, in write order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunOutput {
    pub files: Vec<PathBuf>,
}

/// Applies [`WORKERS_ENV`] to the global rayon pool.
pub fn configure_workers() -> Result<(), String> {
    let Ok(raw) = std::env::var(WORKERS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| format!("{WORKERS_ENV} must be a positive integer, got `{raw}`"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

pub fn run_file(command: Command, path: &Path, opts: &RunOptions) -> Result<RunOutput, RunError> {
    let text = fs::read_to_string(path).map_err(|e| {
        RunError::Config(ConfigError::new(format!("cannot read {}: {e}", path.display())))
    })?;
    run(command, &text, opts)
}

pub fn run(command: Command, config_text: &str, opts: &RunOptions) -> Result<RunOutput, RunError> {
    let resolved = parse_config(config_text)?;
    let dir = opts
        .out
        .clone()
        .or_else(|| resolved.config.output.dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    let files = match command {
        Command::Couple => cmd_couple(&resolved, &dir, opts.force)?,
        Command::Certify => cmd_certify(&resolved, &dir, opts.force)?,
        Command::GaussianScan => cmd_gaussian_scan(&resolved, &dir)?,
        Command::GlcScan => cmd_glc_scan(&resolved, &dir)?,
    };
    Ok(RunOutput { files })
}

/// Writes through a temporary sibling and renames it into place.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), RunError> {
    let io = |e: std::io::Error| RunError::Io(format!("{}: {e}", path.display()));
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(io)?;
    }
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = path.with_file_name(format!(".{name}.{}.tmp", std::process::id()));
    let mut f = fs::File::create(&tmp).map_err(io)?;
    f.write_all(bytes).map_err(io)?;
    f.sync_all().map_err(io)?;
    fs::rename(&tmp, path).map_err(io)
}

fn json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("report types serialize");
    out.push(b'\n');
    out
}

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> crate::error::Result<()>) -> Result<Vec<u8>, RunError> {
    let mut buf = Vec::new();
    f(&mut buf).map_err(|e| RunError::Io(e.to_string()))?;
    Ok(buf)
}

#[derive(Debug, Clone, Serialize)]
struct PotentialSummary {
    name: String,
    dim: usize,
    m: f64,
    #[serde(rename = "M")]
    big_m: f64,
}

fn potential_summary(r: &Resolved) -> PotentialSummary {
    let p = r.potential.as_dyn();
    PotentialSummary {
        name: p.name().to_string(),
        dim: p.dim(),
        m: p.convexity(),
        big_m: p.smoothness(),
    }
}

fn inadmissible_error(r: &Resolved, scheme: SchemeId, h: f64, gamma: f64, violated: &[&str]) -> RunError {
    RunError::Config(r.error_at(
        "params",
        format!(
            "{scheme} at h={h}, gamma={gamma} violates {}; rerun with --force to run it anyway",
            violated.join(", ")
        ),
    ))
}

#[derive(Debug, Clone, Serialize)]
pub struct CoupleRow {
    pub scheme: SchemeId,
    pub h: f64,
    pub gamma: f64,
    pub seed: u64,
    pub n: usize,
    pub c_theoretical: f64,
    pub c_empirical: Option<f64>,
    pub admissible: bool,
    pub violated: Vec<String>,
    pub bound_violations: usize,
    pub first_violation: Option<usize>,
    pub diverged_at: Option<usize>,
    pub trace_file: String,
}

#[derive(Serialize)]
struct CoupleSummary {
    command: &'static str,
    potential: PotentialSummary,
    rows: Vec<CoupleRow>,
}

fn trace_name(scheme: SchemeId, h: f64, gamma: f64, seed: u64) -> String {
    format!("traces/{scheme}_h{h}_gamma{gamma}_seed{seed}.csv")
}

/// Synchronous-coupling traces for every (scheme, h, γ, seed).
pub fn cmd_couple(r: &Resolved, dir: &Path, force: bool) -> Result<Vec<PathBuf>, RunError> {
    let params = &r.config.params;
    let hs = r.grid("h", params.h.as_ref(), None)?;
    let gammas = r.grid("gamma", params.gamma.as_ref(), None)?;
    let seeds = r.seeds();
    let n = params.n.unwrap_or(1000);
    let z0 = r.start("z0", params.z0.as_ref(), -1.0)?;
    let z1 = r.start("z0_tilde", params.z0_tilde.as_ref(), 1.0)?;
    let (m, big_m) = (r.m(), r.big_m());

    let mut points = Vec::new();
    for &scheme in &r.schemes {
        for &h in &hs {
            for &gamma in &gammas {
                let rate = theorem_rate(scheme, m, big_m, gamma, h);
                if !rate.admissible && !force {
                    return Err(inadmissible_error(r, scheme, h, gamma, &rate.violated()));
                }
                for &seed in &seeds {
                    points.push((scheme, h, gamma, seed, rate.clone()));
                }
            }
        }
    }

    let p = r.potential.as_dyn();
    let results = points
        .par_iter()
        .map(|(scheme, h, gamma, seed, rate)| {
            let step = StepParams::new(*h, *gamma).map_err(lib_error)?;
            let trace = run_coupled_pair(*scheme, p, &z0, &z1, &step, n, *seed, 0, rate.norm()).map_err(lib_error)?;
            let check = verify_trace_bound(&trace, rate);
            let burn = params.burn_in.unwrap_or_else(|| default_burn_in(p, &trace));
            let row = CoupleRow {
                scheme: *scheme,
                h: *h,
                gamma: *gamma,
                seed: *seed,
                n,
                c_theoretical: rate.c,
                c_empirical: empirical_rate(&trace, burn).ok(),
                admissible: rate.admissible,
                violated: rate.violated().into_iter().map(String::from).collect(),
                bound_violations: check.violations,
                first_violation: check.first_violation,
                diverged_at: trace.diverged_at,
                trace_file: trace_name(*scheme, *h, *gamma, *seed),
            };
            let csv = csv_bytes(|buf| write_trace_csv(&trace, rate, buf))?;
            Ok((row, csv))
        })
        .collect::<Result<Vec<_>, RunError>>()?;

    if !force {
        if let Some((row, _)) = results.iter().find(|(row, _)| row.diverged_at.is_some()) {
            return Err(RunError::Divergence(format!(
                "{} at h={}, gamma={}, seed={} left floating point range at step {}",
                row.scheme,
                row.h,
                row.gamma,
                row.seed,
                row.diverged_at.unwrap_or(0)
            )));
        }
    }

    results
        .par_iter()
        .map(|(row, csv)| write_atomic(&dir.join(&row.trace_file), csv))
        .collect::<Result<Vec<_>, _>>()?;
    let mut files: Vec<PathBuf> = results.iter().map(|(row, _)| dir.join(&row.trace_file)).collect();
    let summary = CoupleSummary {
        command: "couple",
        potential: potential_summary(r),
        rows: results.into_iter().map(|(row, _)| row).collect(),
    };
    let path = dir.join("couple_summary.json");
    write_atomic(&path, &json_bytes(&summary))?;
    files.push(path);
    Ok(files)
}

#[derive(Debug, Clone, Serialize)]
pub struct CertifyRow {
    #[serde(flatten)]
    pub report: CertificateReport,
    /// Whether `(a, b, c)` came from the theorem rather than the config.
    pub theorem_constants: bool,
    pub admissible: bool,
    pub violated: Vec<String>,
}

#[derive(Serialize)]
struct CertifySummary<T> {
    command: &'static str,
    mode: CertifyMode,
    potential: PotentialSummary,
    rows: Vec<T>,
}

/// Certificate reports per (scheme, h, γ), or per-scheme certified
/// stepsize limits in `table1` mode.
pub fn cmd_certify(r: &Resolved, dir: &Path, force: bool) -> Result<Vec<PathBuf>, RunError> {
    let params = &r.config.params;
    let mode = params.mode.unwrap_or_default();
    let gammas = r.grid("gamma", params.gamma.as_ref(), None)?;
    let (m, big_m) = (r.m(), r.big_m());
    let potential = potential_summary(r);

    let bytes = match mode {
        CertifyMode::Table1 => {
            let points: Vec<(SchemeId, f64)> =
                r.schemes.iter().flat_map(|&s| gammas.iter().map(move |&g| (s, g))).collect();
            let rows = points
                .par_iter()
                .map(|&(scheme, gamma)| max_certified_step(scheme, m, big_m, gamma).map_err(lib_error))
                .collect::<Result<Vec<StepRestriction>, _>>()?;
            json_bytes(&CertifySummary {
                command: "certify",
                mode,
                potential,
                rows,
            })
        }
        CertifyMode::Reports => {
            let hs = r.grid("h", params.h.as_ref(), None)?;
            let explicit = params.a.zip(params.b).zip(params.c).map(|((a, b), c)| (a, b, c));
            let mut points = Vec::new();
            for &scheme in &r.schemes {
                for &h in &hs {
                    for &gamma in &gammas {
                        let rate = theorem_rate(scheme, m, big_m, gamma, h);
                        if explicit.is_none() && !rate.admissible && !force {
                            return Err(inadmissible_error(r, scheme, h, gamma, &rate.violated()));
                        }
                        points.push((scheme, h, gamma, rate));
                    }
                }
            }
            let rows = points
                .par_iter()
                .map(|(scheme, h, gamma, rate)| {
                    let report = match explicit {
                        Some((a, b, c)) => check_certificate(*scheme, m, big_m, *gamma, *h, a, b, c),
                        None => certify_theorem(*scheme, m, big_m, *gamma, *h),
                    }
                    .map_err(lib_error)?;
                    Ok(CertifyRow {
                        report,
                        theorem_constants: explicit.is_none(),
                        admissible: rate.admissible,
                        violated: rate.violated().into_iter().map(String::from).collect(),
                    })
                })
                .collect::<Result<Vec<_>, RunError>>()?;
            json_bytes(&CertifySummary {
                command: "certify",
                mode,
                potential,
                rows,
            })
        }
    };
    let path = dir.join(match mode {
        CertifyMode::Reports => "certify.json",
        CertifyMode::Table1 => "table1.json",
    });
    write_atomic(&path, &bytes)?;
    Ok(vec![path])
}

/// Spectral scan over (scheme, γ, h) plus per-mode stability thresholds.
pub fn cmd_gaussian_scan(r: &Resolved, dir: &Path) -> Result<Vec<PathBuf>, RunError> {
    let params = &r.config.params;
    let hs = r.grid("h", params.h.as_ref(), None)?;
    let gammas = r.grid("gamma", params.gamma.as_ref(), None)?;
    let (m, big_m) = (r.m(), r.big_m());

    let mut entries: Vec<ScanEntry> = Vec::new();
    for &scheme in &r.schemes {
        for &gamma in &gammas {
            entries.extend(gaussian_scan(scheme, m, big_m, gamma, &hs).map_err(lib_error)?);
        }
    }
    let scan = csv_bytes(|buf| write_scan_csv(&entries, buf))?;

    let lambdas: Vec<f64> = if m == big_m { vec![m] } else { vec![m, big_m] };
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| RunError::Io(e.to_string());
    w.write_record(["scheme", "gamma", "lambda", "threshold", "closed_form"]).map_err(io)?;
    for &scheme in &r.schemes {
        for &gamma in &gammas {
            for &lambda in &lambdas {
                let threshold = stability_threshold(scheme, lambda, gamma).unwrap_or(f64::NAN);
                let closed = match scheme {
                    SchemeId::KineticEM => kinetic_em_threshold(lambda, gamma).unwrap_or(f64::NAN),
                    _ => f64::NAN,
                };
                w.write_record([
                    scheme.to_string(),
                    crate::format::fmt17(gamma),
                    crate::format::fmt17(lambda),
                    crate::format::fmt17(threshold),
                    crate::format::fmt17(closed),
                ])
                .map_err(io)?;
            }
        }
    }
    let thresholds = w.into_inner().map_err(|e| RunError::Io(e.to_string()))?;

    let scan_path = dir.join("gaussian_scan.csv");
    let thr_path = dir.join("gaussian_thresholds.csv");
    write_atomic(&scan_path, &scan)?;
    write_atomic(&thr_path, &thresholds)?;
    Ok(vec![scan_path, thr_path])
}

#[derive(Serialize)]
struct LimitRow {
    scheme: SchemeId,
    glc: bool,
    update: Option<&'static str>,
    note: Option<String>,
}

/// Rate collapse and limit deviation across frictions.
pub fn cmd_glc_scan(r: &Resolved, dir: &Path) -> Result<Vec<PathBuf>, RunError> {
    let params = &r.config.params;
    let gammas = r.grid("gamma", params.gamma.as_ref(), Some(&DEFAULT_GAMMA_GRID))?;
    let h = match &params.h {
        None => None,
        Some(g) => match r.grid("h", Some(g), None)?.as_slice() {
            [h] => Some(*h),
            _ => return Err(r.error_at("h", "glc-scan takes a single `h`").into()),
        },
    };
    let opts = CollapseOptions {
        h,
        steps: params.n.unwrap_or(2000),
        seed: r.seeds()[0],
    };
    let dev_h = params.deviation_h.unwrap_or(0.1);
    if !(dev_h.is_finite() && dev_h > 0.0) {
        return Err(r.error_at("deviation_h", "`deviation_h` must be positive").into());
    }
    let start = r.start("z0", params.z0.as_ref(), 1.0)?;
    let (m, big_m) = (r.m(), r.big_m());
    let p = r.potential.as_dyn();

    let mut collapse = Vec::new();
    let mut deviations = Vec::new();
    let mut limits = Vec::new();
    for &scheme in &r.schemes {
        collapse.extend(rate_collapse_scan(scheme, m, big_m, &gammas, opts).map_err(lib_error)?);
        match limit_map(scheme) {
            Ok(map) => {
                deviations.extend(
                    deviation_scan(scheme, p, &start.x, &start.v, dev_h, &gammas, opts.seed).map_err(lib_error)?,
                );
                limits.push(LimitRow {
                    scheme,
                    glc: map.glc,
                    update: Some(map.update),
                    note: None,
                });
            }
            Err(e) => limits.push(LimitRow {
                scheme,
                glc: false,
                update: None,
                note: Some(e.to_string()),
            }),
        }
    }
    let collapse_path = dir.join("glc_collapse.csv");
    let dev_path = dir.join("glc_deviation.csv");
    let limits_path = dir.join("glc_limits.json");
    write_atomic(&collapse_path, &csv_bytes(|b| write_collapse_csv(&collapse, b))?)?;
    write_atomic(&dev_path, &csv_bytes(|b| write_deviation_csv(&deviations, b))?)?;
    write_atomic(&limits_path, &json_bytes(&limits))?;
    Ok(vec![collapse_path, dev_path, limits_path])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts(dir: &Path, force: bool) -> RunOptions {
        RunOptions {
            force,
            out: Some(dir.to_path_buf()),
        }
    }

    #[test]
    fn couple_writes_traces_and_summary() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = r#"{"potential": {"name": "quadratic", "m": 1, "M": 4},
            "schemes": ["BAOAB"], "params": {"h": 0.05, "gamma": 5, "n": 20, "seeds": [1, 2]}}"#;
        let out = run(Command::Couple, cfg, &opts(dir.path(), false)).unwrap();
        assert_eq!(out.files.len(), 3);
        let summary: serde_json::Value =
            serde_json::from_slice(&fs::read(dir.path().join("couple_summary.json")).unwrap()).unwrap();
        assert_eq!(summary["rows"][0]["bound_violations"], 0);
        assert_eq!(summary["rows"][1]["seed"], 2);
    }

    #[test]
    fn inadmissible_needs_force() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = r#"{"potential": {"name": "quadratic", "m": 1, "M": 4},
            "schemes": ["KineticEM"], "params": {"h": 0.25, "gamma": 4, "n": 5}}"#;
        let e = run(Command::Couple, cfg, &opts(dir.path(), false)).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        assert!(e.to_string().contains("h < 1/(2 gamma)"));
        run(Command::Couple, cfg, &opts(dir.path(), true)).unwrap();
    }

    #[test]
    fn forced_divergence_is_recorded() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = r#"{"potential": {"name": "quadratic", "m": 1, "M": 1},
            "schemes": ["KineticEM"], "params": {"h": 0.25, "gamma": 1000, "n": 2000}}"#;
        run(Command::Couple, cfg, &opts(dir.path(), true)).unwrap();
        let v: serde_json::Value =
            serde_json::from_slice(&fs::read(dir.path().join("couple_summary.json")).unwrap()).unwrap();
        assert!(v["rows"][0]["diverged_at"].as_u64().is_some());
    }

    #[test]
    fn overflow_without_force_exits_3() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = r#"{"potential": {"name": "quadratic", "m": 1, "M": 1},
            "schemes": ["BAOAB"], "params": {"h": 0.1, "gamma": 4, "n": 10,
            "z0": {"x": [1e308], "v": [1e308]}, "z0_tilde": {"x": [-1e308], "v": [-1e308]}}}"#;
        let cfg = cfg.replace("\"M\": 1}", "\"M\": 1, \"dim\": 1}");
        let e = run(Command::Couple, &cfg, &opts(dir.path(), false)).unwrap_err();
        assert_eq!(e.exit_code(), 3, "{e}");
        assert!(!dir.path().join("couple_summary.json").exists());
    }

    #[test]
    fn certify_modes() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = r#"{"potential": {"name": "quadratic", "m": 1, "M": 1},
            "schemes": ["BAO"], "params": {"h": 0.05, "gamma": 5}}"#;
        run(Command::Certify, cfg, &opts(dir.path(), false)).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("certify.json")).unwrap()).unwrap();
        assert_eq!(v["rows"][0]["pass"], true);

        let t1 = cfg.replace("\"h\": 0.05, ", "\"mode\": \"table1\", ");
        run(Command::Certify, &t1, &opts(dir.path(), false)).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("table1.json")).unwrap()).unwrap();
        assert!(v["rows"][0]["h_certified"].as_f64().unwrap() > 0.0);
    }

    #[test]
    fn scans_write_headers() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = r#"{"potential": {"name": "quadratic", "m": 1, "M": 1},
            "schemes": ["KineticEM", "BAOAB"], "params": {"h": [0.1, 0.25], "gamma": 4, "n": 50}}"#;
        run(Command::GaussianScan, cfg, &opts(dir.path(), false)).unwrap();
        let thr = fs::read_to_string(dir.path().join("gaussian_thresholds.csv")).unwrap();
        assert!(thr.starts_with("scheme,gamma,lambda,threshold,closed_form\n"));
        let glc = cfg.replace("\"h\": [0.1, 0.25], \"gamma\": 4, ", "");
        run(Command::GlcScan, &glc, &opts(dir.path(), false)).unwrap();
        let dev = fs::read_to_string(dir.path().join("glc_deviation.csv")).unwrap();
        assert_eq!(dev.lines().count(), 1 + DEFAULT_GAMMA_GRID.len());
    }
}
