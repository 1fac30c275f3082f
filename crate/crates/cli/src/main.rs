//! `spine-mech` command-line front end.
//!
//! Angles given on the command line are in degrees. Every file written or
//! read uses radians.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use spine_mech::analysis::{self, LogError};
use spine_mech::config::{self, Loaded};
use spine_mech::export::{self, provenance_line};
use spine_mech::sweep::{self, Candidate, DesignRanges};
use spine_mech::{friction, sim, tum, MechError, MechanismConfig, Scenario};

const JOBS_ENV: &str = "SPINE_MECH_JOBS";

#[derive(Parser)]
#[command(name = "spine-mech", version, about = "TUM gripper kinematics, statics and design sweeps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Contraction, Jacobian and elastic force/torque against twist.
    TumCurve(CurveArgs),
    /// Finger linkage configuration over the contraction stroke.
    LinkageCurve(LinkageArgs),
    /// Design constraint, stroke, finger range and grasp condition of one mechanism.
    CheckDesign(CheckArgs),
    /// Quasi-static grasp and rotate simulation.
    Simulate(OutArgs),
    /// Evaluate a grid (or seeded sample) of design candidates.
    Sweep(SweepArgs),
    /// Experimental Jacobian from a logged (theta_rad, tau_in_Nmm) CSV.
    Analyze(AnalyzeArgs),
}

#[derive(Args)]
struct CurveArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output CSV; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 181)]
    samples: usize,
    /// Lower twist bound in degrees (default: −theta_max).
    #[arg(long, allow_hyphen_values = true)]
    theta_min: Option<f64>,
    /// Upper twist bound in degrees (default: +theta_max).
    #[arg(long, allow_hyphen_values = true)]
    theta_max: Option<f64>,
}

#[derive(Args)]
struct LinkageArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 181)]
    samples: usize,
}

#[derive(Args)]
struct CheckArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Input torque for the fingertip torque figure, N·mm.
    #[arg(long, default_value_t = 400.0)]
    reference_torque: f64,
    /// Twist for the fingertip torque figure, degrees.
    #[arg(long, default_value_t = 1f64.to_degrees())]
    theta_ref: f64,
}

#[derive(Args)]
struct OutArgs {
    #[arg(long)]
    config: PathBuf,
    /// Trace CSV; the summary goes to `<out>.summary.json`.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    config: PathBuf,
    /// Report CSV; the JSON report goes to `<out>.json` and the Pareto
    /// front, when objectives are configured, to `<out>.pareto.csv`.
    #[arg(long)]
    out: PathBuf,
    /// Worker threads (0 = all cores). `SPINE_MECH_JOBS` takes precedence.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    /// Draw this many uniform samples instead of the full grid.
    #[arg(long)]
    sample: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Mechanism config.
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    log: PathBuf,
    /// Constant axial load during logging, N.
    #[arg(long)]
    load_n: f64,
    /// Comparison CSV; the fitted offset goes to `<out>.summary.json`.
    #[arg(long)]
    out: PathBuf,
}

enum Failure {
    Model(MechError),
    Ingest(String),
    Io(String),
}

impl From<MechError> for Failure {
    fn from(e: MechError) -> Self {
        Failure::Model(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Model(e) if e.is_config() => 2,
            Failure::Io(_) => 2,
            Failure::Model(_) => 3,
            Failure::Ingest(_) => 4,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Model(e) => write!(f, "{e}"),
            Failure::Ingest(s) | Failure::Io(s) => f.write_str(s),
        }
    }
}

type CmdResult = Result<(), Failure>;

fn config_error(what: impl Into<String>) -> Failure {
    Failure::Model(MechError::Config { what: what.into() })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::TumCurve(a) => tum_curve(a),
        Command::LinkageCurve(a) => linkage_curve(a),
        Command::CheckDesign(a) => check_design(a),
        Command::Simulate(a) => simulate(a),
        Command::Sweep(a) => run_sweep(a),
        Command::Analyze(a) => analyze(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("spine-mech: {e}");
            ExitCode::from(e.code())
        }
    }
}

/// `path` with `suffix` appended to the file name.
fn sidecar(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> CmdResult {
    match out {
        Some(p) => fs::write(p, bytes).map_err(|e| Failure::Io(format!("{}: {e}", p.display()))),
        None => {
            io::stdout().write_all(bytes)?;
            Ok(())
        }
    }
}

fn with_provenance(command: &str, hash: &str) -> Vec<u8> {
    let mut buf = provenance_line(command, hash).into_bytes();
    buf.push(b'\n');
    buf
}

fn json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut v = serde_json::to_vec_pretty(value).expect("report types serialize");
    v.push(b'\n');
    v
}

fn load_mechanism(path: &Path) -> Result<Loaded<MechanismConfig>, Failure> {
    Ok(config::load_mechanism(path)?)
}

/// `n` points from `lo` to `hi`, endpoints exact and mirror-symmetric when
/// `lo == -hi`.
fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let last = (n - 1) as f64;
    (0..n)
        .map(|i| match i {
            0 => lo,
            _ if i == n - 1 => hi,
            _ => (lo * (last - i as f64) + hi * i as f64) / last,
        })
        .collect()
}

fn check_samples(samples: usize) -> CmdResult {
    if samples < 2 {
        return Err(config_error(format!("--samples must be at least 2, got {samples}")));
    }
    Ok(())
}

fn tum_curve(a: CurveArgs) -> CmdResult {
    check_samples(a.samples)?;
    let cfg = load_mechanism(&a.config)?;
    let spec = &cfg.value.tum;
    let lo = a.theta_min.map_or(-spec.max_rotation, f64::to_radians);
    let hi = a.theta_max.map_or(spec.max_rotation, f64::to_radians);
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(config_error("--theta-min must be below --theta-max"));
    }
    let mut buf = with_provenance("tum-curve", &cfg.hash);
    export::write_tum_curve(&mut buf, spec, &linspace(lo, hi, a.samples))?;
    emit(a.out.as_deref(), &buf)
}

fn linkage_curve(a: LinkageArgs) -> CmdResult {
    check_samples(a.samples)?;
    let cfg = load_mechanism(&a.config)?;
    let stroke = tum::contraction(&cfg.value.tum, cfg.value.tum.stroke_limit())?;
    let mut buf = with_provenance("linkage-curve", &cfg.hash);
    export::write_linkage_curve(&mut buf, &cfg.value.linkage, stroke, a.samples)?;
    emit(a.out.as_deref(), &buf)
}

fn check_design(a: CheckArgs) -> CmdResult {
    let cfg = load_mechanism(&a.config)?;
    let m = &cfg.value;
    let candidate = Candidate { index: 0, tum: m.tum.clone(), linkage: m.linkage.clone() };
    let report = sweep::evaluate(&candidate, a.reference_torque, a.theta_ref.to_radians());
    let grasp = friction::grasp_success(&m.tum, &m.friction)?;
    let radius = tum::check_radius_constraint(&m.tum)?;
    let doc = json!({
        "provenance": provenance_line("check-design", &cfg.hash),
        "min_radius_mm": radius.min_radius_mm,
        "report": report,
        "grasp": grasp,
    });
    emit(a.out.as_deref(), &json_bytes(&doc))
}

fn simulate(a: OutArgs) -> CmdResult {
    let loaded: Loaded<Scenario> = config::load_json(&a.config)?;
    let trace = sim::simulate(&loaded.value)?;
    let mut buf = with_provenance("simulate", &loaded.hash);
    export::write_trace(&mut buf, &trace.states)?;
    emit(Some(&a.out), &buf)?;
    let doc = json!({
        "provenance": provenance_line("simulate", &loaded.hash),
        "summary": trace.summary,
    });
    emit(Some(&sidecar(&a.out, ".summary.json")), &json_bytes(&doc))
}

fn jobs_from_env(flag: usize) -> Result<usize, Failure> {
    match std::env::var(JOBS_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| config_error(format!("{JOBS_ENV} must be a nonnegative integer, got {v:?}"))),
        Err(_) => Ok(flag),
    }
}

fn run_sweep(a: SweepArgs) -> CmdResult {
    let jobs = jobs_from_env(a.jobs)?;
    let loaded: Loaded<DesignRanges> = config::load_json(&a.config)?;
    let ranges = &loaded.value;
    ranges.validate()?;
    let candidates: Vec<Candidate> = match a.sample {
        Some(n) => sweep::sample(ranges, n, a.seed),
        None => sweep::enumerate(ranges).collect(),
    };
    let reports = sweep::evaluate_all(&candidates, ranges.reference_input_torque, ranges.theta_ref, jobs)?;

    let mut buf = with_provenance("sweep", &loaded.hash);
    export::write_reports(&mut buf, &reports)?;
    emit(Some(&a.out), &buf)?;
    let doc = json!({
        "provenance": provenance_line("sweep", &loaded.hash),
        "reports": reports,
    });
    emit(Some(&sidecar(&a.out, ".json")), &json_bytes(&doc))?;

    if !ranges.objectives.is_empty() {
        let front: Vec<_> = sweep::pareto_front(&reports, &ranges.objectives)?
            .into_iter()
            .cloned()
            .collect();
        let mut buf = with_provenance("sweep", &loaded.hash);
        export::write_reports(&mut buf, &front)?;
        emit(Some(&sidecar(&a.out, ".pareto.csv")), &buf)?;
    }
    Ok(())
}

fn analyze(a: AnalyzeArgs) -> CmdResult {
    let cfg = load_mechanism(&a.config)?;
    let file = fs::File::open(&a.log)
        .map_err(|e| Failure::Ingest(format!("{}: {e}", a.log.display())))?;
    let log = analysis::parse_log(file).map_err(|e| match e {
        LogError::Malformed { .. } | LogError::Empty | LogError::Io(_) => {
            Failure::Ingest(format!("{}: {e}", a.log.display()))
        }
    })?;
    let spec = &cfg.value.tum;
    let offset = analysis::fit_constant_offset(&log, spec, a.load_n)?;
    let rows = analysis::compare_jacobian(&log, spec, a.load_n, offset)?;
    let max_rel = rows.iter().map(|r| r.rel_error).fold(0.0, f64::max);

    let mut buf = with_provenance("analyze", &cfg.hash);
    export::write_jacobian_comparison(&mut buf, &rows)?;
    emit(Some(&a.out), &buf)?;
    let doc = json!({
        "provenance": provenance_line("analyze", &cfg.hash),
        "load_force_N": a.load_n,
        "samples": rows.len(),
        "fitted_offset_Nmm": offset,
        "offset_removed_before_comparison": true,
        "max_rel_error": max_rel,
    });
    emit(Some(&sidecar(&a.out, ".summary.json")), &json_bytes(&doc))
}
