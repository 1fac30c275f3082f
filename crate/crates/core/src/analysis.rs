//! Experimental-Jacobian estimation from logged `(θ, τ_in)` samples taken
//! under a constant axial load.

use std::io::Read;

use serde::Serialize;

use crate::error::{MechError, MechResult};
use crate::tum::{self, TumSpec};

/// One logged sample: twist in rad, measured input torque in N·mm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogSample {
    pub theta: f64,
    pub tau_in: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JacobianSample {
    pub theta: f64,
    pub j_exp: f64,
    pub j_analytic: f64,
    /// Relative error, or absolute error where the analytic value is zero.
    pub rel_error: f64,
}

fn check_load(load_force: f64) -> MechResult<()> {
    if load_force == 0.0 {
        return Err(MechError::DivisionByZero { what: "load_force" });
    }
    if !(load_force.is_finite() && load_force > 0.0) {
        return Err(MechError::domain(format!("load force must be positive, got {load_force}")));
    }
    Ok(())
}

/// `J_exp = (τ_in − τ_s(θ)) / F_load` for every sample.
pub fn empirical_jacobian(
    log: &[LogSample],
    tspec: &TumSpec,
    load_force: f64,
) -> MechResult<Vec<(f64, f64)>> {
    check_load(load_force)?;
    log.iter()
        .map(|s| {
            let tau_s = tum::elastic_torque(tspec, s.theta)?;
            Ok((s.theta, (s.tau_in - tau_s) / load_force))
        })
        .collect()
}

/// Empirical Jacobian next to the analytic one, with per-sample error.
pub fn compare_jacobian(
    log: &[LogSample],
    tspec: &TumSpec,
    load_force: f64,
    torque_offset: f64,
) -> MechResult<Vec<JacobianSample>> {
    let shifted: Vec<LogSample> = log
        .iter()
        .map(|s| LogSample { theta: s.theta, tau_in: s.tau_in - torque_offset })
        .collect();
    empirical_jacobian(&shifted, tspec, load_force)?
        .into_iter()
        .map(|(theta, j_exp)| {
            let j_analytic = tum::jacobian(tspec, theta)?;
            let err = (j_exp - j_analytic).abs();
            let rel_error = if j_analytic == 0.0 { err } else { err / j_analytic.abs() };
            Ok(JacobianSample { theta, j_exp, j_analytic, rel_error })
        })
        .collect()
}

/// Least-squares constant torque offset between the log and the forward model
/// `τ_in = τ_s(θ) + J(θ)·F_load + τ₀`.
pub fn fit_constant_offset(log: &[LogSample], tspec: &TumSpec, load_force: f64) -> MechResult<f64> {
    check_load(load_force)?;
    if log.is_empty() {
        return Err(MechError::domain("cannot fit an offset to an empty log"));
    }
    let mut sum = 0.0;
    for s in log {
        let model = tum::elastic_torque(tspec, s.theta)? + tum::jacobian(tspec, s.theta)? * load_force;
        sum += s.tau_in - model;
    }
    Ok(sum / log.len() as f64)
}

/// Torque the forward model predicts at `theta` under `load_force`.
pub fn forward_torque(tspec: &TumSpec, theta: f64, load_force: f64) -> MechResult<f64> {
    Ok(tum::elastic_torque(tspec, theta)? + tum::jacobian(tspec, theta)? * load_force)
}

/// Problems found while reading a log file.
#[derive(Debug, thiserror::Error)]
pub enum LogError {
    #[error("row {row}: {what}")]
    Malformed { row: usize, what: String },
    #[error("log contains no samples")]
    Empty,
    #[error("failed to read log: {0}")]
    Io(#[from] std::io::Error),
}

/// Parses a `theta_rad,tau_in_Nmm` CSV. A non-numeric first row is taken as
/// a header; lines starting with `#` are skipped. Row numbers are 1-based
/// physical line numbers.
pub fn parse_log<R: Read>(reader: R) -> Result<Vec<LogSample>, LogError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let mut out = Vec::new();
    let mut first = true;
    for record in rdr.records() {
        let record = record.map_err(|e| LogError::Malformed {
            row: e.position().map_or(0, |p| p.line() as usize),
            what: e.to_string(),
        })?;
        let row = record.position().map_or(0, |p| p.line() as usize);
        if record.iter().all(str::is_empty) {
            continue;
        }
        let is_header = first && record.get(0).is_some_and(|f| f.parse::<f64>().is_err());
        first = false;
        if is_header {
            continue;
        }
        if record.len() != 2 {
            return Err(LogError::Malformed {
                row,
                what: format!("expected 2 fields, found {}", record.len()),
            });
        }
        let parse = |i: usize, name: &str| -> Result<f64, LogError> {
            let field = &record[i];
            match field.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(LogError::Malformed {
                    row,
                    what: format!("{name} is not a finite number: {field:?}"),
                }),
            }
        };
        out.push(LogSample {
            theta: parse(0, "theta_rad")?,
            tau_in: parse(1, "tau_in_Nmm")?,
        });
    }
    if out.is_empty() {
        return Err(LogError::Empty);
    }
    Ok(out)
}
