//! CSV writers and the provenance line shared by every output file.
//!
//! Floats are written with 17 significant digits in scientific notation so
//! the text round-trips to the same `f64` bits. Lines end in `\n`.

use std::io::{self, Write};

use sha2::{Digest, Sha256};

use crate::error::MechResult;
use crate::linkage::{self, LinkageSpec};
use crate::sim::SimState;
use crate::sweep::DesignReport;
use crate::tum::{self, TumSpec};

pub const TOOL_NAME: &str = "spine-mech";

pub const TUM_CURVE_HEADER: &str =
    "theta_rad,contraction_mm,jacobian_mm_per_rad,Fs_single_N,Fs_total_N,tau_s_Nmm";
pub const LINKAGE_CURVE_HEADER: &str = "X_mm,theta1_rad,theta2_rad,Jg_rad_per_mm";
pub const TRACE_HEADER: &str = "t_s,theta_input_rad,theta_twist_rad,theta_body_rad,X_mm,theta2_rad,tau_transmitted_Nmm,grasp_torque_Nmm,phase";
pub const JACOBIAN_HEADER: &str = "theta_rad,J_exp_mm_per_rad,J_analytic_mm_per_rad,rel_error";
pub const REPORT_HEADER: &str = "index,radius_R,strip_length_L,n_strips,strip_width_w1,top_plate_thickness_w2,bottom_plate_thickness_w3,link_R1,link_R2,offset_a,offset_b,offset_c,constraint_pass,margin_mm,stroke_mm,finger_range_deg,required_holding_torque_Nmm,grasp_torque_at_reference_input_Nmm,feasibility_failure";

/// Full-precision float formatting.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

/// Hex SHA-256 of the configuration bytes, truncated to 16 characters.
pub fn config_hash(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    hex::encode(&digest[..8])
}

/// `# spine-mech <version> <command> <config hash>`
pub fn provenance_line(command: &str, config_hash: &str) -> String {
    format!("# {TOOL_NAME} {} {command} {config_hash}", env!("CARGO_PKG_VERSION"))
}

/// One row per twist sample.
pub fn write_tum_curve<W: Write>(out: &mut W, spec: &TumSpec, thetas: &[f64]) -> MechResult<()> {
    let mut rows = Vec::with_capacity(thetas.len());
    for &theta in thetas {
        let fs = tum::strip_axial_force(spec, theta)?;
        rows.push(format!(
            "{},{},{},{},{},{}",
            fmt_f64(theta),
            fmt_f64(tum::contraction(spec, theta)?),
            fmt_f64(tum::jacobian(spec, theta)?),
            fmt_f64(fs),
            fmt_f64(tum::total_elastic_force(spec, theta)?),
            fmt_f64(tum::elastic_torque(spec, theta)?),
        ));
    }
    write_block(out, TUM_CURVE_HEADER, &rows).map_err(io_err)
}

/// Linkage configuration sampled uniformly in contraction from 0 to `x_end`.
pub fn write_linkage_curve<W: Write>(
    out: &mut W,
    spec: &LinkageSpec,
    x_end: f64,
    samples: usize,
) -> MechResult<()> {
    let trace = linkage::trace_stroke(spec, x_end, samples, 0.05)?;
    let rows: Vec<String> = trace
        .iter()
        .map(|s| {
            format!(
                "{},{},{},{}",
                fmt_f64(s.state.contraction),
                fmt_f64(s.state.theta1),
                fmt_f64(s.state.theta2),
                fmt_f64(s.finger_jacobian)
            )
        })
        .collect();
    write_block(out, LINKAGE_CURVE_HEADER, &rows).map_err(io_err)
}

pub fn write_trace<W: Write>(out: &mut W, states: &[SimState]) -> io::Result<()> {
    let rows: Vec<String> = states
        .iter()
        .map(|s| {
            format!(
                "{},{},{},{},{},{},{},{},{}",
                fmt_f64(s.t),
                fmt_f64(s.theta_input),
                fmt_f64(s.theta_twist),
                fmt_f64(s.theta_body),
                fmt_f64(s.contraction),
                fmt_f64(s.theta2),
                fmt_f64(s.tau_transmitted),
                fmt_f64(s.grasp_torque),
                s.phase.code()
            )
        })
        .collect();
    write_block(out, TRACE_HEADER, &rows)
}

pub fn write_jacobian_comparison<W: Write>(
    out: &mut W,
    samples: &[crate::analysis::JacobianSample],
) -> io::Result<()> {
    let rows: Vec<String> = samples
        .iter()
        .map(|s| {
            format!(
                "{},{},{},{}",
                fmt_f64(s.theta),
                fmt_f64(s.j_exp),
                fmt_f64(s.j_analytic),
                fmt_f64(s.rel_error)
            )
        })
        .collect();
    write_block(out, JACOBIAN_HEADER, &rows)
}

pub fn write_reports<W: Write>(out: &mut W, reports: &[DesignReport]) -> io::Result<()> {
    let rows: Vec<String> = reports
        .iter()
        .map(|r| {
            let t = &r.tum;
            let l = &r.linkage;
            let failure = r
                .feasibility_failure
                .as_deref()
                .map(|s| format!("\"{}\"", s.replace('"', "'")))
                .unwrap_or_default();
            format!(
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                r.index,
                fmt_f64(t.radius),
                fmt_f64(t.strip_length),
                t.n_strips,
                fmt_f64(t.strip_width),
                fmt_f64(t.top_plate_thickness),
                fmt_f64(t.bottom_plate_thickness),
                fmt_f64(l.link_r1),
                fmt_f64(l.link_r2),
                fmt_f64(l.offset_a),
                fmt_f64(l.offset_b),
                fmt_f64(l.offset_c),
                r.constraint_pass,
                fmt_f64(r.margin_mm),
                fmt_opt(r.stroke_mm),
                fmt_opt(r.finger_range_deg),
                fmt_opt(r.required_holding_torque),
                fmt_opt(r.grasp_torque_at_reference_input),
                failure
            )
        })
        .collect();
    write_block(out, REPORT_HEADER, &rows)
}

fn write_block<W: Write>(out: &mut W, header: &str, rows: &[String]) -> io::Result<()> {
    out.write_all(header.as_bytes())?;
    out.write_all(b"\n")?;
    for row in rows {
        out.write_all(row.as_bytes())?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

fn io_err(e: io::Error) -> crate::error::MechError {
    crate::error::MechError::Config { what: format!("write failed: {e}") }
}
