//! Friction generator between gripper body and frame.

use serde::{Deserialize, Serialize};

use crate::error::{MechError, MechResult};
use crate::tum::{self, TumSpec};

/// One measured spacer setting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationRow {
    pub spacer_thickness: f64,
    pub tau_static: f64,
    pub tau_kinetic: f64,
}

/// Static and kinetic torque thresholds of the compressed O-ring coupling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrictionGenerator {
    pub tau_static: f64,
    pub tau_kinetic: f64,
    #[serde(default)]
    pub calibration: Vec<CalibrationRow>,
}

impl FrictionGenerator {
    pub fn validate(&self) -> MechResult<()> {
        check_thresholds(self.tau_static, self.tau_kinetic)?;
        for row in &self.calibration {
            check_thresholds(row.tau_static, row.tau_kinetic)?;
            if !(row.spacer_thickness.is_finite() && row.spacer_thickness > 0.0) {
                return Err(MechError::invalid("spacer thickness must be positive"));
            }
        }
        for w in self.calibration.windows(2) {
            if w[1].spacer_thickness <= w[0].spacer_thickness {
                return Err(MechError::invalid(
                    "calibration rows must be strictly ordered by spacer thickness",
                ));
            }
            if w[1].tau_static > w[0].tau_static || w[1].tau_kinetic > w[0].tau_kinetic {
                return Err(MechError::invalid(
                    "friction thresholds must not increase with spacer thickness",
                ));
            }
        }
        Ok(())
    }

    /// Copy of this generator with thresholds set from the spacer table.
    pub fn with_spacer(&self, thickness: f64) -> MechResult<FrictionGenerator> {
        let (tau_static, tau_kinetic) = friction_from_spacer(self, thickness)?;
        Ok(FrictionGenerator {
            tau_static,
            tau_kinetic,
            calibration: self.calibration.clone(),
        })
    }
}

fn check_thresholds(tau_static: f64, tau_kinetic: f64) -> MechResult<()> {
    if !(tau_static.is_finite() && tau_kinetic.is_finite() && tau_kinetic >= 0.0) {
        return Err(MechError::invalid("friction thresholds must be finite and nonnegative"));
    }
    if tau_kinetic > tau_static {
        return Err(MechError::invalid(format!(
            "kinetic threshold {tau_kinetic} exceeds static threshold {tau_static}"
        )));
    }
    Ok(())
}

/// Piecewise-linear lookup of `(τ_static, τ_kinetic)` for a spacer thickness.
///
/// Exact at the table knots; no extrapolation.
pub fn friction_from_spacer(gen: &FrictionGenerator, thickness: f64) -> MechResult<(f64, f64)> {
    let table = &gen.calibration;
    let (first, last) = match (table.first(), table.last()) {
        (Some(f), Some(l)) => (f, l),
        _ => {
            return Err(MechError::domain("friction generator has no calibration table"));
        }
    };
    if !(thickness >= first.spacer_thickness && thickness <= last.spacer_thickness) {
        return Err(MechError::OutOfRange {
            what: "spacer thickness",
            value: thickness,
            min: first.spacer_thickness,
            max: last.spacer_thickness,
        });
    }
    if let Some(row) = table.iter().find(|r| r.spacer_thickness == thickness) {
        return Ok((row.tau_static, row.tau_kinetic));
    }
    let upper = table
        .iter()
        .position(|r| r.spacer_thickness > thickness)
        .expect("thickness is inside the table range");
    let (lo, hi) = (&table[upper - 1], &table[upper]);
    let f = (thickness - lo.spacer_thickness) / (hi.spacer_thickness - lo.spacer_thickness);
    Ok((
        lo.tau_static + f * (hi.tau_static - lo.tau_static),
        lo.tau_kinetic + f * (hi.tau_kinetic - lo.tau_kinetic),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GraspCheck {
    pub success: bool,
    pub max_elastic_torque: f64,
    /// `τ_static − max elastic torque`; positive when the grasp closes before slip.
    pub margin: f64,
}

/// The gripper closes fully before slipping iff static friction strictly
/// exceeds the largest elastic holding torque over the stroke.
pub fn grasp_success(tum: &TumSpec, gen: &FrictionGenerator) -> MechResult<GraspCheck> {
    let (_, max_elastic) = tum::max_holding_torque(tum)?;
    Ok(GraspCheck {
        success: gen.tau_static > max_elastic,
        max_elastic_torque: max_elastic,
        margin: gen.tau_static - max_elastic,
    })
}
