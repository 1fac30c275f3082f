//! Error types shared by all model modules.

use thiserror::Error;

pub type MechResult<T> = Result<T, MechError>;

/// Failures raised by the mechanism models.
///
/// Every variant carries enough numeric context to diagnose the call that
/// produced it. None of them are used for control flow inside the models.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum MechError {
    /// A parameter set violates a structural invariant.
    #[error("invalid parameters: {what}")]
    InvalidSpec { what: String },

    /// A geometric quantity falls outside the domain of the formula using it.
    #[error("domain error: {what}")]
    Domain { what: String },

    /// The strip twist reached the kinematic singularity `R·|θ| = L`.
    #[error("kinematic singularity: R·|θ| = {arc:.6} mm must stay below L = {length:.6} mm (θ = {theta:.6} rad)")]
    Singularity { theta: f64, arc: f64, length: f64 },

    /// A requested contraction is outside `0 ≤ X < L`.
    #[error("contraction {contraction:.6} mm is outside the stroke [0, {length:.6}) mm")]
    OutOfStroke { contraction: f64, length: f64 },

    /// The twist-to-contraction ratio vanishes, so no axial force can be transmitted.
    #[error("transmission singular at θ = {theta:.3e} rad (|θ| must be ≥ {floor:.3e} rad)")]
    TransmissionSingular { theta: f64, floor: f64 },

    /// The loop-closure equations have no real root at this contraction.
    #[error("no real linkage configuration at X = {contraction:.6} mm: target distance {distance:.6} mm outside reach [{min_reach:.6}, {max_reach:.6}] mm")]
    NoRealSolution {
        contraction: f64,
        distance: f64,
        min_reach: f64,
        max_reach: f64,
    },

    /// Newton iteration stopped before meeting the residual tolerance.
    #[error("loop closure did not converge at X = {contraction:.6} mm after {iterations} iterations (residual {residual:.3e} mm)")]
    NonConvergence {
        contraction: f64,
        iterations: usize,
        residual: f64,
    },

    /// The gripper and finger links are aligned (dead point).
    #[error("linkage dead point: |sin(θ₂ − θ₁)| = {sine:.3e} at θ₁ = {theta1:.6}, θ₂ = {theta2:.6}")]
    LinkageSingular { theta1: f64, theta2: f64, sine: f64 },

    /// A lookup was requested outside the calibrated range.
    #[error("{what} = {value} outside calibrated range [{min}, {max}]")]
    OutOfRange {
        what: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },

    /// A divisor that must be nonzero was zero.
    #[error("division by zero: {what}")]
    DivisionByZero { what: &'static str },

    /// Unknown field name or malformed run option.
    #[error("configuration error: {what}")]
    Config { what: String },
}

impl MechError {
    pub(crate) fn invalid(what: impl Into<String>) -> Self {
        MechError::InvalidSpec { what: what.into() }
    }

    pub(crate) fn domain(what: impl Into<String>) -> Self {
        MechError::Domain { what: what.into() }
    }

    /// True for errors caused by bad input files or options rather than model limits.
    pub fn is_config(&self) -> bool {
        matches!(self, MechError::InvalidSpec { .. } | MechError::Config { .. })
    }
}
