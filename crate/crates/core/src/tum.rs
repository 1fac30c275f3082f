//! Closed-form model of the twisted underactuated mechanism (TUM).
//!
//! A bottom plate of radius `R` is twisted by `θ` relative to a top plate;
//! `N` compliant strips of length `L` connect the two. The idealised
//! kinematics match a twisted string actuator, the elastic response comes
//! from each strip buckling as a pinned–pinned Euler column whose chord
//! shortens with twist.
//!
//! Units throughout: mm, rad, N, N·mm. Every quantity that should be
//! independent of the twist direction is computed from `θ²`, `|sin(θ/2)|`
//! or `(Rθ)²` so that it is bit-exactly even in `θ`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{MechError, MechResult};

/// Smallest `|θ|` at which the transmission is treated as invertible.
pub const DEFAULT_THETA_FLOOR: f64 = 1e-3;

/// Fraction of the singular twist `L/R` that bounds the usable stroke.
pub const STROKE_CEILING_FRACTION: f64 = 0.99;

/// Number of intervals used when scanning the stroke for extrema.
const STROKE_SCAN_INTERVALS: usize = 512;

fn default_theta_floor() -> f64 {
    DEFAULT_THETA_FLOOR
}

/// Geometry and material of one TUM.
///
/// `second_moment` is an area moment in mm⁴.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TumSpec {
    #[serde(rename = "radius_R")]
    pub radius: f64,
    #[serde(rename = "strip_length_L")]
    pub strip_length: f64,
    pub n_strips: u32,
    #[serde(rename = "strip_width_w1")]
    pub strip_width: f64,
    #[serde(rename = "top_plate_thickness_w2")]
    pub top_plate_thickness: f64,
    #[serde(rename = "bottom_plate_thickness_w3")]
    pub bottom_plate_thickness: f64,
    #[serde(rename = "youngs_modulus_E")]
    pub youngs_modulus: f64,
    #[serde(rename = "second_moment_I")]
    pub second_moment: f64,
    /// Configured operating limit on the twist, in radians.
    #[serde(rename = "max_rotation_theta_max")]
    pub max_rotation: f64,
    /// Operations that invert the transmission reject `|θ|` below this.
    #[serde(default = "default_theta_floor")]
    pub theta_floor: f64,
}

impl TumSpec {
    pub fn validate(&self) -> MechResult<()> {
        let lengths = [
            ("radius_R", self.radius),
            ("strip_length_L", self.strip_length),
            ("strip_width_w1", self.strip_width),
            ("top_plate_thickness_w2", self.top_plate_thickness),
            ("bottom_plate_thickness_w3", self.bottom_plate_thickness),
        ];
        for (name, v) in lengths {
            if !(v.is_finite() && v > 0.0) {
                return Err(MechError::invalid(format!("{name} must be a positive length, got {v}")));
            }
        }
        if self.n_strips < 1 {
            return Err(MechError::invalid("n_strips must be at least 1"));
        }
        if !(self.youngs_modulus.is_finite() && self.youngs_modulus > 0.0) {
            return Err(MechError::invalid("youngs_modulus_E must be positive"));
        }
        if !(self.second_moment.is_finite() && self.second_moment > 0.0) {
            return Err(MechError::invalid("second_moment_I must be positive"));
        }
        if !(self.max_rotation.is_finite() && self.max_rotation > 0.0) {
            return Err(MechError::invalid("max_rotation_theta_max must be positive"));
        }
        if self.radius * self.max_rotation >= self.strip_length {
            return Err(MechError::invalid(format!(
                "max_rotation_theta_max = {} rad reaches the singularity L/R = {} rad",
                self.max_rotation,
                self.strip_length / self.radius
            )));
        }
        if !(self.theta_floor.is_finite() && self.theta_floor >= 0.0) {
            return Err(MechError::invalid("theta_floor must be nonnegative"));
        }
        Ok(())
    }

    /// Twist at which `R·θ = L`.
    pub fn singular_twist(&self) -> f64 {
        self.strip_length / self.radius
    }

    /// Usable twist: the configured limit, capped just below the singularity.
    pub fn stroke_limit(&self) -> f64 {
        self.max_rotation
            .min(STROKE_CEILING_FRACTION * self.singular_twist())
    }

    fn flexural_rigidity(&self) -> f64 {
        self.youngs_modulus * self.second_moment
    }

    fn check_arc(&self, theta: f64) -> MechResult<f64> {
        let arc = self.radius * theta;
        if !theta.is_finite() || arc.abs() >= self.strip_length {
            return Err(MechError::Singularity {
                theta,
                arc: arc.abs(),
                length: self.strip_length,
            });
        }
        Ok(arc)
    }

    fn plate_stack_ratio(&self, plate_gap: f64) -> MechResult<f64> {
        let stack = self.top_plate_thickness + self.bottom_plate_thickness + plate_gap;
        let ratio = stack / self.strip_length;
        if !(0.0..=1.0).contains(&ratio) {
            return Err(MechError::domain(format!(
                "require 0 ≤ w2 + w3 + d_s ≤ L, got w2 + w3 + d_s = {stack} mm with L = {} mm",
                self.strip_length
            )));
        }
        Ok(ratio)
    }
}

/// Snapshot of every twist-dependent strip quantity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StripState {
    pub theta: f64,
    pub contraction: f64,
    pub chord_shortening: f64,
    pub beta: f64,
    pub buckling_load: f64,
    pub axial_force_single: f64,
}

/// Sampled half-sine deflection of one buckled strip.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeflectionProfile {
    pub amplitude: f64,
    pub half_period_length: f64,
    /// `(s, y)` pairs along the chord, both in mm.
    pub samples: Vec<(f64, f64)>,
}

/// Outcome of the minimum-radius interference check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RadiusCheck {
    pub pass: bool,
    pub min_radius_mm: f64,
    /// `R − R_min`; negative when the strips would interfere.
    pub margin_mm: f64,
}

/// Inclination of each strip relative to the plate for a plate gap `d_s`.
pub fn strip_inclination(spec: &TumSpec, plate_gap: f64) -> MechResult<f64> {
    Ok(spec.plate_stack_ratio(plate_gap)?.asin())
}

/// Distance between adjacent strip joints on the plate.
pub fn inter_strip_distance(spec: &TumSpec, plate_gap: f64) -> MechResult<f64> {
    let ratio = spec.plate_stack_ratio(plate_gap)?;
    Ok(2.0 * PI * spec.radius * ratio / f64::from(spec.n_strips))
}

/// Checks that adjacent strips do not interfere even with the plates touching.
pub fn check_radius_constraint(spec: &TumSpec) -> MechResult<RadiusCheck> {
    let plates = spec.top_plate_thickness + spec.bottom_plate_thickness;
    if plates <= 0.0 {
        return Err(MechError::invalid(
            "w2 + w3 = 0: radius constraint is degenerate",
        ));
    }
    let min_radius =
        spec.strip_width * f64::from(spec.n_strips) * spec.strip_length / (2.0 * PI * plates);
    Ok(RadiusCheck {
        pass: spec.radius >= min_radius,
        min_radius_mm: min_radius,
        margin_mm: spec.radius - min_radius,
    })
}

/// Axial contraction `X(θ) = L − √(L² − (Rθ)²)`.
pub fn contraction(spec: &TumSpec, theta: f64) -> MechResult<f64> {
    let arc = spec.check_arc(theta)?;
    let l = spec.strip_length;
    Ok(l - (l * l - arc * arc).sqrt())
}

/// Nonnegative twist producing contraction `x`.
pub fn rotation_for_contraction(spec: &TumSpec, x: f64) -> MechResult<f64> {
    let l = spec.strip_length;
    if !(x.is_finite() && (0.0..l).contains(&x)) {
        return Err(MechError::OutOfStroke {
            contraction: x,
            length: l,
        });
    }
    let rest = l - x;
    Ok((l * l - rest * rest).max(0.0).sqrt() / spec.radius)
}

/// Twist-to-contraction transmission ratio `dX/dθ` in mm/rad.
pub fn jacobian(spec: &TumSpec, theta: f64) -> MechResult<f64> {
    let arc = spec.check_arc(theta)?;
    let l = spec.strip_length;
    let r2 = spec.radius * spec.radius;
    Ok(r2 * theta / (l * l - arc * arc).sqrt())
}

/// Contraction velocity for a twist rate `theta_dot`.
pub fn contraction_rate(spec: &TumSpec, theta: f64, theta_dot: f64) -> MechResult<f64> {
    Ok(jacobian(spec, theta)? * theta_dot)
}

/// Squared strip chord `(L − ΔS)²` under twist.
fn chord_squared(spec: &TumSpec, theta: f64) -> MechResult<f64> {
    let arc = spec.check_arc(theta)?;
    let l = spec.strip_length;
    let half = (0.5 * theta).sin();
    let chord2 = l * l - arc * arc + 4.0 * spec.radius * spec.radius * half * half;
    if !(chord2 > 0.0) {
        return Err(MechError::domain(format!(
            "strip chord radicand {chord2} is not positive at θ = {theta}"
        )));
    }
    Ok(chord2)
}

/// Shortening `ΔS` of the straight line between a strip's two joints.
pub fn chord_shortening(spec: &TumSpec, theta: f64) -> MechResult<f64> {
    Ok(spec.strip_length - chord_squared(spec, theta)?.sqrt())
}

/// Angle between a strip chord and the mechanism axis.
pub fn beta_angle(spec: &TumSpec, theta: f64) -> MechResult<f64> {
    let x = contraction(spec, theta)?;
    let axial = spec.strip_length - x;
    let tangential = 2.0 * spec.radius * (0.5 * theta).sin().abs();
    Ok((tangential / axial).atan())
}

/// Euler buckling load of one strip over its shortened chord.
pub fn buckling_load(spec: &TumSpec, theta: f64) -> MechResult<f64> {
    let chord = chord_squared(spec, theta)?.sqrt();
    let k = PI / chord;
    Ok(k * k * spec.flexural_rigidity())
}

/// Samples `y(s) = A·sin(π s / (L − ΔS))` on `n_samples` equally spaced points.
pub fn deflection_profile(
    spec: &TumSpec,
    theta: f64,
    amplitude: f64,
    n_samples: usize,
) -> MechResult<DeflectionProfile> {
    if n_samples < 2 {
        return Err(MechError::domain("deflection profile needs at least 2 samples"));
    }
    if !(amplitude.is_finite() && amplitude >= 0.0) {
        return Err(MechError::domain(format!("amplitude must be ≥ 0, got {amplitude}")));
    }
    let half_period = chord_squared(spec, theta)?.sqrt();
    let last = (n_samples - 1) as f64;
    let samples = (0..n_samples)
        .map(|i| {
            let s = if i == n_samples - 1 {
                half_period
            } else {
                half_period * i as f64 / last
            };
            // Pin the far end exactly; sin(π) is not exactly zero in floating point.
            let y = if i == 0 || i == n_samples - 1 {
                0.0
            } else {
                amplitude * (PI * s / half_period).sin()
            };
            (s, y)
        })
        .collect();
    Ok(DeflectionProfile {
        amplitude,
        half_period_length: half_period,
        samples,
    })
}

/// Axial elastic force of one strip: buckling load projected on the axis.
pub fn strip_axial_force(spec: &TumSpec, theta: f64) -> MechResult<f64> {
    Ok(buckling_load(spec, theta)? * beta_angle(spec, theta)?.cos())
}

/// Axial elastic force of all strips.
pub fn total_elastic_force(spec: &TumSpec, theta: f64) -> MechResult<f64> {
    Ok(f64::from(spec.n_strips) * strip_axial_force(spec, theta)?)
}

/// Input torque that holds twist `θ` against the strips with no payload.
///
/// Defined by virtual work as `J(θ)·N·F_s(θ)`; odd in `θ`.
pub fn elastic_torque(spec: &TumSpec, theta: f64) -> MechResult<f64> {
    if theta == 0.0 {
        return Ok(0.0);
    }
    Ok(jacobian(spec, theta)? * total_elastic_force(spec, theta)?)
}

/// Net axial force delivered to the slider for input torque `tau_in`.
pub fn contraction_force(spec: &TumSpec, theta: f64, tau_in: f64) -> MechResult<f64> {
    if !(theta.abs() >= spec.theta_floor) || theta == 0.0 {
        return Err(MechError::TransmissionSingular {
            theta,
            floor: spec.theta_floor,
        });
    }
    let j = jacobian(spec, theta)?;
    Ok(tau_in / j - total_elastic_force(spec, theta)?)
}

/// All strip quantities at one twist.
pub fn strip_state(spec: &TumSpec, theta: f64) -> MechResult<StripState> {
    Ok(StripState {
        theta,
        contraction: contraction(spec, theta)?,
        chord_shortening: chord_shortening(spec, theta)?,
        beta: beta_angle(spec, theta)?,
        buckling_load: buckling_load(spec, theta)?,
        axial_force_single: strip_axial_force(spec, theta)?,
    })
}

/// Largest elastic holding torque over `θ ∈ [0, stroke_limit]`.
///
/// Scans a uniform grid including the endpoint. Returns `(θ at max, torque)`.
pub fn max_holding_torque(spec: &TumSpec) -> MechResult<(f64, f64)> {
    let limit = spec.stroke_limit();
    let mut best = (0.0, 0.0);
    for i in 1..=STROKE_SCAN_INTERVALS {
        let theta = limit * i as f64 / STROKE_SCAN_INTERVALS as f64;
        let tau = elastic_torque(spec, theta)?;
        if tau > best.1 {
            best = (theta, tau);
        }
    }
    Ok(best)
}

/// Comparison between the composed per-strip force and a single-expression
/// closed form for it, whose denominator admits two groupings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClosedFormCrossCheck {
    pub theta: f64,
    /// `P·cos β`, the force used everywhere in this crate.
    pub composed: f64,
    /// Closed form with the `√` over `2R²` only.
    pub split_root: f64,
    /// The same expression with the square root spanning the whole denominator.
    pub full_root: f64,
    /// `|split_root − composed| / |composed|`.
    pub split_root_rel_divergence: f64,
    /// `|full_root − composed| / |composed|`.
    pub full_root_rel_divergence: f64,
}

/// Evaluates both groupings of the closed-form force and reports the gap to
/// the composed route. Nothing else in the crate consumes these values.
pub fn closed_form_cross_check(spec: &TumSpec, theta: f64) -> MechResult<ClosedFormCrossCheck> {
    let composed = strip_axial_force(spec, theta)?;
    let r = spec.radius;
    let l = spec.strip_length;
    let arc = r * theta;
    let half = (0.5 * theta).sin();
    let ei = spec.flexural_rigidity();
    let first = ei * PI * PI / (l * l - arc * arc + 4.0 * r * r * half * half);
    let numerator = r * r * theta.sin();
    let tail = -2.0 * r * r * theta.cos() + l * l - arc * arc;
    let split_root = first * numerator / ((2.0 * r * r).sqrt() + tail);
    let full_root = first * numerator / (2.0 * r * r + tail).sqrt();
    let rel = |v: f64| {
        if composed == 0.0 {
            (v - composed).abs()
        } else {
            ((v - composed) / composed).abs()
        }
    };
    Ok(ClosedFormCrossCheck {
        theta,
        composed,
        split_root,
        full_root,
        split_root_rel_divergence: rel(split_root),
        full_root_rel_divergence: rel(full_root),
    })
}

/// Result of fitting the strip count to a measured holding torque.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StripCountFit {
    pub n_strips: u32,
    pub model_torque: f64,
    pub target_torque: f64,
    /// `model_torque − target_torque`.
    pub residual: f64,
}

/// Picks the integer strip count in `1..=max_strips` whose holding torque at
/// `theta_ref` is closest to `target_torque`. Ties go to the smaller count.
pub fn calibrate_strip_count(
    spec: &TumSpec,
    theta_ref: f64,
    target_torque: f64,
    max_strips: u32,
) -> MechResult<StripCountFit> {
    if max_strips < 1 {
        return Err(MechError::domain("max_strips must be at least 1"));
    }
    let mut single = spec.clone();
    single.n_strips = 1;
    let per_strip = elastic_torque(&single, theta_ref)?;
    let mut best: Option<StripCountFit> = None;
    for n in 1..=max_strips {
        let model = f64::from(n) * per_strip;
        let residual = model - target_torque;
        if best.is_none_or(|b| residual.abs() < b.residual.abs()) {
            best = Some(StripCountFit {
                n_strips: n,
                model_torque: model,
                target_torque,
                residual,
            });
        }
    }
    Ok(best.expect("at least one strip count evaluated"))
}
