//! Slider-crank gripper linkage driven by the TUM contraction.
//!
//! The loop closes through the gripper link `R₁` (angle `θ₁`), the finger
//! link `R₂` (angle `θ₂`) and the slider, whose position is `b + L − X`
//! along the axis and `a − c` across it. Both angles are measured from the
//! slider axis, counterclockwise positive.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{MechError, MechResult};
use crate::tum::{self, TumSpec};

/// Loop-closure residual accepted for any emitted state, in mm.
pub const RESIDUAL_TOLERANCE: f64 = 1e-9;
/// Newton stops early once the residual drops below this.
const RESIDUAL_TARGET: f64 = 1e-13;
const MAX_ITERATIONS: usize = 50;
const MAX_HALVINGS: usize = 20;
/// `|sin(θ₂ − θ₁)|` below which the linkage is treated as a dead point.
pub const DEAD_POINT_SINE: f64 = 1e-9;

/// Which of the two mirror assemblies the solver follows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Branch {
    /// Finger angle in `(0, π)`, elbow with `sin(θ₂ − θ₁) > 0` on ties.
    #[default]
    OpenForward,
    /// The reflected assembly, `sin(θ₂ − θ₁) < 0`.
    Mirror,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkageSpec {
    pub offset_a: f64,
    pub offset_b: f64,
    pub offset_c: f64,
    #[serde(rename = "link_R1")]
    pub link_r1: f64,
    #[serde(rename = "link_R2")]
    pub link_r2: f64,
    #[serde(rename = "tum_length_L")]
    pub tum_length: f64,
    #[serde(default)]
    pub branch: Branch,
}

impl LinkageSpec {
    /// Checks positivity and that the linkage closes at `X = 0`.
    pub fn validate(&self) -> MechResult<()> {
        let lengths = [
            ("offset_a", self.offset_a),
            ("offset_b", self.offset_b),
            ("offset_c", self.offset_c),
            ("link_R1", self.link_r1),
            ("link_R2", self.link_r2),
            ("tum_length_L", self.tum_length),
        ];
        for (name, v) in lengths {
            if !(v.is_finite() && v > 0.0) {
                return Err(MechError::invalid(format!("{name} must be a positive length, got {v}")));
            }
        }
        solve_configuration(self, 0.0, None).map_err(|e| {
            MechError::invalid(format!("linkage has no configuration at X = 0: {e}"))
        })?;
        Ok(())
    }

    /// Slider target point `(b + L − X, a − c)` that the two links must reach.
    fn target(&self, x: f64) -> (f64, f64) {
        (
            self.offset_b + self.tum_length - x,
            self.offset_a - self.offset_c,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinkageState {
    pub contraction: f64,
    pub theta1: f64,
    pub theta2: f64,
    pub residual: (f64, f64),
}

impl LinkageState {
    pub fn max_residual(&self) -> f64 {
        self.residual.0.abs().max(self.residual.1.abs())
    }

    fn elbow_sine(&self) -> f64 {
        (self.theta2 - self.theta1).sin()
    }
}

fn wrap_angle(a: f64) -> f64 {
    let w = (a + PI).rem_euclid(2.0 * PI) - PI;
    if w == -PI {
        PI
    } else {
        w
    }
}

/// Left-hand sides of the two scalar loop-closure equations.
pub fn loop_residual(spec: &LinkageSpec, theta1: f64, theta2: f64, x: f64) -> (f64, f64) {
    let along = spec.link_r1 * theta1.cos() + spec.link_r2 * theta2.cos() - spec.offset_b
        - spec.tum_length
        + x;
    let across =
        spec.link_r1 * theta1.sin() + spec.link_r2 * theta2.sin() - spec.offset_a + spec.offset_c;
    (along, across)
}

fn norm(r: (f64, f64)) -> f64 {
    r.0.hypot(r.1)
}

/// Closed-form two-link roots used to seed Newton; one per elbow sign.
fn analytic_seeds(spec: &LinkageSpec, x: f64) -> MechResult<[(f64, f64); 2]> {
    let (px, py) = spec.target(x);
    let distance = px.hypot(py);
    let (r1, r2) = (spec.link_r1, spec.link_r2);
    let min_reach = (r1 - r2).abs();
    let max_reach = r1 + r2;
    if !x.is_finite() || distance > max_reach || distance < min_reach || distance == 0.0 {
        return Err(MechError::NoRealSolution {
            contraction: x,
            distance,
            min_reach,
            max_reach,
        });
    }
    let heading = py.atan2(px);
    let cos_gamma = ((r1 * r1 + distance * distance - r2 * r2) / (2.0 * r1 * distance)).clamp(-1.0, 1.0);
    let gamma = cos_gamma.acos();
    let seed = |sign: f64| {
        let t1 = heading + sign * gamma;
        let t2 = (py - r1 * t1.sin()).atan2(px - r1 * t1.cos());
        (wrap_angle(t1), wrap_angle(t2))
    };
    Ok([seed(-1.0), seed(1.0)])
}

/// Damped Newton on the 2×2 loop system with analytic partials.
fn newton(spec: &LinkageSpec, x: f64, start: (f64, f64)) -> MechResult<LinkageState> {
    let (r1, r2) = (spec.link_r1, spec.link_r2);
    let (mut t1, mut t2) = start;
    let mut res = loop_residual(spec, t1, t2, x);
    let mut res_norm = norm(res);
    let mut iterations = 0;
    while iterations < MAX_ITERATIONS && res_norm.max(0.0) > RESIDUAL_TARGET {
        iterations += 1;
        // ∂(along, across)/∂(θ₁, θ₂)
        let (s1, c1, s2, c2) = (t1.sin(), t1.cos(), t2.sin(), t2.cos());
        let (a11, a12, a21, a22) = (-r1 * s1, -r2 * s2, r1 * c1, r2 * c2);
        let det = a11 * a22 - a12 * a21;
        if det.abs() < DEAD_POINT_SINE * r1 * r2 {
            break;
        }
        let d1 = -(a22 * res.0 - a12 * res.1) / det;
        let d2 = -(-a21 * res.0 + a11 * res.1) / det;
        let mut scale = 1.0;
        let mut accepted = false;
        for _ in 0..=MAX_HALVINGS {
            let (n1, n2) = (t1 + scale * d1, t2 + scale * d2);
            let trial = loop_residual(spec, n1, n2, x);
            if norm(trial) < res_norm {
                t1 = n1;
                t2 = n2;
                res = trial;
                res_norm = norm(trial);
                accepted = true;
                break;
            }
            scale *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    let state = LinkageState {
        contraction: x,
        theta1: wrap_angle(t1),
        theta2: wrap_angle(t2),
        residual: loop_residual(spec, wrap_angle(t1), wrap_angle(t2), x),
    };
    if state.max_residual() > RESIDUAL_TOLERANCE {
        return Err(MechError::NonConvergence {
            contraction: x,
            iterations,
            residual: state.max_residual(),
        });
    }
    Ok(state)
}

/// Chooses between the two assemblies using the configured branch rule.
fn pick_branch(branch: Branch, seeds: [(f64, f64); 2]) -> (f64, f64) {
    let in_open = |s: &(f64, f64)| s.1 > 0.0 && s.1 < PI;
    let elbow = |s: &(f64, f64)| (s.1 - s.0).sin();
    match branch {
        Branch::OpenForward => match (in_open(&seeds[0]), in_open(&seeds[1])) {
            (true, false) => seeds[0],
            (false, true) => seeds[1],
            _ => {
                if elbow(&seeds[0]) >= elbow(&seeds[1]) {
                    seeds[0]
                } else {
                    seeds[1]
                }
            }
        },
        Branch::Mirror => match (in_open(&seeds[0]), in_open(&seeds[1])) {
            (true, false) => seeds[1],
            (false, true) => seeds[0],
            _ => {
                if elbow(&seeds[0]) < elbow(&seeds[1]) {
                    seeds[0]
                } else {
                    seeds[1]
                }
            }
        },
    }
}

/// Solves the loop for `(θ₁, θ₂)` at contraction `x`.
///
/// With a `guess`, Newton starts there and the result is required to stay on
/// the guess's elbow side; without one `spec.branch` picks the root.
pub fn solve_configuration(
    spec: &LinkageSpec,
    x: f64,
    guess: Option<&LinkageState>,
) -> MechResult<LinkageState> {
    let seeds = analytic_seeds(spec, x)?;
    match guess {
        Some(g) => {
            let side = g.elbow_sine().signum();
            if let Ok(state) = newton(spec, x, (g.theta1, g.theta2)) {
                if state.elbow_sine().signum() == side {
                    return Ok(state);
                }
            }
            // Newton left the guessed assembly; restart from the matching seed.
            let seed = if (seeds[0].1 - seeds[0].0).sin().signum() == side {
                seeds[0]
            } else {
                seeds[1]
            };
            newton(spec, x, seed)
        }
        None => newton(spec, x, pick_branch(spec.branch, seeds)),
    }
}

/// `dθ₂/dX` by implicit differentiation of the loop equations.
pub fn finger_jacobian(spec: &LinkageSpec, state: &LinkageState) -> MechResult<f64> {
    let sine = state.elbow_sine();
    if sine.abs() < DEAD_POINT_SINE {
        return Err(MechError::LinkageSingular {
            theta1: state.theta1,
            theta2: state.theta2,
            sine,
        });
    }
    // [−R₁s₁ −R₂s₂; R₁c₁ R₂c₂]·[θ₁'; θ₂'] = [−1; 0]
    Ok(state.theta1.cos() / (spec.link_r2 * sine))
}

/// Same as [`finger_jacobian`] but also returns `dθ₁/dX`.
pub fn link_rates(spec: &LinkageSpec, state: &LinkageState) -> MechResult<(f64, f64)> {
    let jg = finger_jacobian(spec, state)?;
    let dtheta1 = -state.theta2.cos() / (spec.link_r1 * state.elbow_sine());
    Ok((dtheta1, jg))
}

/// Fingertip torque for input torque `tau_in` at twist `theta`.
pub fn grasp_torque(lspec: &LinkageSpec, tspec: &TumSpec, theta: f64, tau_in: f64) -> MechResult<f64> {
    let force = tum::contraction_force(tspec, theta, tau_in)?;
    let x = tum::contraction(tspec, theta)?;
    let state = solve_configuration(lspec, x, None)?;
    Ok(finger_jacobian(lspec, &state)? * force)
}

/// One row of a linkage sweep over contraction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinkageSample {
    pub state: LinkageState,
    pub finger_jacobian: f64,
}

/// Follows one assembly from `X = 0` to `x_end` by continuation.
///
/// Samples are equally spaced (`n_samples ≥ 2`). Intermediate solves use
/// substeps no longer than `max_step` mm so the branch is never lost.
pub fn trace_stroke(
    spec: &LinkageSpec,
    x_end: f64,
    n_samples: usize,
    max_step: f64,
) -> MechResult<Vec<LinkageSample>> {
    if n_samples < 2 {
        return Err(MechError::domain("linkage trace needs at least 2 samples"));
    }
    let mut prev = solve_configuration(spec, 0.0, None)?;
    let mut out = Vec::with_capacity(n_samples);
    out.push(LinkageSample {
        state: prev,
        finger_jacobian: finger_jacobian(spec, &prev)?,
    });
    let interval = x_end / (n_samples - 1) as f64;
    let substeps = ((interval.abs() / max_step).ceil() as usize).max(1);
    for i in 1..n_samples {
        let x0 = interval * (i - 1) as f64;
        let x1 = if i == n_samples - 1 { x_end } else { interval * i as f64 };
        for k in 1..=substeps {
            let x = if k == substeps {
                x1
            } else {
                x0 + (x1 - x0) * k as f64 / substeps as f64
            };
            prev = solve_configuration(spec, x, Some(&prev))?;
        }
        out.push(LinkageSample {
            state: prev,
            finger_jacobian: finger_jacobian(spec, &prev)?,
        });
    }
    Ok(out)
}

/// Finger travel `θ₂(x_end) − θ₂(0)` along one continuous branch, in radians.
pub fn finger_travel(spec: &LinkageSpec, x_end: f64) -> MechResult<f64> {
    let steps = ((x_end.abs() / 0.25).ceil() as usize).max(1) + 1;
    let trace = trace_stroke(spec, x_end, steps, 0.25)?;
    // Unwrap across ±π so travel is continuous.
    let mut total = 0.0;
    for w in trace.windows(2) {
        total += wrap_angle(w[1].state.theta2 - w[0].state.theta2);
    }
    Ok(total)
}
