//! Quasi-static simulation of the approaching / force-buildup / rotating
//! sequence driven by a constant-speed input shaft.
//!
//! Inertia is ignored. While the transmitted torque stays below the static
//! friction threshold the gripper body is held by the frame and all input
//! rotation twists the TUM. Once it reaches the threshold the body breaks
//! free, the twist freezes and the body follows the input at the kinetic
//! friction level.

use serde::{Deserialize, Serialize};

use crate::error::{MechError, MechResult};
use crate::friction::FrictionGenerator;
use crate::linkage::{self, LinkageSpec, LinkageState};
use crate::tum::{self, TumSpec};

/// Contact spring used by the shipped scenarios, N·mm/rad.
pub const DEFAULT_CONTACT_STIFFNESS: f64 = 5000.0;
pub const DEFAULT_DT: f64 = 1e-3;

fn default_dt() -> f64 {
    DEFAULT_DT
}

/// Everything needed to run one simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub tum: TumSpec,
    pub linkage: LinkageSpec,
    pub friction: FrictionGenerator,
    /// Input shaft speed in rad/s; its sign sets the twist direction.
    pub input_speed: f64,
    /// Finger angle at which the object is touched; `null` means no object.
    pub contact_angle_theta2: Option<f64>,
    pub contact_stiffness: f64,
    pub duration: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
}

impl Scenario {
    pub fn validate(&self) -> MechResult<()> {
        self.tum.validate()?;
        self.linkage.validate()?;
        self.friction.validate()?;
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(MechError::invalid("dt must be positive"));
        }
        if !(self.duration.is_finite() && self.duration >= self.dt) {
            return Err(MechError::invalid("duration must be at least dt"));
        }
        if !(self.input_speed.is_finite() && self.input_speed != 0.0) {
            return Err(MechError::invalid("input_speed must be finite and nonzero"));
        }
        if !(self.contact_stiffness.is_finite() && self.contact_stiffness >= 0.0) {
            return Err(MechError::invalid("contact_stiffness must be nonnegative"));
        }
        if let Some(c) = self.contact_angle_theta2 {
            if !c.is_finite() {
                return Err(MechError::invalid("contact_angle_theta2 must be finite or null"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    Approaching,
    ForceBuildup,
    Rotating,
}

impl Phase {
    pub fn code(self) -> char {
        match self {
            Phase::Approaching => 'A',
            Phase::ForceBuildup => 'F',
            Phase::Rotating => 'R',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimState {
    pub t: f64,
    pub theta_input: f64,
    pub theta_twist: f64,
    pub theta_body: f64,
    pub contraction: f64,
    pub theta1: f64,
    pub theta2: f64,
    pub tau_transmitted: f64,
    pub grasp_torque: f64,
    pub phase: Phase,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    /// Ran for the full duration.
    Completed,
    /// The twist reached the end of its stroke without the body slipping.
    ClosedWithoutSlip,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub state: SimState,
    pub terminal: Option<Outcome>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceSummary {
    /// Largest `|τ_transmitted|` over the trace.
    pub peak_torque: f64,
    /// Mean `|τ_transmitted|` over rotating samples after breakaway (raw kinetic level).
    pub plateau_torque: Option<f64>,
    /// The plateau plus the elastic torque held in the frozen twist.
    pub plateau_with_elastic: Option<f64>,
    pub frozen_elastic_torque: Option<f64>,
    pub slip_twist: Option<f64>,
    pub contact_time: Option<f64>,
    pub slip_time: Option<f64>,
    pub grasp_success: bool,
    pub outcome: Outcome,
    pub phases: Vec<Phase>,
    pub final_grasp_torque: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimTrace {
    pub states: Vec<SimState>,
    pub summary: TraceSummary,
}

/// Mechanism quantities at one twist with the body held.
struct Loaded {
    linkage: LinkageState,
    contact: f64,
    torque: f64,
}

fn load_at(sc: &Scenario, twist: f64, dir: f64, guess: &LinkageState) -> MechResult<Loaded> {
    let x = tum::contraction(&sc.tum, twist)?;
    let linkage = linkage::solve_configuration(&sc.linkage, x, Some(guess))?;
    let elastic = tum::elastic_torque(&sc.tum, twist)?;
    let contact = match sc.contact_angle_theta2 {
        Some(angle) => {
            let closing = linkage::finger_jacobian(&sc.linkage, &linkage)?.signum();
            let penetration = (linkage.theta2 - angle) * closing;
            sc.contact_stiffness * penetration.max(0.0)
        }
        None => 0.0,
    };
    Ok(Loaded {
        linkage,
        contact,
        torque: elastic + dir * contact,
    })
}

/// Fingertip torque while the twist is held at `twist`, composed from the
/// TUM force balance and the finger Jacobian.
fn grasp_torque_at(sc: &Scenario, twist: f64, loaded: &Loaded) -> MechResult<f64> {
    if loaded.contact == 0.0 {
        return Ok(0.0);
    }
    let force = tum::contraction_force(&sc.tum, twist, loaded.torque)?;
    Ok(linkage::finger_jacobian(&sc.linkage, &loaded.linkage)? * force)
}

/// State at `t = 0`: untwisted, body at rest, gripper open.
pub fn init(sc: &Scenario) -> MechResult<SimState> {
    let dir = sc.input_speed.signum();
    let open = linkage::solve_configuration(&sc.linkage, 0.0, None)?;
    let loaded = load_at(sc, 0.0, dir, &open)?;
    Ok(SimState {
        t: 0.0,
        theta_input: 0.0,
        theta_twist: 0.0,
        theta_body: 0.0,
        contraction: 0.0,
        theta1: loaded.linkage.theta1,
        theta2: loaded.linkage.theta2,
        tau_transmitted: loaded.torque,
        grasp_torque: 0.0,
        phase: if loaded.contact > 0.0 {
            Phase::ForceBuildup
        } else {
            Phase::Approaching
        },
    })
}

fn guess_of(state: &SimState) -> LinkageState {
    LinkageState {
        contraction: state.contraction,
        theta1: state.theta1,
        theta2: state.theta2,
        residual: (0.0, 0.0),
    }
}

/// Twist magnitude in `[lo, hi]` at which `|τ|` reaches `tau_static`.
fn find_slip(sc: &Scenario, lo: f64, hi: f64, dir: f64, guess: &LinkageState) -> MechResult<(f64, Loaded)> {
    let (mut lo, mut hi) = (lo, hi);
    let mut hi_load = load_at(sc, dir * hi, dir, guess)?;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let l = load_at(sc, dir * mid, dir, guess)?;
        if l.torque.abs() >= sc.friction.tau_static {
            hi = mid;
            hi_load = l;
        } else {
            lo = mid;
        }
    }
    Ok((dir * hi, hi_load))
}

/// Advances the quasi-static state by one `dt`.
pub fn step(sc: &Scenario, state: &SimState) -> MechResult<StepOutcome> {
    let d = sc.input_speed * sc.dt;
    let t = state.t + sc.dt;
    let theta_input = state.theta_input + d;
    if d == 0.0 {
        return Ok(StepOutcome {
            state: SimState { t, ..*state },
            terminal: None,
        });
    }
    let dir = d.signum();

    if state.phase == Phase::Rotating {
        return Ok(StepOutcome {
            state: SimState {
                t,
                theta_input,
                theta_body: theta_input - state.theta_twist,
                tau_transmitted: dir * sc.friction.tau_kinetic,
                ..*state
            },
            terminal: None,
        });
    }

    let limit = sc.tum.stroke_limit();
    let prev_mag = state.theta_twist.abs();
    let trial_mag = (state.theta_twist + d).abs();
    let overrun = trial_mag >= limit;
    let end_mag = if overrun { limit } else { trial_mag };
    let guess = guess_of(state);
    let loaded = load_at(sc, dir * end_mag, dir, &guess)?;

    if loaded.torque.abs() >= sc.friction.tau_static {
        let (slip, at_slip) = find_slip(sc, prev_mag, end_mag, dir, &guess)?;
        let breakaway = dir * sc.friction.tau_static;
        let at_slip = Loaded { torque: breakaway, ..at_slip };
        let grasp_torque = grasp_torque_at(sc, slip, &at_slip)?;
        return Ok(StepOutcome {
            state: SimState {
                t,
                theta_input,
                theta_twist: slip,
                theta_body: theta_input - slip,
                contraction: at_slip.linkage.contraction,
                theta1: at_slip.linkage.theta1,
                theta2: at_slip.linkage.theta2,
                tau_transmitted: breakaway,
                grasp_torque,
                phase: Phase::Rotating,
            },
            terminal: None,
        });
    }

    let twist = dir * end_mag;
    let phase = if loaded.contact > 0.0 || state.phase == Phase::ForceBuildup {
        Phase::ForceBuildup
    } else {
        Phase::Approaching
    };
    let grasp_torque = grasp_torque_at(sc, twist, &loaded)?;
    let (t, theta_input) = if overrun {
        // Only the part of the step that reaches the stroke end is taken.
        let fraction = (end_mag - prev_mag) / d.abs();
        (state.t + fraction * sc.dt, state.theta_input + (twist - state.theta_twist))
    } else {
        (t, theta_input)
    };
    Ok(StepOutcome {
        state: SimState {
            t,
            theta_input,
            theta_twist: twist,
            theta_body: state.theta_body,
            contraction: loaded.linkage.contraction,
            theta1: loaded.linkage.theta1,
            theta2: loaded.linkage.theta2,
            tau_transmitted: loaded.torque,
            grasp_torque,
            phase,
        },
        terminal: overrun.then_some(Outcome::ClosedWithoutSlip),
    })
}

/// Runs `init` and then `step` until `duration` or a terminal outcome.
pub fn simulate(sc: &Scenario) -> MechResult<SimTrace> {
    sc.validate()?;
    let n_steps = ((sc.duration / sc.dt).round() as usize).max(1);
    let mut states = Vec::with_capacity(n_steps + 1);
    let mut current = init(sc)?;
    states.push(current);
    let mut outcome = Outcome::Completed;
    for _ in 0..n_steps {
        let next = step(sc, &current)?;
        current = next.state;
        states.push(current);
        if let Some(o) = next.terminal {
            outcome = o;
            break;
        }
    }
    let summary = summarize(sc, &states, outcome)?;
    Ok(SimTrace { states, summary })
}

fn summarize(sc: &Scenario, states: &[SimState], outcome: Outcome) -> MechResult<TraceSummary> {
    let peak_torque = states
        .iter()
        .map(|s| s.tau_transmitted.abs())
        .fold(0.0, f64::max);
    let mut phases: Vec<Phase> = Vec::new();
    for s in states {
        if phases.last() != Some(&s.phase) {
            phases.push(s.phase);
        }
    }
    let contact_time = states
        .iter()
        .find(|s| s.phase == Phase::ForceBuildup)
        .map(|s| s.t);
    let slip_index = states.iter().position(|s| s.phase == Phase::Rotating);
    let slip_time = slip_index.map(|i| states[i].t);
    let slip_twist = slip_index.map(|i| states[i].theta_twist);
    let after: Vec<f64> = match slip_index {
        Some(i) => states[i + 1..]
            .iter()
            .map(|s| s.tau_transmitted.abs())
            .collect(),
        None => Vec::new(),
    };
    let plateau_torque = if after.is_empty() {
        None
    } else {
        Some(after.iter().sum::<f64>() / after.len() as f64)
    };
    let frozen_elastic_torque = match slip_twist {
        Some(tw) => Some(tum::elastic_torque(&sc.tum, tw)?.abs()),
        None => None,
    };
    let plateau_with_elastic = plateau_torque
        .zip(frozen_elastic_torque)
        .map(|(p, e)| p + e);
    let grasp_success = match slip_index {
        Some(i) => states[..i].iter().any(|s| s.phase == Phase::ForceBuildup),
        None => outcome == Outcome::ClosedWithoutSlip,
    };
    Ok(TraceSummary {
        peak_torque,
        plateau_torque,
        plateau_with_elastic,
        frozen_elastic_torque,
        slip_twist,
        contact_time,
        slip_time,
        grasp_success,
        outcome,
        phases,
        final_grasp_torque: states.last().map_or(0.0, |s| s.grasp_torque),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::friction::CalibrationRow;

    fn scenario(tau_static: f64, tau_kinetic: f64) -> Scenario {
        let mut tum = crate::tum::tests::spec();
        tum.n_strips = 1;
        Scenario {
            tum,
            linkage: crate::linkage::tests::table_spec(),
            friction: FrictionGenerator {
                tau_static,
                tau_kinetic,
                calibration: vec![CalibrationRow {
                    spacer_thickness: 0.45,
                    tau_static: 700.0,
                    tau_kinetic: 560.0,
                }],
            },
            input_speed: 2.0 * std::f64::consts::PI,
            contact_angle_theta2: Some(100f64.to_radians()),
            contact_stiffness: DEFAULT_CONTACT_STIFFNESS,
            duration: 1.0,
            dt: 1e-3,
        }
    }

    #[test]
    fn zero_speed_is_a_fixed_point() {
        let mut sc = scenario(440.0, 340.0);
        let s0 = init(&sc).unwrap();
        sc.input_speed = 0.0;
        let s1 = step(&sc, &s0).unwrap().state;
        assert_eq!(SimState { t: s0.t, ..s1 }, s0);
    }

    #[test]
    fn duration_equal_dt_gives_two_states() {
        let mut sc = scenario(440.0, 340.0);
        sc.duration = sc.dt;
        assert_eq!(simulate(&sc).unwrap().states.len(), 2);
    }

    #[test]
    fn high_friction_runs_all_three_phases() {
        let sc = scenario(440.0, 340.0);
        let tr = simulate(&sc).unwrap();
        let s = &tr.summary;
        assert_eq!(
            s.phases,
            vec![Phase::Approaching, Phase::ForceBuildup, Phase::Rotating]
        );
        assert!(s.grasp_success);
        assert!((s.peak_torque - 440.0).abs() < 1e-9);
        assert!((s.plateau_torque.unwrap() - 340.0).abs() < 1e-9);
        assert!(s.final_grasp_torque > 0.0);
    }

    #[test]
    fn low_friction_slips_while_approaching() {
        let sc = scenario(100.0, 90.0);
        let tr = simulate(&sc).unwrap();
        let s = &tr.summary;
        assert_eq!(s.phases, vec![Phase::Approaching, Phase::Rotating]);
        assert!(!s.grasp_success);
        let slip = tr.states.iter().find(|s| s.phase == Phase::Rotating).unwrap();
        assert!(slip.theta2 < 80f64.to_radians());
        assert_eq!(s.final_grasp_torque, 0.0);
    }

    #[test]
    fn no_object_closes_without_slip() {
        let mut sc = scenario(440.0, 340.0);
        sc.contact_angle_theta2 = None;
        let tr = simulate(&sc).unwrap();
        assert_eq!(tr.summary.outcome, Outcome::ClosedWithoutSlip);
        assert!(tr.summary.grasp_success);
        let last = tr.states.last().unwrap();
        assert!((last.theta_twist - sc.tum.stroke_limit()).abs() < 1e-15);
        assert_eq!(last.theta_body, 0.0);
    }

    #[test]
    fn reversed_input_mirrors_the_trace() {
        let fwd = scenario(440.0, 340.0);
        let mut rev = fwd.clone();
        rev.input_speed = -fwd.input_speed;
        let a = simulate(&fwd).unwrap();
        let b = simulate(&rev).unwrap();
        assert_eq!(a.states.len(), b.states.len());
        for (x, y) in a.states.iter().zip(&b.states) {
            assert_eq!(x.phase, y.phase);
            assert!((x.theta_twist + y.theta_twist).abs() < 1e-12);
            assert!((x.contraction - y.contraction).abs() < 1e-9);
            assert!((x.tau_transmitted + y.tau_transmitted).abs() < 1e-6);
            assert!((x.grasp_torque - y.grasp_torque).abs() < 1e-6);
        }
    }

    #[test]
    fn scenario_validation() {
        let mut sc = scenario(440.0, 340.0);
        sc.duration = 0.0;
        assert!(simulate(&sc).is_err());
        let mut sc = scenario(440.0, 340.0);
        sc.input_speed = 0.0;
        assert!(sc.validate().is_err());
    }
}
