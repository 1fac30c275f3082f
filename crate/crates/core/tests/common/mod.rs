#![allow(dead_code)]

use spine_mech::config::{parse_json, Loaded};
use spine_mech::linkage::LinkageSpec;
use spine_mech::{MechanismConfig, Scenario, TumSpec};

pub const PROTOTYPE: &str = include_str!("../../../../configs/prototype.json");
pub const PROTOTYPE_R2_TEXT: &str = include_str!("../../../../configs/prototype_r2_text.json");
pub const HIGH_FRICTION: &str = include_str!("../../../../configs/scenario_high_friction.json");
pub const LOW_FRICTION: &str = include_str!("../../../../configs/scenario_low_friction.json");

pub fn mechanism(text: &str) -> MechanismConfig {
    let loaded: Loaded<MechanismConfig> = parse_json(text).expect("shipped config parses");
    loaded.value.validate().expect("shipped config validates");
    loaded.value
}

pub fn prototype() -> MechanismConfig {
    mechanism(PROTOTYPE)
}

pub fn prototype_tum() -> TumSpec {
    prototype().tum
}

pub fn prototype_linkage() -> LinkageSpec {
    prototype().linkage
}

pub fn scenario(text: &str) -> Scenario {
    let loaded: Loaded<Scenario> = parse_json(text).expect("shipped scenario parses");
    loaded.value
}

/// Two-link loop solved by a sign-change scan over θ₁ and bisection.
///
/// For a given θ₁ the second link must bridge the gap to the slider target,
/// so the roots are the zeros of `|T − R₁e(θ₁)|² − R₂²`. Returns every root
/// found as `(θ₁, θ₂)`.
pub fn grid_roots(spec: &LinkageSpec, x: f64, cells: usize) -> Vec<(f64, f64)> {
    use std::f64::consts::PI;
    let tx = spec.offset_b + spec.tum_length - x;
    let ty = spec.offset_a - spec.offset_c;
    let (r1, r2) = (spec.link_r1, spec.link_r2);
    let f = |t: f64| {
        let dx = tx - r1 * t.cos();
        let dy = ty - r1 * t.sin();
        dx * dx + dy * dy - r2 * r2
    };
    let mut roots = Vec::new();
    let h = 2.0 * PI / cells as f64;
    for k in 0..cells {
        let (mut lo, mut hi) = (-PI + k as f64 * h, -PI + (k + 1) as f64 * h);
        let (mut flo, fhi) = (f(lo), f(hi));
        if flo == 0.0 {
            roots.push(lo);
            continue;
        }
        if flo.signum() == fhi.signum() {
            continue;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let fm = f(mid);
            if fm.signum() == flo.signum() {
                lo = mid;
                flo = fm;
            } else {
                hi = mid;
            }
        }
        roots.push(0.5 * (lo + hi));
    }
    roots
        .into_iter()
        .map(|t1| (t1, (ty - r1 * t1.sin()).atan2(tx - r1 * t1.cos())))
        .collect()
}

/// The open-forward rule applied to oracle roots: the unique root with
/// θ₂ in (0, π), otherwise the one with the larger sin(θ₂ − θ₁).
pub fn open_forward(roots: &[(f64, f64)]) -> Option<(f64, f64)> {
    use std::f64::consts::PI;
    let open: Vec<_> = roots.iter().filter(|r| r.1 > 0.0 && r.1 < PI).collect();
    if open.len() == 1 {
        return Some(*open[0]);
    }
    roots
        .iter()
        .copied()
        .max_by(|a, b| (a.1 - a.0).sin().total_cmp(&(b.1 - b.0).sin()))
}

/// Smallest absolute difference between two angles.
pub fn angle_gap(a: f64, b: f64) -> f64 {
    use std::f64::consts::TAU;
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

/// Random linkage whose target distance stays well inside the reachable
/// annulus for `X ∈ [0, 0.6 L]`. `u` holds six uniforms in [0, 1).
pub fn random_linkage(u: [f64; 6]) -> Option<LinkageSpec> {
    let lerp = |t: f64, a: f64, b: f64| a + (b - a) * t;
    let spec = LinkageSpec {
        link_r1: lerp(u[0], 20.0, 50.0),
        link_r2: lerp(u[1], 10.0, 40.0),
        offset_a: lerp(u[2], 10.0, 40.0),
        offset_c: lerp(u[3], 5.0, 35.0),
        offset_b: lerp(u[4], 5.0, 20.0),
        tum_length: lerp(u[5], 30.0, 50.0),
        branch: Default::default(),
    };
    let margin = 0.05 * spec.link_r1.min(spec.link_r2);
    let lo = (spec.link_r1 - spec.link_r2).abs() + margin;
    let hi = spec.link_r1 + spec.link_r2 - margin;
    let ok = (0..=60).all(|k| {
        let x = 0.6 * spec.tum_length * k as f64 / 60.0;
        let d = (spec.offset_b + spec.tum_length - x).hypot(spec.offset_a - spec.offset_c);
        d > lo && d < hi
    });
    ok.then_some(spec)
}
