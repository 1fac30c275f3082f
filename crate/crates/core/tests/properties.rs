mod common;

use proptest::prelude::*;

use spine_mech::friction::{self, CalibrationRow, FrictionGenerator};
use spine_mech::linkage::{self, LinkageSpec};
use spine_mech::sweep::{self, Direction, DesignReport, Objective, ParamRange};
use spine_mech::{sim, tum, TumSpec};

fn tum_spec() -> impl Strategy<Value = TumSpec> {
    (5.0..30.0f64, 1.2..4.0f64, 1u32..8, 0.1..0.95f64, 100.0..3000.0f64, 0.5..5.0f64).prop_map(
        |(r, ratio, n, frac, e, i)| {
            let l = r * ratio;
            TumSpec {
                radius: r,
                strip_length: l,
                n_strips: n,
                strip_width: 4.0,
                top_plate_thickness: 2.0,
                bottom_plate_thickness: 2.0,
                youngs_modulus: e,
                second_moment: i,
                max_rotation: frac * l / r,
                theta_floor: 1e-3,
            }
        },
    )
}

fn linkage_spec() -> impl Strategy<Value = LinkageSpec> {
    prop::array::uniform6(0.0..1.0f64).prop_filter_map("annulus margin", common::random_linkage)
}

proptest! {
    #[test]
    fn contraction_even_jacobian_odd(spec in tum_spec(), u in -1.0..1.0f64) {
        let theta = u * spec.max_rotation;
        prop_assert_eq!(
            tum::contraction(&spec, theta).unwrap().to_bits(),
            tum::contraction(&spec, -theta).unwrap().to_bits()
        );
        prop_assert_eq!(
            tum::jacobian(&spec, -theta).unwrap().to_bits(),
            (-tum::jacobian(&spec, theta).unwrap()).to_bits()
        );
        prop_assert_eq!(
            tum::total_elastic_force(&spec, theta).unwrap(),
            tum::total_elastic_force(&spec, -theta).unwrap()
        );
        prop_assert_eq!(
            tum::elastic_torque(&spec, -theta).unwrap(),
            -tum::elastic_torque(&spec, theta).unwrap()
        );
    }

    #[test]
    fn contraction_inverse_round_trip(spec in tum_spec(), u in 0.0..1.0f64) {
        let theta = u * spec.max_rotation;
        let x = tum::contraction(&spec, theta).unwrap();
        let back = tum::rotation_for_contraction(&spec, x).unwrap();
        prop_assert!((back - theta).abs() <= 1e-7 * (1.0 + theta));
    }

    #[test]
    fn contraction_is_bounded_and_monotone(spec in tum_spec(), u in 0.0..1.0f64, v in 0.0..1.0f64) {
        let (a, b) = if u < v { (u, v) } else { (v, u) };
        let xa = tum::contraction(&spec, a * spec.max_rotation).unwrap();
        let xb = tum::contraction(&spec, b * spec.max_rotation).unwrap();
        prop_assert!(xa >= 0.0 && xa <= xb && xb < spec.strip_length);
    }

    #[test]
    fn radius_constraint_is_sound(spec in tum_spec(), w1 in 0.5..30.0f64) {
        let spec = TumSpec { strip_width: w1, ..spec };
        let check = tum::check_radius_constraint(&spec).unwrap();
        let bound = w1 * f64::from(spec.n_strips) * spec.strip_length
            / (2.0 * std::f64::consts::PI * (spec.top_plate_thickness + spec.bottom_plate_thickness));
        prop_assert!((check.min_radius_mm - bound).abs() <= 1e-12 * bound);
        prop_assert_eq!(check.pass, spec.radius >= check.min_radius_mm);
        prop_assert!((check.margin_mm - (spec.radius - bound)).abs() <= 1e-9);
    }

    #[test]
    fn singular_twist_is_always_an_error(spec in tum_spec(), k in 1.0..3.0f64) {
        let theta = k * spec.singular_twist();
        prop_assert!(tum::contraction(&spec, theta).is_err());
        prop_assert!(tum::jacobian(&spec, -theta).is_err());
        prop_assert!(tum::elastic_torque(&spec, theta).is_err());
    }

    #[test]
    fn contraction_force_balances_input(spec in tum_spec(), u in 0.05..1.0f64, tau in -500.0..500.0f64) {
        let theta = u * spec.max_rotation;
        prop_assume!(theta.abs() >= spec.theta_floor);
        let f = tum::contraction_force(&spec, theta, tau).unwrap();
        let j = tum::jacobian(&spec, theta).unwrap();
        let fs = tum::total_elastic_force(&spec, theta).unwrap();
        prop_assert!(((f + fs) * j - tau).abs() <= 1e-9 * (tau.abs() + fs * j.abs() + 1.0));
    }

    #[test]
    fn solver_meets_residual_and_oracle(spec in linkage_spec(), u in 0.0..1.0f64) {
        let x = u * 0.6 * spec.tum_length;
        let state = linkage::solve_configuration(&spec, x, None).unwrap();
        prop_assert!(state.max_residual() <= 1e-9);
        let roots = common::grid_roots(&spec, x, 2048);
        let oracle = common::open_forward(&roots).unwrap();
        prop_assume!(roots.iter().all(|r| r.1.abs() > 1e-6 && (std::f64::consts::PI - r.1.abs()) > 1e-6));
        prop_assert!(common::angle_gap(state.theta1, oracle.0) <= 1e-6);
        prop_assert!(common::angle_gap(state.theta2, oracle.1) <= 1e-6);
    }

    #[test]
    fn finger_jacobian_matches_difference(spec in linkage_spec(), u in 0.05..0.95f64) {
        let x = u * 0.6 * spec.tum_length;
        let h = 1e-5;
        let s = linkage::solve_configuration(&spec, x, None).unwrap();
        let lo = linkage::solve_configuration(&spec, x - h, Some(&s)).unwrap();
        let hi = linkage::solve_configuration(&spec, x + h, Some(&s)).unwrap();
        let fd = (hi.theta2 - lo.theta2) / (2.0 * h);
        let jg = linkage::finger_jacobian(&spec, &s).unwrap();
        prop_assert!((fd - jg).abs() <= 1e-5 * (1.0 + jg.abs()), "fd {} jg {}", fd, jg);
    }

    #[test]
    fn friction_lookup_is_monotone(a in 0.45..0.70f64, b in 0.45..0.70f64) {
        let gen = common::prototype().friction;
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let (s_lo, k_lo) = friction::friction_from_spacer(&gen, lo).unwrap();
        let (s_hi, k_hi) = friction::friction_from_spacer(&gen, hi).unwrap();
        prop_assert!(s_hi <= s_lo && k_hi <= k_lo);
        prop_assert!(k_lo <= s_lo && k_hi <= s_hi);
    }

    #[test]
    fn grasp_predicate_is_a_strict_threshold(spec in tum_spec(), delta in -50.0..50.0f64) {
        let (_, peak) = tum::max_holding_torque(&spec).unwrap();
        let st = (peak + delta).max(0.0);
        let gen = FrictionGenerator { tau_static: st, tau_kinetic: 0.5 * st, calibration: vec![] };
        prop_assert_eq!(friction::grasp_success(&spec, &gen).unwrap().success, st > peak);
    }

    #[test]
    fn grid_count_is_product_of_steps(steps in prop::array::uniform11(1usize..4)) {
        let mut r = base_ranges();
        let params = [
            &mut r.radius, &mut r.strip_length, &mut r.n_strips, &mut r.strip_width,
            &mut r.top_plate_thickness, &mut r.bottom_plate_thickness, &mut r.link_r1,
            &mut r.link_r2, &mut r.offset_a, &mut r.offset_b, &mut r.offset_c,
        ];
        let mut expected = 1usize;
        for (p, s) in params.into_iter().zip(steps) {
            p.max = p.min * 1.1;
            p.steps = s;
            expected *= s;
        }
        prop_assert_eq!(sweep::enumerate(&r).count(), expected);
        prop_assert!(sweep::enumerate(&r).enumerate().all(|(i, c)| c.index == i));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn transmitted_torque_never_exceeds_static(st in 120.0..600.0f64, kin_frac in 0.3..1.0f64, speed in prop_oneof![Just(1.0f64), Just(-1.0f64)]) {
        let mut sc = common::scenario(common::HIGH_FRICTION);
        sc.friction = FrictionGenerator { tau_static: st, tau_kinetic: kin_frac * st, calibration: vec![] };
        sc.input_speed *= speed;
        sc.duration = 1.0;
        let trace = sim::simulate(&sc).unwrap();
        for s in &trace.states {
            prop_assert!(s.tau_transmitted.abs() <= st * (1.0 + 1e-12));
        }
        let phases: Vec<char> = trace.states.iter().map(|s| s.phase.code()).collect();
        let mut order = phases.clone();
        order.dedup();
        prop_assert!(order.windows(2).all(|w| w[0] < w[1] || (w[0] == 'A' && w[1] == 'R')));
    }

    #[test]
    fn evaluation_delegates(r in 15.0..25.0f64, l in 35.0..50.0f64, r2 in 16.0..30.0f64) {
        let mut ranges = base_ranges();
        ranges.radius = ParamRange::fixed(r);
        ranges.strip_length = ParamRange::fixed(l);
        ranges.link_r2 = ParamRange::fixed(r2);
        let c = sweep::enumerate(&ranges).next().unwrap();
        let rep = sweep::evaluate(&c, 400.0, 1.0);
        let check = tum::check_radius_constraint(&c.tum).unwrap();
        prop_assert_eq!(rep.constraint_pass, check.pass);
        prop_assert_eq!(rep.margin_mm, check.margin_mm);
        if rep.feasibility_failure.is_none() {
            let stroke = tum::contraction(&c.tum, c.tum.stroke_limit()).unwrap();
            prop_assert_eq!(rep.stroke_mm, Some(stroke));
            prop_assert_eq!(rep.required_holding_torque, Some(tum::max_holding_torque(&c.tum).unwrap().1));
            prop_assert_eq!(
                rep.grasp_torque_at_reference_input,
                Some(linkage::grasp_torque(&c.linkage, &c.tum, 1.0, 400.0).unwrap())
            );
            prop_assert_eq!(
                rep.finger_range_deg,
                Some(linkage::finger_travel(&c.linkage, stroke).unwrap().abs().to_degrees())
            );
        } else {
            prop_assert!(rep.stroke_mm.is_none() && rep.finger_range_deg.is_none());
        }
    }

    #[test]
    fn pareto_matches_brute_force(values in prop::collection::vec((0u8..6, 0u8..6, 0u8..6, any::<bool>()), 1..100)) {
        let reports: Vec<DesignReport> = values
            .iter()
            .enumerate()
            .map(|(i, &(a, b, c, feasible))| synthetic_report(i, a.into(), b.into(), c.into(), feasible))
            .collect();
        let objectives = vec![
            Objective { field: "stroke_mm".into(), direction: Direction::Maximize },
            Objective { field: "required_holding_torque_Nmm".into(), direction: Direction::Minimize },
            Objective { field: "finger_range_deg".into(), direction: Direction::Maximize },
        ];
        let front: Vec<usize> = sweep::pareto_front(&reports, &objectives).unwrap().iter().map(|r| r.index).collect();
        let key = |r: &DesignReport| [r.stroke_mm.unwrap(), -r.required_holding_torque.unwrap(), r.finger_range_deg.unwrap()];
        let dominates = |p: [f64; 3], q: [f64; 3]| p.iter().zip(&q).all(|(a, b)| a >= b) && p != q;
        let brute: Vec<usize> = reports
            .iter()
            .filter(|r| r.feasibility_failure.is_none())
            .filter(|r| !reports.iter().filter(|o| o.feasibility_failure.is_none()).any(|o| dominates(key(o), key(r))))
            .map(|r| r.index)
            .collect();
        prop_assert_eq!(front, brute);
    }
}

fn base_ranges() -> sweep::DesignRanges {
    serde_json::from_str(include_str!("../../../configs/sweep_ranges.json")).unwrap()
}

fn synthetic_report(index: usize, stroke: f64, holding: f64, range: f64, feasible: bool) -> DesignReport {
    let cfg = common::prototype();
    let populated = |v: f64| feasible.then_some(v);
    DesignReport {
        index,
        tum: cfg.tum,
        linkage: cfg.linkage,
        constraint_pass: true,
        margin_mm: 1.0,
        stroke_mm: populated(stroke),
        finger_range_deg: populated(range),
        required_holding_torque: populated(holding),
        grasp_torque_at_reference_input: populated(0.0),
        feasibility_failure: (!feasible).then(|| "linkage: synthetic".to_string()),
    }
}

#[test]
fn pareto_single_and_dominating() {
    let objectives = [Objective { field: "stroke_mm".into(), direction: Direction::Maximize }];
    let one = vec![synthetic_report(0, 1.0, 1.0, 1.0, true)];
    assert_eq!(sweep::pareto_front(&one, &objectives).unwrap().len(), 1);
    let many: Vec<_> = (0..10).map(|i| synthetic_report(i, i as f64, 1.0, 1.0, true)).collect();
    let front = sweep::pareto_front(&many, &objectives).unwrap();
    assert_eq!(front.len(), 1);
    assert_eq!(front[0].index, 9);
}

#[test]
fn parallel_equals_sequential() {
    let ranges = base_ranges();
    let candidates: Vec<_> = sweep::enumerate(&ranges).collect();
    let seq = sweep::evaluate_all_sequential(&candidates, 400.0, 1.0);
    for jobs in [0, 2, 4] {
        let par = sweep::evaluate_all(&candidates, 400.0, 1.0, jobs).unwrap();
        assert_eq!(seq, par);
    }
}

#[test]
fn calibration_rows_survive_round_trip() {
    let gen = FrictionGenerator {
        tau_static: 440.0,
        tau_kinetic: 340.0,
        calibration: vec![
            CalibrationRow { spacer_thickness: 0.45, tau_static: 700.0, tau_kinetic: 560.0 },
            CalibrationRow { spacer_thickness: 0.60, tau_static: 568.0, tau_kinetic: 462.0 },
        ],
    };
    let text = serde_json::to_string(&gen).unwrap();
    let back: FrictionGenerator = serde_json::from_str(&text).unwrap();
    assert_eq!(gen, back);
}
