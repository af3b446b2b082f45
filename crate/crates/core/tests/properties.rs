use std::f64::consts::PI;

use proptest::prelude::*;
use qdot::capnet::{
    chain_couplings, charging_energy, crosstalk_compensate, derive_aux, drive_delta, BondCaps, CapacitanceSet, Dims,
    QubitCaps,
};
use qdot::linalg::{identity, max_abs_diff, trace, unitarity_error};
use qdot::pulsekit::{
    coupling_gate, evolve, parse_schedule, rotation_pulse, to_schedule, Axis, EvolveOptions, PulseConfig,
};
use qdot::readout::{
    distinguish_sweep_fig2b, random_substrate, ratio_sweep_fig2a, segment_step, solve_chain, FetChainProblem,
    FetSegment, ThresholdShift,
};
use qdot::scenarios::rotation_additivity;
use qdot::spinmodel::SpinChainParams;

fn axis() -> impl Strategy<Value = Axis> {
    prop_oneof![Just(Axis::X), Just(Axis::Y), Just(Axis::Z)]
}

fn phase_free_identity_error(u: &qdot::linalg::CMatrix) -> f64 {
    let tr = trace(u);
    max_abs_diff(u, &(identity(u.nrows()) * (tr / tr.norm())))
}

fn qubit_caps() -> impl Strategy<Value = QubitCaps> {
    (0.1..1.0f64, 0.1..1.0f64, 0.05..0.5f64, 0.0..0.1f64, 0.0..0.1f64)
        .prop_map(|(c_a, c_b, c_c, c_h, c_i)| QubitCaps { c_a, c_b, c_c, c_h, c_i })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn sequence_followed_by_its_inverse_is_identity(
        q in 0usize..3, ax in axis(), angle in -2.0 * PI..2.0 * PI, j in 0.0..0.2f64,
    ) {
        let p = SpinChainParams::chain(vec![0.4, 0.35, 0.45], vec![0.0; 3], vec![j, 0.5 * j]).unwrap();
        let seq = rotation_pulse(&p, q, ax, angle, &PulseConfig::ideal()).unwrap();
        let u = evolve(&seq.clone().then(seq.inverse()), &p, &EvolveOptions::default()).unwrap();
        prop_assert!(phase_free_identity_error(u.matrix()) < 1e-10);
    }

    #[test]
    fn rotation_angles_add(a in -PI..PI, b in -PI..PI) {
        let p = SpinChainParams::uniform_chain(2, 0.4, 0.0, 0.1).unwrap();
        prop_assert!(rotation_additivity(&p, a, b).unwrap() <= 1e-9);
    }

    #[test]
    fn propagators_are_unitary(theta in -PI..PI, t in 0.2..0.6f64) {
        let p = SpinChainParams::chain(vec![t, 0.4], vec![0.0, 0.0], vec![0.1]).unwrap();
        prop_assume!(theta.abs() > 1e-3);
        let u = evolve(&coupling_gate(&p, 0, 1, theta, &PulseConfig::ideal()).unwrap(), &p, &EvolveOptions::default())
            .unwrap();
        prop_assert!(unitarity_error(u.matrix()) < 1e-10);
    }

    #[test]
    fn schedules_round_trip(q in 0usize..2, ax in axis(), angle in -2.0 * PI..2.0 * PI, theta in 0.1..PI) {
        let p = SpinChainParams::uniform_chain(2, 0.4, 0.0, 0.1).unwrap();
        let cfg = PulseConfig::ideal();
        let seq = rotation_pulse(&p, q, ax, angle, &cfg).unwrap().then(coupling_gate(&p, 0, 1, theta, &cfg).unwrap());
        prop_assert_eq!(parse_schedule(&to_schedule(&seq)).unwrap(), seq);
    }

    #[test]
    fn drain_voltage_increases_with_current(g in 1.0..3.0f64, theta in 0.0..1.0f64, n in 1usize..10, f1 in 0.01..0.5f64, f2 in 0.01..0.5f64) {
        let prob = FetChainProblem::uniform(n, g, theta, 1.0);
        let march = |i: f64| -> Option<f64> {
            let mut v = 0.0;
            for k in 0..n {
                v = segment_step(&prob.segment(k), v, i).ok()?;
            }
            Some(v)
        };
        let (lo, hi) = (f1.min(f2), f1.max(f2));
        prop_assume!(hi - lo > 1e-6);
        // scale so both currents stay inside the first segment's capacity
        let cap = qdot::readout::capacity(&prob.segment(0), 0.0);
        if let (Some(a), Some(b)) = (march(lo * cap / n as f64), march(hi * cap / n as f64)) {
            prop_assert!(b > a);
        }
    }

    #[test]
    fn node_voltages_do_not_depend_on_lambda(lambda in 1e-6..1e3f64, v_d in 0.05..1.7f64) {
        let base = FetChainProblem::fig2_default().with_v_d(v_d);
        let a = solve_chain(&base).unwrap();
        let b = solve_chain(&FetChainProblem { lambda, ..base }).unwrap();
        for (x, y) in a.voltages.iter().zip(&b.voltages) {
            prop_assert!((x - y).abs() <= 1e-12);
        }
        prop_assert!((b.current / (lambda * a.current) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn current_is_continuous_in_overdrive(g in 1.5..3.0f64, v_d in 0.1..1.2f64, k in 0usize..8) {
        let base = FetChainProblem::uniform(8, g, 0.3, v_d);
        let mut bumped = base.clone();
        bumped.segments[k].overdrive += 1e-8;
        let i0 = solve_chain(&base).unwrap().current;
        let i1 = solve_chain(&bumped).unwrap().current;
        prop_assert!(((i1 - i0) / i0).abs() < 1e-5);
        prop_assert!(i1 >= i0);
    }

    #[test]
    fn capacitance_scaling_scales_energies(q in qubit_caps(), c_d in 0.0..0.05f64, c_e in 0.0..0.02f64, s in 0.1..10.0f64) {
        let caps = CapacitanceSet::uniform_chain(3, q, BondCaps { c_d, c_e });
        let scaled = caps.scaled(s);
        prop_assume!(caps.validate().is_ok());
        for i in 0..3 {
            let e0 = charging_energy(&derive_aux(&caps, i, Dims::OneD).unwrap());
            let e1 = charging_energy(&derive_aux(&scaled, i, Dims::OneD).unwrap());
            prop_assert!((e1 * s / e0 - 1.0).abs() < 1e-12);
        }
        for (j0, j1) in chain_couplings(&caps).unwrap().iter().zip(chain_couplings(&scaled).unwrap()) {
            prop_assert!((j1 * s - j0).abs() <= 1e-12 * j0.abs().max(1e-300));
        }
    }

    #[test]
    fn compensated_drives_reproduce_targets(
        target in prop::collection::vec(-0.1..0.1f64, 6), q in qubit_caps(), ratio in 0.0..0.9f64,
    ) {
        let mut caps = CapacitanceSet::uniform_chain(6, q, BondCaps { c_d: 0.01, c_e: 0.0 });
        for (i, qc) in caps.qubits.iter_mut().enumerate() {
            qc.c_h = if i > 0 { ratio * qc.c_a } else { 0.0 };
            qc.c_i = if i < 5 { ratio * qc.c_a } else { 0.0 };
        }
        prop_assume!(target.iter().any(|x| x.abs() > 1e-6));
        if let Ok(v) = crosstalk_compensate(&caps, &target) {
            let back = drive_delta(&caps, &v).unwrap();
            let scale = target.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            let err = back.iter().zip(&target).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / scale;
            prop_assert!(err < 1e-10, "round trip error {err}");
        }
    }
}

#[test]
fn distinguishability_is_linear_in_a_small_shift() {
    let seg = FetSegment { overdrive: 2.0, eta: 1.0, dvth: 0.0 };
    let xs: Vec<f64> = (1..=6).map(|k| 0.005 * k as f64).collect();
    let ys: Vec<f64> = xs
        .iter()
        .map(|&fraction| {
            let rows = distinguish_sweep_fig2b(seg, 1.0, 0.3, 1.5, 8, ThresholdShift { fraction, sign: 1.0 }).unwrap();
            rows.last().unwrap().traces.last().unwrap().1.unwrap()
        })
        .collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let r2 = sxy * sxy / (sxx * syy);
    assert!(r2 > 0.999, "R^2 = {r2}");
}

#[test]
fn drain_side_qubit_wins_on_rough_substrates() {
    let base = FetChainProblem::fig2_default().with_v_d(1.0);
    let shift = ThresholdShift::default();
    let mut wins = 0;
    for seed in 0..100 {
        let p = random_substrate(&base, seed, 0.1).unwrap();
        let first = ratio_sweep_fig2a(&p, 1, shift, &[1.0]).unwrap().points[0].ratio.unwrap();
        let last = ratio_sweep_fig2a(&p, 8, shift, &[1.0]).unwrap().points[0].ratio.unwrap();
        wins += usize::from(last > first);
    }
    assert!(wins >= 90, "{wins}/100");
}

#[test]
fn substrate_draws_are_seeded() {
    let base = FetChainProblem::fig2_default();
    assert_eq!(random_substrate(&base, 5, 0.1).unwrap(), random_substrate(&base, 5, 0.1).unwrap());
    assert_ne!(random_substrate(&base, 5, 0.1).unwrap(), random_substrate(&base, 6, 0.1).unwrap());
    assert_eq!(random_substrate(&base, 5, 0.0).unwrap(), base);
}
