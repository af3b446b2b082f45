//! Readout solver against a nested-bisection oracle built on the forward
//! current alone.

use qdot::readout::*;

/// `I(x)` of a segment with source side at `v_lo`.
fn forward(p: &FetChainProblem, i: usize, v_lo: f64, x: f64) -> f64 {
    let s = p.segments[i];
    let g = s.overdrive - s.dvth;
    p.lambda * ((g * x - 0.5 * s.eta * ((v_lo + x).powi(2) - v_lo * v_lo)) / (1.0 + p.theta * x))
}

/// Rising-branch drop carrying `current`, or `None` above the maximum.
fn oracle_step(p: &FetChainProblem, i: usize, v_lo: f64, current: f64) -> Option<f64> {
    // ternary search for the maximum of the forward curve on [0, 10]
    let (mut a, mut b) = (0.0, 10.0);
    for _ in 0..300 {
        let m1 = a + (b - a) / 3.0;
        let m2 = b - (b - a) / 3.0;
        if forward(p, i, v_lo, m1) < forward(p, i, v_lo, m2) {
            a = m1;
        } else {
            b = m2;
        }
    }
    let apex = 0.5 * (a + b);
    if forward(p, i, v_lo, apex) < current {
        return None;
    }
    let (mut lo, mut hi) = (0.0, apex);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if forward(p, i, v_lo, mid) < current {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

fn oracle_vn(p: &FetChainProblem, current: f64) -> Option<f64> {
    let mut v = 0.0;
    for i in 0..p.segments.len() {
        v += oracle_step(p, i, v, current)?;
    }
    Some(v)
}

fn oracle_current(p: &FetChainProblem) -> f64 {
    let (mut lo, mut hi) = (0.0, 100.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        match oracle_vn(p, mid) {
            Some(v) if v <= p.v_d => lo = mid,
            _ => hi = mid,
        }
    }
    lo
}

fn shifted(p: &FetChainProblem, qubit: usize) -> FetChainProblem {
    let mut q = p.clone();
    q.segments[qubit - 1].dvth = 0.1 * q.segments[qubit - 1].overdrive;
    q
}

#[test]
fn solver_matches_oracle_on_fig2_chain() {
    let base = FetChainProblem::fig2_default();
    for v_d in [0.25, 0.75, 1.5] {
        let p = base.with_v_d(v_d);
        let a = solve_chain(&p).unwrap().current;
        let b = oracle_current(&p);
        assert!(((a - b) / b).abs() < 1e-9, "v_d={v_d}: {a} vs {b}");
        for q in [1, 4, 8] {
            let s = shifted(&p, q);
            let a = solve_chain(&s).unwrap().current;
            let b = oracle_current(&s);
            assert!(((a - b) / b).abs() < 1e-9, "v_d={v_d} q={q}: {a} vs {b}");
        }
    }
}

// values generated by the oracle above, frozen
const FIG2A_AT_1P5: [(usize, f64); 3] = [(1, 1.398460081770527e-2), (4, 1.822144170241886e-2), (8, 4.852297444040206e-2)];
const FIG2B_N8: [(usize, f64); 3] = [(1, 1.081413713587109e-3), (4, 2.493475394564859e-3), (7, 1.726937052326347e-2)];
const FIG2B_N2: f64 = 5.559549823143337e-2;

#[test]
fn fig2a_regression_at_vd_1p5() {
    let base = FetChainProblem::fig2_default();
    for (q, want) in FIG2A_AT_1P5 {
        let c = ratio_sweep_fig2a(&base, q, ThresholdShift::default(), &[1.5]).unwrap();
        let got = c.points[0].ratio.unwrap();
        assert!(((got - want) / want).abs() < 1e-9, "qubit {q}: {got} vs {want}");
    }
}

#[test]
fn fig2b_regression_at_vd_1p5() {
    let seg = FetSegment { overdrive: 2.0, eta: 1.0, dvth: 0.0 };
    let rows = distinguish_sweep_fig2b(seg, 1.0, 0.3, 1.5, 8, ThresholdShift::default()).unwrap();
    let n2 = rows[0].traces[0].1.unwrap();
    assert!(((n2 - FIG2B_N2) / FIG2B_N2).abs() < 1e-9);
    let last = rows.last().unwrap();
    assert_eq!(last.n, 8);
    for ((i, got), (j, want)) in last.traces.iter().zip(FIG2B_N8) {
        assert_eq!(*i, j);
        let got = got.unwrap();
        assert!(((got - want) / want).abs() < 1e-9, "trace {i}: {got} vs {want}");
    }
}

#[test]
fn last_qubit_saturates_first() {
    let base = FetChainProblem::fig2_default();
    let c = ratio_sweep_fig2a(&base, 8, ThresholdShift::default(), &[1.7, 1.75]).unwrap();
    assert!(c.points[0].ratio.is_some());
    assert!(c.points[1].ratio.is_none());
    let err = solve_chain(&shifted(&base.with_v_d(1.75), 8)).unwrap_err();
    assert!(matches!(err, qdot::Error::Saturation { segment: 8, .. }), "{err}");
}
