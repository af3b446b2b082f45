//! Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
//! criterion fails.

use std::f64::consts::{FRAC_PI_2, PI};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use qdot::config::ReadoutConfig;
use qdot::error::Result;
use qdot::linalg::{identity, max_abs_diff, trace, ONE};
use qdot::pulsekit::{
    carr_purcell, cnot_sequence, evolve, fidelity, ideal_cnot, populations, to_charge_basis, EvolveOptions,
    FidelityMode, PulseConfig,
};
use qdot::readout::{
    distinguish_sweep_fig2b, random_substrate, ratio_sweep_fig2a, solve_chain, FetChainProblem, ThresholdShift,
};
use qdot::scenarios::{
    cp_sweep, crosstalk_chain, delta_roundtrip, oracle_samples, physical_crosstalk_fidelities, rotation_additivity,
    run_figures, run_gate_study, run_reference_estimates, run_rwa_study, rwa_infidelity, RunReport, StudyMode, Tolerances,
    CP_SWEEP_CYCLES,
};
use qdot::spinmodel::SpinChainParams;

struct Outcome {
    pass: bool,
    summary: String,
    notes: Vec<String>,
}

fn within_factor(v: f64, target: f64, factor: f64) -> bool {
    v >= target / factor && v <= target * factor
}

fn quantity(r: &RunReport, name: &str) -> f64 {
    r.quantity(name).unwrap_or_else(|| panic!("report has no quantity '{name}'")).value
}

fn c1_estimates() -> Result<Outcome> {
    let r = run_reference_estimates(&Tolerances::default())?;
    let ec = quantity(&r, "geom1.E_C");
    let j = quantity(&r, "geom1.J");
    let rate = quantity(&r, "geom1.rate_CB_1MOhm");
    let pass = within_factor(ec, 13.0, 3.0) && within_factor(j, 0.1, 10.0) && within_factor(rate, 3.1, 3.0);
    Ok(Outcome {
        pass,
        summary: format!("E_C = {ec:.3} meV (13 x/ 3), J = {j:.4} meV (0.1 x/ 10), 1/(C_B 1 MOhm) = {rate:.3} THz (3.1 x/ 3)"),
        notes: vec![],
    })
}

fn c2_oracle() -> Result<Outcome> {
    let samples = oracle_samples(50, 1)?;
    let eps_ok = samples.iter().all(|s| s.eps < 0.05);
    let second = |rel: f64, eps: f64| rel <= 10.0 * eps * eps;
    let n_coup = samples.iter().filter(|s| second(s.coupling_rel, s.eps)).count();
    let n_curv = samples.iter().filter(|s| second(s.curvature_rel, s.eps)).count();
    let first_coup = samples.iter().map(|s| s.coupling_rel / s.eps).fold(0.0, f64::max);
    let first_curv = samples.iter().map(|s| s.curvature_rel / s.eps).fold(0.0, f64::max);
    let max_eps = samples.iter().map(|s| s.eps).fold(0.0, f64::max);
    Ok(Outcome {
        pass: eps_ok && n_coup == samples.len() && n_curv == samples.len(),
        summary: format!(
            "{} networks, max Cd^2/D = {max_eps:.3e}; within 10(Cd^2/D)^2: coupling {n_coup}/{}, curvature {n_curv}/{}",
            samples.len(),
            samples.len(),
            samples.len()
        ),
        notes: vec![format!(
            "first-order bound 10(Cd^2/D): max rel/(Cd^2/D) coupling {first_coup:.3}, curvature {first_curv:.3} ({})",
            if first_coup <= 10.0 && first_curv <= 10.0 { "met" } else { "not met" }
        )],
    })
}

fn c3_pulse_algebra() -> Result<Outcome> {
    let p = SpinChainParams::uniform_chain(2, 0.4, 0.0, 0.1)?;
    let u = evolve(&cnot_sequence(&p, 0, 1, &PulseConfig::ideal())?, &p, &EvolveOptions::default())?;
    let ch = to_charge_basis(u.matrix(), 2);
    let target = ideal_cnot(2, 0, 1);
    let f = fidelity(&ch, &target, FidelityMode::LocalZPhases)?;
    let tt = populations(&ch)
        .iter()
        .flatten()
        .zip(populations(&target).iter().flatten())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let mut add = 0.0_f64;
    for (a, b) in [(0.7, -1.9), (PI / 2.0, PI / 2.0), (0.3, 2.1), (-2.5, 1.0)] {
        add = add.max(rotation_additivity(&p, a, b)?);
    }
    Ok(Outcome {
        pass: f > 0.99 && tt <= 1e-2 && add <= 1e-9,
        summary: format!("ideal CNOT F = {f:.6} (> 0.99), truth table error {tt:.2e} (<= 1e-2), additivity {add:.1e} (<= 1e-9)"),
        notes: vec![],
    })
}

fn c4_carr_purcell() -> Result<Outcome> {
    let inhom = SpinChainParams::chain(vec![0.4, 0.37], vec![0.0, 0.0], vec![0.0])?;
    let mut ident = 0.0_f64;
    for tau in [0.05, 0.9, 3.3] {
        let u = evolve(&carr_purcell(&inhom, tau, 1, &PulseConfig::ideal())?, &inhom, &EvolveOptions::default())?;
        let m = u.matrix();
        let tr = trace(m);
        let phase = if tr.norm() > 0.0 { tr / tr.norm() } else { ONE };
        ident = ident.max(max_abs_diff(m, &(identity(4) * phase)));
    }
    let p = SpinChainParams::uniform_chain(2, 0.4, 0.0, 0.1)?;
    let sweep = cp_sweep(&p, FRAC_PI_2, &CP_SWEEP_CYCLES)?;
    let monotone = sweep.windows(2).all(|w| w[1].2 < w[0].2);
    let infs: Vec<String> = sweep.iter().map(|s| format!("{:.2e}", s.2)).collect();
    Ok(Outcome {
        pass: ident <= 1e-9 && monotone && sweep.len() == 4,
        summary: format!(
            "J = 0 cycle identity error {ident:.1e} (<= 1e-9); infidelity at n = {:?}: {} (monotone: {monotone})",
            CP_SWEEP_CYCLES,
            infs.join(", ")
        ),
        notes: vec![],
    })
}

fn c5_rwa() -> Result<Outcome> {
    let e: Vec<f64> = [0.04, 0.02, 0.01].iter().map(|&r| rwa_infidelity(0.4, r)).collect::<Result<_>>()?;
    let r1 = e[0] / e[1];
    let r2 = e[1] / e[2];
    let ok_ratio = |r: f64| (3.0..=5.0).contains(&r);
    Ok(Outcome {
        pass: e[1] < 1e-3 && ok_ratio(r1) && ok_ratio(r2),
        summary: format!(
            "infidelity {:.3e} at Delta0/2t = 0.02 (< 1e-3); halving ratios {r1:.2}, {r2:.2} (in [3, 5])",
            e[1]
        ),
        notes: vec![],
    })
}

fn c6_readout() -> Result<Outcome> {
    let ro = ReadoutConfig::default();
    let base = ro.problem();
    let grid = &ro.sweep_grid;

    let mut mismatch = 0.0_f64;
    let mut lambda_dev = 0.0_f64;
    for &v in grid {
        let Ok(s) = solve_chain(&base.with_v_d(v)) else { continue };
        mismatch = mismatch.max(s.current_mismatch);
        let scaled = FetChainProblem { lambda: 3.7e-4, ..base.with_v_d(v) };
        let t = solve_chain(&scaled)?;
        lambda_dev = lambda_dev.max(s.voltages.iter().zip(&t.voltages).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
    }

    // Θ = 0, η = 1: N segments act as one channel N times longer
    let mut closed = 0.0_f64;
    for v_d in [0.3, 1.0, 1.5] {
        let one = solve_chain(&FetChainProblem::uniform(1, 2.0, 0.0, v_d))?.current;
        for n in 2..=8 {
            let i_n = solve_chain(&FetChainProblem::uniform(n, 2.0, 0.0, v_d))?.current;
            closed = closed.max((i_n * n as f64 / one - 1.0).abs());
        }
    }

    let start = Instant::now();
    let curves: Vec<_> =
        [1, 4, 8].iter().map(|&q| ratio_sweep_fig2a(&base, q, ro.shift, grid)).collect::<Result<_>>()?;
    let mut ordered = true;
    let mut solved = 0;
    for k in 0..grid.len() {
        let v: Vec<Option<f64>> = curves.iter().map(|c| c.points[k].ratio).collect();
        if let [Some(a), Some(b), Some(c)] = v[..] {
            ordered &= c > b && b > a;
            solved += 1;
        }
    }
    let rows = distinguish_sweep_fig2b(ro.segment(), ro.lambda, ro.theta, ro.v_d, 12, ThresholdShift::default())?;
    let mut drain = true;
    for row in rows.iter().filter(|r| r.n >= 3) {
        match (row.traces.first().and_then(|t| t.1), row.traces.last().and_then(|t| t.1)) {
            (Some(a), Some(b)) => drain &= b > a,
            _ => drain = false,
        }
    }
    let sweep_time = start.elapsed();

    let pass = mismatch <= 1e-9
        && lambda_dev <= 1e-12
        && closed <= 1e-9
        && ordered
        && drain
        && sweep_time < Duration::from_secs(10);
    Ok(Outcome {
        pass,
        summary: format!(
            "current mismatch {mismatch:.1e}, Lambda dev {lambda_dev:.1e} V, 1/N dev {closed:.1e}; \
             i=8 > i=4 > i=1 at {solved}/{} V_D: {ordered}; drain > source for 3 <= N <= 12: {drain}; sweeps {:.2} s",
            grid.len(),
            sweep_time.as_secs_f64()
        ),
        notes: vec![format!(
            "{} V_D points skipped: the drain-shifted chain cannot carry the current",
            grid.len() - solved
        )],
    })
}

fn c7_crosstalk() -> Result<Outcome> {
    let (g, caps) = crosstalk_chain(8)?;
    let target: Vec<f64> = (0..8).map(|i| 0.05 * (1.0 + 0.3 * (i as f64).sin())).collect();
    let rt = delta_roundtrip(&caps, &target)?;
    let mut one_hot = vec![0.0; 8];
    one_hot[3] = 0.05;
    let rt = rt.max(delta_roundtrip(&caps, &one_hot)?);
    let (off, on) = physical_crosstalk_fidelities(14)?;
    Ok(Outcome {
        pass: rt <= 1e-12 && on >= off,
        summary: format!(
            "round trip {rt:.1e} (<= 1e-12) at C_H/C_A = {:.3}; physical R_x(pi) F_off = {off:.4}, F_on = {on:.4}",
            g.d_a / g.d_d
        ),
        notes: vec![],
    })
}

fn csv_artifacts() -> Result<Vec<(String, String)>> {
    let tol = Tolerances::default();
    let mut out = Vec::new();
    for r in [
        run_figures(&ReadoutConfig::default(), &tol)?,
        run_gate_study(StudyMode::Ideal, 14, &tol)?,
        run_rwa_study(&tol)?,
    ] {
        out.extend(r.artifacts.into_iter().map(|a| (a.file, a.content)));
    }
    let ro = ReadoutConfig::default();
    let rough = random_substrate(&ro.problem(), 7, 0.1)?;
    let curve = ratio_sweep_fig2a(&rough, 8, ro.shift, &ro.sweep_grid)?;
    out.push(("substrate_seed7.csv".into(), qdot::readout::fig2a_csv(&[curve])?));
    Ok(out)
}

fn c8_determinism() -> Result<Outcome> {
    let a = csv_artifacts()?;
    let b = csv_artifacts()?;
    let identical = a == b && !a.is_empty();
    let names: Vec<&str> = a.iter().map(|x| x.0.as_str()).collect();
    Ok(Outcome {
        pass: identical,
        summary: format!("re-run CSVs byte-identical: {identical} ({})", names.join(", ")),
        notes: vec![],
    })
}

type Criterion = (&'static str, Duration, fn() -> Result<Outcome>);

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("reference-estimate bands", Duration::from_secs(1), c1_estimates),
        ("oracle equivalence", Duration::from_secs(10), c2_oracle),
        ("pulse algebra", Duration::from_secs(5), c3_pulse_algebra),
        ("Carr-Purcell refocusing", Duration::from_secs(10), c4_carr_purcell),
        ("RWA validation", Duration::from_secs(30), c5_rwa),
        ("readout solver", Duration::from_secs(10), c6_readout),
        ("cross-talk compensation", Duration::from_secs(60), c7_crosstalk),
        ("determinism", Duration::from_secs(60), c8_determinism),
    ];
    let mut failed = 0;
    for (k, (name, budget, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let res = run();
        let elapsed = start.elapsed();
        let in_time = elapsed < *budget;
        match res {
            Ok(o) => {
                let pass = o.pass && in_time;
                failed += usize::from(!pass);
                println!(
                    "{} {}. {name}: {} [{:.2} s, limit {} s]",
                    if pass { "PASS" } else { "FAIL" },
                    k + 1,
                    o.summary,
                    elapsed.as_secs_f64(),
                    budget.as_secs()
                );
                for n in o.notes {
                    println!("       note: {n}");
                }
            }
            Err(e) => {
                failed += 1;
                println!("FAIL {}. {name}: error: {e}", k + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE }
}
