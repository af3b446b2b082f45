//! End-to-end experiments and the run-manifest driver.
//!
//! Each experiment returns a [`RunReport`]: a list of numbers with units, the
//! check each number was held to and the verdict. Tolerances come from a
//! [`Tolerances`] value so a manifest can override them.

use std::f64::consts::{FRAC_PI_2, PI};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::capnet::{
    self, caps_from_geometry, charging_energy, coupling_j, criterion_check, derive_aux, derive_aux_literal,
    derive_params, BondCaps, CapacitanceSet, CriterionInput, CrosstalkMatrix, DeviceGeometry, Dims, QubitCaps,
    SPIN_CONVENTION_FACTOR,
};
use crate::config::{load_config, DeviceConfig, ReadoutConfig};
use crate::error::{Error, Result};
use crate::linalg::{self, max_abs_diff, CMatrix};
use crate::pulsekit::{
    carr_purcell, cnot_sequence, coupling_gate, coupling_target, crosstalk_mixing, evolve, fidelity,
    ideal_cnot, populations, rotation_pulse, rotation_target, rwa_validate, to_charge_basis, Axis, Drive,
    EvolveOptions, FidelityMode, PulseConfig, RwaValidateOptions,
};
use crate::readout::{self, distinguish_sweep_fig2b, ratio_sweep_fig2a, solve_chain, SweepCurve};
use crate::spinmodel::{SpinChainParams, DEFAULT_MAX_QUBITS};
use crate::units::{HBAR_MEV_PS, K_B_MEV_PER_K};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Multiplicative band around the order-of-magnitude estimates.
    pub estimate_factor: f64,
    /// Band for the coupling estimate.
    pub j_factor: f64,
    /// `C` in the oracle bound `C·(C_d²/D)²`.
    pub oracle_factor: f64,
    pub cnot_fidelity: f64,
    pub truth_table: f64,
    pub additivity: f64,
    pub cp_identity: f64,
    pub rwa_infidelity: f64,
    pub rwa_ratio_min: f64,
    pub rwa_ratio_max: f64,
    pub current_equality: f64,
    pub lambda_invariance: f64,
    pub closed_form: f64,
    pub roundtrip: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            estimate_factor: 3.0,
            j_factor: 10.0,
            oracle_factor: 10.0,
            cnot_fidelity: 0.99,
            truth_table: 1e-2,
            additivity: 1e-9,
            cp_identity: 1e-9,
            rwa_infidelity: 1e-3,
            rwa_ratio_min: 3.0,
            rwa_ratio_max: 5.0,
            current_equality: 1e-9,
            lambda_invariance: 1e-12,
            closed_form: 1e-9,
            roundtrip: 1e-12,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Check {
    /// `target/factor ≤ value ≤ target·factor`.
    Band { target: f64, factor: f64 },
    AtMost { limit: f64 },
    AtLeast { limit: f64 },
    Above { limit: f64 },
    Within { lo: f64, hi: f64 },
    /// Boolean property; value is 1 or 0.
    Holds,
    Recorded,
}

impl Check {
    fn verdict(&self, v: f64) -> Verdict {
        let ok = match *self {
            Check::Band { target, factor } => v >= target / factor && v <= target * factor,
            Check::AtMost { limit } => v <= limit,
            Check::AtLeast { limit } => v >= limit,
            Check::Above { limit } => v > limit,
            Check::Within { lo, hi } => v >= lo && v <= hi,
            Check::Holds => v == 1.0,
            Check::Recorded => return Verdict::Recorded,
        };
        if ok && v.is_finite() { Verdict::Pass } else { Verdict::Fail }
    }

    fn describe(&self) -> String {
        match *self {
            Check::Band { target, factor } => format!("within x{factor} of {target}"),
            Check::AtMost { limit } => format!("<= {limit:e}"),
            Check::AtLeast { limit } => format!(">= {limit}"),
            Check::Above { limit } => format!("> {limit}"),
            Check::Within { lo, hi } => format!("in [{lo}, {hi}]"),
            Check::Holds => "holds".into(),
            Check::Recorded => "recorded".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Recorded,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Quantity {
    pub name: String,
    pub value: f64,
    pub unit: String,
    pub check: Check,
    pub verdict: Verdict,
    /// Module that produced the number.
    pub source: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Artifact {
    pub file: String,
    #[serde(skip)]
    pub content: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub scenario: String,
    pub kind: ScenarioKind,
    pub quantities: Vec<Quantity>,
    pub notes: Vec<String>,
    pub artifacts: Vec<Artifact>,
    /// Kept out of JSON so repeated runs serialise identically.
    #[serde(skip)]
    pub wall_time: Duration,
}

impl RunReport {
    pub fn new(scenario: impl Into<String>, kind: ScenarioKind) -> Self {
        Self {
            scenario: scenario.into(),
            kind,
            quantities: Vec::new(),
            notes: Vec::new(),
            artifacts: Vec::new(),
            wall_time: Duration::ZERO,
        }
    }

    pub fn push(&mut self, name: &str, value: f64, unit: &str, check: Check, source: &str) -> Verdict {
        let verdict = check.verdict(value);
        self.quantities.push(Quantity {
            name: name.into(),
            value,
            unit: unit.into(),
            check,
            verdict,
            source: source.into(),
        });
        verdict
    }

    pub fn holds(&mut self, name: &str, ok: bool, source: &str) -> Verdict {
        self.push(name, if ok { 1.0 } else { 0.0 }, "bool", Check::Holds, source)
    }

    pub fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }

    pub fn quantity(&self, name: &str) -> Option<&Quantity> {
        self.quantities.iter().find(|q| q.name == name)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Quantity> {
        self.quantities.iter().filter(|q| q.verdict == Verdict::Fail)
    }

    pub fn passed(&self) -> bool {
        self.failures().next().is_none()
    }

    fn merge(&mut self, other: RunReport) {
        self.quantities.extend(other.quantities);
        self.notes.extend(other.notes);
        self.artifacts.extend(other.artifacts);
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("== {} ({}) ==\n", self.scenario, self.kind.as_str());
        for q in &self.quantities {
            let tag = match q.verdict {
                Verdict::Pass => "PASS",
                Verdict::Fail => "FAIL",
                Verdict::Recorded => "    ",
            };
            s += &format!("{tag} {} = {} {} [{}; {}]\n", q.name, fmt_value(q.value), q.unit, q.check.describe(), q.source);
        }
        for n in &self.notes {
            s += &format!("note: {n}\n");
        }
        for a in &self.artifacts {
            s += &format!("artifact: {}\n", a.file);
        }
        s
    }
}

fn fmt_value(v: f64) -> String {
    if v == 0.0 || (1e-3..1e4).contains(&v.abs()) { format!("{v:.6}") } else { format!("{v:.6e}") }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioKind {
    DeriveReport,
    OracleCheck,
    GateStudy,
    RwaStudy,
    Fig2a,
    Fig2b,
    Criterion,
}

impl ScenarioKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ScenarioKind::DeriveReport => "derive-report",
            ScenarioKind::OracleCheck => "oracle-check",
            ScenarioKind::GateStudy => "gate-study",
            ScenarioKind::RwaStudy => "rwa-study",
            ScenarioKind::Fig2a => "fig2a",
            ScenarioKind::Fig2b => "fig2b",
            ScenarioKind::Criterion => "criterion",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StudyMode {
    Ideal,
    Physical,
}

// ---------------------------------------------------------------------------
// capnet

fn bulk_index(n: usize) -> usize {
    (n.saturating_sub(1)) / 2
}

/// Middle-qubit charging energy and middle-bond coupling of a chain.
fn bulk_estimates(caps: &CapacitanceSet) -> Result<(f64, f64, f64)> {
    let n = caps.n_qubits();
    let i = bulk_index(n);
    let a = derive_aux(caps, i, Dims::OneD)?;
    let j = if n > 1 { coupling_j(&a, &derive_aux(caps, i + 1, Dims::OneD)?) } else { 0.0 };
    Ok((charging_energy(&a), j, caps.qubits[i].c_b))
}

/// `1/(R C)` in THz for `R` in Ω and `C` in aF.
fn rc_rate_thz(r_ohm: f64, c_af: f64) -> f64 {
    1.0 / (r_ohm * c_af * 1e-6)
}

/// Both reference devices against the order-of-magnitude estimates.
pub fn run_reference_estimates(tol: &Tolerances) -> Result<RunReport> {
    let mut r = RunReport::new("reference-estimates", ScenarioKind::DeriveReport);
    let f = tol.estimate_factor;

    let g1 = DeviceGeometry::nominal(8);
    let caps1 = caps_from_geometry(&g1)?;
    let (ec, j, c_b) = bulk_estimates(&caps1)?;
    r.push("geom1.E_C", ec, "meV", Check::Band { target: 13.0, factor: f }, "capnet");
    r.push("geom1.J", j, "meV", Check::Band { target: 0.1, factor: tol.j_factor }, "capnet");
    let rate = rc_rate_thz(1e6, c_b);
    r.push("geom1.rate_CB_1MOhm", rate, "THz", Check::Band { target: 3.1, factor: f }, "capnet");
    let aux = derive_aux(&caps1, bulk_index(8), Dims::OneD)?;
    let c_int_reduced = aux.d / aux.c_b;
    r.push("geom1.rate_D_over_Cb_1MOhm", rc_rate_thz(1e6, c_int_reduced), "THz", Check::Recorded, "capnet");
    r.push("geom1.E_C_in_K", ec / K_B_MEV_PER_K, "K", Check::Recorded, "capnet");
    let lit = derive_aux_literal(&caps1, bulk_index(8))?;
    r.push("geom1.E_C_literal_aux", charging_energy(&lit), "meV", Check::Recorded, "capnet");
    let all_j = capnet::chain_couplings(&caps1)?;
    r.note(format!(
        "geometry 1 bond couplings (meV): {}",
        all_j.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>().join(", ")
    ));
    r.note(format!(
        "J band is x{} wide: the reduced charging energy and the closed-form coupling differ in prefactor; \
         the spin convention factor {SPIN_CONVENTION_FACTOR} relates them",
        tol.j_factor
    ));
    r.note(format!(
        "rate uses C_int = C_B = {c_b:.4} aF; C_int = D/C_b = {c_int_reduced:.4} aF gives the recorded alternative"
    ));

    let crit = criterion_check(&CriterionInput {
        temperature_mev: 0.1 * K_B_MEV_PER_K,
        j_mev: j,
        delta0_mev: 0.2,
        t_mev: 0.4,
        r_int_ohm: 1e6,
        c_int_af: c_b,
        margin: capnet::DEFAULT_MARGIN,
    })?;
    for l in &crit.links {
        r.push(&format!("geom1.criterion[{}].ratio", l.relation), l.ratio, "1", Check::Recorded, "capnet");
    }

    let g2 = DeviceGeometry::compact(8);
    let caps2 = caps_from_geometry(&g2)?;
    let (ec2, j2, c_b2) = bulk_estimates(&caps2)?;
    r.push("geom2.J", j2, "meV", Check::Band { target: 90.0 * K_B_MEV_PER_K, factor: f }, "capnet");
    r.push("geom2.E_C", ec2, "meV", Check::Recorded, "capnet");
    r.push("geom2.rate_CB_1MOhm", rc_rate_thz(1e6, c_b2), "THz", Check::Recorded, "capnet");
    r.note(format!("temperatures converted with k_B = {K_B_MEV_PER_K} meV/K"));
    Ok(r)
}

/// Derived parameters of a configured device.
pub fn run_derive_report(name: &str, cfg: &DeviceConfig) -> Result<RunReport> {
    let mut r = RunReport::new(name, ScenarioKind::DeriveReport);
    let d = derive_params(&cfg.caps)?;
    for (i, ec) in d.charging_energy_mev.iter().enumerate() {
        r.push(&format!("E_C[{i}]"), *ec, "meV", Check::Recorded, "capnet");
    }
    for (i, j) in d.j_mev.iter().enumerate() {
        r.push(&format!("J[{i},{}]", i + 1), *j, "meV", Check::Recorded, "capnet");
    }
    for (i, j) in d.jx_mev.iter().enumerate() {
        r.push(&format!("Jx[{i}]"), *j, "meV", Check::Recorded, "capnet");
    }
    for (i, j) in d.jy_mev.iter().enumerate() {
        r.push(&format!("Jy[{i}]"), *j, "meV", Check::Recorded, "capnet");
    }
    for (i, q) in cfg.caps.qubits.iter().enumerate() {
        r.push(&format!("C_B[{i}]"), q.c_b, "aF", Check::Recorded, "capnet");
    }
    let ok = d.charging_energy_mev.iter().all(|e| e.is_finite() && *e > 0.0);
    r.holds("charging energies positive", ok, "capnet");
    // a diagnostic only: compensation pivots and does not need dominance
    let dominant = if d.crosstalk_diagonally_dominant { 1.0 } else { 0.0 };
    r.push("cross-talk matrix diagonally dominant", dominant, "bool", Check::Recorded, "capnet");
    Ok(r)
}

/// `criterion_check` on a configured device, using its middle qubit and bond.
pub fn run_criterion(name: &str, cfg: &DeviceConfig, margin: f64) -> Result<RunReport> {
    let mut r = RunReport::new(name, ScenarioKind::Criterion);
    let (_, j, c_b) = bulk_estimates(&cfg.caps)?;
    let inp = CriterionInput {
        temperature_mev: cfg.temperature_k * K_B_MEV_PER_K,
        j_mev: j.abs(),
        delta0_mev: cfg.delta0_mev,
        t_mev: cfg.t_mev,
        r_int_ohm: cfg.r_int_ohm,
        c_int_af: c_b,
        margin,
    };
    let rep = criterion_check(&inp)?;
    for l in &rep.links {
        let check = if l.strict_only { Check::Above { limit: 1.0 } } else { Check::AtLeast { limit: margin } };
        r.push(&format!("{} ratio", l.relation), l.ratio, "1", check, "capnet");
    }
    r.push("1/(C_int R_int)", rep.cr_rate_thz, "THz", Check::Recorded, "capnet");
    r.push("hbar/(C_int R_int)", rep.cr_energy_mev, "meV", Check::Recorded, "capnet");
    r.holds("R_int > R_K", rep.r_int_above_rk, "capnet");
    r.note(format!(
        "T = {} K = {:.4e} meV, J = {j:.4e} meV, Delta0 = {} meV, t = {} meV, C_int = C_B = {c_b:.4} aF",
        cfg.temperature_k, inp.temperature_mev, cfg.delta0_mev, cfg.t_mev
    ));
    Ok(r)
}

/// One randomized two-qubit network with `C_d²/D` below `eps_max`.
fn random_pair(rng: &mut ChaCha8Rng, eps_max: f64) -> Result<(CapacitanceSet, f64)> {
    loop {
        let mut q = || QubitCaps {
            c_a: rng.random_range(0.1..1.0),
            c_b: rng.random_range(0.2..1.0),
            c_c: rng.random_range(0.1..1.0),
            c_h: 0.0,
            c_i: 0.0,
        };
        let (mut q0, mut q1) = (q(), q());
        q0.c_i = rng.random_range(0.0..0.2) * q0.c_a;
        q1.c_h = rng.random_range(0.0..0.2) * q1.c_a;
        let c_d = rng.random_range(0.002..0.3);
        let c_e = rng.random_range(0.0..0.3) * c_d;
        let caps = CapacitanceSet {
            qubits: vec![q0, q1],
            couplings: capnet::Couplings::Chain { bonds: vec![BondCaps { c_d, c_e }] },
        };
        let a0 = derive_aux(&caps, 0, Dims::OneD)?;
        let a1 = derive_aux(&caps, 1, Dims::OneD)?;
        let eps = a0.coupling_ratio().max(a1.coupling_ratio());
        if eps < eps_max {
            return Ok((caps, eps));
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleSample {
    pub eps: f64,
    pub coupling_rel: f64,
    pub curvature_rel: f64,
}

/// Oracle versus closed form over `n_random` networks drawn from `seed`.
pub fn oracle_samples(n_random: usize, seed: u64) -> Result<Vec<OracleSample>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n_random);
    for _ in 0..n_random {
        let (caps, eps) = random_pair(&mut rng, 0.05)?;
        let gates = [rng.random_range(-0.1..0.1), rng.random_range(-0.1..0.1)];
        let a0 = derive_aux(&caps, 0, Dims::OneD)?;
        let a1 = derive_aux(&caps, 1, Dims::OneD)?;
        let jo = capnet::oracle_pair_coupling(&caps, 0, 1, &gates)?;
        let jc = SPIN_CONVENTION_FACTOR * coupling_j(&a0, &a1);
        let mut curv = 0.0_f64;
        for (i, a) in [a0, a1].iter().enumerate() {
            let co = capnet::oracle_curvature(&caps, i, &gates)?;
            curv = curv.max((co / (2.0 * charging_energy(a)) - 1.0).abs());
        }
        out.push(OracleSample { eps, coupling_rel: (jo / jc - 1.0).abs(), curvature_rel: curv });
    }
    Ok(out)
}

pub fn run_oracle_check(n_random: usize, seed: u64, tol: &Tolerances) -> Result<RunReport> {
    let mut r = RunReport::new("oracle-check", ScenarioKind::OracleCheck);
    if n_random < 3 {
        return Err(Error::InvalidInput("oracle check needs at least 3 networks".into()));
    }
    let samples = oracle_samples(n_random, seed)?;
    let c = tol.oracle_factor;
    let within2 = samples.iter().filter(|s| s.coupling_rel <= c * s.eps * s.eps).count();
    let within2c = samples.iter().filter(|s| s.curvature_rel <= c * s.eps * s.eps).count();
    r.push("networks", n_random as f64, "count", Check::Recorded, "scenarios");
    r.push(
        "coupling within C(Cd^2/D)^2",
        within2 as f64 / n_random as f64,
        "fraction",
        Check::AtLeast { limit: 1.0 },
        "capnet",
    );
    r.push(
        "curvature within C(Cd^2/D)^2",
        within2c as f64 / n_random as f64,
        "fraction",
        Check::AtLeast { limit: 1.0 },
        "capnet",
    );
    let max1 = samples.iter().map(|s| s.coupling_rel / s.eps).fold(0.0, f64::max);
    let max1c = samples.iter().map(|s| s.curvature_rel / s.eps).fold(0.0, f64::max);
    r.push("max coupling rel/(Cd^2/D)", max1, "1", Check::AtMost { limit: c }, "capnet");
    r.push("max curvature rel/(Cd^2/D)", max1c, "1", Check::AtMost { limit: c }, "capnet");
    let max2 = samples.iter().map(|s| s.coupling_rel / (s.eps * s.eps)).fold(0.0, f64::max);
    r.push("max coupling rel/(Cd^2/D)^2", max2, "1", Check::Recorded, "capnet");

    // terciles by eps
    let mut sorted = samples.clone();
    sorted.sort_by(|a, b| a.eps.total_cmp(&b.eps));
    let k = sorted.len() / 3;
    let bins = [&sorted[..k], &sorted[k..2 * k], &sorted[2 * k..]];
    let means: Vec<f64> =
        bins.iter().map(|b| b.iter().map(|s| s.coupling_rel).sum::<f64>() / b.len() as f64).collect();
    for (i, m) in means.iter().enumerate() {
        r.push(&format!("mean coupling deviation, bin {}", i + 1), *m, "1", Check::Recorded, "capnet");
    }
    r.holds("deviation grows with Cd^2/D", means.windows(2).all(|w| w[1] > w[0]), "capnet");

    let q = QubitCaps { c_a: 0.2, c_b: 0.5, c_c: 0.3, c_h: 0.0, c_i: 0.0 };
    let decoupled = CapacitanceSet::uniform_chain(2, q, BondCaps::default());
    let jo = capnet::oracle_pair_coupling(&decoupled, 0, 1, &[0.05, -0.02])?;
    let a = derive_aux(&decoupled, 0, Dims::OneD)?;
    let b = derive_aux(&decoupled, 1, Dims::OneD)?;
    r.holds("decoupled network has zero coupling", jo.abs() < 1e-10 && coupling_j(&a, &b) == 0.0, "capnet");

    let weak = CapacitanceSet::uniform_chain(2, q, BondCaps { c_d: 1e-5, c_e: 0.0 });
    let a = derive_aux(&weak, 0, Dims::OneD)?;
    let b = derive_aux(&weak, 1, Dims::OneD)?;
    let factor = capnet::oracle_pair_coupling(&weak, 0, 1, &[0.0, 0.0])? / coupling_j(&a, &b);
    r.push("empirical spin convention factor", factor, "1", Check::Recorded, "capnet");
    r.push("frozen spin convention factor", SPIN_CONVENTION_FACTOR, "1", Check::Recorded, "capnet");
    r.note(
        "the closed forms are first order in Cd^2/D; the second-order bound is reported as measured \
         and the first-order bound alongside it",
    );
    Ok(r)
}

// ---------------------------------------------------------------------------
// pulsekit

fn phase_aligned_identity_error(u: &CMatrix) -> f64 {
    let tr = linalg::trace(u);
    let phase = if tr.norm() > 0.0 { tr / tr.norm() } else { linalg::ONE };
    max_abs_diff(u, &(linalg::identity(u.nrows()) * phase))
}

/// Carr-Purcell infidelity to `exp(−iθ I_x I_x)` at fixed θ for each cycle count.
pub fn cp_sweep(p: &SpinChainParams, theta: f64, cycles: &[usize]) -> Result<Vec<(usize, f64, f64)>> {
    let j = p.coupling(0, 1);
    let total = HBAR_MEV_PS * theta / j.abs();
    let target = coupling_target(p.n_qubits, 0, 1, -theta * j.signum());
    let opts = EvolveOptions::default();
    cycles
        .iter()
        .map(|&n| {
            let tau = total / (4.0 * n as f64);
            let seq = carr_purcell(p, tau, n, &PulseConfig::ideal())?;
            let u = evolve(&seq, p, &opts)?;
            Ok((n, tau, 1.0 - fidelity(u.matrix(), &target, FidelityMode::GlobalPhase)?))
        })
        .collect()
}

pub const CP_SWEEP_CYCLES: [usize; 4] = [4, 8, 16, 32];

pub fn run_gate_study(mode: StudyMode, max_qubits: usize, tol: &Tolerances) -> Result<RunReport> {
    match mode {
        StudyMode::Ideal => gate_study_ideal(max_qubits, tol),
        StudyMode::Physical => gate_study_physical(max_qubits, tol),
    }
}

fn gate_study_ideal(max_qubits: usize, tol: &Tolerances) -> Result<RunReport> {
    let mut r = RunReport::new("gate-study-ideal", ScenarioKind::GateStudy);
    let opts = EvolveOptions::default();
    let cfg = PulseConfig::ideal();
    let p2 = SpinChainParams::uniform_chain(2, 0.4, 0.0, 0.1)?.with_max_qubits(max_qubits);

    let u = evolve(&cnot_sequence(&p2, 0, 1, &cfg)?, &p2, &opts)?;
    let ch = to_charge_basis(u.matrix(), 2);
    let target = ideal_cnot(2, 0, 1);
    r.push("CNOT fidelity (local z)", fidelity(&ch, &target, FidelityMode::LocalZPhases)?, "1",
        Check::AtLeast { limit: tol.cnot_fidelity }, "pulsekit");
    r.push("CNOT fidelity (global phase)", fidelity(&ch, &target, FidelityMode::GlobalPhase)?, "1", Check::Recorded, "pulsekit");
    let pops = populations(&ch);
    let ideal = populations(&target);
    let tt = pops.iter().flatten().zip(ideal.iter().flatten()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    r.push("CNOT truth-table error", tt, "1", Check::AtMost { limit: tol.truth_table }, "pulsekit");

    let ug = evolve(&coupling_gate(&p2, 0, 1, -PI, &cfg)?, &p2, &opts)?;
    r.push("coupling gate fidelity, theta = -pi", fidelity(ug.matrix(), &coupling_target(2, 0, 1, -PI), FidelityMode::GlobalPhase)?,
        "1", Check::AtLeast { limit: tol.cnot_fidelity }, "pulsekit");
    let ug = evolve(&coupling_gate(&p2, 0, 1, PI / 3.0, &cfg)?, &p2, &opts)?;
    r.push("coupling gate fidelity, theta = pi/3", fidelity(ug.matrix(), &coupling_target(2, 0, 1, PI / 3.0), FidelityMode::GlobalPhase)?,
        "1", Check::AtLeast { limit: tol.cnot_fidelity }, "pulsekit");

    let add = rotation_additivity(&p2, 0.7, -1.9)?;
    r.push("rotation additivity error", add, "1", Check::AtMost { limit: tol.additivity }, "pulsekit");

    let p_off = SpinChainParams::uniform_chain(2, 0.4, 0.0, 0.0)?;
    let unreachable = matches!(coupling_gate(&p_off, 0, 1, -PI, &cfg), Err(Error::UnreachableGate(_)));
    r.holds("J = 0 coupling gate reports unreachable", unreachable, "pulsekit");

    let inhom = SpinChainParams::chain(vec![0.4, 0.37], vec![0.0, 0.0], vec![0.0])?;
    let u = evolve(&carr_purcell(&inhom, 0.9, 1, &cfg)?, &inhom, &opts)?;
    r.push("J = 0 Carr-Purcell cycle, distance from identity", phase_aligned_identity_error(u.matrix()), "1",
        Check::AtMost { limit: tol.cp_identity }, "pulsekit");

    let sweep = cp_sweep(&p2, FRAC_PI_2, &CP_SWEEP_CYCLES)?;
    let mut csv = String::from("n_cycles,tau_ps,infidelity\n");
    for (n, tau, inf) in &sweep {
        r.push(&format!("Carr-Purcell infidelity, n = {n}"), *inf, "1", Check::Recorded, "pulsekit");
        csv += &format!("{n},{tau:.10e},{inf:.10e}\n");
    }
    r.holds("Carr-Purcell infidelity falls as tau shrinks", sweep.windows(2).all(|w| w[1].2 < w[0].2), "pulsekit");
    r.artifacts.push(Artifact { file: "cp_sweep.csv".into(), content: csv });

    let p3 = SpinChainParams::uniform_chain(3, 0.4, 0.0, 0.1).map(|p| p.with_max_qubits(max_qubits));
    match p3.and_then(|p| p.validate().map(|_| p)) {
        Ok(p3) => {
            let u = evolve(&coupling_gate(&p3, 0, 1, -FRAC_PI_2, &cfg)?, &p3, &opts)?;
            let f = fidelity(u.matrix(), &coupling_target(3, 0, 1, -FRAC_PI_2), FidelityMode::GlobalPhase)?;
            r.push("N = 3 spectator-coupling infidelity", 1.0 - f, "1", Check::Recorded, "pulsekit");
            r.note("global pi_y refocusing leaves the spectator bond (1,2) active during the (0,1) gate");
        }
        Err(e) => r.note(format!("N = 3 study skipped: {e}")),
    }
    Ok(r)
}

/// `‖U(R(a)·R(b)) − U(R(a+b))‖_max` for ideal x rotations on qubit 0.
pub fn rotation_additivity(p: &SpinChainParams, a: f64, b: f64) -> Result<f64> {
    let cfg = PulseConfig::ideal();
    let opts = EvolveOptions::default();
    let ab = rotation_pulse(p, 0, Axis::X, a, &cfg)?.then(rotation_pulse(p, 0, Axis::X, b, &cfg)?);
    let u1 = evolve(&ab, p, &opts)?;
    let u2 = evolve(&rotation_pulse(p, 0, Axis::X, a + b, &cfg)?, p, &opts)?;
    Ok(max_abs_diff(u1.matrix(), u2.matrix()))
}

/// Chain whose cross gate capacitances are `(d_A/d_D)·C_A`.
pub fn crosstalk_chain(n: usize) -> Result<(DeviceGeometry, CapacitanceSet)> {
    let g = DeviceGeometry::nominal(n);
    let mut caps = caps_from_geometry(&g)?;
    let ratio = g.d_a / g.d_d;
    for (i, q) in caps.qubits.iter_mut().enumerate() {
        let x = ratio * q.c_a;
        q.c_h = if i > 0 { x } else { 0.0 };
        q.c_i = if i + 1 < n { x } else { 0.0 };
    }
    Ok((g, caps))
}

/// Largest relative error of `Δ(v(Δ*))` against `Δ*`.
pub fn delta_roundtrip(caps: &CapacitanceSet, target: &[f64]) -> Result<f64> {
    let v = capnet::crosstalk_compensate(caps, target)?;
    let back = capnet::drive_delta(caps, &v)?;
    let scale = target.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    Ok(back.iter().zip(target).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / scale)
}

/// Physical `R'_x(π)` on the middle qubit of a 3-chain, with and without
/// cross-talk compensation. Returns `(F_off, F_on)`.
pub fn physical_crosstalk_fidelities(max_qubits: usize) -> Result<(f64, f64)> {
    let (_, caps) = crosstalk_chain(3)?;
    let m = CrosstalkMatrix::from_caps(&caps)?;
    let p = SpinChainParams::uniform_chain(3, 0.4, 0.0, 0.008)?.with_max_qubits(max_qubits);
    let cfg = PulseConfig::physical(0.08);
    let seq = rotation_pulse(&p, 1, Axis::X, PI, &cfg)?;
    let target = rotation_target(3, 1, Axis::X, PI);
    let mut f = [0.0; 2];
    for (k, comp) in [false, true].into_iter().enumerate() {
        let opts = EvolveOptions { crosstalk: Some(crosstalk_mixing(&m, comp)?), ..Default::default() };
        let u = evolve(&seq, &p, &opts)?;
        f[k] = fidelity(u.matrix(), &target, FidelityMode::GlobalPhase)?;
    }
    Ok((f[0], f[1]))
}

fn gate_study_physical(max_qubits: usize, tol: &Tolerances) -> Result<RunReport> {
    let mut r = RunReport::new("gate-study-physical", ScenarioKind::GateStudy);
    let (g, caps8) = crosstalk_chain(8)?;
    let target: Vec<f64> = (0..8).map(|i| 0.05 * (1.0 + 0.3 * (i as f64).sin())).collect();
    r.push("8-qubit drive round-trip error", delta_roundtrip(&caps8, &target)?, "1",
        Check::AtMost { limit: tol.roundtrip }, "capnet");
    r.push("cross-talk ratio C_H/C_A", caps8.qubits[1].c_h / caps8.qubits[1].c_a, "1", Check::Recorded, "capnet");
    r.note(format!("cross gate capacitance set to (d_A/d_D) C_A = {:.3} C_A", g.d_a / g.d_d));

    match physical_crosstalk_fidelities(max_qubits) {
        Ok((off, on)) => {
            r.push("physical R_x(pi) fidelity, compensation off", off, "1", Check::Recorded, "pulsekit");
            r.push("physical R_x(pi) fidelity, compensation on", on, "1", Check::Recorded, "pulsekit");
            r.holds("compensation does not lower fidelity", on >= off, "pulsekit");
        }
        Err(e @ Error::DimensionOverflow { .. }) => r.note(format!("N = 3 cross-talk study skipped: {e}")),
        Err(e) => return Err(e),
    }

    let p2 = SpinChainParams::uniform_chain(2, 0.4, 0.0, 0.008)?.with_max_qubits(max_qubits);
    match cnot_sequence(&p2, 0, 1, &PulseConfig::physical(0.08)) {
        Ok(seq) => {
            let u = evolve(&seq, &p2, &EvolveOptions::default())?;
            let ch = to_charge_basis(u.matrix(), 2);
            r.push("physical CNOT fidelity (local z)", fidelity(&ch, &ideal_cnot(2, 0, 1), FidelityMode::LocalZPhases)?,
                "1", Check::Recorded, "pulsekit");
        }
        Err(e) => r.note(format!("physical CNOT unavailable: {e}")),
    }
    Ok(r)
}

pub const RWA_SWEEP_RATIOS: [f64; 3] = [0.04, 0.02, 0.01];

/// Ten Rabi cycles of a resonant drive at `Δ₀/(2t) = ratio`; returns the
/// largest trajectory infidelity.
pub fn rwa_infidelity(t: f64, ratio: f64) -> Result<f64> {
    let d0 = 2.0 * t * ratio;
    let p = SpinChainParams::chain(vec![t], vec![0.0], vec![])?;
    let duration = 10.0 * 4.0 * PI * HBAR_MEV_PS / d0;
    Ok(rwa_validate(&p, &[Drive::resonant(t, d0, 0.0)], duration, &RwaValidateOptions::default())?.max_infidelity)
}

pub fn run_rwa_study(tol: &Tolerances) -> Result<RunReport> {
    let mut r = RunReport::new("rwa-study", ScenarioKind::RwaStudy);
    let t = 0.4;
    let inf: Vec<f64> = RWA_SWEEP_RATIOS.iter().map(|&x| rwa_infidelity(t, x)).collect::<Result<_>>()?;
    let mut csv = String::from("delta0_over_2t,max_infidelity\n");
    for (x, e) in RWA_SWEEP_RATIOS.iter().zip(&inf) {
        r.push(&format!("max infidelity, Delta0/2t = {x}"), *e, "1",
            if *x == 0.02 { Check::AtMost { limit: tol.rwa_infidelity } } else { Check::Recorded }, "pulsekit");
        csv += &format!("{x},{e:.10e}\n");
    }
    for w in inf.windows(2).enumerate() {
        let (k, pair) = w;
        let ratio = pair[0] / pair[1];
        r.push(&format!("error reduction {} -> {}", RWA_SWEEP_RATIOS[k], RWA_SWEEP_RATIOS[k + 1]), ratio, "1",
            Check::Within { lo: tol.rwa_ratio_min, hi: tol.rwa_ratio_max },
            "pulsekit");
    }
    r.note(format!("t = {t} meV, J = 0, 10 Rabi cycles, trajectory sampled every 8 substeps"));
    r.artifacts.push(Artifact { file: "rwa_sweep.csv".into(), content: csv });
    Ok(r)
}

// ---------------------------------------------------------------------------
// readout

fn trace_qubits(n: usize) -> Vec<usize> {
    let mut q = vec![1, n / 2, n];
    q.retain(|&i| i >= 1);
    q.dedup();
    q
}

pub fn run_fig2a(ro: &ReadoutConfig, tol: &Tolerances) -> Result<RunReport> {
    let mut r = RunReport::new("fig2a", ScenarioKind::Fig2a);
    let base = ro.problem();
    let qubits = trace_qubits(base.n_segments());
    let curves: Vec<SweepCurve> =
        qubits.iter().map(|&q| ratio_sweep_fig2a(&base, q, ro.shift, &ro.sweep_grid)).collect::<Result<_>>()?;

    let mut ordered = true;
    let mut bounded = true;
    let mut skipped = 0;
    for k in 0..ro.sweep_grid.len() {
        let vals: Vec<Option<f64>> = curves.iter().map(|c| c.points[k].ratio).collect();
        if vals.iter().any(Option::is_none) {
            skipped += 1;
            continue;
        }
        let v: Vec<f64> = vals.into_iter().flatten().collect();
        ordered &= v.windows(2).all(|w| w[1] > w[0]);
        bounded &= v.iter().all(|x| x.is_finite() && *x < 1.0);
    }
    let label = qubits.iter().rev().map(|q| format!("i={q}")).collect::<Vec<_>>().join(" > ");
    r.holds(&format!("ordering {label} at every solved V_D"), ordered, "readout");
    r.holds("ratios finite and below 1", bounded, "readout");
    r.push("skipped V_D points", skipped as f64, "count", Check::Recorded, "readout");
    for c in &curves {
        for p in c.points.iter().filter(|p| p.ratio.is_none()) {
            r.note(format!("i={} V_D={} skipped: {}", c.qubit, p.x, p.note.as_deref().unwrap_or("")));
        }
        if let Some(p) = c.points.iter().find(|p| (p.x - 1.5).abs() < 1e-12) {
            if let Some(v) = p.ratio {
                r.push(&format!("ratio i={} at V_D = 1.5 V", c.qubit), v, "1", Check::Recorded, "readout");
            }
        }
    }
    solver_diagnostics(&mut r, &base, &ro.sweep_grid, tol);
    r.artifacts.push(Artifact { file: "fig2a.csv".into(), content: readout::fig2a_csv(&curves)? });
    Ok(r)
}

fn solver_diagnostics(r: &mut RunReport, base: &readout::FetChainProblem, grid: &[f64], tol: &Tolerances) {
    let mut mismatch = 0.0_f64;
    let mut residual = 0.0_f64;
    let mut iterations = 0;
    let mut monotone = true;
    for &v in grid {
        if let Ok(s) = solve_chain(&base.with_v_d(v)) {
            mismatch = mismatch.max(s.current_mismatch);
            residual = residual.max(s.residual);
            iterations = iterations.max(s.iterations);
            monotone &= s.voltages.windows(2).all(|w| w[1] >= w[0]);
        }
    }
    r.push("max per-segment current mismatch", mismatch, "1", Check::AtMost { limit: tol.current_equality }, "readout");
    r.push("max drain residual", residual, "V", Check::AtMost { limit: readout::DRAIN_TOLERANCE }, "readout");
    r.push("max bisection iterations", iterations as f64, "count", Check::AtMost { limit: readout::MAX_BISECTIONS as f64 }, "readout");
    r.holds("node voltages nondecreasing", monotone, "readout");
}

pub fn run_fig2b(ro: &ReadoutConfig) -> Result<RunReport> {
    let mut r = RunReport::new("fig2b", ScenarioKind::Fig2b);
    let rows = distinguish_sweep_fig2b(ro.segment(), ro.lambda, ro.theta, ro.v_d, ro.max_n, ro.shift)?;
    let mut drain_wins = true;
    let mut bounded = true;
    for row in &rows {
        let first = row.traces.first().and_then(|t| t.1);
        let last = row.traces.last().and_then(|t| t.1);
        bounded &= row.traces.iter().all(|t| t.1.is_some_and(|x| x.is_finite() && x < 1.0));
        if row.n >= 3 {
            match (first, last) {
                (Some(a), Some(b)) => drain_wins &= b > a,
                _ => drain_wins = false,
            }
        }
    }
    r.holds("drain-side trace exceeds source-side trace for N >= 3", drain_wins, "readout");
    r.holds("ratios finite and below 1", bounded, "readout");
    if let Some(row) = rows.first() {
        if let Some(v) = row.traces[0].1 {
            r.push("ratio N=2, i=1", v, "1", Check::Recorded, "readout");
        }
    }
    r.note(format!("V_D = {} V, shift {} of V_g - V_th", ro.v_d, ro.shift.fraction));
    r.artifacts.push(Artifact { file: "fig2b.csv".into(), content: readout::fig2b_csv(&rows)? });
    Ok(r)
}

pub fn run_figures(ro: &ReadoutConfig, tol: &Tolerances) -> Result<RunReport> {
    let mut r = run_fig2a(ro, tol)?;
    r.merge(run_fig2b(ro)?);
    r.scenario = "figures".into();
    Ok(r)
}

// ---------------------------------------------------------------------------
// manifests

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub n_random: Option<usize>,
    pub margin: Option<f64>,
    pub mode: Option<StudyMode>,
    pub max_qubits: Option<usize>,
    pub sweep_grid: Option<Vec<f64>>,
    pub max_n: Option<usize>,
    pub v_d: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub kind: ScenarioKind,
    /// Device config, relative to the manifest.
    #[serde(default)]
    pub config: Option<PathBuf>,
    #[serde(default)]
    pub overrides: Overrides,
    /// Output subdirectory; defaults to `name`.
    #[serde(default)]
    pub output: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub scenarios: Vec<Scenario>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub workers: Option<usize>,
}

impl Manifest {
    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        let mut seen = std::collections::BTreeSet::new();
        for s in &self.scenarios {
            if !seen.insert(&s.name) {
                bad.push(format!("duplicate scenario name '{}'", s.name));
            }
            if s.kind == ScenarioKind::Criterion && s.config.is_none() {
                bad.push(format!("scenario '{}': criterion needs a config", s.name));
            }
            if let Some(g) = &s.overrides.sweep_grid {
                if let Err(e) = crate::config::check_grid(g) {
                    bad.push(format!("scenario '{}': sweep_grid: {e}", s.name));
                }
            }
        }
        if self.scenarios.is_empty() {
            bad.push("manifest lists no scenarios".into());
        }
        if bad.is_empty() { Ok(()) } else { Err(Error::Config(bad.join("; "))) }
    }
}

pub fn load_manifest(path: &Path) -> Result<Manifest> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("{}: cannot read: {e}", path.display())))?;
    let m: Manifest = serde_json::from_str(&text).map_err(|e| {
        Error::Config(format!("{}: line {} column {}: {e}", path.display(), e.line(), e.column()))
    })?;
    m.validate()?;
    Ok(m)
}

/// Shared settings from the command line or process environment.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSettings {
    pub max_qubits: usize,
    pub tolerances: Tolerances,
}

impl Default for RunSettings {
    fn default() -> Self {
        Self { max_qubits: DEFAULT_MAX_QUBITS, tolerances: Tolerances::default() }
    }
}

pub fn run_scenario(s: &Scenario, base_dir: &Path, settings: &RunSettings) -> Result<RunReport> {
    let start = Instant::now();
    let cfg = match &s.config {
        Some(p) => Some(load_config(&base_dir.join(p))?.config),
        None => None,
    };
    let o = &s.overrides;
    let tol = &settings.tolerances;
    let max_qubits = o.max_qubits.unwrap_or(settings.max_qubits).min(settings.max_qubits);
    let mut ro = cfg.as_ref().map(|c| c.readout.clone()).unwrap_or_default();
    if let Some(g) = &o.sweep_grid {
        ro.sweep_grid = g.clone();
    }
    if let Some(n) = o.max_n {
        ro.max_n = n;
    }
    if let Some(v) = o.v_d {
        ro.v_d = v;
    }
    let mut report = match s.kind {
        ScenarioKind::DeriveReport => match &cfg {
            Some(c) => run_derive_report(&s.name, c)?,
            None => run_reference_estimates(tol)?,
        },
        ScenarioKind::OracleCheck => {
            let seed = o.seed.or(cfg.as_ref().map(|c| c.seed)).unwrap_or(1);
            run_oracle_check(o.n_random.unwrap_or(50), seed, tol)?
        }
        ScenarioKind::GateStudy => run_gate_study(o.mode.unwrap_or(StudyMode::Ideal), max_qubits, tol)?,
        ScenarioKind::RwaStudy => run_rwa_study(tol)?,
        ScenarioKind::Fig2a => run_fig2a(&ro, tol)?,
        ScenarioKind::Fig2b => run_fig2b(&ro)?,
        ScenarioKind::Criterion => {
            let c = cfg.as_ref().ok_or_else(|| Error::Config("criterion needs a config".into()))?;
            run_criterion(&s.name, c, o.margin.unwrap_or(c.margin))?
        }
    };
    report.scenario = s.name.clone();
    report.wall_time = start.elapsed();
    Ok(report)
}

/// Runs every scenario on at most `workers` threads; reports keep manifest order.
pub fn run_manifest(m: &Manifest, base_dir: &Path, settings: &RunSettings) -> Vec<Result<RunReport>> {
    let n = m.scenarios.len();
    let workers = m
        .workers
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |x| x.get()))
        .clamp(1, n.max(1));
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<Result<RunReport>>>> = Mutex::new((0..n).map(|_| None).collect());
    let settings = RunSettings { tolerances: m.tolerances.clone(), ..settings.clone() };
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::Relaxed);
                if k >= n {
                    break;
                }
                let out = run_scenario(&m.scenarios[k], base_dir, &settings);
                slots.lock().expect("no worker panics while holding the lock")[k] = Some(out);
            });
        }
    });
    slots.into_inner().expect("workers joined").into_iter().map(|r| r.expect("every slot filled")).collect()
}

/// Consolidated JSON for a set of reports.
pub fn consolidated_json(reports: &[RunReport]) -> Result<String> {
    #[derive(Serialize)]
    struct Summary<'a> {
        all_pass: bool,
        failures: Vec<String>,
        reports: &'a [RunReport],
    }
    let failures = reports
        .iter()
        .flat_map(|r| r.failures().map(move |q| format!("{}: {}", r.scenario, q.name)))
        .collect();
    let s = Summary { all_pass: reports.iter().all(RunReport::passed), failures, reports };
    Ok(serde_json::to_string_pretty(&s)? + "\n")
}

/// Writes `report.json` and every artifact under `dir`.
pub fn write_report(report: &RunReport, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let json = dir.join("report.json");
    std::fs::write(&json, serde_json::to_string_pretty(report)? + "\n")?;
    written.push(json);
    for a in &report.artifacts {
        let p = dir.join(&a.file);
        std::fs::write(&p, &a.content)?;
        written.push(p);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn checks_and_verdicts() {
        assert_eq!(Check::Band { target: 13.0, factor: 3.0 }.verdict(27.4), Verdict::Pass);
        assert_eq!(Check::Band { target: 13.0, factor: 3.0 }.verdict(40.0), Verdict::Fail);
        assert_eq!(Check::AtMost { limit: 1.0 }.verdict(f64::NAN), Verdict::Fail);
        assert_eq!(Check::Recorded.verdict(3.0), Verdict::Recorded);
        assert_eq!(Check::Above { limit: 1.0 }.verdict(1.0), Verdict::Fail);
    }

    #[test]
    fn manifest_rejects_duplicates_and_unknown_keys() {
        let m: Manifest = serde_json::from_str(
            r#"{"scenarios": [{"name": "a", "kind": "fig2b"}, {"name": "a", "kind": "rwa-study"}]}"#,
        )
        .unwrap();
        assert!(m.validate().is_err());
        let bad = serde_json::from_str::<Manifest>(r#"{"scenarios": [], "extra": 1}"#);
        assert!(bad.is_err());
        let tol = serde_json::from_str::<Manifest>(r#"{"scenarios": [], "tolerances": {"cnot_fidelity": 0.9}}"#).unwrap();
        assert_eq!(tol.tolerances.cnot_fidelity, 0.9);
        assert_eq!(tol.tolerances.truth_table, 1e-2);
    }

    #[test]
    fn fig2b_report_is_deterministic() {
        let ro = ReadoutConfig { max_n: 5, ..Default::default() };
        let a = run_fig2b(&ro).unwrap();
        let b = run_fig2b(&ro).unwrap();
        assert_eq!(a.artifacts, b.artifacts);
        assert!(a.passed());
    }

    #[test]
    fn pool_keeps_manifest_order() {
        let m = Manifest {
            scenarios: (0..4)
                .map(|k| Scenario {
                    name: format!("s{k}"),
                    kind: ScenarioKind::Fig2b,
                    config: None,
                    overrides: Overrides { max_n: Some(2 + k), ..Default::default() },
                    output: None,
                })
                .collect(),
            tolerances: Tolerances::default(),
            workers: Some(3),
        };
        let out = run_manifest(&m, Path::new("."), &RunSettings::default());
        let names: Vec<_> = out.iter().map(|r| r.as_ref().unwrap().scenario.clone()).collect();
        assert_eq!(names, ["s0", "s1", "s2", "s3"]);
    }
}
