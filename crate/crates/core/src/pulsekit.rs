//! Pulse sequences, time evolution and the composite gates built from them.
//!
//! Two frames are supported. `Frame::Lab` is the on-resonance frame of the
//! α± basis with the oscillating drive `Δ_i(τ) = Δ₀ cos(ωτ + δ)` and
//! `H = Σ [2t I_z − Δ(τ) I_x] + Σ J I_x I_x`; it is substepped. `Frame::Rwa` is
//! the frame rotating at `2t/ħ`, where a segment is the constant RWA
//! Hamiltonian and is exponentiated in one step. Kicks and virtual z updates
//! are instantaneous and belong to neither frame.
//!
//! All rotations follow `R_γ(θ) = exp(iθ I_γ)`, so a resonant drive of
//! amplitude `Δ₀` and duration `T` rotates by `θ = Δ₀ T / (2ħ)`.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix, CVector, C64, ONE, ZERO};
use crate::spinmodel::{self, QuantumOperator, RwaDrive, SpinChainParams};
use crate::units::HBAR_MEV_PS;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Frame {
    Lab,
    Rwa,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    fn phase(self) -> f64 {
        match self {
            Axis::X => 0.0,
            Axis::Y => FRAC_PI_2,
            Axis::Z => 0.0,
        }
    }
}

/// Drive on one qubit: `Δ₀` (meV), carrier `ω` (rad/ps) and phase `δ` (rad).
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Drive {
    pub amplitude: f64,
    pub omega: f64,
    pub phase: f64,
}

impl Drive {
    /// Drive resonant with a qubit of tunnelling amplitude `t` (meV).
    pub fn resonant(t: f64, amplitude: f64, phase: f64) -> Self {
        Self { amplitude, omega: 2.0 * t / HBAR_MEV_PS, phase }
    }

    pub fn is_off(&self) -> bool {
        self.amplitude == 0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseSegment {
    /// ps.
    pub duration: f64,
    /// One entry per qubit.
    pub drives: Vec<Drive>,
    pub frame: Frame,
    /// Whether the inter-qubit couplings act during this segment.
    pub couplings: bool,
    /// Evolve with `−H(T − τ)`, the exact inverse of the forward segment.
    pub reversed: bool,
}

impl PulseSegment {
    pub fn free(n: usize, duration: f64, frame: Frame) -> Self {
        Self {
            duration,
            drives: vec![Drive::default(); n],
            frame,
            couplings: true,
            reversed: false,
        }
    }

    pub fn is_gap(&self) -> bool {
        self.drives.iter().all(Drive::is_off)
    }

    fn validate(&self, n: usize) -> Result<()> {
        if !(self.duration > 0.0) || !self.duration.is_finite() {
            return Err(Error::InvalidInput(format!("segment duration {} must be > 0", self.duration)));
        }
        if self.drives.len() != n {
            return Err(Error::DimensionMismatch(format!("{} drives for {n} qubits", self.drives.len())));
        }
        if self.drives.iter().any(|d| !(d.amplitude >= 0.0) || !d.omega.is_finite() || !d.phase.is_finite()) {
            return Err(Error::InvalidInput("drive amplitudes must be >= 0 and finite".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Step {
    Segment(PulseSegment),
    /// Instantaneous `exp(iθ I_axis)` on one qubit.
    Kick { qubit: usize, axis: Axis, angle: f64 },
    /// Frame update: advances the phase of every later drive on `qubit` by `angle`.
    VirtualZ { qubit: usize, angle: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseSequence {
    pub n_qubits: usize,
    pub start_time: f64,
    pub steps: Vec<Step>,
}

impl PulseSequence {
    pub fn new(n_qubits: usize) -> Self {
        Self { n_qubits, start_time: 0.0, steps: Vec::new() }
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn push(&mut self, step: Step) {
        self.steps.push(step);
    }

    /// Appends `other`, which is played after `self`.
    pub fn then(mut self, other: PulseSequence) -> Self {
        assert_eq!(self.n_qubits, other.n_qubits, "sequences act on different registers");
        self.steps.extend(other.steps);
        self
    }

    pub fn total_duration(&self) -> f64 {
        self.segments().map(|s| s.duration).sum()
    }

    pub fn segments(&self) -> impl Iterator<Item = &PulseSegment> {
        self.steps.iter().filter_map(|s| match s {
            Step::Segment(seg) => Some(seg),
            _ => None,
        })
    }

    /// Frame shared by all segments, `None` for a sequence of kicks only.
    pub fn frame(&self) -> Result<Option<Frame>> {
        let mut frame = None;
        for seg in self.segments() {
            match frame {
                None => frame = Some(seg.frame),
                Some(f) if f != seg.frame => {
                    return Err(Error::FrameMismatch("sequence mixes lab and rwa segments".into()));
                }
                _ => {}
            }
        }
        Ok(frame)
    }

    /// Time-reversed sequence with every generator negated.
    pub fn inverse(&self) -> Self {
        let steps = self
            .steps
            .iter()
            .rev()
            .map(|s| match s {
                Step::Segment(seg) => Step::Segment(PulseSegment { reversed: !seg.reversed, ..seg.clone() }),
                Step::Kick { qubit, axis, angle } => Step::Kick { qubit: *qubit, axis: *axis, angle: -angle },
                Step::VirtualZ { qubit, angle } => Step::VirtualZ { qubit: *qubit, angle: -angle },
            })
            .collect();
        Self { n_qubits: self.n_qubits, start_time: self.start_time, steps }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Propagator {
    pub op: QuantumOperator,
    /// ps.
    pub time: f64,
    pub frame: Option<Frame>,
    pub substeps: u64,
}

impl Propagator {
    pub fn matrix(&self) -> &CMatrix {
        &self.op.matrix
    }

    pub fn apply(&self, psi: &CVector) -> CVector {
        &self.op.matrix * psi
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolveOptions {
    /// Largest `‖H‖ h / ħ` (rad) of one lab-frame substep.
    pub max_phase_step: f64,
    pub max_substeps: u64,
    /// Cross-talk on lab-frame drives: the amplitudes felt by the qubits are
    /// `K · Δ_requested`. `None` is the identity.
    pub crosstalk: Option<Vec<Vec<f64>>>,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self { max_phase_step: 0.05, max_substeps: 100_000_000, crosstalk: None }
    }
}

fn local_rotation(n: usize, k: usize, axis_angle: f64, z: bool, theta: f64) -> CMatrix {
    let gen = if z {
        spinmodel::iz(n, k)
    } else {
        spinmodel::ix(n, k) * c(axis_angle.cos(), 0.0) + spinmodel::iy(n, k) * c(axis_angle.sin(), 0.0)
    };
    linalg::unitary_from_generator(&gen, theta)
}

/// Upper bound on `‖H‖` for the on-resonance Hamiltonian.
fn onres_norm_bound(p: &SpinChainParams, amplitudes: &[f64], couplings: bool) -> f64 {
    let single: f64 = p.t.iter().zip(amplitudes).map(|(t, a)| t.abs() + 0.5 * a.abs()).sum();
    let bonds: f64 = if couplings { p.bonds().iter().map(|b| 0.25 * b.2.abs()).sum() } else { 0.0 };
    single + bonds
}

fn params_without_couplings(p: &SpinChainParams) -> SpinChainParams {
    p.with_couplings_scaled(0.0)
}

struct Evolver<'a> {
    p: &'a SpinChainParams,
    opts: &'a EvolveOptions,
    n: usize,
    u: CMatrix,
    /// Pending virtual z phase per qubit.
    frame_phase: Vec<f64>,
    substeps: u64,
}

impl Evolver<'_> {
    fn flush(&mut self, qubits: impl Iterator<Item = usize>) {
        for k in qubits {
            let phi = self.frame_phase[k];
            if phi != 0.0 {
                self.u = local_rotation(self.n, k, 0.0, true, phi) * &self.u;
                self.frame_phase[k] = 0.0;
            }
        }
    }

    fn kick(&mut self, qubit: usize, axis: Axis, angle: f64) -> Result<()> {
        if qubit >= self.n {
            return Err(Error::InvalidInput(format!("kick on qubit {qubit} of {}", self.n)));
        }
        let z = axis == Axis::Z;
        let rot = if z {
            // z kicks commute with the pending frame phase
            local_rotation(self.n, qubit, 0.0, true, angle)
        } else {
            local_rotation(self.n, qubit, axis.phase() + self.frame_phase[qubit], false, angle)
        };
        self.u = rot * &self.u;
        Ok(())
    }

    fn segment(&mut self, seg: &PulseSegment) -> Result<()> {
        seg.validate(self.n)?;
        if seg.couplings {
            let pending: Vec<usize> = self
                .p
                .bonds()
                .iter()
                .filter(|b| b.2 != 0.0)
                .flat_map(|b| {
                    let pi = self.frame_phase[b.0];
                    let pj = self.frame_phase[b.1];
                    let commutes = seg.frame == Frame::Rwa && pi == pj;
                    if commutes || (pi == 0.0 && pj == 0.0) { vec![] } else { vec![b.0, b.1] }
                })
                .collect();
            self.flush(pending.into_iter());
        }
        let phases: Vec<f64> = seg.drives.iter().zip(&self.frame_phase).map(|(d, f)| d.phase + f).collect();
        let sign = if seg.reversed { -1.0 } else { 1.0 };
        let params_storage;
        let p = if seg.couplings {
            self.p
        } else {
            params_storage = params_without_couplings(self.p);
            &params_storage
        };
        match seg.frame {
            Frame::Rwa => {
                let drives: Vec<RwaDrive> = seg
                    .drives
                    .iter()
                    .zip(&phases)
                    .map(|(d, &phase)| RwaDrive { delta0: d.amplitude, phase })
                    .collect();
                let h = spinmodel::build_rwa_h(p, &drives)?.matrix * c(sign, 0.0);
                self.u = linalg::propagator(&h, seg.duration) * &self.u;
                self.substeps += 1;
            }
            Frame::Lab => {
                let zero = vec![0.0; self.n];
                let h_static = spinmodel::build_onres_h(p, &zero)?.matrix;
                if seg.is_gap() {
                    let h = h_static * c(sign, 0.0);
                    self.u = linalg::propagator(&h, seg.duration) * &self.u;
                    self.substeps += 1;
                    return Ok(());
                }
                let mixing = self.opts.crosstalk.as_ref();
                let felt_max: Vec<f64> = match mixing {
                    Some(k) => (0..self.n)
                        .map(|i| (0..self.n).map(|j| (k[i][j] * seg.drives[j].amplitude).abs()).sum())
                        .collect(),
                    None => seg.drives.iter().map(|d| d.amplitude).collect(),
                };
                let bound = onres_norm_bound(p, &felt_max, seg.couplings);
                let wanted = (seg.duration * bound / (HBAR_MEV_PS * self.opts.max_phase_step)).ceil();
                if !(wanted <= self.opts.max_substeps as f64) {
                    return Err(Error::Resolution(format!(
                        "segment of {} ps needs {wanted:e} substeps (limit {})",
                        seg.duration, self.opts.max_substeps
                    )));
                }
                let nsub = (wanted as u64).max(1);
                let h = seg.duration / nsub as f64;
                let ix: Vec<CMatrix> = (0..self.n).map(|k| spinmodel::ix(self.n, k)).collect();
                let mut requested = vec![0.0; self.n];
                for s in 0..nsub {
                    let idx = if seg.reversed { nsub - 1 - s } else { s };
                    let tau = (idx as f64 + 0.5) * h;
                    for (k, d) in seg.drives.iter().enumerate() {
                        requested[k] = d.amplitude * (d.omega * tau + phases[k]).cos();
                    }
                    let mut hm = h_static.clone();
                    for i in 0..self.n {
                        let felt = match mixing {
                            Some(k) => (0..self.n).map(|j| k[i][j] * requested[j]).sum(),
                            None => requested[i],
                        };
                        if felt != 0.0 {
                            hm -= &ix[i] * c(felt, 0.0);
                        }
                    }
                    if seg.reversed {
                        hm *= c(-1.0, 0.0);
                    }
                    self.u = linalg::propagator(&hm, h) * &self.u;
                }
                self.substeps += nsub;
            }
        }
        Ok(())
    }
}

/// Time-ordered propagator of `seq` under `p`.
pub fn evolve(seq: &PulseSequence, p: &SpinChainParams, opts: &EvolveOptions) -> Result<Propagator> {
    p.validate()?;
    if seq.n_qubits != p.n_qubits {
        return Err(Error::DimensionMismatch(format!(
            "sequence for {} qubits, parameters for {}",
            seq.n_qubits, p.n_qubits
        )));
    }
    if let Some(k) = &opts.crosstalk {
        if k.len() != p.n_qubits || k.iter().any(|r| r.len() != p.n_qubits) {
            return Err(Error::DimensionMismatch("cross-talk matrix shape".into()));
        }
    }
    let frame = seq.frame()?;
    let n = p.n_qubits;
    let mut ev = Evolver {
        p,
        opts,
        n,
        u: linalg::identity(p.dim()),
        frame_phase: vec![0.0; n],
        substeps: 0,
    };
    for step in &seq.steps {
        match step {
            Step::Segment(seg) => ev.segment(seg)?,
            Step::Kick { qubit, axis, angle } => ev.kick(*qubit, *axis, *angle)?,
            Step::VirtualZ { qubit, angle } => {
                if *qubit >= n {
                    return Err(Error::InvalidInput(format!("frame update on qubit {qubit} of {n}")));
                }
                ev.frame_phase[*qubit] += angle;
            }
        }
    }
    ev.flush(0..n);
    Ok(Propagator {
        op: QuantumOperator { n_qubits: n, matrix: ev.u },
        time: seq.total_duration(),
        frame,
        substeps: ev.substeps,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PulseMode {
    /// Instantaneous rotations; free evolution in the lab frame.
    Ideal,
    /// Finite rotations in the rotating frame with couplings switched off.
    Rwa,
    /// Finite resonant lab-frame pulses with couplings and cross-talk.
    Physical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ZMode {
    Virtual,
    Composite,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseConfig {
    pub mode: PulseMode,
    /// Drive amplitude (meV); the largest allowed amplitude in physical mode.
    pub delta0: f64,
    pub z_mode: ZMode,
    /// Largest Zeeman phase `2 t_max τ / ħ` allowed per Carr-Purcell quarter.
    pub cp_phase_budget: f64,
}

impl PulseConfig {
    pub fn ideal() -> Self {
        Self { mode: PulseMode::Ideal, delta0: 0.1, z_mode: ZMode::Virtual, cp_phase_budget: 0.1 }
    }

    pub fn rwa(delta0: f64) -> Self {
        Self { mode: PulseMode::Rwa, delta0, ..Self::ideal() }
    }

    pub fn physical(delta0_max: f64) -> Self {
        Self { mode: PulseMode::Physical, delta0: delta0_max, ..Self::ideal() }
    }

    fn validate(&self) -> Result<()> {
        if !(self.delta0 > 0.0) || !self.delta0.is_finite() {
            return Err(Error::InvalidConfiguration(format!("drive amplitude {} must be > 0", self.delta0)));
        }
        if !(self.cp_phase_budget > 0.0) {
            return Err(Error::InvalidConfiguration("Carr-Purcell phase budget must be > 0".into()));
        }
        Ok(())
    }
}

/// One drive segment rotating every qubit in `targets` by `angle` about the
/// in-plane axis at phase `axis_phase`.
fn drive_block(p: &SpinChainParams, targets: &[usize], axis_phase: f64, angle: f64, cfg: &PulseConfig) -> Result<PulseSequence> {
    let n = p.n_qubits;
    let mut seq = PulseSequence::new(n);
    if angle == 0.0 || targets.is_empty() {
        return Ok(seq);
    }
    let phase = if angle < 0.0 { axis_phase + PI } else { axis_phase };
    let theta = angle.abs();
    match cfg.mode {
        PulseMode::Ideal => {
            for &q in targets {
                let axis = if axis_phase == 0.0 { Axis::X } else { Axis::Y };
                if axis.phase() == axis_phase {
                    seq.push(Step::Kick { qubit: q, axis, angle });
                } else {
                    // arbitrary in-plane axis: conjugate an x kick by z updates
                    seq.push(Step::Kick { qubit: q, axis: Axis::Z, angle: -axis_phase });
                    seq.push(Step::Kick { qubit: q, axis: Axis::X, angle });
                    seq.push(Step::Kick { qubit: q, axis: Axis::Z, angle: axis_phase });
                }
            }
        }
        PulseMode::Rwa => {
            let duration = 2.0 * HBAR_MEV_PS * theta / cfg.delta0;
            let mut drives = vec![Drive::default(); n];
            for &q in targets {
                drives[q] = Drive::resonant(p.t[q], cfg.delta0, phase);
            }
            seq.push(Step::Segment(PulseSegment { duration, drives, frame: Frame::Rwa, couplings: false, reversed: false }));
        }
        PulseMode::Physical => {
            let t0 = p.t[targets[0]];
            if !(t0 > 0.0) {
                return Err(Error::InvalidConfiguration(format!(
                    "qubit {} has t = {t0}; a resonant pulse needs t > 0",
                    targets[0]
                )));
            }
            // integer number of Zeeman periods π ħ / t of the first target
            let k = (2.0 * theta * t0 / (PI * cfg.delta0)).ceil().max(1.0);
            let duration = k * PI * HBAR_MEV_PS / t0;
            let amplitude = 2.0 * HBAR_MEV_PS * theta / duration;
            let mut drives = vec![Drive::default(); n];
            for &q in targets {
                drives[q] = Drive::resonant(p.t[q], amplitude, phase);
            }
            seq.push(Step::Segment(PulseSegment { duration, drives, frame: Frame::Lab, couplings: true, reversed: false }));
        }
    }
    Ok(seq)
}

/// Pulse realising `R'_axis(angle) = exp(i·angle·I'_axis)` on `qubit`.
pub fn rotation_pulse(p: &SpinChainParams, qubit: usize, axis: Axis, angle: f64, cfg: &PulseConfig) -> Result<PulseSequence> {
    cfg.validate()?;
    if qubit >= p.n_qubits {
        return Err(Error::InvalidInput(format!("qubit {qubit} out of range for {} qubits", p.n_qubits)));
    }
    if !(angle.abs() <= 2.0 * PI) {
        return Err(Error::InvalidInput(format!("|angle| = {} exceeds 2π", angle.abs())));
    }
    if angle == 0.0 {
        return Ok(PulseSequence::new(p.n_qubits));
    }
    match axis {
        Axis::X | Axis::Y => drive_block(p, &[qubit], axis.phase(), angle, cfg),
        Axis::Z => match cfg.z_mode {
            ZMode::Virtual => {
                let mut seq = PulseSequence::new(p.n_qubits);
                seq.push(Step::VirtualZ { qubit, angle });
                Ok(seq)
            }
            // exp(iθI_z) = R_x(−π/2) R_y(θ) R_x(π/2)
            ZMode::Composite => Ok(drive_block(p, &[qubit], 0.0, FRAC_PI_2, cfg)?
                .then(drive_block(p, &[qubit], FRAC_PI_2, angle, cfg)?)
                .then(drive_block(p, &[qubit], 0.0, -FRAC_PI_2, cfg)?)),
        },
    }
}

/// π_y on every qubit at once.
fn refocusing_pulse(p: &SpinChainParams, cfg: &PulseConfig) -> Result<PulseSequence> {
    let all: Vec<usize> = (0..p.n_qubits).collect();
    drive_block(p, &all, FRAC_PI_2, PI, cfg)
}

fn free(n: usize, duration: f64) -> Step {
    Step::Segment(PulseSegment::free(n, duration, Frame::Lab))
}

/// `n_cycles` repetitions of `τ − π_y − 2τ − π_y − τ` with simultaneous
/// π_y pulses. Finite pulses are centred on the ideal pulse instants.
pub fn carr_purcell(p: &SpinChainParams, tau: f64, n_cycles: usize, cfg: &PulseConfig) -> Result<PulseSequence> {
    cfg.validate()?;
    if !(tau > 0.0) {
        return Err(Error::InvalidInput(format!("tau = {tau} must be > 0")));
    }
    if cfg.mode == PulseMode::Rwa {
        return Err(Error::InvalidConfiguration(
            "Carr-Purcell refocusing acts in the lab frame; use ideal or physical mode".into(),
        ));
    }
    let n = p.n_qubits;
    let pulse = refocusing_pulse(p, cfg)?;
    let width = pulse.total_duration();
    if width >= tau {
        return Err(Error::Resolution(format!(
            "refocusing pulse of {width} ps does not fit in tau = {tau} ps"
        )));
    }
    let mut seq = PulseSequence::new(n);
    for _ in 0..n_cycles {
        seq.push(free(n, tau - 0.5 * width));
        seq.steps.extend(pulse.steps.iter().cloned());
        seq.push(free(n, 2.0 * tau - width));
        seq.steps.extend(pulse.steps.iter().cloned());
        seq.push(free(n, tau - 0.5 * width));
    }
    Ok(seq)
}

/// Number of Carr-Purcell cycles and τ for a total free time `total`.
pub fn carr_purcell_schedule(p: &SpinChainParams, total: f64, budget: f64) -> Result<(usize, f64)> {
    let t_max = p.t.iter().fold(0.0_f64, |m, t| m.max(t.abs()));
    let n = if t_max == 0.0 { 1.0 } else { (2.0 * t_max * total / (4.0 * HBAR_MEV_PS * budget)).ceil().max(1.0) };
    if n > 1e6 {
        return Err(Error::Resolution(format!("{n:e} Carr-Purcell cycles required")));
    }
    Ok((n as usize, total / (4.0 * n)))
}

/// Sequence whose ideal action is `exp(iθ I'_x^i I'_x^j)`.
pub fn coupling_gate(p: &SpinChainParams, i: usize, j: usize, theta: f64, cfg: &PulseConfig) -> Result<PulseSequence> {
    cfg.validate()?;
    let n = p.n_qubits;
    if i >= n || j >= n || i == j {
        return Err(Error::InvalidInput(format!("bad qubit pair ({i}, {j})")));
    }
    if !p.bonds().iter().any(|b| (b.0, b.1) == (i.min(j), i.max(j))) {
        return Err(Error::InvalidInput(format!("qubits {i} and {j} are not coupled neighbours")));
    }
    if theta == 0.0 {
        return Ok(PulseSequence::new(n));
    }
    let jc = p.coupling(i, j);
    if jc == 0.0 {
        return Err(Error::UnreachableGate(format!("J between qubits {i} and {j} is zero")));
    }
    if cfg.mode == PulseMode::Rwa {
        return Err(Error::InvalidConfiguration(
            "the coupling gate is built in the lab frame; use ideal or physical mode".into(),
        ));
    }
    // free evolution accumulates exp(−i J T I_x I_x / ħ)
    let total = HBAR_MEV_PS * theta.abs() / jc.abs();
    let (cycles, tau) = carr_purcell_schedule(p, total, cfg.cp_phase_budget)?;
    let block = carr_purcell(p, tau, cycles, cfg)?;
    let natural_sign = -jc.signum();
    if natural_sign == theta.signum() {
        return Ok(block);
    }
    // π_y on j flips the sign of I_x^j
    let flip = drive_block(p, &[j], FRAC_PI_2, PI, cfg)?;
    let unflip = drive_block(p, &[j], FRAC_PI_2, -PI, cfg)?;
    Ok(flip.then(block).then(unflip))
}

/// `U₀⁻¹ R'_ix(π/2) R'_jy(π/2) R'_jx(π/2) R_ij(−π) R'_jy(−π/2) U₀` without the
/// `U₀` conjugation, which is a change of basis rather than a pulse.
pub fn cnot_sequence(p: &SpinChainParams, control: usize, target: usize, cfg: &PulseConfig) -> Result<PulseSequence> {
    let r = |q, axis, angle| rotation_pulse(p, q, axis, angle, cfg);
    Ok(r(target, Axis::Y, -FRAC_PI_2)?
        .then(coupling_gate(p, control, target, -PI, cfg)?)
        .then(r(target, Axis::X, FRAC_PI_2)?)
        .then(r(target, Axis::Y, FRAC_PI_2)?)
        .then(r(control, Axis::X, FRAC_PI_2)?))
}

/// `exp(iθ I_axis)` on one qubit of `n`.
pub fn rotation_target(n: usize, qubit: usize, axis: Axis, theta: f64) -> CMatrix {
    local_rotation(n, qubit, axis.phase(), axis == Axis::Z, theta)
}

/// `exp(iθ I_x^i I_x^j)`.
pub fn coupling_target(n: usize, i: usize, j: usize, theta: f64) -> CMatrix {
    linalg::unitary_from_generator(&(spinmodel::ix(n, i) * spinmodel::ix(n, j)), theta)
}

/// CNOT in the charge basis; `control` flips `target` when it is `|1⟩ = |↓⟩`.
pub fn ideal_cnot(n: usize, control: usize, target: usize) -> CMatrix {
    let dim = 1 << n;
    let mut m = CMatrix::zeros(dim, dim);
    let cbit = 1 << (n - 1 - control);
    let tbit = 1 << (n - 1 - target);
    for b in 0..dim {
        let out = if b & cbit != 0 { b ^ tbit } else { b };
        m[(out, b)] = ONE;
    }
    m
}

/// Charge-basis operator of an α-basis propagator, `U₀ U U₀` on every qubit.
pub fn to_charge_basis(u: &CMatrix, n: usize) -> CMatrix {
    let u0 = spinmodel::u0_on(n, &(0..n).collect::<Vec<_>>()).expect("all qubits in range");
    &u0 * u * &u0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FidelityMode {
    GlobalPhase,
    LocalZPhases,
}

fn check_same_shape(u: &CMatrix, target: &CMatrix) -> Result<()> {
    if u.shape() != target.shape() || !u.is_square() {
        return Err(Error::DimensionMismatch(format!("{:?} versus {:?}", u.shape(), target.shape())));
    }
    Ok(())
}

/// `|Tr(T† U)| / d`, optionally maximised over `z`-phase dressings
/// `D_L U D_R` with `D = ⊗ diag(1, e^{iφ_k})` on both sides.
pub fn fidelity(u: &CMatrix, target: &CMatrix, mode: FidelityMode) -> Result<f64> {
    check_same_shape(u, target)?;
    let d = u.nrows();
    if !d.is_power_of_two() {
        return Err(Error::DimensionMismatch(format!("dimension {d} is not a power of two")));
    }
    let overlap = |m: &CMatrix| -> C64 { target.iter().zip(m.iter()).map(|(t, x)| t.conj() * x).sum() };
    match mode {
        FidelityMode::GlobalPhase => Ok((overlap(u).norm() / d as f64).min(1.0)),
        FidelityMode::LocalZPhases => {
            let n = d.trailing_zeros() as usize;
            // w[r][c] = conj(T[r,c]) U[r,c]; F = |Σ w e^{i(α·bits(r) + β·bits(c))}|/d
            let w: Vec<C64> = (0..d * d).map(|k| target[(k / d, k % d)].conj() * u[(k / d, k % d)]).collect();
            let bits = |b: usize, k: usize| (b >> (n - 1 - k)) & 1;
            let value = |a: &[f64], bt: &[f64]| -> C64 {
                let mut s = ZERO;
                for r in 0..d {
                    let pr: f64 = (0..n).map(|k| a[k] * bits(r, k) as f64).sum();
                    for col in 0..d {
                        let pc: f64 = (0..n).map(|k| bt[k] * bits(col, k) as f64).sum();
                        s += w[r * d + col] * C64::from_polar(1.0, pr + pc);
                    }
                }
                s
            };
            let mut best = 0.0_f64;
            let starts = [0.0, FRAC_PI_2, PI, -FRAC_PI_2];
            for (si, &s0) in starts.iter().enumerate() {
                let mut a = vec![s0; n];
                let mut bt = vec![if si % 2 == 0 { 0.0 } else { -s0 }; n];
                let mut last = -1.0;
                for _sweep in 0..200 {
                    for side in 0..2 {
                        for k in 0..n {
                            // split the sum by the bit of qubit k on this side
                            let (mut s0c, mut s1c) = (ZERO, ZERO);
                            for r in 0..d {
                                let pr: f64 = (0..n).filter(|&q| side != 0 || q != k).map(|q| a[q] * bits(r, q) as f64).sum();
                                for col in 0..d {
                                    let pc: f64 = (0..n).filter(|&q| side != 1 || q != k).map(|q| bt[q] * bits(col, q) as f64).sum();
                                    let term = w[r * d + col] * C64::from_polar(1.0, pr + pc);
                                    let bit = if side == 0 { bits(r, k) } else { bits(col, k) };
                                    if bit == 0 { s0c += term } else { s1c += term }
                                }
                            }
                            let phi = if s1c.norm() > 0.0 { s0c.arg() - s1c.arg() } else { 0.0 };
                            if side == 0 { a[k] = phi } else { bt[k] = phi }
                        }
                    }
                    let f = value(&a, &bt).norm() / d as f64;
                    if (f - last).abs() < 1e-15 {
                        break;
                    }
                    last = f;
                }
                best = best.max(value(&a, &bt).norm() / d as f64);
            }
            Ok(best.min(1.0))
        }
    }
}

/// `|⟨φ|ψ⟩|²`.
pub fn state_fidelity(phi: &CVector, psi: &CVector) -> f64 {
    phi.dotc(psi).norm_sqr()
}

/// Concurrence of a pure two-qubit state.
pub fn concurrence(psi: &CVector) -> Result<f64> {
    if psi.len() != 4 {
        return Err(Error::DimensionMismatch(format!("concurrence needs 4 amplitudes, got {}", psi.len())));
    }
    Ok(2.0 * (psi[0] * psi[3] - psi[1] * psi[2]).norm())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RwaReport {
    /// `max_k Δ₀ₖ / (2 t_k)`.
    pub drive_ratio: f64,
    /// `max J ħω / (Δ₀ · 2t)`; infinite for an undriven register with couplings.
    pub coupling_ratio: f64,
    pub max_infidelity: f64,
    pub final_infidelity: f64,
    pub duration: f64,
    pub substeps: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RwaValidateOptions {
    pub max_phase_step: f64,
    pub checkpoint_every: u64,
    pub max_substeps: u64,
}

impl Default for RwaValidateOptions {
    fn default() -> Self {
        Self { max_phase_step: 0.01, checkpoint_every: 8, max_substeps: 100_000_000 }
    }
}

/// Propagates the oscillating on-resonance Hamiltonian, moves it into the
/// frame rotating at `2t_k/ħ` and compares with the constant RWA Hamiltonian.
/// Drives must be resonant.
pub fn rwa_validate(p: &SpinChainParams, drives: &[Drive], duration: f64, opts: &RwaValidateOptions) -> Result<RwaReport> {
    p.validate()?;
    let n = p.n_qubits;
    if n > 4 {
        return Err(Error::DimensionOverflow { n, max: 4 });
    }
    if drives.len() != n {
        return Err(Error::DimensionMismatch(format!("{} drives for {n} qubits", drives.len())));
    }
    if !(duration > 0.0) {
        return Err(Error::InvalidInput("duration must be > 0".into()));
    }
    let omega: Vec<f64> = p.t.iter().map(|t| 2.0 * t / HBAR_MEV_PS).collect();
    for (k, d) in drives.iter().enumerate() {
        if d.amplitude > 0.0 && (d.omega - omega[k]).abs() > 1e-12 * omega[k].abs().max(1e-300) {
            return Err(Error::InvalidInput(format!("drive on qubit {k} is not resonant")));
        }
    }
    let zero = vec![0.0; n];
    let h_static = spinmodel::build_onres_h(p, &zero)?.matrix;
    let ix: Vec<CMatrix> = (0..n).map(|k| spinmodel::ix(n, k)).collect();
    let izs: Vec<CMatrix> = (0..n).map(|k| spinmodel::iz(n, k)).collect();
    let rwa_h = spinmodel::build_rwa_h(p, &drives.iter().map(|d| RwaDrive { delta0: d.amplitude, phase: d.phase }).collect::<Vec<_>>())?.matrix;

    let amps: Vec<f64> = drives.iter().map(|d| d.amplitude).collect();
    let bound = onres_norm_bound(p, &amps, true);
    let wanted = (duration * bound / (HBAR_MEV_PS * opts.max_phase_step)).ceil();
    if !(wanted <= opts.max_substeps as f64) {
        return Err(Error::Resolution(format!("{wanted:e} substeps requested")));
    }
    let nsub = (wanted as u64).max(1);
    let h = duration / nsub as f64;
    let step_rwa = linalg::propagator(&rwa_h, h * opts.checkpoint_every as f64);
    let d = p.dim() as f64;

    let infidelity = |u_lab: &CMatrix, u_rwa: &CMatrix, tau: f64| -> f64 {
        // frame change exp(+iω τ I_z) on every qubit
        let mut frame = linalg::identity(p.dim());
        for k in 0..n {
            frame = linalg::unitary_from_generator(&izs[k], omega[k] * tau) * frame;
        }
        let rotated = frame * u_lab;
        let ov: C64 = u_rwa.iter().zip(rotated.iter()).map(|(a, b)| a.conj() * b).sum();
        (1.0 - ov.norm() / d).max(0.0)
    };

    let mut u = linalg::identity(p.dim());
    let mut u_pred = linalg::identity(p.dim());
    let mut worst = 0.0_f64;
    for s in 0..nsub {
        let tau = (s as f64 + 0.5) * h;
        let mut hm = h_static.clone();
        for (k, dr) in drives.iter().enumerate() {
            if dr.amplitude != 0.0 {
                hm -= &ix[k] * c(dr.amplitude * (dr.omega * tau + dr.phase).cos(), 0.0);
            }
        }
        u = linalg::propagator(&hm, h) * u;
        if (s + 1) % opts.checkpoint_every == 0 {
            u_pred = &step_rwa * u_pred;
            worst = worst.max(infidelity(&u, &u_pred, (s + 1) as f64 * h));
        }
    }
    let u_end = linalg::propagator(&rwa_h, duration);
    let final_inf = infidelity(&u, &u_end, duration);
    worst = worst.max(final_inf);

    let drive_ratio = drives.iter().zip(&p.t).map(|(d, t)| d.amplitude / (2.0 * t)).fold(0.0, f64::max);
    let coupling_ratio = p
        .bonds()
        .iter()
        .flat_map(|&(i, j, jc)| [(i, jc), (j, jc)])
        .map(|(k, jc)| {
            let d0 = drives[k].amplitude;
            let w = HBAR_MEV_PS * omega[k];
            if jc == 0.0 { 0.0 } else { (jc * w / (d0 * 2.0 * p.t[k])).abs() }
        })
        .fold(0.0, f64::max);
    Ok(RwaReport {
        drive_ratio,
        coupling_ratio,
        max_infidelity: worst,
        final_infidelity: final_inf,
        duration,
        substeps: nsub,
    })
}

/// Cross-talk mixing `K` from the drive matrix `M`: uncompensated gates set
/// `v_i = Δ*_i / M_ii`; compensated gates solve `M v = Δ*`.
pub fn crosstalk_mixing(m: &crate::capnet::CrosstalkMatrix, compensated: bool) -> Result<Vec<Vec<f64>>> {
    let n = m.len();
    let mut k = vec![vec![0.0; n]; n];
    for j in 0..n {
        let mut unit = vec![0.0; n];
        unit[j] = 1.0;
        let v = if compensated { m.solve(&unit)? } else { m.naive_inverse(&unit) };
        let felt = m.apply(&v);
        for i in 0..n {
            k[i][j] = felt[i];
        }
    }
    Ok(k)
}

pub const SCHEDULE_HEADER: &str = "qdot-schedule v1";

fn flags(seg: &PulseSegment) -> String {
    let mut f = String::new();
    if seg.couplings {
        f.push('c');
    }
    if seg.reversed {
        f.push('r');
    }
    if f.is_empty() {
        f.push('-');
    }
    f
}

/// Line-oriented text form of a sequence.
///
/// ```text
/// qdot-schedule v1
/// qubits <N>
/// start <t0>
/// <kind> <t_start> <duration> <qubit> <amplitude> <omega> <phase> <flags>
/// ```
///
/// `kind` is `lab` or `rwa` (one row per qubit, qubits in order), `kick-x`,
/// `kick-y`, `kick-z` or `vz` (one row, duration 0, the angle in the amplitude
/// column). `flags` holds `c` (couplings on) and `r` (reversed), or `-`.
/// Times in ps, amplitudes in meV, ω in rad/ps, angles in rad. Numbers use the
/// shortest representation that parses back to the same `f64`.
pub fn to_schedule(seq: &PulseSequence) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{SCHEDULE_HEADER}");
    let _ = writeln!(out, "qubits {}", seq.n_qubits);
    let _ = writeln!(out, "start {:?}", seq.start_time);
    let mut time = seq.start_time;
    for step in &seq.steps {
        match step {
            Step::Segment(seg) => {
                let kind = match seg.frame {
                    Frame::Lab => "lab",
                    Frame::Rwa => "rwa",
                };
                for (q, d) in seg.drives.iter().enumerate() {
                    let _ = writeln!(
                        out,
                        "{kind} {:?} {:?} {q} {:?} {:?} {:?} {}",
                        time, seg.duration, d.amplitude, d.omega, d.phase, flags(seg)
                    );
                }
                time += seg.duration;
            }
            Step::Kick { qubit, axis, angle } => {
                let kind = match axis {
                    Axis::X => "kick-x",
                    Axis::Y => "kick-y",
                    Axis::Z => "kick-z",
                };
                let _ = writeln!(out, "{kind} {time:?} 0.0 {qubit} {angle:?} 0.0 0.0 -");
            }
            Step::VirtualZ { qubit, angle } => {
                let _ = writeln!(out, "vz {time:?} 0.0 {qubit} {angle:?} 0.0 0.0 -");
            }
        }
    }
    out
}

struct Row {
    line: usize,
    kind: String,
    t_start: f64,
    duration: f64,
    qubit: usize,
    amplitude: f64,
    omega: f64,
    phase: f64,
    flags: String,
}

pub fn parse_schedule(text: &str) -> Result<PulseSequence> {
    let err = |line: usize, msg: String| Error::Schedule { line, msg };
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (ln, header) = lines.next().ok_or_else(|| err(0, "empty schedule".into()))?;
    if header != SCHEDULE_HEADER {
        return Err(err(ln, format!("expected '{SCHEDULE_HEADER}'")));
    }
    let mut keyed = |key: &str| -> Result<(usize, String)> {
        let (ln, l) = lines.next().ok_or_else(|| err(0, format!("missing '{key}' line")))?;
        let rest = l.strip_prefix(key).filter(|r| r.starts_with(' ')).ok_or_else(|| err(ln, format!("expected '{key} <value>'")))?;
        Ok((ln, rest.trim().to_string()))
    };
    let (ln, nq) = keyed("qubits")?;
    let n: usize = nq.parse().map_err(|_| err(ln, format!("bad qubit count '{nq}'")))?;
    if n == 0 {
        return Err(err(ln, "qubit count must be >= 1".into()));
    }
    let (ln, st) = keyed("start")?;
    let start: f64 = st.parse().map_err(|_| err(ln, format!("bad start time '{st}'")))?;

    let mut rows = Vec::new();
    for (ln, l) in lines {
        let f: Vec<&str> = l.split_whitespace().collect();
        if f.len() != 8 {
            return Err(err(ln, format!("expected 8 columns, found {}", f.len())));
        }
        let num = |i: usize, name: &str| -> Result<f64> {
            f[i].parse::<f64>().map_err(|_| err(ln, format!("bad {name} '{}'", f[i])))
        };
        rows.push(Row {
            line: ln,
            kind: f[0].to_string(),
            t_start: num(1, "t_start")?,
            duration: num(2, "duration")?,
            qubit: f[3].parse().map_err(|_| err(ln, format!("bad qubit '{}'", f[3])))?,
            amplitude: num(4, "amplitude")?,
            omega: num(5, "omega")?,
            phase: num(6, "phase")?,
            flags: f[7].to_string(),
        });
    }

    let mut seq = PulseSequence { n_qubits: n, start_time: start, steps: Vec::new() };
    let mut i = 0;
    while i < rows.len() {
        let r = &rows[i];
        if r.qubit >= n {
            return Err(err(r.line, format!("qubit {} out of range", r.qubit)));
        }
        match r.kind.as_str() {
            "lab" | "rwa" => {
                if i + n > rows.len() {
                    return Err(err(r.line, format!("segment needs {n} rows")));
                }
                let group = &rows[i..i + n];
                let mut drives = Vec::with_capacity(n);
                for (q, g) in group.iter().enumerate() {
                    if g.kind != r.kind || g.t_start != r.t_start || g.duration != r.duration || g.flags != r.flags || g.qubit != q {
                        return Err(err(g.line, format!("row does not continue the segment started at line {}", r.line)));
                    }
                    drives.push(Drive { amplitude: g.amplitude, omega: g.omega, phase: g.phase });
                }
                if !r.flags.chars().all(|ch| ch == 'c' || ch == 'r' || ch == '-') {
                    return Err(err(r.line, format!("unknown flags '{}'", r.flags)));
                }
                let seg = PulseSegment {
                    duration: r.duration,
                    drives,
                    frame: if r.kind == "lab" { Frame::Lab } else { Frame::Rwa },
                    couplings: r.flags.contains('c'),
                    reversed: r.flags.contains('r'),
                };
                seg.validate(n).map_err(|e| err(r.line, e.to_string()))?;
                seq.push(Step::Segment(seg));
                i += n;
            }
            "kick-x" | "kick-y" | "kick-z" => {
                let axis = match r.kind.as_str() {
                    "kick-x" => Axis::X,
                    "kick-y" => Axis::Y,
                    _ => Axis::Z,
                };
                seq.push(Step::Kick { qubit: r.qubit, axis, angle: r.amplitude });
                i += 1;
            }
            "vz" => {
                seq.push(Step::VirtualZ { qubit: r.qubit, angle: r.amplitude });
                i += 1;
            }
            other => return Err(err(r.line, format!("unknown row kind '{other}'"))),
        }
    }
    Ok(seq)
}

/// Apply a propagator to every basis state and return `|⟨out|U|in⟩|²`.
pub fn populations(u: &CMatrix) -> Vec<Vec<f64>> {
    let d = u.nrows();
    (0..d).map(|inp| (0..d).map(|out| u[(out, inp)].norm_sqr()).collect()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs_diff;

    fn one_qubit(t: f64) -> SpinChainParams {
        SpinChainParams::chain(vec![t], vec![0.0], vec![]).unwrap()
    }

    #[test]
    fn empty_sequence_is_identity() {
        let p = SpinChainParams::uniform_chain(2, 0.4, 0.0, 0.1).unwrap();
        let u = evolve(&PulseSequence::new(2), &p, &EvolveOptions::default()).unwrap();
        assert_eq!(u.op.matrix, linalg::identity(4));
        assert_eq!(u.frame, None);
    }

    #[test]
    fn rwa_pi_pulse_is_sigma_x() {
        let p = one_qubit(0.4);
        let seq = rotation_pulse(&p, 0, Axis::X, PI, &PulseConfig::rwa(0.05)).unwrap();
        let u = evolve(&seq, &p, &EvolveOptions::default()).unwrap();
        assert!(fidelity(u.matrix(), &rotation_target(1, 0, Axis::X, PI), FidelityMode::GlobalPhase).unwrap() > 1.0 - 1e-12);
        let sx = CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]);
        assert!(fidelity(u.matrix(), &sx, FidelityMode::GlobalPhase).unwrap() > 1.0 - 1e-12);
    }

    #[test]
    fn zero_angle_and_bad_config() {
        let p = one_qubit(0.4);
        assert!(rotation_pulse(&p, 0, Axis::Y, 0.0, &PulseConfig::rwa(0.05)).unwrap().is_empty());
        assert!(matches!(
            rotation_pulse(&p, 0, Axis::X, 1.0, &PulseConfig::rwa(0.0)),
            Err(Error::InvalidConfiguration(_))
        ));
        assert!(rotation_pulse(&p, 0, Axis::X, 7.0, &PulseConfig::rwa(0.1)).is_err());
    }

    #[test]
    fn frame_mixing_rejected() {
        let p = one_qubit(0.4);
        let mut seq = PulseSequence::new(1);
        seq.push(Step::Segment(PulseSegment::free(1, 1.0, Frame::Lab)));
        seq.push(Step::Segment(PulseSegment::free(1, 1.0, Frame::Rwa)));
        assert!(matches!(evolve(&seq, &p, &EvolveOptions::default()), Err(Error::FrameMismatch(_))));
    }

    #[test]
    fn substep_overflow_is_a_resolution_error() {
        let p = one_qubit(0.4);
        let mut seq = PulseSequence::new(1);
        seq.push(Step::Segment(PulseSegment {
            duration: 1e9,
            drives: vec![Drive::resonant(0.4, 0.01, 0.0)],
            frame: Frame::Lab,
            couplings: true,
            reversed: false,
        }));
        assert!(matches!(evolve(&seq, &p, &EvolveOptions::default()), Err(Error::Resolution(_))));
    }

    #[test]
    fn composite_and_virtual_z_agree_with_exact_rotation() {
        let p = one_qubit(0.4);
        let target = rotation_target(1, 0, Axis::Z, 0.7);
        for z_mode in [ZMode::Virtual, ZMode::Composite] {
            let cfg = PulseConfig { z_mode, ..PulseConfig::rwa(0.05) };
            let seq = rotation_pulse(&p, 0, Axis::Z, 0.7, &cfg).unwrap();
            let u = evolve(&seq, &p, &EvolveOptions::default()).unwrap();
            assert!(fidelity(u.matrix(), &target, FidelityMode::GlobalPhase).unwrap() > 1.0 - 1e-12, "{z_mode:?}");
        }
        // the composite identity itself
        let comp = rotation_target(1, 0, Axis::X, -FRAC_PI_2) * rotation_target(1, 0, Axis::Y, 0.7) * rotation_target(1, 0, Axis::X, FRAC_PI_2);
        assert!(max_abs_diff(&comp, &target) < 1e-14);
    }

    #[test]
    fn virtual_z_shifts_later_drive_phases() {
        let p = one_qubit(0.4);
        let cfg = PulseConfig::rwa(0.05);
        let seq = rotation_pulse(&p, 0, Axis::Z, 0.4, &cfg).unwrap().then(rotation_pulse(&p, 0, Axis::X, 1.1, &cfg).unwrap());
        let u = evolve(&seq, &p, &EvolveOptions::default()).unwrap();
        let target = rotation_target(1, 0, Axis::X, 1.1) * rotation_target(1, 0, Axis::Z, 0.4);
        assert!(fidelity(u.matrix(), &target, FidelityMode::GlobalPhase).unwrap() > 1.0 - 1e-12);
    }

    #[test]
    fn ideal_cnot_conjugation() {
        let n = 2;
        let inner = rotation_target(n, 0, Axis::X, FRAC_PI_2)
            * rotation_target(n, 1, Axis::Y, FRAC_PI_2)
            * rotation_target(n, 1, Axis::X, FRAC_PI_2)
            * coupling_target(n, 0, 1, -PI)
            * rotation_target(n, 1, Axis::Y, -FRAC_PI_2);
        let charge = to_charge_basis(&inner, n);
        assert!(fidelity(&charge, &ideal_cnot(n, 0, 1), FidelityMode::GlobalPhase).unwrap() > 1.0 - 1e-12);
    }

    #[test]
    fn fidelity_basics() {
        let sx = CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]);
        let sz = CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]);
        assert_eq!(fidelity(&sx, &sz, FidelityMode::GlobalPhase).unwrap(), 0.0);
        let phased = &sx * C64::from_polar(1.0, 0.3);
        assert!((fidelity(&phased, &sx, FidelityMode::GlobalPhase).unwrap() - 1.0).abs() < 1e-15);
        assert!(fidelity(&linalg::identity(2), &linalg::identity(4), FidelityMode::GlobalPhase).is_err());
    }

    #[test]
    fn local_z_fidelity_removes_z_dressing() {
        let n = 2;
        let cnot = ideal_cnot(n, 0, 1);
        let dressed = rotation_target(n, 0, Axis::Z, 0.3) * rotation_target(n, 1, Axis::Z, -1.2) * &cnot * rotation_target(n, 1, Axis::Z, 0.8);
        assert!(fidelity(&dressed, &cnot, FidelityMode::GlobalPhase).unwrap() < 0.9);
        assert!(fidelity(&dressed, &cnot, FidelityMode::LocalZPhases).unwrap() > 1.0 - 1e-12);
    }

    #[test]
    fn concurrence_of_bell_and_product() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let bell = CVector::from_vec(vec![c(s, 0.0), ZERO, ZERO, c(s, 0.0)]);
        assert!((concurrence(&bell).unwrap() - 1.0).abs() < 1e-15);
        let prod = CVector::from_vec(vec![c(0.5, 0.0); 4]);
        assert!(concurrence(&prod).unwrap() < 1e-15);
    }

    #[test]
    fn schedule_round_trip_and_errors() {
        let p = SpinChainParams::uniform_chain(2, 0.4, 0.0, 0.1).unwrap();
        let seq = cnot_sequence(&p, 0, 1, &PulseConfig::ideal()).unwrap();
        let text = to_schedule(&seq);
        assert_eq!(parse_schedule(&text).unwrap(), seq);
        assert!(matches!(parse_schedule("nonsense"), Err(Error::Schedule { line: 1, .. })));
        let bad = format!("{SCHEDULE_HEADER}\nqubits 1\nstart 0\nkick-q 0 0 0 1 0 0 -\n");
        assert!(matches!(parse_schedule(&bad), Err(Error::Schedule { line: 4, .. })));
    }

    #[test]
    fn coupling_gate_edge_cases() {
        let p = SpinChainParams::uniform_chain(2, 0.4, 0.0, 0.0).unwrap();
        assert!(matches!(coupling_gate(&p, 0, 1, -PI, &PulseConfig::ideal()), Err(Error::UnreachableGate(_))));
        let p = SpinChainParams::uniform_chain(3, 0.4, 0.0, 0.1).unwrap();
        assert!(coupling_gate(&p, 0, 1, 0.0, &PulseConfig::ideal()).unwrap().is_empty());
        assert!(coupling_gate(&p, 0, 2, 1.0, &PulseConfig::ideal()).is_err());
    }
}
