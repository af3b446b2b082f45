//! Capacitance network of a quantum-dot qubit array.
//!
//! Each qubit is a pair of dots: the upper dot `α` couples to its gate through
//! `C_A`, to the lower dot `β` through the tunnel barrier `C_B`, and `β`
//! couples to the substrate through `C_C`. Neighbouring qubits are coupled by
//! `C_D = C_G` (α–α and β–β) and `C_E = C_F` (diagonal α–β). The cross-gate
//! capacitances attach the neighbouring gates to `α_i`:
//! `C_H[i]` comes from gate `i−1` and `C_I[i]` from gate `i+1`.
//!
//! Energies are in meV, capacitances in aF, lengths in nm, voltages in V and
//! charges in units of `e`.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::{E_PER_AF_VOLTS, EPS0_AF_PER_NM, HBAR_MEV_PS, K_E_MEV_AF, MEV_PER_E_V, R_K_OHM};

/// Ratio between the Ising coefficient extracted from [`charging_oracle`]
/// (`E(++) + E(−−) − E(+−) − E(−+)`, the `J` of `J I_z I_z`) and the
/// closed-form [`coupling_j`]. Fixed by comparing the two in the weak-coupling
/// limit; see `tests::spin_convention_factor_is_sixteen`.
pub const SPIN_CONVENTION_FACTOR: f64 = 16.0;

/// Largest qubit count accepted by the brute-force oracle.
pub const ORACLE_MAX_QUBITS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Lattice {
    Chain,
    Grid { nx: usize, ny: usize },
}

impl Lattice {
    pub fn n_sites(&self, n_chain: usize) -> usize {
        match *self {
            Lattice::Chain => n_chain,
            Lattice::Grid { nx, ny } => nx * ny,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dims {
    OneD,
    TwoD,
}

/// Per-qubit geometry override; `None` fields fall back to the array values.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct QubitGeometry {
    pub r0: Option<f64>,
    pub d_a: Option<f64>,
    pub d_b: Option<f64>,
    pub d_c: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceGeometry {
    /// Dot radius (nm).
    pub r0: f64,
    /// Gate-to-upper-dot distance (nm).
    pub d_a: f64,
    /// Interdot barrier thickness (nm).
    pub d_b: f64,
    /// Lower-dot-to-substrate distance (nm).
    pub d_c: f64,
    /// Distance between dots of neighbouring qubits (nm).
    pub d_d: f64,
    pub eps_ox: f64,
    pub eps_si: f64,
    pub n_qubits: usize,
    pub lattice: Lattice,
    /// Gate to neighbouring-dot distance; defaults to `sqrt(d_A² + d_D²)`.
    pub d_cross: Option<f64>,
    /// Diagonal inter-qubit capacitance `C_E = C_F` (aF).
    pub c_e: f64,
    pub per_qubit: BTreeMap<usize, QubitGeometry>,
}

impl DeviceGeometry {
    /// The larger of the two reference devices: r0 = 2.5 nm, d_A = 8, d_B = 1.5,
    /// d_C = 2.5, d_D = 12 nm, SiO₂ on Si.
    pub fn nominal(n_qubits: usize) -> Self {
        Self {
            r0: 2.5,
            d_a: 8.0,
            d_b: 1.5,
            d_c: 2.5,
            d_d: 12.0,
            eps_ox: 4.0,
            eps_si: 12.0,
            n_qubits,
            lattice: Lattice::Chain,
            d_cross: None,
            c_e: 0.0,
            per_qubit: BTreeMap::new(),
        }
    }

    /// The scaled-down device: r0 = 0.5 nm, d_B = 1.2 nm, d_D = 2 nm.
    pub fn compact(n_qubits: usize) -> Self {
        Self {
            r0: 0.5,
            d_b: 1.2,
            d_d: 2.0,
            ..Self::nominal(n_qubits)
        }
    }

    pub fn n_sites(&self) -> usize {
        self.lattice.n_sites(self.n_qubits)
    }

    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        for (name, v) in [
            ("r0", self.r0),
            ("d_A", self.d_a),
            ("d_B", self.d_b),
            ("d_C", self.d_c),
            ("d_D", self.d_d),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                bad.push(format!("{name} must be > 0 (got {v})"));
            }
        }
        if let Some(d) = self.d_cross {
            if !(d > 0.0) {
                bad.push(format!("d_cross must be > 0 (got {d})"));
            }
        }
        for (name, v) in [("eps_ox", self.eps_ox), ("eps_si", self.eps_si)] {
            if !(v >= 1.0) {
                bad.push(format!("{name} must be >= 1 (got {v})"));
            }
        }
        if !(self.c_e >= 0.0) {
            bad.push(format!("c_e must be >= 0 (got {})", self.c_e));
        }
        if self.n_sites() == 0 {
            bad.push("n_qubits must be >= 1".into());
        }
        if let Lattice::Grid { nx, ny } = self.lattice {
            if nx * ny != self.n_qubits {
                bad.push(format!(
                    "grid {nx}x{ny} does not match n_qubits = {}",
                    self.n_qubits
                ));
            }
        }
        for (&i, q) in &self.per_qubit {
            if i >= self.n_sites() {
                bad.push(format!("override for qubit {i} out of range"));
            }
            for (name, v) in [("r0", q.r0), ("d_A", q.d_a), ("d_B", q.d_b), ("d_C", q.d_c)] {
                if let Some(v) = v {
                    if !(v > 0.0) {
                        bad.push(format!("qubit {i} {name} must be > 0 (got {v})"));
                    }
                }
            }
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidInput(bad.join("; ")))
        }
    }

    fn qubit(&self, i: usize) -> (f64, f64, f64, f64) {
        let o = self.per_qubit.get(&i).copied().unwrap_or_default();
        (
            o.r0.unwrap_or(self.r0),
            o.d_a.unwrap_or(self.d_a),
            o.d_b.unwrap_or(self.d_b),
            o.d_c.unwrap_or(self.d_c),
        )
    }
}

/// Parallel-plate estimate for a dot of radius `r0` facing a plane
/// (`faces = 1`) or another dot (`faces = 2`) across oxide of thickness `d`.
pub fn plate_capacitance(r0: f64, d: f64, eps_ox: f64, eps_si: f64, faces: u32) -> f64 {
    let area = 2.0 * std::f64::consts::PI * eps_ox * EPS0_AF_PER_NM * r0 * r0;
    area / (d + faces as f64 * (eps_ox / eps_si) * r0)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct QubitCaps {
    pub c_a: f64,
    pub c_b: f64,
    pub c_c: f64,
    /// Gate `i−1` to `α_i`.
    pub c_h: f64,
    /// Gate `i+1` to `α_i`.
    pub c_i: f64,
}

/// Chain bond between qubits `i` and `i+1`; `C_G = C_D` and `C_F = C_E`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct BondCaps {
    pub c_d: f64,
    pub c_e: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Couplings {
    Chain { bonds: Vec<BondCaps> },
    /// Row-major sites `k = y·nx + x`. `x[y·(nx−1) + x]` joins `(x,y)–(x+1,y)`,
    /// `y[y·nx + x]` joins `(x,y)–(x,y+1)`.
    Grid {
        nx: usize,
        ny: usize,
        x: Vec<f64>,
        y: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacitanceSet {
    pub qubits: Vec<QubitCaps>,
    pub couplings: Couplings,
}

impl CapacitanceSet {
    pub fn n_qubits(&self) -> usize {
        self.qubits.len()
    }

    /// Uniform chain built from one qubit and one bond template. Boundary
    /// cross-gate terms are zeroed.
    pub fn uniform_chain(n: usize, q: QubitCaps, bond: BondCaps) -> Self {
        let mut qubits = vec![q; n];
        if let Some(first) = qubits.first_mut() {
            first.c_h = 0.0;
        }
        if let Some(last) = qubits.last_mut() {
            last.c_i = 0.0;
        }
        Self {
            qubits,
            couplings: Couplings::Chain {
                bonds: vec![bond; n.saturating_sub(1)],
            },
        }
    }

    pub fn bond(&self, i: usize) -> Option<BondCaps> {
        match &self.couplings {
            Couplings::Chain { bonds } => bonds.get(i).copied(),
            Couplings::Grid { .. } => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_qubits();
        if n == 0 {
            return Err(Error::InvalidInput("empty capacitance set".into()));
        }
        let mut bad = Vec::new();
        for (i, q) in self.qubits.iter().enumerate() {
            for (name, v) in [
                ("C_A", q.c_a),
                ("C_B", q.c_b),
                ("C_C", q.c_c),
                ("C_H", q.c_h),
                ("C_I", q.c_i),
            ] {
                if !(v >= 0.0) || !v.is_finite() {
                    bad.push(format!("qubit {i} {name} = {v} must be >= 0"));
                }
            }
        }
        match &self.couplings {
            Couplings::Chain { bonds } => {
                if bonds.len() + 1 != n {
                    bad.push(format!("{} bonds for {n} qubits", bonds.len()));
                }
                for (i, b) in bonds.iter().enumerate() {
                    if !(b.c_d >= 0.0) || !(b.c_e >= 0.0) {
                        bad.push(format!("bond {i} has negative capacitance"));
                    }
                }
                if self.qubits[0].c_h != 0.0 {
                    bad.push("qubit 0 has no gate to its left but C_H != 0".into());
                }
                if self.qubits[n - 1].c_i != 0.0 {
                    bad.push(format!(
                        "qubit {} has no gate to its right but C_I != 0",
                        n - 1
                    ));
                }
            }
            Couplings::Grid { nx, ny, x, y } => {
                if nx * ny != n {
                    bad.push(format!("grid {nx}x{ny} does not hold {n} qubits"));
                }
                if x.len() != nx.saturating_sub(1) * ny || y.len() != nx * ny.saturating_sub(1) {
                    bad.push("grid bond arrays have the wrong length".into());
                }
                if x.iter().chain(y.iter()).any(|&c| !(c >= 0.0)) {
                    bad.push("negative grid bond capacitance".into());
                }
            }
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidInput(bad.join("; ")))
        }
    }

    /// Every capacitance multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        let qubits = self
            .qubits
            .iter()
            .map(|q| QubitCaps {
                c_a: q.c_a * s,
                c_b: q.c_b * s,
                c_c: q.c_c * s,
                c_h: q.c_h * s,
                c_i: q.c_i * s,
            })
            .collect();
        let couplings = match &self.couplings {
            Couplings::Chain { bonds } => Couplings::Chain {
                bonds: bonds
                    .iter()
                    .map(|b| BondCaps {
                        c_d: b.c_d * s,
                        c_e: b.c_e * s,
                    })
                    .collect(),
            },
            Couplings::Grid { nx, ny, x, y } => Couplings::Grid {
                nx: *nx,
                ny: *ny,
                x: x.iter().map(|c| c * s).collect(),
                y: y.iter().map(|c| c * s).collect(),
            },
        };
        Self { qubits, couplings }
    }
}

pub fn caps_from_geometry(geom: &DeviceGeometry) -> Result<CapacitanceSet> {
    geom.validate()?;
    let n = geom.n_sites();
    let (eo, es) = (geom.eps_ox, geom.eps_si);
    let d_cross = geom
        .d_cross
        .unwrap_or_else(|| (geom.d_a * geom.d_a + geom.d_d * geom.d_d).sqrt());
    let chain = matches!(geom.lattice, Lattice::Chain);

    let qubits = (0..n)
        .map(|i| {
            let (r0, d_a, d_b, d_c) = geom.qubit(i);
            let cross = plate_capacitance(r0, d_cross, eo, es, 1);
            QubitCaps {
                c_a: plate_capacitance(r0, d_a, eo, es, 1),
                c_b: plate_capacitance(r0, d_b, eo, es, 2),
                c_c: plate_capacitance(r0, d_c, eo, es, 1),
                c_h: if chain && i > 0 { cross } else { 0.0 },
                c_i: if chain && i + 1 < n { cross } else { 0.0 },
            }
        })
        .collect();

    let bond_cd = |i: usize, j: usize| {
        let r = 0.5 * (geom.qubit(i).0 + geom.qubit(j).0);
        plate_capacitance(r, geom.d_d, eo, es, 2)
    };
    let couplings = match geom.lattice {
        Lattice::Chain => Couplings::Chain {
            bonds: (0..n.saturating_sub(1))
                .map(|i| BondCaps {
                    c_d: bond_cd(i, i + 1),
                    c_e: geom.c_e,
                })
                .collect(),
        },
        Lattice::Grid { nx, ny } => {
            let mut x = Vec::new();
            let mut y = Vec::new();
            for row in 0..ny {
                for col in 0..nx.saturating_sub(1) {
                    let k = row * nx + col;
                    x.push(bond_cd(k, k + 1));
                }
            }
            for row in 0..ny.saturating_sub(1) {
                for col in 0..nx {
                    let k = row * nx + col;
                    y.push(bond_cd(k, k + nx));
                }
            }
            Couplings::Grid { nx, ny, x, y }
        }
    };
    let caps = CapacitanceSet { qubits, couplings };
    caps.validate()?;
    Ok(caps)
}

/// Reduced capacitances of one qubit. `c_d`/`c_e` belong to the bond towards
/// the next qubit (zero for the last one).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuxCaps {
    pub c_a: f64,
    pub c_b: f64,
    pub c_c: f64,
    pub c_d: f64,
    pub c_e: f64,
    /// `C_a·C_b − C_c²` (aF²).
    pub d: f64,
}

impl AuxCaps {
    /// `C_d² / D`, the expansion parameter of the reduced energy.
    pub fn coupling_ratio(&self) -> f64 {
        self.c_d * self.c_d / self.d
    }
}

fn check_index(caps: &CapacitanceSet, i: usize) -> Result<()> {
    if i >= caps.n_qubits() {
        return Err(Error::InvalidInput(format!(
            "qubit {i} out of range for {} qubits",
            caps.n_qubits()
        )));
    }
    Ok(())
}

fn finish_aux(c_a: f64, c_b: f64, c_c: f64, c_d: f64, c_e: f64, i: usize) -> Result<AuxCaps> {
    let d = c_a * c_b - c_c * c_c;
    if !(d > 0.0) {
        return Err(Error::DegenerateNetwork(format!(
            "qubit {i}: D = C_a C_b - C_c^2 = {d} <= 0"
        )));
    }
    Ok(AuxCaps {
        c_a,
        c_b,
        c_c,
        c_d,
        c_e,
        d,
    })
}

/// Reduced capacitances of qubit `i`.
///
/// In one dimension every capacitance on the upper dot other than `C_B`
/// (`α' = C_A + C_H + C_I + Σ_neighbours (C_D + C_E)`) and on the lower dot
/// (`γ' = C_C + Σ_neighbours (C_D + C_E)`) enters as `C_b = α' + γ'`,
/// `C_a = C_b + 4C_B` and `C_c = γ' − α'`, which is the form the exact
/// minimisation of the network energy produces. In two dimensions the reduced
/// definitions without neighbour terms are used.
pub fn derive_aux(caps: &CapacitanceSet, i: usize, dims: Dims) -> Result<AuxCaps> {
    check_index(caps, i)?;
    let q = caps.qubits[i];
    let right = caps.bond(i).unwrap_or_default();
    match dims {
        Dims::OneD => {
            let left = if i > 0 {
                caps.bond(i - 1).unwrap_or_default()
            } else {
                BondCaps::default()
            };
            let neighbours = right.c_d + right.c_e + left.c_d + left.c_e;
            let alpha = q.c_a + q.c_h + q.c_i + neighbours;
            let gamma = q.c_c + neighbours;
            let c_b = alpha + gamma;
            finish_aux(
                c_b + 4.0 * q.c_b,
                c_b,
                gamma - alpha,
                right.c_d + right.c_e,
                right.c_d - right.c_e,
                i,
            )
        }
        Dims::TwoD => finish_aux(
            q.c_a + q.c_c + 4.0 * q.c_b,
            q.c_a + q.c_c,
            q.c_c - q.c_a,
            right.c_d,
            right.c_d,
            i,
        ),
    }
}

/// Reduced capacitances with the published one-dimensional definitions taken
/// verbatim (`C_a` counts only the right neighbour, `C_c = C_C − C_A + C_H + C_I`).
/// Kept for comparison against [`derive_aux`] in oracle reports.
pub fn derive_aux_literal(caps: &CapacitanceSet, i: usize) -> Result<AuxCaps> {
    check_index(caps, i)?;
    let q = caps.qubits[i];
    let right = caps.bond(i).unwrap_or_default();
    let left = if i > 0 {
        caps.bond(i - 1).unwrap_or_default()
    } else {
        BondCaps::default()
    };
    let c_a = q.c_a + q.c_c + 4.0 * q.c_b + 2.0 * (right.c_d + right.c_e) + q.c_h + q.c_i;
    let c_b = q.c_a
        + q.c_c
        + 2.0 * (right.c_d + right.c_e)
        + 2.0 * (left.c_d + left.c_e)
        + q.c_h
        + q.c_i;
    let c_c = q.c_c - q.c_a + q.c_h + q.c_i;
    finish_aux(c_a, c_b, c_c, right.c_d + right.c_e, right.c_d - right.c_e, i)
}

pub fn all_aux(caps: &CapacitanceSet, dims: Dims) -> Result<Vec<AuxCaps>> {
    (0..caps.n_qubits()).map(|i| derive_aux(caps, i, dims)).collect()
}

/// `E_C = C_b / (2D)` in meV.
pub fn charging_energy(aux: &AuxCaps) -> f64 {
    aux.c_b / (2.0 * aux.d) * K_E_MEV_AF
}

/// Nearest-neighbour coupling `[C_bi C_bj C_e + C_ci C_cj C_d] / (2 D_i D_j)`
/// in meV, using the bond stored on `aux_i` (the pair is `(i, i+1)`).
pub fn coupling_j(aux_i: &AuxCaps, aux_j: &AuxCaps) -> f64 {
    let num = aux_i.c_b * aux_j.c_b * aux_i.c_e + aux_i.c_c * aux_j.c_c * aux_i.c_d;
    num / (2.0 * aux_i.d * aux_j.d) * K_E_MEV_AF
}

/// Lattice coupling `2 (C_bi C_bn + C_ci C_cn) C_D / (D_i D_n)` in meV.
pub fn coupling_2d(aux_i: &AuxCaps, aux_n: &AuxCaps, bond_cap: f64) -> f64 {
    2.0 * (aux_i.c_b * aux_n.c_b + aux_i.c_c * aux_n.c_c) * bond_cap / (aux_i.d * aux_n.d)
        * K_E_MEV_AF
}

/// All chain couplings `J_{i,i+1}`.
pub fn chain_couplings(caps: &CapacitanceSet) -> Result<Vec<f64>> {
    let aux = all_aux(caps, Dims::OneD)?;
    Ok(aux.windows(2).map(|w| coupling_j(&w[0], &w[1])).collect())
}

/// `(J^x, J^y)` bond arrays of a grid, in the layout of [`Couplings::Grid`].
pub fn grid_couplings(caps: &CapacitanceSet) -> Result<(Vec<f64>, Vec<f64>)> {
    let Couplings::Grid { nx, ny, x, y } = &caps.couplings else {
        return Err(Error::InvalidInput("grid couplings requested for a chain".into()));
    };
    let (nx, ny) = (*nx, *ny);
    let aux = all_aux(caps, Dims::TwoD)?;
    let mut jx = Vec::with_capacity(x.len());
    for row in 0..ny {
        for col in 0..nx.saturating_sub(1) {
            let k = row * nx + col;
            jx.push(coupling_2d(&aux[k], &aux[k + 1], x[row * (nx - 1) + col]));
        }
    }
    let mut jy = Vec::with_capacity(y.len());
    for row in 0..ny.saturating_sub(1) {
        for col in 0..nx {
            let k = row * nx + col;
            jy.push(coupling_2d(&aux[k], &aux[k + nx], y[row * nx + col]));
        }
    }
    Ok((jx, jy))
}

/// Gate-induced charge `Q_V = C_A V_i + C_H V_{i−1} + C_I V_{i+1}` in units of `e`.
pub fn gate_charge(caps: &CapacitanceSet, i: usize, gates: &[f64]) -> Result<f64> {
    check_index(caps, i)?;
    if gates.len() != caps.n_qubits() {
        return Err(Error::InvalidInput(format!(
            "{} gate voltages for {} qubits",
            gates.len(),
            caps.n_qubits()
        )));
    }
    let q = caps.qubits[i];
    let mut qv = q.c_a * gates[i];
    if i > 0 {
        qv += q.c_h * gates[i - 1];
    }
    if i + 1 < gates.len() {
        qv += q.c_i * gates[i + 1];
    }
    Ok(qv / E_PER_AF_VOLTS)
}

/// Detuning `Ω_i = 4 C_C / D · (Q_V − Q_V^res)` in meV; `q_res` in units of `e`.
pub fn detuning_omega(caps: &CapacitanceSet, i: usize, gates: &[f64], q_res: f64) -> Result<f64> {
    let aux = derive_aux(caps, i, Dims::OneD)?;
    let qv = gate_charge(caps, i, gates)?;
    Ok(4.0 * caps.qubits[i].c_c / aux.d * (qv - q_res) * K_E_MEV_AF)
}

/// Linear map from gate offsets `v` (V) to drive amplitudes `Δ` (meV):
/// `Δ_i = 4 C_A C_C / D · (v_i + [C_H v_{i−1} + C_I v_{i+1}] / C_A)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrosstalkMatrix {
    pub diag: Vec<f64>,
    /// `lower[i]` multiplies `v_{i}` in row `i+1`.
    pub lower: Vec<f64>,
    /// `upper[i]` multiplies `v_{i+1}` in row `i`.
    pub upper: Vec<f64>,
}

impl CrosstalkMatrix {
    pub fn from_caps(caps: &CapacitanceSet) -> Result<Self> {
        let n = caps.n_qubits();
        let aux = all_aux(caps, Dims::OneD)?;
        let mut diag = Vec::with_capacity(n);
        let mut lower = Vec::with_capacity(n.saturating_sub(1));
        let mut upper = Vec::with_capacity(n.saturating_sub(1));
        for i in 0..n {
            let q = caps.qubits[i];
            let scale = 4.0 * q.c_c / aux[i].d * MEV_PER_E_V;
            diag.push(scale * q.c_a);
            if i > 0 {
                lower.push(scale * q.c_h);
            }
            if i + 1 < n {
                upper.push(scale * q.c_i);
            }
        }
        Ok(Self { diag, lower, upper })
    }

    /// Cross-talk switched off: only the diagonal survives.
    pub fn without_crosstalk(&self) -> Self {
        Self {
            diag: self.diag.clone(),
            lower: vec![0.0; self.lower.len()],
            upper: vec![0.0; self.upper.len()],
        }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut d = self.diag[i] * v[i];
                if i > 0 {
                    d += self.lower[i - 1] * v[i - 1];
                }
                if i + 1 < n {
                    d += self.upper[i] * v[i + 1];
                }
                d
            })
            .collect()
    }

    /// Gate offsets computed qubit by qubit, ignoring the neighbour gates.
    pub fn naive_inverse(&self, target: &[f64]) -> Vec<f64> {
        target.iter().zip(&self.diag).map(|(t, d)| t / d).collect()
    }

    pub fn is_diagonally_dominant(&self) -> bool {
        let n = self.len();
        (0..n).all(|i| {
            let off = if i > 0 { self.lower[i - 1].abs() } else { 0.0 }
                + if i + 1 < n { self.upper[i].abs() } else { 0.0 };
            self.diag[i].abs() > off
        })
    }

    /// Solve `M v = target` by tridiagonal elimination with partial pivoting.
    pub fn solve(&self, target: &[f64]) -> Result<Vec<f64>> {
        let n = self.len();
        if target.len() != n {
            return Err(Error::InvalidInput(format!(
                "{} targets for {n} qubits",
                target.len()
            )));
        }
        let scale = self
            .diag
            .iter()
            .chain(&self.lower)
            .chain(&self.upper)
            .fold(0.0_f64, |m, x| m.max(x.abs()));
        if scale == 0.0 {
            return Err(Error::IllConditioned("zero drive matrix".into()));
        }
        let tiny = 1e-12 * scale;
        // rows stored as (sub, diag, sup, sup2) after pivoting
        let mut dl: Vec<f64> = self.lower.clone();
        let mut d: Vec<f64> = self.diag.clone();
        let mut du: Vec<f64> = self.upper.clone();
        let mut du2 = vec![0.0; n.saturating_sub(2)];
        let mut b = target.to_vec();
        for i in 0..n.saturating_sub(1) {
            if d[i].abs() >= dl[i].abs() {
                if d[i].abs() < tiny {
                    return Err(Error::IllConditioned(format!("pivot {i} vanishes")));
                }
                let f = dl[i] / d[i];
                d[i + 1] -= f * du[i];
                b[i + 1] -= f * b[i];
                dl[i] = 0.0;
            } else {
                let f = d[i] / dl[i];
                d[i] = dl[i];
                let tmp = d[i + 1];
                d[i + 1] = du[i] - f * tmp;
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] = -f * du2[i];
                }
                du[i] = tmp;
                b.swap(i, i + 1);
                b[i + 1] -= f * b[i];
                dl[i] = 0.0;
            }
        }
        if d[n - 1].abs() < tiny {
            return Err(Error::IllConditioned(format!("pivot {} vanishes", n - 1)));
        }
        let mut v = vec![0.0; n];
        for i in (0..n).rev() {
            let mut s = b[i];
            if i + 1 < n {
                s -= du[i] * v[i + 1];
            }
            if i + 2 < n {
                s -= du2[i] * v[i + 2];
            }
            v[i] = s / d[i];
        }
        // residual check catches near-singular systems the pivot test misses
        let back = self.apply(&v);
        let tnorm = target.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        let resid = back
            .iter()
            .zip(target)
            .fold(0.0_f64, |m, (a, t)| m.max((a - t).abs()));
        if tnorm > 0.0 && resid > 1e-10 * tnorm {
            return Err(Error::IllConditioned(format!(
                "residual {resid:e} relative to target {tnorm:e}"
            )));
        }
        Ok(v)
    }
}

/// Drive amplitudes (meV) produced by gate offsets `v` (V), cross-talk included.
pub fn drive_delta(caps: &CapacitanceSet, v: &[f64]) -> Result<Vec<f64>> {
    if v.len() != caps.n_qubits() {
        return Err(Error::InvalidInput(format!(
            "{} offsets for {} qubits",
            v.len(),
            caps.n_qubits()
        )));
    }
    Ok(CrosstalkMatrix::from_caps(caps)?.apply(v))
}

/// Gate offsets that produce exactly `target` once cross-talk is included.
pub fn crosstalk_compensate(caps: &CapacitanceSet, target: &[f64]) -> Result<Vec<f64>> {
    CrosstalkMatrix::from_caps(caps)?.solve(target)
}

/// Excess-charge configuration: per qubit the dot occupations `(N_α, N_β)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChargeConfig {
    dots: Vec<(f64, f64)>,
}

impl ChargeConfig {
    /// One excess electron per qubit, `n_i = N_α − N_β ∈ {−1, +1}`.
    pub fn spins(n: &[i8]) -> Result<Self> {
        if let Some(bad) = n.iter().find(|&&x| x != 1 && x != -1) {
            return Err(Error::InvalidInput(format!("n_i must be ±1, got {bad}")));
        }
        Ok(Self {
            dots: n
                .iter()
                .map(|&x| ((1.0 + x as f64) / 2.0, (1.0 - x as f64) / 2.0))
                .collect(),
        })
    }

    /// Arbitrary (possibly fractional) dot occupations, for curvature probes.
    pub fn dots(dots: Vec<(f64, f64)>) -> Self {
        Self { dots }
    }

    /// For each qubit `N_i = N_α + N_β`.
    pub fn totals(&self) -> Vec<f64> {
        self.dots.iter().map(|(a, b)| a + b).collect()
    }

    pub fn relative(&self) -> Vec<f64> {
        self.dots.iter().map(|(a, b)| a - b).collect()
    }

    pub fn len(&self) -> usize {
        self.dots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dots.is_empty()
    }
}

/// One junction of the network: capacitance, the voltage source it connects
/// to (if any) and its incidence on dot nodes (`2i` = α_i, `2i+1` = β_i).
struct Junction {
    cap: f64,
    source: f64,
    nodes: Vec<(usize, f64)>,
}

fn junctions(caps: &CapacitanceSet, gates: &[f64]) -> Vec<Junction> {
    let n = caps.n_qubits();
    let alpha = |i: usize| 2 * i;
    let beta = |i: usize| 2 * i + 1;
    let mut js = Vec::new();
    for (i, q) in caps.qubits.iter().enumerate() {
        js.push(Junction { cap: q.c_a, source: gates[i], nodes: vec![(alpha(i), 1.0)] });
        js.push(Junction { cap: q.c_b, source: 0.0, nodes: vec![(alpha(i), -1.0), (beta(i), 1.0)] });
        js.push(Junction { cap: q.c_c, source: 0.0, nodes: vec![(beta(i), -1.0)] });
        if i > 0 {
            js.push(Junction { cap: q.c_h, source: gates[i - 1], nodes: vec![(alpha(i), 1.0)] });
        }
        if i + 1 < n {
            js.push(Junction { cap: q.c_i, source: gates[i + 1], nodes: vec![(alpha(i), 1.0)] });
        }
    }
    for i in 0..n.saturating_sub(1) {
        let b = caps.bond(i).unwrap_or_default();
        // D: α_i–α_{i+1}, G: β_i–β_{i+1}, E: α_i–β_{i+1}, F: β_i–α_{i+1}
        js.push(Junction { cap: b.c_d, source: 0.0, nodes: vec![(alpha(i), 1.0), (alpha(i + 1), -1.0)] });
        js.push(Junction { cap: b.c_d, source: 0.0, nodes: vec![(beta(i), 1.0), (beta(i + 1), -1.0)] });
        js.push(Junction { cap: b.c_e, source: 0.0, nodes: vec![(alpha(i), 1.0), (beta(i + 1), -1.0)] });
        js.push(Junction { cap: b.c_e, source: 0.0, nodes: vec![(beta(i), 1.0), (alpha(i + 1), -1.0)] });
    }
    js.retain(|j| j.cap > 0.0);
    js
}

/// Minimum electrostatic energy (meV) of the full junction network for the
/// given dot charges: `Σ q²/2C − Σ q V` over all junction charges, subject to
/// the charge balance on every dot, solved as one KKT system.
pub fn charging_oracle(caps: &CapacitanceSet, gates: &[f64], n: &ChargeConfig) -> Result<f64> {
    caps.validate()?;
    let nq = caps.n_qubits();
    if !matches!(caps.couplings, Couplings::Chain { .. }) {
        return Err(Error::InvalidInput("oracle supports chains only".into()));
    }
    if nq > ORACLE_MAX_QUBITS {
        return Err(Error::InvalidInput(format!(
            "oracle limited to {ORACLE_MAX_QUBITS} qubits, got {nq}"
        )));
    }
    if gates.len() != nq || n.len() != nq {
        return Err(Error::InvalidInput("gate/charge vector length mismatch".into()));
    }
    let js = junctions(caps, gates);
    let m = js.len();
    let rows = 2 * nq;
    let dim = m + rows;
    let mut k = DMatrix::<f64>::zeros(dim, dim);
    let mut rhs = DVector::<f64>::zeros(dim);
    for (col, j) in js.iter().enumerate() {
        k[(col, col)] = K_E_MEV_AF / j.cap;
        rhs[col] = MEV_PER_E_V * j.source;
        for &(node, sign) in &j.nodes {
            k[(m + node, col)] = sign;
            k[(col, m + node)] = sign;
        }
    }
    for (i, &(na, nb)) in n.dots.iter().enumerate() {
        rhs[m + 2 * i] = -na;
        rhs[m + 2 * i + 1] = -nb;
    }
    let sol = k
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::DegenerateNetwork("singular KKT matrix".into()))?;
    if sol.iter().any(|x| !x.is_finite()) {
        return Err(Error::DegenerateNetwork("non-finite KKT solution".into()));
    }
    let energy = js
        .iter()
        .enumerate()
        .map(|(col, j)| {
            let q = sol[col];
            0.5 * K_E_MEV_AF * q * q / j.cap - MEV_PER_E_V * q * j.source
        })
        .sum();
    Ok(energy)
}

/// `E(++) + E(−−) − E(+−) − E(−+)` for qubits `i`, `j` (others held at `+1`),
/// i.e. the coefficient `J` of `J I_z^i I_z^j`.
pub fn oracle_pair_coupling(caps: &CapacitanceSet, i: usize, j: usize, gates: &[f64]) -> Result<f64> {
    let nq = caps.n_qubits();
    let energy = |si: i8, sj: i8| -> Result<f64> {
        let mut n = vec![1i8; nq];
        n[i] = si;
        n[j] = sj;
        charging_oracle(caps, gates, &ChargeConfig::spins(&n)?)
    };
    Ok(energy(1, 1)? + energy(-1, -1)? - energy(1, -1)? - energy(-1, 1)?)
}

/// Second difference `E(n_i=+1) + E(n_i=−1) − 2 E(n_i=0)` at `N_i = 1`, other
/// qubits held at `+1`. Equals `2·E_C` for the reduced energy.
pub fn oracle_curvature(caps: &CapacitanceSet, i: usize, gates: &[f64]) -> Result<f64> {
    let nq = caps.n_qubits();
    let energy = |ni: f64| -> Result<f64> {
        let mut dots = vec![(1.0, 0.0); nq];
        dots[i] = ((1.0 + ni) / 2.0, (1.0 - ni) / 2.0);
        charging_oracle(caps, gates, &ChargeConfig::dots(dots))
    };
    Ok(energy(1.0)? + energy(-1.0)? - 2.0 * energy(0.0)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriterionInput {
    pub temperature_mev: f64,
    pub j_mev: f64,
    pub delta0_mev: f64,
    pub t_mev: f64,
    pub r_int_ohm: f64,
    pub c_int_af: f64,
    /// Minimum ratio accepted for a "much less than" link.
    pub margin: f64,
}

pub const DEFAULT_MARGIN: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionLink {
    pub relation: String,
    pub lower: f64,
    pub upper: f64,
    pub ratio: f64,
    pub required_ratio: f64,
    pub strict_only: bool,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionReport {
    pub links: Vec<CriterionLink>,
    /// `1/(R_int C_int)` in THz (1/ps).
    pub cr_rate_thz: f64,
    /// `ħ/(R_int C_int)` in meV.
    pub cr_energy_mev: f64,
    pub r_int_above_rk: bool,
    pub margin: f64,
    pub all_pass: bool,
}

/// Checks `T ≪ J ≪ Δ₀ < t ≪ ħ/(C_int R_int)`.
pub fn criterion_check(inp: &CriterionInput) -> Result<CriterionReport> {
    for (name, v) in [
        ("T", inp.temperature_mev),
        ("J", inp.j_mev),
        ("Delta0", inp.delta0_mev),
        ("t", inp.t_mev),
        ("R_int", inp.r_int_ohm),
        ("C_int", inp.c_int_af),
        ("margin", inp.margin),
    ] {
        if !(v > 0.0) {
            return Err(Error::InvalidInput(format!("{name} must be > 0 (got {v})")));
        }
    }
    // R[Ω]·C[aF] = R·C·1e-18 s = R·C·1e-6 ps
    let rc_ps = inp.r_int_ohm * inp.c_int_af * 1e-6;
    let rate = 1.0 / rc_ps;
    let cr_energy = HBAR_MEV_PS * rate;
    let much_less = |relation: &str, lo: f64, hi: f64| CriterionLink {
        relation: relation.into(),
        lower: lo,
        upper: hi,
        ratio: hi / lo,
        required_ratio: inp.margin,
        strict_only: false,
        pass: hi / lo >= inp.margin,
    };
    let links = vec![
        much_less("T << J", inp.temperature_mev, inp.j_mev),
        much_less("J << Delta0", inp.j_mev, inp.delta0_mev),
        CriterionLink {
            relation: "Delta0 < t".into(),
            lower: inp.delta0_mev,
            upper: inp.t_mev,
            ratio: inp.t_mev / inp.delta0_mev,
            required_ratio: 1.0,
            strict_only: true,
            pass: inp.delta0_mev < inp.t_mev,
        },
        much_less("t << hbar/(C_int R_int)", inp.t_mev, cr_energy),
    ];
    let r_ok = inp.r_int_ohm > R_K_OHM;
    let all_pass = r_ok && links.iter().all(|l| l.pass);
    Ok(CriterionReport {
        links,
        cr_rate_thz: rate,
        cr_energy_mev: cr_energy,
        r_int_above_rk: r_ok,
        margin: inp.margin,
        all_pass,
    })
}

/// Per-qubit and per-bond parameters derived from a capacitance set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DerivedParams {
    pub caps: CapacitanceSet,
    pub aux: Vec<AuxCaps>,
    pub charging_energy_mev: Vec<f64>,
    /// Chain: `J_{i,i+1}`. Grid: empty, see `jx`/`jy`.
    pub j_mev: Vec<f64>,
    pub jx_mev: Vec<f64>,
    pub jy_mev: Vec<f64>,
    pub crosstalk_diagonally_dominant: bool,
}

pub fn derive_params(caps: &CapacitanceSet) -> Result<DerivedParams> {
    caps.validate()?;
    match &caps.couplings {
        Couplings::Chain { .. } => {
            let aux = all_aux(caps, Dims::OneD)?;
            let ec = aux.iter().map(charging_energy).collect();
            let j = aux.windows(2).map(|w| coupling_j(&w[0], &w[1])).collect();
            Ok(DerivedParams {
                caps: caps.clone(),
                aux,
                charging_energy_mev: ec,
                j_mev: j,
                jx_mev: Vec::new(),
                jy_mev: Vec::new(),
                crosstalk_diagonally_dominant: CrosstalkMatrix::from_caps(caps)?
                    .is_diagonally_dominant(),
            })
        }
        Couplings::Grid { .. } => {
            let aux = all_aux(caps, Dims::TwoD)?;
            let ec = aux.iter().map(charging_energy).collect();
            let (jx, jy) = grid_couplings(caps)?;
            Ok(DerivedParams {
                caps: caps.clone(),
                aux,
                charging_energy_mev: ec,
                j_mev: Vec::new(),
                jx_mev: jx,
                jy_mev: jy,
                crosstalk_diagonally_dominant: true,
            })
        }
    }
}
