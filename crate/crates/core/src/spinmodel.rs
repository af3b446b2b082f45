//! Dense spin Hamiltonians for chains and square lattices.
//!
//! Basis convention: qubit 0 is the most significant bit of the basis index,
//! bit value 0 is `|↑⟩` (electron in the upper dot) and `I_z = diag(½, −½)`.
//! The on-resonance and RWA Hamiltonians are written in the `α±` basis, where
//! the primed operators have the same matrices as the unprimed ones.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix, C64, ONE, ZERO};

pub const DEFAULT_MAX_QUBITS: usize = 14;

pub type Mat2 = [[C64; 2]; 2];

pub const SIGMA_X: Mat2 = [[ZERO, ONE], [ONE, ZERO]];
pub const SIGMA_Y: Mat2 = [[ZERO, C64 { re: 0.0, im: -1.0 }], [C64 { re: 0.0, im: 1.0 }, ZERO]];
pub const SIGMA_Z: Mat2 = [[ONE, ZERO], [ZERO, C64 { re: -1.0, im: 0.0 }]];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Topology {
    /// `j[i]` couples qubits `i` and `i+1`.
    Chain { j: Vec<f64> },
    /// Row-major sites `k = y·nx + x`; `jx[y·(nx−1)+x]` and `jy[y·nx+x]`.
    Grid {
        nx: usize,
        ny: usize,
        jx: Vec<f64>,
        jy: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpinChainParams {
    pub n_qubits: usize,
    /// Tunnelling amplitudes (meV).
    pub t: Vec<f64>,
    /// Detunings (meV).
    pub omega: Vec<f64>,
    pub topology: Topology,
    pub max_qubits: usize,
}

impl SpinChainParams {
    pub fn chain(t: Vec<f64>, omega: Vec<f64>, j: Vec<f64>) -> Result<Self> {
        let p = Self {
            n_qubits: t.len(),
            t,
            omega,
            topology: Topology::Chain { j },
            max_qubits: DEFAULT_MAX_QUBITS,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn uniform_chain(n: usize, t: f64, omega: f64, j: f64) -> Result<Self> {
        Self::chain(vec![t; n], vec![omega; n], vec![j; n.saturating_sub(1)])
    }

    pub fn grid(nx: usize, ny: usize, t: Vec<f64>, omega: Vec<f64>, jx: Vec<f64>, jy: Vec<f64>) -> Result<Self> {
        let p = Self {
            n_qubits: nx * ny,
            t,
            omega,
            topology: Topology::Grid { nx, ny, jx, jy },
            max_qubits: DEFAULT_MAX_QUBITS,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_max_qubits(mut self, max: usize) -> Self {
        self.max_qubits = max;
        self
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_qubits;
        if n == 0 {
            return Err(Error::InvalidInput("at least one qubit required".into()));
        }
        if n > self.max_qubits {
            return Err(Error::DimensionOverflow { n, max: self.max_qubits });
        }
        if self.t.len() != n || self.omega.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "{n} qubits but {} t values and {} omega values",
                self.t.len(),
                self.omega.len()
            )));
        }
        match &self.topology {
            Topology::Chain { j } => {
                if j.len() + 1 != n {
                    return Err(Error::DimensionMismatch(format!(
                        "{} couplings for a {n}-qubit chain",
                        j.len()
                    )));
                }
            }
            Topology::Grid { nx, ny, jx, jy } => {
                if nx * ny != n
                    || jx.len() != nx.saturating_sub(1) * ny
                    || jy.len() != nx * ny.saturating_sub(1)
                {
                    return Err(Error::DimensionMismatch(format!(
                        "grid {nx}x{ny} inconsistent with {n} qubits or bond arrays"
                    )));
                }
            }
        }
        let all = self.t.iter().chain(&self.omega).chain(self.couplings());
        if all.into_iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("non-finite Hamiltonian parameter".into()));
        }
        Ok(())
    }

    fn couplings(&self) -> Vec<&f64> {
        match &self.topology {
            Topology::Chain { j } => j.iter().collect(),
            Topology::Grid { jx, jy, .. } => jx.iter().chain(jy).collect(),
        }
    }

    /// Every coupled pair `(i, j, J)` with `i < j`.
    pub fn bonds(&self) -> Vec<(usize, usize, f64)> {
        match &self.topology {
            Topology::Chain { j } => j.iter().enumerate().map(|(i, &v)| (i, i + 1, v)).collect(),
            Topology::Grid { nx, ny, jx, jy } => {
                let (nx, ny) = (*nx, *ny);
                let mut out = Vec::new();
                for y in 0..ny {
                    for x in 0..nx.saturating_sub(1) {
                        let k = y * nx + x;
                        out.push((k, k + 1, jx[y * (nx - 1) + x]));
                    }
                }
                for y in 0..ny.saturating_sub(1) {
                    for x in 0..nx {
                        let k = y * nx + x;
                        out.push((k, k + nx, jy[y * nx + x]));
                    }
                }
                out
            }
        }
    }

    pub fn coupling(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (i.min(j), i.max(j));
        self.bonds()
            .into_iter()
            .find(|&(x, y, _)| x == a && y == b)
            .map_or(0.0, |(_, _, v)| v)
    }

    pub fn max_coupling(&self) -> f64 {
        self.couplings().into_iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn with_couplings_scaled(&self, s: f64) -> Self {
        let mut p = self.clone();
        match &mut p.topology {
            Topology::Chain { j } => j.iter_mut().for_each(|x| *x *= s),
            Topology::Grid { jx, jy, .. } => jx.iter_mut().chain(jy.iter_mut()).for_each(|x| *x *= s),
        }
        p
    }
}

/// Dense operator on `n_qubits` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumOperator {
    pub n_qubits: usize,
    pub matrix: CMatrix,
}

impl QuantumOperator {
    pub fn new(n_qubits: usize, matrix: CMatrix) -> Result<Self> {
        let dim = 1usize << n_qubits;
        if matrix.shape() != (dim, dim) {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} matrix for {n_qubits} qubits",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(Self { n_qubits, matrix })
    }

    pub fn identity(n_qubits: usize) -> Self {
        Self { n_qubits, matrix: linalg::identity(1 << n_qubits) }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn hermiticity_error(&self) -> f64 {
        linalg::hermiticity_error(&self.matrix)
    }

    pub fn unitarity_error(&self) -> f64 {
        linalg::unitarity_error(&self.matrix)
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        linalg::eigvalsh(&self.matrix)
    }

    /// Row-major `(re, im)` pairs.
    pub fn to_flat_pairs(&self) -> Vec<[f64; 2]> {
        linalg::to_flat_pairs(&self.matrix)
    }

    pub fn from_flat_pairs(n_qubits: usize, pairs: &[[f64; 2]]) -> Result<Self> {
        linalg::from_flat_pairs(1 << n_qubits, pairs)
            .map(|matrix| Self { n_qubits, matrix })
            .ok_or_else(|| Error::DimensionMismatch(format!("{} entries for {n_qubits} qubits", pairs.len())))
    }
}

#[inline]
fn bit(b: usize, n: usize, k: usize) -> usize {
    (b >> (n - 1 - k)) & 1
}

#[inline]
fn with_bit(b: usize, n: usize, k: usize, v: usize) -> usize {
    let mask = 1 << (n - 1 - k);
    (b & !mask) | (v << (n - 1 - k))
}

/// `h += coef · m_k` with `m` acting on qubit `k`.
pub fn add_local(h: &mut CMatrix, n: usize, k: usize, m: &Mat2, coef: C64) {
    for b in 0..h.ncols() {
        let bk = bit(b, n, k);
        for (r, row) in m.iter().enumerate() {
            let v = row[bk];
            if v != ZERO {
                h[(with_bit(b, n, k, r), b)] += coef * v;
            }
        }
    }
}

/// `h += coef · a_k ⊗ b_l`.
pub fn add_pair(h: &mut CMatrix, n: usize, k: usize, l: usize, a: &Mat2, bm: &Mat2, coef: C64) {
    for col in 0..h.ncols() {
        let (bk, bl) = (bit(col, n, k), bit(col, n, l));
        for (rk, ra) in a.iter().enumerate() {
            let va = ra[bk];
            if va == ZERO {
                continue;
            }
            for (rl, rb) in bm.iter().enumerate() {
                let vb = rb[bl];
                if vb != ZERO {
                    let row = with_bit(with_bit(col, n, k, rk), n, l, rl);
                    h[(row, col)] += coef * va * vb;
                }
            }
        }
    }
}

/// `m` acting on qubit `k` of `n`.
pub fn local_op(n: usize, k: usize, m: &Mat2) -> CMatrix {
    let mut h = CMatrix::zeros(1 << n, 1 << n);
    add_local(&mut h, n, k, m, ONE);
    h
}

pub fn iz(n: usize, k: usize) -> CMatrix {
    local_op(n, k, &SIGMA_Z) * c(0.5, 0.0)
}

pub fn ix(n: usize, k: usize) -> CMatrix {
    local_op(n, k, &SIGMA_X) * c(0.5, 0.0)
}

pub fn iy(n: usize, k: usize) -> CMatrix {
    local_op(n, k, &SIGMA_Y) * c(0.5, 0.0)
}

/// `Σ_k I_z^k`.
pub fn total_iz(n: usize) -> CMatrix {
    let mut h = CMatrix::zeros(1 << n, 1 << n);
    for k in 0..n {
        add_local(&mut h, n, k, &SIGMA_Z, c(0.5, 0.0));
    }
    h
}

fn half(x: f64) -> C64 {
    c(0.5 * x, 0.0)
}

fn quarter(x: f64) -> C64 {
    c(0.25 * x, 0.0)
}

fn ensure_len(name: &str, v: &[impl Sized], n: usize) -> Result<()> {
    if v.len() != n {
        return Err(Error::DimensionMismatch(format!("{} {name} values for {n} qubits", v.len())));
    }
    Ok(())
}

/// Lab-frame `H = Σ [t_i σ_x + Ω_i I_z] + Σ J I_z I_z`.
pub fn build_lab_h(p: &SpinChainParams) -> Result<QuantumOperator> {
    p.validate()?;
    let n = p.n_qubits;
    let mut h = CMatrix::zeros(p.dim(), p.dim());
    for k in 0..n {
        add_local(&mut h, n, k, &SIGMA_X, c(p.t[k], 0.0));
        add_local(&mut h, n, k, &SIGMA_Z, half(p.omega[k]));
    }
    for (i, j, v) in p.bonds() {
        add_pair(&mut h, n, i, j, &SIGMA_Z, &SIGMA_Z, quarter(v));
    }
    Ok(QuantumOperator { n_qubits: n, matrix: h })
}

pub fn u0() -> CMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    CMatrix::from_row_slice(2, 2, &[c(s, 0.0), c(s, 0.0), c(s, 0.0), c(-s, 0.0)])
}

/// `⊗U₀` on the listed qubits, identity elsewhere.
pub fn u0_on(n: usize, qubits: &[usize]) -> Result<CMatrix> {
    if let Some(&bad) = qubits.iter().find(|&&k| k >= n) {
        return Err(Error::InvalidInput(format!("qubit {bad} out of range for {n} qubits")));
    }
    let mut u = linalg::identity(1);
    for k in 0..n {
        let f = if qubits.contains(&k) { u0() } else { linalg::identity(2) };
        u = linalg::kron(&u, &f);
    }
    Ok(u)
}

/// `U op U` with `U = ⊗U₀` on `qubits` (`U₀` is its own inverse).
pub fn u0_transform(op: &QuantumOperator, qubits: &[usize]) -> Result<QuantumOperator> {
    let u = u0_on(op.n_qubits, qubits)?;
    Ok(QuantumOperator { n_qubits: op.n_qubits, matrix: &u * &op.matrix * &u })
}

fn single_qubit_onres(h: &mut CMatrix, p: &SpinChainParams, delta: &[f64]) {
    for k in 0..p.n_qubits {
        // 2t I'_z − Δ I'_x
        add_local(h, p.n_qubits, k, &SIGMA_Z, c(p.t[k], 0.0));
        add_local(h, p.n_qubits, k, &SIGMA_X, half(-delta[k]));
    }
}

/// On-resonance `H = Σ [2t_i I'_z − Δ_i I'_x] + Σ J I'_x I'_x` for chains and grids.
pub fn build_onres_h(p: &SpinChainParams, delta: &[f64]) -> Result<QuantumOperator> {
    p.validate()?;
    ensure_len("delta", delta, p.n_qubits)?;
    let n = p.n_qubits;
    let mut h = CMatrix::zeros(p.dim(), p.dim());
    single_qubit_onres(&mut h, p, delta);
    for (i, j, v) in p.bonds() {
        add_pair(&mut h, n, i, j, &SIGMA_X, &SIGMA_X, quarter(v));
    }
    Ok(QuantumOperator { n_qubits: n, matrix: h })
}

/// Lattice version of [`build_onres_h`]; rejects chain parameters.
pub fn build_grid_h(p: &SpinChainParams, delta: &[f64]) -> Result<QuantumOperator> {
    if !matches!(p.topology, Topology::Grid { .. }) {
        return Err(Error::InvalidInput("build_grid_h needs grid parameters".into()));
    }
    build_onres_h(p, delta)
}

/// RWA drive on one qubit: amplitude `Δ₀` (meV) and phase `δ` (rad).
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RwaDrive {
    pub delta0: f64,
    pub phase: f64,
}

/// `H = −Σ Δ₀/2 [I'_x cos δ + I'_y sin δ] + Σ J/2 [I'_x I'_x + I'_y I'_y]`.
pub fn build_rwa_h(p: &SpinChainParams, drives: &[RwaDrive]) -> Result<QuantumOperator> {
    p.validate()?;
    ensure_len("drive", drives, p.n_qubits)?;
    let n = p.n_qubits;
    let mut h = CMatrix::zeros(p.dim(), p.dim());
    for (k, d) in drives.iter().enumerate() {
        if d.delta0 != 0.0 {
            add_local(&mut h, n, k, &SIGMA_X, quarter(-d.delta0 * d.phase.cos()));
            add_local(&mut h, n, k, &SIGMA_Y, quarter(-d.delta0 * d.phase.sin()));
        }
    }
    for (i, j, v) in p.bonds() {
        add_pair(&mut h, n, i, j, &SIGMA_X, &SIGMA_X, c(v / 8.0, 0.0));
        add_pair(&mut h, n, i, j, &SIGMA_Y, &SIGMA_Y, c(v / 8.0, 0.0));
    }
    Ok(QuantumOperator { n_qubits: n, matrix: h })
}

/// Computational basis state `|b⟩` as a column vector.
pub fn basis_state(n: usize, b: usize) -> linalg::CVector {
    let mut v = linalg::CVector::zeros(1 << n);
    v[b] = ONE;
    v
}

/// Index of the basis state given per-qubit bits, qubit 0 first.
pub fn basis_index(bits: &[u8]) -> usize {
    bits.iter().fold(0, |acc, &b| (acc << 1) | b as usize)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{max_abs_diff, propagator};

    /// Cyclic Jacobi eigenvalues of a real symmetric matrix.
    fn jacobi_eigenvalues(mut a: Vec<Vec<f64>>) -> Vec<f64> {
        let n = a.len();
        for _sweep in 0..100 {
            let off: f64 = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).filter(|(i, j)| i != j).map(|(i, j)| a[i][j] * a[i][j]).sum();
            if off < 1e-26 {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    if a[p][q].abs() < 1e-300 {
                        continue;
                    }
                    let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let t = if theta == 0.0 { 1.0 } else { t };
                    let cs = 1.0 / (t * t + 1.0).sqrt();
                    let sn = t * cs;
                    for k in 0..n {
                        let (akp, akq) = (a[k][p], a[k][q]);
                        a[k][p] = cs * akp - sn * akq;
                        a[k][q] = sn * akp + cs * akq;
                    }
                    for k in 0..n {
                        let (apk, aqk) = (a[p][k], a[q][k]);
                        a[p][k] = cs * apk - sn * aqk;
                        a[q][k] = sn * apk + cs * aqk;
                    }
                }
            }
        }
        let mut e: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
        e.sort_by(f64::total_cmp);
        e
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() < tol)
    }

    #[test]
    fn single_qubit_zeeman_spectrum() {
        let p = SpinChainParams::chain(vec![0.0], vec![2.0], vec![]).unwrap();
        assert!(close(&build_lab_h(&p).unwrap().eigenvalues(), &[-1.0, 1.0], 1e-12));
    }

    #[test]
    fn ising_pair_diagonal() {
        let p = SpinChainParams::uniform_chain(2, 0.0, 0.0, 4.0).unwrap();
        let h = build_lab_h(&p).unwrap().matrix;
        let diag: Vec<f64> = (0..4).map(|k| h[(k, k)].re).collect();
        assert_eq!(diag, vec![1.0, -1.0, -1.0, 1.0]);
    }

    #[test]
    fn three_qubit_spectrum_matches_jacobi() {
        let p = SpinChainParams::uniform_chain(3, 0.4, 0.0, 0.1).unwrap();
        let h = build_lab_h(&p).unwrap();
        assert!(h.matrix.iter().all(|z| z.im == 0.0));
        let dense: Vec<Vec<f64>> = (0..8).map(|r| (0..8).map(|c| h.matrix[(r, c)].re).collect()).collect();
        assert!(close(&h.eigenvalues(), &jacobi_eigenvalues(dense), 1e-12));
    }

    #[test]
    fn u0_is_involution_and_swaps_axes() {
        let u = u0();
        assert!(max_abs_diff(&(&u * &u), &linalg::identity(2)) < 1e-15);
        let z = QuantumOperator::new(1, iz(1, 0)).unwrap();
        let t = u0_transform(&z, &[0]).unwrap();
        assert!(max_abs_diff(&t.matrix, &ix(1, 0)) < 1e-15);
    }

    #[test]
    fn onres_is_u0_image_of_lab_frame() {
        let lab = SpinChainParams::chain(vec![0.4, 0.3, 0.5], vec![0.2, -0.1, 0.05], vec![0.1, 0.07]).unwrap();
        let delta: Vec<f64> = lab.omega.iter().map(|o| -o).collect();
        let onres = build_onres_h(&lab, &delta).unwrap();
        let mapped = u0_transform(&build_lab_h(&lab).unwrap(), &[0, 1, 2]).unwrap();
        assert!(max_abs_diff(&onres.matrix, &mapped.matrix) < 1e-12);
    }

    #[test]
    fn onres_uncoupled_is_diagonal_zeeman() {
        let p = SpinChainParams::chain(vec![0.4, 0.25], vec![0.0; 2], vec![0.0]).unwrap();
        let h = build_onres_h(&p, &[0.0, 0.0]).unwrap().matrix;
        let expected = [0.65, 0.15, -0.15, -0.65];
        for r in 0..4 {
            for col in 0..4 {
                let want = if r == col { expected[r] } else { 0.0 };
                assert!((h[(r, col)].re - want).abs() < 1e-15 && h[(r, col)].im == 0.0);
            }
        }
    }

    #[test]
    fn onres_coupling_propagator() {
        let p = SpinChainParams::uniform_chain(2, 0.0, 0.0, std::f64::consts::PI).unwrap();
        let h = build_onres_h(&p, &[0.0, 0.0]).unwrap();
        let u = propagator(&h.matrix, crate::units::HBAR_MEV_PS);
        let xx = &ix(2, 0) * &ix(2, 1);
        let expect = linalg::unitary_from_generator(&xx, -std::f64::consts::PI);
        assert!(max_abs_diff(&u, &expect) < 1e-12);
    }

    #[test]
    fn rwa_spectra() {
        let p = SpinChainParams::chain(vec![1.0], vec![0.0], vec![]).unwrap();
        let h = build_rwa_h(&p, &[RwaDrive { delta0: 2.0, phase: 0.0 }]).unwrap();
        assert!(close(&h.eigenvalues(), &[-0.5, 0.5], 1e-12));

        let p = SpinChainParams::uniform_chain(3, 0.4, 0.0, 0.1).unwrap();
        let d = |ph| vec![RwaDrive { delta0: 0.3, phase: ph }; 3];
        let e0 = build_rwa_h(&p, &d(0.0)).unwrap().eigenvalues();
        let e1 = build_rwa_h(&p, &d(std::f64::consts::FRAC_PI_2)).unwrap().eigenvalues();
        assert!(close(&e0, &e1, 1e-12));
    }

    #[test]
    fn rwa_free_evolution_conserves_total_iz() {
        let p = SpinChainParams::uniform_chain(4, 0.4, 0.0, 0.1).unwrap();
        let h = build_rwa_h(&p, &[RwaDrive::default(); 4]).unwrap();
        let comm = linalg::commutator(&h.matrix, &total_iz(4));
        assert!(comm.iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn one_row_grid_equals_chain() {
        let chain = SpinChainParams::chain(vec![0.4, 0.3, 0.2], vec![0.0; 3], vec![0.1, 0.2]).unwrap();
        let grid = SpinChainParams::grid(3, 1, vec![0.4, 0.3, 0.2], vec![0.0; 3], vec![0.1, 0.2], vec![]).unwrap();
        let d = [0.01, 0.02, 0.03];
        let a = build_onres_h(&chain, &d).unwrap();
        let b = build_grid_h(&grid, &d).unwrap();
        assert_eq!(a.matrix, b.matrix);
        assert!(build_grid_h(&chain, &d).is_err());
    }

    #[test]
    fn grid_rotation_symmetry_and_afm_ground_state() {
        // inhomogeneous sites so the rotation is not the identity map
        let t = [0.1, 0.2, 0.3, 0.4];
        let d = [0.05, -0.02, 0.03, 0.01];
        let p = SpinChainParams::grid(2, 2, t.to_vec(), vec![0.0; 4], vec![0.3; 2], vec![0.3; 2]).unwrap();
        let e = build_grid_h(&p, &d).unwrap().eigenvalues();
        // 90° rotation (x, y) -> (1 - y, x) sends sites 0,1,2,3 to 1,3,0,2
        let perm = [1, 3, 0, 2];
        let (mut tr, mut dr) = ([0.0; 4], [0.0; 4]);
        for k in 0..4 {
            tr[perm[k]] = t[k];
            dr[perm[k]] = d[k];
        }
        let rot = SpinChainParams::grid(2, 2, tr.to_vec(), vec![0.0; 4], vec![0.3; 2], vec![0.3; 2]).unwrap();
        assert!(close(&e, &build_grid_h(&rot, &dr).unwrap().eigenvalues(), 1e-12));

        let p = SpinChainParams::grid(2, 2, vec![0.0; 4], vec![0.0; 4], vec![0.3; 2], vec![0.3; 2]).unwrap();
        let h = build_grid_h(&p, &[0.0; 4]).unwrap();
        // back to the charge basis, where couplings are I_z I_z
        let z = u0_transform(&h, &[0, 1, 2, 3]).unwrap().matrix;
        let diag: Vec<f64> = (0..16).map(|k| z[(k, k)].re).collect();
        let min = diag.iter().cloned().fold(f64::INFINITY, f64::min);
        let ground: Vec<usize> = (0..16).filter(|&k| (diag[k] - min).abs() < 1e-12).collect();
        assert_eq!(ground, vec![basis_index(&[0, 1, 1, 0]), basis_index(&[1, 0, 0, 1])]);
        assert!((min - (-0.3)).abs() < 1e-12);
    }

    #[test]
    fn dimension_cap() {
        let p = SpinChainParams::uniform_chain(3, 0.1, 0.0, 0.1).unwrap().with_max_qubits(2);
        assert!(matches!(build_lab_h(&p), Err(Error::DimensionOverflow { n: 3, max: 2 })));
        assert!(SpinChainParams::chain(vec![0.1; 2], vec![0.0; 2], vec![]).is_err());
    }

    #[test]
    fn flat_export_round_trip() {
        let p = SpinChainParams::uniform_chain(2, 0.4, 0.1, 0.1).unwrap();
        let h = build_rwa_h(&p, &[RwaDrive { delta0: 0.2, phase: 0.3 }; 2]).unwrap();
        let back = QuantumOperator::from_flat_pairs(2, &h.to_flat_pairs()).unwrap();
        assert_eq!(back, h);
    }
}
