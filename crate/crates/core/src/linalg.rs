//! Dense complex matrix helpers shared by the spin model and the propagators.

use nalgebra::{Complex, DMatrix, DVector};

use crate::units::HBAR_MEV_PS;

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };
pub const I: C64 = C64 { re: 0.0, im: 1.0 };

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn identity(dim: usize) -> CMatrix {
    CMatrix::identity(dim, dim)
}

pub fn dagger(m: &CMatrix) -> CMatrix {
    m.adjoint()
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Largest elementwise modulus of `a - b`.
pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape(), "max_abs_diff: shape mismatch");
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

pub fn hermiticity_error(m: &CMatrix) -> f64 {
    max_abs_diff(m, &m.adjoint())
}

/// `‖U†U − 1‖_max`.
pub fn unitarity_error(u: &CMatrix) -> f64 {
    let n = u.nrows();
    max_abs_diff(&(u.adjoint() * u), &identity(n))
}

pub fn trace(m: &CMatrix) -> C64 {
    m.diagonal().iter().sum()
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

/// Real eigenvalues of a Hermitian matrix in ascending order.
pub fn eigvalsh(h: &CMatrix) -> Vec<f64> {
    let eig = h.clone().symmetric_eigen();
    let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    vals.sort_by(f64::total_cmp);
    vals
}

/// `exp(-i H dt / ħ)` for Hermitian `H` in meV and `dt` in ps.
///
/// Uses the closed form for 2×2 matrices and a Hermitian eigendecomposition
/// otherwise, so the result is unitary to rounding.
pub fn propagator(h: &CMatrix, dt: f64) -> CMatrix {
    let s = dt / HBAR_MEV_PS;
    if h.nrows() == 2 {
        return propagator_2x2(h, s);
    }
    let eig = h.clone().symmetric_eigen();
    let v = &eig.eigenvectors;
    let phases = CVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues.iter().map(|&e| C64::from_polar(1.0, -e * s)),
    );
    let mut scaled = v.clone();
    for (j, mut col) in scaled.column_iter_mut().enumerate() {
        col *= phases[j];
    }
    scaled * v.adjoint()
}

/// `exp(i θ G)` for Hermitian generator `G`.
pub fn unitary_from_generator(g: &CMatrix, theta: f64) -> CMatrix {
    // exp(-i H s/ħ) with H = -G and s = θħ
    propagator(&(-g), theta * HBAR_MEV_PS)
}

fn propagator_2x2(h: &CMatrix, s: f64) -> CMatrix {
    // H = a0·1 + ax σx + ay σy + az σz
    let a0 = 0.5 * (h[(0, 0)].re + h[(1, 1)].re);
    let az = 0.5 * (h[(0, 0)].re - h[(1, 1)].re);
    let ax = h[(1, 0)].re;
    let ay = h[(1, 0)].im;
    let norm = (ax * ax + ay * ay + az * az).sqrt();
    let (cs, sn) = ((norm * s).cos(), (norm * s).sin());
    let (nx, ny, nz) = if norm > 0.0 {
        (ax / norm, ay / norm, az / norm)
    } else {
        (0.0, 0.0, 0.0)
    };
    let g = C64::from_polar(1.0, -a0 * s);
    // cos·1 − i sin (n·σ)
    let m00 = c(cs, -sn * nz);
    let m11 = c(cs, sn * nz);
    let m01 = c(-sn * ny, -sn * nx);
    let m10 = c(sn * ny, -sn * nx);
    CMatrix::from_row_slice(2, 2, &[m00 * g, m01 * g, m10 * g, m11 * g])
}

/// Row-major `(re, im)` pairs.
pub fn to_flat_pairs(m: &CMatrix) -> Vec<[f64; 2]> {
    let mut out = Vec::with_capacity(m.len());
    for r in 0..m.nrows() {
        for col in 0..m.ncols() {
            let z = m[(r, col)];
            out.push([z.re, z.im]);
        }
    }
    out
}

pub fn from_flat_pairs(dim: usize, pairs: &[[f64; 2]]) -> Option<CMatrix> {
    if pairs.len() != dim * dim {
        return None;
    }
    Some(CMatrix::from_row_iterator(
        dim,
        dim,
        pairs.iter().map(|p| c(p[0], p[1])),
    ))
}
