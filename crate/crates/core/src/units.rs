//! Physical constants in the crate's unit system (nm, aF, meV, ps, V, e).

/// Vacuum permittivity in aF/nm.
pub const EPS0_AF_PER_NM: f64 = 8.854_187_812_8e-3;

/// `e²/aF` expressed in meV: converts a charging term `q²/C` (q in e, C in aF) to meV.
pub const K_E_MEV_AF: f64 = 160.217_663_4;

/// Energy of one elementary charge moved through one volt, in meV.
pub const MEV_PER_E_V: f64 = 1000.0;

/// `e/aF` in volts; divides an `aF·V` product to express it in units of `e`.
pub const E_PER_AF_VOLTS: f64 = 0.160_217_663_4;

/// Reduced Planck constant in meV·ps.
pub const HBAR_MEV_PS: f64 = 0.658_211_956_9;

/// Boltzmann constant in meV/K.
pub const K_B_MEV_PER_K: f64 = 0.086_173_3;

/// Resistance quantum `h/e²` in ohm.
pub const R_K_OHM: f64 = 25_812.807_45;

pub fn kelvin_to_mev(t: f64) -> f64 {
    t * K_B_MEV_PER_K
}

pub fn mev_to_kelvin(e: f64) -> f64 {
    e / K_B_MEV_PER_K
}
