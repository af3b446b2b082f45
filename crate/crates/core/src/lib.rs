//! Device-to-dynamics simulation of capacitively coupled quantum-dot qubit arrays.
//!
//! The crate is organised bottom-up:
//!
//! - [`capnet`]: capacitances from device geometry, the reduced charging energy,
//!   Ising couplings, detuning and drive terms, and a brute-force constrained
//!   minimiser of the full electrostatic energy used as an oracle.
//! - [`spinmodel`]: dense `2^N` Hamiltonians in the charge basis, the
//!   bonding/antibonding basis and the rotating frame, for chains and grids.
//! - [`pulsekit`]: pulse sequences, propagation and the composite gates
//!   (rotations, Carr-Purcell refocusing, coupling gate, CNOT).
//! - [`readout`]: the series-FET channel model and the qubit-distinguishability
//!   sweeps.
//! - [`scenarios`]: end-to-end experiments producing [`scenarios::RunReport`]s.
//! - [`config`] and [`cli`]: JSON device configs, run manifests and the `qdot`
//!   command line.
//!
//! Units throughout: nm, aF, meV, ps, V, and charge in units of `e`.

// `!(x > 0.0)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod capnet;
pub mod cli;
pub mod config;
pub mod error;
pub mod linalg;
pub mod pulsekit;
pub mod readout;
pub mod scenarios;
pub mod spinmodel;
pub mod units;

pub use error::{Error, Result};
