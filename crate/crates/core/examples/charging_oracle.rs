//! Extracts J and the charging curvature from brute-force minimisation of the
//! network energy and compares them with the closed forms.

use qdot::capnet::{
    chain_couplings, charging_energy, derive_aux, oracle_curvature, oracle_pair_coupling, BondCaps, CapacitanceSet,
    Dims, QubitCaps, SPIN_CONVENTION_FACTOR,
};

pub fn main() -> qdot::error::Result<()> {
    let q = QubitCaps { c_a: 0.3, c_b: 0.5, c_c: 0.1, c_h: 0.0, c_i: 0.0 };
    for c_d in [0.001, 0.01, 0.05] {
        let caps = CapacitanceSet::uniform_chain(3, q, BondCaps { c_d, c_e: 0.0 });
        let gates = [0.02, -0.01, 0.0];
        let aux = derive_aux(&caps, 1, Dims::OneD)?;
        // the oracle works with spin-1/2 operators, the closed form with charges
        let j_closed = SPIN_CONVENTION_FACTOR * chain_couplings(&caps)?[0];
        let j_oracle = oracle_pair_coupling(&caps, 0, 1, &gates)?;
        let ec = charging_energy(&aux);
        let curv = oracle_curvature(&caps, 1, &gates)?;
        println!(
            "C_d = {c_d:<5}  Cd^2/D = {:.2e}  J rel dev {:.2e}  curvature/2E_C - 1 = {:.2e}",
            aux.coupling_ratio(),
            (j_oracle / j_closed - 1.0).abs(),
            curv / (2.0 * ec) - 1.0,
        );
    }
    Ok(())
}
