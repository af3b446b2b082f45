//! Geometry to capacitances, charging energies and nearest-neighbour couplings
//! for an eight-qubit chain, then the operating criterion.

use qdot::capnet::{caps_from_geometry, criterion_check, derive_params, CriterionInput, DeviceGeometry};
use qdot::units::{kelvin_to_mev, HBAR_MEV_PS};

pub fn main() -> qdot::error::Result<()> {
    let geom = DeviceGeometry::nominal(8);
    let caps = caps_from_geometry(&geom)?;
    let d = derive_params(&caps)?;

    println!("qubit  C_a(aF)   C_b(aF)   E_C(meV)");
    for (i, (a, ec)) in d.aux.iter().zip(&d.charging_energy_mev).enumerate() {
        println!("{:>5}  {:8.4}  {:8.4}  {:8.3}", i + 1, a.c_a, a.c_b, ec);
    }
    for (i, j) in d.j_mev.iter().enumerate() {
        println!("J[{},{}] = {:.4} meV", i + 1, i + 2, j);
    }

    let q = &caps.qubits[3];
    let rep = criterion_check(&CriterionInput {
        temperature_mev: kelvin_to_mev(0.1),
        j_mev: d.j_mev[3],
        delta0_mev: 0.2,
        t_mev: 0.4,
        r_int_ohm: 1e6,
        c_int_af: q.c_b,
        margin: 10.0,
    })?;
    for l in &rep.links {
        println!("{:<14} ratio {:>9.3}  {}", l.relation, l.ratio, if l.pass { "ok" } else { "violated" });
    }
    println!("hbar/(R C) = {:.3} meV (hbar = {HBAR_MEV_PS} meV ps)", rep.cr_energy_mev);
    Ok(())
}
