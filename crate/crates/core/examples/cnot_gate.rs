//! CNOT between two coupled qubits from ideal rotations and a Carr-Purcell
//! coupling block, with its truth table in the charge basis.

use qdot::pulsekit::{cnot_sequence, evolve, fidelity, ideal_cnot, populations, to_charge_basis, EvolveOptions,
    FidelityMode, PulseConfig};
use qdot::spinmodel::SpinChainParams;

pub fn main() -> qdot::error::Result<()> {
    let p = SpinChainParams::uniform_chain(2, 0.4, 0.0, 0.1)?;
    let seq = cnot_sequence(&p, 0, 1, &PulseConfig::ideal())?;
    println!("{} steps, {:.2} ps", seq.steps.len(), seq.total_duration());

    let u = evolve(&seq, &p, &EvolveOptions::default())?;
    let ch = to_charge_basis(u.matrix(), 2);
    let f = fidelity(&ch, &ideal_cnot(2, 0, 1), FidelityMode::LocalZPhases)?;
    println!("fidelity {f:.6}");

    let labels = ["00", "01", "10", "11"];
    println!("in \\ out  {}", labels.join("     "));
    for (k, row) in populations(&ch).iter().enumerate() {
        let cells: Vec<String> = row.iter().map(|x| format!("{x:.4}")).collect();
        println!("{:>8}  {}", labels[k], cells.join("  "));
    }
    Ok(())
}
