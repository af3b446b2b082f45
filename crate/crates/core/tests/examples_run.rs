//! Every example runs to completion. `readout_figures` writes files and is
//! covered by the `figures` command tests instead.

#[path = "../examples/carr_purcell.rs"]
mod carr_purcell;
#[path = "../examples/charging_oracle.rs"]
mod charging_oracle;
#[path = "../examples/cnot_gate.rs"]
mod cnot_gate;
#[path = "../examples/crosstalk_compensation.rs"]
mod crosstalk_compensation;
#[path = "../examples/derive_parameters.rs"]
mod derive_parameters;
#[path = "../examples/lattice_couplings.rs"]
mod lattice_couplings;
#[path = "../examples/pulse_schedule.rs"]
mod pulse_schedule;
#[path = "../examples/readout_chain.rs"]
mod readout_chain;
#[path = "../examples/run_manifest.rs"]
mod run_manifest;
#[path = "../examples/rwa_validation.rs"]
mod rwa_validation;
#[path = "../examples/spin_hamiltonian.rs"]
mod spin_hamiltonian;

#[test]
fn carr_purcell_runs() {
    carr_purcell::main().unwrap();
}

#[test]
fn charging_oracle_runs() {
    charging_oracle::main().unwrap();
}

#[test]
fn cnot_gate_runs() {
    cnot_gate::main().unwrap();
}

#[test]
fn crosstalk_compensation_runs() {
    crosstalk_compensation::main().unwrap();
}

#[test]
fn derive_parameters_runs() {
    derive_parameters::main().unwrap();
}

#[test]
fn lattice_couplings_runs() {
    lattice_couplings::main().unwrap();
}

#[test]
fn pulse_schedule_runs() {
    pulse_schedule::main().unwrap();
}

#[test]
fn readout_chain_runs() {
    readout_chain::main().unwrap();
}

#[test]
fn run_manifest_runs() {
    run_manifest::main().unwrap();
}

#[test]
fn rwa_validation_runs() {
    rwa_validation::main().unwrap();
}

#[test]
fn spin_hamiltonian_runs() {
    spin_hamiltonian::main().unwrap();
}
