//! Carr-Purcell refocusing: the J = 0 identity check and the coupling-gate
//! error as the pulse spacing shrinks.

use std::f64::consts::FRAC_PI_2;

use qdot::linalg::{identity, max_abs_diff};
use qdot::pulsekit::{carr_purcell, evolve, EvolveOptions, PulseConfig};
use qdot::scenarios::{cp_sweep, CP_SWEEP_CYCLES};
use qdot::spinmodel::SpinChainParams;

pub fn main() -> qdot::error::Result<()> {
    // unequal tunnelling amplitudes, no coupling
    let p = SpinChainParams::chain(vec![0.4, 0.37], vec![0.0, 0.0], vec![0.0])?;
    let u = evolve(&carr_purcell(&p, 0.9, 1, &PulseConfig::ideal())?, &p, &EvolveOptions::default())?;
    let m = u.matrix();
    let phase = m[(0, 0)] / m[(0, 0)].norm();
    let off = max_abs_diff(m, &(identity(4) * phase));
    println!("one cycle at J = 0: max |U - e^(i phi) 1| = {off:.2e}");

    let p = SpinChainParams::uniform_chain(2, 0.4, 0.0, 0.1)?;
    println!("n_cycles  tau (ps)    infidelity");
    for (n, tau, inf) in cp_sweep(&p, FRAC_PI_2, &CP_SWEEP_CYCLES)? {
        println!("{n:>8}  {tau:>9.4}  {inf:.3e}");
    }
    Ok(())
}
