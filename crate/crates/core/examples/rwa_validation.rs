//! Lab-frame propagation against the rotating-wave Hamiltonian for a single
//! driven qubit, at three drive strengths.

use qdot::pulsekit::{rwa_validate, Drive, RwaValidateOptions};
use qdot::scenarios::RWA_SWEEP_RATIOS;
use qdot::spinmodel::SpinChainParams;
use qdot::units::HBAR_MEV_PS;

pub fn main() -> qdot::error::Result<()> {
    let t = 0.4;
    let p = SpinChainParams::chain(vec![t], vec![0.0], vec![])?;
    println!("Delta0/2t  duration (ps)  max infidelity");
    let mut prev: Option<f64> = None;
    for ratio in RWA_SWEEP_RATIOS {
        let d0 = 2.0 * t * ratio;
        // ten Rabi cycles
        let duration = 40.0 * std::f64::consts::PI * HBAR_MEV_PS / d0;
        let rep = rwa_validate(&p, &[Drive::resonant(t, d0, 0.0)], duration, &RwaValidateOptions::default())?;
        let drop = prev.map_or(String::new(), |e| format!("  (x{:.2} smaller)", e / rep.max_infidelity));
        println!("{ratio:>9}  {:>13.1}  {:.3e}{drop}", rep.duration, rep.max_infidelity);
        prev = Some(rep.max_infidelity);
    }
    Ok(())
}
