//! Writes a coupling-gate schedule as text, reads it back and checks that the
//! parsed schedule gives the same propagator.

use std::f64::consts::PI;

use qdot::linalg::max_abs_diff;
use qdot::pulsekit::{coupling_gate, evolve, parse_schedule, to_schedule, EvolveOptions, PulseConfig};
use qdot::spinmodel::SpinChainParams;

pub fn main() -> qdot::error::Result<()> {
    let p = SpinChainParams::uniform_chain(2, 0.4, 0.0, 0.1)?;
    let seq = coupling_gate(&p, 0, 1, PI / 3.0, &PulseConfig::ideal())?;
    let text = to_schedule(&seq);
    for line in text.lines().take(8) {
        println!("{line}");
    }
    println!("... {} lines", text.lines().count());

    let back = parse_schedule(&text)?;
    let opts = EvolveOptions::default();
    let d = max_abs_diff(evolve(&seq, &p, &opts)?.matrix(), evolve(&back, &p, &opts)?.matrix());
    println!("round trip: same steps = {}, propagator difference {d:.1e}", back == seq);
    Ok(())
}
