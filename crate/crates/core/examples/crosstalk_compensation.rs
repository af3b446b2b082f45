//! Gate voltages that produce a requested set of drive amplitudes despite
//! cross-gate capacitance, for an eight-qubit chain.

use qdot::capnet::{crosstalk_compensate, drive_delta, CrosstalkMatrix};
use qdot::scenarios::crosstalk_chain;

pub fn main() -> qdot::error::Result<()> {
    let (_, caps) = crosstalk_chain(8)?;
    let m = CrosstalkMatrix::from_caps(&caps)?;
    println!("diagonally dominant: {}", m.is_diagonally_dominant());

    // only qubit 3 should be driven
    let mut target = vec![0.0; 8];
    target[3] = 0.05;
    let naive = drive_delta(&caps, &m.naive_inverse(&target))?;
    let v = crosstalk_compensate(&caps, &target)?;
    let felt = drive_delta(&caps, &v)?;
    println!("qubit  naive Delta  compensated V  felt Delta");
    for i in 0..8 {
        println!("{:>5}  {:>11.3e}  {:>13.3e}  {:>10.3e}", i, naive[i], v[i], felt[i]);
    }
    Ok(())
}
