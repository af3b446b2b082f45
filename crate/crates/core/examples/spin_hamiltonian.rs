//! Lab-frame and on-resonance Hamiltonians of a three-qubit chain, and the
//! basis change between them.

use qdot::linalg::max_abs_diff;
use qdot::spinmodel::{build_lab_h, build_onres_h, u0_transform, SpinChainParams};

pub fn main() -> qdot::error::Result<()> {
    let p = SpinChainParams::chain(vec![0.4, 0.42, 0.38], vec![0.0; 3], vec![0.01, 0.012])?;
    let lab = build_lab_h(&p)?;
    let onres = build_onres_h(&p, &[0.0; 3])?;

    println!("dimension {}", lab.dim());
    println!("hermiticity error {:.1e}", lab.hermiticity_error());

    let mut ev = lab.eigenvalues();
    ev.sort_by(f64::total_cmp);
    println!("lab spectrum (meV):");
    for e in &ev {
        println!("  {e:+.5}");
    }

    // With Omega = 0 and no drive, U0 on every qubit maps one form onto the other.
    let rotated = u0_transform(&lab, &[0, 1, 2])?;
    println!("|U0 H U0 - H'| = {:.2e}", max_abs_diff(&rotated.matrix, &onres.matrix));
    Ok(())
}
