//! Couplings of a square lattice of qubits and the spectrum of a small grid.

use qdot::capnet::{caps_from_geometry, grid_couplings, DeviceGeometry, Lattice};
use qdot::spinmodel::{build_grid_h, SpinChainParams};

pub fn main() -> qdot::error::Result<()> {
    let mut geom = DeviceGeometry::nominal(4);
    geom.lattice = Lattice::Grid { nx: 2, ny: 2 };
    let caps = caps_from_geometry(&geom)?;
    let (jx, jy) = grid_couplings(&caps)?;
    println!("J_x = {jx:.4?} meV");
    println!("J_y = {jy:.4?} meV");

    let p = SpinChainParams::grid(2, 2, vec![0.4; 4], vec![0.0; 4], jx, jy)?;
    let h = build_grid_h(&p, &[0.0; 4])?;
    let mut ev = h.eigenvalues();
    ev.sort_by(f64::total_cmp);
    println!("lowest levels: {:.4?}", &ev[..4]);
    Ok(())
}
