//! Runs the bundled manifest in-process and prints a one-line summary per
//! scenario.

use std::path::Path;

use qdot::scenarios::{load_manifest, run_manifest, RunSettings};

pub fn main() -> qdot::error::Result<()> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/all.manifest.json");
    let m = load_manifest(&path)?;
    let results = run_manifest(&m, path.parent().unwrap(), &RunSettings::default());
    for (s, r) in m.scenarios.iter().zip(results) {
        match r {
            Ok(r) => {
                let fails = r.failures().count();
                println!("{:<16} {:>3} quantities, {fails} failing", s.name, r.quantities.len());
            }
            Err(e) => println!("{:<16} error: {e}", s.name),
        }
    }
    Ok(())
}
