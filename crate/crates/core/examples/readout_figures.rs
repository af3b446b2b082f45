//! Both readout sweeps, written as CSV to the working directory (or the
//! directory given as the first argument).

use std::path::PathBuf;

use qdot::config::ReadoutConfig;
use qdot::scenarios::{run_figures, write_report, Tolerances};

pub fn main() -> qdot::error::Result<()> {
    let dir = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("."));
    let report = run_figures(&ReadoutConfig::default(), &Tolerances::default())?;
    print!("{}", report.to_text());
    for p in write_report(&report, &dir)? {
        println!("wrote {}", p.display());
    }
    Ok(())
}
