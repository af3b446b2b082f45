//! Series-FET readout chain: common current and node voltages, and the effect
//! of shifting the threshold of one segment.

use qdot::readout::{solve_chain, FetChainProblem};

pub fn main() -> qdot::error::Result<()> {
    let base = FetChainProblem::fig2_default();
    let sol = solve_chain(&base)?;
    println!("V_D = {} V, I = {:.6e} (units of Lambda), {} bisections", base.v_d, sol.current, sol.iterations);
    let v: Vec<String> = sol.voltages.iter().map(|x| format!("{x:.4}")).collect();
    println!("node voltages: {}", v.join(" "));

    for q in [1, 4, 8] {
        let mut shifted = base.clone();
        shifted.segments[q - 1].dvth = 0.1 * shifted.segments[q - 1].overdrive;
        match solve_chain(&shifted) {
            Ok(s) => println!("shift on qubit {q}: I/I0 - 1 = {:+.4e}", s.current / sol.current - 1.0),
            Err(e) => println!("shift on qubit {q}: {e}"),
        }
    }
    Ok(())
}
