//! Single-site excitation of the electric walk below and above the
//! transition: total power and spreading.

use std::f64::consts::PI;

use nhsl::qwalk::{walk_dynamics, WalkSpec};

fn main() -> nhsl::Result<()> {
    for h in [0.4, 0.75] {
        let spec = WalkSpec::electric(55, 34, PI / 3.0, h)?;
        let trace = walk_dynamics(&spec, 14, 200, false)?;
        println!("h = {h}:");
        for s in (0..=trace.steps()).step_by(40) {
            println!("  m = {s:3}  ln P = {:8.3}  sigma = {:6.3}", trace.log_power[s], trace.sigma[s]);
        }
        println!(
            "  terminal slope of ln P = {:.4}, max sigma = {:.2}",
            trace.terminal_slope(50),
            trace.max_sigma()
        );
    }
    Ok(())
}
