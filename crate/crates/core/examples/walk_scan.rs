//! Spectral transition of the electric quantum walk at h = −ln|cos β|.

use std::f64::consts::PI;

use nhsl::qwalk::{predicted_hc_walk, walk_gauge_scan, walk_thresholds, WalkSpec};
use nhsl::spectra::uniform_grid;

fn main() -> nhsl::Result<()> {
    let beta = PI / 3.0;
    let grid = uniform_grid(0.0, 1.0, 0.02)?;
    for (m, r) in [(8, 5), (13, 8), (21, 13)] {
        let spec = WalkSpec::electric(m, r, beta, 0.0)?;
        let scan = walk_gauge_scan(&spec, &grid, 32, walk_thresholds())?;
        println!(
            "M={m:3}: hc_estimate = {:.4}, width = {:.4}",
            scan.hc_estimate.unwrap_or(f64::NAN),
            scan.transition_width.unwrap_or(f64::NAN)
        );
        if m == 21 {
            println!("predicted -ln|cos beta| = {:.4}", predicted_hc_walk(spec.kind(), beta)?);
        }
    }
    Ok(())
}
