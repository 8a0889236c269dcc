//! Spectral phase transition of the incommensurate superlattice: max |Im E|
//! against h, with the threshold estimate of the critical field.

use nhsl::lattice::ModelFamily;
use nhsl::spectra::{predicted_hc, scan_gauge, uniform_grid, Thresholds};

fn main() -> nhsl::Result<()> {
    let family = ModelFamily::Incommensurate { v: 1.5 };
    let grid = uniform_grid(0.0, 1.0, 0.02)?;
    let predicted = predicted_hc(family.kind(34)?, 1.0)?;
    println!("predicted hc = ln(V/J) = {predicted:.4}");
    for m in [13, 34] {
        let scan = scan_gauge(&family.spec(1.0, 0.0, m)?, &grid, 32, Thresholds::default())?;
        println!(
            "M={m:3}: hc_estimate = {:.4}, transition width = {:.4}",
            scan.hc_estimate.unwrap_or(f64::NAN),
            scan.transition_width.unwrap_or(f64::NAN)
        );
        for (h, x) in scan.points().step_by(10) {
            println!("    h = {h:.2}  max|Im E| = {x:.3e}");
        }
    }
    Ok(())
}
