//! Quasi-energies of the electric quantum walk: numerical step-matrix
//! spectrum against the exact odd-M dispersion.

use std::f64::consts::PI;

use nhsl::qwalk::{electric_quasienergies, walk_quasienergies, wrap_quasienergy, WalkSpec};
use nhsl::Complex64;

fn main() -> nhsl::Result<()> {
    let (m, r, beta, h) = (5, 3, PI / 3.0, 0.2);
    let spec = WalkSpec::electric(m, r, beta, h)?;
    let k = 0.1;
    let mut numeric = walk_quasienergies(&spec, k)?;
    let mut exact = electric_quasienergies(m, beta, Complex64::new(k, -h))?;
    for set in [&mut numeric, &mut exact] {
        for e in set.iter_mut() {
            e.re = wrap_quasienergy(e.re);
        }
        set.sort_by(nhsl::eigen::lexicographic);
    }
    println!("electric walk M={m}, R={r}, beta=pi/3, h={h}, k={k}");
    println!("        numerical                  closed form");
    for (a, b) in numeric.iter().zip(&exact) {
        println!("  {:+.10} {:+.3e}i   {:+.10} {:+.3e}i", a.re, a.im, b.re, b.im);
    }
    Ok(())
}
