//! Dense complex eigensolver on a non-normal matrix: eigenpairs, residuals,
//! trace and determinant identities.

use nhsl::eigen::{eigenpairs, CMatrix};
use nhsl::Complex64;

fn main() -> nhsl::Result<()> {
    // Hatano–Nelson open chain: strongly non-normal, real spectrum
    let n = 12;
    let a = CMatrix::from_fn(n, |r, c| match c as isize - r as isize {
        1 => Complex64::new(1.5, 0.0),
        -1 => Complex64::new(0.5, 0.0),
        _ => Complex64::new(0.0, 0.0),
    });
    let d = eigenpairs(&a)?;
    let sum: Complex64 = d.eigenvalues.iter().sum();
    let prod: Complex64 = d.eigenvalues.iter().product();
    println!("eigenvalues of the {n}x{n} open Hatano-Nelson chain:");
    for v in &d.eigenvalues {
        println!("  {:+.10} {:+.2e}i", v.re, v.im);
    }
    println!("trace {:.2e} vs sum {:.2e}", a.trace().norm(), (sum - a.trace()).norm());
    println!("det   {:.6e} vs product {:.6e}", a.determinant().re, prod.re);
    println!("max relative residual {:.2e}", d.max_relative_residual());
    Ok(())
}
