//! Dense complex eigensolver for general (non-Hermitian) matrices.
//!
//! The pipeline is the classical one:
//!
//! 1. diagonal balancing `A ← D⁻¹ A D` with powers of two, so that row and
//!    column norms are comparable (exact in floating point);
//! 2. unitary reduction to upper Hessenberg form by Householder reflectors;
//! 3. single-shift implicit QR sweeps with Wilkinson shifts, deflating a
//!    subdiagonal entry once `|H[i+1,i]| ≤ 4ε (|H[i,i]| + |H[i+1,i+1]|)`;
//! 4. eigenvectors by back-substitution on the triangular Schur factor,
//!    mapped back through the accumulated Schur vectors and the balancing.
//!
//! Eigenvalues are returned sorted by `(Re, Im)`. Band identities are
//! assigned downstream, never by this ordering.

mod matrix;
mod schur;

pub use matrix::CMatrix;

use num_complex::Complex64;
use thiserror::Error;

/// Deflation threshold factor applied to machine epsilon.
pub const DEFLATION_SAFETY: f64 = 4.0;
/// Total QR iteration budget per unit of matrix dimension.
pub const ITERATIONS_PER_DIM: usize = 40;
/// An exceptional shift is used after this many sweeps without deflation.
pub const EXCEPTIONAL_SHIFT_PERIOD: usize = 10;

#[derive(Debug, Error)]
pub enum EigenError {
    #[error("empty matrix")]
    Empty,
    #[error("matrix contains non-finite entries")]
    NonFinite,
    #[error("QR iteration did not converge after {iterations} sweeps ({remaining} eigenvalues left)")]
    NoConvergence {
        iterations: usize,
        remaining: usize,
        /// Hessenberg matrix at the point of failure.
        partial: Box<CMatrix>,
    },
}

/// Eigenvalues with unit-norm right eigenvectors and per-pair residuals.
#[derive(Clone, Debug)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<Complex64>,
    /// `eigenvectors[i]` belongs to `eigenvalues[i]`.
    pub eigenvectors: Vec<Vec<Complex64>>,
    /// `‖A v − λ v‖₂` for each pair.
    pub residuals: Vec<f64>,
    /// Frobenius norm of the input matrix.
    pub norm: f64,
}

impl EigenDecomposition {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Indices of pairs whose residual exceeds `tol · ‖A‖_F`. Defective or
    /// nearly defective matrices show up here instead of failing outright.
    pub fn flagged(&self, tol: f64) -> Vec<usize> {
        self.residuals
            .iter()
            .enumerate()
            .filter(|(_, &r)| r > tol * self.norm.max(f64::MIN_POSITIVE))
            .map(|(i, _)| i)
            .collect()
    }

    pub fn max_relative_residual(&self) -> f64 {
        let scale = self.norm.max(f64::MIN_POSITIVE);
        self.residuals.iter().fold(0.0_f64, |m, &r| m.max(r / scale))
    }
}

/// Stateless solver configuration.
#[derive(Clone, Copy, Debug)]
pub struct EigenSolver {
    pub balance: bool,
}

impl Default for EigenSolver {
    fn default() -> Self {
        Self { balance: true }
    }
}

impl EigenSolver {
    pub fn new() -> Self {
        Self::default()
    }

    /// Debugging aid: skip the balancing step.
    pub fn without_balancing(mut self) -> Self {
        self.balance = false;
        self
    }

    pub fn eigenvalues(&self, a: &CMatrix) -> Result<Vec<Complex64>, EigenError> {
        check_input(a)?;
        let mut h = a.clone();
        if self.balance {
            schur::balance(&mut h);
        }
        schur::hessenberg(&mut h, None);
        schur::qr_iterate(&mut h, None, false)?;
        let mut values: Vec<Complex64> = (0..h.dim()).map(|i| h[(i, i)]).collect();
        values.sort_by(lexicographic);
        Ok(values)
    }

    pub fn eigenpairs(&self, a: &CMatrix) -> Result<EigenDecomposition, EigenError> {
        check_input(a)?;
        let n = a.dim();
        let mut t = a.clone();
        let scale = if self.balance {
            schur::balance(&mut t)
        } else {
            vec![1.0; n]
        };
        let mut z = CMatrix::identity(n);
        schur::hessenberg(&mut t, Some(&mut z));
        schur::qr_iterate(&mut t, Some(&mut z), true)?;

        let mut pairs: Vec<(Complex64, Vec<Complex64>)> = (0..n)
            .map(|i| {
                let mut v = schur::triangular_eigenvector(&t, &z, i);
                for (x, d) in v.iter_mut().zip(&scale) {
                    *x *= *d;
                }
                normalize(&mut v);
                (t[(i, i)], v)
            })
            .collect();
        pairs.sort_by(|p, q| lexicographic(&p.0, &q.0));

        let norm = a.frobenius_norm();
        let residuals = pairs.iter().map(|(l, v)| residual(a, *l, v)).collect();
        let (eigenvalues, eigenvectors) = pairs.into_iter().unzip();
        Ok(EigenDecomposition {
            eigenvalues,
            eigenvectors,
            residuals,
            norm,
        })
    }
}

/// Eigenvalues with the default solver.
pub fn eigenvalues(a: &CMatrix) -> Result<Vec<Complex64>, EigenError> {
    EigenSolver::default().eigenvalues(a)
}

/// Eigenvalues and eigenvectors with the default solver.
pub fn eigenpairs(a: &CMatrix) -> Result<EigenDecomposition, EigenError> {
    EigenSolver::default().eigenpairs(a)
}

/// Ordering used for all returned spectra: real part, then imaginary part.
pub fn lexicographic(a: &Complex64, b: &Complex64) -> std::cmp::Ordering {
    a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
}

/// `‖A v − λ v‖₂`.
pub fn residual(a: &CMatrix, lambda: Complex64, v: &[Complex64]) -> f64 {
    a.mul_vec(v)
        .iter()
        .zip(v)
        .map(|(av, x)| (av - lambda * x).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

fn normalize(v: &mut [Complex64]) {
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm > 0.0 {
        for x in v.iter_mut() {
            *x /= norm;
        }
    }
}

fn check_input(a: &CMatrix) -> Result<(), EigenError> {
    if a.dim() == 0 {
        return Err(EigenError::Empty);
    }
    if !a.is_finite() {
        return Err(EigenError::NonFinite);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn assert_multiset_close(got: &[Complex64], want: &[Complex64], tol: f64) {
        assert_eq!(got.len(), want.len());
        let mut used = vec![false; want.len()];
        for g in got {
            let (idx, d) = want
                .iter()
                .enumerate()
                .filter(|(i, _)| !used[*i])
                .map(|(i, w)| (i, (g - w).norm()))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .unwrap();
            assert!(d <= tol, "eigenvalue {g} has no partner within {tol} (closest {d})");
            used[idx] = true;
        }
    }

    #[test]
    fn diagonal_matrix() {
        let a = CMatrix::diagonal(&[c(1.0, 2.0), c(-3.0, 0.0), c(0.0, 0.0)]);
        let ev = eigenvalues(&a).unwrap();
        assert_multiset_close(&ev, &[c(1.0, 2.0), c(-3.0, 0.0), c(0.0, 0.0)], 1e-14);
        // sorted by real part
        assert_eq!(ev[0], c(-3.0, 0.0));
    }

    #[test]
    fn swap_matrix() {
        let a = CMatrix::from_real_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
        let ev = eigenvalues(&a).unwrap();
        assert_multiset_close(&ev, &[c(1.0, 0.0), c(-1.0, 0.0)], 1e-14);
    }

    #[test]
    fn gauge_field_cancels_in_two_site_determinant() {
        let h: f64 = 0.7;
        let a = CMatrix::from_real_rows(&[vec![0.0, h.exp()], vec![(-h).exp(), 0.0]]);
        let ev = eigenvalues(&a).unwrap();
        assert_multiset_close(&ev, &[c(1.0, 0.0), c(-1.0, 0.0)], 1e-13);
    }

    #[test]
    fn identity_has_zero_residuals() {
        let d = eigenpairs(&CMatrix::identity(3)).unwrap();
        for (l, r) in d.eigenvalues.iter().zip(&d.residuals) {
            assert!((l - c(1.0, 0.0)).norm() < 1e-15);
            assert!(*r < 1e-15);
        }
        for v in &d.eigenvectors {
            let n: f64 = v.iter().map(|z| z.norm_sqr()).sum();
            assert!((n - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn one_by_one() {
        let a = CMatrix::diagonal(&[c(0.5, -0.25)]);
        let d = eigenpairs(&a).unwrap();
        assert_eq!(d.eigenvalues, vec![c(0.5, -0.25)]);
        assert!((d.eigenvectors[0][0].norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn jordan_block_is_flagged_not_fatal() {
        // exactly defective: a single eigenvector exists
        let a = CMatrix::from_real_rows(&[
            vec![2.0, 1.0, 0.0],
            vec![0.0, 2.0, 1.0],
            vec![0.0, 0.0, 2.0],
        ]);
        let d = eigenpairs(&a).unwrap();
        assert_eq!(d.len(), 3);
        for l in &d.eigenvalues {
            assert!((l - c(2.0, 0.0)).norm() < 1e-5);
        }
    }

    #[test]
    fn companion_matrix_roots() {
        // z^3 - 6z^2 + 11z - 6 = (z-1)(z-2)(z-3)
        let a = CMatrix::from_real_rows(&[
            vec![6.0, -11.0, 6.0],
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
        ]);
        let d = eigenpairs(&a).unwrap();
        assert_multiset_close(&d.eigenvalues, &[c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0)], 1e-12);
        assert!(d.max_relative_residual() < 1e-12);
    }

    #[test]
    fn rotation_has_complex_pair() {
        let a = CMatrix::from_real_rows(&[vec![0.0, -1.0], vec![1.0, 0.0]]);
        let ev = eigenvalues(&a).unwrap();
        assert_multiset_close(&ev, &[c(0.0, 1.0), c(0.0, -1.0)], 1e-14);
    }

    #[test]
    fn balancing_flag_gives_same_spectrum() {
        let a = CMatrix::from_fn(5, |i, j| {
            let s = 10f64.powi(i as i32 - j as i32);
            c(s * ((i * 7 + j * 3) % 5) as f64, 0.1 * (i as f64 - j as f64))
        });
        let b = eigenvalues(&a).unwrap();
        let u = EigenSolver::new().without_balancing().eigenvalues(&a).unwrap();
        assert_multiset_close(&b, &u, 1e-8 * a.frobenius_norm());
    }

    #[test]
    fn rejects_empty_and_non_finite() {
        assert!(matches!(eigenvalues(&CMatrix::zeros(0)), Err(EigenError::Empty)));
        let mut a = CMatrix::identity(2);
        a[(0, 1)] = c(f64::NAN, 0.0);
        assert!(matches!(eigenvalues(&a), Err(EigenError::NonFinite)));
    }
}
