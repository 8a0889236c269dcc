use std::fmt;
use std::ops::{Index, IndexMut};

use num_complex::Complex64;

/// Dense square complex matrix stored row-major.
#[derive(Clone, PartialEq)]
pub struct CMatrix {
    n: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![Complex64::new(0.0, 0.0); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        Self { n, data }
    }

    /// Builds a matrix from rows. Panics if the rows do not form a square.
    pub fn from_rows(rows: &[Vec<Complex64>]) -> Self {
        let n = rows.len();
        assert!(rows.iter().all(|r| r.len() == n), "rows must form a square matrix");
        Self {
            n,
            data: rows.iter().flatten().copied().collect(),
        }
    }

    pub fn from_real_rows(rows: &[Vec<f64>]) -> Self {
        let rows: Vec<Vec<Complex64>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| Complex64::new(x, 0.0)).collect())
            .collect();
        Self::from_rows(&rows)
    }

    pub fn diagonal(values: &[Complex64]) -> Self {
        let mut m = Self::zeros(values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [Complex64] {
        let n = self.n;
        &mut self.data[i * n..(i + 1) * n]
    }

    /// Rows `k` and `k + 1` as two disjoint mutable slices.
    #[inline]
    pub(crate) fn adjacent_rows_mut(&mut self, k: usize) -> (&mut [Complex64], &mut [Complex64]) {
        let n = self.n;
        self.data[k * n..(k + 2) * n].split_at_mut(n)
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.n).map(|i| self[(i, i)]).sum()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.n, |i, j| self[(j, i)].conj())
    }

    pub fn mul_vec(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.n);
        (0..self.n)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn matmul(&self, other: &CMatrix) -> CMatrix {
        assert_eq!(self.n, other.n);
        let n = self.n;
        let mut out = CMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let src = other.row(k);
                for (o, b) in out.row_mut(i).iter_mut().zip(src) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// Returns `D⁻¹ A D` for the diagonal matrix `D = diag(d)`.
    pub fn diagonal_similarity(&self, d: &[f64]) -> CMatrix {
        assert_eq!(d.len(), self.n);
        CMatrix::from_fn(self.n, |i, j| self[(i, j)] * (d[j] / d[i]))
    }

    /// Determinant by LU factorization with partial pivoting.
    pub fn determinant(&self) -> Complex64 {
        let n = self.n;
        let mut a = self.clone();
        let mut det = Complex64::new(1.0, 0.0);
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&p, &q| a[(p, col)].norm().total_cmp(&a[(q, col)].norm()))
                .unwrap();
            if a[(pivot, col)].norm() == 0.0 {
                return Complex64::new(0.0, 0.0);
            }
            if pivot != col {
                for j in 0..n {
                    a.data.swap(pivot * n + j, col * n + j);
                }
                det = -det;
            }
            let p = a[(col, col)];
            det *= p;
            for r in col + 1..n {
                let factor = a[(r, col)] / p;
                if factor == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in col + 1..n {
                    let v = a[(col, j)];
                    a[(r, j)] -= factor * v;
                }
            }
        }
        det
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = Complex64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.n + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.n + j]
    }
}

impl fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMatrix {}x{} [", self.n, self.n)?;
        for i in 0..self.n {
            write!(f, "  ")?;
            for z in self.row(i) {
                write!(f, "{:+.6e}{:+.6e}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn determinant_of_triangular_is_diagonal_product() {
        let m = CMatrix::from_rows(&[
            vec![c(2.0, 0.0), c(1.0, 1.0), c(3.0, 0.0)],
            vec![c(0.0, 0.0), c(0.0, 1.0), c(5.0, 0.0)],
            vec![c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)],
        ]);
        let d = m.determinant();
        assert!((d - c(0.0, -2.0)).norm() < 1e-14);
    }

    #[test]
    fn determinant_tracks_row_swaps() {
        let m = CMatrix::from_real_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
        assert!((m.determinant() - c(-1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn diagonal_similarity_preserves_trace() {
        let m = CMatrix::from_fn(4, |i, j| c((i + 2 * j) as f64, (i as f64) - (j as f64)));
        let s = m.diagonal_similarity(&[1.0, 0.5, 2.0, 1.5]);
        assert!((m.trace() - s.trace()).norm() < 1e-14);
        assert!((s[(1, 2)] - m[(1, 2)] * 4.0).norm() < 1e-14);
    }

    #[test]
    fn matmul_with_identity() {
        let m = CMatrix::from_fn(3, |i, j| c(i as f64, j as f64));
        assert_eq!(m.matmul(&CMatrix::identity(3)), m);
    }
}
