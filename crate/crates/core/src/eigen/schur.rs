use num_complex::Complex64;

use super::{CMatrix, EigenError, DEFLATION_SAFETY, EXCEPTIONAL_SHIFT_PERIOD, ITERATIONS_PER_DIM};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const RADIX: f64 = 2.0;

/// Diagonal balancing in place; returns the scaling `d` with `A_bal = D⁻¹ A D`.
pub(super) fn balance(a: &mut CMatrix) -> Vec<f64> {
    let n = a.dim();
    let mut d = vec![1.0; n];
    let sqrdx = RADIX * RADIX;
    loop {
        let mut converged = true;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += a[(j, i)].l1_norm();
                    r += a[(i, j)].l1_norm();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut g = r / RADIX;
            while c < g && f < 1e100 {
                f *= RADIX;
                c *= sqrdx;
            }
            g = r * RADIX;
            while c >= g && f > 1e-100 {
                f /= RADIX;
                c /= sqrdx;
            }
            if (c + r) / f < 0.95 * s {
                converged = false;
                d[i] *= f;
                let inv = 1.0 / f;
                for x in a.row_mut(i) {
                    *x *= inv;
                }
                for j in 0..n {
                    a[(j, i)] *= f;
                }
            }
        }
        if converged {
            return d;
        }
    }
}

/// Householder reduction to upper Hessenberg form. When `q` is given it is
/// overwritten by `q · Q` with `H = Qᴴ A Q`.
pub(super) fn hessenberg(a: &mut CMatrix, mut q: Option<&mut CMatrix>) {
    let n = a.dim();
    if n < 3 {
        return;
    }
    let mut v = vec![ZERO; n];
    let mut w = vec![ZERO; n];
    for k in 0..n - 2 {
        let norm_x = (k + 1..n).map(|i| a[(i, k)].norm_sqr()).sum::<f64>().sqrt();
        let tail = (k + 2..n).map(|i| a[(i, k)].norm_sqr()).sum::<f64>();
        if norm_x == 0.0 || tail == 0.0 {
            continue;
        }
        let x0 = a[(k + 1, k)];
        let phase = if x0.norm() == 0.0 {
            Complex64::new(1.0, 0.0)
        } else {
            x0 / x0.norm()
        };
        let alpha = -phase * norm_x;
        for i in k + 1..n {
            v[i] = a[(i, k)];
        }
        v[k + 1] -= alpha;
        let vnorm = (k + 1..n).map(|i| v[i].norm_sqr()).sum::<f64>().sqrt();
        for x in &mut v[k + 1..n] {
            *x /= vnorm;
        }

        // rows k+1.. : A ← (I − 2vvᴴ) A, columns k..
        for x in &mut w[k..n] {
            *x = ZERO;
        }
        for i in k + 1..n {
            let vc = v[i].conj();
            let row = a.row(i);
            for j in k..n {
                w[j] += vc * row[j];
            }
        }
        for i in k + 1..n {
            let vi = v[i] * 2.0;
            let row = a.row_mut(i);
            for j in k..n {
                row[j] -= vi * w[j];
            }
        }
        // columns k+1.. : A ← A (I − 2vvᴴ), all rows
        apply_reflector_right(a, &v, k + 1);
        a[(k + 1, k)] = alpha;
        for i in k + 2..n {
            a[(i, k)] = ZERO;
        }
        if let Some(q) = q.as_deref_mut() {
            apply_reflector_right(q, &v, k + 1);
        }
    }
}

fn apply_reflector_right(a: &mut CMatrix, v: &[Complex64], start: usize) {
    let n = a.dim();
    for i in 0..n {
        let row = a.row_mut(i);
        let mut s = ZERO;
        for j in start..n {
            s += row[j] * v[j];
        }
        s *= 2.0;
        for j in start..n {
            row[j] -= s * v[j].conj();
        }
    }
}

/// Implicit single-shift QR on an upper Hessenberg matrix. With
/// `full_schur` the whole matrix is updated so that it ends upper
/// triangular; otherwise only the active window is touched and just the
/// diagonal is meaningful. Rotations are accumulated into `z` if given.
pub(super) fn qr_iterate(
    h: &mut CMatrix,
    mut z: Option<&mut CMatrix>,
    full_schur: bool,
) -> Result<(), EigenError> {
    let n = h.dim();
    if n == 1 {
        return Ok(());
    }
    let eps = DEFLATION_SAFETY * f64::EPSILON;
    let small = f64::MIN_POSITIVE * (n as f64) / f64::EPSILON;
    let budget = ITERATIONS_PER_DIM * n;
    let hnorm = h.frobenius_norm();

    let mut total = 0usize;
    let mut stalled = 0usize;
    let mut hi = n - 1;
    loop {
        // locate the start of the unreduced block ending at `hi`
        let mut lo = hi;
        while lo > 0 {
            let sub = h[(lo, lo - 1)].norm();
            let mut tst = h[(lo - 1, lo - 1)].norm() + h[(lo, lo)].norm();
            if tst == 0.0 {
                tst = hnorm;
            }
            if sub <= eps * tst || sub <= small {
                h[(lo, lo - 1)] = ZERO;
                break;
            }
            lo -= 1;
        }
        if lo == hi {
            if hi == 0 {
                break;
            }
            hi -= 1;
            stalled = 0;
            continue;
        }

        total += 1;
        stalled += 1;
        if total > budget {
            return Err(EigenError::NoConvergence {
                iterations: total - 1,
                remaining: hi + 1,
                partial: Box::new(h.clone()),
            });
        }

        let shift = if stalled % EXCEPTIONAL_SHIFT_PERIOD == 0 {
            let s = 0.75 * h[(hi, hi - 1)].re.abs();
            h[(hi, hi)] + Complex64::new(s, 0.5 * s)
        } else {
            wilkinson_shift(h, hi)
        };

        let (col_end, row_start) = if full_schur { (n - 1, 0) } else { (hi, lo) };
        let mut x = h[(lo, lo)] - shift;
        let mut y = h[(lo + 1, lo)];
        for k in lo..hi {
            if k > lo {
                x = h[(k, k - 1)];
                y = h[(k + 1, k - 1)];
            }
            let (c, s, r) = givens(x, y);
            if k > lo {
                h[(k, k - 1)] = r;
                h[(k + 1, k - 1)] = ZERO;
            }
            // rows k, k+1
            {
                let (upper, lower) = h.adjacent_rows_mut(k);
                for j in k..=col_end {
                    let a = upper[j];
                    let b = lower[j];
                    upper[j] = a * c + s * b;
                    lower[j] = -s.conj() * a + b * c;
                }
            }
            // columns k, k+1
            let last = (k + 2).min(hi);
            for i in row_start..=last {
                let a = h[(i, k)];
                let b = h[(i, k + 1)];
                h[(i, k)] = a * c + s.conj() * b;
                h[(i, k + 1)] = -s * a + b * c;
            }
            if let Some(z) = z.as_deref_mut() {
                for i in 0..n {
                    let row = z.row_mut(i);
                    let a = row[k];
                    let b = row[k + 1];
                    row[k] = a * c + s.conj() * b;
                    row[k + 1] = -s * a + b * c;
                }
            }
        }
    }
    Ok(())
}

/// Eigenvalue of the trailing 2×2 block closest to its last diagonal entry.
fn wilkinson_shift(h: &CMatrix, hi: usize) -> Complex64 {
    let a = h[(hi - 1, hi - 1)];
    let b = h[(hi - 1, hi)];
    let c = h[(hi, hi - 1)];
    let d = h[(hi, hi)];
    let p = (a - d) * 0.5;
    let bc = b * c;
    let disc = (p * p + bc).sqrt();
    let den_plus = p + disc;
    let den_minus = p - disc;
    let den = if den_plus.norm() >= den_minus.norm() {
        den_plus
    } else {
        den_minus
    };
    if den.norm() == 0.0 {
        d
    } else {
        d - bc / den
    }
}

/// Complex Givens rotation `G = [[c, s], [−s̄, c]]` with real `c`, such that
/// `G (x, y)ᵀ = (r, 0)ᵀ`.
fn givens(x: Complex64, y: Complex64) -> (f64, Complex64, Complex64) {
    let ax = x.norm();
    let ay = y.norm();
    if ay == 0.0 {
        return (1.0, ZERO, x);
    }
    if ax == 0.0 {
        return (0.0, Complex64::new(1.0, 0.0), y);
    }
    let r = ax.hypot(ay);
    let c = ax / r;
    let phase = x / ax;
    let s = phase * y.conj() / r;
    (c, s, phase * r)
}

/// Right eigenvector for `T[i,i]` of the (upper triangular) Schur factor,
/// mapped through the Schur vectors `z`. Not normalized.
pub(super) fn triangular_eigenvector(t: &CMatrix, z: &CMatrix, i: usize) -> Vec<Complex64> {
    let n = t.dim();
    let lambda = t[(i, i)];
    let tnorm = t.frobenius_norm();
    let smin = (f64::EPSILON * tnorm).max(f64::MIN_POSITIVE * 1e10);
    const BIG: f64 = 1e150;

    let mut x = vec![ZERO; i + 1];
    x[i] = Complex64::new(1.0, 0.0);
    for j in (0..i).rev() {
        let row = t.row(j);
        let mut sum = ZERO;
        for m in j + 1..=i {
            sum += row[m] * x[m];
        }
        let mut den = row[j] - lambda;
        if den.norm() < smin {
            den = Complex64::new(smin, 0.0);
        }
        x[j] = -sum / den;
        let mag = x[j].norm();
        if mag > BIG {
            let inv = 1.0 / mag;
            for v in x[j..].iter_mut() {
                *v *= inv;
            }
        }
    }

    let mut v = vec![ZERO; n];
    for (r, out) in v.iter_mut().enumerate() {
        let row = z.row(r);
        let mut s = ZERO;
        for m in 0..=i {
            s += row[m] * x[m];
        }
        *out = s;
    }
    v
}
