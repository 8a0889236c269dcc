//! Band structures over k, gauge-field scans, closed-form critical fields and
//! the flat-band asymptotics of isolated minibands.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eigen::{self, CMatrix};
use crate::lattice::{assemble_bloch, open_chain, ModelFamily, PotentialKind, SuperlatticeSpec};
use crate::{Error, Result};

/// k points per reduced zone used for scans.
pub const SCAN_NK: usize = 64;
/// k points per reduced zone used for plotted band structures.
pub const BAND_NK: usize = 256;
/// Lower threshold on `max |Im E|` (units of J): the spectrum counts as real below it.
pub const EPS_LO: f64 = 1e-4;
/// Threshold whose crossing defines the critical field.
pub const EPS_HI: f64 = 1e-2;
/// Upper end of the transition window: the imaginary parts have reached the
/// hopping scale.
pub const WIDTH_HI: f64 = 1.0;

/// `k_j = −π/M + 2πj/(M·Nk)`, `j = 0..Nk`.
pub fn k_grid(m: usize, nk: usize) -> Vec<f64> {
    let m = m as f64;
    (0..nk)
        .map(|j| -PI / m + 2.0 * PI * j as f64 / (m * nk as f64))
        .collect()
}

/// Inclusive uniform grid `start, start + step, …, stop`.
pub fn uniform_grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(start.is_finite() && stop.is_finite() && step.is_finite()) || step <= 0.0 || stop < start {
        return Err(Error::Domain(format!("bad grid {start}:{stop}:{step}")));
    }
    let span = (stop - start) / step;
    let n = (span + 1e-9).floor() as usize;
    if n > 10_000_000 {
        return Err(Error::Domain(format!("grid {start}:{stop}:{step} is too large")));
    }
    // steps of the form 1/q are generated as (start·q + i)/q so decimal grids
    // such as 0:1:0.01 hit the nearest doubles of 0.07, 0.3, …
    let q = step.recip();
    if (q - q.round()).abs() < 1e-9 * q && q.round() >= 1.0 {
        let q = q.round();
        let s = start * q;
        return Ok((0..=n).map(|i| (s + i as f64) / q).collect());
    }
    Ok((0..=n).map(|i| start + i as f64 * step).collect())
}

/// Complex minibands `E_l(k, h)` on a uniform k grid.
#[derive(Clone, Debug)]
pub struct ComplexSpectrum {
    pub m: usize,
    pub h: f64,
    pub k_grid: Vec<f64>,
    /// `bands[l][i]` is `E_l(k_grid[i])`.
    pub bands: Vec<Vec<Complex64>>,
    /// `eigenvectors[l][i]`, unit norm, when requested.
    pub eigenvectors: Option<Vec<Vec<Vec<Complex64>>>>,
}

impl ComplexSpectrum {
    pub fn band(&self, l: usize) -> &[Complex64] {
        &self.bands[l]
    }

    pub fn max_im(&self) -> f64 {
        self.bands
            .iter()
            .flatten()
            .fold(0.0_f64, |m, e| m.max(e.im.abs()))
    }

    /// `(l, k, E)` triples in band-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, f64, Complex64)> + '_ {
        self.bands.iter().enumerate().flat_map(move |(l, band)| {
            band.iter()
                .zip(&self.k_grid)
                .map(move |(e, &k)| (l, k, *e))
        })
    }
}

/// Index in `grid` closest to zero.
pub(crate) fn index_nearest_zero(grid: &[f64]) -> usize {
    grid.iter()
        .enumerate()
        .min_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
        .map(|(i, _)| i)
        .unwrap_or(0)
}

/// Threads sorted per-k spectra into continuous bands. Returns `perm` with
/// `perm[i][l]` the position of band `l` inside `values[i]`. Band labels are
/// the sorted order at `start`; neighbours are paired greedily by smallest
/// complex distance, with distances closer than 10⁻¹² treated as ties and
/// resolved toward the lower index.
pub fn continue_bands(values: &[Vec<Complex64>], start: usize) -> Vec<Vec<usize>> {
    let nk = values.len();
    if nk == 0 {
        return Vec::new();
    }
    let n = values[start].len();
    let mut perm = vec![Vec::new(); nk];
    perm[start] = (0..n).collect();
    for i in start + 1..nk {
        perm[i] = pair_nearest(&values[i - 1], &perm[i - 1], &values[i]);
    }
    for i in (0..start).rev() {
        perm[i] = pair_nearest(&values[i + 1], &perm[i + 1], &values[i]);
    }
    perm
}

const TIE: f64 = 1e-12;

fn pair_nearest(prev: &[Complex64], prev_perm: &[usize], next: &[Complex64]) -> Vec<usize> {
    let n = prev_perm.len();
    let mut pairs: Vec<(u64, usize, usize)> = Vec::with_capacity(n * n);
    for (l, &pi) in prev_perm.iter().enumerate() {
        for (j, e) in next.iter().enumerate() {
            let d = (prev[pi] - e).norm();
            pairs.push(((d / TIE).min(u64::MAX as f64) as u64, j, l));
        }
    }
    pairs.sort_unstable();
    let mut out = vec![usize::MAX; n];
    let mut taken = vec![false; next.len()];
    let mut left = n;
    for (_, j, l) in pairs {
        if out[l] == usize::MAX && !taken[j] {
            out[l] = j;
            taken[j] = true;
            left -= 1;
            if left == 0 {
                break;
            }
        }
    }
    out
}

/// Eigenvalues of the Bloch matrix at every k of the grid, sorted per k.
fn spectra_on_grid(spec: &SuperlatticeSpec, grid: &[f64]) -> Result<Vec<Vec<Complex64>>> {
    grid.par_iter()
        .map(|&k| {
            let b = assemble_bloch(spec, k);
            eigen::eigenvalues(&b.matrix).map_err(Error::at_k(k))
        })
        .collect()
}

pub fn band_structure(spec: &SuperlatticeSpec, nk: usize, want_vectors: bool) -> Result<ComplexSpectrum> {
    if nk < 2 {
        return Err(Error::Domain(format!("need at least 2 k points, got {nk}")));
    }
    let m = spec.m();
    let grid = k_grid(m, nk);
    let start = index_nearest_zero(&grid);

    let (values, vectors) = if want_vectors {
        let decs: Vec<_> = grid
            .par_iter()
            .map(|&k| eigen::eigenpairs(&assemble_bloch(spec, k).matrix).map_err(Error::at_k(k)))
            .collect::<Result<_>>()?;
        let (v, w): (Vec<_>, Vec<_>) = decs.into_iter().map(|d| (d.eigenvalues, d.eigenvectors)).unzip();
        (v, Some(w))
    } else {
        (spectra_on_grid(spec, &grid)?, None)
    };

    let perm = continue_bands(&values, start);
    let bands = (0..m)
        .map(|l| (0..nk).map(|i| values[i][perm[i][l]]).collect())
        .collect();
    let eigenvectors = vectors.map(|w| {
        (0..m)
            .map(|l| (0..nk).map(|i| w[i][perm[i][l]].clone()).collect())
            .collect()
    });
    Ok(ComplexSpectrum {
        m,
        h: spec.h(),
        k_grid: grid,
        bands,
        eigenvectors,
    })
}

/// `max_{k,l} |Im E_l(k, h)|` over an `nk`-point grid.
pub fn max_im_energy(spec: &SuperlatticeSpec, nk: usize) -> Result<f64> {
    if nk < 2 {
        return Err(Error::Domain(format!("need at least 2 k points, got {nk}")));
    }
    let grid = k_grid(spec.m(), nk);
    let values = spectra_on_grid(spec, &grid)?;
    Ok(values
        .iter()
        .flatten()
        .fold(0.0_f64, |m, e| m.max(e.im.abs())))
}

/// Threshold conventions for locating a spectral transition.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub eps_lo: f64,
    /// Its crossing is the critical-field estimate.
    pub eps_hi: f64,
    /// The transition width runs from the `eps_lo` to the `width_hi` crossing.
    pub width_hi: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            eps_lo: EPS_LO,
            eps_hi: EPS_HI,
            width_hi: WIDTH_HI,
        }
    }
}

impl Thresholds {
    pub fn validate(&self) -> Result<()> {
        let ok = self.eps_lo > 0.0 && self.eps_lo < self.eps_hi && self.eps_hi <= self.width_hi;
        if !ok || !self.width_hi.is_finite() {
            return Err(Error::Domain(format!(
                "thresholds must satisfy 0 < eps_lo < eps_hi <= width_hi, got {self:?}"
            )));
        }
        Ok(())
    }
}

/// `max |Im E|` as a function of the gauge field.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GaugeScan {
    pub h_grid: Vec<f64>,
    pub max_im: Vec<f64>,
    pub thresholds: Thresholds,
    pub hc_estimate: Option<f64>,
    pub transition_width: Option<f64>,
}

impl GaugeScan {
    pub fn from_curve(h_grid: Vec<f64>, max_im: Vec<f64>, thresholds: Thresholds) -> Result<Self> {
        thresholds.validate()?;
        check_h_grid(&h_grid)?;
        if max_im.len() != h_grid.len() {
            return Err(Error::Domain("max_im and h_grid lengths differ".into()));
        }
        let mut scan = Self {
            h_grid,
            max_im,
            thresholds,
            hc_estimate: None,
            transition_width: None,
        };
        scan.hc_estimate = scan.crossing(thresholds.eps_hi);
        scan.transition_width = match (scan.crossing(thresholds.eps_lo), scan.crossing(thresholds.width_hi)) {
            (Some(lo), Some(hi)) => Some(hi - lo),
            _ => None,
        };
        Ok(scan)
    }

    /// First `h` at which `max_im` reaches `level`, interpolated linearly
    /// between grid points.
    pub fn crossing(&self, level: f64) -> Option<f64> {
        let i = self.max_im.iter().position(|&y| y >= level)?;
        if i == 0 {
            return Some(self.h_grid[0]);
        }
        let (h0, h1) = (self.h_grid[i - 1], self.h_grid[i]);
        let (y0, y1) = (self.max_im[i - 1], self.max_im[i]);
        Some(h0 + (level - y0) / (y1 - y0) * (h1 - h0))
    }

    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.h_grid.iter().copied().zip(self.max_im.iter().copied())
    }
}

pub(crate) fn check_h_grid(h_grid: &[f64]) -> Result<()> {
    if h_grid.is_empty() {
        return Err(Error::Domain("empty h grid".into()));
    }
    if h_grid.iter().any(|h| !h.is_finite()) || h_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain("h grid must be finite and strictly increasing".into()));
    }
    Ok(())
}

/// Scans `max |Im E|` over `h_grid` for the lattice `family` (its own `h` is
/// ignored).
pub fn scan_gauge(
    family: &SuperlatticeSpec,
    h_grid: &[f64],
    nk: usize,
    thresholds: Thresholds,
) -> Result<GaugeScan> {
    thresholds.validate()?;
    check_h_grid(h_grid)?;
    let max_im = h_grid
        .par_iter()
        .map(|&h| max_im_energy(&family.with_h(h), nk))
        .collect::<Result<Vec<_>>>()?;
    GaugeScan::from_curve(h_grid.to_vec(), max_im, thresholds)
}

/// Closed-form critical gauge field: `ln(V/J)` for the incommensurate
/// potential, `½ acosh(V/J − 1)` for the barrier superlattice.
pub fn predicted_hc(kind: PotentialKind, j: f64) -> Result<f64> {
    match kind {
        PotentialKind::Incommensurate { v, .. } => {
            if v < j {
                return Err(Error::Domain(format!("need V >= J, got V = {v}, J = {j}")));
            }
            Ok((v / j).ln())
        }
        PotentialKind::Barrier { v } => {
            if v < 2.0 * j {
                return Err(Error::Domain(format!("need V >= 2J, got V = {v}, J = {j}")));
            }
            Ok(0.5 * (v / j - 1.0).acosh())
        }
        PotentialKind::Impurity { .. } | PotentialKind::Custom => Err(Error::Domain(
            "no closed-form critical field for this potential".into(),
        )),
    }
}

/// Evanescent fraction `ρ` and tail decay rate `γ_m` of a model, where known.
pub fn tail_decay(family: ModelFamily, j: f64) -> Option<(f64, f64)> {
    match family {
        ModelFamily::Incommensurate { v } if v > j => Some((1.0, (v / j).ln())),
        ModelFamily::Barrier { v } if v > 2.0 * j => Some((0.5, (v / j - 1.0).acosh())),
        _ => None,
    }
}

/// Flat-band data for one cell size.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FlatBandRow {
    pub m: usize,
    /// Band centre `E_l(0, 0)`.
    pub e0: f64,
    /// `[E_l(π/M, 0) − E_l(0, 0)] / 2`.
    pub delta_exact: f64,
    /// `−2J φ₁ φ_M` from the corner-free cell.
    pub delta_pert: f64,
    pub relative_error: f64,
    /// Distance from `e0` to the nearest other level at `k = 0`.
    pub gap: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FlatBandReport {
    pub l: usize,
    pub rows: Vec<FlatBandRow>,
    /// `−slope` of `ln|Δ|` against `M`.
    pub sigma_fit: f64,
    /// Intercept `a` of the fit `ln|Δ| ≈ a − σM`.
    pub log_prefactor: f64,
    pub rho: Option<f64>,
    pub gamma_m: Option<f64>,
}

/// Below this half-width the eigenvalue difference is dominated by rounding
/// and the transfer-matrix slope is used instead.
const DIRECT_DELTA_MIN: f64 = 1e-6;
/// Below this size the tail product is taken from the eigenvalue identity
/// rather than from the eigenvector entries.
const DIRECT_TAIL_MIN: f64 = 1e-8;

fn sorted_real_levels(a: &CMatrix) -> Result<Vec<f64>> {
    let mut v: Vec<f64> = eigen::eigenvalues(a)?.iter().map(|e| e.re).collect();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// `tr(T_M ⋯ T_1)` and its derivative in `E`, with
/// `T_n = [[(E − V_n)/J, −1], [1, 0]]`.
fn transfer_trace(potential: &[f64], j: f64, e: f64) -> (f64, f64) {
    let mut t = [[1.0, 0.0], [0.0, 1.0]];
    let mut dt = [[0.0, 0.0], [0.0, 0.0]];
    for &v in potential {
        let a = (e - v) / j;
        // new = T·t, dnew = dT·t + T·dt with dT = [[1/J, 0], [0, 0]]
        let new = [[a * t[0][0] - t[1][0], a * t[0][1] - t[1][1]], [t[0][0], t[0][1]]];
        let dnew = [
            [
                t[0][0] / j + a * dt[0][0] - dt[1][0],
                t[0][1] / j + a * dt[0][1] - dt[1][1],
            ],
            [dt[0][0], dt[0][1]],
        ];
        t = new;
        dt = dnew;
    }
    (t[0][0] + t[1][1], dt[0][0] + dt[1][1])
}

/// Half-width of a very flat band from the slope of the transfer-matrix
/// trace at the band centre, where `tr = 2cos(kM)` vanishes.
fn transfer_half_width(potential: &[f64], j: f64, guess: f64) -> Result<f64> {
    let mut e = guess;
    for _ in 0..200 {
        let (d, dd) = transfer_trace(potential, j, e);
        if dd == 0.0 || !dd.is_finite() {
            break;
        }
        let step = d / dd;
        e -= step;
        if step.abs() <= 4.0 * f64::EPSILON * (1.0 + e.abs()) {
            return Ok(-2.0 / transfer_trace(potential, j, e).1);
        }
    }
    Err(Error::PerturbationInvalid(format!(
        "transfer-matrix band centre did not converge near E = {guess}"
    )))
}

/// `φ₁ φ_M` of level `l` of a Jacobi matrix with constant off-diagonal `J`:
/// `J^{M−1} / ∏_{i≠l} (λ_l − λ_i)`, evaluated in log space.
fn tail_product_from_levels(levels: &[f64], l: usize, j: f64) -> f64 {
    let mut log = (levels.len() - 1) as f64 * j.ln();
    let mut negative = false;
    for (i, &x) in levels.iter().enumerate() {
        if i != l {
            let d = levels[l] - x;
            log -= d.abs().ln();
            negative ^= d < 0.0;
        }
    }
    if negative {
        -log.exp()
    } else {
        log.exp()
    }
}

/// Flat-band comparison for band `l` of one cell, at `h = 0`.
pub fn flatband_row(potential: &[f64], j: f64, l: usize) -> Result<FlatBandRow> {
    let m = potential.len();
    if l >= m {
        return Err(Error::Domain(format!("band index {l} out of range for M = {m}")));
    }
    let zero = Complex64::new(0.0, 0.0);
    let centre = sorted_real_levels(&crate::lattice::bloch_matrix(potential, j, 0.0, zero))?;
    let edge = sorted_real_levels(&crate::lattice::bloch_matrix(
        potential,
        j,
        0.0,
        Complex64::new(PI / m as f64, 0.0),
    ))?;
    let e0 = centre[l];
    let gap = centre
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != l)
        .map(|(_, x)| (x - e0).abs())
        .fold(f64::INFINITY, f64::min);

    let direct = (edge[l] - e0) / 2.0;
    let delta_exact = if direct.abs() > DIRECT_DELTA_MIN * j {
        direct
    } else {
        transfer_half_width(potential, j, (edge[l] + e0) / 2.0)?
    };
    if gap <= 10.0 * delta_exact.abs() {
        return Err(Error::PerturbationInvalid(format!(
            "band {l} is not isolated at k = 0 (gap {gap:.3e}, half-width {delta_exact:.3e})"
        )));
    }

    let h0 = open_chain(potential, j);
    let dec = eigen::eigenpairs(&h0)?;
    // Hermitian: levels are real and already in ascending order
    let levels: Vec<f64> = dec.eigenvalues.iter().map(|e| e.re).collect();
    let v = &dec.eigenvectors[l];
    let pivot = v.iter().copied().fold(zero, |a, b| if b.norm() > a.norm() { b } else { a });
    let phase = pivot.conj() / pivot.norm();
    let mut tail = (v[0] * phase).re * (v[m - 1] * phase).re;
    if tail.abs() < DIRECT_TAIL_MIN {
        tail = tail_product_from_levels(&levels, l, j);
    }
    let delta_pert = -2.0 * j * tail;
    Ok(FlatBandRow {
        m,
        e0,
        delta_exact,
        delta_pert,
        relative_error: ((delta_pert - delta_exact) / delta_exact).abs(),
        gap,
    })
}

/// Ordinary least squares `y ≈ a + b x`; returns `(a, b)`.
pub fn least_squares(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let b = sxy / sxx;
    (my - b * mx, b)
}

pub fn flatband_analysis(family: ModelFamily, j: f64, l: usize, m_list: &[usize]) -> Result<FlatBandReport> {
    if m_list.len() < 3 {
        return Err(Error::Diagnostics(format!(
            "decay fit needs at least 3 cell sizes, got {}",
            m_list.len()
        )));
    }
    if m_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain("cell sizes must be strictly increasing".into()));
    }
    let rows = m_list
        .iter()
        .map(|&m| flatband_row(family.potential(m)?.values(), j, l))
        .collect::<Result<Vec<_>>>()?;
    let x: Vec<f64> = rows.iter().map(|r| r.m as f64).collect();
    let y: Vec<f64> = rows.iter().map(|r| r.delta_exact.abs().ln()).collect();
    let (a, b) = least_squares(&x, &y);
    let decay = tail_decay(family, j);
    Ok(FlatBandReport {
        l,
        rows,
        sigma_fit: -b,
        log_prefactor: a,
        rho: decay.map(|d| d.0),
        gamma_m: decay.map(|d| d.1),
    })
}

/// `½ e^{(h − σ) M}`: radius of the loop traced by a flat band.
pub fn predicted_loop_radius(h: f64, sigma: f64, m: usize) -> f64 {
    0.5 * ((h - sigma) * m as f64).exp()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoopRadius {
    pub predicted: f64,
    pub measured: f64,
}

/// Compares `max_k |E_l(k, h) − E_l(0, 0)|` with the loop law for decay
/// exponent `sigma`.
pub fn loop_radius_check(spec: &SuperlatticeSpec, l: usize, sigma: f64, nk: usize) -> Result<LoopRadius> {
    let m = spec.m();
    if l >= m {
        return Err(Error::Domain(format!("band index {l} out of range for M = {m}")));
    }
    if !(spec.h() > 0.0) {
        return Err(Error::Domain("loop law needs h > 0".into()));
    }
    let reference = sorted_real_levels(&assemble_bloch(&spec.with_h(0.0), 0.0).matrix)?[l];
    let bands = band_structure(spec, nk, false)?;
    let measured = bands.bands[l]
        .iter()
        .map(|e| (e - reference).norm())
        .fold(0.0, f64::max);
    Ok(LoopRadius {
        predicted: predicted_loop_radius(spec.h(), sigma, m),
        measured,
    })
}
