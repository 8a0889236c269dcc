//! Discrete-time photonic quantum walk on a ring superlattice with
//! gain/loss `e^{±h}`.
//!
//! One step maps the short- and long-loop amplitudes `(u, v)` as
//!
//! ```text
//! u'_n = [cos β u_{n+1} + i sin β v_{n+1}] e^{ h + iφ_n}
//! v'_n = [cos β v_{n−1} + i sin β u_{n−1}] e^{−h + iφ_n}
//! ```
//!
//! Quasi-energies are `E = i ln λ` for the step eigenvalues `λ = e^{−iE}`,
//! so `Re E = −arg λ ∈ (−π, π]` and `Im E = ln|λ|`: growing modes have
//! `Im E > 0`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eigen::{self, CMatrix};
use crate::localization::{ipr, IprSummary, StateIpr};
use crate::spectra::{check_h_grid, continue_bands, index_nearest_zero, k_grid, GaugeScan, Thresholds};
use crate::{Error, Result};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Lower threshold on `max |Im E|` for walk scans.
pub const WALK_EPS_LO: f64 = 1e-4;
/// Critical-field threshold for walk scans.
pub const WALK_EPS_HI: f64 = 1e-2;
/// Upper end of the walk transition window.
pub const WALK_WIDTH_HI: f64 = 0.1;

pub fn walk_thresholds() -> Thresholds {
    Thresholds {
        eps_lo: WALK_EPS_LO,
        eps_hi: WALK_EPS_HI,
        width_hi: WALK_WIDTH_HI,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WalkKind {
    /// `φ_n = 2π (R/M) n`: a linear phase ramp.
    Electric { r: usize },
    /// `+V` on the first half of the cell, `−V` on the second.
    BarrierPhase { v: f64 },
    Custom,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WalkSpec {
    beta: f64,
    h: f64,
    phases: Vec<f64>,
    kind: WalkKind,
}

impl WalkSpec {
    pub fn custom(phases: Vec<f64>, beta: f64, h: f64) -> Result<Self> {
        Self::checked(phases, beta, h, WalkKind::Custom)
    }

    /// Phases `2π (R/M) n` reduced mod 2π, for sites `n = 1..=M`.
    pub fn electric(m: usize, r: usize, beta: f64, h: f64) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidModel("walk cell needs M >= 1".into()));
        }
        let phases = (1..=m)
            .map(|n| 2.0 * PI * ((r * n) % m) as f64 / m as f64)
            .collect();
        Self::checked(phases, beta, h, WalkKind::Electric { r })
    }

    pub fn barrier_phase(m: usize, v: f64, beta: f64, h: f64) -> Result<Self> {
        if m == 0 || m % 2 != 0 {
            return Err(Error::InvalidModel(format!(
                "phase-barrier walk needs an even cell, got M = {m}"
            )));
        }
        let phases = (0..m).map(|n| if n < m / 2 { v } else { -v }).collect();
        Self::checked(phases, beta, h, WalkKind::BarrierPhase { v })
    }

    fn checked(phases: Vec<f64>, beta: f64, h: f64, kind: WalkKind) -> Result<Self> {
        if phases.is_empty() || phases.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidModel("walk phases must be finite and non-empty".into()));
        }
        if !(beta > 0.0 && beta <= PI / 2.0) {
            return Err(Error::InvalidModel(format!("coupler angle must lie in (0, π/2], got {beta}")));
        }
        if !h.is_finite() {
            return Err(Error::InvalidModel(format!("gauge field must be finite, got h = {h}")));
        }
        Ok(Self { beta, h, phases, kind })
    }

    pub fn with_h(&self, h: f64) -> Self {
        Self {
            h,
            ..self.clone()
        }
    }

    pub fn m(&self) -> usize {
        self.phases.len()
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn kind(&self) -> WalkKind {
        self.kind
    }

    /// For the phase-barrier walk: whether `π/2 − β < V < β`, the regime in
    /// which the closed-form critical field applies.
    pub fn barrier_condition(&self) -> Option<bool> {
        match self.kind {
            WalkKind::BarrierPhase { v } => Some(PI / 2.0 - self.beta < v && v < self.beta),
            _ => None,
        }
    }
}

/// Amplitudes in the short (`u`) and long (`v`) loops after `m` steps.
#[derive(Clone, Debug, PartialEq)]
pub struct WalkState {
    pub m: u64,
    pub u: Vec<Complex64>,
    pub v: Vec<Complex64>,
}

impl WalkState {
    /// `u = δ_{n,n0}`, `v = 0`.
    pub fn pulse(sites: usize, n0: usize) -> Result<Self> {
        if n0 >= sites {
            return Err(Error::Domain(format!("site {n0} outside a ring of {sites}")));
        }
        let mut u = vec![Complex64::new(0.0, 0.0); sites];
        u[n0] = Complex64::new(1.0, 0.0);
        Ok(Self {
            m: 0,
            u,
            v: vec![Complex64::new(0.0, 0.0); sites],
        })
    }

    pub fn power(&self) -> f64 {
        self.u.iter().chain(&self.v).map(|z| z.norm_sqr()).sum()
    }

    /// `|u_n|² + |v_n|²`.
    pub fn intensities(&self) -> Vec<f64> {
        self.u.iter().zip(&self.v).map(|(a, b)| a.norm_sqr() + b.norm_sqr()).collect()
    }
}

/// One step of the walk on the `M`-site ring.
pub fn walk_step(state: &WalkState, spec: &WalkSpec) -> WalkState {
    let m = spec.m();
    assert_eq!(state.u.len(), m, "state and spec disagree on the ring size");
    let (c, s) = (spec.beta.cos(), spec.beta.sin());
    let (gain, loss) = (spec.h.exp(), (-spec.h).exp());
    let mut u = Vec::with_capacity(m);
    let mut v = Vec::with_capacity(m);
    for n in 0..m {
        let next = (n + 1) % m;
        let prev = (n + m - 1) % m;
        let phase = Complex64::from_polar(1.0, spec.phases[n]);
        u.push((state.u[next] * c + I * s * state.v[next]) * phase * gain);
        v.push((state.v[prev] * c + I * s * state.u[prev]) * phase * loss);
    }
    WalkState {
        m: state.m + 1,
        u,
        v,
    }
}

/// Step matrix acting on `(u_1..u_M, v_1..v_M)` for a possibly complex Bloch
/// number `kappa`.
pub fn walk_matrix(phases: &[f64], beta: f64, h: f64, kappa: Complex64) -> CMatrix {
    let m = phases.len();
    let (c, s) = (beta.cos(), beta.sin());
    let (gain, loss) = (h.exp(), (-h).exp());
    let twist = (I * kappa * m as f64).exp();
    let mut a = CMatrix::zeros(2 * m);
    for n in 0..m {
        let phase = Complex64::from_polar(1.0, phases[n]);
        // Θ: u_{n+1}, wrapping with e^{iκM}
        let (fwd, fwd_factor) = if n + 1 < m { (n + 1, Complex64::new(1.0, 0.0)) } else { (0, twist) };
        // Θ†: v_{n−1}, wrapping with e^{−iκM}
        let (back, back_factor) = if n > 0 { (n - 1, Complex64::new(1.0, 0.0)) } else { (m - 1, 1.0 / twist) };
        a[(n, fwd)] += phase * gain * c * fwd_factor;
        a[(n, m + fwd)] += phase * gain * I * s * fwd_factor;
        a[(m + n, back)] += phase * loss * I * s * back_factor;
        a[(m + n, m + back)] += phase * loss * c * back_factor;
    }
    a
}

pub fn walk_band_matrix(spec: &WalkSpec, k: f64) -> CMatrix {
    walk_matrix(&spec.phases, spec.beta, spec.h, Complex64::new(k, 0.0))
}

/// `E = i ln λ` on the principal branch `Re E ∈ (−π, π]`.
pub fn quasienergy(lambda: Complex64) -> Result<Complex64> {
    let r = lambda.norm();
    if r == 0.0 || !r.is_finite() {
        return Err(Error::Domain(format!("step eigenvalue {lambda} has no quasi-energy")));
    }
    let mut re = -lambda.arg();
    if re <= -PI {
        re += 2.0 * PI;
    }
    Ok(Complex64::new(re, r.ln()))
}

/// Wraps a real quasi-energy into `(−π, π]`.
pub fn wrap_quasienergy(e: f64) -> f64 {
    let w = e - 2.0 * PI * ((e + PI) / (2.0 * PI)).floor();
    if w <= -PI {
        w + 2.0 * PI
    } else {
        w
    }
}

/// Step eigenvalues `λ` at one Bloch number, sorted by `(Re, Im)`.
pub fn walk_multipliers(spec: &WalkSpec, k: f64) -> Result<Vec<Complex64>> {
    eigen::eigenvalues(&walk_band_matrix(spec, k)).map_err(Error::at_k(k))
}

/// The `2M` quasi-energies at one Bloch number.
pub fn walk_quasienergies(spec: &WalkSpec, k: f64) -> Result<Vec<Complex64>> {
    walk_multipliers(spec, k)?.into_iter().map(quasienergy).collect()
}

#[derive(Clone, Debug)]
pub struct QuasiEnergySpectrum {
    pub m: usize,
    pub h: f64,
    pub k_grid: Vec<f64>,
    /// `bands[l][i]`, `2M` bands, threaded through `k` by continuity of `λ`.
    pub bands: Vec<Vec<Complex64>>,
    /// Unit-norm `(U, V)` vectors, `eigenvectors[l][i]`, when requested.
    pub eigenvectors: Option<Vec<Vec<Vec<Complex64>>>>,
}

impl QuasiEnergySpectrum {
    pub fn max_im(&self) -> f64 {
        self.bands.iter().flatten().fold(0.0_f64, |m, e| m.max(e.im.abs()))
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64, Complex64)> + '_ {
        self.bands.iter().enumerate().flat_map(move |(l, band)| {
            band.iter().zip(&self.k_grid).map(move |(e, &k)| (l, k, *e))
        })
    }
}

pub fn walk_spectrum(spec: &WalkSpec, nk: usize, want_vectors: bool) -> Result<QuasiEnergySpectrum> {
    if nk < 2 {
        return Err(Error::Domain(format!("need at least 2 k points, got {nk}")));
    }
    let m = spec.m();
    let grid = k_grid(m, nk);
    let (lambdas, vectors) = if want_vectors {
        let decs: Vec<_> = grid
            .par_iter()
            .map(|&k| eigen::eigenpairs(&walk_band_matrix(spec, k)).map_err(Error::at_k(k)))
            .collect::<Result<_>>()?;
        let (v, w): (Vec<_>, Vec<_>) = decs.into_iter().map(|d| (d.eigenvalues, d.eigenvectors)).unzip();
        (v, Some(w))
    } else {
        let v = grid
            .par_iter()
            .map(|&k| walk_multipliers(spec, k))
            .collect::<Result<Vec<_>>>()?;
        (v, None)
    };
    let perm = continue_bands(&lambdas, index_nearest_zero(&grid));
    let bands = (0..2 * m)
        .map(|l| (0..nk).map(|i| quasienergy(lambdas[i][perm[i][l]])).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    let eigenvectors = vectors.map(|w| {
        (0..2 * m)
            .map(|l| (0..nk).map(|i| w[i][perm[i][l]].clone()).collect())
            .collect()
    });
    Ok(QuasiEnergySpectrum {
        m,
        h: spec.h,
        k_grid: grid,
        bands,
        eigenvectors,
    })
}

/// `max_{k,l} |ln|λ||`, which does not depend on the quasi-energy branch.
pub fn walk_max_im(spec: &WalkSpec, nk: usize) -> Result<f64> {
    if nk < 2 {
        return Err(Error::Domain(format!("need at least 2 k points, got {nk}")));
    }
    let per_k = k_grid(spec.m(), nk)
        .par_iter()
        .map(|&k| walk_multipliers(spec, k))
        .collect::<Result<Vec<_>>>()?;
    Ok(per_k.iter().flatten().fold(0.0_f64, |m, l| m.max(l.norm().ln().abs())))
}

pub fn walk_gauge_scan(family: &WalkSpec, h_grid: &[f64], nk: usize, thresholds: Thresholds) -> Result<GaugeScan> {
    thresholds.validate()?;
    check_h_grid(h_grid)?;
    let max_im = h_grid
        .par_iter()
        .map(|&h| walk_max_im(&family.with_h(h), nk))
        .collect::<Result<Vec<_>>>()?;
    GaugeScan::from_curve(h_grid.to_vec(), max_im, thresholds)
}

/// Quasi-energies of the electric walk in the closed form printed for odd
/// `M`: `2πl/M + (cos β)^M cos(kM)`, `l = 1..=M`, unwrapped.
pub fn electric_dispersion(m: usize, beta: f64, k: f64, l: usize) -> Result<f64> {
    if m % 2 == 0 {
        return Err(Error::Domain(format!("closed form is only available for odd M, got {m}")));
    }
    if l == 0 || l > m {
        return Err(Error::Domain(format!("band index must lie in 1..={m}, got {l}")));
    }
    let mf = m as f64;
    Ok(2.0 * PI * l as f64 / mf + beta.cos().powi(m as i32) * (k * mf).cos())
}

/// All `2M` quasi-energies of an odd-`M` electric walk (coprime `R`) at a
/// possibly complex Bloch number, `E = 2πl/M ± acos[(cos β)^M cos(κM)]/M`,
/// on the principal branch.
pub fn electric_quasienergies(m: usize, beta: f64, kappa: Complex64) -> Result<Vec<Complex64>> {
    if m % 2 == 0 {
        return Err(Error::Domain(format!("closed form is only available for odd M, got {m}")));
    }
    let mf = m as f64;
    let x = (kappa * mf).cos() * beta.cos().powi(m as i32);
    let theta = x.acos() / mf;
    let mut out = Vec::with_capacity(2 * m);
    for l in 0..m {
        let base = 2.0 * PI * l as f64 / mf;
        for e in [base + theta, base - theta] {
            out.push(Complex64::new(wrap_quasienergy(e.re), e.im));
        }
    }
    Ok(out)
}

/// Critical gain/loss: `−ln|cos β|` for the electric walk and
/// `½ acosh[cos(π − β − 2V) / cos β]` for the phase-barrier walk.
pub fn predicted_hc_walk(kind: WalkKind, beta: f64) -> Result<f64> {
    if !(beta > 0.0 && beta < PI / 2.0) {
        return Err(Error::Domain(format!("coupler angle must lie in (0, π/2), got {beta}")));
    }
    match kind {
        WalkKind::Electric { .. } => Ok(-beta.cos().abs().ln()),
        WalkKind::BarrierPhase { v } => {
            let tol = 1e-12;
            if v < PI / 2.0 - beta - tol || v > beta + tol {
                return Err(Error::Domain(format!(
                    "closed form needs π/2 − β <= V <= β, got V = {v}, β = {beta}"
                )));
            }
            let arg = (PI - beta - 2.0 * v).cos() / beta.cos();
            if arg < 1.0 - tol {
                return Err(Error::Domain(format!("acosh argument {arg} is below 1")));
            }
            Ok(0.5 * arg.max(1.0).acosh())
        }
        WalkKind::Custom => Err(Error::Domain("no closed-form critical field for custom phases".into())),
    }
}

/// IPR statistics over all `2M·Nk` walk eigenstates, with `(U_n, V_n)`
/// grouped per site.
pub fn walk_ipr_summary(spec: &WalkSpec, nk: usize, keep_states: bool) -> Result<IprSummary> {
    let s = walk_spectrum(spec, nk, true)?;
    let vectors = s.eigenvectors.as_ref().expect("vectors were requested");
    let mut states = Vec::with_capacity(s.bands.len() * nk);
    for (l, band) in s.bands.iter().enumerate() {
        for (i, e) in band.iter().enumerate() {
            states.push(StateIpr {
                l,
                k: s.k_grid[i],
                ipr: ipr(&vectors[l][i], 2)?,
                re: e.re,
                im: e.im,
            });
        }
    }
    IprSummary::from_states(spec.h, states, keep_states)
}

pub fn walk_ipr_scan(family: &WalkSpec, h_grid: &[f64], nk: usize) -> Result<Vec<IprSummary>> {
    check_h_grid(h_grid)?;
    h_grid
        .par_iter()
        .map(|&h| walk_ipr_summary(&family.with_h(h), nk, false))
        .collect()
}

/// Power and spreading of a single-site excitation over time.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WalkTrace {
    pub n0: usize,
    /// `P^{(m)}` for `m = 0..=m_max`; may overflow to `inf` far above the
    /// transition, in which case `log_power` remains exact.
    pub power: Vec<f64>,
    pub log_power: Vec<f64>,
    /// Second moment about `n0` with the minimal-image ring distance.
    pub second_moment: Vec<f64>,
    pub sigma: Vec<f64>,
    /// Normalized site intensities `(|u_n|² + |v_n|²)/P` per step.
    pub intensity: Option<Vec<Vec<f64>>>,
}

impl WalkTrace {
    pub fn steps(&self) -> usize {
        self.power.len() - 1
    }

    /// `sup_{m ≥ 1} ln P^{(m)} / m`.
    pub fn max_growth_rate(&self) -> f64 {
        self.log_power
            .iter()
            .enumerate()
            .skip(1)
            .map(|(m, lp)| lp / m as f64)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Average slope of `ln P` over the last `window` steps.
    pub fn terminal_slope(&self, window: usize) -> f64 {
        let n = self.log_power.len() - 1;
        let w = window.clamp(1, n.max(1));
        (self.log_power[n] - self.log_power[n - w]) / w as f64
    }

    pub fn max_sigma(&self) -> f64 {
        self.sigma.iter().copied().fold(0.0, f64::max)
    }
}

/// `min(|a − b|, M − |a − b|)`.
pub fn ring_distance(a: usize, b: usize, m: usize) -> usize {
    let d = a.abs_diff(b) % m;
    d.min(m - d)
}

/// Iterates the walk from `u = δ_{n,n0}`. Amplitudes are renormalized every
/// step and the logarithm of the power is accumulated separately.
pub fn walk_dynamics(spec: &WalkSpec, n0: usize, m_max: usize, keep_intensity: bool) -> Result<WalkTrace> {
    let m = spec.m();
    let mut state = WalkState::pulse(m, n0)?;
    let d2: Vec<f64> = (0..m).map(|n| (ring_distance(n, n0, m) as f64).powi(2)).collect();
    let mut trace = WalkTrace {
        n0,
        power: Vec::with_capacity(m_max + 1),
        log_power: Vec::with_capacity(m_max + 1),
        second_moment: Vec::with_capacity(m_max + 1),
        sigma: Vec::with_capacity(m_max + 1),
        intensity: keep_intensity.then(|| Vec::with_capacity(m_max + 1)),
    };
    let mut log_power = 0.0;
    for step in 0..=m_max {
        if step > 0 {
            state = walk_step(&state, spec);
            let p = state.power();
            if !(p > 0.0 && p.is_finite()) {
                return Err(Error::Domain(format!("walk power degenerated to {p} at step {step}")));
            }
            log_power += p.ln();
            let norm = p.sqrt().recip();
            for z in state.u.iter_mut().chain(state.v.iter_mut()) {
                *z *= norm;
            }
        }
        let w = state.intensities();
        let total: f64 = w.iter().sum();
        let m2 = w.iter().zip(&d2).map(|(a, b)| a * b).sum::<f64>() / total;
        trace.power.push(log_power.exp());
        trace.log_power.push(log_power);
        trace.second_moment.push(m2);
        trace.sigma.push(m2.sqrt());
        if let Some(map) = trace.intensity.as_mut() {
            map.push(w.iter().map(|x| x / total).collect());
        }
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        let d = (a - b).norm();
        let wrapped = Complex64::new(wrap_quasienergy(a.re - b.re), a.im - b.im).norm();
        d.min(wrapped) <= tol
    }

    #[test]
    fn pulse_moves_one_site_each_way() {
        let spec = WalkSpec::custom(vec![0.1, 0.2, 0.3, 0.4, 0.5], 0.7, 0.3).unwrap();
        let s = walk_step(&WalkState::pulse(5, 2).unwrap(), &spec);
        for n in 0..5 {
            if n == 1 {
                let want = Complex64::from_polar(0.7f64.cos() * 0.3f64.exp(), 0.2);
                assert!((s.u[n] - want).norm() < 1e-15);
            } else {
                assert_eq!(s.u[n].norm(), 0.0);
            }
            if n == 3 {
                let want = I * 0.7f64.sin() * Complex64::from_polar((-0.3f64).exp(), 0.4);
                assert!((s.v[n] - want).norm() < 1e-15);
            } else {
                assert_eq!(s.v[n].norm(), 0.0);
            }
        }
        assert_eq!(s.m, 1);
    }

    #[test]
    fn full_exchange_at_right_angle() {
        let spec = WalkSpec::custom(vec![0.0; 6], PI / 2.0, 0.2).unwrap();
        let s1 = walk_step(&WalkState::pulse(6, 0).unwrap(), &spec);
        assert!(s1.u.iter().all(|z| z.norm() < 1e-15));
        assert!((s1.v[1].norm() - (-0.2f64).exp()).abs() < 1e-15);
        // second step swaps back into u at the original site
        let s2 = walk_step(&s1, &spec);
        assert!((s2.u[0].norm() - 1.0).abs() < 1e-15);
        assert!(s2.v.iter().all(|z| z.norm() < 1e-15));
    }

    #[test]
    fn smallest_cell_matrix() {
        let (phi, beta, h, k) = (0.3, 0.9, 0.2, 0.4);
        let spec = WalkSpec::custom(vec![phi], beta, h).unwrap();
        let a = walk_band_matrix(&spec, k);
        let e = Complex64::from_polar(1.0, phi);
        let want = [
            [e * h.exp() * beta.cos() * Complex64::from_polar(1.0, k), I * e * h.exp() * beta.sin() * Complex64::from_polar(1.0, k)],
            [I * e * (-h).exp() * beta.sin() * Complex64::from_polar(1.0, -k), e * (-h).exp() * beta.cos() * Complex64::from_polar(1.0, -k)],
        ];
        for i in 0..2 {
            for j in 0..2 {
                assert!((a[(i, j)] - want[i][j]).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn unit_determinant_and_unitarity() {
        let spec = WalkSpec::electric(5, 3, 1.0, 0.4).unwrap();
        let a = walk_band_matrix(&spec, 0.2);
        assert!((a.determinant().norm() - 1.0).abs() < 1e-12);
        let u = walk_band_matrix(&spec.with_h(0.0), 0.2);
        let p = u.adjoint().matmul(&u);
        for i in 0..10 {
            for j in 0..10 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((p[(i, j)] - Complex64::new(want, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn matrix_reproduces_stepping() {
        let spec = WalkSpec::barrier_phase(6, 0.8, 1.0, 0.35).unwrap();
        let mut s = WalkState::pulse(6, 1).unwrap();
        s.v[4] = Complex64::new(0.2, -0.5);
        let next = walk_step(&s, &spec);
        let x: Vec<_> = s.u.iter().chain(&s.v).copied().collect();
        let y = walk_band_matrix(&spec, 0.0).mul_vec(&x);
        for n in 0..6 {
            assert!((y[n] - next.u[n]).norm() < 1e-14);
            assert!((y[6 + n] - next.v[n]).norm() < 1e-14);
        }
    }

    #[test]
    fn two_band_closed_form() {
        let beta = PI / 3.0;
        let spec = WalkSpec::custom(vec![0.0], beta, 0.0).unwrap();
        let e = walk_quasienergies(&spec, 0.0).unwrap();
        assert!(e.iter().any(|x| close(*x, Complex64::new(PI / 3.0, 0.0), 1e-12)));
        assert!(e.iter().any(|x| close(*x, Complex64::new(-PI / 3.0, 0.0), 1e-12)));
    }

    #[test]
    fn electric_exact_form_matches_solver() {
        for (m, r) in [(3, 1), (3, 2), (5, 2), (5, 3), (7, 3)] {
            let beta = 1.0;
            for (k, h) in [(0.0, 0.0), (0.1, 0.3), (-0.2, 0.8)] {
                let spec = WalkSpec::electric(m, r, beta, h).unwrap();
                let got = walk_quasienergies(&spec, k).unwrap();
                let want = electric_quasienergies(m, beta, Complex64::new(k, -h)).unwrap();
                for w in &want {
                    assert!(got.iter().any(|g| close(*g, *w, 1e-9)), "M={m} R={r} k={k} h={h}: {w}");
                }
            }
        }
    }

    #[test]
    fn printed_dispersion_values() {
        let beta = PI / 3.0;
        let e = electric_dispersion(13, beta, 0.0, 13).unwrap();
        assert!((e - 2.0 * PI - 2f64.powi(-13)).abs() < 1e-12);
        let e = electric_dispersion(13, beta, PI / 26.0, 4).unwrap();
        assert!((e - 2.0 * PI * 4.0 / 13.0).abs() < 1e-12);
        assert!(electric_dispersion(8, beta, 0.0, 1).is_err());
        assert!(electric_dispersion(13, beta, 0.0, 0).is_err());
    }

    #[test]
    fn critical_fields() {
        let b = PI / 3.0;
        assert!((predicted_hc_walk(WalkKind::Electric { r: 34 }, b).unwrap() - 2f64.ln()).abs() < 1e-12);
        let hc = predicted_hc_walk(WalkKind::BarrierPhase { v: PI / 4.0 }, b).unwrap();
        assert!((hc - 0.5 * 3f64.sqrt().acosh()).abs() < 1e-12);
        assert!((hc - 0.573).abs() < 1e-3);
        let edge = predicted_hc_walk(WalkKind::BarrierPhase { v: PI / 2.0 - b }, b).unwrap();
        assert!(edge.abs() < 1e-6);
        assert!(predicted_hc_walk(WalkKind::BarrierPhase { v: 0.1 }, b).is_err());
    }

    #[test]
    fn barrier_condition_flag() {
        let b = PI / 3.0;
        let ok = WalkSpec::barrier_phase(8, PI / 4.0, b, 0.0).unwrap();
        assert_eq!(ok.barrier_condition(), Some(true));
        let bad = WalkSpec::barrier_phase(8, 0.1, b, 0.0).unwrap();
        assert_eq!(bad.barrier_condition(), Some(false));
        assert!(WalkSpec::barrier_phase(7, 0.1, b, 0.0).is_err());
    }

    #[test]
    fn electric_phases_wrap() {
        let s = WalkSpec::electric(3, 1, 1.0, 0.0).unwrap();
        let want = [2.0 * PI / 3.0, 4.0 * PI / 3.0, 0.0];
        for (a, b) in s.phases().iter().zip(want) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn principal_branch() {
        let e = quasienergy(Complex64::new(-1.0, 0.0)).unwrap();
        assert!((e.re - PI).abs() < 1e-15);
        let e = quasienergy(Complex64::from_polar(2.0, 0.5)).unwrap();
        assert!((e.re + 0.5).abs() < 1e-15 && (e.im - 2f64.ln()).abs() < 1e-15);
        assert!(quasienergy(Complex64::new(0.0, 0.0)).is_err());
        assert_eq!(wrap_quasienergy(-PI), PI);
        assert!((wrap_quasienergy(3.0 * PI + 0.1) - (-PI + 0.1)).abs() < 1e-12);
    }

    #[test]
    fn ring_distances() {
        assert_eq!(ring_distance(0, 9, 10), 1);
        assert_eq!(ring_distance(2, 7, 10), 5);
        assert_eq!(ring_distance(3, 3, 10), 0);
    }

    #[test]
    fn lossless_walk_conserves_power() {
        let spec = WalkSpec::electric(13, 8, PI / 3.0, 0.0).unwrap();
        let t = walk_dynamics(&spec, 4, 200, true).unwrap();
        assert!(t.log_power.iter().all(|x| x.abs() < 1e-11));
        assert_eq!(t.intensity.as_ref().unwrap().len(), 201);
        assert!(t.second_moment.iter().all(|&m2| m2 <= 36.0 + 1e-9));
    }
}
