//! Inverse participation ratios of Bloch eigenstates within one unit cell.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::lattice::SuperlatticeSpec;
use crate::spectra::{band_structure, check_h_grid};
use crate::{Error, Result};

/// `Σ_n w_n² / (Σ_n w_n)²` with `w_n` the weight of site `n`.
///
/// With `components_per_site = 2` the vector interleaves `(U_n, V_n)` and
/// the numerator collects `|U_n|⁴ + |V_n|⁴` for each site.
pub fn ipr(v: &[Complex64], components_per_site: usize) -> Result<f64> {
    if !matches!(components_per_site, 1 | 2) {
        return Err(Error::Domain(format!(
            "components per site must be 1 or 2, got {components_per_site}"
        )));
    }
    if v.len() % components_per_site != 0 {
        return Err(Error::Domain("vector length is not a whole number of sites".into()));
    }
    // both layouts reduce to the same sums over components
    let scale = v.iter().fold(0.0_f64, |m, z| m.max(z.norm()));
    if scale == 0.0 || !scale.is_finite() {
        return Err(Error::Domain("IPR of a zero or non-finite vector".into()));
    }
    let (mut num, mut den) = (0.0, 0.0);
    for z in v {
        let p = (z / scale).norm_sqr();
        num += p * p;
        den += p;
    }
    Ok(num / (den * den))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateIpr {
    pub l: usize,
    pub k: f64,
    pub ipr: f64,
    pub re: f64,
    pub im: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IprSummary {
    pub h: f64,
    pub ipr_max: f64,
    pub ipr_min: f64,
    /// Uniform average over every `(l, k)` state.
    pub ipr_mean: f64,
    pub per_state: Option<Vec<StateIpr>>,
}

impl IprSummary {
    pub fn from_states(h: f64, states: Vec<StateIpr>, keep_states: bool) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::Domain("no states to summarize".into()));
        }
        let ipr_max = states.iter().map(|s| s.ipr).fold(f64::NEG_INFINITY, f64::max);
        let ipr_min = states.iter().map(|s| s.ipr).fold(f64::INFINITY, f64::min);
        let ipr_mean = states.iter().map(|s| s.ipr).sum::<f64>() / states.len() as f64;
        Ok(Self {
            h,
            ipr_max,
            ipr_min,
            ipr_mean,
            per_state: keep_states.then_some(states),
        })
    }
}

/// IPR statistics over all Bloch eigenstates on an `nk`-point grid.
pub fn ipr_summary(spec: &SuperlatticeSpec, nk: usize, keep_states: bool) -> Result<IprSummary> {
    let s = band_structure(spec, nk, true)?;
    let vectors = s.eigenvectors.as_ref().expect("vectors were requested");
    let mut states = Vec::with_capacity(s.m * nk);
    for (l, band) in s.bands.iter().enumerate() {
        for (i, e) in band.iter().enumerate() {
            states.push(StateIpr {
                l,
                k: s.k_grid[i],
                ipr: ipr(&vectors[l][i], 1)?,
                re: e.re,
                im: e.im,
            });
        }
    }
    IprSummary::from_states(spec.h(), states, keep_states)
}

/// `ipr_summary` at each `h` of the grid (per-state data dropped).
pub fn ipr_scan(family: &SuperlatticeSpec, h_grid: &[f64], nk: usize) -> Result<Vec<IprSummary>> {
    check_h_grid(h_grid)?;
    h_grid
        .par_iter()
        .map(|&h| ipr_summary(&family.with_h(h), nk, false))
        .collect()
}

/// Field at which `ipr_mean` first falls below the geometric mean of its
/// value at the first grid point and `1/M`, interpolated linearly. `None`
/// when there are fewer than five points or no such drop.
pub fn localization_transition(summaries: &[IprSummary], m: usize) -> Option<f64> {
    if summaries.len() < 5 || m == 0 {
        return None;
    }
    let start = summaries[0].ipr_mean;
    let level = (start / m as f64).sqrt();
    if start <= level {
        return None;
    }
    let i = summaries.iter().position(|s| s.ipr_mean < level)?;
    let (a, b) = (&summaries[i - 1], &summaries[i]);
    Some(a.h + (a.ipr_mean - level) / (a.ipr_mean - b.ipr_mean) * (b.h - a.h))
}
