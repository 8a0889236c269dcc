//! Superlattice models and their Bloch Hamiltonians.
//!
//! Sites are numbered `n = 1..=M` in formulas and stored at index `n - 1`.
//! The Bloch matrix follows the tight-binding equation
//! `E φ_n = J_L φ_{n+1} + J_R φ_{n-1} + V_n φ_n` with `J_L = J e^{h}`,
//! `J_R = J e^{-h}` and the twisted boundary condition
//! `φ_{n+M} = φ_n e^{ikM}`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::eigen::CMatrix;
use crate::{Error, Result};

/// Potential model identity carried alongside the generated values.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PotentialKind {
    /// `V_1 = A`, all other sites zero.
    Impurity { a: f64 },
    /// `V_n = 2V cos(2π (R/M) n)`.
    Incommensurate { v: f64, r: usize },
    /// `+V` on the first half of the cell, `−V` on the second half.
    Barrier { v: f64 },
    Custom,
}

/// On-site potential over one unit cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PotentialSequence {
    values: Vec<f64>,
    kind: PotentialKind,
}

impl PotentialSequence {
    pub fn custom(values: Vec<f64>) -> Result<Self> {
        check_cell(values.len())?;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidModel("potential entries must be finite".into()));
        }
        Ok(Self {
            values,
            kind: PotentialKind::Custom,
        })
    }

    /// Clean lattice, `V_n = 0`.
    pub fn clean(m: usize) -> Result<Self> {
        Self::custom(vec![0.0; m])
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn kind(&self) -> PotentialKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

fn check_cell(m: usize) -> Result<()> {
    if m < 2 {
        return Err(Error::InvalidModel(format!("unit cell needs M >= 2 sites, got {m}")));
    }
    Ok(())
}

pub fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Generates the potential of `kind` on an `m`-site cell.
pub fn build_potential(kind: PotentialKind, m: usize) -> Result<PotentialSequence> {
    check_cell(m)?;
    let values = match kind {
        PotentialKind::Impurity { a } => {
            let mut v = vec![0.0; m];
            v[0] = a;
            v
        }
        PotentialKind::Incommensurate { v, r } => {
            if r == 0 || r >= m {
                return Err(Error::InvalidApproximant {
                    r,
                    m,
                    reason: "need 1 <= R < M".into(),
                });
            }
            if gcd(r, m) != 1 {
                return Err(Error::InvalidApproximant {
                    r,
                    m,
                    reason: "R and M must be coprime".into(),
                });
            }
            let alpha = r as f64 / m as f64;
            (1..=m).map(|n| 2.0 * v * (2.0 * PI * alpha * n as f64).cos()).collect()
        }
        PotentialKind::Barrier { v } => {
            if m % 2 != 0 {
                return Err(Error::InvalidModel(format!(
                    "barrier superlattice needs an even cell, got M = {m}"
                )));
            }
            (0..m).map(|n| if n < m / 2 { v } else { -v }).collect()
        }
        PotentialKind::Custom => {
            return Err(Error::InvalidModel(
                "custom potentials are built with PotentialSequence::custom".into(),
            ))
        }
    };
    if values.iter().any(|x: &f64| !x.is_finite()) {
        return Err(Error::InvalidModel("potential parameters must be finite".into()));
    }
    Ok(PotentialSequence { values, kind })
}

/// Fibonacci numbers as used for golden-mean approximants:
/// `p = 0, 1, 2, 3, 5, 8, 13, …` (no repeated 1).
fn fibonacci(s: usize) -> Option<u64> {
    if s < 2 {
        return Some(s as u64);
    }
    let (mut a, mut b) = (1u64, 2u64);
    for _ in 2..s {
        (a, b) = (b, a.checked_add(b)?);
    }
    Some(b)
}

/// `(R, M) = (p_{s−1}, p_s)`, so that `R/M → (√5 − 1)/2`.
pub fn fibonacci_approximant(s: usize) -> Result<(usize, usize)> {
    if s < 2 {
        return Err(Error::Domain(format!("Fibonacci index must be >= 2, got {s}")));
    }
    let overflow = || Error::Domain(format!("Fibonacci index {s} overflows"));
    let r = fibonacci(s - 1).ok_or_else(overflow)?;
    let m = fibonacci(s).ok_or_else(overflow)?;
    let r = usize::try_from(r).map_err(|_| overflow())?;
    let m = usize::try_from(m).map_err(|_| overflow())?;
    Ok((r, m))
}

/// The `R` that pairs with a Fibonacci cell size `m`, if `m` is one.
pub fn fibonacci_partner(m: usize) -> Option<usize> {
    (2..90)
        .map_while(|s| fibonacci_approximant(s).ok())
        .take_while(|&(_, mm)| mm <= m)
        .find(|&(_, mm)| mm == m)
        .map(|(r, _)| r)
}

/// A potential model with its parameters but without a cell size, so the
/// same physics can be instantiated at several `M`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelFamily {
    Impurity { a: f64 },
    /// `R` is the Fibonacci partner of `M`.
    Incommensurate { v: f64 },
    Barrier { v: f64 },
}

impl ModelFamily {
    pub fn kind(&self, m: usize) -> Result<PotentialKind> {
        Ok(match *self {
            ModelFamily::Impurity { a } => PotentialKind::Impurity { a },
            ModelFamily::Barrier { v } => PotentialKind::Barrier { v },
            ModelFamily::Incommensurate { v } => {
                let r = fibonacci_partner(m).ok_or_else(|| Error::InvalidApproximant {
                    r: 0,
                    m,
                    reason: "M is not a Fibonacci number".into(),
                })?;
                PotentialKind::Incommensurate { v, r }
            }
        })
    }

    pub fn potential(&self, m: usize) -> Result<PotentialSequence> {
        build_potential(self.kind(m)?, m)
    }

    pub fn spec(&self, j: f64, h: f64, m: usize) -> Result<SuperlatticeSpec> {
        SuperlatticeSpec::new(j, h, self.potential(m)?)
    }
}

/// A superlattice: hopping `J`, imaginary gauge field `h` and one cell of
/// on-site potential.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuperlatticeSpec {
    j: f64,
    h: f64,
    potential: PotentialSequence,
}

impl SuperlatticeSpec {
    pub fn new(j: f64, h: f64, potential: PotentialSequence) -> Result<Self> {
        if !(j.is_finite() && j > 0.0) {
            return Err(Error::InvalidModel(format!("hopping must be positive, got J = {j}")));
        }
        if !h.is_finite() {
            return Err(Error::InvalidModel(format!("gauge field must be finite, got h = {h}")));
        }
        check_cell(potential.len())?;
        Ok(Self { j, h, potential })
    }

    /// Same lattice at a different gauge field.
    pub fn with_h(&self, h: f64) -> Self {
        Self {
            h,
            ..self.clone()
        }
    }

    pub fn m(&self) -> usize {
        self.potential.len()
    }

    pub fn j(&self) -> f64 {
        self.j
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn potential(&self) -> &PotentialSequence {
        &self.potential
    }

    /// `J_L = J e^{h}`, multiplying `φ_{n+1}`.
    pub fn left_hopping(&self) -> f64 {
        self.j * self.h.exp()
    }

    /// `J_R = J e^{−h}`, multiplying `φ_{n−1}`.
    pub fn right_hopping(&self) -> f64 {
        self.j * (-self.h).exp()
    }
}

/// Reduces `k` into `[−π/M, π/M)`.
pub fn wrap_k(k: f64, m: usize) -> f64 {
    let period = 2.0 * PI / m as f64;
    let half = PI / m as f64;
    let wrapped = k - period * ((k + half) / period).floor();
    if wrapped >= half {
        wrapped - period
    } else {
        wrapped
    }
}

/// Bloch Hamiltonian at one quasi-momentum.
#[derive(Clone, Debug)]
pub struct BlochMatrix {
    pub k: f64,
    pub matrix: CMatrix,
}

impl BlochMatrix {
    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }
}

pub fn assemble_bloch(spec: &SuperlatticeSpec, k: f64) -> BlochMatrix {
    let k = wrap_k(k, spec.m());
    BlochMatrix {
        k,
        matrix: bloch_matrix(spec.potential.values(), spec.j, spec.h, Complex64::new(k, 0.0)),
    }
}

/// Bloch matrix for a possibly complex quasi-momentum `kappa`. With
/// `kappa = k − ih` and zero gauge field this is similar to the
/// real-`k` matrix at gauge field `h`.
pub fn bloch_matrix(potential: &[f64], j: f64, h: f64, kappa: Complex64) -> CMatrix {
    let m = potential.len();
    let jl = Complex64::new(j * h.exp(), 0.0);
    let jr = Complex64::new(j * (-h).exp(), 0.0);
    let twist = (Complex64::i() * kappa * m as f64).exp();
    let mut a = CMatrix::zeros(m);
    for (n, &v) in potential.iter().enumerate() {
        a[(n, n)] = Complex64::new(v, 0.0);
    }
    for n in 0..m - 1 {
        a[(n, n + 1)] += jl;
        a[(n + 1, n)] += jr;
    }
    a[(0, m - 1)] += jr / twist;
    a[(m - 1, 0)] += jl * twist;
    a
}

/// Open-chain Hamiltonian: the Bloch matrix without corner terms, at `h = 0`.
pub fn open_chain(potential: &[f64], j: f64) -> CMatrix {
    let m = potential.len();
    let mut a = CMatrix::zeros(m);
    for (n, &v) in potential.iter().enumerate() {
        a[(n, n)] = Complex64::new(v, 0.0);
    }
    for n in 0..m.saturating_sub(1) {
        a[(n, n + 1)] = Complex64::new(j, 0.0);
        a[(n + 1, n)] = Complex64::new(j, 0.0);
    }
    a
}

/// Plane-wave band `l` of the clean lattice: `2J cos(k + 2πl/M − ih)`.
pub fn clean_dispersion(m: usize, j: f64, k: f64, h: f64, l: usize) -> Result<Complex64> {
    if l >= m {
        return Err(Error::Domain(format!("band index {l} out of range for M = {m}")));
    }
    let q = Complex64::new(k + 2.0 * PI * l as f64 / m as f64, -h);
    Ok(2.0 * j * q.cos())
}
