//! Invariant checks shared by the property suite and the acceptance run.
//! Each returns a one-line summary on success and a description on failure.

use std::f64::consts::PI;

use nhsl::eigen::{eigenpairs, eigenvalues, CMatrix};
use nhsl::lattice::{bloch_matrix, build_potential, gcd, PotentialKind, PotentialSequence, SuperlatticeSpec};
use nhsl::localization::ipr_summary;
use nhsl::qwalk::{walk_ipr_summary, walk_step, WalkSpec, WalkState};
use nhsl::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Check = Result<String, String>;

pub const EIGEN_CASES: usize = 100;
pub const EIGEN_MAX_DIM: usize = 32;
pub const TRACE_TOL: f64 = 1e-10;
pub const DET_REL_TOL: f64 = 1e-9;
pub const RESIDUAL_TOL: f64 = 1e-12;
pub const SIMILARITY_TOL: f64 = 1e-9;
pub const GAUGE_SAMPLES: usize = 20;
pub const GAUGE_TOL: f64 = 1e-8;
pub const POWER_DRIFT_TOL: f64 = 1e-12;
pub const UNITARITY_STEPS: usize = 1000;
pub const IPR_SLACK: f64 = 1e-12;

/// Largest distance from a point of `a` to its greedily matched partner in `b`.
pub fn multiset_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let mut used = vec![false; b.len()];
    let mut worst = 0.0_f64;
    for x in a {
        let (j, d) = b
            .iter()
            .enumerate()
            .filter(|(j, _)| !used[*j])
            .map(|(j, y)| (j, (x - y).norm()))
            .fold((usize::MAX, f64::INFINITY), |best, c| if c.1 < best.1 { c } else { best });
        used[j] = true;
        worst = worst.max(d);
    }
    worst
}

pub fn eigensolver_invariants() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut worst = [0.0_f64; 4];
    for case in 0..EIGEN_CASES {
        let n = rng.gen_range(1..=EIGEN_MAX_DIM);
        let a = CMatrix::from_fn(n, |_, _| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        let d = eigenpairs(&a).map_err(|e| format!("case {case}: {e}"))?;
        let scale = a.frobenius_norm().max(1.0);

        let sum: Complex64 = d.eigenvalues.iter().sum();
        let trace_err = (sum - a.trace()).norm() / (scale * n as f64);
        let prod: Complex64 = d.eigenvalues.iter().product();
        let det = a.determinant();
        let det_err = (prod - det).norm() / det.norm().max(1e-300);
        let residual = d.max_relative_residual();
        // a diagonal similarity leaves the spectrum unchanged
        let scaling: Vec<f64> = (0..n).map(|_| 2f64.powf(rng.gen_range(-4.0..4.0))).collect();
        let similar = eigenvalues(&a.diagonal_similarity(&scaling)).map_err(|e| format!("case {case}: {e}"))?;
        let sim_err = multiset_distance(&d.eigenvalues, &similar) / scale;

        for (w, x) in worst.iter_mut().zip([trace_err, det_err, residual, sim_err]) {
            *w = w.max(x);
        }
        if trace_err > TRACE_TOL || det_err > DET_REL_TOL || residual > RESIDUAL_TOL || sim_err > SIMILARITY_TOL {
            return Err(format!(
                "case {case} (n = {n}): trace {trace_err:.1e}, det {det_err:.1e}, residual {residual:.1e}, similarity {sim_err:.1e}"
            ));
        }
    }
    Ok(format!(
        "{EIGEN_CASES} matrices: trace {:.1e}, det {:.1e}, residual {:.1e}, similarity {:.1e}",
        worst[0], worst[1], worst[2], worst[3]
    ))
}

pub fn random_potential(rng: &mut ChaCha8Rng) -> Vec<f64> {
    let m = 2 * rng.gen_range(2..=12);
    let kind = match rng.gen_range(0..3) {
        0 => PotentialKind::Impurity { a: rng.gen_range(0.5..3.0) },
        1 => PotentialKind::Incommensurate {
            v: rng.gen_range(0.5..2.0),
            r: loop {
                let r = rng.gen_range(1..m);
                if gcd(r, m) == 1 {
                    break r;
                }
            },
        },
        _ => PotentialKind::Barrier { v: rng.gen_range(0.5..3.0) },
    };
    build_potential(kind, m).unwrap().values().to_vec()
}

/// `E(k, h) = E(k − ih, 0)` on random models.
pub fn gauge_complexification() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let mut worst = 0.0_f64;
    for case in 0..GAUGE_SAMPLES {
        let potential = random_potential(&mut rng);
        let m = potential.len() as f64;
        let k = rng.gen_range(-PI / m..PI / m);
        let h = rng.gen_range(0.0..1.0);
        let with_field = eigenvalues(&bloch_matrix(&potential, 1.0, h, Complex64::new(k, 0.0))).map_err(|e| e.to_string())?;
        let shifted = eigenvalues(&bloch_matrix(&potential, 1.0, 0.0, Complex64::new(k, -h))).map_err(|e| e.to_string())?;
        let d = multiset_distance(&with_field, &shifted);
        worst = worst.max(d);
        if d > GAUGE_TOL {
            return Err(format!("sample {case} (M = {m}, k = {k}, h = {h}): deviation {d:.2e}"));
        }
    }
    Ok(format!("{GAUGE_SAMPLES} samples, max deviation {worst:.1e}"))
}

/// `1/M ≤ IPR ≤ 1` for lattice states, `1/(2M) ≤ IPR ≤ 1` for walk states.
pub fn ipr_bounds() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut states = 0;
    for _ in 0..12 {
        let potential = PotentialSequence::custom(random_potential(&mut rng)).unwrap();
        let m = potential.len() as f64;
        let spec = SuperlatticeSpec::new(1.0, rng.gen_range(0.0..1.0), potential).unwrap();
        let s = ipr_summary(&spec, 8, true).map_err(|e| e.to_string())?;
        for st in s.per_state.unwrap() {
            states += 1;
            if st.ipr < 1.0 / m - IPR_SLACK || st.ipr > 1.0 + IPR_SLACK {
                return Err(format!("lattice state with IPR {} at M = {m}", st.ipr));
            }
        }
    }
    for (spec, m) in [
        (WalkSpec::electric(13, 8, PI / 3.0, 0.5).unwrap(), 13.0),
        (WalkSpec::barrier_phase(12, PI / 4.0, PI / 3.0, 0.3).unwrap(), 12.0),
    ] {
        let s = walk_ipr_summary(&spec, 8, true).map_err(|e| e.to_string())?;
        for st in s.per_state.unwrap() {
            states += 1;
            if st.ipr < 1.0 / (2.0 * m) - IPR_SLACK || st.ipr > 1.0 + IPR_SLACK {
                return Err(format!("walk state with IPR {} at M = {m}", st.ipr));
            }
        }
    }
    Ok(format!("{states} eigenstates within bounds"))
}

/// Power is conserved step by step at `h = 0`.
pub fn walk_unitarity() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let random_phases: Vec<f64> = (0..17).map(|_| rng.gen_range(-PI..PI)).collect();
    let mut worst = 0.0_f64;
    for spec in [
        WalkSpec::electric(13, 8, PI / 3.0, 0.0).unwrap(),
        WalkSpec::barrier_phase(20, PI / 4.0, PI / 3.0, 0.0).unwrap(),
        WalkSpec::custom(random_phases, 0.7, 0.0).unwrap(),
    ] {
        let mut state = WalkState::pulse(spec.m(), 2).unwrap();
        let mut p = state.power();
        for step in 0..UNITARITY_STEPS {
            state = walk_step(&state, &spec);
            let q = state.power();
            worst = worst.max((q - p).abs());
            if (q - p).abs() >= POWER_DRIFT_TOL {
                return Err(format!("power drift {:.2e} at step {step} (M = {})", q - p, spec.m()));
            }
            p = q;
        }
    }
    Ok(format!("{UNITARITY_STEPS} steps x 3 walks, max drift {worst:.1e}"))
}
