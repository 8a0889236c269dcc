//! Subcommand pipelines, deterministic serialization and the run manifest.

use std::fmt::{Display, Write as _};
use std::fs::{self, OpenOptions};
use std::path::{Path, PathBuf};
use std::time::Instant;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::{Command, Field, Format, Model, RunConfig};
use crate::lattice::ModelFamily;
use crate::localization::{ipr_scan, IprSummary};
use crate::qwalk::{walk_dynamics, walk_gauge_scan, walk_ipr_scan, walk_spectrum, walk_thresholds, WalkTrace};
use crate::spectra::{
    band_structure, flatband_analysis, scan_gauge, FlatBandReport, GaugeScan, Thresholds, BAND_NK, SCAN_NK,
};
use crate::{Error, Result};

/// Version string echoed by `--version` and recorded in every manifest.
pub const VERSION: &str = concat!("nhsl ", env!("CARGO_PKG_VERSION"));

pub const MANIFEST_FILE: &str = "manifest.json";
pub const FAILURE_FILE: &str = "failure.txt";
pub const LOCK_FILE: &str = ".nhsl.lock";

/// Default walk length for `walk-dynamics`.
pub const DEFAULT_STEPS: usize = 400;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputRecord {
    pub file: String,
    pub bytes: usize,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub command: String,
    pub format: String,
    /// Canonical config text, readable by `parse_config`.
    pub config: String,
    pub duration_seconds: f64,
    pub outputs: Vec<OutputRecord>,
}

/// One in-memory output file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Artifact {
    pub name: String,
    pub contents: Vec<u8>,
}

/// Holds the output directory for the lifetime of a run.
struct DirLock {
    path: PathBuf,
}

impl DirLock {
    fn acquire(dir: &Path) -> Result<Self> {
        let path = dir.join(LOCK_FILE);
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(_) => Ok(Self { path }),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => Err(Error::Io(std::io::Error::new(
                e.kind(),
                format!("{} is locked by another run ({})", dir.display(), path.display()),
            ))),
            Err(e) => Err(e.into()),
        }
    }
}

impl Drop for DirLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

/// Runs `command` and writes its outputs plus `manifest.json` into `out_dir`.
///
/// Everything is computed before the first byte is written. On failure no
/// manifest exists afterwards and `failure.txt` describes the error.
pub fn run(command: Command, config: &RunConfig, out_dir: &Path, format: Format) -> Result<RunManifest> {
    if let Some(declared) = config.command {
        if declared != command {
            return Err(Error::Config {
                line: 0,
                message: format!("config is for '{declared}' but '{command}' was requested"),
            });
        }
    }
    fs::create_dir_all(out_dir)?;
    let _lock = DirLock::acquire(out_dir)?;
    let manifest_path = out_dir.join(MANIFEST_FILE);
    let failure_path = out_dir.join(FAILURE_FILE);
    for stale in [&manifest_path, &failure_path] {
        if stale.exists() {
            fs::remove_file(stale)?;
        }
    }

    let start = Instant::now();
    let outcome = compute(command, config, format).and_then(|artifacts| {
        let mut outputs = Vec::with_capacity(artifacts.len());
        for a in &artifacts {
            fs::write(out_dir.join(&a.name), &a.contents)?;
            outputs.push(OutputRecord {
                file: a.name.clone(),
                bytes: a.contents.len(),
                sha256: sha256_hex(&a.contents),
            });
        }
        Ok(outputs)
    });

    match outcome {
        Ok(outputs) => {
            let manifest = RunManifest {
                version: VERSION.to_string(),
                command: command.to_string(),
                format: format.as_str().to_string(),
                config: config.serialize(),
                duration_seconds: start.elapsed().as_secs_f64(),
                outputs,
            };
            fs::write(&manifest_path, serde_json::to_string_pretty(&manifest)? + "\n")?;
            Ok(manifest)
        }
        Err(e) => {
            let report = format!(
                "{VERSION}\ncommand: {command}\nstatus: failed\nerror: {e}\n\n{}",
                config.serialize()
            );
            fs::write(&failure_path, report)?;
            Err(e)
        }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// Produces every output of `command` in memory.
pub fn compute(command: Command, config: &RunConfig, format: Format) -> Result<Vec<Artifact>> {
    let walk = config.model.is_walk();
    let needs_walk = matches!(command, Command::WalkSpectrum | Command::WalkScan | Command::WalkDynamics);
    if command != Command::Ipr && walk != needs_walk {
        return Err(Error::InvalidModel(format!(
            "'{command}' does not apply to the {} model '{}'",
            if walk { "walk" } else { "lattice" },
            config.model.name()
        )));
    }
    match command {
        Command::Spectrum | Command::WalkSpectrum => spectra(config, format),
        Command::Scan | Command::WalkScan => scans(config, format),
        Command::Ipr => iprs(config, format),
        Command::Flatband => flatband(config, format),
        Command::WalkDynamics => dynamics(config, format),
    }
}

fn ext(format: Format) -> &'static str {
    format.as_str()
}

fn json<T: Serialize + ?Sized>(value: &T) -> Result<Vec<u8>> {
    Ok((serde_json::to_string_pretty(value)? + "\n").into_bytes())
}

/// CSV with a fixed header; floats use the shortest round-trip form.
fn csv<R, I>(header: &str, rows: I) -> Vec<u8>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = Cell>,
{
    let mut out = String::new();
    out.push_str(header);
    out.push('\n');
    for row in rows {
        let mut first = true;
        for cell in row {
            if !first {
                out.push(',');
            }
            first = false;
            let _ = write!(out, "{cell}");
        }
        out.push('\n');
    }
    out.into_bytes()
}

/// One CSV field: a number, or empty for "not available".
enum Cell {
    F(f64),
    U(usize),
    Empty,
}

impl Display for Cell {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Cell::F(x) => write!(f, "{x}"),
            Cell::U(n) => write!(f, "{n}"),
            Cell::Empty => Ok(()),
        }
    }
}

fn opt(x: Option<f64>) -> Cell {
    x.map_or(Cell::Empty, Cell::F)
}

#[derive(Serialize)]
struct Point {
    k: f64,
    l: usize,
    re: f64,
    im: f64,
}

#[derive(Serialize)]
struct VectorEntry {
    k: f64,
    l: usize,
    n: usize,
    re: f64,
    im: f64,
}

fn spectrum_files(
    stem: &str,
    points: impl Iterator<Item = (usize, f64, Complex64)>,
    vectors: Option<(&[f64], &[Vec<Vec<Complex64>>])>,
    format: Format,
) -> Result<Vec<Artifact>> {
    let points: Vec<Point> = points
        .map(|(l, k, e)| Point { k, l, re: e.re, im: e.im })
        .collect();
    let mut files = vec![Artifact {
        name: format!("{stem}.{}", ext(format)),
        contents: match format {
            Format::Csv => csv(
                "k,l,re_e,im_e",
                points.iter().map(|p| [Cell::F(p.k), Cell::U(p.l), Cell::F(p.re), Cell::F(p.im)]),
            ),
            Format::Json => json(&points)?,
        },
    }];
    if let Some((k_grid, vecs)) = vectors {
        let entries: Vec<VectorEntry> = vecs
            .iter()
            .enumerate()
            .flat_map(|(l, band)| {
                band.iter().zip(k_grid).flat_map(move |(v, &k)| {
                    v.iter().enumerate().map(move |(n, z)| VectorEntry { k, l, n, re: z.re, im: z.im })
                })
            })
            .collect();
        files.push(Artifact {
            name: format!("{stem}_vectors.{}", ext(format)),
            contents: match format {
                Format::Csv => csv(
                    "k,l,n,re,im",
                    entries
                        .iter()
                        .map(|e| [Cell::F(e.k), Cell::U(e.l), Cell::U(e.n), Cell::F(e.re), Cell::F(e.im)]),
                ),
                Format::Json => json(&entries)?,
            },
        });
    }
    Ok(files)
}

fn spectra(config: &RunConfig, format: Format) -> Result<Vec<Artifact>> {
    let nk = config.nk.unwrap_or(BAND_NK);
    let mut files = Vec::new();
    for &m in &config.m {
        for h in config.h.values() {
            if config.model.is_walk() {
                let s = walk_spectrum(&config.model.walk(h, m)?, nk, config.emit_vectors)?;
                let vectors = s.eigenvectors.as_deref().map(|v| (s.k_grid.as_slice(), v));
                files.extend(spectrum_files(&format!("walk_spectrum_M{m}_h{h}"), s.iter(), vectors, format)?);
            } else {
                let s = band_structure(&config.model.lattice(config.j, h, m)?, nk, config.emit_vectors)?;
                let vectors = s.eigenvectors.as_deref().map(|v| (s.k_grid.as_slice(), v));
                files.extend(spectrum_files(&format!("spectrum_M{m}_h{h}"), s.iter(), vectors, format)?);
            }
        }
    }
    Ok(files)
}

fn h_grid(config: &RunConfig) -> Vec<f64> {
    config.h.values()
}

fn scans(config: &RunConfig, format: Format) -> Result<Vec<Artifact>> {
    let nk = config.nk.unwrap_or(SCAN_NK);
    let grid = h_grid(config);
    let (prefix, thresholds) = if config.model.is_walk() {
        ("walk_scan", walk_thresholds())
    } else {
        ("scan", Thresholds::default())
    };
    let mut files = Vec::new();
    let mut summary = Vec::new();
    for &m in &config.m {
        let scan: GaugeScan = if config.model.is_walk() {
            walk_gauge_scan(&config.model.walk(0.0, m)?, &grid, nk, thresholds)?
        } else {
            scan_gauge(&config.model.lattice(config.j, 0.0, m)?, &grid, nk, thresholds)?
        };
        files.push(Artifact {
            name: format!("{prefix}_M{m}.{}", ext(format)),
            contents: match format {
                Format::Csv => csv("h,max_im", scan.points().map(|(h, x)| [Cell::F(h), Cell::F(x)])),
                Format::Json => json(&scan)?,
            },
        });
        summary.push((m, scan.hc_estimate, scan.transition_width));
    }
    files.push(Artifact {
        name: format!("{prefix}_summary.csv"),
        contents: csv(
            "m,hc_estimate,transition_width",
            summary.iter().map(|&(m, hc, w)| [Cell::U(m), opt(hc), opt(w)]),
        ),
    });
    Ok(files)
}

fn iprs(config: &RunConfig, format: Format) -> Result<Vec<Artifact>> {
    let nk = config.nk.unwrap_or(SCAN_NK);
    let grid = h_grid(config);
    let prefix = if config.model.is_walk() { "walk_ipr" } else { "ipr" };
    let mut files = Vec::new();
    for &m in &config.m {
        let rows: Vec<IprSummary> = if config.model.is_walk() {
            walk_ipr_scan(&config.model.walk(0.0, m)?, &grid, nk)?
        } else {
            ipr_scan(&config.model.lattice(config.j, 0.0, m)?, &grid, nk)?
        };
        files.push(Artifact {
            name: format!("{prefix}_M{m}.{}", ext(format)),
            contents: match format {
                Format::Csv => csv(
                    "h,ipr_max,ipr_min,ipr_mean",
                    rows.iter()
                        .map(|r| [Cell::F(r.h), Cell::F(r.ipr_max), Cell::F(r.ipr_min), Cell::F(r.ipr_mean)]),
                ),
                Format::Json => json(&rows)?,
            },
        });
    }
    Ok(files)
}

fn family(config: &RunConfig) -> Result<ModelFamily> {
    match config.model {
        Model::Impurity { a } => Ok(ModelFamily::Impurity { a }),
        Model::Barrier { v } => Ok(ModelFamily::Barrier { v }),
        Model::Incommensurate { v, r: None } => Ok(ModelFamily::Incommensurate { v }),
        Model::Incommensurate { r: Some(_), .. } => Err(Error::InvalidModel(
            "flatband takes R from the Fibonacci partner of each M; omit R".into(),
        )),
        _ => Err(Error::InvalidModel(format!(
            "flatband needs an impurity, incommensurate or barrier model, not '{}'",
            config.model.name()
        ))),
    }
}

fn flatband(config: &RunConfig, format: Format) -> Result<Vec<Artifact>> {
    let l = config.band.unwrap_or(0);
    let report: FlatBandReport = flatband_analysis(family(config)?, config.j, l, &config.m)?;
    Ok(match format {
        Format::Json => vec![Artifact {
            name: "flatband.json".into(),
            contents: json(&report)?,
        }],
        Format::Csv => vec![
            Artifact {
                name: "flatband.csv".into(),
                contents: csv(
                    "m,e0,delta_exact,delta_pert,relative_error,gap",
                    report.rows.iter().map(|r| {
                        [
                            Cell::U(r.m),
                            Cell::F(r.e0),
                            Cell::F(r.delta_exact),
                            Cell::F(r.delta_pert),
                            Cell::F(r.relative_error),
                            Cell::F(r.gap),
                        ]
                    }),
                ),
            },
            Artifact {
                name: "flatband_fit.csv".into(),
                contents: csv(
                    "l,sigma_fit,log_prefactor,rho,gamma_m",
                    [[
                        Cell::U(report.l),
                        Cell::F(report.sigma_fit),
                        Cell::F(report.log_prefactor),
                        opt(report.rho),
                        opt(report.gamma_m),
                    ]],
                ),
            },
        ],
    })
}

fn dynamics(config: &RunConfig, format: Format) -> Result<Vec<Artifact>> {
    let steps = config.steps.unwrap_or(DEFAULT_STEPS);
    let n0 = config.n0.ok_or_else(|| Error::Config {
        line: 0,
        message: "walk-dynamics needs key 'n0'".into(),
    })?;
    let hs = match config.h {
        Field::Value(h) => vec![h],
        Field::Grid(g) => g.values(),
    };
    let mut files = Vec::new();
    for &m in &config.m {
        for &h in &hs {
            let trace: WalkTrace = walk_dynamics(&config.model.walk(h, m)?, n0, steps, config.emit_vectors)?;
            let stem = format!("dynamics_M{m}_h{h}");
            match format {
                Format::Json => files.push(Artifact {
                    name: format!("{stem}.json"),
                    contents: json(&trace)?,
                }),
                Format::Csv => {
                    files.push(Artifact {
                        name: format!("{stem}.csv"),
                        contents: csv(
                            "m,power,m2,sigma",
                            (0..=trace.steps()).map(|s| {
                                [
                                    Cell::U(s),
                                    Cell::F(trace.power[s]),
                                    Cell::F(trace.second_moment[s]),
                                    Cell::F(trace.sigma[s]),
                                ]
                            }),
                        ),
                    });
                    if let Some(intensity) = &trace.intensity {
                        files.push(Artifact {
                            name: format!("{stem}_intensity.csv"),
                            contents: csv(
                                "m,n,intensity",
                                intensity.iter().enumerate().flat_map(|(s, row)| {
                                    row.iter().enumerate().map(move |(n, &w)| [Cell::U(s), Cell::U(n), Cell::F(w)])
                                }),
                            ),
                        });
                    }
                }
            }
        }
    }
    Ok(files)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::config::parse_config;

    fn cfg(text: &str) -> RunConfig {
        parse_config(text).unwrap()
    }

    #[test]
    fn clean_spectrum_is_real() {
        let c = cfg("model = clean\nM = 8\nh = 0\nNk = 16\n");
        let files = compute(Command::Spectrum, &c, Format::Csv).unwrap();
        assert_eq!(files.len(), 1);
        let text = String::from_utf8(files[0].contents.clone()).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("k,l,re_e,im_e"));
        let rows: Vec<_> = lines.collect();
        assert_eq!(rows.len(), 8 * 16);
        for r in rows {
            let im: f64 = r.rsplit(',').next().unwrap().parse().unwrap();
            assert!(im.abs() < 1e-10);
        }
    }

    #[test]
    fn json_spectrum_points() {
        let c = cfg("model = clean\nM = 4\nh = 0.2\nNk = 4\n");
        let files = compute(Command::Spectrum, &c, Format::Json).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&files[0].contents).unwrap();
        let arr = v.as_array().unwrap();
        assert_eq!(arr.len(), 16);
        for key in ["k", "l", "re", "im"] {
            assert!(arr[0].get(key).is_some());
        }
    }

    #[test]
    fn deterministic_bytes() {
        let c = cfg("model = barrier\nV = 2.5\nM = 8\nh_grid = 0:0.5:0.1\nNk = 8\n");
        let a = compute(Command::Scan, &c, Format::Csv).unwrap();
        let b = compute(Command::Scan, &c, Format::Csv).unwrap();
        assert_eq!(a, b);
        assert!(a[0].contents.starts_with(b"h,max_im\n"));
    }

    #[test]
    fn model_command_mismatch() {
        let c = cfg("model = clean\nM = 4\nh = 0\n");
        assert!(matches!(compute(Command::WalkScan, &c, Format::Csv), Err(Error::InvalidModel(_))));
        let w = cfg("model = electric\nbeta = pi/3\nR = 2\nM = 5\nh = 0\n");
        assert!(matches!(compute(Command::Scan, &w, Format::Csv), Err(Error::InvalidModel(_))));
        assert!(compute(Command::Ipr, &w, Format::Csv).is_ok());
    }

    #[test]
    fn dynamics_header_and_length() {
        let c = cfg("model = electric\nbeta = pi/3\nR = 3\nM = 5\nh = 0.1\nn0 = 2\nsteps = 10\nemit_vectors = true\n");
        let files = compute(Command::WalkDynamics, &c, Format::Csv).unwrap();
        assert_eq!(files.len(), 2);
        let text = String::from_utf8(files[0].contents.clone()).unwrap();
        assert!(text.starts_with("m,power,m2,sigma\n0,1,0,0\n"));
        assert_eq!(text.lines().count(), 12);
        assert!(files[1].contents.starts_with(b"m,n,intensity\n"));
    }

    #[test]
    fn manifest_only_on_success() {
        let dir = tempfile::tempdir().unwrap();
        let ok = cfg("model = clean\nM = 4\nh = 0\nNk = 4\n");
        let m = run(Command::Spectrum, &ok, dir.path(), Format::Csv).unwrap();
        assert_eq!(m.version, VERSION);
        assert_eq!(m.outputs.len(), 1);
        let bytes = fs::read(dir.path().join(&m.outputs[0].file)).unwrap();
        assert_eq!(sha256_hex(&bytes), m.outputs[0].sha256);
        assert!(dir.path().join(MANIFEST_FILE).exists());
        assert!(!dir.path().join(LOCK_FILE).exists());

        // two sizes cannot be fitted: the analysis fails and the old manifest goes
        let bad = cfg("model = barrier\nV = 2.5\nM = 8, 10\nh = 0\n");
        assert!(run(Command::Flatband, &bad, dir.path(), Format::Csv).is_err());
        assert!(!dir.path().join(MANIFEST_FILE).exists());
        let report = fs::read_to_string(dir.path().join(FAILURE_FILE)).unwrap();
        assert!(report.contains("status: failed"));
    }

    #[test]
    fn lock_blocks_second_run() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join(LOCK_FILE), "").unwrap();
        let c = cfg("model = clean\nM = 4\nh = 0\nNk = 4\n");
        assert!(matches!(run(Command::Spectrum, &c, dir.path(), Format::Csv), Err(Error::Io(_))));
        assert!(!dir.path().join(MANIFEST_FILE).exists());
    }

    #[test]
    fn declared_command_must_match() {
        let dir = tempfile::tempdir().unwrap();
        let c = cfg("command = scan\nmodel = clean\nM = 4\nh = 0\n");
        assert!(matches!(run(Command::Spectrum, &c, dir.path(), Format::Csv), Err(Error::Config { .. })));
    }
}
