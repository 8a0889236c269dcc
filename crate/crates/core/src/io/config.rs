//! Flat `key = value` run configuration.
//!
//! ```text
//! # Aubry–André approximant, spectral scan
//! command = scan
//! model = incommensurate
//! V = 1.5
//! M = 13, 34, 144
//! h_grid = 0:1:0.01
//! ```
//!
//! Unknown or repeated keys are errors. Numbers may use the shorthand
//! `pi`, as in `pi/3`, `2*pi` or `-pi/4`.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use crate::lattice::{build_potential, PotentialKind, PotentialSequence, SuperlatticeSpec};
use crate::qwalk::WalkSpec;
use crate::spectra::uniform_grid;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Spectrum,
    Scan,
    Ipr,
    Flatband,
    WalkSpectrum,
    WalkScan,
    WalkDynamics,
}

impl Command {
    pub const ALL: [Command; 7] = [
        Command::Spectrum,
        Command::Scan,
        Command::Ipr,
        Command::Flatband,
        Command::WalkSpectrum,
        Command::WalkScan,
        Command::WalkDynamics,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::Scan => "scan",
            Command::Ipr => "ipr",
            Command::Flatband => "flatband",
            Command::WalkSpectrum => "walk-spectrum",
            Command::WalkScan => "walk-scan",
            Command::WalkDynamics => "walk-dynamics",
        }
    }
}

impl FromStr for Command {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Command::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| format!("unknown command '{s}'"))
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl Format {
    pub fn as_str(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(format!("unknown format '{s}' (expected csv or json)")),
        }
    }
}

/// Inclusive `start:stop:step` grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Grid {
    pub fn values(&self) -> Vec<f64> {
        uniform_grid(self.start, self.stop, self.step).expect("grid validated at parse time")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Model {
    Clean,
    Impurity { a: f64 },
    /// `r = None` takes the Fibonacci partner of each `M`.
    Incommensurate { v: f64, r: Option<usize> },
    Barrier { v: f64 },
    Electric { beta: f64, r: Option<usize> },
    BarrierPhase { beta: f64, v: f64 },
}

impl Model {
    pub fn name(&self) -> &'static str {
        match self {
            Model::Clean => "clean",
            Model::Impurity { .. } => "impurity",
            Model::Incommensurate { .. } => "incommensurate",
            Model::Barrier { .. } => "barrier",
            Model::Electric { .. } => "electric",
            Model::BarrierPhase { .. } => "barrier_phase",
        }
    }

    pub fn is_walk(&self) -> bool {
        matches!(self, Model::Electric { .. } | Model::BarrierPhase { .. })
    }

    fn ratio(r: Option<usize>, m: usize) -> Result<usize> {
        match r {
            Some(r) => Ok(r),
            None => crate::lattice::fibonacci_partner(m).ok_or_else(|| Error::InvalidApproximant {
                r: 0,
                m,
                reason: "no R given and M is not a Fibonacci number".into(),
            }),
        }
    }

    /// Lattice for cell size `m` at gauge field `h`.
    pub fn lattice(&self, j: f64, h: f64, m: usize) -> Result<SuperlatticeSpec> {
        let potential = match *self {
            Model::Clean => PotentialSequence::clean(m)?,
            Model::Impurity { a } => build_potential(PotentialKind::Impurity { a }, m)?,
            Model::Incommensurate { v, r } => build_potential(
                PotentialKind::Incommensurate {
                    v,
                    r: Self::ratio(r, m)?,
                },
                m,
            )?,
            Model::Barrier { v } => build_potential(PotentialKind::Barrier { v }, m)?,
            Model::Electric { .. } | Model::BarrierPhase { .. } => {
                return Err(Error::InvalidModel(format!("'{}' is a walk model", self.name())))
            }
        };
        SuperlatticeSpec::new(j, h, potential)
    }

    /// Walk for cell size `m` at gain/loss `h`.
    pub fn walk(&self, h: f64, m: usize) -> Result<WalkSpec> {
        match *self {
            Model::Electric { beta, r } => WalkSpec::electric(m, Self::ratio(r, m)?, beta, h),
            Model::BarrierPhase { beta, v } => WalkSpec::barrier_phase(m, v, beta, h),
            _ => Err(Error::InvalidModel(format!("'{}' is a lattice model", self.name()))),
        }
    }
}

/// Gauge field: one value or a grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Field {
    Value(f64),
    Grid(Grid),
}

impl Field {
    pub fn values(&self) -> Vec<f64> {
        match self {
            Field::Value(h) => vec![*h],
            Field::Grid(g) => g.values(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub command: Option<Command>,
    pub model: Model,
    pub j: f64,
    pub m: Vec<usize>,
    pub h: Field,
    pub nk: Option<usize>,
    pub output: Option<String>,
    pub format: Option<Format>,
    pub seed: Option<u64>,
    pub emit_vectors: bool,
    /// Band index for the flat-band analysis.
    pub band: Option<usize>,
    /// Excited site for walk dynamics.
    pub n0: Option<usize>,
    /// Number of walk steps.
    pub steps: Option<usize>,
}

const KEYS: [&str; 18] = [
    "command",
    "model",
    "J",
    "V",
    "A",
    "R",
    "beta",
    "M",
    "h",
    "h_grid",
    "Nk",
    "output",
    "format",
    "seed",
    "emit_vectors",
    "band",
    "n0",
    "steps",
];

/// Evaluates a real number with optional `pi` factors: `pi/3`, `2*pi`,
/// `-0.5pi`, `1.5`.
pub fn eval_number(text: &str) -> std::result::Result<f64, String> {
    let s = text.trim();
    let (sign, body) = match s.strip_prefix('-') {
        Some(rest) => (-1.0, rest),
        None => (1.0, s.strip_prefix('+').unwrap_or(s)),
    };
    if body.is_empty() {
        return Err(format!("malformed number '{text}'"));
    }
    let mut value = sign;
    let mut divide = false;
    let mut rest = body;
    loop {
        let end = rest.find(['*', '/']).unwrap_or(rest.len());
        let factor = parse_factor(rest[..end].trim()).ok_or_else(|| format!("malformed number '{text}'"))?;
        value = if divide { value / factor } else { value * factor };
        if end == rest.len() {
            break;
        }
        divide = rest.as_bytes()[end] == b'/';
        rest = &rest[end + 1..];
    }
    if !value.is_finite() {
        return Err(format!("number '{text}' is not finite"));
    }
    Ok(value)
}

fn parse_factor(f: &str) -> Option<f64> {
    if f == "pi" {
        return Some(PI);
    }
    if let Some(num) = f.strip_suffix("pi") {
        return num.parse::<f64>().ok().filter(|x| x.is_finite()).map(|x| x * PI);
    }
    if f.starts_with(['+', '-']) {
        return None;
    }
    f.parse::<f64>().ok().filter(|x| x.is_finite())
}

struct Entry<'a> {
    line: usize,
    value: &'a str,
}

struct Document<'a> {
    entries: BTreeMap<&'a str, Entry<'a>>,
}

fn config_err(line: usize, message: impl Into<String>) -> Error {
    Error::Config {
        line,
        message: message.into(),
    }
}

impl<'a> Document<'a> {
    fn parse(text: &'a str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| config_err(line, format!("expected 'key = value', found '{content}'")))?;
            let (key, value) = (key.trim(), value.trim());
            if !KEYS.contains(&key) {
                return Err(config_err(line, format!("unknown key '{key}'")));
            }
            if value.is_empty() {
                return Err(config_err(line, format!("key '{key}' has no value")));
            }
            if let Some(prev) = entries.insert(key, Entry { line, value }) {
                return Err(config_err(line, format!("key '{key}' already set on line {}", prev.line)));
            }
        }
        Ok(Self { entries })
    }

    fn line(&self, key: &str) -> usize {
        self.entries.get(key).map_or(0, |e| e.line)
    }

    fn raw(&self, key: &str) -> Option<&Entry<'a>> {
        self.entries.get(key)
    }

    fn get<T>(&self, key: &str, parse: impl FnOnce(&str) -> std::result::Result<T, String>) -> Result<Option<T>> {
        match self.raw(key) {
            None => Ok(None),
            Some(e) => parse(e.value)
                .map(Some)
                .map_err(|m| config_err(e.line, format!("{key}: {m}"))),
        }
    }

    fn require<T>(&self, key: &str, parse: impl FnOnce(&str) -> std::result::Result<T, String>) -> Result<T> {
        self.get(key, parse)?
            .ok_or_else(|| config_err(0, format!("missing required key '{key}'")))
    }
}

fn parse_int(s: &str) -> std::result::Result<usize, String> {
    s.parse::<usize>().map_err(|_| format!("expected a non-negative integer, found '{s}'"))
}

fn parse_u64(s: &str) -> std::result::Result<u64, String> {
    s.parse::<u64>().map_err(|_| format!("expected a non-negative integer, found '{s}'"))
}

fn parse_bool(s: &str) -> std::result::Result<bool, String> {
    match s {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(format!("expected true or false, found '{s}'")),
    }
}

fn parse_sizes(s: &str) -> std::result::Result<Vec<usize>, String> {
    let sizes = s.split(',').map(|x| parse_int(x.trim())).collect::<std::result::Result<Vec<_>, _>>()?;
    if sizes.windows(2).any(|w| w[1] <= w[0]) {
        return Err("sizes must be strictly increasing".into());
    }
    Ok(sizes)
}

fn parse_grid(s: &str) -> std::result::Result<Grid, String> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(format!("expected start:stop:step, found '{s}'"));
    }
    let g = Grid {
        start: eval_number(parts[0])?,
        stop: eval_number(parts[1])?,
        step: eval_number(parts[2])?,
    };
    uniform_grid(g.start, g.stop, g.step).map_err(|e| e.to_string())?;
    Ok(g)
}

fn parse_string(s: &str) -> std::result::Result<String, String> {
    Ok(s.to_string())
}

pub fn parse_config(text: &str) -> Result<RunConfig> {
    let doc = Document::parse(text)?;
    let model_name = doc.require("model", parse_string)?;
    let model_line = doc.line("model");
    let number = |key: &str| doc.get(key, eval_number);
    let need = |key: &str| -> Result<f64> {
        number(key)?.ok_or_else(|| config_err(model_line, format!("model '{model_name}' needs key '{key}'")))
    };
    let model = match model_name.as_str() {
        "clean" => Model::Clean,
        "impurity" => Model::Impurity { a: need("A")? },
        "incommensurate" => Model::Incommensurate {
            v: need("V")?,
            r: doc.get("R", parse_int)?,
        },
        "barrier" => Model::Barrier { v: need("V")? },
        "electric" => Model::Electric {
            beta: need("beta")?,
            r: doc.get("R", parse_int)?,
        },
        "barrier_phase" => Model::BarrierPhase {
            beta: need("beta")?,
            v: need("V")?,
        },
        other => return Err(config_err(model_line, format!("unknown model '{other}'"))),
    };
    // parameters that the chosen model does not use are rejected too
    let used: &[&str] = match model {
        Model::Clean => &[],
        Model::Impurity { .. } => &["A"],
        Model::Incommensurate { .. } => &["V", "R"],
        Model::Barrier { .. } => &["V"],
        Model::Electric { .. } => &["beta", "R"],
        Model::BarrierPhase { .. } => &["beta", "V"],
    };
    for key in ["A", "V", "R", "beta"] {
        if doc.raw(key).is_some() && !used.contains(&key) {
            return Err(config_err(
                doc.line(key),
                format!("key '{key}' does not apply to model '{model_name}'"),
            ));
        }
    }

    let h = match (doc.get("h", eval_number)?, doc.get("h_grid", parse_grid)?) {
        (Some(h), None) => Field::Value(h),
        (None, Some(g)) => Field::Grid(g),
        (Some(_), Some(_)) => return Err(config_err(doc.line("h_grid"), "give either 'h' or 'h_grid', not both")),
        (None, None) => return Err(config_err(0, "missing required key 'h' or 'h_grid'")),
    };

    let config = RunConfig {
        command: doc.get("command", |s| s.parse())?,
        model,
        j: number("J")?.unwrap_or(1.0),
        m: doc.require("M", parse_sizes)?,
        h,
        nk: doc.get("Nk", parse_int)?,
        output: doc.get("output", parse_string)?,
        format: doc.get("format", |s| s.parse())?,
        seed: doc.get("seed", parse_u64)?,
        emit_vectors: doc.get("emit_vectors", parse_bool)?.unwrap_or(false),
        band: doc.get("band", parse_int)?,
        n0: doc.get("n0", parse_int)?,
        steps: doc.get("steps", parse_int)?,
    };
    config.validate(&doc)?;
    Ok(config)
}

impl RunConfig {
    fn validate(&self, doc: &Document) -> Result<()> {
        let line_m = doc.line("M");
        if self.m.is_empty() {
            return Err(config_err(line_m, "M needs at least one size"));
        }
        if let Some(nk) = self.nk {
            if nk < 2 {
                return Err(config_err(doc.line("Nk"), "Nk must be at least 2"));
            }
        }
        // build every model instance once so inconsistent parameters fail here
        for &m in &self.m {
            let built = if self.model.is_walk() {
                self.model.walk(0.0, m).map(|_| ())
            } else {
                self.model.lattice(self.j, 0.0, m).map(|_| ())
            };
            built.map_err(|e| with_line(e, line_m))?;
            if let Some(n0) = self.n0 {
                if n0 >= m {
                    return Err(config_err(doc.line("n0"), format!("n0 = {n0} is outside a cell of {m} sites")));
                }
            }
        }
        Ok(())
    }

    /// Canonical text form; `parse_config` reads it back to an equal value.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        if let Some(c) = self.command {
            put("command", c.to_string());
        }
        put("model", self.model.name().to_string());
        match &self.model {
            Model::Clean => {}
            Model::Impurity { a } => put("A", a.to_string()),
            Model::Incommensurate { v, r } => {
                put("V", v.to_string());
                if let Some(r) = r {
                    put("R", r.to_string());
                }
            }
            Model::Barrier { v } => put("V", v.to_string()),
            Model::Electric { beta, r } => {
                put("beta", beta.to_string());
                if let Some(r) = r {
                    put("R", r.to_string());
                }
            }
            Model::BarrierPhase { beta, v } => {
                put("beta", beta.to_string());
                put("V", v.to_string());
            }
        }
        put("J", self.j.to_string());
        put("M", self.m.iter().map(|m| m.to_string()).collect::<Vec<_>>().join(", "));
        match self.h {
            Field::Value(h) => put("h", h.to_string()),
            Field::Grid(g) => put("h_grid", format!("{}:{}:{}", g.start, g.stop, g.step)),
        }
        if let Some(nk) = self.nk {
            put("Nk", nk.to_string());
        }
        if let Some(o) = &self.output {
            put("output", o.clone());
        }
        if let Some(f) = self.format {
            put("format", f.as_str().to_string());
        }
        if let Some(s) = self.seed {
            put("seed", s.to_string());
        }
        if self.emit_vectors {
            put("emit_vectors", "true".into());
        }
        if let Some(b) = self.band {
            put("band", b.to_string());
        }
        if let Some(n) = self.n0 {
            put("n0", n.to_string());
        }
        if let Some(s) = self.steps {
            put("steps", s.to_string());
        }
        out
    }
}

fn with_line(e: Error, line: usize) -> Error {
    match e {
        Error::InvalidModel(m) => Error::InvalidModel(format!("line {line}: {m}")),
        Error::InvalidApproximant { r, m, reason } => Error::InvalidApproximant {
            r,
            m,
            reason: format!("{reason} (line {line})"),
        },
        other => config_err(line, other.to_string()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_incommensurate() {
        let c = parse_config("model = incommensurate\nV = 1.5\nM = 144\nR = 89\nh_grid = 0:1:0.01\n").unwrap();
        assert_eq!(c.h.values().len(), 101);
        assert_eq!(c.model, Model::Incommensurate { v: 1.5, r: Some(89) });
        assert_eq!(c.j, 1.0);
    }

    #[test]
    fn odd_barrier_is_invalid_model() {
        let err = parse_config("model = barrier\nV = 2.5\nM = 81\nh = 0.1\n").unwrap_err();
        assert!(matches!(err, Error::InvalidModel(ref m) if m.contains("line 3")), "{err}");
    }

    #[test]
    fn walk_config() {
        let c = parse_config("model = electric\nbeta = 1.0472\nM = 55\nR = 34\nh = 0.4\n").unwrap();
        assert_eq!(c.model, Model::Electric { beta: 1.0472, r: Some(34) });
        assert!(c.model.is_walk());
    }

    #[test]
    fn unknown_and_duplicate_keys() {
        let e = parse_config("model = clean\nM = 4\nh = 0\nNK = 4\n").unwrap_err();
        assert!(matches!(e, Error::Config { line: 4, .. }));
        let e = parse_config("model = clean\nM = 4\nM = 8\nh = 0\n").unwrap_err();
        assert!(matches!(e, Error::Config { line: 3, .. }));
        let e = parse_config("model = clean\nM = 4\nh = 0\nV = 1\n").unwrap_err();
        assert!(matches!(e, Error::Config { line: 4, .. }));
    }

    #[test]
    fn missing_and_malformed() {
        assert!(matches!(parse_config("M = 4\nh = 0\n"), Err(Error::Config { .. })));
        let e = parse_config("model = barrier\nM = 4\nh = 0\n").unwrap_err();
        assert!(e.to_string().contains("'V'"));
        let e = parse_config("model = clean\nM = 4\nh = zero\n").unwrap_err();
        assert!(matches!(e, Error::Config { line: 3, .. }));
        let e = parse_config("model = clean\nM = 4\nh_grid = 0:1\n").unwrap_err();
        assert!(matches!(e, Error::Config { line: 3, .. }));
        assert!(parse_config("model = clean\nM = 4\nh = 0\nh_grid = 0:1:0.1\n").is_err());
        assert!(parse_config("model = incommensurate\nV = 1.5\nM = 100\nh = 0\n").is_err());
    }

    #[test]
    fn pi_shorthand() {
        assert_eq!(eval_number("pi/3").unwrap(), PI / 3.0);
        assert_eq!(eval_number("-pi/4").unwrap(), -PI / 4.0);
        assert_eq!(eval_number("2*pi").unwrap(), 2.0 * PI);
        assert_eq!(eval_number("0.5pi").unwrap(), 0.5 * PI);
        assert_eq!(eval_number(" 1e-3 ").unwrap(), 1e-3);
        for bad in ["", "pie", "pi/", "1/0", "--1", "*2", "nan"] {
            assert!(eval_number(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn comments_and_blank_lines() {
        let c = parse_config("# header\n\nmodel = clean # trailing\nM = 8, 16\nh = 0\nformat = json\n").unwrap();
        assert_eq!(c.m, vec![8, 16]);
        assert_eq!(c.format, Some(Format::Json));
    }

    #[test]
    fn serialize_round_trip() {
        let text = "command = walk-dynamics\nmodel = barrier_phase\nbeta = pi/3\nV = pi/4\nM = 80\nh = 0.45\nn0 = 60\nsteps = 400\nemit_vectors = true\n";
        let c = parse_config(text).unwrap();
        assert_eq!(parse_config(&c.serialize()).unwrap(), c);
    }
}
