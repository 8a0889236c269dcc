//! Run configuration, subcommand pipelines and deterministic output files.

pub mod config;
pub mod run;

pub use config::{eval_number, parse_config, Command, Field, Format, Grid, Model, RunConfig};
pub use run::{compute, run, sha256_hex, Artifact, OutputRecord, RunManifest, VERSION};
