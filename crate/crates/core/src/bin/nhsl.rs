use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use nhsl::io::{parse_config, run, Command, Format};

#[derive(Parser)]
#[command(name = "nhsl", version = env!("CARGO_PKG_VERSION"), about = "Non-Hermitian superlattice and quantum-walk spectra")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Complex band structure per M and h
    Spectrum(Args),
    /// max |Im E| against the gauge field
    Scan(Args),
    /// IPR statistics against h (lattice or walk model)
    Ipr(Args),
    /// Flat-band perturbative analysis over the M list
    Flatband(Args),
    /// Walk quasi-energy bands
    WalkSpectrum(Args),
    /// Walk max |Im E| against h
    WalkScan(Args),
    /// Power and spreading of a single-site excitation
    WalkDynamics(Args),
}

#[derive(clap::Args)]
struct Args {
    #[arg(long, value_name = "FILE")]
    config: PathBuf,
    /// Output directory (overrides `output` in the config)
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    /// Worker threads for the grid sweeps
    #[arg(long, value_name = "N")]
    threads: Option<usize>,
}

#[derive(ValueEnum, Clone, Copy)]
enum FormatArg {
    Csv,
    Json,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, args) = match cli.command {
        Sub::Spectrum(a) => (Command::Spectrum, a),
        Sub::Scan(a) => (Command::Scan, a),
        Sub::Ipr(a) => (Command::Ipr, a),
        Sub::Flatband(a) => (Command::Flatband, a),
        Sub::WalkSpectrum(a) => (Command::WalkSpectrum, a),
        Sub::WalkScan(a) => (Command::WalkScan, a),
        Sub::WalkDynamics(a) => (Command::WalkDynamics, a),
    };
    match execute(command, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("nhsl {command}: {e}");
            ExitCode::FAILURE
        }
    }
}

fn execute(command: Command, args: Args) -> nhsl::Result<()> {
    if let Some(n) = args.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| nhsl::Error::Domain(format!("thread pool: {e}")))?;
    }
    let text = std::fs::read_to_string(&args.config).map_err(|e| {
        std::io::Error::new(e.kind(), format!("cannot read {}: {e}", args.config.display()))
    })?;
    let config = parse_config(&text)?;
    let out = args
        .out
        .or_else(|| config.output.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    let format = match args.format {
        Some(FormatArg::Csv) => Format::Csv,
        Some(FormatArg::Json) => Format::Json,
        None => config.format.unwrap_or_default(),
    };
    let manifest = run(command, &config, &out, format)?;
    for o in &manifest.outputs {
        println!("{}", out.join(&o.file).display());
    }
    Ok(())
}
