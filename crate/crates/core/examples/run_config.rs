//! Parse a configuration document and run it into a scratch directory,
//! printing the manifest.

use nhsl::io::{parse_config, run, Command, Format};

const CONFIG: &str = "\
# barrier superlattice, coarse scan
command = scan
model = barrier
V = 2.5
M = 8, 16
h_grid = 0:1:0.1
Nk = 16
";

fn main() -> nhsl::Result<()> {
    let config = parse_config(CONFIG)?;
    let dir = std::env::temp_dir().join(format!("nhsl-example-{}", std::process::id()));
    let manifest = run(Command::Scan, &config, &dir, Format::Csv)?;
    println!("{}", serde_json::to_string_pretty(&manifest)?);
    let scan = std::fs::read_to_string(dir.join("scan_M16.csv"))?;
    print!("{scan}");
    std::fs::remove_dir_all(&dir)?;
    Ok(())
}
