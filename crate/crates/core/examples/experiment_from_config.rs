//! Runs whatever experiment a TOML config describes, the same way the
//! `hybridtomo experiment` subcommand does.
//!
//! ```bash
//! cargo run --release --example experiment_from_config -- crates/core/configs/quick.toml
//! ```

use std::path::PathBuf;

use hybridtomo::experiments::{commands, ExperimentConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path: PathBuf = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/configs/quick.toml")));
    let cfg = ExperimentConfig::from_file(&path)?;
    println!("{} case(s) from {}", cfg.cases().len(), path.display());
    print!("{}", commands::experiment(&cfg)?);
    Ok(())
}
