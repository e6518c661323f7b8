use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hybridtomo::experiments::{commands, ExperimentConfig, ExperimentKind};

#[derive(Parser)]
#[command(name = "hybridtomo", version, about = "Linearised hybrid data impedance tomography in the unit disc")]
struct Cli {
    /// Directory for all outputs (overrides `output_dir` in the config).
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    /// Worker threads; 1 gives bitwise reproducible runs.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Mesh seed (overrides `seed` in the config).
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the forward and reconstruction meshes.
    Mesh { config: PathBuf },
    /// Solve the forward problems for the phantom and write H_j.
    Forward { config: PathBuf },
    /// Run one reconstruction with the configured p and boundary data.
    Reconstruct { config: PathBuf },
    /// Scan the principal symbols and report loss of ellipticity.
    Symbols { config: PathBuf },
    /// Trace bicharacteristics from the phantom corners.
    Bichar { config: PathBuf },
    /// Run an experiment family: elliptic_vs_nonelliptic, p_sweep,
    /// wavefront_alignment or custom.
    Experiment { kind: String, config: PathBuf },
    /// Streak report for an exported reconstruction.
    Metrics {
        config: PathBuf,
        /// `reconstruction.vtk` written by `reconstruct` or `experiment`.
        #[arg(long)]
        input: PathBuf,
    },
}

impl Command {
    fn config_path(&self) -> &PathBuf {
        match self {
            Command::Mesh { config }
            | Command::Forward { config }
            | Command::Reconstruct { config }
            | Command::Symbols { config }
            | Command::Bichar { config }
            | Command::Experiment { config, .. }
            | Command::Metrics { config, .. } => config,
        }
    }
}

fn run(cli: Cli) -> hybridtomo::Result<String> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| hybridtomo::Error::InvalidArgument(e.to_string()).in_stage("config"))?;
    }
    let mut cfg = ExperimentConfig::from_file(cli.command.config_path()).map_err(|e| e.in_stage("config"))?;
    if let Some(dir) = cli.output_dir {
        cfg.output_dir = dir;
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    match &cli.command {
        Command::Mesh { .. } => commands::mesh(&cfg),
        Command::Forward { .. } => commands::forward(&cfg),
        Command::Reconstruct { .. } => commands::reconstruct(&cfg),
        Command::Symbols { .. } => commands::symbols(&cfg),
        Command::Bichar { .. } => commands::bichar(&cfg),
        Command::Experiment { kind, .. } => {
            cfg.kind = ExperimentKind::parse(kind).map_err(|e| e.in_stage("config"))?;
            commands::experiment(&cfg)
        }
        Command::Metrics { input, .. } => commands::metrics(&cfg, input),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(summary) => {
            print!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
