//! `hewflow`: file-based encrypted inference workflow, benchmarks and
//! cluster simulation.

mod commands;
mod error;
mod workspace;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use crate::workspace::Workspace;

#[derive(Parser)]
#[command(name = "hewflow", version, about = "Privacy-preserving inference workflow over leveled HE")]
struct Cli {
    /// Workspace directory holding params, keys, model and ciphertexts.
    #[arg(long, global = true, env = "HEWFLOW_WORKSPACE", default_value = ".")]
    workspace: PathBuf,
    /// Seed for every random choice (keys, encryption noise, data, simulation).
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Switch {
    On,
    Off,
}

impl Switch {
    pub fn on(self) -> bool {
        self == Switch::On
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Rescale {
    Eager,
    Off,
}

#[derive(Subcommand)]
enum Command {
    /// Generate params.json and the public, secret and relinearization keys.
    Keygen {
        /// Size the modulus chain for this model (reference name or JSON path).
        #[arg(long)]
        model: Option<String>,
        /// Explicit chain length (overrides --model).
        #[arg(long)]
        limbs: Option<usize>,
        /// Overwrite existing keys.
        #[arg(long)]
        force: bool,
    },
    /// Store a model in the workspace and compile it against params.json.
    Compile {
        /// Reference model (logistic, mlp, cnn) or path to a model JSON.
        #[arg(long)]
        model: String,
        #[arg(long, value_enum, default_value = "on")]
        fuse: Switch,
        #[arg(long, value_enum, default_value = "eager")]
        rescale: Rescale,
        #[arg(long, default_value_t = 1024)]
        batch: usize,
    },
    /// Encrypt CSV rows under the public key.
    Encrypt {
        #[arg(long)]
        input: PathBuf,
        /// Rows per packed request; defaults to the row count.
        #[arg(long)]
        batch: Option<usize>,
        #[arg(long, value_enum, default_value = "on")]
        batch_packing: Switch,
    },
    /// Run the compiled model on the encrypted inputs.
    Infer {
        #[arg(long, value_enum, default_value = "on")]
        fuse: Switch,
        #[arg(long, value_enum, default_value = "eager")]
        rescale: Rescale,
        #[arg(long, value_enum, default_value = "on")]
        batch_packing: Switch,
    },
    /// Decrypt outputs into a predictions CSV.
    Decrypt {
        /// Destination; defaults to predictions.csv in the workspace.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Emit only the first N rows.
        #[arg(long)]
        rows: Option<usize>,
    },
    /// Paired baseline/optimized benchmark.
    Bench {
        #[arg(long)]
        scenario: String,
        #[arg(long)]
        model: Option<String>,
        #[arg(long, default_value_t = hewflow::bench::MIN_REPETITIONS)]
        reps: usize,
        #[arg(long, default_value_t = 1024)]
        batch: usize,
    },
    /// Cluster simulation; without --config, calibrates against the
    /// reference cluster measurements and replays them.
    Simulate {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Comma-separated fixed pod counts to sweep.
        #[arg(long, value_delimiter = ',')]
        pods: Vec<usize>,
        #[arg(long)]
        horizon: Option<f64>,
    },
    /// Collect bench and simulation outputs into reports/summary.md.
    Report,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let ws = Workspace::new(&cli.workspace);
    let seed = cli.seed;
    let result = match cli.command {
        Command::Keygen { model, limbs, force } => commands::keygen(&ws, seed.unwrap_or(1), model, limbs, force),
        Command::Compile {
            model,
            fuse,
            rescale,
            batch,
        } => commands::compile(&ws, seed.unwrap_or(1), &model, fuse, rescale, batch),
        Command::Encrypt {
            input,
            batch,
            batch_packing,
        } => commands::encrypt(&ws, seed.unwrap_or(1), &input, batch, batch_packing),
        Command::Infer {
            fuse,
            rescale,
            batch_packing,
        } => commands::infer(&ws, fuse, rescale, batch_packing),
        Command::Decrypt { output, rows } => commands::decrypt(&ws, output, rows),
        Command::Bench {
            scenario,
            model,
            reps,
            batch,
        } => commands::bench(&ws, seed.unwrap_or(1), &scenario, model, reps, batch),
        Command::Simulate { config, pods, horizon } => commands::simulate(&ws, seed, config, pods, horizon),
        Command::Report => commands::report(&ws),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
