//! `photon-field`: derive photon wavefunctionals, find most likely spectra, sample
//! the field ensemble and run the acceptance checks.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{RunConfig, Settings};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: `{key}`: {message}")]
    Config { key: String, message: String },
    #[error("{0}")]
    Numeric(String),
    #[error(transparent)]
    Core(#[from] photon_field::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config { .. } => 2,
            _ => 3,
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "photon-field", version, about)]
struct Cli {
    #[command(flatten)]
    flags: Flags,
    #[command(subcommand)]
    command: Command,
}

/// Overrides for the `key = value` config file; flags win.
#[derive(Args, Debug)]
struct Flags {
    /// Config file of `key = value` lines
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Number of lattice sites (even, >= 4)
    #[arg(long, global = true, allow_hyphen_values = true)]
    grid_n: Option<String>,
    /// Box length; accepts multiples of pi such as `20pi`
    #[arg(long, global = true, allow_hyphen_values = true)]
    box_length: Option<String>,
    /// Infrared mass in w = sqrt(p^2 + m^2)
    #[arg(long, global = true, allow_hyphen_values = true)]
    mass: Option<String>,
    /// Keep the k = 0 mode (needs mass > 0)
    #[arg(long, global = true)]
    zero_mode: bool,
    /// Photon mode index k
    #[arg(long, global = true, allow_hyphen_values = true)]
    mode: Option<String>,
    /// Photons in `mode`; 0 means vacuum
    #[arg(long, global = true, allow_hyphen_values = true)]
    count: Option<String>,
    /// Second photon mode for two-momentum content
    #[arg(long, global = true, allow_hyphen_values = true)]
    mode2: Option<String>,
    /// Photon momentum |p| used by `verify`
    #[arg(long, global = true, allow_hyphen_values = true)]
    momentum: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    samples: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    seed: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    batches: Option<String>,
    /// Directory for report files
    #[arg(long, global = true)]
    out: Option<String>,
    /// Stdout format: csv or json
    #[arg(long, global = true)]
    format: Option<String>,
    /// Worker threads (default: all cores)
    #[arg(long, global = true, allow_hyphen_values = true)]
    threads: Option<String>,
    /// Write every sample as CSV to this path
    #[arg(long, global = true)]
    dump_samples: Option<String>,
    /// Also run a vacuum ensemble for comparison
    #[arg(long, global = true)]
    baseline: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print Q_0..Q_n and check them against the Hermite closed form
    Polynomials {
        #[arg(long, default_value_t = 4)]
        n_max: u32,
    },
    /// Most likely spectral density and autocorrelation
    Optimize,
    /// Ensemble mean spectral density
    Sample,
    /// Ensemble autocorrelation
    Autocorr,
    /// Run the acceptance criteria
    Verify {
        /// Print criterion ids and exit
        #[arg(long)]
        list: bool,
        /// Run only these criteria
        #[arg(long = "criterion")]
        criteria: Vec<String>,
    },
}

fn settings(flags: &Flags) -> Result<Settings, CliError> {
    let mut s = Settings::default();
    if let Some(path) = &flags.config {
        s.load_file(path)?;
    }
    let pairs = [
        ("grid_n", &flags.grid_n),
        ("box_length", &flags.box_length),
        ("mass", &flags.mass),
        ("mode", &flags.mode),
        ("count", &flags.count),
        ("mode2", &flags.mode2),
        ("momentum", &flags.momentum),
        ("samples", &flags.samples),
        ("seed", &flags.seed),
        ("batches", &flags.batches),
        ("out", &flags.out),
        ("format", &flags.format),
        ("threads", &flags.threads),
        ("dump_samples", &flags.dump_samples),
    ];
    for (key, value) in pairs {
        if let Some(v) = value {
            s.set(key, v.as_str())?;
        }
    }
    if flags.zero_mode {
        s.set("zero_mode", "true")?;
    }
    if flags.baseline {
        s.set("baseline", "true")?;
    }
    Ok(s)
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = RunConfig::from_settings(&settings(&cli.flags)?)?;
    if let Some(n) = cfg.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| config::config_error("threads", e.to_string()))?;
    }
    match cli.command {
        Command::Polynomials { n_max } => commands::polynomials(&cfg, n_max),
        Command::Optimize => commands::optimize(&cfg),
        Command::Sample => commands::sample(&cfg, false),
        Command::Autocorr => commands::sample(&cfg, true),
        Command::Verify { list, criteria } => commands::verify(&cfg, list, &criteria),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Io(e)) if e.kind() == std::io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
