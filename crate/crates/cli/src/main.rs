use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use magneto_perceptron::config::{Backend, Mode, RunConfig, Verbosity};
use magneto_perceptron::{run, Error};

#[derive(Parser)]
#[command(name = "magneto", version, about = "Train and emulate the all-optical magnetic perceptron")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train on the abstract weight vector.
    Simulate(Common),
    /// Train on the emulated optical bench.
    Emulate(Common),
    /// Export the 27-pattern dataset.
    Dataset(Common),
    /// Energy ledger of an emulated run plus the calibration energies.
    Energy(Common),
    /// Summaries over a range of seeds.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Number of seeds, starting at --seed.
        #[arg(long)]
        seeds: Option<usize>,
        #[arg(long, value_enum)]
        backend: Option<BackendArg>,
    },
}

#[derive(Args)]
struct Common {
    /// Config file with `section.key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Dump PGM frames (emulate).
    #[arg(long)]
    frames: bool,
    /// Keep a weight-state snapshot for every step (emulate).
    #[arg(long)]
    verbose: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendArg {
    Simulate,
    Emulate,
}

fn resolve(mode: Mode, common: &Common) -> Result<RunConfig, Error> {
    let mut cfg = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    cfg.mode = mode;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &common.out {
        cfg.output_dir = out.clone();
    }
    if common.frames {
        cfg.frames = true;
    }
    if common.verbose {
        cfg.verbosity = Verbosity::High;
    }
    Ok(cfg)
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config { .. } | Error::Usage(_) => 2,
        Error::Io(_) | Error::Csv(_) | Error::Json(_) => 3,
        Error::DegenerateBackground(_) => 1,
    }
}

fn execute(cli: Cli) -> Result<String, Error> {
    let cfg = match &cli.command {
        Command::Simulate(c) => resolve(Mode::Simulate, c)?,
        Command::Emulate(c) => resolve(Mode::Emulate, c)?,
        Command::Dataset(c) => resolve(Mode::Dataset, c)?,
        Command::Energy(c) => resolve(Mode::Energy, c)?,
        Command::Sweep { common, seeds, backend } => {
            let mut cfg = resolve(Mode::Sweep, common)?;
            if let Some(n) = seeds {
                cfg.sweep.seeds = *n;
            }
            if let Some(b) = backend {
                cfg.sweep.backend = match b {
                    BackendArg::Simulate => Backend::Simulate,
                    BackendArg::Emulate => Backend::Emulate,
                };
            }
            cfg
        }
    };
    cfg.validate()?;
    let report = run::run(&cfg)?;
    Ok(format!("{}\nwrote {} files to {}", report.summary, report.files.len(), cfg.output_dir.display()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(msg) => {
            println!("{msg}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
