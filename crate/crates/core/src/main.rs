use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qbuffer::harness::{run_to_dir, with_threads, Scenario, ScenarioKind};
use qbuffer::Error;

#[derive(Parser)]
#[command(name = "qbuffer", version, about = "Temporal-mode filtering of noisy single photons")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file and write CSV tables.
    Run {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory; defaults to the scenario's `output_dir` or `out/<name>`.
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Worker threads (0 = all cores).
        #[arg(long, env = "QBUFFER_THREADS", default_value_t = 0)]
        threads: usize,
        #[arg(long)]
        grid_points: Option<usize>,
    },
    /// Parse and validate a scenario file, then print its canonical form.
    Validate { config: PathBuf },
    /// List the scenario kinds.
    ListScenarios,
    /// Print the version.
    Version,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Scenario { source, .. } => exit_code(source),
        Error::Parse(_) | Error::Validation { .. } => 1,
        Error::Io(_) | Error::Csv(_) => 3,
        _ => 2,
    }
}

fn load(path: &PathBuf) -> Result<Scenario, Error> {
    Scenario::parse(&std::fs::read_to_string(path)?)
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Run {
            config,
            seed,
            out_dir,
            threads,
            grid_points,
        } => {
            let mut scenario = load(&config)?;
            if let Some(s) = seed {
                scenario.reseed(s);
            }
            if let Some(n) = grid_points {
                scenario.grid.n_points = n;
            }
            let scenario = scenario.canonicalize()?;
            let dir = out_dir
                .or_else(|| scenario.output_dir.clone().map(PathBuf::from))
                .unwrap_or_else(|| PathBuf::from("out").join(&scenario.name));
            log::info!("running {} ({}) into {}", scenario.name, scenario.kind.name(), dir.display());
            let record = with_threads(threads, || run_to_dir(&scenario, &dir))??;
            println!(
                "{}: {} file(s) in {} ({:.1} s)",
                record.scenario,
                record.files.len(),
                dir.display(),
                record.wall_clock_s
            );
            Ok(())
        }
        Command::Validate { config } => {
            let scenario = load(&config)?.canonicalize()?;
            print!("{}", scenario.to_canonical_toml()?);
            Ok(())
        }
        Command::ListScenarios => {
            for k in ScenarioKind::ALL {
                println!("{:20} {}", k.name(), k.summary());
            }
            Ok(())
        }
        Command::Version => {
            println!("qbuffer {}", env!("CARGO_PKG_VERSION"));
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
