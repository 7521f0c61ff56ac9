use std::path::PathBuf;
use std::process::ExitCode;

use boundwalk_cli::{
    execute, load_config, preset, write_outputs, CliError, Command, ConfigError, PRESETS,
};
use clap::Parser;

/// Bound-particle transfer, NOON generation and phase estimation on Bose-Hubbard chains.
#[derive(Debug, Parser)]
#[command(version)]
struct Args {
    /// What to run; defaults to the `command` key of the configuration.
    #[arg(value_enum)]
    command: Option<Command>,
    /// Experiment file (TOML).
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Bundled experiment by name.
    #[arg(long)]
    preset: Option<String>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker threads, 0 for one per core.
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Recorded in the manifest; every protocol is deterministic.
    #[arg(long)]
    seed: Option<u64>,
    /// Also write a gnuplot script.
    #[arg(long)]
    gnuplot: bool,
    /// Print the bundled preset names and exit.
    #[arg(long)]
    list_presets: bool,
}

fn run(args: Args) -> Result<(), CliError> {
    let config = match (&args.config, &args.preset) {
        (Some(path), _) => load_config(path)?,
        (None, Some(name)) => preset(name)?,
        (None, None) => {
            return Err(
                ConfigError::Invalid("pass --config <file> or --preset <name>".into()).into(),
            )
        }
    };
    let command = args
        .command
        .or(config.command)
        .ok_or(ConfigError::MissingCommand)?;
    if args.threads > 0 {
        // only fails if a pool already exists, in which case the existing one is used
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(args.threads)
            .build_global();
    }
    let output = execute(command, &config)?;
    let manifest = write_outputs(&output, &config, &args.out, args.seed, args.gnuplot)?;
    for path in &manifest.outputs {
        println!("{}", path.display());
    }
    for (k, v) in &manifest.summary {
        eprintln!("{k} = {v}");
    }
    Ok(())
}

fn main() -> ExitCode {
    let args = Args::parse();
    if args.list_presets {
        for (name, _) in PRESETS {
            println!("{name}");
        }
        return ExitCode::SUCCESS;
    }
    match run(args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
