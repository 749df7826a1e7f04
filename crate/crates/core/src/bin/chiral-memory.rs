use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use chiral_memory::config::{parse_config, preset, preset_text, PRESETS};
use chiral_memory::runner::run;

#[derive(Parser)]
#[command(
    name = "chiral-memory",
    version,
    about = "Chiral-atom quantum memory simulations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment from a config file or a built-in preset.
    Run {
        /// TOML config file.
        #[arg(long, required_unless_present = "preset", conflicts_with = "preset")]
        config: Option<PathBuf>,
        /// Output directory, overriding `output_dir` from the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Built-in preset to run instead of a config file.
        #[arg(long, value_parser = PRESETS)]
        preset: Option<String>,
        /// Worker threads for sweeps; defaults to the number of cores.
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Print the config of a built-in preset.
    Preset {
        #[arg(value_parser = PRESETS)]
        name: String,
    },
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn execute(cli: Cli) -> Result<(), Box<dyn std::error::Error>> {
    match cli.command {
        Command::Preset { name } => {
            print!("{}", preset_text(&name).unwrap_or_default());
            Ok(())
        }
        Command::Run {
            config,
            out,
            preset: name,
            threads,
        } => {
            if let Some(n) = threads {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global()?;
            }
            let mut cfg = match (config, name) {
                (Some(path), _) => {
                    let text = std::fs::read_to_string(&path)
                        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
                    parse_config(&text)?
                }
                (None, Some(name)) => preset(&name)?,
                (None, None) => unreachable!("clap requires --config or --preset"),
            };
            if let Some(dir) = out {
                cfg.output_dir = dir;
            }
            for path in run(&cfg)? {
                println!("{}", path.display());
            }
            Ok(())
        }
    }
}
