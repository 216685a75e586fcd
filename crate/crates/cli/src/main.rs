use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use serde_json::Value;
use shocktube_cli::config::{apply_set, load};
use shocktube_cli::{resolved_config, run, CliError, CommandName};

/// Steady states and spectral stability of viscous shock-tube models.
#[derive(Debug, Parser)]
#[command(version)]
struct Args {
    command: CommandName,
    /// JSON config; defaults apply to everything it leaves out.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Override a config entry, e.g. `--set grid.dc1.n=20` (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
    /// Output directory (overrides `output_dir`).
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Worker threads (overrides `workers`).
    #[arg(short = 'j', long)]
    workers: Option<usize>,
    /// Print the fully resolved config and exit.
    #[arg(long)]
    print_config: bool,
}

fn main_inner(args: Args) -> Result<(), CliError> {
    let mut value: Value = load(args.config.as_deref(), &args.sets)?;
    if let Some(o) = &args.output {
        apply_set(&mut value, &format!("output_dir={}", Value::String(o.display().to_string())))?;
    }
    if let Some(w) = args.workers {
        apply_set(&mut value, &format!("workers={w}"))?;
    }
    if args.print_config {
        let v = resolved_config(args.command, value)?;
        println!("{}", serde_json::to_string_pretty(&v).expect("serializable"));
        return Ok(());
    }
    let outcome = run(args.command, value)?;
    println!("{}", serde_json::to_string_pretty(&outcome.summary).expect("serializable"));
    eprintln!("wrote {}", outcome.manifest.display());
    Ok(())
}

fn main() -> ExitCode {
    match main_inner(Args::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
