use clap::Parser;
use std::io::{IsTerminal, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use virtspin_cli::config::OutputFormat;
use virtspin_cli::{parse_config, run, CliError, Command, Overrides};

/// Two-spin virtual-qubit experiments.
#[derive(Parser, Debug)]
#[command(name = "virtspin", version)]
struct Args {
    #[command(subcommand)]
    command: Command,
    /// JSON run configuration
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides output.dir)
    #[arg(long, global = true)]
    out: Option<String>,
    #[arg(long, global = true, value_enum)]
    format: Option<OutputFormat>,
    /// Also write the synthesized pulse program (gate)
    #[arg(long, global = true)]
    emit_pulses: bool,
    /// Exit with status 5 when fidelity_phase_opt falls below this (gate)
    #[arg(long, global = true)]
    fidelity_floor: Option<f64>,
    /// Seed for random_local_fields ensembles
    #[arg(long, global = true)]
    seed: Option<u64>,
}

fn color() -> bool {
    std::env::var_os("VIRTSPIN_NO_COLOR").is_none() && std::io::stderr().is_terminal()
}

fn execute(args: &Args) -> Result<(), CliError> {
    let path = args.config.as_ref().ok_or_else(|| CliError::Config {
        path: String::new(),
        message: "--config <path> is required".into(),
    })?;
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let overrides = Overrides {
        out: args.out.clone(),
        format: args.format,
        fidelity_floor: args.fidelity_floor,
        seed: args.seed,
    };
    let cfg = parse_config(&text, &overrides)?;
    for file in run(args.command, &cfg, args.emit_pulses)? {
        log::info!("wrote {}", file.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let args = Args::parse();
    let style = if color() { env_logger::WriteStyle::Auto } else { env_logger::WriteStyle::Never };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .write_style(style)
        .init();
    match execute(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let mut err = std::io::stderr().lock();
            let _ = if color() {
                writeln!(err, "\x1b[1;31merror\x1b[0m: {e}")
            } else {
                writeln!(err, "error: {e}")
            };
            ExitCode::from(e.exit_code())
        }
    }
}
