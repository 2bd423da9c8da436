use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use pathtransport::harness::{exit_code_for, run, Command, Format, RunConfig, EXIT_PARSE};

/// Run transports, Wilson loops, law suites and convergence tables from a JSON config.
#[derive(Debug, Parser)]
#[command(name = "pathtransport", version)]
struct Cli {
    /// JSON run config.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Command to run; overrides the config.
    #[arg(long, value_enum)]
    command: Option<CliCommand>,
    /// Law tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Integrator steps.
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long, value_enum)]
    format: Option<CliFormat>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum CliCommand {
    Transport,
    Wilson,
    Laws,
    Roundtrip,
    Convergence,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum CliFormat {
    Json,
    Csv,
}

fn load(cli: &Cli) -> Result<RunConfig, String> {
    let mut cfg = match &cli.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))?;
            let mut value: serde_json::Value = serde_json::from_str(&text).map_err(|e| e.to_string())?;
            if let (Some(c), Some(obj)) = (cli.command, value.as_object_mut()) {
                obj.insert("command".into(), serde_json::Value::String(command_name(c).into()));
            }
            serde_json::from_value::<RunConfig>(value).map_err(|e| e.to_string())?
        }
        None => RunConfig::new(cli.command.map(command).ok_or("either --config or --command is required")?),
    };
    if let Some(tol) = cli.tol {
        cfg.tol = tol;
    }
    if let Some(steps) = cli.steps {
        cfg.integrator.steps = steps;
    }
    if let Some(f) = cli.format {
        cfg.format = match f {
            CliFormat::Json => Format::Json,
            CliFormat::Csv => Format::Csv,
        };
    }
    if cli.out.is_some() {
        cfg.out = cli.out.clone();
    }
    Ok(cfg)
}

fn command(c: CliCommand) -> Command {
    match c {
        CliCommand::Transport => Command::Transport,
        CliCommand::Wilson => Command::Wilson,
        CliCommand::Laws => Command::Laws,
        CliCommand::Roundtrip => Command::Roundtrip,
        CliCommand::Convergence => Command::Convergence,
    }
}

fn command_name(c: CliCommand) -> &'static str {
    match c {
        CliCommand::Transport => "transport",
        CliCommand::Wilson => "wilson",
        CliCommand::Laws => "laws",
        CliCommand::Roundtrip => "roundtrip",
        CliCommand::Convergence => "convergence",
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_PARSE as u8 } else { 0 });
        }
    };
    let cfg = match load(&cli) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_PARSE as u8);
        }
    };
    match run(&cfg) {
        Ok(outcome) => {
            if cfg.out.is_none() {
                println!("{}", outcome.rendered);
            }
            ExitCode::from(outcome.exit_code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e) as u8)
        }
    }
}
