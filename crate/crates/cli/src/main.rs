mod args;
mod commands;
mod report;
mod verify;

use std::process::ExitCode;

use clap::Parser;

use args::Cli;
use report::{emit, render, resolved_config, Failure};

fn run(cli: &Cli) -> Result<ExitCode, Failure> {
    let ctx = commands::Context::new(&cli.common)?;
    let config = resolved_config(
        &cli.common,
        &cli.command,
        ctx.mc.tail_tolerance(&ctx.params),
    )?;
    let report = commands::dispatch(&ctx, &cli.command)?;
    emit(
        &render(&config, &report, cli.common.format)?,
        cli.common.output.as_deref(),
    )?;
    Ok(if report.failed {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.common.threads {
        Some(0) => Err(Failure::Invalid("--threads must be at least 1".into())),
        Some(t) => match rayon::ThreadPoolBuilder::new().num_threads(t).build() {
            Ok(pool) => pool.install(|| run(&cli)),
            Err(e) => Err(Failure::Invalid(format!("cannot start {t} threads: {e}"))),
        },
        None => run(&cli),
    };
    outcome.unwrap_or_else(|e| {
        eprintln!("fracbin: {e}");
        e.exit_code()
    })
}
