use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use tpflow_cli::run::config_failure;
use tpflow_cli::{init_threads, parse_config, run, threads_from_env, Subcommand, EXIT_CONFIG};

/// Time-periodic Oseen and Navier-Stokes solvers and estimate audits.
#[derive(Parser, Debug)]
#[command(name = "tpflow", version)]
struct Cli {
    /// One of: solve-linear, solve-nonlinear, mms, audit-estimate, audit-modewise,
    /// audit-embedding, audit-pressure, audit-nonlinear-term, wake, norms, export-vtk.
    subcommand: Subcommand,
    /// Run configuration (`key=value` lines).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `io.out`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Random seed; overrides `seed`.
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let name = cli.subcommand.name();
    let fallback_out = cli.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    let fail = |msg: String| {
        eprintln!("tpflow {name}: {msg}");
        config_failure(name, &fallback_out, &msg);
        ExitCode::from(EXIT_CONFIG as u8)
    };
    let threads = match threads_from_env(std::env::var("TPFLOW_THREADS").ok().as_deref()) {
        Ok(n) => n,
        Err(e) => return fail(e),
    };
    if let Err(e) = init_threads(threads) {
        return fail(e);
    }
    let text = match std::fs::read_to_string(&cli.config) {
        Ok(t) => t,
        Err(e) => return fail(format!("cannot read {}: {e}", cli.config.display())),
    };
    let cfg = match parse_config(&text) {
        Ok(c) => c.with_overrides(cli.out, cli.seed),
        Err(e) => return fail(format!("{}: {e}", cli.config.display())),
    };
    let manifest = run(cli.subcommand, &cfg);
    for e in &manifest.errors {
        eprintln!("tpflow {name}: {e}");
    }
    ExitCode::from(manifest.exit_code as u8)
}
