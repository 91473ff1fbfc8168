//! Batch front end: metric specifications, the experiment commands and their
//! reports.

// Range checks are written `!(x > 0.0)` so that NaN fails them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod output;
pub mod spec;

use std::io::Write;

use clap::Parser;

use commands::Command;

/// Exit codes: 0 expected behavior, 2 bad input, 3 refusal, 4 property violation.
#[derive(Debug, Clone)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

#[derive(Debug, Parser)]
#[command(
    name = "lglab",
    version,
    about = "Isoperimetric profiles and conformal criticality experiments"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// Cap the worker pool at `LGLAB_THREADS` when set.
pub fn configure_threads() -> Result<(), Failure> {
    let Ok(s) = std::env::var("LGLAB_THREADS") else {
        return Ok(());
    };
    let n: usize = s.trim().parse().ok().filter(|n| *n > 0).ok_or_else(|| Failure {
        code: 2,
        message: format!("LGLAB_THREADS must be a positive integer, got `{s}`"),
    })?;
    // a second initialization in the same process keeps the first pool
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

/// Run a parsed command line and return the process exit code.
pub fn execute(cli: &Cli) -> i32 {
    let result = configure_threads().and_then(|_| commands::run(&cli.command));
    let (report, outcome) = match result {
        Ok(r) => r,
        Err(f) => {
            eprintln!("lglab: {}", f.message);
            return f.code;
        }
    };
    let c = cli.command.common();
    let body = if c.json {
        report.to_json()
    } else {
        outcome.table.clone()
    };
    let written = match &c.out {
        Some(path) => output::write_atomic(path, &body),
        None => std::io::stdout().write_all(body.as_bytes()),
    };
    if let Err(e) = written {
        eprintln!("lglab: cannot write output: {e}");
        return 1;
    }
    if let (Some(path), Some(w)) = (&c.witness, &outcome.witness) {
        let mut text = serde_json::to_string_pretty(w).expect("witness serializes");
        text.push('\n');
        if let Err(e) = output::write_atomic(path, &text) {
            eprintln!("lglab: cannot write witness: {e}");
            return 1;
        }
    }
    eprintln!("{}: {}", report.command, report.verdict);
    outcome.code
}
