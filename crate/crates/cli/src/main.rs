mod args;
mod run;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Format};
use run::{execute, Failure};

fn emit(outcome: &run::Outcome, format: Format, out: &mut dyn Write) -> anyhow::Result<()> {
    match format {
        Format::Json => writeln!(out, "{}", outcome.envelope.to_json()?)?,
        Format::Csv => outcome.envelope.write_csv(&mut *out)?,
        Format::Table => write!(out, "{}", outcome.envelope.render_table())?,
    }
    out.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.global.threads {
        if threads == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            eprintln!("error: cannot size worker pool: {e}");
            return ExitCode::from(1);
        }
    }

    let outcome = match execute(&cli.command, &cli.global) {
        Ok(o) => o,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            return ExitCode::from(2);
        }
        Err(Failure::Compute(e)) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(1);
        }
    };

    let written = match &cli.global.output {
        Some(path) => File::create(path)
            .map_err(anyhow::Error::from)
            .and_then(|f| emit(&outcome, cli.global.format, &mut BufWriter::new(f))),
        None => emit(&outcome, cli.global.format, &mut io::stdout().lock()),
    };
    if let Err(e) = written {
        eprintln!("error: writing report: {e:#}");
        return ExitCode::from(1);
    }
    if !outcome.passed {
        eprintln!("bench: one or more gated cells fell outside their band");
        return ExitCode::from(1);
    }
    ExitCode::SUCCESS
}
