use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use noisemorph::eval::{run_acceptance, write_csv, MetricReport};

/// Objective checks of the time-stretching pipeline.
#[derive(Debug, Parser)]
#[command(name = "harness", version)]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the acceptance criteria and print a metric table.
    RunAcceptance {
        /// Only criteria whose name contains this text (or whose number it is).
        #[arg(long)]
        filter: Option<String>,
        /// Also write the table as CSV.
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let Args { command } = Args::parse();
    let Command::RunAcceptance { filter, report } = command;
    let outcomes = match run_acceptance(filter.as_deref()) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    if outcomes.is_empty() {
        eprintln!("no criterion matches the filter");
        return ExitCode::from(2);
    }
    for o in &outcomes {
        for r in &o.reports {
            println!("  {r}");
        }
        println!("{}", o.summary_line());
    }
    if let Some(path) = report {
        let mut rows: Vec<MetricReport> = outcomes.iter().flat_map(|o| o.reports.clone()).collect();
        rows.sort_by(|a, b| a.case.cmp(&b.case).then_with(|| a.metric.cmp(&b.metric)));
        if let Err(e) = write_csv(&path, &rows) {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    }
    let failed = outcomes.iter().filter(|o| !o.pass()).count();
    println!("RESULT: {} criteria, {} failed", outcomes.len(), failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
