//! Acceptance suite. Prints one PASS/FAIL line per criterion, followed by
//! the failing metrics, and exits non-zero if any criterion fails.
//!
//! `cargo test --test acceptance [-- <filter>]`

use std::process::ExitCode;

use noisemorph::eval::acceptance::run_criterion;
use noisemorph::eval::criteria;

fn main() -> ExitCode {
    // libtest-style flags such as --nocapture are accepted and ignored
    let filter = std::env::args().skip(1).find(|a| !a.starts_with('-'));
    let mut failed = 0;
    let mut ran = 0;
    for c in criteria() {
        if let Some(f) = &filter {
            if !c.name.contains(f.as_str()) && c.id.to_string() != *f {
                continue;
            }
        }
        ran += 1;
        match run_criterion(c) {
            Ok(outcome) => {
                println!("{}", outcome.summary_line());
                for r in outcome.reports.iter().filter(|r| !r.pass) {
                    println!("    {r}");
                }
                if !outcome.pass() {
                    failed += 1;
                }
            }
            Err(e) => {
                println!("criterion {:>2} {}: FAIL (error: {e})", c.id, c.name);
                failed += 1;
            }
        }
    }
    println!("acceptance: {} criteria, {} passed, {} failed", ran, ran - failed, failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
