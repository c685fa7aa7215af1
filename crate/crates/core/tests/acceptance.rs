//! Runs the eight acceptance criteria and prints one line per criterion.
//! Exits nonzero if any criterion fails.

use std::process::ExitCode;

use zerohopf_core::verify::{run_all, CriterionReport};

fn main() -> ExitCode {
    let reports: Vec<CriterionReport> = run_all();
    for r in &reports {
        println!("{}", r.summary_line());
        for c in r.checks.iter().filter(|c| !c.passed) {
            println!("    {}: {}", c.name, c.detail);
        }
    }
    let failed = reports.iter().filter(|r| !r.passed).count();
    println!("acceptance: {} passed, {failed} failed", reports.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
