//! Acceptance suite: one PASS/FAIL line per criterion, with timing against its budget.

use std::process::ExitCode;

use qlangevin::checks::{run_suite, Suite};

fn main() -> ExitCode {
    let results = run_suite(Suite::All);
    for r in &results {
        println!("{}", r.line());
    }
    let failed: Vec<String> = results.iter().filter(|r| !r.passed).map(|r| r.criterion.to_string()).collect();
    println!("acceptance: {}/{} criteria pass", results.len() - failed.len(), results.len());
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("failing criteria: {}", failed.join(", "));
        ExitCode::FAILURE
    }
}
