//! One line per acceptance criterion; exits nonzero if any fails.

use std::process::ExitCode;

use tslab::verify::run_suite;

fn main() -> ExitCode {
    let filter = std::env::args().skip(1).find(|a| !a.starts_with('-'));
    let checks = run_suite(filter.as_deref(), |c| println!("{c}"));
    let failed: Vec<&str> = checks.iter().filter(|c| !c.passed).map(|c| c.name).collect();
    println!("acceptance: {} checks, {} failed", checks.len(), failed.len());
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        eprintln!("failed: {failed:?}");
        ExitCode::FAILURE
    }
}
