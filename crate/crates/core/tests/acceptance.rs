//! Acceptance suite on the desk-scale grid (N = 128, L = 20π).
//!
//! Prints one line per criterion; tolerances live in `photon_field::verify`.

use std::process::ExitCode;

use photon_field::verify::{run_all, VerifyConfig, CRITERIA};

fn main() -> ExitCode {
    let results = run_all(&VerifyConfig::default());
    assert_eq!(results.len(), CRITERIA.len());
    for r in &results {
        println!(
            "{} {:<28} {:>7.2}s  {}",
            if r.passed { "PASS" } else { "FAIL" },
            r.id,
            r.seconds,
            r.detail
        );
    }
    let failed: Vec<&str> = results.iter().filter(|r| !r.passed).map(|r| r.id).collect();
    println!("acceptance: {} of {} criteria passed", results.len() - failed.len(), results.len());
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("failed criteria: {failed:?}");
        ExitCode::FAILURE
    }
}
