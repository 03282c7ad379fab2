//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.
//!
//! Criteria 1 to 10 run once on a single-thread pool; criterion 11 reruns all
//! of them on an eight-thread pool and compares every number produced.

use std::process::ExitCode;
use std::time::Instant;

use wigner_lab_validation::{line, run_all};

fn main() -> ExitCode {
    println!("acceptance suite");
    let first = run_all(1, true);
    let t = Instant::now();
    let second = run_all(8, false);
    let mismatched: Vec<usize> = first
        .iter()
        .zip(&second)
        .enumerate()
        .filter(|(_, (a, b))| a.fingerprint != b.fingerprint)
        .map(|(k, _)| k + 1)
        .collect();
    let deterministic = mismatched.is_empty();
    line(
        11,
        "determinism",
        deterministic,
        t.elapsed().as_secs_f64(),
        &if deterministic {
            "rerun on 8 threads reproduces every number of the serial run".to_owned()
        } else {
            format!("criteria {mismatched:?} differ between serial and 8-thread runs")
        },
    );
    let failed = first.iter().filter(|o| !o.pass).count() + usize::from(!deterministic);
    println!("acceptance: {} of 11 criteria pass", 11 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
