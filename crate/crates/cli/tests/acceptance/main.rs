//! One PASS/FAIL line per acceptance criterion. Exits non-zero if any
//! criterion fails.

mod common;
mod composition;
mod determinism;
mod fidelity;
mod gradients;
mod persistence;
mod robustness;
mod tuning;
mod workflows;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

type Check = fn() -> Result<String, String>;

const CRITERIA: [(&str, Check); 8] = [
    ("demo listing fidelity", fidelity::check),
    ("workflow parity", workflows::check),
    ("gradient suite", gradients::check),
    ("persistence", persistence::check),
    ("autotune oracle", tuning::check),
    ("determinism", determinism::check),
    ("syntax robustness", robustness::check),
    ("composition laws", composition::check),
];

fn main() -> ExitCode {
    let mut failed = 0;
    for (i, (name, check)) in CRITERIA.iter().enumerate() {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS {}: {name} ({detail}; {secs:.1}s)", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {}: {name}: {why}", i + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
