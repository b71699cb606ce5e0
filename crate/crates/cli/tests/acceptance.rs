//! Runs every acceptance criterion and prints one line per criterion.

use std::process::ExitCode;

use slidewin_cli::accept::{run_suite, Suite};

fn main() -> ExitCode {
    let seed = std::env::var("CH_SEED")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(1);
    let reports = run_suite(Suite::All, seed, |r| println!("{r}"));
    let passed = reports.iter().filter(|r| r.passed).count();
    println!("{passed}/{} criteria passed", reports.len());
    if passed == reports.len() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
