//! Runs the full classification suite and prints the verdict table, plus the
//! multiplicity splits recovered for the g = 4 families.
//!
//! cargo run --release --example classification

use cfvar::catalog::{all_match, classification_suite};
use cfvar::cli::classification_table;

fn main() -> cfvar::Result<()> {
    let reports = classification_suite()?;
    print!("{}", classification_table(&reports));
    for r in reports.iter().filter(|r| r.recovered_multiplicities.is_some()) {
        println!("{}: {} ← {}", r.family, r.parameters, r.evidence.join("; "));
    }
    if !all_match(&reports) {
        std::process::exit(1);
    }
    Ok(())
}
