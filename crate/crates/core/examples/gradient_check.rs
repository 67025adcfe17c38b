//! Compares analytic gradients with central finite differences for every loss configuration.

use fullmatch::experiment::{run_gradcheck, GradcheckShape};

fn main() -> fullmatch::Result<()> {
    let report = run_gradcheck(7, 20, &GradcheckShape::default())?;
    for r in &report.results {
        println!(
            "{:<22} max relative error {:.3e} ({} of {} batches exercise unlabelled terms)",
            r.case, r.max_relative_error, r.active_batches, r.batches
        );
    }
    println!(
        "overall {:.3e}, passed: {}",
        report.max_relative_error(),
        report.passed()
    );
    Ok(())
}
