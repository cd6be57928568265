//! Runs the quick validation profile and prints every check.

use cbs_spectrum::validate::{run_validation, Profile};

fn main() {
    let checks = run_validation(Profile::Quick);
    for c in &checks {
        println!(
            "[{:2}] {} {:<62} expected {:>13.6e} actual {:>13.6e}",
            c.criterion,
            if c.pass { "pass" } else { "FAIL" },
            c.check,
            c.expected,
            c.actual
        );
    }
    let failed = checks.iter().filter(|c| !c.pass).count();
    println!("{} checks, {failed} failed", checks.len());
}
