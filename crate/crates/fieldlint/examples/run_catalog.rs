//! Run the whole built-in scenario catalog and print each report.
//!
//! Run with: cargo run --example run_catalog

use fieldlint::scenario::{Catalog, ScenarioOptions};

fn main() {
    let catalog = Catalog::builtin();
    let opts = ScenarioOptions::default();
    let mut all_passed = true;
    for id in catalog.list() {
        match catalog.run(&id, &opts) {
            Ok(report) => {
                print!("{}", report.to_text(false));
                all_passed &= report.passed();
            }
            Err(e) => {
                eprintln!("{id}: {e}");
                all_passed = false;
            }
        }
    }
    println!(
        "\ncatalog: {}",
        if all_passed {
            "all scenarios PASS"
        } else {
            "FAILURES present"
        }
    );
    std::process::exit(if all_passed { 0 } else { 1 });
}
