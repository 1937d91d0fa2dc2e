//! Infer natural-units dimensions and audit the scalar/[L^-4] requirements.
//!
//! Run with: cargo run --example dimension_audit

use fieldlint::{check_requirements, infer_dimensions, parse};

fn main() {
    for (name, text) in [
        (
            "free scalar",
            "field phi : real scalar\nconst m dim -1\n\
             L = 1/2 * (d_{mu}(phi) * d_{nu}(phi) * g^{mu nu} - m^2 * phi^2)",
        ),
        (
            "free spinor",
            "field psi : complex spinor\nconst m dim -1\n\
             L = psibar * (i * gamma^{mu} * d_{mu}(psi) - m * psi)",
        ),
    ] {
        let model = parse(text).unwrap();
        let table = infer_dimensions(&model).unwrap();
        println!("{name}:");
        for (field, dim) in &table.fields {
            println!("  dim({field}) = L^{dim}");
        }
        let report = check_requirements(&model);
        print!("{}", report.to_text(false));
        println!();
    }
}
