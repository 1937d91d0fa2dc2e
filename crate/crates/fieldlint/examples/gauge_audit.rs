//! Derive the potential's field equation and test it under A -> A + d(chi).
//!
//! Run with: cargo run --example gauge_audit

use fieldlint::{derive_em_equation, gauge_check, parse, render};

const MAXWELLIAN: &str = "\
field A : real vector
field J : real vector
const e dim 0
L = -1/16 * pi^-1 * (d^{mu}(A^{nu}) - d^{nu}(A^{mu})) * (d_{mu}(A_{nu}) - d_{nu}(A_{mu}))
  - e * J^{mu} * A_{mu}
";

const CHARGED_SCALAR: &str = "\
field phi : complex scalar
field A : real vector
const m dim -1
const e dim 0
L = d_{mu}(conj(phi)) * d_{nu}(phi) * g^{mu nu} - m^2 * conj(phi) * phi
  + i * e * (d_{mu}(conj(phi)) * phi - conj(phi) * d_{mu}(phi)) * A^{mu}
  + e^2 * A_{mu} * A^{mu} * conj(phi) * phi
  - 1/16 * pi^-1 * (d^{mu}(A^{nu}) - d^{nu}(A^{mu})) * (d_{mu}(A_{nu}) - d_{nu}(A_{mu}))
";

fn main() {
    for (name, text) in [
        ("external current", MAXWELLIAN),
        ("charged scalar", CHARGED_SCALAR),
    ] {
        let model = parse(text).unwrap();
        let eq = derive_em_equation(&model).unwrap();
        println!("{name}:");
        println!("  equation: {} = 0", render(&eq.lhs));
        let verdict = gauge_check(&eq).unwrap();
        if verdict.pass {
            println!(
                "  gauge invariant under {0} -> {0} + d(chi)",
                verdict.gauge_field
            );
        } else {
            println!(
                "  NOT gauge invariant; residual: {}",
                render(&verdict.witness)
            );
        }
        println!();
    }
}
