//! A motionless charged wave in a constant potential does not satisfy its
//! own interacting wave equation: the residual is exactly U^2.
//!
//! Run with: cargo run --example electrostatic_residual

use fieldlint::numeric::{electrostatic_config, kg_em_residual};

fn main() {
    println!("residual/phi of (box + 2ieA.d + m^2) on e^(-iEt), E = m + U\n");
    println!("{:>6} {:>6} {:>14} {:>14}", "m", "U", "residual", "U^2");
    for m in [0.1, 1.0, 10.0] {
        for u in [-1.0, -0.1, 0.0, 0.1, 1.0] {
            let cfg = electrostatic_config(m, 1.0, u);
            let r = kg_em_residual(&cfg, m, 1.0).unwrap();
            println!("{m:>6} {u:>6} {:>14.9} {:>14.9}", r.re, u * u);
        }
    }
    println!("\nthe interaction term fails to cancel the potential's square;");
    println!("the leftover U^2 phi means no consistent electrostatic coupling.");
}
