//! Build the canonical stress-energy tensor and evaluate its energy density
//! on the static Yukawa field, in two independent ways.
//!
//! Run with: cargo run --example stress_energy

use std::f64::consts::PI;

use fieldlint::numeric::{yukawa_t00, yukawa_t00_closed};
use fieldlint::{parse, poly_degree, render, stress_energy};

fn main() {
    let model = parse(
        "field phi : real scalar\nconst m dim -1\n\
         L = 1/2 * (d_{mu}(phi) * d_{nu}(phi) * g^{mu nu} - m^2 * phi^2)",
    )
    .unwrap();
    let t = stress_energy(&model, "phi").unwrap();
    println!("T^(mu nu) = {}", render(&t));
    println!(
        "degree in m: {} (dust would be linear in its mass density)\n",
        poly_degree(&t, "m").unwrap()
    );

    let g = 4.0 * PI;
    println!(
        "{:>6} {:>6} {:>16} {:>16}",
        "m", "r", "T00 (symbolic)", "T00 (closed)"
    );
    for (m, r) in [(1.0, 1.0), (1.0, 2.0), (0.0, 2.0), (5.0, 0.5)] {
        let sym = yukawa_t00(g, m, r).unwrap();
        let closed = yukawa_t00_closed(g, m, r).unwrap();
        println!("{m:>6} {r:>6} {sym:>16.10} {closed:>16.10}");
    }
}
