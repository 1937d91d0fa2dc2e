//! Compare the normalized plane-wave action rate with the classical
//! point-particle action rate.
//!
//! Run with: cargo run --example plane_wave_action

use fieldlint::numeric::{
    action_box, classical_action_rate, BoxSpec, FieldAssignment, FieldConfig,
};
use fieldlint::parse;

fn main() {
    let model = parse(
        "field phi : complex scalar\nconst m dim -1\n\
         L = d_{mu}(conj(phi)) * d_{nu}(phi) * g^{mu nu} - m^2 * conj(phi) * phi",
    )
    .unwrap();
    let b = BoxSpec {
        lx: 1.0,
        ly: 1.0,
        lz: 1.0,
        duration: 1.0,
    };

    let m = 1.0_f64;
    let p = 1.0_f64;
    for energy in [(p * p + m * m).sqrt(), 2.0] {
        let cfg = FieldConfig::new()
            .assign(
                "phi",
                FieldAssignment::PlaneWave {
                    energy,
                    momentum: [0.0, 0.0, p],
                },
            )
            .constant("m", m);
        let rate = action_box(&model, &cfg, &b, true).unwrap();
        let shell = if (energy * energy - p * p - m * m).abs() < 1e-9 {
            "on "
        } else {
            "off"
        };
        println!("E = {energy:.6} ({shell} shell): normalized dS/dt = {rate:.12}");
    }

    // The classical rate -m sqrt(1 - v^2) is -m at rest: nonzero, while the
    // on-shell wave rate above is identically zero.
    let classical = classical_action_rate(m, 0.0).unwrap();
    println!("classical particle at rest:  dS/dt = {classical:.12}");
}
