//! Derive field equations by Euler-Lagrange variation.
//!
//! Run with: cargo run --example derive_eom

use fieldlint::{euler_lagrange, parse, render, VariationTarget};

fn main() {
    // A free real scalar: varying phi gives the massive wave equation.
    let free = parse(
        "field phi : real scalar\n\
         const m dim -1\n\
         L = 1/2 * (d_{mu}(phi) * d_{nu}(phi) * g^{mu nu} - m^2 * phi^2)",
    )
    .unwrap();
    let eq = euler_lagrange(&free, &VariationTarget::field("phi")).unwrap();
    println!("free scalar:   {} = 0", render(&eq.lhs));

    // A complex scalar coupled through its current: varying conj(phi)
    // picks up the 2ieA.d term (the model assumes the Lorenz gauge).
    let coupled = parse(
        "field phi : complex scalar\n\
         field A : real vector dim -1\n\
         const m dim -1\n\
         const e dim 0\n\
         assume lorenz_gauge\n\
         L = d_{mu}(conj(phi)) * d_{nu}(phi) * g^{mu nu} - m^2 * conj(phi) * phi\n\
           - e * i * (conj(phi) * d^{mu}(phi) - d^{mu}(conj(phi)) * phi) * A_{mu}",
    )
    .unwrap();
    let eq = euler_lagrange(&coupled, &VariationTarget::conj("phi")).unwrap();
    println!("coupled scalar: {} = 0", render(&eq.lhs));
    println!("  assumptions used: {:?}", eq.assumptions_used);

    // The Dirac density is first order; varying the adjoint spinor gives
    // the first-order equation directly.
    let dirac = parse(
        "field psi : complex spinor\n\
         const m dim -1\n\
         L = psibar * (i * gamma^{mu} * d_{mu}(psi) - m * psi)",
    )
    .unwrap();
    let eq = euler_lagrange(&dirac, &VariationTarget::field("psibar")).unwrap();
    println!("dirac:         {} = 0", render(&eq.lhs));
}
