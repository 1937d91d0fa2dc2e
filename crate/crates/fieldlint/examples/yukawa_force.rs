//! The static scalar 4-force fails the orthogonality requirement f.v = 0;
//! the Lorentz force of an antisymmetric field tensor satisfies it.
//!
//! Run with: cargo run --example yukawa_force

use std::f64::consts::PI;

use fieldlint::numeric::{
    lorentz_force, orthogonality_check, yukawa_radial_derivative, FourVector,
};

fn main() {
    // Yukawa force at (0,0,1) with unit coupling scale: f = (0, grad phi).
    let dphi = yukawa_radial_derivative(4.0 * PI, 1.0, 1.0).unwrap();
    let f = FourVector::new(0.0, 0.0, 0.0, dphi);
    // Particle falling toward the origin with v = 0.6: v^mu = gamma (1, -v z).
    let gamma = 1.25;
    let v = FourVector::new(gamma, 0.0, 0.0, -gamma * 0.6);
    let product = orthogonality_check(&f, &v).unwrap();
    println!("yukawa force:  f = (0, 0, 0, {dphi:.7})");
    println!("               f.v = {product:.7}  (must be 0 for a 4-force; it is not)\n");

    // Contrast: static electric field along z, current parallel to the
    // velocity. The antisymmetry of F makes f.v vanish identically.
    let mut fmat = [[0.0; 4]; 4];
    fmat[0][3] = 0.7;
    fmat[3][0] = -0.7;
    let vel = FourVector::new(gamma, 0.0, 0.0, gamma * 0.6);
    let j = FourVector::new(2.0 * vel[0], 2.0 * vel[1], 2.0 * vel[2], 2.0 * vel[3]);
    let lf = lorentz_force(&fmat, &j);
    let product = orthogonality_check(&lf, &vel).unwrap();
    println!(
        "lorentz force: f = ({:.3}, {:.3}, {:.3}, {:.3})",
        lf[0], lf[1], lf[2], lf[3]
    );
    println!("               f.v = {product:.3e}  (orthogonal, as required)");
}
