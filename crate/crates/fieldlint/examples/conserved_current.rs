//! Check current conservation by reducing the divergence on shell.
//!
//! Run with: cargo run --example conserved_current

use fieldlint::{
    divergence, euler_lagrange, on_shell_reduce, parse, parse_expr_in, render, VariationTarget,
};

fn main() {
    // Complex scalar: j_mu = i (phi* phi_,mu - phi*_,mu phi).
    let kg = parse(
        "field phi : complex scalar\nconst m dim -1\n\
         L = d_{mu}(conj(phi)) * d_{nu}(phi) * g^{mu nu} - m^2 * conj(phi) * phi",
    )
    .unwrap();
    let j = parse_expr_in("i*(conj(phi)*d_{mu}(phi) - d_{mu}(conj(phi))*phi)", &kg).unwrap();
    let div = divergence(&j).unwrap();
    println!("scalar current divergence:   {}", render(&div));
    let eq = euler_lagrange(&kg, &VariationTarget::conj("phi")).unwrap();
    let eq_conj = euler_lagrange(&kg, &VariationTarget::field("phi")).unwrap();
    let reduced = on_shell_reduce(&div, &[eq, eq_conj]).unwrap();
    println!("           ... on shell:     {}", render(&reduced));

    // Dirac: j^mu = psibar gamma^mu psi.
    let dirac = parse(
        "field psi : complex spinor\nconst m dim -1\n\
         L = psibar * (i * gamma^{mu} * d_{mu}(psi) - m * psi)",
    )
    .unwrap();
    let j = parse_expr_in("psibar*gamma^{mu}*psi", &dirac).unwrap();
    let div = divergence(&j).unwrap();
    println!("dirac current divergence:    {}", render(&div));
    let eq = euler_lagrange(&dirac, &VariationTarget::field("psibar")).unwrap();
    let eq_bar = euler_lagrange(&dirac, &VariationTarget::field("psi")).unwrap();
    let reduced = on_shell_reduce(&div, &[eq, eq_bar]).unwrap();
    println!("           ... on shell:     {}", render(&reduced));
}
