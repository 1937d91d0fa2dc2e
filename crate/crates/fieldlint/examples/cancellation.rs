//! Symmetric x antisymmetric contractions cancel in canonical form.
//!
//! Run with: cargo run --example cancellation

use fieldlint::{canonicalize, render, Expr, FieldDecl, Index, Parity, Reality};

fn main() {
    let phi = FieldDecl::scalar("phi", Reality::Real);
    let f = FieldDecl::tensor2("F", Parity::Antisymmetric);

    // F^{mu nu} phi_,mu phi_,nu: the gradient pair is symmetric in (mu, nu).
    let grad_pair = Expr::product(vec![
        Expr::field_idx(&f, vec![Index::up("mu"), Index::up("nu")]),
        Expr::field_d(&phi, vec![Index::down("mu")]),
        Expr::field_d(&phi, vec![Index::down("nu")]),
    ]);
    println!(
        "F^(mu nu) phi_,mu phi_,nu   -> {}",
        render(&canonicalize(&grad_pair).unwrap())
    );

    // F^{mu nu} phi_,mu,nu: second derivatives commute, so this vanishes too.
    let second = Expr::product(vec![
        Expr::field_idx(&f, vec![Index::up("mu"), Index::up("nu")]),
        Expr::field_d(&phi, vec![Index::down("mu"), Index::down("nu")]),
    ]);
    println!(
        "F^(mu nu) phi_,mu,nu        -> {}",
        render(&canonicalize(&second).unwrap())
    );

    // The same cancellation with the tensor written out from a potential:
    // (d^mu A^nu - d^nu A^mu) phi_,mu phi_,nu collapses term by term.
    let a = FieldDecl::vector("A", Reality::Real);
    let via_potential =
        Expr::product(vec![
            Expr::field_full(&a, vec![Index::up("nu")], vec![Index::up("mu")]).minus(
                Expr::field_full(&a, vec![Index::up("mu")], vec![Index::up("nu")]),
            ),
            Expr::field_d(&phi, vec![Index::down("mu")]),
            Expr::field_d(&phi, vec![Index::down("nu")]),
        ]);
    println!(
        "potential route             -> {}",
        render(&canonicalize(&via_potential).unwrap())
    );
}
