//! Parse the DSL, inspect the canonical form, and round-trip it.
//!
//! Run with: cargo run --example parse_and_render

use fieldlint::{canonicalize, parse, parse_expr_in, render};

fn main() {
    let model = parse(
        "# declarations first, then the density\n\
         field phi : complex scalar\n\
         const m dim -1\n\
         L = d_{mu}(conj(phi)) * d_{nu}(phi) * g^{mu nu} - m^2 * conj(phi) * phi",
    )
    .unwrap();
    println!("density (canonical): {}", render(&model.density));

    // Expressions parse against the model's declarations. The metric
    // contraction g^{mu nu} X_mu Y_nu is folded away in canonical form.
    let j = parse_expr_in("i*(conj(phi)*d_{mu}(phi) - d_{mu}(conj(phi))*phi)", &model).unwrap();
    println!("current j_mu:        {}", render(&j));

    // Round trip: render . parse == canonicalize.
    let text = render(&j);
    let back = parse_expr_in(&text, &model).unwrap();
    assert_eq!(back, canonicalize(&j).unwrap());
    println!("round trip:          ok");

    // Ill-formed input is rejected with positions.
    let err = parse("L = phi").unwrap_err();
    println!("undeclared symbol:   {err}");
}
