//! Symbolic calculus on expression trees: partial differentiation,
//! pattern substitution, and polynomial degree extraction.

use std::collections::BTreeMap;

use num::Zero;

use crate::canon::{self, canonical_monomials, Factor};
use crate::expr::{Expr, ExprError, Index, Sandwich, SpinorFactor};

/// Apply the partial derivative with respect to `x^idx` (product and sum
/// rules; field derivative lists grow; constants, metrics and gammas are
/// annihilated). The result is a raw tree; canonicalize to normalize it.
pub fn differentiate(e: &Expr, idx: &Index) -> Expr {
    match e {
        Expr::Sum(terms) => Expr::sum(terms.iter().map(|t| differentiate(t, idx)).collect()),
        Expr::Product(factors) => {
            let mut terms = Vec::with_capacity(factors.len());
            for (i, f) in factors.iter().enumerate() {
                let df = differentiate(f, idx);
                if df.is_zero_literal() {
                    continue;
                }
                let mut parts = factors.clone();
                parts[i] = df;
                terms.push(Expr::product(parts));
            }
            Expr::sum(terms)
        }
        Expr::Power(base, n) => {
            if *n == 0 {
                return Expr::zero();
            }
            let db = differentiate(base, idx);
            if db.is_zero_literal() {
                return Expr::zero();
            }
            Expr::product(vec![
                Expr::int(*n as i64),
                Expr::power((**base).clone(), n - 1),
                db,
            ])
        }
        Expr::Rational(_) | Expr::I | Expr::Const(_) | Expr::Metric(..) | Expr::Gamma(_) => {
            Expr::zero()
        }
        Expr::Field {
            decl,
            indices,
            derivs,
        } => {
            let mut d = derivs.clone();
            d.push(idx.clone());
            Expr::Field {
                decl: decl.clone(),
                indices: indices.clone(),
                derivs: d,
            }
        }
        Expr::Conjugate(inner) => Expr::Conjugate(Box::new(differentiate(inner, idx))),
        Expr::Sandwich(s) => {
            let mut left = s.left.clone();
            left.derivs.push(idx.clone());
            let mut right = s.right.clone();
            right.derivs.push(idx.clone());
            Expr::sum(vec![
                Expr::Sandwich(Box::new(Sandwich {
                    left,
                    gamma: s.gamma.clone(),
                    right: s.right.clone(),
                })),
                Expr::Sandwich(Box::new(Sandwich {
                    left: s.left.clone(),
                    gamma: s.gamma.clone(),
                    right,
                })),
            ])
        }
    }
}

/// A rewrite rule whose pattern is a `Field` head (possibly conjugated, with
/// index placeholders) or a `Const` head.
///
/// Placeholder index names appearing once in the pattern bind to the matched
/// occurrence's index (any variance; the replacement is flipped to match).
/// A placeholder appearing twice (once upper, once lower) matches an
/// internally contracted pair, as in a d'Alembertian.
#[derive(Clone, Debug)]
pub struct Rule {
    pub pattern: Expr,
    pub replacement: Expr,
}

impl Rule {
    pub fn new(pattern: Expr, replacement: Expr) -> Self {
        Rule {
            pattern,
            replacement,
        }
    }
}

struct FieldPattern {
    decl: crate::expr::FieldRef,
    conj: bool,
    indices: Vec<Index>,
    derivs: Vec<Index>,
}

enum PatternKind {
    Field(FieldPattern),
    Const(String),
}

fn parse_pattern(pattern: &Expr) -> Result<PatternKind, ExprError> {
    match pattern {
        Expr::Const(c) => Ok(PatternKind::Const(c.clone())),
        Expr::Field {
            decl,
            indices,
            derivs,
        } => Ok(PatternKind::Field(FieldPattern {
            decl: decl.clone(),
            conj: false,
            indices: indices.clone(),
            derivs: derivs.clone(),
        })),
        Expr::Conjugate(inner) => match &**inner {
            Expr::Field {
                decl,
                indices,
                derivs,
            } => Ok(PatternKind::Field(FieldPattern {
                decl: decl.clone(),
                conj: true,
                indices: indices.clone(),
                derivs: derivs.clone(),
            })),
            _ => Err(ExprError::IndexDiscipline(
                "substitution patterns must be Field or Const heads".into(),
            )),
        },
        _ => Err(ExprError::IndexDiscipline(
            "substitution patterns must be Field or Const heads".into(),
        )),
    }
}

fn placeholder_names(p: &FieldPattern) -> BTreeMap<String, usize> {
    let mut names: BTreeMap<String, usize> = BTreeMap::new();
    for i in p.indices.iter().chain(p.derivs.iter()) {
        *names.entry(i.name.clone()).or_insert(0) += 1;
    }
    names
}

fn check_replacement_free(rule: &Rule, singles: &[String]) -> Result<(), ExprError> {
    let free = canon::free_indices(&rule.replacement)?;
    let mut free_names: Vec<String> = free.into_iter().map(|i| i.name).collect();
    free_names.sort();
    free_names.dedup();
    let mut want: Vec<String> = singles.to_vec();
    want.sort();
    if free_names != want {
        return Err(ExprError::IndexDiscipline(format!(
            "replacement free indices {:?} do not match pattern placeholders {:?}",
            free_names, want
        )));
    }
    Ok(())
}

/// Binding of one placeholder to an actual index: the actual name and
/// whether the variance was flipped relative to the pattern.
struct Binding {
    name: String,
    flipped: bool,
}

fn try_match_field(
    p: &FieldPattern,
    decl: &crate::expr::FieldRef,
    conj: bool,
    indices: &[Index],
    derivs: &[Index],
) -> Option<(BTreeMap<String, Binding>, Vec<Index>)> {
    if *decl != p.decl || conj != p.conj || indices.len() != p.indices.len() {
        return None;
    }
    if derivs.len() < p.derivs.len() {
        return None;
    }
    let counts = {
        let mut m: BTreeMap<&str, Vec<&Index>> = BTreeMap::new();
        for i in p.indices.iter().chain(p.derivs.iter()) {
            m.entry(i.name.as_str()).or_default().push(i);
        }
        m
    };
    let mut bindings: BTreeMap<String, Binding> = BTreeMap::new();
    let mut used = vec![false; derivs.len()];

    // Own indices bind positionally.
    for (slot, actual) in p.indices.iter().zip(indices.iter()) {
        let entry = bindings.get(&slot.name);
        match entry {
            None => {
                bindings.insert(
                    slot.name.clone(),
                    Binding {
                        name: actual.name.clone(),
                        flipped: actual.variance != slot.variance,
                    },
                );
            }
            Some(b) => {
                // Second occurrence of a paired placeholder: the actual pair
                // must share the name with opposite variance overall.
                if b.name != actual.name {
                    return None;
                }
            }
        }
    }

    // Derivative slots: paired placeholders must find an internal pair;
    // single placeholders bind to any remaining derivative index.
    for slot in &p.derivs {
        let pair = counts.get(slot.name.as_str()).map(|v| v.len()).unwrap_or(0) == 2;
        if let Some(b) = bindings.get(&slot.name) {
            // Find the matching partner occurrence among derivatives.
            let found = derivs
                .iter()
                .enumerate()
                .find(|(i, d)| !used[*i] && d.name == b.name);
            match found {
                Some((i, _)) => used[i] = true,
                None => return None,
            }
            continue;
        }
        if pair {
            // Bind to any internally-paired derivative name.
            let mut bound = false;
            for (i, d) in derivs.iter().enumerate() {
                if used[i] || d.is_concrete() {
                    continue;
                }
                let partner = derivs
                    .iter()
                    .enumerate()
                    .find(|(j, e)| *j != i && !used[*j] && e.name == d.name);
                if partner.is_some() {
                    bindings.insert(
                        slot.name.clone(),
                        Binding {
                            name: d.name.clone(),
                            flipped: false,
                        },
                    );
                    used[i] = true;
                    bound = true;
                    break;
                }
            }
            if !bound {
                return None;
            }
        } else {
            let found = derivs.iter().enumerate().find(|(i, _)| !used[*i]);
            match found {
                Some((i, d)) => {
                    bindings.insert(
                        slot.name.clone(),
                        Binding {
                            name: d.name.clone(),
                            flipped: d.variance != slot.variance,
                        },
                    );
                    used[i] = true;
                }
                None => return None,
            }
        }
    }

    let leftover: Vec<Index> = derivs
        .iter()
        .enumerate()
        .filter(|(i, _)| !used[*i])
        .map(|(_, d)| d.clone())
        .collect();
    Some((bindings, leftover))
}

fn apply_bindings(replacement: &Expr, bindings: &BTreeMap<String, Binding>) -> Expr {
    map_expr_indices(replacement, &|i: &Index| match bindings.get(&i.name) {
        Some(b) => Index {
            name: b.name.clone(),
            variance: if b.flipped {
                i.variance.flip()
            } else {
                i.variance
            },
        },
        None => i.clone(),
    })
}

pub(crate) fn map_expr_indices(e: &Expr, f: &impl Fn(&Index) -> Index) -> Expr {
    match e {
        Expr::Sum(v) => Expr::Sum(v.iter().map(|x| map_expr_indices(x, f)).collect()),
        Expr::Product(v) => Expr::Product(v.iter().map(|x| map_expr_indices(x, f)).collect()),
        Expr::Power(b, n) => Expr::power(map_expr_indices(b, f), *n),
        Expr::Conjugate(b) => Expr::Conjugate(Box::new(map_expr_indices(b, f))),
        Expr::Metric(a, b) => Expr::Metric(f(a), f(b)),
        Expr::Gamma(i) => Expr::Gamma(f(i)),
        Expr::Field {
            decl,
            indices,
            derivs,
        } => Expr::Field {
            decl: decl.clone(),
            indices: indices.iter().map(f).collect(),
            derivs: derivs.iter().map(f).collect(),
        },
        Expr::Sandwich(s) => Expr::Sandwich(Box::new(Sandwich {
            left: SpinorFactor {
                decl: s.left.decl.clone(),
                derivs: s.left.derivs.iter().map(f).collect(),
            },
            gamma: s.gamma.as_ref().map(f),
            right: SpinorFactor {
                decl: s.right.decl.clone(),
                derivs: s.right.derivs.iter().map(f).collect(),
            },
        })),
        _ => e.clone(),
    }
}

fn collect_index_names(e: &Expr, names: &mut std::collections::BTreeSet<String>) {
    match e {
        Expr::Sum(v) | Expr::Product(v) => v.iter().for_each(|x| collect_index_names(x, names)),
        Expr::Power(b, _) | Expr::Conjugate(b) => collect_index_names(b, names),
        Expr::Metric(a, b) => {
            names.insert(a.name.clone());
            names.insert(b.name.clone());
        }
        Expr::Gamma(i) => {
            names.insert(i.name.clone());
        }
        Expr::Field {
            indices, derivs, ..
        } => {
            for i in indices.iter().chain(derivs.iter()) {
                names.insert(i.name.clone());
            }
        }
        Expr::Sandwich(s) => {
            for i in s.left.derivs.iter().chain(s.right.derivs.iter()) {
                names.insert(i.name.clone());
            }
            if let Some(g) = &s.gamma {
                names.insert(g.name.clone());
            }
        }
        _ => {}
    }
}

/// Rename every non-concrete, non-placeholder dummy inside a replacement to
/// a fresh reserved name so that splicing can never capture an index.
fn freshen_dummies(e: &Expr, keep: &[String], counter: &mut usize) -> Expr {
    let mut names = std::collections::BTreeSet::new();
    collect_index_names(e, &mut names);
    let mut mapping: BTreeMap<String, String> = BTreeMap::new();
    for n in names {
        let concrete = matches!(n.as_str(), "0" | "1" | "2" | "3");
        if !concrete && !keep.contains(&n) {
            *counter += 1;
            mapping.insert(n, format!("{}{}", canon::FRESH_PREFIX, counter));
        }
    }
    map_expr_indices(e, &|i: &Index| match mapping.get(&i.name) {
        Some(n) => Index {
            name: n.clone(),
            variance: i.variance,
        },
        None => i.clone(),
    })
}

/// Replace all occurrences matching the rules, simultaneously, in one pass.
/// The result is canonicalized.
pub fn substitute(e: &Expr, rules: &[Rule]) -> Result<Expr, ExprError> {
    let mut parsed = Vec::new();
    for r in rules {
        let kind = parse_pattern(&r.pattern)?;
        if let PatternKind::Field(fp) = &kind {
            let singles: Vec<String> = placeholder_names(fp)
                .into_iter()
                .filter(|(_, c)| *c == 1)
                .map(|(n, _)| n)
                .collect();
            check_replacement_free(r, &singles)?;
        }
        parsed.push((kind, r.replacement.clone()));
    }

    let monomials = canonical_monomials(e)?;
    let mut out_terms: Vec<Expr> = Vec::new();
    let mut fresh = 0usize;
    for m in &monomials {
        let mut parts: Vec<Expr> = Vec::new();
        let coeff = if m.im.is_zero() {
            Expr::Rational(m.re.clone())
        } else if m.re.is_zero() {
            Expr::product(vec![Expr::Rational(m.im.clone()), Expr::I])
        } else {
            Expr::sum(vec![
                Expr::Rational(m.re.clone()),
                Expr::product(vec![Expr::Rational(m.im.clone()), Expr::I]),
            ])
        };
        parts.push(coeff);
        for (factor, k) in &m.factors {
            let replaced = replace_factor(factor, *k, &parsed, &mut fresh)?;
            parts.push(replaced);
        }
        out_terms.push(Expr::product(parts));
    }
    canon::canonicalize(&Expr::sum(out_terms))
}

fn replace_factor(
    factor: &Factor,
    k: i32,
    rules: &[(PatternKind, Expr)],
    fresh: &mut usize,
) -> Result<Expr, ExprError> {
    let one = |e: Expr| if k == 1 { e } else { Expr::power(e, k) };
    match factor {
        Factor::Const(c) => {
            for (kind, repl) in rules {
                if let PatternKind::Const(p) = kind {
                    if p == c {
                        return Ok(one(repl.clone()));
                    }
                }
            }
            Ok(one(Expr::Const(c.clone())))
        }
        Factor::Field {
            decl,
            indices,
            derivs,
            conj,
        } => {
            for (kind, repl) in rules {
                if let PatternKind::Field(fp) = kind {
                    if let Some((bindings, leftover)) =
                        try_match_field(fp, decl, *conj, indices, derivs)
                    {
                        let keep: Vec<String> = bindings.values().map(|b| b.name.clone()).collect();
                        let bound = apply_bindings(repl, &bindings);
                        let mut result = freshen_dummies(&bound, &keep, fresh);
                        for d in leftover {
                            result = differentiate(&result, &d);
                        }
                        if k != 1 {
                            return Err(ExprError::IndexDiscipline(
                                "cannot substitute into a factor carrying an exponent".into(),
                            ));
                        }
                        return Ok(result);
                    }
                }
            }
            let base = Expr::Field {
                decl: decl.clone(),
                indices: indices.clone(),
                derivs: derivs.clone(),
            };
            let base = if *conj { base.conj() } else { base };
            Ok(one(base))
        }
        Factor::Sandwich(s) => Ok(one(Expr::Sandwich(Box::new(s.clone())))),
        Factor::Gamma(i) => Ok(one(Expr::Gamma(i.clone()))),
        Factor::Metric(a, b) => Ok(one(Expr::Metric(a.clone(), b.clone()))),
    }
}

/// Highest power of the constant symbol `s` across canonical monomials;
/// zero when the symbol is absent.
pub fn poly_degree(e: &Expr, s: &str) -> Result<i32, ExprError> {
    let ms = canonical_monomials(e)?;
    let mut deg = 0;
    for m in &ms {
        for (f, k) in &m.factors {
            if let Factor::Const(c) = f {
                if c == s {
                    deg = deg.max(*k);
                }
            }
        }
    }
    Ok(deg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::canon::{canonicalize, equivalent};
    use crate::expr::{FieldDecl, Reality};

    #[test]
    fn derivative_of_square_is_chain_rule() {
        let phi = FieldDecl::scalar("phi", Reality::Real);
        let e = Expr::power(Expr::field(&phi), 2);
        let d = differentiate(&e, &Index::down("mu"));
        let want = Expr::product(vec![
            Expr::int(2),
            Expr::field(&phi),
            Expr::field_d(&phi, vec![Index::down("mu")]),
        ]);
        assert!(equivalent(&d, &want).unwrap());
    }

    #[test]
    fn constant_factor_passes_through() {
        let phi = FieldDecl::scalar("phi", Reality::Real);
        let e = Expr::product(vec![Expr::power(Expr::constant("m"), 2), Expr::field(&phi)]);
        let d = differentiate(&e, &Index::down("mu"));
        let want = Expr::product(vec![
            Expr::power(Expr::constant("m"), 2),
            Expr::field_d(&phi, vec![Index::down("mu")]),
        ]);
        assert!(equivalent(&d, &want).unwrap());
    }

    #[test]
    fn product_rule_on_vector_coupling() {
        // d_mu(A^nu phi_,nu phi) has three terms
        let phi = FieldDecl::scalar("phi", Reality::Real);
        let a = FieldDecl::vector("A", Reality::Real);
        let e = Expr::product(vec![
            Expr::field_idx(&a, vec![Index::up("nu")]),
            Expr::field_d(&phi, vec![Index::down("nu")]),
            Expr::field(&phi),
        ]);
        let d = canonicalize(&differentiate(&e, &Index::down("mu"))).unwrap();
        let want = Expr::sum(vec![
            Expr::product(vec![
                Expr::field_full(&a, vec![Index::up("nu")], vec![Index::down("mu")]),
                Expr::field_d(&phi, vec![Index::down("nu")]),
                Expr::field(&phi),
            ]),
            Expr::product(vec![
                Expr::field_idx(&a, vec![Index::up("nu")]),
                Expr::field_d(&phi, vec![Index::down("nu"), Index::down("mu")]),
                Expr::field(&phi),
            ]),
            Expr::product(vec![
                Expr::field_idx(&a, vec![Index::up("nu")]),
                Expr::field_d(&phi, vec![Index::down("nu")]),
                Expr::field_d(&phi, vec![Index::down("mu")]),
            ]),
        ]);
        assert!(equivalent(&d, &want).unwrap());
    }

    #[test]
    fn linearity_of_differentiation() {
        let phi = FieldDecl::scalar("phi", Reality::Real);
        let chi = FieldDecl::scalar("chi", Reality::Real);
        let a = Expr::power(Expr::field(&phi), 2);
        let b = Expr::product(vec![Expr::field(&phi), Expr::field(&chi)]);
        let mu = Index::down("mu");
        let combined = Expr::sum(vec![
            Expr::product(vec![Expr::int(3), a.clone()]),
            Expr::product(vec![Expr::int(-2), b.clone()]),
        ]);
        let lhs = differentiate(&combined, &mu);
        let rhs = Expr::sum(vec![
            Expr::product(vec![Expr::int(3), differentiate(&a, &mu)]),
            Expr::product(vec![Expr::int(-2), differentiate(&b, &mu)]),
        ]);
        assert!(equivalent(&lhs, &rhs).unwrap());
    }

    #[test]
    fn substitute_dalembertian() {
        // box phi -> -m^2 phi
        let phi = FieldDecl::scalar("phi", Reality::Real);
        let boxphi = Expr::field_d(&phi, vec![Index::down("b"), Index::up("b")]);
        let rule = Rule::new(
            boxphi.clone(),
            Expr::product(vec![
                Expr::int(-1),
                Expr::power(Expr::constant("m"), 2),
                Expr::field(&phi),
            ]),
        );
        let got = substitute(&boxphi, &[rule]).unwrap();
        let want = canonicalize(&Expr::product(vec![
            Expr::int(-1),
            Expr::power(Expr::constant("m"), 2),
            Expr::field(&phi),
        ]))
        .unwrap();
        assert_eq!(got, want);
    }

    #[test]
    fn substitute_gauge_shift_is_linear() {
        // A_mu -> A_mu + chi_,mu applied to e*A^mu*phi_,mu*phi
        let phi = FieldDecl::scalar("phi", Reality::Real);
        let a = FieldDecl::vector("A", Reality::Real);
        let chi = FieldDecl::scalar("chi", Reality::Real);
        let rule = Rule::new(
            Expr::field_idx(&a, vec![Index::down("al")]),
            Expr::sum(vec![
                Expr::field_idx(&a, vec![Index::down("al")]),
                Expr::field_d(&chi, vec![Index::down("al")]),
            ]),
        );
        let e = Expr::product(vec![
            Expr::constant("e"),
            Expr::field_idx(&a, vec![Index::up("mu")]),
            Expr::field_d(&phi, vec![Index::down("mu")]),
            Expr::field(&phi),
        ]);
        let got = substitute(&e, &[rule]).unwrap();
        let want = Expr::sum(vec![
            e.clone(),
            Expr::product(vec![
                Expr::constant("e"),
                Expr::field_d(&chi, vec![Index::up("mu")]),
                Expr::field_d(&phi, vec![Index::down("mu")]),
                Expr::field(&phi),
            ]),
        ]);
        assert!(equivalent(&got, &want).unwrap());
    }

    #[test]
    fn substitute_rejects_free_index_mismatch() {
        let a = FieldDecl::vector("A", Reality::Real);
        let chi = FieldDecl::scalar("chi", Reality::Real);
        let rule = Rule::new(
            Expr::field_idx(&a, vec![Index::down("al")]),
            Expr::field_d(&chi, vec![Index::down("beta")]),
        );
        let e = Expr::field_idx(&a, vec![Index::down("mu")]);
        assert!(matches!(
            substitute(&e, &[rule]),
            Err(ExprError::IndexDiscipline(_))
        ));
    }

    #[test]
    fn poly_degree_of_mass_term() {
        let phi = FieldDecl::scalar("phi", Reality::Real);
        let e = Expr::sum(vec![
            Expr::product(vec![
                Expr::power(Expr::constant("m"), 2),
                Expr::power(Expr::field(&phi), 2),
            ]),
            Expr::product(vec![Expr::constant("m"), Expr::field(&phi)]),
        ]);
        assert_eq!(poly_degree(&e, "m").unwrap(), 2);
        assert_eq!(poly_degree(&e, "g").unwrap(), 0);
    }
}
