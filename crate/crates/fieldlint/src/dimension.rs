//! Natural-units dimensional analysis.
//!
//! Every quantity carries a dimension [L^n] with rational n. Products add
//! exponents, a partial derivative contributes -1, the metric contributes 0,
//! and a sum only has a dimension when all summands agree. Densities must be
//! Lorentz scalars (requirement A) of dimension [L^-4] (requirement B).

use std::collections::BTreeMap;

use num::Zero;

use crate::canon::{self, canonical_monomials, Factor, FactorList};
use crate::dsl::{ConstDecl, LagrangianModel};
use crate::expr::{Expr, ExprError, FieldKind, Index, Rat};
use crate::report::{Check, Report};

/// Dimension exponent n of [L^n].
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub struct Dimension(pub Rat);

impl std::fmt::Display for Dimension {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.0.denom() == &num::BigInt::from(1) {
            write!(f, "L^{}", self.0.numer())
        } else {
            write!(f, "L^({}/{})", self.0.numer(), self.0.denom())
        }
    }
}

#[derive(thiserror::Error, Debug, Clone, PartialEq)]
pub enum DimError {
    #[error("dimension conflict: {0}")]
    Conflict(String),
    #[error("underdetermined dimensions for: {}", .0.join(", "))]
    Underdetermined(Vec<String>),
    #[error("sum has mixed dimensions: {0}")]
    MixedSum(String),
    #[error("no dimension known for symbol '{0}'")]
    UnknownDimension(String),
    #[error(transparent)]
    Expr(#[from] ExprError),
}

/// Inferred field dimensions, keyed by field name. Dirac adjoints share
/// their base spinor's entry.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DimensionTable {
    pub fields: BTreeMap<String, Rat>,
}

impl DimensionTable {
    pub fn get(&self, name: &str) -> Option<&Rat> {
        self.fields.get(name)
    }
}

fn const_dimension(name: &str, constants: &[ConstDecl]) -> Option<Option<Rat>> {
    if name == "pi" {
        return Some(Some(Rat::zero()));
    }
    constants
        .iter()
        .find(|c| c.name == name)
        .map(|c| c.dimension.clone())
}

fn base_var(decl: &crate::expr::FieldDecl) -> String {
    decl.adjoint_of.clone().unwrap_or_else(|| decl.name.clone())
}

/// Accumulate one monomial as a linear form over field-dimension variables:
/// sum(coeff_i * var_i) + offset. Returns `None` when the term contains a
/// dimensionless free-parameter constant and must be skipped.
fn term_linear_form(
    factors: &FactorList,
    constants: &[ConstDecl],
) -> Option<(BTreeMap<String, Rat>, Rat)> {
    let mut coeffs: BTreeMap<String, Rat> = BTreeMap::new();
    let mut offset = Rat::zero();
    for (f, k) in factors {
        let k_rat = Rat::from_integer((*k as i64).into());
        match f {
            Factor::Const(c) => match const_dimension(c, constants) {
                Some(Some(d)) => offset += d * &k_rat,
                // Declared without a dimension: a free parameter; the whole
                // term is excluded from the dimension system.
                Some(None) => return None,
                // Unknown constants cannot appear after parsing, but be safe.
                None => return None,
            },
            Factor::Metric(..) | Factor::Gamma(_) => {}
            Factor::Field { decl, derivs, .. } => {
                let v = coeffs.entry(base_var(decl)).or_insert_with(Rat::zero);
                *v += &k_rat;
                offset -= Rat::from_integer((derivs.len() as i64).into()) * &k_rat;
            }
            Factor::Sandwich(s) => {
                for (decl, derivs) in [
                    (&s.left.decl, &s.left.derivs),
                    (&s.right.decl, &s.right.derivs),
                ] {
                    let v = coeffs.entry(base_var(decl)).or_insert_with(Rat::zero);
                    *v += Rat::from_integer(1.into());
                    offset -= Rat::from_integer((derivs.len() as i64).into());
                }
            }
        }
    }
    Some((coeffs, offset))
}

struct Row {
    coeffs: Vec<Rat>,
    rhs: Rat,
    label: String,
}

/// Solve the linear system "every density term has total exponent -4" for
/// the undeclared field dimensions.
pub fn infer_dimensions(model: &LagrangianModel) -> Result<DimensionTable, DimError> {
    let mut vars: Vec<String> = Vec::new();
    for f in &model.fields {
        let v = base_var(f);
        if !vars.contains(&v) {
            vars.push(v);
        }
    }

    let mut rows: Vec<Row> = Vec::new();
    let minus_four = Rat::from_integer((-4).into());

    for m in canonical_monomials(&model.density)? {
        if let Some((coeffs, offset)) = term_linear_form(&m.factors, &model.constants) {
            let mut row = vec![Rat::zero(); vars.len()];
            for (name, c) in coeffs {
                let i = vars
                    .iter()
                    .position(|v| *v == name)
                    .expect("field was declared");
                row[i] = c;
            }
            rows.push(Row {
                coeffs: row,
                rhs: &minus_four - offset,
                label: render_monomial_label(&m.factors),
            });
        }
    }

    // Declared dimensions enter as additional equations so that clashes with
    // inferred values surface as conflicts.
    for f in &model.fields {
        if let Some(d) = &f.dimension {
            let mut row = vec![Rat::zero(); vars.len()];
            let i = vars.iter().position(|v| *v == base_var(f)).unwrap();
            row[i] = Rat::from_integer(1.into());
            rows.push(Row {
                coeffs: row,
                rhs: d.clone(),
                label: format!("declared dim of {}", f.name),
            });
        }
    }

    // Gauss-Jordan elimination with per-row labels for diagnostics.
    let n = vars.len();
    let mut pivots: Vec<Option<usize>> = vec![None; n];
    let mut r = 0;
    #[allow(clippy::needless_range_loop)] // col coordinates rows and pivots
    for col in 0..n {
        let Some(p) = (r..rows.len()).find(|&i| !rows[i].coeffs[col].is_zero()) else {
            continue;
        };
        rows.swap(r, p);
        let inv = rows[r].coeffs[col].recip();
        for c in rows[r].coeffs.iter_mut() {
            *c *= &inv;
        }
        rows[r].rhs *= &inv;
        for i in 0..rows.len() {
            if i != r && !rows[i].coeffs[col].is_zero() {
                let factor = rows[i].coeffs[col].clone();
                for c in 0..n {
                    let delta = &factor * &rows[r].coeffs[c];
                    rows[i].coeffs[c] -= delta;
                }
                let delta = &factor * &rows[r].rhs;
                rows[i].rhs -= delta;
                if rows[i].coeffs.iter().all(|c| c.is_zero()) && !rows[i].rhs.is_zero() {
                    return Err(DimError::Conflict(format!(
                        "'{}' clashes with '{}'",
                        rows[i].label, rows[r].label
                    )));
                }
            }
        }
        pivots[col] = Some(r);
        r += 1;
    }

    for row in &rows[r..] {
        if !row.rhs.is_zero() {
            return Err(DimError::Conflict(format!(
                "term '{}' is over-constrained",
                row.label
            )));
        }
    }

    let unconstrained: Vec<String> = (0..n)
        .filter(|&c| pivots[c].is_none())
        .map(|c| vars[c].clone())
        .collect();
    if !unconstrained.is_empty() {
        return Err(DimError::Underdetermined(unconstrained));
    }

    let mut table = DimensionTable::default();
    for (col, var) in vars.iter().enumerate() {
        let value = rows[pivots[col].unwrap()].rhs.clone();
        table.fields.insert(var.clone(), value);
    }
    // Adjoint spinors share the base entry under their own name too.
    for f in &model.fields {
        if let Some(base) = &f.adjoint_of {
            if let Some(d) = table.fields.get(base).cloned() {
                table.fields.insert(f.name.clone(), d);
            }
        }
    }
    Ok(table)
}

fn render_monomial_label(factors: &FactorList) -> String {
    crate::dsl::render_term_label(factors)
}

/// Dimension of an expression under known field dimensions; errors when the
/// summands disagree or a symbol has no known dimension.
pub fn dimension_of(
    e: &Expr,
    table: &DimensionTable,
    constants: &[ConstDecl],
) -> Result<Dimension, DimError> {
    let ms = canonical_monomials(e)?;
    let mut result: Option<(Rat, String)> = None;
    for m in &ms {
        let mut total = Rat::zero();
        for (f, k) in &m.factors {
            let k_rat = Rat::from_integer((*k as i64).into());
            match f {
                Factor::Const(c) => match const_dimension(c, constants) {
                    Some(Some(d)) => total += d * &k_rat,
                    _ => return Err(DimError::UnknownDimension(c.clone())),
                },
                Factor::Metric(..) | Factor::Gamma(_) => {}
                Factor::Field { decl, derivs, .. } => {
                    let d = table
                        .get(&base_var(decl))
                        .ok_or_else(|| DimError::UnknownDimension(decl.name.clone()))?;
                    total += d * &k_rat;
                    total -= Rat::from_integer((derivs.len() as i64).into()) * &k_rat;
                }
                Factor::Sandwich(s) => {
                    for (decl, derivs) in [
                        (&s.left.decl, &s.left.derivs),
                        (&s.right.decl, &s.right.derivs),
                    ] {
                        let d = table
                            .get(&base_var(decl))
                            .ok_or_else(|| DimError::UnknownDimension(decl.name.clone()))?;
                        total += d.clone();
                        total -= Rat::from_integer((derivs.len() as i64).into());
                    }
                }
            }
        }
        let label = render_monomial_label(&m.factors);
        match &result {
            None => result = Some((total, label)),
            Some((prev, prev_label)) => {
                if *prev != total {
                    return Err(DimError::MixedSum(format!(
                        "'{prev_label}' has {} but '{label}' has {}",
                        Dimension(prev.clone()),
                        Dimension(total)
                    )));
                }
            }
        }
    }
    Ok(Dimension(result.map(|(r, _)| r).unwrap_or_else(Rat::zero)))
}

/// Lorentz-scalar verdict: pass iff the canonical free-index set is empty.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarVerdict {
    pub pass: bool,
    pub free: Vec<Index>,
}

pub fn check_scalar(e: &Expr) -> Result<ScalarVerdict, ExprError> {
    let free = canon::free_indices(e)?;
    Ok(ScalarVerdict {
        pass: free.is_empty(),
        free,
    })
}

fn rat_f64(r: &Rat) -> f64 {
    use num::ToPrimitive;
    r.to_f64().unwrap_or(f64::NAN)
}

/// Per-term requirement A (Lorentz scalar) and B ([L^-4]) verdicts, plus the
/// probability-density probes for scalar and spinor fields.
pub fn check_requirements(model: &LagrangianModel) -> Report {
    let mut report = Report::new("check", None);

    let table = match infer_dimensions(model) {
        Ok(t) => t,
        Err(e) => {
            report.push(Check::fail("dimension_inference").witness(e.to_string()));
            return report;
        }
    };
    for (name, dim) in &table.fields {
        report.push(
            Check::info(&format!("dimension_{name}"))
                .witness(format!("[{}]", Dimension(dim.clone())))
                .value(rat_f64(dim)),
        );
    }

    let minus_four = Rat::from_integer((-4).into());
    match canonical_monomials(&model.density) {
        Ok(ms) => {
            for (i, m) in ms.iter().enumerate() {
                let label = render_monomial_label(&m.factors);
                let n = i + 1;

                // Requirement A: no free indices in the term.
                let mut free: Vec<String> = Vec::new();
                {
                    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
                    canon::for_each_index(&m.factors, |idx| {
                        if !idx.is_concrete() {
                            *counts.entry(idx.name.clone()).or_insert(0) += 1;
                        }
                    });
                    for (name, c) in counts {
                        if c == 1 {
                            free.push(name);
                        }
                    }
                }
                if free.is_empty() {
                    report.push(Check::pass(&format!("term{n}_scalar")).witness(label.clone()));
                } else {
                    report.push(
                        Check::fail(&format!("term{n}_scalar"))
                            .witness(format!("{label}: free indices {}", free.join(", "))),
                    );
                }

                // Requirement B: exponent -4.
                match term_linear_form(&m.factors, &model.constants) {
                    None => report.push(
                        Check::info(&format!("term{n}_dimension"))
                            .witness(format!("{label}: skipped (free-parameter coefficient)")),
                    ),
                    Some((coeffs, offset)) => {
                        let mut total = offset;
                        let mut known = true;
                        for (v, c) in coeffs {
                            match table.get(&v) {
                                Some(d) => total += d * &c,
                                None => known = false,
                            }
                        }
                        if known && total == minus_four {
                            report.push(
                                Check::pass(&format!("term{n}_dimension"))
                                    .witness(format!("{label}: [L^-4]")),
                            );
                        } else {
                            report.push(
                                Check::fail(&format!("term{n}_dimension"))
                                    .witness(format!("{label}: [{}] != [L^-4]", Dimension(total))),
                            );
                        }
                    }
                }
            }
        }
        Err(e) => {
            report.push(Check::fail("density_canonicalization").witness(e.to_string()));
        }
    }

    // Probability-density probes: |field|^2 must be [L^-3] to qualify.
    let minus_three = Rat::from_integer((-3).into());
    for f in &model.fields {
        if f.adjoint_of.is_some() {
            continue;
        }
        let probe_name = match f.kind {
            FieldKind::Scalar => format!("probability_density_{}", f.name),
            FieldKind::Spinor => format!("probability_density_{}", f.name),
            _ => continue,
        };
        if let Some(d) = table.get(&f.name) {
            let probe = d * Rat::from_integer(2.into());
            let desc = match f.kind {
                FieldKind::Spinor => format!("{0}bar*{0}", f.name),
                _ => match f.reality {
                    crate::expr::Reality::Complex => format!("conj({0})*{0}", f.name),
                    crate::expr::Reality::Real => format!("{0}^2", f.name),
                },
            };
            if probe == minus_three {
                report.push(
                    Check::info(&probe_name)
                        .witness(format!(
                            "dim({desc}) = [{}]: compatible with a probability density",
                            Dimension(probe.clone())
                        ))
                        .value(rat_f64(&probe)),
                );
            } else {
                report.push(
                    Check::info(&probe_name)
                        .witness(format!(
                            "dim({desc}) = [{}]: cannot represent probability density (needs [L^-3])",
                            Dimension(probe.clone())
                        ))
                        .value(rat_f64(&probe)),
                );
            }
        }
    }

    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse;
    use crate::expr::rat;

    const KG_FREE_REAL: &str = "\
field phi : real scalar
const m dim -1
L = 1/2 * (d_{mu}(phi) * d_{nu}(phi) * g^{mu nu} - m^2 * phi^2)
";

    const DIRAC_FREE: &str = "\
field psi : complex spinor
const m dim -1
L = psibar * (i*gamma^{mu}*d_{mu}(psi) - m*psi)
";

    #[test]
    fn kg_field_dimension_is_minus_one() {
        let model = parse(KG_FREE_REAL).unwrap();
        let table = infer_dimensions(&model).unwrap();
        assert_eq!(table.get("phi"), Some(&rat(-1, 1)));
    }

    #[test]
    fn dirac_field_dimension_is_minus_three_halves() {
        let model = parse(DIRAC_FREE).unwrap();
        let table = infer_dimensions(&model).unwrap();
        assert_eq!(table.get("psi"), Some(&rat(-3, 2)));
        assert_eq!(table.get("psibar"), Some(&rat(-3, 2)));
    }

    #[test]
    fn empty_model_has_empty_table() {
        let model = parse("").unwrap();
        let table = infer_dimensions(&model).unwrap();
        assert!(table.fields.is_empty());
    }

    #[test]
    fn underdetermined_model_lists_fields() {
        let model = parse("field phi : real scalar\nL = 0").unwrap();
        match infer_dimensions(&model) {
            Err(DimError::Underdetermined(v)) => assert_eq!(v, vec!["phi".to_string()]),
            other => panic!("expected underdetermined, got {other:?}"),
        }
    }

    #[test]
    fn conflicting_declaration_is_reported() {
        let model = parse(
            "field phi : real scalar dim -2\nconst m dim -1\nL = 1/2*(d_{mu}(phi)*d^{mu}(phi) - m^2*phi^2)",
        )
        .unwrap();
        assert!(matches!(
            infer_dimensions(&model),
            Err(DimError::Conflict(_))
        ));
    }

    #[test]
    fn product_dimensions_add() {
        let model = parse(KG_FREE_REAL).unwrap();
        let table = infer_dimensions(&model).unwrap();
        let phi2 = crate::dsl::parse_expr_in("phi^2", &model).unwrap();
        let d = dimension_of(&phi2, &table, &model.constants).unwrap();
        assert_eq!(d.0, rat(-2, 1));
    }

    #[test]
    fn current_density_component_has_probability_dimension() {
        let model = parse(
            "field phi : complex scalar\nconst m dim -1\nL = d_{mu}(conj(phi))*d_{nu}(phi)*g^{mu nu} - m^2*conj(phi)*phi",
        )
        .unwrap();
        let table = infer_dimensions(&model).unwrap();
        let j0 =
            crate::dsl::parse_expr_in("i*(conj(phi)*d_{0}(phi) - d_{0}(conj(phi))*phi)", &model)
                .unwrap();
        let d = dimension_of(&j0, &table, &model.constants).unwrap();
        assert_eq!(d.0, rat(-3, 1));
    }

    #[test]
    fn scalar_check_flags_open_index() {
        let model = parse(KG_FREE_REAL).unwrap();
        let open = crate::dsl::parse_expr_in("d_{mu}(phi)", &model).unwrap();
        let v = check_scalar(&open).unwrap();
        assert!(!v.pass);
        assert_eq!(v.free, vec![Index::down("mu")]);
        let closed = check_scalar(&model.density).unwrap();
        assert!(closed.pass);
    }

    #[test]
    fn kg_probability_flag_is_raised() {
        let model = parse(KG_FREE_REAL).unwrap();
        let report = check_requirements(&model);
        let probe = report
            .checks
            .iter()
            .find(|c| c.name == "probability_density_phi")
            .expect("probe present");
        assert!(probe.witness.as_ref().unwrap().contains("cannot represent"));
        assert!(report.passed());
    }

    #[test]
    fn dirac_probability_flag_is_clear() {
        let model = parse(DIRAC_FREE).unwrap();
        let report = check_requirements(&model);
        let probe = report
            .checks
            .iter()
            .find(|c| c.name == "probability_density_psi")
            .expect("probe present");
        assert!(probe.witness.as_ref().unwrap().contains("compatible"));
    }

    #[test]
    fn mixed_sum_dimension_is_an_error() {
        let model = parse(KG_FREE_REAL).unwrap();
        let table = infer_dimensions(&model).unwrap();
        let e = crate::dsl::parse_expr_in("phi + phi^2", &model).unwrap();
        assert!(matches!(
            dimension_of(&e, &table, &model.constants),
            Err(DimError::MixedSum(_))
        ));
    }
}
