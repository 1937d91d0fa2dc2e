//! Euler-Lagrange variation and everything built on it: field equations,
//! the electromagnetic field equation from varying the potential, gauge
//! shifts with invariance witnesses, on-shell reduction, charge-degree
//! audits, the canonical stress-energy tensor and hermiticity checks.

use std::collections::BTreeSet;

use num::{Signed, Zero};

use crate::calculus::{differentiate, substitute, Rule};
use crate::canon::{
    self, canonical_monomials, canonicalize, coeff_expr, monomials_to_expr, Factor, Monomial,
};
use crate::dsl::{render_term_label, Assumption, LagrangianModel};
use crate::expr::{
    Expr, ExprError, FieldDecl, FieldKind, FieldRef, Index, Rat, Reality, Sandwich, SpinorFactor,
};

#[derive(thiserror::Error, Debug, Clone, PartialEq)]
pub enum VarError {
    #[error("unknown field '{0}'")]
    UnknownField(String),
    #[error("cannot vary conj({0}): the field is not complex")]
    InvalidConjTarget(String),
    #[error("density contains second derivatives of '{0}'")]
    UnsupportedOrder(String),
    #[error("no vector potential with derivative couplings found in the density")]
    NoEmField,
    #[error("ambiguous gauge field, candidates: {}", .0.join(", "))]
    AmbiguousGaugeField(Vec<String>),
    #[error("the interaction term depends on derivatives of the potential")]
    UnsupportedEmInteraction,
    #[error("equation for '{0}' is not solvable for its highest-derivative term")]
    UnsupportedEquationShape(String),
    #[error("on-shell reduction did not reach a fixpoint")]
    ReductionFailure,
    #[error("expected exactly one free index, found {0}")]
    FreeIndexCount(usize),
    #[error(transparent)]
    Expr(#[from] ExprError),
}

/// What is being varied: a field or the conjugate of a complex field.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VariationTarget {
    pub field: String,
    pub conjugate: bool,
}

impl VariationTarget {
    pub fn field(name: &str) -> Self {
        VariationTarget {
            field: name.to_string(),
            conjugate: false,
        }
    }

    pub fn conj(name: &str) -> Self {
        VariationTarget {
            field: name.to_string(),
            conjugate: true,
        }
    }

    /// Accepts `phi` or `conj(phi)`.
    pub fn parse(s: &str) -> Self {
        let t = s.trim();
        if let Some(inner) = t.strip_prefix("conj(").and_then(|r| r.strip_suffix(')')) {
            VariationTarget::conj(inner.trim())
        } else {
            VariationTarget::field(t)
        }
    }
}

impl std::fmt::Display for VariationTarget {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.conjugate {
            write!(f, "conj({})", self.field)
        } else {
            write!(f, "{}", self.field)
        }
    }
}

/// A derived field equation `lhs = 0`, canonical and sign-normalized.
#[derive(Clone, Debug)]
pub struct FieldEquation {
    pub lhs: Expr,
    pub varied: VariationTarget,
    pub free_index: Option<Index>,
    pub assumptions_used: BTreeSet<Assumption>,
}

impl FieldEquation {
    /// Equality up to an overall sign (both sides are sign-normalized
    /// before comparison).
    pub fn matches(&self, other: &Expr) -> Result<bool, ExprError> {
        Ok(normalize_sign(&self.lhs)? == normalize_sign(other)?)
    }
}

/// Flip the overall sign so the highest-derivative monomial is positive,
/// which is how field equations are conventionally written.
pub fn normalize_sign(e: &Expr) -> Result<Expr, ExprError> {
    let mut ms = canonical_monomials(e)?;
    let deriv_count = |m: &Monomial| -> usize {
        m.factors
            .iter()
            .map(|(f, k)| {
                let per = match f {
                    Factor::Field { derivs, .. } => derivs.len(),
                    Factor::Sandwich(s) => s.left.derivs.len() + s.right.derivs.len(),
                    _ => 0,
                };
                per * k.unsigned_abs() as usize
            })
            .sum()
    };
    let lead = ms
        .iter()
        .enumerate()
        .max_by(|(ia, a), (ib, b)| deriv_count(a).cmp(&deriv_count(b)).then(ib.cmp(ia)))
        .map(|(i, _)| i);
    if let Some(i) = lead {
        let m = &ms[i];
        let neg = m.re.is_negative() || (m.re.is_zero() && m.im.is_negative());
        if neg {
            for m in ms.iter_mut() {
                m.re = -m.re.clone();
                m.im = -m.im.clone();
            }
        }
    }
    Ok(monomials_to_expr(&ms))
}

fn factor_pow_expr(f: &Factor, k: i32) -> Expr {
    let fe = canon::factor_to_expr(f);
    if k == 1 {
        fe
    } else {
        Expr::power(fe, k)
    }
}

/// Connector metric for the jet derivative: differentiating an occurrence
/// slot `(name, v)` with respect to a jet variable slot of variance `tv`
/// contributes g with the occurrence slot as-is and the target index with
/// flipped variance; metric contraction then splices everything together.
fn connector(slot: &Index, target: &Index) -> Expr {
    Expr::Metric(
        slot.clone(),
        Index {
            name: target.name.clone(),
            variance: target.variance.flip(),
        },
    )
}

/// Partial derivative of a density with respect to the jet variable
/// `field(own_slots)` (`deriv_slot: None`) or `field(own_slots)_{,deriv}`.
///
/// The result carries the target slots as free indices of flipped variance,
/// i.e. d L / d A_mu has a free upper mu.
fn jet_derivative(
    density: &Expr,
    target: &FieldRef,
    conjugate: bool,
    own_slots: &[Index],
    deriv_slot: Option<&Index>,
) -> Result<Expr, ExprError> {
    let ms = canonical_monomials(density)?;
    let want_derivs = usize::from(deriv_slot.is_some());
    let mut terms: Vec<Expr> = Vec::new();
    for m in &ms {
        for (pos, (f, k)) in m.factors.iter().enumerate() {
            let mut connectors: Vec<Expr> = Vec::new();
            let mut opened: Option<Vec<Expr>> = None;
            match f {
                Factor::Field {
                    decl,
                    indices,
                    derivs,
                    conj,
                } if decl == target && *conj == conjugate && derivs.len() == want_derivs => {
                    debug_assert_eq!(indices.len(), own_slots.len());
                    for (slot, tgt) in indices.iter().zip(own_slots.iter()) {
                        connectors.push(connector(slot, tgt));
                    }
                    if let (Some(ds), Some(actual)) = (deriv_slot, derivs.first()) {
                        connectors.push(connector(actual, ds));
                    }
                    opened = Some(vec![]);
                }
                Factor::Sandwich(s) if target.kind == FieldKind::Spinor && !conjugate => {
                    if s.left.decl == *target && s.left.derivs.len() == want_derivs {
                        // Opening the bra leaves gamma? * ket.
                        if let (Some(ds), Some(actual)) = (deriv_slot, s.left.derivs.first()) {
                            connectors.push(connector(actual, ds));
                        }
                        let mut rest = Vec::new();
                        if let Some(g) = &s.gamma {
                            rest.push(Expr::Gamma(g.clone()));
                        }
                        rest.push(Expr::Field {
                            decl: s.right.decl.clone(),
                            indices: vec![],
                            derivs: s.right.derivs.clone(),
                        });
                        opened = Some(rest);
                    } else if s.right.decl == *target && s.right.derivs.len() == want_derivs {
                        // Opening the ket leaves bra * gamma?.
                        if let (Some(ds), Some(actual)) = (deriv_slot, s.right.derivs.first()) {
                            connectors.push(connector(actual, ds));
                        }
                        let mut rest = Vec::new();
                        rest.push(Expr::Field {
                            decl: s.left.decl.clone(),
                            indices: vec![],
                            derivs: s.left.derivs.clone(),
                        });
                        if let Some(g) = &s.gamma {
                            rest.push(Expr::Gamma(g.clone()));
                        }
                        opened = Some(rest);
                    }
                }
                _ => {}
            }
            let Some(extra) = opened else { continue };
            let mut parts: Vec<Expr> = vec![coeff_expr(&m.re, &m.im)];
            if *k != 1 {
                parts.push(Expr::int(*k as i64));
            }
            for (q, (g, kq)) in m.factors.iter().enumerate() {
                let kk = if q == pos { *kq - 1 } else { *kq };
                if kk != 0 {
                    parts.push(factor_pow_expr(g, kk));
                }
            }
            parts.extend(extra);
            parts.extend(connectors);
            terms.push(Expr::product(parts));
        }
    }
    canonicalize(&Expr::sum(terms))
}

/// Pick `n` index names not used anywhere in the expression.
fn fresh_index_names(e: &Expr, n: usize) -> Vec<String> {
    let pool = ["mu", "nu", "rho", "sigma", "alpha", "beta", "tau", "kappa"];
    let mut used = BTreeSet::new();
    if let Ok(ms) = canonical_monomials(e) {
        for m in &ms {
            canon::for_each_index(&m.factors, |i| {
                used.insert(i.name.clone());
            });
        }
    }
    pool.iter()
        .map(|s| s.to_string())
        .chain((1..).map(|k| format!("v{k}")))
        .filter(|p| !used.contains(p))
        .take(n)
        .collect()
}

fn reject_second_derivatives(
    density: &Expr,
    target: &FieldRef,
    conjugate: bool,
) -> Result<(), VarError> {
    for m in canonical_monomials(density)? {
        for (f, _) in &m.factors {
            match f {
                Factor::Field {
                    decl, derivs, conj, ..
                } if decl == target && *conj == conjugate && derivs.len() >= 2 => {
                    return Err(VarError::UnsupportedOrder(target.name.clone()));
                }
                Factor::Sandwich(s) if target.kind == FieldKind::Spinor
                    && ((s.left.decl == *target && s.left.derivs.len() >= 2)
                        || (s.right.decl == *target && s.right.derivs.len() >= 2))
                    => {
                        return Err(VarError::UnsupportedOrder(target.name.clone()));
                    }
                _ => {}
            }
        }
    }
    Ok(())
}

/// The Lorenz-gauge rewrite `A^a_{,a} -> 0` for the given vector field.
fn lorenz_rule(a: &FieldRef) -> Rule {
    Rule::new(
        Expr::Field {
            decl: a.clone(),
            indices: vec![Index::down("lga")],
            derivs: vec![Index::up("lga")],
        },
        Expr::zero(),
    )
}

fn apply_assumptions(
    lhs: Expr,
    model: &LagrangianModel,
    used: &mut BTreeSet<Assumption>,
) -> Result<Expr, VarError> {
    if !model.assumptions.contains(&Assumption::LorenzGauge) {
        return Ok(lhs);
    }
    let vectors: Vec<&FieldRef> = model
        .fields
        .iter()
        .filter(|f| f.kind == FieldKind::Vector)
        .collect();
    let a = match vectors.as_slice() {
        [one] => (*one).clone(),
        [] => return Ok(lhs),
        _ => {
            return Err(VarError::AmbiguousGaugeField(
                vectors.iter().map(|f| f.name.clone()).collect(),
            ))
        }
    };
    let reduced = substitute(&lhs, &[lorenz_rule(&a)])?;
    if reduced != lhs {
        used.insert(Assumption::LorenzGauge);
    }
    Ok(reduced)
}

/// Euler-Lagrange variation: lhs = d_mu(dL/df_{,mu}) - dL/df, canonicalized
/// and sign-normalized. Complex fields and their conjugates are varied
/// independently; for spinors, varying the adjoint yields the ket equation.
pub fn euler_lagrange(
    model: &LagrangianModel,
    target: &VariationTarget,
) -> Result<FieldEquation, VarError> {
    let decl = model
        .field(&target.field)
        .cloned()
        .ok_or_else(|| VarError::UnknownField(target.field.clone()))?;
    if target.conjugate && (decl.reality != Reality::Complex || decl.kind == FieldKind::Spinor) {
        return Err(VarError::InvalidConjTarget(decl.name.clone()));
    }
    reject_second_derivatives(&model.density, &decl, target.conjugate)?;

    let lhs = match decl.kind {
        FieldKind::Scalar | FieldKind::Spinor => {
            let names = fresh_index_names(&model.density, 1);
            let mu = Index::down(&names[0]);
            let dl_df = jet_derivative(&model.density, &decl, target.conjugate, &[], None)?;
            let dl_dfmu = jet_derivative(&model.density, &decl, target.conjugate, &[], Some(&mu))?;
            canonicalize(&differentiate(&dl_dfmu, &mu).minus(dl_df))?
        }
        FieldKind::Vector => {
            let names = fresh_index_names(&model.density, 2);
            let mu = Index::down(&names[0]);
            let nu = Index::down(&names[1]);
            let dl_da = jet_derivative(&model.density, &decl, false, std::slice::from_ref(&mu), None)?;
            let dl_dadnu = jet_derivative(&model.density, &decl, false, std::slice::from_ref(&mu), Some(&nu))?;
            canonicalize(&differentiate(&dl_dadnu, &nu).minus(dl_da))?
        }
        FieldKind::Tensor2 { .. } => return Err(VarError::UnknownField(decl.name.clone())),
    };

    let mut used = BTreeSet::new();
    let lhs = apply_assumptions(lhs, model, &mut used)?;
    let lhs = normalize_sign(&lhs)?;

    let free = canon::free_indices(&lhs)?;
    let free_index = match (decl.kind.arity(), free.len()) {
        (0, 0) => None,
        (1, 0) if lhs.is_zero_literal() => None,
        (1, 1) => Some(free[0].clone()),
        (want, got) => {
            debug_assert!(false, "unexpected free index count {got} for arity {want}");
            return Err(VarError::FreeIndexCount(got));
        }
    };
    Ok(FieldEquation {
        lhs,
        varied: target.clone(),
        free_index,
        assumptions_used: used,
    })
}

/// Orient a potential equation so the d^mu(d.A) monomial of F^{mu nu}_{,nu}
/// carries +1; this matches the conventional written form of the field
/// equation. Falls back to leading-positive when the term is absent.
fn em_orientation(e: &Expr, a: &FieldRef) -> Result<Expr, ExprError> {
    let mut ms = canonical_monomials(e)?;
    let mut flip: Option<bool> = None;
    for m in &ms {
        if m.factors.len() != 1 {
            continue;
        }
        let (f, k) = &m.factors[0];
        if *k != 1 {
            continue;
        }
        if let Factor::Field {
            decl,
            indices,
            derivs,
            conj: false,
        } = f
        {
            if decl == a
                && indices.len() == 1
                && derivs.len() == 2
                && derivs.iter().any(|d| d.name == indices[0].name)
            {
                flip = Some(m.re.is_negative());
                break;
            }
        }
    }
    match flip {
        Some(true) => {
            for m in ms.iter_mut() {
                m.re = -m.re.clone();
                m.im = -m.im.clone();
            }
            Ok(monomials_to_expr(&ms))
        }
        Some(false) => Ok(monomials_to_expr(&ms)),
        None => normalize_sign(e),
    }
}

/// Field tensor F^{mu nu} = d^mu A^nu - d^nu A^mu built from a potential.
pub fn field_tensor(a: &FieldRef, mu: &Index, nu: &Index) -> Expr {
    Expr::field_full(a, vec![nu.clone()], vec![mu.clone()]).minus(Expr::field_full(
        a,
        vec![mu.clone()],
        vec![nu.clone()],
    ))
}

/// Derive the electromagnetic field equation by varying the potential:
/// the Euler-Lagrange expression scaled by 4*pi so the F-term has unit
/// coefficient, matching the Gaussian-convention free term -FF/(16 pi).
pub fn derive_em_equation(model: &LagrangianModel) -> Result<FieldEquation, VarError> {
    // The potential is the vector field that appears differentiated.
    let mut candidates: Vec<FieldRef> = Vec::new();
    for m in canonical_monomials(&model.density)? {
        for (f, _) in &m.factors {
            if let Factor::Field { decl, derivs, .. } = f {
                if decl.kind == FieldKind::Vector
                    && !derivs.is_empty()
                    && !candidates.contains(decl)
                {
                    candidates.push(decl.clone());
                }
            }
        }
    }
    let a = match candidates.as_slice() {
        [one] => one.clone(),
        [] => return Err(VarError::NoEmField),
        _ => {
            return Err(VarError::AmbiguousGaugeField(
                candidates.iter().map(|f| f.name.clone()).collect(),
            ))
        }
    };
    reject_second_derivatives(&model.density, &a, false)?;

    // The derivative part of the density must be exactly the free EM term:
    // dL/dA_{mu,nu} = F^{mu nu} / (4 pi). Anything else is out of scope.
    let names = fresh_index_names(&model.density, 2);
    let mu = Index::down(&names[0]);
    let nu = Index::down(&names[1]);
    let dl_dadnu = jet_derivative(&model.density, &a, false, std::slice::from_ref(&mu), Some(&nu))?;
    let expected = Expr::product(vec![
        Expr::ratio(1, 4),
        Expr::power(Expr::constant("pi"), -1),
        field_tensor(&a, &Index::up(&names[0]), &Index::up(&names[1])),
    ]);
    if !canon::equivalent(&dl_dadnu, &expected)? {
        return Err(VarError::UnsupportedEmInteraction);
    }

    let eq = euler_lagrange(model, &VariationTarget::field(&a.name))?;
    let scaled = canonicalize(&Expr::product(vec![
        Expr::int(4),
        Expr::constant("pi"),
        eq.lhs.clone(),
    ]))?;
    let lhs = em_orientation(&scaled, &a)?;
    let free = canon::free_indices(&lhs)?;
    if free.len() != 1 {
        return Err(VarError::FreeIndexCount(free.len()));
    }
    Ok(FieldEquation {
        lhs,
        varied: eq.varied,
        free_index: Some(free[0].clone()),
        assumptions_used: eq.assumptions_used,
    })
}

/// Result of a gauge-invariance check: the witness is the residual change of
/// the equation under A_mu -> A_mu + chi_{,mu}.
#[derive(Clone, Debug)]
pub struct GaugeVerdict {
    pub pass: bool,
    pub witness: Expr,
    pub gauge_field: String,
}

pub fn gauge_check(eq: &FieldEquation) -> Result<GaugeVerdict, VarError> {
    let decls = eq.lhs.field_decls();
    let gauge = decls
        .iter()
        .find(|d| d.name == eq.varied.field && d.kind == FieldKind::Vector)
        .cloned()
        .or_else(|| {
            let vectors: Vec<FieldRef> = decls
                .iter()
                .filter(|d| d.kind == FieldKind::Vector)
                .cloned()
                .collect();
            if vectors.len() == 1 {
                Some(vectors[0].clone())
            } else {
                None
            }
        })
        .ok_or(VarError::NoEmField)?;

    // A fresh scalar for the gauge function.
    let mut chi_name = "chi".to_string();
    let mut n = 0;
    while decls.iter().any(|d| d.name == chi_name) {
        n += 1;
        chi_name = format!("chi{n}");
    }
    let chi = FieldDecl::scalar(&chi_name, Reality::Real);
    let rule = Rule::new(
        Expr::field_idx(&gauge, vec![Index::down("gsa")]),
        Expr::sum(vec![
            Expr::field_idx(&gauge, vec![Index::down("gsa")]),
            Expr::field_d(&chi, vec![Index::down("gsa")]),
        ]),
    );
    let shifted = substitute(&eq.lhs, &[rule])?;
    let witness = canonicalize(&shifted.minus(eq.lhs.clone()))?;
    Ok(GaugeVerdict {
        pass: witness.is_zero_literal(),
        witness,
        gauge_field: gauge.name.clone(),
    })
}

/// Per-term polynomial degrees in the coupling charge.
#[derive(Clone, Debug)]
pub struct ChargeAudit {
    /// (rendered term, degree) for every canonical density term.
    pub terms: Vec<(String, i32)>,
    /// Degrees of the interaction terms (degree >= 1).
    pub interaction_degrees: BTreeSet<i32>,
    /// Raised when the interaction mixes linear and quadratic charge terms.
    pub mixed_flag: bool,
}

pub fn charge_degree_audit(model: &LagrangianModel, charge: &str) -> Result<ChargeAudit, VarError> {
    let ms = canonical_monomials(&model.density)?;
    let mut terms = Vec::new();
    let mut interaction_degrees = BTreeSet::new();
    for m in &ms {
        let mut deg = 0;
        for (f, k) in &m.factors {
            if let Factor::Const(c) = f {
                if c == charge {
                    deg = *k;
                }
            }
        }
        terms.push((render_term_label(&m.factors), deg));
        if deg >= 1 {
            interaction_degrees.insert(deg);
        }
    }
    let mixed_flag = interaction_degrees.contains(&1) && interaction_degrees.contains(&2);
    Ok(ChargeAudit {
        terms,
        interaction_degrees,
        mixed_flag,
    })
}

// ---------------------------------------------------------------------------
// On-shell reduction
// ---------------------------------------------------------------------------

enum ShellRule {
    /// box f -> replacement (extra derivatives applied by substitution).
    Scalar(Rule),
    /// gamma^a X_{,a} inside a bilinear -> sum of (coeff expr, derivs) on X.
    Spinor {
        side: SpinorSide,
        decl: FieldRef,
        terms: Vec<(Expr, Vec<Index>)>,
    },
}

#[derive(PartialEq, Clone, Copy)]
enum SpinorSide {
    Bar,
    Ket,
}

fn gauss_div(num: (&Rat, &Rat), den: (&Rat, &Rat)) -> (Rat, Rat) {
    let norm = den.0 * den.0 + den.1 * den.1;
    let re = (num.0 * den.0 + num.1 * den.1) / norm.clone();
    let im = (num.1 * den.0 - num.0 * den.1) / norm;
    (re, im)
}

fn shell_rules_for(eq: &FieldEquation) -> Result<Vec<ShellRule>, VarError> {
    let ms = canonical_monomials(&eq.lhs)?;
    // Find the leading (highest-derivative) monomial: a d'Alembertian of a
    // scalar, or a gamma-contracted first derivative of a spinor.
    for (pos, m) in ms.iter().enumerate() {
        // Scalar case: a field factor with an internal contracted pair.
        for (f, k) in &m.factors {
            if let Factor::Field {
                decl,
                indices,
                derivs,
                conj,
            } = f
            {
                if *k == 1
                    && indices.is_empty()
                    && derivs.len() == 2
                    && derivs[0].name == derivs[1].name
                {
                    let others_invertible = m
                        .factors
                        .iter()
                        .all(|(g, _)| matches!(g, Factor::Const(_)) || g == f);
                    if !others_invertible {
                        continue;
                    }
                    let mut inv_parts: Vec<Expr> = Vec::new();
                    let (ire, iim) = gauss_div(
                        (&Rat::from_integer((-1).into()), &Rat::zero()),
                        (&m.re, &m.im),
                    );
                    inv_parts.push(coeff_expr(&ire, &iim));
                    for (g, kg) in &m.factors {
                        if let Factor::Const(c) = g {
                            inv_parts.push(Expr::power(Expr::constant(c), -*kg));
                        }
                    }
                    let rest: Vec<Monomial> = ms
                        .iter()
                        .enumerate()
                        .filter(|(i, _)| *i != pos)
                        .map(|(_, mm)| mm.clone())
                        .collect();
                    inv_parts.push(monomials_to_expr(&rest));
                    let replacement = Expr::product(inv_parts);
                    let pattern = Expr::Field {
                        decl: decl.clone(),
                        indices: vec![],
                        derivs: vec![Index::down("osb"), Index::up("osb")],
                    };
                    let pattern = if *conj { pattern.conj() } else { pattern };
                    return Ok(vec![ShellRule::Scalar(Rule::new(pattern, replacement))]);
                }
            }
        }
        // Spinor case: naked gamma + spinor with a contracted derivative.
        let gamma = m.factors.iter().find_map(|(f, _)| match f {
            Factor::Gamma(i) => Some(i.clone()),
            _ => None,
        });
        if let Some(gi) = gamma {
            let spinor = m.factors.iter().find_map(|(f, _)| match f {
                Factor::Field { decl, derivs, .. }
                    if decl.kind == FieldKind::Spinor
                        && derivs.iter().any(|d| d.name == gi.name) =>
                {
                    Some(decl.clone())
                }
                _ => None,
            });
            if let Some(decl) = spinor {
                let side = if decl.is_adjoint_spinor() {
                    SpinorSide::Bar
                } else {
                    SpinorSide::Ket
                };
                let c1 = (&m.re, &m.im);
                let mut terms: Vec<(Expr, Vec<Index>)> = Vec::new();
                for (i, mm) in ms.iter().enumerate() {
                    if i == pos {
                        continue;
                    }
                    let mut consts: Vec<Expr> = Vec::new();
                    let mut derivs: Option<Vec<Index>> = None;
                    let mut ok = true;
                    for (g, kg) in &mm.factors {
                        match g {
                            Factor::Const(c) => {
                                consts.push(if *kg == 1 {
                                    Expr::constant(c)
                                } else {
                                    Expr::power(Expr::constant(c), *kg)
                                });
                            }
                            Factor::Field {
                                decl: d2,
                                derivs: dv,
                                ..
                            } if *d2 == decl && *kg == 1 => {
                                derivs = Some(dv.clone());
                            }
                            _ => ok = false,
                        }
                    }
                    let (true, Some(dv)) = (ok, derivs) else {
                        return Err(VarError::UnsupportedEquationShape(decl.name.clone()));
                    };
                    let (re, im) = gauss_div((&-mm.re.clone(), &-mm.im.clone()), c1);
                    let mut coeff = vec![coeff_expr(&re, &im)];
                    coeff.extend(consts);
                    terms.push((Expr::product(coeff), dv));
                }
                return Ok(vec![ShellRule::Spinor { side, decl, terms }]);
            }
        }
    }
    Err(VarError::UnsupportedEquationShape(eq.varied.field.clone()))
}

fn apply_spinor_rules(e: &Expr, rules: &[ShellRule]) -> Result<Expr, ExprError> {
    let ms = canonical_monomials(e)?;
    let mut out: Vec<Expr> = Vec::new();
    for m in &ms {
        let mut rewritten: Option<Vec<Expr>> = None;
        for (pos, (f, _)) in m.factors.iter().enumerate() {
            let Factor::Sandwich(s) = f else { continue };
            let Some(gi) = &s.gamma else { continue };
            for rule in rules {
                let ShellRule::Spinor { side, decl, terms } = rule else {
                    continue;
                };
                let (sf, other_is_left) = match side {
                    SpinorSide::Ket => (&s.right, true),
                    SpinorSide::Bar => (&s.left, false),
                };
                if sf.decl != *decl {
                    continue;
                }
                let Some(hit) = sf.derivs.iter().position(|d| d.name == gi.name) else {
                    continue;
                };
                let mut leftover = sf.derivs.clone();
                leftover.remove(hit);
                let mut terms_exprs: Vec<Expr> = Vec::new();
                for (coeff, dv) in terms {
                    let mut derivs = dv.clone();
                    derivs.extend(leftover.iter().cloned());
                    let new_s = if other_is_left {
                        Sandwich {
                            left: s.left.clone(),
                            gamma: None,
                            right: SpinorFactor {
                                decl: decl.clone(),
                                derivs,
                            },
                        }
                    } else {
                        Sandwich {
                            left: SpinorFactor {
                                decl: decl.clone(),
                                derivs,
                            },
                            gamma: None,
                            right: s.right.clone(),
                        }
                    };
                    terms_exprs.push(Expr::product(vec![
                        coeff.clone(),
                        Expr::Sandwich(Box::new(new_s)),
                    ]));
                }
                let mut parts: Vec<Expr> = vec![coeff_expr(&m.re, &m.im)];
                for (q, (g, kq)) in m.factors.iter().enumerate() {
                    if q != pos {
                        parts.push(factor_pow_expr(g, *kq));
                    }
                }
                parts.push(Expr::sum(terms_exprs));
                rewritten = Some(parts);
                break;
            }
            if rewritten.is_some() {
                break;
            }
        }
        match rewritten {
            Some(parts) => out.push(Expr::product(parts)),
            None => out.push(monomials_to_expr(std::slice::from_ref(m))),
        }
    }
    canonicalize(&Expr::sum(out))
}

/// Repeatedly substitute the field equations (solved for their highest
/// derivative) into `e` until a fixpoint.
pub fn on_shell_reduce(e: &Expr, eqs: &[FieldEquation]) -> Result<Expr, VarError> {
    let mut rules: Vec<ShellRule> = Vec::new();
    for eq in eqs {
        rules.extend(shell_rules_for(eq)?);
    }
    let scalar_rules: Vec<Rule> = rules
        .iter()
        .filter_map(|r| match r {
            ShellRule::Scalar(rule) => Some(rule.clone()),
            _ => None,
        })
        .collect();
    let mut current = canonicalize(e)?;
    for _ in 0..64 {
        let mut next = current.clone();
        if !scalar_rules.is_empty() {
            next = substitute(&next, &scalar_rules)?;
        }
        next = apply_spinor_rules(&next, &rules)?;
        if next == current {
            return Ok(next);
        }
        current = next;
    }
    Err(VarError::ReductionFailure)
}

/// Divergence of a current with exactly one free index: contracts a fresh
/// partial derivative against the free slot.
pub fn divergence(j: &Expr) -> Result<Expr, VarError> {
    let free = canon::free_indices(j)?;
    if free.len() != 1 {
        return Err(VarError::FreeIndexCount(free.len()));
    }
    let idx = free[0].flipped();
    Ok(canonicalize(&differentiate(j, &idx))?)
}

/// Canonical stress-energy tensor T^{mu nu} = (dL/df_{,mu}) f^{,nu} - L g^{mu nu}.
pub fn stress_energy(model: &LagrangianModel, field: &str) -> Result<Expr, VarError> {
    let decl = model
        .field(field)
        .cloned()
        .ok_or_else(|| VarError::UnknownField(field.to_string()))?;
    reject_second_derivatives(&model.density, &decl, false)?;
    let names = fresh_index_names(&model.density, 2);
    let mu = Index::down(&names[0]);
    let nu_up = Index::up(&names[1]);
    let dl_dfmu = jet_derivative(&model.density, &decl, false, &[], Some(&mu))?;
    let t = Expr::product(vec![dl_dfmu, Expr::field_d(&decl, vec![nu_up.clone()])]).minus(
        Expr::product(vec![
            model.density.clone(),
            Expr::Metric(Index::up(&names[0]), nu_up),
        ]),
    );
    Ok(canonicalize(&t)?)
}

/// Hermiticity: pass iff conj(e) canonicalizes to e given declared realities.
#[derive(Clone, Debug)]
pub struct HermiticityVerdict {
    pub pass: bool,
    /// conj(e) - e, canonical.
    pub witness: Expr,
}

pub fn hermiticity_check(e: &Expr) -> Result<HermiticityVerdict, VarError> {
    let diff = canonicalize(&e.clone().conj().minus(e.clone()))?;
    Ok(HermiticityVerdict {
        pass: diff.is_zero_literal(),
        witness: diff,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::{parse, parse_expr_in};

    const KG_FREE_REAL: &str = "\
field phi : real scalar
const m dim -1
L = 1/2 * (d_{mu}(phi) * d_{nu}(phi) * g^{mu nu} - m^2 * phi^2)
";

    const KG_FREE_COMPLEX: &str = "\
field phi : complex scalar
const m dim -1
L = d_{mu}(conj(phi)) * d_{nu}(phi) * g^{mu nu} - m^2 * conj(phi) * phi
";

    const KG_REAL_INTERACTION: &str = "\
field phi : real scalar
field A : real vector dim -1
const e dim 0
L = e * A^{mu} * d_{mu}(phi) * phi
";

    const KG_EM_COMPLEX: &str = "\
field phi : complex scalar
field A : real vector
const m dim -1
const e dim 0
assume lorenz_gauge
L = d_{mu}(conj(phi)) * d_{nu}(phi) * g^{mu nu} - m^2 * conj(phi) * phi
  - e * i * (conj(phi) * d^{mu}(phi) - d^{mu}(conj(phi)) * phi) * A_{mu}
";

    const DIRAC_FREE: &str = "\
field psi : complex spinor
const m dim -1
L = psibar * (i*gamma^{mu}*d_{mu}(psi) - m*psi)
";

    #[test]
    fn kg_equation_from_free_density() {
        let model = parse(KG_FREE_REAL).unwrap();
        let eq = euler_lagrange(&model, &VariationTarget::field("phi")).unwrap();
        let golden = parse_expr_in("d_{mu}(d^{mu}(phi)) + m^2*phi", &model).unwrap();
        assert!(eq.matches(&golden).unwrap());
        assert!(eq.free_index.is_none());
    }

    #[test]
    fn real_interaction_survivor_term() {
        let model = parse(KG_REAL_INTERACTION).unwrap();
        let eq = euler_lagrange(&model, &VariationTarget::field("phi")).unwrap();
        let golden = parse_expr_in("e*d_{mu}(A^{mu})*phi", &model).unwrap();
        assert!(eq.matches(&golden).unwrap());
        assert!(eq.assumptions_used.is_empty());
    }

    #[test]
    fn real_interaction_vanishes_under_lorenz_gauge() {
        let model = parse(KG_REAL_INTERACTION)
            .unwrap()
            .with_assumption(Assumption::LorenzGauge);
        let eq = euler_lagrange(&model, &VariationTarget::field("phi")).unwrap();
        assert!(eq.lhs.is_zero_literal());
        assert!(eq.assumptions_used.contains(&Assumption::LorenzGauge));
    }

    #[test]
    fn complex_kg_with_em_coupling_gives_interacting_equation() {
        let model = parse(KG_EM_COMPLEX).unwrap();
        let eq = euler_lagrange(&model, &VariationTarget::conj("phi")).unwrap();
        let golden = parse_expr_in(
            "d_{mu}(d^{mu}(phi)) + 2*i*e*A^{mu}*d_{mu}(phi) + m^2*phi",
            &model,
        )
        .unwrap();
        assert!(eq.matches(&golden).unwrap());
        assert!(eq.assumptions_used.contains(&Assumption::LorenzGauge));
    }

    #[test]
    fn dirac_equation_from_adjoint_variation() {
        let model = parse(DIRAC_FREE).unwrap();
        let eq = euler_lagrange(&model, &VariationTarget::field("psibar")).unwrap();
        let golden = parse_expr_in("i*gamma^{mu}*d_{mu}(psi) - m*psi", &model).unwrap();
        assert!(eq.matches(&golden).unwrap());
    }

    #[test]
    fn el_is_linear_in_the_density() {
        let m1 = parse(KG_FREE_REAL).unwrap();
        let m2 = parse(KG_REAL_INTERACTION).unwrap();
        // combined density over the union of declarations
        let combined_text = "\
field phi : real scalar
field A : real vector dim -1
const m dim -1
const e dim 0
L = 1/2 * (d_{mu}(phi) * d_{nu}(phi) * g^{mu nu} - m^2 * phi^2) + e * A^{mu} * d_{mu}(phi) * phi
";
        let combined = parse(combined_text).unwrap();
        let eq = euler_lagrange(&combined, &VariationTarget::field("phi")).unwrap();
        let e1 = euler_lagrange(&m1, &VariationTarget::field("phi")).unwrap();
        let e2 = euler_lagrange(&m2, &VariationTarget::field("phi")).unwrap();
        // compare un-normalized by matching the sum against the combined lhs
        let sum = Expr::sum(vec![e1.lhs, e2.lhs]);
        assert!(eq.matches(&sum).unwrap());
    }

    #[test]
    fn stress_energy_of_free_kg() {
        let model = parse(KG_FREE_REAL).unwrap();
        let t = stress_energy(&model, "phi").unwrap();
        let golden = parse_expr_in(
            "d^{mu}(phi)*d^{nu}(phi) - 1/2*d_{alpha}(phi)*d^{alpha}(phi)*g^{mu nu} + 1/2*m^2*phi^2*g^{mu nu}",
            &model,
        )
        .unwrap();
        assert_eq!(t, golden);
        assert_eq!(crate::calculus::poly_degree(&t, "m").unwrap(), 2);
    }

    #[test]
    fn complex_current_is_conserved_on_shell() {
        let model = parse(KG_FREE_COMPLEX).unwrap();
        let eq_phi = euler_lagrange(&model, &VariationTarget::conj("phi")).unwrap();
        let eq_conj = euler_lagrange(&model, &VariationTarget::field("phi")).unwrap();
        let j = parse_expr_in("i*(conj(phi)*d_{mu}(phi) - d_{mu}(conj(phi))*phi)", &model).unwrap();
        let div = divergence(&j).unwrap();
        let reduced = on_shell_reduce(&div, &[eq_phi, eq_conj]).unwrap();
        assert!(reduced.is_zero_literal());
    }

    #[test]
    fn divergence_unchanged_with_no_equations() {
        let model = parse(KG_FREE_COMPLEX).unwrap();
        let j = parse_expr_in("i*(conj(phi)*d_{mu}(phi) - d_{mu}(conj(phi))*phi)", &model).unwrap();
        let div = divergence(&j).unwrap();
        let reduced = on_shell_reduce(&div, &[]).unwrap();
        assert_eq!(reduced, div);
    }

    #[test]
    fn dirac_current_is_conserved_on_shell() {
        let model = parse(DIRAC_FREE).unwrap();
        let eq_psi = euler_lagrange(&model, &VariationTarget::field("psibar")).unwrap();
        let eq_bar = euler_lagrange(&model, &VariationTarget::field("psi")).unwrap();
        let j = parse_expr_in("psibar*gamma^{mu}*psi", &model).unwrap();
        let div = divergence(&j).unwrap();
        let reduced = on_shell_reduce(&div, &[eq_psi, eq_bar]).unwrap();
        assert!(reduced.is_zero_literal());
    }

    const EM_CURRENT_EXT: &str = "\
field A : real vector
field J : real vector
const e dim 0
L = -1/16 * pi^-1 * (d^{mu}(A^{nu}) - d^{nu}(A^{mu})) * (d_{mu}(A_{nu}) - d_{nu}(A_{mu}))
  - e * J^{mu} * A_{mu}
";

    const EM_KG_FULL: &str = "\
field phi : complex scalar
field A : real vector
const m dim -1
const e dim 0
L = d_{mu}(conj(phi)) * d_{nu}(phi) * g^{mu nu} - m^2 * conj(phi) * phi
  + i * e * (d_{mu}(conj(phi)) * phi - conj(phi) * d_{mu}(phi)) * A^{mu}
  + e^2 * A_{mu} * A^{mu} * conj(phi) * phi
  - 1/16 * pi^-1 * (d^{mu}(A^{nu}) - d^{nu}(A^{mu})) * (d_{mu}(A_{nu}) - d_{nu}(A_{mu}))
";

    #[test]
    fn em_equation_with_external_current_is_maxwellian() {
        let model = parse(EM_CURRENT_EXT).unwrap();
        let eq = derive_em_equation(&model).unwrap();
        let golden = parse_expr_in(
            "d_{nu}(d^{mu}(A^{nu})) - d_{nu}(d^{nu}(A^{mu})) + 4*pi*e*J^{mu}",
            &model,
        )
        .unwrap();
        assert!(eq.matches(&golden).unwrap());
        let verdict = gauge_check(&eq).unwrap();
        assert!(
            verdict.pass,
            "witness: {}",
            crate::dsl::render(&verdict.witness)
        );
    }

    #[test]
    fn em_equation_of_kg_charge_has_quadratic_term_and_breaks_gauge() {
        let model = parse(EM_KG_FULL).unwrap();
        let eq = derive_em_equation(&model).unwrap();
        let golden = parse_expr_in(
            "d_{nu}(d^{mu}(A^{nu})) - d_{nu}(d^{nu}(A^{mu})) \
             + 4*pi*i*e*(conj(phi)*d^{mu}(phi) - d^{mu}(conj(phi))*phi) \
             - 8*pi*e^2*A^{mu}*conj(phi)*phi",
            &model,
        )
        .unwrap();
        assert!(
            eq.matches(&golden).unwrap(),
            "got: {}",
            crate::dsl::render(&eq.lhs)
        );

        let verdict = gauge_check(&eq).unwrap();
        assert!(!verdict.pass);
        // The residual is proportional to chi^{,mu} conj(phi) phi.
        let chi = FieldDecl::scalar("chi", Reality::Real);
        let phi = model.field("phi").unwrap();
        let expected_witness = Expr::product(vec![
            Expr::int(-8),
            Expr::constant("pi"),
            Expr::power(Expr::constant("e"), 2),
            Expr::field_d(&chi, vec![Index::up("mu")]),
            Expr::field(phi).conj(),
            Expr::field(phi),
        ]);
        let sign_of_witness = normalize_sign(&verdict.witness).unwrap();
        let sign_of_expected = normalize_sign(&expected_witness).unwrap();
        assert_eq!(sign_of_witness, sign_of_expected);
        assert!(canon::equivalent(&verdict.witness, &expected_witness).unwrap());
    }

    #[test]
    fn vacuum_maxwell_is_gauge_invariant() {
        let model = parse(
            "field A : real vector\nL = -1/16 * pi^-1 * (d^{mu}(A^{nu}) - d^{nu}(A^{mu})) * (d_{mu}(A_{nu}) - d_{nu}(A_{mu}))",
        )
        .unwrap();
        let eq = derive_em_equation(&model).unwrap();
        let golden =
            parse_expr_in("d_{nu}(d^{mu}(A^{nu})) - d_{nu}(d^{nu}(A^{mu}))", &model).unwrap();
        assert!(eq.matches(&golden).unwrap());
        assert!(gauge_check(&eq).unwrap().pass);
    }

    #[test]
    fn charge_degrees_of_mixed_interaction() {
        let model = parse(EM_KG_FULL).unwrap();
        let audit = charge_degree_audit(&model, "e").unwrap();
        assert!(audit.mixed_flag);
        assert!(audit.interaction_degrees.contains(&1));
        assert!(audit.interaction_degrees.contains(&2));

        let current_only = parse(EM_CURRENT_EXT).unwrap();
        let audit = charge_degree_audit(&current_only, "e").unwrap();
        assert!(!audit.mixed_flag);
        assert_eq!(
            audit
                .interaction_degrees
                .iter()
                .copied()
                .collect::<Vec<_>>(),
            vec![1]
        );
    }

    #[test]
    fn conj_variation_of_real_field_is_rejected() {
        let model = parse(KG_FREE_REAL).unwrap();
        assert!(matches!(
            euler_lagrange(&model, &VariationTarget::conj("phi")),
            Err(VarError::InvalidConjTarget(_))
        ));
    }

    #[test]
    fn second_order_density_is_rejected() {
        let model = parse("field phi : real scalar\nconst m dim -1\nL = phi * d_{mu}(d^{mu}(phi))")
            .unwrap();
        assert!(matches!(
            euler_lagrange(&model, &VariationTarget::field("phi")),
            Err(VarError::UnsupportedOrder(_))
        ));
    }

    #[test]
    fn hermiticity_of_yukawa_term() {
        let real = parse(
            "field psi : complex spinor dim -3/2\nfield phi : real scalar dim -1\nconst gy dim 0\nL = gy*psibar*psi*phi",
        )
        .unwrap();
        let v = hermiticity_check(&real.density).unwrap();
        assert!(v.pass);

        let complex = parse(
            "field psi : complex spinor dim -3/2\nfield phi : complex scalar dim -1\nconst gy dim 0\nL = gy*psibar*psi*phi",
        )
        .unwrap();
        let v = hermiticity_check(&complex.density).unwrap();
        assert!(!v.pass);
    }

    #[test]
    fn hermiticity_of_real_mass_term() {
        let model = parse(KG_FREE_REAL).unwrap();
        let term = parse_expr_in("m^2*phi^2", &model).unwrap();
        assert!(hermiticity_check(&term).unwrap().pass);
    }
}
