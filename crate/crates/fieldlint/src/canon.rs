//! Canonicalization: rewrite any well-formed expression into a flattened
//! sum of monomials with exact rational coefficients.
//!
//! Per monomial the normal form
//!   - contracts metric factors against matching dummy indices,
//!   - renames dummy pairs to a reserved alphabet (ι1, ι2, ...) that the DSL
//!     can never produce, choosing the labeling that minimizes the sorted
//!     factor list over all pair permutations and upper/lower flips,
//!   - sorts derivative lists (partial derivatives commute) and normalizes
//!     tagged tensor index pairs, tracking the sign of antisymmetric swaps,
//!   - cancels any monomial that maps onto its own negative under a dummy
//!     relabeling (the symmetric x antisymmetric contractions).
//!
//! Like monomials are then collected; the result is deterministic, which the
//! golden tests rely on.

use std::collections::{BTreeMap, HashMap};

use itertools::Itertools;
use num::{One, Zero};

use crate::expr::FieldKind;
use crate::expr::{
    Expr, ExprError, FieldRef, Index, Parity, Rat, Sandwich, SpinorFactor, Variance,
};

/// Upper bound on dummy pairs per monomial; the relabeling search is k!*2^k.
const MAX_DUMMIES: usize = 6;

/// Prefix of the reserved dummy alphabet. Non-ASCII, so the DSL lexer can
/// never accept it from user input and capture is impossible.
pub(crate) const DUMMY_PREFIX: &str = "ι";
/// Secondary reserved alphabet used when splicing substitution results.
pub(crate) const FRESH_PREFIX: &str = "κ";

pub(crate) fn is_reserved_name(name: &str) -> bool {
    name.starts_with(DUMMY_PREFIX) || name.starts_with(FRESH_PREFIX)
}

/// A single multiplicative atom of a monomial.
///
/// The variant order (via `rank`) fixes the canonical factor order; barred
/// spinors sort before gammas, which sort before unbarred spinors, so the
/// only meaningful non-commutativity is preserved by sorting.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub(crate) enum Factor {
    Sandwich(Sandwich),
    Gamma(Index),
    Field {
        decl: FieldRef,
        indices: Vec<Index>,
        derivs: Vec<Index>,
        conj: bool,
    },
    Metric(Index, Index),
    Const(String),
}

impl Factor {
    fn rank(&self) -> u8 {
        match self {
            // pi is part of the numeric coefficient, other constants are
            // couplings; both render before the field content.
            Factor::Const(c) if c == "pi" => 0,
            Factor::Const(_) => 1,
            Factor::Sandwich(_) => 2,
            Factor::Field { decl, .. } if decl.kind == FieldKind::Spinor => {
                if decl.is_adjoint_spinor() {
                    3
                } else {
                    5
                }
            }
            Factor::Gamma(_) => 4,
            Factor::Field { .. } => 6,
            Factor::Metric(..) => 7,
        }
    }
}

impl Ord for Factor {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        use std::cmp::Ordering;
        match self.rank().cmp(&other.rank()) {
            Ordering::Equal => {}
            o => return o,
        }
        match (self, other) {
            (Factor::Sandwich(a), Factor::Sandwich(b)) => a.cmp(b),
            (Factor::Gamma(a), Factor::Gamma(b)) => a.cmp(b),
            (
                Factor::Field {
                    decl: d1,
                    indices: i1,
                    derivs: v1,
                    conj: c1,
                },
                Factor::Field {
                    decl: d2,
                    indices: i2,
                    derivs: v2,
                    conj: c2,
                },
            ) => {
                // Conjugated occurrences sort before plain ones: phi* phi.
                (d1, !c1, v1.len(), i1, v1).cmp(&(d2, !c2, v2.len(), i2, v2))
            }
            (Factor::Metric(a1, b1), Factor::Metric(a2, b2)) => (a1, b1).cmp(&(a2, b2)),
            (Factor::Const(a), Factor::Const(b)) => a.cmp(b),
            _ => unreachable!("rank already distinguished variants"),
        }
    }
}

impl PartialOrd for Factor {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

pub(crate) type FactorList = Vec<(Factor, i32)>;

/// A monomial with an exact Gaussian-rational coefficient `re + im*i`.
#[derive(Clone, Debug)]
pub(crate) struct Monomial {
    pub re: Rat,
    pub im: Rat,
    pub factors: FactorList,
}

impl Monomial {
    fn one() -> Self {
        Monomial {
            re: Rat::one(),
            im: Rat::zero(),
            factors: vec![],
        }
    }

    fn coeff_is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    fn scale(&mut self, re: &Rat, im: &Rat) {
        let nre = &self.re * re - &self.im * im;
        let nim = &self.re * im + &self.im * re;
        self.re = nre;
        self.im = nim;
    }

    fn mul(&self, other: &Monomial) -> Monomial {
        let mut m = self.clone();
        m.scale(&other.re, &other.im);
        m.factors.extend(other.factors.iter().cloned());
        m
    }

    fn conjugated(&self) -> Result<Monomial, ExprError> {
        let mut factors = group_spinors(self.factors.clone())?;
        for (f, _) in factors.iter_mut() {
            *f = conj_factor(f)?;
        }
        Ok(Monomial {
            re: self.re.clone(),
            im: -self.im.clone(),
            factors,
        })
    }
}

fn conj_factor(f: &Factor) -> Result<Factor, ExprError> {
    match f {
        Factor::Const(_) | Factor::Metric(..) => Ok(f.clone()),
        Factor::Gamma(i) => Err(ExprError::UnsupportedConjugate(format!("gamma{}", i))),
        Factor::Field {
            decl,
            indices,
            derivs,
            conj,
        } => {
            if decl.kind == FieldKind::Spinor {
                return Err(ExprError::UnsupportedConjugate(decl.name.clone()));
            }
            match decl.reality {
                crate::expr::Reality::Real => Ok(f.clone()),
                crate::expr::Reality::Complex => Ok(Factor::Field {
                    decl: decl.clone(),
                    indices: indices.clone(),
                    derivs: derivs.clone(),
                    conj: !conj,
                }),
            }
        }
        // Hermitian-conjugate bilinear rule for inner = 1 or gamma^mu:
        // (lbar Γ r)* = lbar Γ r with the derivative lists exchanged.
        Factor::Sandwich(s) => Ok(Factor::Sandwich(Sandwich {
            left: SpinorFactor {
                decl: s.left.decl.clone(),
                derivs: s.right.derivs.clone(),
            },
            gamma: s.gamma.clone(),
            right: SpinorFactor {
                decl: s.right.decl.clone(),
                derivs: s.left.derivs.clone(),
            },
        })),
    }
}

/// Expand an expression into raw (not yet normalized) monomials.
pub(crate) fn expand(e: &Expr) -> Result<Vec<Monomial>, ExprError> {
    match e {
        Expr::Sum(terms) => {
            let mut out = Vec::new();
            for t in terms {
                out.extend(expand(t)?);
            }
            Ok(out)
        }
        Expr::Product(fs) => {
            let mut acc = vec![Monomial::one()];
            for f in fs {
                let ms = expand(f)?;
                let mut next = Vec::with_capacity(acc.len() * ms.len());
                for a in &acc {
                    for m in &ms {
                        next.push(a.mul(m));
                    }
                }
                acc = next;
            }
            Ok(acc)
        }
        Expr::Power(base, n) => {
            if *n == 0 {
                return Ok(vec![Monomial::one()]);
            }
            let ms = expand(base)?;
            if *n > 0 {
                let mut acc = vec![Monomial::one()];
                for _ in 0..*n {
                    let mut next = Vec::new();
                    for a in &acc {
                        for m in &ms {
                            next.push(a.mul(m));
                        }
                    }
                    acc = next;
                }
                Ok(acc)
            } else {
                if ms.len() != 1 {
                    return Err(ExprError::NegativePowerOfSum);
                }
                let m = &ms[0];
                if !m.im.is_zero() || m.re.is_zero() {
                    return Err(ExprError::NegativePowerOfSum);
                }
                let mut inv = Monomial::one();
                for _ in 0..n.unsigned_abs() {
                    inv.re = &inv.re * m.re.recip();
                    for (f, k) in &m.factors {
                        inv.factors.push((f.clone(), -k));
                    }
                }
                Ok(vec![inv])
            }
        }
        Expr::Rational(r) => Ok(vec![Monomial {
            re: r.clone(),
            im: Rat::zero(),
            factors: vec![],
        }]),
        Expr::I => Ok(vec![Monomial {
            re: Rat::zero(),
            im: Rat::one(),
            factors: vec![],
        }]),
        Expr::Const(c) => Ok(vec![Monomial {
            re: Rat::one(),
            im: Rat::zero(),
            factors: vec![(Factor::Const(c.clone()), 1)],
        }]),
        Expr::Metric(a, b) => Ok(vec![Monomial {
            re: Rat::one(),
            im: Rat::zero(),
            factors: vec![(Factor::Metric(a.clone(), b.clone()), 1)],
        }]),
        Expr::Gamma(i) => Ok(vec![Monomial {
            re: Rat::one(),
            im: Rat::zero(),
            factors: vec![(Factor::Gamma(i.clone()), 1)],
        }]),
        Expr::Field {
            decl,
            indices,
            derivs,
        } => Ok(vec![Monomial {
            re: Rat::one(),
            im: Rat::zero(),
            factors: vec![(
                Factor::Field {
                    decl: decl.clone(),
                    indices: indices.clone(),
                    derivs: derivs.clone(),
                    conj: false,
                },
                1,
            )],
        }]),
        Expr::Sandwich(s) => Ok(vec![Monomial {
            re: Rat::one(),
            im: Rat::zero(),
            factors: vec![(Factor::Sandwich((**s).clone()), 1)],
        }]),
        Expr::Conjugate(inner) => {
            let ms = expand(inner)?;
            ms.iter().map(|m| m.conjugated()).collect()
        }
    }
}

/// Group naked spinor factors of a monomial into a `Sandwich`.
///
/// A monomial with exactly one barred and one unbarred spinor (and at most
/// one gamma) becomes a bilinear; unpaired spinor content stays naked, which
/// is what spinor-valued field equations look like.
fn group_spinors(factors: FactorList) -> Result<FactorList, ExprError> {
    let mut bars: Vec<SpinorFactor> = Vec::new();
    let mut kets: Vec<SpinorFactor> = Vec::new();
    let mut gammas: Vec<Index> = Vec::new();
    let mut rest: FactorList = Vec::new();

    for (f, k) in factors {
        match &f {
            Factor::Field {
                decl, derivs, conj, ..
            } if decl.kind == FieldKind::Spinor => {
                if *conj {
                    return Err(ExprError::UnsupportedConjugate(decl.name.clone()));
                }
                if k != 1 {
                    return Err(ExprError::UnsupportedSpinorProduct(format!(
                        "{}^{k}",
                        decl.name
                    )));
                }
                let sf = SpinorFactor {
                    decl: decl.clone(),
                    derivs: derivs.clone(),
                };
                if decl.is_adjoint_spinor() {
                    bars.push(sf);
                } else {
                    kets.push(sf);
                }
            }
            Factor::Gamma(i) if k == 1 => gammas.push(i.clone()),
            Factor::Gamma(_) => {
                return Err(ExprError::UnsupportedSpinorProduct(
                    "gamma matrix with exponent".into(),
                ))
            }
            _ => rest.push((f, k)),
        }
    }

    match (bars.len(), kets.len()) {
        (0, 0) => {
            for g in gammas {
                rest.push((Factor::Gamma(g), 1));
            }
            Ok(rest)
        }
        (1, 1) => {
            if gammas.len() > 1 {
                return Err(ExprError::UnsupportedSpinorProduct(
                    "products of gamma matrices are not supported".into(),
                ));
            }
            rest.push((
                Factor::Sandwich(Sandwich {
                    left: bars.pop().unwrap(),
                    gamma: gammas.pop(),
                    right: kets.pop().unwrap(),
                }),
                1,
            ));
            Ok(rest)
        }
        // Spinor-valued monomials (field equations): keep naked factors.
        _ if bars.len() <= 1 && kets.len() <= 1 => {
            for b in bars {
                rest.push((
                    Factor::Field {
                        decl: b.decl,
                        indices: vec![],
                        derivs: b.derivs,
                        conj: false,
                    },
                    1,
                ));
            }
            for g in gammas {
                rest.push((Factor::Gamma(g), 1));
            }
            for kt in kets {
                rest.push((
                    Factor::Field {
                        decl: kt.decl,
                        indices: vec![],
                        derivs: kt.derivs,
                        conj: false,
                    },
                    1,
                ));
            }
            Ok(rest)
        }
        _ => Err(ExprError::UnsupportedSpinorProduct(
            "more than one spinor bilinear in a single monomial".into(),
        )),
    }
}

/// Every index slot of a factor list, for occurrence counting and renaming.
pub(crate) fn for_each_index<F: FnMut(&Index)>(factors: &FactorList, mut f: F) {
    for (fac, _) in factors {
        match fac {
            Factor::Sandwich(s) => {
                s.left.derivs.iter().for_each(&mut f);
                if let Some(g) = &s.gamma {
                    f(g);
                }
                s.right.derivs.iter().for_each(&mut f);
            }
            Factor::Gamma(i) => f(i),
            Factor::Field {
                indices, derivs, ..
            } => {
                indices.iter().for_each(&mut f);
                derivs.iter().for_each(&mut f);
            }
            Factor::Metric(a, b) => {
                f(a);
                f(b);
            }
            Factor::Const(_) => {}
        }
    }
}

fn map_indices(factors: &FactorList, f: &impl Fn(&Index) -> Index) -> FactorList {
    factors
        .iter()
        .map(|(fac, k)| {
            let nf = match fac {
                Factor::Sandwich(s) => Factor::Sandwich(Sandwich {
                    left: SpinorFactor {
                        decl: s.left.decl.clone(),
                        derivs: s.left.derivs.iter().map(f).collect(),
                    },
                    gamma: s.gamma.as_ref().map(f),
                    right: SpinorFactor {
                        decl: s.right.decl.clone(),
                        derivs: s.right.derivs.iter().map(f).collect(),
                    },
                }),
                Factor::Gamma(i) => Factor::Gamma(f(i)),
                Factor::Field {
                    decl,
                    indices,
                    derivs,
                    conj,
                } => Factor::Field {
                    decl: decl.clone(),
                    indices: indices.iter().map(f).collect(),
                    derivs: derivs.iter().map(f).collect(),
                    conj: *conj,
                },
                Factor::Metric(a, b) => Factor::Metric(f(a), f(b)),
                Factor::Const(c) => Factor::Const(c.clone()),
            };
            (nf, *k)
        })
        .collect()
}

/// Check the summation-convention discipline: a non-concrete index name may
/// appear at most twice, and if twice then once upper and once lower.
fn check_discipline(factors: &FactorList) -> Result<(), ExprError> {
    let mut counts: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    for (fac, k) in factors {
        if k.unsigned_abs() > 1 {
            let single = vec![(fac.clone(), 1)];
            let mut has_index = false;
            for_each_index(&single, |i| {
                if !i.is_concrete() {
                    has_index = true;
                }
            });
            if has_index {
                return Err(ExprError::IndexDiscipline(
                    "an indexed factor cannot carry an exponent".into(),
                ));
            }
        }
    }
    for_each_index(factors, |i| {
        if i.is_concrete() {
            return;
        }
        let e = counts.entry(i.name.clone()).or_insert((0, 0));
        match i.variance {
            Variance::Upper => e.0 += 1,
            Variance::Lower => e.1 += 1,
        }
    });
    for (name, (up, down)) in counts {
        let total = up + down;
        if total > 2 {
            return Err(ExprError::IndexDiscipline(format!(
                "index '{name}' appears {total} times"
            )));
        }
        if total == 2 && (up != 1 || down != 1) {
            return Err(ExprError::IndexDiscipline(format!(
                "index '{name}' appears twice with the same variance"
            )));
        }
    }
    Ok(())
}

/// Contract metric factors against dummy partners, to fixpoint.
/// Returns `None` when the monomial is identically zero (antisymmetric trace).
fn contract_metrics(mut factors: FactorList, coeff: &mut (Rat, Rat)) -> Option<FactorList> {
    'outer: loop {
        for pos in 0..factors.len() {
            let (a, b) = match &factors[pos].0 {
                Factor::Metric(a, b) => (a.clone(), b.clone()),
                _ => continue,
            };
            if a.is_concrete() || b.is_concrete() {
                continue;
            }
            if a.name == b.name {
                // g^mu_mu = 4 in four spacetime dimensions.
                factors.remove(pos);
                let four = Rat::from_integer(4.into());
                let (re, im) = coeff.clone();
                *coeff = (re * &four, im * &four);
                continue 'outer;
            }
            // Try to contract either slot against a partner elsewhere.
            for (slot, other) in [(a.clone(), b.clone()), (b.clone(), a.clone())] {
                if rename_partner(&mut factors, pos, &slot, &other) {
                    factors.remove(pos);
                    continue 'outer;
                }
            }
        }
        break;
    }
    // Antisymmetric tensors with a self-contracted pair vanish.
    for (fac, _) in &factors {
        if let Factor::Field { decl, indices, .. } = fac {
            if let FieldKind::Tensor2 {
                parity: Parity::Antisymmetric,
            } = decl.kind
            {
                if indices.len() == 2 && indices[0].name == indices[1].name {
                    return None;
                }
            }
        }
    }
    Some(factors)
}

/// Rename the occurrence pairing with `slot` (opposite variance, same name)
/// to `other`'s name and variance. Searches all factors except the metric at
/// `metric_pos` itself. Returns true if a partner was found.
fn rename_partner(
    factors: &mut FactorList,
    metric_pos: usize,
    slot: &Index,
    other: &Index,
) -> bool {
    let want = slot.flipped();
    for (i, (fac, _)) in factors.iter_mut().enumerate() {
        if i == metric_pos {
            continue;
        }
        let mut done = false;
        let replace = |idx: &mut Index, done: &mut bool| {
            if !*done && *idx == want {
                *idx = other.clone();
                *done = true;
            }
        };
        match fac {
            Factor::Sandwich(s) => {
                for d in s.left.derivs.iter_mut() {
                    replace(d, &mut done);
                }
                if let Some(g) = s.gamma.as_mut() {
                    replace(g, &mut done);
                }
                for d in s.right.derivs.iter_mut() {
                    replace(d, &mut done);
                }
            }
            Factor::Gamma(g) => replace(g, &mut done),
            Factor::Field {
                indices, derivs, ..
            } => {
                for d in indices.iter_mut() {
                    replace(d, &mut done);
                }
                for d in derivs.iter_mut() {
                    replace(d, &mut done);
                }
            }
            Factor::Metric(x, y) => {
                replace(x, &mut done);
                replace(y, &mut done);
            }
            Factor::Const(_) => {}
        }
        if done {
            return true;
        }
    }
    false
}

/// Normalize slot orderings inside one factor: sort derivative lists, order
/// metric pairs, order tagged tensor pairs (sign for antisymmetric swaps).
/// Returns the factor and +1/-1.
fn normalize_factor(fac: &Factor) -> (Factor, i8) {
    match fac {
        Factor::Field {
            decl,
            indices,
            derivs,
            conj,
        } => {
            let mut sign = 1i8;
            let mut idx = indices.clone();
            if let FieldKind::Tensor2 { parity } = &decl.kind {
                if idx.len() == 2 && idx[0] > idx[1] {
                    idx.swap(0, 1);
                    if *parity == Parity::Antisymmetric {
                        sign = -sign;
                    }
                }
            }
            let mut dv = derivs.clone();
            dv.sort();
            (
                Factor::Field {
                    decl: decl.clone(),
                    indices: idx,
                    derivs: dv,
                    conj: *conj,
                },
                sign,
            )
        }
        Factor::Metric(a, b) => {
            let (x, y) = if a <= b {
                (a.clone(), b.clone())
            } else {
                (b.clone(), a.clone())
            };
            (Factor::Metric(x, y), 1)
        }
        Factor::Sandwich(s) => {
            let mut left = s.left.clone();
            let mut right = s.right.clone();
            left.derivs.sort();
            right.derivs.sort();
            (
                Factor::Sandwich(Sandwich {
                    left,
                    gamma: s.gamma.clone(),
                    right,
                }),
                1,
            )
        }
        _ => (fac.clone(), 1),
    }
}

fn merge_equal_factors(mut factors: FactorList) -> FactorList {
    factors.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut out: FactorList = Vec::with_capacity(factors.len());
    for (f, k) in factors {
        if let Some(last) = out.last_mut() {
            if last.0 == f {
                last.1 += k;
                continue;
            }
        }
        out.push((f, k));
    }
    out.retain(|(_, k)| *k != 0);
    out
}

/// Fully normalize one monomial; `Ok(None)` means it canonicalizes to zero.
fn normalize_monomial(m: Monomial) -> Result<Option<Monomial>, ExprError> {
    if m.coeff_is_zero() {
        return Ok(None);
    }
    let factors = merge_equal_factors(m.factors);
    let factors = group_spinors(factors)?;
    check_discipline(&factors)?;
    let mut coeff = (m.re, m.im);
    let factors = match contract_metrics(factors, &mut coeff) {
        Some(f) => f,
        None => return Ok(None),
    };

    // Collect dummy names: non-concrete names occurring twice.
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for_each_index(&factors, |i| {
        if !i.is_concrete() {
            *counts.entry(i.name.clone()).or_insert(0) += 1;
        }
    });
    let dummies: Vec<String> = counts
        .iter()
        .filter(|(_, c)| **c == 2)
        .map(|(n, _)| n.clone())
        .collect();

    if dummies.len() > MAX_DUMMIES {
        return Err(ExprError::TooManyDummyIndices {
            count: dummies.len(),
            max: MAX_DUMMIES,
        });
    }

    let mut best: Option<(FactorList, i8)> = None;
    let mut seen: HashMap<FactorList, i8> = HashMap::new();
    let k = dummies.len();
    let perms: Vec<Vec<usize>> = if k == 0 {
        vec![vec![]]
    } else {
        (0..k).permutations(k).collect()
    };
    for perm in perms {
        for mask in 0..(1u32 << k) {
            let renamed = map_indices(&factors, &|i: &Index| {
                if let Some(j) = dummies.iter().position(|d| *d == i.name) {
                    let name = format!("{}{}", DUMMY_PREFIX, perm.get(j).copied().unwrap_or(0) + 1);
                    let variance = if mask & (1 << j) != 0 {
                        i.variance.flip()
                    } else {
                        i.variance
                    };
                    Index { name, variance }
                } else {
                    i.clone()
                }
            });
            let mut sign = 1i8;
            let mut cand: FactorList = renamed
                .iter()
                .map(|(f, n)| {
                    let (nf, s) = normalize_factor(f);
                    if n % 2 != 0 {
                        sign *= s;
                    }
                    (nf, *n)
                })
                .collect();
            cand.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)));
            if let Some(prev) = seen.get(&cand) {
                if *prev != sign {
                    return Ok(None); // maps onto its own negative: zero
                }
            } else {
                seen.insert(cand.clone(), sign);
            }
            match &best {
                Some((b, _)) if *b <= cand => {}
                _ => best = Some((cand, sign)),
            }
        }
    }
    let (factors, sign) = best.expect("at least the identity labeling exists");
    let (mut re, mut im) = coeff;
    if sign < 0 {
        re = -re;
        im = -im;
    }
    Ok(Some(Monomial { re, im, factors }))
}

/// Canonical monomials of an expression, collected and deterministically
/// ordered. This is the working representation behind `canonicalize`.
pub(crate) fn canonical_monomials(e: &Expr) -> Result<Vec<Monomial>, ExprError> {
    let raw = expand(e)?;
    let mut collected: BTreeMap<FactorList, (Rat, Rat)> = BTreeMap::new();
    for m in raw {
        if let Some(n) = normalize_monomial(m)? {
            let entry = collected
                .entry(n.factors)
                .or_insert((Rat::zero(), Rat::zero()));
            entry.0 += n.re;
            entry.1 += n.im;
        }
    }
    Ok(collected
        .into_iter()
        .filter(|(_, (re, im))| !(re.is_zero() && im.is_zero()))
        .map(|(factors, (re, im))| Monomial { re, im, factors })
        .collect())
}

/// Coefficient `re + im*i` as an expression.
pub(crate) fn coeff_expr(re: &Rat, im: &Rat) -> Expr {
    if im.is_zero() {
        Expr::Rational(re.clone())
    } else if re.is_zero() {
        Expr::product(vec![Expr::Rational(im.clone()), Expr::I])
    } else {
        Expr::sum(vec![
            Expr::Rational(re.clone()),
            Expr::product(vec![Expr::Rational(im.clone()), Expr::I]),
        ])
    }
}

pub(crate) fn factor_to_expr(f: &Factor) -> Expr {
    match f {
        Factor::Sandwich(s) => Expr::Sandwich(Box::new(s.clone())),
        Factor::Gamma(i) => Expr::Gamma(i.clone()),
        Factor::Field {
            decl,
            indices,
            derivs,
            conj,
        } => {
            let e = Expr::Field {
                decl: decl.clone(),
                indices: indices.clone(),
                derivs: derivs.clone(),
            };
            if *conj {
                Expr::Conjugate(Box::new(e))
            } else {
                e
            }
        }
        Factor::Metric(a, b) => Expr::Metric(a.clone(), b.clone()),
        Factor::Const(c) => Expr::Const(c.clone()),
    }
}

pub(crate) fn monomial_part_to_expr(coeff: &Rat, imag: bool, factors: &FactorList) -> Expr {
    let mut parts: Vec<Expr> = Vec::new();
    if coeff != &Rat::one() || (factors.is_empty() && !imag) {
        parts.push(Expr::Rational(coeff.clone()));
    }
    if imag {
        parts.push(Expr::I);
    }
    for (f, k) in factors {
        let fe = factor_to_expr(f);
        parts.push(if *k == 1 { fe } else { Expr::power(fe, *k) });
    }
    Expr::product(parts)
}

pub(crate) fn monomials_to_expr(monomials: &[Monomial]) -> Expr {
    let mut terms: Vec<Expr> = Vec::new();
    for m in monomials {
        if !m.re.is_zero() {
            terms.push(monomial_part_to_expr(&m.re, false, &m.factors));
        }
        if !m.im.is_zero() {
            terms.push(monomial_part_to_expr(&m.im, true, &m.factors));
        }
    }
    Expr::sum(terms)
}

/// Rewrite `e` as a canonical flattened sum of monomials.
pub fn canonicalize(e: &Expr) -> Result<Expr, ExprError> {
    Ok(monomials_to_expr(&canonical_monomials(e)?))
}

/// True iff the expression canonicalizes to zero.
pub fn is_zero(e: &Expr) -> Result<bool, ExprError> {
    Ok(canonical_monomials(e)?.is_empty())
}

/// Canonical equality of two expressions.
pub fn equivalent(a: &Expr, b: &Expr) -> Result<bool, ExprError> {
    Ok(canonicalize(a)? == canonicalize(b)?)
}

/// Free (unpaired, non-concrete) index names of an expression, unioned over
/// its canonical monomials.
pub fn free_indices(e: &Expr) -> Result<Vec<Index>, ExprError> {
    let ms = canonical_monomials(e)?;
    let mut out: Vec<Index> = Vec::new();
    for m in &ms {
        let mut counts: BTreeMap<String, (usize, Option<Index>)> = BTreeMap::new();
        for_each_index(&m.factors, |i| {
            if i.is_concrete() {
                return;
            }
            let e = counts.entry(i.name.clone()).or_insert((0, None));
            e.0 += 1;
            e.1 = Some(i.clone());
        });
        for (_, (c, idx)) in counts {
            if c == 1 {
                let idx = idx.unwrap();
                if !out.contains(&idx) {
                    out.push(idx);
                }
            }
        }
    }
    out.sort();
    Ok(out)
}
