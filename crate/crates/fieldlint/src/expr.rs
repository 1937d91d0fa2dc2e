//! Core expression tree for tensor expressions in natural units.
//!
//! Expressions are immutable values: every rewrite produces a new tree, so
//! they are safe to share and send across threads. The metric signature is
//! fixed to (+,-,-,-) and the summation convention holds for a pair of one
//! upper and one lower index.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use num::BigRational;

/// Exact rational scalar used throughout the symbolic layer.
pub type Rat = BigRational;

pub fn rat(n: i64, d: i64) -> Rat {
    Rat::new(n.into(), d.into())
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Variance {
    Upper,
    Lower,
}

impl Variance {
    pub fn flip(self) -> Self {
        match self {
            Variance::Upper => Variance::Lower,
            Variance::Lower => Variance::Upper,
        }
    }
}

/// A Lorentz index: a name plus its variance.
///
/// Names `"0"`..`"3"` are concrete component labels: they never participate
/// in the summation convention and are exempt from the index discipline.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Index {
    pub name: String,
    pub variance: Variance,
}

impl Index {
    pub fn up(name: &str) -> Self {
        Index {
            name: name.to_string(),
            variance: Variance::Upper,
        }
    }

    pub fn down(name: &str) -> Self {
        Index {
            name: name.to_string(),
            variance: Variance::Lower,
        }
    }

    pub fn component(c: usize, variance: Variance) -> Self {
        Index {
            name: c.to_string(),
            variance,
        }
    }

    /// Concrete component labels "0".."3".
    pub fn is_concrete(&self) -> bool {
        matches!(self.name.as_str(), "0" | "1" | "2" | "3")
    }

    pub fn flipped(&self) -> Self {
        Index {
            name: self.name.clone(),
            variance: self.variance.flip(),
        }
    }
}

impl fmt::Display for Index {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.variance {
            Variance::Upper => write!(f, "^{{{}}}", self.name),
            Variance::Lower => write!(f, "_{{{}}}", self.name),
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Parity {
    Symmetric,
    Antisymmetric,
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum FieldKind {
    Scalar,
    Vector,
    Spinor,
    /// Rank-2 tensor with a symmetry tag on its index pair (0,1).
    Tensor2 {
        parity: Parity,
    },
}

impl FieldKind {
    pub fn arity(&self) -> usize {
        match self {
            FieldKind::Scalar | FieldKind::Spinor => 0,
            FieldKind::Vector => 1,
            FieldKind::Tensor2 { .. } => 2,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Reality {
    Real,
    Complex,
}

/// A declared field symbol. Expression nodes hold `Arc<FieldDecl>` so that
/// occurrences stay cheap to clone and compare by declaration content.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct FieldDecl {
    pub name: String,
    pub kind: FieldKind,
    pub reality: Reality,
    pub dimension: Option<Rat>,
    /// For a Dirac adjoint like `psibar`, the name of the base spinor.
    pub adjoint_of: Option<String>,
}

pub type FieldRef = Arc<FieldDecl>;

impl FieldDecl {
    pub fn scalar(name: &str, reality: Reality) -> FieldRef {
        Arc::new(FieldDecl {
            name: name.to_string(),
            kind: FieldKind::Scalar,
            reality,
            dimension: None,
            adjoint_of: None,
        })
    }

    pub fn vector(name: &str, reality: Reality) -> FieldRef {
        Arc::new(FieldDecl {
            name: name.to_string(),
            kind: FieldKind::Vector,
            reality,
            dimension: None,
            adjoint_of: None,
        })
    }

    pub fn spinor(name: &str) -> FieldRef {
        Arc::new(FieldDecl {
            name: name.to_string(),
            kind: FieldKind::Spinor,
            reality: Reality::Complex,
            dimension: None,
            adjoint_of: None,
        })
    }

    /// The Dirac adjoint declaration paired with a base spinor.
    pub fn adjoint(base: &FieldDecl) -> FieldRef {
        Arc::new(FieldDecl {
            name: format!("{}bar", base.name),
            kind: FieldKind::Spinor,
            reality: Reality::Complex,
            dimension: base.dimension.clone(),
            adjoint_of: Some(base.name.clone()),
        })
    }

    pub fn tensor2(name: &str, parity: Parity) -> FieldRef {
        Arc::new(FieldDecl {
            name: name.to_string(),
            kind: FieldKind::Tensor2 { parity },
            reality: Reality::Real,
            dimension: None,
            adjoint_of: None,
        })
    }

    pub fn with_dimension(self: &FieldRef, dim: Rat) -> FieldRef {
        let mut d = (**self).clone();
        d.dimension = Some(dim);
        Arc::new(d)
    }

    pub fn is_adjoint_spinor(&self) -> bool {
        self.kind == FieldKind::Spinor && self.adjoint_of.is_some()
    }
}

/// One side of a spinor bilinear: a spinor symbol with partial derivatives.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct SpinorFactor {
    pub decl: FieldRef,
    pub derivs: Vec<Index>,
}

/// A formal spinor bilinear `left * gamma? * right`, carried without any
/// component expansion. `gamma: None` stands for the identity matrix.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Sandwich {
    pub left: SpinorFactor,
    pub gamma: Option<Index>,
    pub right: SpinorFactor,
}

/// Immutable tensor-expression tree.
///
/// `Field` carries the occurrence's own indices plus a list of partial
/// derivative indices; derivative lists are order-insensitive (partial
/// derivatives commute) and are sorted by canonicalization.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum Expr {
    Sum(Vec<Expr>),
    Product(Vec<Expr>),
    Power(Box<Expr>, i32),
    Rational(Rat),
    /// The imaginary unit.
    I,
    /// A formal constant symbol (m, e, g, pi, ...), always real.
    Const(String),
    Metric(Index, Index),
    /// A formal gamma matrix; no Clifford algebra beyond linearity.
    Gamma(Index),
    Field {
        decl: FieldRef,
        indices: Vec<Index>,
        derivs: Vec<Index>,
    },
    Conjugate(Box<Expr>),
    Sandwich(Box<Sandwich>),
}

impl Expr {
    pub fn int(n: i64) -> Expr {
        Expr::Rational(rat(n, 1))
    }

    pub fn ratio(n: i64, d: i64) -> Expr {
        Expr::Rational(rat(n, d))
    }

    pub fn zero() -> Expr {
        Expr::int(0)
    }

    pub fn constant(name: &str) -> Expr {
        Expr::Const(name.to_string())
    }

    pub fn sum(terms: Vec<Expr>) -> Expr {
        match terms.len() {
            0 => Expr::zero(),
            1 => terms.into_iter().next().unwrap(),
            _ => Expr::Sum(terms),
        }
    }

    pub fn product(factors: Vec<Expr>) -> Expr {
        match factors.len() {
            0 => Expr::int(1),
            1 => factors.into_iter().next().unwrap(),
            _ => Expr::Product(factors),
        }
    }

    pub fn power(base: Expr, exp: i32) -> Expr {
        Expr::Power(Box::new(base), exp)
    }

    #[allow(clippy::should_implement_trait)] // value-consuming helper, mirrors `conj`
    pub fn neg(self) -> Expr {
        Expr::product(vec![Expr::int(-1), self])
    }

    pub fn minus(self, other: Expr) -> Expr {
        Expr::sum(vec![self, other.neg()])
    }

    pub fn conj(self) -> Expr {
        Expr::Conjugate(Box::new(self))
    }

    /// A scalar field occurrence with no derivatives.
    pub fn field(decl: &FieldRef) -> Expr {
        Expr::Field {
            decl: decl.clone(),
            indices: vec![],
            derivs: vec![],
        }
    }

    /// A scalar field occurrence with the given derivative indices.
    pub fn field_d(decl: &FieldRef, derivs: Vec<Index>) -> Expr {
        Expr::Field {
            decl: decl.clone(),
            indices: vec![],
            derivs,
        }
    }

    /// An indexed field occurrence (vector or rank-2 tensor).
    pub fn field_idx(decl: &FieldRef, indices: Vec<Index>) -> Expr {
        Expr::Field {
            decl: decl.clone(),
            indices,
            derivs: vec![],
        }
    }

    pub fn field_full(decl: &FieldRef, indices: Vec<Index>, derivs: Vec<Index>) -> Expr {
        Expr::Field {
            decl: decl.clone(),
            indices,
            derivs,
        }
    }

    pub fn metric(a: Index, b: Index) -> Expr {
        Expr::Metric(a, b)
    }

    pub fn is_zero_literal(&self) -> bool {
        matches!(self, Expr::Rational(r) if r == &Rat::from_integer(0.into()))
    }

    /// All field declarations referenced anywhere in the expression.
    pub fn field_decls(&self) -> Vec<FieldRef> {
        let mut acc: Vec<FieldRef> = Vec::new();
        let mut seen: BTreeSet<String> = BTreeSet::new();
        self.walk_decls(&mut |d| {
            if seen.insert(d.name.clone()) {
                acc.push(d.clone());
            }
        });
        acc
    }

    fn walk_decls(&self, f: &mut impl FnMut(&FieldRef)) {
        match self {
            Expr::Sum(v) | Expr::Product(v) => v.iter().for_each(|e| e.walk_decls(f)),
            Expr::Power(b, _) => b.walk_decls(f),
            Expr::Conjugate(b) => b.walk_decls(f),
            Expr::Field { decl, .. } => f(decl),
            Expr::Sandwich(s) => {
                f(&s.left.decl);
                f(&s.right.decl);
            }
            _ => {}
        }
    }

    /// All constant symbols referenced anywhere in the expression.
    pub fn const_names(&self) -> BTreeSet<String> {
        let mut acc = BTreeSet::new();
        self.walk_consts(&mut acc);
        acc
    }

    fn walk_consts(&self, acc: &mut BTreeSet<String>) {
        match self {
            Expr::Sum(v) | Expr::Product(v) => v.iter().for_each(|e| e.walk_consts(acc)),
            Expr::Power(b, _) => b.walk_consts(acc),
            Expr::Conjugate(b) => b.walk_consts(acc),
            Expr::Const(c) => {
                acc.insert(c.clone());
            }
            _ => {}
        }
    }
}

#[derive(thiserror::Error, Clone, Debug, PartialEq, Eq)]
pub enum ExprError {
    #[error("index discipline violated: {0}")]
    IndexDiscipline(String),
    #[error("negative power of a non-monomial expression is not supported")]
    NegativePowerOfSum,
    #[error("conjugation of a bare spinor quantity is not supported: {0}")]
    UnsupportedConjugate(String),
    #[error("unsupported spinor product: {0}")]
    UnsupportedSpinorProduct(String),
    #[error("monomial has {count} dummy index pairs, more than the supported {max}")]
    TooManyDummyIndices { count: usize, max: usize },
}
