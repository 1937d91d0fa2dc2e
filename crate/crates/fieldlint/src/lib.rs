//! fieldlint: symbolic and numeric consistency checks for field-theory
//! Lagrangian densities in natural units (hbar = c = 1, metric +,-,-,-).
//!
//! The library parses a small index-notation DSL for field declarations and
//! Lagrangian densities, derives field equations by Euler-Lagrange variation,
//! audits dimensions against the scalar/[L^-4] requirements, checks gauge
//! invariance and current conservation, builds stress-energy tensors, and
//! evaluates expressions numerically on closed-form field configurations.
//!
//! See the `examples/` directory for one runnable example per capability and
//! the `scenario` module for the built-in regression catalog.

pub mod calculus;
pub mod canon;
pub mod cli;
pub mod dimension;
pub mod dsl;
pub mod expr;
pub mod numeric;
pub mod report;
pub mod scenario;
pub mod variation;

pub use calculus::{differentiate, poly_degree, substitute, Rule};
pub use canon::{canonicalize, equivalent, free_indices, is_zero};
pub use dimension::{
    check_requirements, check_scalar, dimension_of, infer_dimensions, DimError, Dimension,
    DimensionTable, ScalarVerdict,
};
pub use dsl::{
    parse, parse_expr, parse_expr_in, render, Assumption, ConstDecl, LagrangianModel, ParseError,
};
pub use expr::{
    rat, Expr, ExprError, FieldDecl, FieldKind, FieldRef, Index, Parity, Rat, Reality, Sandwich,
    SpinorFactor, Variance,
};
pub use report::{Check, Report, Verdict};
pub use variation::{
    charge_degree_audit, derive_em_equation, divergence, euler_lagrange, gauge_check,
    hermiticity_check, normalize_sign, on_shell_reduce, stress_energy, ChargeAudit, FieldEquation,
    GaugeVerdict, HermiticityVerdict, VarError, VariationTarget,
};
