//! Numeric evaluation of canonical expressions on closed-form field
//! configurations: plane waves, Yukawa fields and constant potentials.
//!
//! Derivatives of the built-in configurations are exact closed forms; the
//! finite-difference routine exists as a cross-check of the symbolic
//! derivative, not as a primary evaluation path. All numerics are double
//! precision with the metric (+,-,-,-).

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num::complex::Complex64;
use num::ToPrimitive;

use crate::calculus::{differentiate, map_expr_indices};
use crate::canon::{canonical_monomials, Factor};
use crate::dsl::LagrangianModel;
use crate::expr::{Expr, ExprError, FieldKind, Index, Variance};
use crate::variation::{stress_energy, VarError};

pub const METRIC_DIAG: [f64; 4] = [1.0, -1.0, -1.0, -1.0];

/// Default numeric equality tolerance.
pub const EQ_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpacetimePoint {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl SpacetimePoint {
    pub fn new(t: f64, x: f64, y: f64, z: f64) -> Self {
        SpacetimePoint { t, x, y, z }
    }

    pub fn coord(&self, c: usize) -> f64 {
        match c {
            0 => self.t,
            1 => self.x,
            2 => self.y,
            3 => self.z,
            _ => panic!("coordinate index out of range"),
        }
    }

    pub fn shifted(&self, c: usize, h: f64) -> Self {
        let mut p = *self;
        match c {
            0 => p.t += h,
            1 => p.x += h,
            2 => p.y += h,
            _ => p.z += h,
        }
        p
    }

    pub fn r(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }
}

/// Contravariant components (v^0, v^1, v^2, v^3).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FourVector(pub [f64; 4]);

impl FourVector {
    pub fn new(v0: f64, v1: f64, v2: f64, v3: f64) -> Self {
        FourVector([v0, v1, v2, v3])
    }

    /// Minkowski product v.w = v^0 w^0 - v.w (spatial).
    pub fn dot(&self, other: &FourVector) -> f64 {
        (0..4)
            .map(|i| METRIC_DIAG[i] * self.0[i] * other.0[i])
            .sum()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.dot(self)
    }
}

impl std::ops::Index<usize> for FourVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

#[derive(thiserror::Error, Debug, Clone, PartialEq)]
pub enum EvalError {
    #[error("singular field configuration: {0}")]
    Singularity(String),
    #[error("no assignment for symbol '{0}'")]
    Unassigned(String),
    #[error("numeric evaluation does not support {0}")]
    UnsupportedNumeric(String),
    #[error("expression has non-component free index '{0}'; fix components first")]
    FreeIndex(String),
    #[error("assignment kind does not fit field '{0}'")]
    KindMismatch(String),
    #[error("derivatives of order {0} are not implemented for this configuration")]
    DerivativeOrder(usize),
    #[error("velocity is not normalized: v.v = {0}")]
    NonNormalizedVelocity(f64),
    #[error("domain error: {0}")]
    Domain(String),
    #[error(transparent)]
    Expr(#[from] ExprError),
}

/// Closed-form field assignment.
#[derive(Clone, Debug, PartialEq)]
pub enum FieldAssignment {
    /// Scalar wave e^{i(p.x - E t)}.
    PlaneWave { energy: f64, momentum: [f64; 3] },
    /// Static scalar g e^{-m r} / (4 pi r), valid at r > 0.
    Yukawa { coupling: f64, mass: f64 },
    /// Static 4-potential (V, 0, 0, 0).
    ConstantPotential { v: f64 },
}

impl FieldAssignment {
    fn fits(&self, kind: &FieldKind) -> bool {
        match self {
            FieldAssignment::PlaneWave { .. } | FieldAssignment::Yukawa { .. } => {
                *kind == FieldKind::Scalar
            }
            FieldAssignment::ConstantPotential { .. } => *kind == FieldKind::Vector,
        }
    }
}

/// Immutable numeric configuration: field assignments plus constant values.
/// `pi` is always bound.
#[derive(Clone, Debug, Default)]
pub struct FieldConfig {
    assignments: BTreeMap<String, FieldAssignment>,
    constants: BTreeMap<String, f64>,
}

impl FieldConfig {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn assign(mut self, field: &str, a: FieldAssignment) -> Self {
        self.assignments.insert(field.to_string(), a);
        self
    }

    pub fn constant(mut self, name: &str, value: f64) -> Self {
        self.constants.insert(name.to_string(), value);
        self
    }

    pub fn assignment(&self, field: &str) -> Option<&FieldAssignment> {
        self.assignments.get(field)
    }

    pub fn constant_value(&self, name: &str) -> Option<f64> {
        if name == "pi" {
            return Some(PI);
        }
        self.constants.get(name).copied()
    }
}

fn yukawa_value(coupling: f64, mass: f64, r: f64) -> f64 {
    coupling * (-mass * r).exp() / (4.0 * PI * r)
}

/// Closed-form coordinate derivatives of the assignments, lower indices.
fn assignment_derivative(
    a: &FieldAssignment,
    derivs: &[usize],
    x: &SpacetimePoint,
    component: Option<usize>,
) -> Result<Complex64, EvalError> {
    match a {
        FieldAssignment::PlaneWave { energy, momentum } => {
            if component.is_some() {
                return Err(EvalError::KindMismatch("plane wave is scalar".into()));
            }
            let phase = momentum[0] * x.x + momentum[1] * x.y + momentum[2] * x.z - energy * x.t;
            let mut v = Complex64::new(0.0, phase).exp();
            for &c in derivs {
                let k = if c == 0 { -energy } else { momentum[c - 1] };
                v *= Complex64::new(0.0, k);
            }
            Ok(v)
        }
        FieldAssignment::Yukawa { coupling, mass } => {
            if component.is_some() {
                return Err(EvalError::KindMismatch("Yukawa field is scalar".into()));
            }
            let r = x.r();
            if r <= 0.0 {
                return Err(EvalError::Singularity("Yukawa field at r = 0".into()));
            }
            if derivs.contains(&0) {
                return Ok(Complex64::new(0.0, 0.0)); // static
            }
            let phi = yukawa_value(*coupling, *mass, r);
            let xi = |c: usize| x.coord(c);
            match derivs {
                [] => Ok(Complex64::new(phi, 0.0)),
                [i] => {
                    let dphi_dr = -phi * (mass + 1.0 / r);
                    Ok(Complex64::new(dphi_dr * xi(*i) / r, 0.0))
                }
                [i, j] => {
                    let dphi_dr = -phi * (mass + 1.0 / r);
                    let d2 = phi * (mass * mass + 2.0 * mass / r + 2.0 / (r * r));
                    let delta = if i == j { 1.0 } else { 0.0 };
                    let v = d2 * xi(*i) * xi(*j) / (r * r)
                        + dphi_dr * (delta / r - xi(*i) * xi(*j) / (r * r * r));
                    Ok(Complex64::new(v, 0.0))
                }
                more => Err(EvalError::DerivativeOrder(more.len())),
            }
        }
        FieldAssignment::ConstantPotential { v } => {
            let Some(c) = component else {
                return Err(EvalError::KindMismatch(
                    "constant potential is a 4-vector".into(),
                ));
            };
            if !derivs.is_empty() {
                return Ok(Complex64::new(0.0, 0.0));
            }
            Ok(Complex64::new(if c == 0 { *v } else { 0.0 }, 0.0))
        }
    }
}

fn resolve(idx: &Index, comp: &BTreeMap<String, usize>) -> Result<usize, EvalError> {
    if idx.is_concrete() {
        Ok(idx.name.parse().expect("concrete index is a digit"))
    } else {
        comp.get(&idx.name)
            .copied()
            .ok_or_else(|| EvalError::FreeIndex(idx.name.clone()))
    }
}

fn factor_value(
    f: &Factor,
    k: i32,
    cfg: &FieldConfig,
    x: &SpacetimePoint,
    comp: &BTreeMap<String, usize>,
) -> Result<Complex64, EvalError> {
    let base: Complex64 = match f {
        Factor::Const(c) => {
            let v = cfg
                .constant_value(c)
                .ok_or_else(|| EvalError::Unassigned(c.clone()))?;
            Complex64::new(v, 0.0)
        }
        Factor::Metric(a, b) => {
            let ca = resolve(a, comp)?;
            let cb = resolve(b, comp)?;
            let v = if a.variance == b.variance {
                if ca == cb {
                    METRIC_DIAG[ca]
                } else {
                    0.0
                }
            } else if ca == cb {
                1.0
            } else {
                0.0
            };
            Complex64::new(v, 0.0)
        }
        Factor::Gamma(_) => return Err(EvalError::UnsupportedNumeric("gamma matrices".into())),
        Factor::Sandwich(_) => {
            return Err(EvalError::UnsupportedNumeric("spinor bilinears".into()))
        }
        Factor::Field {
            decl,
            indices,
            derivs,
            conj,
        } => {
            if decl.kind == FieldKind::Spinor {
                return Err(EvalError::UnsupportedNumeric(format!(
                    "spinor field '{}'",
                    decl.name
                )));
            }
            let a = cfg
                .assignment(&decl.name)
                .ok_or_else(|| EvalError::Unassigned(decl.name.clone()))?;
            if !a.fits(&decl.kind) {
                return Err(EvalError::KindMismatch(decl.name.clone()));
            }
            let mut sign = 1.0;
            let component = match decl.kind {
                FieldKind::Vector => {
                    let c = resolve(&indices[0], comp)?;
                    if indices[0].variance == Variance::Lower {
                        sign *= METRIC_DIAG[c];
                    }
                    Some(c)
                }
                _ => None,
            };
            let mut ds = Vec::with_capacity(derivs.len());
            for d in derivs {
                let c = resolve(d, comp)?;
                if d.variance == Variance::Upper {
                    sign *= METRIC_DIAG[c];
                }
                ds.push(c);
            }
            let mut v = assignment_derivative(a, &ds, x, component)? * sign;
            if *conj {
                v = v.conj();
            }
            v
        }
    };
    Ok(base.powi(k))
}

fn rat_to_f64(r: &crate::expr::Rat) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Evaluate a canonical expression at a spacetime point. Free indices must
/// be concrete components ("0".."3"); dummy pairs are summed over 0..3.
pub fn eval(e: &Expr, cfg: &FieldConfig, x: &SpacetimePoint) -> Result<Complex64, EvalError> {
    let ms = canonical_monomials(e)?;
    let mut total = Complex64::new(0.0, 0.0);
    for m in &ms {
        // Names occurring twice are dummies; once is a user error here.
        let mut counts: BTreeMap<String, usize> = BTreeMap::new();
        crate::canon::for_each_index(&m.factors, |i| {
            if !i.is_concrete() {
                *counts.entry(i.name.clone()).or_insert(0) += 1;
            }
        });
        for (name, c) in &counts {
            if *c == 1 {
                return Err(EvalError::FreeIndex(name.clone()));
            }
        }
        let dummies: Vec<String> = counts.keys().cloned().collect();
        let coeff = Complex64::new(rat_to_f64(&m.re), rat_to_f64(&m.im));

        let mut assignment: BTreeMap<String, usize> = BTreeMap::new();
        // Iterate over 4^k component assignments without recursion.
        let k = dummies.len();
        if k == 0 {
            let mut v = coeff;
            for (f, kf) in &m.factors {
                v *= factor_value(f, *kf, cfg, x, &assignment)?;
            }
            total += v;
            continue;
        }
        let mut counter = vec![0usize; k];
        loop {
            assignment.clear();
            for (i, d) in dummies.iter().enumerate() {
                assignment.insert(d.clone(), counter[i]);
            }
            let mut v = coeff;
            for (f, kf) in &m.factors {
                v *= factor_value(f, *kf, cfg, x, &assignment)?;
                if v == Complex64::new(0.0, 0.0) {
                    break;
                }
            }
            total += v;
            // Advance the odometer.
            let mut i = 0;
            loop {
                if i == k {
                    break;
                }
                counter[i] += 1;
                if counter[i] < 4 {
                    break;
                }
                counter[i] = 0;
                i += 1;
            }
            if i == k {
                break;
            }
        }
    }
    Ok(total)
}

/// Rename a free index to a concrete component label.
pub fn fix_index(e: &Expr, name: &str, component: usize) -> Expr {
    map_expr_indices(e, &|i: &Index| {
        if i.name == name {
            Index {
                name: component.to_string(),
                variance: i.variance,
            }
        } else {
            i.clone()
        }
    })
}

// ---------------------------------------------------------------------------
// Scenario-grade operations
// ---------------------------------------------------------------------------

/// Configuration for a motionless charge in a constant potential: the wave
/// e^{-iEt} with total energy E = m + eV.
pub fn electrostatic_config(mass: f64, charge: f64, v: f64) -> FieldConfig {
    let energy = mass + charge * v;
    FieldConfig::new()
        .assign(
            "phi",
            FieldAssignment::PlaneWave {
                energy,
                momentum: [0.0, 0.0, 0.0],
            },
        )
        .assign("A", FieldAssignment::ConstantPotential { v })
        .constant("m", mass)
        .constant("e", charge)
}

/// Apply the interacting wave operator (box + 2ieA.d + m^2) to the
/// configured wave and return residual/phi at a generic point.
pub fn kg_em_residual(cfg: &FieldConfig, mass: f64, charge: f64) -> Result<Complex64, EvalError> {
    let Some(FieldAssignment::PlaneWave { .. }) = cfg.assignment("phi") else {
        return Err(EvalError::Unassigned("phi (plane wave)".into()));
    };
    let Some(FieldAssignment::ConstantPotential { .. }) = cfg.assignment("A") else {
        return Err(EvalError::Unassigned("A (constant potential)".into()));
    };
    let phi = crate::expr::FieldDecl::scalar("phi", crate::expr::Reality::Complex);
    let a = crate::expr::FieldDecl::vector("A", crate::expr::Reality::Real);
    let op = Expr::sum(vec![
        Expr::field_d(&phi, vec![Index::down("a"), Index::up("a")]),
        Expr::product(vec![
            Expr::int(2),
            Expr::I,
            Expr::constant("e"),
            Expr::field_idx(&a, vec![Index::up("b")]),
            Expr::field_d(&phi, vec![Index::down("b")]),
        ]),
        Expr::product(vec![Expr::power(Expr::constant("m"), 2), Expr::field(&phi)]),
    ]);
    let cfg = cfg.clone().constant("m", mass).constant("e", charge);
    let x = SpacetimePoint::new(0.37, 0.11, 0.07, -0.19);
    let num = eval(&op, &cfg, &x)?;
    let den = eval(&Expr::field(&phi), &cfg, &x)?;
    Ok(num / den)
}

/// Integration box for the action comparison.
#[derive(Clone, Copy, Debug)]
pub struct BoxSpec {
    pub lx: f64,
    pub ly: f64,
    pub lz: f64,
    pub duration: f64,
}

impl BoxSpec {
    pub fn volume(&self) -> f64 {
        self.lx * self.ly * self.lz
    }
}

/// dS/dt of the configured plane wave over the box. With `normalize` the
/// result is divided by the wave-normalization integral 2E |phi|^2 Vol and
/// becomes (E^2 - p^2 - m^2)/(2E), independent of the box.
pub fn action_box(
    model: &LagrangianModel,
    cfg: &FieldConfig,
    box_: &BoxSpec,
    normalize: bool,
) -> Result<f64, EvalError> {
    let mut energy = None;
    for f in &model.fields {
        if let Some(FieldAssignment::PlaneWave { energy: e, .. }) = cfg.assignment(&f.name) {
            energy = Some(*e);
        }
    }
    let Some(energy) = energy else {
        return Err(EvalError::Unassigned("a plane-wave field".into()));
    };
    if energy <= 0.0 {
        return Err(EvalError::Domain(format!(
            "plane-wave energy must be positive, got {energy}"
        )));
    }
    let x = SpacetimePoint::new(
        0.3 * box_.duration,
        0.25 * box_.lx,
        -0.2 * box_.ly,
        0.4 * box_.lz,
    );
    let lval = eval(&model.density, cfg, &x)?;
    if lval.im.abs() > 1e-9 {
        return Err(EvalError::Domain(format!(
            "density is not real on this configuration: {lval}"
        )));
    }
    let rate = lval.re * box_.volume();
    if normalize {
        let norm = 2.0 * energy * box_.volume();
        Ok(rate / norm)
    } else {
        Ok(rate)
    }
}

/// Classical comparator -m sqrt(1 - v^2).
pub fn classical_action_rate(mass: f64, speed: f64) -> Result<f64, EvalError> {
    if !(0.0..1.0).contains(&speed.abs()) && speed.abs() >= 1.0 {
        return Err(EvalError::Domain(format!("|v| must be < 1, got {speed}")));
    }
    Ok(-mass * (1.0 - speed * speed).sqrt())
}

/// Energy density T^00 of the static Yukawa field, evaluated through the
/// symbolic stress-energy tensor of the free scalar density.
pub fn yukawa_t00(coupling: f64, mass: f64, r: f64) -> Result<f64, EvalError> {
    if r <= 0.0 {
        return Err(EvalError::Domain(format!("r must be positive, got {r}")));
    }
    let model = free_scalar_model();
    let t = stress_energy(&model, "phi").map_err(|e| match e {
        VarError::Expr(inner) => EvalError::Expr(inner),
        other => EvalError::Domain(other.to_string()),
    })?;
    let free = crate::canon::free_indices(&t)?;
    debug_assert_eq!(free.len(), 2);
    let mut t00 = t;
    for idx in &free {
        t00 = fix_index(&t00, &idx.name, 0);
    }
    let cfg = FieldConfig::new()
        .assign("phi", FieldAssignment::Yukawa { coupling, mass })
        .constant("m", mass);
    let x = SpacetimePoint::new(0.0, 0.0, 0.0, r);
    let v = eval(&t00, &cfg, &x)?;
    Ok(v.re)
}

/// Closed-form energy density (1/(2 r^2) + m/r + m^2) phi^2 of the Yukawa
/// field; the independent reference for the symbolic route.
pub fn yukawa_t00_closed(coupling: f64, mass: f64, r: f64) -> Result<f64, EvalError> {
    if r <= 0.0 {
        return Err(EvalError::Domain(format!("r must be positive, got {r}")));
    }
    let phi = yukawa_value(coupling, mass, r);
    Ok((0.5 / (r * r) + mass / r + mass * mass) * phi * phi)
}

/// phi(r) of the Yukawa assignment.
pub fn yukawa_field_value(coupling: f64, mass: f64, r: f64) -> Result<f64, EvalError> {
    if r <= 0.0 {
        return Err(EvalError::Domain(format!("r must be positive, got {r}")));
    }
    Ok(yukawa_value(coupling, mass, r))
}

/// d phi / d r of the Yukawa assignment.
pub fn yukawa_radial_derivative(coupling: f64, mass: f64, r: f64) -> Result<f64, EvalError> {
    let phi = yukawa_field_value(coupling, mass, r)?;
    Ok(-phi * (mass + 1.0 / r))
}

fn free_scalar_model() -> LagrangianModel {
    crate::dsl::parse(
        "field phi : real scalar\nconst m dim -1\n\
         L = 1/2 * (d_{mu}(phi) * d_{nu}(phi) * g^{mu nu} - m^2 * phi^2)",
    )
    .expect("built-in free scalar model parses")
}

/// Minkowski product f.v with the velocity normalization v.v = 1 enforced
/// to within 1e-12.
pub fn orthogonality_check(force: &FourVector, velocity: &FourVector) -> Result<f64, EvalError> {
    let n = velocity.norm_sqr();
    if (n - 1.0).abs() > EQ_TOL {
        return Err(EvalError::NonNormalizedVelocity(n));
    }
    Ok(force.dot(velocity))
}

/// Lorentz force density f^mu = F^{mu nu} j_nu for an antisymmetric field
/// matrix F^{mu nu} (contravariant components).
pub fn lorentz_force(f: &[[f64; 4]; 4], j: &FourVector) -> FourVector {
    let mut out = [0.0; 4];
    for (mu, row) in f.iter().enumerate() {
        out[mu] = (0..4).map(|nu| row[nu] * METRIC_DIAG[nu] * j[nu]).sum();
    }
    FourVector(out)
}

/// Compare the symbolic derivative against central finite differences at a
/// point; returns the maximum relative deviation over the four coordinates.
pub fn finite_diff_check(
    e: &Expr,
    cfg: &FieldConfig,
    x: &SpacetimePoint,
    h: f64,
) -> Result<f64, EvalError> {
    if h <= 0.0 {
        return Err(EvalError::Domain("step must be positive".into()));
    }
    let mut worst: f64 = 0.0;
    for c in 0..4 {
        let sym = eval(
            &differentiate(e, &Index::component(c, Variance::Lower)),
            cfg,
            x,
        )?;
        let plus = eval(e, cfg, &x.shifted(c, h))?;
        let minus = eval(e, cfg, &x.shifted(c, -h))?;
        let fd = (plus - minus) / (2.0 * h);
        let scale = sym.norm().max(fd.norm());
        if scale < 1e-12 {
            continue;
        }
        worst = worst.max((fd - sym).norm() / scale);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{FieldDecl, Reality};

    fn plane_cfg(energy: f64, pz: f64) -> FieldConfig {
        FieldConfig::new().assign(
            "phi",
            FieldAssignment::PlaneWave {
                energy,
                momentum: [0.0, 0.0, pz],
            },
        )
    }

    #[test]
    fn plane_wave_has_unit_modulus() {
        let phi = FieldDecl::scalar("phi", Reality::Complex);
        let e = Expr::product(vec![Expr::field(&phi).conj(), Expr::field(&phi)]);
        let cfg = plane_cfg(2.0_f64.sqrt(), 1.0);
        let x = SpacetimePoint::new(0.7, 0.1, -0.4, 0.9);
        let v = eval(&e, &cfg, &x).unwrap();
        assert!((v.re - 1.0).abs() < EQ_TOL);
        assert!(v.im.abs() < EQ_TOL);
    }

    #[test]
    fn probability_density_is_twice_the_energy() {
        // 2 E phi* phi evaluated with E = sqrt(2)
        let phi = FieldDecl::scalar("phi", Reality::Complex);
        let e = Expr::product(vec![
            Expr::int(2),
            Expr::constant("En"),
            Expr::field(&phi).conj(),
            Expr::field(&phi),
        ]);
        let energy = 2.0_f64.sqrt();
        let cfg = plane_cfg(energy, 1.0).constant("En", energy);
        let v = eval(&e, &cfg, &SpacetimePoint::new(0.2, 0.0, 0.0, 0.5)).unwrap();
        assert!((v.re - 2.828427).abs() < 1e-6);
    }

    #[test]
    fn yukawa_spot_value() {
        let v = yukawa_field_value(4.0 * PI, 1.0, 1.0).unwrap();
        assert!((v - 0.3678794).abs() < 1e-7);
    }

    #[test]
    fn yukawa_at_origin_is_singular() {
        let phi = FieldDecl::scalar("phi", Reality::Real);
        let cfg = FieldConfig::new().assign(
            "phi",
            FieldAssignment::Yukawa {
                coupling: 1.0,
                mass: 1.0,
            },
        );
        let err = eval(
            &Expr::field(&phi),
            &cfg,
            &SpacetimePoint::new(0.0, 0.0, 0.0, 0.0),
        );
        assert!(matches!(err, Err(EvalError::Singularity(_))));
    }

    #[test]
    fn unassigned_symbol_is_a_config_error() {
        let phi = FieldDecl::scalar("phi", Reality::Real);
        let cfg = FieldConfig::new();
        let err = eval(
            &Expr::field(&phi),
            &cfg,
            &SpacetimePoint::new(0.0, 0.0, 0.0, 1.0),
        );
        assert!(matches!(err, Err(EvalError::Unassigned(_))));
    }

    #[test]
    fn spinor_content_is_unsupported() {
        let psi = FieldDecl::spinor("psi");
        let bar = FieldDecl::adjoint(&psi);
        let e = Expr::product(vec![Expr::field(&bar), Expr::field(&psi)]);
        let cfg = FieldConfig::new();
        let err = eval(&e, &cfg, &SpacetimePoint::new(0.0, 0.0, 0.0, 1.0));
        assert!(matches!(err, Err(EvalError::UnsupportedNumeric(_))));
    }

    #[test]
    fn electrostatic_residual_is_u_squared() {
        for (m, u) in [(1.0, 0.1), (1.0, 0.0), (2.0, 0.5)] {
            let cfg = electrostatic_config(m, 1.0, u);
            let r = kg_em_residual(&cfg, m, 1.0).unwrap();
            // Independent arithmetic route: -(m+U)^2 + 2U(m+U) + m^2.
            let oracle = -(m + u) * (m + u) + 2.0 * u * (m + u) + m * m;
            assert!(
                (r.re - oracle).abs() <= EQ_TOL && r.im.abs() <= EQ_TOL,
                "m={m} u={u} residual={r} oracle={oracle}"
            );
            assert!((r.re - u * u).abs() <= EQ_TOL);
        }
    }

    #[test]
    fn action_rate_vanishes_on_shell() {
        let model = crate::dsl::parse(
            "field phi : complex scalar\nconst m dim -1\n\
             L = d_{mu}(conj(phi)) * d_{nu}(phi) * g^{mu nu} - m^2 * conj(phi) * phi",
        )
        .unwrap();
        let energy = 2.0_f64.sqrt();
        let cfg = plane_cfg(energy, 1.0).constant("m", 1.0);
        let b = BoxSpec {
            lx: 1.0,
            ly: 2.0,
            lz: 3.0,
            duration: 5.0,
        };
        let rate = action_box(&model, &cfg, &b, true).unwrap();
        assert!(rate.abs() < EQ_TOL);

        // Off shell: (E^2 - p^2 - m^2) / (2E) with E=2, p=1, m=1.
        let cfg = plane_cfg(2.0, 1.0).constant("m", 1.0);
        let rate = action_box(&model, &cfg, &b, true).unwrap();
        assert!((rate - 0.5).abs() < EQ_TOL);

        // Box independence.
        let b2 = BoxSpec {
            lx: 0.3,
            ly: 0.7,
            lz: 11.0,
            duration: 0.9,
        };
        let rate2 = action_box(&model, &cfg, &b2, true).unwrap();
        assert!((rate - rate2).abs() < EQ_TOL);

        // Classical comparator at rest is -m, not zero.
        assert!((classical_action_rate(1.0, 0.0).unwrap() + 1.0).abs() < EQ_TOL);
    }

    #[test]
    fn yukawa_t00_routes_agree() {
        let spots = [(4.0 * PI, 1.0, 1.0), (4.0 * PI, 0.0, 2.0), (2.0, 3.0, 0.4)];
        for (g, m, r) in spots {
            let sym = yukawa_t00(g, m, r).unwrap();
            let closed = yukawa_t00_closed(g, m, r).unwrap();
            assert!(
                (sym - closed).abs() <= EQ_TOL * closed.abs().max(1.0),
                "g={g} m={m} r={r}: {sym} vs {closed}"
            );
        }
        // Frozen spot values.
        let spot = yukawa_t00(4.0 * PI, 1.0, 1.0).unwrap();
        assert!((spot - 0.3383382).abs() < 1e-7);
        let massless = yukawa_t00(4.0 * PI, 0.0, 2.0).unwrap();
        assert!((massless - 0.03125).abs() < EQ_TOL);
        let far = yukawa_t00(4.0 * PI, 1.0, 50.0).unwrap();
        assert!(far < 1e-40);
    }

    #[test]
    fn orthogonality_of_rest_frame_spatial_force() {
        let f = FourVector::new(0.0, 0.3, -0.2, 0.9);
        let v = FourVector::new(1.0, 0.0, 0.0, 0.0);
        assert_eq!(orthogonality_check(&f, &v).unwrap(), 0.0);
    }

    #[test]
    fn yukawa_force_fixture_violates_orthogonality() {
        let g = 4.0 * PI;
        let dphi = yukawa_radial_derivative(g, 1.0, 1.0).unwrap();
        assert!((dphi + 2.0 / std::f64::consts::E).abs() < 1e-7);
        let f = FourVector::new(0.0, 0.0, 0.0, dphi);
        let gamma = 1.25;
        let v = FourVector::new(gamma, 0.0, 0.0, -gamma * 0.6);
        let product = orthogonality_check(&f, &v).unwrap();
        assert!((product - (-0.5518192)).abs() < 1e-6, "got {product}");
    }

    #[test]
    fn lorentz_force_is_orthogonal_for_parallel_current() {
        // Static E field along z, charge moving along z.
        let mut fmat = [[0.0; 4]; 4];
        fmat[0][3] = 0.7;
        fmat[3][0] = -0.7;
        let gamma = 1.25;
        let v = FourVector::new(gamma, 0.0, 0.0, gamma * 0.6);
        let j = FourVector::new(2.0 * v[0], 2.0 * v[1], 2.0 * v[2], 2.0 * v[3]);
        let f = lorentz_force(&fmat, &j);
        assert!(orthogonality_check(&f, &v).unwrap().abs() <= EQ_TOL);
    }

    #[test]
    fn non_normalized_velocity_is_rejected() {
        let f = FourVector::new(0.0, 1.0, 0.0, 0.0);
        let v = FourVector::new(2.0, 0.0, 0.0, 0.0);
        assert!(matches!(
            orthogonality_check(&f, &v),
            Err(EvalError::NonNormalizedVelocity(_))
        ));
    }

    #[test]
    fn finite_differences_match_symbolic_derivatives() {
        let phi = FieldDecl::scalar("phi", Reality::Complex);
        let e = Expr::field(&phi);
        let cfg = plane_cfg(2.0_f64.sqrt(), 1.0);
        let x = SpacetimePoint::new(0.3, 0.2, -0.7, 0.4);
        let dev = finite_diff_check(&e, &cfg, &x, 1e-4).unwrap();
        assert!(dev <= 1e-6, "plane-wave deviation {dev}");

        let ycfg = FieldConfig::new().assign(
            "phi",
            FieldAssignment::Yukawa {
                coupling: 4.0 * PI,
                mass: 1.0,
            },
        );
        let yphi = FieldDecl::scalar("phi", Reality::Real);
        // r = 1 exactly, away from the origin singularity.
        let x1 = SpacetimePoint::new(0.0, 0.6, 0.0, 0.8);
        let dev = finite_diff_check(&Expr::field(&yphi), &ycfg, &x1, 1e-4).unwrap();
        assert!(dev <= 1e-5, "Yukawa deviation {dev}");

        let constant = Expr::constant("c0");
        let ccfg = FieldConfig::new().constant("c0", 3.5);
        let dev = finite_diff_check(&constant, &ccfg, &x, 1e-4).unwrap();
        assert_eq!(dev, 0.0);
    }

    #[test]
    fn second_symbolic_derivative_matches_finite_differences() {
        // d_mu applied to A^nu phi_,nu phi, cross-checked numerically.
        let phi = FieldDecl::scalar("phi", Reality::Complex);
        let a = FieldDecl::vector("A", Reality::Real);
        let e = Expr::product(vec![
            Expr::field_idx(&a, vec![Index::up("nu")]),
            Expr::field_d(&phi, vec![Index::down("nu")]),
            Expr::field(&phi),
        ]);
        let cfg = plane_cfg(1.3, 0.4).assign("A", FieldAssignment::ConstantPotential { v: 0.8 });
        let x = SpacetimePoint::new(0.6, -0.3, 0.2, 0.9);
        let dev = finite_diff_check(&e, &cfg, &x, 1e-4).unwrap();
        assert!(dev <= 1e-6, "deviation {dev}");
    }
}
