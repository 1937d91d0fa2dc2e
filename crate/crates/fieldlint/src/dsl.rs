//! The `.lagr` front-end: a small index-notation DSL for field declarations
//! and Lagrangian densities, plus the canonical pretty-printer.
//!
//! Grammar (UTF-8, `#` line comments):
//!
//! ```text
//! model     := stmt* ;
//! stmt      := fielddecl | constdecl | assume | lagr ;
//! fielddecl := "field" IDENT ":" ("real"|"complex") ("scalar"|"vector"|"spinor") ["dim" RATIONAL] ;
//! constdecl := "const" IDENT ["dim" RATIONAL] ;
//! assume    := "assume" ("lorenz_gauge"|"mass_shell"|"on_shell") ;
//! lagr      := "L" "=" expr ;
//! expr      := ["-"] term (("+"|"-") term)* ;
//! term      := factor ("*" factor)* ;
//! factor    := RATIONAL | "i" | IDENT idx* | "d" idx "(" expr ")"
//!            | "conj" "(" expr ")" | "(" expr ")" | factor "^" INT ;
//! idx       := ("_"|"^") "{" IDENT+ "}" ;
//! ```
//!
//! `d_{mu}(...)` is the partial derivative, `^{...}`/`_{...}` mark upper and
//! lower indices, `g` is the metric, `gamma` a formal gamma matrix, `i` the
//! imaginary unit and `pi` the circle constant. Declaring a spinor `psi`
//! also registers its Dirac adjoint `psibar`.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use num::{One, Signed, Zero};

use crate::calculus::differentiate;
use crate::canon::{self, canonical_monomials, Factor, FactorList, Monomial};
use crate::expr::{Expr, ExprError, FieldDecl, FieldKind, FieldRef, Index, Rat, Reality, Variance};

const RESERVED: &[&str] = &[
    "d",
    "i",
    "g",
    "gamma",
    "conj",
    "pi",
    "field",
    "const",
    "assume",
    "L",
    "real",
    "complex",
    "scalar",
    "vector",
    "spinor",
    "dim",
    "lorenz_gauge",
    "mass_shell",
    "on_shell",
];

/// Names drawn for displaying canonical dummy indices.
const INDEX_POOL: &[&str] = &[
    "mu", "nu", "rho", "sigma", "alpha", "beta", "tau", "kappa", "eta", "xi", "zeta", "theta",
];

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Assumption {
    LorenzGauge,
    MassShell,
    OnShell,
}

impl fmt::Display for Assumption {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Assumption::LorenzGauge => write!(f, "lorenz_gauge"),
            Assumption::MassShell => write!(f, "mass_shell"),
            Assumption::OnShell => write!(f, "on_shell"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConstDecl {
    pub name: String,
    pub dimension: Option<Rat>,
}

/// A parsed model: declarations, assumptions, and a canonical density.
#[derive(Clone, Debug)]
pub struct LagrangianModel {
    pub fields: Vec<FieldRef>,
    pub constants: Vec<ConstDecl>,
    pub assumptions: BTreeSet<Assumption>,
    pub density: Expr,
}

impl LagrangianModel {
    pub fn field(&self, name: &str) -> Option<&FieldRef> {
        self.fields.iter().find(|f| f.name == name)
    }

    pub fn constant(&self, name: &str) -> Option<&ConstDecl> {
        self.constants.iter().find(|c| c.name == name)
    }

    pub fn with_assumption(&self, a: Assumption) -> Self {
        let mut m = self.clone();
        m.assumptions.insert(a);
        m
    }

    pub fn without_assumptions(&self) -> Self {
        let mut m = self.clone();
        m.assumptions.clear();
        m
    }
}

#[derive(thiserror::Error, Debug, Clone, PartialEq)]
pub enum ParseError {
    #[error("{line}:{col}: syntax error: {msg}")]
    Syntax {
        line: usize,
        col: usize,
        msg: String,
    },
    #[error("{line}:{col}: undeclared symbol '{name}'")]
    Undeclared {
        line: usize,
        col: usize,
        name: String,
    },
    #[error("{line}:{col}: conj applied to real field '{name}'")]
    ConjOfReal {
        line: usize,
        col: usize,
        name: String,
    },
    #[error("{line}:{col}: '{name}' takes {expected} index(es), found {found}")]
    Arity {
        line: usize,
        col: usize,
        name: String,
        expected: usize,
        found: usize,
    },
    #[error("expression error: {0}")]
    Expr(#[from] ExprError),
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Int(i64),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    Under,
    LBrace,
    RBrace,
    LParen,
    RParen,
    Colon,
    Eq,
    Eof,
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(text: &str) -> Result<Vec<Token>, ParseError> {
    let mut out = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let mut i = 0;
    let mut line = 1;
    let mut col = 1;
    while i < chars.len() {
        let c = chars[i];
        let (l, co) = (line, col);
        let mut push = |tok: Tok| {
            out.push(Token {
                tok,
                line: l,
                col: co,
            })
        };
        match c {
            '\n' => {
                line += 1;
                col = 1;
                i += 1;
                continue;
            }
            ' ' | '\t' | '\r' => {}
            '#' => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
                continue;
            }
            '+' => push(Tok::Plus),
            '-' => push(Tok::Minus),
            '*' => push(Tok::Star),
            '/' => push(Tok::Slash),
            '^' => push(Tok::Caret),
            '{' => push(Tok::LBrace),
            '}' => push(Tok::RBrace),
            '(' => push(Tok::LParen),
            ')' => push(Tok::RParen),
            ':' => push(Tok::Colon),
            '=' => push(Tok::Eq),
            '_' => push(Tok::Under),
            '0'..='9' => {
                let start = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                let s: String = chars[start..i].iter().collect();
                let n: i64 = s.parse().map_err(|_| ParseError::Syntax {
                    line: l,
                    col: co,
                    msg: format!("integer literal '{s}' out of range"),
                })?;
                out.push(Token {
                    tok: Tok::Int(n),
                    line: l,
                    col: co,
                });
                col += i - start;
                continue;
            }
            'a'..='z' | 'A'..='Z' => {
                let start = i;
                i += 1;
                while i < chars.len() {
                    let ch = chars[i];
                    // '_' joins an identifier only when followed by more
                    // identifier characters, so `A_{mu}` lexes as A, _, {.
                    let joins = ch.is_ascii_alphanumeric()
                        || (ch == '_'
                            && i + 1 < chars.len()
                            && (chars[i + 1].is_ascii_alphanumeric() || chars[i + 1] == '_'));
                    if !joins {
                        break;
                    }
                    i += 1;
                }
                let s: String = chars[start..i].iter().collect();
                out.push(Token {
                    tok: Tok::Ident(s),
                    line: l,
                    col: co,
                });
                col += i - start;
                continue;
            }
            _ => {
                return Err(ParseError::Syntax {
                    line: l,
                    col: co,
                    msg: format!("unexpected character '{c}'"),
                })
            }
        }
        i += 1;
        col += 1;
    }
    out.push(Token {
        tok: Tok::Eof,
        line,
        col,
    });
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    fields: Vec<FieldRef>,
    constants: Vec<ConstDecl>,
}

impl Parser {
    fn new(tokens: Vec<Token>) -> Self {
        Parser {
            tokens,
            pos: 0,
            fields: Vec::new(),
            constants: Vec::new(),
        }
    }

    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn peek2(&self) -> &Tok {
        &self.tokens[(self.pos + 1).min(self.tokens.len() - 1)].tok
    }

    fn here(&self) -> (usize, usize) {
        let t = &self.tokens[self.pos];
        (t.line, t.col)
    }

    fn bump(&mut self) -> Tok {
        let t = self.tokens[self.pos].tok.clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn err(&self, msg: impl Into<String>) -> ParseError {
        let (line, col) = self.here();
        ParseError::Syntax {
            line,
            col,
            msg: msg.into(),
        }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), ParseError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.err(format!("expected {what}, found {:?}", self.peek())))
        }
    }

    fn expect_ident(&mut self, what: &str) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            other => Err(self.err(format!("expected {what}, found {other:?}"))),
        }
    }

    fn lookup_field(&self, name: &str) -> Option<FieldRef> {
        self.fields.iter().find(|f| f.name == name).cloned()
    }

    fn lookup_const(&self, name: &str) -> Option<&ConstDecl> {
        self.constants.iter().find(|c| c.name == name)
    }

    fn parse_signed_rational(&mut self) -> Result<Rat, ParseError> {
        let neg = if *self.peek() == Tok::Minus {
            self.bump();
            true
        } else {
            false
        };
        let n = match self.bump() {
            Tok::Int(n) => n,
            _ => return Err(self.err("expected a rational number")),
        };
        let d = if *self.peek() == Tok::Slash {
            self.bump();
            match self.bump() {
                Tok::Int(d) if d != 0 => d,
                _ => return Err(self.err("expected a nonzero denominator")),
            }
        } else {
            1
        };
        let r = Rat::new(n.into(), d.into());
        Ok(if neg { -r } else { r })
    }

    fn parse_index_group(&mut self) -> Result<Vec<Index>, ParseError> {
        let variance = match self.bump() {
            Tok::Under => Variance::Lower,
            Tok::Caret => Variance::Upper,
            _ => return Err(self.err("expected '_' or '^' before an index group")),
        };
        self.expect(Tok::LBrace, "'{'")?;
        let mut out = Vec::new();
        loop {
            match self.peek().clone() {
                Tok::Ident(name) => {
                    self.bump();
                    out.push(Index { name, variance });
                }
                // Concrete component labels 0..3 are accepted so rendered
                // component expressions stay parseable.
                Tok::Int(n) if (0..=3).contains(&n) => {
                    self.bump();
                    out.push(Index {
                        name: n.to_string(),
                        variance,
                    });
                }
                Tok::RBrace => break,
                _ => return Err(self.err("expected an index name or '}'")),
            }
        }
        if out.is_empty() {
            return Err(self.err("empty index group"));
        }
        self.expect(Tok::RBrace, "'}'")?;
        Ok(out)
    }

    fn at_index_group(&self) -> bool {
        matches!(self.peek(), Tok::Under | Tok::Caret) && *self.peek2() == Tok::LBrace
    }

    fn parse_index_groups(&mut self) -> Result<Vec<Index>, ParseError> {
        let mut out = Vec::new();
        while self.at_index_group() {
            out.extend(self.parse_index_group()?);
        }
        Ok(out)
    }

    fn parse_expr(&mut self) -> Result<Expr, ParseError> {
        let mut terms = Vec::new();
        let neg = if *self.peek() == Tok::Minus {
            self.bump();
            true
        } else {
            false
        };
        let first = self.parse_term()?;
        terms.push(if neg { first.neg() } else { first });
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.bump();
                    terms.push(self.parse_term()?);
                }
                Tok::Minus => {
                    self.bump();
                    terms.push(self.parse_term()?.neg());
                }
                _ => break,
            }
        }
        Ok(Expr::sum(terms))
    }

    fn parse_term(&mut self) -> Result<Expr, ParseError> {
        let mut factors = vec![self.parse_factor()?];
        while *self.peek() == Tok::Star {
            self.bump();
            factors.push(self.parse_factor()?);
        }
        Ok(Expr::product(factors))
    }

    fn parse_factor(&mut self) -> Result<Expr, ParseError> {
        let base = self.parse_primary()?;
        if *self.peek() == Tok::Caret && !matches!(self.peek2(), Tok::LBrace) {
            self.bump();
            let neg = if *self.peek() == Tok::Minus {
                self.bump();
                true
            } else {
                false
            };
            let n = match self.bump() {
                Tok::Int(n) => n as i32,
                _ => return Err(self.err("expected an integer exponent after '^'")),
            };
            return Ok(Expr::power(base, if neg { -n } else { n }));
        }
        Ok(base)
    }

    fn parse_primary(&mut self) -> Result<Expr, ParseError> {
        let (line, col) = self.here();
        match self.peek().clone() {
            Tok::Int(_) => {
                let n = match self.bump() {
                    Tok::Int(n) => n,
                    _ => unreachable!(),
                };
                if *self.peek() == Tok::Slash {
                    self.bump();
                    match self.bump() {
                        Tok::Int(d) if d != 0 => Ok(Expr::Rational(Rat::new(n.into(), d.into()))),
                        _ => Err(self.err("expected a nonzero denominator")),
                    }
                } else {
                    Ok(Expr::int(n))
                }
            }
            Tok::LParen => {
                self.bump();
                let e = self.parse_expr()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(e)
            }
            Tok::Ident(name) => {
                self.bump();
                match name.as_str() {
                    "i" => Ok(Expr::I),
                    "pi" => Ok(Expr::constant("pi")),
                    "d" => {
                        if !self.at_index_group() {
                            return Err(self.err("'d' requires an index group, e.g. d_{mu}(...)"));
                        }
                        let indices = self.parse_index_group()?;
                        self.expect(Tok::LParen, "'('")?;
                        let inner = self.parse_expr()?;
                        self.expect(Tok::RParen, "')'")?;
                        let mut e = inner;
                        for idx in indices.iter().rev() {
                            e = differentiate(&e, idx);
                        }
                        Ok(e)
                    }
                    "conj" => {
                        self.expect(Tok::LParen, "'('")?;
                        let inner = self.parse_expr()?;
                        self.expect(Tok::RParen, "')'")?;
                        if let Expr::Field { decl, .. } = &inner {
                            if decl.reality == Reality::Real {
                                return Err(ParseError::ConjOfReal {
                                    line,
                                    col,
                                    name: decl.name.clone(),
                                });
                            }
                            if decl.kind == FieldKind::Spinor {
                                return Err(ParseError::Syntax {
                                    line,
                                    col,
                                    msg: format!(
                                        "conj of a spinor is not supported; use {}bar",
                                        decl.adjoint_of.as_deref().unwrap_or(&decl.name)
                                    ),
                                });
                            }
                        }
                        Ok(inner.conj())
                    }
                    "g" => {
                        let indices = self.parse_index_groups()?;
                        if indices.len() != 2 {
                            return Err(ParseError::Arity {
                                line,
                                col,
                                name: "g".into(),
                                expected: 2,
                                found: indices.len(),
                            });
                        }
                        Ok(Expr::Metric(indices[0].clone(), indices[1].clone()))
                    }
                    "gamma" => {
                        let indices = self.parse_index_groups()?;
                        if indices.len() != 1 {
                            return Err(ParseError::Arity {
                                line,
                                col,
                                name: "gamma".into(),
                                expected: 1,
                                found: indices.len(),
                            });
                        }
                        Ok(Expr::Gamma(indices[0].clone()))
                    }
                    _ => {
                        let indices = self.parse_index_groups()?;
                        if let Some(decl) = self.lookup_field(&name) {
                            let want = decl.kind.arity();
                            if indices.len() != want {
                                return Err(ParseError::Arity {
                                    line,
                                    col,
                                    name,
                                    expected: want,
                                    found: indices.len(),
                                });
                            }
                            Ok(Expr::Field {
                                decl,
                                indices,
                                derivs: vec![],
                            })
                        } else if self.lookup_const(&name).is_some() {
                            if !indices.is_empty() {
                                return Err(ParseError::Arity {
                                    line,
                                    col,
                                    name,
                                    expected: 0,
                                    found: indices.len(),
                                });
                            }
                            Ok(Expr::Const(name))
                        } else {
                            Err(ParseError::Undeclared { line, col, name })
                        }
                    }
                }
            }
            other => Err(self.err(format!("expected an expression, found {other:?}"))),
        }
    }

    fn check_new_name(&self, name: &str, line: usize, col: usize) -> Result<(), ParseError> {
        if RESERVED.contains(&name) {
            return Err(ParseError::Syntax {
                line,
                col,
                msg: format!("'{name}' is a reserved word"),
            });
        }
        if self.lookup_field(name).is_some() || self.lookup_const(name).is_some() {
            return Err(ParseError::Syntax {
                line,
                col,
                msg: format!("duplicate declaration of '{name}'"),
            });
        }
        Ok(())
    }

    fn parse_field_decl(&mut self) -> Result<(), ParseError> {
        let (line, col) = self.here();
        let name = self.expect_ident("a field name")?;
        self.check_new_name(&name, line, col)?;
        self.expect(Tok::Colon, "':'")?;
        let reality = match self.expect_ident("'real' or 'complex'")?.as_str() {
            "real" => Reality::Real,
            "complex" => Reality::Complex,
            other => return Err(self.err(format!("expected 'real' or 'complex', found '{other}'"))),
        };
        let kind = match self
            .expect_ident("'scalar', 'vector' or 'spinor'")?
            .as_str()
        {
            "scalar" => FieldKind::Scalar,
            "vector" => FieldKind::Vector,
            "spinor" => FieldKind::Spinor,
            other => {
                return Err(self.err(format!(
                    "expected 'scalar', 'vector' or 'spinor', found '{other}'"
                )))
            }
        };
        if kind == FieldKind::Spinor && reality == Reality::Real {
            return Err(self.err("spinor fields must be complex"));
        }
        let dimension = if *self.peek() == Tok::Ident("dim".into()) {
            self.bump();
            Some(self.parse_signed_rational()?)
        } else {
            None
        };
        let decl = Arc::new(FieldDecl {
            name: name.clone(),
            kind: kind.clone(),
            reality,
            dimension,
            adjoint_of: None,
        });
        if kind == FieldKind::Spinor {
            let bar = FieldDecl::adjoint(&decl);
            self.check_new_name(&bar.name, line, col)?;
            self.fields.push(decl);
            self.fields.push(bar);
        } else {
            self.fields.push(decl);
        }
        Ok(())
    }

    fn parse_const_decl(&mut self) -> Result<(), ParseError> {
        let (line, col) = self.here();
        let name = self.expect_ident("a constant name")?;
        self.check_new_name(&name, line, col)?;
        let dimension = if *self.peek() == Tok::Ident("dim".into()) {
            self.bump();
            Some(self.parse_signed_rational()?)
        } else {
            None
        };
        self.constants.push(ConstDecl { name, dimension });
        Ok(())
    }

    fn parse_model(&mut self) -> Result<LagrangianModel, ParseError> {
        let mut assumptions = BTreeSet::new();
        let mut density: Option<Expr> = None;
        loop {
            match self.peek().clone() {
                Tok::Eof => break,
                Tok::Ident(w) if w == "field" => {
                    self.bump();
                    self.parse_field_decl()?;
                }
                Tok::Ident(w) if w == "const" => {
                    self.bump();
                    self.parse_const_decl()?;
                }
                Tok::Ident(w) if w == "assume" => {
                    self.bump();
                    let a = match self.expect_ident("an assumption name")?.as_str() {
                        "lorenz_gauge" => Assumption::LorenzGauge,
                        "mass_shell" => Assumption::MassShell,
                        "on_shell" => Assumption::OnShell,
                        other => return Err(self.err(format!("unknown assumption '{other}'"))),
                    };
                    assumptions.insert(a);
                }
                Tok::Ident(w) if w == "L" => {
                    self.bump();
                    self.expect(Tok::Eq, "'='")?;
                    if density.is_some() {
                        return Err(self.err("duplicate density definition"));
                    }
                    density = Some(self.parse_expr()?);
                }
                other => {
                    return Err(self.err(format!(
                        "expected 'field', 'const', 'assume' or 'L', found {other:?}"
                    )))
                }
            }
        }
        let density = match density {
            Some(d) => canon::canonicalize(&d)?,
            None => Expr::zero(),
        };
        Ok(LagrangianModel {
            fields: self.fields.clone(),
            constants: self.constants.clone(),
            assumptions,
            density,
        })
    }
}

/// Parse a full `.lagr` model.
pub fn parse(text: &str) -> Result<LagrangianModel, ParseError> {
    let mut p = Parser::new(lex(text)?);
    p.parse_model()
}

/// Parse a single expression against ambient declarations. The result is
/// canonicalized.
pub fn parse_expr(
    text: &str,
    fields: &[FieldRef],
    constants: &[ConstDecl],
) -> Result<Expr, ParseError> {
    let mut p = Parser::new(lex(text)?);
    p.fields = fields.to_vec();
    p.constants = constants.to_vec();
    let e = p.parse_expr()?;
    if *p.peek() != Tok::Eof {
        return Err(p.err("trailing input after expression"));
    }
    Ok(canon::canonicalize(&e)?)
}

/// Parse an expression using a model's declarations.
pub fn parse_expr_in(text: &str, model: &LagrangianModel) -> Result<Expr, ParseError> {
    parse_expr(text, &model.fields, &model.constants)
}

// ---------------------------------------------------------------------------
// Rendering
// ---------------------------------------------------------------------------

struct NamePool {
    taken: BTreeSet<String>,
}

impl NamePool {
    fn new(taken: BTreeSet<String>) -> Self {
        NamePool { taken }
    }

    fn display_map(
        &self,
        reserved_in_order: &[String],
    ) -> std::collections::BTreeMap<String, String> {
        let mut map = std::collections::BTreeMap::new();
        let mut pool = INDEX_POOL
            .iter()
            .map(|s| s.to_string())
            .chain((1..).map(|n| format!("j{n}")))
            .filter(|n| !self.taken.contains(n));
        for r in reserved_in_order {
            if !map.contains_key(r) {
                let next = pool.next().expect("index pool is unbounded");
                map.insert(r.clone(), next);
            }
        }
        map
    }
}

fn rat_str(r: &Rat) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

fn index_groups_str(indices: &[Index], map: &std::collections::BTreeMap<String, String>) -> String {
    let mut out = String::new();
    let mut i = 0;
    while i < indices.len() {
        let v = indices[i].variance;
        let mut names = Vec::new();
        while i < indices.len() && indices[i].variance == v {
            let n = &indices[i].name;
            names.push(map.get(n).cloned().unwrap_or_else(|| n.clone()));
            i += 1;
        }
        out.push(match v {
            Variance::Upper => '^',
            Variance::Lower => '_',
        });
        out.push('{');
        out.push_str(&names.join(" "));
        out.push('}');
    }
    out
}

fn wrap_derivs(
    core: String,
    derivs: &[Index],
    map: &std::collections::BTreeMap<String, String>,
) -> String {
    let mut out = core;
    for d in derivs.iter().rev() {
        let name = map.get(&d.name).cloned().unwrap_or_else(|| d.name.clone());
        let marker = match d.variance {
            Variance::Upper => '^',
            Variance::Lower => '_',
        };
        out = format!("d{marker}{{{name}}}({out})");
    }
    out
}

fn factor_str(f: &Factor, map: &std::collections::BTreeMap<String, String>) -> String {
    match f {
        Factor::Const(c) => c.clone(),
        Factor::Metric(a, b) => {
            format!("g{}", index_groups_str(&[a.clone(), b.clone()], map))
        }
        Factor::Gamma(i) => format!("gamma{}", index_groups_str(std::slice::from_ref(i), map)),
        Factor::Field {
            decl,
            indices,
            derivs,
            conj,
        } => {
            let mut core = format!("{}{}", decl.name, index_groups_str(indices, map));
            if *conj {
                core = format!("conj({core})");
            }
            wrap_derivs(core, derivs, map)
        }
        Factor::Sandwich(s) => {
            let left = wrap_derivs(s.left.decl.name.clone(), &s.left.derivs, map);
            let right = wrap_derivs(s.right.decl.name.clone(), &s.right.derivs, map);
            match &s.gamma {
                Some(gi) => format!(
                    "{left}*gamma{}*{right}",
                    index_groups_str(std::slice::from_ref(gi), map)
                ),
                None => format!("{left}*{right}"),
            }
        }
    }
}

fn collect_names(factors: &FactorList, reserved: &mut Vec<String>, user: &mut BTreeSet<String>) {
    canon::for_each_index(factors, |i| {
        if i.is_concrete() {
            user.insert(i.name.clone());
        } else if canon::is_reserved_name(&i.name) {
            if !reserved.contains(&i.name) {
                reserved.push(i.name.clone());
            }
        } else {
            user.insert(i.name.clone());
        }
    });
}

fn monomial_body(
    coeff: &Rat,
    imag: bool,
    factors: &FactorList,
    map: &std::collections::BTreeMap<String, String>,
) -> String {
    let mut parts: Vec<String> = Vec::new();
    let abs = coeff.abs();
    if !abs.is_one() || (factors.is_empty() && !imag) {
        parts.push(rat_str(&abs));
    }
    if imag {
        parts.push("i".into());
    }
    for (f, k) in factors {
        let s = factor_str(f, map);
        if *k == 1 {
            parts.push(s);
        } else if s.contains('*') {
            parts.push(format!("({s})^{k}"));
        } else {
            parts.push(format!("{s}^{k}"));
        }
    }
    parts.join("*")
}

fn render_monomials(ms: &[Monomial]) -> String {
    if ms.is_empty() {
        return "0".into();
    }
    // Names already used by free or concrete indices must not be reused for
    // dummy display names.
    let mut user: BTreeSet<String> = BTreeSet::new();
    for m in ms {
        let mut r = Vec::new();
        collect_names(&m.factors, &mut r, &mut user);
    }
    let mut pieces: Vec<(bool, String)> = Vec::new();
    for m in ms {
        let mut reserved = Vec::new();
        let mut u = user.clone();
        collect_names(&m.factors, &mut reserved, &mut u);
        let map = NamePool::new(user.clone()).display_map(&reserved);
        if !m.re.is_zero() {
            pieces.push((
                m.re.is_negative(),
                monomial_body(&m.re, false, &m.factors, &map),
            ));
        }
        if !m.im.is_zero() {
            pieces.push((
                m.im.is_negative(),
                monomial_body(&m.im, true, &m.factors, &map),
            ));
        }
    }
    let mut out = String::new();
    for (i, (neg, body)) in pieces.iter().enumerate() {
        if i == 0 {
            if *neg {
                out.push('-');
            }
        } else {
            out.push_str(if *neg { " - " } else { " + " });
        }
        out.push_str(body);
    }
    out
}

fn render_raw(e: &Expr) -> String {
    match e {
        Expr::Sum(v) => {
            let inner: Vec<String> = v.iter().map(render_raw).collect();
            format!("({})", inner.join(" + "))
        }
        Expr::Product(v) => v.iter().map(render_raw).collect::<Vec<_>>().join("*"),
        Expr::Power(b, n) => format!("{}^{}", render_raw(b), n),
        Expr::Rational(r) => rat_str(r),
        Expr::I => "i".into(),
        Expr::Const(c) => c.clone(),
        Expr::Metric(a, b) => format!("g{}{}", a, b),
        Expr::Gamma(i) => format!("gamma{}", i),
        Expr::Field {
            decl,
            indices,
            derivs,
        } => {
            let map = std::collections::BTreeMap::new();
            let core = format!("{}{}", decl.name, index_groups_str(indices, &map));
            wrap_derivs(core, derivs, &map)
        }
        Expr::Conjugate(b) => format!("conj({})", render_raw(b)),
        Expr::Sandwich(s) => {
            let map = std::collections::BTreeMap::new();
            factor_str(&Factor::Sandwich((**s).clone()), &map)
        }
    }
}

/// Render a bare factor list as a term label (unit coefficient).
pub(crate) fn render_term_label(factors: &FactorList) -> String {
    let m = Monomial {
        re: Rat::from_integer(1.into()),
        im: Rat::zero(),
        factors: factors.clone(),
    };
    render_monomials(&[m])
}

/// Pretty-print an expression in the DSL syntax. The output is canonical
/// (parsing it back and canonicalizing reproduces `canonicalize(e)`);
/// reserved internal dummy names are displayed using a standard alphabet.
pub fn render(e: &Expr) -> String {
    match canonical_monomials(e) {
        Ok(ms) => render_monomials(&ms),
        Err(_) => render_raw(e),
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", render(self))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::canon::{canonicalize, equivalent};

    const KG_FREE_REAL: &str = "\
field phi : real scalar
const m dim -1
L = 1/2 * (d_{mu}(phi) * d_{nu}(phi) * g^{mu nu} - m^2 * phi^2)
";

    #[test]
    fn parses_free_kg_model() {
        let model = parse(KG_FREE_REAL).unwrap();
        assert_eq!(model.fields.len(), 1);
        assert_eq!(model.constants.len(), 1);
        let phi = model.field("phi").unwrap();
        let want = Expr::sum(vec![
            Expr::product(vec![
                Expr::ratio(1, 2),
                Expr::field_d(phi, vec![Index::down("a")]),
                Expr::field_d(phi, vec![Index::up("a")]),
            ]),
            Expr::product(vec![
                Expr::ratio(-1, 2),
                Expr::power(Expr::constant("m"), 2),
                Expr::power(Expr::field(phi), 2),
            ]),
        ]);
        assert!(equivalent(&model.density, &want).unwrap());
    }

    #[test]
    fn undeclared_symbol_is_rejected() {
        let err = parse("L = phi").unwrap_err();
        assert!(matches!(err, ParseError::Undeclared { name, .. } if name == "phi"));
    }

    #[test]
    fn conj_of_real_field_is_rejected() {
        let err = parse("field phi : real scalar\nL = conj(phi)").unwrap_err();
        assert!(matches!(err, ParseError::ConjOfReal { name, .. } if name == "phi"));
    }

    #[test]
    fn arity_mismatch_is_rejected() {
        let err = parse("field phi : real scalar\nL = phi^{mu}").unwrap_err();
        assert!(matches!(err, ParseError::Arity { .. }));
    }

    #[test]
    fn spinor_declaration_registers_adjoint() {
        let model = parse(
            "field psi : complex spinor\nconst m dim -1\nL = psibar * (i*gamma^{mu}*d_{mu}(psi) - m*psi)",
        )
        .unwrap();
        assert!(model.field("psibar").is_some());
        assert!(model.field("psibar").unwrap().is_adjoint_spinor());
    }

    #[test]
    fn index_used_three_times_is_rejected() {
        let err = parse(
            "field phi : real scalar\nfield A : real vector\nL = A^{mu}*d_{mu}(phi)*d_{mu}(phi)",
        )
        .unwrap_err();
        assert!(matches!(
            err,
            ParseError::Expr(ExprError::IndexDiscipline(_))
        ));
    }

    #[test]
    fn assumptions_are_recorded() {
        let model = parse("field A : real vector\nassume lorenz_gauge\nL = A^{mu}*A_{mu}").unwrap();
        assert!(model.assumptions.contains(&Assumption::LorenzGauge));
    }

    #[test]
    fn render_round_trips_free_kg() {
        let model = parse(KG_FREE_REAL).unwrap();
        let text = render(&model.density);
        let back = parse_expr_in(&text, &model).unwrap();
        assert_eq!(back, canonicalize(&model.density).unwrap());
    }

    #[test]
    fn render_zero() {
        assert_eq!(render(&Expr::zero()), "0");
    }

    #[test]
    fn render_current_shape() {
        // i*(conj(phi)*d_{mu}(phi) - d_{mu}(conj(phi))*phi) keeps a free index
        let model = parse("field phi : complex scalar\nL = 0").unwrap();
        let j = parse_expr_in("i*(conj(phi)*d_{mu}(phi) - d_{mu}(conj(phi))*phi)", &model).unwrap();
        let text = render(&j);
        assert!(text.contains("conj(phi)"));
        let back = parse_expr_in(&text, &model).unwrap();
        assert_eq!(back, j);
    }

    #[test]
    fn quadratic_charge_term_renders_conventionally() {
        let model =
            parse("field phi : complex scalar\nfield A : real vector dim -1\nconst e dim 0\nL = 0")
                .unwrap();
        let term = parse_expr_in("8*pi*e^2*A^{mu}*conj(phi)*phi", &model).unwrap();
        assert!(render(&term).contains("8*pi*e^2*A^{mu}*conj(phi)*phi"));
    }

    #[test]
    fn negative_power_renders_and_parses() {
        let model = parse("const e dim 0\nL = 0").unwrap();
        let e = parse_expr_in("-1/16*pi^-1*e^2", &model).unwrap();
        let text = render(&e);
        let back = parse_expr_in(&text, &model).unwrap();
        assert_eq!(back, e);
    }

    #[test]
    fn comments_and_multiline_expressions() {
        let text = "\
# a comment
field phi : complex scalar   # trailing comment
const m dim -1
L = d_{mu}(conj(phi)) * d_{nu}(phi) * g^{mu nu}
  - m^2 * conj(phi) * phi
";
        let model = parse(text).unwrap();
        assert_eq!(model.fields.len(), 1);
        assert!(!model.density.is_zero_literal());
    }

    #[test]
    fn reserved_words_cannot_be_declared() {
        assert!(parse("field g : real scalar\nL = 0").is_err());
        assert!(parse("const d\nL = 0").is_err());
    }

    #[test]
    fn reserved_dummy_alphabet_is_unwritable() {
        // The canonical dummy names are non-ASCII and the lexer rejects them,
        // so user input can never capture an internal index.
        let err = parse("field phi : real scalar\nL = d_{ι1}(phi) * d^{ι1}(phi)").unwrap_err();
        assert!(matches!(err, ParseError::Syntax { .. }));
    }
}
