//! A small expression language for kernel profiles.
//!
//! Grammar, loosest binding first:
//!
//! ```text
//! sum     := product (('+' | '-') product)*
//! product := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := atom ('^' unary)?          right-associative
//! atom    := number | number 'i' | 'pi' | 'i' | 'E' | 'Ep'
//!          | func '(' sum ')' | '(' sum ')'
//! func    := exp | sin | cos | sqrt | abs
//! ```
//!
//! `Ep` stands for the second energy argument `E'`. Arithmetic is complex;
//! `sqrt` and non-integer powers use the principal branch.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use thiserror::Error;

use crate::energy::{AlgebraTag, EnergyError, EnergyGrid, OperatorKernel, StateFunctional};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("`{name}` at byte {offset} takes {expected} argument(s), got {found}")]
    Arity {
        name: String,
        expected: usize,
        found: usize,
        offset: usize,
    },
    #[error("non-finite value at `{node}`")]
    NonFinite { node: String },
    #[error("diagonal profile `{0}` must not depend on Ep")]
    DiagonalUsesEp(String),
    #[error(transparent)]
    Energy(#[from] EnergyError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    E,
    Ep,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Const {
    Pi,
    I,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Exp,
    Sin,
    Cos,
    Sqrt,
    Abs,
}

impl Func {
    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "exp" => Func::Exp,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
        }
    }

    fn arity(self) -> usize {
        1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
            BinOp::Pow => '^',
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Real(f64),
    /// Imaginary literal such as `2.5i`.
    Imag(f64),
    Const(Const),
    Var(Var),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

impl fmt::Display for Expr {
    /// Fully parenthesized canonical form; parsing it yields the same tree.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Real(x) => write!(f, "{x}"),
            Expr::Imag(x) => write!(f, "{x}i"),
            Expr::Const(Const::Pi) => write!(f, "pi"),
            Expr::Const(Const::I) => write!(f, "i"),
            Expr::Var(Var::E) => write!(f, "E"),
            Expr::Var(Var::Ep) => write!(f, "Ep"),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Binary(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

impl std::str::FromStr for Expr {
    type Err = ExprError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    ImagNum(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    Comma,
    End,
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, ExprError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let ch = bytes[i];
        let start = i;
        match ch {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'+' | b'-' | b'*' | b'/' | b'^' => {
                out.push((Tok::Op(ch as char), start));
                i += 1;
            }
            b'(' => {
                out.push((Tok::LParen, start));
                i += 1;
            }
            b')' => {
                out.push((Tok::RParen, start));
                i += 1;
            }
            b',' => {
                out.push((Tok::Comma, start));
                i += 1;
            }
            b'0'..=b'9' | b'.' => {
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        while j < bytes.len() && bytes[j].is_ascii_digit() {
                            j += 1;
                        }
                        i = j;
                    }
                }
                let lit = &text[start..i];
                let value: f64 = lit.parse().map_err(|_| ExprError::Syntax {
                    offset: start,
                    message: format!("malformed number `{lit}`"),
                })?;
                if !value.is_finite() {
                    return Err(ExprError::Syntax {
                        offset: start,
                        message: format!("number `{lit}` is out of range"),
                    });
                }
                let imag = i < bytes.len()
                    && bytes[i] == b'i'
                    && !bytes
                        .get(i + 1)
                        .is_some_and(|c| c.is_ascii_alphanumeric() || *c == b'_');
                if imag {
                    i += 1;
                    out.push((Tok::ImagNum(value), start));
                } else {
                    out.push((Tok::Num(value), start));
                }
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push((Tok::Ident(text[start..i].to_string()), start));
            }
            _ => {
                let c = text[start..].chars().next().unwrap_or('?');
                return Err(ExprError::Syntax {
                    offset: start,
                    message: format!("unexpected character `{c}`"),
                });
            }
        }
    }
    out.push((Tok::End, text.len()));
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> (Tok, usize) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn syntax<T>(&self, message: impl Into<String>) -> Result<T, ExprError> {
        Err(ExprError::Syntax {
            offset: self.offset(),
            message: message.into(),
        })
    }

    fn sum(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.product()?;
        loop {
            let op = match self.peek() {
                Tok::Op('+') => BinOp::Add,
                Tok::Op('-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.product()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn product(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Op('*') => BinOp::Mul,
                Tok::Op('/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if *self.peek() == Tok::Op('-') {
            self.bump();
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let base = self.atom()?;
        if *self.peek() == Tok::Op('^') {
            self.bump();
            let exponent = self.unary()?;
            return Ok(Expr::Binary(BinOp::Pow, Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ExprError> {
        let (tok, offset) = self.bump();
        match tok {
            Tok::Num(x) => Ok(Expr::Real(x)),
            Tok::ImagNum(x) => Ok(Expr::Imag(x)),
            Tok::LParen => {
                let inner = self.sum()?;
                if *self.peek() != Tok::RParen {
                    return self.syntax("expected `)`");
                }
                self.bump();
                Ok(inner)
            }
            Tok::Ident(name) => self.identifier(name, offset),
            Tok::End => Err(ExprError::Syntax {
                offset,
                message: "unexpected end of input".into(),
            }),
            other => Err(ExprError::Syntax {
                offset,
                message: format!("unexpected token {other:?}"),
            }),
        }
    }

    fn identifier(&mut self, name: String, offset: usize) -> Result<Expr, ExprError> {
        match name.as_str() {
            "E" => return Ok(Expr::Var(Var::E)),
            "Ep" => return Ok(Expr::Var(Var::Ep)),
            "pi" => return Ok(Expr::Const(Const::Pi)),
            "i" => return Ok(Expr::Const(Const::I)),
            _ => {}
        }
        let Some(func) = Func::from_name(&name) else {
            return Err(ExprError::UnknownIdentifier { name, offset });
        };
        if *self.peek() != Tok::LParen {
            return self.syntax(format!("expected `(` after `{name}`"));
        }
        self.bump();
        let mut args = Vec::new();
        if *self.peek() != Tok::RParen {
            loop {
                args.push(self.sum()?);
                if *self.peek() == Tok::Comma {
                    self.bump();
                } else {
                    break;
                }
            }
        }
        if *self.peek() != Tok::RParen {
            return self.syntax("expected `)` or `,`");
        }
        self.bump();
        if args.len() != func.arity() {
            return Err(ExprError::Arity {
                name,
                expected: func.arity(),
                found: args.len(),
                offset,
            });
        }
        Ok(Expr::Call(func, Box::new(args.remove(0))))
    }
}

pub fn parse(text: &str) -> Result<Expr, ExprError> {
    let mut p = Parser {
        toks: lex(text)?,
        pos: 0,
    };
    let e = p.sum()?;
    if *p.peek() != Tok::End {
        return p.syntax(format!("unexpected trailing input {:?}", p.peek()));
    }
    Ok(e)
}

/// Clears a negative zero imaginary part so that values like `-4` (which
/// negation turns into `-4 - 0i`) sit on the upper side of the branch cut.
fn on_principal_side(z: Complex64) -> Complex64 {
    if z.im == 0.0 {
        Complex64::new(z.re, 0.0)
    } else {
        z
    }
}

fn power(base: Complex64, exponent: Complex64) -> Complex64 {
    let base = on_principal_side(base);
    let zero = Complex64::default();
    if exponent.im == 0.0 && exponent.re.fract() == 0.0 && exponent.re.abs() <= 1024.0 {
        return base.powi(exponent.re as i32);
    }
    if base == zero {
        return if exponent.re > 0.0 {
            zero
        } else {
            Complex64::new(f64::NAN, f64::NAN)
        };
    }
    if base.im == 0.0 && base.re > 0.0 && exponent.im == 0.0 {
        return Complex64::new(base.re.powf(exponent.re), 0.0);
    }
    (exponent * base.ln()).exp()
}

impl Expr {
    pub fn evaluate(&self, e: f64, ep: f64) -> Result<Complex64, ExprError> {
        let v = match self {
            Expr::Real(x) => Complex64::new(*x, 0.0),
            Expr::Imag(x) => Complex64::new(0.0, *x),
            Expr::Const(Const::Pi) => Complex64::new(std::f64::consts::PI, 0.0),
            Expr::Const(Const::I) => Complex64::i(),
            Expr::Var(Var::E) => Complex64::new(e, 0.0),
            Expr::Var(Var::Ep) => Complex64::new(ep, 0.0),
            Expr::Neg(a) => -a.evaluate(e, ep)?,
            Expr::Binary(op, a, b) => {
                let (x, y) = (a.evaluate(e, ep)?, b.evaluate(e, ep)?);
                match op {
                    BinOp::Add => x + y,
                    BinOp::Sub => x - y,
                    BinOp::Mul => x * y,
                    BinOp::Div => x / y,
                    BinOp::Pow => power(x, y),
                }
            }
            Expr::Call(func, a) => {
                let x = a.evaluate(e, ep)?;
                match func {
                    Func::Exp => x.exp(),
                    Func::Sin => x.sin(),
                    Func::Cos => x.cos(),
                    Func::Sqrt => on_principal_side(x).sqrt(),
                    Func::Abs => Complex64::new(x.norm(), 0.0),
                }
            }
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(ExprError::NonFinite {
                node: self.to_string(),
            })
        }
    }

    pub fn uses(&self, var: Var) -> bool {
        match self {
            Expr::Var(v) => *v == var,
            Expr::Real(_) | Expr::Imag(_) | Expr::Const(_) => false,
            Expr::Neg(a) | Expr::Call(_, a) => a.uses(var),
            Expr::Binary(_, a, b) => a.uses(var) || b.uses(var),
        }
    }
}

/// Parses and evaluates a constant-valued expression such as `1-0.5i`.
pub fn eval_constant(text: &str) -> Result<Complex64, ExprError> {
    parse(text)?.evaluate(0.0, 0.0)
}

/// `d_j = e(E_j)`; rejects profiles that mention `Ep`.
pub fn sample_diag(e: &Expr, grid: &EnergyGrid) -> Result<DVector<Complex64>, ExprError> {
    if e.uses(Var::Ep) {
        return Err(ExprError::DiagonalUsesEp(e.to_string()));
    }
    let vals = grid
        .nodes()
        .into_iter()
        .map(|x| e.evaluate(x, 0.0))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(DVector::from_vec(vals))
}

/// `K_jk = e(E_j, E_k)`.
pub fn sample_offdiag(e: &Expr, grid: &EnergyGrid) -> Result<DMatrix<Complex64>, ExprError> {
    let nodes = grid.nodes();
    let m = grid.len();
    let mut k = DMatrix::zeros(m, m);
    for (j, &x) in nodes.iter().enumerate() {
        for (l, &y) in nodes.iter().enumerate() {
            k[(j, l)] = e.evaluate(x, y)?;
        }
    }
    Ok(k)
}

fn sample_pair(
    diag: &Expr,
    offdiag: Option<&Expr>,
    grid: &EnergyGrid,
) -> Result<(DVector<Complex64>, DMatrix<Complex64>), ExprError> {
    let d = sample_diag(diag, grid)?;
    let k = match offdiag {
        Some(e) => sample_offdiag(e, grid)?,
        None => DMatrix::zeros(grid.len(), grid.len()),
    };
    Ok((d, k))
}

/// Samples an operator kernel; an absent off-diagonal profile means `K = 0`.
pub fn sample(
    diag: &Expr,
    offdiag: Option<&Expr>,
    grid: &EnergyGrid,
    tag: AlgebraTag,
) -> Result<OperatorKernel, ExprError> {
    let (d, k) = sample_pair(diag, offdiag, grid)?;
    Ok(OperatorKernel::new(*grid, tag, d, k)?)
}

/// Same as [`sample`] for a state functional.
pub fn sample_functional(
    diag: &Expr,
    offdiag: Option<&Expr>,
    grid: &EnergyGrid,
    tag: AlgebraTag,
) -> Result<StateFunctional, ExprError> {
    let (d, k) = sample_pair(diag, offdiag, grid)?;
    Ok(StateFunctional::new(*grid, tag, d, k)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::make_grid;

    fn eval(s: &str, e: f64, ep: f64) -> Complex64 {
        parse(s).unwrap().evaluate(e, ep).unwrap()
    }

    #[test]
    fn negated_literals_take_the_principal_branch() {
        assert_eq!(eval("sqrt(-4)", 0.0, 0.0), Complex64::new(0.0, 2.0));
        let z = eval("(-8)^(1/3)", 0.0, 0.0);
        assert!((z - Complex64::new(1.0, 3f64.sqrt())).norm() < 1e-12, "{z}");
    }

    #[test]
    fn parses_gaussian_with_both_vars() {
        let e = parse("exp(-(E-2)^2 - (Ep-2)^2)").unwrap();
        assert!(e.uses(Var::E) && e.uses(Var::Ep));
        let e = parse("1/(E + i)").unwrap();
        assert!(matches!(e, Expr::Binary(BinOp::Div, _, _)));
    }

    #[test]
    fn error_kinds() {
        assert!(
            matches!(parse("foo(E)"), Err(ExprError::UnknownIdentifier { ref name, offset: 0 }) if name == "foo")
        );
        assert!(matches!(
            parse("exp(E, Ep)"),
            Err(ExprError::Arity {
                expected: 1,
                found: 2,
                ..
            })
        ));
        assert!(matches!(
            parse("sin()"),
            Err(ExprError::Arity { found: 0, .. })
        ));
        assert!(matches!(
            parse("1 +"),
            Err(ExprError::Syntax { offset: 3, .. })
        ));
        assert!(matches!(parse("(E"), Err(ExprError::Syntax { .. })));
        assert!(matches!(
            parse("E $ 2"),
            Err(ExprError::Syntax { offset: 2, .. })
        ));
        assert!(matches!(parse("exp"), Err(ExprError::Syntax { .. })));
        assert!(matches!(
            parse("2 3"),
            Err(ExprError::Syntax { offset: 2, .. })
        ));
        assert!(matches!(parse("1e999"), Err(ExprError::Syntax { .. })));
    }

    #[test]
    fn evaluation_examples() {
        assert_eq!(eval("E*Ep", 3.0, 4.0), Complex64::new(12.0, 0.0));
        assert!((eval("exp(i*pi)", 0.0, 0.0) - Complex64::new(-1.0, 0.0)).norm() < 1e-15);
        let err = parse("1/(E-1)").unwrap().evaluate(1.0, 0.0);
        assert_eq!(
            err,
            Err(ExprError::NonFinite {
                node: "(1 / (E - 1))".into()
            })
        );
    }

    #[test]
    fn precedence() {
        assert_eq!(eval("2^3^2", 0.0, 0.0), Complex64::new(512.0, 0.0));
        assert_eq!(eval("-E^2", 3.0, 0.0), Complex64::new(-9.0, 0.0));
        assert_eq!(eval("1-2-3", 0.0, 0.0), Complex64::new(-4.0, 0.0));
        assert_eq!(parse("-E^2").unwrap().to_string(), "(-(E ^ 2))");
    }

    #[test]
    fn imaginary_literals() {
        assert_eq!(eval("2.5i", 0.0, 0.0), Complex64::new(0.0, 2.5));
        assert_eq!(eval_constant("1-0.5i").unwrap(), Complex64::new(1.0, -0.5));
        assert!(matches!(parse("2in"), Err(ExprError::Syntax { .. })));
    }

    #[test]
    fn sampling() {
        let g = make_grid(10.0, 5).unwrap();
        let one = parse("1").unwrap();
        let k = sample(&one, None, &g, AlgebraTag::Free).unwrap();
        assert_eq!(k, OperatorKernel::identity(g, AlgebraTag::Free));

        let g = make_grid(8.0, 4).unwrap();
        let off = parse("exp(-(E-2)^2-(Ep-2)^2)").unwrap();
        let k = sample(&one, Some(&off), &g, AlgebraTag::Free).unwrap();
        let nodes = g.nodes();
        for j in 0..4 {
            for l in 0..4 {
                let direct = (-(nodes[j] - 2.0).powi(2) - (nodes[l] - 2.0).powi(2)).exp();
                assert!((k.offdiag()[(j, l)] - Complex64::new(direct, 0.0)).norm() < 1e-15);
            }
        }

        let bad = parse("Ep").unwrap();
        assert!(matches!(
            sample(&bad, None, &g, AlgebraTag::Free),
            Err(ExprError::DiagonalUsesEp(_))
        ));
    }
}
