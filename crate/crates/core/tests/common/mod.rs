#![allow(dead_code)]

use commutclass::expr::ExprError;
use commutclass::krein::basis;
use commutclass::*;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::{E as EULER, PI};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn rand_c(rng: &mut ChaCha8Rng) -> Complex64 {
    c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

pub fn rand_op(rng: &mut ChaCha8Rng, n: usize) -> GamowOperator {
    let b = basis(n);
    let mut entries = Vec::new();
    for &k in &b {
        for &br in &b {
            entries.push(((k, br), rand_c(rng)));
        }
    }
    GamowOperator::from_entries(n, entries).unwrap()
}

pub fn rand_resonances(rng: &mut ChaCha8Rng, n: usize) -> Vec<Resonance> {
    (0..n)
        .map(|_| Resonance::new(rng.gen_range(-3.0..3.0), rng.gen_range(0.1..2.0)).unwrap())
        .collect()
}

pub fn rand_kernel(rng: &mut ChaCha8Rng, grid: EnergyGrid) -> OperatorKernel {
    let m = grid.len();
    let d = DVector::from_fn(m, |_, _| rand_c(rng));
    let k = DMatrix::from_fn(m, m, |_, _| rand_c(rng));
    OperatorKernel::new(grid, AlgebraTag::Free, d, k).unwrap()
}

/// Dense form of a formal operator in the basis `D1, G1, D2, G2, ...`.
pub fn to_matrix(op: &GamowOperator) -> DMatrix<Complex64> {
    let n = op.dim();
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    for ((k, b), v) in op.entries() {
        m[(k.position(), b.position())] = v;
    }
    m
}

/// The pairing matrix written out entry by entry.
pub fn pairing_matrix(n: usize) -> DMatrix<Complex64> {
    let mut a = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        a[(2 * i, 2 * i + 1)] = c(1.0, 0.0);
        a[(2 * i + 1, 2 * i)] = c(1.0, 0.0);
    }
    a
}

pub fn max_abs(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|x| x.norm()).fold(0.0, f64::max)
}

/// `(text, E, Ep, expected)`; values worked out by hand.
pub fn parser_corpus() -> Vec<(&'static str, f64, f64, Complex64)> {
    let s3 = 3f64.sqrt();
    vec![
        ("1+2*3", 0.0, 0.0, c(7.0, 0.0)),
        ("(1+2)*3", 0.0, 0.0, c(9.0, 0.0)),
        ("2^3^2", 0.0, 0.0, c(512.0, 0.0)),
        ("-E^2", 3.0, 0.0, c(-9.0, 0.0)),
        ("1-2-3", 0.0, 0.0, c(-4.0, 0.0)),
        ("8/4/2", 0.0, 0.0, c(1.0, 0.0)),
        ("E*Ep", 3.0, 4.0, c(12.0, 0.0)),
        ("exp(i*pi)", 0.0, 0.0, c(-1.0, 0.0)),
        ("sqrt(-4)", 0.0, 0.0, c(0.0, 2.0)),
        ("abs(-3+4i)", 0.0, 0.0, c(5.0, 0.0)),
        ("2.5i", 0.0, 0.0, c(0.0, 2.5)),
        ("i^2", 0.0, 0.0, c(-1.0, 0.0)),
        ("sin(pi/2)", 0.0, 0.0, c(1.0, 0.0)),
        ("cos(0)", 0.0, 0.0, c(1.0, 0.0)),
        ("exp(1)", 0.0, 0.0, c(EULER, 0.0)),
        ("1/(E + i)", 3.0, 0.0, c(0.3, -0.1)),
        ("-(-(-1))", 0.0, 0.0, c(-1.0, 0.0)),
        ("2*-3", 0.0, 0.0, c(-6.0, 0.0)),
        ("E - Ep", 3.0, 4.0, c(-1.0, 0.0)),
        ("(-8)^(1/3)", 0.0, 0.0, c(1.0, s3)),
        ("2^(-1)", 0.0, 0.0, c(0.5, 0.0)),
        ("1e-3*1e3", 0.0, 0.0, c(1.0, 0.0)),
        ("pi", 0.0, 0.0, c(PI, 0.0)),
        ("sqrt(2)^2", 0.0, 0.0, c(2.0, 0.0)),
        ("exp(-(E-2)^2-(Ep-2)^2)", 2.0, 3.0, c(1.0 / EULER, 0.0)),
        ("sin(E)^2+cos(E)^2", 0.7, 0.0, c(1.0, 0.0)),
        ("abs(E-Ep)", 3.0, 4.0, c(1.0, 0.0)),
        ("(1+i)*(1-i)", 0.0, 0.0, c(2.0, 0.0)),
        ("i*i*i*i", 0.0, 0.0, c(1.0, 0.0)),
        ("10/4 + 0^2", 0.0, 0.0, c(2.5, 0.0)),
    ]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ErrorKind {
    Syntax,
    Unknown,
    Arity,
    NonFinite,
}

pub fn kind_of(e: &ExprError) -> Option<ErrorKind> {
    match e {
        ExprError::Syntax { .. } => Some(ErrorKind::Syntax),
        ExprError::UnknownIdentifier { .. } => Some(ErrorKind::Unknown),
        ExprError::Arity { .. } => Some(ErrorKind::Arity),
        ExprError::NonFinite { .. } => Some(ErrorKind::NonFinite),
        _ => None,
    }
}

/// `(text, E, expected kind)`; evaluation errors need the given `E`.
pub fn parser_error_corpus() -> Vec<(&'static str, f64, ErrorKind)> {
    vec![
        ("foo(E)", 0.0, ErrorKind::Unknown),
        ("x + 1", 0.0, ErrorKind::Unknown),
        ("log(E)", 0.0, ErrorKind::Unknown),
        ("exp(E, Ep)", 0.0, ErrorKind::Arity),
        ("sin()", 0.0, ErrorKind::Arity),
        ("(E + 1", 0.0, ErrorKind::Syntax),
        ("1 +", 0.0, ErrorKind::Syntax),
        ("2 $ 3", 0.0, ErrorKind::Syntax),
        ("", 0.0, ErrorKind::Syntax),
        ("E E", 0.0, ErrorKind::Syntax),
        ("1/(E-1)", 1.0, ErrorKind::NonFinite),
        ("1/0", 0.0, ErrorKind::NonFinite),
    ]
}

pub fn parse_and_eval(text: &str, e: f64, ep: f64) -> Result<Complex64, ExprError> {
    parse(text)?.evaluate(e, ep)
}

pub fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_commutclass")
}
