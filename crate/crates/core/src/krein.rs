//! Formal bra-ket algebra over the 2N-dimensional Gamow space.
//!
//! The space is spanned by the decaying and growing Gamow vectors
//! `|D_1), |G_1), ..., |D_N), |G_N)`. It carries the indefinite (Krein)
//! pairing `(D_i|G_j) = (G_i|D_j) = δ_ij`, `(D_i|D_j) = (G_i|G_j) = 0`.
//! Vectors and operators are stored as coefficient tables over these formal
//! symbols, and every contraction goes through the pairing table. Concrete
//! 2N×2N matrices only appear in [`MetricPair`], which realizes the pairing
//! as a matrix `A` together with a square root `B`.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4};
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

/// Coefficients below this magnitude are dropped after composition.
pub const PRUNE_TOLERANCE: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KreinError {
    #[error("a Gamow space needs at least one resonance")]
    EmptySystem,
    #[error("symbol {symbol} does not exist in a space with {n} resonances")]
    SymbolOutOfRange { symbol: KetSymbol, n: usize },
    #[error("size mismatch: {left} resonances vs {right} resonances")]
    DimensionMismatch { left: usize, right: usize },
    #[error("invalid ket symbol `{0}` (expected D<i> or G<i>)")]
    BadSymbol(String),
}

/// Decaying or growing Gamow vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Kind {
    D,
    G,
}

impl Kind {
    pub fn partner(self) -> Kind {
        match self {
            Kind::D => Kind::G,
            Kind::G => Kind::D,
        }
    }
}

/// One of the 2N formal basis symbols. Ordering follows the basis list
/// `D_1, G_1, D_2, G_2, ...`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct KetSymbol {
    index: usize,
    kind: Kind,
}

impl KetSymbol {
    const LOWEST: KetSymbol = KetSymbol {
        index: 0,
        kind: Kind::D,
    };

    /// `index` is 1-based.
    pub fn new(index: usize, kind: Kind) -> Self {
        KetSymbol { index, kind }
    }

    pub fn d(index: usize) -> Self {
        KetSymbol::new(index, Kind::D)
    }

    pub fn g(index: usize) -> Self {
        KetSymbol::new(index, Kind::G)
    }

    pub fn index(self) -> usize {
        self.index
    }

    pub fn kind(self) -> Kind {
        self.kind
    }

    /// The unique symbol this one pairs to 1 with.
    pub fn partner(self) -> Self {
        KetSymbol::new(self.index, self.kind.partner())
    }

    /// Pseudometric pairing `(self|other)`.
    pub fn pairing(self, other: KetSymbol) -> f64 {
        if self.index == other.index && self.kind != other.kind {
            1.0
        } else {
            0.0
        }
    }

    /// Zero-based position in the ordered basis.
    pub fn position(self) -> usize {
        2 * (self.index - 1)
            + match self.kind {
                Kind::D => 0,
                Kind::G => 1,
            }
    }

    fn check(self, n: usize) -> Result<Self, KreinError> {
        if self.index == 0 || self.index > n {
            Err(KreinError::SymbolOutOfRange { symbol: self, n })
        } else {
            Ok(self)
        }
    }
}

impl fmt::Display for KetSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let k = match self.kind {
            Kind::D => 'D',
            Kind::G => 'G',
        };
        write!(f, "{k}{}", self.index)
    }
}

impl FromStr for KetSymbol {
    type Err = KreinError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let bad = || KreinError::BadSymbol(s.to_string());
        let mut chars = s.chars();
        let kind = match chars.next() {
            Some('D') | Some('d') => Kind::D,
            Some('G') | Some('g') => Kind::G,
            _ => return Err(bad()),
        };
        let index: usize = chars.as_str().parse().map_err(|_| bad())?;
        if index == 0 {
            return Err(bad());
        }
        Ok(KetSymbol::new(index, kind))
    }
}

/// The ordered basis `D_1, G_1, ..., D_N, G_N`.
pub fn basis(n: usize) -> Vec<KetSymbol> {
    (1..=n)
        .flat_map(|i| [KetSymbol::d(i), KetSymbol::g(i)])
        .collect()
}

/// Gram pairing of two symbols of an `n`-resonance system.
pub fn gram(n: usize, a: KetSymbol, b: KetSymbol) -> Result<Complex64, KreinError> {
    a.check(n)?;
    b.check(n)?;
    Ok(Complex64::new(a.pairing(b), 0.0))
}

fn same_size(left: usize, right: usize) -> Result<(), KreinError> {
    if left == right {
        Ok(())
    } else {
        Err(KreinError::DimensionMismatch { left, right })
    }
}

fn accumulate<K: Ord>(map: &mut BTreeMap<K, Complex64>, key: K, value: Complex64) {
    *map.entry(key).or_insert(Complex64::new(0.0, 0.0)) += value;
}

fn prune<K: Ord>(map: &mut BTreeMap<K, Complex64>) {
    map.retain(|_, c| c.norm() >= PRUNE_TOLERANCE);
}

/// A vector of the Gamow space as a table of coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct FormalVector {
    n: usize,
    coeffs: BTreeMap<KetSymbol, Complex64>,
}

impl FormalVector {
    pub fn zero(n: usize) -> Result<Self, KreinError> {
        if n == 0 {
            return Err(KreinError::EmptySystem);
        }
        Ok(FormalVector {
            n,
            coeffs: BTreeMap::new(),
        })
    }

    pub fn basis_vector(n: usize, symbol: KetSymbol) -> Result<Self, KreinError> {
        Self::from_coeffs(n, [(symbol, Complex64::new(1.0, 0.0))])
    }

    /// Repeated symbols are summed.
    pub fn from_coeffs<I>(n: usize, coeffs: I) -> Result<Self, KreinError>
    where
        I: IntoIterator<Item = (KetSymbol, Complex64)>,
    {
        let mut v = Self::zero(n)?;
        for (s, c) in coeffs {
            accumulate(&mut v.coeffs, s.check(n)?, c);
        }
        Ok(v)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, symbol: KetSymbol) -> Complex64 {
        self.coeffs.get(&symbol).copied().unwrap_or_default()
    }

    pub fn coeffs(&self) -> impl Iterator<Item = (KetSymbol, Complex64)> + '_ {
        self.coeffs.iter().map(|(s, c)| (*s, *c))
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        FormalVector {
            n: self.n,
            coeffs: self.coeffs.iter().map(|(s, c)| (*s, c * factor)).collect(),
        }
    }

    pub fn add(&self, other: &FormalVector) -> Result<Self, KreinError> {
        same_size(self.n, other.n)?;
        let mut out = self.clone();
        for (s, c) in other.coeffs() {
            accumulate(&mut out.coeffs, s, c);
        }
        Ok(out)
    }

    /// Largest coefficient magnitude (0 for the zero vector).
    pub fn max_norm(&self) -> f64 {
        self.coeffs.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Largest coefficient-wise difference magnitude.
    pub fn max_deviation(&self, other: &FormalVector) -> f64 {
        let keys: BTreeSet<_> = self.coeffs.keys().chain(other.coeffs.keys()).collect();
        keys.into_iter()
            .map(|k| (self.get(*k) - other.get(*k)).norm())
            .fold(0.0, f64::max)
    }
}

/// Krein pseudo-scalar product `(psi|phi)`, antilinear in `psi`.
pub fn pseudo_inner(psi: &FormalVector, phi: &FormalVector) -> Result<Complex64, KreinError> {
    same_size(psi.n, phi.n)?;
    Ok(psi
        .coeffs()
        .map(|(s, c)| c.conj() * phi.get(s.partner()))
        .sum())
}

/// A linear combination of dyads `|a)(b|`. Keys are `(ket, bra)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GamowOperator {
    n: usize,
    coeffs: BTreeMap<(KetSymbol, KetSymbol), Complex64>,
}

impl GamowOperator {
    pub fn zero(n: usize) -> Result<Self, KreinError> {
        if n == 0 {
            return Err(KreinError::EmptySystem);
        }
        Ok(GamowOperator {
            n,
            coeffs: BTreeMap::new(),
        })
    }

    /// `c·|ket)(bra|`.
    pub fn dyad(
        n: usize,
        ket: KetSymbol,
        bra: KetSymbol,
        c: Complex64,
    ) -> Result<Self, KreinError> {
        Self::from_entries(n, [((ket, bra), c)])
    }

    /// Repeated keys are summed.
    pub fn from_entries<I>(n: usize, entries: I) -> Result<Self, KreinError>
    where
        I: IntoIterator<Item = ((KetSymbol, KetSymbol), Complex64)>,
    {
        let mut op = Self::zero(n)?;
        for ((k, b), c) in entries {
            accumulate(&mut op.coeffs, (k.check(n)?, b.check(n)?), c);
        }
        Ok(op)
    }

    /// `Σ_i |D_i)(G_i| + |G_i)(D_i|`.
    pub fn identity(n: usize) -> Result<Self, KreinError> {
        let one = Complex64::new(1.0, 0.0);
        Self::from_entries(
            n,
            (1..=n).flat_map(|i| {
                [
                    ((KetSymbol::d(i), KetSymbol::g(i)), one),
                    ((KetSymbol::g(i), KetSymbol::d(i)), one),
                ]
            }),
        )
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, ket: KetSymbol, bra: KetSymbol) -> Complex64 {
        self.coeffs.get(&(ket, bra)).copied().unwrap_or_default()
    }

    pub fn entries(&self) -> impl Iterator<Item = ((KetSymbol, KetSymbol), Complex64)> + '_ {
        self.coeffs.iter().map(|(k, c)| (*k, *c))
    }

    pub fn support(&self) -> BTreeSet<(KetSymbol, KetSymbol)> {
        self.coeffs.keys().copied().collect()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.values().all(|c| c.norm() < PRUNE_TOLERANCE)
    }

    pub fn max_norm(&self) -> f64 {
        self.coeffs.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn max_deviation(&self, other: &GamowOperator) -> f64 {
        let keys: BTreeSet<_> = self.coeffs.keys().chain(other.coeffs.keys()).collect();
        keys.into_iter()
            .map(|&(k, b)| (self.get(k, b) - other.get(k, b)).norm())
            .fold(0.0, f64::max)
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        GamowOperator {
            n: self.n,
            coeffs: self.coeffs.iter().map(|(k, c)| (*k, c * factor)).collect(),
        }
    }

    /// `self + factor·other`.
    pub fn add_scaled(&self, other: &GamowOperator, factor: Complex64) -> Result<Self, KreinError> {
        same_size(self.n, other.n)?;
        let mut out = self.clone();
        for (k, c) in other.entries() {
            accumulate(&mut out.coeffs, k, c * factor);
        }
        prune(&mut out.coeffs);
        Ok(out)
    }

    pub fn add(&self, other: &GamowOperator) -> Result<Self, KreinError> {
        self.add_scaled(other, Complex64::new(1.0, 0.0))
    }

    pub fn sub(&self, other: &GamowOperator) -> Result<Self, KreinError> {
        self.add_scaled(other, Complex64::new(-1.0, 0.0))
    }

    /// Formal dagger: `|a)(b|·c ↦ |b)(a|·c*`.
    pub fn adjoint(&self) -> Self {
        GamowOperator {
            n: self.n,
            coeffs: self
                .coeffs
                .iter()
                .map(|(&(k, b), c)| ((b, k), c.conj()))
                .collect(),
        }
    }

    /// Product through the Gram rule `|a)(c| · |d)(b| = (c|d) |a)(b|`.
    pub fn compose(&self, other: &GamowOperator) -> Result<Self, KreinError> {
        same_size(self.n, other.n)?;
        let mut out = BTreeMap::new();
        for (&(ket, inner), x) in &self.coeffs {
            let d = inner.partner();
            for (&(_, bra), y) in other
                .coeffs
                .range((d, KetSymbol::LOWEST)..)
                .take_while(|((k, _), _)| *k == d)
            {
                accumulate(&mut out, (ket, bra), x * y);
            }
        }
        prune(&mut out);
        Ok(GamowOperator {
            n: self.n,
            coeffs: out,
        })
    }

    pub fn apply(&self, v: &FormalVector) -> Result<FormalVector, KreinError> {
        same_size(self.n, v.n)?;
        let mut out = BTreeMap::new();
        for (&(ket, bra), x) in &self.coeffs {
            let y = v.get(bra.partner());
            if y != Complex64::default() {
                accumulate(&mut out, ket, x * y);
            }
        }
        prune(&mut out);
        Ok(FormalVector {
            n: self.n,
            coeffs: out,
        })
    }
}

impl fmt::Display for GamowOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeffs.is_empty() {
            return write!(f, "0");
        }
        for (i, (&(k, b), c)) in self.coeffs.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({c})|{k})({b}|")?;
        }
        Ok(())
    }
}

/// `[O1, O2] = O1·O2 − O2·O1` in the Gram algebra.
pub fn commutator(o1: &GamowOperator, o2: &GamowOperator) -> Result<GamowOperator, KreinError> {
    o1.compose(o2)?.sub(&o2.compose(o1)?)
}

/// The pseudometric `A` and the chosen square root `B` with `B·B = A`.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricPair {
    pub a: DMatrix<f64>,
    pub b: DMatrix<Complex64>,
}

/// `(−i)^{1/2}` on the principal branch.
pub fn sqrt_minus_i() -> Complex64 {
    Complex64::from_polar(1.0, -FRAC_PI_4)
}

/// `i^{1/2}` on the principal branch.
pub fn sqrt_i() -> Complex64 {
    Complex64::from_polar(1.0, FRAC_PI_4)
}

/// The 2×2 block of `B`: `(−i)^{1/2}·[[i√2/2, √2/2], [√2/2, i√2/2]]`.
pub fn root_block() -> [[Complex64; 2]; 2] {
    let s = Complex64::new(FRAC_1_SQRT_2, 0.0);
    let is = Complex64::new(0.0, FRAC_1_SQRT_2);
    let p = sqrt_minus_i();
    [[p * is, p * s], [p * s, p * is]]
}

pub fn build_metric(n: usize) -> Result<MetricPair, KreinError> {
    if n == 0 {
        return Err(KreinError::EmptySystem);
    }
    let dim = 2 * n;
    let block = root_block();
    let mut a = DMatrix::<f64>::zeros(dim, dim);
    let mut b = DMatrix::<Complex64>::zeros(dim, dim);
    for r in 0..n {
        let o = 2 * r;
        a[(o, o + 1)] = 1.0;
        a[(o + 1, o)] = 1.0;
        for (i, row) in block.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                b[(o + i, o + j)] = *v;
            }
        }
    }
    Ok(MetricPair { a, b })
}

impl MetricPair {
    /// Largest entry of `|B·B − A|`.
    pub fn square_residual(&self) -> f64 {
        let bb = &self.b * &self.b;
        bb.iter()
            .zip(self.a.iter())
            .map(|(x, a)| (x - Complex64::new(*a, 0.0)).norm())
            .fold(0.0, f64::max)
    }
}
