//! Discretized algebra of operators compatible with a free Hamiltonian on
//! the energy half-line.
//!
//! An operator is a diagonal function `O(E)` plus an off-diagonal kernel
//! `O(E, E')`, both sampled on a midpoint grid of `[0, E_max]`. The
//! continuum normalization `⟨E|E'⟩ = δ(E − E')` becomes `δ_jk / ΔE`, which
//! fixes the product rule
//!
//! ```text
//! (O1·O2)(E)     = O1(E)·O2(E)
//! (O1·O2)(E, E') = O1(E)·O2(E, E') + O1(E, E')·O2(E') + ∫ O1(E, w)·O2(w, E') dw
//! ```
//!
//! and makes `diag(d) + ΔE·K` an algebra homomorphism into dense matrices
//! (see [`OperatorKernel::dense_rep`]).
//!
//! Kernels carry an algebra tag. Conjugation by the Møller operators maps the
//! free algebra onto the in/out algebras without changing the kernel
//! functions, so it is realized as retagging; operations never mix tags.

use std::f64::consts::PI;
use std::fmt;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::evolution::fmt_num;

/// Threshold used by [`OperatorKernel::is_observable`].
pub const OBSERVABLE_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EnergyError {
    #[error("invalid grid (E_max = {e_max}, M = {m}): {reason}")]
    InvalidGrid {
        e_max: f64,
        m: usize,
        reason: &'static str,
    },
    #[error("operands live on different grids")]
    GridMismatch,
    #[error("cannot combine {left} and {right} elements")]
    TagMismatch { left: AlgebraTag, right: AlgebraTag },
    #[error("only FREE kernels can be conjugated by a Møller operator (got {0})")]
    RetagNonFree(AlgebraTag),
    #[error("|t| = {t} exceeds the Nyquist bound {bound} for this grid")]
    NyquistExceeded { t: f64, bound: f64 },
    #[error("{what} has shape {found}, expected {expected}")]
    Shape {
        what: &'static str,
        expected: String,
        found: String,
    },
    #[error("{0} contains non-finite values")]
    NonFinite(&'static str),
    #[error("kernel JSON: {0}")]
    Json(String),
}

/// Midpoint grid `E_j = (j + ½)·ΔE`, `ΔE = E_max / M`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyGrid {
    #[serde(rename = "E_max")]
    e_max: f64,
    #[serde(rename = "M")]
    m: usize,
}

impl EnergyGrid {
    pub fn new(e_max: f64, m: usize) -> Result<Self, EnergyError> {
        let invalid = |reason| EnergyError::InvalidGrid { e_max, m, reason };
        if !e_max.is_finite() || e_max <= 0.0 {
            return Err(invalid("E_max must be finite and > 0"));
        }
        if m == 0 {
            return Err(invalid("M must be at least 1"));
        }
        Ok(EnergyGrid { e_max, m })
    }

    pub fn e_max(&self) -> f64 {
        self.e_max
    }

    pub fn len(&self) -> usize {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        self.m == 0
    }

    pub fn spacing(&self) -> f64 {
        self.e_max / self.m as f64
    }

    pub fn node(&self, j: usize) -> f64 {
        (j as f64 + 0.5) * self.spacing()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.m).map(|j| self.node(j)).collect()
    }

    /// `π / (4·ΔE)`.
    pub fn nyquist_tmax(&self) -> f64 {
        PI / (4.0 * self.spacing())
    }

    fn check_time(&self, t: f64) -> Result<(), EnergyError> {
        let bound = self.nyquist_tmax();
        if !t.is_finite() || t.abs() > bound * (1.0 + 1e-12) {
            return Err(EnergyError::NyquistExceeded { t, bound });
        }
        Ok(())
    }
}

pub fn make_grid(e_max: f64, m: usize) -> Result<EnergyGrid, EnergyError> {
    EnergyGrid::new(e_max, m)
}

/// Which algebra an element belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum AlgebraTag {
    Free,
    In,
    Out,
}

impl fmt::Display for AlgebraTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AlgebraTag::Free => "FREE",
            AlgebraTag::In => "IN",
            AlgebraTag::Out => "OUT",
        })
    }
}

impl std::str::FromStr for AlgebraTag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "FREE" => Ok(AlgebraTag::Free),
            "IN" => Ok(AlgebraTag::In),
            "OUT" => Ok(AlgebraTag::Out),
            other => Err(format!("unknown algebra tag `{other}` (free, in, out)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MollerSign {
    In,
    Out,
}

fn check_compatible(
    g1: &EnergyGrid,
    t1: AlgebraTag,
    g2: &EnergyGrid,
    t2: AlgebraTag,
) -> Result<(), EnergyError> {
    if g1 != g2 {
        return Err(EnergyError::GridMismatch);
    }
    if t1 != t2 {
        return Err(EnergyError::TagMismatch {
            left: t1,
            right: t2,
        });
    }
    Ok(())
}

fn check_shapes(
    grid: &EnergyGrid,
    d: &DVector<Complex64>,
    k: &DMatrix<Complex64>,
    what: (&'static str, &'static str),
) -> Result<(), EnergyError> {
    let m = grid.len();
    if d.len() != m {
        return Err(EnergyError::Shape {
            what: what.0,
            expected: m.to_string(),
            found: d.len().to_string(),
        });
    }
    if k.shape() != (m, m) {
        return Err(EnergyError::Shape {
            what: what.1,
            expected: format!("{m}x{m}"),
            found: format!("{}x{}", k.nrows(), k.ncols()),
        });
    }
    if d.iter().any(|c| !c.is_finite()) {
        return Err(EnergyError::NonFinite(what.0));
    }
    if k.iter().any(|c| !c.is_finite()) {
        return Err(EnergyError::NonFinite(what.1));
    }
    Ok(())
}

/// Complex product through four real products, which take nalgebra's
/// blocked f64 kernel.
fn complex_matmul(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let (ar, ai) = (a.map(|c| c.re), a.map(|c| c.im));
    let (br, bi) = (b.map(|c| c.re), b.map(|c| c.im));
    let re = &ar * &br - &ai * &bi;
    let im = &ar * &bi + &ai * &br;
    re.zip_map(&im, Complex64::new)
}

/// `e^{it(E_j − E_k)}` for all node pairs.
fn phase_matrix(grid: &EnergyGrid, t: f64) -> DMatrix<Complex64> {
    let nodes = grid.nodes();
    DMatrix::from_fn(grid.len(), grid.len(), |j, k| {
        Complex64::from_polar(1.0, t * (nodes[j] - nodes[k]))
    })
}

/// An element of the free, in or out algebra.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorKernel {
    grid: EnergyGrid,
    tag: AlgebraTag,
    d: DVector<Complex64>,
    k: DMatrix<Complex64>,
}

impl OperatorKernel {
    pub fn new(
        grid: EnergyGrid,
        tag: AlgebraTag,
        d: DVector<Complex64>,
        k: DMatrix<Complex64>,
    ) -> Result<Self, EnergyError> {
        check_shapes(&grid, &d, &k, ("d", "K"))?;
        Ok(OperatorKernel { grid, tag, d, k })
    }

    pub fn identity(grid: EnergyGrid, tag: AlgebraTag) -> Self {
        let m = grid.len();
        OperatorKernel {
            grid,
            tag,
            d: DVector::from_element(m, Complex64::new(1.0, 0.0)),
            k: DMatrix::zeros(m, m),
        }
    }

    pub fn zero(grid: EnergyGrid, tag: AlgebraTag) -> Self {
        let m = grid.len();
        OperatorKernel {
            grid,
            tag,
            d: DVector::zeros(m),
            k: DMatrix::zeros(m, m),
        }
    }

    pub fn grid(&self) -> &EnergyGrid {
        &self.grid
    }

    pub fn tag(&self) -> AlgebraTag {
        self.tag
    }

    pub fn diag(&self) -> &DVector<Complex64> {
        &self.d
    }

    pub fn offdiag(&self) -> &DMatrix<Complex64> {
        &self.k
    }

    /// `Ω_± O Ω_±†`: same kernel data, new algebra.
    pub fn moller_retag(&self, sign: MollerSign) -> Result<Self, EnergyError> {
        if self.tag != AlgebraTag::Free {
            return Err(EnergyError::RetagNonFree(self.tag));
        }
        let mut out = self.clone();
        out.tag = match sign {
            MollerSign::In => AlgebraTag::In,
            MollerSign::Out => AlgebraTag::Out,
        };
        Ok(out)
    }

    fn check_with(&self, other: &OperatorKernel) -> Result<(), EnergyError> {
        check_compatible(&self.grid, self.tag, &other.grid, other.tag)
    }

    pub fn product(&self, other: &OperatorKernel) -> Result<Self, EnergyError> {
        self.check_with(other)?;
        let de = Complex64::new(self.grid.spacing(), 0.0);
        let d = self.d.component_mul(&other.d);
        let mut k = complex_matmul(&self.k, &other.k) * de;
        let m = self.grid.len();
        for l in 0..m {
            for j in 0..m {
                k[(j, l)] += self.d[j] * other.k[(j, l)] + self.k[(j, l)] * other.d[l];
            }
        }
        Ok(OperatorKernel {
            grid: self.grid,
            tag: self.tag,
            d,
            k,
        })
    }

    pub fn add_scaled(
        &self,
        other: &OperatorKernel,
        factor: Complex64,
    ) -> Result<Self, EnergyError> {
        self.check_with(other)?;
        Ok(OperatorKernel {
            grid: self.grid,
            tag: self.tag,
            d: &self.d + &other.d * factor,
            k: &self.k + &other.k * factor,
        })
    }

    /// `O1·O2 − O2·O1`. The diagonal part is identically zero.
    pub fn commutator(&self, other: &OperatorKernel) -> Result<Self, EnergyError> {
        self.product(other)?
            .add_scaled(&other.product(self)?, Complex64::new(-1.0, 0.0))
    }

    /// Heisenberg evolution `K_jk ← e^{it(E_j − E_k)}·K_jk`, restricted to
    /// `|t| ≤ nyquist_tmax`.
    pub fn evolve(&self, t: f64) -> Result<Self, EnergyError> {
        self.grid.check_time(t)?;
        Ok(self.evolve_unchecked(t))
    }

    /// [`Self::evolve`] without the Nyquist guard.
    pub fn evolve_unchecked(&self, t: f64) -> Self {
        let mut out = self.clone();
        out.k.component_mul_assign(&phase_matrix(&self.grid, t));
        out
    }

    /// The `t → ±∞` weak limit: diagonal part only.
    pub fn weak_limit(&self) -> Self {
        let m = self.grid.len();
        OperatorKernel {
            grid: self.grid,
            tag: self.tag,
            d: self.d.clone(),
            k: DMatrix::zeros(m, m),
        }
    }

    /// `d` real and `K_jk = conj(K_kj)`, both to [`OBSERVABLE_TOLERANCE`].
    pub fn is_observable(&self) -> bool {
        let m = self.grid.len();
        self.d.iter().all(|c| c.im.abs() < OBSERVABLE_TOLERANCE)
            && (0..m).all(|j| {
                (0..m)
                    .all(|k| (self.k[(j, k)] - self.k[(k, j)].conj()).norm() < OBSERVABLE_TOLERANCE)
            })
    }

    /// `diag(d) + ΔE·K`.
    pub fn dense_rep(&self) -> DMatrix<Complex64> {
        let mut dense = &self.k * Complex64::new(self.grid.spacing(), 0.0);
        for j in 0..self.grid.len() {
            dense[(j, j)] += self.d[j];
        }
        dense
    }

    pub fn max_deviation(&self, other: &OperatorKernel) -> f64 {
        let dd = (&self.d - &other.d)
            .iter()
            .map(|c| c.norm())
            .fold(0.0, f64::max);
        let dk = (&self.k - &other.k)
            .iter()
            .map(|c| c.norm())
            .fold(0.0, f64::max);
        dd.max(dk)
    }

    pub fn is_zero(&self) -> bool {
        self.d
            .iter()
            .chain(self.k.iter())
            .all(|c| *c == Complex64::default())
    }

    pub fn to_json(&self) -> String {
        let m = self.grid.len();
        let doc = KernelJson {
            grid: self.grid,
            tag: self.tag,
            d: self.d.iter().map(|c| [c.re, c.im]).collect(),
            k: (0..m)
                .flat_map(|j| (0..m).map(move |l| (j, l)))
                .map(|(j, l)| {
                    let c = self.k[(j, l)];
                    [c.re, c.im]
                })
                .collect(),
        };
        serde_json::to_string(&doc).expect("kernel data serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, EnergyError> {
        let doc: KernelJson =
            serde_json::from_str(text).map_err(|e| EnergyError::Json(e.to_string()))?;
        let grid = EnergyGrid::new(doc.grid.e_max, doc.grid.m)?;
        let m = grid.len();
        if doc.k.len() != m * m {
            return Err(EnergyError::Shape {
                what: "K",
                expected: (m * m).to_string(),
                found: doc.k.len().to_string(),
            });
        }
        let d = DVector::from_iterator(
            doc.d.len(),
            doc.d.iter().map(|p| Complex64::new(p[0], p[1])),
        );
        let k = DMatrix::from_row_iterator(m, m, doc.k.iter().map(|p| Complex64::new(p[0], p[1])));
        OperatorKernel::new(grid, doc.tag, d, k)
    }
}

/// On-disk kernel layout: grid header, tag, `d` and row-major `K` as
/// `[re, im]` pairs.
#[derive(Serialize, Deserialize)]
struct KernelJson {
    grid: EnergyGrid,
    tag: AlgebraTag,
    d: Vec<[f64; 2]>,
    #[serde(rename = "K")]
    k: Vec<[f64; 2]>,
}

/// A regular functional `ρ = ∫ρ(E)(E| + ∫∫ρ(E,E')(E E'|`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateFunctional {
    grid: EnergyGrid,
    tag: AlgebraTag,
    rho_d: DVector<Complex64>,
    rho_k: DMatrix<Complex64>,
}

impl StateFunctional {
    pub fn new(
        grid: EnergyGrid,
        tag: AlgebraTag,
        rho_d: DVector<Complex64>,
        rho_k: DMatrix<Complex64>,
    ) -> Result<Self, EnergyError> {
        check_shapes(&grid, &rho_d, &rho_k, ("rho_d", "rho_K"))?;
        Ok(StateFunctional {
            grid,
            tag,
            rho_d,
            rho_k,
        })
    }

    pub fn grid(&self) -> &EnergyGrid {
        &self.grid
    }

    pub fn tag(&self) -> AlgebraTag {
        self.tag
    }

    pub fn with_tag(mut self, tag: AlgebraTag) -> Self {
        self.tag = tag;
        self
    }

    /// `(ρ|O(t)) = Σ ρd_j d_j ΔE + Σ e^{it(E_j−E_k)} ρK_jk K_jk ΔE²`.
    /// No Nyquist guard is applied here.
    pub fn pair(&self, op: &OperatorKernel, t: f64) -> Result<Complex64, EnergyError> {
        check_compatible(&self.grid, self.tag, &op.grid, op.tag)?;
        let de = self.grid.spacing();
        let diag: Complex64 = self.rho_d.iter().zip(op.d.iter()).map(|(r, d)| r * d).sum();
        let off: Complex64 = if t == 0.0 {
            self.rho_k.iter().zip(op.k.iter()).map(|(r, k)| r * k).sum()
        } else {
            phase_matrix(&self.grid, t)
                .iter()
                .zip(self.rho_k.iter().zip(op.k.iter()))
                .map(|(p, (r, k))| p * r * k)
                .sum()
        };
        Ok(diag * de + off * (de * de))
    }
}

/// One sample of a commutator decay curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub t: f64,
    pub value: Complex64,
}

impl CurvePoint {
    pub fn abs(&self) -> f64 {
        self.value.norm()
    }
}

/// `(ρ | [O1(t), O2(t)])` at each requested time.
pub fn decay_curve(
    rho: &StateFunctional,
    o1: &OperatorKernel,
    o2: &OperatorKernel,
    times: &[f64],
) -> Result<Vec<CurvePoint>, EnergyError> {
    curve(rho, o1, o2, times, true)
}

/// [`decay_curve`] without the Nyquist guard, for deliberate aliasing studies.
pub fn decay_curve_unchecked(
    rho: &StateFunctional,
    o1: &OperatorKernel,
    o2: &OperatorKernel,
    times: &[f64],
) -> Result<Vec<CurvePoint>, EnergyError> {
    curve(rho, o1, o2, times, false)
}

fn curve(
    rho: &StateFunctional,
    o1: &OperatorKernel,
    o2: &OperatorKernel,
    times: &[f64],
    guarded: bool,
) -> Result<Vec<CurvePoint>, EnergyError> {
    o1.check_with(o2)?;
    check_compatible(&rho.grid, rho.tag, &o1.grid, o1.tag)?;
    let evolve = |o: &OperatorKernel, t: f64| {
        if guarded {
            o.evolve(t)
        } else {
            Ok(o.evolve_unchecked(t))
        }
    };
    times
        .par_iter()
        .map(|&t| {
            let c = evolve(o1, t)?.commutator(&evolve(o2, t)?)?;
            Ok(CurvePoint {
                t,
                value: rho.pair(&c, 0.0)?,
            })
        })
        .collect()
}

/// CSV body with header `t,re,im,abs`.
pub fn curve_to_csv(points: &[CurvePoint]) -> String {
    let mut out = String::from("t,re,im,abs\n");
    for p in points {
        out.push_str(&format!(
            "{},{},{},{}\n",
            fmt_num(p.t),
            fmt_num(p.value.re),
            fmt_num(p.value.im),
            fmt_num(p.abs())
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn grid(e: f64, m: usize) -> EnergyGrid {
        make_grid(e, m).unwrap()
    }

    #[test]
    fn grid_examples() {
        let g = grid(10.0, 5);
        assert_eq!(g.nodes(), vec![1.0, 3.0, 5.0, 7.0, 9.0]);
        assert_eq!(g.spacing(), 2.0);
        assert_eq!(grid(1.0, 1).nodes(), vec![0.5]);
        assert!(make_grid(0.0, 4).is_err());
        assert!(make_grid(-1.0, 4).is_err());
        assert!(make_grid(1.0, 0).is_err());
    }

    #[test]
    fn nyquist_examples() {
        assert!((grid(10.0, 5).nyquist_tmax() - PI / 8.0).abs() < 1e-15);
        let a = grid(8.0, 64).nyquist_tmax();
        let b = grid(8.0, 128).nyquist_tmax();
        assert!((b - 2.0 * a).abs() < 1e-12);
        let g = grid(8.0, 16);
        let op = OperatorKernel::identity(g, AlgebraTag::Free);
        match op.evolve(2.0 * g.nyquist_tmax()) {
            Err(EnergyError::NyquistExceeded { bound, .. }) => assert_eq!(bound, g.nyquist_tmax()),
            other => panic!("expected Nyquist error, got {other:?}"),
        }
        assert!(op.evolve(g.nyquist_tmax()).is_ok());
    }

    #[test]
    fn identity_properties() {
        let g = grid(4.0, 6);
        let id = OperatorKernel::identity(g, AlgebraTag::Free);
        assert!(id.is_observable());
        assert_eq!(id.weak_limit(), id);
        assert_eq!(id.dense_rep(), DMatrix::identity(6, 6));
    }

    #[test]
    fn retag_rules() {
        let g = grid(4.0, 3);
        let op = OperatorKernel::new(
            g,
            AlgebraTag::Free,
            DVector::from_element(3, c(2.0, 0.0)),
            DMatrix::from_element(3, 3, c(0.1, 0.3)),
        )
        .unwrap();
        let inn = op.moller_retag(MollerSign::In).unwrap();
        let out = op.moller_retag(MollerSign::Out).unwrap();
        assert_eq!(inn.diag(), op.diag());
        assert_eq!(inn.offdiag(), op.offdiag());
        assert_eq!(inn.tag(), AlgebraTag::In);
        assert!(matches!(
            inn.product(&out),
            Err(EnergyError::TagMismatch { .. })
        ));
        assert!(matches!(
            inn.moller_retag(MollerSign::Out),
            Err(EnergyError::RetagNonFree(AlgebraTag::In))
        ));
        assert!(matches!(
            op.product(&inn),
            Err(EnergyError::TagMismatch { .. })
        ));
    }

    #[test]
    fn grid_mismatch_rejected() {
        let a = OperatorKernel::identity(grid(4.0, 3), AlgebraTag::Free);
        let b = OperatorKernel::identity(grid(5.0, 3), AlgebraTag::Free);
        assert_eq!(a.product(&b), Err(EnergyError::GridMismatch));
    }

    #[test]
    fn diagonal_product_is_pointwise() {
        let g = grid(3.0, 4);
        let d1 = DVector::from_fn(4, |j, _| c(j as f64, 1.0));
        let d2 = DVector::from_fn(4, |j, _| c(1.0, -(j as f64)));
        let z = DMatrix::zeros(4, 4);
        let a = OperatorKernel::new(g, AlgebraTag::Free, d1.clone(), z.clone()).unwrap();
        let b = OperatorKernel::new(g, AlgebraTag::Free, d2.clone(), z).unwrap();
        let p = a.product(&b).unwrap();
        assert_eq!(p.diag(), &d1.component_mul(&d2));
        assert!(p.offdiag().iter().all(|c| *c == Complex64::default()));
        assert!(a.commutator(&b).unwrap().is_zero());
    }

    #[test]
    fn shape_and_finiteness_checked() {
        let g = grid(3.0, 4);
        let bad = OperatorKernel::new(g, AlgebraTag::Free, DVector::zeros(3), DMatrix::zeros(4, 4));
        assert!(matches!(bad, Err(EnergyError::Shape { what: "d", .. })));
        let mut k = DMatrix::zeros(4, 4);
        k[(1, 2)] = c(f64::NAN, 0.0);
        let bad = OperatorKernel::new(g, AlgebraTag::Free, DVector::zeros(4), k);
        assert_eq!(bad, Err(EnergyError::NonFinite("K")));
    }

    #[test]
    fn observability_examples() {
        let g = grid(5.0, 5);
        let nodes = g.nodes();
        let k = DMatrix::from_fn(5, 5, |j, l| c(0.0, nodes[j] - nodes[l]));
        let op = OperatorKernel::new(
            g,
            AlgebraTag::Free,
            DVector::from_element(5, c(1.0, 0.0)),
            k,
        )
        .unwrap();
        assert!(op.is_observable());
        let d = DVector::from_element(5, c(0.0, 1.0));
        let op = OperatorKernel::new(g, AlgebraTag::Free, d, DMatrix::zeros(5, 5)).unwrap();
        assert!(!op.is_observable());
    }

    #[test]
    fn product_of_observables_need_not_be_observable() {
        // Two real symmetric kernels whose product is not symmetric.
        let g = grid(2.0, 2);
        let z = DVector::zeros(2);
        let k1 =
            DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
        let k2 =
            DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(2.0, 0.0)]);
        let a = OperatorKernel::new(g, AlgebraTag::Free, z.clone(), k1).unwrap();
        let b = OperatorKernel::new(g, AlgebraTag::Free, z, k2).unwrap();
        assert!(a.is_observable() && b.is_observable());
        assert!(!a.product(&b).unwrap().is_observable());
    }

    #[test]
    fn pair_of_identity_is_energy_range() {
        let g = grid(10.0, 5);
        let rho = StateFunctional::new(
            g,
            AlgebraTag::Free,
            DVector::from_element(5, c(1.0, 0.0)),
            DMatrix::zeros(5, 5),
        )
        .unwrap();
        let id = OperatorKernel::identity(g, AlgebraTag::Free);
        assert!((rho.pair(&id, 0.0).unwrap() - c(10.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn diagonal_kernel_does_not_evolve() {
        let g = grid(6.0, 8);
        let d = DVector::from_fn(8, |j, _| c(j as f64, 0.5));
        let op = OperatorKernel::new(g, AlgebraTag::Free, d, DMatrix::zeros(8, 8)).unwrap();
        for t in [0.0, 0.3, -1.0, g.nyquist_tmax()] {
            assert_eq!(op.evolve(t).unwrap(), op);
        }
    }

    #[test]
    fn json_round_trip() {
        let g = grid(3.0, 3);
        let op = OperatorKernel::new(
            g,
            AlgebraTag::Out,
            DVector::from_fn(3, |j, _| c(j as f64, -0.25)),
            DMatrix::from_fn(3, 3, |j, l| c(j as f64 * 0.1, l as f64)),
        )
        .unwrap();
        let text = op.to_json();
        assert!(text.contains("\"grid\":{\"E_max\":3.0,\"M\":3}"));
        assert!(text.contains("\"tag\":\"OUT\""));
        assert_eq!(OperatorKernel::from_json(&text).unwrap(), op);
        assert!(OperatorKernel::from_json(
            "{\"grid\":{\"E_max\":1.0,\"M\":2},\"tag\":\"FREE\",\"d\":[[0,0],[0,0]],\"K\":[]}"
        )
        .is_err());
    }
}
