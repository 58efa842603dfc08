//! Time reversal on concrete Gamow-space columns and the non-invariance of
//! the formally Hermitian Hamiltonian.
//!
//! Concrete vectors live in the orthonormal basis `|D_1⟩, |G_1⟩, ...` with
//! the Gamow vectors realized as `|D_i) = B|D_i⟩` and `|G_i) = B†|G_i⟩`.
//! The antiunitary operator acts blockwise as `(x, y) ↦ (y*, x*)`.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::evolution::Resonance;
use crate::krein::{build_metric, sqrt_i, KreinError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TimeReversalError {
    #[error("concrete vectors need an even number of components, got {0}")]
    OddLength(usize),
    #[error("resonance index {index} out of range 1..={n}")]
    IndexOutOfRange { index: usize, n: usize },
    #[error(transparent)]
    Krein(#[from] KreinError),
}

/// A column of `2N` complex components.
#[derive(Debug, Clone, PartialEq)]
pub struct ConcreteVector(pub Vec<Complex64>);

impl ConcreteVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        ConcreteVector(self.0.iter().map(|x| x * factor).collect())
    }

    /// Largest component-wise difference magnitude; lengths must agree.
    pub fn max_deviation(&self, other: &ConcreteVector) -> f64 {
        assert_eq!(self.len(), other.len(), "length mismatch");
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

/// `(B·e_{2i−1}, B†·e_{2i})`, i.e. `|D_i)` and `|G_i)` as concrete columns.
pub fn concrete_gamow_vectors(
    n: usize,
    i: usize,
) -> Result<(ConcreteVector, ConcreteVector), TimeReversalError> {
    let metric = build_metric(n)?;
    if i == 0 || i > n {
        return Err(TimeReversalError::IndexOutOfRange { index: i, n });
    }
    let b = &metric.b;
    let b_dag = b.adjoint();
    let (col_d, col_g) = (2 * i - 2, 2 * i - 1);
    let d = b.column(col_d).iter().copied().collect();
    let g = b_dag.column(col_g).iter().copied().collect();
    Ok((ConcreteVector(d), ConcreteVector(g)))
}

/// Blockwise `(x, y) ↦ (conj(y), conj(x))`.
pub fn apply_t(v: &ConcreteVector) -> Result<ConcreteVector, TimeReversalError> {
    if !v.len().is_multiple_of(2) {
        return Err(TimeReversalError::OddLength(v.len()));
    }
    let out =
        v.0.chunks_exact(2)
            .flat_map(|p| [p[1].conj(), p[0].conj()])
            .collect();
    Ok(ConcreteVector(out))
}

/// Largest `|T|D_i) − |G_i)|` or `|T|G_i) − |D_i)|` over all resonances.
pub fn swap_residual(n: usize) -> Result<f64, TimeReversalError> {
    let mut worst = 0.0f64;
    for i in 1..=n {
        let (d, g) = concrete_gamow_vectors(n, i)?;
        worst = worst
            .max(apply_t(&d)?.max_deviation(&g))
            .max(apply_t(&g)?.max_deviation(&d));
    }
    Ok(worst)
}

/// The four pairings of the single-resonance closed-form computation, for
/// `|ψ) = (a, b)ᵀ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AppendixPairings {
    /// `(ψ^D|ψ)`, which also equals `(ψ^G|ψ)`.
    #[serde(serialize_with = "complex_json")]
    pub bra_d_psi: Complex64,
    /// `(ψ|ψ^D)`, which also equals `(ψ|ψ^G)`.
    #[serde(serialize_with = "complex_json")]
    pub psi_ket_d: Complex64,
    /// `(ψ^D|T|ψ)`
    #[serde(serialize_with = "complex_json")]
    pub bra_d_t_psi: Complex64,
    /// `(ψ|T|ψ^D)`
    #[serde(serialize_with = "complex_json")]
    pub psi_t_ket_d: Complex64,
}

pub fn appendix_pairings(a: Complex64, b: Complex64) -> AppendixPairings {
    let h = sqrt_i();
    let s = FRAC_1_SQRT_2;
    let i = Complex64::i();
    AppendixPairings {
        bra_d_psi: h * (s * b - i * s * a),
        psi_ket_d: h * (s * b.conj() - i * s * a.conj()),
        bra_d_t_psi: h * (s * a.conj() - i * s * b.conj()),
        psi_t_ket_d: h * (s * a.conj() - i * s * b.conj()),
    }
}

/// `(ψ|H|ψ)` against `(ψ|THT|ψ)` for one resonance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InvarianceReport {
    #[serde(serialize_with = "complex_json")]
    pub lhs: Complex64,
    #[serde(serialize_with = "complex_json")]
    pub rhs: Complex64,
    #[serde(serialize_with = "complex_json")]
    pub gap: Complex64,
    pub pairings: AppendixPairings,
}

pub fn invariance_gap(a: Complex64, b: Complex64, res: &Resonance) -> InvarianceReport {
    let p = appendix_pairings(a, b);
    let (z, zc) = (res.pole(), res.conj_pole());
    // (ψ^G|ψ) = (ψ^D|ψ) and (ψ|ψ^G) = (ψ|ψ^D)
    let lhs = z * p.psi_ket_d * p.bra_d_psi + zc * p.psi_ket_d * p.bra_d_psi;
    // (ψ|T|ψ^G) = (ψ^G|T|ψ) = (ψ^D|T|ψ) = (ψ|T|ψ^D)
    let rhs = zc * p.psi_t_ket_d * p.bra_d_t_psi + z * p.psi_t_ket_d * p.bra_d_t_psi;
    InvarianceReport {
        lhs,
        rhs,
        gap: lhs - rhs,
        pairings: p,
    }
}

fn complex_json<S: serde::Serializer>(c: &Complex64, s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeStruct;
    let mut st = s.serialize_struct("Complex", 2)?;
    st.serialize_field("re", &c.re)?;
    st.serialize_field("im", &c.im)?;
    st.end()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_4;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn single_resonance_vectors() {
        let s = FRAC_1_SQRT_2;
        let (d, g) = concrete_gamow_vectors(1, 1).unwrap();
        let em = Complex64::from_polar(1.0, -FRAC_PI_4);
        let ep = Complex64::from_polar(1.0, FRAC_PI_4);
        let d_expected = ConcreteVector(vec![em * c(0.0, s), em * c(s, 0.0)]);
        let g_expected = ConcreteVector(vec![ep * c(s, 0.0), ep * c(0.0, -s)]);
        assert!(d.max_deviation(&d_expected) < 1e-15);
        assert!(g.max_deviation(&g_expected) < 1e-15);
        // The two columns coincide, which is why the algebra is kept formal.
        assert!(d.max_deviation(&g) < 1e-15);
    }

    #[test]
    fn t_swaps_gamow_vectors() {
        let (d, g) = concrete_gamow_vectors(1, 1).unwrap();
        assert!(apply_t(&d).unwrap().max_deviation(&g) < 1e-12);
        assert!(apply_t(&g).unwrap().max_deviation(&d) < 1e-12);
        for n in 1..=5 {
            assert!(swap_residual(n).unwrap() < 1e-12);
        }
    }

    #[test]
    fn t_is_antilinear_involution() {
        let v = ConcreteVector(vec![c(0.3, -1.0), c(2.0, 0.5), c(-0.1, 0.0), c(0.0, 4.0)]);
        let lam = c(0.6, -2.2);
        let tv = apply_t(&v).unwrap();
        assert!(
            apply_t(&v.scale(lam))
                .unwrap()
                .max_deviation(&tv.scale(lam.conj()))
                < 1e-15
        );
        assert_eq!(apply_t(&tv).unwrap(), v);
        assert_eq!(
            apply_t(&ConcreteVector(vec![c(1.0, 0.0); 3])),
            Err(TimeReversalError::OddLength(3))
        );
    }

    #[test]
    fn index_range() {
        assert!(concrete_gamow_vectors(2, 3).is_err());
        assert!(concrete_gamow_vectors(2, 0).is_err());
        assert!(concrete_gamow_vectors(0, 1).is_err());
    }

    #[test]
    fn pairings_at_unit_a() {
        let p = appendix_pairings(c(1.0, 0.0), c(0.0, 0.0));
        let s = FRAC_1_SQRT_2;
        assert!((p.bra_d_psi - Complex64::from_polar(s, -FRAC_PI_4)).norm() < 1e-15);
        assert!((p.bra_d_t_psi - Complex64::from_polar(s, FRAC_PI_4)).norm() < 1e-15);
    }

    #[test]
    fn gap_at_unit_a() {
        // lhs = 2E_R·(i/2)·(−1), rhs = 2E_R·(i/2)·1, so gap = −2i·E_R.
        let res = Resonance::new(2.0, 1.0).unwrap();
        let rep = invariance_gap(c(1.0, 0.0), c(0.0, 0.0), &res);
        assert!((rep.lhs - c(0.0, -2.0)).norm() < 1e-14);
        assert!((rep.rhs - c(0.0, 2.0)).norm() < 1e-14);
        assert!((rep.gap - c(0.0, -4.0)).norm() < 1e-14);
        assert_eq!(rep.gap, rep.lhs - rep.rhs);
    }

    #[test]
    fn gap_vanishes_for_equal_real_amplitudes() {
        let res = Resonance::new(2.0, 1.0).unwrap();
        for a in [0.3, 1.0, -2.5] {
            let rep = invariance_gap(c(a, 0.0), c(a, 0.0), &res);
            assert!(rep.gap.norm() < 1e-14, "a = {a}: {}", rep.gap);
        }
    }

    #[test]
    fn gap_survives_tiny_width() {
        // The gap is 2E_R·((ψ|ψ^D)(ψ^D|ψ) − (ψ^D|T|ψ)²); the width drops out.
        let narrow = Resonance::new(2.0, 1e-300).unwrap();
        let rep = invariance_gap(c(1.0, 0.0), c(0.0, 0.0), &narrow);
        assert!((rep.gap - c(0.0, -4.0)).norm() < 1e-14);
    }

    #[test]
    fn report_serializes() {
        let res = Resonance::new(2.0, 1.0).unwrap();
        let rep = invariance_gap(c(1.0, 0.0), c(0.0, 0.0), &res);
        let json = serde_json::to_value(rep).unwrap();
        assert_eq!(json["gap"]["im"].as_f64().unwrap().round(), -4.0);
        assert!(json["pairings"]["bra_d_t_psi"]["re"].is_number());
    }
}
