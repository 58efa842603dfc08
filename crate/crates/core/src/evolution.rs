//! Hamiltonians, evolution families and commutator decay on the Gamow algebra.
//!
//! All operators here are [`GamowOperator`]s, so products contract through
//! the Krein pairing. The four evolution families are
//!
//! | family       | U(t)                                                        |
//! |--------------|-------------------------------------------------------------|
//! | `Decaying`   | `Σ e^{−itz_j} |D_j)(G_j|`                                    |
//! | `Growing`    | `Σ e^{−itz_j*} |G_j)(D_j|`                                   |
//! | `Full`       | `Σ e^{−itz_j} |D_j)(G_j| + e^{−itz_j*} |G_j)(D_j|`           |
//! | `Asymmetric` | `Σ e^{−itz_j} |D_j)(G_j| + e^{+itz_j*} |G_j)(D_j|`           |
//!
//! `Asymmetric` is formally self-adjoint and every coefficient of a
//! Heisenberg-evolved operator picks up a factor of modulus
//! `e^{−t(Γ_j+Γ_k)/2}`, which is what drives commutators to zero.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use crate::krein::commutator;
use crate::krein::{GamowOperator, KetSymbol, KreinError};

/// Norms at or below this are left out of the log-linear fit.
pub const FIT_FLOOR: f64 = 1e-13;

/// Number of samples in the default decay window.
pub const DEFAULT_SAMPLES: usize = 64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvolutionError {
    #[error("at least one resonance is required")]
    NoResonances,
    #[error("invalid resonance (E_R = {energy}, Gamma = {width}): {reason}")]
    InvalidResonance {
        energy: f64,
        width: f64,
        reason: &'static str,
    },
    #[error("resonance index {index} out of range 1..={n}")]
    ResonanceIndex { index: usize, n: usize },
    #[error("time must be non-negative, got {0}")]
    NegativeTime(f64),
    #[error("survival probability is not defined for the {0} family")]
    FamilyNotAllowed(EvolutionFamily),
    #[error("scan times must be finite and strictly increasing")]
    BadTimes,
    #[error("operator acts on {op} resonances but {res} were given")]
    SizeMismatch { op: usize, res: usize },
    #[error(transparent)]
    Krein(#[from] KreinError),
}

/// A resonance pole `z = E_R − iΓ/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawResonance", into = "RawResonance")]
pub struct Resonance {
    energy: f64,
    width: f64,
}

#[derive(Serialize, Deserialize)]
struct RawResonance {
    #[serde(rename = "E_R")]
    energy: f64,
    #[serde(rename = "Gamma")]
    width: f64,
}

impl TryFrom<RawResonance> for Resonance {
    type Error = EvolutionError;

    fn try_from(raw: RawResonance) -> Result<Self, Self::Error> {
        Resonance::new(raw.energy, raw.width)
    }
}

impl From<Resonance> for RawResonance {
    fn from(r: Resonance) -> Self {
        RawResonance {
            energy: r.energy,
            width: r.width,
        }
    }
}

impl Resonance {
    pub fn new(energy: f64, width: f64) -> Result<Self, EvolutionError> {
        let invalid = |reason| EvolutionError::InvalidResonance {
            energy,
            width,
            reason,
        };
        if !energy.is_finite() {
            return Err(invalid("E_R must be finite"));
        }
        if !width.is_finite() || width <= 0.0 {
            return Err(invalid("Gamma must be finite and > 0"));
        }
        Ok(Resonance { energy, width })
    }

    pub fn energy(&self) -> f64 {
        self.energy
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    /// `z = E_R − iΓ/2`.
    pub fn pole(&self) -> Complex64 {
        Complex64::new(self.energy, -0.5 * self.width)
    }

    /// `z* = E_R + iΓ/2`.
    pub fn conj_pole(&self) -> Complex64 {
        self.pole().conj()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HamiltonianVariant {
    /// `Σ z_i |D_i)(G_i|`
    Truncated,
    /// `Σ z_i* |G_i)(D_i|`
    TruncatedDagger,
    /// Sum of both; formally Hermitian.
    Hermitian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EvolutionFamily {
    Decaying,
    Growing,
    Full,
    Asymmetric,
}

impl fmt::Display for EvolutionFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EvolutionFamily::Decaying => "decaying",
            EvolutionFamily::Growing => "growing",
            EvolutionFamily::Full => "full",
            EvolutionFamily::Asymmetric => "asymmetric",
        })
    }
}

impl FromStr for EvolutionFamily {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "decaying" => Ok(EvolutionFamily::Decaying),
            "growing" => Ok(EvolutionFamily::Growing),
            "full" => Ok(EvolutionFamily::Full),
            "asymmetric" => Ok(EvolutionFamily::Asymmetric),
            other => Err(format!(
                "unknown family `{other}` (decaying, growing, full, asymmetric)"
            )),
        }
    }
}

/// Order of commutation and evolution in [`decay_scan`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScanMode {
    /// `[O1(t), O2(t)]`
    EvolveThenCommute,
    /// `([O1, O2])(t)`
    CommuteThenEvolve,
}

impl fmt::Display for ScanMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScanMode::EvolveThenCommute => "evolve-then-commute",
            ScanMode::CommuteThenEvolve => "commute-then-evolve",
        })
    }
}

impl FromStr for ScanMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "evolve-then-commute" => Ok(ScanMode::EvolveThenCommute),
            "commute-then-evolve" => Ok(ScanMode::CommuteThenEvolve),
            other => Err(format!(
                "unknown mode `{other}` (evolve-then-commute, commute-then-evolve)"
            )),
        }
    }
}

fn check_nonempty(res: &[Resonance]) -> Result<usize, EvolutionError> {
    if res.is_empty() {
        Err(EvolutionError::NoResonances)
    } else {
        Ok(res.len())
    }
}

/// Builds a diagonal-in-resonance operator from per-resonance `(D,G)` and
/// `(G,D)` coefficients.
fn resonance_sum<F>(res: &[Resonance], coeff: F) -> Result<GamowOperator, EvolutionError>
where
    F: Fn(&Resonance) -> (Option<Complex64>, Option<Complex64>),
{
    let n = check_nonempty(res)?;
    let mut entries = Vec::with_capacity(2 * n);
    for (i, r) in res.iter().enumerate() {
        let (dg, gd) = coeff(r);
        let (d, g) = (KetSymbol::d(i + 1), KetSymbol::g(i + 1));
        if let Some(c) = dg {
            entries.push(((d, g), c));
        }
        if let Some(c) = gd {
            entries.push(((g, d), c));
        }
    }
    Ok(GamowOperator::from_entries(n, entries)?)
}

pub fn build_hamiltonian(
    res: &[Resonance],
    variant: HamiltonianVariant,
) -> Result<GamowOperator, EvolutionError> {
    resonance_sum(res, |r| match variant {
        HamiltonianVariant::Truncated => (Some(r.pole()), None),
        HamiltonianVariant::TruncatedDagger => (None, Some(r.conj_pole())),
        HamiltonianVariant::Hermitian => (Some(r.pole()), Some(r.conj_pole())),
    })
}

/// `O^n` by repeated Gram composition; `n = 0` gives the identity.
pub fn operator_power(op: &GamowOperator, n: u32) -> Result<GamowOperator, EvolutionError> {
    let mut acc = GamowOperator::identity(op.dim())?;
    let mut base = op.clone();
    let mut k = n;
    while k > 0 {
        if k & 1 == 1 {
            acc = acc.compose(&base)?;
        }
        k >>= 1;
        if k > 0 {
            base = base.compose(&base)?;
        }
    }
    Ok(acc)
}

fn phase(exponent: Complex64) -> Complex64 {
    exponent.exp()
}

pub fn evolution_operator(
    res: &[Resonance],
    family: EvolutionFamily,
    t: f64,
) -> Result<GamowOperator, EvolutionError> {
    let minus_it = Complex64::new(0.0, -t);
    resonance_sum(res, |r| {
        let decay = phase(minus_it * r.pole());
        match family {
            EvolutionFamily::Decaying => (Some(decay), None),
            EvolutionFamily::Growing => (None, Some(phase(minus_it * r.conj_pole()))),
            EvolutionFamily::Full => (Some(decay), Some(phase(minus_it * r.conj_pole()))),
            EvolutionFamily::Asymmetric => (Some(decay), Some(phase(-minus_it * r.conj_pole()))),
        }
    })
}

fn check_sizes(op: &GamowOperator, res: &[Resonance]) -> Result<(), EvolutionError> {
    if op.dim() != res.len() {
        return Err(EvolutionError::SizeMismatch {
            op: op.dim(),
            res: res.len(),
        });
    }
    Ok(())
}

fn conjugate(op: &GamowOperator, u: &GamowOperator) -> Result<GamowOperator, EvolutionError> {
    Ok(u.adjoint().compose(&op.compose(u)?)?)
}

/// Heisenberg picture `O(t) = U†(t) O U(t)`.
pub fn heisenberg_evolve(
    op: &GamowOperator,
    res: &[Resonance],
    family: EvolutionFamily,
    t: f64,
) -> Result<GamowOperator, EvolutionError> {
    check_nonempty(res)?;
    check_sizes(op, res)?;
    let u = evolution_operator(res, family, t)?;
    conjugate(op, &u)
}

/// `|a_j(t)|²` where `a_j(t)` is the `(D_j, G_j)` coefficient of `U(t)`.
pub fn survival_probability(
    res: &[Resonance],
    j: usize,
    family: EvolutionFamily,
    t: f64,
) -> Result<f64, EvolutionError> {
    let n = check_nonempty(res)?;
    if j == 0 || j > n {
        return Err(EvolutionError::ResonanceIndex { index: j, n });
    }
    if family == EvolutionFamily::Growing {
        return Err(EvolutionError::FamilyNotAllowed(family));
    }
    if t.is_nan() || t < 0.0 {
        return Err(EvolutionError::NegativeTime(t));
    }
    let u = evolution_operator(res, family, t)?;
    Ok(u.get(KetSymbol::d(j), KetSymbol::g(j)).norm_sqr())
}

/// Commutator norms sampled over a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayScanResult {
    pub times: Vec<f64>,
    /// Max-coefficient norm of the commutator at each time.
    pub norms: Vec<f64>,
    /// Least-squares slope of `ln norm` against `t`; `None` when fewer than
    /// two samples rise above [`FIT_FLOOR`].
    pub fitted_rate: Option<f64>,
    /// Per-entry coefficient magnitudes, one value per time.
    pub envelopes: BTreeMap<(KetSymbol, KetSymbol), Vec<f64>>,
}

impl DecayScanResult {
    /// CSV body with header `t,norm,log_norm`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,norm,log_norm\n");
        for (t, n) in self.times.iter().zip(&self.norms) {
            out.push_str(&format!(
                "{},{},{}\n",
                fmt_num(*t),
                fmt_num(*n),
                fmt_num(n.ln())
            ));
        }
        out
    }
}

/// Fixed scientific formatting used by every CSV writer in the crate.
pub(crate) fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{x:.15e}")
    }
}

/// `times.len()` samples evenly spread over `[0, 10/Γ_min]`.
pub fn default_scan_times(res: &[Resonance], samples: usize) -> Vec<f64> {
    let gmin = res.iter().map(|r| r.width()).fold(f64::INFINITY, f64::min);
    linspace(0.0, 10.0 / gmin, samples)
}

pub fn linspace(start: f64, end: f64, samples: usize) -> Vec<f64> {
    match samples {
        0 => vec![],
        1 => vec![start],
        _ => (0..samples)
            .map(|k| start + (end - start) * k as f64 / (samples - 1) as f64)
            .collect(),
    }
}

/// Ordinary least-squares slope of `ln y` against `t` over samples with
/// `y > FIT_FLOOR`.
pub fn fit_log_slope(times: &[f64], values: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(values)
        .filter(|(_, v)| **v > FIT_FLOOR)
        .map(|(t, v)| (*t, v.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    Some(sxy / sxx)
}

pub fn decay_scan(
    o1: &GamowOperator,
    o2: &GamowOperator,
    res: &[Resonance],
    family: EvolutionFamily,
    times: &[f64],
    mode: ScanMode,
) -> Result<DecayScanResult, EvolutionError> {
    check_nonempty(res)?;
    check_sizes(o1, res)?;
    check_sizes(o2, res)?;
    if times.iter().any(|t| !t.is_finite()) || times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(EvolutionError::BadTimes);
    }
    let initial = commutator(o1, o2)?;
    let snapshots: Vec<GamowOperator> = times
        .par_iter()
        .map(|&t| {
            let u = evolution_operator(res, family, t)?;
            match mode {
                ScanMode::CommuteThenEvolve => conjugate(&initial, &u),
                ScanMode::EvolveThenCommute => {
                    Ok(commutator(&conjugate(o1, &u)?, &conjugate(o2, &u)?)?)
                }
            }
        })
        .collect::<Result<_, EvolutionError>>()?;

    let norms: Vec<f64> = snapshots.iter().map(GamowOperator::max_norm).collect();
    let keys: BTreeSet<_> = snapshots.iter().flat_map(|s| s.support()).collect();
    let envelopes = keys
        .into_iter()
        .map(|(k, b)| {
            (
                (k, b),
                snapshots.iter().map(|s| s.get(k, b).norm()).collect(),
            )
        })
        .collect();
    Ok(DecayScanResult {
        times: times.to_vec(),
        fitted_rate: fit_log_slope(times, &norms),
        norms,
        envelopes,
    })
}
