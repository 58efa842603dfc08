//! Named numerical invariants of every module, run in a fixed order.
//!
//! Each check draws from its own ChaCha8 stream seeded from the run seed and
//! the check's position, so results do not depend on which checks ran
//! before. A check can be deliberately broken with `fault` to confirm that
//! the harness notices.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::energy::{make_grid, AlgebraTag, EnergyGrid, OperatorKernel};
use crate::evolution::{
    build_hamiltonian, decay_scan, default_scan_times, evolution_operator, heisenberg_evolve,
    linspace, operator_power, survival_probability, EvolutionFamily, HamiltonianVariant, Resonance,
    ScanMode,
};
use crate::expr::parse;
use crate::krein::{
    basis, build_metric, gram, pseudo_inner, FormalVector, GamowOperator, KetSymbol, Kind,
};
use crate::time_reversal::{
    appendix_pairings, apply_t, concrete_gamow_vectors, invariance_gap, swap_residual,
    ConcreteVector,
};

/// Size of the perturbation injected by a fault.
const FAULT: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SelfcheckError {
    #[error("unknown invariant `{0}`")]
    UnknownInvariant(String),
}

/// A measured quantity and the bound it must stay under.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measure {
    pub value: f64,
    pub limit: f64,
}

impl Measure {
    fn new(value: f64, limit: f64) -> Self {
        Measure { value, limit }
    }

    pub fn passed(&self) -> bool {
        self.value.is_finite() && self.value <= self.limit
    }
}

type CheckFn = fn(&mut ChaCha8Rng, bool) -> Result<Measure, String>;

pub struct Invariant {
    pub name: &'static str,
    pub summary: &'static str,
    check: CheckFn,
}

impl Invariant {
    /// Runs this check alone with the stream for position `slot`.
    pub fn run(&self, seed: u64, slot: usize, fault: bool) -> Outcome {
        let mut rng = stream(seed, slot);
        match (self.check)(&mut rng, fault) {
            Ok(m) => Outcome {
                name: self.name,
                measure: Some(m),
                error: None,
            },
            Err(e) => Outcome {
                name: self.name,
                measure: None,
                error: Some(e),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub name: &'static str,
    pub measure: Option<Measure>,
    pub error: Option<String>,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.error.is_none() && self.measure.is_some_and(|m| m.passed())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub seed: u64,
    pub outcomes: Vec<Outcome>,
}

impl Report {
    /// Name of the failing invariant, if the run stopped early.
    pub fn failure(&self) -> Option<&Outcome> {
        self.outcomes.iter().find(|o| !o.passed())
    }

    pub fn table(&self) -> String {
        let mut out = format!("# selfcheck seed={}\n", self.seed);
        let _ = writeln!(
            out,
            "{:<28} {:>24} {:>10}  status",
            "invariant", "measured", "limit"
        );
        for o in &self.outcomes {
            let status = if o.passed() { "ok" } else { "FAIL" };
            match (&o.measure, &o.error) {
                (Some(m), None) => {
                    let _ = writeln!(
                        out,
                        "{:<28} {:>24.6e} {:>10.1e}  {status}",
                        o.name, m.value, m.limit
                    );
                }
                (_, Some(e)) => {
                    let _ = writeln!(out, "{:<28} {:>24} {:>10}  {status}: {e}", o.name, "-", "-");
                }
                (None, None) => unreachable!(),
            }
        }
        out
    }
}

fn stream(seed: u64, slot: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(slot as u64);
    rng
}

/// Runs every invariant in order and stops at the first failure. `fault`
/// names one invariant to break on purpose.
pub fn run(seed: u64, fault: Option<&str>) -> Result<Report, SelfcheckError> {
    if let Some(name) = fault {
        if !INVARIANTS.iter().any(|inv| inv.name == name) {
            return Err(SelfcheckError::UnknownInvariant(name.to_string()));
        }
    }
    let mut outcomes = Vec::new();
    for (slot, inv) in INVARIANTS.iter().enumerate() {
        let outcome = inv.run(seed, slot, fault == Some(inv.name));
        let failed = !outcome.passed();
        outcomes.push(outcome);
        if failed {
            break;
        }
    }
    Ok(Report { seed, outcomes })
}

pub fn names() -> impl Iterator<Item = &'static str> {
    INVARIANTS.iter().map(|inv| inv.name)
}

pub static INVARIANTS: &[Invariant] = &[
    Invariant {
        name: "gram_table",
        summary: "(D_i|G_j) = (G_i|D_j) = δ_ij, all other pairings vanish, symmetric",
        check: gram_table,
    },
    Invariant {
        name: "metric_square",
        summary: "B·B = A for N = 1..8",
        check: metric_square,
    },
    Invariant {
        name: "compose_associative",
        summary: "(O1O2)O3 = O1(O2O3)",
        check: compose_associative,
    },
    Invariant {
        name: "compose_unit",
        summary: "identity is a two-sided unit and fixes vectors",
        check: compose_unit,
    },
    Invariant {
        name: "inner_conjugate_symmetry",
        summary: "(x|y) = conj((y|x))",
        check: inner_conjugate_symmetry,
    },
    Invariant {
        name: "apply_compose",
        summary: "(O1O2)v = O1(O2 v)",
        check: apply_compose,
    },
    Invariant {
        name: "adjoint_reverses_products",
        summary: "(O1O2)† = O2†O1† and O†† = O",
        check: adjoint_reverses_products,
    },
    Invariant {
        name: "eigen_relations",
        summary: "H|D_i) = z_i|D_i), H|G_i) = z_i*|G_i)",
        check: eigen_relations,
    },
    Invariant {
        name: "annihilation",
        summary: "decaying U kills |G_j), growing U kills |D_j)",
        check: annihilation,
    },
    Invariant {
        name: "powers",
        summary: "H^n has coefficients z^n and (z*)^n",
        check: powers,
    },
    Invariant {
        name: "full_group_law",
        summary: "full family: U(t)U(s) = U(t+s), U(t)U(-t) = I",
        check: full_group_law,
    },
    Invariant {
        name: "asymmetric_self_adjoint",
        summary: "asymmetric family: U(t)† = U(t)",
        check: asymmetric_self_adjoint,
    },
    Invariant {
        name: "asymmetric_square",
        summary: "asymmetric family: |U(t)² coefficients| = e^{-tΓ_j}, support of I",
        check: asymmetric_square,
    },
    Invariant {
        name: "heisenberg_projector",
        summary: "asymmetric family: |D)(D| evolves to e^{-tΓ}|D)(D|",
        check: heisenberg_projector,
    },
    Invariant {
        name: "cte_envelope",
        summary: "([O1,O2])(t) entries scale by e^{-t(Γ_j+Γ_k)/2}",
        check: cte_envelope,
    },
    Invariant {
        name: "cte_rate",
        summary: "([O1,O2])(t) fitted rate is -Γ for one resonance",
        check: cte_rate,
    },
    Invariant {
        name: "etc_rate",
        summary: "[|D)(D|(t), |D)(G|(t)] fitted rate is -2Γ",
        check: etc_rate,
    },
    Invariant {
        name: "etc_bound",
        summary: "|[O1(t),O2(t)]| ≤ 4N·|O1|·|O2|·e^{-2tΓmin}",
        check: etc_bound,
    },
    Invariant {
        name: "survival",
        summary: "survival probability is e^{-tΓ}, independent of E_R",
        check: survival,
    },
    Invariant {
        name: "t_swap",
        summary: "T|D_i) = |G_i), T|G_i) = |D_i) for N ≤ 5",
        check: t_swap,
    },
    Invariant {
        name: "t_antilinear",
        summary: "T(λv) = conj(λ)Tv and T² = 1",
        check: t_antilinear,
    },
    Invariant {
        name: "pairing_chain",
        summary: "closed-form T pairings match the concrete matrix route",
        check: pairing_chain,
    },
    Invariant {
        name: "non_invariance",
        summary: "|(ψ|H|ψ) - (ψ|THT|ψ)| > 1e-8 for ≥ 99% of unit (a,b)",
        check: non_invariance,
    },
    Invariant {
        name: "kernel_homomorphism",
        summary: "dense(O1O2) = dense(O1)·dense(O2) for M in {4, 16, 64}",
        check: kernel_homomorphism,
    },
    Invariant {
        name: "kernel_commutator_diag",
        summary: "the d part of every kernel commutator is exactly zero",
        check: kernel_commutator_diag,
    },
    Invariant {
        name: "kernel_evolution_group",
        summary: "O(t)(s) = O(t+s) and d is fixed",
        check: kernel_evolution_group,
    },
    Invariant {
        name: "observability",
        summary: "evolution and weak limits keep observables observable",
        check: observability,
    },
    Invariant {
        name: "weak_limit_commutes",
        summary: "commutators of weak-limit kernels vanish",
        check: weak_limit_commutes,
    },
    Invariant {
        name: "riemann_lebesgue",
        summary: "off-diagonal pairing falls below 1% by the Nyquist bound",
        check: riemann_lebesgue,
    },
    Invariant {
        name: "parser_precedence",
        summary: "2^3^2 = 512, -E^2 = -(E^2), 1-2-3 = -4",
        check: parser_precedence,
    },
    Invariant {
        name: "parser_roundtrip",
        summary: "parse(print(parse(s))) = parse(s)",
        check: parser_roundtrip,
    },
];

fn bump(fault: bool) -> f64 {
    if fault {
        FAULT
    } else {
        0.0
    }
}

fn cbump(fault: bool) -> Complex64 {
    Complex64::new(bump(fault), 0.0)
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn rand_c(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

fn rand_resonances(rng: &mut ChaCha8Rng, n: usize) -> Vec<Resonance> {
    (0..n)
        .map(|_| Resonance::new(rng.gen_range(-3.0..3.0), rng.gen_range(0.1..2.0)).unwrap())
        .collect()
}

fn rand_op(rng: &mut ChaCha8Rng, n: usize) -> GamowOperator {
    let b = basis(n);
    let mut entries = Vec::new();
    for &k in &b {
        for &br in &b {
            entries.push(((k, br), rand_c(rng)));
        }
    }
    GamowOperator::from_entries(n, entries).unwrap()
}

fn rand_vec(rng: &mut ChaCha8Rng, n: usize) -> FormalVector {
    let coeffs: Vec<_> = basis(n).into_iter().map(|s| (s, rand_c(rng))).collect();
    FormalVector::from_coeffs(n, coeffs).unwrap()
}

fn rand_kernel(rng: &mut ChaCha8Rng, grid: EnergyGrid) -> OperatorKernel {
    let m = grid.len();
    let d = DVector::from_fn(m, |_, _| rand_c(rng));
    let k = DMatrix::from_fn(m, m, |_, _| rand_c(rng));
    OperatorKernel::new(grid, AlgebraTag::Free, d, k).unwrap()
}

fn max_abs(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|c| c.norm()).fold(0.0, f64::max)
}

fn gram_table(_: &mut ChaCha8Rng, fault: bool) -> Result<Measure, String> {
    let n = 4;
    let mut worst = 0.0f64;
    for a in basis(n) {
        for b in basis(n) {
            let expected = if a.index() == b.index() && a.kind() != b.kind() {
                1.0
            } else {
                0.0
            };
            let got = gram(n, a, b).map_err(err)?;
            let back = gram(n, b, a).map_err(err)?;
            let got = if a == KetSymbol::d(1) {
                got + cbump(fault)
            } else {
                got
            };
            worst = worst.max((got - expected).norm()).max((got - back).norm());
        }
    }
    Ok(Measure::new(worst, 0.0))
}

fn metric_square(_: &mut ChaCha8Rng, fault: bool) -> Result<Measure, String> {
    let mut worst = 0.0f64;
    for n in 1..=8 {
        let mut m = build_metric(n).map_err(err)?;
        m.b[(0, 0)] += cbump(fault);
        worst = worst.max(m.square_residual());
    }
    Ok(Measure::new(worst, 1e-12))
}

fn compose_associative(rng: &mut ChaCha8Rng, fault: bool) -> Result<Measure, String> {
    let mut worst = 0.0f64;
    for trial in 0..20 {
        let n = 1 + trial % 4;
        let (a, b, c) = (rand_op(rng, n), rand_op(rng, n), rand_op(rng, n));
        let left = a.compose(&b).and_then(|ab| ab.compose(&c)).map_err(err)?;
        let right = b.compose(&c).and_then(|bc| a.compose(&bc)).map_err(err)?;
        let right = right.scale(Complex64::new(1.0 + bump(fault), 0.0));
        worst = worst.max(left.max_deviation(&right));
    }
    Ok(Measure::new(worst, 1e-12))
}

fn compose_unit(rng: &mut ChaCha8Rng, fault: bool) -> Result<Measure, String> {
    let mut worst = 0.0f64;
    for n in 1..=4 {
        let id = GamowOperator::identity(n).map_err(err)?;
        let o = rand_op(rng, n);
        let v = rand_vec(rng, n);
        let id = id.scale(Complex64::new(1.0 + bump(fault), 0.0));
        worst = worst
            .max(id.compose(&o).map_err(err)?.max_deviation(&o))
            .max(o.compose(&id).map_err(err)?.max_deviation(&o))
            .max(id.apply(&v).map_err(err)?.max_deviation(&v));
    }
    Ok(Measure::new(worst, 1e-12))
}

fn inner_conjugate_symmetry(rng: &mut ChaCha8Rng, fault: bool) -> Result<Measure, String> {
    let mut worst = 0.0f64;
    for trial in 0..50 {
        let n = 1 + trial % 4;
        let (x, y) = (rand_vec(rng, n), rand_vec(rng, n));
        let xy = pseudo_inner(&x, &y).map_err(err)? + cbump(fault);
        let yx = pseudo_inner(&y, &x).map_err(err)?;
        worst = worst.max((xy - yx.conj()).norm());
    }
    Ok(Measure::new(worst, 1e-12))
}

fn apply_compose(rng: &mut ChaCha8Rng, fault: bool) -> Result<Measure, String> {
    let mut worst = 0.0f64;
    for trial in 0..30 {
        let n = 1 + trial % 4;
        let (a, b, v) = (rand_op(rng, n), rand_op(rng, n), rand_vec(rng, n));
        let lhs = a.compose(&b).and_then(|ab| ab.apply(&v)).map_err(err)?;
        let rhs = b.apply(&v).and_then(|bv| a.apply(&bv)).map_err(err)?;
        let rhs = rhs.scale(Complex64::new(1.0 + bump(fault), 0.0));
        worst = worst.max(lhs.max_deviation(&rhs));
    }
    Ok(Measure::new(worst, 1e-12))
}

fn adjoint_reverses_products(rng: &mut ChaCha8Rng, fault: bool) -> Result<Measure, String> {
    let mut worst = 0.0f64;
    for trial in 0..30 {
        let n = 1 + trial % 4;
        let (a, b) = (rand_op(rng, n), rand_op(rng, n));
        let lhs = a.compose(&b).map_err(err)?.adjoint();
        let rhs = b.adjoint().compose(&a.adjoint()).map_err(err)?;
        let rhs = rhs.scale(Complex64::new(1.0, bump(fault)));
        worst = worst
            .max(lhs.max_deviation(&rhs))
            .max(a.adjoint().adjoint().max_deviation(&a));
    }
    Ok(Measure::new(worst, 1e-12))
}

fn eigen_relations(rng: &mut ChaCha8Rng, fault: bool) -> Result<Measure, String> {
    let mut worst = 0.0f64;
    for trial in 0..100 {
        let n = 1 + trial % 5;
        let res = rand_resonances(rng, n);
        let h = build_hamiltonian(&res, HamiltonianVariant::Hermitian).map_err(err)?;
        if h.adjoint() != h {
            return Err("Hermitian Hamiltonian is not self-adjoint".into());
        }
        for (i, r) in res.iter().enumerate() {
            for (sym, ev) in [
                (KetSymbol::d(i + 1), r.pole()),
                (KetSymbol::g(i + 1), r.conj_pole()),
            ] {
                let v = FormalVector::basis_vector(n, sym).map_err(err)?;
                let hv = h.apply(&v).map_err(err)?;
                let expected = v.scale(ev + cbump(fault));
                worst = worst.max(hv.max_deviation(&expected));
            }
        }
    }
    Ok(Measure::new(worst, 0.0))
}

fn annihilation(rng: &mut ChaCha8Rng, fault: bool) -> Result<Measure, String> {
    let mut worst = 0.0f64;
    for trial in 0..20 {
        let n = 1 + trial % 5;
        let res = rand_resonances(rng, n);
        let t = rng.gen_range(0.0..5.0);
        for (family, killed) in [
            (EvolutionFamily::Decaying, Kind::G),
            (EvolutionFamily::Growing, Kind::D),
        ] {
            let u = evolution_operator(&res, family, t).map_err(err)?;
            for i in 1..=n {
                let v = FormalVector::basis_vector(n, KetSymbol::new(i, killed)).map_err(err)?;
                worst = worst.max(u.apply(&v).map_err(err)?.max_norm());
            }
        }
        let h = build_hamiltonian(&res, HamiltonianVariant::Truncated).map_err(err)?;
        let v = FormalVector::basis_vector(n, KetSymbol::g(1)).map_err(err)?;
        worst = worst.max(h.apply(&v).map_err(err)?.max_norm());
    }
    Ok(Measure::new(worst + bump(fault), 0.0))
}

fn powers(rng: &mut ChaCha8Rng, fault: bool) -> Result<Measure, String> {
    let mut worst = 0.0f64;
    for trial in 0..10 {
        let n = 1 + trial % 3;
        let res: Vec<Resonance> = (0..n)
            .map(|_| Resonance::new(rng.gen_range(-1.5..1.5), rng.gen_range(0.1..1.0)).unwrap())
            .collect();
        let h = build_hamiltonian(&res, HamiltonianVariant::Hermitian).map_err(err)?;
        for p in 0..=8u32 {
            let hp = operator_power(&h, p).map_err(err)?;
            for (i, r) in res.iter().enumerate() {
                let (d, g) = (KetSymbol::d(i + 1), KetSymbol::g(i + 1));
                let zd = r.pole().powu(p) + cbump(fault);
                let zg = r.conj_pole().powu(p);
                let scale = zd.norm().max(1.0);
                worst = worst
                    .max((hp.get(d, g) - zd).norm() / scale)
                    .max((hp.get(g, d) - zg).norm() / scale);
            }
            let expected_len = 2 * n;
            if hp.support().len() != expected_len {
                return Err(format!("H^{p} has support of size {}", hp.support().len()));
            }
        }
    }
    Ok(Measure::new(worst, 1e-12))
}

fn full_group_law(rng: &mut ChaCha8Rng, fault: bool) -> Result<Measure, String> {
    let mut worst = 0.0f64;
    for trial in 0..100 {
        let n = 1 + trial % 3;
        let res = rand_resonances(rng, n);
        let (t, s) = (rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
        let u = |x: f64| evolution_operator(&res, EvolutionFamily::Full, x).map_err(err);
        let uts = u(t)?.compose(&u(s)?).map_err(err)?;
        let target = u(t + s + bump(fault))?;
        let scale = target.max_norm().max(1.0);
        let inv = u(t)?.compose(&u(-t)?).map_err(err)?;
        let id = GamowOperator::identity(n).map_err(err)?;
        worst = worst
            .max(uts.max_deviation(&target) / scale)
            .max(inv.max_deviation(&id));
    }
    Ok(Measure::new(worst, 1e-12))
}

fn asymmetric_self_adjoint(rng: &mut ChaCha8Rng, fault: bool) -> Result<Measure, String> {
    let mut worst = 0.0f64;
    for trial in 0..50 {
        let n = 1 + trial % 4;
        let res = rand_resonances(rng, n);
        let t = rng.gen_range(-5.0..5.0);
        let u = evolution_operator(&res, EvolutionFamily::Asymmetric, t).map_err(err)?;
        let other = u.scale(Complex64::new(1.0, bump(fault)));
        worst = worst.max(other.adjoint().max_deviation(&u));
    }
    Ok(Measure::new(worst, 0.0))
}

fn asymmetric_square(rng: &mut ChaCha8Rng, fault: bool) -> Result<Measure, String> {
    let mut worst = 0.0f64;
    for n in 1..=3 {
        let res = rand_resonances(rng, n);
        let id = GamowOperator::identity(n).map_err(err)?;
        // Window set by the fastest width so no coefficient reaches the prune floor.
        let gmax = res.iter().map(|r| r.width()).fold(0.0, f64::max);
        for t in linspace(0.0, 10.0 / gmax, 64) {
            let u = evolution_operator(&res, EvolutionFamily::Asymmetric, t).map_err(err)?;
            let u2 = u.compose(&u).map_err(err)?;
            if u2.support() != id.support() {
                return Err(format!(
                    "U(t)^2 support differs from the identity at t = {t}"
                ));
            }
            for ((k, _), c) in u2.entries() {
                let expected = (-t * res[k.index() - 1].width()).exp() + bump(fault);
                worst = worst.max((c.norm() - expected).abs());
            }
        }
    }
    Ok(Measure::new(worst, 1e-12))
}

fn heisenberg_projector(rng: &mut ChaCha8Rng, fault: bool) -> Result<Measure, String> {
    let mut worst = 0.0f64;
    let d = KetSymbol::d(1);
    let o = GamowOperator::dyad(1, d, d, Complex64::new(1.0, 0.0)).map_err(err)?;
    for _ in 0..20 {
        let res = rand_resonances(rng, 1);
        let t = rng.gen_range(0.0..6.0);
        let evolved = heisenberg_evolve(&o, &res, EvolutionFamily::Asymmetric, t).map_err(err)?;
        let expected = o.scale(Complex64::new(
            (-t * res[0].width()).exp() + bump(fault),
            0.0,
        ));
        worst = worst.max(evolved.max_deviation(&expected));
    }
    Ok(Measure::new(worst, 1e-12))
}

fn cte_envelope(rng: &mut ChaCha8Rng, fault: bool) -> Result<Measure, String> {
    let widths = [0.2, 0.5, 1.1];
    let res: Vec<Resonance> = widths
        .iter()
        .map(|&g| Resonance::new(rng.gen_range(0.0..4.0), g).unwrap())
        .collect();
    let (o1, o2) = (rand_op(rng, 3), rand_op(rng, 3));
    let times = default_scan_times(&res, 64);
    let scan = decay_scan(
        &o1,
        &o2,
        &res,
        EvolutionFamily::Asymmetric,
        &times,
        ScanMode::CommuteThenEvolve,
    )
    .map_err(err)?;
    if scan.envelopes.is_empty() {
        return Err("commutator vanished".into());
    }
    let mut worst = 0.0f64;
    for ((k, b), env) in &scan.envelopes {
        let rate = (widths[k.index() - 1] + widths[b.index() - 1]) / 2.0 + bump(fault);
        for (t, m) in times.iter().zip(env) {
            worst = worst.max((m - env[0] * (-t * rate).exp()).abs());
        }
    }
    Ok(Measure::new(worst, 1e-10))
}

fn cte_rate(rng: &mut ChaCha8Rng, fault: bool) -> Result<Measure, String> {
    let gamma = 0.5;
    let res = vec![Resonance::new(rng.gen_range(0.5..3.0), gamma).unwrap()];
    let (o1, o2) = (rand_op(rng, 1), rand_op(rng, 1));
    let scale = 1.0 + 20.0 * bump(fault);
    let times: Vec<f64> = default_scan_times(&res, 64)
        .iter()
        .map(|t| t * scale)
        .collect();
    let scan = decay_scan(
        &o1,
        &o2,
        &res,
        EvolutionFamily::Asymmetric,
        &times,
        ScanMode::CommuteThenEvolve,
    )
    .map_err(err)?;
    let rate = scan.fitted_rate.ok_or("commutator vanished")? * scale;
    Ok(Measure::new((rate + gamma).abs() / gamma, 0.01))
}

fn etc_rate(rng: &mut ChaCha8Rng, fault: bool) -> Result<Measure, String> {
    let gamma = 0.5;
    let res = vec![Resonance::new(rng.gen_range(0.5..3.0), gamma).unwrap()];
    let (d, g) = (KetSymbol::d(1), KetSymbol::g(1));
    let one = Complex64::new(1.0, 0.0);
    let o1 = GamowOperator::dyad(1, d, d, one).map_err(err)?;
    let o2 = GamowOperator::dyad(1, d, g, one).map_err(err)?;
    let times = default_scan_times(&res, 64);
    let scan = decay_scan(
        &o1,
        &o2,
        &res,
        EvolutionFamily::Asymmetric,
        &times,
        ScanMode::EvolveThenCommute,
    )
    .map_err(err)?;
    let rate = scan.fitted_rate.ok_or("commutator vanished")? + 20.0 * bump(fault);
    Ok(Measure::new(
        (rate + 2.0 * gamma).abs() / (2.0 * gamma),
        0.01,
    ))
}

fn etc_bound(rng: &mut ChaCha8Rng, fault: bool) -> Result<Measure, String> {
    let mut worst = 0.0f64;
    for trial in 0..30 {
        let n = 1 + trial % 3;
        let res = rand_resonances(rng, n);
        let gmin = res.iter().map(|r| r.width()).fold(f64::INFINITY, f64::min);
        let (o1, o2) = (rand_op(rng, n), rand_op(rng, n));
        let times = default_scan_times(&res, 32);
        let scan = decay_scan(
            &o1,
            &o2,
            &res,
            EvolutionFamily::Asymmetric,
            &times,
            ScanMode::EvolveThenCommute,
        )
        .map_err(err)?;
        let c = 4.0 * n as f64 * o1.max_norm() * o2.max_norm();
        for (t, norm) in times.iter().zip(&scan.norms) {
            let bound = c * (-2.0 * t * gmin).exp();
            worst = worst.max(norm / bound);
        }
    }
    Ok(Measure::new(worst * (1.0 + 1e3 * bump(fault)), 1.0))
}

fn survival(rng: &mut ChaCha8Rng, fault: bool) -> Result<Measure, String> {
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let gamma = rng.gen_range(0.1..2.0);
        let t = rng.gen_range(0.0..10.0);
        let a = Resonance::new(1.0, gamma).unwrap();
        let b = Resonance::new(7.0, gamma).unwrap();
        for family in [
            EvolutionFamily::Decaying,
            EvolutionFamily::Full,
            EvolutionFamily::Asymmetric,
        ] {
            let pa = survival_probability(&[a], 1, family, t).map_err(err)?;
            let pb = survival_probability(&[b], 1, family, t).map_err(err)?;
            let expected = (-t * gamma).exp() + bump(fault);
            worst = worst.max((pa - expected).abs()).max((pa - pb).abs());
        }
    }
    Ok(Measure::new(worst, 1e-12))
}

fn t_swap(_: &mut ChaCha8Rng, fault: bool) -> Result<Measure, String> {
    let mut worst = 0.0f64;
    for n in 1..=5 {
        worst = worst.max(swap_residual(n).map_err(err)?);
    }
    Ok(Measure::new(worst + bump(fault), 1e-12))
}

fn rand_concrete(rng: &mut ChaCha8Rng, len: usize) -> ConcreteVector {
    ConcreteVector((0..len).map(|_| rand_c(rng)).collect())
}

fn t_antilinear(rng: &mut ChaCha8Rng, fault: bool) -> Result<Measure, String> {
    let mut worst = 0.0f64;
    for trial in 0..50 {
        let v = rand_concrete(rng, 2 * (1 + trial % 4));
        let lam = rand_c(rng);
        let tv = apply_t(&v).map_err(err)?;
        let lhs = apply_t(&v.scale(lam)).map_err(err)?;
        let rhs = tv.scale(lam.conj() + cbump(fault));
        worst = worst
            .max(lhs.max_deviation(&rhs))
            .max(apply_t(&tv).map_err(err)?.max_deviation(&v));
    }
    Ok(Measure::new(worst, 1e-12))
}

/// Matrix route for one resonance: bras `(ψ^D| = e_1ᵀB†`, `(ψ^G| = e_2ᵀB`,
/// kets through the concrete columns, and `⟨ψ|` the conjugate transpose.
fn pairing_chain(rng: &mut ChaCha8Rng, fault: bool) -> Result<Measure, String> {
    let b = build_metric(1).map_err(err)?.b;
    let b_dag = b.adjoint();
    let (ket_d, ket_g) = concrete_gamow_vectors(1, 1).map_err(err)?;
    let row = |m: &DMatrix<Complex64>, r: usize, v: &ConcreteVector| {
        m[(r, 0)] * v.0[0] + m[(r, 1)] * v.0[1]
    };
    let bra_psi = |psi: &ConcreteVector, v: &ConcreteVector| {
        psi.0[0].conj() * v.0[0] + psi.0[1].conj() * v.0[1]
    };
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let psi = rand_concrete(rng, 2);
        let tpsi = apply_t(&psi).map_err(err)?;
        let closed = appendix_pairings(psi.0[0], psi.0[1]);
        let chain = [
            bra_psi(&psi, &apply_t(&ket_g).map_err(err)?),
            row(&b, 1, &tpsi),
            row(&b_dag, 0, &tpsi),
            bra_psi(&psi, &apply_t(&ket_d).map_err(err)?),
        ];
        let reference = closed.psi_t_ket_d + cbump(fault);
        for v in chain.iter().chain([&closed.bra_d_t_psi]) {
            worst = worst.max((v - reference).norm());
        }
        // (ψ^G|ψ) = (ψ^D|ψ) along the same route
        let direct = [row(&b_dag, 0, &psi), row(&b, 1, &psi)];
        worst = worst
            .max((direct[0] - closed.bra_d_psi).norm())
            .max((direct[1] - closed.bra_d_psi).norm());
    }
    Ok(Measure::new(worst, 1e-12))
}

fn non_invariance(rng: &mut ChaCha8Rng, fault: bool) -> Result<Measure, String> {
    let res = Resonance::new(2.0, 1.0).map_err(err)?;
    let draws = 1000;
    let mut small = 0usize;
    for _ in 0..draws {
        let (a, b) = (rand_c(rng), rand_c(rng));
        let norm = (a.norm_sqr() + b.norm_sqr()).sqrt();
        let (a, b) = if fault {
            (Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0))
        } else {
            (a / norm, b / norm)
        };
        let rep = invariance_gap(a, b, &res);
        if rep.gap.norm() <= 1e-8 {
            small += 1;
        }
    }
    Ok(Measure::new(small as f64 / draws as f64, 0.01))
}

fn kernel_homomorphism(rng: &mut ChaCha8Rng, fault: bool) -> Result<Measure, String> {
    let mut worst = 0.0f64;
    for m in [4, 16, 64] {
        let grid = make_grid(3.0, m).map_err(err)?;
        for _ in 0..if m == 64 { 10 } else { 30 } {
            let (a, b) = (rand_kernel(rng, grid), rand_kernel(rng, grid));
            let mut lhs = a.product(&b).map_err(err)?.dense_rep();
            lhs[(0, 0)] += cbump(fault);
            let rhs = a.dense_rep() * b.dense_rep();
            worst = worst.max(max_abs(&(lhs - &rhs)) / max_abs(&rhs).max(1.0));
        }
    }
    Ok(Measure::new(worst, 1e-12))
}

fn kernel_commutator_diag(rng: &mut ChaCha8Rng, fault: bool) -> Result<Measure, String> {
    let mut worst = 0.0f64;
    for m in [1, 5, 32] {
        let grid = make_grid(4.0, m).map_err(err)?;
        for _ in 0..10 {
            let (a, b) = (rand_kernel(rng, grid), rand_kernel(rng, grid));
            let c = a.commutator(&b).map_err(err)?;
            let d = c.diag().iter().map(|x| x.norm()).fold(0.0, f64::max);
            worst = worst.max(d);
        }
    }
    Ok(Measure::new(worst + bump(fault), 0.0))
}

fn kernel_evolution_group(rng: &mut ChaCha8Rng, fault: bool) -> Result<Measure, String> {
    let grid = make_grid(8.0, 64).map_err(err)?;
    let bound = grid.nyquist_tmax();
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let o = rand_kernel(rng, grid);
        let (t, s) = (
            rng.gen_range(-0.5..0.5) * bound,
            rng.gen_range(-0.5..0.5) * bound,
        );
        let two_step = o.evolve(t).and_then(|x| x.evolve(s)).map_err(err)?;
        let one_step = o.evolve(t + s + bump(fault)).map_err(err)?;
        let fixed = (two_step.diag() - o.diag())
            .iter()
            .map(|x| x.norm())
            .fold(0.0, f64::max);
        worst = worst.max(two_step.max_deviation(&one_step)).max(fixed);
    }
    Ok(Measure::new(worst, 1e-12))
}

fn observability(rng: &mut ChaCha8Rng, fault: bool) -> Result<Measure, String> {
    let grid = make_grid(5.0, 24).map_err(err)?;
    let m = grid.len();
    let mut failures = 0usize;
    for _ in 0..20 {
        let d = DVector::from_fn(m, |_, _| Complex64::new(rng.gen_range(-1.0..1.0), 0.0));
        let raw = DMatrix::from_fn(m, m, |_, _| rand_c(rng));
        let mut k = &raw + raw.adjoint();
        k[(0, 1)] += cbump(fault);
        let o = OperatorKernel::new(grid, AlgebraTag::Free, d, k).map_err(err)?;
        let t = rng.gen_range(-1.0..1.0) * grid.nyquist_tmax();
        let checks = [
            o.is_observable(),
            o.evolve(t).map_err(err)?.is_observable(),
            o.weak_limit().is_observable(),
        ];
        failures += checks.iter().filter(|ok| !**ok).count();
    }
    Ok(Measure::new(failures as f64, 0.0))
}

fn weak_limit_commutes(rng: &mut ChaCha8Rng, fault: bool) -> Result<Measure, String> {
    let mut worst = 0.0f64;
    for m in [3, 17, 40] {
        let grid = make_grid(6.0, m).map_err(err)?;
        for _ in 0..10 {
            let a = rand_kernel(rng, grid).weak_limit();
            let mut b = rand_kernel(rng, grid).weak_limit();
            if fault {
                b = b
                    .add_scaled(&rand_kernel(rng, grid), cbump(fault))
                    .map_err(err)?;
            }
            let c = a.commutator(&b).map_err(err)?;
            worst = worst.max(c.max_deviation(&OperatorKernel::zero(grid, AlgebraTag::Free)));
        }
    }
    Ok(Measure::new(worst, 0.0))
}

fn riemann_lebesgue(_: &mut ChaCha8Rng, fault: bool) -> Result<Measure, String> {
    let grid = make_grid(8.0, 256).map_err(err)?;
    let rho = parse("exp(-(E-2)^2-(Ep-3)^2)").map_err(err)?;
    let op = parse("exp(-(E-3)^2-(Ep-2)^2)").map_err(err)?;
    let one = parse("1").map_err(err)?;
    let rho =
        crate::expr::sample_functional(&one, Some(&rho), &grid, AlgebraTag::Free).map_err(err)?;
    let op = crate::expr::sample(&one, Some(&op), &grid, AlgebraTag::Free).map_err(err)?;
    let limit = rho.pair(&op.weak_limit(), 0.0).map_err(err)?;
    let tmax = grid.nyquist_tmax();
    let at =
        |t: f64| -> Result<f64, String> { Ok((rho.pair(&op, t).map_err(err)? - limit).norm()) };
    let initial = at(0.0)?;
    if initial == 0.0 {
        return Err("off-diagonal pairing vanishes at t = 0".into());
    }
    // A fault shortens the window so the oscillation has not yet averaged out.
    let end = if fault { tmax * FAULT } else { tmax };
    Ok(Measure::new(at(end)? / initial, 0.01))
}

fn parser_precedence(_: &mut ChaCha8Rng, fault: bool) -> Result<Measure, String> {
    let cases = [
        ("2^3^2", 0.0, Complex64::new(512.0, 0.0)),
        ("-E^2", 3.0, Complex64::new(-9.0, 0.0)),
        ("1-2-3", 0.0, Complex64::new(-4.0, 0.0)),
        ("2*3+4", 0.0, Complex64::new(10.0, 0.0)),
        ("8/4/2", 0.0, Complex64::new(1.0, 0.0)),
    ];
    let mut worst = 0.0f64;
    for (text, e, expected) in cases {
        let got = parse(text).and_then(|x| x.evaluate(e, 0.0)).map_err(err)?;
        worst = worst.max((got - expected - cbump(fault)).norm());
    }
    let neg = parse("-E^2").map_err(err)?;
    if neg.to_string() != "(-(E ^ 2))" {
        return Err(format!("-E^2 printed as {neg}"));
    }
    Ok(Measure::new(worst, 1e-12))
}

fn parser_roundtrip(_: &mut ChaCha8Rng, fault: bool) -> Result<Measure, String> {
    let corpus = [
        "exp(-(E-2)^2 - (Ep-2)^2)",
        "1/(E + i)",
        "2^3^2",
        "-E^2",
        "sin(E)*cos(Ep) - sqrt(abs(E-Ep))",
        "2.5i * pi - 3e-2",
        "((E))",
        "-(-(-1))",
    ];
    let mut mismatches = 0usize;
    for text in corpus {
        let first = parse(text).map_err(err)?;
        let printed = first.to_string();
        let printed = if fault {
            format!("({printed}) + 0")
        } else {
            printed
        };
        let second = parse(&printed).map_err(err)?;
        if second != first || second.to_string() != printed {
            mismatches += 1;
        }
    }
    Ok(Measure::new(mismatches as f64, 0.0))
}
