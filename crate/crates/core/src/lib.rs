//! Two models in which the Heisenberg-evolved algebra of observables becomes
//! commutative as `t → ∞`.
//!
//! * [`krein`] and [`evolution`]: operators on the 2N-dimensional space of
//!   decaying and growing Gamow vectors with an indefinite (Krein) pairing,
//!   evolved by a non-unitary, formally self-adjoint propagator under which
//!   every commutator decays like `e^{−tΓ}`.
//! * [`time_reversal`]: the antiunitary swap of decaying and growing vectors
//!   and the failure of time-reversal invariance for the formally Hermitian
//!   Hamiltonian.
//! * [`energy`] and [`expr`]: the algebra of operators compatible with a
//!   free Hamiltonian on `[0, ∞)`, discretized on a midpoint grid, where
//!   off-diagonal kernel contributions vanish weakly (Riemann–Lebesgue) and
//!   commutators go to zero under any regular state functional.
//!
//! [`selfcheck`] runs the numerical invariants of all modules, and [`cli`]
//! drives everything from the command line.

pub mod cli;
pub mod energy;
pub mod evolution;
pub mod expr;
pub mod krein;
pub mod selfcheck;
pub mod time_reversal;

pub use energy::{
    decay_curve, decay_curve_unchecked, make_grid, AlgebraTag, EnergyError, EnergyGrid, MollerSign,
    OperatorKernel, StateFunctional,
};
pub use evolution::{
    build_hamiltonian, decay_scan, evolution_operator, heisenberg_evolve, operator_power,
    survival_probability, DecayScanResult, EvolutionError, EvolutionFamily, HamiltonianVariant,
    Resonance, ScanMode,
};
pub use expr::{parse, Expr, ExprError};
pub use krein::{
    build_metric, commutator, gram, pseudo_inner, FormalVector, GamowOperator, KetSymbol, Kind,
    KreinError, MetricPair,
};
pub use num_complex::Complex64;
