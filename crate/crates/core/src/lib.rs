//! Information-disturbance tradeoff for estimating an unknown maximally
//! entangled state of two `d`-level systems.
//!
//! * [`linalg`]: dense complex matrices, Kronecker products, vectorization,
//!   partial traces and Hermitian eigensolvers.
//! * [`haar`]: seeded Haar-random unitaries and reproducible group averages.
//! * [`instrument`]: Kraus instruments, the Weyl operator basis and the
//!   optimal discrete instrument.
//! * [`fidelity`]: operation and estimation fidelities, closed form and
//!   Monte Carlo, plus the tradeoff curve.
//! * [`choi`]: the Choi-operator eigenvalue problem behind the optimum.

pub mod choi;
pub mod error;
pub mod fidelity;
pub mod haar;
pub mod instrument;
pub mod linalg;

pub use choi::{
    build_rf, build_rg, chi_to_kraus, optimize, verify_tp, ChiVector, ChoiOperator, KrausSeed,
    OptimizeResult, TpReport,
};
pub use error::{Error, Result};
pub use fidelity::{
    closed_form_f, closed_form_g, mc_covariant_fidelities, mc_fidelities, tradeoff_curve,
    tradeoff_point, tradeoff_residuals, visibilities, McEstimate, TradeoffPoint,
};
pub use haar::{mc_average, sample_unitary, McAverage, SeededStream};
pub use instrument::{
    apply, b_from_a, covariant_kraus_at, optimal_discrete_instrument, weyl_basis, KrausInstrument,
    OptimalParams, Outcome,
};
pub use linalg::{
    devectorize, hs_inner, kron, max_eig_herm, partial_trace, vectorize, ComplexMatrix,
    SubsystemSpec, C64,
};
