//! Error type shared by every module of the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Parameter set violates a hard invariant (non-positive frequency, ...).
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    /// |omega| = v: the adiabatic-elimination coefficients A, B diverge.
    #[error(
        "detuning sits on the phonon-hopping resonance |omega| = v \
         (omega = {omega:.6e} rad/s, v = {v:.6e} rad/s); the effective model is undefined"
    )]
    Resonance { omega: f64, v: f64 },

    /// Closed-form oscillatory expressions need |omega| > v (real lambda).
    #[error(
        "oscillatory closed form needs |omega| > v, got omega = {omega:.6e} rad/s, \
         v = {v:.6e} rad/s (lambda is imaginary)"
    )]
    OscillatoryDomain { omega: f64, v: f64 },

    /// lambda = 0 (A = +-B): the propagator coefficients are degenerate.
    #[error("degenerate propagator: lambda = 0 (A = +-B)")]
    DegenerateLambda,

    /// Operation requested outside its dynamical regime.
    #[error("regime mismatch: {0}")]
    RegimeMismatch(String),

    /// Mode label not present in the layout.
    #[error("mode {label} is not part of this layout")]
    UnknownMode { label: String },

    /// Propagation produced a non-finite moment (unbounded squeezing horizon).
    #[error("non-finite result in {context} (drift likely has a growing eigenvalue)")]
    NonFinite { context: String },

    #[error("trajectory is empty")]
    EmptyTrace,

    /// Every sample of a trace violates the Holstein-Primakoff bound.
    #[error("no HP-valid samples in trace (threshold {threshold:.3e} excitations)")]
    NoValidSamples { threshold: f64 },

    /// Fock cutoff below the adequacy heuristic for the predicted excitation.
    #[error(
        "Fock cutoff {cutoff} for mode {mode} is below the adequacy heuristic \
         {required} (predicted peak excitation {peak:.3})"
    )]
    CutoffInadequate {
        mode: String,
        cutoff: usize,
        required: usize,
        peak: f64,
    },

    /// Population reached the truncation boundary of the Fock space.
    #[error(
        "Fock truncation overflow at t = {time:.6e} s: boundary population \
         {population:.3e} exceeds {limit:.0e}"
    )]
    CutoffOverflow {
        time: f64,
        population: f64,
        limit: f64,
    },

    #[error("Fock space of {amplitudes} amplitudes exceeds the budget of {budget}")]
    BudgetExceeded { amplitudes: usize, budget: usize },

    #[error("dissipative Fock evolution needs the four-mode model: {0}")]
    DissipationUnsupported(String),

    /// Oracle adjudication could not distinguish the candidate conventions.
    #[error("adjudication inconclusive: {0}")]
    Inconclusive(String),

    /// Constrained optimisation found no feasible point.
    #[error("infeasible: {0}")]
    Infeasible(String),

    /// Malformed sweep or optimiser specification.
    #[error("invalid specification: {0}")]
    InvalidSpec(String),
}
