//! Pseudo-spectral simulation of the L²-critical nonlinear Schrödinger
//! equation `i u_t + Δu = λ |u|^{2/N} u` with `Im λ ≤ 0`, driven through the
//! pseudo-conformal change of frame.
//!
//! The physical solution `u` on `t ∈ [0, ∞)` is conjugate to a solution `v`
//! of the nonautonomous equation `i v_t + Δv = λ (1-bt)^{-1} |v|^{2/N} v` on
//! the finite horizon `t ∈ [0, 1/b)`. The crate evolves `v` with a Strang
//! split-step scheme whose nonlinear substep is exact (the gauge
//! `(1-bt)^{-1}` is integrated in closed form), monitors a family of weighted
//! norms with cascade-of-exponents prefactors, and extracts the asymptotic
//! data `(f₀, w₀)` together with the modulated profiles `ψ, θ, ṽ, z` that
//! describe the solution near the horizon — equivalently, the modified
//! scattering of `u` as `t → ∞`.
//!
//! Module map:
//! - [`grid`]: periodic grid, complex fields, weights `⟨x⟩^p`, tapers.
//! - [`spectral`]: FFT plans, free propagation `e^{itΔ}`, spectral and
//!   finite-difference derivatives, band-limited dilation.
//! - [`oracles`]: closed-form references (free Gaussian, pointwise gauge ODE,
//!   the `(1-bs)^{-1-μ}` integral identity) used to validate the solver.
//! - [`dynamics`]: split-step time integration and trajectories.
//! - [`pseudoconformal`]: the exact u ↔ v change of frame and the
//!   scattering-state construction.
//! - [`norms`]: weighted norm families, cascade exponents, and the running
//!   functionals Φ_T, Φ_{4,T}, Ψ_T with the 4K bound flag.
//! - [`asymptotics`]: accumulation of `f`, extraction of `w₀`, profile
//!   evaluators, residual/limit fits.
//! - [`config`], [`report`], [`harness`]: run configuration, artifact
//!   emission (CSV/JSON/SVG, snapshots, checkpoints), and orchestration
//!   (single runs, b-sweeps, the verify suite).

pub mod asymptotics;
pub mod config;
pub mod dynamics;
pub mod grid;
pub mod harness;
pub mod norms;
pub mod oracles;
pub mod pseudoconformal;
pub mod report;
pub mod spectral;

use thiserror::Error;

/// Library-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite value at flat index {index} ({context})")]
    NonFinite { index: usize, context: String },
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("field is in the wrong frame: expected {expected}, got {got}")]
    WrongFrame { expected: &'static str, got: &'static str },
    #[error("time {t} outside the admissible range {range}")]
    TimeRange { t: f64, range: String },
    #[error("derivative order {order} above configured cap {cap}")]
    DerivativeOrder { order: usize, cap: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("evolution aborted at t = {t}: {reason} (last good snapshot index {last_snapshot})")]
    EvolutionAborted { t: f64, reason: String, last_snapshot: usize },
    #[error("fit refused: {0}")]
    FitRefused(String),
    #[error("profile not available: {0}")]
    ProfileUnavailable(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
    #[error("{0}")]
    Other(String),
}

pub type Result<T> = std::result::Result<T, Error>;
