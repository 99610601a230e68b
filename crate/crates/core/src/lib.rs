//! Bayesian nonparametric spectral density estimation for stationary time
//! series.
//!
//! The spectral density is modeled as `f(pi * omega) = tau * s(omega)` on
//! `omega` in [0, 1], where `s` is a mixture of B-spline densities whose
//! weights and knot locations are induced by truncated Dirichlet-process
//! stick-breaking measures. Inference runs a Metropolis-within-Gibbs sampler
//! against the Whittle pseudo-likelihood of the periodogram, optionally with
//! parallel tempering. A Bernstein-polynomial mixture is provided as a
//! comparison baseline.
//!
//! Modules:
//! - [`splines`]: clamped B-spline bases, analytic integrals, densities.
//! - [`spectra`]: preprocessing, periodogram, Whittle log-likelihood, AR
//!   ground truth and simulation.
//! - [`prior`]: stick-breaking measures, induced weights and knots, joint
//!   log-prior, state-to-PSD maps.
//! - [`sampler`]: the MCMC engine, serial and tempered.
//! - [`summary`]: posterior medians, pointwise and uniform credible bands,
//!   integrated absolute error, coverage.

pub mod prior;
pub mod sampler;
pub mod spectra;
pub mod splines;
pub mod summary;

/// Errors reported by construction and evaluation routines in this crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Knot sequence violates ordering, clamping, or size requirements.
    #[error("invalid knot sequence: {0}")]
    InvalidKnots(String),
    /// Basis index outside `1..=k`.
    #[error("basis index {index} out of range 1..={size}")]
    IndexOutOfRange { index: usize, size: usize },
    /// Argument expected inside the closed unit interval.
    #[error("{name} = {value} outside [0, 1]")]
    OutOfUnitInterval { name: &'static str, value: f64 },
    /// Time series violates length or finiteness requirements.
    #[error("invalid time series: {0}")]
    InvalidSeries(String),
    /// Spectrum values unusable where positivity is required.
    #[error("invalid spectrum: {0}")]
    InvalidSpectrum(String),
    /// Autoregressive coefficients outside the stationary region.
    #[error("non-stationary AR model: {0}")]
    NonStationaryAr(String),
    /// Prior configuration violates parameter bounds.
    #[error("invalid prior configuration: {0}")]
    InvalidPrior(String),
    /// Sampler state violates component constraints.
    #[error("invalid sampler state: {0}")]
    InvalidState(String),
    /// MCMC configuration violates parameter bounds.
    #[error("invalid MCMC configuration: {0}")]
    InvalidMcmc(String),
    /// Posterior sample matrix unusable for the requested summary.
    #[error("invalid summary input: {0}")]
    InvalidSummary(String),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
