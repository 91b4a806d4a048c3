//! Secrecy sum-rates for the multi-user MIMO broadcast channel with
//! regularized channel inversion (RCI) precoding.
//!
//! A base station with `M` antennas serves `K` single-antenna users, each of
//! which may be overheard by the remaining `K - 1` users acting as a joint
//! eavesdropper. This crate evaluates the achievable secrecy sum-rate of any
//! linear precoder on a fading channel draw, provides the closed-form
//! large-system (`K = M -> inf`) expressions and optimal regularization, and
//! implements iterative power-allocation algorithms that maximize the secrecy
//! sum-rate for fixed or jointly optimized regularization.
//!
//! Modules mirror the pipeline:
//!
//! - [`channel`]: i.i.d. complex Gaussian channel ensemble, reproducible
//!   per-trial seeding, leave-one-out row removal.
//! - [`precoder`]: RCI / channel-inversion / matched-filter precoders and
//!   their power normalization.
//! - [`rates`]: SINRs and secrecy sum-rates for generic and power-allocated
//!   precoders, plus the resolvent (`A_k`, `B_k`) closed forms for RCI.
//! - [`large_system`]: asymptotic rates, optimal normalized regularization,
//!   comparison limits, and the closed-form loss/gain constants.
//! - [`power_alloc`]: successive convex approximation power control and the
//!   joint `(alpha, p)` optimizer.
//! - [`experiments`]: Monte Carlo sweeps, finite-system regularization
//!   searches, and CCDF statistics with common random numbers.
//! - [`cli`]: the `secrecy-sim` command-line front end.

pub mod channel;
pub mod cli;
pub mod experiments;
pub mod large_system;
pub mod power_alloc;
pub mod precoder;
pub mod rates;

pub use channel::{sample_channel, ChannelMatrix, NoiseModel, RngSpec};
pub use large_system::{
    asymptote_report, asymptotic_secrecy_sum_rate, g_of_xi, optimal_secrecy_sum_rate,
    secrecy_rate_xi_inv_rho, sum_rate_no_secrecy, xi_opt, AsymptoteReport,
};
pub use power_alloc::{
    joint_optimize, sca_power_allocation, PowerVector, SolveDiagnostics, TangentCoeffs,
};
pub use precoder::{
    apply_power_allocation, ci_precoder, mf_precoder, power_normalization, rci_precoder,
    PowerAllocatedPrecoder, PrecoderMatrix,
};
pub use rates::{
    secrecy_sum_rate, secrecy_sum_rate_pa, sinr_eavesdropper, sinr_intended, SecrecyRateReport,
    SinrPair,
};

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A matrix that must be inverted is singular or numerically rank-deficient.
    #[error("singular matrix: {0}")]
    SingularMatrix(String),
    /// Operand dimensions are inconsistent or an index is out of range.
    #[error("dimension error: {0}")]
    Dimension(String),
    /// The channel matrix is identically zero.
    #[error("zero channel matrix")]
    ZeroChannel,
    /// A scalar argument lies outside the mathematical domain of the function.
    #[error("domain error: {0}")]
    Domain(String),
    /// A power vector violates the unit trace constraint.
    #[error("power budget exceeded: {0}")]
    PowerBudgetExceeded(String),
    /// An iterative solver hit its iteration cap before reaching tolerance.
    #[error("maximum iterations exceeded: {0}")]
    MaxIterationsExceeded(String),
    /// A scalar line search found its optimum on the bracket boundary.
    #[error("bracket failure: {0}")]
    BracketFailure(String),
    /// Invalid configuration (CLI or config file).
    #[error("config error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    /// Malformed input file (CSV fixtures, config files).
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
