//! Closed-form large-system quantities for the square system `K = M -> inf`.
//!
//! With the normalized regularization `xi = alpha / K`, the per-user RCI
//! quantities converge almost surely to deterministic functions of `xi` and
//! the SNR `rho`:
//!
//! ```text
//! A_k   -> g(xi)                         g(xi) = sqrt(1 + 4/xi)/2 - 1/2
//! B_k   -> g(xi) + xi g'(xi)
//! gamma -> g(xi) + xi g'(xi)
//! ```
//!
//! so the secrecy sum-rate becomes `K` times a closed-form per-antenna rate.
//! This module evaluates that rate, the optimal `xi`, the comparison schemes
//! (`xi -> 0` channel inversion, `xi -> inf` matched filter, `xi = 1/rho`
//! sum-rate-optimal RCI), and the high-SNR loss/gain constants. Everything
//! here takes linear SNR; dB conversion lives at the CLI boundary.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// `g(xi) = sqrt(1 + 4/xi)/2 - 1/2`, the large-system limit of the signal
/// resolvent `A_k`. Positive and strictly decreasing for `xi > 0`.
pub fn g_of_xi(xi: f64) -> Result<f64> {
    if !(xi > 0.0) || !xi.is_finite() {
        return Err(Error::Domain(format!("g(xi) needs xi > 0, got {xi}")));
    }
    Ok(0.5 * (1.0 + 4.0 / xi).sqrt() - 0.5)
}

/// `xi g'(xi) = -1 / (xi sqrt(1 + 4/xi))`, reduced symbolically from
/// `g'(xi) = -1 / (xi^2 sqrt(1 + 4/xi))`. Validated against finite
/// differences in the tests.
fn xi_g_prime(xi: f64) -> f64 {
    -1.0 / (xi * (1.0 + 4.0 / xi).sqrt())
}

/// Large-system limit of the power normalization (and of `B_k`):
/// `g(xi) + xi g'(xi) = (s - 1)^2 / (4s)` with `s = sqrt(1 + 4/xi)`.
fn gamma_limit(xi: f64) -> f64 {
    let s = (1.0 + 4.0 / xi).sqrt();
    (s - 1.0).powi(2) / (4.0 * s)
}

/// One evaluated point of the large-system secrecy sum-rate curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LargeSystemPoint {
    pub rho: f64,
    pub xi: f64,
    pub num_users: usize,
    pub g: f64,
    pub rate_bits: f64,
}

/// Evaluate `g`, the asymptotic SINRs and the clipped secrecy sum-rate at
/// one `(rho, xi, K)` point.
pub fn large_system_point(rho: f64, xi: f64, num_users: usize) -> Result<LargeSystemPoint> {
    Ok(LargeSystemPoint {
        rho,
        xi,
        num_users,
        g: g_of_xi(xi)?,
        rate_bits: asymptotic_secrecy_sum_rate(xi, rho, num_users)?,
    })
}

/// Asymptotic secrecy sum-rate of the RCI precoder at normalized
/// regularization `xi`, in bits. `K` enters only as a multiplicative factor:
///
/// ```text
/// R = K [ log2(1 + rho g^2 / ((rho + (1+g)^2)(g + xi g'))) - log2(1 + rho/(1+g)^2) ]^+
/// ```
pub fn asymptotic_secrecy_sum_rate(xi: f64, rho: f64, num_users: usize) -> Result<f64> {
    if !(rho >= 0.0) || !rho.is_finite() {
        return Err(Error::Domain(format!("rho must be finite and >= 0, got {rho}")));
    }
    let g = g_of_xi(xi)?;
    let gamma = g + xi_g_prime(xi);
    debug_assert!((gamma - gamma_limit(xi)).abs() <= 1e-12 * gamma_limit(xi).max(1e-300));
    let one_plus_g_sq = (1.0 + g).powi(2);
    let sinr_intended = rho * g * g / ((rho + one_plus_g_sq) * gamma);
    let sinr_eavesdropper = rho / one_plus_g_sq;
    let per_antenna =
        ((1.0 + sinr_intended).log2() - (1.0 + sinr_eavesdropper).log2()).max(0.0);
    Ok(num_users as f64 * per_antenna)
}

/// Secrecy-optimal normalized regularization
/// `xi_opt = 1 / (3 rho + 1 + sqrt(3 rho + 1))`; equals `1/2` at `rho = 0`
/// and decays as `1/(3 rho)` at high SNR.
pub fn xi_opt(rho: f64) -> f64 {
    assert!(rho >= 0.0 && rho.is_finite(), "xi_opt needs rho >= 0, got {rho}");
    let t = (3.0 * rho + 1.0).sqrt();
    1.0 / (3.0 * rho + 1.0 + t)
}

/// Optimal large-system secrecy sum-rate
/// `K log2[(9 rho + 2 + (6 rho + 2) sqrt(3 rho + 1)) / (4 (4 rho + 1))]`,
/// the value of [`asymptotic_secrecy_sum_rate`] at `xi_opt(rho)`.
pub fn optimal_secrecy_sum_rate(rho: f64, num_users: usize) -> f64 {
    assert!(rho >= 0.0 && rho.is_finite(), "rho must be >= 0, got {rho}");
    let t = (3.0 * rho + 1.0).sqrt();
    let num = 9.0 * rho + 2.0 + (6.0 * rho + 2.0) * t;
    let den = 4.0 * (4.0 * rho + 1.0);
    num_users as f64 * (num / den).log2()
}

/// Large-system sum-rate of RCI with `xi = 1/rho` and no secrecy
/// requirement: `K log2[(1 + sqrt(4 rho + 1)) / 2]`.
pub fn sum_rate_no_secrecy(rho: f64, num_users: usize) -> f64 {
    assert!(rho >= 0.0 && rho.is_finite(), "rho must be >= 0, got {rho}");
    num_users as f64 * ((1.0 + (4.0 * rho + 1.0).sqrt()) / 2.0).log2()
}

/// Large-system secrecy sum-rate achieved by RCI with the sum-rate-optimal
/// `xi = 1/rho`:
/// `K log2[(4 rho + 1 + (2 rho + 1) sqrt(4 rho + 1)) / (2 (4 rho + 1))]`.
/// Continuous at `rho -> 0+` where it vanishes.
pub fn secrecy_rate_xi_inv_rho(rho: f64, num_users: usize) -> f64 {
    assert!(rho >= 0.0 && rho.is_finite(), "rho must be >= 0, got {rho}");
    let s = (4.0 * rho + 1.0).sqrt();
    let num = 4.0 * rho + 1.0 + (2.0 * rho + 1.0) * s;
    let den = 2.0 * (4.0 * rho + 1.0);
    num_users as f64 * (num / den).log2()
}

/// Per-antenna large-system secrecy rates of the degenerate schemes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonLimits {
    /// Channel inversion, `xi -> 0`: the secrecy sum-rate grows at most
    /// sublinearly in `K`, so the per-antenna limit is zero.
    pub ci_per_antenna_bits: f64,
    /// Matched filter, `xi -> inf`: clipped to zero for every `rho`.
    pub mf_per_antenna_bits: f64,
    /// The unclipped matched-filter argument `log2((2 rho + 1)/(rho + 1)^2)`,
    /// nonpositive for all `rho >= 0`.
    pub mf_unclipped_argument_bits: f64,
}

/// Large-system per-antenna secrecy rates of CI (`xi -> 0`) and matched
/// filter (`xi -> inf`) precoding.
pub fn comparison_limits(rho: f64) -> ComparisonLimits {
    assert!(rho >= 0.0 && rho.is_finite(), "rho must be >= 0, got {rho}");
    let arg = ((2.0 * rho + 1.0) / (rho + 1.0).powi(2)).log2();
    ComparisonLimits {
        ci_per_antenna_bits: 0.0,
        mf_per_antenna_bits: arg.max(0.0),
        mf_unclipped_argument_bits: arg,
    }
}

/// High-SNR constants of the large-system analysis, computed from their
/// closed forms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoteReport {
    /// Per-antenna sum-rate sacrificed for secrecy:
    /// `lim (R_inf° - R_s,inf^RCI)/K = log2(64/27)/2 ~ 0.62 bits`.
    pub secrecy_loss_bits_per_antenna: f64,
    /// Per-antenna gain of `xi_opt` over `xi = 1/rho`:
    /// `lim (R_s,inf^RCI - R_s,inf°)/K = log2(3 sqrt(3)/4) ~ 0.38 bits`.
    pub gain_vs_xi_inv_rho_bits: f64,
    /// The secrecy loss expressed as transmit power: `10 log10(64/27) ~ 3.75 dB`.
    pub power_loss_db: f64,
}

/// Evaluate the three high-SNR constants from closed forms (never from
/// hard-coded decimals).
pub fn asymptote_report() -> AsymptoteReport {
    AsymptoteReport {
        secrecy_loss_bits_per_antenna: 0.5 * (64.0f64 / 27.0).log2(),
        gain_vs_xi_inv_rho_bits: (3.0 * 3.0f64.sqrt() / 4.0).log2(),
        power_loss_db: 10.0 * (64.0f64 / 27.0).log10(),
    }
}
