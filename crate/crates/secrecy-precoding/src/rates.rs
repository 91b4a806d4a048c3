//! SINRs and achievable secrecy sum-rates for linear precoding.
//!
//! Each user `k` faces the remaining `K - 1` users as a single cooperating
//! eavesdropper that is also genie-aided: it cancels all interference and
//! observes only the beam `w_k`. The achievable secrecy rate of user `k` is
//! the clipped difference
//!
//! ```text
//! R_{s,k} = [ log2(1 + SINR_k) - log2(1 + SINR_k~) ]^+
//! ```
//!
//! with `SINR_k = |h_k^† w_k|^2 / (gamma sigma^2 + sum_{j!=k} |h_k^† w_j|^2)`
//! at the intended receiver and `SINR_k~ = ||H_k~ w_k||^2 / (gamma sigma^2)`
//! at the eavesdropper. For the RCI precoder both SINRs also admit closed
//! forms in the leave-one-out resolvent quadratics `A_k`, `B_k`; the two
//! routes agree to floating-point accuracy and are cross-checked in tests.

use nalgebra::linalg::Cholesky;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelMatrix;
use crate::power_alloc::PowerVector;
use crate::precoder::{power_normalization, rci_precoder, PrecoderMatrix, POWER_BUDGET_SLACK};
use crate::{Error, Result};

/// Linear-scale SINRs of one confidential message at its intended receiver
/// and at the cooperating eavesdropper.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SinrPair {
    #[serde(rename = "sinr_k")]
    pub intended: f64,
    #[serde(rename = "sinr_ke")]
    pub eavesdropper: f64,
}

/// Secrecy rate of a single user, in bits, with the clipping flag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerUserRate {
    #[serde(flatten)]
    pub sinr: SinrPair,
    pub rate_bits: f64,
    /// True when the unclipped log-SINR difference was negative.
    pub clipped: bool,
}

/// Per-user secrecy rates and their sum, in bits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SecrecyRateReport {
    pub per_user: Vec<PerUserRate>,
    pub sum_bits: f64,
}

impl SecrecyRateReport {
    fn from_sinrs(sinrs: impl IntoIterator<Item = SinrPair>) -> Self {
        let per_user: Vec<PerUserRate> = sinrs
            .into_iter()
            .map(|s| {
                let raw = (1.0 + s.intended).log2() - (1.0 + s.eavesdropper).log2();
                PerUserRate { sinr: s, rate_bits: raw.max(0.0), clipped: raw < 0.0 }
            })
            .collect();
        let sum_bits = per_user.iter().map(|u| u.rate_bits).sum();
        Self { per_user, sum_bits }
    }

    /// Sum of the unclipped per-user log-SINR differences, in bits. This is
    /// the quantity the power-allocation algorithms drive monotonically.
    pub fn sum_bits_unclipped(&self) -> f64 {
        self.per_user
            .iter()
            .map(|u| (1.0 + u.sinr.intended).log2() - (1.0 + u.sinr.eavesdropper).log2())
            .sum()
    }
}

/// Resolvent quadratic forms of the leave-one-out channel:
/// `A_k = h_k^†(H_k~^†H_k~ + alpha I)^{-1} h_k` and
/// `B_k = h_k^†(H_k~^†H_k~ + alpha I)^{-1} H_k~^†H_k~ (H_k~^†H_k~ + alpha I)^{-1} h_k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AkBk {
    pub a_k: f64,
    pub b_k: f64,
}

fn check_operands(h: &ChannelMatrix, w: &PrecoderMatrix, sigma2: f64) -> Result<()> {
    if h.num_antennas() != w.num_antennas() || h.num_users() != w.num_users() {
        return Err(Error::Dimension(format!(
            "channel is {}x{} but precoder is {}x{}",
            h.num_users(),
            h.num_antennas(),
            w.num_antennas(),
            w.num_users()
        )));
    }
    if !(sigma2 > 0.0) || !sigma2.is_finite() {
        return Err(Error::Domain(format!("sigma2 must be positive, got {sigma2}")));
    }
    Ok(())
}

fn check_user(h: &ChannelMatrix, k: usize) -> Result<()> {
    if k >= h.num_users() {
        return Err(Error::Dimension(format!(
            "user index {k} out of range for K = {}",
            h.num_users()
        )));
    }
    Ok(())
}

/// SINR of message `u_k` at its intended receiver for an equal-power linear
/// precoder: signal `|h_k^† w_k|^2` over noise `gamma sigma^2` plus crosstalk
/// from the other beams.
pub fn sinr_intended(
    h: &ChannelMatrix,
    w: &PrecoderMatrix,
    sigma2: f64,
    k: usize,
) -> Result<f64> {
    check_operands(h, w, sigma2)?;
    check_user(h, k)?;
    let row = h.entries().row(k) * w.matrix();
    let signal = row[k].norm_sqr();
    let interference: f64 =
        row.iter().enumerate().filter(|(j, _)| *j != k).map(|(_, z)| z.norm_sqr()).sum();
    Ok(signal / (w.gamma() * sigma2 + interference))
}

/// SINR of message `u_k` at the cooperating eavesdropper, which cancels all
/// other messages and matched-filters the beam: `||H_k~ w_k||^2 / (gamma sigma^2)`.
/// Zero when `K = 1` (no eavesdropping rows).
pub fn sinr_eavesdropper(
    h: &ChannelMatrix,
    w: &PrecoderMatrix,
    sigma2: f64,
    k: usize,
) -> Result<f64> {
    check_operands(h, w, sigma2)?;
    check_user(h, k)?;
    if h.num_users() == 1 {
        return Ok(0.0);
    }
    let rest = h.remove_row(k)?;
    let leaked = &rest * w.column(k);
    Ok(leaked.norm_squared() / (w.gamma() * sigma2))
}

/// Secrecy sum-rate of a generic linear precoder: the sum over users of the
/// clipped log-SINR differences.
pub fn secrecy_sum_rate(
    h: &ChannelMatrix,
    w: &PrecoderMatrix,
    sigma2: f64,
) -> Result<SecrecyRateReport> {
    check_operands(h, w, sigma2)?;
    let k_users = h.num_users();
    // F[k][j] = h_k^† w_j; one K x K product serves every SINR. The
    // eavesdropper norm ||H_k~ w_k||^2 equals the column sum over j != k of
    // |h_j^† w_k|^2 = |F[j][k]|^2.
    let f = h.entries() * w.matrix();
    let gs2 = w.gamma() * sigma2;
    let sinrs = (0..k_users).map(|k| {
        let signal = f[(k, k)].norm_sqr();
        let mut interference = 0.0;
        let mut leakage = 0.0;
        for j in 0..k_users {
            if j != k {
                interference += f[(k, j)].norm_sqr();
                leakage += f[(j, k)].norm_sqr();
            }
        }
        SinrPair { intended: signal / (gs2 + interference), eavesdropper: leakage / gs2 }
    });
    Ok(SecrecyRateReport::from_sinrs(sinrs))
}

/// Secrecy sum-rate of the RCI precoder at regularization `alpha`; shorthand
/// for building the precoder and evaluating [`secrecy_sum_rate`].
pub fn rci_secrecy_sum_rate(
    h: &ChannelMatrix,
    alpha: f64,
    sigma2: f64,
) -> Result<SecrecyRateReport> {
    secrecy_sum_rate(h, &rci_precoder(h, alpha)?, sigma2)
}

/// Conventional sum-rate without secrecy requirements,
/// `sum_k log2(1 + SINR_k)` over the intended-user SINRs only.
pub fn sum_rate(h: &ChannelMatrix, w: &PrecoderMatrix, sigma2: f64) -> Result<f64> {
    check_operands(h, w, sigma2)?;
    let k_users = h.num_users();
    let f = h.entries() * w.matrix();
    let gs2 = w.gamma() * sigma2;
    Ok((0..k_users)
        .map(|k| {
            let signal = f[(k, k)].norm_sqr();
            let interference: f64 =
                (0..k_users).filter(|&j| j != k).map(|j| f[(k, j)].norm_sqr()).sum();
            (1.0 + signal / (gs2 + interference)).log2()
        })
        .sum())
}

/// The quadratics `A_k` (signal resolvent) and `B_k` (leakage resolvent) of
/// the leave-one-out channel. Requires `alpha > 0` so the `M x M` resolvent
/// exists for any `K <= M`.
pub fn ak_bk(h: &ChannelMatrix, alpha: f64, k: usize) -> Result<AkBk> {
    check_user(h, k)?;
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::Domain(format!("ak_bk needs alpha > 0, got {alpha}")));
    }
    let rest = h.remove_row(k)?;
    let m = h.num_antennas();
    let mut resolvent = rest.adjoint() * &rest;
    for i in 0..m {
        resolvent[(i, i)] += Complex64::new(alpha, 0.0);
    }
    let chol = Cholesky::new(resolvent)
        .ok_or_else(|| Error::SingularMatrix("leave-one-out resolvent".into()))?;
    let hk = h.user_channel(k)?;
    let x = chol.solve(&hk);
    let a_k = hk.dotc(&x).re;
    let b_k = (&rest * &x).norm_squared();
    Ok(AkBk { a_k: a_k.max(0.0), b_k })
}

/// Closed-form RCI SINRs from the `A_k`/`B_k` quadratics and the trace
/// normalization: `SINR_k = A_k^2 / (B_k + gamma sigma^2 (1 + A_k)^2)` and
/// `SINR_k~ = B_k / (gamma sigma^2 (1 + A_k)^2)`. Agrees with the direct
/// evaluation on `rci_precoder(h, alpha)` to 1e-9 relative.
pub fn rci_sinrs_via_akbk(
    h: &ChannelMatrix,
    alpha: f64,
    sigma2: f64,
    k: usize,
) -> Result<SinrPair> {
    if !(sigma2 > 0.0) || !sigma2.is_finite() {
        return Err(Error::Domain(format!("sigma2 must be positive, got {sigma2}")));
    }
    let AkBk { a_k, b_k } = ak_bk(h, alpha, k)?;
    let gamma = power_normalization(h, alpha)?;
    let denom = gamma * sigma2 * (1.0 + a_k).powi(2);
    Ok(SinrPair { intended: a_k * a_k / (b_k + denom), eavesdropper: b_k / denom })
}

/// Secrecy sum-rate of an RCI precoder with per-user powers `p`:
/// `SINR_k = p_k |h_k^† w_k|^2 / (sum_{j!=k} p_j |h_k^† w_j|^2 + sigma^2)`,
/// `SINR_k~ = p_k sum_{j!=k} |h_j^† w_k|^2 / sigma^2`. With `p_k = 1/gamma`
/// this reduces exactly to [`secrecy_sum_rate`].
pub fn secrecy_sum_rate_pa(
    h: &ChannelMatrix,
    w: &PrecoderMatrix,
    p: &PowerVector,
    sigma2: f64,
) -> Result<SecrecyRateReport> {
    check_operands(h, w, sigma2)?;
    pa_report_unchecked(h, w, p, sigma2)
}

/// Same as [`secrecy_sum_rate_pa`] minus operand re-validation; shared with
/// the power-allocation solver which evaluates it in a hot loop.
pub(crate) fn pa_report_unchecked(
    h: &ChannelMatrix,
    w: &PrecoderMatrix,
    p: &PowerVector,
    sigma2: f64,
) -> Result<SecrecyRateReport> {
    let k_users = h.num_users();
    if p.len() != k_users {
        return Err(Error::Dimension(format!(
            "power vector has {} entries for {} users",
            p.len(),
            k_users
        )));
    }
    let trace: f64 = p
        .powers()
        .iter()
        .zip(w.column_norms_sqr())
        .map(|(&pk, nk)| pk * nk)
        .sum();
    if trace > 1.0 + POWER_BUDGET_SLACK {
        return Err(Error::PowerBudgetExceeded(format!(
            "tr(W_p^† W_p) = {trace} exceeds 1"
        )));
    }
    let f = h.entries() * w.matrix();
    let pw = p.powers();
    let sinrs = (0..k_users).map(|k| {
        let signal = pw[k] * f[(k, k)].norm_sqr();
        let mut interference = 0.0;
        let mut leakage = 0.0;
        for j in 0..k_users {
            if j != k {
                interference += pw[j] * f[(k, j)].norm_sqr();
                leakage += f[(j, k)].norm_sqr();
            }
        }
        SinrPair {
            intended: signal / (interference + sigma2),
            eavesdropper: pw[k] * leakage / sigma2,
        }
    });
    Ok(SecrecyRateReport::from_sinrs(sinrs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{sample_channel, RngSpec};
    use nalgebra::{linalg::SymmetricEigen, DMatrix};

    fn scalar_channel(x: f64) -> ChannelMatrix {
        ChannelMatrix::from_matrix(DMatrix::from_element(1, 1, Complex64::new(x, 0.0))).unwrap()
    }

    fn identity_channel(n: usize) -> ChannelMatrix {
        ChannelMatrix::from_matrix(DMatrix::identity(n, n)).unwrap()
    }

    fn rel_close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300)
    }

    #[test]
    fn scalar_sinr_and_rate() {
        let h = scalar_channel(1.0);
        let w = rci_precoder(&h, 1.0).unwrap();
        let si = sinr_intended(&h, &w, 1.0, 0).unwrap();
        assert!((si - 1.0).abs() < 1e-12);
        let se = sinr_eavesdropper(&h, &w, 1.0, 0).unwrap();
        assert_eq!(se, 0.0);
        let report = secrecy_sum_rate(&h, &w, 1.0).unwrap();
        assert!((report.sum_bits - 1.0).abs() < 1e-12);
        assert!(!report.per_user[0].clipped);
    }

    #[test]
    fn diagonal_sinr_and_rate() {
        let h = identity_channel(2);
        let w = rci_precoder(&h, 0.5).unwrap();
        for k in 0..2 {
            let si = sinr_intended(&h, &w, 0.5, k).unwrap();
            assert!((si - 1.0).abs() < 1e-12);
            // off-diagonal leakage is zero on a diagonal channel
            let se = sinr_eavesdropper(&h, &w, 0.5, k).unwrap();
            assert!(se.abs() < 1e-24);
        }
        let report = secrecy_sum_rate(&h, &w, 0.5).unwrap();
        assert!((report.sum_bits - 2.0).abs() < 1e-12);
    }

    #[test]
    fn zero_beam_gives_zero_sinr() {
        let h = sample_channel(2, 2, &RngSpec::new(4, 0));
        let mut wm = rci_precoder(&h, 0.5).unwrap().matrix().clone();
        wm.column_mut(0).fill(Complex64::new(0.0, 0.0));
        let w = PrecoderMatrix::from_matrix(wm, None).unwrap();
        assert_eq!(sinr_intended(&h, &w, 1.0, 0).unwrap(), 0.0);
    }

    #[test]
    fn eavesdropper_norm_expands_row_wise() {
        let h = sample_channel(4, 4, &RngSpec::new(42, 1));
        let w = rci_precoder(&h, 0.3).unwrap();
        let sigma2 = 0.7;
        for k in 0..4 {
            let direct = sinr_eavesdropper(&h, &w, sigma2, k).unwrap();
            let mut expanded = 0.0;
            for j in 0..4 {
                if j != k {
                    let hj = h.user_channel(j).unwrap();
                    expanded += hj.dotc(&w.column(k).clone_owned()).norm_sqr();
                }
            }
            expanded /= w.gamma() * sigma2;
            assert!(rel_close(direct, expanded, 1e-12), "{direct} vs {expanded}");
        }
    }

    #[test]
    fn vanishing_snr_kills_rate() {
        let h = sample_channel(3, 3, &RngSpec::new(6, 0));
        let w = rci_precoder(&h, 0.4).unwrap();
        let report = secrecy_sum_rate(&h, &w, 1e12).unwrap();
        assert!(report.sum_bits < 1e-9);
    }

    #[test]
    fn rate_nonincreasing_in_sigma2() {
        let h = sample_channel(3, 3, &RngSpec::new(6, 1));
        let w = rci_precoder(&h, 0.4).unwrap();
        let mut last = f64::INFINITY;
        for &s2 in &[0.01, 0.1, 0.5, 1.0, 5.0, 50.0] {
            let r = secrecy_sum_rate(&h, &w, s2).unwrap().sum_bits;
            assert!(r <= last + 1e-12);
            last = r;
        }
    }

    #[test]
    fn scale_invariance_of_rates() {
        let h = sample_channel(4, 4, &RngSpec::new(13, 3));
        let w = rci_precoder(&h, 0.2).unwrap();
        let scaled = PrecoderMatrix::from_matrix(
            w.matrix() * Complex64::new(3.7, 0.0),
            w.alpha(),
        )
        .unwrap();
        let sigma2 = 0.3;
        let a = secrecy_sum_rate(&h, &w, sigma2).unwrap();
        let b = secrecy_sum_rate(&h, &scaled, sigma2).unwrap();
        for (ua, ub) in a.per_user.iter().zip(&b.per_user) {
            assert!(rel_close(ua.sinr.intended, ub.sinr.intended, 1e-10));
            assert!(rel_close(ua.sinr.eavesdropper, ub.sinr.eavesdropper, 1e-10));
        }
        assert!(rel_close(a.sum_bits, b.sum_bits, 1e-10));
    }

    #[test]
    fn clipping_never_negative_and_only_helps() {
        let h = sample_channel(4, 4, &RngSpec::new(99, 0));
        // matched filter leaks aggressively: good chance of clipped users
        let w = crate::precoder::mf_precoder(&h).unwrap();
        let report = secrecy_sum_rate(&h, &w, 0.05).unwrap();
        assert!(report.per_user.iter().all(|u| u.rate_bits >= 0.0));
        assert!(report.sum_bits >= report.sum_bits_unclipped() - 1e-12);
        assert!(report.per_user.iter().any(|u| u.clipped), "expected clipping at work");
    }

    #[test]
    fn akbk_scalar_and_diagonal() {
        let h = scalar_channel(1.5);
        let AkBk { a_k, b_k } = ak_bk(&h, 2.0, 0).unwrap();
        assert!((a_k - 1.5 * 1.5 / 2.0).abs() < 1e-12);
        assert_eq!(b_k, 0.0);

        let h = identity_channel(2);
        let AkBk { a_k, b_k } = ak_bk(&h, 0.5, 0).unwrap();
        assert!((a_k - 2.0).abs() < 1e-12, "A = 1/alpha on orthogonal rows");
        assert!(b_k.abs() < 1e-24);
    }

    #[test]
    fn akbk_psd_ordering() {
        for trial in 0..10 {
            let h = sample_channel(3, 3, &RngSpec::new(7, trial));
            let alpha = 0.4;
            for k in 0..3 {
                let AkBk { a_k, b_k } = ak_bk(&h, alpha, k).unwrap();
                assert!(a_k >= 0.0 && b_k >= 0.0);
                let rest = h.remove_row(k).unwrap();
                let gram = rest.adjoint() * &rest;
                let mu_max = SymmetricEigen::new(gram)
                    .eigenvalues
                    .iter()
                    .cloned()
                    .fold(0.0f64, f64::max);
                // B/A <= max eig of Q(Q + alpha I)^{-1}
                let bound = a_k * mu_max / (mu_max + alpha);
                assert!(b_k <= bound * (1.0 + 1e-10), "B={b_k} A-bound={bound}");
            }
        }
    }

    #[test]
    fn akbk_route_matches_direct_sinrs() {
        // scalar case
        let h = scalar_channel(1.0);
        let s = rci_sinrs_via_akbk(&h, 1.0, 1.0, 0).unwrap();
        assert!((s.intended - 1.0).abs() < 1e-12);
        assert_eq!(s.eavesdropper, 0.0);

        // diagonal case: SINR_k = 1/(2 sigma^2)
        let h = identity_channel(2);
        let s = rci_sinrs_via_akbk(&h, 0.5, 0.5, 0).unwrap();
        assert!((s.intended - 1.0).abs() < 1e-12);

        // random instances
        for trial in 0..100 {
            let h = sample_channel(4, 4, &RngSpec::new(1000, trial));
            let alpha = 0.3;
            let sigma2 = 0.25;
            let w = rci_precoder(&h, alpha).unwrap();
            for k in 0..4 {
                let closed = rci_sinrs_via_akbk(&h, alpha, sigma2, k).unwrap();
                let si = sinr_intended(&h, &w, sigma2, k).unwrap();
                let se = sinr_eavesdropper(&h, &w, sigma2, k).unwrap();
                assert!(rel_close(closed.intended, si, 1e-9), "{} vs {si}", closed.intended);
                assert!(
                    rel_close(closed.eavesdropper, se, 1e-9),
                    "{} vs {se}",
                    closed.eavesdropper
                );
            }
        }
    }

    #[test]
    fn pa_equal_power_reduces_to_equal_power_precoder() {
        let h = sample_channel(4, 4, &RngSpec::new(55, 0));
        let alpha = 0.6;
        let sigma2 = 0.4;
        let w = rci_precoder(&h, alpha).unwrap();
        let p = PowerVector::equal_power(w.gamma(), 4);
        let pa = secrecy_sum_rate_pa(&h, &w, &p, sigma2).unwrap();
        let ep = secrecy_sum_rate(&h, &w, sigma2).unwrap();
        assert!(rel_close(pa.sum_bits, ep.sum_bits, 1e-12));
        for (a, b) in pa.per_user.iter().zip(&ep.per_user) {
            assert!(rel_close(a.sinr.intended, b.sinr.intended, 1e-12));
            assert!(rel_close(a.sinr.eavesdropper, b.sinr.eavesdropper, 1e-12));
        }
    }

    #[test]
    fn pa_zero_power_and_single_user() {
        let h = sample_channel(3, 3, &RngSpec::new(55, 1));
        let w = rci_precoder(&h, 0.5).unwrap();
        let zero = secrecy_sum_rate_pa(&h, &w, &PowerVector::zeros(3), 1.0).unwrap();
        assert_eq!(zero.sum_bits, 0.0);

        // K = 1: full budget closed form
        let h1 = sample_channel(1, 3, &RngSpec::new(55, 2));
        let w1 = rci_precoder(&h1, 0.7).unwrap();
        let n1 = w1.column_norms_sqr()[0];
        let p = PowerVector::from_powers(vec![1.0 / n1]).unwrap();
        let sigma2 = 0.3;
        let got = secrecy_sum_rate_pa(&h1, &w1, &p, sigma2).unwrap().sum_bits;
        let hw = h1.user_channel(0).unwrap().dotc(&w1.column(0).clone_owned()).norm_sqr();
        let expect = (1.0 + hw / (n1 * sigma2)).log2();
        assert!(rel_close(got, expect, 1e-12));
    }

    #[test]
    fn pa_rejects_budget_violation() {
        let h = sample_channel(2, 2, &RngSpec::new(55, 3));
        let w = rci_precoder(&h, 0.5).unwrap();
        let p = PowerVector::from_powers(vec![100.0, 100.0]).unwrap();
        assert!(matches!(
            secrecy_sum_rate_pa(&h, &w, &p, 1.0),
            Err(Error::PowerBudgetExceeded(_))
        ));
    }

    #[test]
    fn report_serializes_with_spec_field_names() {
        let h = scalar_channel(1.0);
        let w = rci_precoder(&h, 1.0).unwrap();
        let report = secrecy_sum_rate(&h, &w, 1.0).unwrap();
        let json = serde_json::to_value(&report).unwrap();
        let user = &json["per_user"][0];
        assert!(user["sinr_k"].is_number());
        assert!(user["sinr_ke"].is_number());
        assert!(user["rate_bits"].is_number());
        assert!(user["clipped"].is_boolean());
        assert!(json["sum_bits"].is_number());
    }

    #[test]
    fn sum_rate_ignores_leakage_and_dominates_secrecy_rate() {
        let h = identity_channel(2);
        let w = rci_precoder(&h, 0.5).unwrap();
        // no leakage on a diagonal channel: sum-rate equals secrecy sum-rate
        let sr = sum_rate(&h, &w, 0.5).unwrap();
        assert!((sr - 2.0).abs() < 1e-12);

        let h = sample_channel(4, 4, &RngSpec::new(31, 0));
        let w = rci_precoder(&h, 0.4).unwrap();
        let sr = sum_rate(&h, &w, 0.1).unwrap();
        let secrecy = secrecy_sum_rate(&h, &w, 0.1).unwrap().sum_bits;
        assert!(sr >= secrecy - 1e-12);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let h = sample_channel(2, 3, &RngSpec::new(0, 0));
        let other = sample_channel(2, 2, &RngSpec::new(0, 1));
        let w = rci_precoder(&other, 0.5).unwrap();
        assert!(matches!(
            sinr_intended(&h, &w, 1.0, 0),
            Err(Error::Dimension(_))
        ));
    }
}
