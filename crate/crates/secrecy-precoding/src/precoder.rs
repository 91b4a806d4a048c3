//! Linear precoder construction.
//!
//! All precoders are `M x K` matrices `W = [w_1, ..., w_K]` whose column `k`
//! beamforms the confidential message of user `k`. The transmitted signal is
//! `x = W u / sqrt(gamma)` with `gamma = tr{W^† W}`, so the long-term
//! transmit power is one regardless of the channel draw. Supported schemes:
//!
//! - regularized channel inversion `W = H^†(HH^† + alpha I)^{-1}`,
//! - plain channel inversion (`alpha = 0`),
//! - matched filter `W = H^†`,
//! - RCI with an arbitrary per-user power allocation `W_p = W diag(sqrt p)`.

use nalgebra::{DMatrix, linalg::Cholesky, linalg::SymmetricEigen};
use num_complex::Complex64;

use crate::channel::ChannelMatrix;
use crate::power_alloc::PowerVector;
use crate::{Error, Result};

/// Slack on the unit trace power constraint when validating a power vector.
pub const POWER_BUDGET_SLACK: f64 = 1e-9;

/// A linear precoding matrix together with its power normalization
/// `gamma = tr{W^† W}` and, where applicable, the regularization parameter
/// that produced it.
#[derive(Debug, Clone)]
pub struct PrecoderMatrix {
    columns: DMatrix<Complex64>,
    gamma: f64,
    alpha: Option<f64>,
}

impl PrecoderMatrix {
    /// Wrap an explicit `M x K` matrix, computing `gamma` from its columns.
    /// Fails if the matrix is zero (then `gamma = 0` and the power
    /// normalization `1/sqrt(gamma)` is undefined) or has non-finite entries.
    pub fn from_matrix(columns: DMatrix<Complex64>, alpha: Option<f64>) -> Result<Self> {
        if columns.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Parse("precoder matrix has non-finite entries".into()));
        }
        let gamma = columns.norm_squared();
        if gamma <= 0.0 {
            return Err(Error::ZeroChannel);
        }
        Ok(Self { columns, gamma, alpha })
    }

    /// The `M x K` matrix `W`.
    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.columns
    }

    /// Beamforming column `w_k`.
    pub fn column(&self, k: usize) -> nalgebra::DVectorView<'_, Complex64> {
        self.columns.column(k)
    }

    /// Long-term power normalization `gamma = tr{W^† W} = sum_k ||w_k||^2`.
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Regularization parameter used to build this precoder, if any.
    pub fn alpha(&self) -> Option<f64> {
        self.alpha
    }

    pub fn num_users(&self) -> usize {
        self.columns.ncols()
    }

    pub fn num_antennas(&self) -> usize {
        self.columns.nrows()
    }

    /// `||w_k||^2` for every column.
    pub fn column_norms_sqr(&self) -> Vec<f64> {
        (0..self.num_users()).map(|k| self.columns.column(k).norm_squared()).collect()
    }
}

/// RCI precoder with explicit per-user powers: `W_p = W diag(sqrt(p))`.
/// The power constraint `tr{W_p^† W_p} = sum_k p_k ||w_k||^2 <= 1` replaces
/// the `1/sqrt(gamma)` normalization of the equal-power precoder.
#[derive(Debug, Clone)]
pub struct PowerAllocatedPrecoder {
    base: PrecoderMatrix,
    powers: PowerVector,
    effective: DMatrix<Complex64>,
}

impl PowerAllocatedPrecoder {
    pub fn base(&self) -> &PrecoderMatrix {
        &self.base
    }

    pub fn powers(&self) -> &PowerVector {
        &self.powers
    }

    /// Effective columns `sqrt(p_k) w_k`.
    pub fn effective_columns(&self) -> &DMatrix<Complex64> {
        &self.effective
    }

    /// `tr{W_p^† W_p}`, at most `1 + 1e-9` by construction.
    pub fn trace_power(&self) -> f64 {
        self.effective.norm_squared()
    }
}

fn gram_kxk(h: &ChannelMatrix) -> DMatrix<Complex64> {
    h.entries() * h.entries().adjoint()
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !alpha.is_finite() || alpha < 0.0 {
        return Err(Error::Domain(format!("alpha must be finite and >= 0, got {alpha}")));
    }
    Ok(())
}

fn check_full_row_rank(gram: &DMatrix<Complex64>, k: usize) -> Result<()> {
    let eig = SymmetricEigen::new(gram.clone());
    let lambda_max = eig.eigenvalues.iter().cloned().fold(0.0f64, f64::max);
    if eig.eigenvalues.iter().any(|&l| l <= lambda_max * k as f64 * f64::EPSILON) {
        return Err(Error::SingularMatrix("alpha = 0 requires a full-row-rank channel".into()));
    }
    Ok(())
}

/// Regularized channel inversion `W = H^†(HH^† + alpha I_K)^{-1}`.
///
/// Solved through a Cholesky factorization of the Hermitian positive-definite
/// `HH^† + alpha I`; `alpha = 0` is accepted only when `HH^†` is nonsingular.
/// Debug builds cross-check the algebraically equivalent dual form
/// `(H^†H + alpha I_M)^{-1} H^†`.
pub fn rci_precoder(h: &ChannelMatrix, alpha: f64) -> Result<PrecoderMatrix> {
    check_alpha(alpha)?;
    if h.entries().norm_squared() == 0.0 {
        return Err(Error::ZeroChannel);
    }
    let k = h.num_users();
    let mut gram = gram_kxk(h);
    if alpha == 0.0 {
        // Cholesky does not pivot, so a PSD-singular Gram matrix can slip
        // through with garbage factors; reject rank deficiency explicitly.
        check_full_row_rank(&gram, k)?;
    }
    for i in 0..k {
        gram[(i, i)] += Complex64::new(alpha, 0.0);
    }
    let chol = Cholesky::new(gram).ok_or_else(|| {
        Error::SingularMatrix(format!("HH^† + {alpha} I is not positive definite"))
    })?;
    // W = H^† G^{-1} = (G^{-1} H)^† since G is Hermitian.
    let w = chol.solve(h.entries()).adjoint();

    #[cfg(debug_assertions)]
    if alpha > 0.0 {
        let m = h.num_antennas();
        let mut dual = h.entries().adjoint() * h.entries();
        for i in 0..m {
            dual[(i, i)] += Complex64::new(alpha, 0.0);
        }
        if let Some(chol_m) = Cholesky::new(dual) {
            let w_dual = chol_m.solve(&h.entries().adjoint());
            let rel = (&w - &w_dual).norm() / w.norm();
            debug_assert!(rel <= 1e-9, "RCI dual-form mismatch: relative error {rel:e}");
        }
    }

    PrecoderMatrix::from_matrix(w, Some(alpha))
}

/// Power normalization `gamma = tr{H^†H (H^†H + alpha I)^{-2}}`, evaluated
/// spectrally as `sum_k lambda_k / (lambda_k + alpha)^2` over the eigenvalues
/// of `HH^†` (the nonzero spectra of `H^†H` and `HH^†` coincide).
///
/// This is an independent route to the same constant as
/// `rci_precoder(h, alpha).gamma()`.
pub fn power_normalization(h: &ChannelMatrix, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if h.entries().norm_squared() == 0.0 {
        return Err(Error::ZeroChannel);
    }
    let gram = gram_kxk(h);
    let eig = SymmetricEigen::new(gram);
    let lambda_max = eig.eigenvalues.iter().cloned().fold(0.0f64, f64::max);
    let rank_tol = lambda_max * h.num_users() as f64 * f64::EPSILON;
    if alpha == 0.0 && eig.eigenvalues.iter().any(|&l| l <= rank_tol) {
        return Err(Error::SingularMatrix(
            "alpha = 0 requires a full-row-rank channel".into(),
        ));
    }
    Ok(eig
        .eigenvalues
        .iter()
        .map(|&l| {
            let l = l.max(0.0);
            l / (l + alpha).powi(2)
        })
        .sum())
}

/// Channel inversion (zero forcing) `W = H^†(HH^†)^{-1}`, defined for
/// `K <= M` with full-row-rank `H`; satisfies `HW = I_K`.
pub fn ci_precoder(h: &ChannelMatrix) -> Result<PrecoderMatrix> {
    if h.num_users() > h.num_antennas() {
        return Err(Error::Dimension(format!(
            "channel inversion needs K <= M, got K = {}, M = {}",
            h.num_users(),
            h.num_antennas()
        )));
    }
    rci_precoder(h, 0.0)
}

/// Matched filter `W = H^†` with `gamma = tr{HH^†}`.
///
/// The columns are the conjugated user channels; no scaling is applied
/// because every rate expression divides by `gamma`, so any positive scalar
/// on `W` cancels.
pub fn mf_precoder(h: &ChannelMatrix) -> Result<PrecoderMatrix> {
    PrecoderMatrix::from_matrix(h.entries().adjoint(), None)
}

/// Scale the columns of `w` by `sqrt(p_k)`, enforcing the trace constraint
/// `sum_k p_k ||w_k||^2 <= 1 + 1e-9`. No `gamma` rescaling is applied; the
/// power constraint is absorbed into `p`.
pub fn apply_power_allocation(
    w: &PrecoderMatrix,
    p: &PowerVector,
) -> Result<PowerAllocatedPrecoder> {
    if p.len() != w.num_users() {
        return Err(Error::Dimension(format!(
            "power vector has {} entries for {} users",
            p.len(),
            w.num_users()
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
    let mut effective = w.matrix().clone();
    for (k, &pk) in p.powers().iter().enumerate() {
        let s = Complex64::new(pk.sqrt(), 0.0);
        effective.column_mut(k).apply(|z| *z *= s);
    }
    Ok(PowerAllocatedPrecoder { base: w.clone(), powers: p.clone(), effective })
}
