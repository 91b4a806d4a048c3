//! Secrecy-rate-maximizing power allocation for the RCI precoder.
//!
//! The per-user powers `p` enter the rate through `W_p = W diag(sqrt p)`
//! under the trace constraint `sum_k p_k ||w_k||^2 <= 1`. In the variables
//! `p~_k = log p_k` the leakage term of the secrecy sum-rate is concave, and
//! the intended-SINR term is bounded from below by the tangent surrogate
//! `a log z + b <= log(1 + z)` (tight at the anchor `z_0`). Replacing the
//! first term by its surrogate yields a concave program that is solved
//! exactly; re-anchoring at the solution and repeating drives the true
//! objective up monotonically (successive convex approximation).
//!
//! Two entry points:
//! - [`sca_power_allocation`]: powers at a fixed regularization `alpha`.
//! - [`joint_optimize`]: alternates a derivative-free-gradient ascent on
//!   `alpha` with the power solver, starting from the large-system
//!   `alpha = K xi_opt(rho)`.
//!
//! The inner concave maximization uses a log-barrier interior method on
//! `p~` with damped Newton centering; the barrier parameter shrinks
//! geometrically until the duality-gap surrogate is below tolerance.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::channel::ChannelMatrix;
use crate::large_system::xi_opt;
use crate::precoder::{rci_precoder, PrecoderMatrix};
use crate::{Error, Result};

/// Powers below this value are reported as muted: `p~ = log p` cannot reach
/// `p = 0`, so users whose unclipped rate would be negative are driven to
/// the floor instead (clipping then zeroes their contribution).
pub const P_FLOOR: f64 = 1e-12;

const LOG2_E: f64 = std::f64::consts::LOG2_E;

/// Nonnegative per-user power weights under the trace constraint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerVector {
    p: Vec<f64>,
}

impl PowerVector {
    pub fn from_powers(p: Vec<f64>) -> Result<Self> {
        if p.iter().any(|&x| !x.is_finite() || x < 0.0) {
            return Err(Error::Domain("powers must be finite and >= 0".into()));
        }
        Ok(Self { p })
    }

    /// Powers from their logs; `-inf` maps to exactly zero power.
    pub fn from_log(log_p: &[f64]) -> Self {
        Self { p: log_p.iter().map(|&lp| lp.exp()).collect() }
    }

    /// The equal-power allocation `p_k = 1/gamma`, which reproduces the
    /// unit-trace equal-power precoder.
    pub fn equal_power(gamma: f64, num_users: usize) -> Self {
        Self { p: vec![1.0 / gamma; num_users] }
    }

    pub fn zeros(num_users: usize) -> Self {
        Self { p: vec![0.0; num_users] }
    }

    pub fn powers(&self) -> &[f64] {
        &self.p
    }

    /// `p~_k = log p_k` (`-inf` for zero powers).
    pub fn log_powers(&self) -> Vec<f64> {
        self.p.iter().map(|&x| x.ln()).collect()
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    /// Users whose power sits at (or below) the optimizer floor.
    pub fn muted_users(&self) -> Vec<usize> {
        self.p
            .iter()
            .enumerate()
            .filter(|(_, &p)| p <= P_FLOOR * (1.0 + 1e-6))
            .map(|(k, _)| k)
            .collect()
    }
}

/// Coefficients of the tangent lower bound `a log z + b <= log(1 + z)`
/// (natural logs), generated at an anchor `z_0 >= 0` and tight there.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TangentCoeffs {
    pub a: f64,
    pub b: f64,
}

impl TangentCoeffs {
    /// The `z_0 -> inf` limit `(a, b) = (1, 0)`, i.e. the high-SNR
    /// surrogate `log z <= log(1 + z)`. This is the prescribed
    /// initialization of the power-allocation iteration.
    pub fn high_snr_init() -> Self {
        Self { a: 1.0, b: 0.0 }
    }

    /// Evaluate `a log z + b`.
    pub fn bound(&self, z: f64) -> f64 {
        if self.a == 0.0 {
            self.b
        } else {
            self.a * z.ln() + self.b
        }
    }
}

/// Tangent coefficients at anchor `z_0`: `a = z_0/(1+z_0)` and
/// `b = log(1+z_0) - a log z_0`. The limit `z_0 log z_0 -> 0` makes
/// `z_0 = 0` yield `(0, 0)`.
pub fn tangent_coeffs(z0: f64) -> Result<TangentCoeffs> {
    if !z0.is_finite() || z0 < 0.0 {
        return Err(Error::Domain(format!("tangent anchor must be finite and >= 0, got {z0}")));
    }
    if z0 == 0.0 {
        return Ok(TangentCoeffs { a: 0.0, b: 0.0 });
    }
    let a = z0 / (1.0 + z0);
    let b = z0.ln_1p() - a * z0.ln();
    Ok(TangentCoeffs { a, b })
}

/// Leakage term of the secrecy rate in the log-power domain:
/// `-log2(1 + e^{p~} L / sigma^2)` with `L = sum_{j!=k} |h_j^† w_k|^2`.
pub fn leakage_term_bits(p_tilde: f64, leak_gain: f64, sigma2: f64) -> f64 {
    -(p_tilde.exp() * leak_gain / sigma2).ln_1p() * LOG2_E
}

/// Analytic second derivative of [`leakage_term_bits`] in `p~`:
/// `-l sigma^2 / (sigma^2 + l)^2 * log2(e)` with `l = e^{p~} L`.
/// Nonpositive everywhere, which is the concavity half of the argument that
/// makes the surrogate problem convex.
pub fn leakage_term_second_derivative_bits(p_tilde: f64, leak_gain: f64, sigma2: f64) -> f64 {
    let l = p_tilde.exp() * leak_gain;
    let t = l / (sigma2 + l);
    -t * (1.0 - t) * LOG2_E
}

/// Precomputed channel/precoder gains consumed by the power optimizer.
struct PaGains {
    /// `|h_k^† w_k|^2`
    signal: Vec<f64>,
    /// `cross[k][j] = |h_k^† w_j|^2`
    cross: Vec<Vec<f64>>,
    /// `L_k = sum_{j!=k} |h_j^† w_k|^2`
    leak: Vec<f64>,
    /// `||w_k||^2`
    wnorm2: Vec<f64>,
    sigma2: f64,
}

impl PaGains {
    fn new(h: &ChannelMatrix, w: &PrecoderMatrix, sigma2: f64) -> Self {
        let k_users = h.num_users();
        let f = h.entries() * w.matrix();
        let mut signal = vec![0.0; k_users];
        let mut cross = vec![vec![0.0; k_users]; k_users];
        let mut leak = vec![0.0; k_users];
        for k in 0..k_users {
            signal[k] = f[(k, k)].norm_sqr();
            for j in 0..k_users {
                cross[k][j] = f[(k, j)].norm_sqr();
                if j != k {
                    leak[k] += f[(j, k)].norm_sqr();
                }
            }
        }
        Self { signal, cross, leak, wnorm2: w.column_norms_sqr(), sigma2 }
    }

    fn num_users(&self) -> usize {
        self.signal.len()
    }

    /// `sum_k e^{x_k} ||w_k||^2`, the left side of the trace constraint.
    fn budget(&self, x: &[f64]) -> f64 {
        x.iter().zip(&self.wnorm2).map(|(&xk, &nk)| xk.exp() * nk).sum()
    }

    /// Interference-plus-noise seen by user `k`.
    fn denom(&self, x: &[f64], k: usize) -> f64 {
        let mut d = self.sigma2;
        for j in 0..self.num_users() {
            if j != k {
                d += x[j].exp() * self.cross[k][j];
            }
        }
        d
    }

    /// Intended-user SINR at log-powers `x`, with the noise outside the
    /// power normalization.
    fn sinr_intended(&self, x: &[f64], k: usize) -> f64 {
        x[k].exp() * self.signal[k] / self.denom(x, k)
    }

    fn sinr_eavesdropper(&self, x: &[f64], k: usize) -> f64 {
        x[k].exp() * self.leak[k] / self.sigma2
    }

    /// True secrecy sum-rate at `x`, in bits, without clipping.
    fn unclipped_rate_bits(&self, x: &[f64]) -> f64 {
        (0..self.num_users())
            .map(|k| {
                (1.0 + self.sinr_intended(x, k)).log2()
                    - (1.0 + self.sinr_eavesdropper(x, k)).log2()
            })
            .sum()
    }

    /// True secrecy sum-rate at `x`, in bits, with per-user clipping.
    fn clipped_rate_bits(&self, x: &[f64]) -> f64 {
        (0..self.num_users())
            .map(|k| {
                ((1.0 + self.sinr_intended(x, k)).log2()
                    - (1.0 + self.sinr_eavesdropper(x, k)).log2())
                .max(0.0)
            })
            .sum()
    }

    /// Surrogate objective in nats:
    /// `sum_k a_k (x_k + ln S_k - ln D_k(x)) + b_k - ln(1 + e^{x_k} L_k / sigma^2)`.
    fn objective_nats(&self, x: &[f64], coeffs: &[TangentCoeffs]) -> f64 {
        let mut total = 0.0;
        for k in 0..self.num_users() {
            let c = coeffs[k];
            if c.a != 0.0 {
                let ln_signal = self.signal[k].max(f64::MIN_POSITIVE).ln();
                total += c.a * (x[k] + ln_signal - self.denom(x, k).ln());
            }
            total += c.b;
            total -= (x[k].exp() * self.leak[k] / self.sigma2).ln_1p();
        }
        total
    }

    fn gradient_nats(&self, x: &[f64], coeffs: &[TangentCoeffs], out: &mut DVector<f64>) {
        let n = self.num_users();
        for m in 0..n {
            let leak_lin = x[m].exp() * self.leak[m];
            let t = leak_lin / (self.sigma2 + leak_lin);
            out[m] = coeffs[m].a - t;
        }
        for k in 0..n {
            let a = coeffs[k].a;
            if a == 0.0 {
                continue;
            }
            let d = self.denom(x, k);
            for m in 0..n {
                if m != k {
                    out[m] -= a * x[m].exp() * self.cross[k][m] / d;
                }
            }
        }
    }

    fn hessian_nats(&self, x: &[f64], coeffs: &[TangentCoeffs]) -> DMatrix<f64> {
        let n = self.num_users();
        let mut hess = DMatrix::zeros(n, n);
        for m in 0..n {
            let leak_lin = x[m].exp() * self.leak[m];
            let t = leak_lin / (self.sigma2 + leak_lin);
            hess[(m, m)] -= t * (1.0 - t);
        }
        let mut u = vec![0.0; n];
        for k in 0..n {
            let a = coeffs[k].a;
            if a == 0.0 {
                continue;
            }
            let d = self.denom(x, k);
            for m in 0..n {
                u[m] = if m == k { 0.0 } else { x[m].exp() * self.cross[k][m] };
            }
            for m in 0..n {
                if u[m] == 0.0 {
                    continue;
                }
                hess[(m, m)] -= a * u[m] / d;
                for l in 0..n {
                    if u[l] != 0.0 {
                        hess[(m, l)] += a * u[m] * u[l] / (d * d);
                    }
                }
            }
        }
        hess
    }
}

/// Solver diagnostics shared by the inner convex solver, the fixed-alpha
/// power allocator and the joint optimizer.
///
/// `objective_trace` holds, in bits: the surrogate objective per barrier
/// stage (inner solver), the unclipped secrecy sum-rate per outer iteration
/// (fixed-alpha solver), or the clipped secrecy sum-rate per accepted outer
/// iteration (joint optimizer). In every case it is nondecreasing up to 1e-9.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveDiagnostics {
    pub objective_trace: Vec<f64>,
    pub outer_iterations: usize,
    pub inner_iterations: usize,
    pub kkt_residual: f64,
    pub converged: bool,
    /// Regularization path of the joint optimizer; empty for fixed-alpha runs.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub alpha_trace: Vec<f64>,
    /// Users parked at the power floor (effectively muted).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub muted_users: Vec<usize>,
}

struct InnerOutcome {
    x: Vec<f64>,
    stages: usize,
    newton_steps: usize,
    kkt_residual: f64,
    converged: bool,
    stage_objectives_bits: Vec<f64>,
}

/// Power floor in the log domain, guarded so it always sits well below the
/// equal-power level even for extreme `gamma`.
fn log_floor(gamma: f64) -> f64 {
    P_FLOOR.min(0.01 / gamma).ln()
}

/// Pull a point into the strict interior of the feasible set
/// (`budget < 1`, `x > lf`).
fn make_strictly_feasible(gains: &PaGains, x: &mut [f64], lf: f64) {
    for _ in 0..3 {
        for xk in x.iter_mut() {
            if *xk < lf + 1e-9 {
                *xk = lf + 1e-9;
            }
        }
        let c = gains.budget(x);
        if c > 1.0 - 1e-9 {
            let shift = (c / (1.0 - 1e-6)).ln();
            for xk in x.iter_mut() {
                *xk -= shift;
            }
        } else {
            break;
        }
    }
}

/// Estimate how far `x` is from first-order optimality, used to pick the
/// initial barrier parameter: a warm start at the optimum should need a
/// single stage.
fn stationarity_estimate(gains: &PaGains, coeffs: &[TangentCoeffs], x: &[f64], lf: f64) -> f64 {
    let n = gains.num_users();
    let mut grad = DVector::zeros(n);
    gains.gradient_nats(x, coeffs, &mut grad);
    let v: Vec<f64> = x.iter().zip(&gains.wnorm2).map(|(&xk, &nk)| xk.exp() * nk).collect();
    let vv: f64 = v.iter().map(|&vi| vi * vi).sum();
    let gv: f64 = grad.iter().zip(&v).map(|(&gi, &vi)| gi * vi).sum();
    let lambda = (gv / vv.max(f64::MIN_POSITIVE)).max(0.0);
    let mut res = 0.0f64;
    for m in 0..n {
        let r = grad[m] - lambda * v[m];
        let near_floor = x[m] - lf < 1e-6;
        // at an active floor the stationarity residual may legally be negative
        let contrib = if near_floor { r.max(0.0) } else { r.abs() };
        res = res.max(contrib);
    }
    res
}

/// Interior-point maximization of the surrogate objective over the strictly
/// feasible log-powers. Returns the final iterate and solve statistics.
fn barrier_solve(
    gains: &PaGains,
    coeffs: &[TangentCoeffs],
    warm: &[f64],
    tol: f64,
) -> InnerOutcome {
    let n = gains.num_users();
    let gamma_scale: f64 = 1.0 / gains.wnorm2.iter().sum::<f64>();
    let lf = log_floor(1.0 / gamma_scale);
    let n_constraints = (n + 1) as f64;

    let mut x = warm.to_vec();
    make_strictly_feasible(gains, &mut x, lf);

    let mu_min = 0.5 * tol / n_constraints;
    // A near-stationary warm start skips the path-following schedule and
    // goes straight to the final barrier parameter.
    let estimate = stationarity_estimate(gains, coeffs, &x, lf);
    let mut mu = if estimate < 1e-4 { mu_min } else { estimate.clamp(mu_min, 0.1) };

    let mut grad = DVector::zeros(n);
    let mut newton_steps = 0usize;
    let mut stages = 0usize;
    let mut stage_objectives_bits = Vec::new();
    let mut converged = false;
    let mut last_grad_norm = f64::INFINITY;

    let barrier_value = |x: &[f64], mu: f64| -> f64 {
        let s = 1.0 - gains.budget(x);
        if s <= 0.0 || x.iter().any(|&xk| xk <= lf) {
            return f64::NEG_INFINITY;
        }
        let floors: f64 = x.iter().map(|&xk| (xk - lf).ln()).sum();
        gains.objective_nats(x, coeffs) + mu * (s.ln() + floors)
    };

    'outer: while stages < 80 {
        stages += 1;
        // Newton centering at the current barrier parameter
        for _ in 0..60 {
            let s = 1.0 - gains.budget(&x);
            let v: Vec<f64> =
                x.iter().zip(&gains.wnorm2).map(|(&xk, &nk)| xk.exp() * nk).collect();
            gains.gradient_nats(&x, coeffs, &mut grad);
            let mut hess = gains.hessian_nats(&x, coeffs);
            for m in 0..n {
                grad[m] += -mu * v[m] / s + mu / (x[m] - lf);
                hess[(m, m)] -= mu * (v[m] / s + 1.0 / (x[m] - lf).powi(2));
                for l in 0..n {
                    hess[(m, l)] -= mu * v[m] * v[l] / (s * s);
                }
            }
            last_grad_norm = grad.amax();

            // ascent direction from -H d = g, with a ridge fallback
            let neg_h = -hess;
            let mut ridge = 0.0;
            let dir = loop {
                let mut try_h = neg_h.clone();
                if ridge > 0.0 {
                    for m in 0..n {
                        try_h[(m, m)] += ridge;
                    }
                }
                match nalgebra::linalg::Cholesky::new(try_h) {
                    Some(ch) => break ch.solve(&grad),
                    None => {
                        ridge = if ridge == 0.0 { 1e-10 * neg_h.amax().max(1.0) } else { ridge * 10.0 };
                        if ridge > 1e12 {
                            break DVector::zeros(n);
                        }
                    }
                }
            };
            let decrement = grad.dot(&dir);
            if !decrement.is_finite() || decrement <= 0.0 {
                break;
            }
            let phi0 = barrier_value(&x, mu);
            if 0.5 * decrement < 1e-11 * (1.0 + phi0.abs()) {
                break;
            }
            // backtracking line search, feasibility then Armijo
            let mut beta = 1.0;
            let mut accepted = false;
            while beta > 1e-12 {
                let cand: Vec<f64> =
                    x.iter().zip(dir.iter()).map(|(&xk, &dk)| xk + beta * dk).collect();
                let phi = barrier_value(&cand, mu);
                if phi.is_finite() && phi >= phi0 + 1e-4 * beta * decrement {
                    x = cand;
                    accepted = true;
                    break;
                }
                beta *= 0.5;
            }
            newton_steps += 1;
            if !accepted {
                break;
            }
        }
        stage_objectives_bits.push(gains.objective_nats(&x, coeffs) * LOG2_E);

        if n_constraints * mu < tol {
            converged = true;
            break 'outer;
        }
        mu = (mu / 10.0).max(mu_min);
    }

    let kkt_residual = last_grad_norm.max(n_constraints * mu);
    InnerOutcome { x, stages, newton_steps, kkt_residual, converged, stage_objectives_bits }
}

fn check_coeffs(coeffs: &[TangentCoeffs], k_users: usize) -> Result<()> {
    if coeffs.len() != k_users {
        return Err(Error::Dimension(format!(
            "{} tangent coefficients for {} users",
            coeffs.len(),
            k_users
        )));
    }
    if coeffs.iter().any(|c| !(0.0..=1.0).contains(&c.a) || !c.b.is_finite()) {
        return Err(Error::Domain("tangent coefficients out of range".into()));
    }
    Ok(())
}

/// The surrogate objective of the inner convex problem, in bits:
///
/// ```text
/// sum_k a_k/log 2 * log( e^{p~_k} |h_k^† w_k|^2 / (sum_{j!=k} e^{p~_j} |h_k^† w_j|^2 + sigma^2) )
///        + b_k/log 2 - log2( 1 + e^{p~_k} sum_{j!=k} |h_j^† w_k|^2 / sigma^2 )
/// ```
///
/// Concave in `p~`; equals the unclipped secrecy sum-rate when every
/// `(a_k, b_k)` is anchored at the current SINR, and never exceeds it.
pub fn pa_objective(
    h: &ChannelMatrix,
    w: &PrecoderMatrix,
    p_tilde: &[f64],
    sigma2: f64,
    coeffs: &[TangentCoeffs],
) -> Result<f64> {
    if p_tilde.len() != h.num_users() {
        return Err(Error::Dimension(format!(
            "{} log-powers for {} users",
            p_tilde.len(),
            h.num_users()
        )));
    }
    check_coeffs(coeffs, h.num_users())?;
    let gains = PaGains::new(h, w, sigma2);
    Ok(gains.objective_nats(p_tilde, coeffs) * LOG2_E)
}

/// Maximize the surrogate objective over the feasible log-powers.
///
/// `warm_start` defaults to the always-feasible equal-power point
/// `p~ = log(1/gamma)`. The returned KKT residual is measured on the
/// natural-log objective; `tol` (default 1e-8) bounds both it and the
/// duality-gap surrogate.
pub fn solve_inner_convex(
    h: &ChannelMatrix,
    w: &PrecoderMatrix,
    coeffs: &[TangentCoeffs],
    sigma2: f64,
    tol: f64,
    warm_start: Option<&[f64]>,
) -> Result<(Vec<f64>, SolveDiagnostics)> {
    check_coeffs(coeffs, h.num_users())?;
    let gains = PaGains::new(h, w, sigma2);
    let ep = vec![-(w.gamma().ln()); h.num_users()];
    let warm = warm_start.unwrap_or(&ep);
    if warm.len() != h.num_users() {
        return Err(Error::Dimension("warm start length mismatch".into()));
    }
    let out = barrier_solve(&gains, coeffs, warm, tol);
    let diag = SolveDiagnostics {
        objective_trace: out.stage_objectives_bits,
        outer_iterations: out.stages,
        inner_iterations: out.newton_steps,
        kkt_residual: out.kkt_residual,
        converged: out.converged,
        alpha_trace: Vec::new(),
        muted_users: PowerVector::from_log(&out.x).muted_users(),
    };
    Ok((out.x, diag))
}

struct ScaOutcome {
    x: Vec<f64>,
    trace_unclipped_bits: Vec<f64>,
    outer: usize,
    newton_steps: usize,
    kkt_residual: f64,
    converged: bool,
}

/// Tangent re-anchoring around the inner solver, with a keep-best
/// safeguard so the unclipped objective never decreases.
fn sca_loop(gains: &PaGains, start: &[f64], tol: f64, max_outer: usize) -> ScaOutcome {
    let k_users = gains.num_users();
    let mut coeffs = vec![TangentCoeffs::high_snr_init(); k_users];
    let mut x = start.to_vec();
    let mut best_unclipped = f64::NEG_INFINITY;
    let mut last_clipped = gains.clipped_rate_bits(&x);
    let mut trace = Vec::new();
    let mut newton_steps = 0;
    let mut kkt_residual = f64::NAN;
    let mut converged = false;
    let mut outer = 0;

    for t in 0..max_outer {
        outer = t + 1;
        let inner = barrier_solve(gains, &coeffs, &x, 1e-8);
        newton_steps += inner.newton_steps;
        kkt_residual = inner.kkt_residual;
        let f_new = gains.unclipped_rate_bits(&inner.x);
        if f_new >= best_unclipped {
            best_unclipped = f_new;
            x = inner.x;
        }
        trace.push(gains.unclipped_rate_bits(&x));

        let clipped = gains.clipped_rate_bits(&x);
        if (clipped - last_clipped).abs() < tol {
            converged = true;
            break;
        }
        last_clipped = clipped;
        coeffs = (0..k_users)
            .map(|k| {
                tangent_coeffs(gains.sinr_intended(&x, k))
                    .expect("SINR anchors are finite and nonnegative")
            })
            .collect();
    }
    ScaOutcome { x, trace_unclipped_bits: trace, outer, newton_steps, kkt_residual, converged }
}

/// Secrecy-rate-maximizing power allocation at fixed `alpha`.
///
/// Starts from the surrogate `(a, b) = (1, 0)` and re-anchors at the
/// intended-user SINRs of each iterate; stops when successive true (clipped)
/// secrecy sum-rates differ by less than `tol` bits (default 1e-6) or after
/// `max_outer` iterations (default 50, flagged soft in the diagnostics).
/// The returned rate never falls below the equal-power rate.
pub fn sca_power_allocation(
    h: &ChannelMatrix,
    alpha: f64,
    sigma2: f64,
    tol: f64,
    max_outer: usize,
) -> Result<(PowerVector, SolveDiagnostics)> {
    if !(sigma2 > 0.0) || !sigma2.is_finite() {
        return Err(Error::Domain(format!("sigma2 must be positive, got {sigma2}")));
    }
    let w = rci_precoder(h, alpha)?;
    let gains = PaGains::new(h, &w, sigma2);
    let ep = vec![-(w.gamma().ln()); h.num_users()];
    let mut out = sca_loop(&gains, &ep, tol, max_outer);

    // Equal power is always feasible; never return anything worse.
    if gains.clipped_rate_bits(&out.x) < gains.clipped_rate_bits(&ep) {
        out.x = ep;
    }
    let powers = PowerVector::from_log(&out.x);
    let diag = SolveDiagnostics {
        objective_trace: out.trace_unclipped_bits,
        outer_iterations: out.outer,
        inner_iterations: out.newton_steps,
        kkt_residual: out.kkt_residual,
        converged: out.converged,
        alpha_trace: Vec::new(),
        muted_users: powers.muted_users(),
    };
    Ok((powers, diag))
}

/// Rate objective seen by the `alpha` line search: the clipped secrecy
/// sum-rate at regularization `alpha` with the current powers, scaled down
/// uniformly if the new column norms break the trace constraint.
fn joint_alpha_objective(
    h: &ChannelMatrix,
    sigma2: f64,
    alpha: f64,
    x: &[f64],
) -> Result<f64> {
    let w = rci_precoder(h, alpha)?;
    let gains = PaGains::new(h, &w, sigma2);
    let c = gains.budget(x);
    if c > 1.0 {
        let shift = c.ln();
        let scaled: Vec<f64> = x.iter().map(|&xk| xk - shift).collect();
        Ok(gains.clipped_rate_bits(&scaled))
    } else {
        Ok(gains.clipped_rate_bits(x))
    }
}

/// Steepest ascent on `alpha` with a central finite-difference gradient and
/// Armijo backtracking, constrained to `[1e-8, 10 K]`.
fn ascend_alpha(h: &ChannelMatrix, sigma2: f64, alpha0: f64, x: &[f64]) -> Result<f64> {
    let alpha_max = 10.0 * h.num_users() as f64;
    let clamp = |a: f64| a.clamp(1e-8, alpha_max);
    let mut alpha = clamp(alpha0);
    let mut value = joint_alpha_objective(h, sigma2, alpha, x)?;
    for _ in 0..40 {
        let fd_h = (1e-6f64).max(1e-4 * alpha);
        let up = joint_alpha_objective(h, sigma2, clamp(alpha + fd_h), x)?;
        let down = joint_alpha_objective(h, sigma2, clamp(alpha - fd_h), x)?;
        let grad = (up - down) / (clamp(alpha + fd_h) - clamp(alpha - fd_h));
        if !grad.is_finite() || grad.abs() * alpha.max(1.0) < 1e-10 {
            break;
        }
        // initial step sized to move alpha by about half its magnitude
        let mut step = 0.5 * alpha.max(1e-6) * grad.signum();
        let mut improved = false;
        for _ in 0..40 {
            let cand = clamp(alpha + step);
            let v = joint_alpha_objective(h, sigma2, cand, x)?;
            if v >= value + 1e-4 * (cand - alpha) * grad {
                alpha = cand;
                value = v;
                improved = true;
                break;
            }
            step *= 0.5;
        }
        if !improved || step.abs() < 1e-12 * alpha.max(1e-6) {
            break;
        }
    }
    Ok(alpha)
}

/// Joint optimization of the regularization parameter and the power
/// vector. Starts at the large-system `alpha_0 = K xi_opt(rho)`, then
/// alternates the `alpha` ascent with a full power-allocation pass, accepting an
/// outer step only if the true secrecy sum-rate does not decrease. Stops
/// when the improvement falls below `tol` bits (default 1e-5) or after 30
/// outer iterations.
pub fn joint_optimize(
    h: &ChannelMatrix,
    sigma2: f64,
    tol: f64,
) -> Result<(f64, PowerVector, SolveDiagnostics)> {
    if !(sigma2 > 0.0) || !sigma2.is_finite() {
        return Err(Error::Domain(format!("sigma2 must be positive, got {sigma2}")));
    }
    let k_users = h.num_users();
    let rho = 1.0 / sigma2;
    let mut alpha = k_users as f64 * xi_opt(rho);
    let mut alpha_trace = vec![alpha];

    let w = rci_precoder(h, alpha)?;
    let gains = PaGains::new(h, &w, sigma2);
    let mut x = vec![-(w.gamma().ln()); k_users];
    let mut rate_best = gains.clipped_rate_bits(&x);
    let mut trace = vec![rate_best];

    let mut newton_steps = 0;
    let mut kkt_residual = f64::NAN;
    let mut converged = false;
    let mut outer = 0;

    for t in 0..30 {
        outer = t + 1;
        // The first pass allocates power at alpha_0 itself, so the result
        // can never fall below the fixed-alpha solution it generalizes;
        // ascent on alpha starts from the second pass.
        let alpha_new = if t == 0 { alpha } else { ascend_alpha(h, sigma2, alpha, &x)? };
        let w_new = rci_precoder(h, alpha_new)?;
        let gains_new = PaGains::new(h, &w_new, sigma2);
        let mut warm = x.clone();
        let c = gains_new.budget(&warm);
        if c > 1.0 {
            let shift = c.ln();
            for xk in warm.iter_mut() {
                *xk -= shift;
            }
        }
        let sca = sca_loop(&gains_new, &warm, tol.min(1e-6), 50);
        newton_steps += sca.newton_steps;
        kkt_residual = sca.kkt_residual;
        let rate_new = gains_new.clipped_rate_bits(&sca.x);

        if rate_new >= rate_best - 1e-12 {
            alpha = alpha_new;
            x = sca.x;
            alpha_trace.push(alpha);
            trace.push(rate_new);
            if rate_new - rate_best < tol {
                converged = true;
                break;
            }
            rate_best = rate_new;
        } else {
            converged = true;
            break;
        }
    }

    let powers = PowerVector::from_log(&x);
    let diag = SolveDiagnostics {
        objective_trace: trace,
        outer_iterations: outer,
        inner_iterations: newton_steps,
        kkt_residual,
        converged,
        alpha_trace,
        muted_users: powers.muted_users(),
    };
    Ok((alpha, powers, diag))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{sample_channel, ChannelMatrix, RngSpec};
    use crate::rates::{secrecy_sum_rate, secrecy_sum_rate_pa};
    use nalgebra::DMatrix;
    use rand::Rng;
    use rand::SeedableRng;

    fn identity_channel(n: usize) -> ChannelMatrix {
        ChannelMatrix::from_matrix(DMatrix::identity(n, n)).unwrap()
    }

    #[test]
    fn tangent_coeff_values() {
        let c = tangent_coeffs(1.0).unwrap();
        assert!((c.a - 0.5).abs() < 1e-15);
        assert!((c.b - std::f64::consts::LN_2).abs() < 1e-15);

        let c0 = tangent_coeffs(0.0).unwrap();
        assert_eq!((c0.a, c0.b), (0.0, 0.0));

        assert!(matches!(tangent_coeffs(-0.1), Err(Error::Domain(_))));
    }

    #[test]
    fn tangent_bound_holds_and_is_tight() {
        // equality at the anchor z = z0 = 3
        let c = tangent_coeffs(3.0).unwrap();
        assert!((c.bound(3.0) - 4.0f64.ln()).abs() < 1e-12);

        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(31);
        for _ in 0..2000 {
            let z0 = rng.random::<f64>() * 1e3;
            let z = rng.random::<f64>() * 1e3 + 1e-9;
            let c = tangent_coeffs(z0).unwrap();
            assert!(
                c.bound(z) <= (1.0 + z).ln() + 1e-12,
                "bound violated at z0={z0} z={z}"
            );
            assert!((c.bound(z0) - (1.0 + z0).ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn objective_tight_at_anchor_and_below_truth() {
        let h = sample_channel(4, 4, &RngSpec::new(77, 0));
        let sigma2 = 0.1;
        let w = rci_precoder(&h, 0.5).unwrap();
        let gains = PaGains::new(&h, &w, sigma2);
        let x = vec![-(w.gamma().ln()); 4];

        let anchored: Vec<TangentCoeffs> = (0..4)
            .map(|k| tangent_coeffs(gains.sinr_intended(&x, k)).unwrap())
            .collect();
        let obj = pa_objective(&h, &w, &x, sigma2, &anchored).unwrap();
        let truth = gains.unclipped_rate_bits(&x);
        assert!((obj - truth).abs() < 1e-9, "{obj} vs {truth}");

        // arbitrary coefficients still lower-bound the truth at any point
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(5);
        for _ in 0..50 {
            let coeffs: Vec<TangentCoeffs> = (0..4)
                .map(|_| tangent_coeffs(rng.random::<f64>() * 20.0).unwrap())
                .collect();
            let y: Vec<f64> = x.iter().map(|&xi| xi + rng.random::<f64>() * 2.0 - 1.5).collect();
            let obj = pa_objective(&h, &w, &y, sigma2, &coeffs).unwrap();
            let truth = gains.unclipped_rate_bits(&y);
            assert!(obj <= truth + 1e-9, "{obj} > {truth}");
        }
    }

    #[test]
    fn single_user_objective_monotone() {
        let h = sample_channel(1, 2, &RngSpec::new(77, 1));
        let w = rci_precoder(&h, 0.5).unwrap();
        let c = [tangent_coeffs(2.0).unwrap()];
        let lo = pa_objective(&h, &w, &[-1.0], 0.5, &c).unwrap();
        let hi = pa_objective(&h, &w, &[0.0], 0.5, &c).unwrap();
        assert!(hi > lo, "no leakage, so more power is always better");
    }

    #[test]
    fn inner_solver_single_user_hits_budget() {
        let h = sample_channel(1, 2, &RngSpec::new(10, 0));
        let w = rci_precoder(&h, 0.3).unwrap();
        let coeffs = [tangent_coeffs(5.0).unwrap()];
        let (x, diag) = solve_inner_convex(&h, &w, &coeffs, 0.5, 1e-8, None).unwrap();
        let used = x[0].exp() * w.column_norms_sqr()[0];
        assert!((used - 1.0).abs() < 1e-6, "budget used: {used}");
        assert!(diag.converged);
    }

    #[test]
    fn inner_solver_symmetric_instance() {
        let h = identity_channel(2);
        let w = rci_precoder(&h, 0.5).unwrap();
        let coeffs = [tangent_coeffs(1.0).unwrap(), tangent_coeffs(1.0).unwrap()];
        let (x, _) = solve_inner_convex(&h, &w, &coeffs, 0.5, 1e-8, None).unwrap();
        let (p0, p1) = (x[0].exp(), x[1].exp());
        assert!((p0 - p1).abs() / p0.max(p1) < 1e-6, "p = ({p0}, {p1})");
    }

    #[test]
    fn inner_solver_matches_dense_grid_oracle() {
        // brute-force the surrogate over a 2-D log-power grid and require
        // the solver to match or beat the grid maximum
        let sigma2 = 0.2;
        for trial in 0..5 {
            let h = sample_channel(2, 2, &RngSpec::new(61, trial));
            let w = rci_precoder(&h, 0.4).unwrap();
            let coeffs =
                [tangent_coeffs(1.5).unwrap(), tangent_coeffs(4.0).unwrap()];
            let (x, _) = solve_inner_convex(&h, &w, &coeffs, sigma2, 1e-8, None).unwrap();
            let solver_obj = pa_objective(&h, &w, &x, sigma2, &coeffs).unwrap();

            let n = w.column_norms_sqr();
            let mut grid_best = f64::NEG_INFINITY;
            let steps = 400;
            for i in 0..steps {
                // p0 from 0 to the full budget, p1 filling a fraction of
                // what remains
                let p0 = (i as f64 + 0.5) / steps as f64 / n[0];
                for j in 0..steps {
                    let p1 = (j as f64 + 0.5) / steps as f64 * (1.0 - p0 * n[0]) / n[1];
                    if p1 <= 0.0 {
                        continue;
                    }
                    let obj = pa_objective(&h, &w, &[p0.ln(), p1.ln()], sigma2, &coeffs)
                        .unwrap();
                    grid_best = grid_best.max(obj);
                }
            }
            assert!(
                solver_obj >= grid_best - 1e-4,
                "trial {trial}: solver {solver_obj} vs grid {grid_best}"
            );
        }
    }

    #[test]
    fn inner_solver_warm_start_is_a_fixed_point() {
        let h = sample_channel(3, 3, &RngSpec::new(10, 1));
        let w = rci_precoder(&h, 0.4).unwrap();
        let sigma2 = 0.2;
        let coeffs: Vec<TangentCoeffs> =
            (0..3).map(|k| tangent_coeffs(1.0 + k as f64).unwrap()).collect();
        let tol = 1e-8;
        let (x_opt, _) = solve_inner_convex(&h, &w, &coeffs, sigma2, tol, None).unwrap();
        let f_opt = pa_objective(&h, &w, &x_opt, sigma2, &coeffs).unwrap();
        let (x2, diag) =
            solve_inner_convex(&h, &w, &coeffs, sigma2, tol, Some(&x_opt)).unwrap();
        let f2 = pa_objective(&h, &w, &x2, sigma2, &coeffs).unwrap();
        assert!(diag.outer_iterations <= 2, "stages = {}", diag.outer_iterations);
        assert!((f2 - f_opt).abs() < tol, "objective moved by {}", (f2 - f_opt).abs());
    }

    #[test]
    fn inner_stage_trace_nondecreasing() {
        let h = sample_channel(4, 4, &RngSpec::new(10, 2));
        let w = rci_precoder(&h, 0.3).unwrap();
        let coeffs: Vec<TangentCoeffs> =
            (0..4).map(|_| tangent_coeffs(2.0).unwrap()).collect();
        let (_, diag) = solve_inner_convex(&h, &w, &coeffs, 0.1, 1e-8, None).unwrap();
        for pair in diag.objective_trace.windows(2) {
            assert!(pair[1] >= pair[0] - 1e-9, "{:?}", diag.objective_trace);
        }
    }

    #[test]
    fn sca_single_user_takes_full_budget() {
        let h = sample_channel(1, 3, &RngSpec::new(20, 0));
        let sigma2 = 0.5;
        for alpha in [0.1, 1.0, 10.0] {
            let (p, diag) = sca_power_allocation(&h, alpha, sigma2, 1e-6, 50).unwrap();
            let w = rci_precoder(&h, alpha).unwrap();
            let n = w.column_norms_sqr()[0];
            assert!((p.powers()[0] - 1.0 / n).abs() / (1.0 / n) < 1e-5);
            assert!(diag.converged);
            let rate = secrecy_sum_rate_pa(&h, &w, &p, sigma2).unwrap().sum_bits;
            let hw = h.user_channel(0).unwrap().dotc(&w.column(0).clone_owned()).norm_sqr();
            let expect = (1.0 + hw / (n * sigma2)).log2();
            assert!((rate - expect).abs() < 1e-5, "{rate} vs {expect}");
        }
    }

    #[test]
    fn sca_symmetric_diagonal_channel() {
        // H = I2, alpha = 0.5, sigma2 = 0.5: equal power is optimal by
        // symmetry, p_k = (1 + alpha)^2 / 2, sum rate 2 bits.
        let h = identity_channel(2);
        let (alpha, sigma2) = (0.5, 0.5);
        let (p, _) = sca_power_allocation(&h, alpha, sigma2, 1e-8, 50).unwrap();
        let expect = (1.0 + alpha) * (1.0 + alpha) / 2.0;
        for &pk in p.powers() {
            assert!((pk - expect).abs() / expect < 1e-4, "p_k = {pk}, expect {expect}");
        }
        let w = rci_precoder(&h, alpha).unwrap();
        let rate = secrecy_sum_rate_pa(&h, &w, &p, sigma2).unwrap().sum_bits;
        assert!((rate - 2.0).abs() < 1e-6, "rate {rate}");

        // grid-search oracle over p1 (p2 takes the rest of the budget)
        let gains = PaGains::new(&h, &w, sigma2);
        let n = w.column_norms_sqr();
        let mut best = f64::NEG_INFINITY;
        let mut best_p1 = 0.0;
        for i in 1..2000 {
            let p1 = i as f64 / 2000.0 / n[0];
            let p2 = (1.0 - p1 * n[0]) / n[1];
            let x = [p1.ln(), p2.ln()];
            let r = gains.clipped_rate_bits(&x);
            if r > best {
                best = r;
                best_p1 = p1;
            }
        }
        assert!((best_p1 - expect).abs() / expect < 1e-2, "oracle argmax {best_p1}");
        assert!(rate >= best - 1e-6, "solver {rate} vs oracle {best}");
    }

    #[test]
    fn sca_trace_monotone_and_beats_equal_power() {
        let sigma2 = 0.1; // 10 dB
        for trial in 0..25 {
            let h = sample_channel(4, 4, &RngSpec::new(300, trial));
            let alpha = 4.0 * xi_opt(1.0 / sigma2);
            let (p, diag) = sca_power_allocation(&h, alpha, sigma2, 1e-6, 50).unwrap();
            for pair in diag.objective_trace.windows(2) {
                assert!(pair[1] >= pair[0] - 1e-9, "trace dip: {:?}", diag.objective_trace);
            }
            let w = rci_precoder(&h, alpha).unwrap();
            let pa_rate = secrecy_sum_rate_pa(&h, &w, &p, sigma2).unwrap().sum_bits;
            let ep_rate = secrecy_sum_rate(&h, &w, sigma2).unwrap().sum_bits;
            assert!(
                pa_rate >= ep_rate - 1e-9,
                "trial {trial}: PA {pa_rate} below EP {ep_rate}"
            );
        }
    }

    #[test]
    fn sca_iterates_stay_feasible() {
        let h = sample_channel(4, 4, &RngSpec::new(301, 0));
        let (p, _) = sca_power_allocation(&h, 0.4, 0.1, 1e-6, 50).unwrap();
        let w = rci_precoder(&h, 0.4).unwrap();
        let used: f64 =
            p.powers().iter().zip(w.column_norms_sqr()).map(|(&pk, nk)| pk * nk).sum();
        assert!(used <= 1.0 + 1e-9, "budget violated: {used}");
    }

    #[test]
    fn leakage_second_derivative_matches_finite_difference() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(404);
        // step chosen so truncation (h^2/12) and roundoff (eps |f| / h^2)
        // both sit below the 1e-5 relative tolerance
        let fd_h = 6e-3;
        for _ in 0..100 {
            let p_tilde = rng.random::<f64>() * 4.0 - 2.0;
            let leak = rng.random::<f64>() * 1.9 + 0.1;
            let sigma2 = rng.random::<f64>() * 0.9 + 0.1;
            let analytic = leakage_term_second_derivative_bits(p_tilde, leak, sigma2);
            let f = |x: f64| leakage_term_bits(x, leak, sigma2);
            let fd = (f(p_tilde + fd_h) - 2.0 * f(p_tilde) + f(p_tilde - fd_h)) / (fd_h * fd_h);
            assert!(analytic <= 0.0);
            assert!(
                (analytic - fd).abs() <= 1e-5 * analytic.abs(),
                "analytic {analytic} vs fd {fd}"
            );
        }
    }

    #[test]
    fn joint_single_user_rate_is_alpha_invariant() {
        let sigma2 = 0.25;
        let h = sample_channel(1, 3, &RngSpec::new(500, 0));
        let (_, p, diag) = joint_optimize(&h, sigma2, 1e-6).unwrap();
        let hnorm2 = h.entries().norm_squared();
        let expect = (1.0 + hnorm2 / sigma2).log2();
        let got = *diag.objective_trace.last().unwrap();
        assert!((got - expect).abs() < 1e-5, "{got} vs {expect}");
        assert!(!p.powers()[0].is_nan());
    }

    #[test]
    fn joint_initializes_alpha_at_large_system_value() {
        let sigma2 = 0.1;
        let h = sample_channel(4, 4, &RngSpec::new(500, 1));
        let (_, _, diag) = joint_optimize(&h, sigma2, 1e-5).unwrap();
        let expect = 4.0 * xi_opt(1.0 / sigma2);
        assert!((diag.alpha_trace[0] - expect).abs() < 1e-15);
    }

    #[test]
    fn joint_dominates_fixed_alpha_sca() {
        let sigma2 = 10f64.powf(-2.0); // 20 dB
        for trial in 0..15 {
            let h = sample_channel(4, 4, &RngSpec::new(501, trial));
            let alpha_ls = 4.0 * xi_opt(1.0 / sigma2);
            let (p_fixed, _) = sca_power_allocation(&h, alpha_ls, sigma2, 1e-6, 50).unwrap();
            let w = rci_precoder(&h, alpha_ls).unwrap();
            let fixed_rate = secrecy_sum_rate_pa(&h, &w, &p_fixed, sigma2).unwrap().sum_bits;

            let (alpha_j, p_j, _) = joint_optimize(&h, sigma2, 1e-6).unwrap();
            let wj = rci_precoder(&h, alpha_j).unwrap();
            let joint_rate = secrecy_sum_rate_pa(&h, &wj, &p_j, sigma2).unwrap().sum_bits;
            assert!(
                joint_rate >= fixed_rate - 1e-6,
                "trial {trial}: joint {joint_rate} vs fixed {fixed_rate}"
            );
        }
    }

    #[test]
    fn joint_trace_nondecreasing() {
        let h = sample_channel(4, 4, &RngSpec::new(502, 3));
        let (_, _, diag) = joint_optimize(&h, 0.1, 1e-6).unwrap();
        for pair in diag.objective_trace.windows(2) {
            assert!(pair[1] >= pair[0] - 1e-9, "{:?}", diag.objective_trace);
        }
        assert_eq!(diag.objective_trace.len(), diag.alpha_trace.len());
    }

    #[test]
    fn muted_users_reported_at_floor() {
        let p = PowerVector::from_log(&[(P_FLOOR / 2.0).ln(), 0.0]);
        assert_eq!(p.muted_users(), vec![0]);
    }

    #[test]
    fn diagnostics_serialize() {
        let h = sample_channel(2, 2, &RngSpec::new(6, 6));
        let (_, diag) = sca_power_allocation(&h, 0.5, 0.5, 1e-6, 50).unwrap();
        let json = serde_json::to_value(&diag).unwrap();
        assert!(json["objective_trace"].is_array());
        assert!(json["kkt_residual"].is_number());
        assert!(json.get("alpha_trace").is_none(), "empty alpha trace elided");
    }
}
