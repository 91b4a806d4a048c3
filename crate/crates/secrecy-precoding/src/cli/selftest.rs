//! Reduced-scale invariant suites behind `secrecy-sim selftest`.
//!
//! Each suite re-derives a handful of module invariants from scratch so a
//! corrupted constant or formula fails fast on a fresh checkout. The full
//! run stays well under a minute.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::channel::{sample_channel, ChannelMatrix, RngSpec};
use crate::experiments::{alpha_ls, ccdf_alpha_penalty, ExperimentConfig};
use crate::large_system::{
    asymptote_report, asymptotic_secrecy_sum_rate, g_of_xi, optimal_secrecy_sum_rate,
    secrecy_rate_xi_inv_rho, sum_rate_no_secrecy, xi_opt,
};
use crate::power_alloc::{sca_power_allocation, tangent_coeffs};
use crate::precoder::{ci_precoder, power_normalization, rci_precoder};
use crate::rates::{
    rci_sinrs_via_akbk, secrecy_sum_rate, secrecy_sum_rate_pa, sinr_eavesdropper, sinr_intended,
};
use crate::{Error, Result};

type Check = std::result::Result<(), String>;
type Suite = fn() -> Check;

fn ensure(cond: bool, msg: &str) -> Check {
    if cond {
        Ok(())
    } else {
        Err(msg.to_string())
    }
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

fn channel_suite() -> Check {
    let spec = RngSpec::new(42, 1);
    ensure(
        sample_channel(3, 3, &spec) == sample_channel(3, 3, &spec),
        "channel draws are not deterministic",
    )?;
    let mut sum_sq = 0.0;
    let mut n = 0usize;
    for t in 0..1250 {
        let h = sample_channel(4, 4, &RngSpec::new(7, t));
        sum_sq += h.entries().iter().map(|z| z.norm_sqr()).sum::<f64>();
        n += 16;
    }
    let var = sum_sq / n as f64;
    ensure((var - 1.0).abs() < 0.05, &format!("entry variance {var} not near 1"))?;
    let h = sample_channel(3, 3, &RngSpec::new(0, 0));
    let rest = h.remove_row(1).map_err(|e| e.to_string())?;
    ensure(rest.nrows() == 2, "remove_row did not drop exactly one row")?;
    Ok(())
}

fn precoder_suite() -> Check {
    let h1 =
        ChannelMatrix::from_matrix(DMatrix::from_element(1, 1, Complex64::new(1.0, 0.0))).unwrap();
    let w = rci_precoder(&h1, 1.0).map_err(|e| e.to_string())?;
    ensure(close(w.gamma(), 0.25, 1e-12), "scalar RCI gamma != 1/4")?;

    let h = sample_channel(4, 4, &RngSpec::new(9, 0));
    let gamma_cols = rci_precoder(&h, 0.3).map_err(|e| e.to_string())?.gamma();
    let gamma_trace = power_normalization(&h, 0.3).map_err(|e| e.to_string())?;
    ensure(
        close(gamma_cols, gamma_trace, 1e-10),
        "trace and column-sum power normalizations disagree",
    )?;

    let mut last = f64::INFINITY;
    for alpha in [0.01, 0.1, 1.0, 10.0] {
        let g = power_normalization(&h, alpha).map_err(|e| e.to_string())?;
        ensure(g < last, "gamma(alpha) is not decreasing")?;
        last = g;
    }

    let h = sample_channel(3, 4, &RngSpec::new(9, 1));
    let ci = ci_precoder(&h).map_err(|e| e.to_string())?;
    let hw = h.entries() * ci.matrix();
    let dist = (&hw - DMatrix::<Complex64>::identity(3, 3)).norm();
    ensure(dist < 1e-9, "CI precoder does not invert the channel")?;
    Ok(())
}

fn rates_suite() -> Check {
    let sigma2 = 0.25;
    for trial in 0..20 {
        let h = sample_channel(4, 4, &RngSpec::new(11, trial));
        for &alpha in &[0.05, 0.5, 2.0] {
            let w = rci_precoder(&h, alpha).map_err(|e| e.to_string())?;
            for k in 0..4 {
                let closed = rci_sinrs_via_akbk(&h, alpha, sigma2, k).map_err(|e| e.to_string())?;
                let si = sinr_intended(&h, &w, sigma2, k).map_err(|e| e.to_string())?;
                let se = sinr_eavesdropper(&h, &w, sigma2, k).map_err(|e| e.to_string())?;
                ensure(
                    close(closed.intended, si, 1e-9) && close(closed.eavesdropper, se, 1e-9),
                    "A_k/B_k SINRs disagree with the direct evaluation",
                )?;
            }
        }
    }
    let h = sample_channel(4, 4, &RngSpec::new(11, 100));
    let w = rci_precoder(&h, 0.5).map_err(|e| e.to_string())?;
    let report = secrecy_sum_rate(&h, &w, sigma2).map_err(|e| e.to_string())?;
    ensure(report.per_user.iter().all(|u| u.rate_bits >= 0.0), "clipping produced negatives")?;
    Ok(())
}

fn large_system_suite() -> Check {
    ensure(close(g_of_xi(4.0 / 3.0).map_err(|e| e.to_string())?, 0.5, 1e-12), "g(4/3) != 1/2")?;
    ensure(xi_opt(0.0) == 0.5, "xi_opt(0) != 1/2")?;
    for &rho in &[0.01, 1.0, 100.0] {
        let closed = optimal_secrecy_sum_rate(rho, 1);
        let eval = asymptotic_secrecy_sum_rate(xi_opt(rho), rho, 1).map_err(|e| e.to_string())?;
        ensure(close(closed, eval, 1e-9), "closed-form optimum disagrees with the rate curve")?;
        for i in 0..100 {
            let xi = 10f64.powf(-4.0 + 5.0 * i as f64 / 99.0);
            let r = asymptotic_secrecy_sum_rate(xi, rho, 1).map_err(|e| e.to_string())?;
            ensure(r <= closed + 1e-12, "xi_opt is not the maximizer")?;
        }
        ensure(
            secrecy_rate_xi_inv_rho(rho, 1) <= closed + 1e-12
                && sum_rate_no_secrecy(rho, 1) >= closed - 1e-12,
            "scheme ordering violated",
        )?;
    }
    let rep = asymptote_report();
    ensure(
        close(rep.secrecy_loss_bits_per_antenna, 0.5 * (64.0f64 / 27.0).log2(), 1e-12)
            && close(rep.gain_vs_xi_inv_rho_bits, (3.0 * 3.0f64.sqrt() / 4.0).log2(), 1e-12)
            && close(rep.power_loss_db, 10.0 * (64.0f64 / 27.0).log10(), 1e-12),
        "asymptote constants corrupted",
    )?;
    Ok(())
}

fn power_alloc_suite() -> Check {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(17);
    for _ in 0..1000 {
        let z0 = rng.random::<f64>() * 100.0;
        let z = rng.random::<f64>() * 100.0 + 1e-9;
        let c = tangent_coeffs(z0).map_err(|e| e.to_string())?;
        ensure(c.bound(z) <= (1.0 + z).ln() + 1e-12, "tangent bound violated")?;
        ensure((c.bound(z0) - (1.0 + z0).ln()).abs() < 1e-12, "tangent bound not tight")?;
    }
    let sigma2 = 0.1;
    for trial in 0..5 {
        let h = sample_channel(4, 4, &RngSpec::new(23, trial));
        let alpha = alpha_ls(1.0 / sigma2, 4);
        let (p, diag) =
            sca_power_allocation(&h, alpha, sigma2, 1e-6, 50).map_err(|e| e.to_string())?;
        for pair in diag.objective_trace.windows(2) {
            ensure(pair[1] >= pair[0] - 1e-9, "SCA trace decreased")?;
        }
        let w = rci_precoder(&h, alpha).map_err(|e| e.to_string())?;
        let pa = secrecy_sum_rate_pa(&h, &w, &p, sigma2).map_err(|e| e.to_string())?.sum_bits;
        let ep = secrecy_sum_rate(&h, &w, sigma2).map_err(|e| e.to_string())?.sum_bits;
        ensure(pa >= ep - 1e-9, "power allocation fell below equal power")?;
    }
    Ok(())
}

fn experiments_suite() -> Check {
    let mut cfg = ExperimentConfig::new(2, 2);
    cfg.snr_grid_db = vec![10.0];
    cfg.trials = 1;
    cfg.master_seed = 5;
    let a = crate::experiments::average_secrecy_sum_rate(&cfg, |rho, k, _| alpha_ls(rho, k))
        .map_err(|e| e.to_string())?;
    let b = crate::experiments::average_secrecy_sum_rate(&cfg, |rho, k, _| alpha_ls(rho, k))
        .map_err(|e| e.to_string())?;
    ensure(a.points[0].mean_bits == b.points[0].mean_bits, "sweep is not reproducible")?;

    let table =
        ccdf_alpha_penalty(2, 10.0, 30, 5, &[0.0, 0.05]).map_err(|e| e.to_string())?;
    ensure(table.mean_diff >= 0.0, "per-channel optimum lost to alpha_LS")?;
    ensure(table.ccdf[1] <= table.ccdf[0], "CCDF not monotone")?;
    Ok(())
}

const SUITES: &[(&str, Suite)] = &[
    ("channel", channel_suite),
    ("precoder", precoder_suite),
    ("rates", rates_suite),
    ("large-system", large_system_suite),
    ("power-alloc", power_alloc_suite),
    ("experiments", experiments_suite),
];

/// Run all suites (or one, by name). Returns `Ok(true)` when everything
/// passed; unknown suite names are a config error.
pub(super) fn run(only: Option<&str>) -> Result<bool> {
    if let Some(name) = only {
        if !SUITES.iter().any(|(n, _)| *n == name) {
            let names: Vec<&str> = SUITES.iter().map(|(n, _)| *n).collect();
            return Err(Error::Config(format!(
                "unknown suite '{name}' (available: {})",
                names.join(", ")
            )));
        }
    }
    let mut all_ok = true;
    for (name, suite) in SUITES {
        if only.is_some_and(|o| o != *name) {
            continue;
        }
        match suite() {
            Ok(()) => println!("[PASS] {name}"),
            Err(msg) => {
                all_ok = false;
                println!("[FAIL] {name}: {msg}");
            }
        }
    }
    Ok(all_ok)
}
