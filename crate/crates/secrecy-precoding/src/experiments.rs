//! Monte Carlo harness for the secrecy-rate experiments.
//!
//! Every sweep draws its channels from `(master_seed, trial_index)` pairs,
//! so all schemes and all candidate regularization values inside one sweep
//! see identical channel realizations (common random numbers), and results
//! are bit-reproducible for a fixed config regardless of the thread count:
//! trials run in parallel but are reduced in trial-index order.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{sample_channel, ChannelMatrix, RngSpec};
use crate::large_system::xi_opt;
use crate::power_alloc::{joint_optimize, sca_power_allocation};
use crate::precoder::{ci_precoder, mf_precoder, rci_precoder};
use crate::rates::{rci_secrecy_sum_rate, secrecy_sum_rate, secrecy_sum_rate_pa, sum_rate};
use crate::{Error, Result};

/// Precoding/optimization schemes that the sweeps can evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// RCI with the large-system `alpha_LS = K xi_opt(rho)`, equal power.
    RciLs,
    /// RCI with the fixed `alpha` that maximizes the trial-averaged rate.
    RciFsAvg,
    /// RCI with `alpha_FS(H)` optimized for every channel draw.
    RciFsPerChannel,
    /// Channel inversion (`alpha = 0`), needs `K <= M`.
    Ci,
    /// Matched filter `W = H^†`.
    Mf,
    /// RCI with the sum-rate-optimal `alpha = K/rho`, secrecy rate.
    RciXiInvRho,
    /// Power allocation at fixed `alpha_LS`.
    RciPaFixedAlpha,
    /// Jointly optimized `(alpha, p)`.
    RciPaJoint,
    /// RCI with `alpha = K/rho`, conventional sum-rate without secrecy.
    RciNoSecrecy,
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::RciLs => "rci-ls",
            Scheme::RciFsAvg => "rci-fs-avg",
            Scheme::RciFsPerChannel => "rci-fs-per-channel",
            Scheme::Ci => "ci",
            Scheme::Mf => "mf",
            Scheme::RciXiInvRho => "rci-xi-inv-rho",
            Scheme::RciPaFixedAlpha => "rci-pa-fixed-alpha",
            Scheme::RciPaJoint => "rci-pa-joint",
            Scheme::RciNoSecrecy => "rci-no-secrecy",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        match name.trim() {
            "rci-ls" => Ok(Scheme::RciLs),
            "rci-fs-avg" => Ok(Scheme::RciFsAvg),
            "rci-fs-per-channel" => Ok(Scheme::RciFsPerChannel),
            "ci" => Ok(Scheme::Ci),
            "mf" => Ok(Scheme::Mf),
            "rci-xi-inv-rho" => Ok(Scheme::RciXiInvRho),
            "rci-pa-fixed-alpha" => Ok(Scheme::RciPaFixedAlpha),
            "rci-pa-joint" => Ok(Scheme::RciPaJoint),
            "rci-no-secrecy" => Ok(Scheme::RciNoSecrecy),
            other => Err(Error::Config(format!("unknown scheme '{other}'"))),
        }
    }
}

/// Configuration shared by the Monte Carlo sweeps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub num_users: usize,
    pub num_antennas: usize,
    pub snr_grid_db: Vec<f64>,
    pub trials: usize,
    pub master_seed: u64,
    pub schemes: Vec<Scheme>,
}

impl ExperimentConfig {
    /// Config with the defaults used throughout: 10^3 trials, seed 0,
    /// SNR grid 0..30 dB in 5 dB steps, scheme `rci-ls`.
    pub fn new(num_users: usize, num_antennas: usize) -> Self {
        Self {
            num_users,
            num_antennas,
            snr_grid_db: (0..=6).map(|i| 5.0 * i as f64).collect(),
            trials: 1000,
            master_seed: 0,
            schemes: vec![Scheme::RciLs],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_users == 0 || self.num_antennas == 0 {
            return Err(Error::Config("K and M must be at least 1".into()));
        }
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.snr_grid_db.is_empty() {
            return Err(Error::Config("SNR grid must not be empty".into()));
        }
        if self.schemes.contains(&Scheme::Ci) && self.num_users > self.num_antennas {
            return Err(Error::Config("the CI scheme requires K <= M".into()));
        }
        Ok(())
    }

    fn metadata(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        m.insert("k".into(), self.num_users.to_string());
        m.insert("m".into(), self.num_antennas.to_string());
        m.insert("trials".into(), self.trials.to_string());
        m.insert("seed".into(), self.master_seed.to_string());
        m.insert(
            "snr_grid_db".into(),
            self.snr_grid_db.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" "),
        );
        m.insert(
            "schemes".into(),
            self.schemes.iter().map(|s| s.name().to_string()).collect::<Vec<_>>().join(" "),
        );
        m.insert("version".into(), env!("CARGO_PKG_VERSION").into());
        m
    }
}

/// One `(snr, scheme)` cell of a sweep: sample mean, standard error, trial
/// count, and any extra per-point statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub snr_db: f64,
    pub scheme: String,
    pub mean_bits: f64,
    pub std_err: f64,
    pub trials: usize,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub extra: BTreeMap<String, f64>,
}

/// Result of a Monte Carlo sweep plus the fully-resolved config echo.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub points: Vec<SweepPoint>,
    pub metadata: BTreeMap<String, String>,
}

impl SweepResult {
    /// CSV with header `snr_db,scheme,mean_bits,stderr,n`; metadata is
    /// emitted as leading `# key = value` comment lines. The `extra` maps
    /// are JSON-only.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.metadata {
            let _ = writeln!(out, "# {k} = {v}");
        }
        out.push_str("snr_db,scheme,mean_bits,stderr,n\n");
        for p in &self.points {
            let _ = writeln!(
                out,
                "{:?},{},{:?},{:?},{}",
                p.snr_db, p.scheme, p.mean_bits, p.std_err, p.trials
            );
        }
        out
    }

    /// Parse the CSV produced by [`SweepResult::to_csv`].
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut metadata = BTreeMap::new();
        let mut points = Vec::new();
        let mut saw_header = false;
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                if let Some((k, v)) = comment.split_once('=') {
                    metadata.insert(k.trim().to_string(), v.trim().to_string());
                }
                continue;
            }
            if !saw_header {
                if line != "snr_db,scheme,mean_bits,stderr,n" {
                    return Err(Error::Parse(format!("unexpected sweep CSV header {line:?}")));
                }
                saw_header = true;
                continue;
            }
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 5 {
                return Err(Error::Parse(format!("bad sweep CSV row {line:?}")));
            }
            let err = |c: &str| Error::Parse(format!("bad {c} in sweep CSV row {line:?}"));
            points.push(SweepPoint {
                snr_db: cols[0].parse().map_err(|_| err("snr_db"))?,
                scheme: cols[1].to_string(),
                mean_bits: cols[2].parse().map_err(|_| err("mean_bits"))?,
                std_err: cols[3].parse().map_err(|_| err("stderr"))?,
                trials: cols[4].parse().map_err(|_| err("n"))?,
                extra: BTreeMap::new(),
            });
        }
        if !saw_header {
            return Err(Error::Parse("sweep CSV has no header".into()));
        }
        Ok(Self { points, metadata })
    }
}

/// Complementary CDF of the per-channel normalized rate penalty from using
/// `alpha_LS` instead of the per-channel optimum `alpha_FS(H)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CcdfTable {
    pub thresholds: Vec<f64>,
    pub ccdf: Vec<f64>,
    pub mean_diff: f64,
    pub trials_used: usize,
    /// Trials skipped because the normalizing rate was zero.
    pub trials_skipped: usize,
}

impl CcdfTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# mean_diff = {:?}", self.mean_diff);
        let _ = writeln!(out, "# trials_used = {}", self.trials_used);
        let _ = writeln!(out, "# trials_skipped = {}", self.trials_skipped);
        out.push_str("threshold,ccdf\n");
        for (t, c) in self.thresholds.iter().zip(&self.ccdf) {
            let _ = writeln!(out, "{t:?},{c:?}");
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut table = CcdfTable {
            thresholds: Vec::new(),
            ccdf: Vec::new(),
            mean_diff: f64::NAN,
            trials_used: 0,
            trials_skipped: 0,
        };
        let mut saw_header = false;
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                if let Some((k, v)) = comment.split_once('=') {
                    let v = v.trim();
                    match k.trim() {
                        "mean_diff" => {
                            table.mean_diff =
                                v.parse().map_err(|_| Error::Parse("bad mean_diff".into()))?
                        }
                        "trials_used" => {
                            table.trials_used =
                                v.parse().map_err(|_| Error::Parse("bad trials_used".into()))?
                        }
                        "trials_skipped" => {
                            table.trials_skipped = v
                                .parse()
                                .map_err(|_| Error::Parse("bad trials_skipped".into()))?
                        }
                        _ => {}
                    }
                }
                continue;
            }
            if !saw_header {
                if line != "threshold,ccdf" {
                    return Err(Error::Parse(format!("unexpected CCDF CSV header {line:?}")));
                }
                saw_header = true;
                continue;
            }
            let (t, c) = line
                .split_once(',')
                .ok_or_else(|| Error::Parse(format!("bad CCDF CSV row {line:?}")))?;
            table
                .thresholds
                .push(t.parse().map_err(|_| Error::Parse(format!("bad threshold {t:?}")))?);
            table.ccdf.push(c.parse().map_err(|_| Error::Parse(format!("bad ccdf {c:?}")))?);
        }
        if !saw_header {
            return Err(Error::Parse("CCDF CSV has no header".into()));
        }
        Ok(table)
    }
}

fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// `alpha_LS = K xi_opt(rho)`, the large-system regularization rule.
pub fn alpha_ls(rho: f64, num_users: usize) -> f64 {
    num_users as f64 * xi_opt(rho)
}

fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Prefix a failing trial's index while preserving the error class (a
/// config error stays a config error; anything else is a runtime failure).
fn trial_error(t: usize, e: Error) -> Error {
    match e {
        Error::Config(m) => Error::Config(format!("trial {t}: {m}")),
        Error::Parse(m) => Error::Parse(format!("trial {t}: {m}")),
        other => Error::Domain(format!("trial {t}: {other}")),
    }
}

/// Run `trials` independent evaluations in parallel and reduce them in
/// trial-index order; the first failing trial aborts with context.
fn run_trials<F>(trials: usize, eval: F) -> Result<Vec<f64>>
where
    F: Fn(u64) -> Result<f64> + Sync,
{
    let results: Vec<Result<f64>> = (0..trials as u64).into_par_iter().map(&eval).collect();
    results
        .into_iter()
        .enumerate()
        .map(|(t, r)| r.map_err(|e| trial_error(t, e)))
        .collect()
}

/// Mean secrecy sum-rate of the RCI precoder over the config's SNR grid,
/// with the regularization chosen per SNR point and channel draw by
/// `alpha_rule(rho, K, H)`.
pub fn average_secrecy_sum_rate<F>(config: &ExperimentConfig, alpha_rule: F) -> Result<SweepResult>
where
    F: Fn(f64, usize, &ChannelMatrix) -> f64 + Sync,
{
    config.validate()?;
    let label =
        config.schemes.first().map(|s| s.name().to_string()).unwrap_or_else(|| "rci".into());
    let mut points = Vec::new();
    for &snr_db in &config.snr_grid_db {
        let rho = db_to_linear(snr_db);
        let sigma2 = 1.0 / rho;
        let rates = run_trials(config.trials, |t| {
            let h = sample_channel(
                config.num_users,
                config.num_antennas,
                &RngSpec::new(config.master_seed, t),
            );
            let alpha = alpha_rule(rho, config.num_users, &h);
            Ok(rci_secrecy_sum_rate(&h, alpha, sigma2)?.sum_bits)
        })?;
        let (mean_bits, std_err) = mean_and_stderr(&rates);
        points.push(SweepPoint {
            snr_db,
            scheme: label.clone(),
            mean_bits,
            std_err,
            trials: config.trials,
            extra: BTreeMap::new(),
        });
    }
    Ok(SweepResult { points, metadata: config.metadata() })
}

struct AlphaSearch {
    alpha: f64,
    value: f64,
    /// True when a bracket endpoint beat every interior evaluation by more
    /// than floating-point noise.
    on_boundary: bool,
}

/// Golden-section maximization of `f` over `alpha` in `[lo, hi]`, searched
/// in log space to the given log-width tolerance. A flat objective
/// (variation below 1e-12) returns the bracket midpoint.
fn golden_section_alpha<F>(f: F, lo: f64, hi: f64, tol_log: f64) -> Result<AlphaSearch>
where
    F: Fn(f64) -> Result<f64>,
{
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let (mut a, mut b) = (lo.ln(), hi.ln());
    let f_lo = f(lo)?;
    let f_hi = f(hi)?;
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1.exp())?;
    let mut f2 = f(x2.exp())?;
    let mut seen_min = f_lo.min(f_hi);
    let mut seen_max = f_lo.max(f_hi);
    while b - a > tol_log {
        seen_min = seen_min.min(f1.min(f2));
        seen_max = seen_max.max(f1.max(f2));
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1.exp())?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2.exp())?;
        }
    }
    if seen_max - seen_min < 1e-12 {
        // flat objective: any alpha is as good as any other
        return Ok(AlphaSearch {
            alpha: (0.5 * (lo.ln() + hi.ln())).exp(),
            value: f_lo,
            on_boundary: false,
        });
    }
    let (mut alpha, mut value) = if f1 >= f2 { (x1.exp(), f1) } else { (x2.exp(), f2) };
    let noise = 1e-9 * value.abs().max(1.0);
    let on_boundary = f_lo > value + noise || f_hi > value + noise;
    if f_lo > value {
        (alpha, value) = (lo, f_lo);
    }
    if f_hi > value {
        (alpha, value) = (hi, f_hi);
    }
    Ok(AlphaSearch { alpha, value, on_boundary })
}

/// Bracket for the `alpha` searches: `[1e-4 K, 10 K]` on a log scale.
fn alpha_bracket(num_users: usize) -> (f64, f64) {
    (1e-4 * num_users as f64, 10.0 * num_users as f64)
}

/// The fixed `alpha` that maximizes the trial-averaged secrecy sum-rate at
/// one SNR, using a common set of channel draws for every candidate value.
pub fn optimize_alpha_average(
    num_users: usize,
    num_antennas: usize,
    rho: f64,
    trials: usize,
    master_seed: u64,
) -> Result<f64> {
    if trials == 0 {
        return Err(Error::Config("trials must be at least 1".into()));
    }
    let sigma2 = 1.0 / rho;
    let channels: Vec<ChannelMatrix> = (0..trials as u64)
        .map(|t| sample_channel(num_users, num_antennas, &RngSpec::new(master_seed, t)))
        .collect();
    let objective = |alpha: f64| -> Result<f64> {
        let rates: Vec<Result<f64>> = channels
            .par_iter()
            .map(|h| Ok(rci_secrecy_sum_rate(h, alpha, sigma2)?.sum_bits))
            .collect();
        let mut total = 0.0;
        for r in rates {
            total += r?;
        }
        Ok(total / trials as f64)
    };
    let (lo, hi) = alpha_bracket(num_users);
    let search = golden_section_alpha(objective, lo, hi, 1e-3)?;
    if search.on_boundary {
        return Err(Error::BracketFailure(format!(
            "averaged alpha maximum sits on the bracket boundary [{lo:e}, {hi:e}]"
        )));
    }
    Ok(search.alpha)
}

/// Golden-section search for the per-channel `alpha`, keeping `alpha_LS` as
/// a fallback candidate so the result never rates below it.
fn alpha_per_channel_search(h: &ChannelMatrix, sigma2: f64) -> Result<AlphaSearch> {
    let (lo, hi) = alpha_bracket(h.num_users());
    let objective = |alpha: f64| Ok(rci_secrecy_sum_rate(h, alpha, sigma2)?.sum_bits);
    let mut search = golden_section_alpha(objective, lo, hi, 1e-3)?;
    let ls = alpha_ls(1.0 / sigma2, h.num_users());
    if lo <= ls && ls <= hi {
        let at_ls = rci_secrecy_sum_rate(h, ls, sigma2)?.sum_bits;
        if at_ls > search.value {
            search = AlphaSearch { alpha: ls, value: at_ls, on_boundary: false };
        }
    }
    Ok(search)
}

/// The per-channel optimum `alpha_FS(H)` maximizing the secrecy sum-rate of
/// one draw; fails with `BracketFailure` when the optimum sits on the search
/// boundary.
pub fn optimize_alpha_per_channel(h: &ChannelMatrix, sigma2: f64) -> Result<f64> {
    let search = alpha_per_channel_search(h, sigma2)?;
    if search.on_boundary {
        let (lo, hi) = alpha_bracket(h.num_users());
        return Err(Error::BracketFailure(format!(
            "per-channel alpha maximum sits on the bracket boundary [{lo:e}, {hi:e}]"
        )));
    }
    Ok(search.alpha)
}

/// CCDF of the normalized secrecy-rate difference
/// `d = (R(alpha_FS(H)) - R(alpha_LS)) / R(alpha_FS(H))` over channel
/// draws. Trials whose normalizing rate is zero are skipped and counted.
pub fn ccdf_alpha_penalty(
    num_users: usize,
    rho: f64,
    trials: usize,
    master_seed: u64,
    thresholds: &[f64],
) -> Result<CcdfTable> {
    if trials == 0 {
        return Err(Error::Config("trials must be at least 1".into()));
    }
    let sigma2 = 1.0 / rho;
    let ls = alpha_ls(rho, num_users);
    let diffs: Vec<Result<Option<f64>>> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let h = sample_channel(num_users, num_users, &RngSpec::new(master_seed, t));
            // a boundary optimum is still the best rate found; only a zero
            // normalizing rate disqualifies the trial
            let search = alpha_per_channel_search(&h, sigma2)?;
            let r_fs = search.value;
            if r_fs <= 0.0 {
                return Ok(None);
            }
            let r_ls = rci_secrecy_sum_rate(&h, ls, sigma2)?.sum_bits;
            Ok(Some((r_fs - r_ls) / r_fs))
        })
        .collect();

    let mut used = Vec::with_capacity(trials);
    let mut skipped = 0usize;
    for (t, d) in diffs.into_iter().enumerate() {
        match d.map_err(|e| trial_error(t, e))? {
            Some(v) => used.push(v),
            None => skipped += 1,
        }
    }
    if used.is_empty() {
        return Err(Error::Config("all trials had zero normalizing rate".into()));
    }
    let mut thresholds: Vec<f64> = thresholds.to_vec();
    thresholds.sort_by(|a, b| a.total_cmp(b));
    let n = used.len() as f64;
    let ccdf = thresholds
        .iter()
        .map(|&t| used.iter().filter(|&&d| d > t).count() as f64 / n)
        .collect();
    Ok(CcdfTable {
        thresholds,
        ccdf,
        mean_diff: used.iter().sum::<f64>() / n,
        trials_used: used.len(),
        trials_skipped: skipped,
    })
}

/// Per-trial rate of one scheme on one channel draw.
fn scheme_rate(scheme: Scheme, h: &ChannelMatrix, rho: f64) -> Result<f64> {
    let sigma2 = 1.0 / rho;
    let k = h.num_users();
    match scheme {
        Scheme::RciLs => Ok(rci_secrecy_sum_rate(h, alpha_ls(rho, k), sigma2)?.sum_bits),
        Scheme::Ci => Ok(secrecy_sum_rate(h, &ci_precoder(h)?, sigma2)?.sum_bits),
        Scheme::Mf => Ok(secrecy_sum_rate(h, &mf_precoder(h)?, sigma2)?.sum_bits),
        Scheme::RciXiInvRho => Ok(rci_secrecy_sum_rate(h, k as f64 / rho, sigma2)?.sum_bits),
        Scheme::RciNoSecrecy => sum_rate(h, &rci_precoder(h, k as f64 / rho)?, sigma2),
        Scheme::RciFsPerChannel => {
            // keep boundary winners: a sweep should not abort on one draw
            Ok(alpha_per_channel_search(h, sigma2)?.value)
        }
        Scheme::RciPaFixedAlpha => {
            let alpha = alpha_ls(rho, k);
            let (p, _) = sca_power_allocation(h, alpha, sigma2, 1e-6, 50)?;
            Ok(secrecy_sum_rate_pa(h, &rci_precoder(h, alpha)?, &p, sigma2)?.sum_bits)
        }
        Scheme::RciPaJoint => {
            let (alpha, p, _) = joint_optimize(h, sigma2, 1e-5)?;
            Ok(secrecy_sum_rate_pa(h, &rci_precoder(h, alpha)?, &p, sigma2)?.sum_bits)
        }
        Scheme::RciFsAvg => Err(Error::Config(
            "rci-fs-avg is resolved per SNR point, not per trial".into(),
        )),
    }
}

/// Compare schemes over the SNR grid, every scheme seeing the same channel
/// draws. `rci-fs-avg` first resolves its fixed `alpha` from the same draws.
pub fn scheme_comparison_sweep(config: &ExperimentConfig) -> Result<SweepResult> {
    config.validate()?;
    let mut points = Vec::new();
    for &scheme in &config.schemes {
        for &snr_db in &config.snr_grid_db {
            let rho = db_to_linear(snr_db);
            let rates = match scheme {
                Scheme::RciFsAvg => {
                    let alpha = optimize_alpha_average(
                        config.num_users,
                        config.num_antennas,
                        rho,
                        config.trials,
                        config.master_seed,
                    )?;
                    run_trials(config.trials, |t| {
                        let h = sample_channel(
                            config.num_users,
                            config.num_antennas,
                            &RngSpec::new(config.master_seed, t),
                        );
                        Ok(rci_secrecy_sum_rate(&h, alpha, 1.0 / rho)?.sum_bits)
                    })?
                }
                _ => run_trials(config.trials, |t| {
                    let h = sample_channel(
                        config.num_users,
                        config.num_antennas,
                        &RngSpec::new(config.master_seed, t),
                    );
                    scheme_rate(scheme, &h, rho)
                })?,
            };
            let (mean_bits, std_err) = mean_and_stderr(&rates);
            points.push(SweepPoint {
                snr_db,
                scheme: scheme.name().to_string(),
                mean_bits,
                std_err,
                trials: config.trials,
                extra: BTreeMap::new(),
            });
        }
    }
    Ok(SweepResult { points, metadata: config.metadata() })
}

/// Power-allocation study at desk scale: per-user secrecy rates of RCI-EP
/// at `alpha_LS`, optimized powers at `alpha_LS`, the joint `(alpha, p)`
/// optimizer, the no-secrecy benchmark, and the high-SNR MISOME bound
/// `log2(rho)/2`. Per-trial dominance margins are reported in `extra`.
pub fn power_allocation_sweep(config: &ExperimentConfig) -> Result<SweepResult> {
    config.validate()?;
    let k = config.num_users;
    let mut points = Vec::new();
    for &snr_db in &config.snr_grid_db {
        let rho = db_to_linear(snr_db);
        let sigma2 = 1.0 / rho;
        let alpha = alpha_ls(rho, k);

        let triples: Vec<Result<(f64, f64, f64)>> = (0..config.trials as u64)
            .into_par_iter()
            .map(|t| {
                let h =
                    sample_channel(k, config.num_antennas, &RngSpec::new(config.master_seed, t));
                let w = rci_precoder(&h, alpha)?;
                let ep = secrecy_sum_rate(&h, &w, sigma2)?.sum_bits;
                let (p, _) = sca_power_allocation(&h, alpha, sigma2, 1e-6, 50)?;
                let pa = secrecy_sum_rate_pa(&h, &w, &p, sigma2)?.sum_bits;
                let (alpha_j, p_j, _) = joint_optimize(&h, sigma2, 1e-5)?;
                let joint =
                    secrecy_sum_rate_pa(&h, &rci_precoder(&h, alpha_j)?, &p_j, sigma2)?.sum_bits;
                Ok((ep, pa, joint))
            })
            .collect();

        let mut ep_rates = Vec::with_capacity(config.trials);
        let mut pa_rates = Vec::with_capacity(config.trials);
        let mut joint_rates = Vec::with_capacity(config.trials);
        let mut min_pa_minus_ep = f64::INFINITY;
        let mut min_joint_minus_pa = f64::INFINITY;
        for (t, r) in triples.into_iter().enumerate() {
            let (ep, pa, joint) = r.map_err(|e| trial_error(t, e))?;
            min_pa_minus_ep = min_pa_minus_ep.min(pa - ep);
            min_joint_minus_pa = min_joint_minus_pa.min(joint - pa);
            ep_rates.push(ep / k as f64);
            pa_rates.push(pa / k as f64);
            joint_rates.push(joint / k as f64);
        }

        let no_secrecy = run_trials(config.trials, |t| {
            let h = sample_channel(k, config.num_antennas, &RngSpec::new(config.master_seed, t));
            Ok(sum_rate(&h, &rci_precoder(&h, k as f64 / rho)?, sigma2)? / k as f64)
        })?;

        let mut push = |scheme: &str, values: &[f64], extra: BTreeMap<String, f64>| {
            let (mean_bits, std_err) = mean_and_stderr(values);
            points.push(SweepPoint {
                snr_db,
                scheme: scheme.to_string(),
                mean_bits,
                std_err,
                trials: config.trials,
                extra,
            });
        };

        let ep_mean = mean_and_stderr(&ep_rates).0;
        let pa_mean = mean_and_stderr(&pa_rates).0;
        let mut pa_extra = BTreeMap::new();
        pa_extra.insert("min_pa_minus_ep_bits".into(), min_pa_minus_ep);
        pa_extra.insert("rel_gain_over_ep".into(), pa_mean / ep_mean - 1.0);
        let mut joint_extra = BTreeMap::new();
        joint_extra.insert("min_joint_minus_pa_bits".into(), min_joint_minus_pa);

        push("rci-ep", &ep_rates, BTreeMap::new());
        push("rci-pa-fixed-alpha", &pa_rates, pa_extra);
        push("rci-pa-joint", &joint_rates, joint_extra);
        push("rci-no-secrecy", &no_secrecy, BTreeMap::new());
        points.push(SweepPoint {
            snr_db,
            scheme: "misome-bound".to_string(),
            mean_bits: (0.5 * rho.log2()).max(0.0),
            std_err: 0.0,
            trials: config.trials,
            extra: BTreeMap::new(),
        });
    }
    Ok(SweepResult { points, metadata: config.metadata() })
}
