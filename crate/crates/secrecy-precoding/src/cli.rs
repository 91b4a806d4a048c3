//! The `secrecy-sim` command-line front end.
//!
//! Subcommands map onto the experiment operations: `large-system` evaluates
//! the closed forms, `sweep`/`ccdf`/`power-alloc`/`alpha-search` run the
//! Monte Carlo studies, and `selftest` executes reduced-scale invariant
//! suites for every module. SNR is taken in dB here and converted once;
//! everything below the CLI works in linear scale.
//!
//! Settings resolve in precedence order: command-line flag, then the
//! `[subcommand]` section of `--config` (flat `key = value` lines), then
//! built-in defaults. Unknown config keys are rejected by name. Exit codes:
//! 0 success, 2 configuration error, 1 runtime error.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Parser, Subcommand, ValueEnum};

use crate::experiments::{
    alpha_ls, ccdf_alpha_penalty, optimize_alpha_average, power_allocation_sweep,
    scheme_comparison_sweep, ExperimentConfig, Scheme, SweepResult,
};
use crate::large_system::{optimal_secrecy_sum_rate, xi_opt};
use crate::{Error, Result};

mod selftest;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(
    name = "secrecy-sim",
    about = "Secrecy sum-rate simulator for multi-user MIMO RCI precoding",
    version
)]
struct Cli {
    /// Config file with flat `key = value` lines under `[subcommand]` sections.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Write results to this file instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,

    /// Output format.
    #[arg(long, global = true, value_enum, default_value = "csv")]
    format: Format,

    /// Worker thread cap (default: the SECRECY_SIM_THREADS variable, else all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Closed-form large-system curves: xi_opt and the optimal secrecy sum-rate.
    LargeSystem {
        /// SNR grid in dB: `start:step:end`, a comma list, or one value.
        #[arg(long)]
        rho_db: Option<String>,
        /// Number of users (= antennas in the large-system model).
        #[arg(long)]
        k: Option<usize>,
    },
    /// Monte Carlo secrecy sum-rate comparison across precoding schemes.
    Sweep {
        #[arg(long)]
        k: Option<usize>,
        /// Transmit antennas (defaults to K).
        #[arg(long)]
        m: Option<usize>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Comma list of schemes (rci-ls, rci-fs-avg, rci-fs-per-channel,
        /// ci, mf, rci-xi-inv-rho, rci-pa-fixed-alpha, rci-pa-joint,
        /// rci-no-secrecy).
        #[arg(long)]
        schemes: Option<String>,
        #[arg(long)]
        rho_db: Option<String>,
    },
    /// CCDF of the normalized rate penalty of alpha_LS vs per-channel alpha_FS(H).
    Ccdf {
        #[arg(long)]
        k: Option<usize>,
        /// Single SNR point in dB.
        #[arg(long)]
        rho_db: Option<String>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Comma list of CCDF thresholds.
        #[arg(long)]
        thresholds: Option<String>,
    },
    /// Per-user secrecy rates of RCI-EP, power allocation, and the joint optimizer.
    PowerAlloc {
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        m: Option<usize>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        rho_db: Option<String>,
    },
    /// Compare alpha_LS with the trial-averaged finite-system optimum.
    AlphaSearch {
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        m: Option<usize>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        rho_db: Option<String>,
    },
    /// Run the module invariant suites at reduced scale.
    Selftest {
        /// Run only the named suite (channel, precoder, rates, large-system,
        /// power-alloc, experiments).
        #[arg(long)]
        suite: Option<String>,
    },
}

/// Entry point behind `main`: parse `argv`, merge config, dispatch, and map
/// every failure to the documented exit codes.
pub fn parse_and_dispatch(argv: Vec<String>) -> i32 {
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
            let _ = e.print();
            return code;
        }
    };
    init_threads(cli.threads);
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) | Error::Parse(_) => 2,
                _ => 1,
            }
        }
    }
}

fn init_threads(cap: Option<usize>) {
    let threads = cap.or_else(|| {
        std::env::var("SECRECY_SIM_THREADS").ok().and_then(|v| v.parse().ok())
    });
    if let Some(n) = threads.filter(|&n| n > 0) {
        // the global pool can only be installed once per process; later
        // calls keep the first configuration
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

/// Parse an SNR grid: `start:step:end`, a comma list, or a single value.
fn parse_db_grid(text: &str) -> Result<Vec<f64>> {
    let text = text.trim();
    let bad = |msg: &str| Error::Config(format!("bad SNR grid '{text}': {msg}"));
    if text.contains(':') {
        let parts: Vec<&str> = text.split(':').collect();
        if parts.len() != 3 {
            return Err(bad("expected start:step:end"));
        }
        let nums: Vec<f64> = parts
            .iter()
            .map(|p| p.trim().parse::<f64>().map_err(|_| bad("non-numeric bound")))
            .collect::<Result<_>>()?;
        let (start, step, end) = (nums[0], nums[1], nums[2]);
        if step <= 0.0 || end < start {
            return Err(bad("need step > 0 and end >= start"));
        }
        let n = ((end - start) / step).round() as usize;
        return Ok((0..=n).map(|i| start + step * i as f64).collect());
    }
    let grid: Vec<f64> = text
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|_| bad("non-numeric value")))
        .collect::<Result<_>>()?;
    if grid.is_empty() {
        return Err(bad("empty"));
    }
    Ok(grid)
}

fn parse_comma_f64(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("bad threshold '{}'", p.trim())))
        })
        .collect()
}

fn parse_schemes(text: &str) -> Result<Vec<Scheme>> {
    text.split(',').map(Scheme::parse).collect()
}

/// One `[section]` of the config file.
type Section = BTreeMap<String, String>;

fn parse_config_file(text: &str, path: &std::path::Path) -> Result<BTreeMap<String, Section>> {
    const SECTIONS: &[&str] =
        &["large-system", "sweep", "ccdf", "power-alloc", "alpha-search", "selftest"];
    let mut sections: BTreeMap<String, Section> = BTreeMap::new();
    let mut current: Option<String> = None;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            let name = name.trim();
            if !SECTIONS.contains(&name) {
                return Err(Error::Config(format!(
                    "{}:{}: unknown section '{name}'",
                    path.display(),
                    lineno + 1
                )));
            }
            current = Some(name.to_string());
            sections.entry(name.to_string()).or_default();
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::Config(format!(
                "{}:{}: expected 'key = value', got '{line}'",
                path.display(),
                lineno + 1
            ))
        })?;
        let section = current.as_ref().ok_or_else(|| {
            Error::Config(format!(
                "{}:{}: key '{}' appears before any [section]",
                path.display(),
                lineno + 1,
                key.trim()
            ))
        })?;
        sections
            .get_mut(section)
            .expect("section inserted on entry")
            .insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(sections)
}

/// Per-subcommand view of the config file with flag-over-file precedence.
struct Settings {
    section: Section,
}

impl Settings {
    fn load(config: &Option<PathBuf>, subcommand: &str, allowed: &[&str]) -> Result<Self> {
        let section = match config {
            None => Section::new(),
            Some(path) => {
                let text = std::fs::read_to_string(path)?;
                let mut sections = parse_config_file(&text, path)?;
                let section = sections.remove(subcommand).unwrap_or_default();
                if let Some(key) = section.keys().find(|k| !allowed.contains(&k.as_str())) {
                    return Err(Error::Config(format!(
                        "unknown key '{key}' in [{subcommand}] of {}",
                        path.display()
                    )));
                }
                section
            }
        };
        Ok(Self { section })
    }

    /// Flag value if given, else the parsed config value, else the default.
    fn resolve<T: FromStr + Clone>(
        &self,
        flag: Option<T>,
        key: &str,
        default: Option<T>,
    ) -> Result<T> {
        if let Some(v) = flag {
            return Ok(v);
        }
        if let Some(raw) = self.section.get(key) {
            return raw
                .parse::<T>()
                .map_err(|_| Error::Config(format!("bad value '{raw}' for '{key}'")));
        }
        default.ok_or_else(|| Error::Config(format!("missing required parameter '{key}'")))
    }

    fn resolve_string(&self, flag: Option<String>, key: &str, default: &str) -> String {
        flag.or_else(|| self.section.get(key).cloned()).unwrap_or_else(|| default.to_string())
    }
}

fn write_output(path: &Option<PathBuf>, content: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, content)?,
        None => print!("{content}"),
    }
    Ok(())
}

fn sweep_output(result: &SweepResult, format: Format) -> Result<String> {
    Ok(match format {
        Format::Csv => result.to_csv(),
        Format::Json => {
            let mut s = serde_json::to_string_pretty(result)
                .map_err(|e| Error::Parse(e.to_string()))?;
            s.push('\n');
            s
        }
    })
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::LargeSystem { rho_db, k } => {
            let settings = Settings::load(&cli.config, "large-system", &["rho-db", "k"])?;
            let grid_text = settings.resolve_string(rho_db, "rho-db", "0:5:30");
            let grid = parse_db_grid(&grid_text)?;
            let k: usize = settings.resolve(k, "k", None)?;
            if k == 0 {
                return Err(Error::Config("k must be at least 1".into()));
            }
            let rows: Vec<(f64, f64, f64)> = grid
                .iter()
                .map(|&snr_db| {
                    let rho = 10f64.powf(snr_db / 10.0);
                    (snr_db, xi_opt(rho), optimal_secrecy_sum_rate(rho, k))
                })
                .collect();
            let content = match cli.format {
                Format::Csv => {
                    let mut out = String::new();
                    let _ = writeln!(out, "# k = {k}");
                    let _ = writeln!(out, "# rho_db = {grid_text}");
                    out.push_str("snr_db,xi_opt,rate_bits\n");
                    for (snr, xi, rate) in &rows {
                        let _ = writeln!(out, "{snr:?},{xi:?},{rate:?}");
                    }
                    out
                }
                Format::Json => {
                    let json: Vec<serde_json::Value> = rows
                        .iter()
                        .map(|(snr, xi, rate)| {
                            serde_json::json!({"snr_db": snr, "xi_opt": xi, "rate_bits": rate})
                        })
                        .collect();
                    let mut s = serde_json::to_string_pretty(
                        &serde_json::json!({"k": k, "points": json}),
                    )
                    .map_err(|e| Error::Parse(e.to_string()))?;
                    s.push('\n');
                    s
                }
            };
            write_output(&cli.output, &content)
        }

        Command::Sweep { k, m, trials, seed, schemes, rho_db } => {
            let settings = Settings::load(
                &cli.config,
                "sweep",
                &["k", "m", "trials", "seed", "schemes", "rho-db"],
            )?;
            let k: usize = settings.resolve(k, "k", None)?;
            let m: usize = settings.resolve(m, "m", Some(k))?;
            let mut cfg = ExperimentConfig::new(k, m);
            cfg.trials = settings.resolve(trials, "trials", Some(1000))?;
            cfg.master_seed = settings.resolve(seed, "seed", Some(0))?;
            cfg.schemes = parse_schemes(&settings.resolve_string(schemes, "schemes", "rci-ls"))?;
            cfg.snr_grid_db = parse_db_grid(&settings.resolve_string(rho_db, "rho-db", "0:5:30"))?;
            let result = scheme_comparison_sweep(&cfg)?;
            write_output(&cli.output, &sweep_output(&result, cli.format)?)
        }

        Command::Ccdf { k, rho_db, trials, seed, thresholds } => {
            let settings = Settings::load(
                &cli.config,
                "ccdf",
                &["k", "rho-db", "trials", "seed", "thresholds"],
            )?;
            let k: usize = settings.resolve(k, "k", None)?;
            let snr_db: f64 = settings
                .resolve_string(rho_db, "rho-db", "10")
                .parse()
                .map_err(|_| Error::Config("ccdf takes a single rho-db value".into()))?;
            let trials = settings.resolve(trials, "trials", Some(1000))?;
            let seed = settings.resolve(seed, "seed", Some(0))?;
            let thresholds = parse_comma_f64(&settings.resolve_string(
                thresholds,
                "thresholds",
                "0,0.005,0.01,0.02,0.03,0.05,0.08,0.12,0.2",
            ))?;
            let table = ccdf_alpha_penalty(k, 10f64.powf(snr_db / 10.0), trials, seed, &thresholds)?;
            let content = match cli.format {
                Format::Csv => table.to_csv(),
                Format::Json => {
                    let mut s = serde_json::to_string_pretty(&table)
                        .map_err(|e| Error::Parse(e.to_string()))?;
                    s.push('\n');
                    s
                }
            };
            write_output(&cli.output, &content)
        }

        Command::PowerAlloc { k, m, trials, seed, rho_db } => {
            let settings = Settings::load(
                &cli.config,
                "power-alloc",
                &["k", "m", "trials", "seed", "rho-db"],
            )?;
            let k: usize = settings.resolve(k, "k", None)?;
            let m: usize = settings.resolve(m, "m", Some(k))?;
            let mut cfg = ExperimentConfig::new(k, m);
            cfg.trials = settings.resolve(trials, "trials", Some(500))?;
            cfg.master_seed = settings.resolve(seed, "seed", Some(0))?;
            cfg.snr_grid_db = parse_db_grid(&settings.resolve_string(rho_db, "rho-db", "0:5:30"))?;
            let result = power_allocation_sweep(&cfg)?;
            write_output(&cli.output, &sweep_output(&result, cli.format)?)
        }

        Command::AlphaSearch { k, m, trials, seed, rho_db } => {
            let settings = Settings::load(
                &cli.config,
                "alpha-search",
                &["k", "m", "trials", "seed", "rho-db"],
            )?;
            let k: usize = settings.resolve(k, "k", None)?;
            let m: usize = settings.resolve(m, "m", Some(k))?;
            let trials = settings.resolve(trials, "trials", Some(1000))?;
            let seed = settings.resolve(seed, "seed", Some(0))?;
            let grid = parse_db_grid(&settings.resolve_string(rho_db, "rho-db", "0:5:30"))?;
            let mut rows = Vec::new();
            for &snr_db in &grid {
                let rho = 10f64.powf(snr_db / 10.0);
                let fs = optimize_alpha_average(k, m, rho, trials, seed)?;
                rows.push((snr_db, alpha_ls(rho, k), fs));
            }
            let content = match cli.format {
                Format::Csv => {
                    let mut out = String::new();
                    let _ = writeln!(out, "# k = {k}");
                    let _ = writeln!(out, "# m = {m}");
                    let _ = writeln!(out, "# trials = {trials}");
                    let _ = writeln!(out, "# seed = {seed}");
                    out.push_str("snr_db,alpha_ls,alpha_fs_avg\n");
                    for (snr, ls, fs) in &rows {
                        let _ = writeln!(out, "{snr:?},{ls:?},{fs:?}");
                    }
                    out
                }
                Format::Json => {
                    let json: Vec<serde_json::Value> = rows
                        .iter()
                        .map(|(snr, ls, fs)| {
                            serde_json::json!({"snr_db": snr, "alpha_ls": ls, "alpha_fs_avg": fs})
                        })
                        .collect();
                    let mut s = serde_json::to_string_pretty(&serde_json::json!({
                        "k": k, "m": m, "trials": trials, "seed": seed, "points": json
                    }))
                    .map_err(|e| Error::Parse(e.to_string()))?;
                    s.push('\n');
                    s
                }
            };
            write_output(&cli.output, &content)
        }

        Command::Selftest { suite } => {
            let outcome = selftest::run(suite.as_deref())?;
            if outcome {
                Ok(())
            } else {
                Err(Error::Domain("selftest failed".into()))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dispatch(args: &[&str]) -> i32 {
        let mut argv = vec!["secrecy-sim".to_string()];
        argv.extend(args.iter().map(|s| s.to_string()));
        parse_and_dispatch(argv)
    }

    #[test]
    fn db_grid_forms() {
        assert_eq!(parse_db_grid("0:5:30").unwrap().len(), 7);
        assert_eq!(parse_db_grid("0:5:30").unwrap()[6], 30.0);
        assert_eq!(parse_db_grid("1,2,3").unwrap(), vec![1.0, 2.0, 3.0]);
        assert_eq!(parse_db_grid("12.5").unwrap(), vec![12.5]);
        assert!(parse_db_grid("5:0:10").is_err());
        assert!(parse_db_grid("a:b:c").is_err());
    }

    #[test]
    fn missing_required_parameter_names_it() {
        // `large-system` without --k: resolver must name the key and exit 2
        let code = dispatch(&["large-system", "--rho-db", "0:10:30"]);
        assert_eq!(code, 2);
    }

    #[test]
    fn unknown_config_key_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("bad.cfg");
        std::fs::write(&cfg, "[large-system]\nk = 4\nbogus = 1\n").unwrap();
        let code = dispatch(&[
            "large-system",
            "--rho-db",
            "0:10:30",
            "--config",
            cfg.to_str().unwrap(),
        ]);
        assert_eq!(code, 2);
    }

    #[test]
    fn config_file_supplies_defaults_and_flags_override() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("ok.cfg");
        std::fs::write(&cfg, "[large-system]\nk = 4\nrho-db = 0:10:20\n").unwrap();
        let out = dir.path().join("a.csv");
        let code = dispatch(&[
            "large-system",
            "--config",
            cfg.to_str().unwrap(),
            "--output",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code, 0);
        let text = std::fs::read_to_string(&out).unwrap();
        assert!(text.contains("snr_db,xi_opt,rate_bits"));
        assert!(text.contains("# k = 4"));
        assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 4); // header + 3 rows

        // flag overrides the file's grid
        let out2 = dir.path().join("b.csv");
        let code = dispatch(&[
            "large-system",
            "--config",
            cfg.to_str().unwrap(),
            "--rho-db",
            "5",
            "--output",
            out2.to_str().unwrap(),
        ]);
        assert_eq!(code, 0);
        let text2 = std::fs::read_to_string(&out2).unwrap();
        assert_eq!(text2.lines().filter(|l| !l.starts_with('#')).count(), 2);
    }

    #[test]
    fn large_system_csv_values() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("ls.csv");
        let code =
            dispatch(&["large-system", "--rho-db", "0", "--k", "4", "--output", out.to_str().unwrap()]);
        assert_eq!(code, 0);
        let text = std::fs::read_to_string(&out).unwrap();
        let row = text.lines().last().unwrap();
        let cols: Vec<&str> = row.split(',').collect();
        assert_eq!(cols[0].parse::<f64>().unwrap(), 0.0);
        // 0 dB is rho = 1, where xi_opt = 1/6
        assert!((cols[1].parse::<f64>().unwrap() - 1.0 / 6.0).abs() < 1e-12);
        assert!(cols[2].parse::<f64>().unwrap() > 0.0);
    }

    #[test]
    fn sweep_is_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        let out1 = dir.path().join("s1.csv");
        let out2 = dir.path().join("s2.csv");
        for out in [&out1, &out2] {
            let code = dispatch(&[
                "sweep",
                "--k",
                "2",
                "--m",
                "2",
                "--trials",
                "25",
                "--seed",
                "7",
                "--schemes",
                "rci-ls,ci",
                "--rho-db",
                "0,10",
                "--output",
                out.to_str().unwrap(),
            ]);
            assert_eq!(code, 0);
        }
        let a = std::fs::read_to_string(&out1).unwrap();
        let b = std::fs::read_to_string(&out2).unwrap();
        assert_eq!(a, b, "same config and seed must be bit-identical");
        assert!(a.contains("rci-ls"));
        assert!(a.contains("ci"));
        let parsed = SweepResult::from_csv(&a).unwrap();
        assert_eq!(parsed.points.len(), 4);
    }

    #[test]
    fn ccdf_subcommand_runs() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("c.csv");
        let code = dispatch(&[
            "ccdf",
            "--k",
            "2",
            "--rho-db",
            "10",
            "--trials",
            "30",
            "--seed",
            "3",
            "--thresholds",
            "0,0.05",
            "--output",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code, 0);
        let table =
            crate::experiments::CcdfTable::from_csv(&std::fs::read_to_string(&out).unwrap())
                .unwrap();
        assert_eq!(table.thresholds, vec![0.0, 0.05]);
    }

    #[test]
    fn json_format_emits_valid_json() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("ls.json");
        let code = dispatch(&[
            "large-system",
            "--rho-db",
            "0:10:20",
            "--k",
            "2",
            "--format",
            "json",
            "--output",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code, 0);
        let v: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
        assert_eq!(v["points"].as_array().unwrap().len(), 3);
    }

    #[test]
    fn help_exits_zero_and_bad_flag_exits_two() {
        assert_eq!(dispatch(&["--help"]), 0);
        assert_eq!(dispatch(&["no-such-subcommand"]), 2);
        assert_eq!(dispatch(&["sweep", "--k", "2", "--no-such-flag"]), 2);
    }

    #[test]
    fn selftest_unknown_suite_exits_two() {
        assert_eq!(dispatch(&["selftest", "--suite", "nope"]), 2);
    }
}
