//! Python bindings for the secrecy-precoding crate.
//!
//! Exposes the channel ensemble, the RCI/CI/MF precoder rates, the
//! large-system closed forms and the power-allocation optimizers as the
//! `mimo_secrecy` extension module. Matrices cross the boundary as nested
//! lists of Python complex numbers; see `python/smoke_test.py` for usage.

use nalgebra::DMatrix;
use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use secrecy_precoding as core;
use secrecy_precoding::channel::RngSpec;

fn to_py_err(e: core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// A K x M complex fading matrix.
#[pyclass(frozen)]
struct ChannelMatrix {
    inner: core::ChannelMatrix,
}

#[pymethods]
impl ChannelMatrix {
    /// Build from a nested list (rows of complex numbers).
    #[new]
    fn new(rows: Vec<Vec<Complex64>>) -> PyResult<Self> {
        if rows.is_empty() || rows[0].is_empty() {
            return Err(PyValueError::new_err("channel matrix must be at least 1x1"));
        }
        let (k, m) = (rows.len(), rows[0].len());
        if rows.iter().any(|r| r.len() != m) {
            return Err(PyValueError::new_err("rows must all have the same length"));
        }
        let entries = DMatrix::from_fn(k, m, |i, j| rows[i][j]);
        Ok(Self { inner: core::ChannelMatrix::from_matrix(entries).map_err(to_py_err)? })
    }

    /// Draw a K x M matrix of i.i.d. CN(0, 1) entries; identical
    /// `(master_seed, trial_index)` pairs give bit-identical draws.
    #[staticmethod]
    #[pyo3(signature = (num_users, num_antennas, master_seed=0, trial_index=0))]
    fn sample(num_users: usize, num_antennas: usize, master_seed: u64, trial_index: u64) -> Self {
        Self {
            inner: core::sample_channel(
                num_users,
                num_antennas,
                &RngSpec::new(master_seed, trial_index),
            ),
        }
    }

    #[getter]
    fn shape(&self) -> (usize, usize) {
        (self.inner.num_users(), self.inner.num_antennas())
    }

    /// Entries as a nested list of Python complex numbers.
    fn entries(&self) -> Vec<Vec<Complex64>> {
        let m = self.inner.entries();
        (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
    }

    /// The leave-one-out matrix with row `k` removed.
    fn remove_row(&self, k: usize) -> PyResult<Vec<Vec<Complex64>>> {
        let m = self.inner.remove_row(k).map_err(to_py_err)?;
        Ok((0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect())
    }

    fn to_csv(&self) -> String {
        self.inner.to_csv()
    }

    #[staticmethod]
    fn from_csv(text: &str) -> PyResult<Self> {
        Ok(Self { inner: core::ChannelMatrix::from_csv(text).map_err(to_py_err)? })
    }

    fn __repr__(&self) -> String {
        format!(
            "ChannelMatrix(K={}, M={})",
            self.inner.num_users(),
            self.inner.num_antennas()
        )
    }
}

fn report_to_dict<'py>(
    py: Python<'py>,
    report: &core::SecrecyRateReport,
) -> PyResult<Bound<'py, PyDict>> {
    let out = PyDict::new(py);
    let users: Vec<Bound<'py, PyDict>> = report
        .per_user
        .iter()
        .map(|u| {
            let d = PyDict::new(py);
            d.set_item("sinr_k", u.sinr.intended)?;
            d.set_item("sinr_ke", u.sinr.eavesdropper)?;
            d.set_item("rate_bits", u.rate_bits)?;
            d.set_item("clipped", u.clipped)?;
            Ok(d)
        })
        .collect::<PyResult<_>>()?;
    out.set_item("per_user", users)?;
    out.set_item("sum_bits", report.sum_bits)?;
    Ok(out)
}

/// Secrecy sum-rate of the RCI precoder at regularization `alpha`.
#[pyfunction]
fn rci_secrecy_sum_rate<'py>(
    py: Python<'py>,
    channel: &ChannelMatrix,
    alpha: f64,
    sigma2: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let report =
        core::rates::rci_secrecy_sum_rate(&channel.inner, alpha, sigma2).map_err(to_py_err)?;
    report_to_dict(py, &report)
}

/// Secrecy sum-rate of channel inversion (`alpha = 0`, needs K <= M).
#[pyfunction]
fn ci_secrecy_sum_rate<'py>(
    py: Python<'py>,
    channel: &ChannelMatrix,
    sigma2: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let w = core::ci_precoder(&channel.inner).map_err(to_py_err)?;
    let report = core::secrecy_sum_rate(&channel.inner, &w, sigma2).map_err(to_py_err)?;
    report_to_dict(py, &report)
}

/// Secrecy sum-rate of the matched-filter precoder `W = H^†`.
#[pyfunction]
fn mf_secrecy_sum_rate<'py>(
    py: Python<'py>,
    channel: &ChannelMatrix,
    sigma2: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let w = core::mf_precoder(&channel.inner).map_err(to_py_err)?;
    let report = core::secrecy_sum_rate(&channel.inner, &w, sigma2).map_err(to_py_err)?;
    report_to_dict(py, &report)
}

/// The RCI precoding matrix `H^†(HH^† + alpha I)^{-1}` as nested lists,
/// together with its power normalization `gamma`.
#[pyfunction]
fn rci_precoder(
    channel: &ChannelMatrix,
    alpha: f64,
) -> PyResult<(Vec<Vec<Complex64>>, f64)> {
    let w = core::rci_precoder(&channel.inner, alpha).map_err(to_py_err)?;
    let m = w.matrix();
    let rows = (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect();
    Ok((rows, w.gamma()))
}

/// `gamma = tr{H^†H (H^†H + alpha I)^{-2}}` via the eigenvalues of `HH^†`.
#[pyfunction]
fn power_normalization(channel: &ChannelMatrix, alpha: f64) -> PyResult<f64> {
    core::power_normalization(&channel.inner, alpha).map_err(to_py_err)
}

/// `g(xi) = sqrt(1 + 4/xi)/2 - 1/2`.
#[pyfunction]
fn g_of_xi(xi: f64) -> PyResult<f64> {
    core::g_of_xi(xi).map_err(to_py_err)
}

/// Optimal normalized regularization `1/(3 rho + 1 + sqrt(3 rho + 1))`.
#[pyfunction]
fn xi_opt(rho: f64) -> f64 {
    core::xi_opt(rho)
}

/// `alpha_LS = K xi_opt(rho)`.
#[pyfunction]
fn alpha_ls(rho: f64, num_users: usize) -> f64 {
    core::experiments::alpha_ls(rho, num_users)
}

/// Large-system secrecy sum-rate at `(xi, rho)`, times `K`.
#[pyfunction]
fn asymptotic_secrecy_sum_rate(xi: f64, rho: f64, num_users: usize) -> PyResult<f64> {
    core::asymptotic_secrecy_sum_rate(xi, rho, num_users).map_err(to_py_err)
}

/// Closed-form optimal large-system secrecy sum-rate.
#[pyfunction]
fn optimal_secrecy_sum_rate(rho: f64, num_users: usize) -> f64 {
    core::optimal_secrecy_sum_rate(rho, num_users)
}

/// Large-system sum-rate of RCI with `xi = 1/rho`, no secrecy requirement.
#[pyfunction]
fn sum_rate_no_secrecy(rho: f64, num_users: usize) -> f64 {
    core::sum_rate_no_secrecy(rho, num_users)
}

/// Large-system secrecy sum-rate of RCI with `xi = 1/rho`.
#[pyfunction]
fn secrecy_rate_xi_inv_rho(rho: f64, num_users: usize) -> f64 {
    core::secrecy_rate_xi_inv_rho(rho, num_users)
}

/// High-SNR constants: secrecy loss, gain over `xi = 1/rho`, power loss.
#[pyfunction]
fn asymptote_report(py: Python<'_>) -> PyResult<Bound<'_, PyDict>> {
    let rep = core::asymptote_report();
    let d = PyDict::new(py);
    d.set_item("secrecy_loss_bits_per_antenna", rep.secrecy_loss_bits_per_antenna)?;
    d.set_item("gain_vs_xi_inv_rho_bits", rep.gain_vs_xi_inv_rho_bits)?;
    d.set_item("power_loss_db", rep.power_loss_db)?;
    Ok(d)
}

/// Secrecy-rate-maximizing power allocation at fixed `alpha`; returns the
/// per-user powers and the achieved secrecy sum-rate in bits.
#[pyfunction]
#[pyo3(signature = (channel, alpha, sigma2, tol=1e-6, max_outer=50))]
fn sca_power_allocation(
    channel: &ChannelMatrix,
    alpha: f64,
    sigma2: f64,
    tol: f64,
    max_outer: usize,
) -> PyResult<(Vec<f64>, f64)> {
    let (p, _) = core::sca_power_allocation(&channel.inner, alpha, sigma2, tol, max_outer)
        .map_err(to_py_err)?;
    let w = core::rci_precoder(&channel.inner, alpha).map_err(to_py_err)?;
    let rate = core::secrecy_sum_rate_pa(&channel.inner, &w, &p, sigma2)
        .map_err(to_py_err)?
        .sum_bits;
    Ok((p.powers().to_vec(), rate))
}

/// Joint `(alpha, p)` optimization; returns `(alpha, powers, rate_bits)`.
#[pyfunction]
#[pyo3(signature = (channel, sigma2, tol=1e-5))]
fn joint_optimize(
    channel: &ChannelMatrix,
    sigma2: f64,
    tol: f64,
) -> PyResult<(f64, Vec<f64>, f64)> {
    let (alpha, p, _) = core::joint_optimize(&channel.inner, sigma2, tol).map_err(to_py_err)?;
    let w = core::rci_precoder(&channel.inner, alpha).map_err(to_py_err)?;
    let rate = core::secrecy_sum_rate_pa(&channel.inner, &w, &p, sigma2)
        .map_err(to_py_err)?
        .sum_bits;
    Ok((alpha, p.powers().to_vec(), rate))
}

/// Mean and standard error of the RCI secrecy sum-rate at `alpha_LS` over
/// seeded Monte Carlo trials.
#[pyfunction]
#[pyo3(signature = (num_users, num_antennas, snr_db, trials=1000, master_seed=0))]
fn average_secrecy_sum_rate_ls(
    num_users: usize,
    num_antennas: usize,
    snr_db: f64,
    trials: usize,
    master_seed: u64,
) -> PyResult<(f64, f64)> {
    let mut cfg = core::experiments::ExperimentConfig::new(num_users, num_antennas);
    cfg.snr_grid_db = vec![snr_db];
    cfg.trials = trials;
    cfg.master_seed = master_seed;
    let sweep = core::experiments::average_secrecy_sum_rate(&cfg, |rho, k, _| {
        core::experiments::alpha_ls(rho, k)
    })
    .map_err(to_py_err)?;
    Ok((sweep.points[0].mean_bits, sweep.points[0].std_err))
}

#[pymodule]
fn mimo_secrecy(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<ChannelMatrix>()?;
    m.add_function(wrap_pyfunction!(rci_secrecy_sum_rate, m)?)?;
    m.add_function(wrap_pyfunction!(ci_secrecy_sum_rate, m)?)?;
    m.add_function(wrap_pyfunction!(mf_secrecy_sum_rate, m)?)?;
    m.add_function(wrap_pyfunction!(rci_precoder, m)?)?;
    m.add_function(wrap_pyfunction!(power_normalization, m)?)?;
    m.add_function(wrap_pyfunction!(g_of_xi, m)?)?;
    m.add_function(wrap_pyfunction!(xi_opt, m)?)?;
    m.add_function(wrap_pyfunction!(alpha_ls, m)?)?;
    m.add_function(wrap_pyfunction!(asymptotic_secrecy_sum_rate, m)?)?;
    m.add_function(wrap_pyfunction!(optimal_secrecy_sum_rate, m)?)?;
    m.add_function(wrap_pyfunction!(sum_rate_no_secrecy, m)?)?;
    m.add_function(wrap_pyfunction!(secrecy_rate_xi_inv_rho, m)?)?;
    m.add_function(wrap_pyfunction!(asymptote_report, m)?)?;
    m.add_function(wrap_pyfunction!(sca_power_allocation, m)?)?;
    m.add_function(wrap_pyfunction!(joint_optimize, m)?)?;
    m.add_function(wrap_pyfunction!(average_secrecy_sum_rate_ls, m)?)?;
    Ok(())
}
