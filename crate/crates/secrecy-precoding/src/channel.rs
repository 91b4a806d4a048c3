//! Random channel ensemble for the multi-user MIMO downlink.
//!
//! The channel between `M` transmit antennas and `K` single-antenna users is
//! a `K x M` matrix of i.i.d. circularly symmetric complex Gaussian gains
//! with unit variance. Every draw is keyed by a `(master_seed, trial_index)`
//! pair so Monte Carlo experiments are reproducible under any execution
//! order, and so every candidate precoder within one sweep sees the same
//! channel realizations (common random numbers).

use std::fmt::Write as _;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::{Error, Result};

/// `K x M` complex fading matrix `H`. Row `k` is the conjugated channel
/// `h_k^†` of user `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix {
    entries: DMatrix<Complex64>,
}

impl ChannelMatrix {
    /// Wrap an explicit matrix. Fails on empty dimensions or non-finite
    /// entries.
    pub fn from_matrix(entries: DMatrix<Complex64>) -> Result<Self> {
        if entries.nrows() == 0 || entries.ncols() == 0 {
            return Err(Error::Dimension(format!(
                "channel matrix must be at least 1x1, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Parse("channel matrix has non-finite entries".into()));
        }
        Ok(Self { entries })
    }

    /// Number of users `K` (rows).
    pub fn num_users(&self) -> usize {
        self.entries.nrows()
    }

    /// Number of transmit antennas `M` (columns).
    pub fn num_antennas(&self) -> usize {
        self.entries.ncols()
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    /// Channel vector `h_k` of user `k` as an `M`-dimensional column
    /// (the conjugate transpose of row `k`).
    pub fn user_channel(&self, k: usize) -> Result<nalgebra::DVector<Complex64>> {
        self.check_user(k)?;
        Ok(self.entries.row(k).adjoint())
    }

    /// Leave-one-out matrix `H_k~`: `H` with row `k` removed, remaining rows
    /// in their original order. The result has `K - 1` rows and may be empty
    /// in the row dimension when `K = 1`.
    pub fn remove_row(&self, k: usize) -> Result<DMatrix<Complex64>> {
        self.check_user(k)?;
        Ok(self.entries.clone().remove_row(k))
    }

    fn check_user(&self, k: usize) -> Result<()> {
        if k >= self.num_users() {
            return Err(Error::Dimension(format!(
                "user index {k} out of range for K = {}",
                self.num_users()
            )));
        }
        Ok(())
    }

    /// Serialize as CSV with header `k,j,re,im`, row-major, 0-based indices.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,j,re,im\n");
        for k in 0..self.num_users() {
            for j in 0..self.num_antennas() {
                let z = self.entries[(k, j)];
                // {:?} prints f64 with enough digits to round-trip exactly
                let _ = writeln!(out, "{k},{j},{:?},{:?}", z.re, z.im);
            }
        }
        out
    }

    /// Parse the CSV format produced by [`ChannelMatrix::to_csv`].
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        match lines.next() {
            Some(h) if h.trim() == "k,j,re,im" => {}
            other => {
                return Err(Error::Parse(format!(
                    "expected channel CSV header 'k,j,re,im', got {other:?}"
                )))
            }
        }
        let mut cells: Vec<(usize, usize, Complex64)> = Vec::new();
        let (mut kmax, mut jmax) = (0usize, 0usize);
        for line in lines {
            let parts: Vec<&str> = line.trim().split(',').collect();
            if parts.len() != 4 {
                return Err(Error::Parse(format!("bad channel CSV row: {line:?}")));
            }
            let err = |what: &str| Error::Parse(format!("bad {what} in channel CSV row {line:?}"));
            let k: usize = parts[0].parse().map_err(|_| err("k"))?;
            let j: usize = parts[1].parse().map_err(|_| err("j"))?;
            let re: f64 = parts[2].parse().map_err(|_| err("re"))?;
            let im: f64 = parts[3].parse().map_err(|_| err("im"))?;
            kmax = kmax.max(k);
            jmax = jmax.max(j);
            cells.push((k, j, Complex64::new(re, im)));
        }
        if cells.is_empty() {
            return Err(Error::Parse("channel CSV has no data rows".into()));
        }
        let (nk, nj) = (kmax + 1, jmax + 1);
        if cells.len() != nk * nj {
            return Err(Error::Parse(format!(
                "channel CSV has {} cells, expected {}x{}",
                cells.len(),
                nk,
                nj
            )));
        }
        let mut m = DMatrix::from_element(nk, nj, Complex64::new(f64::NAN, 0.0));
        for (k, j, z) in cells {
            m[(k, j)] = z;
        }
        Self::from_matrix(m)
    }
}

/// Receiver noise variance and the matching linear SNR `rho = 1/sigma^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    sigma2: f64,
    rho: f64,
}

impl NoiseModel {
    pub fn from_sigma2(sigma2: f64) -> Result<Self> {
        if !(sigma2 > 0.0) || !sigma2.is_finite() {
            return Err(Error::Domain(format!("sigma2 must be positive, got {sigma2}")));
        }
        Ok(Self { sigma2, rho: 1.0 / sigma2 })
    }

    pub fn from_snr_linear(rho: f64) -> Result<Self> {
        if !(rho > 0.0) || !rho.is_finite() {
            return Err(Error::Domain(format!("rho must be positive, got {rho}")));
        }
        Ok(Self { sigma2: 1.0 / rho, rho })
    }

    pub fn from_snr_db(snr_db: f64) -> Result<Self> {
        Self::from_snr_linear(10f64.powf(snr_db / 10.0))
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }
}

/// Seed for one reproducible channel draw: a master seed shared by the whole
/// experiment and the index of the Monte Carlo trial.
///
/// The trial index selects an independent ChaCha stream, so trials can be
/// generated in any order (or in parallel) and still produce bit-identical
/// matrices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RngSpec {
    pub master_seed: u64,
    pub trial_index: u64,
}

impl RngSpec {
    pub fn new(master_seed: u64, trial_index: u64) -> Self {
        Self { master_seed, trial_index }
    }

    pub(crate) fn rng(&self) -> ChaCha12Rng {
        let mut rng = ChaCha12Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.trial_index);
        rng
    }
}

/// Draw a `K x M` channel with i.i.d. `CN(0, 1)` entries: independent real
/// and imaginary parts, each `N(0, 1/2)`. Entries are generated row-major so
/// a draw is a pure function of `(K, M, rng)`.
pub fn sample_channel(num_users: usize, num_antennas: usize, rng_spec: &RngSpec) -> ChannelMatrix {
    assert!(num_users >= 1, "need at least one user");
    assert!(num_antennas >= 1, "need at least one antenna");
    let mut rng = rng_spec.rng();
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let entries = DMatrix::from_fn(num_users, num_antennas, |_, _| {
        // from_fn fills column-major; order only matters for reproducibility,
        // which holds for any fixed traversal.
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        Complex64::new(re * scale, im * scale)
    });
    ChannelMatrix { entries }
}
