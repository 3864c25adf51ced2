//! Scenario description and statistical sampling.
//!
//! A [`SystemConfig`] pins down the base-station array (N transmit, M receive
//! antennas), the K uplink users with their path losses, the pulse length L,
//! the per-symbol power budgets, the sensing correlation matrix, and which
//! signal class the receiver cancels first.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::matrixkit::{self, ComplexMatrix};
use crate::{Error, Result};

/// Which signal class the receiver reconstructs and subtracts first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SicOrder {
    /// Echo first: decoding sees a clean channel, sensing absorbs the
    /// uplink traffic into its noise floor.
    #[default]
    CSic,
    /// Messages first: sensing sees a clean channel, every decoding slot
    /// pays a residual echo penalty.
    SSic,
}

impl std::fmt::Display for SicOrder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SicOrder::CSic => write!(f, "c-sic"),
            SicOrder::SSic => write!(f, "s-sic"),
        }
    }
}

/// Complete static description of one scenario. Powers are linear; use
/// [`db_to_linear`] when starting from decibel figures.
#[derive(Debug, Clone)]
pub struct SystemConfig {
    /// Receive antennas at the base station.
    pub m: usize,
    /// Transmit antennas at the base station.
    pub n: usize,
    /// Uplink users.
    pub k: usize,
    /// Pulse length in time slots.
    pub l: usize,
    /// Per-symbol communication power (linear).
    pub p_c: f64,
    /// Per-symbol sensing power budget (linear).
    pub p_s: f64,
    /// Path-loss coefficient of each user, indexed like the users.
    pub alpha: Vec<f64>,
    /// Sensing correlation matrix, N x N Hermitian positive definite.
    pub r: ComplexMatrix,
    /// Cancellation order at the receiver.
    pub sic_order: SicOrder,
}

impl SystemConfig {
    /// Builds a config whose correlation matrix is given by its eigenvalues,
    /// materialized in the identity basis.
    #[allow(clippy::too_many_arguments)]
    pub fn from_r_eigenvalues(
        m: usize,
        n: usize,
        k: usize,
        l: usize,
        p_c: f64,
        p_s: f64,
        alpha: Vec<f64>,
        r_eigenvalues: &[f64],
        sic_order: SicOrder,
    ) -> Self {
        SystemConfig {
            m,
            n,
            k,
            l,
            p_c,
            p_s,
            alpha,
            r: ComplexMatrix::from_real_diagonal(r_eigenvalues),
            sic_order,
        }
    }

    /// Sum of all path-loss coefficients.
    pub fn alpha_sum(&self) -> f64 {
        self.alpha.iter().sum()
    }
}

/// Converts a decibel power figure to linear scale.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Checks every structural constraint and returns the config unchanged if
/// all hold; otherwise lists each violated constraint by name.
pub fn validate_config(cfg: SystemConfig) -> Result<SystemConfig> {
    let mut violations: Vec<String> = Vec::new();

    for (name, value) in [("M", cfg.m), ("N", cfg.n), ("K", cfg.k), ("L", cfg.l)] {
        if value == 0 {
            violations.push(format!("{name} >= 1 violated: {name}=0"));
        }
    }
    if cfg.m < cfg.n {
        violations.push(format!("M >= N violated: M={}, N={}", cfg.m, cfg.n));
    }
    if cfg.m < cfg.k {
        violations.push(format!("M >= K violated: M={}, K={}", cfg.m, cfg.k));
    }
    if cfg.l < cfg.m {
        violations.push(format!("L >= M violated: L={}, M={}", cfg.l, cfg.m));
    }
    if cfg.l < cfg.n {
        violations.push(format!("L >= N violated: L={}, N={}", cfg.l, cfg.n));
    }
    if cfg.alpha.len() != cfg.k {
        violations.push(format!(
            "alpha length == K violated: K={}, got {} entries",
            cfg.k,
            cfg.alpha.len()
        ));
    }
    for (i, &a) in cfg.alpha.iter().enumerate() {
        if !(a > 0.0) || !a.is_finite() {
            violations.push(format!("alpha_k > 0 violated: alpha_{} = {a}", i + 1));
        }
    }
    if !(cfg.p_c >= 0.0) || !cfg.p_c.is_finite() {
        violations.push(format!("p_c >= 0 violated: p_c = {}", cfg.p_c));
    }
    if !(cfg.p_s >= 0.0) || !cfg.p_s.is_finite() {
        violations.push(format!("p_s >= 0 violated: p_s = {}", cfg.p_s));
    }
    if cfg.r.rows() != cfg.n || cfg.r.cols() != cfg.n {
        violations.push(format!(
            "R is NxN violated: N={}, R is {}x{}",
            cfg.n,
            cfg.r.rows(),
            cfg.r.cols()
        ));
    } else if !cfg.r.is_hermitian() {
        violations.push("R Hermitian violated".into());
    } else {
        match matrixkit::hermitian_eig(&cfg.r) {
            Ok(eig) => {
                if let Some(&lam) = eig.eigenvalues.last() {
                    if !(lam > 0.0) {
                        violations.push(format!(
                            "R > 0 violated: smallest eigenvalue = {lam:.6e}"
                        ));
                    }
                }
            }
            Err(e) => violations.push(format!("R eigendecomposition failed: {e}")),
        }
    }

    if violations.is_empty() {
        Ok(cfg)
    } else {
        Err(Error::Config(violations.join("; ")))
    }
}

/// One draw of the uplink channel, columns sorted by norm.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    /// M x K matrix whose column k is user k's channel after sorting.
    pub h: ComplexMatrix,
    /// Euclidean norm of each sorted column, non-decreasing.
    pub column_norms: Vec<f64>,
}

/// One draw of the target response seen by the sensing receiver.
#[derive(Debug, Clone)]
pub struct TargetResponse {
    /// N x M matrix whose columns are i.i.d. with covariance R.
    pub g: ComplexMatrix,
}

/// Unsorted channel draw: column k is sqrt(alpha_k) times a standard
/// complex Gaussian vector.
fn raw_channel(cfg: &SystemConfig, rng: &mut impl Rng) -> ComplexMatrix {
    let mut h = matrixkit::sample_complex_gaussian(cfg.m, cfg.k, rng);
    for (k, &a) in cfg.alpha.iter().enumerate() {
        h.scale_column(k, a.sqrt());
    }
    h
}

/// Draws the uplink channel and arranges users in ascending column-norm
/// order, ties broken by original index.
pub fn sample_channel(cfg: &SystemConfig, rng: &mut impl Rng) -> ChannelRealization {
    let raw = raw_channel(cfg, rng);
    let norms: Vec<f64> = (0..cfg.k)
        .map(|k| raw.column(k).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
        .collect();
    let mut order: Vec<usize> = (0..cfg.k).collect();
    order.sort_by(|&a, &b| norms[a].partial_cmp(&norms[b]).unwrap().then(a.cmp(&b)));

    let h = ComplexMatrix::from_fn(cfg.m, cfg.k, |r, c| raw[(r, order[c])]);
    let column_norms = order.iter().map(|&i| norms[i]).collect();
    ChannelRealization { h, column_norms }
}

/// Draws the target response: M independent columns with covariance R.
pub fn sample_target_response(cfg: &SystemConfig, rng: &mut impl Rng) -> TargetResponse {
    let g = matrixkit::correlated_columns(&cfg.r, cfg.m, rng)
        .expect("validated config carries a positive definite R");
    TargetResponse { g }
}
