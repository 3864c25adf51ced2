//! Sensing-rate machinery: effective noise floor per cancellation order,
//! exact water-filling power allocation across the correlation eigenmodes,
//! realized waveform construction, high-power asymptotes, and the
//! order-to-order sensing-rate gap.

use num_complex::Complex64;
use std::f64::consts::LN_2;

use crate::matrixkit::{hermitian_eig, ComplexMatrix, HermitianEig};
use crate::model::{SicOrder, SystemConfig};
use crate::{Error, Result};

// ─────────────────────────── Types ───────────────────────────

/// Optimized sensing transmission for one cancellation order.
#[derive(Debug, Clone)]
pub struct SensingDesign {
    /// Effective noise variance the sensing receiver works against.
    pub sigma_sq: f64,
    /// Water level of the optimal allocation.
    pub water_level: f64,
    /// Power allocated to each correlation eigenmode (descending eigenvalue
    /// order, matching `basis`).
    pub allocation: Vec<f64>,
    /// Eigen-basis of the correlation matrix; column n pairs with
    /// `allocation[n]`.
    pub basis: HermitianEig,
    /// Realized N x L waveform with Gram matrix `basis diag(allocation)
    /// basis^H`.
    pub waveform: ComplexMatrix,
    /// Per-slot effective noise variance seen by the decoder when the echo
    /// is cancelled last; constant across slots by construction.
    pub slot_noise: Vec<f64>,
}

/// High-power straight-line description of a sensing-rate curve:
/// `SR ≈ slope · (log2 p_s − offset)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SrAsymptote {
    /// Bits per 3 dB of sensing power; equals N·M/L.
    pub slope: f64,
    /// Power offset in 3-dB units.
    pub offset: f64,
}

impl SrAsymptote {
    /// Evaluates the asymptote at a linear sensing power.
    pub fn eval(&self, p_s: f64) -> f64 {
        self.slope * (p_s.log2() - self.offset)
    }
}

// ─────────────────────────── Operations ───────────────────────────

/// Effective sensing noise floor for the configured cancellation order.
///
/// When the echo is removed first the sensing receiver faces the full
/// uplink traffic, raising the floor to `1 + p_c Σ alpha_k`; when the
/// messages are removed first the floor is the unit background noise.
pub fn noise_floor(cfg: &SystemConfig) -> f64 {
    match cfg.sic_order {
        SicOrder::CSic => 1.0 + cfg.p_c * cfg.alpha_sum(),
        SicOrder::SSic => 1.0,
    }
}

/// Exact water-filling over eigenmodes: maximizes `Σ log2(1 + λ_n s_n / σ²)`
/// subject to `Σ s_n = budget`, `s_n ≥ 0`.
///
/// Solved in closed form by sorting the thresholds `σ²/λ_n` ascending and
/// scanning active sets; returns the water level and the per-mode allocation
/// in the input eigenvalue order.
pub fn waterfill(eigenvalues: &[f64], sigma_sq: f64, budget: f64) -> Result<(f64, Vec<f64>)> {
    if eigenvalues.is_empty() {
        return Err(Error::InvalidArgument("waterfill needs at least one eigenvalue".into()));
    }
    for (n, &lam) in eigenvalues.iter().enumerate() {
        if !(lam > 0.0) || !lam.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "waterfill eigenvalue {n} must be positive, got {lam}"
            )));
        }
    }
    if !(sigma_sq > 0.0) || !sigma_sq.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "waterfill noise variance must be positive, got {sigma_sq}"
        )));
    }
    if !(budget >= 0.0) || !budget.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "waterfill budget must be nonnegative, got {budget}"
        )));
    }

    let n = eigenvalues.len();
    let thresholds: Vec<f64> = eigenvalues.iter().map(|&lam| sigma_sq / lam).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| thresholds[a].partial_cmp(&thresholds[b]).unwrap());

    // Unique active-set size: the smallest m whose tentative water level
    // clears its own threshold and not the next one.
    let mut prefix = 0.0;
    let mut level = thresholds[order[0]]; // budget = 0 leaves the pool empty
    for m in 1..=n {
        prefix += thresholds[order[m - 1]];
        let mu = (budget + prefix) / m as f64;
        let clears_own = mu > thresholds[order[m - 1]];
        let below_next = m == n || mu <= thresholds[order[m]];
        if clears_own && below_next {
            level = mu;
            break;
        }
    }

    let allocation: Vec<f64> =
        thresholds.iter().map(|&t| (level - t).max(0.0)).collect();
    Ok((level, allocation))
}

/// Sensing rate realized by an allocation:
/// `(M/L) Σ log2(1 + λ_n s_n / σ²)` in bits/s/Hz.
pub fn sensing_rate(
    eigenvalues: &[f64],
    allocation: &[f64],
    sigma_sq: f64,
    m: usize,
    l: usize,
) -> f64 {
    assert_eq!(
        eigenvalues.len(),
        allocation.len(),
        "allocation must pair with the eigenvalues"
    );
    assert!(sigma_sq > 0.0, "noise variance must be positive");
    let sum: f64 = eigenvalues
        .iter()
        .zip(allocation)
        .map(|(&lam, &s)| (lam * s / sigma_sq).ln_1p() / LN_2)
        .sum();
    (m as f64 / l as f64) * sum
}

/// Realizes a waveform with the prescribed Gram matrix by spreading each
/// eigenmode over the slots with a row of the unitary L-point DFT.
///
/// Returns the N x L waveform and the per-slot decoder noise
/// `ϱ_l² = 1 + (1/L) Σ λ_n allocation_n`, constant across slots because
/// every DFT entry has squared magnitude 1/L.
pub fn build_waveform(
    basis: &HermitianEig,
    allocation: &[f64],
    l: usize,
) -> Result<(ComplexMatrix, Vec<f64>)> {
    let n = basis.eigenvalues.len();
    assert_eq!(allocation.len(), n, "allocation must pair with the basis");
    if l < n {
        return Err(Error::InvalidArgument(format!(
            "pulse length L={l} cannot spread N={n} eigenmodes"
        )));
    }
    let inv_sqrt_l = 1.0 / (l as f64).sqrt();
    let f = ComplexMatrix::from_fn(n, l, |r, c| {
        let angle = -2.0 * std::f64::consts::PI * (r * c) as f64 / l as f64;
        Complex64::new(angle.cos(), angle.sin()) * inv_sqrt_l
    });
    let roots: Vec<f64> = allocation.iter().map(|&a| a.max(0.0).sqrt()).collect();
    let s = basis
        .vectors
        .matmul(&ComplexMatrix::from_real_diagonal(&roots))
        .matmul(&f);

    let mode_power: f64 = basis
        .eigenvalues
        .iter()
        .zip(allocation)
        .map(|(&lam, &a)| lam * a)
        .sum();
    let slot_noise = vec![1.0 + mode_power / l as f64; l];
    Ok((s, slot_noise))
}

/// Full sensing design for an explicit cancellation order: noise floor,
/// water-filling, and waveform realization.
pub fn design_for_order(cfg: &SystemConfig, order: SicOrder) -> Result<SensingDesign> {
    let sigma_sq = match order {
        SicOrder::CSic => 1.0 + cfg.p_c * cfg.alpha_sum(),
        SicOrder::SSic => 1.0,
    };
    let basis = hermitian_eig(&cfg.r)?;
    let budget = cfg.l as f64 * cfg.p_s;
    let (water_level, allocation) = waterfill(&basis.eigenvalues, sigma_sq, budget)?;
    let (waveform, slot_noise) = build_waveform(&basis, &allocation, cfg.l)?;
    Ok(SensingDesign { sigma_sq, water_level, allocation, basis, waveform, slot_noise })
}

/// Sensing design for the configured cancellation order.
pub fn design(cfg: &SystemConfig) -> Result<SensingDesign> {
    design_for_order(cfg, cfg.sic_order)
}

impl SensingDesign {
    /// Sensing rate this design achieves for the given array and pulse.
    pub fn sensing_rate(&self, m: usize, l: usize) -> f64 {
        sensing_rate(&self.basis.eigenvalues, &self.allocation, self.sigma_sq, m, l)
    }
}

/// Exact optimized sensing rate for an explicit cancellation order.
pub fn sr_for_order(cfg: &SystemConfig, order: SicOrder) -> Result<f64> {
    Ok(design_for_order(cfg, order)?.sensing_rate(cfg.m, cfg.l))
}

/// Sensing rate when sensing keeps only a `band` fraction of the spectrum
/// and sees no uplink interference: per-mode noise shrinks to `band`, the
/// rate carries the same prefactor, and the full power budget remains.
/// A zero band senses nothing.
pub fn banded_sr(cfg: &SystemConfig, band: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&band) || !band.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "band fraction must lie in [0, 1], got {band}"
        )));
    }
    if band == 0.0 {
        return Ok(0.0);
    }
    let basis = hermitian_eig(&cfg.r)?;
    let budget = cfg.l as f64 * cfg.p_s;
    let (_, alloc) = waterfill(&basis.eigenvalues, band, budget)?;
    Ok(band * sensing_rate(&basis.eigenvalues, &alloc, band, cfg.m, cfg.l))
}

/// High-power asymptote of the configured order's sensing-rate curve:
/// slope N·M/L, offset `(1/N) Σ log2(N σ² / (L λ_n))`.
pub fn sr_asymptote(cfg: &SystemConfig) -> Result<SrAsymptote> {
    let sigma_sq = noise_floor(cfg);
    let basis = hermitian_eig(&cfg.r)?;
    let n = cfg.n as f64;
    let l = cfg.l as f64;
    let offset = basis
        .eigenvalues
        .iter()
        .map(|&lam| (n * sigma_sq / (l * lam)).log2())
        .sum::<f64>()
        / n;
    Ok(SrAsymptote { slope: n * cfg.m as f64 / l, offset })
}

/// Asymptotic sensing-rate advantage of cancelling the messages first:
/// `E_s = (NM/L) log2(1 + p_c Σ alpha_k)`, independent of the configured
/// order and strictly positive whenever the uplink transmits.
pub fn sensing_gap(cfg: &SystemConfig) -> f64 {
    let slope = cfg.n as f64 * cfg.m as f64 / cfg.l as f64;
    slope * (cfg.p_c * cfg.alpha_sum()).ln_1p() / LN_2
}

// ─────────────────────────────── Tests ───────────────────────────────
