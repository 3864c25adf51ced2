//! Reproducible trial engine: outage-probability and ergodic-rate
//! estimation with confidence intervals, plus diversity-order slope fits
//! from outage curves.
//!
//! Every trial draws from a generator keyed by (master seed, trial index),
//! so results are bit-identical regardless of execution order or worker
//! count, and different link modes evaluated at the same seed share their
//! channel realizations.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::comms::{fdsac_sum_cr, sum_cr_csic, sum_cr_ssic};
use crate::model::{sample_channel, SicOrder, SystemConfig};
use crate::sensing;
use crate::{Error, Result};

/// Two-sided 95% normal quantile.
const Z_95: f64 = 1.959_963_984_540_054;

/// Trials per summation block; partial sums are folded block-by-block so
/// the reduction tree is fixed no matter how trials are scheduled.
const BLOCK: u64 = 4096;

// ─────────────────────────── Types ───────────────────────────

/// Which uplink the trial engine evaluates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LinkMode {
    /// Echo cancelled first, messages decoded against clean noise.
    CSic,
    /// Messages decoded first, against the residual-echo noise floor.
    SSic,
    /// Frequency-division baseline with this fraction of bandwidth
    /// granted to communication.
    Fdsac { alpha_bw: f64 },
}

impl std::fmt::Display for LinkMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LinkMode::CSic => write!(f, "c-sic"),
            LinkMode::SSic => write!(f, "s-sic"),
            LinkMode::Fdsac { .. } => write!(f, "fdsac"),
        }
    }
}

/// Point estimate with a 95% confidence half-width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateResult {
    pub point: f64,
    pub half_width_95: f64,
    pub trials: u64,
    pub seed: u64,
}

/// Outage probability across a power grid for one link mode.
#[derive(Debug, Clone)]
pub struct OpCurve {
    pub snr_db: Vec<f64>,
    pub op: Vec<EstimateResult>,
    pub mode: LinkMode,
}

impl OpCurve {
    /// Validates the grid (strictly increasing) and the estimates
    /// (probabilities in [0, 1], one per grid point).
    pub fn new(snr_db: Vec<f64>, op: Vec<EstimateResult>, mode: LinkMode) -> Result<Self> {
        if snr_db.len() != op.len() {
            return Err(Error::Shape(format!(
                "grid has {} points but {} estimates were supplied",
                snr_db.len(),
                op.len()
            )));
        }
        if snr_db.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidArgument(
                "power grid must be strictly increasing".into(),
            ));
        }
        if op.iter().any(|e| !(0.0..=1.0).contains(&e.point)) {
            return Err(Error::InvalidArgument(
                "outage estimates must lie in [0, 1]".into(),
            ));
        }
        Ok(OpCurve { snr_db, op, mode })
    }
}

// ─────────────────────────── Trial plumbing ───────────────────────────

/// Generator for one trial, keyed by (master seed, trial index).
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

fn mode_slot_noise(cfg: &SystemConfig, mode: LinkMode) -> Result<Option<Vec<f64>>> {
    match mode {
        LinkMode::SSic => {
            let design = sensing::design_for_order(cfg, SicOrder::SSic)?;
            Ok(Some(design.slot_noise))
        }
        LinkMode::CSic => Ok(None),
        LinkMode::Fdsac { alpha_bw } => {
            if !(0.0..=1.0).contains(&alpha_bw) || !alpha_bw.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "bandwidth fraction must lie in [0, 1], got {alpha_bw}"
                )));
            }
            Ok(None)
        }
    }
}

fn trial_sum_cr(
    cfg: &SystemConfig,
    mode: LinkMode,
    slot_noise: Option<&[f64]>,
    rng: &mut ChaCha12Rng,
) -> Result<f64> {
    let ch = sample_channel(cfg, rng);
    match mode {
        LinkMode::CSic => sum_cr_csic(&ch.h, cfg.p_c),
        LinkMode::SSic => {
            let noise = slot_noise.expect("slot noise precomputed for this mode");
            Ok(sum_cr_ssic(&ch.h, cfg.p_c, noise)?.sum_cr)
        }
        LinkMode::Fdsac { alpha_bw } => fdsac_sum_cr(&ch.h, cfg.p_c, alpha_bw),
    }
}

fn check_trials(trials: u64) -> Result<()> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trial count must be at least 1".into()));
    }
    Ok(())
}

// ─────────────────────────── Operations ───────────────────────────

/// Estimates the outage probability `Pr(sum-CR < rate_target)`.
///
/// The point estimate is the raw hit fraction; the half-width comes from
/// the Wilson 95% interval, which stays meaningful when the estimate sits
/// at or near zero.
pub fn estimate_op(
    cfg: &SystemConfig,
    mode: LinkMode,
    rate_target: f64,
    trials: u64,
    seed: u64,
) -> Result<EstimateResult> {
    check_trials(trials)?;
    if !(rate_target >= 0.0) || !rate_target.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "rate target must be nonnegative, got {rate_target}"
        )));
    }
    let slot_noise = mode_slot_noise(cfg, mode)?;
    let mut hits: u64 = 0;
    for t in 0..trials {
        let mut rng = trial_rng(seed, t);
        let rate = trial_sum_cr(cfg, mode, slot_noise.as_deref(), &mut rng)?;
        if rate < rate_target {
            hits += 1;
        }
    }
    let n = trials as f64;
    let p_hat = hits as f64 / n;
    let z_sq = Z_95 * Z_95;
    let half_width = Z_95 * (p_hat * (1.0 - p_hat) / n + z_sq / (4.0 * n * n)).sqrt()
        / (1.0 + z_sq / n);
    Ok(EstimateResult { point: p_hat, half_width_95: half_width, trials, seed })
}

/// Estimates the ergodic sum rate `E{sum-CR}` with a normal 95% interval.
///
/// Under the messages-first order the slot-noise vector comes from that
/// order's sensing design at the configured sensing power.
pub fn estimate_ecr(
    cfg: &SystemConfig,
    mode: LinkMode,
    trials: u64,
    seed: u64,
) -> Result<EstimateResult> {
    check_trials(trials)?;
    let slot_noise = mode_slot_noise(cfg, mode)?;
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    let mut block_sum = 0.0;
    let mut block_sum_sq = 0.0;
    for t in 0..trials {
        let mut rng = trial_rng(seed, t);
        let rate = trial_sum_cr(cfg, mode, slot_noise.as_deref(), &mut rng)?;
        block_sum += rate;
        block_sum_sq += rate * rate;
        if (t + 1) % BLOCK == 0 {
            sum += block_sum;
            sum_sq += block_sum_sq;
            block_sum = 0.0;
            block_sum_sq = 0.0;
        }
    }
    sum += block_sum;
    sum_sq += block_sum_sq;

    let n = trials as f64;
    let mean = sum / n;
    let half_width = if trials > 1 {
        let var = ((sum_sq - sum * sum / n) / (n - 1.0)).max(0.0);
        Z_95 * (var / n).sqrt()
    } else {
        f64::INFINITY
    };
    Ok(EstimateResult { point: mean, half_width_95: half_width, trials, seed })
}

/// Sweeps the outage estimator over a dB power grid with one shared seed,
/// so every grid point sees the same channel draws.
pub fn op_sweep(
    cfg: &SystemConfig,
    mode: LinkMode,
    snr_grid_db: &[f64],
    rate_target: f64,
    trials: u64,
    seed: u64,
) -> Result<OpCurve> {
    let mut op = Vec::with_capacity(snr_grid_db.len());
    for &db in snr_grid_db {
        let mut point_cfg = cfg.clone();
        point_cfg.p_c = crate::model::db_to_linear(db);
        op.push(estimate_op(&point_cfg, mode, rate_target, trials, seed)?);
    }
    OpCurve::new(snr_grid_db.to_vec(), op, mode)
}

/// Least-squares slope of `-log10(OP)` against `snr_db / 10` over the
/// window; this is the empirical diversity order of the curve.
pub fn fit_diversity_slope(curve: &OpCurve, window: std::ops::Range<usize>) -> Result<f64> {
    if window.end > curve.snr_db.len() || window.start >= window.end {
        return Err(Error::InvalidArgument(format!(
            "window {}..{} does not fit a curve with {} points",
            window.start,
            window.end,
            curve.snr_db.len()
        )));
    }
    if window.len() < 2 {
        return Err(Error::InvalidArgument(
            "diversity fit needs at least 2 points".into(),
        ));
    }
    let mut xs = Vec::with_capacity(window.len());
    let mut ys = Vec::with_capacity(window.len());
    for i in window {
        let op = curve.op[i].point;
        if op <= 0.0 {
            return Err(Error::Statistical(format!(
                "outage estimate is zero at {} dB: increase trials or lower the SNR window",
                curve.snr_db[i]
            )));
        }
        xs.push(curve.snr_db[i] / 10.0);
        ys.push(-op.log10());
    }
    let n = xs.len() as f64;
    let x_mean = xs.iter().sum::<f64>() / n;
    let y_mean = ys.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var = 0.0;
    for (x, y) in xs.iter().zip(&ys) {
        cov += (x - x_mean) * (y - y_mean);
        var += (x - x_mean) * (x - x_mean);
    }
    Ok(cov / var)
}

// ─────────────────────────────── Tests ───────────────────────────────
