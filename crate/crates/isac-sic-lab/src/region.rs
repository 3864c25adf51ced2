//! Achievable sensing-rate / communication-rate regions: the time-sharing
//! segment between the two cancellation-order corner points, the
//! frequency-division baseline sweep, and a containment check between
//! regions.

use crate::model::{SicOrder, SystemConfig};
use crate::montecarlo::{estimate_ecr, LinkMode};
use crate::sensing;
use crate::{Error, Result};

// ─────────────────────────── Types ───────────────────────────

/// One boundary point: sensing rate, ergodic communication rate, and the
/// 95% half-width of the communication estimate (the sensing rate is
/// closed-form, so it carries no interval).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatePoint {
    pub sr: f64,
    pub cr: f64,
    pub cr_ci95: f64,
}

/// The two extreme operating points of the dual-function uplink.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsacCorners {
    /// Messages decoded first: sensing sees clean noise, decoding pays.
    pub s_sic: RatePoint,
    /// Echo cancelled first: decoding sees clean noise, sensing pays.
    pub c_sic: RatePoint,
}

/// Which system a boundary describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegionLabel {
    Isac,
    Fdsac,
}

impl std::fmt::Display for RegionLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RegionLabel::Isac => write!(f, "isac"),
            RegionLabel::Fdsac => write!(f, "fdsac"),
        }
    }
}

/// Pareto upper-right boundary of an achievable region, ordered by the
/// sweep parameter (time-sharing probability or bandwidth fraction). The
/// region itself is the lower-left closure of these points.
#[derive(Debug, Clone)]
pub struct RegionBoundary {
    pub label: RegionLabel,
    pub params: Vec<f64>,
    pub points: Vec<RatePoint>,
}

// ─────────────────────────── Operations ───────────────────────────

fn check_unit_grid(grid: &[f64], name: &str) -> Result<()> {
    for &v in grid {
        if !(0.0..=1.0).contains(&v) || !v.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "{name} grid values must lie in [0, 1], got {v}"
            )));
        }
    }
    Ok(())
}

/// Computes the two corner rate tuples. Both communication estimates use
/// the same seed, so the corners share their channel draws.
pub fn isac_corners(cfg: &SystemConfig, trials: u64, seed: u64) -> Result<IsacCorners> {
    let sr_s = sensing::sr_for_order(cfg, SicOrder::SSic)?;
    let sr_c = sensing::sr_for_order(cfg, SicOrder::CSic)?;
    let ecr_s = estimate_ecr(cfg, LinkMode::SSic, trials, seed)?;
    let ecr_c = estimate_ecr(cfg, LinkMode::CSic, trials, seed)?;
    Ok(IsacCorners {
        s_sic: RatePoint { sr: sr_s, cr: ecr_s.point, cr_ci95: ecr_s.half_width_95 },
        c_sic: RatePoint { sr: sr_c, cr: ecr_c.point, cr_ci95: ecr_c.half_width_95 },
    })
}

/// Time-sharing boundary: each grid probability p mixes the two corners
/// linearly, running the messages-first order a fraction p of the time.
pub fn isac_boundary(
    cfg: &SystemConfig,
    p_grid: &[f64],
    trials: u64,
    seed: u64,
) -> Result<RegionBoundary> {
    check_unit_grid(p_grid, "time-sharing")?;
    let corners = isac_corners(cfg, trials, seed)?;
    let mut params = p_grid.to_vec();
    params.sort_by(|a, b| a.partial_cmp(b).expect("grid checked finite"));
    let points = params
        .iter()
        .map(|&p| RatePoint {
            sr: p * corners.s_sic.sr + (1.0 - p) * corners.c_sic.sr,
            cr: p * corners.s_sic.cr + (1.0 - p) * corners.c_sic.cr,
            cr_ci95: p * corners.s_sic.cr_ci95 + (1.0 - p) * corners.c_sic.cr_ci95,
        })
        .collect();
    Ok(RegionBoundary { label: RegionLabel::Isac, params, points })
}

/// Frequency-division boundary: communication gets a bandwidth fraction
/// alpha, sensing the rest. All grid points share the same seed.
pub fn fdsac_boundary(
    cfg: &SystemConfig,
    alpha_grid: &[f64],
    trials: u64,
    seed: u64,
) -> Result<RegionBoundary> {
    check_unit_grid(alpha_grid, "bandwidth")?;
    let mut params = alpha_grid.to_vec();
    params.sort_by(|a, b| a.partial_cmp(b).expect("grid checked finite"));
    let mut points = Vec::with_capacity(params.len());
    for &alpha in &params {
        let sr = sensing::banded_sr(cfg, 1.0 - alpha)?;
        let ecr = estimate_ecr(cfg, LinkMode::Fdsac { alpha_bw: alpha }, trials, seed)?;
        points.push(RatePoint { sr, cr: ecr.point, cr_ci95: ecr.half_width_95 });
    }
    Ok(RegionBoundary { label: RegionLabel::Fdsac, params, points })
}

/// Tests whether every inner point is dominated by some outer point
/// (outer sr ≥ inner sr and outer cr ≥ inner cr, up to a tolerance scaled
/// by the outer region's diagonal). Returns the flag and the worst slack;
/// a negative slack measures how far outside the inner region pokes.
pub fn containment_check(
    inner: &RegionBoundary,
    outer: &RegionBoundary,
) -> Result<(bool, f64)> {
    if inner.points.is_empty() || outer.points.is_empty() {
        return Err(Error::InvalidArgument(
            "containment check needs nonempty boundaries".into(),
        ));
    }
    let mut worst = f64::INFINITY;
    for ip in &inner.points {
        let mut best = f64::NEG_INFINITY;
        for op in &outer.points {
            let slack = (op.sr - ip.sr).min(op.cr - ip.cr);
            if slack > best {
                best = slack;
            }
        }
        if best < worst {
            worst = best;
        }
    }
    let sr_span = span(outer.points.iter().map(|p| p.sr));
    let cr_span = span(outer.points.iter().map(|p| p.cr));
    let scale = sr_span.hypot(cr_span).max(f64::MIN_POSITIVE);
    Ok((worst >= -1e-6 * scale, worst))
}

fn span(values: impl Iterator<Item = f64>) -> f64 {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    hi - lo
}

// ─────────────────────────────── Tests ───────────────────────────────
