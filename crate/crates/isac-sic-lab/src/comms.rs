//! Communication-rate machinery: per-user SINRs under MMSE-SIC decoding,
//! sum rates under both cancellation orders, the frequency-division
//! baseline, high-power ergodic-rate asymptotes, and the order-to-order
//! communication-rate gap.

use std::f64::consts::LN_2;

use crate::matrixkit::{logdet_hpd, solve_hpd, ComplexMatrix};
use crate::model::{SicOrder, SystemConfig};
use crate::special::digamma;
use crate::{Error, Result};

// ─────────────────────────── Types ───────────────────────────

/// Decoded-rate breakdown for one channel realization.
#[derive(Debug, Clone)]
pub struct RateSample {
    /// Sum rate in bits/s/Hz (slot-averaged when slots differ).
    pub sum_cr: f64,
    /// Per-user SINRs; slot-averaged when the echo is cancelled last.
    pub per_user_sinr: Vec<f64>,
    /// Cancellation order the sample was computed under.
    pub order: SicOrder,
    /// Per-slot sum rates; present only when the echo is cancelled last.
    pub slot_rates: Option<Vec<f64>>,
}

/// High-power straight-line description of an ergodic-rate curve:
/// `ECR ≈ slope · (log2 p_c − offset)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EcrAsymptote {
    /// Bits per 3 dB of communication power; equals K.
    pub slope: f64,
    /// Power offset in 3-dB units.
    pub offset: f64,
}

impl EcrAsymptote {
    /// Evaluates the asymptote at a linear communication power.
    pub fn eval(&self, p_c: f64) -> f64 {
        self.slope * (p_c.log2() - self.offset)
    }
}

// ─────────────────────────── Operations ───────────────────────────

fn check_channel(h: &ComplexMatrix, p_c: f64) -> Result<()> {
    if h.cols() > h.rows() {
        return Err(Error::Shape(format!(
            "channel must have K <= M, got M={} rows, K={} columns",
            h.rows(),
            h.cols()
        )));
    }
    if !(p_c >= 0.0) || !p_c.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "communication power must be nonnegative, got {p_c}"
        )));
    }
    Ok(())
}

/// `I_K + p H^H H`, the decoder Gram matrix (same determinant as the
/// receive-side form `I_M + p H H^H`).
fn gram_plus_identity(h: &ComplexMatrix, p: f64) -> ComplexMatrix {
    let gram = h.hermitian_transpose().matmul(h).scale(p);
    gram.add(&ComplexMatrix::identity(h.cols()))
}

/// Per-user SINRs of successive decoding with MMSE combining:
/// `γ_k = p_c h_k^H (I + p_c Σ_{i<k} h_i h_i^H)^{-1} h_k`.
///
/// Users are decoded last-to-first, so user k faces residual interference
/// from users 1..k-1 only. The leading p_c factor makes the determinant
/// chain `Σ log2(1 + γ_k) = log2 det(I + p_c H H^H)` exact.
pub fn mmse_sic_sinrs(h: &ComplexMatrix, p_c: f64) -> Result<Vec<f64>> {
    check_channel(h, p_c)?;
    let m = h.rows();
    let mut b = ComplexMatrix::identity(m);
    let mut sinrs = Vec::with_capacity(h.cols());
    for k in 0..h.cols() {
        let hk = h.column(k);
        let x = solve_hpd(&b, &hk)?;
        let quad: f64 = hk.iter().zip(&x).map(|(a, b)| (a.conj() * b).re).sum();
        sinrs.push(p_c * quad);
        for r in 0..m {
            for c in 0..m {
                let update = hk[r] * hk[c].conj() * p_c;
                b[(r, c)] += update;
            }
        }
    }
    Ok(sinrs)
}

/// Sum rate when the echo is cancelled first, so decoding sees only the
/// unit-variance background noise: `log2 det(I + p_c H H^H)`.
pub fn sum_cr_csic(h: &ComplexMatrix, p_c: f64) -> Result<f64> {
    check_channel(h, p_c)?;
    logdet_hpd(&gram_plus_identity(h, p_c))
}

/// Sum rate when the messages are decoded before the echo is removed:
/// slot l faces noise `ϱ_l² ≥ 1`, and the reported rate is the slot average
/// of `log2 det(I + (p_c/ϱ_l²) H H^H)`.
pub fn sum_cr_ssic(h: &ComplexMatrix, p_c: f64, slot_noise: &[f64]) -> Result<RateSample> {
    check_channel(h, p_c)?;
    if slot_noise.is_empty() {
        return Err(Error::InvalidArgument("slot noise vector must not be empty".into()));
    }
    for (l, &r) in slot_noise.iter().enumerate() {
        if !(r >= 1.0) || !r.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "slot noise must satisfy rho_l^2 >= 1, got {r} at slot {l}"
            )));
        }
    }
    let l = slot_noise.len() as f64;
    let mut slot_rates = Vec::with_capacity(slot_noise.len());
    let mut sinr_acc = vec![0.0; h.cols()];
    // Slots often share one noise level (the spread waveform equalizes
    // them), so compute each distinct level once.
    let mut cache: Vec<(u64, f64, Vec<f64>)> = Vec::new();
    for &rho_sq in slot_noise {
        let key = rho_sq.to_bits();
        let idx = match cache.iter().position(|(k, _, _)| *k == key) {
            Some(i) => i,
            None => {
                let p_eff = p_c / rho_sq;
                let rate = logdet_hpd(&gram_plus_identity(h, p_eff))?;
                let sinrs = mmse_sic_sinrs(h, p_eff)?;
                cache.push((key, rate, sinrs));
                cache.len() - 1
            }
        };
        let (_, rate, sinrs) = &cache[idx];
        slot_rates.push(*rate);
        for (acc, g) in sinr_acc.iter_mut().zip(sinrs) {
            *acc += g / l;
        }
    }
    let sum_cr = slot_rates.iter().sum::<f64>() / l;
    Ok(RateSample {
        sum_cr,
        per_user_sinr: sinr_acc,
        order: SicOrder::SSic,
        slot_rates: Some(slot_rates),
    })
}

/// Sum rate of the frequency-division baseline that grants the uplink a
/// bandwidth fraction `alpha_bw`: `α log2 det(I + (p_c/α) H H^H)`, with the
/// continuity limit 0 at α = 0.
pub fn fdsac_sum_cr(h: &ComplexMatrix, p_c: f64, alpha_bw: f64) -> Result<f64> {
    check_channel(h, p_c)?;
    if !(0.0..=1.0).contains(&alpha_bw) || !alpha_bw.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "bandwidth fraction must lie in [0, 1], got {alpha_bw}"
        )));
    }
    if alpha_bw == 0.0 {
        return Ok(0.0);
    }
    Ok(alpha_bw * logdet_hpd(&gram_plus_identity(h, p_c / alpha_bw))?)
}

/// High-power asymptote of the ergodic sum rate for the configured order:
/// slope K; offset `-(1/K) Σ_k (log2 α_k + ψ(M-k+1)/ln 2)`, plus the mean
/// slot-noise penalty `(1/L) Σ log2 ϱ_l²` when the echo is cancelled last.
///
/// The per-user term uses the digamma form `ψ(M-k+1) = H_{M-k} - C`; for
/// M = k the harmonic sum is empty and only the Euler constant remains.
pub fn ecr_asymptote(cfg: &SystemConfig, slot_noise: Option<&[f64]>) -> Result<EcrAsymptote> {
    let k_count = cfg.k as f64;
    let mut offset = 0.0;
    for (k, &a) in cfg.alpha.iter().enumerate() {
        let surplus = cfg.m - (k + 1); // antennas beyond the ones consumed by SIC
        offset -= (a.log2() + digamma(surplus as f64 + 1.0) / LN_2) / k_count;
    }
    if cfg.sic_order == SicOrder::SSic {
        let slot_noise = slot_noise.ok_or_else(|| {
            Error::InvalidArgument(
                "slot noise is required when the echo is cancelled last".into(),
            )
        })?;
        offset += slot_noise.iter().map(|&r| r.log2()).sum::<f64>() / slot_noise.len() as f64;
    }
    Ok(EcrAsymptote { slope: k_count, offset })
}

/// Asymptotic communication-rate advantage of cancelling the echo first:
/// `E_c = (K/L) Σ_l log2 ϱ_l²`, zero exactly when no sensing power flows.
pub fn comm_gap(cfg: &SystemConfig, slot_noise: &[f64]) -> f64 {
    let penalty: f64 = slot_noise.iter().map(|&r| r.log2()).sum();
    cfg.k as f64 * penalty / slot_noise.len() as f64
}

// ─────────────────────────────── Tests ───────────────────────────────

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrixkit::{hermitian_eig, sample_complex_gaussian};
    use crate::model::tests::reference_config;
    use crate::model::{db_to_linear, sample_channel};
    use crate::sensing;
    use crate::special::EULER_GAMMA;
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    const TOL: f64 = 1e-9;

    fn seeded_channel(m: usize, k: usize, seed: u64) -> ComplexMatrix {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        sample_complex_gaussian(m, k, &mut rng)
    }

    // 1. Single user: gamma = p |h|^2; zero power: all SINRs zero.
    #[test]
    fn sinr_trivial_cases() {
        let h = seeded_channel(3, 1, 1);
        let g = mmse_sic_sinrs(&h, 2.5).unwrap();
        let norm_sq: f64 = h.column(0).iter().map(|z| z.norm_sqr()).sum();
        assert!((g[0] - 2.5 * norm_sq).abs() < TOL);

        let h3 = seeded_channel(3, 3, 2);
        assert!(mmse_sic_sinrs(&h3, 0.0).unwrap().iter().all(|&g| g == 0.0));
    }

    // 2. Wide channel rejected.
    #[test]
    fn sinr_rejects_wide_channel() {
        let h = seeded_channel(2, 3, 3);
        assert!(matches!(mmse_sic_sinrs(&h, 1.0), Err(Error::Shape(_))));
    }

    // 3. Determinant chain: the SINR sum reproduces the log-det on 200
    //    random instances within 1e-8.
    #[test]
    fn sinr_chain_matches_logdet() {
        let mut rng = ChaCha12Rng::seed_from_u64(4);
        for trial in 0..200 {
            let m = rng.gen_range(1..=5);
            let k = rng.gen_range(1..=m);
            let h = sample_complex_gaussian(m, k, &mut rng);
            let p_c = rng.gen_range(0.0..30.0);
            let chain: f64 = mmse_sic_sinrs(&h, p_c)
                .unwrap()
                .iter()
                .map(|&g| (1.0 + g).log2())
                .sum();
            let direct = sum_cr_csic(&h, p_c).unwrap();
            assert!(
                (chain - direct).abs() <= 1e-8,
                "trial {trial}: chain {chain} vs det {direct}"
            );
        }
    }

    // 4. Echo-first sum rate basics.
    #[test]
    fn csic_sum_rate_cases() {
        let h = seeded_channel(3, 3, 5);
        assert!(sum_cr_csic(&h, 0.0).unwrap() == 0.0);

        let unit = ComplexMatrix::from_fn(3, 1, |r, _| {
            Complex64::new(if r == 0 { 1.0 } else { 0.0 }, 0.0)
        });
        assert!((sum_cr_csic(&unit, 3.0).unwrap() - 2.0).abs() < TOL);
    }

    // 5. Messages-first sum rate: unit slot noise collapses to echo-first;
    //    uniform slot noise is a power rescale; always dominated by
    //    echo-first; sub-unit slot noise rejected.
    #[test]
    fn ssic_sum_rate_cases() {
        let h = seeded_channel(3, 3, 6);
        let p_c = 10.0;
        let csic = sum_cr_csic(&h, p_c).unwrap();

        let clean = sum_cr_ssic(&h, p_c, &[1.0; 4]).unwrap();
        assert!((clean.sum_cr - csic).abs() < TOL);

        let halved = sum_cr_ssic(&h, p_c, &[2.0; 4]).unwrap();
        assert!((halved.sum_cr - sum_cr_csic(&h, p_c / 2.0).unwrap()).abs() < TOL);
        assert!(halved.sum_cr <= csic + TOL);

        assert!(matches!(
            sum_cr_ssic(&h, p_c, &[1.0, 0.5, 1.0, 1.0]),
            Err(Error::InvalidArgument(_))
        ));
    }

    // 6. RateSample internal consistency: slot average and SINR chain.
    #[test]
    fn rate_sample_invariants() {
        let h = seeded_channel(3, 3, 7);
        let sample = sum_cr_ssic(&h, 8.0, &[1.5, 2.0, 2.5, 3.0]).unwrap();
        let slots = sample.slot_rates.as_ref().unwrap();
        let mean = slots.iter().sum::<f64>() / slots.len() as f64;
        assert!((sample.sum_cr - mean).abs() < TOL);
        assert!(sample.per_user_sinr.iter().all(|&g| g >= 0.0));

        let chain: f64 = mmse_sic_sinrs(&h, 8.0)
            .unwrap()
            .iter()
            .map(|&g| (1.0 + g).log2())
            .sum();
        assert!((chain - sum_cr_csic(&h, 8.0).unwrap()).abs() < TOL);
    }

    // 7. Frequency-division baseline: full-band limit, zero-band limit,
    //    strict loss at alpha = 0.5, and domain rejection.
    #[test]
    fn fdsac_sum_rate_cases() {
        let h = seeded_channel(3, 3, 8);
        let p_c = 10.0;
        let full = fdsac_sum_cr(&h, p_c, 1.0).unwrap();
        assert!((full - sum_cr_csic(&h, p_c).unwrap()).abs() < TOL);
        assert!(fdsac_sum_cr(&h, p_c, 0.0).unwrap() == 0.0);
        assert!(fdsac_sum_cr(&h, p_c, 0.5).unwrap() < full);
        assert!(matches!(fdsac_sum_cr(&h, p_c, 1.5), Err(Error::InvalidArgument(_))));
        assert!(matches!(fdsac_sum_cr(&h, p_c, -0.1), Err(Error::InvalidArgument(_))));
    }

    // 8. Frozen asymptote offsets(reference scenario): echo-first closed
    //    form; messages-first adds exactly one bit when every slot carries
    //    rho^2 = 2; single-antenna single-user reduces to C/ln 2.
    #[test]
    fn ecr_asymptote_frozen_offsets() {
        let cfg = reference_config();
        let asym = ecr_asymptote(&cfg, None).unwrap();
        assert!((asym.slope - 3.0).abs() < TOL);
        let expect = -(0.1f64.log2() + (1.5 - EULER_GAMMA) / LN_2
            + 0.5f64.log2() + (1.0 - EULER_GAMMA) / LN_2
            + 1.0f64.log2() + (0.0 - EULER_GAMMA) / LN_2)
            / 3.0;
        assert!((asym.offset - expect).abs() < TOL, "{} vs {expect}", asym.offset);

        let mut ssic = cfg.clone();
        ssic.sic_order = SicOrder::SSic;
        let shifted = ecr_asymptote(&ssic, Some(&[2.0; 4])).unwrap();
        assert!((shifted.offset - (asym.offset + 1.0)).abs() < TOL);
        assert!(matches!(ecr_asymptote(&ssic, None), Err(Error::InvalidArgument(_))));

        let single = SystemConfig::from_r_eigenvalues(
            1,
            1,
            1,
            1,
            1.0,
            1.0,
            vec![1.0],
            &[1.0],
            SicOrder::CSic,
        );
        let asym1 = ecr_asymptote(&single, None).unwrap();
        assert!((asym1.offset - EULER_GAMMA / LN_2).abs() < TOL);
    }

    // 9. Euler-constant placement adjudicated by simulation: the offset
    //    matches E{log2 det(p H^H H)} - K log2 p within 0.02 at 10^5 draws.
    #[test]
    fn ecr_offset_matches_wishart_oracle() {
        let mut cfg = reference_config();
        cfg.p_c = db_to_linear(50.0);
        let asym = ecr_asymptote(&cfg, None).unwrap();

        let trials = 100_000;
        let mut acc = 0.0;
        let mut rng = ChaCha12Rng::seed_from_u64(90);
        for _ in 0..trials {
            let ch = sample_channel(&cfg, &mut rng);
            let gram = ch.h.hermitian_transpose().matmul(&ch.h);
            acc += logdet_hpd(&gram).unwrap();
        }
        let oracle_offset = -acc / (trials as f64 * cfg.k as f64);
        assert!(
            (asym.offset - oracle_offset).abs() <= 0.02,
            "formula {} vs oracle {oracle_offset}",
            asym.offset
        );
    }

    // 10. Unit-exponential mean check behind the M = K = 1 offset:
    //     E{ln |h|^2} = -C within 0.005 at 10^6 samples.
    #[test]
    fn unit_exponential_log_mean() {
        let mut rng = ChaCha12Rng::seed_from_u64(91);
        let samples = 1_000_000;
        let mut acc = 0.0;
        for _ in 0..samples {
            let h = sample_complex_gaussian(1, 1, &mut rng);
            acc += h[(0, 0)].norm_sqr().ln();
        }
        let mean = acc / samples as f64;
        assert!((mean + EULER_GAMMA).abs() < 0.005, "mean {mean}");
    }

    // 11. Gap: frozen value through the realized waveform, zero-allocation
    //     boundary, and the exact identity with the asymptote offsets.
    #[test]
    fn comm_gap_cases() {
        let mut cfg = reference_config();
        cfg.sic_order = SicOrder::SSic;
        cfg.p_s = 1.0;
        let design = sensing::design(&cfg).unwrap();
        let gap = comm_gap(&cfg, &design.slot_noise);
        assert!((gap - 3.0).abs() < TOL, "gap {gap}");

        let mut idle = cfg.clone();
        idle.p_s = 0.0;
        let idle_design = sensing::design(&idle).unwrap();
        assert!(comm_gap(&idle, &idle_design.slot_noise) == 0.0);

        // E_c = K (offset_ssic - offset_csic).
        let ssic_offset = ecr_asymptote(&cfg, Some(&design.slot_noise)).unwrap().offset;
        let mut csic = cfg.clone();
        csic.sic_order = SicOrder::CSic;
        let csic_offset = ecr_asymptote(&csic, None).unwrap().offset;
        assert!((gap - cfg.k as f64 * (ssic_offset - csic_offset)).abs() < TOL);
    }

    // 12. Residual-echo rows whiten: the empirical covariance of
    //     a = G^H s + n over 10^5 draws matches rho^2 I within 5%.
    #[test]
    fn residual_echo_whitens_to_slot_noise() {
        let mut cfg = reference_config();
        cfg.sic_order = SicOrder::SSic;
        cfg.p_s = 1.0;
        let design = sensing::design(&cfg).unwrap();
        let slot = 0;
        let s_col = design.waveform.column(slot);
        let rho_sq = design.slot_noise[slot];

        let draws = 100_000;
        let m = cfg.m;
        let mut rng = ChaCha12Rng::seed_from_u64(92);
        let mut cov = vec![vec![Complex64::new(0.0, 0.0); m]; m];
        for _ in 0..draws {
            let g = crate::model::sample_target_response(&cfg, &mut rng).g;
            let noise = sample_complex_gaussian(m, 1, &mut rng);
            let mut a = vec![Complex64::new(0.0, 0.0); m];
            for (col, ai) in a.iter_mut().enumerate() {
                for row in 0..cfg.n {
                    *ai += g[(row, col)].conj() * s_col[row];
                }
                *ai += noise[(col, 0)];
            }
            for i in 0..m {
                for j in 0..m {
                    cov[i][j] += a[i] * a[j].conj();
                }
            }
        }
        let mut err = 0.0;
        for i in 0..m {
            for j in 0..m {
                let target = if i == j { rho_sq } else { 0.0 };
                err += (cov[i][j] / draws as f64 - target).norm_sqr();
            }
        }
        let rel = err.sqrt() / (rho_sq * (m as f64).sqrt());
        assert!(rel < 0.05, "relative whitening error {rel}");
    }

    // 13. Messages-first never beats echo-first on any realization.
    #[test]
    fn ssic_dominated_pointwise() {
        let mut cfg = reference_config();
        cfg.sic_order = SicOrder::SSic;
        let design = sensing::design(&cfg).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(93);
        for _ in 0..200 {
            let ch = sample_channel(&cfg, &mut rng);
            let ssic = sum_cr_ssic(&ch.h, cfg.p_c, &design.slot_noise).unwrap().sum_cr;
            let csic = sum_cr_csic(&ch.h, cfg.p_c).unwrap();
            assert!(ssic <= csic + TOL);
        }
    }

    // 14. FDSAC high-power slope: finite difference of Monte Carlo means
    //     between 40 and 43 dB within 5% of alpha_bw * K.
    #[test]
    fn fdsac_slope_matches_bandwidth_share() {
        let cfg = reference_config();
        let alpha_bw = 0.5;
        let trials = 100_000;
        let mean_at = |db: f64| {
            let p = db_to_linear(db);
            let mut rng = ChaCha12Rng::seed_from_u64(94);
            let mut acc = 0.0;
            for _ in 0..trials {
                let ch = sample_channel(&cfg, &mut rng);
                acc += fdsac_sum_cr(&ch.h, p, alpha_bw).unwrap();
            }
            acc / trials as f64
        };
        let slope = (mean_at(43.0) - mean_at(40.0))
            / (db_to_linear(43.0).log2() - db_to_linear(40.0).log2());
        let expect = alpha_bw * cfg.k as f64;
        assert!(
            (slope - expect).abs() / expect < 0.05,
            "slope {slope} vs {expect}"
        );
    }

    // 15. Asymptote agreement at 40 dB for both orders: Monte Carlo mean
    //     within 0.1 bits/s/Hz of the straight line, 10^5 draws.
    #[test]
    fn ecr_asymptote_agrees_at_40db() {
        for order in [SicOrder::CSic, SicOrder::SSic] {
            let mut cfg = reference_config();
            cfg.sic_order = order;
            cfg.p_c = db_to_linear(40.0);
            cfg.p_s = 1.0;
            let design = sensing::design_for_order(&cfg, SicOrder::SSic).unwrap();
            let asym = match order {
                SicOrder::CSic => ecr_asymptote(&cfg, None).unwrap(),
                SicOrder::SSic => ecr_asymptote(&cfg, Some(&design.slot_noise)).unwrap(),
            };
            let trials = 100_000;
            let mut rng = ChaCha12Rng::seed_from_u64(95);
            let mut acc = 0.0;
            for _ in 0..trials {
                let ch = sample_channel(&cfg, &mut rng);
                acc += match order {
                    SicOrder::CSic => sum_cr_csic(&ch.h, cfg.p_c).unwrap(),
                    SicOrder::SSic => {
                        sum_cr_ssic(&ch.h, cfg.p_c, &design.slot_noise).unwrap().sum_cr
                    }
                };
            }
            let mean = acc / trials as f64;
            let line = asym.eval(cfg.p_c);
            assert!(
                (mean - line).abs() <= 0.1,
                "{order}: mean {mean} vs line {line}"
            );
        }
    }

    // 16. Eigen-basis plumbing: slot noise from a non-identity basis still
    //     drives the messages-first rate consistently with a direct
    //     quadratic-form evaluation.
    #[test]
    fn slot_noise_consistent_under_rotated_basis() {
        // Hermitian R with a non-trivial eigenbasis.
        let mut r = ComplexMatrix::identity(3);
        r[(0, 1)] = Complex64::new(0.2, 0.1);
        r[(1, 0)] = Complex64::new(0.2, -0.1);
        r[(2, 2)] = Complex64::new(0.5, 0.0);
        let basis = hermitian_eig(&r).unwrap();
        let (level, alloc) = sensing::waterfill(&basis.eigenvalues, 1.0, 4.0).unwrap();
        assert!(level > 0.0);
        let (s, slot_noise) = sensing::build_waveform(&basis, &alloc, 4).unwrap();
        for l in 0..4 {
            let col = s.column(l);
            let mut quad = Complex64::new(0.0, 0.0);
            for i in 0..3 {
                for j in 0..3 {
                    quad += col[i].conj() * r[(i, j)] * col[j];
                }
            }
            assert!((1.0 + quad.norm() - slot_noise[l]).abs() < 1e-9);
        }
    }
}
