//! Dirty-paper coding with a bounded residual phase error, and the
//! sectoring scheme built on it.
//!
//! The transmitter sends `X = U − αS` for an auxiliary codeword `U`; the
//! receiver forms the scalar LLSE `β(Δφ)·Y` of `U` designed for the worst
//! phase `Δφ` and decodes in a sphere of radius set by the LLSE error `Ē`.
//! The resulting rate is `sup_α log2(p / Ē)`.
//!
//! Every expression here assumes unit noise power. Callers with other
//! noise levels rescale with [`ChannelParams::normalized`].

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{rate_ignore_interference, ChannelParams, RateFlag, RateKind, RateReport};
use crate::numeric::golden_section_max;

/// Tolerance of the golden-section search over the Costa parameter.
pub const ALPHA_TOL: f64 = 1e-8;
pub const DEFAULT_K_MAX: u32 = 512;

/// Residual phase half-width and the Costa parameter search interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseBudget {
    delta_phi: f64,
    alpha_domain: (f64, f64),
}

impl PhaseBudget {
    pub fn new(delta_phi: f64) -> Result<Self> {
        Self::with_alpha_domain(delta_phi, 0.0, 1.0)
    }

    pub fn with_alpha_domain(delta_phi: f64, alpha_lo: f64, alpha_hi: f64) -> Result<Self> {
        if !(0.0..=std::f64::consts::PI).contains(&delta_phi) {
            return Err(Error::domain(format!("phase half-width must lie in [0, π], got {delta_phi}")));
        }
        if !(0.0 <= alpha_lo && alpha_lo <= alpha_hi && alpha_hi <= 1.0) {
            return Err(Error::domain(format!(
                "α domain [{alpha_lo}, {alpha_hi}] must be a sub-interval of [0, 1]"
            )));
        }
        Ok(Self {
            delta_phi,
            alpha_domain: (alpha_lo, alpha_hi),
        })
    }

    pub fn delta_phi(&self) -> f64 {
        self.delta_phi
    }

    pub fn alpha_domain(&self) -> (f64, f64) {
        self.alpha_domain
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::domain(format!("α must lie in [0, 1], got {alpha}")));
    }
    Ok(())
}

#[inline]
fn beta_raw(p: f64, q: f64, alpha: f64, theta: f64) -> f64 {
    (p + alpha * theta.cos() * q) / (p + q + 1.0)
}

#[inline]
fn llse_raw(p: f64, q: f64, alpha: f64, delta_phi: f64, phi: f64) -> f64 {
    let b = beta_raw(p, q, alpha, delta_phi);
    (1.0 - b) * (1.0 - b) * p + (alpha * alpha + b * b - 2.0 * alpha * b * phi.cos()) * q + b * b
}

/// LLSE gain `β(θ) = (p + α·cos θ·q) / (p + q + 1)`.
pub fn beta_coeff(cp: &ChannelParams, alpha: f64, theta: f64) -> Result<f64> {
    cp.require_unit_noise("beta_coeff")?;
    check_alpha(alpha)?;
    if !(-std::f64::consts::PI..=std::f64::consts::PI).contains(&theta) {
        return Err(Error::domain(format!("θ must lie in [−π, π], got {theta}")));
    }
    Ok(beta_raw(cp.p(), cp.q(), alpha, theta))
}

/// Mean-square error of the receiver's estimate of `U` when the receiver
/// scales by `β(Δφ)` and the actual phase offset is `φ`, `|φ| ≤ Δφ`.
pub fn llse_error(cp: &ChannelParams, alpha: f64, delta_phi: f64, phi: f64) -> Result<f64> {
    cp.require_unit_noise("llse_error")?;
    check_alpha(alpha)?;
    if !(0.0..=std::f64::consts::PI).contains(&delta_phi) {
        return Err(Error::domain(format!("Δφ must lie in [0, π], got {delta_phi}")));
    }
    if phi.abs() > delta_phi {
        return Err(Error::domain(format!("|φ| = {} exceeds Δφ = {delta_phi}", phi.abs())));
    }
    Ok(llse_raw(cp.p(), cp.q(), alpha, delta_phi, phi))
}

/// `sup_α log2(p / Ē(Δφ))` with the error evaluated at the worst phase
/// `φ = Δφ`.
///
/// The report carries the optimal `alpha`, the LLSE error at it and the
/// unfloored objective `raw_rate`. If the raw objective falls below the
/// treat-as-noise rate (possible only when the α domain excludes 0) the
/// rate is floored there and [`RateFlag::FlooredAtTreatAsNoise`] is set.
pub fn achievable_rate(cp: &ChannelParams, pb: &PhaseBudget) -> Result<RateReport> {
    cp.require_unit_noise("achievable_rate")?;
    let (alpha, raw) = optimize_alpha(cp.p(), cp.q(), pb.delta_phi, pb.alpha_domain)?;
    let tin = rate_ignore_interference(cp, 1.0)?;
    let mut report = RateReport::new(raw.max(tin), RateKind::Achievable)
        .with_channel(cp)
        .param("delta_phi", pb.delta_phi)
        .param("alpha", alpha)
        .param("llse_error", llse_raw(cp.p(), cp.q(), alpha, pb.delta_phi, pb.delta_phi))
        .param("raw_rate", raw);
    if raw < tin - 1e-12 {
        report = report.flag(RateFlag::FlooredAtTreatAsNoise);
    }
    Ok(report)
}

/// Rate in bits for the given phase budget, without building a report.
/// Used by the feedback optimizer's inner loop.
pub(crate) fn achievable_rate_value(p: f64, q: f64, delta_phi: f64) -> Result<f64> {
    let (_, raw) = optimize_alpha(p, q, delta_phi, (0.0, 1.0))?;
    Ok(raw.max((1.0 + p / (1.0 + q)).log2()))
}

fn optimize_alpha(p: f64, q: f64, delta_phi: f64, (lo, hi): (f64, f64)) -> Result<(f64, f64)> {
    let objective = |alpha: f64| (p / llse_raw(p, q, alpha, delta_phi, delta_phi)).log2();
    let (alpha, value) = if lo == hi {
        (lo, objective(lo))
    } else {
        golden_section_max(objective, lo, hi, ALPHA_TOL)
    };
    if !value.is_finite() {
        return Err(Error::numerical(
            "α optimization",
            format!("objective not finite at α = {alpha} (p = {p}, q = {q}, Δφ = {delta_phi})"),
        ));
    }
    Ok((alpha, value))
}

/// Outcome of sectoring with `k` sectors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SectorPlan {
    pub k: u32,
    pub rate: f64,
    /// LLSE error `Ē(π/k)` at the optimal α.
    pub residual: f64,
    pub alpha: f64,
}

/// Time-sharing over `k` sectors of half-width `π/k`:
/// `(1/k)·sup_α log2(p / Ē(π/k))`.
pub fn sectoring_rate(cp: &ChannelParams, k: u32) -> Result<SectorPlan> {
    if k == 0 {
        return Err(Error::domain("sector count must be at least 1"));
    }
    let pb = PhaseBudget::new(std::f64::consts::PI / k as f64)?;
    let r = achievable_rate(cp, &pb)?;
    Ok(SectorPlan {
        k,
        rate: r.rate / k as f64,
        residual: r.get("llse_error").unwrap_or(f64::NAN),
        alpha: r.get("alpha").unwrap_or(f64::NAN),
    })
}

/// Best sector count from an exhaustive search, compared against treating
/// the interference as noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SectorSearch {
    pub best: SectorPlan,
    pub ignore_interference: f64,
    /// True when the best plan is strictly better than treating the
    /// interference as noise.
    pub beats_ignore: bool,
}

pub fn optimize_sectors(cp: &ChannelParams, k_max: u32) -> Result<SectorSearch> {
    if k_max == 0 {
        return Err(Error::domain("k_max must be at least 1"));
    }
    let plans = (1..=k_max)
        .into_par_iter()
        .map(|k| sectoring_rate(cp, k))
        .collect::<Result<Vec<_>>>()?;
    // First maximum in k order, so ties resolve to fewer sectors.
    let best = plans
        .iter()
        .copied()
        .reduce(|best, plan| if plan.rate > best.rate { plan } else { best })
        .expect("k_max >= 1");
    let ignore_interference = rate_ignore_interference(cp, 1.0)?;
    Ok(SectorSearch {
        best,
        ignore_interference,
        beats_ignore: best.rate > ignore_interference + 1e-12,
    })
}

/// Low-SIR approximation `(1/k)·log2(1 + p / (1 + q·sin²(π/k)))`.
pub fn low_sir_approx(cp: &ChannelParams, k: u32) -> Result<f64> {
    if k == 0 {
        return Err(Error::domain("sector count must be at least 1"));
    }
    let s = (std::f64::consts::PI / k as f64).sin();
    Ok((1.0 + cp.p() / (cp.n() + cp.q() * s * s)).log2() / k as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::rate_no_interference;
    use std::f64::consts::PI;

    fn cp(p: f64, q: f64) -> ChannelParams {
        ChannelParams::with_unit_noise(p, q).unwrap()
    }

    /// Dense scan of the α objective, independent of the golden-section path.
    fn grid_scan(p: f64, q: f64, dphi: f64) -> (f64, f64) {
        let mut best = (0.0, f64::NEG_INFINITY);
        for i in 0..=10_000 {
            let a = i as f64 / 10_000.0;
            let v = (p / llse_raw(p, q, a, dphi, dphi)).log2();
            if v > best.1 {
                best = (a, v);
            }
        }
        best
    }

    #[test]
    fn beta_examples() {
        let c = cp(10.0, 10.0);
        for theta in [-PI, -1.0, 0.0, 2.0, PI] {
            assert!((beta_coeff(&c, 0.0, theta).unwrap() - 10.0 / 21.0).abs() < 1e-15);
        }
        assert!((beta_coeff(&c, 1.0, 0.0).unwrap() - 20.0 / 21.0).abs() < 1e-15);
        assert!(beta_coeff(&c, 1.0, PI).unwrap().abs() < 1e-15);
    }

    #[test]
    fn beta_requires_unit_noise_and_valid_ranges() {
        let c = ChannelParams::new(10.0, 10.0, 2.0).unwrap();
        assert!(matches!(beta_coeff(&c, 0.5, 0.0), Err(Error::Domain(_))));
        assert!(beta_coeff(&cp(1.0, 1.0), 1.5, 0.0).is_err());
        assert!(beta_coeff(&cp(1.0, 1.0), 0.5, 4.0).is_err());
    }

    #[test]
    fn llse_error_at_zero_alpha_is_treat_as_noise() {
        for (p, q) in [(10.0, 10.0), (0.3, 50.0), (100.0, 1.0)] {
            let c = cp(p, q);
            for dphi in [0.0, 0.7, PI] {
                let e = llse_error(&c, 0.0, dphi, dphi).unwrap();
                assert!((p / e - (1.0 + p / (q + 1.0))).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn llse_error_costa_point() {
        let p = 10.0;
        let c = cp(p, 7.0);
        let e = llse_error(&c, p / (p + 1.0), 0.0, 0.0).unwrap();
        assert!(((p / e).log2() - (1.0f64 + p).log2()).abs() < 1e-12);
    }

    #[test]
    fn llse_error_rejects_phase_outside_budget() {
        assert!(llse_error(&cp(1.0, 1.0), 0.5, 0.1, 0.2).is_err());
        assert!(llse_error(&cp(1.0, 1.0), 0.5, 4.0, 0.2).is_err());
    }

    #[test]
    fn llse_error_shrinks_inside_budget() {
        let c = cp(10.0, 10.0);
        for dphi in [0.05, 0.3, 1.0, 2.0] {
            for alpha in [0.0, 0.3, 0.9, 1.0] {
                let worst = llse_error(&c, alpha, dphi, dphi).unwrap();
                for i in 0..=40 {
                    let phi = -dphi + 2.0 * dphi * i as f64 / 40.0;
                    let phi = phi.clamp(-dphi, dphi);
                    assert!(llse_error(&c, alpha, dphi, phi).unwrap() <= worst + 1e-12);
                }
            }
        }
    }

    #[test]
    fn costa_recovery() {
        let r = achievable_rate(&cp(10.0, 10.0), &PhaseBudget::new(0.0).unwrap()).unwrap();
        assert!((r.rate - 11f64.log2()).abs() < 1e-9);
        assert!((r.get("alpha").unwrap() - 10.0 / 11.0).abs() < 1e-6);
    }

    #[test]
    fn full_uncertainty_reduces_to_treat_as_noise() {
        let c = cp(10.0, 10.0);
        let r = achievable_rate(&c, &PhaseBudget::new(PI).unwrap()).unwrap();
        let tin = rate_ignore_interference(&c, 1.0).unwrap();
        assert!(r.rate >= tin);
        assert!((r.rate - tin).abs() < 1e-9);
        assert!(r.get("alpha").unwrap() < 1e-6);
    }

    #[test]
    fn golden_section_agrees_with_grid_scan() {
        for (p, q) in [(10.0, 10.0), (0.01, 316.0), (100.0, 3.0), (1.0, 1.0)] {
            for dphi in [0.0, 0.01, 0.2, 0.8, 1.5, 3.0] {
                let r = achievable_rate(&cp(p, q), &PhaseBudget::new(dphi).unwrap()).unwrap();
                let (ga, gv) = grid_scan(p, q, dphi);
                assert!(r.get("raw_rate").unwrap() >= gv - 1e-12, "p={p} q={q} dphi={dphi}");
                assert!((r.get("alpha").unwrap() - ga).abs() < 2e-4);
            }
        }
    }

    #[test]
    fn restricted_alpha_domain_is_floored_and_flagged() {
        // α pinned near 1 at full uncertainty is far worse than α = 0.
        let c = cp(1.0, 100.0);
        let pb = PhaseBudget::with_alpha_domain(PI, 0.9, 1.0).unwrap();
        let r = achievable_rate(&c, &pb).unwrap();
        assert!(r.has_flag(RateFlag::FlooredAtTreatAsNoise));
        assert!(r.get("raw_rate").unwrap() < r.rate);
        assert_eq!(r.rate, rate_ignore_interference(&c, 1.0).unwrap());
    }

    #[test]
    fn achievable_nonincreasing_in_phase_budget() {
        for (p, q) in [(10.0, 10.0), (0.1, 300.0), (3.0, 30.0)] {
            let c = cp(p, q);
            let mut prev = f64::INFINITY;
            for i in 0..64 {
                let dphi = PI * i as f64 / 63.0;
                let r = achievable_rate(&c, &PhaseBudget::new(dphi).unwrap()).unwrap().rate;
                assert!(r <= prev + 1e-9, "p={p} q={q} dphi={dphi}");
                prev = r;
            }
        }
    }

    #[test]
    fn single_sector_is_full_uncertainty() {
        let c = cp(10.0, 10.0);
        let plan = sectoring_rate(&c, 1).unwrap();
        let full = achievable_rate(&c, &PhaseBudget::new(PI).unwrap()).unwrap();
        assert_eq!(plan.rate, full.rate);
        assert!(sectoring_rate(&c, 0).is_err());
    }

    #[test]
    fn sectoring_never_exceeds_achievable_at_same_width() {
        let c = cp(0.5, 200.0);
        for k in 1..40 {
            let plan = sectoring_rate(&c, k).unwrap();
            let full = achievable_rate(&c, &PhaseBudget::new(PI / k as f64).unwrap()).unwrap();
            assert!(plan.rate <= full.rate + 1e-15);
        }
    }

    #[test]
    fn many_sectors_at_very_low_sir() {
        // Q = 25 dB, P = −20 dB: the heuristic k ≈ π·sqrt(Q) is about 56.
        let c = cp(0.01, crate::model::db_to_linear(25.0));
        let search = optimize_sectors(&c, 200).unwrap();
        assert!(search.beats_ignore);
        assert!(search.best.k >= 20, "k = {}", search.best.k);
        // Exhaustive re-check of the maximum.
        for k in 1..=200 {
            assert!(sectoring_rate(&c, k).unwrap().rate <= search.best.rate);
        }
    }

    #[test]
    fn high_sir_needs_no_sectors() {
        let search = optimize_sectors(&cp(10.0, 1.0), DEFAULT_K_MAX).unwrap();
        assert!(!search.beats_ignore);
        assert_eq!(search.best.k, 1);
    }

    #[test]
    fn single_candidate_search() {
        let search = optimize_sectors(&cp(0.01, 300.0), 1).unwrap();
        assert_eq!(search.best.k, 1);
        assert!(optimize_sectors(&cp(1.0, 1.0), 0).is_err());
    }

    #[test]
    fn low_sir_approx_limits() {
        // p → 0 gives a vanishing rate.
        assert!(low_sir_approx(&cp(1e-12, 100.0), 5).unwrap() < 1e-10);
        // Q sin²(π/k) ≫ 1: (1/k)·log2(1 + x) ≈ (1/k)·x/ln 2 with x ≈ p k²/(q π²).
        let c = cp(1e-4, 1e6);
        let k = 10;
        let approx = low_sir_approx(&c, k).unwrap();
        let linear = c.p() * (k * k) as f64 / (c.q() * PI * PI) / k as f64 / std::f64::consts::LN_2;
        assert!((approx - linear).abs() / linear < 0.05, "{approx} vs {linear}");
    }

    #[test]
    fn low_sir_approx_tracks_sectoring() {
        for q_db in [20.0, 25.0, 30.0] {
            let q = crate::model::db_to_linear(q_db);
            for ratio in [1e-2, 1e-3, 1e-4] {
                let c = cp(ratio * q, q);
                let best = optimize_sectors(&c, DEFAULT_K_MAX).unwrap().best;
                let approx = low_sir_approx(&c, best.k).unwrap();
                let rel = (approx - best.rate).abs() / best.rate;
                assert!(rel < 0.25, "q={q_db} dB ratio={ratio} k={}: {approx} vs {}", best.k, best.rate);
            }
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn never_below_treat_as_noise(p in 1e-3f64..1e3, q in 1e-3f64..1e3, dphi in 0.0f64..PI) {
                let c = cp(p, q);
                let r = achievable_rate(&c, &PhaseBudget::new(dphi).unwrap()).unwrap();
                prop_assert!(r.rate >= rate_ignore_interference(&c, 1.0).unwrap() - 1e-9);
                prop_assert!(r.get("raw_rate").unwrap() >= rate_ignore_interference(&c, 1.0).unwrap() - 1e-9);
                prop_assert!(!r.has_flag(RateFlag::FlooredAtTreatAsNoise));
            }

            #[test]
            fn zero_budget_is_interference_free(p in 1e-2f64..1e3, q in 1e-2f64..1e3) {
                let c = cp(p, q);
                let r = achievable_rate(&c, &PhaseBudget::new(0.0).unwrap()).unwrap();
                prop_assert!((r.rate - rate_no_interference(&c)).abs() < 1e-6);
            }

            #[test]
            fn best_sector_dominates(p in 1e-3f64..1.0, q in 10.0f64..1e3) {
                let c = cp(p, q);
                let s = optimize_sectors(&c, 64).unwrap();
                for k in 1..=64 {
                    prop_assert!(sectoring_rate(&c, k).unwrap().rate <= s.best.rate);
                }
            }
        }
    }
}
