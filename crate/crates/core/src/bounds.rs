//! Upper bounds on the rate under interference phase uncertainty and fade
//! uncertainty, and the outage analysis under Rayleigh fading.
//!
//! The fade bound `C_u(γ) = log2((p + γ²q + n) / (2γ·sqrt(qn)))` is
//! strictly decreasing on `(0, γ*)` and strictly increasing on `(γ*, ∞)`
//! with `γ*² = (p + n)/q`, so the event `C_u(γ) < R` is an interval of
//! fade amplitudes. Its end points are located by bisection and its
//! probability read off the Rayleigh survival function.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{rate_no_interference, ChannelParams, FadeModel, RateFlag, RateKind, RateReport};
use crate::numeric::bisect;

/// Absolute tolerance on the fade amplitude for the interval end points.
pub const GAMMA_TOL: f64 = 1e-10;
/// Absolute tolerance on the rate when inverting the outage curve.
pub const RATE_TOL: f64 = 1e-10;
/// Rates beyond this are reported as unbounded.
const RATE_CEILING: f64 = 1e4;

/// Bound for a receiver that sees the interference at phase 0 or π with
/// equal footing: `½·log2((p+q+n)² / (4qn))`.
///
/// The value is returned as is, without clamping at 0.
pub fn upper_bound_phase(cp: &ChannelParams) -> Result<f64> {
    let qn = cp.q() * cp.n();
    if qn <= 0.0 {
        return Err(Error::domain("upper bound needs q·n > 0"));
    }
    let s = cp.p() + cp.q() + cp.n();
    Ok(0.5 * (s * s / (4.0 * qn)).log2())
}

/// The phase bound with the interference scaled by a fixed fade amplitude.
pub fn upper_bound_fade(cp: &ChannelParams, gamma: f64) -> Result<f64> {
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(Error::domain(format!(
            "fade bound needs a positive finite amplitude (it diverges as γ → 0), got {gamma}"
        )));
    }
    Ok(fade_bound_unchecked(cp, gamma))
}

#[inline]
fn fade_bound_unchecked(cp: &ChannelParams, gamma: f64) -> f64 {
    let g2q = gamma * gamma * cp.q();
    let s = cp.p() + g2q + cp.n();
    0.5 * (s * s / (4.0 * g2q * cp.n())).log2()
}

/// Location and value of the minimum of `C_u(γ)`.
pub fn fade_bound_minimum(cp: &ChannelParams) -> (f64, f64) {
    let gamma = ((cp.p() + cp.n()) / cp.q()).sqrt();
    (gamma, fade_bound_unchecked(cp, gamma))
}

/// Confirms numerically that `C_u` falls then rises around the analytic
/// minimizer before the interval construction relies on it.
fn check_unimodal(cp: &ChannelParams) -> Result<(f64, f64)> {
    let (g_star, c_star) = fade_bound_minimum(cp);
    let mut prev = c_star;
    for k in 1..=48 {
        let g = g_star * 2f64.powf(-(k as f64) / 4.0);
        let c = fade_bound_unchecked(cp, g);
        if !(c > prev) {
            return Err(Error::numerical(
                "fade bound unimodality",
                format!("C_u not decreasing towards the minimizer at γ = {g} (C_u = {c}, next = {prev})"),
            ));
        }
        prev = c;
    }
    prev = c_star;
    for k in 1..=48 {
        let g = g_star * 2f64.powf(k as f64 / 4.0);
        let c = fade_bound_unchecked(cp, g);
        if !(c > prev) {
            return Err(Error::numerical(
                "fade bound unimodality",
                format!("C_u not increasing past the minimizer at γ = {g} (C_u = {c}, prev = {prev})"),
            ));
        }
        prev = c;
    }
    Ok((g_star, c_star))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OutageTarget {
    CommittedRate { rate: f64 },
    TargetOutage { p_out: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutageQuery {
    pub cp: ChannelParams,
    pub fade: FadeModel,
    pub target: OutageTarget,
}

impl OutageQuery {
    pub fn committed_rate(cp: ChannelParams, sigma2: f64, rate: f64) -> Result<Self> {
        if !(rate >= 0.0) {
            return Err(Error::domain(format!("committed rate must be >= 0, got {rate}")));
        }
        Ok(Self {
            cp,
            fade: FadeModel::rayleigh(sigma2)?,
            target: OutageTarget::CommittedRate { rate },
        })
    }

    pub fn target_outage(cp: ChannelParams, sigma2: f64, p_out: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p_out) {
            return Err(Error::domain(format!("outage probability must lie in [0, 1], got {p_out}")));
        }
        Ok(Self {
            cp,
            fade: FadeModel::rayleigh(sigma2)?,
            target: OutageTarget::TargetOutage { p_out },
        })
    }

    fn sigma2(&self) -> Result<f64> {
        match self.fade {
            FadeModel::Rayleigh { sigma2 } => Ok(sigma2),
            FadeModel::Fixed { .. } => Err(Error::domain("outage analysis needs a Rayleigh fade model")),
        }
    }
}

/// Lower bound on the outage probability at a committed rate, with the
/// fade interval where the bound falls short of the rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutageBound {
    pub probability: f64,
    /// `(γ_lo, γ_hi)`; `None` when the committed rate is at or below the
    /// minimum of `C_u`. `γ_hi` may be infinite.
    pub interval: Option<(f64, f64)>,
}

/// Fade amplitudes with `C_u(γ) < rate`, or `None` if the set is empty.
pub fn outage_interval(cp: &ChannelParams, rate: f64) -> Result<Option<(f64, f64)>> {
    let (g_star, c_star) = check_unimodal(cp)?;
    if rate <= c_star {
        return Ok(None);
    }
    let excess = |g: f64| {
        if g <= 0.0 {
            f64::INFINITY
        } else {
            fade_bound_unchecked(cp, g) - rate
        }
    };
    let lo = bisect(excess, 0.0, g_star, GAMMA_TOL)?;

    let mut hi = 2.0 * g_star;
    while excess(hi) <= 0.0 {
        hi *= 2.0;
        if !hi.is_finite() {
            return Ok(Some((lo, f64::INFINITY)));
        }
    }
    let hi = bisect(excess, g_star, hi, GAMMA_TOL)?;
    Ok(Some((lo, hi)))
}

/// `Pr(C_u(γ) < R)` for Rayleigh `γ`, a lower bound on the outage
/// probability at committed rate `R`.
pub fn outage_lower_bound(oq: &OutageQuery) -> Result<OutageBound> {
    let sigma2 = oq.sigma2()?;
    let rate = match oq.target {
        OutageTarget::CommittedRate { rate } => rate,
        OutageTarget::TargetOutage { .. } => {
            return Err(Error::domain("outage_lower_bound needs a committed rate"))
        }
    };
    outage_at_rate(&oq.cp, sigma2, rate)
}

fn outage_at_rate(cp: &ChannelParams, sigma2: f64, rate: f64) -> Result<OutageBound> {
    let fade = FadeModel::rayleigh(sigma2)?;
    let interval = outage_interval(cp, rate)?;
    let probability = match interval {
        None => 0.0,
        Some((lo, hi)) => (fade.survival(lo) - fade.survival(hi)).max(0.0),
    };
    Ok(OutageBound { probability, interval })
}

/// Largest rate whose outage lower bound does not exceed the target.
///
/// At `p_out = 0` this is the minimum of `C_u`. At `p_out = 1` (or when the
/// search runs past any sensible rate) the report carries
/// [`RateFlag::Unbounded`] and an infinite rate. The parameter
/// `capped_rate` clips the bound at the interference-free capacity, above
/// which the true outage probability is 1.
pub fn rate_vs_outage(oq: &OutageQuery) -> Result<RateReport> {
    let sigma2 = oq.sigma2()?;
    let p_out = match oq.target {
        OutageTarget::TargetOutage { p_out } => p_out,
        OutageTarget::CommittedRate { .. } => {
            return Err(Error::domain("rate_vs_outage needs a target outage probability"))
        }
    };
    let cp = &oq.cp;
    let cap = rate_no_interference(cp);
    let report = |rate: f64| {
        RateReport::new(rate, RateKind::UpperBound)
            .with_channel(cp)
            .param("sigma2", sigma2)
            .param("p_out", p_out)
            .param("capped_rate", rate.min(cap))
    };
    let unbounded = || report(f64::INFINITY).flag(RateFlag::Unbounded);

    let (_, c_star) = check_unimodal(cp)?;
    if p_out == 0.0 {
        return Ok(report(c_star));
    }
    if p_out >= 1.0 {
        return Ok(unbounded());
    }

    let excess = |r: f64| -> Result<f64> { Ok(outage_at_rate(cp, sigma2, r)?.probability - p_out) };
    let mut step = 1.0;
    let mut hi = c_star + step;
    while excess(hi)? <= 0.0 {
        step *= 2.0;
        hi = c_star + step;
        if hi > RATE_CEILING {
            return Ok(unbounded());
        }
    }
    // Probabilities are computed inside the closure; a solver failure there
    // would surface as NaN, which bisect rejects.
    let rate = bisect(
        |r| excess(r).unwrap_or(f64::NAN),
        c_star,
        hi,
        RATE_TOL,
    )?;
    Ok(report(rate))
}

/// [`rate_vs_outage`] evaluated for each Rayleigh parameter in the grid.
pub fn rate_vs_rayleigh_param(
    cp: &ChannelParams,
    p_out: f64,
    sigma2_grid: &[f64],
) -> Result<Vec<(f64, RateReport)>> {
    if sigma2_grid.is_empty() {
        return Err(Error::EmptyGrid("sigma2"));
    }
    if !(0.0..1.0).contains(&p_out) {
        return Err(Error::domain(format!("outage probability must lie in [0, 1), got {p_out}")));
    }
    sigma2_grid
        .iter()
        .map(|&s2| {
            let oq = OutageQuery::target_outage(*cp, s2, p_out)?;
            Ok((s2, rate_vs_outage(&oq)?))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::rate_ignore_interference;

    fn cp(p: f64, q: f64) -> ChannelParams {
        ChannelParams::with_unit_noise(p, q).unwrap()
    }

    /// Closed-form roots of C_u(γ) = r: qγ² − 2·2^r·sqrt(qn)·γ + (p+n) = 0.
    fn quadratic_roots(c: &ChannelParams, r: f64) -> Option<(f64, f64)> {
        let b = 2.0 * 2f64.powf(r) * (c.q() * c.n()).sqrt();
        let disc = b * b - 4.0 * c.q() * (c.p() + c.n());
        if disc <= 0.0 {
            return None;
        }
        let s = disc.sqrt();
        Some(((b - s) / (2.0 * c.q()), (b + s) / (2.0 * c.q())))
    }

    #[test]
    fn phase_bound_examples() {
        let b = upper_bound_phase(&cp(1.0, 1.0)).unwrap();
        assert!((b - 0.5 * (9.0f64 / 4.0).log2()).abs() < 1e-15);
        assert!((b - 0.5850).abs() < 1e-4);

        // 0.5·log2(441/40) = 1.73135...; the minimum over γ (1.72972) is lower.
        let b = upper_bound_phase(&cp(10.0, 10.0)).unwrap();
        assert!((b - 0.5 * (441.0f64 / 40.0).log2()).abs() < 1e-15);
        assert!((b - 1.731_35).abs() < 1e-5);
    }

    #[test]
    fn phase_bound_is_not_clamped() {
        // Tiny p with q = n: (q+n)²/(4qn) → 1 from above, so the bound
        // approaches 0; with q ≫ n it is well above 0. Check raw
        // evaluation against the direct formula on both.
        for (p, q, n) in [(1e-6, 1.0, 1.0), (1.0, 1e3, 1.0)] {
            let c = ChannelParams::new(p, q, n).unwrap();
            let direct = 0.5 * ((p + q + n).powi(2) / (4.0 * q * n)).log2();
            assert_eq!(upper_bound_phase(&c).unwrap(), direct);
        }
    }

    #[test]
    fn phase_bound_close_to_treat_as_noise_at_two_db() {
        let q = crate::model::db_to_linear(2.0);
        let c = cp(100.0, q);
        let bound = upper_bound_phase(&c).unwrap();
        let tin = rate_ignore_interference(&c, 1.0).unwrap();
        assert!(bound >= tin);
        assert!(bound - tin < 0.5, "bound {bound}, tin {tin}");
    }

    #[test]
    fn fade_bound_rejects_zero_amplitude() {
        assert!(matches!(upper_bound_fade(&cp(1.0, 1.0), 0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn fade_bound_minimum_examples() {
        let c = cp(10.0, 10.0);
        let (g, v) = fade_bound_minimum(&c);
        assert!((g - 1.1f64.sqrt()).abs() < 1e-15);
        let direct = (22.0 / (2.0 * 1.1f64.sqrt() * 10f64.sqrt())).log2();
        assert!((v - direct).abs() < 1e-14);
        assert!((v - 1.7297).abs() < 1e-4);
        // Brute-force scan agrees on the minimizer.
        let mut best = (0.0, f64::INFINITY);
        for i in 1..200_000 {
            let g = i as f64 * 2e-5;
            let b = upper_bound_fade(&c, g).unwrap();
            if b < best.1 {
                best = (g, b);
            }
        }
        assert!((best.0 - g).abs() < 5e-5);
        assert!((best.1 - v).abs() < 1e-9);
    }

    #[test]
    fn fade_bound_rises_for_large_gamma() {
        let c = cp(10.0, 10.0);
        let mut prev = upper_bound_fade(&c, 1.5).unwrap();
        for i in 1..100 {
            let b = upper_bound_fade(&c, 1.5 + i as f64 * 0.1).unwrap();
            assert!(b > prev);
            prev = b;
        }
    }

    #[test]
    fn outage_interval_matches_quadratic() {
        let c = cp(10.0, 10.0);
        let (lo, hi) = outage_interval(&c, 2.0).unwrap().unwrap();
        let (qlo, qhi) = quadratic_roots(&c, 2.0).unwrap();
        assert!((lo - qlo).abs() < 1e-9);
        assert!((hi - qhi).abs() < 1e-9);
        assert!((lo - 0.5578).abs() < 1e-4);
        assert!((hi - 1.9720).abs() < 1e-4);
    }

    #[test]
    fn outage_example_point() {
        let oq = OutageQuery::committed_rate(cp(10.0, 10.0), 1.0, 2.0).unwrap();
        let b = outage_lower_bound(&oq).unwrap();
        let (lo, hi) = quadratic_roots(&oq.cp, 2.0).unwrap();
        let want = (-lo * lo / 2.0).exp() - (-hi * hi / 2.0).exp();
        assert!((b.probability - want).abs() < 1e-9);
        assert!((b.probability - 0.713).abs() < 1e-3);
    }

    #[test]
    fn outage_below_minimum_is_zero() {
        let oq = OutageQuery::committed_rate(cp(10.0, 10.0), 1.0, 1.7).unwrap();
        let b = outage_lower_bound(&oq).unwrap();
        assert_eq!(b.probability, 0.0);
        assert!(b.interval.is_none());
    }

    #[test]
    fn outage_tends_to_one_for_large_rates() {
        let c = cp(10.0, 10.0);
        let mut prev = 0.0;
        for r in [4.0, 8.0, 16.0, 32.0] {
            let b = outage_lower_bound(&OutageQuery::committed_rate(c, 1.0, r).unwrap()).unwrap();
            assert!(b.probability >= prev);
            prev = b.probability;
        }
        assert!(prev > 1.0 - 1e-9);
    }

    #[test]
    fn outage_needs_rayleigh() {
        let oq = OutageQuery {
            cp: cp(1.0, 1.0),
            fade: FadeModel::fixed(1.0).unwrap(),
            target: OutageTarget::CommittedRate { rate: 1.0 },
        };
        assert!(matches!(outage_lower_bound(&oq), Err(Error::Domain(_))));
    }

    #[test]
    fn outage_nondecreasing_in_rate() {
        let c = cp(10.0, 10.0);
        let mut prev = 0.0;
        for i in 0..100 {
            let r = 1.5 + i as f64 * 0.05;
            let p = outage_lower_bound(&OutageQuery::committed_rate(c, 1.0, r).unwrap())
                .unwrap()
                .probability;
            assert!(p >= prev - 1e-15, "r={r}: {p} < {prev}");
            prev = p;
        }
    }

    #[test]
    fn zero_outage_gives_minimum_of_bound() {
        let c = cp(10.0, 10.0);
        for s2 in [0.25, 1.0, 4.0] {
            let r = rate_vs_outage(&OutageQuery::target_outage(c, s2, 0.0).unwrap()).unwrap();
            assert!((r.rate - fade_bound_minimum(&c).1).abs() < 1e-12);
            assert!((r.rate - 1.73).abs() < 0.01);
        }
    }

    #[test]
    fn full_outage_is_unbounded() {
        let r = rate_vs_outage(&OutageQuery::target_outage(cp(10.0, 10.0), 1.0, 1.0).unwrap()).unwrap();
        assert!(r.has_flag(RateFlag::Unbounded));
        assert!(r.rate.is_infinite());
        assert!((r.get("capped_rate").unwrap() - 11f64.log2()).abs() < 1e-12);
    }

    #[test]
    fn rate_vs_outage_is_monotone_and_inverts_outage() {
        let c = cp(10.0, 10.0);
        let mut prev = 0.0;
        for i in 0..50 {
            let p_out = i as f64 / 50.0;
            let r = rate_vs_outage(&OutageQuery::target_outage(c, 1.0, p_out).unwrap()).unwrap();
            assert!(r.rate >= prev);
            prev = r.rate;
        }
        for r in [1.8, 2.0, 2.5, 3.0, 4.0] {
            let p = outage_lower_bound(&OutageQuery::committed_rate(c, 1.0, r).unwrap())
                .unwrap()
                .probability;
            let back = rate_vs_outage(&OutageQuery::target_outage(c, 1.0, p).unwrap()).unwrap();
            assert!(back.rate >= r - 1e-6, "r={r}, back={}", back.rate);
        }
    }

    #[test]
    fn rayleigh_parameter_sweep() {
        let c = cp(10.0, 10.0);
        let grid: Vec<f64> = (1..=16).map(|i| i as f64 * 0.25).collect();
        let curve = rate_vs_rayleigh_param(&c, 0.1, &grid).unwrap();
        assert_eq!(curve.len(), grid.len());
        for (s2, r) in &curve {
            assert!(r.rate.is_finite() && r.rate > fade_bound_minimum(&c).1);
            assert_eq!(r.get("sigma2"), Some(*s2));
        }
        let single = rate_vs_rayleigh_param(&c, 0.1, &[1.0]).unwrap();
        assert_eq!(single.len(), 1);
        assert!(matches!(rate_vs_rayleigh_param(&c, 0.1, &[]), Err(Error::EmptyGrid(_))));
    }

    #[test]
    fn small_rayleigh_parameter_stays_finite() {
        // Nearly all mass near γ = 0, where C_u diverges: the rate grows
        // but the interval construction still returns a finite value.
        let c = cp(10.0, 10.0);
        let curve = rate_vs_rayleigh_param(&c, 0.1, &[1e-4, 1e-2]).unwrap();
        assert!(curve[0].1.rate.is_finite());
        assert!(curve[0].1.rate > curve[1].1.rate);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn fade_bound_at_unit_gamma_is_phase_bound(
                p in 1e-3f64..1e4, q in 1e-3f64..1e4, n in 1e-3f64..1e3,
            ) {
                let c = ChannelParams::new(p, q, n).unwrap();
                let a = upper_bound_fade(&c, 1.0).unwrap();
                let b = upper_bound_phase(&c).unwrap();
                prop_assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
            }

            #[test]
            fn interval_roots_agree_with_quadratic(
                p in 0.1f64..100.0, q in 0.1f64..100.0, extra in 0.01f64..5.0,
            ) {
                let c = cp(p, q);
                let r = fade_bound_minimum(&c).1 + extra;
                let (lo, hi) = outage_interval(&c, r).unwrap().unwrap();
                let (qlo, qhi) = quadratic_roots(&c, r).unwrap();
                prop_assert!((lo - qlo).abs() < 1e-8);
                prop_assert!((hi - qhi).abs() < 1e-8 * qhi.max(1.0));
            }
        }
    }
}
