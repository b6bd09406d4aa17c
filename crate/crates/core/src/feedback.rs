//! Phase training with prescient interference knowledge.
//!
//! The transmitter quantizes upcoming interference symbols to distortion
//! `D` and ships them to the receiver, which correlates that copy against
//! its own observations during a silent dead-zone of `τ` symbols to learn
//! the interference phase to within `Δφ` (with probability `1 − β_out`).
//! The phase is fed back (instantaneously, at no cost) and the remainder of
//! the coherence block is dirty-paper coded with residual error `Δφ`.
//!
//! Two operating modes are analysed:
//!
//! * contiguous: the quantized knowledge for the next block rides along
//!   with the current block's payload, costing `τ·log2(q/D)` bits;
//! * bursty: every packet first sends the knowledge in `τ_pk` symbols
//!   decoded with the interference treated as noise, then stays silent for
//!   the dead-zone.
//!
//! Transmit power is boosted so that the average over the whole block is
//! `p`. All formulas assume unit noise power.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::achievable::achievable_rate_value;
use crate::error::{Error, Result};
use crate::model::{rate_ignore_interference, ChannelParams, RateFlag, RateKind, RateReport};
use crate::numeric::{inv_q_function, log_space};

pub const DEFAULT_CONFIDENCE: f64 = 1e-3;
pub const DEFAULT_GRID_POINTS: usize = 40;
const FIXED_POINT_ITERATIONS: usize = 50;
const FIXED_POINT_TOL: f64 = 0.5;

/// Which backward channel models the quantizer output `Ŝ = g·S + ζ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuantizerChannel {
    /// Gain `(q−D)/D`, `ζ` variance `(q−D)·q/D`.
    #[default]
    Printed,
    /// Gaussian rate-distortion test channel: gain `(q−D)/q`, `ζ` variance
    /// `D·(q−D)/q`.
    StandardTestChannel,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantizerModel {
    pub distortion: f64,
    pub gain: f64,
    pub noise_var: f64,
    pub channel: QuantizerChannel,
}

impl QuantizerModel {
    pub fn new(q: f64, distortion: f64, channel: QuantizerChannel) -> Result<Self> {
        if !(distortion > 0.0 && distortion < q) {
            return Err(Error::domain(format!(
                "distortion must lie in (0, q) = (0, {q}), got {distortion}"
            )));
        }
        let (gain, noise_var) = match channel {
            QuantizerChannel::Printed => ((q - distortion) / distortion, (q - distortion) * q / distortion),
            QuantizerChannel::StandardTestChannel => ((q - distortion) / q, distortion * (q - distortion) / q),
        };
        Ok(Self {
            distortion,
            gain,
            noise_var,
            channel,
        })
    }

    pub fn printed(q: f64, distortion: f64) -> Result<Self> {
        Self::new(q, distortion, QuantizerChannel::Printed)
    }

    fn check_against(&self, cp: &ChannelParams) -> Result<()> {
        if !(self.distortion > 0.0 && self.distortion < cp.q()) {
            return Err(Error::domain(format!(
                "distortion {} outside (0, q = {})",
                self.distortion,
                cp.q()
            )));
        }
        Ok(())
    }
}

/// Second moment of the correlator noise term `η`.
///
/// For the printed quantizer this is `g²q + q(q−D)/D + (q−D)/D`. For the
/// standard test channel it is the per-axis variance of
/// `g·S*·N + ζ*·S + ζ*·N`, namely `(g²q + σ_ζ²·q + σ_ζ²)/2`; the printed
/// expression is within 1% of that same per-axis variance when evaluated
/// with the printed constants at `q = 10`, `D = 1`.
pub fn estimator_noise_power(cp: &ChannelParams, qm: &QuantizerModel) -> Result<f64> {
    cp.require_unit_noise("estimator_noise_power")?;
    qm.check_against(cp)?;
    let (q, d, g) = (cp.q(), qm.distortion, qm.gain);
    Ok(match qm.channel {
        QuantizerChannel::Printed => g * g * q + q * (q - d) / d + (q - d) / d,
        QuantizerChannel::StandardTestChannel => 0.5 * (g * g * q + qm.noise_var * q + qm.noise_var),
    })
}

fn check_confidence(confidence: f64) -> Result<()> {
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::domain(format!(
            "estimator outage probability must lie in (0, 1), got {confidence}"
        )));
    }
    Ok(())
}

/// Dead-zone length before rounding: `(Q^{-1}(β_out))²·E[η²] / (g²q²Δφ²)`.
pub fn training_time_exact(
    cp: &ChannelParams,
    qm: &QuantizerModel,
    delta_phi: f64,
    confidence: f64,
) -> Result<f64> {
    if !(delta_phi > 0.0 && delta_phi.is_finite()) {
        return Err(Error::domain(format!("Δφ must be positive, got {delta_phi}")));
    }
    check_confidence(confidence)?;
    let eta = estimator_noise_power(cp, qm)?;
    let z = inv_q_function(confidence)?;
    let gq = qm.gain * cp.q();
    Ok(z * z * eta / (gq * gq * delta_phi * delta_phi))
}

/// Dead-zone length in whole symbols.
pub fn training_time(cp: &ChannelParams, qm: &QuantizerModel, delta_phi: f64, confidence: f64) -> Result<u64> {
    let t = training_time_exact(cp, qm, delta_phi, confidence)?;
    if !(t < u64::MAX as f64) {
        return Err(Error::numerical("training time", format!("τ = {t} does not fit in u64")));
    }
    Ok(t.ceil() as u64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeedbackMode {
    #[default]
    Contiguous,
    Bursty,
}

/// Inputs to the effective-rate optimization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedbackPlan {
    pub l_coh: u64,
    /// Acceptable probability that the phase estimate misses by more than Δφ.
    pub confidence: f64,
    pub d_grid: Vec<f64>,
    pub dphi_grid: Vec<f64>,
    pub mode: FeedbackMode,
    pub quantizer: QuantizerChannel,
}

impl FeedbackPlan {
    /// 40 log-spaced distortions in `[0.01q, 0.99q]` and 40 log-spaced
    /// phase widths in `[1e-3, π/2]`.
    pub fn with_default_grids(q: f64, l_coh: u64, mode: FeedbackMode) -> Self {
        Self::with_grid_points(q, l_coh, mode, DEFAULT_GRID_POINTS)
    }

    /// Same ranges as [`FeedbackPlan::with_default_grids`] with `points`
    /// entries in each grid.
    pub fn with_grid_points(q: f64, l_coh: u64, mode: FeedbackMode, points: usize) -> Self {
        Self {
            l_coh,
            confidence: DEFAULT_CONFIDENCE,
            d_grid: log_space(0.01 * q, 0.99 * q, points),
            dphi_grid: log_space(1e-3, std::f64::consts::FRAC_PI_2, points),
            mode,
            quantizer: QuantizerChannel::Printed,
        }
    }

    pub fn validate(&self, cp: &ChannelParams) -> Result<()> {
        cp.require_unit_noise("feedback analysis")?;
        if self.d_grid.is_empty() {
            return Err(Error::EmptyGrid("distortion"));
        }
        if self.dphi_grid.is_empty() {
            return Err(Error::EmptyGrid("residual phase"));
        }
        if self.l_coh == 0 {
            return Err(Error::domain("coherence length must be positive"));
        }
        check_confidence(self.confidence)?;
        for &d in &self.d_grid {
            if !(d > 0.0 && d < cp.q()) {
                return Err(Error::domain(format!("distortion grid point {d} outside (0, q = {})", cp.q())));
            }
        }
        for &dphi in &self.dphi_grid {
            if !(dphi > 0.0 && dphi < std::f64::consts::PI) {
                return Err(Error::domain(format!("phase grid point {dphi} outside (0, π)")));
            }
        }
        Ok(())
    }

    fn grid(&self) -> Vec<(f64, f64)> {
        self.d_grid
            .iter()
            .flat_map(|&d| self.dphi_grid.iter().map(move |&dphi| (d, dphi)))
            .collect()
    }
}

/// Dispatches on [`FeedbackPlan::mode`].
pub fn effective_rate(cp: &ChannelParams, plan: &FeedbackPlan) -> Result<RateReport> {
    match plan.mode {
        FeedbackMode::Contiguous => effective_rate_contiguous(cp, plan),
        FeedbackMode::Bursty => effective_rate_bursty(cp, plan),
    }
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    rate: f64,
    d: f64,
    dphi: f64,
    tau_dead: u64,
    tau_pk: u64,
    power: f64,
}

/// Best candidate in grid order; ties keep the earlier point.
fn best_of(candidates: Vec<Option<Candidate>>) -> Option<Candidate> {
    candidates
        .into_iter()
        .flatten()
        .reduce(|best, c| if c.rate > best.rate { c } else { best })
}

fn finish(cp: &ChannelParams, plan: &FeedbackPlan, best: Option<Candidate>) -> Result<RateReport> {
    let fallback = rate_ignore_interference(cp, 1.0)?;
    let base = |rate: f64| {
        RateReport::new(rate, RateKind::Effective)
            .with_channel(cp)
            .param("l_coh", plan.l_coh as f64)
            .param("confidence", plan.confidence)
            .param("fallback_rate", fallback)
    };
    let report = match best {
        None => base(0.0).flag(RateFlag::Infeasible),
        Some(c) => {
            let mut r = base(c.rate)
                .param("d", c.d)
                .param("delta_phi", c.dphi)
                .param("tau", c.tau_dead as f64)
                .param("power", c.power);
            if plan.mode == FeedbackMode::Bursty {
                r = r.param("tau_pk", c.tau_pk as f64);
            }
            r
        }
    };
    Ok(if fallback > report.rate {
        report.flag(RateFlag::FallbackBetter)
    } else {
        report
    })
}

/// Contiguous (bootstrapped) operation:
/// `R_eff = max_{D,Δφ} [(l−τ)·C(p·l/(l−τ), Δφ) − τ·log2(q/D)] / l`
/// with `τ = τ(Δφ, D)` and `C` the phase-budget achievable rate.
///
/// Grid points whose dead-zone fills the block or whose payload does not
/// cover the knowledge cost are skipped. When nothing is feasible the rate
/// is 0 with [`RateFlag::Infeasible`]. The treat-as-noise rate is always
/// reported as `fallback_rate`.
pub fn effective_rate_contiguous(cp: &ChannelParams, plan: &FeedbackPlan) -> Result<RateReport> {
    plan.validate(cp)?;
    let l = plan.l_coh as f64;
    let candidates = plan
        .grid()
        .into_par_iter()
        .map(|(d, dphi)| -> Result<Option<Candidate>> {
            let qm = QuantizerModel::new(cp.q(), d, plan.quantizer)?;
            let tau = training_time(cp, &qm, dphi, plan.confidence)?;
            if tau >= plan.l_coh {
                return Ok(None);
            }
            let data = l - tau as f64;
            let power = cp.p() * l / data;
            let payload = data * achievable_rate_value(power, cp.q(), dphi)?;
            let bits = payload - tau as f64 * (cp.q() / d).log2();
            if bits <= 0.0 {
                return Ok(None);
            }
            Ok(Some(Candidate {
                rate: bits / l,
                d,
                dphi,
                tau_dead: tau,
                tau_pk: 0,
                power,
            }))
        })
        .collect::<Result<Vec<_>>>()?;
    finish(cp, plan, best_of(candidates))
}

/// Smallest knowledge-transfer length `τ_pk` such that
/// `τ_pk·log2(1 + P1/(1+q)) ≥ τ_dead·log2(q/D)` with
/// `P1 = p·l/(l − τ_pk − τ_dead)`, or `None` if the block is too short.
fn knowledge_transfer_len(p: f64, q: f64, l: u64, tau_dead: u64, bits: f64) -> Option<u64> {
    let lf = l as f64;
    let td = tau_dead as f64;
    let power = |tau_pk: f64| p * lf / (lf - tau_pk - td);
    let rate = |pw: f64| (1.0 + pw / (1.0 + q)).log2();
    let needed = |tau_pk: f64| bits / rate(power(tau_pk));

    // The map is decreasing in τ_pk, so iterates alternate around the fixed
    // point; keep the larger of the last two.
    let mut prev = needed(0.0);
    if !(prev.is_finite() && prev + td < lf) {
        return None;
    }
    let mut cur = prev;
    for _ in 0..FIXED_POINT_ITERATIONS {
        if cur + td >= lf {
            return None;
        }
        let next = needed(cur);
        prev = cur;
        cur = next;
        if (cur - prev).abs() < FIXED_POINT_TOL {
            break;
        }
    }
    let mut tau_pk = cur.max(prev).ceil().max(0.0) as u64;
    loop {
        if tau_pk + tau_dead >= l {
            return None;
        }
        let pk = tau_pk as f64;
        if pk * rate(power(pk)) >= bits {
            return Some(tau_pk);
        }
        tau_pk += 1;
    }
}

/// Bursty operation: each packet pays `τ_pk` symbols of knowledge transfer
/// (interference treated as noise) plus the dead-zone,
/// `R_eff = max_{D,Δφ} (l − τ_dead − τ_pk)·C(P1, Δφ) / l`.
pub fn effective_rate_bursty(cp: &ChannelParams, plan: &FeedbackPlan) -> Result<RateReport> {
    plan.validate(cp)?;
    let l = plan.l_coh as f64;
    let candidates = plan
        .grid()
        .into_par_iter()
        .map(|(d, dphi)| -> Result<Option<Candidate>> {
            let qm = QuantizerModel::new(cp.q(), d, plan.quantizer)?;
            let tau_dead = training_time(cp, &qm, dphi, plan.confidence)?;
            if tau_dead >= plan.l_coh {
                return Ok(None);
            }
            let bits = tau_dead as f64 * (cp.q() / d).log2();
            let Some(tau_pk) = knowledge_transfer_len(cp.p(), cp.q(), plan.l_coh, tau_dead, bits) else {
                return Ok(None);
            };
            let data = l - (tau_dead + tau_pk) as f64;
            let power = cp.p() * l / data;
            let payload = data * achievable_rate_value(power, cp.q(), dphi)?;
            if payload <= 0.0 {
                return Ok(None);
            }
            Ok(Some(Candidate {
                rate: payload / l,
                d,
                dphi,
                tau_dead,
                tau_pk,
                power,
            }))
        })
        .collect::<Result<Vec<_>>>()?;
    finish(cp, plan, best_of(candidates))
}
