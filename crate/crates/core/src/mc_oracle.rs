//! Seeded Monte Carlo estimators that check the closed forms independently.
//!
//! # Seed policy
//!
//! A batch of `count` trials is split into [`SHARDS`] shards; shard `i`
//! receives `count / SHARDS` trials plus one if `i < count % SHARDS`. Shard
//! `i` draws from `ChaCha8Rng::seed_from_u64(seed)` switched to stream `i`.
//! Shards run in parallel and their partial sums are merged in shard order
//! with compensated summation, so a given `(seed, count, parameters)`
//! always produces bit-identical output regardless of thread count.
//!
//! Complex Gaussians of power `P` have independent real and imaginary parts
//! of variance `P/2`.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ChannelParams;
use crate::numeric::CompensatedSum;

pub const SHARDS: u64 = 64;
pub const MIN_LLSE_SAMPLES: u64 = 10_000;
pub const MIN_OUTAGE_SAMPLES: u64 = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleBatch {
    pub seed: u64,
    pub count: u64,
}

impl SampleBatch {
    pub fn new(seed: u64, count: u64) -> Self {
        Self { seed, count }
    }

    fn shard_count(&self, shard: u64) -> u64 {
        self.count / SHARDS + u64::from(shard < self.count % SHARDS)
    }

    fn shard_rng(&self, shard: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(shard);
        rng
    }

    /// Runs `trial` over every shard and merges the per-shard accumulators
    /// in shard order.
    fn run<A, F>(&self, trial: F) -> A
    where
        A: Accumulator,
        F: Fn(&mut ChaCha8Rng, &mut A) + Sync,
    {
        let parts: Vec<A> = (0..SHARDS)
            .into_par_iter()
            .map(|shard| {
                let mut rng = self.shard_rng(shard);
                let mut acc = A::default();
                for _ in 0..self.shard_count(shard) {
                    trial(&mut rng, &mut acc);
                }
                acc
            })
            .collect();
        let mut total = A::default();
        for part in &parts {
            total.merge(part);
        }
        total
    }
}

trait Accumulator: Default + Send {
    fn merge(&mut self, other: &Self);
}

/// Running first and second moments of a scalar.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: u64,
    sum: CompensatedSum,
    sum_sq: CompensatedSum,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1;
        self.sum.add(x);
        self.sum_sq.add(x * x);
    }

    fn estimate(&self) -> McEstimate {
        let n = self.n as f64;
        let mean = self.sum.value() / n;
        let var = if self.n > 1 {
            ((self.sum_sq.value() - n * mean * mean) / (n - 1.0)).max(0.0)
        } else {
            0.0
        };
        McEstimate {
            mean,
            std_dev: var.sqrt(),
            std_err: (var / n).sqrt(),
            count: self.n,
        }
    }
}

impl Accumulator for Moments {
    fn merge(&mut self, other: &Self) {
        self.n += other.n;
        self.sum.merge(&other.sum);
        self.sum_sq.merge(&other.sum_sq);
    }
}

/// Sample mean with its spread.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_dev: f64,
    pub std_err: f64,
    pub count: u64,
}

impl McEstimate {
    /// `|mean − reference|` in units of the standard error.
    pub fn z_score(&self, reference: f64) -> f64 {
        (self.mean - reference).abs() / self.std_err
    }
}

fn complex_gaussian<R: Rng>(rng: &mut R, power: f64) -> Complex64 {
    let s = (0.5 * power).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(s * re, s * im)
}

/// Empirical mean powers of `X`, `S`, `Z` drawn exactly as the oracles
/// draw them.
pub fn mc_sample_powers(cp: &ChannelParams, batch: &SampleBatch) -> [McEstimate; 3] {
    #[derive(Default)]
    struct Acc([Moments; 3]);
    impl Accumulator for Acc {
        fn merge(&mut self, other: &Self) {
            for (a, b) in self.0.iter_mut().zip(&other.0) {
                a.merge(b);
            }
        }
    }
    let acc = batch.run(|rng, acc: &mut Acc| {
        let x = complex_gaussian(rng, cp.p());
        let s = complex_gaussian(rng, cp.q());
        let z = complex_gaussian(rng, cp.n());
        acc.0[0].push(x.norm_sqr());
        acc.0[1].push(s.norm_sqr());
        acc.0[2].push(z.norm_sqr());
    });
    [acc.0[0].estimate(), acc.0[1].estimate(), acc.0[2].estimate()]
}

/// Empirical `E|U − β(Δφ)·Y|²` with `U = X + αS`, `Y = X + S·e^{jφ} + Z`
/// and `X`, `S`, `Z` independent. The receiver gain is
/// `β = (p + α·cos Δφ·q)/(p + q + n)`.
pub fn mc_llse_error(
    cp: &ChannelParams,
    alpha: f64,
    delta_phi: f64,
    phi: f64,
    batch: &SampleBatch,
) -> Result<McEstimate> {
    if batch.count < MIN_LLSE_SAMPLES {
        return Err(Error::domain(format!(
            "LLSE oracle needs at least {MIN_LLSE_SAMPLES} samples, got {}",
            batch.count
        )));
    }
    let beta = (cp.p() + alpha * delta_phi.cos() * cp.q()) / (cp.p() + cp.q() + cp.n());
    let rot = Complex64::from_polar(1.0, phi);
    let acc = batch.run(|rng, acc: &mut Moments| {
        let x = complex_gaussian(rng, cp.p());
        let s = complex_gaussian(rng, cp.q());
        let z = complex_gaussian(rng, cp.n());
        let u = x + s * alpha;
        let y = x + s * rot + z;
        acc.push((u - y * beta).norm_sqr());
    });
    Ok(acc.estimate())
}

/// Statistics of one phase-error estimator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorSummary {
    pub mean: f64,
    pub std_dev: f64,
    /// `Pr(error > Δφ)`.
    pub tail: f64,
    pub tail_std_err: f64,
    /// `Pr(|error| > Δφ)`.
    pub abs_tail: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseEstimatorStats {
    pub trials: u64,
    pub tau: u64,
    pub delta_phi: f64,
    /// `Im(e^{−jφ}·Ση_i) / (τ·g·q)`, the first-order error.
    pub linearized: ErrorSummary,
    /// `arg(e^{−jφ}·ΣT_i)`, the error of the actual correlator angle.
    pub exact: ErrorSummary,
}

#[derive(Default)]
struct PhaseAcc {
    lin: Moments,
    exact: Moments,
    lin_tail: u64,
    exact_tail: u64,
    lin_abs_tail: u64,
    exact_abs_tail: u64,
}

impl Accumulator for PhaseAcc {
    fn merge(&mut self, o: &Self) {
        self.lin.merge(&o.lin);
        self.exact.merge(&o.exact);
        self.lin_tail += o.lin_tail;
        self.exact_tail += o.exact_tail;
        self.lin_abs_tail += o.lin_abs_tail;
        self.exact_abs_tail += o.exact_abs_tail;
    }
}

fn summary(m: &Moments, tail: u64, abs_tail: u64) -> ErrorSummary {
    let e = m.estimate();
    let n = m.n as f64;
    let p = tail as f64 / n;
    ErrorSummary {
        mean: e.mean,
        std_dev: e.std_dev,
        tail: p,
        tail_std_err: (p * (1.0 - p) / n).sqrt(),
        abs_tail: abs_tail as f64 / n,
    }
}

/// Simulates the dead-zone correlator: for each trial, `τ` samples of
/// `T_i = (g·S_i + ζ_i)*·(S_i·e^{jφ} + N_i)` are summed and both the
/// linearized and the exact phase errors are recorded.
pub fn mc_phase_estimator(
    cp: &ChannelParams,
    qm: &crate::feedback::QuantizerModel,
    tau: u64,
    true_phi: f64,
    delta_phi: f64,
    batch: &SampleBatch,
) -> Result<PhaseEstimatorStats> {
    if tau == 0 {
        return Err(Error::domain("phase estimator needs τ >= 1"));
    }
    if batch.count == 0 {
        return Err(Error::domain("phase estimator needs at least one trial"));
    }
    let g = qm.gain;
    let derot = Complex64::from_polar(1.0, -true_phi);
    let rot = derot.conj();
    let scale = 1.0 / (tau as f64 * g * cp.q());
    let acc = batch.run(|rng, acc: &mut PhaseAcc| {
        let mut sum_t = Complex64::new(0.0, 0.0);
        let mut sum_eta = Complex64::new(0.0, 0.0);
        for _ in 0..tau {
            let s = complex_gaussian(rng, cp.q());
            let zeta = complex_gaussian(rng, qm.noise_var);
            let noise = complex_gaussian(rng, cp.n());
            let t = (s * g + zeta).conj() * (s * rot + noise);
            sum_t += t;
            sum_eta += t - rot * (g * s.norm_sqr());
        }
        let lin = (sum_eta * derot).im * scale;
        let exact = (sum_t * derot).arg();
        acc.lin.push(lin);
        acc.exact.push(exact);
        acc.lin_tail += u64::from(lin > delta_phi);
        acc.exact_tail += u64::from(exact > delta_phi);
        acc.lin_abs_tail += u64::from(lin.abs() > delta_phi);
        acc.exact_abs_tail += u64::from(exact.abs() > delta_phi);
    });
    Ok(PhaseEstimatorStats {
        trials: batch.count,
        tau,
        delta_phi,
        linearized: summary(&acc.lin, acc.lin_tail, acc.lin_abs_tail),
        exact: summary(&acc.exact, acc.exact_tail, acc.exact_abs_tail),
    })
}

/// Fraction of Rayleigh fade draws `γ = σ·sqrt(−2 ln U)` with
/// `C_u(γ) < rate`. The bound is evaluated directly from its formula.
pub fn mc_outage(cp: &ChannelParams, sigma2: f64, rate: f64, batch: &SampleBatch) -> Result<McEstimate> {
    if batch.count < MIN_OUTAGE_SAMPLES {
        return Err(Error::domain(format!(
            "outage oracle needs at least {MIN_OUTAGE_SAMPLES} samples, got {}",
            batch.count
        )));
    }
    if !(sigma2 > 0.0) {
        return Err(Error::domain(format!("Rayleigh parameter must be positive, got {sigma2}")));
    }
    let sigma = sigma2.sqrt();
    let (p, q, n) = (cp.p(), cp.q(), cp.n());
    let acc = batch.run(|rng, acc: &mut Moments| {
        // 1 − U lies in (0, 1], keeping the log finite.
        let u: f64 = 1.0 - rng.random::<f64>();
        let gamma = sigma * (-2.0 * u.ln()).sqrt();
        let g2q = gamma * gamma * q;
        let bound = 0.5 * ((p + g2q + n).powi(2) / (4.0 * g2q * n)).log2();
        acc.push(if bound < rate { 1.0 } else { 0.0 });
    });
    Ok(acc.estimate())
}
