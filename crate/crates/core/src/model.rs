//! Channel parameters, fade distributions and the two baseline rates.
//!
//! The channel is `Y = X + γ·S·e^{jθ} + Z` with secondary symbol power `p`,
//! interference power `q` and noise power `n`, all linear. A complex
//! Gaussian of power `p` has variance `p/2` on each real axis.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Converts decibels to a linear power ratio.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

/// Secondary power, interference power and noise power on a linear scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    p: f64,
    q: f64,
    n: f64,
}

impl ChannelParams {
    pub fn new(p: f64, q: f64, n: f64) -> Result<Self> {
        for (name, v) in [("p", p), ("q", q), ("n", n)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::domain(format!(
                    "channel parameter {name} must be positive and finite, got {v}"
                )));
            }
        }
        Ok(Self { p, q, n })
    }

    /// Unit noise power.
    pub fn with_unit_noise(p: f64, q: f64) -> Result<Self> {
        Self::new(p, q, 1.0)
    }

    pub fn from_db(p_db: f64, q_db: f64, n_db: f64) -> Result<Self> {
        Self::new(db_to_linear(p_db), db_to_linear(q_db), db_to_linear(n_db))
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn n(&self) -> f64 {
        self.n
    }

    pub fn p_db(&self) -> f64 {
        linear_to_db(self.p)
    }

    pub fn q_db(&self) -> f64 {
        linear_to_db(self.q)
    }

    pub fn n_db(&self) -> f64 {
        linear_to_db(self.n)
    }

    /// Rescales to unit noise: `p/n`, `q/n`, `1`.
    pub fn normalized(&self) -> Self {
        Self {
            p: self.p / self.n,
            q: self.q / self.n,
            n: 1.0,
        }
    }

    pub fn with_p(&self, p: f64) -> Result<Self> {
        Self::new(p, self.q, self.n)
    }

    pub fn with_q(&self, q: f64) -> Result<Self> {
        Self::new(self.p, q, self.n)
    }

    pub(crate) fn require_unit_noise(&self, op: &str) -> Result<()> {
        if self.n != 1.0 {
            return Err(Error::domain(format!(
                "{op} assumes unit noise power (got n = {}); rescale with ChannelParams::normalized",
                self.n
            )));
        }
        Ok(())
    }
}

/// Distribution of the interference fade amplitude `γ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FadeModel {
    Fixed { gamma: f64 },
    /// Density `(γ/σ²)·exp(−γ²/(2σ²))` on `γ ≥ 0`.
    Rayleigh { sigma2: f64 },
}

impl FadeModel {
    pub fn fixed(gamma: f64) -> Result<Self> {
        if !(gamma >= 0.0 && gamma.is_finite()) {
            return Err(Error::domain(format!(
                "fade amplitude must be finite and >= 0, got {gamma}"
            )));
        }
        Ok(FadeModel::Fixed { gamma })
    }

    pub fn rayleigh(sigma2: f64) -> Result<Self> {
        if !(sigma2 > 0.0 && sigma2.is_finite()) {
            return Err(Error::domain(format!(
                "Rayleigh parameter must be positive, got {sigma2}"
            )));
        }
        Ok(FadeModel::Rayleigh { sigma2 })
    }

    /// Probability density at `gamma`; a point mass has no density and
    /// yields 0 everywhere.
    pub fn pdf(&self, gamma: f64) -> f64 {
        match *self {
            FadeModel::Fixed { .. } => 0.0,
            FadeModel::Rayleigh { sigma2 } => {
                if gamma < 0.0 {
                    0.0
                } else {
                    gamma / sigma2 * (-gamma * gamma / (2.0 * sigma2)).exp()
                }
            }
        }
    }

    /// `Pr(γ > gamma)`.
    pub fn survival(&self, gamma: f64) -> f64 {
        match *self {
            FadeModel::Fixed { gamma: g } => {
                if g > gamma {
                    1.0
                } else {
                    0.0
                }
            }
            FadeModel::Rayleigh { sigma2 } => {
                if gamma <= 0.0 {
                    1.0
                } else {
                    (-gamma * gamma / (2.0 * sigma2)).exp()
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateKind {
    UpperBound,
    Achievable,
    Baseline,
    Effective,
}

/// Qualifiers attached to a [`RateReport`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateFlag {
    /// No finite rate satisfies the request (reported rate is +∞).
    Unbounded,
    /// No candidate plan was feasible; the reported rate is 0.
    Infeasible,
    /// The raw `log(P/Ē)` objective fell below the treat-as-noise rate and
    /// the report was floored at it.
    FlooredAtTreatAsNoise,
    /// The treat-as-noise rate (no training, no phase knowledge) beats the
    /// reported protocol rate.
    FallbackBetter,
}

/// A computed rate with the inputs and optimized variables that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub rate: f64,
    pub kind: RateKind,
    pub params: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub flags: BTreeSet<RateFlag>,
}

impl RateReport {
    pub fn new(rate: f64, kind: RateKind) -> Self {
        Self {
            rate,
            kind,
            params: BTreeMap::new(),
            flags: BTreeSet::new(),
        }
    }

    pub fn with_channel(mut self, cp: &ChannelParams) -> Self {
        self.params.insert("p".into(), cp.p);
        self.params.insert("q".into(), cp.q);
        self.params.insert("n".into(), cp.n);
        self
    }

    pub fn param(mut self, key: &str, value: f64) -> Self {
        self.params.insert(key.to_owned(), value);
        self
    }

    pub fn flag(mut self, flag: RateFlag) -> Self {
        self.flags.insert(flag);
        self
    }

    pub fn has_flag(&self, flag: RateFlag) -> bool {
        self.flags.contains(&flag)
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        self.params.get(key).copied()
    }
}

/// Rate when the interference is treated as Gaussian noise of power `γ²q`.
pub fn rate_ignore_interference(cp: &ChannelParams, gamma: f64) -> Result<f64> {
    if !(gamma >= 0.0 && gamma.is_finite()) {
        return Err(Error::domain(format!(
            "fade amplitude must be finite and >= 0, got {gamma}"
        )));
    }
    Ok((1.0 + cp.p / (cp.n + gamma * gamma * cp.q)).log2())
}

/// Interference-free capacity `log2(1 + p/n)`; also the dirty-paper rate
/// with perfect interference knowledge.
pub fn rate_no_interference(cp: &ChannelParams) -> f64 {
    (1.0 + cp.p / cp.n).log2()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cp(p: f64, q: f64) -> ChannelParams {
        ChannelParams::with_unit_noise(p, q).unwrap()
    }

    #[test]
    fn ignore_interference_examples() {
        let r = rate_ignore_interference(&cp(10.0, 10.0), 1.0).unwrap();
        assert!((r - (1.0f64 + 10.0 / 11.0).log2()).abs() < 1e-15);
        assert!((r - 0.9329).abs() < 1e-4);

        let r = rate_ignore_interference(&cp(10.0, 123.0), 0.0).unwrap();
        assert!((r - 11f64.log2()).abs() < 1e-15);
        assert!((r - 3.4594).abs() < 1e-4);

        let r = rate_ignore_interference(&cp(10.0, 10.0), 2.0).unwrap();
        assert!((r - (1.0f64 + 10.0 / 41.0).log2()).abs() < 1e-15);
        assert!((r - 0.3149).abs() < 1e-4);
    }

    #[test]
    fn no_interference_examples() {
        assert!((rate_no_interference(&cp(10.0, 1.0)) - 3.4594).abs() < 1e-4);
        assert_eq!(rate_no_interference(&cp(1.0, 1.0)), 1.0);
        assert!(rate_no_interference(&cp(1e-300, 1.0)) < 1e-299);
    }

    #[test]
    fn invalid_inputs_are_domain_errors() {
        assert!(ChannelParams::new(0.0, 1.0, 1.0).is_err());
        assert!(ChannelParams::new(1.0, -1.0, 1.0).is_err());
        assert!(ChannelParams::new(1.0, 1.0, f64::NAN).is_err());
        assert!(ChannelParams::new(f64::INFINITY, 1.0, 1.0).is_err());
        assert!(rate_ignore_interference(&cp(1.0, 1.0), -0.5).is_err());
        assert!(FadeModel::rayleigh(0.0).is_err());
        assert!(FadeModel::fixed(-1.0).is_err());
    }

    #[test]
    fn ten_db_is_ten() {
        let c = ChannelParams::from_db(10.0, 10.0, 0.0).unwrap();
        assert!((c.p() - 10.0).abs() < 1e-12);
        assert!((c.q() - 10.0).abs() < 1e-12);
        assert_eq!(c.n(), 1.0);
    }

    #[test]
    fn rayleigh_density_integrates_to_one() {
        // Composite Simpson on [0, 12σ]; the tail beyond is < e^{-72}.
        for sigma2 in [0.25, 1.0, 4.0] {
            let f = FadeModel::rayleigh(sigma2).unwrap();
            let upper = 12.0 * sigma2.sqrt();
            let m = 20_000;
            let h = upper / m as f64;
            let mut acc = f.pdf(0.0) + f.pdf(upper);
            for i in 1..m {
                let w = if i % 2 == 1 { 4.0 } else { 2.0 };
                acc += w * f.pdf(i as f64 * h);
            }
            let integral = acc * h / 3.0;
            assert!((integral - 1.0).abs() < 1e-9, "sigma2={sigma2}: {integral}");
        }
    }

    #[test]
    fn rayleigh_survival_matches_density() {
        let f = FadeModel::rayleigh(2.0).unwrap();
        let (a, b) = (0.5, 1.5);
        let m = 2000;
        let h = (b - a) / m as f64;
        let mut acc = f.pdf(a) + f.pdf(b);
        for i in 1..m {
            acc += if i % 2 == 1 { 4.0 } else { 2.0 } * f.pdf(a + i as f64 * h);
        }
        let mass = acc * h / 3.0;
        assert!((mass - (f.survival(a) - f.survival(b))).abs() < 1e-12);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn db_round_trip(db in -60.0f64..60.0) {
                let back = linear_to_db(db_to_linear(db));
                prop_assert!((back - db).abs() <= 1e-12 * db.abs().max(1.0));
            }

            #[test]
            fn ignoring_never_beats_interference_free(
                p in 1e-3f64..1e4, q in 1e-3f64..1e4, n in 1e-2f64..1e2, gamma in 0.0f64..10.0,
            ) {
                let c = ChannelParams::new(p, q, n).unwrap();
                let ignore = rate_ignore_interference(&c, gamma).unwrap();
                let free = rate_no_interference(&c);
                prop_assert!(ignore <= free);
                if gamma == 0.0 {
                    prop_assert_eq!(ignore, free);
                } else {
                    prop_assert!(ignore < free);
                }
            }

            #[test]
            fn rates_increase_in_power(p in 1e-3f64..1e3, q in 1e-3f64..1e3, gamma in 0.0f64..5.0) {
                let lo = cp(p, q);
                let hi = cp(p * 1.01, q);
                prop_assert!(rate_no_interference(&hi) > rate_no_interference(&lo));
                prop_assert!(
                    rate_ignore_interference(&hi, gamma).unwrap()
                        > rate_ignore_interference(&lo, gamma).unwrap()
                );
            }
        }
    }

    #[test]
    fn rates_are_continuous_on_a_grid() {
        // Neighbouring grid points in p and γ never jump.
        let ps: Vec<f64> = (0..200).map(|i| 0.01 + i as f64 * 0.05).collect();
        for gamma in [0.0, 0.5, 1.0, 2.0] {
            for w in ps.windows(2) {
                let a = rate_ignore_interference(&cp(w[0], 3.0), gamma).unwrap();
                let b = rate_ignore_interference(&cp(w[1], 3.0), gamma).unwrap();
                assert!((b - a).abs() < 0.1);
                let a = rate_no_interference(&cp(w[0], 3.0));
                let b = rate_no_interference(&cp(w[1], 3.0));
                assert!((b - a).abs() < 0.1);
            }
        }
    }
}
