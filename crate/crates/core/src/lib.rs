//! Capacity bounds and achievable rates for a secondary transmitter that
//! knows the primary user's interference signal non-causally but not the
//! phase or fade amplitude of the interference channel.
//!
//! * [`model`] holds channel parameters and the two baseline rates.
//! * [`bounds`] has the phase-uncertainty upper bound, its fade
//!   generalization and the Rayleigh outage analysis.
//! * [`achievable`] computes the dirty-paper rate under bounded phase
//!   error and the sectoring scheme.
//! * [`feedback`] analyses the phase-training protocol (contiguous and
//!   bursty modes).
//! * [`mc_oracle`] contains seeded Monte Carlo estimators used to check
//!   the closed forms.
//!
//! All rates are in bits per complex symbol.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod achievable;
pub mod bounds;
pub mod error;
pub mod feedback;
pub mod mc_oracle;
pub mod model;
pub mod numeric;

pub use error::{Error, Result};
pub use model::{ChannelParams, FadeModel, RateFlag, RateKind, RateReport};
