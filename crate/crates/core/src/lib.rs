//! Adam as follow-the-regularized-leader on one-dimensional linear losses.
//!
//! The crate runs the scalar Adam update (without bias correction or
//! epsilon), tracks its `beta1`-discounted regret, evaluates the matching
//! regret upper bounds for `beta1 <= sqrt(beta2)` and `beta1 >= sqrt(beta2)`,
//! and reproduces the adversarial constructions showing those bounds are
//! tight and that `beta1 = sqrt(beta2)` can lose to a non-oblivious
//! adversary.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adversaries;
pub mod bounds;
pub mod error;
pub mod harness;
pub mod learner;
pub mod oracle;
pub mod params;
pub mod regret;

pub use error::{Error, Result};
pub use learner::{Learner, LearnerState, UpdateOutcome};
pub use params::{clip_to_domain, AlphaSchedule, Domain, HyperParams};
