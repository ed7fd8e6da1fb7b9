//! Hyperparameters of the scalar Adam/FTRL learner.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack used when deciding which side of `p = 1` a parameter pair lies on.
///
/// `beta2 = beta1 * beta1` rarely yields `beta1 / sqrt(beta2) == 1.0` exactly,
/// so both regimes accept ratios within this distance of one.
pub const RATIO_TOLERANCE: f64 = 1e-12;

/// Decision space of the online learner.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Domain {
    /// `[-D, D]`
    Bounded(f64),
    /// The whole real line.
    Unbounded,
}

impl Domain {
    pub fn half_width(&self) -> Option<f64> {
        match *self {
            Domain::Bounded(d) => Some(d),
            Domain::Unbounded => None,
        }
    }

    pub fn is_bounded(&self) -> bool {
        matches!(self, Domain::Bounded(_))
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Domain::Bounded(d) if !(d.is_finite() && d > 0.0) => Err(Error::InvalidParam(format!(
                "domain half-width must be a positive finite number, got {d}"
            ))),
            _ => Ok(()),
        }
    }
}

/// Projection onto `[-D, D]`, i.e. `x * min(D / |x|, 1)`.
///
/// A value exactly on the boundary is returned unchanged.
pub fn clip_to_domain(x: f64, domain: Domain) -> f64 {
    match domain {
        Domain::Bounded(d) if x.abs() > d => d.copysign(x),
        _ => x,
    }
}

/// Per-round step sizes `alpha_t`, `t >= 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum AlphaSchedule {
    Constant(f64),
    /// `alpha_t = alpha / ratio^(t-1)`; `ratio >= 1` keeps it non-increasing.
    ExponentialDecay {
        alpha: f64,
        ratio: f64,
    },
    /// `alphas[t-1]` is `alpha_t`.
    Explicit(Vec<f64>),
}

impl AlphaSchedule {
    /// The schedule that keeps the FTRL learning rate non-increasing when
    /// `p >= 1`: `alpha_t = alpha / p^(t-1)`.
    pub fn decaying_for(alpha: f64, params_ratio: f64) -> Self {
        AlphaSchedule::ExponentialDecay {
            alpha,
            ratio: params_ratio,
        }
    }

    pub fn alpha_at(&self, t: usize) -> Result<f64> {
        if t == 0 {
            return Err(Error::InvalidParam("alpha_t is defined for t >= 1".into()));
        }
        match self {
            AlphaSchedule::Constant(a) => Ok(*a),
            AlphaSchedule::ExponentialDecay { alpha, ratio } => {
                Ok(alpha / ratio.powi((t - 1) as i32))
            }
            AlphaSchedule::Explicit(values) => {
                values.get(t - 1).copied().ok_or(Error::ScheduleExhausted {
                    t,
                    len: values.len(),
                })
            }
        }
    }

    /// Base constant `alpha` for the parametric kinds.
    pub fn base(&self) -> Option<f64> {
        match self {
            AlphaSchedule::Constant(a) => Some(*a),
            AlphaSchedule::ExponentialDecay { alpha, .. } => Some(*alpha),
            AlphaSchedule::Explicit(_) => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |a: f64| a.is_finite() && a > 0.0;
        match self {
            AlphaSchedule::Constant(a) if !positive(*a) => Err(Error::InvalidParam(format!(
                "alpha must be positive, got {a}"
            ))),
            AlphaSchedule::ExponentialDecay { alpha, ratio } => {
                if !positive(*alpha) {
                    return Err(Error::InvalidParam(format!(
                        "alpha must be positive, got {alpha}"
                    )));
                }
                if !(ratio.is_finite() && *ratio >= 1.0 - RATIO_TOLERANCE) {
                    return Err(Error::IncreasingSchedule(format!(
                        "exponential decay needs ratio >= 1, got {ratio}"
                    )));
                }
                Ok(())
            }
            AlphaSchedule::Explicit(values) => {
                if values.is_empty() {
                    return Err(Error::InvalidParam("explicit schedule is empty".into()));
                }
                if let Some(a) = values.iter().find(|a| !positive(**a)) {
                    return Err(Error::InvalidParam(format!(
                        "alpha must be positive, got {a}"
                    )));
                }
                if let Some(i) = values.windows(2).position(|w| w[1] > w[0]) {
                    return Err(Error::IncreasingSchedule(format!(
                        "alpha_{} = {} > alpha_{} = {}",
                        i + 2,
                        values[i + 1],
                        i + 1,
                        values[i]
                    )));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

/// `beta1`, `beta2`, the cached ratio `p = beta1 / sqrt(beta2)`, the domain
/// and the step-size schedule.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HyperParams {
    beta1: f64,
    beta2: f64,
    p: f64,
    domain: Domain,
    alpha: AlphaSchedule,
}

impl HyperParams {
    pub fn new(beta1: f64, beta2: f64, domain: Domain, alpha: AlphaSchedule) -> Result<Self> {
        for (name, b) in [("beta1", beta1), ("beta2", beta2)] {
            if !(b > 0.0 && b < 1.0) {
                return Err(Error::InvalidParam(format!(
                    "{name} must lie in (0, 1), got {b}"
                )));
            }
        }
        domain.validate()?;
        alpha.validate()?;
        Ok(Self {
            beta1,
            beta2,
            p: beta1 / beta2.sqrt(),
            domain,
            alpha,
        })
    }

    pub fn beta1(&self) -> f64 {
        self.beta1
    }

    pub fn beta2(&self) -> f64 {
        self.beta2
    }

    /// `beta1 / sqrt(beta2)`
    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn alpha(&self) -> &AlphaSchedule {
        &self.alpha
    }

    pub fn alpha_at(&self, t: usize) -> Result<f64> {
        self.alpha.alpha_at(t)
    }

    /// `p <= 1` up to [`RATIO_TOLERANCE`].
    pub fn ratio_at_most_one(&self) -> bool {
        self.p <= 1.0 + RATIO_TOLERANCE
    }

    /// `p >= 1` up to [`RATIO_TOLERANCE`].
    pub fn ratio_at_least_one(&self) -> bool {
        self.p >= 1.0 - RATIO_TOLERANCE
    }

    pub fn with_domain(mut self, domain: Domain) -> Result<Self> {
        domain.validate()?;
        self.domain = domain;
        Ok(self)
    }
}
