//! Regret upper bounds, evaluated from the discounted trace statistics.
//!
//! All `*_discounted` bounds are multiplied through by `beta1^T` so they
//! compare directly against [`crate::regret::RegretLedger::discounted`].
//! Sums written over `t = 0 ..= T` are the learner statistics after `g_T`
//! has been ingested and before `delta_{T+1}` is proposed:
//!
//! ```text
//! q      = sum_{t=0}^T beta2^(T-t) g_t^2
//! max_v  = max_{0<=t<=T} beta1^(T-t) |g_t|
//! d_max  = max_{1<=t<=T} |delta_t|
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learner::Learner;
use crate::params::{AlphaSchedule, HyperParams, RATIO_TOLERANCE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum BoundKind {
    #[serde(rename = "theorem1")]
    Theorem1,
    #[serde(rename = "corollary1")]
    Corollary1,
    #[serde(rename = "theorem3")]
    Theorem3,
    #[serde(rename = "B")]
    BFormula,
}

impl BoundKind {
    pub fn name(&self) -> &'static str {
        match self {
            BoundKind::Theorem1 => "theorem1",
            BoundKind::Corollary1 => "corollary1",
            BoundKind::Theorem3 => "theorem3",
            BoundKind::BFormula => "B",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    Discounted,
    Undiscounted,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundReport {
    pub kind: BoundKind,
    pub total: f64,
    /// Part proportional to `u^2`.
    pub term_comparator: f64,
    /// Part proportional to `alpha` (the gradient-variance radical).
    pub term_variance: f64,
    /// Part proportional to the largest loss.
    pub term_max: f64,
    pub scale: Scale,
}

impl BoundReport {
    fn new(kind: BoundKind, scale: Scale, comparator: f64, variance: f64, max: f64) -> Self {
        Self {
            kind,
            total: comparator + variance + max,
            term_comparator: comparator,
            term_variance: variance,
            term_max: max,
            scale,
        }
    }
}

/// Discounted statistics of a trace after round `rounds`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceStats {
    pub rounds: usize,
    pub q: f64,
    pub max_v: f64,
    pub d_max: f64,
}

impl TraceStats {
    /// Reads the statistics of a learner that has ingested `g_0 ..= g_T`
    /// and emitted `delta_1 ..= delta_T`.
    pub fn from_learner(learner: &Learner) -> Result<Self> {
        let st = learner.state();
        if st.t == 0 {
            return Err(Error::DegenerateState("no gradient ingested".into()));
        }
        let rounds = st.t - 1;
        if st.last_round > rounds {
            return Err(Error::DegenerateState(format!(
                "delta_{} already proposed; statistics for round {rounds} are gone",
                st.last_round
            )));
        }
        Ok(Self {
            rounds,
            q: st.q,
            max_v: st.max_v,
            d_max: st.d_max,
        })
    }

    /// Same statistics with `D_T` replaced by an a-priori cap such as the
    /// domain half-width. Bounds built from these no longer depend on the
    /// realized updates, only on the gradient sequence.
    pub fn with_range_cap(mut self, cap: f64) -> Self {
        self.d_max = cap;
        self
    }
}

fn check_horizon(stats: &TraceStats) -> Result<usize> {
    if stats.rounds < 2 {
        return Err(Error::WrongRegime(format!(
            "regret bounds need T >= 2, got T = {}",
            stats.rounds
        )));
    }
    if !(stats.q > 0.0) {
        return Err(Error::DegenerateState(format!("q = {}", stats.q)));
    }
    Ok(stats.rounds)
}

fn require_ratio_at_most_one(params: &HyperParams) -> Result<()> {
    if params.ratio_at_most_one() {
        Ok(())
    } else {
        Err(Error::WrongRegime(format!(
            "needs beta1 <= sqrt(beta2), got p = {}",
            params.p()
        )))
    }
}

/// General bound for `p <= 1` and any non-increasing `alpha_t`:
///
/// ```text
/// u^2 / alpha_{T+1} * sqrt(q)
///   + sqrt(6 beta2) / (2 beta1) * max_{1<=t<=T} alpha_t p^(T-t) * sqrt(q)
///   + 7 D_T max_v
/// ```
///
/// The middle term is `beta1^T max_t (alpha_t p^-t) sqrt(sum beta2^-t g_t^2)`
/// with `beta1^T beta2^(-T/2) = p^T` pulled inside the maximum.
pub fn bound_theorem1_discounted(
    params: &HyperParams,
    stats: &TraceStats,
    u: f64,
) -> Result<BoundReport> {
    require_ratio_at_most_one(params)?;
    params.alpha().validate()?;
    let big_t = check_horizon(stats)?;
    let p = params.p();
    let mut weighted_max: f64 = 0.0;
    for t in 1..=big_t {
        weighted_max = (p * weighted_max).max(params.alpha_at(t)?);
    }
    let root = stats.q.sqrt();
    let coef = (6.0 * params.beta2()).sqrt() / (2.0 * params.beta1());
    Ok(BoundReport::new(
        BoundKind::Theorem1,
        Scale::Discounted,
        u * u / params.alpha_at(big_t + 1)? * root,
        coef * weighted_max * root,
        7.0 * stats.d_max * stats.max_v,
    ))
}

/// Constant-`alpha` bound for `p <= 1`:
/// `(u^2 / alpha + alpha sqrt(6 beta2) / (2 beta1)) sqrt(q) + 7 D_T max_v`.
pub fn bound_corollary1_discounted(
    params: &HyperParams,
    stats: &TraceStats,
    u: f64,
) -> Result<BoundReport> {
    require_ratio_at_most_one(params)?;
    let alpha = match params.alpha() {
        AlphaSchedule::Constant(a) => *a,
        other => {
            return Err(Error::WrongRegime(format!(
                "corollary bound needs a constant alpha, got {other:?}"
            )))
        }
    };
    check_horizon(stats)?;
    let root = stats.q.sqrt();
    let coef = (6.0 * params.beta2()).sqrt() / (2.0 * params.beta1());
    Ok(BoundReport::new(
        BoundKind::Corollary1,
        Scale::Discounted,
        u * u / alpha * root,
        alpha * coef * root,
        7.0 * stats.d_max * stats.max_v,
    ))
}

/// Bound for `p >= 1` with `alpha_t = alpha / p^(t-1)`:
/// `(u^2 / alpha + alpha sqrt(6) / 2) sqrt(sum_t beta1^(2T) beta2^(-t) g_t^2) + 7 D_T max_v`.
///
/// The radical equals `p^T sqrt(q)` and is evaluated in log space.
pub fn bound_theorem3_discounted(
    params: &HyperParams,
    stats: &TraceStats,
    u: f64,
) -> Result<BoundReport> {
    if !params.ratio_at_least_one() {
        return Err(Error::WrongRegime(format!(
            "needs beta1 >= sqrt(beta2), got p = {}",
            params.p()
        )));
    }
    let alpha = match params.alpha() {
        AlphaSchedule::ExponentialDecay { alpha, ratio }
            if (ratio - params.p()).abs() <= RATIO_TOLERANCE * params.p() =>
        {
            *alpha
        }
        AlphaSchedule::Constant(a) if (params.p() - 1.0).abs() <= RATIO_TOLERANCE => *a,
        other => {
            return Err(Error::WrongRegime(format!(
                "needs alpha_t = alpha / p^(t-1) with p = {}, got {other:?}",
                params.p()
            )))
        }
    };
    let big_t = check_horizon(stats)?;
    let radical = (big_t as f64 * params.p().ln() + 0.5 * stats.q.ln()).exp();
    Ok(BoundReport::new(
        BoundKind::Theorem3,
        Scale::Discounted,
        u * u / alpha * radical,
        alpha * 6f64.sqrt() / 2.0 * radical,
        7.0 * stats.d_max * stats.max_v,
    ))
}

/// Order-level bound in undiscounted scale, written with the losses
/// `v_0 ..= v_T` directly:
/// `(u^2 / alpha + alpha / p) p^(-T) sqrt(sum_t (p^t v_t)^2) + D max_t |v_t|`.
pub fn bound_b(
    p: f64,
    losses: &[f64],
    u: f64,
    alpha: f64,
    d: f64,
    horizon: usize,
) -> Result<BoundReport> {
    if !(p > 0.0 && p <= 1.0 + RATIO_TOLERANCE) {
        return Err(Error::WrongRegime(format!("needs 0 < p <= 1, got {p}")));
    }
    if !(alpha > 0.0 && d > 0.0) {
        return Err(Error::InvalidParam(format!(
            "alpha and D must be positive, got alpha = {alpha}, D = {d}"
        )));
    }
    let big_t = match losses.len() {
        0 => return Err(Error::InvalidParam("no losses supplied".into())),
        n => n - 1,
    };
    if big_t > horizon {
        return Err(Error::OracleOverflow { t: big_t, horizon });
    }
    let energy: f64 = losses
        .iter()
        .enumerate()
        .map(|(t, v)| {
            let w = p.powi(t as i32) * v;
            w * w
        })
        .sum();
    let radical = energy.sqrt() / p.powi(big_t as i32);
    let largest = losses.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(BoundReport::new(
        BoundKind::BFormula,
        Scale::Undiscounted,
        u * u / alpha * radical,
        alpha / p * radical,
        d * largest,
    ))
}
