//! Scalar Adam learner in its numerically stable (discounted) form.
//!
//! Round `t` plays
//!
//! ```text
//! delta_t = -alpha_t * m_t / sqrt(q_t)
//! m_t = sum_{s<t} beta1^(t-1-s) g_s,   q_t = sum_{s<t} beta2^(t-1-s) g_s^2
//! ```
//!
//! clipped to the domain. There is no bias correction and no epsilon in the
//! denominator: the first gradient must be nonzero, which keeps `q_t > 0`.
//! This is the same update as FTRL on the losses `v_s = beta1^(-s) g_s` with
//! learning rate `eta_t = alpha_t p^(t-1) / sqrt(sum_s beta2^(-s) g_s^2)`,
//! but it never forms the exponentially growing `v_s`. See [`crate::oracle`]
//! for the literal FTRL form.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::{clip_to_domain, HyperParams};

/// Default number of raw gradients retained for the literal oracles.
pub const DEFAULT_ORACLE_HORIZON: usize = 60;

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct LearnerState {
    /// Number of gradients ingested so far (`g_0 .. g_{t-1}`).
    pub t: usize,
    /// `sum_{s<t} beta1^(t-1-s) g_s`
    pub m: f64,
    /// `sum_{s<t} beta2^(t-1-s) g_s^2`
    pub q: f64,
    /// `max_{s<t} beta1^(t-1-s) |g_s|`
    pub max_v: f64,
    /// `max |delta_s|` over the updates emitted so far.
    pub d_max: f64,
    /// Index of the last emitted update (0 before the first proposal).
    pub last_round: usize,
    /// Raw gradients, kept while within the oracle horizon.
    pub raw: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UpdateOutcome {
    pub t: usize,
    pub alpha: f64,
    pub delta_bar: f64,
    pub delta: f64,
    pub clipped: bool,
    /// `alpha_t beta1^(t-1) / sqrt(q_t)`, i.e. `eta_t` without the
    /// `beta1^(t-1)` factor that the undiscounted losses carry.
    pub eta_anchored: f64,
}

/// One scalar learner. A multi-coordinate run is a collection of these.
#[derive(Debug, Clone)]
pub struct Learner {
    params: HyperParams,
    state: LearnerState,
    horizon: usize,
}

impl Learner {
    pub fn new(params: HyperParams) -> Self {
        Self::with_horizon(params, DEFAULT_ORACLE_HORIZON)
    }

    pub fn with_horizon(params: HyperParams, horizon: usize) -> Self {
        Self {
            params,
            state: LearnerState::default(),
            horizon,
        }
    }

    pub fn params(&self) -> &HyperParams {
        &self.params
    }

    pub fn state(&self) -> &LearnerState {
        &self.state
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// Absorbs `g_t` where `t = state.t`.
    pub fn ingest(&mut self, g: f64) -> Result<()> {
        let st = &mut self.state;
        if !g.is_finite() {
            return Err(Error::NonFiniteGradient { t: st.t, value: g });
        }
        if st.t == 0 && g == 0.0 {
            return Err(Error::InvalidFirstGradient);
        }
        let (b1, b2) = (self.params.beta1(), self.params.beta2());
        st.m = b1 * st.m + g;
        st.q = b2 * st.q + g * g;
        st.max_v = (b1 * st.max_v).max(g.abs());
        if st.raw.len() <= self.horizon {
            st.raw.push(g);
        }
        st.t += 1;
        Ok(())
    }

    /// Update for round `t = state.t`, computed from `g_0 .. g_{t-1}`.
    pub fn propose(&mut self) -> Result<UpdateOutcome> {
        let t = self.state.t;
        if t == 0 {
            return Err(Error::DegenerateState(
                "no gradient ingested; receive g0 first".into(),
            ));
        }
        let q = self.state.q;
        if !(q > 0.0) {
            return Err(Error::DegenerateState(format!("second moment is {q}")));
        }
        let alpha = self.params.alpha_at(t)?;
        let root = q.sqrt();
        let delta_bar = -alpha * self.state.m / root;
        let delta = clip_to_domain(delta_bar, self.params.domain());
        let clipped = delta != delta_bar;
        let eta_anchored = alpha * self.params.beta1().powi((t - 1) as i32) / root;

        self.state.d_max = self.state.d_max.max(delta.abs());
        self.state.last_round = self.state.last_round.max(t);
        Ok(UpdateOutcome {
            t,
            alpha,
            delta_bar,
            delta,
            clipped,
            eta_anchored,
        })
    }

    /// Raw gradients retained so far (at most `horizon + 1` of them).
    pub fn raw_gradients(&self) -> &[f64] {
        &self.state.raw
    }
}

/// Replays `gradients` through the state recurrences.
pub fn replay(params: &HyperParams, gradients: &[f64]) -> Result<LearnerState> {
    let mut learner = Learner::with_horizon(params.clone(), gradients.len());
    for &g in gradients {
        learner.ingest(g)?;
    }
    Ok(learner.state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{AlphaSchedule, Domain};

    fn half_quarter() -> HyperParams {
        HyperParams::new(0.5, 0.25, Domain::Unbounded, AlphaSchedule::Constant(1.0)).unwrap()
    }

    #[test]
    fn ingest_recurrences() {
        let mut l = Learner::new(half_quarter());
        l.ingest(2.0).unwrap();
        let s = l.state();
        assert_eq!((s.m, s.q, s.max_v), (2.0, 4.0, 2.0));

        l.ingest(1.0).unwrap();
        let s = l.state();
        assert_eq!((s.m, s.q, s.max_v), (2.0, 2.0, 1.0));

        l.ingest(0.0).unwrap();
        let s = l.state();
        assert_eq!((s.m, s.q, s.max_v, s.t), (1.0, 0.5, 0.5, 3));
    }

    #[test]
    fn first_gradient_must_be_nonzero() {
        let mut l = Learner::new(half_quarter());
        assert!(matches!(l.ingest(0.0), Err(Error::InvalidFirstGradient)));
        assert!(matches!(
            l.ingest(f64::NAN),
            Err(Error::NonFiniteGradient { .. })
        ));
        assert!(matches!(
            l.ingest(f64::INFINITY),
            Err(Error::NonFiniteGradient { .. })
        ));
        assert_eq!(l.state().t, 0);
    }

    #[test]
    fn propose_before_ingest_is_degenerate() {
        let mut l = Learner::new(half_quarter());
        assert!(matches!(l.propose(), Err(Error::DegenerateState(_))));
    }

    #[test]
    fn adam_form_examples() {
        let mut l = Learner::new(half_quarter());
        l.ingest(2.0).unwrap();
        let u1 = l.propose().unwrap();
        assert_eq!(u1.delta_bar, -1.0);
        assert_eq!(u1.delta, -1.0);
        assert!(!u1.clipped);

        l.ingest(1.0).unwrap();
        let u2 = l.propose().unwrap();
        assert!((u2.delta_bar + 2f64.sqrt()).abs() < 1e-15);
        assert!((l.state().d_max - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn single_gradient_moves_by_alpha_against_its_sign() {
        for (alpha, g) in [(0.7, 3.0), (2.0, -0.01), (1e-3, 1e5)] {
            let hp = HyperParams::new(0.9, 0.99, Domain::Unbounded, AlphaSchedule::Constant(alpha))
                .unwrap();
            let mut l = Learner::new(hp);
            l.ingest(g).unwrap();
            let u = l.propose().unwrap();
            assert!((u.delta_bar + alpha * g.signum()).abs() <= 1e-15 * alpha);
        }
    }

    #[test]
    fn clipping_flag_and_boundary_tie() {
        let hp = HyperParams::new(
            0.5,
            0.25,
            Domain::Bounded(1.0),
            AlphaSchedule::Constant(1.0),
        )
        .unwrap();
        let mut l = Learner::new(hp.clone());
        l.ingest(2.0).unwrap();
        let u = l.propose().unwrap();
        // |delta_bar| == D exactly: emitted unchanged.
        assert_eq!(u.delta, -1.0);
        assert!(!u.clipped);

        l.ingest(1.0).unwrap();
        let u = l.propose().unwrap();
        assert!(u.clipped);
        assert_eq!(u.delta, -1.0);
        assert!(l.state().d_max <= 1.0);
    }

    #[test]
    fn eta_anchored_matches_delta_bar() {
        let mut l = Learner::new(half_quarter());
        for g in [2.0, -1.0, 0.5, 3.0] {
            l.ingest(g).unwrap();
            let u = l.propose().unwrap();
            let sum_v = l.state().m / 0.5f64.powi((u.t - 1) as i32);
            let rebuilt = -u.eta_anchored * sum_v;
            assert!((rebuilt - u.delta_bar).abs() <= 1e-12 * u.delta_bar.abs());
        }
    }

    #[test]
    fn raw_log_is_capped_at_horizon() {
        let mut l = Learner::with_horizon(half_quarter(), 3);
        for g in [1.0; 10] {
            l.ingest(g).unwrap();
        }
        assert_eq!(l.raw_gradients().len(), 4);
        assert_eq!(l.state().t, 10);
    }
}
