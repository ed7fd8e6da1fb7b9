//! Discounted and undiscounted regret, plus the per-round FTRL inequality
//! that the upper bounds are assembled from.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::oracle::{undiscounted_losses, FtrlOracle};
use crate::params::{Domain, HyperParams, RATIO_TOLERANCE};

/// Relative tolerance for analytic identities.
pub const IDENTITY_RTOL: f64 = 1e-9;
/// Absolute floor paired with [`IDENTITY_RTOL`].
pub const IDENTITY_ATOL: f64 = 1e-12;
/// One-sided slack for inequalities that are exact over the reals.
pub const INEQUALITY_SLACK: f64 = 1e-9;

/// `|a - b| <= rtol * max(|a|, |b|) + atol`
pub fn approx_eq(a: f64, b: f64, rtol: f64, atol: f64) -> bool {
    (a - b).abs() <= rtol * a.abs().max(b.abs()) + atol
}

/// Running `beta1`-discounted regret against a fixed comparator.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegretLedger {
    u: f64,
    r_disc: f64,
    rounds: usize,
    horizon: usize,
    log: Vec<(f64, f64)>,
}

impl RegretLedger {
    pub fn new(u: f64, domain: Domain, horizon: usize) -> Result<Self> {
        if !u.is_finite() {
            return Err(Error::InvalidParam(format!(
                "comparator must be finite, got {u}"
            )));
        }
        if let Some(d) = domain.half_width() {
            if u.abs() > d {
                return Err(Error::InvalidParam(format!(
                    "comparator {u} lies outside [-{d}, {d}]"
                )));
            }
        }
        Ok(Self {
            u,
            r_disc: 0.0,
            rounds: 0,
            horizon,
            log: Vec::new(),
        })
    }

    /// Adds round `rounds + 1`: `r <- beta1 * r + g * (delta - u)`, where
    /// `delta` was played before `g` was revealed.
    pub fn accumulate(&mut self, g: f64, delta: f64, beta1: f64) {
        self.r_disc = beta1 * self.r_disc + g * (delta - self.u);
        self.rounds += 1;
        if self.log.len() < self.horizon {
            self.log.push((g, delta));
        }
    }

    pub fn comparator(&self) -> f64 {
        self.u
    }

    /// `R_{T, beta1}(u)`
    pub fn discounted(&self) -> f64 {
        self.r_disc
    }

    pub fn rounds(&self) -> usize {
        self.rounds
    }

    /// `(g_t, delta_t)` for the rounds within the horizon.
    pub fn log(&self) -> &[(f64, f64)] {
        &self.log
    }

    /// Undiscounted regret `R_T(u)`, available while every round is logged.
    pub fn undiscounted(&self, beta1: f64) -> Result<f64> {
        if self.log.len() < self.rounds {
            return Err(Error::OracleOverflow {
                t: self.rounds,
                horizon: self.horizon,
            });
        }
        let (g, d): (Vec<f64>, Vec<f64>) = self.log.iter().copied().unzip();
        undiscounted_regret(&g, &d, self.u, beta1)
    }
}

/// `R_T(u) = sum_{t=1}^T beta1^(-t) g_t (delta_t - u)`.
///
/// `round_gradients[i]` and `deltas[i]` belong to round `t = i + 1`; `g_0`
/// carries no loss and is not passed here.
pub fn undiscounted_regret(
    round_gradients: &[f64],
    deltas: &[f64],
    u: f64,
    beta1: f64,
) -> Result<f64> {
    if round_gradients.len() != deltas.len() {
        return Err(Error::InvalidParam(format!(
            "{} gradients but {} updates",
            round_gradients.len(),
            deltas.len()
        )));
    }
    Ok(round_gradients
        .iter()
        .zip(deltas)
        .enumerate()
        .map(|(i, (g, d))| g / beta1.powi(i as i32 + 1) * (d - u))
        .sum())
}

/// Both sides of `F_t(D_t) - F_{t+1}(D_{t+1}) + v_t D_t <= min(eta_t v_t^2 / 2, 2 D_T |v_t|)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PerRoundCheck {
    pub t: usize,
    pub lhs: f64,
    pub stability_bound: f64,
    pub range_bound: f64,
    /// Largest magnitude among the terms, for the one-sided slack.
    pub scale: f64,
}

impl PerRoundCheck {
    pub fn holds(&self) -> bool {
        self.lhs <= self.stability_bound.min(self.range_bound) + INEQUALITY_SLACK * self.scale
    }
}

/// Evaluates the per-round inequality at round `t` from raw gradients
/// `g_0 .. g_n` (`t <= n`).
///
/// `D_T` is the largest `|delta_s|` over `s = 1 ..= t + 1`, since the
/// range argument compares `delta_t` against `delta_{t+1}`. Only unclipped
/// traces with a non-increasing learning rate are certified: if any of those
/// pre-clipping updates leaves the domain, or `alpha_t p^(t-1)` grows, the
/// check is refused.
pub fn per_round_ftrl_inequality(
    gradients: &[f64],
    params: &HyperParams,
    t: usize,
    horizon: usize,
) -> Result<PerRoundCheck> {
    if t == 0 || t >= gradients.len() {
        return Err(Error::InvalidParam(format!(
            "round {t} needs gradients g_0 ..= g_{t}, {} supplied",
            gradients.len()
        )));
    }
    if gradients[0] == 0.0 {
        return Err(Error::InvalidFirstGradient);
    }
    // The stability term needs eta_{s+1} <= eta_s, which holds when
    // alpha_{s+1} p^s <= alpha_s p^(s-1).
    let p = params.p();
    for s in 1..=t {
        let (now, next) = (params.alpha_at(s)?, params.alpha_at(s + 1)?);
        if next * p > now * (1.0 + RATIO_TOLERANCE) {
            return Err(Error::WrongRegime(format!(
                "alpha_t p^(t-1) increases at round {s} (p = {p}); the learning rate is not monotone"
            )));
        }
    }
    let losses = undiscounted_losses(&gradients[..=t], params.beta1());
    let oracle = FtrlOracle::for_params(params)
        .with_horizon(horizon)
        .with_domain(Domain::Unbounded);

    let mut d_range: f64 = 0.0;
    let mut updates = Vec::with_capacity(t + 1);
    for s in 1..=t + 1 {
        let d = oracle.pre_clip_update(&losses, s)?;
        if let Some(half) = params.domain().half_width() {
            if d.abs() > half {
                return Err(Error::InequalityNotApplicable { t });
            }
        }
        d_range = d_range.max(d.abs());
        updates.push(d);
    }
    let (d_t, d_next) = (updates[t - 1], updates[t]);
    let v_t = losses[t];

    let f_now = oracle.objective(&losses, t, d_t)?;
    let f_next = oracle.objective(&losses, t + 1, d_next)?;
    let play = v_t * d_t;
    let lhs = f_now - f_next + play;
    let eta = oracle.eta(&losses, t)?;
    let stability_bound = eta * v_t * v_t / 2.0;
    let range_bound = 2.0 * d_range * v_t.abs();
    let scale = [f_now, f_next, play, stability_bound, range_bound]
        .iter()
        .fold(0.0f64, |m, x| m.max(x.abs()));
    Ok(PerRoundCheck {
        t,
        lhs,
        stability_bound,
        range_bound,
        scale,
    })
}
