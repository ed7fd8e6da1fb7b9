//! Loss sequences that stress the learner, and the experiments built on them.
//!
//! * a geometric sequence `v_t = kappa^t v0` on which the `p <= 1` bound is
//!   attained up to a constant factor;
//! * a pair of geometric sequences, each chosen for one learner, on which
//!   `beta1 < sqrt(beta2)` beats `beta1 = sqrt(beta2)`;
//! * the two scalar inequalities that keep the geometric construction
//!   inside the domain.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bounds::bound_b;
use crate::error::{Error, Result};
use crate::learner::{Learner, DEFAULT_ORACLE_HORIZON};
use crate::oracle::FtrlOracle;
use crate::params::{clip_to_domain, AlphaSchedule, Domain, HyperParams};

/// Name and version of the generator behind [`AdversarySpec::Random`].
pub const RANDOM_GENERATOR: &str = "chacha8-u53-v1";

/// Smallest `R_T / B` over `p in {0.40, 0.45, .., 0.60}`, `T in 2..=20`,
/// `kappa = 1 / p^2`, `alpha = D / 4`, `u = -D`. Attained at `p = 0.4, T = 2`.
pub const TIGHTNESS_RATIO_BASELINE: f64 = 0.140_945_949_332_419_77;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AdversarySpec {
    /// Raw gradients `g_0, g_1, ...`.
    Fixed { gradients: Vec<f64> },
    /// Undiscounted losses `v_t = kappa^t v0`, i.e. `g_t = (beta1 kappa)^t v0`.
    Geometric { v0: f64, kappa: f64 },
    /// Learner-dependent pair; only meaningful for the non-oblivious experiment.
    NonObliviousPair { a: f64, b: f64, v: f64 },
    /// I.i.d. uniform gradients on `[low, high]` from a seeded ChaCha8 stream.
    Random {
        #[serde(default = "default_low")]
        low: f64,
        #[serde(default = "default_high")]
        high: f64,
    },
}

fn default_low() -> f64 {
    -1.0
}

fn default_high() -> f64 {
    1.0
}

impl AdversarySpec {
    /// Raw gradients `g_0 ..= g_rounds` for a learner with momentum `beta1`.
    pub fn gradients(&self, rounds: usize, beta1: f64, seed: u64) -> Result<Vec<f64>> {
        match self {
            AdversarySpec::Fixed { gradients } => {
                if gradients.len() < rounds + 1 {
                    return Err(Error::Config(format!(
                        "fixed adversary has {} gradients, {} rounds need {}",
                        gradients.len(),
                        rounds,
                        rounds + 1
                    )));
                }
                Ok(gradients[..=rounds].to_vec())
            }
            AdversarySpec::Geometric { v0, kappa } => {
                if !(*v0 > 0.0 && *kappa > 0.0) {
                    return Err(Error::Config(format!(
                        "geometric adversary needs v0 > 0 and kappa > 0, got {v0}, {kappa}"
                    )));
                }
                Ok((0..=rounds)
                    .map(|t| (beta1 * kappa).powi(t as i32) * v0)
                    .collect())
            }
            AdversarySpec::NonObliviousPair { .. } => Err(Error::Config(
                "the non-oblivious pair feeds two learners; run the nonoblivious experiment".into(),
            )),
            AdversarySpec::Random { low, high } => {
                if !(low.is_finite() && high.is_finite() && low < high) {
                    return Err(Error::Config(format!("bad uniform range [{low}, {high}]")));
                }
                Ok(random_gradients(seed, rounds + 1, *low, *high))
            }
        }
    }
}

/// `n` uniform draws on `[low, high)`: the top 53 bits of each ChaCha8 word
/// scaled to the unit interval. A zero first draw is redrawn.
pub fn random_gradients(seed: u64, n: usize, low: f64, high: f64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = || {
        let unit = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        low + (high - low) * unit
    };
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let g = draw();
        if out.is_empty() && g == 0.0 {
            continue;
        }
        out.push(g);
    }
    out
}

/// `(v0, kappa v0, ..., kappa^T v0)`
pub fn geometric_losses(v0: f64, kappa: f64, rounds: usize) -> Vec<f64> {
    (0..=rounds).map(|t| kappa.powi(t as i32) * v0).collect()
}

/// Pre-clipping update of round `t` on geometric losses with constant `alpha`:
///
/// ```text
/// -alpha p^(t-1) (kappa^t - 1) / (kappa - 1) * sqrt((r - 1) / (r^t - 1)),   r = p^2 kappa^2
/// ```
pub fn closed_form_prebar_delta(alpha: f64, p: f64, kappa: f64, t: usize) -> Result<f64> {
    if t == 0 {
        return Err(Error::InvalidParam("rounds start at t = 1".into()));
    }
    let r = p * p * kappa * kappa;
    if kappa == 1.0 || r == 1.0 {
        return Err(Error::SingularParameter(format!(
            "kappa = {kappa}, p^2 kappa^2 = {r}"
        )));
    }
    let ti = t as i32;
    let partial = (kappa.powi(ti) - 1.0) / (kappa - 1.0);
    let shrink = ((r - 1.0) / (r.powi(ti) - 1.0)).sqrt();
    Ok(-alpha * p.powi(ti - 1) * partial * shrink)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TightnessConfig {
    pub p: f64,
    #[serde(rename = "D")]
    pub d: f64,
    /// Defaults to `1 / p^2`.
    #[serde(default)]
    pub kappa: Option<f64>,
    #[serde(default = "one")]
    pub v0: f64,
    pub rounds: usize,
    #[serde(default = "default_horizon")]
    pub oracle_horizon: usize,
    /// Defaults to [`TIGHTNESS_RATIO_BASELINE`].
    #[serde(default)]
    pub min_ratio: Option<f64>,
}

fn one() -> f64 {
    1.0
}

fn default_horizon() -> usize {
    DEFAULT_ORACLE_HORIZON
}

impl TightnessConfig {
    pub fn preset() -> Self {
        Self {
            p: 0.5,
            d: 1.0,
            kappa: None,
            v0: 1.0,
            rounds: 2,
            oracle_horizon: DEFAULT_ORACLE_HORIZON,
            min_ratio: None,
        }
    }

    pub fn kappa(&self) -> f64 {
        self.kappa.unwrap_or(1.0 / (self.p * self.p))
    }

    pub fn min_ratio(&self) -> f64 {
        self.min_ratio.unwrap_or(TIGHTNESS_RATIO_BASELINE)
    }

    pub fn alpha(&self) -> f64 {
        self.d / 4.0
    }

    fn validate(&self) -> Result<()> {
        let kappa = self.kappa();
        if !(0.4..=0.6).contains(&self.p) {
            return Err(Error::WrongRegime(format!(
                "needs 0.4 <= p <= 0.6, got {}",
                self.p
            )));
        }
        if !(kappa * self.p * self.p >= 1.0 - 1e-12) {
            return Err(Error::WrongRegime(format!(
                "needs kappa >= 1/p^2 = {}, got {kappa}",
                1.0 / (self.p * self.p)
            )));
        }
        if !(self.d > 0.0 && self.v0 > 0.0) {
            return Err(Error::WrongRegime("D and v0 must be positive".into()));
        }
        if self.rounds < 2 {
            return Err(Error::WrongRegime(format!(
                "needs T >= 2, got {}",
                self.rounds
            )));
        }
        if self.rounds > self.oracle_horizon {
            return Err(Error::OracleOverflow {
                t: self.rounds,
                horizon: self.oracle_horizon,
            });
        }
        Ok(())
    }
}

/// One round of the tightness run; cumulative columns are through round `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TightnessRound {
    pub t: usize,
    pub v: f64,
    pub eta: f64,
    pub delta_bar: f64,
    pub delta_closed_form: f64,
    pub delta: f64,
    pub clipped: bool,
    pub regret: f64,
    pub lower: f64,
    pub b: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TightnessReport {
    pub regret: f64,
    pub lower: f64,
    #[serde(rename = "B")]
    pub b: f64,
    pub ratio: f64,
    pub max_prebar: f64,
    pub any_clipped: bool,
    pub clipping_count: usize,
    #[serde(skip)]
    pub rounds: Vec<TightnessRound>,
}

impl TightnessReport {
    /// No clipping, `|delta_bar| <= D/2`, regret above the analytic lower
    /// bound and `R_T / B >= min_ratio`.
    pub fn contract_holds(&self, d: f64, min_ratio: f64) -> bool {
        !self.any_clipped
            && self.max_prebar <= d / 2.0
            && self.regret >= self.lower
            && self.ratio >= min_ratio
    }
}

/// `v0 D kappa (kappa^T - 1) / (2 (kappa - 1))`
pub fn tightness_lower_bound(v0: f64, d: f64, kappa: f64, rounds: usize) -> f64 {
    v0 * d * kappa * (kappa.powi(rounds as i32) - 1.0) / (2.0 * (kappa - 1.0))
}

/// Runs the literal FTRL learner with `alpha = D/4` on `v_t = kappa^t v0`
/// and measures `R_T(-D)` against the lower bound and `B`.
pub fn run_tightness_experiment(cfg: &TightnessConfig) -> Result<TightnessReport> {
    cfg.validate()?;
    let (p, d, kappa, alpha) = (cfg.p, cfg.d, cfg.kappa(), cfg.alpha());
    let losses = geometric_losses(cfg.v0, kappa, cfg.rounds);
    let oracle = FtrlOracle::new(p, AlphaSchedule::Constant(alpha), Domain::Bounded(d))
        .with_horizon(cfg.oracle_horizon);
    let u = -d;

    let mut regret = 0.0;
    let mut max_prebar: f64 = 0.0;
    let mut rounds = Vec::with_capacity(cfg.rounds);
    for t in 1..=cfg.rounds {
        let eta = oracle.eta(&losses, t)?;
        let delta_bar = oracle.pre_clip_update(&losses, t)?;
        let delta = clip_to_domain(delta_bar, Domain::Bounded(d));
        let v = losses[t];
        regret += v * (delta - u);
        max_prebar = max_prebar.max(delta_bar.abs());
        let b = bound_b(p, &losses[..=t], u, alpha, d, cfg.oracle_horizon)?.total;
        rounds.push(TightnessRound {
            t,
            v,
            eta,
            delta_bar,
            delta_closed_form: closed_form_prebar_delta(alpha, p, kappa, t)?,
            delta,
            clipped: delta != delta_bar,
            regret,
            lower: tightness_lower_bound(cfg.v0, d, kappa, t),
            b,
            ratio: regret / b,
        });
    }
    let last = rounds[rounds.len() - 1];
    let clipping_count = rounds.iter().filter(|r| r.clipped).count();
    Ok(TightnessReport {
        regret: last.regret,
        lower: last.lower,
        b: last.b,
        ratio: last.ratio,
        max_prebar,
        any_clipped: clipping_count > 0,
        clipping_count,
        rounds,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NonObliviousVariant {
    /// Momentum ratio `p < 1`, losses `a^t v`.
    A,
    /// Momentum ratio 1, losses `b^t v`.
    APrime,
}

/// `v_t (delta_t + 1)` on `[-1, 1]` with `alpha = 1/K`, from the closed form
///
/// ```text
/// v c^t (1 - r^(t-1) sqrt(1 - (r c)^2) / (K sqrt(1 - (r c)^(2t))) * (1 - c^t) / (1 - c))
/// ```
///
/// where `c` is `a` or `b` and `r` is `p` for `A` and 1 for `A'`.
pub fn nonoblivious_per_round_regret(
    variant: NonObliviousVariant,
    rate: f64,
    v: f64,
    k: f64,
    p: f64,
    t: usize,
) -> f64 {
    let r = match variant {
        NonObliviousVariant::A => p,
        NonObliviousVariant::APrime => 1.0,
    };
    let ti = t as i32;
    let rc = r * rate;
    let step = r.powi(ti - 1) * (1.0 - rc * rc).sqrt() / (k * (1.0 - rc.powi(2 * ti)).sqrt())
        * (1.0 - rate.powi(ti))
        / (1.0 - rate);
    v * rate.powi(ti) * (1.0 - step)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonObliviousConfig {
    pub a: f64,
    pub b: f64,
    #[serde(default = "one")]
    pub v: f64,
    pub beta1: f64,
    pub p: f64,
    pub rounds: usize,
}

impl NonObliviousConfig {
    pub fn preset() -> Self {
        Self {
            a: 0.2,
            b: 0.5,
            v: 1.0,
            beta1: 0.4,
            p: 0.5,
            rounds: 2,
        }
    }

    /// `max(1/(1-a), 1/(1-b))`
    pub fn k(&self) -> f64 {
        (1.0 / (1.0 - self.a)).max(1.0 / (1.0 - self.b))
    }

    fn validate(&self) -> Result<()> {
        for (name, x) in [("a", self.a), ("b", self.b)] {
            if !(x > 0.0 && x < 1.0) {
                return Err(Error::InvalidParam(format!(
                    "{name} must lie in (0, 1), got {x}"
                )));
            }
        }
        if !(self.v > 0.0) {
            return Err(Error::InvalidParam(format!(
                "v must be positive, got {}",
                self.v
            )));
        }
        if !(self.p > 0.0 && self.p < 1.0) {
            return Err(Error::WrongRegime(format!(
                "needs 0 < p < 1, got {}",
                self.p
            )));
        }
        if !(self.beta1 > 0.0 && self.beta1 < self.p) {
            return Err(Error::WrongRegime(format!(
                "learner A needs beta2 = (beta1/p)^2 < 1, i.e. beta1 < p; got beta1 = {}, p = {}",
                self.beta1, self.p
            )));
        }
        if self.rounds < 1 {
            return Err(Error::InvalidParam("needs at least one round".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NonObliviousRound {
    pub t: usize,
    pub v_a: f64,
    pub delta_a: f64,
    pub f_a: f64,
    pub f_a_closed_form: f64,
    pub v_aprime: f64,
    pub delta_aprime: f64,
    pub f_aprime: f64,
    pub f_aprime_closed_form: f64,
    pub strict: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NonObliviousReport {
    #[serde(rename = "K")]
    pub k: f64,
    pub alpha: f64,
    pub regret_a: f64,
    pub regret_aprime: f64,
    pub per_round_strict: bool,
    pub any_clipped: bool,
    pub clipping_count: usize,
    pub warning: Option<String>,
    #[serde(skip)]
    pub rounds: Vec<NonObliviousRound>,
}

impl NonObliviousReport {
    pub fn contract_holds(&self) -> bool {
        self.per_round_strict && self.regret_a < self.regret_aprime && !self.any_clipped
    }
}

/// Runs learner `A` (ratio `p`) on `v_t = a^t v` and learner `A'` (ratio 1)
/// on `v'_t = b^t v`, both with `alpha = 1/K`, `D = 1`, `u = -1`, through the
/// discounted Adam form.
pub fn run_nonoblivious_experiment(cfg: &NonObliviousConfig) -> Result<NonObliviousReport> {
    cfg.validate()?;
    let k = cfg.k();
    let alpha = 1.0 / k;
    let schedule = AlphaSchedule::Constant(alpha);
    let domain = Domain::Bounded(1.0);
    let beta2_a = (cfg.beta1 / cfg.p).powi(2);
    let mut learner_a = Learner::new(HyperParams::new(
        cfg.beta1,
        beta2_a,
        domain,
        schedule.clone(),
    )?);
    let mut learner_ap = Learner::new(HyperParams::new(
        cfg.beta1,
        cfg.beta1 * cfg.beta1,
        domain,
        schedule,
    )?);
    let u = -1.0;

    let loss = |rate: f64, t: usize| rate.powi(t as i32) * cfg.v;
    let grad = |rate: f64, t: usize| (cfg.beta1 * rate).powi(t as i32) * cfg.v;
    learner_a.ingest(grad(cfg.a, 0))?;
    learner_ap.ingest(grad(cfg.b, 0))?;

    let mut rounds = Vec::with_capacity(cfg.rounds);
    let (mut regret_a, mut regret_ap, mut clipped) = (0.0, 0.0, 0);
    for t in 1..=cfg.rounds {
        let step_a = learner_a.propose()?;
        let step_ap = learner_ap.propose()?;
        clipped += step_a.clipped as usize + step_ap.clipped as usize;
        let (v_a, v_ap) = (loss(cfg.a, t), loss(cfg.b, t));
        let f_a = v_a * (step_a.delta - u);
        let f_ap = v_ap * (step_ap.delta - u);
        regret_a += f_a;
        regret_ap += f_ap;
        rounds.push(NonObliviousRound {
            t,
            v_a,
            delta_a: step_a.delta,
            f_a,
            f_a_closed_form: nonoblivious_per_round_regret(
                NonObliviousVariant::A,
                cfg.a,
                cfg.v,
                k,
                cfg.p,
                t,
            ),
            v_aprime: v_ap,
            delta_aprime: step_ap.delta,
            f_aprime: f_ap,
            f_aprime_closed_form: nonoblivious_per_round_regret(
                NonObliviousVariant::APrime,
                cfg.b,
                cfg.v,
                k,
                cfg.p,
                t,
            ),
            strict: f_a < f_ap,
        });
        learner_a.ingest(grad(cfg.a, t))?;
        learner_ap.ingest(grad(cfg.b, t))?;
    }
    let warning = (cfg.a >= cfg.b * cfg.b).then(|| {
        format!(
            "a = {} >= b^2 = {}: strict per-round separation is not guaranteed",
            cfg.a,
            cfg.b * cfg.b
        )
    });
    Ok(NonObliviousReport {
        k,
        alpha,
        regret_a,
        regret_aprime: regret_ap,
        per_round_strict: rounds.iter().all(|r| r.strict),
        any_clipped: clipped > 0,
        clipping_count: clipped,
        warning,
        rounds,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LemmaReport {
    pub points: usize,
    pub max_value: f64,
    pub bound: f64,
    pub holds: bool,
}

/// Slack on the lemma bounds.
pub const LEMMA_SLACK: f64 = 1e-12;

/// `x^t (y^t - 1) / sqrt((x^2 y^2)^t - 1)`, evaluated as
/// `(1 - y^-t) / sqrt(1 - (x y)^(-2t))` so that large `y^t` cannot overflow.
pub fn lemma_a1_value(x: f64, y: f64, t: u32) -> f64 {
    let t = t as f64;
    let num = -(-t * y.ln()).exp_m1();
    let den = (-(-2.0 * t * (x * y).ln()).exp_m1()).sqrt();
    num / den
}

/// `sqrt(x^2 y^2 - 1) / (x (y - 1))`
pub fn lemma_a2_value(x: f64, y: f64) -> f64 {
    ((x * y).powi(2) - 1.0).sqrt() / (x * (y - 1.0))
}

fn above_inverse_square(x: f64, y: f64) -> bool {
    y >= 1.0 / (x * x) * (1.0 - 4.0 * f64::EPSILON)
}

pub fn verify_lemma_a1(points: &[(f64, f64, u32)]) -> Result<LemmaReport> {
    let mut max_value = f64::NEG_INFINITY;
    for &(x, y, t) in points {
        if !(x > 0.0 && x <= 1.0 && above_inverse_square(x, y) && t >= 1) {
            return Err(Error::OutOfDomain(format!(
                "(x, y, t) = ({x}, {y}, {t}) needs x in (0, 1], y >= 1/x^2, t >= 1"
            )));
        }
        if !(x * y > 1.0) {
            return Err(Error::OutOfDomain(format!(
                "(x, y) = ({x}, {y}) makes the expression 0/0"
            )));
        }
        max_value = max_value.max(lemma_a1_value(x, y, t));
    }
    Ok(LemmaReport {
        points: points.len(),
        max_value,
        bound: 1.0,
        holds: max_value <= 1.0 + LEMMA_SLACK,
    })
}

pub fn verify_lemma_a2(points: &[(f64, f64)]) -> Result<LemmaReport> {
    let mut max_value = f64::NEG_INFINITY;
    for &(x, y) in points {
        if !(x > 0.0 && x <= 0.6 && above_inverse_square(x, y)) {
            return Err(Error::OutOfDomain(format!(
                "(x, y) = ({x}, {y}) needs x in (0, 0.6], y >= 1/x^2"
            )));
        }
        max_value = max_value.max(lemma_a2_value(x, y));
    }
    Ok(LemmaReport {
        points: points.len(),
        max_value,
        bound: 2.0,
        holds: max_value <= 2.0 + LEMMA_SLACK,
    })
}

/// `x` on a uniform grid over `(0, x_max]`, `y` at multiples of `1/x^2` and
/// at fixed absolute values (kept only when in the domain).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaGrid {
    pub x_step: f64,
    pub y_multiples: Vec<f64>,
    pub y_absolute: Vec<f64>,
    pub t_max: u32,
}

impl LemmaGrid {
    pub fn a1_default() -> Self {
        Self {
            x_step: 0.01,
            y_multiples: vec![1.0, 2.0, 10.0],
            y_absolute: vec![1e6],
            t_max: 50,
        }
    }

    /// Finer in `x` than the first lemma's grid since there is no `t` axis.
    pub fn a2_default() -> Self {
        Self {
            x_step: 0.0001,
            ..Self::a1_default()
        }
    }

    fn pairs(&self, x_max: f64) -> Vec<(f64, f64)> {
        let n = (x_max / self.x_step).round() as usize;
        let mut out = Vec::new();
        for i in 1..=n {
            let x = (i as f64 * self.x_step).min(x_max);
            let floor = 1.0 / (x * x);
            let ys = self
                .y_multiples
                .iter()
                .map(|m| m * floor)
                .chain(self.y_absolute.iter().copied().filter(|y| *y >= floor));
            for y in ys {
                out.push((x, y));
            }
        }
        out
    }

    /// Points for the first lemma; `(1, 1)` is dropped because the
    /// expression is `0/0` there.
    pub fn a1_points(&self) -> Vec<(f64, f64, u32)> {
        self.pairs(1.0)
            .into_iter()
            .filter(|(x, y)| x * y > 1.0)
            .flat_map(|(x, y)| (1..=self.t_max).map(move |t| (x, y, t)))
            .collect()
    }

    pub fn a2_points(&self) -> Vec<(f64, f64)> {
        self.pairs(0.6)
    }
}
