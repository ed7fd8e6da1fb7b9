//! Literal follow-the-regularized-leader form of the learner.
//!
//! Works on the undiscounted losses `v_s = beta1^(-s) g_s`, which grow
//! exponentially, so every entry point is limited to a short horizon. It
//! exists to cross-check [`crate::learner::Learner`] and to evaluate the
//! regularized objective `F_t(x) = x^2 / (2 eta_t) + x * sum_{s<t} v_s`.

use crate::error::{Error, Result};
use crate::learner::DEFAULT_ORACLE_HORIZON;
use crate::params::{clip_to_domain, AlphaSchedule, Domain, HyperParams};

/// `v_s = beta1^(-s) g_s` for every supplied gradient.
pub fn undiscounted_losses(gradients: &[f64], beta1: f64) -> Vec<f64> {
    gradients
        .iter()
        .enumerate()
        .map(|(s, g)| g / beta1.powi(s as i32))
        .collect()
}

/// FTRL with regularizer `x^2 / (2 eta_t)` on a loss sequence `v_0, v_1, ...`
/// and `eta_t = alpha_t p^(t-1) / sqrt(sum_{s<t} (p^s v_s)^2)`.
#[derive(Debug, Clone)]
pub struct FtrlOracle {
    ratio: f64,
    alpha: AlphaSchedule,
    domain: Domain,
    horizon: usize,
}

impl FtrlOracle {
    pub fn new(ratio: f64, alpha: AlphaSchedule, domain: Domain) -> Self {
        Self {
            ratio,
            alpha,
            domain,
            horizon: DEFAULT_ORACLE_HORIZON,
        }
    }

    pub fn for_params(params: &HyperParams) -> Self {
        Self::new(params.p(), params.alpha().clone(), params.domain())
    }

    pub fn with_horizon(mut self, horizon: usize) -> Self {
        self.horizon = horizon;
        self
    }

    pub fn with_domain(mut self, domain: Domain) -> Self {
        self.domain = domain;
        self
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    fn check_round(&self, losses: &[f64], t: usize) -> Result<()> {
        if t == 0 {
            return Err(Error::InvalidParam("rounds start at t = 1".into()));
        }
        if t > self.horizon {
            return Err(Error::OracleOverflow {
                t,
                horizon: self.horizon,
            });
        }
        if losses.len() < t {
            return Err(Error::InvalidParam(format!(
                "round {t} needs {t} losses, only {} supplied",
                losses.len()
            )));
        }
        Ok(())
    }

    /// Learning rate `eta_t` of round `t`.
    pub fn eta(&self, losses: &[f64], t: usize) -> Result<f64> {
        self.check_round(losses, t)?;
        let p = self.ratio;
        let energy: f64 = losses[..t]
            .iter()
            .enumerate()
            .map(|(s, v)| {
                let w = p.powi(s as i32) * v;
                w * w
            })
            .sum();
        if !(energy > 0.0) {
            return Err(Error::DegenerateState(
                "all losses before round t are zero".into(),
            ));
        }
        Ok(self.alpha.alpha_at(t)? * p.powi((t - 1) as i32) / energy.sqrt())
    }

    /// Unconstrained minimizer `-eta_t * sum_{s<t} v_s`.
    pub fn pre_clip_update(&self, losses: &[f64], t: usize) -> Result<f64> {
        let eta = self.eta(losses, t)?;
        let total: f64 = losses[..t].iter().sum();
        Ok(-eta * total)
    }

    /// Minimizer of `F_t` over the domain.
    pub fn update(&self, losses: &[f64], t: usize) -> Result<f64> {
        Ok(clip_to_domain(
            self.pre_clip_update(losses, t)?,
            self.domain,
        ))
    }

    /// `F_t(x)`
    pub fn objective(&self, losses: &[f64], t: usize, x: f64) -> Result<f64> {
        let eta = self.eta(losses, t)?;
        let total: f64 = losses[..t].iter().sum();
        Ok(x * x / (2.0 * eta) + total * x)
    }
}

/// Update of round `t` from raw gradients `g_0 .. g_{t-1}` via the FTRL form.
pub fn ftrl_oracle_update(
    gradients: &[f64],
    params: &HyperParams,
    t: usize,
    horizon: usize,
) -> Result<f64> {
    check_first_gradient(gradients)?;
    let losses = undiscounted_losses(&gradients[..t.min(gradients.len())], params.beta1());
    FtrlOracle::for_params(params)
        .with_horizon(horizon)
        .update(&losses, t)
}

/// `F_t(x)` from raw gradients.
pub fn evaluate_objective(
    gradients: &[f64],
    params: &HyperParams,
    t: usize,
    x: f64,
    horizon: usize,
) -> Result<f64> {
    check_first_gradient(gradients)?;
    let losses = undiscounted_losses(&gradients[..t.min(gradients.len())], params.beta1());
    FtrlOracle::for_params(params)
        .with_horizon(horizon)
        .objective(&losses, t, x)
}

fn check_first_gradient(gradients: &[f64]) -> Result<()> {
    match gradients.first() {
        Some(g) if *g == 0.0 => Err(Error::InvalidFirstGradient),
        _ => Ok(()),
    }
}
