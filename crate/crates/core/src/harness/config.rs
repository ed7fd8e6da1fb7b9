use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::adversaries::AdversarySpec;
use crate::bounds::BoundKind;
use crate::error::{Error, Result};
use crate::learner::DEFAULT_ORACLE_HORIZON;
use crate::params::{AlphaSchedule, Domain, HyperParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaKind {
    Constant,
    /// `alpha / p^(t-1)` with `p = beta1 / sqrt(beta2)`.
    ExponentialDecay,
    Explicit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaSpec {
    pub kind: AlphaKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
}

impl AlphaSpec {
    pub fn constant(value: f64) -> Self {
        Self {
            kind: AlphaKind::Constant,
            value: Some(value),
            values: None,
        }
    }

    fn resolve(&self, p: f64) -> Result<AlphaSchedule> {
        let value = || {
            self.value
                .ok_or_else(|| Error::Config(format!("alpha kind {:?} needs `value`", self.kind)))
        };
        Ok(match self.kind {
            AlphaKind::Constant => AlphaSchedule::Constant(value()?),
            AlphaKind::ExponentialDecay => AlphaSchedule::decaying_for(value()?, p),
            AlphaKind::Explicit => AlphaSchedule::Explicit(
                self.values
                    .clone()
                    .ok_or_else(|| Error::Config("explicit alpha needs `values`".into()))?,
            ),
        })
    }
}

/// A half-width, or the token `"unbounded"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DomainSpec {
    HalfWidth(f64),
    Token(String),
}

impl DomainSpec {
    fn resolve(&self) -> Result<Domain> {
        match self {
            DomainSpec::HalfWidth(d) => Ok(Domain::Bounded(*d)),
            DomainSpec::Token(s) if s == "unbounded" => Ok(Domain::Unbounded),
            DomainSpec::Token(s) => Err(Error::Config(format!(
                "domain must be a number or \"unbounded\", got {s:?}"
            ))),
        }
    }
}

/// A fixed comparator, or the token `"negD"` for `-D`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ComparatorSpec {
    Value(f64),
    Token(String),
}

impl Default for ComparatorSpec {
    fn default() -> Self {
        ComparatorSpec::Value(0.0)
    }
}

impl ComparatorSpec {
    fn resolve(&self, domain: Domain) -> Result<f64> {
        match (self, domain) {
            (ComparatorSpec::Value(u), _) => Ok(*u),
            (ComparatorSpec::Token(s), Domain::Bounded(d)) if s == "negD" => Ok(-d),
            (ComparatorSpec::Token(s), Domain::Unbounded) if s == "negD" => Err(Error::Config(
                "comparator \"negD\" needs a bounded domain".into(),
            )),
            (ComparatorSpec::Token(s), _) => Err(Error::Config(format!(
                "comparator must be a number or \"negD\", got {s:?}"
            ))),
        }
    }
}

fn default_horizon() -> usize {
    DEFAULT_ORACLE_HORIZON
}

/// Flat JSON description of one simulated run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub alpha: AlphaSpec,
    pub domain: DomainSpec,
    #[serde(alias = "T")]
    pub rounds: usize,
    #[serde(default)]
    pub comparator: ComparatorSpec,
    pub adversary: AdversarySpec,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, alias = "bounds_requested")]
    pub bounds: Vec<BoundKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default = "default_horizon")]
    pub oracle_horizon: usize,
}

/// An [`ExperimentConfig`] with every token resolved and every regime
/// requirement checked.
#[derive(Debug, Clone)]
pub struct ResolvedExperiment {
    pub params: HyperParams,
    pub u: f64,
    pub rounds: usize,
    pub gradients: Vec<f64>,
    pub bounds: Vec<BoundKind>,
    pub horizon: usize,
}

impl ExperimentConfig {
    pub fn resolve(&self) -> Result<ResolvedExperiment> {
        let domain = self.domain.resolve()?;
        if !(self.beta2 > 0.0) {
            return Err(Error::Config(format!(
                "beta2 must lie in (0, 1), got {}",
                self.beta2
            )));
        }
        let p = self.beta1 / self.beta2.sqrt();
        let alpha = self.alpha.resolve(p)?;
        let params = HyperParams::new(self.beta1, self.beta2, domain, alpha)
            .map_err(|e| Error::Config(e.to_string()))?;
        let u = self.comparator.resolve(domain)?;
        if let Some(d) = domain.half_width() {
            if u.abs() > d {
                return Err(Error::Config(format!(
                    "comparator {u} lies outside [-{d}, {d}]"
                )));
            }
        }

        let mut bounds = self.bounds.clone();
        bounds.sort();
        bounds.dedup();
        for kind in &bounds {
            check_regime(*kind, &params, self.rounds, self.oracle_horizon)?;
        }

        let gradients = self
            .adversary
            .gradients(self.rounds, self.beta1, self.seed)?;
        if gradients[0] == 0.0 {
            return Err(Error::Config(
                "the first gradient g0 must be nonzero".into(),
            ));
        }
        if let Some(g) = gradients.iter().find(|g| !g.is_finite()) {
            return Err(Error::Config(format!(
                "adversary produced a non-finite gradient {g}"
            )));
        }
        Ok(ResolvedExperiment {
            params,
            u,
            rounds: self.rounds,
            gradients,
            bounds,
            horizon: self.oracle_horizon,
        })
    }
}

/// Regime coherence of a requested bound, checked before anything runs.
fn check_regime(
    kind: BoundKind,
    params: &HyperParams,
    rounds: usize,
    horizon: usize,
) -> Result<()> {
    let fail = |msg: String| Err(Error::Config(format!("{}: {msg}", kind.name())));
    let constant = matches!(params.alpha(), AlphaSchedule::Constant(_));
    match kind {
        BoundKind::Theorem1 if !params.ratio_at_most_one() => {
            fail(format!("needs p <= 1, got p = {}", params.p()))
        }
        BoundKind::Corollary1 if !params.ratio_at_most_one() => {
            fail(format!("needs p <= 1, got p = {}", params.p()))
        }
        BoundKind::Corollary1 if !constant => fail("needs a constant alpha".into()),
        BoundKind::Theorem3 if !params.ratio_at_least_one() => {
            fail(format!("needs p >= 1, got p = {}", params.p()))
        }
        BoundKind::Theorem3
            if !matches!(params.alpha(), AlphaSchedule::ExponentialDecay { .. })
                && !(constant && params.ratio_at_most_one()) =>
        {
            fail("needs alpha kind exponential_decay".into())
        }
        BoundKind::BFormula if !params.domain().is_bounded() => {
            fail("needs a bounded domain".into())
        }
        BoundKind::BFormula if !params.ratio_at_most_one() => {
            fail(format!("needs p <= 1, got p = {}", params.p()))
        }
        BoundKind::BFormula if !constant => fail("needs a constant alpha".into()),
        BoundKind::BFormula if rounds > horizon => fail(format!(
            "evaluated in undiscounted scale; {rounds} rounds exceed the oracle horizon {horizon}"
        )),
        _ => Ok(()),
    }
}

pub fn load_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}
