//! Tables and JSON summaries for the adversarial and lemma experiments.

use serde::{Deserialize, Serialize};

use crate::adversaries::{
    run_nonoblivious_experiment, run_tightness_experiment, verify_lemma_a1, verify_lemma_a2,
    LemmaGrid, LemmaReport, NonObliviousConfig, NonObliviousReport, TightnessConfig,
    TightnessReport,
};
use crate::error::Result;

use super::output::{fmt_bool, fmt_f64, Table, LIBRARY_VERSION, SCHEMA_VERSION};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TightnessSummary {
    pub schema_version: u32,
    pub library_version: &'static str,
    pub command: &'static str,
    pub config: TightnessConfig,
    pub kappa: f64,
    pub alpha: f64,
    pub min_ratio: f64,
    #[serde(flatten)]
    pub report: TightnessReport,
    pub contract_holds: bool,
}

pub fn tightness(cfg: &TightnessConfig) -> Result<(TightnessSummary, Table)> {
    let report = run_tightness_experiment(cfg)?;
    let mut table = Table::new([
        "t",
        "v_t",
        "eta_t",
        "delta_bar_t",
        "delta_closed_form_t",
        "delta_t",
        "clipped",
        "regret",
        "lower",
        "B",
        "ratio",
    ]);
    for r in &report.rounds {
        table.push(vec![
            r.t.to_string(),
            fmt_f64(r.v),
            fmt_f64(r.eta),
            fmt_f64(r.delta_bar),
            fmt_f64(r.delta_closed_form),
            fmt_f64(r.delta),
            fmt_bool(r.clipped),
            fmt_f64(r.regret),
            fmt_f64(r.lower),
            fmt_f64(r.b),
            fmt_f64(r.ratio),
        ]);
    }
    let summary = TightnessSummary {
        schema_version: SCHEMA_VERSION,
        library_version: LIBRARY_VERSION,
        command: "tightness",
        config: cfg.clone(),
        kappa: cfg.kappa(),
        alpha: cfg.alpha(),
        min_ratio: cfg.min_ratio(),
        contract_holds: report.contract_holds(cfg.d, cfg.min_ratio()),
        report,
    };
    Ok((summary, table))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NonObliviousSummary {
    pub schema_version: u32,
    pub library_version: &'static str,
    pub command: &'static str,
    pub config: NonObliviousConfig,
    #[serde(flatten)]
    pub report: NonObliviousReport,
    pub contract_holds: bool,
}

pub fn nonoblivious(cfg: &NonObliviousConfig) -> Result<(NonObliviousSummary, Table)> {
    let report = run_nonoblivious_experiment(cfg)?;
    let mut table = Table::new([
        "t",
        "v_a",
        "delta_a",
        "f_a",
        "f_a_closed_form",
        "v_aprime",
        "delta_aprime",
        "f_aprime",
        "f_aprime_closed_form",
        "strict",
    ]);
    for r in &report.rounds {
        table.push(vec![
            r.t.to_string(),
            fmt_f64(r.v_a),
            fmt_f64(r.delta_a),
            fmt_f64(r.f_a),
            fmt_f64(r.f_a_closed_form),
            fmt_f64(r.v_aprime),
            fmt_f64(r.delta_aprime),
            fmt_f64(r.f_aprime),
            fmt_f64(r.f_aprime_closed_form),
            fmt_bool(r.strict),
        ]);
    }
    let summary = NonObliviousSummary {
        schema_version: SCHEMA_VERSION,
        library_version: LIBRARY_VERSION,
        command: "nonoblivious",
        config: cfg.clone(),
        contract_holds: report.contract_holds(),
        report,
    };
    Ok((summary, table))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LemmaConfig {
    #[serde(default = "LemmaGrid::a1_default")]
    pub a1: LemmaGrid,
    #[serde(default = "LemmaGrid::a2_default")]
    pub a2: LemmaGrid,
}

impl Default for LemmaConfig {
    fn default() -> Self {
        Self {
            a1: LemmaGrid::a1_default(),
            a2: LemmaGrid::a2_default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LemmaSummary {
    pub schema_version: u32,
    pub library_version: &'static str,
    pub command: &'static str,
    pub config: LemmaConfig,
    pub a1: LemmaReport,
    pub a2: LemmaReport,
    pub contract_holds: bool,
}

pub fn verify_lemmas(cfg: &LemmaConfig) -> Result<(LemmaSummary, Table)> {
    let a1 = verify_lemma_a1(&cfg.a1.a1_points())?;
    let a2 = verify_lemma_a2(&cfg.a2.a2_points())?;
    let mut table = Table::new(["lemma", "points", "max_value", "bound", "holds"]);
    for (name, r) in [("a1", &a1), ("a2", &a2)] {
        table.push(vec![
            name.to_string(),
            r.points.to_string(),
            fmt_f64(r.max_value),
            fmt_f64(r.bound),
            fmt_bool(r.holds),
        ]);
    }
    let summary = LemmaSummary {
        schema_version: SCHEMA_VERSION,
        library_version: LIBRARY_VERSION,
        command: "verify-lemmas",
        config: cfg.clone(),
        contract_holds: a1.holds && a2.holds,
        a1,
        a2,
    };
    Ok((summary, table))
}
