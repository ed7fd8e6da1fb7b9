use serde::Serialize;

use crate::bounds::{
    bound_b, bound_corollary1_discounted, bound_theorem1_discounted, bound_theorem3_discounted,
    BoundKind, BoundReport, TraceStats,
};
use crate::error::Result;
use crate::learner::Learner;
use crate::oracle::undiscounted_losses;
use crate::params::HyperParams;
use crate::regret::{RegretLedger, INEQUALITY_SLACK};

use super::config::{ExperimentConfig, ResolvedExperiment};
use super::output::{fmt_bool, fmt_f64, fmt_opt, Table, LIBRARY_VERSION, SCHEMA_VERSION};

/// State of the run after round `t`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRow {
    pub t: usize,
    pub alpha_t: f64,
    pub g_t: f64,
    pub m_t: f64,
    pub q_t: f64,
    pub delta_bar_t: f64,
    pub delta_t: f64,
    pub clipped: bool,
    /// `g_t * delta_t`
    pub loss_discounted: f64,
    pub regret_discounted: f64,
    pub max_v_t: f64,
    pub d_t: f64,
    /// One entry per requested bound; `None` before `t = 2`.
    pub bounds: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundSummary {
    pub kind: BoundKind,
    /// Value at the final round, if `T >= 2`.
    pub report: Option<BoundReport>,
    /// Whether the discounted regret stayed below the bound at every
    /// `t >= 2`. Not asserted for the order-level `B` formula.
    pub dominates: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentSummary {
    pub schema_version: u32,
    pub library_version: &'static str,
    pub command: &'static str,
    pub config: ExperimentConfig,
    pub p: f64,
    pub comparator: f64,
    pub rounds: usize,
    pub regret_discounted: f64,
    /// Present while every round fits the oracle horizon.
    pub regret_undiscounted: Option<f64>,
    pub clipping_count: usize,
    pub d_max: f64,
    /// Learner statistics after the last round; absent when `T = 0`.
    pub final_stats: Option<TraceStats>,
    pub bounds: Vec<BoundSummary>,
    pub contracts_hold: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub rows: Vec<TraceRow>,
    pub summary: ExperimentSummary,
}

impl ExperimentResult {
    pub fn table(&self) -> Table {
        let mut header: Vec<String> = [
            "t",
            "alpha_t",
            "g_t",
            "m_t",
            "q_t",
            "delta_bar_t",
            "delta_t",
            "clipped",
            "loss_discounted",
            "regret_discounted",
            "maxV_t",
            "D_t",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        header.extend(
            self.summary
                .bounds
                .iter()
                .map(|b| format!("bound_{}", b.kind.name())),
        );
        let mut table = Table::new(header);
        for r in &self.rows {
            let mut row = vec![
                r.t.to_string(),
                fmt_f64(r.alpha_t),
                fmt_f64(r.g_t),
                fmt_f64(r.m_t),
                fmt_f64(r.q_t),
                fmt_f64(r.delta_bar_t),
                fmt_f64(r.delta_t),
                fmt_bool(r.clipped),
                fmt_f64(r.loss_discounted),
                fmt_f64(r.regret_discounted),
                fmt_f64(r.max_v_t),
                fmt_f64(r.d_t),
            ];
            row.extend(r.bounds.iter().map(|b| fmt_opt(*b)));
            table.push(row);
        }
        table
    }
}

/// Evaluates one bound from the learner statistics after round `stats.rounds`.
pub fn evaluate_bound(
    kind: BoundKind,
    params: &HyperParams,
    stats: &TraceStats,
    u: f64,
    gradients: &[f64],
    horizon: usize,
) -> Result<BoundReport> {
    match kind {
        BoundKind::Theorem1 => bound_theorem1_discounted(params, stats, u),
        BoundKind::Corollary1 => bound_corollary1_discounted(params, stats, u),
        BoundKind::Theorem3 => bound_theorem3_discounted(params, stats, u),
        BoundKind::BFormula => {
            let losses = undiscounted_losses(&gradients[..=stats.rounds], params.beta1());
            let alpha = params.alpha_at(1)?;
            let d = params.domain().half_width().unwrap_or(f64::INFINITY);
            bound_b(params.p(), &losses, u, alpha, d, horizon)
        }
    }
}

fn dominated(regret: f64, bound: f64) -> bool {
    regret <= bound + INEQUALITY_SLACK * regret.abs().max(bound.abs())
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResult> {
    let resolved = config.resolve()?;
    run_resolved(config, &resolved)
}

pub(crate) fn run_resolved(
    config: &ExperimentConfig,
    r: &ResolvedExperiment,
) -> Result<ExperimentResult> {
    let params = &r.params;
    let beta1 = params.beta1();
    let mut learner = Learner::with_horizon(params.clone(), r.horizon);
    let mut ledger = RegretLedger::new(r.u, params.domain(), r.horizon)?;
    learner.ingest(r.gradients[0])?;

    let mut rows = Vec::with_capacity(r.rounds);
    let mut finals: Vec<Option<BoundReport>> = vec![None; r.bounds.len()];
    let mut dominance: Vec<Option<bool>> = r
        .bounds
        .iter()
        .map(|k| (*k != BoundKind::BFormula && r.rounds >= 2).then_some(true))
        .collect();
    let mut clipping_count = 0;

    for t in 1..=r.rounds {
        let out = learner.propose()?;
        let g = r.gradients[t];
        ledger.accumulate(g, out.delta, beta1);
        learner.ingest(g)?;
        clipping_count += out.clipped as usize;
        let stats = TraceStats::from_learner(&learner)?;
        let regret = ledger.discounted();

        let mut cells = Vec::with_capacity(r.bounds.len());
        for (i, kind) in r.bounds.iter().enumerate() {
            if t < 2 {
                cells.push(None);
                continue;
            }
            let rep = evaluate_bound(*kind, params, &stats, r.u, &r.gradients, r.horizon)?;
            if let Some(ok) = dominance[i].as_mut() {
                *ok &= dominated(regret, rep.total);
            }
            cells.push(Some(rep.total));
            finals[i] = Some(rep);
        }

        let st = learner.state();
        rows.push(TraceRow {
            t,
            alpha_t: out.alpha,
            g_t: g,
            m_t: st.m,
            q_t: st.q,
            delta_bar_t: out.delta_bar,
            delta_t: out.delta,
            clipped: out.clipped,
            loss_discounted: g * out.delta,
            regret_discounted: regret,
            max_v_t: st.max_v,
            d_t: st.d_max,
            bounds: cells,
        });
    }

    let bounds: Vec<BoundSummary> = r
        .bounds
        .iter()
        .zip(finals)
        .zip(&dominance)
        .map(|((kind, report), dom)| BoundSummary {
            kind: *kind,
            report,
            dominates: *dom,
        })
        .collect();
    let contracts_hold = dominance.iter().all(|d| d.unwrap_or(true));
    let summary = ExperimentSummary {
        schema_version: SCHEMA_VERSION,
        library_version: LIBRARY_VERSION,
        command: "simulate",
        config: config.clone(),
        p: params.p(),
        comparator: r.u,
        rounds: r.rounds,
        regret_discounted: ledger.discounted(),
        regret_undiscounted: ledger.undiscounted(beta1).ok(),
        clipping_count,
        d_max: learner.state().d_max,
        final_stats: (r.rounds > 0)
            .then(|| TraceStats::from_learner(&learner))
            .transpose()?,
        bounds,
        contracts_hold,
    };
    Ok(ExperimentResult { rows, summary })
}
