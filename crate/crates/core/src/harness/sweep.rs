use std::collections::BTreeMap;
use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adversaries::{
    run_nonoblivious_experiment, run_tightness_experiment, AdversarySpec, NonObliviousConfig,
    TightnessConfig,
};
use crate::bounds::BoundKind;
use crate::error::{Error, Result};

use super::config::ExperimentConfig;
use super::output::{fmt_bool, fmt_f64, Table, LIBRARY_VERSION, SCHEMA_VERSION};
use super::run::{evaluate_bound, run_resolved};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepMode {
    Simulate,
    Tightness,
    Nonoblivious,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    Beta1,
    Beta2,
    Kappa,
    A,
    B,
    P,
    Rounds,
}

impl Axis {
    const ALL: [Axis; 7] = [
        Axis::Beta1,
        Axis::Beta2,
        Axis::Kappa,
        Axis::A,
        Axis::B,
        Axis::P,
        Axis::Rounds,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Axis::Beta1 => "beta1",
            Axis::Beta2 => "beta2",
            Axis::Kappa => "kappa",
            Axis::A => "a",
            Axis::B => "b",
            Axis::P => "p",
            Axis::Rounds => "rounds",
        }
    }

    fn allowed_in(&self, mode: SweepMode) -> bool {
        match mode {
            SweepMode::Simulate => {
                matches!(self, Axis::Beta1 | Axis::Beta2 | Axis::Kappa | Axis::Rounds)
            }
            SweepMode::Tightness => matches!(self, Axis::Kappa | Axis::P | Axis::Rounds),
            SweepMode::Nonoblivious => {
                matches!(
                    self,
                    Axis::A | Axis::B | Axis::Beta1 | Axis::P | Axis::Rounds
                )
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepGrid {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub beta1: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub beta2: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub kappa: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub a: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub b: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub p: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rounds: Vec<usize>,
}

impl SweepGrid {
    fn values(&self, axis: Axis) -> Vec<f64> {
        match axis {
            Axis::Beta1 => self.beta1.clone(),
            Axis::Beta2 => self.beta2.clone(),
            Axis::Kappa => self.kappa.clone(),
            Axis::A => self.a.clone(),
            Axis::B => self.b.clone(),
            Axis::P => self.p.clone(),
            Axis::Rounds => self.rounds.iter().map(|&r| r as f64).collect(),
        }
    }

    /// Active axes with their sorted, deduplicated values.
    fn axes(&self, mode: SweepMode) -> Result<Vec<(Axis, Vec<f64>)>> {
        let mut out = Vec::new();
        for axis in Axis::ALL {
            let mut vals = self.values(axis);
            if vals.is_empty() {
                continue;
            }
            if !axis.allowed_in(mode) {
                return Err(Error::Config(format!(
                    "axis `{}` is not used by sweep mode {mode:?}",
                    axis.name()
                )));
            }
            if let Some(x) = vals.iter().find(|x| !x.is_finite()) {
                return Err(Error::Config(format!(
                    "axis `{}` has value {x}",
                    axis.name()
                )));
            }
            vals.sort_by(f64::total_cmp);
            vals.dedup();
            out.push((axis, vals));
        }
        Ok(out)
    }

    /// Cartesian product in lexicographic order of the active axes.
    pub fn points(&self, mode: SweepMode) -> Result<Vec<Vec<(Axis, f64)>>> {
        let axes = self.axes(mode)?;
        let mut points: Vec<Vec<(Axis, f64)>> = vec![Vec::new()];
        for (axis, vals) in &axes {
            points = points
                .into_iter()
                .flat_map(|prefix| {
                    vals.iter().map(move |v| {
                        let mut p = prefix.clone();
                        p.push((*axis, *v));
                        p
                    })
                })
                .collect();
        }
        Ok(points)
    }
}

/// A base experiment plus axes to vary. `base` defaults to the preset of
/// the tightness and non-oblivious modes; `simulate` requires one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub mode: SweepMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base: Option<serde_json::Value>,
    #[serde(default)]
    pub grid: SweepGrid,
    /// Non-oblivious mode only: skip points with `a >= b^2`.
    #[serde(default)]
    pub only_separated: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Cell {
    Num(f64),
    Count(usize),
    Flag(bool),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(x) => fmt_f64(*x),
            Cell::Count(n) => n.to_string(),
            Cell::Flag(b) => fmt_bool(*b),
        }
    }

    fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Num(x) => Some(*x),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PointStatus {
    Ok,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub point: BTreeMap<&'static str, f64>,
    #[serde(skip)]
    pub coords: Vec<(Axis, f64)>,
    pub status: PointStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    /// Named results in a fixed per-mode order.
    pub metrics: Vec<(String, Cell)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub contract_holds: Option<bool>,
    pub annotations: Vec<String>,
}

impl SweepRow {
    pub fn metric(&self, name: &str) -> Option<Cell> {
        self.metrics
            .iter()
            .find(|(k, _)| k == name)
            .map(|(_, c)| *c)
    }

    fn skipped(coords: Vec<(Axis, f64)>, reason: String) -> Self {
        Self {
            point: point_map(&coords),
            coords,
            status: PointStatus::Skipped,
            reason: Some(reason),
            metrics: Vec::new(),
            contract_holds: None,
            annotations: Vec::new(),
        }
    }
}

fn point_map(coords: &[(Axis, f64)]) -> BTreeMap<&'static str, f64> {
    coords.iter().map(|(a, v)| (a.name(), *v)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSummary {
    pub schema_version: u32,
    pub library_version: &'static str,
    pub command: &'static str,
    pub config: SweepConfig,
    pub points: usize,
    pub evaluated: usize,
    pub skipped: usize,
    pub contracts_hold: bool,
    /// Tightness mode: smallest `R_T / B` over the evaluated points.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_ratio: Option<f64>,
    pub rows: Vec<SweepRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub axes: Vec<Axis>,
    pub summary: SweepSummary,
}

impl SweepResult {
    pub fn rows(&self) -> &[SweepRow] {
        &self.summary.rows
    }

    pub fn table(&self) -> Table {
        let metric_names: Vec<String> = self
            .rows()
            .iter()
            .find(|r| r.status == PointStatus::Ok)
            .map(|r| r.metrics.iter().map(|(k, _)| k.clone()).collect())
            .unwrap_or_default();
        let mut header: Vec<String> = self.axes.iter().map(|a| a.name().to_string()).collect();
        header.extend(["status", "reason"].map(String::from));
        header.extend(metric_names.iter().cloned());
        header.extend(["contract_holds", "annotations"].map(String::from));
        let mut table = Table::new(header);
        for r in self.rows() {
            let mut row: Vec<String> = r
                .coords
                .iter()
                .map(|(a, v)| match a {
                    Axis::Rounds => (*v as usize).to_string(),
                    _ => fmt_f64(*v),
                })
                .collect();
            row.push(
                if r.status == PointStatus::Ok {
                    "ok"
                } else {
                    "skipped"
                }
                .into(),
            );
            row.push(r.reason.as_deref().unwrap_or("").replace([',', '\n'], ";"));
            for name in &metric_names {
                row.push(r.metric(name).map(|c| c.render()).unwrap_or_default());
            }
            row.push(r.contract_holds.map(fmt_bool).unwrap_or_default());
            row.push(r.annotations.join(";"));
            table.push(row);
        }
        table
    }
}

/// Errors that mean "this grid point is outside the regime", as opposed
/// to a broken configuration.
fn is_regime_error(e: &Error) -> bool {
    matches!(
        e,
        Error::Config(_)
            | Error::WrongRegime(_)
            | Error::OracleOverflow { .. }
            | Error::InvalidParam(_)
            | Error::SingularParameter(_)
    )
}

pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepResult> {
    let points = cfg.grid.points(cfg.mode)?;
    let axes: Vec<Axis> = points
        .first()
        .map(|p| p.iter().map(|(a, _)| *a).collect())
        .unwrap_or_default();

    let mut rows: Vec<SweepRow> = match cfg.mode {
        SweepMode::Simulate => {
            let base: ExperimentConfig = parse_base(cfg, None)?;
            if !cfg.grid.kappa.is_empty()
                && !matches!(base.adversary, AdversarySpec::Geometric { .. })
            {
                return Err(Error::Config(
                    "axis `kappa` needs a geometric adversary".into(),
                ));
            }
            points
                .into_par_iter()
                .map(|pt| simulate_point(&base, pt))
                .collect::<Result<_>>()?
        }
        SweepMode::Tightness => {
            let base: TightnessConfig = parse_base(cfg, Some(TightnessConfig::preset()))?;
            points
                .into_par_iter()
                .map(|pt| tightness_point(&base, pt))
                .collect::<Result<_>>()?
        }
        SweepMode::Nonoblivious => {
            let base: NonObliviousConfig = parse_base(cfg, Some(NonObliviousConfig::preset()))?;
            points
                .into_par_iter()
                .map(|pt| nonoblivious_point(&base, pt, cfg.only_separated))
                .collect::<Result<_>>()?
        }
    };

    let evaluated = rows.iter().filter(|r| r.status == PointStatus::Ok).count();
    if evaluated == 0 {
        return Err(Error::EmptyGrid);
    }
    let mut min_ratio = None;
    match cfg.mode {
        SweepMode::Simulate => annotate_argmin_beta2(&mut rows, &axes),
        SweepMode::Tightness => min_ratio = annotate_min(&mut rows, "ratio", "min_ratio"),
        SweepMode::Nonoblivious => {}
    }
    let summary = SweepSummary {
        schema_version: SCHEMA_VERSION,
        library_version: LIBRARY_VERSION,
        command: "sweep",
        config: cfg.clone(),
        points: rows.len(),
        evaluated,
        skipped: rows.len() - evaluated,
        contracts_hold: rows.iter().all(|r| r.contract_holds.unwrap_or(true)),
        min_ratio,
        rows,
    };
    Ok(SweepResult { axes, summary })
}

fn parse_base<T: for<'de> Deserialize<'de>>(cfg: &SweepConfig, preset: Option<T>) -> Result<T> {
    match (&cfg.base, preset) {
        (Some(v), _) => {
            serde_json::from_value(v.clone()).map_err(|e| Error::Config(format!("sweep base: {e}")))
        }
        (None, Some(p)) => Ok(p),
        (None, None) => Err(Error::Config(format!(
            "sweep mode {:?} needs `base`",
            cfg.mode
        ))),
    }
}

fn simulate_point(base: &ExperimentConfig, coords: Vec<(Axis, f64)>) -> Result<SweepRow> {
    let mut cfg = base.clone();
    for &(axis, v) in &coords {
        match axis {
            Axis::Beta1 => cfg.beta1 = v,
            Axis::Beta2 => cfg.beta2 = v,
            Axis::Rounds => cfg.rounds = v as usize,
            Axis::Kappa => {
                if let AdversarySpec::Geometric { kappa, .. } = &mut cfg.adversary {
                    *kappa = v;
                }
            }
            _ => unreachable!("axis filtered by mode"),
        }
    }
    let resolved = match cfg.resolve() {
        Ok(r) => r,
        Err(e) if is_regime_error(&e) => return Ok(SweepRow::skipped(coords, e.to_string())),
        Err(e) => return Err(e),
    };
    let res = match run_resolved(&cfg, &resolved) {
        Ok(r) => r,
        Err(e) if is_regime_error(&e) => return Ok(SweepRow::skipped(coords, e.to_string())),
        Err(e) => return Err(e),
    };
    let s = &res.summary;
    let mut metrics = vec![
        ("p".to_string(), Cell::Num(s.p)),
        (
            "regret_discounted".to_string(),
            Cell::Num(s.regret_discounted),
        ),
        ("clipping_count".to_string(), Cell::Count(s.clipping_count)),
    ];
    let cap = resolved.params.domain().half_width();
    for b in &s.bounds {
        let name = b.kind.name();
        metrics.push((
            name.to_string(),
            Cell::Num(b.report.map_or(f64::NAN, |r| r.total)),
        ));
        if let Some(d) = b.dominates {
            metrics.push((format!("{name}_dominates"), Cell::Flag(d)));
        }
        // Capped at the half-width, the bound depends on the gradients only,
        // which makes it comparable across beta2 for a fixed sequence.
        if matches!(b.kind, BoundKind::Corollary1 | BoundKind::Theorem3) {
            let capped = match (cap, s.final_stats, b.report) {
                (Some(d), Some(stats), Some(_)) => {
                    evaluate_bound(
                        b.kind,
                        &resolved.params,
                        &stats.with_range_cap(d),
                        resolved.u,
                        &resolved.gradients,
                        resolved.horizon,
                    )?
                    .total
                }
                _ => f64::NAN,
            };
            metrics.push((format!("{name}_capped"), Cell::Num(capped)));
        }
    }
    Ok(SweepRow {
        point: point_map(&coords),
        coords,
        status: PointStatus::Ok,
        reason: None,
        metrics,
        contract_holds: Some(s.contracts_hold),
        annotations: Vec::new(),
    })
}

fn tightness_point(base: &TightnessConfig, coords: Vec<(Axis, f64)>) -> Result<SweepRow> {
    let mut cfg = base.clone();
    for &(axis, v) in &coords {
        match axis {
            Axis::P => cfg.p = v,
            Axis::Kappa => cfg.kappa = Some(v),
            Axis::Rounds => cfg.rounds = v as usize,
            _ => unreachable!("axis filtered by mode"),
        }
    }
    let report = match run_tightness_experiment(&cfg) {
        Ok(r) => r,
        Err(e) if is_regime_error(&e) => return Ok(SweepRow::skipped(coords, e.to_string())),
        Err(e) => return Err(e),
    };
    let metrics = vec![
        ("kappa".to_string(), Cell::Num(cfg.kappa())),
        ("regret".to_string(), Cell::Num(report.regret)),
        ("lower".to_string(), Cell::Num(report.lower)),
        ("B".to_string(), Cell::Num(report.b)),
        ("ratio".to_string(), Cell::Num(report.ratio)),
        ("max_prebar".to_string(), Cell::Num(report.max_prebar)),
        (
            "clipping_count".to_string(),
            Cell::Count(report.clipping_count),
        ),
    ];
    Ok(SweepRow {
        point: point_map(&coords),
        coords,
        status: PointStatus::Ok,
        reason: None,
        metrics,
        contract_holds: Some(report.contract_holds(cfg.d, cfg.min_ratio())),
        annotations: Vec::new(),
    })
}

fn nonoblivious_point(
    base: &NonObliviousConfig,
    coords: Vec<(Axis, f64)>,
    only_separated: bool,
) -> Result<SweepRow> {
    let mut cfg = base.clone();
    for &(axis, v) in &coords {
        match axis {
            Axis::A => cfg.a = v,
            Axis::B => cfg.b = v,
            Axis::Beta1 => cfg.beta1 = v,
            Axis::P => cfg.p = v,
            Axis::Rounds => cfg.rounds = v as usize,
            _ => unreachable!("axis filtered by mode"),
        }
    }
    let separated = cfg.a < cfg.b * cfg.b;
    if only_separated && !separated {
        return Ok(SweepRow::skipped(
            coords,
            format!("a = {} >= b^2 = {}", cfg.a, cfg.b * cfg.b),
        ));
    }
    let report = match run_nonoblivious_experiment(&cfg) {
        Ok(r) => r,
        Err(e) if is_regime_error(&e) => return Ok(SweepRow::skipped(coords, e.to_string())),
        Err(e) => return Err(e),
    };
    let metrics = vec![
        ("K".to_string(), Cell::Num(report.k)),
        ("alpha".to_string(), Cell::Num(report.alpha)),
        ("regret_a".to_string(), Cell::Num(report.regret_a)),
        ("regret_aprime".to_string(), Cell::Num(report.regret_aprime)),
        (
            "per_round_strict".to_string(),
            Cell::Flag(report.per_round_strict),
        ),
        ("separated".to_string(), Cell::Flag(separated)),
        (
            "clipping_count".to_string(),
            Cell::Count(report.clipping_count),
        ),
    ];
    Ok(SweepRow {
        point: point_map(&coords),
        coords,
        status: PointStatus::Ok,
        reason: report.warning.clone(),
        metrics,
        // Separation is only guaranteed for a < b^2.
        contract_holds: separated.then(|| report.contract_holds()),
        annotations: Vec::new(),
    })
}

/// Within each group of points that differ only in `beta2`, marks the
/// `beta2` minimizing each capped bound.
fn annotate_argmin_beta2(rows: &mut [SweepRow], axes: &[Axis]) {
    if !axes.contains(&Axis::Beta2) {
        return;
    }
    for kind in [BoundKind::Corollary1, BoundKind::Theorem3] {
        let metric = format!("{}_capped", kind.name());
        let mut best: BTreeMap<Vec<u64>, (usize, f64)> = BTreeMap::new();
        for (i, r) in rows.iter().enumerate() {
            let Some(v) = r
                .metric(&metric)
                .and_then(|c| c.as_f64())
                .filter(|v| v.is_finite())
            else {
                continue;
            };
            let key: Vec<u64> = r
                .coords
                .iter()
                .filter(|(a, _)| *a != Axis::Beta2)
                .map(|(_, x)| x.to_bits())
                .collect();
            let slot = best.entry(key).or_insert((i, v));
            if v < slot.1 {
                *slot = (i, v);
            }
        }
        for (i, _) in best.into_values() {
            rows[i]
                .annotations
                .push(format!("argmin_beta2_{}", kind.name()));
        }
    }
}

fn annotate_min(rows: &mut [SweepRow], metric: &str, label: &str) -> Option<f64> {
    let (i, v) = rows
        .iter()
        .enumerate()
        .filter_map(|(i, r)| r.metric(metric).and_then(|c| c.as_f64()).map(|v| (i, v)))
        .min_by(|a, b| a.1.total_cmp(&b.1))?;
    rows[i].annotations.push(label.to_string());
    Some(v)
}
