//! Experiment harness: parameter sweeps over seeded instances, per-row and
//! aggregate results, and the data files behind each figure and table.

mod emit;
mod verify;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::baselines::{place, BaselineConfig, RateRule, Scheme};
use crate::evaluator::{Assignment, Evaluator, Layout, MetricBreakdown};
use crate::ilp::IlpModel;
use crate::instance::{generate, GeneratorParams, InstanceError, ScenarioInstance};
use crate::solver::{solve_exact_warm, solve_heuristic_with, Budget, HeuristicParams};

pub use emit::{emit_results, EmittedFile, Manifest};
pub use verify::{oracle_instance, verify, Check};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid sweep spec: {0}")]
    Spec(String),
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error(transparent)]
    Ilp(#[from] crate::ilp::IlpError),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    /// Values are delay/power weights.
    MuSweep,
    /// Values are background model sizes in Mbit, the unit of the generator.
    BackSizeSweep,
    /// Mobility mass 0; values are delay/power weights.
    NoMobility,
    /// Values are VM slots per EC.
    Congestion,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Self::MuSweep => "mu_sweep",
            Self::BackSizeSweep => "back_size_sweep",
            Self::NoMobility => "no_mobility",
            Self::Congestion => "congestion",
        }
    }

    fn value_label(self) -> &'static str {
        match self {
            Self::MuSweep | Self::NoMobility => "mu",
            Self::BackSizeSweep => "back_size_mbit",
            Self::Congestion => "vm_slots",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemeId {
    Optim,
    RandS,
    Cfs,
    Util,
}

impl SchemeId {
    pub fn name(self) -> &'static str {
        match self {
            Self::Optim => "optim",
            Self::RandS => "rands",
            Self::Cfs => "cfs",
            Self::Util => "util",
        }
    }

    fn baseline(self) -> Option<Scheme> {
        match self {
            Self::Optim => None,
            Self::RandS => Some(Scheme::RandS),
            Self::Cfs => Some(Scheme::Cfs),
            Self::Util => Some(Scheme::Util),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimMethod {
    #[default]
    Heuristic,
    /// Branch-and-bound under `budget`, started from the heuristic.
    Exact,
}

fn default_util_cap() -> f64 {
    0.8
}

fn default_rate_rule() -> RateRule {
    RateRule::BestResponse
}

/// One sweep: every (value, seed) pair is an instance, every scheme is run
/// on it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub experiment: Experiment,
    pub values: Vec<f64>,
    pub seeds: Vec<u64>,
    pub schemes: Vec<SchemeId>,
    /// Generator overrides applied before the swept value.
    #[serde(default)]
    pub params: Map<String, Value>,
    /// Weight for sweeps whose value is not the weight.
    #[serde(default)]
    pub mu: Option<f64>,
    #[serde(default)]
    pub method: OptimMethod,
    #[serde(default)]
    pub heuristic: HeuristicParams,
    #[serde(default)]
    pub budget: Budget,
    #[serde(default = "default_util_cap")]
    pub util_cap: f64,
    #[serde(default = "default_rate_rule")]
    pub rate_rule: RateRule,
}

impl SweepSpec {
    pub fn new(experiment: Experiment, values: Vec<f64>, seeds: Vec<u64>) -> Self {
        Self {
            experiment,
            values,
            seeds,
            schemes: vec![SchemeId::Optim, SchemeId::RandS, SchemeId::Cfs, SchemeId::Util],
            params: Map::new(),
            mu: None,
            method: OptimMethod::Heuristic,
            heuristic: HeuristicParams::default(),
            budget: Budget::default(),
            util_cap: default_util_cap(),
            rate_rule: default_rate_rule(),
        }
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        let bad = |m: String| Err(BenchError::Spec(m));
        if self.values.is_empty() {
            return bad("`values` is empty".into());
        }
        if self.seeds.is_empty() {
            return bad("`seeds` is empty".into());
        }
        if self.schemes.is_empty() {
            return bad("`schemes` is empty".into());
        }
        let mut seen = self.schemes.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.schemes.len() {
            return bad("`schemes` lists a scheme twice".into());
        }
        if !(self.util_cap > 0.0 && self.util_cap <= 1.0) {
            return bad(format!("util_cap {} outside (0, 1]", self.util_cap));
        }
        for &v in &self.values {
            let ok = match self.experiment {
                Experiment::MuSweep | Experiment::NoMobility => (0.0..=1.0).contains(&v),
                Experiment::BackSizeSweep => v > 0.0 && v.is_finite(),
                Experiment::Congestion => v >= 1.0 && v.fract() == 0.0,
            };
            if !ok {
                return bad(format!("value {v} is not a valid {}", self.experiment.value_label()));
            }
        }
        if let Some(mu) = self.mu {
            if !(0.0..=1.0).contains(&mu) {
                return bad(format!("mu {mu} outside [0, 1]"));
            }
        }
        self.base_params().map(|_| ())
    }

    fn base_params(&self) -> Result<GeneratorParams, BenchError> {
        Ok(GeneratorParams::default().with_overrides(&self.params)?)
    }

    /// Instance and weight of one sweep point.
    pub fn point(&self, value: f64, seed: u64) -> Result<(ScenarioInstance, f64), BenchError> {
        let mut p = self.base_params()?;
        let mut mu = self.mu.unwrap_or(p.mu);
        match self.experiment {
            Experiment::MuSweep => mu = value,
            Experiment::BackSizeSweep => p.back_size_mbit_range = [value, value],
            Experiment::NoMobility => {
                p.mobility_mass = 0.0;
                mu = value;
            }
            Experiment::Congestion => p.vm_slots = value as u32,
        }
        Ok((generate(seed, &p)?, mu))
    }
}

/// One (value, seed, scheme) outcome. Metrics are absent when the scheme
/// failed to produce an assignment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub value: f64,
    pub seed: u64,
    pub scheme: SchemeId,
    pub method: String,
    pub status: String,
    pub failed_requests: Vec<usize>,
    pub audit_violations: usize,
    pub n_requests: usize,
    pub n_targets: usize,
    pub nodes: u64,
    pub metrics: Option<MetricBreakdown<f64>>,
}

impl ResultRow {
    pub fn ok(&self) -> bool {
        self.metrics.is_some()
    }

    pub fn objective(&self) -> Option<f64> {
        self.metrics.map(|m| m.objective)
    }

    /// Mean service delay per request (ms).
    pub fn delay_ms(&self) -> Option<f64> {
        self.metrics.map(|m| m.latency_ms / self.n_requests as f64)
    }

    /// Mean power per request (W).
    pub fn power_w(&self) -> Option<f64> {
        self.metrics.map(|m| m.power_w / self.n_requests as f64)
    }

    /// Mean SSIM over all target AROs.
    pub fn mean_ssim(&self) -> Option<f64> {
        self.metrics.map(|m| m.quality / self.n_targets as f64)
    }
}

/// Statistic columns of an aggregate row.
pub const AGG_METRICS: [&str; 6] = ["objective", "delay_ms", "power_w", "mean_ssim", "sum_latency_ms", "sum_power_w"];

fn row_metric(row: &ResultRow, k: usize) -> Option<f64> {
    match k {
        0 => row.objective(),
        1 => row.delay_ms(),
        2 => row.power_w(),
        3 => row.mean_ssim(),
        4 => row.metrics.map(|m| m.latency_ms),
        _ => row.metrics.map(|m| m.power_w),
    }
}

/// Mean and sample standard deviation per (value, scheme) over seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub value: f64,
    pub scheme: SchemeId,
    pub n: usize,
    pub n_failed: usize,
    /// `(mean, std)` in [`AGG_METRICS`] order; `None` when no row succeeded.
    pub stats: Vec<Option<(f64, f64)>>,
}

impl AggregateRow {
    pub fn mean(&self, metric: &str) -> Option<f64> {
        let k = AGG_METRICS.iter().position(|&m| m == metric)?;
        self.stats[k].map(|s| s.0)
    }
}

pub fn mean_std(xs: &[f64]) -> Option<(f64, f64)> {
    if xs.is_empty() {
        return None;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = if xs.len() > 1 { xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    Some((mean, var.sqrt()))
}

pub fn aggregate(spec: &SweepSpec, rows: &[ResultRow]) -> Vec<AggregateRow> {
    let mut out = Vec::new();
    for &value in &spec.values {
        for &scheme in &spec.schemes {
            let group: Vec<&ResultRow> = rows.iter().filter(|r| r.value == value && r.scheme == scheme).collect();
            let ok: Vec<&&ResultRow> = group.iter().filter(|r| r.ok()).collect();
            let stats = (0..AGG_METRICS.len())
                .map(|k| mean_std(&ok.iter().filter_map(|r| row_metric(r, k)).collect::<Vec<_>>()))
                .collect();
            out.push(AggregateRow { value, scheme, n: ok.len(), n_failed: group.len() - ok.len(), stats });
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub spec: SweepSpec,
    pub rows: Vec<ResultRow>,
    pub aggregates: Vec<AggregateRow>,
}

impl ExperimentResult {
    pub fn aggregate(&self, value: f64, scheme: SchemeId) -> Option<&AggregateRow> {
        self.aggregates.iter().find(|a| a.value == value && a.scheme == scheme)
    }

    /// Mean of `metric` per value for one scheme, in spec order.
    pub fn series(&self, scheme: SchemeId, metric: &str) -> Vec<Option<f64>> {
        self.spec.values.iter().map(|&v| self.aggregate(v, scheme).and_then(|a| a.mean(metric))).collect()
    }

    /// Every assignment-producing row with a non-empty audit.
    pub fn audit_failures(&self) -> Vec<&ResultRow> {
        self.rows.iter().filter(|r| r.audit_violations > 0).collect()
    }
}

fn row_for(
    inst: &ScenarioInstance,
    layout: &Layout,
    ev: &Evaluator<'_, f64>,
    value: f64,
    seed: u64,
    scheme: SchemeId,
    method: &str,
) -> ResultRow {
    ResultRow {
        value,
        seed,
        scheme,
        method: method.to_string(),
        status: String::new(),
        failed_requests: Vec::new(),
        audit_violations: 0,
        n_requests: inst.n_requests(),
        n_targets: layout.requests.iter().map(|r| r.targets.len()).sum(),
        nodes: 0,
        metrics: None,
    }
    .with_assignment_metrics(inst, layout, ev, None)
}

impl ResultRow {
    fn with_assignment_metrics(
        mut self,
        inst: &ScenarioInstance,
        layout: &Layout,
        ev: &Evaluator<'_, f64>,
        a: Option<&Assignment>,
    ) -> Self {
        if let Some(a) = a {
            self.audit_violations = a.audit(inst, layout).len();
            self.metrics = ev.metrics_unchecked(a).ok();
        }
        self
    }
}

fn run_point(spec: &SweepSpec, value: f64, seed: u64) -> Result<Vec<ResultRow>, BenchError> {
    let (inst, mu) = spec.point(value, seed)?;
    let ev = Evaluator::<f64>::new(&inst).with_mu(mu);
    let layout = ev.layout().clone();
    let mut baseline_runs = Vec::new();
    for scheme in Scheme::ALL {
        let cfg = BaselineConfig { scheme, util_cap: spec.util_cap, seed, rate_rule: spec.rate_rule };
        baseline_runs.push((scheme, place(&inst, mu, &cfg)));
    }
    let mut rows = Vec::new();
    for &id in &spec.schemes {
        let row = match id.baseline() {
            Some(scheme) => {
                let run = &baseline_runs.iter().find(|(s, _)| *s == scheme).expect("all schemes run").1;
                let mut row = row_for(&inst, &layout, &ev, value, seed, id, "placement");
                match run {
                    Ok(a) => {
                        row.status = "ok".into();
                        row.with_assignment_metrics(&inst, &layout, &ev, Some(a))
                    }
                    Err(e) => {
                        row.status = "failed".into();
                        row.failed_requests = e.failed_requests().to_vec();
                        row
                    }
                }
            }
            None => {
                let starts: Vec<Assignment> =
                    baseline_runs.iter().filter_map(|(_, r)| r.as_ref().ok().cloned()).collect();
                let params = HeuristicParams { seed, ..spec.heuristic.clone() };
                let mut report = solve_heuristic_with(&inst, mu, &params, &starts);
                if spec.method == OptimMethod::Exact {
                    let model = IlpModel::build(&inst, mu)?;
                    report = match &report.assignment {
                        Some(warm) => solve_exact_warm(&model, &spec.budget, warm),
                        None => crate::solver::solve_exact(&model, &spec.budget),
                    };
                }
                let mut row = row_for(&inst, &layout, &ev, value, seed, id, &report.method.to_string());
                row.status = report.status.to_string();
                row.nodes = report.nodes;
                row.with_assignment_metrics(&inst, &layout, &ev, report.assignment.as_ref())
            }
        };
        rows.push(row);
    }
    Ok(rows)
}

/// Run every (value, seed, scheme) of `spec`. Points run in parallel; rows
/// come back in spec order (value, then seed, then scheme).
pub fn run_sweep(spec: &SweepSpec) -> Result<ExperimentResult, BenchError> {
    spec.validate()?;
    let points: Vec<(f64, u64)> = spec.values.iter().flat_map(|&v| spec.seeds.iter().map(move |&s| (v, s))).collect();
    let chunks: Vec<Vec<ResultRow>> =
        points.par_iter().map(|&(v, s)| run_point(spec, v, s)).collect::<Result<_, _>>()?;
    let rows: Vec<ResultRow> = chunks.into_iter().flatten().collect();
    let aggregates = aggregate(spec, &rows);
    Ok(ExperimentResult { spec: spec.clone(), rows, aggregates })
}

/// Least-squares slope of `ys` against `xs`.
pub fn slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let n = xs.len() as f64;
    if xs.len() < 2 || xs.len() != ys.len() {
        return None;
    }
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}
