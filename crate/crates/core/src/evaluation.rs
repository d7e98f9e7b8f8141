//! Out-of-sample evaluation of fixed first-stage decisions.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{check_scenario_shape, validate_decision, DomainError, FirstStageDecision, Instance, Scenario};
use crate::recourse::recourse_on_route;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error(transparent)]
    Domain(#[from] DomainError),
}

/// Nearest-rank percentile of an ascending slice: the value at rank
/// `ceil(p/100 · n)`, with rank at least 1.
pub fn nearest_rank(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "percentile of an empty sample");
    let rank = ((p / 100.0) * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

fn sorted(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct EvaluationReport {
    pub scenarios: usize,
    pub mean_cost: f64,
    /// 20th / 80th percentiles of the per-scenario costs.
    pub p20: f64,
    pub p80: f64,
    /// Mean waiting and idle minutes by position `1..=N`.
    pub mean_wait: Vec<f64>,
    pub mean_idle: Vec<f64>,
    pub mean_overtime: f64,
    pub mean_travel: f64,
    pub interarrival: Vec<f64>,
}

impl EvaluationReport {
    pub fn total_wait(&self) -> f64 {
        self.mean_wait.iter().sum()
    }

    pub fn total_idle(&self) -> f64 {
        self.mean_idle.iter().sum()
    }

    /// Cost rebuilt from the component means; equals `mean_cost` up to rounding.
    pub fn recomposed_cost(&self, inst: &Instance) -> f64 {
        let c = &inst.costs;
        let w: f64 = self.mean_wait.iter().zip(&c.wait_cost).map(|(a, b)| a * b).sum();
        let u: f64 = self.mean_idle.iter().zip(&c.idle_cost).map(|(a, b)| a * b).sum();
        w + u + c.overtime_cost * self.mean_overtime + c.travel_cost * self.mean_travel
    }
}

/// `I_j = a_j - a_{j-1}` with `a_0 = 0`.
pub fn interarrival_profile(dec: &FirstStageDecision) -> Vec<f64> {
    let mut prev = 0.0;
    dec.appointments
        .iter()
        .map(|&a| {
            let d = a - prev;
            prev = a;
            d
        })
        .collect()
}

/// Per-scenario recourse costs of a decision.
pub fn scenario_costs(dec: &FirstStageDecision, scenarios: &[Scenario], inst: &Instance) -> Result<Vec<f64>, EvalError> {
    let route = validate_decision(inst, dec)?;
    scenarios
        .iter()
        .map(|sc| {
            check_scenario_shape(inst, sc)?;
            Ok(recourse_on_route(&route, &dec.appointments, sc, inst).cost)
        })
        .collect()
}

pub fn out_of_sample(dec: &FirstStageDecision, scenarios: &[Scenario], inst: &Instance) -> Result<EvaluationReport, EvalError> {
    if scenarios.is_empty() {
        return Err(EvalError::Argument("at least one scenario is required".into()));
    }
    let route = validate_decision(inst, dec)?;
    let n = inst.n;
    let count = scenarios.len() as f64;
    let mut costs = Vec::with_capacity(scenarios.len());
    let (mut wait, mut idle) = (vec![0.0; n], vec![0.0; n]);
    let (mut overtime, mut travel) = (0.0, 0.0);
    for sc in scenarios {
        check_scenario_shape(inst, sc)?;
        let out = recourse_on_route(&route, &dec.appointments, sc, inst);
        for j in 0..n {
            wait[j] += out.wait[j];
            idle[j] += out.idle[j];
        }
        overtime += out.overtime();
        travel += out.travel_total;
        costs.push(out.cost);
    }
    let s = sorted(&costs);
    Ok(EvaluationReport {
        scenarios: scenarios.len(),
        mean_cost: costs.iter().sum::<f64>() / count,
        p20: nearest_rank(&s, 20.0),
        p80: nearest_rank(&s, 80.0),
        mean_wait: wait.into_iter().map(|v| v / count).collect(),
        mean_idle: idle.into_iter().map(|v| v / count).collect(),
        mean_overtime: overtime / count,
        mean_travel: travel / count,
        interarrival: interarrival_profile(dec),
    })
}

/// Summary over replications: percentiles are taken over the per-replication means.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AggregateReport {
    pub replications: usize,
    pub mean_cost: f64,
    pub p20: f64,
    pub p80: f64,
    pub mean_wait: f64,
    pub mean_idle: f64,
    pub mean_overtime: f64,
    pub mean_travel: f64,
    pub mean_interarrival: Vec<f64>,
}

pub fn aggregate(reports: &[EvaluationReport]) -> Result<AggregateReport, EvalError> {
    let k = reports.len();
    if k == 0 {
        return Err(EvalError::Argument("no reports to aggregate".into()));
    }
    let n = reports[0].interarrival.len();
    if reports.iter().any(|r| r.interarrival.len() != n) {
        return Err(EvalError::Argument("reports have different N".into()));
    }
    let kf = k as f64;
    let avg = |f: &dyn Fn(&EvaluationReport) -> f64| reports.iter().map(f).sum::<f64>() / kf;
    let means: Vec<f64> = reports.iter().map(|r| r.mean_cost).collect();
    let s = sorted(&means);
    Ok(AggregateReport {
        replications: k,
        mean_cost: avg(&|r| r.mean_cost),
        p20: nearest_rank(&s, 20.0),
        p80: nearest_rank(&s, 80.0),
        mean_wait: avg(&|r| r.total_wait()),
        mean_idle: avg(&|r| r.total_idle()),
        mean_overtime: avg(&|r| r.mean_overtime),
        mean_travel: avg(&|r| r.mean_travel),
        mean_interarrival: (0..n).map(|j| avg(&|r| r.interarrival[j])).collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ReliabilityResult {
    pub fraction: f64,
    pub instances: usize,
    pub oos_scenarios: usize,
}

/// One instance of a reliability study: a model's optimal value and its decision.
#[derive(Debug, Clone)]
pub struct ReliabilityCase<'a> {
    pub model_value: f64,
    pub decision: &'a FirstStageDecision,
    pub instance: &'a Instance,
    pub scenarios: &'a [Scenario],
}

/// Fraction of cases whose model value is at least the estimated true expected
/// cost (out-of-sample mean) of the decision.
pub fn reliability(cases: &[ReliabilityCase]) -> Result<ReliabilityResult, EvalError> {
    let mut pairs = Vec::with_capacity(cases.len());
    let mut oos = 0;
    for c in cases {
        let costs = scenario_costs(c.decision, c.scenarios, c.instance)?;
        if costs.is_empty() {
            return Err(EvalError::Argument("out-of-sample set is empty".into()));
        }
        pairs.push((c.model_value, costs.iter().sum::<f64>() / costs.len() as f64));
        oos = oos.max(costs.len());
    }
    reliability_from_means(&pairs, oos)
}

/// Same count from precomputed `(model value, out-of-sample mean)` pairs.
pub fn reliability_from_means(pairs: &[(f64, f64)], oos_scenarios: usize) -> Result<ReliabilityResult, EvalError> {
    if pairs.is_empty() {
        return Err(EvalError::Argument("at least one instance is required".into()));
    }
    let hits = pairs.iter().filter(|(v, m)| v >= m).count();
    Ok(ReliabilityResult { fraction: hits as f64 / pairs.len() as f64, instances: pairs.len(), oos_scenarios })
}

/// `{0.01..0.09} ∪ {0.1..0.9} ∪ {1..10}`, 28 radii in ascending order.
pub fn default_epsilon_grid() -> Vec<f64> {
    let small = (1..=9).map(|k| k as f64 / 100.0);
    let mid = (1..=9).map(|k| k as f64 / 10.0);
    let large = (1..=10).map(|k| k as f64);
    small.chain(mid).chain(large).collect()
}
