//! Problem data: instances, scenarios, first-stage decisions.
//!
//! Customers are numbered `1..=N` in routes and in the travel matrices, where
//! index 0 is the depot. Service vectors are stored 0-based, so customer `i`
//! has service time `service[i - 1]`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance used when checking decisions produced by a solver.
pub const DECISION_TOL: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DomainError {
    #[error("{what}: expected length {expected}, got {got}")]
    Dimension { what: String, expected: usize, got: usize },
    #[error("assignment is not a permutation matrix: {0}")]
    NotPermutation(String),
    #[error("invalid decision: {0}")]
    InvalidDecision(String),
}

fn check_len(what: &str, expected: usize, got: usize) -> Result<(), DomainError> {
    if expected == got {
        Ok(())
    } else {
        Err(DomainError::Dimension { what: what.into(), expected, got })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CostStructure {
    pub wait_cost: Vec<f64>,
    pub idle_cost: Vec<f64>,
    pub overtime_cost: f64,
    pub travel_cost: f64,
}

impl CostStructure {
    pub fn uniform(n: usize, wait: f64, idle: f64, overtime: f64, travel: f64) -> Self {
        CostStructure { wait_cost: vec![wait; n], idle_cost: vec![idle; n], overtime_cost: overtime, travel_cost: travel }
    }

    /// Waiting cost of position `j` in `1..=N+2`; position N+1 carries the
    /// overtime rate and N+2 is a zero-cost sentinel.
    pub fn wait_ext(&self, j: usize) -> f64 {
        let n = self.wait_cost.len();
        match j {
            j if j >= 1 && j <= n => self.wait_cost[j - 1],
            j if j == n + 1 => self.overtime_cost,
            _ => 0.0,
        }
    }

    /// Idle cost of position `j` in `1..=N+2`; zero beyond N.
    pub fn idle_ext(&self, j: usize) -> f64 {
        if j >= 1 && j <= self.idle_cost.len() {
            self.idle_cost[j - 1]
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Instance {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "L")]
    pub horizon: f64,
    pub costs: CostStructure,
    pub service_lower: Vec<f64>,
    pub service_upper: Vec<f64>,
    pub travel_lower: Vec<Vec<f64>>,
    pub travel_upper: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub service_mean: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub travel_mean: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub service: Vec<f64>,
    pub travel: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FirstStageDecision {
    /// `assignment[i-1][j-1] = 1` when customer `i` is visited in position `j`.
    pub assignment: Vec<Vec<u8>>,
    pub appointments: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SupportDeltas {
    pub delta_service: Vec<f64>,
    pub delta_travel: Vec<Vec<f64>>,
}

/// One broken invariant, e.g. `serviceLower[2]: lower 60 exceeds upper 50`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub field: String,
    pub index: Vec<usize>,
    pub message: String,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.field)?;
        for i in &self.index {
            write!(f, "[{i}]")?;
        }
        write!(f, ": {}", self.message)
    }
}

fn violation(field: &str, index: Vec<usize>, message: String) -> Violation {
    Violation { field: field.into(), index, message }
}

fn matrix_shape(out: &mut Vec<Violation>, field: &str, m: &[Vec<f64>], size: usize) -> bool {
    if m.len() != size || m.iter().any(|r| r.len() != size) {
        out.push(violation(field, vec![], format!("expected a {size}x{size} matrix")));
        false
    } else {
        true
    }
}

/// Every broken `Instance` invariant. Indices are 0-based positions in the
/// stored vectors; travel entries use `[row, col]` with 0 the depot.
pub fn validate_instance(inst: &Instance) -> Vec<Violation> {
    let mut out = Vec::new();
    let n = inst.n;
    if n == 0 {
        out.push(violation("N", vec![], "at least one customer is required".into()));
    }
    if !(inst.horizon > 0.0) || !inst.horizon.is_finite() {
        out.push(violation("L", vec![], format!("horizon must be positive, got {}", inst.horizon)));
    }
    let c = &inst.costs;
    for (field, v) in [("costs.waitCost", &c.wait_cost), ("costs.idleCost", &c.idle_cost)] {
        if v.len() != n {
            out.push(violation(field, vec![], format!("expected length {n}, got {}", v.len())));
        }
        for (k, x) in v.iter().enumerate() {
            if !(*x >= 0.0) {
                out.push(violation(field, vec![k], format!("cost must be nonnegative, got {x}")));
            }
        }
    }
    for (field, x) in [("costs.overtimeCost", c.overtime_cost), ("costs.travelCost", c.travel_cost)] {
        if !(x >= 0.0) {
            out.push(violation(field, vec![], format!("cost must be nonnegative, got {x}")));
        }
    }

    let service_ok = inst.service_lower.len() == n && inst.service_upper.len() == n;
    if !service_ok {
        out.push(violation("serviceLower", vec![], format!("service bounds must have length {n}")));
    } else {
        for k in 0..n {
            let (lo, hi) = (inst.service_lower[k], inst.service_upper[k]);
            if !(lo >= 0.0) {
                out.push(violation("serviceLower", vec![k], format!("lower bound must be nonnegative, got {lo}")));
            }
            if !(lo <= hi) {
                out.push(violation("serviceLower", vec![k], format!("lower {lo} exceeds upper {hi}")));
            }
        }
        if let Some(mean) = &inst.service_mean {
            if mean.len() != n {
                out.push(violation("serviceMean", vec![], format!("expected length {n}, got {}", mean.len())));
            } else {
                for k in 0..n {
                    if !(inst.service_lower[k] <= mean[k] && mean[k] <= inst.service_upper[k]) {
                        out.push(violation("serviceMean", vec![k], format!("mean {} outside support", mean[k])));
                    }
                }
            }
        }
    }

    let lo_ok = matrix_shape(&mut out, "travelLower", &inst.travel_lower, n + 1);
    let hi_ok = matrix_shape(&mut out, "travelUpper", &inst.travel_upper, n + 1);
    if lo_ok && hi_ok {
        for i in 0..=n {
            for k in 0..=n {
                if i == k {
                    continue;
                }
                let (lo, hi) = (inst.travel_lower[i][k], inst.travel_upper[i][k]);
                if !(lo >= 0.0) {
                    out.push(violation("travelLower", vec![i, k], format!("lower bound must be nonnegative, got {lo}")));
                }
                if !(lo <= hi) {
                    out.push(violation("travelLower", vec![i, k], format!("lower {lo} exceeds upper {hi}")));
                }
            }
        }
        if let Some(mean) = &inst.travel_mean {
            if matrix_shape(&mut out, "travelMean", mean, n + 1) {
                for i in 0..=n {
                    for k in 0..=n {
                        if i != k && !(inst.travel_lower[i][k] <= mean[i][k] && mean[i][k] <= inst.travel_upper[i][k]) {
                            out.push(violation("travelMean", vec![i, k], format!("mean {} outside support", mean[i][k])));
                        }
                    }
                }
            }
        }
    }
    out
}

/// Support violations of a scenario against an instance box (plus shape and
/// sign checks).
pub fn scenario_violations(inst: &Instance, sc: &Scenario, tol: f64) -> Vec<Violation> {
    let mut out = Vec::new();
    let n = inst.n;
    if sc.service.len() != n {
        out.push(violation("service", vec![], format!("expected length {n}, got {}", sc.service.len())));
    } else {
        for k in 0..n {
            let d = sc.service[k];
            if !(d >= 0.0) || d < inst.service_lower[k] - tol || d > inst.service_upper[k] + tol {
                out.push(violation("service", vec![k], format!("{d} outside [{}, {}]", inst.service_lower[k], inst.service_upper[k])));
            }
        }
    }
    if matrix_shape(&mut out, "travel", &sc.travel, n + 1) {
        for i in 0..=n {
            for k in 0..=n {
                if i == k {
                    continue;
                }
                let t = sc.travel[i][k];
                if !(t >= 0.0) || t < inst.travel_lower[i][k] - tol || t > inst.travel_upper[i][k] + tol {
                    out.push(violation(
                        "travel",
                        vec![i, k],
                        format!("{t} outside [{}, {}]", inst.travel_lower[i][k], inst.travel_upper[i][k]),
                    ));
                }
            }
        }
    }
    out
}

impl Instance {
    /// An instance whose support box collapses to a single scenario.
    pub fn degenerate_at(&self, sc: &Scenario) -> Instance {
        Instance {
            service_lower: sc.service.clone(),
            service_upper: sc.service.clone(),
            travel_lower: sc.travel.clone(),
            travel_upper: sc.travel.clone(),
            service_mean: Some(sc.service.clone()),
            travel_mean: Some(sc.travel.clone()),
            ..self.clone()
        }
    }

    pub fn lambda(&self) -> f64 {
        self.costs.travel_cost
    }

    pub fn support_deltas(&self) -> SupportDeltas {
        SupportDeltas {
            delta_service: self.service_lower.iter().zip(&self.service_upper).map(|(l, u)| u - l).collect(),
            delta_travel: self
                .travel_lower
                .iter()
                .zip(&self.travel_upper)
                .map(|(lr, ur)| lr.iter().zip(ur).map(|(l, u)| u - l).collect())
                .collect(),
        }
    }

    /// ℓ1 diameter of the support box over all service times and all
    /// off-diagonal travel times.
    pub fn l1_diameter(&self) -> f64 {
        let d = self.support_deltas();
        let s: f64 = d.delta_service.iter().sum();
        let t: f64 = (0..=self.n)
            .flat_map(|i| (0..=self.n).filter(move |&k| k != i).map(move |k| (i, k)))
            .map(|(i, k)| d.delta_travel[i][k])
            .sum();
        s + t
    }
}

/// Permutation matrix for a route of 1-based customer ids.
pub fn route_to_assignment(route: &[usize]) -> Vec<Vec<u8>> {
    let n = route.len();
    let mut x = vec![vec![0u8; n]; n];
    for (j, &i) in route.iter().enumerate() {
        x[i - 1][j] = 1;
    }
    x
}

impl FirstStageDecision {
    pub fn from_route(route: &[usize], appointments: Vec<f64>) -> Self {
        FirstStageDecision { assignment: route_to_assignment(route), appointments }
    }

    pub fn n(&self) -> usize {
        self.appointments.len()
    }
}

/// The visiting order `(i_1, …, i_N)` encoded by the assignment matrix.
pub fn route_of(dec: &FirstStageDecision) -> Result<Vec<usize>, DomainError> {
    let n = dec.assignment.len();
    if dec.assignment.iter().any(|r| r.len() != n) {
        return Err(DomainError::NotPermutation("assignment must be square".into()));
    }
    for (i, row) in dec.assignment.iter().enumerate() {
        if row.iter().any(|&v| v > 1) {
            return Err(DomainError::NotPermutation(format!("row {} has a non-binary entry", i + 1)));
        }
        let s: u32 = row.iter().map(|&v| v as u32).sum();
        if s != 1 {
            return Err(DomainError::NotPermutation(format!("row {} sums to {s}", i + 1)));
        }
    }
    let mut route = Vec::with_capacity(n);
    for j in 0..n {
        let hits: Vec<usize> = (0..n).filter(|&i| dec.assignment[i][j] == 1).collect();
        if hits.len() != 1 {
            return Err(DomainError::NotPermutation(format!("column {} sums to {}", j + 1, hits.len())));
        }
        route.push(hits[0] + 1);
    }
    Ok(route)
}

/// Check the decision against an instance and return its route.
pub fn validate_decision(inst: &Instance, dec: &FirstStageDecision) -> Result<Vec<usize>, DomainError> {
    check_len("assignment", inst.n, dec.assignment.len())?;
    check_len("appointments", inst.n, dec.appointments.len())?;
    let route = route_of(dec)?;
    let mut prev = 0.0;
    for (j, &a) in dec.appointments.iter().enumerate() {
        if !(a >= -DECISION_TOL && a <= inst.horizon + DECISION_TOL) {
            return Err(DomainError::InvalidDecision(format!("appointment {} = {a} outside [0, L]", j + 1)));
        }
        if a < prev - DECISION_TOL {
            return Err(DomainError::InvalidDecision(format!("appointment {} = {a} precedes the previous one", j + 1)));
        }
        prev = a;
    }
    Ok(route)
}

/// Shape check of a scenario against an instance size.
pub fn check_scenario_shape(inst: &Instance, sc: &Scenario) -> Result<(), DomainError> {
    check_len("service", inst.n, sc.service.len())?;
    check_len("travel rows", inst.n + 1, sc.travel.len())?;
    for row in &sc.travel {
        check_len("travel columns", inst.n + 1, row.len())?;
    }
    Ok(())
}
