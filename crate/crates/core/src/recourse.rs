//! Second-stage cost of a fixed route and schedule: forward recursion, the
//! equivalent LP, and the dual extreme points used by every reformulation.

use hras_lp::{ConstraintSense, LinearModel, ModelError};
use thiserror::Error;

use crate::domain::{check_scenario_shape, validate_decision, CostStructure, DomainError, FirstStageDecision, Instance, Scenario};

const DUAL_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RecourseError {
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error("dual vector outside the recourse dual polytope: {0}")]
    InfeasibleDual(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecourseOutcome {
    /// Waiting per position; the last entry is overtime.
    pub wait: Vec<f64>,
    /// Idle time per position; the last entry is unpaid earliness.
    pub idle: Vec<f64>,
    pub travel_total: f64,
    pub cost: f64,
}

impl RecourseOutcome {
    pub fn total_wait(&self) -> f64 {
        self.wait[..self.wait.len() - 1].iter().sum()
    }

    pub fn total_idle(&self) -> f64 {
        self.idle[..self.idle.len() - 1].iter().sum()
    }

    pub fn overtime(&self) -> f64 {
        *self.wait.last().expect("non-empty")
    }
}

/// Right-hand sides of the N+1 balance equations: the slack between the
/// provider's earliest arrival and the appointment, position by position.
pub fn balance_terms(route: &[usize], appointments: &[f64], sc: &Scenario, horizon: f64) -> Vec<f64> {
    let n = route.len();
    let mut b = Vec::with_capacity(n + 1);
    b.push(sc.travel[0][route[0]] - appointments[0]);
    for j in 1..n {
        let (prev, cur) = (route[j - 1], route[j]);
        b.push(appointments[j - 1] - appointments[j] + sc.service[prev - 1] + sc.travel[prev][cur]);
    }
    b.push(appointments[n - 1] - horizon + sc.service[route[n - 1] - 1]);
    b
}

/// Depot-out, inter-customer and return travel of a route.
pub fn route_travel(route: &[usize], sc: &Scenario) -> f64 {
    let n = route.len();
    let mut total = sc.travel[0][route[0]] + sc.travel[route[n - 1]][0];
    for j in 1..n {
        total += sc.travel[route[j - 1]][route[j]];
    }
    total
}

/// Recursion on an already validated route. Cheap enough for bulk simulation.
pub fn recourse_on_route(route: &[usize], appointments: &[f64], sc: &Scenario, inst: &Instance) -> RecourseOutcome {
    let n = route.len();
    let b = balance_terms(route, appointments, sc, inst.horizon);
    let mut wait = Vec::with_capacity(n + 1);
    let mut idle = Vec::with_capacity(n + 1);
    let mut prev = 0.0;
    for bj in b {
        let s = prev + bj;
        let (w, u) = if s >= 0.0 { (s, 0.0) } else { (0.0, -s) };
        wait.push(w);
        idle.push(u);
        prev = w;
    }
    let travel_total = route_travel(route, sc);
    let c = &inst.costs;
    let mut cost = c.overtime_cost * wait[n] + c.travel_cost * travel_total;
    for j in 0..n {
        cost += c.wait_cost[j] * wait[j] + c.idle_cost[j] * idle[j];
    }
    RecourseOutcome { wait, idle, travel_total, cost }
}

pub fn evaluate_recourse(dec: &FirstStageDecision, sc: &Scenario, inst: &Instance) -> Result<RecourseOutcome, RecourseError> {
    let route = validate_decision(inst, dec)?;
    check_scenario_shape(inst, sc)?;
    Ok(recourse_on_route(&route, &dec.appointments, sc, inst))
}

/// The second-stage LP in waiting/idle variables `w_j`, `u_j` (j = 1..N+1) and
/// the travel total `A`, with the route and schedule held fixed.
pub fn recourse_lp(dec: &FirstStageDecision, sc: &Scenario, inst: &Instance) -> Result<LinearModel, RecourseError> {
    let route = validate_decision(inst, dec)?;
    check_scenario_shape(inst, sc)?;
    let n = inst.n;
    let b = balance_terms(&route, &dec.appointments, sc, inst.horizon);
    let mut m = LinearModel::new();
    let w: Vec<_> = (1..=n + 1).map(|j| m.add_continuous(format!("w_{j}"), 0.0, f64::INFINITY)).collect::<Result<_, _>>()?;
    let u: Vec<_> = (1..=n + 1).map(|j| m.add_continuous(format!("u_{j}"), 0.0, f64::INFINITY)).collect::<Result<_, _>>()?;
    let travel = m.add_continuous("A", 0.0, f64::INFINITY)?;
    for j in 0..=n {
        let mut terms = vec![(w[j], 1.0), (u[j], -1.0)];
        if j > 0 {
            terms.push((w[j - 1], -1.0));
        }
        m.add_constraint(format!("balance_{}", j + 1), terms, ConstraintSense::Eq, b[j])?;
    }
    m.add_constraint("travel_total", [(travel, 1.0)], ConstraintSense::Eq, route_travel(&route, sc))?;
    let c = &inst.costs;
    let mut obj = vec![(w[n], c.overtime_cost), (travel, c.travel_cost)];
    for j in 0..n {
        obj.push((w[j], c.wait_cost[j]));
        obj.push((u[j], c.idle_cost[j]));
    }
    m.set_objective(obj)?;
    Ok(m)
}

/// A partition of positions `1..=N+2` into consecutive intervals `[k, v]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DualPartition {
    pub intervals: Vec<(usize, usize)>,
}

impl DualPartition {
    /// Partition from a merge mask: bit `p-1` set joins positions `p` and `p+1`.
    pub fn from_mask(m: usize, mask: usize) -> Self {
        let mut intervals = Vec::new();
        let mut start = 1;
        for p in 1..m {
            if mask & (1 << (p - 1)) == 0 {
                intervals.push((start, p));
                start = p + 1;
            }
        }
        intervals.push((start, m));
        DualPartition { intervals }
    }

    /// Interval end `v` covering each position, indexed `1..=m` (slot 0 unused).
    pub fn end_of(&self) -> Vec<usize> {
        let m = self.intervals.last().map(|iv| iv.1).unwrap_or(0);
        let mut end = vec![0; m + 1];
        for &(k, v) in &self.intervals {
            for e in end.iter_mut().take(v + 1).skip(k) {
                *e = v;
            }
        }
        end
    }
}

/// An extreme point of the recourse dual polytope.
#[derive(Debug, Clone, PartialEq)]
pub struct DualPoint {
    pub partition: DualPartition,
    /// `y_1..y_{N+1}` stored 0-based; the sentinel `y_{N+2}` is always zero and omitted.
    pub y: Vec<f64>,
}

/// `π_{j,v} = -c^u_v + Σ_{l=j}^{v-1} c^w_l` with the sentinel costs for N+1, N+2.
pub fn interval_dual(costs: &CostStructure, j: usize, v: usize) -> f64 {
    -costs.idle_ext(v) + (j..v).map(|l| costs.wait_ext(l)).sum::<f64>()
}

/// All `2^{N+1}` interval partitions of `1..=N+2` with their dual vectors.
pub fn dual_extreme_points(costs: &CostStructure) -> impl Iterator<Item = DualPoint> + '_ {
    let n = costs.wait_cost.len();
    let m = n + 2;
    (0..1usize << (m - 1)).map(move |mask| {
        let partition = DualPartition::from_mask(m, mask);
        let end = partition.end_of();
        let y = (1..=n + 1).map(|j| interval_dual(costs, j, end[j])).collect();
        DualPoint { partition, y }
    })
}

/// Membership in `Y = {0 ≤ y_{N+1} ≤ c^o, -c^u_j ≤ y_j ≤ c^w_j + y_{j+1}}`.
pub fn dual_feasible(y: &[f64], costs: &CostStructure, tol: f64) -> Result<(), String> {
    let n = costs.wait_cost.len();
    if y.len() != n + 1 {
        return Err(format!("expected {} entries, got {}", n + 1, y.len()));
    }
    if y[n] < -tol || y[n] > costs.overtime_cost + tol {
        return Err(format!("y_{} = {} outside [0, {}]", n + 1, y[n], costs.overtime_cost));
    }
    for j in 0..n {
        if y[j] < -costs.idle_cost[j] - tol {
            return Err(format!("y_{} = {} below -c^u", j + 1, y[j]));
        }
        if y[j] > costs.wait_cost[j] + y[j + 1] + tol {
            return Err(format!("y_{} = {} above c^w + y_{}", j + 1, y[j], j + 2));
        }
    }
    Ok(())
}

/// Whether every interval partition yields a dual-feasible point, which is what
/// makes "max over all partitions" equal to the recourse cost. Holds for
/// uniform position costs; checked pairwise in O(N^2).
pub fn all_partitions_dual_feasible(costs: &CostStructure) -> bool {
    let n = costs.wait_cost.len();
    let m = n + 2;
    for v in 1..=m {
        for j in 1..=v.min(n + 1) {
            let y = interval_dual(costs, j, v);
            if j <= n && y < -costs.idle_cost[j - 1] - DUAL_TOL {
                return false;
            }
            if j == n + 1 && (y < -DUAL_TOL || y > costs.overtime_cost + DUAL_TOL) {
                return false;
            }
        }
        // boundary between an interval ending at v and one starting at v+1
        if v <= n {
            for v2 in v + 1..=m {
                let next = if v + 1 <= n + 1 { interval_dual(costs, v + 1, v2) } else { 0.0 };
                if -costs.idle_ext(v) > costs.wait_ext(v) + next + DUAL_TOL {
                    return false;
                }
            }
        }
    }
    true
}

/// Dual objective `Σ_j b_j y_j + λ·A` on a validated route; no feasibility check.
pub fn dual_objective_on_route(y: &[f64], route: &[usize], appointments: &[f64], sc: &Scenario, inst: &Instance) -> f64 {
    let b = balance_terms(route, appointments, sc, inst.horizon);
    b.iter().zip(y).map(|(b, y)| b * y).sum::<f64>() + inst.costs.travel_cost * route_travel(route, sc)
}

pub fn dual_value(y: &[f64], dec: &FirstStageDecision, sc: &Scenario, inst: &Instance) -> Result<f64, RecourseError> {
    let route = validate_decision(inst, dec)?;
    check_scenario_shape(inst, sc)?;
    dual_feasible(y, &inst.costs, DUAL_TOL).map_err(RecourseError::InfeasibleDual)?;
    Ok(dual_objective_on_route(y, &route, &dec.appointments, sc, inst))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::CostStructure;

    fn two_customer_example(lambda: f64) -> (Instance, FirstStageDecision, Scenario) {
        let inst = Instance {
            n: 2,
            horizon: 480.0,
            costs: CostStructure::uniform(2, 2.0, 1.0, 20.0, lambda),
            service_lower: vec![0.0; 2],
            service_upper: vec![100.0; 2],
            travel_lower: vec![vec![0.0; 3]; 3],
            travel_upper: vec![vec![100.0; 3]; 3],
            service_mean: None,
            travel_mean: None,
        };
        let dec = FirstStageDecision::from_route(&[1, 2], vec![0.0, 30.0]);
        let mut travel = vec![vec![0.0; 3]; 3];
        travel[0][1] = 20.0;
        travel[1][2] = 20.0;
        travel[2][0] = 20.0;
        (inst, dec, Scenario { service: vec![25.0, 30.0], travel })
    }

    #[test]
    fn hand_example_two_customers() {
        let (inst, dec, sc) = two_customer_example(0.5);
        let out = evaluate_recourse(&dec, &sc, &inst).unwrap();
        assert_eq!(out.wait, vec![20.0, 35.0, 0.0]);
        assert_eq!(out.idle, vec![0.0, 0.0, 385.0]);
        assert_eq!(out.travel_total, 60.0);
        assert_eq!(out.cost, 140.0);
    }

    #[test]
    fn hand_example_one_customer() {
        let inst = Instance {
            n: 1,
            horizon: 480.0,
            costs: CostStructure::uniform(1, 2.0, 1.0, 20.0, 1.0),
            service_lower: vec![0.0],
            service_upper: vec![100.0],
            travel_lower: vec![vec![0.0; 2]; 2],
            travel_upper: vec![vec![100.0; 2]; 2],
            service_mean: None,
            travel_mean: None,
        };
        let dec = FirstStageDecision::from_route(&[1], vec![40.0]);
        let sc = Scenario { service: vec![30.0], travel: vec![vec![0.0, 20.0], vec![20.0, 0.0]] };
        let out = evaluate_recourse(&dec, &sc, &inst).unwrap();
        assert_eq!(out.wait, vec![0.0, 0.0]);
        assert_eq!(out.idle, vec![20.0, 410.0]);
        assert_eq!(out.travel_total, 40.0);
        assert_eq!(out.cost, 60.0);
    }

    #[test]
    fn zero_times_cost_nothing() {
        let (inst, _, _) = two_customer_example(0.5);
        let dec = FirstStageDecision::from_route(&[2, 1], vec![0.0, 0.0]);
        let sc = Scenario { service: vec![0.0; 2], travel: vec![vec![0.0; 3]; 3] };
        let out = evaluate_recourse(&dec, &sc, &inst).unwrap();
        // the horizon still leaves unpaid earliness
        assert_eq!(out.idle[2], 480.0);
        assert_eq!(out.cost, 0.0);
    }

    #[test]
    fn partitions_of_three_positions() {
        let costs = CostStructure::uniform(1, 2.0, 1.0, 20.0, 0.0);
        let parts: Vec<_> = dual_extreme_points(&costs).map(|p| p.partition.intervals).collect();
        assert_eq!(
            parts,
            vec![
                vec![(1, 1), (2, 2), (3, 3)],
                vec![(1, 2), (3, 3)],
                vec![(1, 1), (2, 3)],
                vec![(1, 3)],
            ]
        );
    }

    #[test]
    fn partition_counts() {
        for (n, count) in [(2, 8), (3, 16), (5, 64)] {
            let costs = CostStructure::uniform(n, 1.0, 1.0, 1.0, 0.0);
            assert_eq!(dual_extreme_points(&costs).count(), count);
        }
    }

    #[test]
    fn strong_duality_on_example() {
        let (inst, dec, sc) = two_customer_example(0.5);
        let best = dual_extreme_points(&inst.costs)
            .map(|p| dual_value(&p.y, &dec, &sc, &inst).unwrap())
            .fold(f64::NEG_INFINITY, f64::max);
        assert!((best - 140.0).abs() < 1e-9);
    }

    #[test]
    fn weak_duality_single_point() {
        let (inst, dec, sc) = two_customer_example(0.5);
        let p = dual_extreme_points(&inst.costs)
            .find(|p| p.partition.intervals == vec![(1, 3), (4, 4)])
            .unwrap();
        // y_j = π_{j,3}: π_{1,3} = 4, π_{2,3} = 2, π_{3,3} = 0
        assert_eq!(p.y, vec![4.0, 2.0, 0.0]);
        let v = dual_value(&p.y, &dec, &sc, &inst).unwrap();
        // 4·(20-0) + 2·(0-30+25+20) + 0 + 0.5·60
        assert_eq!(v, 140.0);
        assert!(v <= 140.0 + 1e-9);
    }

    #[test]
    fn zero_dual_zero_value() {
        let (inst, dec, sc) = two_customer_example(0.0);
        assert_eq!(dual_value(&[0.0, 0.0, 0.0], &dec, &sc, &inst).unwrap(), 0.0);
    }

    #[test]
    fn infeasible_dual_rejected() {
        let (inst, dec, sc) = two_customer_example(0.5);
        assert!(matches!(dual_value(&[0.0, 0.0, 25.0], &dec, &sc, &inst), Err(RecourseError::InfeasibleDual(_))));
        assert!(matches!(dual_value(&[-5.0, 0.0, 0.0], &dec, &sc, &inst), Err(RecourseError::InfeasibleDual(_))));
    }

    #[test]
    fn uniform_costs_admit_every_partition() {
        for n in 1..=7 {
            assert!(all_partitions_dual_feasible(&CostStructure::uniform(n, 2.0, 1.0, 20.0, 0.5)));
            assert!(all_partitions_dual_feasible(&CostStructure::uniform(n, 1.0, 5.0, 7.5, 2.0)));
            let costs = CostStructure::uniform(n, 1.0, 5.0, 7.5, 2.0);
            assert!(dual_extreme_points(&costs).all(|p| dual_feasible(&p.y, &costs, 1e-9).is_ok()));
        }
    }

    #[test]
    fn pairwise_check_matches_enumeration() {
        // idle cost jumps at position 2: the interval [1,2] dual drops below -c^u_1
        let mut costs = CostStructure::uniform(3, 1.0, 1.0, 5.0, 0.0);
        costs.idle_cost = vec![1.0, 4.0, 1.0];
        let enumerated = dual_extreme_points(&costs).all(|p| dual_feasible(&p.y, &costs, 1e-9).is_ok());
        assert!(!enumerated);
        assert_eq!(all_partitions_dual_feasible(&costs), enumerated);
    }
}
