//! Sample average approximation over R scenarios.
//!
//! Extra variable names: `w_r_j`, `u_r_j` (waiting / idle in scenario r,
//! position j ≤ N+1) and `A_r` (travel total of scenario r).

use hras_lp::{solve, ConstraintSense, LinearModel, SolveOptions, SolveStatus, VarId};
use itertools::Itertools;

use crate::domain::{scenario_violations, validate_decision, FirstStageDecision, Instance, Scenario};
use crate::formulation::{
    first_stage_blocks, fix_first_stage, symmetry_breaking, tau_linearization, FirstStageVars, FormulationError, TauVars,
};
use crate::recourse::{balance_terms, route_travel};

#[derive(Debug, Clone)]
pub struct SaaModelSpec<'a> {
    pub instance: &'a Instance,
    pub scenarios: &'a [Scenario],
    pub symmetry_breaking: bool,
}

/// A built model together with the handles needed to read a decision back.
#[derive(Debug, Clone)]
pub struct BuiltModel {
    pub model: LinearModel,
    pub first_stage: FirstStageVars,
}

/// Coefficients of `Σ_i t_{0,i} x_{i,1} + Σ_{j,i≠i'} t_{i,i'} τ_{i,i',j} + Σ_i t_{i,0} x_{i,N}`.
pub(crate) fn travel_terms(sc: &Scenario, fs: &FirstStageVars, tau: &TauVars, scale: f64) -> Vec<(VarId, f64)> {
    let n = fs.x.len();
    let mut terms = Vec::new();
    for i in 1..=n {
        terms.push((fs.x[i - 1][0], scale * sc.travel[0][i]));
    }
    for (&(i, ip, _), &t) in tau {
        terms.push((t, scale * sc.travel[i][ip]));
    }
    for i in 1..=n {
        terms.push((fs.x[i - 1][n - 1], scale * sc.travel[i][0]));
    }
    terms
}

pub fn build_saa(spec: &SaaModelSpec) -> Result<BuiltModel, FormulationError> {
    let inst = spec.instance;
    let r_count = spec.scenarios.len();
    if r_count == 0 {
        return Err(FormulationError::Argument("at least one scenario is required".into()));
    }
    for (r, sc) in spec.scenarios.iter().enumerate() {
        crate::domain::check_scenario_shape(inst, sc)?;
        let v = scenario_violations(inst, sc, 1e-9);
        if !v.is_empty() {
            log::warn!("scenario {} lies outside the support box ({} entries)", r + 1, v.len());
        }
    }
    let n = inst.n;
    let c = &inst.costs;
    let weight = 1.0 / r_count as f64;
    let mut m = LinearModel::new();
    let fs = first_stage_blocks(&mut m, inst)?;
    let tau = tau_linearization(&mut m, &fs)?;
    if spec.symmetry_breaking {
        symmetry_breaking(&mut m, &fs)?;
    }
    let mut objective = Vec::new();
    for (r, sc) in spec.scenarios.iter().enumerate() {
        let r1 = r + 1;
        let w: Vec<_> = (1..=n + 1).map(|j| m.add_continuous(format!("w_{r1}_{j}"), 0.0, f64::INFINITY)).collect::<Result<_, _>>()?;
        let u: Vec<_> = (1..=n + 1).map(|j| m.add_continuous(format!("u_{r1}_{j}"), 0.0, f64::INFINITY)).collect::<Result<_, _>>()?;
        let travel = m.add_continuous(format!("A_{r1}"), 0.0, f64::INFINITY)?;

        // w_1 - u_1 = Σ_i t_{0,i} x_{i,1} - a_1
        let mut terms = vec![(w[0], 1.0), (u[0], -1.0), (fs.a[0], 1.0)];
        terms.extend((1..=n).map(|i| (fs.x[i - 1][0], -sc.travel[0][i])));
        m.add_constraint(format!("bal_{r1}_1"), terms, ConstraintSense::Eq, 0.0)?;
        // w_j - u_j = w_{j-1} + a_{j-1} - a_j + Σ_i d_i x_{i,j-1} + Σ t_{i,i'} τ_{i,i',j}
        for j in 2..=n {
            let mut terms = vec![(w[j - 1], 1.0), (u[j - 1], -1.0), (w[j - 2], -1.0), (fs.a[j - 2], -1.0), (fs.a[j - 1], 1.0)];
            terms.extend((1..=n).map(|i| (fs.x[i - 1][j - 2], -sc.service[i - 1])));
            terms.extend(tau.iter().filter(|(k, _)| k.2 == j).map(|(&(i, ip, _), &t)| (t, -sc.travel[i][ip])));
            m.add_constraint(format!("bal_{r1}_{j}"), terms, ConstraintSense::Eq, 0.0)?;
        }
        // w_{N+1} - u_{N+1} = w_N + a_N - L + Σ_i d_i x_{i,N}
        let mut terms = vec![(w[n], 1.0), (u[n], -1.0), (w[n - 1], -1.0), (fs.a[n - 1], -1.0)];
        terms.extend((1..=n).map(|i| (fs.x[i - 1][n - 1], -sc.service[i - 1])));
        m.add_constraint(format!("bal_{r1}_{}", n + 1), terms, ConstraintSense::Eq, -inst.horizon)?;

        let mut terms = vec![(travel, 1.0)];
        terms.extend(travel_terms(sc, &fs, &tau, -1.0));
        m.add_constraint(format!("travel_{r1}"), terms, ConstraintSense::Eq, 0.0)?;

        for j in 0..n {
            objective.push((w[j], weight * c.wait_cost[j]));
            objective.push((u[j], weight * c.idle_cost[j]));
        }
        objective.push((w[n], weight * c.overtime_cost));
        objective.push((travel, weight * c.travel_cost));
    }
    m.set_objective(objective)?;
    Ok(BuiltModel { model: m, first_stage: fs })
}

/// SAA objective of a fixed decision, through the model with x and a pinned.
pub fn saa_fixed_value(spec: &SaaModelSpec, dec: &FirstStageDecision, options: &SolveOptions) -> Result<f64, FormulationError> {
    validate_decision(spec.instance, dec)?;
    let mut built = build_saa(spec)?;
    fix_first_stage(&mut built.model, &built.first_stage, dec);
    let res = solve(&built.model, options)?;
    match (res.status, res.objective) {
        (SolveStatus::Optimal, Some(v)) => Ok(v),
        (s, _) => Err(FormulationError::NoSolution(s)),
    }
}

/// Per-route LP: for a fixed visiting order the SAA problem is linear in
/// `(a, w^r, u^r)`. Returns the optimal value and appointments.
pub fn saa_route_lp(
    inst: &Instance,
    scenarios: &[Scenario],
    route: &[usize],
    options: &SolveOptions,
) -> Result<(f64, Vec<f64>), FormulationError> {
    let n = inst.n;
    let c = &inst.costs;
    let weight = 1.0 / scenarios.len() as f64;
    let mut m = LinearModel::new();
    let a: Vec<_> = (1..=n).map(|j| m.add_continuous(format!("a_{j}"), 0.0, inst.horizon)).collect::<Result<_, _>>()?;
    for j in 1..n {
        m.add_constraint(format!("order_{}", j + 1), [(a[j], 1.0), (a[j - 1], -1.0)], ConstraintSense::Ge, 0.0)?;
    }
    let mut obj = Vec::new();
    let mut constant = 0.0;
    for (r, sc) in scenarios.iter().enumerate() {
        // balance terms with a = 0; the appointment enters with coefficient ∓1
        let b0 = balance_terms(route, &vec![0.0; n], sc, inst.horizon);
        let w: Vec<_> = (1..=n + 1).map(|j| m.add_continuous(format!("w_{r}_{j}"), 0.0, f64::INFINITY)).collect::<Result<_, _>>()?;
        let u: Vec<_> = (1..=n + 1).map(|j| m.add_continuous(format!("u_{r}_{j}"), 0.0, f64::INFINITY)).collect::<Result<_, _>>()?;
        for j in 0..=n {
            let mut terms = vec![(w[j], 1.0), (u[j], -1.0)];
            if j > 0 {
                terms.push((w[j - 1], -1.0));
                terms.push((a[j - 1], -1.0));
            }
            if j < n {
                terms.push((a[j], 1.0));
            }
            m.add_constraint(format!("bal_{r}_{j}"), terms, ConstraintSense::Eq, b0[j])?;
        }
        for j in 0..n {
            obj.push((w[j], weight * c.wait_cost[j]));
            obj.push((u[j], weight * c.idle_cost[j]));
        }
        obj.push((w[n], weight * c.overtime_cost));
        constant += weight * c.travel_cost * route_travel(route, sc);
    }
    m.set_objective(obj)?;
    let res = solve(&m, options)?;
    match (res.status, res.objective) {
        (SolveStatus::Optimal, Some(v)) => Ok((v + constant, a.iter().map(|&v| res.value(v)).collect())),
        (s, _) => Err(FormulationError::NoSolution(s)),
    }
}

/// Minimum SAA value over all N! routes, each solved as an LP.
pub fn brute_force_saa(spec: &SaaModelSpec, options: &SolveOptions) -> Result<f64, FormulationError> {
    Ok(brute_force_saa_decision(spec, options)?.0)
}

pub fn brute_force_saa_decision(spec: &SaaModelSpec, options: &SolveOptions) -> Result<(f64, FirstStageDecision), FormulationError> {
    if spec.scenarios.is_empty() {
        return Err(FormulationError::Argument("at least one scenario is required".into()));
    }
    let n = spec.instance.n;
    let mut best: Option<(f64, FirstStageDecision)> = None;
    for route in (1..=n).permutations(n) {
        let (v, a) = saa_route_lp(spec.instance, spec.scenarios, &route, options)?;
        if best.as_ref().map_or(true, |(b, _)| v < *b) {
            best = Some((v, FirstStageDecision::from_route(&route, a)));
        }
    }
    Ok(best.expect("at least one route"))
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::domain::CostStructure;
    use crate::recourse::recourse_on_route;

    pub(crate) fn flat_instance(lambda: f64) -> (Instance, Scenario) {
        let inst = Instance {
            n: 2,
            horizon: 480.0,
            costs: CostStructure::uniform(2, 2.0, 1.0, 20.0, lambda),
            service_lower: vec![10.0; 2],
            service_upper: vec![50.0; 2],
            travel_lower: vec![vec![15.0; 3]; 3],
            travel_upper: vec![vec![25.0; 3]; 3],
            service_mean: None,
            travel_mean: None,
        };
        let mut travel = vec![vec![20.0; 3]; 3];
        for (k, row) in travel.iter_mut().enumerate() {
            row[k] = 0.0;
        }
        (inst, Scenario { service: vec![30.0, 30.0], travel })
    }

    #[test]
    fn route_lp_reaches_zero_without_travel_cost() {
        let (inst, sc) = flat_instance(0.0);
        let (v, a) = saa_route_lp(&inst, std::slice::from_ref(&sc), &[1, 2], &SolveOptions::exact()).unwrap();
        assert!(v.abs() < 1e-9);
        let out = recourse_on_route(&[1, 2], &a, &sc, &inst);
        assert!(out.cost.abs() < 1e-9);
    }

    #[test]
    fn brute_force_travel_cost() {
        let (inst, sc) = flat_instance(1.0);
        let spec = SaaModelSpec { instance: &inst, scenarios: std::slice::from_ref(&sc), symmetry_breaking: false };
        assert!((brute_force_saa(&spec, &SolveOptions::exact()).unwrap() - 60.0).abs() < 1e-9);
    }

    #[test]
    fn empty_scenarios_rejected() {
        let (inst, _) = flat_instance(1.0);
        let spec = SaaModelSpec { instance: &inst, scenarios: &[], symmetry_breaking: false };
        assert!(matches!(build_saa(&spec), Err(FormulationError::Argument(_))));
    }
}
