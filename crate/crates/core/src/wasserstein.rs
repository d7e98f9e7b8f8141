//! Worst-case expected cost over the ℓ1-Wasserstein ball of radius ε around the
//! empirical distribution of R samples, restricted to the support box.
//!
//! Extra variable names: `rho` (ball multiplier), `beta_r_j` (interval duals of
//! sample r), `ur0_r_i` / `psi_r_i` (return arc), `uf_r_i_v` / `sigma_r_i_v`
//! (depot-out arc), `ut_r_i_ip_j_v` / `phi_r_i_ip_j_v` (inter-customer arcs) and
//! `nu_r_i_j_v` / `zeta_r_i_j_v` (service times). Each `u*`/`nu` variable is the
//! worst value of one coordinate's cost term against the transport penalty; the
//! paired product switches it on for the customer actually routed there.

use hras_lp::{solve, ConstraintSense, LinearModel, SolveOptions, SolveStatus, VarId};

use crate::domain::{check_scenario_shape, validate_decision, FirstStageDecision, Instance, Scenario};
use crate::formulation::{
    first_stage_blocks, fix_first_stage, pi_table, require_admissible_costs, symmetry_breaking, tau_linearization,
    FormulationError, McCormickBlock,
};
use crate::moment::{coord_bounds, route_box_vertices, route_coords, set_coord, Coord};
use crate::recourse::{dual_extreme_points, dual_feasible, dual_objective_on_route};
use crate::saa::BuiltModel;

#[derive(Debug, Clone, PartialEq)]
pub struct WassersteinAmbiguity {
    pub samples: Vec<Scenario>,
    pub epsilon: f64,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct WassersteinOptions {
    pub symmetry_breaking: bool,
}

/// Built model plus the handles of each sample's worst-case term.
#[derive(Debug, Clone)]
pub struct WassersteinModel {
    pub built: BuiltModel,
    pub rho: VarId,
    /// `beta[r]` holds `β_{r,1..N+2}`.
    pub beta: Vec<Vec<VarId>>,
    /// `psi[r]` holds the return-arc products of sample r.
    pub psi: Vec<Vec<VarId>>,
}

impl WassersteinModel {
    /// Worst-case term of sample r at a solution: `Σ_i ψ_{r,i} + Σ_j β_{r,j}`.
    pub fn sample_term(&self, r: usize, values: &[f64]) -> f64 {
        self.beta[r].iter().chain(&self.psi[r]).map(|v| values[v.0]).sum()
    }
}

/// Upper bound on the optimal multiplier: beyond the largest absolute cost
/// coefficient of any coordinate, moving mass never pays off.
pub fn rho_max(inst: &Instance) -> f64 {
    let lambda = inst.lambda();
    let pi = pi_table(&inst.costs);
    pi.iter()
        .flat_map(|(_, _, p)| [p.abs(), (p + lambda).abs()])
        .fold(lambda.abs(), f64::max)
}

/// Bounds of `max_{ξ∈[lo,hi]} c·ξ − ρ|ξ − ŝ|` over `ρ ≥ 0`.
fn worst_term_bounds(c: f64, lo: f64, hat: f64, hi: f64) -> (f64, f64) {
    (c * hat, (c * lo).max(c * hi).max(c * hat))
}

/// `max_{ξ∈[lo,hi]} c·ξ − ρ|ξ − ŝ|`, attained at lo, ŝ or hi.
pub(crate) fn worst_term_value(c: f64, lo: f64, hat: f64, hi: f64, rho: f64) -> f64 {
    (c * hat).max(c * lo - rho * (hat - lo)).max(c * hi - rho * (hi - hat))
}

/// Adds `u ≥ c·ŝ`, `u + ρ(ŝ − lo) ≥ c·lo`, `u + ρ(hi − ŝ) ≥ c·hi`.
#[allow(clippy::too_many_arguments)]
fn add_worst_term(
    m: &mut LinearModel,
    name: String,
    rho: VarId,
    c: f64,
    lo: f64,
    hat: f64,
    hi: f64,
) -> Result<(VarId, f64, f64), FormulationError> {
    let (l, u) = worst_term_bounds(c, lo, hat, hi);
    let var = m.add_continuous(name.clone(), l, u)?;
    if hat > lo {
        m.add_constraint(format!("{name}_lo"), [(var, 1.0), (rho, hat - lo)], ConstraintSense::Ge, c * lo)?;
    }
    if hi > hat {
        m.add_constraint(format!("{name}_hi"), [(var, 1.0), (rho, hi - hat)], ConstraintSense::Ge, c * hi)?;
    }
    Ok((var, l, u))
}

pub fn build_wdhras(inst: &Instance, amb: &WassersteinAmbiguity, opts: &WassersteinOptions) -> Result<WassersteinModel, FormulationError> {
    if amb.samples.is_empty() {
        return Err(FormulationError::Argument("at least one sample is required".into()));
    }
    if !(amb.epsilon >= 0.0) || !amb.epsilon.is_finite() {
        return Err(FormulationError::Argument(format!("radius must be finite and nonnegative, got {}", amb.epsilon)));
    }
    require_admissible_costs(&inst.costs)?;
    for (r, sc) in amb.samples.iter().enumerate() {
        check_scenario_shape(inst, sc)?;
        let v = crate::domain::scenario_violations(inst, sc, 1e-9);
        if let Some(first) = v.first() {
            return Err(FormulationError::Argument(format!("sample {} lies outside the support box: {first}", r + 1)));
        }
    }
    let n = inst.n;
    let lambda = inst.lambda();
    let pi = pi_table(&inst.costs);
    let weight = 1.0 / amb.samples.len() as f64;
    let (dl, du) = (&inst.service_lower, &inst.service_upper);
    let (tl, tu) = (&inst.travel_lower, &inst.travel_upper);

    let mut m = LinearModel::new();
    let fs = first_stage_blocks(&mut m, inst)?;
    let tau = tau_linearization(&mut m, &fs)?;
    if opts.symmetry_breaking {
        symmetry_breaking(&mut m, &fs)?;
    }
    let x = |i: usize, j: usize| fs.x[i - 1][j - 1];
    let rho = m.add_continuous("rho", 0.0, rho_max(inst))?;
    let mut obj = vec![(rho, amb.epsilon)];
    let mut all_beta = Vec::new();
    let mut all_psi = Vec::new();

    for (r0, sc) in amb.samples.iter().enumerate() {
        let r = r0 + 1;
        let beta: Vec<VarId> = (1..=n + 2)
            .map(|j| {
                let lo = if j == n + 2 { 0.0 } else { f64::NEG_INFINITY };
                m.add_continuous(format!("beta_{r}_{j}"), lo, f64::INFINITY)
            })
            .collect::<Result<_, _>>()?;
        let mut psi = Vec::new();
        for i in 1..=n {
            let (u, l, h) = add_worst_term(&mut m, format!("ur0_{r}_{i}"), rho, lambda, tl[i][0], sc.travel[i][0], tu[i][0])?;
            psi.push(McCormickBlock::add(&mut m, format!("psi_{r}_{i}"), u, x(i, n), l, h)?.product);
        }
        // sigma[i-1][v-1], zeta[(i, j, v)], phi[(i, ip, j, v)]
        let mut sigma = vec![Vec::new(); n];
        for i in 1..=n {
            for v in 1..=n + 2 {
                let c = pi.get(1, v) + lambda;
                let (u, l, h) = add_worst_term(&mut m, format!("uf_{r}_{i}_{v}"), rho, c, tl[0][i], sc.travel[0][i], tu[0][i])?;
                sigma[i - 1].push(McCormickBlock::add(&mut m, format!("sigma_{r}_{i}_{v}"), u, x(i, 1), l, h)?.product);
            }
        }
        let mut zeta = std::collections::BTreeMap::new();
        for i in 1..=n {
            for j in 2..=n + 1 {
                for v in j..=n + 2 {
                    let c = pi.get(j, v);
                    let (u, l, h) = add_worst_term(&mut m, format!("nu_{r}_{i}_{j}_{v}"), rho, c, dl[i - 1], sc.service[i - 1], du[i - 1])?;
                    let p = McCormickBlock::add(&mut m, format!("zeta_{r}_{i}_{j}_{v}"), u, x(i, j - 1), l, h)?.product;
                    zeta.insert((i, j, v), p);
                }
            }
        }
        let mut phi = std::collections::BTreeMap::new();
        for (&(i, ip, j), &t) in &tau {
            for v in j..=n + 2 {
                let c = pi.get(j, v) + lambda;
                let (u, l, h) = add_worst_term(&mut m, format!("ut_{r}_{i}_{ip}_{j}_{v}"), rho, c, tl[i][ip], sc.travel[i][ip], tu[i][ip])?;
                phi.insert((i, ip, j, v), McCormickBlock::add(&mut m, format!("phi_{r}_{i}_{ip}_{j}_{v}"), u, t, l, h)?.product);
            }
        }

        for k in 1..=n + 1 {
            for v in k..=n + 2 {
                let mut terms: Vec<(VarId, f64)> = beta[k - 1..v].iter().map(|&b| (b, 1.0)).collect();
                let mut rhs = 0.0;
                if k == 1 {
                    let p = pi.get(1, v);
                    terms.push((fs.a[0], p));
                    terms.extend((1..=n).map(|i| (sigma[i - 1][v - 1], -1.0)));
                }
                for j in k.max(2)..=v.min(n + 1) {
                    let p = pi.get(j, v);
                    terms.push((fs.a[j - 2], -p));
                    if j <= n {
                        terms.push((fs.a[j - 1], p));
                    } else {
                        rhs -= inst.horizon * p;
                    }
                    terms.extend((1..=n).map(|i| (zeta[&(i, j, v)], -1.0)));
                    if j <= n {
                        for i in 1..=n {
                            terms.extend((1..=n).filter(|&ip| ip != i).map(|ip| (phi[&(i, ip, j, v)], -1.0)));
                        }
                    }
                }
                m.add_constraint(format!("cascade_{r}_{k}_{v}"), terms, ConstraintSense::Ge, rhs)?;
            }
        }
        obj.extend(beta.iter().chain(&psi).map(|&v| (v, weight)));
        all_beta.push(beta);
        all_psi.push(psi);
    }
    m.set_objective(obj)?;
    Ok(WassersteinModel { built: BuiltModel { model: m, first_stage: fs }, rho, beta: all_beta, psi: all_psi })
}

/// Worst-case expected cost of a fixed decision through the MILP.
pub fn wdhras_worstcase(
    dec: &FirstStageDecision,
    inst: &Instance,
    amb: &WassersteinAmbiguity,
    solve_opts: &SolveOptions,
) -> Result<f64, FormulationError> {
    validate_decision(inst, dec)?;
    let mut wm = build_wdhras(inst, amb, &WassersteinOptions::default())?;
    fix_first_stage(&mut wm.built.model, &wm.built.first_stage, dec);
    let res = solve(&wm.built.model, solve_opts)?;
    match (res.status, res.objective) {
        (SolveStatus::Optimal, Some(v)) => Ok(v),
        (s, _) => Err(FormulationError::NoSolution(s)),
    }
}

fn feasible_duals(inst: &Instance) -> Vec<Vec<f64>> {
    dual_extreme_points(&inst.costs)
        .filter(|p| dual_feasible(&p.y, &inst.costs, 1e-9).is_ok())
        .map(|p| p.y)
        .collect()
}

fn coord_value(sc: &Scenario, c: Coord) -> f64 {
    match c {
        Coord::Service(i) => sc.service[i - 1],
        Coord::Travel(a, b) => sc.travel[a][b],
    }
}

/// `sup_{ξ ∈ box} Q(ξ) − ρ‖ξ − ŝ‖₁` for a fixed decision, by enumerating
/// partitions and maximizing each coordinate of the (linear) dual objective
/// separately. Coordinate slopes are read off by unit perturbation.
pub fn g_r_value(rho: f64, dec: &FirstStageDecision, sample: &Scenario, inst: &Instance) -> Result<f64, FormulationError> {
    if !(rho >= 0.0) {
        return Err(FormulationError::Argument(format!("multiplier must be nonnegative, got {rho}")));
    }
    let route = validate_decision(inst, dec)?;
    check_scenario_shape(inst, sample)?;
    Ok(sample_worst_on_route(&route, &dec.appointments, inst, sample, rho, &feasible_duals(inst)))
}

fn sample_worst_on_route(route: &[usize], a: &[f64], inst: &Instance, sample: &Scenario, rho: f64, duals: &[Vec<f64>]) -> f64 {
    let coords = route_coords(route);
    duals
        .iter()
        .map(|y| {
            let base = dual_objective_on_route(y, route, a, sample, inst);
            let mut total = base;
            for &c in &coords {
                let (lo, hi) = coord_bounds(inst, c);
                let hat = coord_value(sample, c);
                let mut bumped = sample.clone();
                set_coord(&mut bumped, c, hat + 1.0);
                let slope = dual_objective_on_route(y, route, a, &bumped, inst) - base;
                total += worst_term_value(slope, lo, hat, hi, rho) - slope * hat;
            }
            total
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Independent evaluation of the Wasserstein worst case for a fixed decision:
/// `min_{0 ≤ ρ ≤ ρ_max} ερ + (1/R) Σ_r sample_worst(ρ)`, a convex function of
/// ρ minimized by golden-section search. Returns `(value, ρ)`.
pub fn wasserstein_oracle(dec: &FirstStageDecision, inst: &Instance, amb: &WassersteinAmbiguity) -> Result<(f64, f64), FormulationError> {
    let route = validate_decision(inst, dec)?;
    let duals = feasible_duals(inst);
    let r = amb.samples.len() as f64;
    let f = |rho: f64| {
        amb.epsilon * rho
            + amb.samples.iter().map(|s| sample_worst_on_route(&route, &dec.appointments, inst, s, rho, &duals)).sum::<f64>() / r
    };
    let (mut lo, mut hi) = (0.0, rho_max(inst));
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > 1e-9 {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        }
    }
    let mid = 0.5 * (lo + hi);
    let best = [(f(0.0), 0.0), (f(rho_max(inst)), rho_max(inst)), (f(mid), mid)]
        .into_iter()
        .fold((f64::INFINITY, 0.0), |acc, c| if c.0 < acc.0 { c } else { acc });
    Ok(best)
}

/// `min_{a} max_{ξ ∈ box} Q(x, a, ξ)` minimized over all routes: the limit of
/// the Wasserstein model as the radius grows. One LP per route in `(a, θ)`,
/// with one row per dual-feasible partition holding the vertex maximum.
pub fn box_worstcase_oracle(inst: &Instance, solve_opts: &SolveOptions) -> Result<(f64, FirstStageDecision), FormulationError> {
    use itertools::Itertools;
    let n = inst.n;
    let duals = feasible_duals(inst);
    let zero = vec![0.0; n];
    let mut best: Option<(f64, FirstStageDecision)> = None;
    for route in (1..=n).permutations(n) {
        let vertices = route_box_vertices(inst, &route_coords(&route));
        let mut m = LinearModel::new();
        let theta = m.add_continuous("theta", f64::NEG_INFINITY, f64::INFINITY)?;
        let a: Vec<VarId> = (1..=n).map(|j| m.add_continuous(format!("a_{j}"), 0.0, inst.horizon)).collect::<Result<_, _>>()?;
        for j in 1..n {
            m.add_constraint(format!("order_{}", j + 1), [(a[j], 1.0), (a[j - 1], -1.0)], ConstraintSense::Ge, 0.0)?;
        }
        for (p, y) in duals.iter().enumerate() {
            let h = vertices
                .iter()
                .map(|v| dual_objective_on_route(y, &route, &zero, v, inst))
                .fold(f64::NEG_INFINITY, f64::max);
            // the appointment a_j enters b_j with -1 and b_{j+1} with +1
            let mut terms = vec![(theta, 1.0)];
            terms.extend((0..n).map(|j| (a[j], y[j] - y[j + 1])));
            m.add_constraint(format!("part_{p}"), terms, ConstraintSense::Ge, h)?;
        }
        m.set_objective([(theta, 1.0)])?;
        let res = solve(&m, solve_opts)?;
        let v = match (res.status, res.objective) {
            (SolveStatus::Optimal, Some(v)) => v,
            (s, _) => return Err(FormulationError::NoSolution(s)),
        };
        if best.as_ref().map_or(true, |(b, _)| v < *b) {
            best = Some((v, FirstStageDecision::from_route(&route, a.iter().map(|&id| res.value(id)).collect())));
        }
    }
    Ok(best.expect("at least one route"))
}

/// Radius beyond which the ball covers every distribution on the box.
pub fn plateau_radius(inst: &Instance) -> f64 {
    rho_max(inst) * inst.l1_diameter()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::CostStructure;

    #[test]
    fn rho_max_covers_lambda() {
        let mut inst = crate::domain::tests::standard_instance(2);
        inst.costs = CostStructure::uniform(2, 2.0, 1.0, 20.0, 2.0);
        // largest |π| is π_{1,4} = 2 + 2 + 20 = 24, plus λ
        assert_eq!(rho_max(&inst), 26.0);
        inst.costs = CostStructure::uniform(2, 0.0, 0.0, 0.0, 3.0);
        assert_eq!(rho_max(&inst), 3.0);
    }

    #[test]
    fn worst_term_bounds_order() {
        assert_eq!(worst_term_bounds(2.0, 10.0, 20.0, 30.0), (40.0, 60.0));
        assert_eq!(worst_term_bounds(-1.0, 10.0, 20.0, 30.0), (-20.0, -10.0));
    }

    #[test]
    fn return_arc_term() {
        assert!((worst_term_value(0.5, 15.0, 20.0, 25.0, 0.3) - 11.0).abs() < 1e-12);
        assert_eq!(worst_term_value(0.5, 15.0, 20.0, 25.0, 1.0), 10.0);
        assert_eq!(worst_term_value(-2.0, 15.0, 20.0, 25.0, 0.0), -30.0);
    }

    #[test]
    fn infinite_rho_pins_sample() {
        let (inst, sc) = crate::saa::tests::flat_instance(1.0);
        let dec = FirstStageDecision::from_route(&[1, 2], vec![20.0, 70.0]);
        let v = g_r_value(1e6, &dec, &sc, &inst).unwrap();
        let direct = crate::recourse::recourse_on_route(&[1, 2], &dec.appointments, &sc, &inst).cost;
        assert!((v - direct).abs() < 1e-6, "{v} vs {direct}");
    }

    #[test]
    fn negative_radius_rejected() {
        let (inst, sc) = crate::saa::tests::flat_instance(1.0);
        let amb = WassersteinAmbiguity { samples: vec![sc], epsilon: -1.0 };
        assert!(matches!(build_wdhras(&inst, &amb, &WassersteinOptions::default()), Err(FormulationError::Argument(_))));
    }
}
