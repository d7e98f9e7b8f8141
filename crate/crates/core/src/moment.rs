//! Worst-case expected cost over all distributions on the support box with a
//! given mean (mean-support ambiguity).
//!
//! Extra variable names: `rho_i` (service-mean duals), `alpha_i_ip` and
//! `alpha0_i` (travel-mean duals; return arcs are eliminated), `beta_j`
//! (interval duals), `gamma_i_ip_j_v`, `gamma0_i_v`, `delta_i_j_v` (positive
//! parts), and the products `eta_i_ip_j`, `psi0_i`, `sigma0_i_v`,
//! `phi_i_ip_j_v`, `xi_i_j_v`, `zeta_i_j`.

use std::collections::BTreeMap;

use hras_lp::{solve, ConstraintSense, LinearModel, SolveOptions, SolveStatus, VarId};

use crate::domain::{validate_decision, CostStructure, FirstStageDecision, Instance, Scenario};
use crate::formulation::{
    first_stage_blocks, fix_first_stage, pi_table, require_admissible_costs, symmetry_breaking, tau_linearization,
    FormulationError, McCormickBlock,
};
use crate::recourse::{dual_extreme_points, dual_feasible, dual_objective_on_route};
use crate::saa::BuiltModel;

#[derive(Debug, Clone, PartialEq)]
pub struct MomentAmbiguity {
    pub service_mean: Vec<f64>,
    pub travel_mean: Vec<Vec<f64>>,
}

impl MomentAmbiguity {
    pub fn from_instance(inst: &Instance) -> Option<Self> {
        Some(MomentAmbiguity { service_mean: inst.service_mean.clone()?, travel_mean: inst.travel_mean.clone()? })
    }

    /// Empirical mean of a scenario set.
    pub fn sample_mean(n: usize, scenarios: &[Scenario]) -> Self {
        let r = scenarios.len() as f64;
        let mut service = vec![0.0; n];
        let mut travel = vec![vec![0.0; n + 1]; n + 1];
        for sc in scenarios {
            for i in 0..n {
                service[i] += sc.service[i] / r;
            }
            for i in 0..=n {
                for k in 0..=n {
                    travel[i][k] += sc.travel[i][k] / r;
                }
            }
        }
        MomentAmbiguity { service_mean: service, travel_mean: travel }
    }

    /// Means must sit strictly inside each non-degenerate support interval.
    pub fn check_interior(&self, inst: &Instance) -> Result<(), FormulationError> {
        let n = inst.n;
        if self.service_mean.len() != n || self.travel_mean.len() != n + 1 || self.travel_mean.iter().any(|r| r.len() != n + 1) {
            return Err(FormulationError::Argument("mean vector has the wrong shape".into()));
        }
        let inside = |lo: f64, mu: f64, hi: f64| if lo == hi { mu == lo } else { lo < mu && mu < hi };
        for i in 0..n {
            if !inside(inst.service_lower[i], self.service_mean[i], inst.service_upper[i]) {
                return Err(FormulationError::Argument(format!(
                    "service mean of customer {} = {} is not interior to [{}, {}]",
                    i + 1,
                    self.service_mean[i],
                    inst.service_lower[i],
                    inst.service_upper[i]
                )));
            }
        }
        for i in 0..=n {
            for k in (0..=n).filter(|&k| k != i) {
                if !inside(inst.travel_lower[i][k], self.travel_mean[i][k], inst.travel_upper[i][k]) {
                    return Err(FormulationError::Argument(format!(
                        "travel mean {}->{} = {} is not interior to [{}, {}]",
                        i,
                        k,
                        self.travel_mean[i][k],
                        inst.travel_lower[i][k],
                        inst.travel_upper[i][k]
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Finite bounds on the dual variables that keep the McCormick blocks exact.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TightBounds {
    /// max / min of `π_{j,v}` over `j ∈ 2..=N+1`, `v ∈ j..=N+2`.
    pub p1_upper: f64,
    pub p1_lower: f64,
    /// max / min of `π_{1,v}` over `v ∈ 1..=N+2`.
    pub p2_upper: f64,
    pub p2_lower: f64,
    pub lambda: f64,
}

impl TightBounds {
    pub fn rho(&self) -> (f64, f64) {
        (self.p1_lower, self.p1_upper)
    }

    pub fn alpha(&self) -> (f64, f64) {
        (self.p1_lower - self.lambda, self.p1_upper + self.lambda)
    }

    pub fn alpha_depot(&self) -> (f64, f64) {
        (self.p2_lower - self.lambda, self.p2_upper + self.lambda)
    }

    pub fn gamma_upper(&self, pi: f64) -> f64 {
        pi + 2.0 * self.lambda - self.p1_lower
    }

    pub fn gamma_depot_upper(&self, pi: f64) -> f64 {
        pi + 2.0 * self.lambda - self.p2_lower
    }

    pub fn delta_upper(&self, pi: f64) -> f64 {
        pi - self.p1_lower
    }
}

pub fn tight_bounds(costs: &CostStructure, lambda: f64) -> TightBounds {
    let pi = pi_table(costs);
    let n = pi.n();
    let inner = (2..=n + 1).flat_map(|j| (j..=n + 2).map(move |v| (j, v))).map(|(j, v)| pi.get(j, v));
    let first = (1..=n + 2).map(|v| pi.get(1, v));
    let (mut p1u, mut p1l) = (f64::NEG_INFINITY, f64::INFINITY);
    for p in inner {
        p1u = p1u.max(p);
        p1l = p1l.min(p);
    }
    let (mut p2u, mut p2l) = (f64::NEG_INFINITY, f64::INFINITY);
    for p in first {
        p2u = p2u.max(p);
        p2l = p2l.min(p);
    }
    TightBounds { p1_upper: p1u, p1_lower: p1l, p2_upper: p2u, p2_lower: p2l, lambda }
}

#[derive(Debug, Clone, Copy)]
pub struct MomentOptions {
    /// Multiplier on every dual-variable bound (1 = tight bounds).
    pub bound_scale: f64,
    pub symmetry_breaking: bool,
}

impl Default for MomentOptions {
    fn default() -> Self {
        MomentOptions { bound_scale: 1.0, symmetry_breaking: false }
    }
}

pub fn build_mdhras(inst: &Instance, amb: &MomentAmbiguity, opts: &MomentOptions) -> Result<BuiltModel, FormulationError> {
    amb.check_interior(inst)?;
    require_admissible_costs(&inst.costs)?;
    if !(opts.bound_scale >= 1.0) {
        return Err(FormulationError::Argument("bound scale must be at least 1".into()));
    }
    let n = inst.n;
    let lambda = inst.lambda();
    let pi = pi_table(&inst.costs);
    let tb = tight_bounds(&inst.costs, lambda);
    let s = opts.bound_scale;
    let scaled = |(lo, hi): (f64, f64)| (lo * s, hi * s);
    let (dl, du) = (&inst.service_lower, inst.support_deltas());
    let (tl, dt) = (&inst.travel_lower, &du.delta_travel);
    let dd = &du.delta_service;

    let mut m = LinearModel::new();
    let fs = first_stage_blocks(&mut m, inst)?;
    let tau = tau_linearization(&mut m, &fs)?;
    if opts.symmetry_breaking {
        symmetry_breaking(&mut m, &fs)?;
    }
    let x = |i: usize, j: usize| fs.x[i - 1][j - 1];

    let (rl, ru) = scaled(tb.rho());
    let rho: Vec<VarId> = (1..=n).map(|i| m.add_continuous(format!("rho_{i}"), rl, ru)).collect::<Result<_, _>>()?;
    let (al, au) = scaled(tb.alpha());
    let mut alpha = BTreeMap::new();
    for i in 1..=n {
        for ip in (1..=n).filter(|&ip| ip != i) {
            alpha.insert((i, ip), m.add_continuous(format!("alpha_{i}_{ip}"), al, au)?);
        }
    }
    let (a0l, a0u) = scaled(tb.alpha_depot());
    let alpha0: Vec<VarId> = (1..=n).map(|i| m.add_continuous(format!("alpha0_{i}"), a0l, a0u)).collect::<Result<_, _>>()?;
    let beta: Vec<VarId> = (1..=n + 2)
        .map(|j| {
            let lo = if j == n + 2 { 0.0 } else { f64::NEG_INFINITY };
            m.add_continuous(format!("beta_{j}"), lo, f64::INFINITY)
        })
        .collect::<Result<_, _>>()?;

    // positive parts and their products with the route indicators
    let mut sigma0 = BTreeMap::new();
    for i in 1..=n {
        for v in 1..=n + 2 {
            let p = pi.get(1, v);
            let up = s * tb.gamma_depot_upper(p);
            let g = m.add_continuous(format!("gamma0_{i}_{v}"), 0.0, up)?;
            m.add_constraint(format!("def_gamma0_{i}_{v}"), [(g, 1.0), (alpha0[i - 1], 1.0)], ConstraintSense::Ge, p + lambda)?;
            let blk = McCormickBlock::add(&mut m, format!("sigma0_{i}_{v}"), g, x(i, 1), 0.0, up)?;
            sigma0.insert((i, v), blk.product);
        }
    }
    let mut eta = BTreeMap::new();
    let mut phi = BTreeMap::new();
    for (&(i, ip, j), &t) in &tau {
        let blk = McCormickBlock::add(&mut m, format!("eta_{i}_{ip}_{j}"), alpha[&(i, ip)], t, al, au)?;
        eta.insert((i, ip, j), blk.product);
        for v in j..=n + 2 {
            let p = pi.get(j, v);
            let up = s * tb.gamma_upper(p);
            let g = m.add_continuous(format!("gamma_{i}_{ip}_{j}_{v}"), 0.0, up)?;
            m.add_constraint(format!("def_gamma_{i}_{ip}_{j}_{v}"), [(g, 1.0), (alpha[&(i, ip)], 1.0)], ConstraintSense::Ge, p + lambda)?;
            let blk = McCormickBlock::add(&mut m, format!("phi_{i}_{ip}_{j}_{v}"), g, t, 0.0, up)?;
            phi.insert((i, ip, j, v), blk.product);
        }
    }
    let mut psi0 = Vec::new();
    for i in 1..=n {
        psi0.push(McCormickBlock::add(&mut m, format!("psi0_{i}"), alpha0[i - 1], x(i, 1), a0l, a0u)?.product);
    }
    let mut zeta = BTreeMap::new();
    let mut xi = BTreeMap::new();
    for i in 1..=n {
        for j in 2..=n + 1 {
            zeta.insert((i, j), McCormickBlock::add(&mut m, format!("zeta_{i}_{j}"), rho[i - 1], x(i, j - 1), rl, ru)?.product);
            for v in j..=n + 2 {
                let p = pi.get(j, v);
                let up = s * tb.delta_upper(p);
                let d = m.add_continuous(format!("delta_{i}_{j}_{v}"), 0.0, up)?;
                m.add_constraint(format!("def_delta_{i}_{j}_{v}"), [(d, 1.0), (rho[i - 1], 1.0)], ConstraintSense::Ge, p)?;
                xi.insert((i, j, v), McCormickBlock::add(&mut m, format!("xi_{i}_{j}_{v}"), d, x(i, j - 1), 0.0, up)?.product);
            }
        }
    }

    // Σ_{j=k}^{v} β_j ≥ worst-case contribution of interval [k, v]
    for k in 1..=n + 1 {
        for v in k..=n + 2 {
            let mut terms: Vec<(VarId, f64)> = beta[k - 1..v].iter().map(|&b| (b, 1.0)).collect();
            let mut rhs = 0.0;
            let mut sub = |var: VarId, coef: f64| terms.push((var, -coef));
            if k == 1 {
                let p = pi.get(1, v);
                sub(fs.a[0], -p);
                for i in 1..=n {
                    sub(x(i, 1), tl[0][i] * (p + lambda));
                    sub(psi0[i - 1], -tl[0][i]);
                    sub(sigma0[&(i, v)], dt[0][i]);
                }
            }
            for j in k.max(2)..=v.min(n + 1) {
                let p = pi.get(j, v);
                sub(fs.a[j - 2], p);
                if j <= n {
                    sub(fs.a[j - 1], -p);
                } else {
                    rhs -= inst.horizon * p;
                }
                for i in 1..=n {
                    sub(x(i, j - 1), dl[i - 1] * p);
                    sub(zeta[&(i, j)], -dl[i - 1]);
                    sub(xi[&(i, j, v)], dd[i - 1]);
                }
                if j <= n {
                    for i in 1..=n {
                        for ip in (1..=n).filter(|&ip| ip != i) {
                            sub(tau[&(i, ip, j)], tl[i][ip] * (p + lambda));
                            sub(eta[&(i, ip, j)], -tl[i][ip]);
                            sub(phi[&(i, ip, j, v)], dt[i][ip]);
                        }
                    }
                }
            }
            m.add_constraint(format!("cascade_{k}_{v}"), terms, ConstraintSense::Ge, rhs)?;
        }
    }

    let mut obj: Vec<(VarId, f64)> = Vec::new();
    for i in 1..=n {
        obj.push((rho[i - 1], amb.service_mean[i - 1]));
        obj.push((x(i, n), lambda * amb.travel_mean[i][0]));
        obj.push((psi0[i - 1], amb.travel_mean[0][i]));
    }
    for (&(i, ip, _), &e) in &eta {
        obj.push((e, amb.travel_mean[i][ip]));
    }
    obj.extend(beta.iter().map(|&b| (b, 1.0)));
    m.set_objective(obj)?;
    Ok(BuiltModel { model: m, first_stage: fs })
}

/// Worst-case expected cost of a fixed decision via the MILP with x and a pinned.
pub fn mdhras_worstcase(
    dec: &FirstStageDecision,
    inst: &Instance,
    amb: &MomentAmbiguity,
    opts: &MomentOptions,
    solve_opts: &SolveOptions,
) -> Result<f64, FormulationError> {
    validate_decision(inst, dec)?;
    let mut built = build_mdhras(inst, amb, opts)?;
    fix_first_stage(&mut built.model, &built.first_stage, dec);
    let res = solve(&built.model, solve_opts)?;
    match (res.status, res.objective) {
        (SolveStatus::Optimal, Some(v)) => Ok(v),
        (s, _) => Err(FormulationError::NoSolution(s)),
    }
}

/// One uncertain coordinate touched by a route.
#[derive(Debug, Clone, Copy)]
pub(crate) enum Coord {
    Service(usize),
    Travel(usize, usize),
}

/// The 2N+1 coordinates a route depends on: all service times, the depot-out
/// arc, the inter-customer arcs in order, and the return arc.
pub(crate) fn route_coords(route: &[usize]) -> Vec<Coord> {
    let n = route.len();
    let mut out: Vec<Coord> = (1..=n).map(Coord::Service).collect();
    out.push(Coord::Travel(0, route[0]));
    for j in 1..n {
        out.push(Coord::Travel(route[j - 1], route[j]));
    }
    out.push(Coord::Travel(route[n - 1], 0));
    out
}

pub(crate) fn coord_bounds(inst: &Instance, c: Coord) -> (f64, f64) {
    match c {
        Coord::Service(i) => (inst.service_lower[i - 1], inst.service_upper[i - 1]),
        Coord::Travel(a, b) => (inst.travel_lower[a][b], inst.travel_upper[a][b]),
    }
}

pub(crate) fn set_coord(sc: &mut Scenario, c: Coord, value: f64) {
    match c {
        Coord::Service(i) => sc.service[i - 1] = value,
        Coord::Travel(a, b) => sc.travel[a][b] = value,
    }
}

/// Every vertex of the box restricted to the route's coordinates (degenerate
/// coordinates contribute a single value); other entries sit at their lower bound.
pub(crate) fn route_box_vertices(inst: &Instance, coords: &[Coord]) -> Vec<Scenario> {
    let base = Scenario { service: inst.service_lower.clone(), travel: inst.travel_lower.clone() };
    let free: Vec<Coord> = coords
        .iter()
        .copied()
        .filter(|&c| {
            let (lo, hi) = coord_bounds(inst, c);
            hi > lo
        })
        .collect();
    (0..1usize << free.len())
        .map(|mask| {
            let mut sc = base.clone();
            for (b, &c) in free.iter().enumerate() {
                let (lo, hi) = coord_bounds(inst, c);
                set_coord(&mut sc, c, if mask >> b & 1 == 1 { hi } else { lo });
            }
            sc
        })
        .collect()
}

/// Independent evaluation of the worst-case expectation for a fixed decision:
/// the moment-problem dual `min μ·(ρ,α) + θ` with one epigraph row per box
/// vertex and dual-feasible partition. Exponential in N; meant for N ≤ 4.
pub fn moment_worstcase_oracle(
    dec: &FirstStageDecision,
    inst: &Instance,
    amb: &MomentAmbiguity,
    solve_opts: &SolveOptions,
) -> Result<f64, FormulationError> {
    let route = validate_decision(inst, dec)?;
    let coords: Vec<Coord> = route_coords(&route)
        .into_iter()
        .filter(|&c| {
            let (lo, hi) = coord_bounds(inst, c);
            hi > lo
        })
        .collect();
    let mean = |c: Coord| match c {
        Coord::Service(i) => amb.service_mean[i - 1],
        Coord::Travel(a, b) => amb.travel_mean[a][b],
    };
    let duals: Vec<Vec<f64>> = dual_extreme_points(&inst.costs)
        .filter(|p| dual_feasible(&p.y, &inst.costs, 1e-9).is_ok())
        .map(|p| p.y)
        .collect();
    let mut m = LinearModel::new();
    let theta = m.add_continuous("theta", f64::NEG_INFINITY, f64::INFINITY)?;
    let mult: Vec<VarId> = (0..coords.len())
        .map(|k| m.add_continuous(format!("mult_{k}"), f64::NEG_INFINITY, f64::INFINITY))
        .collect::<Result<_, _>>()?;
    for (vi, sc) in route_box_vertices(inst, &coords).iter().enumerate() {
        let mut terms = vec![(theta, 1.0)];
        for (k, &c) in coords.iter().enumerate() {
            let val = match c {
                Coord::Service(i) => sc.service[i - 1],
                Coord::Travel(a, b) => sc.travel[a][b],
            };
            terms.push((mult[k], val));
        }
        for (pi, y) in duals.iter().enumerate() {
            let h = dual_objective_on_route(y, &route, &dec.appointments, sc, inst);
            m.add_constraint(format!("epi_{vi}_{pi}"), terms.clone(), ConstraintSense::Ge, h)?;
        }
    }
    let mut obj = vec![(theta, 1.0)];
    obj.extend(coords.iter().enumerate().map(|(k, &c)| (mult[k], mean(c))));
    m.set_objective(obj)?;
    let res = solve(&m, solve_opts)?;
    match (res.status, res.objective) {
        (SolveStatus::Optimal, Some(v)) => Ok(v),
        (s, _) => Err(FormulationError::NoSolution(s)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bounds_two_customers() {
        let tb = tight_bounds(&CostStructure::uniform(2, 2.0, 1.0, 20.0, 2.0), 2.0);
        assert_eq!((tb.p1_upper, tb.p1_lower, tb.p2_upper, tb.p2_lower), (22.0, -1.0, 24.0, -1.0));
        assert_eq!(tb.rho(), (-1.0, 22.0));
        assert_eq!(tb.alpha(), (-3.0, 24.0));
        assert_eq!(tb.alpha_depot(), (-3.0, 26.0));
    }

    #[test]
    fn zero_costs_zero_bounds() {
        let tb = tight_bounds(&CostStructure::uniform(3, 0.0, 0.0, 0.0, 0.0), 0.0);
        assert_eq!(tb.rho(), (0.0, 0.0));
        assert_eq!(tb.alpha(), (0.0, 0.0));
        assert_eq!(tb.alpha_depot(), (0.0, 0.0));
        assert_eq!(tb.gamma_upper(0.0), 0.0);
        assert_eq!(tb.delta_upper(0.0), 0.0);
    }

    #[test]
    fn lambda_widens_alpha() {
        let costs = CostStructure::uniform(3, 2.0, 1.0, 20.0, 0.0);
        let a = tight_bounds(&costs, 1.0);
        let b = tight_bounds(&costs, 2.0);
        assert_eq!(b.alpha().0, a.alpha().0 - 1.0);
        assert_eq!(b.alpha().1, a.alpha().1 + 1.0);
        assert_eq!(b.alpha_depot().0, a.alpha_depot().0 - 1.0);
        assert_eq!(b.alpha_depot().1, a.alpha_depot().1 + 1.0);
    }

    #[test]
    fn boundary_mean_rejected() {
        let mut inst = crate::domain::tests::standard_instance(2);
        let mut amb = MomentAmbiguity { service_mean: vec![30.0, 30.0], travel_mean: vec![vec![20.0; 3]; 3] };
        assert!(amb.check_interior(&inst).is_ok());
        amb.service_mean[1] = 50.0;
        assert!(amb.check_interior(&inst).is_err());
        inst.service_lower[1] = 50.0;
        assert!(amb.check_interior(&inst).is_ok());
    }

    #[test]
    fn route_coordinates() {
        let c = route_coords(&[2, 1, 3]);
        assert_eq!(c.len(), 7);
        assert!(matches!(c[3], Coord::Travel(0, 2)));
        assert!(matches!(c[6], Coord::Travel(3, 0)));
    }
}
