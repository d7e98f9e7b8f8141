//! Building blocks shared by the SAA, mean-support and Wasserstein models.
//!
//! Variable names: `x_i_j` (customer i in position j), `a_j` (appointment),
//! `tau_i_ip_jm_j` (customer i in position j-1 followed by customer ip in
//! position j). Model-specific names are listed in each builder.

use std::collections::BTreeMap;

use hras_lp::{ConstraintSense, LinearModel, ModelError, SolveResult, VarId};
use thiserror::Error;

use crate::domain::{CostStructure, DomainError, FirstStageDecision, Instance};
use crate::recourse::{all_partitions_dual_feasible, interval_dual};

#[derive(Debug, Error)]
pub enum FormulationError {
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Solve(#[from] hras_lp::SolveError),
    #[error("solver returned {0:?} without a usable solution")]
    NoSolution(hras_lp::SolveStatus),
}

/// `π_{j,v}` for `1 ≤ j ≤ v ≤ N+2`.
#[derive(Debug, Clone, PartialEq)]
pub struct PiTable {
    n: usize,
    values: Vec<Vec<f64>>,
}

impl PiTable {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, j: usize, v: usize) -> f64 {
        assert!(1 <= j && j <= v && v <= self.n + 2, "π index ({j},{v}) out of range");
        self.values[j][v]
    }

    /// Every stored value, row by row.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (1..=self.n + 2).flat_map(move |j| (j..=self.n + 2).map(move |v| (j, v, self.values[j][v])))
    }

    pub fn max_abs(&self) -> f64 {
        self.iter().map(|(_, _, p)| p.abs()).fold(0.0, f64::max)
    }
}

pub fn pi_table(costs: &CostStructure) -> PiTable {
    let n = costs.wait_cost.len();
    let mut values = vec![vec![0.0; n + 3]; n + 3];
    for j in 1..=n + 2 {
        for v in j..=n + 2 {
            values[j][v] = interval_dual(costs, j, v);
        }
    }
    PiTable { n, values }
}

/// Reject cost structures for which the partition enumeration inside the
/// robust models would overstate the recourse cost.
pub fn require_admissible_costs(costs: &CostStructure) -> Result<(), FormulationError> {
    if all_partitions_dual_feasible(costs) {
        Ok(())
    } else {
        Err(FormulationError::Argument(
            "cost structure leaves some interval-partition duals infeasible; \
             the partition-based reformulations are exact only when every partition is dual feasible"
                .into(),
        ))
    }
}

/// Handles of the first-stage variables; `x[i-1][j-1]` and `a[j-1]`.
#[derive(Debug, Clone)]
pub struct FirstStageVars {
    pub x: Vec<Vec<VarId>>,
    pub a: Vec<VarId>,
}

/// Assignment and appointment constraints: x a permutation matrix, `0 ≤ a_j ≤ L`,
/// `a_j ≥ a_{j-1}`.
pub fn first_stage_blocks(m: &mut LinearModel, inst: &Instance) -> Result<FirstStageVars, ModelError> {
    let n = inst.n;
    let mut x = Vec::with_capacity(n);
    for i in 1..=n {
        x.push((1..=n).map(|j| m.add_binary(format!("x_{i}_{j}"))).collect::<Result<Vec<_>, _>>()?);
    }
    let a = (1..=n).map(|j| m.add_continuous(format!("a_{j}"), 0.0, inst.horizon)).collect::<Result<Vec<_>, _>>()?;
    for i in 0..n {
        m.add_constraint(format!("assign_cust_{}", i + 1), (0..n).map(|j| (x[i][j], 1.0)), ConstraintSense::Eq, 1.0)?;
    }
    for j in 0..n {
        m.add_constraint(format!("assign_pos_{}", j + 1), (0..n).map(|i| (x[i][j], 1.0)), ConstraintSense::Eq, 1.0)?;
    }
    for j in 1..n {
        m.add_constraint(format!("order_{}", j + 1), [(a[j], 1.0), (a[j - 1], -1.0)], ConstraintSense::Ge, 0.0)?;
    }
    Ok(FirstStageVars { x, a })
}

/// `τ_{i,i',j-1,j}` for customers `i ≠ i'` and positions `j ∈ 2..=N`, keyed `(i, i', j)`.
pub type TauVars = BTreeMap<(usize, usize, usize), VarId>;

/// Product variables `τ = x_{i,j-1}·x_{i',j}` with their four McCormick
/// inequalities. Position N+1 needs none: nobody is visited there.
pub fn tau_linearization(m: &mut LinearModel, fs: &FirstStageVars) -> Result<TauVars, ModelError> {
    let n = fs.x.len();
    let mut tau = BTreeMap::new();
    for j in 2..=n {
        for i in 1..=n {
            for ip in (1..=n).filter(|&ip| ip != i) {
                let t = m.add_continuous(format!("tau_{i}_{ip}_{}_{j}", j - 1), 0.0, 1.0)?;
                let (xa, xb) = (fs.x[i - 1][j - 2], fs.x[ip - 1][j - 1]);
                let base = format!("mc_tau_{i}_{ip}_{j}");
                m.add_constraint(format!("{base}_a"), [(t, 1.0), (xa, -1.0), (xb, -1.0)], ConstraintSense::Ge, -1.0)?;
                m.add_constraint(format!("{base}_b"), [(t, 1.0), (xa, -1.0)], ConstraintSense::Le, 0.0)?;
                m.add_constraint(format!("{base}_c"), [(t, 1.0), (xb, -1.0)], ConstraintSense::Le, 0.0)?;
                tau.insert((i, ip, j), t);
            }
        }
    }
    Ok(tau)
}

/// Exact linearization of `product = continuous · binary` when the continuous
/// factor lies in `[lower, upper]` and the binary factor is 0 or 1.
#[derive(Debug, Clone)]
pub struct McCormickBlock {
    pub product: VarId,
    pub continuous: VarId,
    pub binary: VarId,
    pub lower: f64,
    pub upper: f64,
}

impl McCormickBlock {
    /// Create the product variable and its four inequalities.
    pub fn add(
        m: &mut LinearModel,
        name: String,
        continuous: VarId,
        binary: VarId,
        lower: f64,
        upper: f64,
    ) -> Result<McCormickBlock, ModelError> {
        let product = m.add_continuous(name.clone(), lower.min(0.0), upper.max(0.0))?;
        let block = McCormickBlock { product, continuous, binary, lower, upper };
        for (suffix, terms, sense, rhs) in block.inequalities() {
            m.add_constraint(format!("mc_{name}_{suffix}"), terms, sense, rhs)?;
        }
        Ok(block)
    }

    /// `p ≥ L·b`, `p ≥ c + U(b-1)`, `p ≤ U·b`, `p ≤ c + L(b-1)`.
    pub fn inequalities(&self) -> [(&'static str, Vec<(VarId, f64)>, ConstraintSense, f64); 4] {
        let (p, c, b, lo, hi) = (self.product, self.continuous, self.binary, self.lower, self.upper);
        [
            ("lo", vec![(p, 1.0), (b, -lo)], ConstraintSense::Ge, 0.0),
            ("ub", vec![(p, 1.0), (c, -1.0), (b, -hi)], ConstraintSense::Ge, -hi),
            ("hi", vec![(p, 1.0), (b, -hi)], ConstraintSense::Le, 0.0),
            ("lb", vec![(p, 1.0), (c, -1.0), (b, -lo)], ConstraintSense::Le, -lo),
        ]
    }
}

/// Lexicographic ordering cuts for a single homogeneous customer group:
/// `x_{1,j} ≥ x_{1,j+1}` for `j ∈ 2..=N-2` and
/// `x_{i,j} ≤ Σ_{l<i} x_{l,j-1}` for `i ∈ 2..=N`, `j ∈ 3..=N-1`.
pub fn symmetry_breaking(m: &mut LinearModel, fs: &FirstStageVars) -> Result<usize, ModelError> {
    let n = fs.x.len();
    let mut added = 0;
    for j in 2..=n.saturating_sub(2) {
        m.add_constraint(format!("sbc_first_{j}"), [(fs.x[0][j - 1], 1.0), (fs.x[0][j], -1.0)], ConstraintSense::Ge, 0.0)?;
        added += 1;
    }
    for i in 2..=n {
        for j in 3..=n.saturating_sub(1) {
            let mut terms = vec![(fs.x[i - 1][j - 1], 1.0)];
            terms.extend((1..i).map(|l| (fs.x[l - 1][j - 2], -1.0)));
            m.add_constraint(format!("sbc_order_{i}_{j}"), terms, ConstraintSense::Le, 0.0)?;
            added += 1;
        }
    }
    Ok(added)
}

/// Whether a route satisfies the symmetry-breaking cuts.
pub fn route_satisfies_symmetry_breaking(route: &[usize]) -> bool {
    let n = route.len();
    let x = |i: usize, j: usize| -> i32 { i32::from(route[j - 1] == i) };
    for j in 2..=n.saturating_sub(2) {
        if x(1, j) < x(1, j + 1) {
            return false;
        }
    }
    for i in 2..=n {
        for j in 3..=n.saturating_sub(1) {
            if x(i, j) > (1..i).map(|l| x(l, j - 1)).sum::<i32>() {
                return false;
            }
        }
    }
    true
}

/// Pin the first-stage variables to a given decision.
pub fn fix_first_stage(m: &mut LinearModel, fs: &FirstStageVars, dec: &FirstStageDecision) {
    for (i, row) in fs.x.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            m.fix(v, f64::from(dec.assignment[i][j]));
        }
    }
    for (j, &v) in fs.a.iter().enumerate() {
        m.fix(v, dec.appointments[j]);
    }
}

/// Read the first-stage decision out of a solver result, rounding `x` and
/// clamping appointments into `[0, L]` in nondecreasing order.
pub fn decision_from_solution(fs: &FirstStageVars, res: &SolveResult, horizon: f64) -> FirstStageDecision {
    let assignment = fs
        .x
        .iter()
        .map(|row| row.iter().map(|&v| u8::from(res.value(v) > 0.5)).collect())
        .collect();
    let mut prev = 0.0f64;
    let appointments = fs
        .a
        .iter()
        .map(|&v| {
            let a = res.value(v).clamp(0.0, horizon).max(prev);
            prev = a;
            a
        })
        .collect();
    FirstStageDecision { assignment, appointments }
}
