use std::time::Instant;

use highs::{HighsModelStatus, HighsSolutionStatus, RowProblem, Sense};

use crate::model::{ConstraintSense, LinearModel, VarKind};
use crate::solve::{SolveError, SolveOptions, SolveResult, SolveStatus};

/// Map a HiGHS model status plus incumbent availability to the contract status.
///
/// Returns `None` for failure statuses that carry no usable information.
pub fn map_status(status: HighsModelStatus, has_incumbent: bool) -> Option<SolveStatus> {
    use HighsModelStatus as H;
    Some(match status {
        H::Optimal | H::ModelEmpty => SolveStatus::Optimal,
        H::Infeasible => SolveStatus::Infeasible,
        H::Unbounded => SolveStatus::Unbounded,
        H::ReachedTimeLimit => SolveStatus::TimeLimit,
        H::ReachedIterationLimit
        | H::ReachedSolutionLimit
        | H::ReachedInterrupt
        | H::ReachedMemoryLimit
        | H::ObjectiveBound
        | H::ObjectiveTarget
        | H::Unknown
            if has_incumbent =>
        {
            SolveStatus::GapFeasible
        }
        _ => return None,
    })
}

fn build(model: &LinearModel, options: &SolveOptions, presolve: bool) -> highs::Model {
    let mut pb = RowProblem::new();
    let mut obj = vec![0.0; model.variables().len()];
    for (v, c) in model.objective() {
        obj[v.0] += c;
    }
    let cols: Vec<_> = model
        .variables()
        .iter()
        .zip(&obj)
        .map(|(v, &c)| match v.kind {
            VarKind::Continuous => pb.add_column(c, v.lower..=v.upper),
            VarKind::Binary => pb.add_integer_column(c, v.lower.max(0.0)..=v.upper.min(1.0)),
        })
        .collect();
    for c in model.constraints() {
        let (lo, hi) = match c.sense {
            ConstraintSense::Le => (f64::NEG_INFINITY, c.rhs),
            ConstraintSense::Ge => (c.rhs, f64::INFINITY),
            ConstraintSense::Eq => (c.rhs, c.rhs),
        };
        pb.add_row(lo..=hi, c.terms.iter().map(|(v, k)| (cols[v.0], *k)));
    }
    let mut m = pb.optimise(Sense::Minimise);
    m.make_quiet();
    m.set_option("mip_rel_gap", options.relative_gap);
    m.set_option("mip_abs_gap", options.absolute_gap);
    m.set_option("threads", options.threads.max(1) as i32);
    if let Some(t) = options.time_limit_seconds {
        m.set_option("time_limit", t);
    }
    if !presolve {
        m.set_option("presolve", "off");
    }
    m
}

pub(crate) fn solve_highs(model: &LinearModel, options: &SolveOptions) -> Result<SolveResult, SolveError> {
    let started = Instant::now();
    let mut solved = build(model, options, true)
        .try_solve()
        .map_err(|e| SolveError::Backend(format!("{e:?}")))?;
    if solved.status() == HighsModelStatus::UnboundedOrInfeasible {
        // Presolve cannot always tell the two apart; the plain solve can.
        solved = build(model, options, false)
            .try_solve()
            .map_err(|e| SolveError::Backend(format!("{e:?}")))?;
    }
    let wall = started.elapsed().as_secs_f64();
    let has_incumbent = solved.primal_solution_status() == HighsSolutionStatus::Feasible;
    let raw = solved.status();
    let mut status = match (raw, map_status(raw, has_incumbent)) {
        (_, Some(s)) => s,
        (HighsModelStatus::UnboundedOrInfeasible, None) => SolveStatus::Infeasible,
        (other, None) => return Err(SolveError::Backend(format!("HiGHS status {other:?}"))),
    };
    let is_mip = model.num_binaries() > 0;
    let gap = if is_mip && has_incumbent { Some(solved.mip_gap()) } else if has_incumbent { Some(0.0) } else { None };
    if status == SolveStatus::Optimal {
        if let Some(g) = gap {
            let objective = solved.objective_value();
            if g > options.relative_gap && (g * objective.abs()) > options.absolute_gap * (1.0 + 1e-9) {
                status = SolveStatus::GapFeasible;
            }
        }
    }
    let node_count = if is_mip { node_count(&solved) } else { None };
    let (objective, values) = if has_incumbent {
        (Some(solved.objective_value()), solved.get_solution().columns().to_vec())
    } else {
        (None, Vec::new())
    };
    Ok(SolveResult { status, objective, values, relative_gap: gap, wall_time_seconds: wall, node_count })
}

fn node_count(solved: &highs::SolvedModel) -> Option<u64> {
    let mut nodes: i64 = -1;
    // SAFETY: the pointer is a live HiGHS instance owned by `solved`, the key
    // is a NUL-terminated literal and `nodes` outlives the call.
    let rc = unsafe { highs_sys::Highs_getInt64InfoValue(solved.as_ptr(), c"mip_node_count".as_ptr(), &mut nodes) };
    (rc == 0 && nodes >= 0).then_some(nodes as u64)
}
