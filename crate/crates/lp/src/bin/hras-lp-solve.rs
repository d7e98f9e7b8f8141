//! Standalone solver: reads an LP file with HiGHS's own parser and writes a
//! solution file in the `name value` format understood by the subprocess
//! backend.
//!
//! Usage: `hras-lp-solve MODEL.lp SOLUTION.sol [--gap G] [--abs-gap A] [--time-limit T]`

use std::ffi::{CStr, CString};
use std::os::raw::{c_char, c_void};
use std::process::ExitCode;

use hras_lp::{map_status, write_solution, SolutionFile, SolveStatus};
use highs::{HighsModelStatus, HighsSolutionStatus};
use highs_sys::*;

struct Raw(*mut c_void);

impl Drop for Raw {
    fn drop(&mut self) {
        // SAFETY: created by Highs_create and destroyed exactly once.
        unsafe { Highs_destroy(self.0) }
    }
}

fn cstr(s: &str) -> CString {
    CString::new(s).expect("no interior NUL")
}

fn run(args: &[String]) -> Result<(), String> {
    let mut positional = Vec::new();
    let mut gap = 0.02f64;
    let mut abs_gap = 1e-6f64;
    let mut time_limit: Option<f64> = None;
    let mut it = args.iter();
    while let Some(a) = it.next() {
        let mut num = |flag: &str| -> Result<f64, String> {
            it.next()
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| format!("{flag} needs a number"))
        };
        match a.as_str() {
            "--gap" => gap = num("--gap")?,
            "--abs-gap" => abs_gap = num("--abs-gap")?,
            "--time-limit" => time_limit = Some(num("--time-limit")?),
            _ => positional.push(a.clone()),
        }
    }
    let [lp, sol] = positional.as_slice() else {
        return Err("usage: hras-lp-solve MODEL.lp SOLUTION.sol [--gap G] [--abs-gap A] [--time-limit T]".into());
    };

    // SAFETY: every call below passes the live instance owned by `h` and
    // NUL-terminated strings / correctly sized buffers.
    unsafe {
        let h = Raw(Highs_create());
        Highs_setBoolOptionValue(h.0, cstr("output_flag").as_ptr(), 0);
        Highs_setDoubleOptionValue(h.0, cstr("mip_rel_gap").as_ptr(), gap);
        Highs_setDoubleOptionValue(h.0, cstr("mip_abs_gap").as_ptr(), abs_gap);
        Highs_setIntOptionValue(h.0, cstr("threads").as_ptr(), 1);
        if let Some(t) = time_limit {
            Highs_setDoubleOptionValue(h.0, cstr("time_limit").as_ptr(), t);
        }
        if Highs_readModel(h.0, cstr(lp).as_ptr()) == kHighsStatusError {
            return Err(format!("cannot read {lp}"));
        }
        Highs_run(h.0);
        let mut raw_status = HighsModelStatus::try_from(Highs_getModelStatus(h.0)).map_err(|e| format!("{e:?}"))?;
        if raw_status == HighsModelStatus::UnboundedOrInfeasible {
            Highs_setStringOptionValue(h.0, cstr("presolve").as_ptr(), cstr("off").as_ptr());
            Highs_clearSolver(h.0);
            Highs_run(h.0);
            raw_status = HighsModelStatus::try_from(Highs_getModelStatus(h.0)).map_err(|e| format!("{e:?}"))?;
        }
        let mut sol_status: HighsInt = 0;
        Highs_getIntInfoValue(h.0, cstr("primal_solution_status").as_ptr(), &mut sol_status);
        let has_incumbent = HighsSolutionStatus::try_from(sol_status) == Ok(HighsSolutionStatus::Feasible);
        let status = match map_status(raw_status, has_incumbent) {
            Some(s) => s,
            None if raw_status == HighsModelStatus::UnboundedOrInfeasible => SolveStatus::Infeasible,
            None => return Err(format!("HiGHS status {raw_status:?}")),
        };
        let ncol = Highs_getNumCol(h.0) as usize;
        let mut is_mip = false;
        let mut values = Vec::new();
        let (mut objective, mut rel_gap, mut nodes) = (None, None, None);
        if has_incumbent {
            let nrow = Highs_getNumRow(h.0) as usize;
            let mut col_value = vec![0.0; ncol];
            let mut col_dual = vec![0.0; ncol];
            let mut row_value = vec![0.0; nrow];
            let mut row_dual = vec![0.0; nrow];
            Highs_getSolution(h.0, col_value.as_mut_ptr(), col_dual.as_mut_ptr(), row_value.as_mut_ptr(), row_dual.as_mut_ptr());
            let mut name = vec![0 as c_char; kHighsMaximumStringLength as usize + 1];
            for (c, v) in col_value.iter().enumerate() {
                Highs_getColName(h.0, c as HighsInt, name.as_mut_ptr());
                let n = CStr::from_ptr(name.as_ptr()).to_string_lossy().into_owned();
                values.push((n, *v));
                let mut integrality: HighsInt = 0;
                Highs_getColIntegrality(h.0, c as HighsInt, &mut integrality);
                is_mip |= integrality != 0;
            }
            objective = Some(Highs_getObjectiveValue(h.0));
            if is_mip {
                let mut g = 0.0;
                Highs_getDoubleInfoValue(h.0, cstr("mip_gap").as_ptr(), &mut g);
                rel_gap = Some(g);
                let mut n: i64 = 0;
                Highs_getInt64InfoValue(h.0, cstr("mip_node_count").as_ptr(), &mut n);
                nodes = Some(n.max(0) as u64);
            } else {
                rel_gap = Some(0.0);
            }
        }
        let file = SolutionFile { status, objective, gap: rel_gap, nodes, values };
        std::fs::write(sol, write_solution(&file)).map_err(|e| format!("{sol}: {e}"))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    match run(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("hras-lp-solve: {e}");
            ExitCode::from(3)
        }
    }
}
