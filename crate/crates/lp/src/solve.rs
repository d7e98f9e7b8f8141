use std::collections::HashMap;
use std::path::PathBuf;
use std::process::Command;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lpfile::emit_lp_file;
use crate::model::{LinearModel, ModelError, VarId};
use crate::solution::{parse_solution, SolutionFile};

/// Environment variable selecting the backend: `highs` for the in-process
/// solver, anything else is treated as the path of a solver executable.
pub const SOLVER_ENV: &str = "HRAS_SOLVER";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    /// Solved to within the configured gap.
    Optimal,
    /// A feasible incumbent exists but the gap target was not certified.
    GapFeasible,
    Infeasible,
    Unbounded,
    /// Time limit hit; the incumbent (if any) and its gap are reported.
    TimeLimit,
}

impl SolveStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::GapFeasible => "gap-feasible",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::Unbounded => "unbounded",
            SolveStatus::TimeLimit => "time-limit",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "optimal" => SolveStatus::Optimal,
            "gap-feasible" => SolveStatus::GapFeasible,
            "infeasible" => SolveStatus::Infeasible,
            "unbounded" => SolveStatus::Unbounded,
            "time-limit" => SolveStatus::TimeLimit,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveResult {
    pub status: SolveStatus,
    pub objective: Option<f64>,
    /// One value per model variable, in model order. Empty when no incumbent.
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub values: Vec<f64>,
    pub relative_gap: Option<f64>,
    pub wall_time_seconds: f64,
    pub node_count: Option<u64>,
}

impl SolveResult {
    pub fn has_solution(&self) -> bool {
        !self.values.is_empty()
    }

    pub fn value(&self, var: VarId) -> f64 {
        self.values[var.0]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Backend {
    /// HiGHS linked into the process.
    Highs,
    /// External executable invoked as `cmd MODEL.lp SOLUTION.sol --gap G --abs-gap A [--time-limit T]`.
    Command(PathBuf),
}

impl Backend {
    pub fn from_spec(spec: &str) -> Backend {
        if spec.eq_ignore_ascii_case("highs") {
            Backend::Highs
        } else {
            Backend::Command(PathBuf::from(spec))
        }
    }

    /// Backend named by [`SOLVER_ENV`], falling back to in-process HiGHS.
    pub fn from_env() -> Backend {
        match std::env::var(SOLVER_ENV) {
            Ok(s) if !s.trim().is_empty() => Backend::from_spec(s.trim()),
            _ => Backend::Highs,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub relative_gap: f64,
    pub absolute_gap: f64,
    pub time_limit_seconds: Option<f64>,
    pub threads: u32,
    pub backend: Option<Backend>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            relative_gap: 0.02,
            absolute_gap: 1e-6,
            time_limit_seconds: None,
            threads: 1,
            backend: Some(Backend::from_env()),
        }
    }
}

impl SolveOptions {
    /// Options for verification work: gaps small enough that the reported
    /// objective is the optimum up to solver feasibility tolerances.
    pub fn exact() -> Self {
        SolveOptions { relative_gap: 1e-9, absolute_gap: 1e-9, ..Default::default() }
    }

    pub fn with_gap(mut self, gap: f64) -> Self {
        self.relative_gap = gap;
        self
    }

    pub fn with_time_limit(mut self, seconds: f64) -> Self {
        self.time_limit_seconds = Some(seconds);
        self
    }

    pub fn with_backend(mut self, backend: Backend) -> Self {
        self.backend = Some(backend);
        self
    }
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("no solver backend configured")]
    NoBackend,
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("solver failed: {0}")]
    Backend(String),
    #[error("solver i/o: {0}")]
    Io(#[from] std::io::Error),
}

pub fn solve(model: &LinearModel, options: &SolveOptions) -> Result<SolveResult, SolveError> {
    model.validate()?;
    match options.backend.as_ref().ok_or(SolveError::NoBackend)? {
        Backend::Highs => crate::highs_backend::solve_highs(model, options),
        Backend::Command(path) => solve_command(model, options, path),
    }
}

fn solve_command(model: &LinearModel, options: &SolveOptions, exe: &PathBuf) -> Result<SolveResult, SolveError> {
    let dir = tempfile::tempdir()?;
    let lp_path = dir.path().join("model.lp");
    let sol_path = dir.path().join("model.sol");
    std::fs::write(&lp_path, emit_lp_file(model)?)?;
    let started = Instant::now();
    let mut cmd = Command::new(exe);
    cmd.arg(&lp_path)
        .arg(&sol_path)
        .arg("--gap")
        .arg(options.relative_gap.to_string())
        .arg("--abs-gap")
        .arg(options.absolute_gap.to_string());
    if let Some(t) = options.time_limit_seconds {
        cmd.arg("--time-limit").arg(t.to_string());
    }
    let output = cmd.output()?;
    let wall = started.elapsed().as_secs_f64();
    if !output.status.success() {
        return Err(SolveError::Backend(format!(
            "{} exited with {}: {}",
            exe.display(),
            output.status,
            String::from_utf8_lossy(&output.stderr).trim()
        )));
    }
    let text = std::fs::read_to_string(&sol_path)?;
    let sol = parse_solution(&text).map_err(SolveError::Backend)?;
    Ok(result_from_file(model, sol, wall))
}

fn result_from_file(model: &LinearModel, sol: SolutionFile, wall: f64) -> SolveResult {
    let values = if sol.values.is_empty() && sol.objective.is_none() {
        Vec::new()
    } else {
        let by_name: HashMap<&str, f64> = sol.values.iter().map(|(n, v)| (n.as_str(), *v)).collect();
        model
            .variables()
            .iter()
            .map(|v| by_name.get(v.name.as_str()).copied().unwrap_or(0.0))
            .collect()
    };
    SolveResult {
        status: sol.status,
        objective: sol.objective,
        values,
        relative_gap: sol.gap,
        wall_time_seconds: wall,
        node_count: sol.nodes,
    }
}
