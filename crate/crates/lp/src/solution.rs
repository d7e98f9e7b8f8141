//! Plain-text solution files exchanged with subprocess solvers.
//!
//! ```text
//! #status optimal
//! #objective 12.5
//! #gap 0
//! #nodes 3
//! x_1_1 1
//! a_1 20
//! ```
//!
//! Metadata lines start with `#`; every other non-blank line is `name value`.
//! Variables that are absent take the value 0.

use std::fmt::Write as _;

use crate::lpfile::format_g17;
use crate::solve::SolveStatus;

#[derive(Debug, Clone, PartialEq)]
pub struct SolutionFile {
    pub status: SolveStatus,
    pub objective: Option<f64>,
    pub gap: Option<f64>,
    pub nodes: Option<u64>,
    pub values: Vec<(String, f64)>,
}

pub fn write_solution(sol: &SolutionFile) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "#status {}", sol.status.as_str());
    if let Some(obj) = sol.objective {
        let _ = writeln!(out, "#objective {}", format_g17(obj));
    }
    if let Some(gap) = sol.gap {
        let _ = writeln!(out, "#gap {}", format_g17(gap));
    }
    if let Some(nodes) = sol.nodes {
        let _ = writeln!(out, "#nodes {nodes}");
    }
    for (name, value) in &sol.values {
        let _ = writeln!(out, "{name} {}", format_g17(*value));
    }
    out
}

fn parse_num(s: &str, line: usize) -> Result<f64, String> {
    match s {
        "inf" | "+inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        _ => s.parse().map_err(|_| format!("line {line}: bad number `{s}`")),
    }
}

pub fn parse_solution(text: &str) -> Result<SolutionFile, String> {
    let mut status = None;
    let mut objective = None;
    let mut gap = None;
    let mut nodes = None;
    let mut values = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = raw.trim();
        let lineno = k + 1;
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let key = parts.next().unwrap_or_default();
        let value = parts.next().ok_or_else(|| format!("line {lineno}: missing value"))?;
        if parts.next().is_some() {
            return Err(format!("line {lineno}: expected `name value`"));
        }
        match key {
            "#status" => {
                status = Some(SolveStatus::parse(value).ok_or_else(|| format!("line {lineno}: unknown status `{value}`"))?)
            }
            "#objective" => objective = Some(parse_num(value, lineno)?),
            "#gap" => gap = Some(parse_num(value, lineno)?),
            "#nodes" => nodes = Some(value.parse().map_err(|_| format!("line {lineno}: bad node count"))?),
            k if k.starts_with('#') => {}
            name => values.push((name.to_string(), parse_num(value, lineno)?)),
        }
    }
    Ok(SolutionFile {
        status: status.ok_or("missing #status line")?,
        objective,
        gap,
        nodes,
        values,
    })
}
