//! File plumbing: JSON/CSV readers and writers and error classification.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use hras_core::domain::{Instance, Scenario};
use hras_core::formulation::FormulationError;
use hras_core::pipeline::PipelineError;
use hras_core::scenario::{read_scenarios_csv, read_scenarios_json, GeneratedInstance, ScenarioError};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::Failure;

fn io(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure::Io(format!("{}: {e}", path.display()))
}

pub fn ensure_dir(dir: &Path) -> Result<(), Failure> {
    std::fs::create_dir_all(dir).map_err(|e| io(dir, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Failure> {
    let f = File::create(path).map_err(|e| io(path, e))?;
    serde_json::to_writer_pretty(BufWriter::new(f), value).map_err(|e| io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let f = File::open(path).map_err(|e| io(path, e))?;
    serde_json::from_reader(BufReader::new(f)).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
}

pub fn write_text(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| io(path, e))
}

/// Header plus rows, all cells already formatted.
pub fn write_csv(path: &Path, header: &[String], rows: &[Vec<String>]) -> Result<(), Failure> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io(path, e))?;
    w.write_record(header).map_err(|e| io(path, e))?;
    for r in rows {
        w.write_record(r).map_err(|e| io(path, e))?;
    }
    w.flush().map_err(|e| io(path, e))
}

pub fn cols(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

pub fn num(v: f64) -> String {
    v.to_string()
}

/// `gen` writes a generated instance; a bare instance is accepted too.
#[derive(Deserialize)]
#[serde(untagged)]
enum InstanceFile {
    Generated(Box<GeneratedInstance>),
    Plain(Instance),
}

pub fn read_instance(path: &Path) -> Result<Instance, Failure> {
    let inst = match read_json::<InstanceFile>(path)? {
        InstanceFile::Generated(g) => g.instance,
        InstanceFile::Plain(i) => i,
    };
    let v = hras_core::domain::validate_instance(&inst);
    if let Some(first) = v.first() {
        return Err(Failure::Config(format!("{}: invalid instance ({} problems, first: {first})", path.display(), v.len())));
    }
    Ok(inst)
}

pub fn read_scenarios(path: &Path) -> Result<Vec<Scenario>, Failure> {
    let f = File::open(path).map_err(|e| io(path, e))?;
    let csv = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    let res = if csv { read_scenarios_csv(BufReader::new(f)) } else { read_scenarios_json(BufReader::new(f)) };
    res.map_err(|e| match e {
        ScenarioError::Io(e) => io(path, e),
        other => Failure::Config(format!("{}: {other}", path.display())),
    })
}

pub fn scenario_failure(e: ScenarioError) -> Failure {
    match e {
        ScenarioError::Io(e) => Failure::Io(e.to_string()),
        other => Failure::Config(other.to_string()),
    }
}

pub fn formulation_failure(e: FormulationError) -> Failure {
    match e {
        FormulationError::Solve(e) => Failure::Solver(e.to_string()),
        FormulationError::NoSolution(s) => Failure::Solver(format!("no usable solution (status {})", s.as_str())),
        other => Failure::Config(other.to_string()),
    }
}

pub fn pipeline_failure(e: PipelineError) -> Failure {
    match e {
        PipelineError::Formulation(f) => formulation_failure(f),
        PipelineError::Scenario(s) => scenario_failure(s),
        other => Failure::Config(other.to_string()),
    }
}
