use std::path::Path;

use hras_core::domain::{validate_decision, FirstStageDecision};
use hras_core::evaluation::{
    aggregate, default_epsilon_grid, nearest_rank, out_of_sample, reliability_from_means, EvaluationReport,
};
use hras_core::pipeline::{build_model, replication_seeds, run_experiment, solve_built, ModelKind, Outcome};
use hras_core::recourse::recourse_on_route;
use hras_core::scenario::{gen_instance, gen_scenarios, write_scenarios_csv, GenConfig, OosSet};
use hras_lp::emit_lp_file;
use serde::Serialize;

use crate::config::{parse_model, RunConfig};
use crate::output::*;
use crate::Failure;

fn write_scenario_files(dir: &Path, stem: &str, n: usize, scenarios: &[hras_core::domain::Scenario]) -> Result<(), Failure> {
    write_json(&dir.join(format!("{stem}.json")), &scenarios)?;
    let path = dir.join(format!("{stem}.csv"));
    let f = std::fs::File::create(&path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    write_scenarios_csv(std::io::BufWriter::new(f), n, scenarios).map_err(scenario_failure)
}

pub fn gen(cfg: &RunConfig) -> Result<(), Failure> {
    let n = cfg.n()?;
    let r = RunConfig::require(&cfg.r, "r")?;
    let seeds = replication_seeds(cfg.seed.unwrap_or(1), 0);
    let gcfg = GenConfig::standard(n, seeds.instance, cfg.cost_structure(n)?);
    let gi = gen_instance(&gcfg).map_err(scenario_failure)?;
    let training = gen_scenarios(&gi, r, OosSet::Set1, seeds.training).map_err(scenario_failure)?;
    let dir = cfg.out_dir();
    ensure_dir(&dir)?;
    write_json(&dir.join("instance.json"), &gi)?;
    write_scenario_files(&dir, "training", n, &training)?;
    if cfg.oos.is_some() || cfg.oos_count.is_some() {
        let set = cfg.oos_set()?;
        let oos = gen_scenarios(&gi, cfg.oos_count.unwrap_or(2000), set, seeds.oos).map_err(scenario_failure)?;
        write_scenario_files(&dir, &format!("oos_{}", set.label()), n, &oos)?;
    }
    Ok(())
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct SolveSummary {
    model: String,
    status: String,
    objective: Option<f64>,
    relative_gap: Option<f64>,
    node_count: Option<u64>,
    variables: usize,
    binaries: usize,
    constraints: usize,
}

pub fn solve(instance: &Path, scenarios: &Path, cfg: &RunConfig) -> Result<(), Failure> {
    let inst = read_instance(instance)?;
    let training = read_scenarios(scenarios)?;
    let kind = cfg.model_kind()?;
    let opts = cfg.solve_options()?;
    let built = build_model(kind, &inst, &training, cfg.symmetry()).map_err(pipeline_failure)?;
    let dir = cfg.out_dir();
    ensure_dir(&dir)?;
    let lp = emit_lp_file(&built.model).map_err(|e| Failure::Config(e.to_string()))?;
    write_text(&dir.join("model.lp"), &lp)?;
    let sol = solve_built(&built, &inst, &opts).map_err(pipeline_failure)?;
    let summary = SolveSummary {
        model: kind.label(),
        status: sol.result.status.as_str().into(),
        objective: sol.result.objective,
        relative_gap: sol.result.relative_gap,
        node_count: sol.result.node_count,
        variables: built.model.variables().len(),
        binaries: built.model.num_binaries(),
        constraints: built.model.constraints().len(),
    };
    write_json(&dir.join("decision.json"), &sol.decision)?;
    write_json(&dir.join("result.json"), &summary)?;
    write_csv(
        &dir.join("timing.csv"),
        &cols(&["command", "model", "wall_time_seconds"]),
        &[vec!["solve".into(), kind.label(), num(sol.result.wall_time_seconds)]],
    )?;
    println!("{} {} objective {}", kind.label(), summary.status, summary.objective.map_or("-".into(), num));
    Ok(())
}

fn report_header(n: usize) -> Vec<String> {
    let mut h = cols(&["scenarios", "mean_cost", "p20", "p80", "mean_overtime", "mean_travel"]);
    h.extend((1..=n).map(|j| format!("wait_{j}")));
    h.extend((1..=n).map(|j| format!("idle_{j}")));
    h.extend((1..=n).map(|j| format!("interarrival_{j}")));
    h
}

fn report_row(r: &EvaluationReport) -> Vec<String> {
    let mut row = vec![r.scenarios.to_string(), num(r.mean_cost), num(r.p20), num(r.p80), num(r.mean_overtime), num(r.mean_travel)];
    row.extend(r.mean_wait.iter().chain(&r.mean_idle).chain(&r.interarrival).map(|&v| num(v)));
    row
}

pub fn evaluate(instance: &Path, decision: &Path, scenarios: &Path, cfg: &RunConfig) -> Result<(), Failure> {
    let inst = read_instance(instance)?;
    let dec: FirstStageDecision = read_json(decision)?;
    let route = validate_decision(&inst, &dec).map_err(|e| Failure::Config(format!("{}: {e}", decision.display())))?;
    let sc = read_scenarios(scenarios)?;
    let report = out_of_sample(&dec, &sc, &inst).map_err(|e| Failure::Config(e.to_string()))?;
    let dir = cfg.out_dir();
    ensure_dir(&dir)?;
    write_csv(&dir.join("evaluation.csv"), &report_header(inst.n), &[report_row(&report)])?;

    let n = inst.n;
    let mut header = cols(&["scenario", "cost"]);
    header.extend((1..=n).map(|j| format!("wait_{j}")));
    header.extend((1..=n).map(|j| format!("idle_{j}")));
    header.extend(cols(&["overtime", "travel"]));
    let rows: Vec<Vec<String>> = sc
        .iter()
        .enumerate()
        .map(|(k, s)| {
            let o = recourse_on_route(&route, &dec.appointments, s, &inst);
            let mut row = vec![(k + 1).to_string(), num(o.cost)];
            row.extend(o.wait[..n].iter().chain(&o.idle[..n]).map(|&v| num(v)));
            row.extend([num(o.overtime()), num(o.travel_total)]);
            row
        })
        .collect();
    write_csv(&dir.join("per_scenario.csv"), &header, &rows)?;
    println!("mean cost {} over {} scenarios", report.mean_cost, report.scenarios);
    Ok(())
}

fn timing_rows(outcomes: &[Vec<Outcome>]) -> Vec<Vec<String>> {
    outcomes
        .iter()
        .flatten()
        .map(|o| {
            vec![
                o.replication.to_string(),
                o.model.label(),
                o.solution.result.status.as_str().into(),
                o.solution.result.node_count.map_or(String::new(), |v| v.to_string()),
                num(o.solution.result.wall_time_seconds),
            ]
        })
        .collect()
}

fn write_timing(dir: &Path, outcomes: &[Vec<Outcome>]) -> Result<(), Failure> {
    write_csv(
        &dir.join("timing.csv"),
        &cols(&["replication", "model", "status", "nodes", "wall_time_seconds"]),
        &timing_rows(outcomes),
    )
}

fn column(outcomes: &[Vec<Outcome>], k: usize) -> Vec<EvaluationReport> {
    outcomes.iter().map(|o| o[k].report.clone()).collect()
}

pub fn sweep(cfg: &RunConfig) -> Result<(), Failure> {
    let exp = cfg.experiment(20)?;
    let mut grid = cfg.grid.clone().unwrap_or_else(default_epsilon_grid);
    if grid.is_empty() || grid.iter().any(|e| !(*e >= 0.0)) {
        return Err(Failure::Config("--grid must hold nonnegative radii".into()));
    }
    grid.sort_by(f64::total_cmp);
    let models: Vec<ModelKind> = grid.iter().map(|&epsilon| ModelKind::Wdhras { epsilon }).collect();
    let outcomes = run_experiment(&exp, &models, &cfg.solve_options()?, cfg.workers()).map_err(pipeline_failure)?;
    let dir = cfg.out_dir();
    ensure_dir(&dir)?;
    let mut rows = Vec::new();
    let mut plot = Vec::new();
    for (k, &eps) in grid.iter().enumerate() {
        let a = aggregate(&column(&outcomes, k)).map_err(|e| Failure::Config(e.to_string()))?;
        rows.push(vec![
            num(eps),
            a.replications.to_string(),
            num(a.mean_cost),
            num(a.p20),
            num(a.p80),
            num(a.mean_wait),
            num(a.mean_idle),
            num(a.mean_overtime),
            num(a.mean_travel),
        ]);
        plot.push(vec![num(eps), "wdhras".into(), num(a.mean_cost), num(a.p20), num(a.p80)]);
    }
    write_csv(
        &dir.join("sweep.csv"),
        &cols(&["epsilon", "replications", "mean_cost", "p20", "p80", "mean_wait", "mean_idle", "mean_overtime", "mean_travel"]),
        &rows,
    )?;
    write_csv(&dir.join("plot.csv"), &cols(&["x", "series", "y", "p20", "p80"]), &plot)?;
    write_timing(&dir, &outcomes)
}

pub fn reliability(cfg: &RunConfig) -> Result<(), Failure> {
    let exp = cfg.experiment(20)?;
    let kind = cfg.model_kind()?;
    let outcomes = run_experiment(&exp, &[kind], &cfg.solve_options()?, cfg.workers()).map_err(pipeline_failure)?;
    let pairs: Vec<(f64, f64)> = outcomes.iter().map(|o| (o[0].solution.value, o[0].report.mean_cost)).collect();
    let r = reliability_from_means(&pairs, exp.oos_count).map_err(|e| Failure::Config(e.to_string()))?;
    let dir = cfg.out_dir();
    ensure_dir(&dir)?;
    write_csv(
        &dir.join("reliability.csv"),
        &cols(&["model", "fraction", "instances", "oos_scenarios"]),
        &[vec![kind.label(), num(r.fraction), r.instances.to_string(), r.oos_scenarios.to_string()]],
    )?;
    write_timing(&dir, &outcomes)
}

pub fn report(cfg: &RunConfig) -> Result<(), Failure> {
    let exp = cfg.experiment(20)?;
    let names = cfg.models.clone().unwrap_or_else(|| {
        ["saa", "mdhras", "wdhras:0.5", "wdhras:5", "wdhras:50"].iter().map(|s| s.to_string()).collect()
    });
    let models: Vec<ModelKind> = names.iter().map(|m| parse_model(m, None)).collect::<Result<_, _>>()?;
    if models.is_empty() {
        return Err(Failure::Config("--models is empty".into()));
    }
    let outcomes = run_experiment(&exp, &models, &cfg.solve_options()?, cfg.workers()).map_err(pipeline_failure)?;
    let dir = cfg.out_dir();
    ensure_dir(&dir)?;
    let n = exp.n;
    let mut header = cols(&[
        "model", "replications", "mean_cost", "p20", "p80", "mean_wait", "mean_idle", "mean_overtime", "mean_travel",
        "mean_model_value", "reliability",
    ]);
    header.extend((1..=n).map(|j| format!("interarrival_{j}")));
    let mut rows = Vec::new();
    let mut plot = Vec::new();
    for (k, kind) in models.iter().enumerate() {
        let reports = column(&outcomes, k);
        let a = aggregate(&reports).map_err(|e| Failure::Config(e.to_string()))?;
        let pairs: Vec<(f64, f64)> = outcomes.iter().map(|o| (o[k].solution.value, o[k].report.mean_cost)).collect();
        let rel = reliability_from_means(&pairs, exp.oos_count).map_err(|e| Failure::Config(e.to_string()))?;
        let mean_value = pairs.iter().map(|p| p.0).sum::<f64>() / pairs.len() as f64;
        let mut row = vec![
            kind.label(),
            a.replications.to_string(),
            num(a.mean_cost),
            num(a.p20),
            num(a.p80),
            num(a.mean_wait),
            num(a.mean_idle),
            num(a.mean_overtime),
            num(a.mean_travel),
            num(mean_value),
            num(rel.fraction),
        ];
        row.extend(a.mean_interarrival.iter().map(|&v| num(v)));
        rows.push(row);
        for j in 0..n {
            let mut v: Vec<f64> = reports.iter().map(|r| r.interarrival[j]).collect();
            v.sort_by(f64::total_cmp);
            plot.push(vec![(j + 1).to_string(), kind.label(), num(a.mean_interarrival[j]), num(nearest_rank(&v, 20.0)), num(nearest_rank(&v, 80.0))]);
        }
    }
    write_csv(&dir.join("report.csv"), &header, &rows)?;
    write_csv(&dir.join("plot.csv"), &cols(&["x", "series", "y", "p20", "p80"]), &plot)?;
    write_timing(&dir, &outcomes)
}
