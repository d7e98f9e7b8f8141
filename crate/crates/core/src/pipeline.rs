//! Generate → build → solve → evaluate, as used by the experiments.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use hras_lp::{solve, SolveOptions, SolveResult};

use crate::domain::{validate_decision, CostStructure, FirstStageDecision, Instance, Scenario, DECISION_TOL};
use crate::evaluation::{aggregate, out_of_sample, AggregateReport, EvalError, EvaluationReport};
use crate::formulation::{decision_from_solution, FormulationError};
use crate::moment::{build_mdhras, MomentAmbiguity, MomentOptions};
use crate::saa::{build_saa, BuiltModel, SaaModelSpec};
use crate::scenario::{gen_instance, gen_scenarios, GenConfig, GeneratedInstance, OosSet, ScenarioError};
use crate::wasserstein::{build_wdhras, WassersteinAmbiguity, WassersteinOptions};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Formulation(#[from] FormulationError),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("invalid argument: {0}")]
    Argument(String),
}

impl From<hras_lp::SolveError> for PipelineError {
    fn from(e: hras_lp::SolveError) -> Self {
        PipelineError::Formulation(e.into())
    }
}

/// The two cost structures of the experiments: `(wait, idle, overtime)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CostPreset {
    /// (2, 1, 20)
    Standard,
    /// (1, 5, 7.5)
    IdleHeavy,
}

impl CostPreset {
    pub fn rates(self) -> (f64, f64, f64) {
        match self {
            CostPreset::Standard => (2.0, 1.0, 20.0),
            CostPreset::IdleHeavy => (1.0, 5.0, 7.5),
        }
    }

    pub fn costs(self, n: usize, lambda: f64) -> CostStructure {
        let (w, u, o) = self.rates();
        CostStructure::uniform(n, w, u, o, lambda)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "model")]
pub enum ModelKind {
    Saa,
    Mdhras,
    Wdhras { epsilon: f64 },
}

impl ModelKind {
    pub fn label(&self) -> String {
        match self {
            ModelKind::Saa => "saa".into(),
            ModelKind::Mdhras => "mdhras".into(),
            ModelKind::Wdhras { epsilon } => format!("wdhras({epsilon})"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ModelSolution {
    pub decision: FirstStageDecision,
    /// Objective value reported by the solver.
    pub value: f64,
    pub result: SolveResult,
}

/// Relative distance by which a sample mean on the support boundary is moved
/// inward before it is used as the mean of the moment model.
pub const BOUNDARY_NUDGE: f64 = 1e-4;

/// Empirical mean of the training samples, moved strictly inside the support
/// box where it sits on a face.
pub fn interior_sample_mean(inst: &Instance, training: &[Scenario]) -> MomentAmbiguity {
    let mut amb = MomentAmbiguity::sample_mean(inst.n, training);
    let nudge = |mu: &mut f64, lo: f64, hi: f64| {
        if hi > lo {
            let eps = BOUNDARY_NUDGE * (hi - lo);
            *mu = mu.clamp(lo + eps, hi - eps);
        } else {
            *mu = lo;
        }
    };
    for i in 0..inst.n {
        nudge(&mut amb.service_mean[i], inst.service_lower[i], inst.service_upper[i]);
    }
    for i in 0..=inst.n {
        for k in 0..=inst.n {
            nudge(&mut amb.travel_mean[i][k], inst.travel_lower[i][k], inst.travel_upper[i][k]);
        }
    }
    amb
}

/// Build the model of the given kind on a training sample.
pub fn build_model(kind: ModelKind, inst: &Instance, training: &[Scenario], symmetry: bool) -> Result<BuiltModel, PipelineError> {
    Ok(match kind {
        ModelKind::Saa => build_saa(&SaaModelSpec { instance: inst, scenarios: training, symmetry_breaking: symmetry })?,
        ModelKind::Mdhras => {
            let amb = interior_sample_mean(inst, training);
            build_mdhras(inst, &amb, &MomentOptions { bound_scale: 1.0, symmetry_breaking: symmetry })?
        }
        ModelKind::Wdhras { epsilon } => {
            let amb = WassersteinAmbiguity { samples: training.to_vec(), epsilon };
            build_wdhras(inst, &amb, &WassersteinOptions { symmetry_breaking: symmetry })?.built
        }
    })
}

/// Solve a built model and read the decision back. A time-limited run with an
/// incumbent still yields a decision; its status is kept in the result.
pub fn solve_built(built: &BuiltModel, inst: &Instance, opts: &SolveOptions) -> Result<ModelSolution, PipelineError> {
    let result = solve(&built.model, opts)?;
    let value = match (result.has_solution(), result.objective) {
        (true, Some(v)) => v,
        _ => return Err(FormulationError::NoSolution(result.status).into()),
    };
    let decision = decision_from_solution(&built.first_stage, &result, inst.horizon);
    validate_decision(inst, &decision).map_err(FormulationError::from)?;
    let viol = built.model.max_violation(&result.values);
    if viol > DECISION_TOL.max(1e-6 * value.abs()) {
        log::warn!("solution violates constraints by {viol:e}");
    }
    Ok(ModelSolution { decision, value, result })
}

/// Build and solve one model on a training sample.
pub fn solve_model(
    kind: ModelKind,
    inst: &Instance,
    training: &[Scenario],
    symmetry: bool,
    opts: &SolveOptions,
) -> Result<ModelSolution, PipelineError> {
    solve_built(&build_model(kind, inst, training, symmetry)?, inst, opts)
}

/// Seeds of one replication: instance, training sample, out-of-sample set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReplicationSeeds {
    pub instance: u64,
    pub training: u64,
    pub oos: u64,
}

pub fn replication_seeds(base: u64, replication: usize) -> ReplicationSeeds {
    let mut rng = ChaCha8Rng::seed_from_u64(base);
    rng.set_stream(replication as u64);
    ReplicationSeeds { instance: rng.next_u64(), training: rng.next_u64(), oos: rng.next_u64() }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ExperimentConfig {
    pub n: usize,
    /// Training sample size R.
    pub samples: usize,
    /// `(wait, idle, overtime)` rates, uniform over positions.
    pub rates: (f64, f64, f64),
    pub lambda: f64,
    pub seed: u64,
    pub replications: usize,
    pub oos_count: usize,
    pub oos_set: OosSet,
    pub symmetry_breaking: bool,
}

impl ExperimentConfig {
    pub fn gen_config(&self, instance_seed: u64) -> GenConfig {
        let (w, u, o) = self.rates;
        GenConfig::standard(self.n, instance_seed, CostStructure::uniform(self.n, w, u, o, self.lambda))
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.n == 0 || self.samples == 0 || self.replications == 0 || self.oos_count == 0 {
            return Err(PipelineError::Argument("N, R, replications and out-of-sample count must be positive".into()));
        }
        if !(self.lambda >= 0.0) {
            return Err(PipelineError::Argument("travel cost must be nonnegative".into()));
        }
        self.oos_set.validate()?;
        Ok(())
    }
}

/// Data of one replication.
#[derive(Debug, Clone)]
pub struct Replication {
    pub index: usize,
    pub generated: GeneratedInstance,
    pub training: Vec<Scenario>,
    pub oos: Vec<Scenario>,
    /// Support box of the out-of-sample distribution.
    pub oos_support: Instance,
}

pub fn replication(cfg: &ExperimentConfig, index: usize) -> Result<Replication, PipelineError> {
    cfg.validate()?;
    let seeds = replication_seeds(cfg.seed, index);
    let generated = gen_instance(&cfg.gen_config(seeds.instance))?;
    let training = gen_scenarios(&generated, cfg.samples, OosSet::Set1, seeds.training)?;
    let oos = gen_scenarios(&generated, cfg.oos_count, cfg.oos_set, seeds.oos)?;
    let oos_support = crate::scenario::set_support(&generated, cfg.oos_set);
    Ok(Replication { index, generated, training, oos, oos_support })
}

/// Result of solving one model in one replication.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub replication: usize,
    pub model: ModelKind,
    pub solution: ModelSolution,
    pub report: EvaluationReport,
}

pub fn run_model(rep: &Replication, kind: ModelKind, symmetry: bool, opts: &SolveOptions) -> Result<Outcome, PipelineError> {
    let inst = &rep.generated.instance;
    let solution = solve_model(kind, inst, &rep.training, symmetry, opts)?;
    // the out-of-sample box may be wider than the training box; recourse only
    // needs the costs, horizon and N, which are shared
    let report = out_of_sample(&solution.decision, &rep.oos, &rep.oos_support)?;
    Ok(Outcome { replication: rep.index, model: kind, solution, report })
}

/// Solve every model in every replication. Replications are independent and
/// run on up to `workers` threads; results come back in replication order.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    models: &[ModelKind],
    opts: &SolveOptions,
    workers: usize,
) -> Result<Vec<Vec<Outcome>>, PipelineError> {
    use rayon::prelude::*;
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| PipelineError::Argument(e.to_string()))?;
    pool.install(|| {
        (0..cfg.replications)
            .into_par_iter()
            .map(|r| {
                let rep = replication(cfg, r)?;
                models.iter().map(|&k| run_model(&rep, k, cfg.symmetry_breaking, opts)).collect()
            })
            .collect()
    })
}

/// Aggregate outcomes of one model across replications.
pub fn summarize(outcomes: &[Vec<Outcome>], model_index: usize) -> Result<AggregateReport, PipelineError> {
    let reports: Vec<EvaluationReport> = outcomes.iter().map(|o| o[model_index].report.clone()).collect();
    Ok(aggregate(&reports)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SweepRow {
    pub epsilon: f64,
    pub summary: AggregateReport,
}

/// Out-of-sample summary of the Wasserstein model for each radius in `grid`
/// (sorted ascending in the output).
pub fn epsilon_sweep(cfg: &ExperimentConfig, grid: &[f64], opts: &SolveOptions, workers: usize) -> Result<Vec<SweepRow>, PipelineError> {
    if grid.is_empty() {
        return Err(PipelineError::Argument("radius grid is empty".into()));
    }
    let mut grid = grid.to_vec();
    grid.sort_by(f64::total_cmp);
    let models: Vec<ModelKind> = grid.iter().map(|&epsilon| ModelKind::Wdhras { epsilon }).collect();
    let outcomes = run_experiment(cfg, &models, opts, workers)?;
    grid.iter()
        .enumerate()
        .map(|(k, &epsilon)| Ok(SweepRow { epsilon, summary: summarize(&outcomes, k)? }))
        .collect()
}
