mod common;

use common::*;
use hras_core::pipeline::{build_model, run_experiment, solve_built, ExperimentConfig, ModelKind, PipelineError};
use hras_core::formulation::FormulationError;
use hras_core::scenario::OosSet;
use hras_lp::{SolveOptions, SolveStatus};

#[test]
fn tiny_time_limit_stops_the_solver() {
    let (inst, samples) = instance_and_samples(10, 5, 1, 0.5);
    let built = build_model(ModelKind::Wdhras { epsilon: 0.5 }, &inst, &samples, true).unwrap();
    match solve_built(&built, &inst, &SolveOptions::default().with_time_limit(0.001)) {
        Ok(sol) => assert_eq!(sol.result.status, SolveStatus::TimeLimit),
        Err(PipelineError::Formulation(FormulationError::NoSolution(s))) => assert_eq!(s, SolveStatus::TimeLimit),
        Err(e) => panic!("unexpected error {e}"),
    }
}

#[test]
fn experiment_is_reproducible_and_ordered() {
    let cfg = ExperimentConfig {
        n: 3,
        samples: 4,
        rates: (2.0, 1.0, 20.0),
        lambda: 0.5,
        seed: 9,
        replications: 3,
        oos_count: 50,
        oos_set: OosSet::Set3(0.25),
        symmetry_breaking: false,
    };
    let models = [ModelKind::Saa, ModelKind::Mdhras, ModelKind::Wdhras { epsilon: 5.0 }];
    let opts = SolveOptions::exact();
    let a = run_experiment(&cfg, &models, &opts, 2).unwrap();
    let b = run_experiment(&cfg, &models, &opts, 1).unwrap();
    assert_eq!(a.len(), 3);
    for (ra, rb) in a.iter().zip(&b) {
        for (oa, ob) in ra.iter().zip(rb) {
            assert_eq!(oa.replication, ob.replication);
            assert!(rel_diff(oa.report.mean_cost, ob.report.mean_cost) < 1e-9);
            assert_eq!(oa.report.scenarios, 50);
        }
        // the robust models hedge the same sample, so their values are at least the SAA value
        assert!(ra[2].solution.value >= ra[0].solution.value - 1e-6);
    }
}
