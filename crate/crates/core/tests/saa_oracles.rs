mod common;

use common::*;
use hras_core::evaluation::scenario_costs;
use hras_core::saa::{brute_force_saa, build_saa, saa_fixed_value, SaaModelSpec};
use hras_lp::{solve, SolveOptions};

#[test]
fn milp_matches_route_enumeration() {
    for seed in 0..6 {
        for (n, r) in [(3, 3), (4, 2)] {
            let (inst, samples) = instance_and_samples(n, r, seed, 0.5);
            let spec = SaaModelSpec { instance: &inst, scenarios: &samples, symmetry_breaking: false };
            let res = solve(&build_saa(&spec).unwrap().model, &SolveOptions::exact()).unwrap();
            let brute = brute_force_saa(&spec, &SolveOptions::exact()).unwrap();
            assert!(rel_diff(res.objective.unwrap(), brute) < 1e-5, "seed {seed} n {n}: {:?} vs {brute}", res.objective);
        }
    }
}

#[test]
fn fixed_decision_value_is_sample_average() {
    let (inst, samples) = instance_and_samples(4, 6, 3, 0.5);
    let spec = SaaModelSpec { instance: &inst, scenarios: &samples, symmetry_breaking: false };
    let mut r = rng(11);
    for _ in 0..5 {
        let dec = random_decision(4, inst.horizon, &mut r);
        let fixed = saa_fixed_value(&spec, &dec, &SolveOptions::exact()).unwrap();
        let avg = scenario_costs(&dec, &samples, &inst).unwrap().iter().sum::<f64>() / samples.len() as f64;
        assert!(rel_diff(fixed, avg) < 1e-7, "{fixed} vs {avg}");
    }
}
