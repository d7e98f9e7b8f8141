#![allow(dead_code)]

use hras_core::domain::{FirstStageDecision, Instance, Scenario};
use hras_core::pipeline::CostPreset;
use hras_core::recourse::{dual_extreme_points, dual_feasible, dual_value, recourse_lp};
use hras_core::scenario::{gen_instance, gen_scenarios, GenConfig, GeneratedInstance, OosSet};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use hras_lp::{solve, SolveOptions, SolveStatus};

pub fn generated(n: usize, seed: u64, lambda: f64) -> GeneratedInstance {
    gen_instance(&GenConfig::standard(n, seed, CostPreset::Standard.costs(n, lambda))).unwrap()
}

pub fn instance_and_samples(n: usize, r: usize, seed: u64, lambda: f64) -> (Instance, Vec<Scenario>) {
    let g = generated(n, seed, lambda);
    let s = gen_scenarios(&g, r, OosSet::Set1, seed.wrapping_add(1000)).unwrap();
    (g.instance, s)
}

/// Random route with nondecreasing appointments spread over the first half of the day.
pub fn random_decision(n: usize, horizon: f64, rng: &mut ChaCha8Rng) -> FirstStageDecision {
    let mut route: Vec<usize> = (1..=n).collect();
    route.shuffle(rng);
    let mut a: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..horizon / 2.0)).collect();
    a.sort_by(f64::total_cmp);
    FirstStageDecision::from_route(&route, a)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

/// Largest dual objective over the dual-feasible interval partitions.
pub fn dual_max(dec: &FirstStageDecision, sc: &Scenario, inst: &Instance) -> f64 {
    dual_extreme_points(&inst.costs)
        .filter(|p| dual_feasible(&p.y, &inst.costs, 1e-9).is_ok())
        .map(|p| dual_value(&p.y, dec, sc, inst).unwrap())
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Optimum of the second-stage LP solved by the MILP backend.
pub fn recourse_lp_value(dec: &FirstStageDecision, sc: &Scenario, inst: &Instance) -> f64 {
    let m = recourse_lp(dec, sc, inst).unwrap();
    let res = solve(&m, &SolveOptions::exact()).unwrap();
    assert_eq!(res.status, SolveStatus::Optimal);
    res.objective.unwrap()
}
