mod common;

use common::*;
use hras_core::evaluation::out_of_sample;
use hras_core::scenario::{gen_scenarios, OosSet};

#[test]
fn simulated_mean_matches_per_scenario_lp() {
    let g = generated(4, 6, 0.5);
    let sc = gen_scenarios(&g, 100, OosSet::Set3(0.5), 3).unwrap();
    let mut r = rng(6);
    let dec = random_decision(4, g.instance.horizon, &mut r);
    let rep = out_of_sample(&dec, &sc, &g.instance).unwrap();
    let lp = sc.iter().map(|s| recourse_lp_value(&dec, s, &g.instance)).sum::<f64>() / sc.len() as f64;
    assert!((rep.mean_cost - lp).abs() < 1e-6, "{} vs {lp}", rep.mean_cost);
    assert!((rep.recomposed_cost(&g.instance) - rep.mean_cost).abs() < 1e-6);
    assert!(rep.p20 <= rep.p80);
}
