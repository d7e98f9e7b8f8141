//! Seeded instance and scenario generation.
//!
//! Service times follow a lognormal whose (untruncated) mean is the customer's
//! latent mean μ_i and whose standard deviation is `cv · μ_i`, truncated to the
//! service support by rejection. Travel times are uniform. Every customer and
//! every scenario index draws from its own ChaCha stream, so changing the
//! number of scenarios never reshuffles earlier draws.

use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, LogNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{CostStructure, Instance, Scenario};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("csv: {0}")]
    Csv(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

const STREAM_MEANS: u64 = 1;
const STREAM_SCENARIOS: u64 = 2;

fn stream(seed: u64, purpose: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((purpose << 32) | index as u64);
    rng
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GenConfig {
    pub n: usize,
    pub seed: u64,
    pub horizon: f64,
    pub costs: CostStructure,
    /// Latent service means are drawn from `U[lo, hi]`.
    pub mean_range: (f64, f64),
    /// Standard deviation as a fraction of the mean.
    pub service_cv: f64,
    pub service_support: (f64, f64),
    pub travel_support: (f64, f64),
    pub rounding: bool,
}

impl GenConfig {
    pub fn standard(n: usize, seed: u64, costs: CostStructure) -> Self {
        GenConfig {
            n,
            seed,
            horizon: 480.0,
            costs,
            mean_range: (25.0, 35.0),
            service_cv: 0.5,
            service_support: (10.0, 50.0),
            travel_support: (15.0, 25.0),
            rounding: true,
        }
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let arg = |m: String| Err(ScenarioError::Argument(m));
        if self.n == 0 {
            return arg("N must be positive".into());
        }
        if self.costs.wait_cost.len() != self.n || self.costs.idle_cost.len() != self.n {
            return arg("cost vectors must have length N".into());
        }
        for (name, (lo, hi)) in [
            ("mean range", self.mean_range),
            ("service support", self.service_support),
            ("travel support", self.travel_support),
        ] {
            if !(lo.is_finite() && hi.is_finite() && 0.0 <= lo && lo <= hi) {
                return arg(format!("{name} must satisfy 0 <= lower <= upper, got [{lo}, {hi}]"));
            }
        }
        if !(self.service_cv > 0.0) {
            return arg("service cv must be positive".into());
        }
        if self.mean_range.0 <= 0.0 {
            return arg("latent means must be positive".into());
        }
        if !(self.horizon > 0.0) {
            return arg("horizon must be positive".into());
        }
        Ok(())
    }
}

/// Test distribution used for scenario draws.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "set", content = "delta")]
pub enum OosSet {
    /// The training distribution.
    Set1,
    /// Travel times shifted up by 10 minutes (`U[25,35]` for the standard support).
    Set2,
    /// Service and travel supports stretched to `[(1-δ)lo, (1+δ)hi]`.
    Set3(f64),
    /// Service times `Beta(0.5, 0.5)` rescaled to the service support.
    Set4,
    /// Service support alone stretched by δ.
    Set5(f64),
}

impl OosSet {
    pub fn parse(name: &str, delta: Option<f64>) -> Result<Self, ScenarioError> {
        let set = match (name.to_ascii_lowercase().as_str(), delta) {
            ("set1", None) => OosSet::Set1,
            ("set2", None) => OosSet::Set2,
            ("set4", None) => OosSet::Set4,
            ("set3", Some(d)) => OosSet::Set3(d),
            ("set5", Some(d)) => OosSet::Set5(d),
            ("set3" | "set5", None) => return Err(ScenarioError::Argument(format!("{name} requires a delta"))),
            ("set1" | "set2" | "set4", Some(_)) => {
                return Err(ScenarioError::Argument(format!("delta only applies to set3 and set5, not {name}")))
            }
            _ => return Err(ScenarioError::Argument(format!("unknown scenario set '{name}'"))),
        };
        set.validate()?;
        Ok(set)
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        match *self {
            OosSet::Set3(d) | OosSet::Set5(d) if !(0.0..1.0).contains(&d) => {
                Err(ScenarioError::Argument(format!("delta must lie in [0, 1), got {d}")))
            }
            _ => Ok(()),
        }
    }

    pub fn label(&self) -> String {
        match self {
            OosSet::Set1 => "set1".into(),
            OosSet::Set2 => "set2".into(),
            OosSet::Set3(d) => format!("set3_{d}"),
            OosSet::Set4 => "set4".into(),
            OosSet::Set5(d) => format!("set5_{d}"),
        }
    }

    fn service_support(&self, (lo, hi): (f64, f64)) -> (f64, f64) {
        match *self {
            OosSet::Set3(d) | OosSet::Set5(d) => ((1.0 - d) * lo, (1.0 + d) * hi),
            _ => (lo, hi),
        }
    }

    fn travel_support(&self, (lo, hi): (f64, f64)) -> (f64, f64) {
        match *self {
            OosSet::Set2 => (lo + 10.0, hi + 10.0),
            OosSet::Set3(d) => ((1.0 - d) * lo, (1.0 + d) * hi),
            _ => (lo, hi),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GeneratedInstance {
    pub instance: Instance,
    pub latent_means: Vec<f64>,
    pub config: GenConfig,
}

pub fn gen_instance(cfg: &GenConfig) -> Result<GeneratedInstance, ScenarioError> {
    cfg.validate()?;
    let n = cfg.n;
    let (mlo, mhi) = cfg.mean_range;
    let latent_means = (0..n)
        .map(|i| {
            let mut rng = stream(cfg.seed, STREAM_MEANS, i);
            if mhi > mlo {
                rng.gen_range(mlo..=mhi)
            } else {
                mlo
            }
        })
        .collect();
    let (tlo, thi) = cfg.travel_support;
    let mut travel_lower = vec![vec![tlo; n + 1]; n + 1];
    let mut travel_upper = vec![vec![thi; n + 1]; n + 1];
    for k in 0..=n {
        travel_lower[k][k] = 0.0;
        travel_upper[k][k] = 0.0;
    }
    let instance = Instance {
        n,
        horizon: cfg.horizon,
        costs: cfg.costs.clone(),
        service_lower: vec![cfg.service_support.0; n],
        service_upper: vec![cfg.service_support.1; n],
        travel_lower,
        travel_upper,
        service_mean: None,
        travel_mean: None,
    };
    Ok(GeneratedInstance { instance, latent_means, config: cfg.clone() })
}

/// Underlying normal parameters of a lognormal with the given mean and sd.
pub fn lognormal_params(mean: f64, sd: f64) -> (f64, f64) {
    let s2 = (1.0 + (sd / mean).powi(2)).ln();
    (mean.ln() - s2 / 2.0, s2.sqrt())
}

fn truncated<D: Distribution<f64>>(dist: &D, rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    for _ in 0..100_000 {
        let v = dist.sample(rng);
        if (lo..=hi).contains(&v) {
            return v;
        }
    }
    // support far in a tail; fall back to the nearest end
    dist.sample(rng).clamp(lo, hi)
}

fn finish(v: f64, (lo, hi): (f64, f64), rounding: bool) -> f64 {
    if rounding && hi - lo >= 1.0 {
        v.round().clamp(lo.ceil(), hi.floor())
    } else {
        v.clamp(lo, hi)
    }
}

/// The support box a scenario set is drawn from.
pub fn set_support(gi: &GeneratedInstance, set: OosSet) -> Instance {
    let cfg = &gi.config;
    let (slo, shi) = set.service_support(cfg.service_support);
    let (tlo, thi) = set.travel_support(cfg.travel_support);
    let n = cfg.n;
    let mut inst = gi.instance.clone();
    inst.service_lower = vec![slo; n];
    inst.service_upper = vec![shi; n];
    for i in 0..=n {
        for k in 0..=n {
            let (l, u) = if i == k { (0.0, 0.0) } else { (tlo, thi) };
            inst.travel_lower[i][k] = l;
            inst.travel_upper[i][k] = u;
        }
    }
    inst
}

/// `count` scenarios from the chosen distribution. `seed` selects the sample;
/// use different seeds for training and out-of-sample draws.
pub fn gen_scenarios(gi: &GeneratedInstance, count: usize, set: OosSet, seed: u64) -> Result<Vec<Scenario>, ScenarioError> {
    set.validate()?;
    let cfg = &gi.config;
    let n = cfg.n;
    let service_box = set.service_support(cfg.service_support);
    let travel_box = set.travel_support(cfg.travel_support);
    let lognormals: Vec<LogNormal<f64>> = gi
        .latent_means
        .iter()
        .map(|&mu| {
            let (m, s) = lognormal_params(mu, cfg.service_cv * mu);
            LogNormal::new(m, s).map_err(|e| ScenarioError::Argument(e.to_string()))
        })
        .collect::<Result<_, _>>()?;
    let beta = Beta::new(0.5, 0.5).expect("valid shape");
    let scenarios = (0..count)
        .map(|r| {
            let mut rng = stream(seed, STREAM_SCENARIOS, r);
            let service = (0..n)
                .map(|i| {
                    let (lo, hi) = service_box;
                    let v = match set {
                        OosSet::Set4 => lo + (hi - lo) * beta.sample(&mut rng),
                        _ => truncated(&lognormals[i], &mut rng, lo, hi),
                    };
                    finish(v, service_box, cfg.rounding)
                })
                .collect();
            let mut travel = vec![vec![0.0; n + 1]; n + 1];
            for (i, row) in travel.iter_mut().enumerate() {
                for (k, t) in row.iter_mut().enumerate() {
                    if i != k {
                        let (lo, hi) = travel_box;
                        let v = if hi > lo { rng.gen_range(lo..=hi) } else { lo };
                        *t = finish(v, travel_box, cfg.rounding);
                    }
                }
            }
            Scenario { service, travel }
        })
        .collect();
    Ok(scenarios)
}

pub fn write_scenarios_json<W: Write>(out: W, scenarios: &[Scenario]) -> Result<(), ScenarioError> {
    serde_json::to_writer_pretty(out, scenarios)?;
    Ok(())
}

pub fn read_scenarios_json<R: Read>(input: R) -> Result<Vec<Scenario>, ScenarioError> {
    Ok(serde_json::from_reader(input)?)
}

/// One row per scenario: `d_1..d_N` then the full travel matrix row-major as
/// `t_i_k` with 0 the depot.
pub fn write_scenarios_csv<W: Write>(out: W, n: usize, scenarios: &[Scenario]) -> Result<(), ScenarioError> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = (1..=n).map(|i| format!("d_{i}")).collect();
    for i in 0..=n {
        for k in 0..=n {
            header.push(format!("t_{i}_{k}"));
        }
    }
    w.write_record(&header).map_err(|e| ScenarioError::Csv(e.to_string()))?;
    for sc in scenarios {
        if sc.service.len() != n || sc.travel.len() != n + 1 {
            return Err(ScenarioError::Argument("scenario dimension does not match N".into()));
        }
        let row: Vec<String> = sc.service.iter().chain(sc.travel.iter().flatten()).map(|v| v.to_string()).collect();
        w.write_record(&row).map_err(|e| ScenarioError::Csv(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_scenarios_csv<R: Read>(input: R) -> Result<Vec<Scenario>, ScenarioError> {
    let mut rd = csv::Reader::from_reader(input);
    let header = rd.headers().map_err(|e| ScenarioError::Csv(e.to_string()))?.clone();
    let n = header.iter().filter(|h| h.starts_with("d_")).count();
    if header.len() != n + (n + 1) * (n + 1) {
        return Err(ScenarioError::Csv(format!("expected {} columns for N={n}, got {}", n + (n + 1) * (n + 1), header.len())));
    }
    let mut out = Vec::new();
    for rec in rd.records() {
        let rec = rec.map_err(|e| ScenarioError::Csv(e.to_string()))?;
        let vals: Vec<f64> = rec
            .iter()
            .map(|s| s.trim().parse::<f64>().map_err(|e| ScenarioError::Csv(format!("'{s}': {e}"))))
            .collect::<Result<_, _>>()?;
        let service = vals[..n].to_vec();
        let travel = vals[n..].chunks(n + 1).map(|c| c.to_vec()).collect();
        out.push(Scenario { service, travel });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{scenario_violations, validate_instance};

    fn gi(seed: u64) -> GeneratedInstance {
        gen_instance(&GenConfig::standard(6, seed, CostStructure::uniform(6, 2.0, 1.0, 20.0, 0.5))).unwrap()
    }

    #[test]
    fn instance_is_reproducible_and_valid() {
        let a = gi(7);
        assert_eq!(a, gi(7));
        assert_ne!(a.latent_means, gi(8).latent_means);
        assert!(validate_instance(&a.instance).is_empty());
        assert!(a.latent_means.iter().all(|m| (25.0..=35.0).contains(m)));
        assert!(a.instance.service_lower.iter().all(|&v| v == 10.0));
        assert!(a.instance.service_upper.iter().all(|&v| v == 50.0));
        assert_eq!(a.instance.travel_lower[0][1], 15.0);
        assert_eq!(a.instance.travel_upper[3][2], 25.0);
        assert_eq!(a.instance.horizon, 480.0);
    }

    #[test]
    fn prefix_stable_in_count() {
        let g = gi(3);
        let short = gen_scenarios(&g, 5, OosSet::Set1, 11).unwrap();
        let long = gen_scenarios(&g, 20, OosSet::Set1, 11).unwrap();
        assert_eq!(short[..], long[..5]);
    }

    #[test]
    fn sets_respect_their_supports() {
        let g = gi(1);
        for set in [OosSet::Set1, OosSet::Set2, OosSet::Set3(0.25), OosSet::Set4, OosSet::Set5(0.5)] {
            let sup = set_support(&g, set);
            for sc in gen_scenarios(&g, 200, set, 5).unwrap() {
                assert!(scenario_violations(&sup, &sc, 1e-9).is_empty(), "{set:?}");
                assert!(sc.service.iter().all(|v| v.fract() == 0.0));
            }
        }
        let set2 = gen_scenarios(&g, 50, OosSet::Set2, 5).unwrap();
        assert!(set2.iter().all(|s| s.travel[0][1] >= 25.0 && s.travel[0][1] <= 35.0));
    }

    #[test]
    fn delta_rules() {
        assert!(OosSet::parse("set3", None).is_err());
        assert!(OosSet::parse("set1", Some(0.1)).is_err());
        assert_eq!(OosSet::parse("Set5", Some(0.1)).unwrap(), OosSet::Set5(0.1));
        assert!(OosSet::parse("set6", None).is_err());
    }

    #[test]
    fn lognormal_moments() {
        let (m, s) = lognormal_params(30.0, 15.0);
        assert!(((m + s * s / 2.0).exp() - 30.0).abs() < 1e-12);
        let var = ((s * s).exp() - 1.0) * (2.0 * m + s * s).exp();
        assert!((var.sqrt() - 15.0).abs() < 1e-9);
    }

    #[test]
    fn csv_round_trip() {
        let g = gi(2);
        let sc = gen_scenarios(&g, 4, OosSet::Set3(0.1), 9).unwrap();
        let mut buf = Vec::new();
        write_scenarios_csv(&mut buf, 6, &sc).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("d_1,d_2,d_3,d_4,d_5,d_6,t_0_0,t_0_1"));
        assert_eq!(read_scenarios_csv(&buf[..]).unwrap(), sc);
    }
}
