//! Run configuration: a TOML or JSON file merged with command-line flags
//! (flags win). Every field is optional in both places; each command checks
//! what it needs.

use std::path::{Path, PathBuf};

use clap::Args;
use hras_core::domain::CostStructure;
use hras_core::pipeline::{CostPreset, ExperimentConfig, ModelKind};
use hras_core::scenario::OosSet;
use hras_lp::{Backend, SolveOptions};
use serde::{Deserialize, Serialize};

use crate::Failure;

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case", deny_unknown_fields)]
pub struct RunConfig {
    /// TOML or JSON file with any of these options
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// saa, mdhras or wdhras
    #[arg(long)]
    pub model: Option<String>,
    /// Number of customers
    #[arg(long)]
    pub n: Option<usize>,
    /// Training sample size
    #[arg(long)]
    pub r: Option<usize>,
    /// Wasserstein radius
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// standard (2,1,20), idle-heavy (1,5,7.5) or explicit "wait,idle,overtime"
    #[arg(long)]
    pub costs: Option<String>,
    /// Travel cost per minute
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Relative MIP gap
    #[arg(long)]
    pub gap: Option<f64>,
    #[arg(long)]
    pub time_limit: Option<f64>,
    /// Add the symmetry-breaking cuts (true/false)
    #[arg(long)]
    pub symmetry_breaking: Option<bool>,
    /// Out-of-sample distribution: set1..set5
    #[arg(long)]
    pub oos: Option<String>,
    /// Support stretch for set3 / set5
    #[arg(long)]
    pub delta: Option<f64>,
    /// Out-of-sample scenario count
    #[arg(long)]
    pub oos_count: Option<usize>,
    #[arg(long)]
    pub replications: Option<usize>,
    /// Worker threads for replications
    #[arg(long)]
    pub workers: Option<usize>,
    /// Radii for sweep (comma separated); defaults to the 28-point grid
    #[arg(long, value_delimiter = ',')]
    pub grid: Option<Vec<f64>>,
    /// Models compared by `report` (comma separated, e.g. saa,mdhras,wdhras:0.5)
    #[arg(long, value_delimiter = ',')]
    pub models: Option<Vec<String>>,
    /// Solver backend: "highs" or the path of an external solver command
    #[arg(long)]
    pub solver: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

macro_rules! merge_fields {
    ($a:ident, $b:ident; $($f:ident),*) => {
        RunConfig { config: $a.config.clone(), $($f: $a.$f.clone().or_else(|| $b.$f.clone())),* }
    };
}

impl RunConfig {
    /// Flags override the file named by `--config`, if any.
    pub fn resolve(flags: &RunConfig) -> Result<RunConfig, Failure> {
        let Some(path) = &flags.config else { return Ok(flags.clone()) };
        let file = load_file(path)?;
        Ok(merge_fields!(flags, file; model, n, r, epsilon, costs, lambda, seed, gap, time_limit,
            symmetry_breaking, oos, delta, oos_count, replications, workers, grid, models, solver, out))
    }

    pub fn require<T: Clone>(value: &Option<T>, name: &str) -> Result<T, Failure> {
        value.clone().ok_or_else(|| Failure::Config(format!("missing required option --{name}")))
    }

    pub fn n(&self) -> Result<usize, Failure> {
        let n = Self::require(&self.n, "n")?;
        if n == 0 {
            return Err(Failure::Config("--n must be positive".into()));
        }
        Ok(n)
    }

    pub fn lambda(&self) -> Result<f64, Failure> {
        let l = self.lambda.unwrap_or(0.5);
        if !(l >= 0.0 && l.is_finite()) {
            return Err(Failure::Config(format!("--lambda must be nonnegative, got {l}")));
        }
        Ok(l)
    }

    pub fn cost_rates(&self) -> Result<(Option<CostPreset>, (f64, f64, f64)), Failure> {
        let spec = self.costs.as_deref().unwrap_or("standard");
        match spec {
            "standard" => Ok((Some(CostPreset::Standard), CostPreset::Standard.rates())),
            "idle-heavy" => Ok((Some(CostPreset::IdleHeavy), CostPreset::IdleHeavy.rates())),
            other => {
                let parts: Vec<f64> = other
                    .split(',')
                    .map(|p| p.trim().parse::<f64>())
                    .collect::<Result<_, _>>()
                    .map_err(|_| Failure::Config(format!("--costs: expected a preset or three numbers, got '{other}'")))?;
                match parts[..] {
                    [w, u, o] if w >= 0.0 && u >= 0.0 && o >= 0.0 => {
                        let preset = [CostPreset::Standard, CostPreset::IdleHeavy].into_iter().find(|p| p.rates() == (w, u, o));
                        Ok((preset, (w, u, o)))
                    }
                    _ => Err(Failure::Config(format!("--costs: expected three nonnegative numbers, got '{other}'"))),
                }
            }
        }
    }

    pub fn cost_structure(&self, n: usize) -> Result<CostStructure, Failure> {
        let (_, (w, u, o)) = self.cost_rates()?;
        Ok(CostStructure::uniform(n, w, u, o, self.lambda()?))
    }

    pub fn oos_set(&self) -> Result<OosSet, Failure> {
        OosSet::parse(self.oos.as_deref().unwrap_or("set1"), self.delta).map_err(|e| Failure::Config(e.to_string()))
    }

    pub fn model_kind(&self) -> Result<ModelKind, Failure> {
        let name = Self::require(&self.model, "model")?;
        parse_model(&name, self.epsilon)
    }

    pub fn solve_options(&self) -> Result<SolveOptions, Failure> {
        let mut opts = SolveOptions::default();
        if let Some(g) = self.gap {
            if !(g >= 0.0) {
                return Err(Failure::Config(format!("--gap must be nonnegative, got {g}")));
            }
            opts = opts.with_gap(g);
        }
        if let Some(t) = self.time_limit {
            if !(t > 0.0) {
                return Err(Failure::Config(format!("--time-limit must be positive, got {t}")));
            }
            opts = opts.with_time_limit(t);
        }
        if let Some(s) = &self.solver {
            opts = opts.with_backend(Backend::from_spec(s));
        }
        Ok(opts)
    }

    pub fn symmetry(&self) -> bool {
        self.symmetry_breaking.unwrap_or(true)
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("."))
    }

    pub fn workers(&self) -> usize {
        self.workers.unwrap_or(1).max(1)
    }

    /// Experiment settings for the replicated commands.
    pub fn experiment(&self, default_reps: usize) -> Result<ExperimentConfig, Failure> {
        let n = self.n()?;
        let (_, rates) = self.cost_rates()?;
        let cfg = ExperimentConfig {
            n,
            samples: Self::require(&self.r, "r")?,
            rates,
            lambda: self.lambda()?,
            seed: self.seed.unwrap_or(1),
            replications: self.replications.unwrap_or(default_reps),
            oos_count: self.oos_count.unwrap_or(2000),
            oos_set: self.oos_set()?,
            symmetry_breaking: self.symmetry(),
        };
        cfg.validate().map_err(|e| Failure::Config(e.to_string()))?;
        Ok(cfg)
    }
}

/// `saa`, `mdhras`, `wdhras` (radius from `epsilon`) or `wdhras:<radius>`.
pub fn parse_model(name: &str, epsilon: Option<f64>) -> Result<ModelKind, Failure> {
    let (base, inline) = match name.split_once(':') {
        Some((b, e)) => (b, Some(e.parse::<f64>().map_err(|_| Failure::Config(format!("bad radius in '{name}'")))?)),
        None => (name, None),
    };
    let base = base.to_ascii_lowercase();
    if base != "wdhras" && inline.is_some() {
        return Err(Failure::Config(format!("a radius only applies to wdhras, got '{name}'")));
    }
    match (base.as_str(), inline.or(epsilon)) {
        ("saa", _) => Ok(ModelKind::Saa),
        ("mdhras", _) => Ok(ModelKind::Mdhras),
        ("wdhras", Some(e)) if e >= 0.0 && e.is_finite() => Ok(ModelKind::Wdhras { epsilon: e }),
        ("wdhras", Some(e)) => Err(Failure::Config(format!("radius must be nonnegative, got {e}"))),
        ("wdhras", None) => Err(Failure::Config("wdhras requires --epsilon".into())),
        _ => Err(Failure::Config(format!("unknown model '{name}'"))),
    }
}

fn load_file(path: &Path) -> Result<RunConfig, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
    if is_json {
        serde_json::from_str(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
    } else {
        toml::from_str(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
    }
}
