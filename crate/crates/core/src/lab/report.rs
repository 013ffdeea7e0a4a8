use serde::Serialize;

use super::config::{ExperimentConfig, ExperimentKind, Role};
use super::stats::Estimate;

/// One number in long format.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Stat {
    pub statistic: String,
    pub value: f64,
    pub se: f64,
    pub horizon: f64,
    pub mesh_level: Option<u32>,
    /// Experiment-specific coordinate: `m`, `epsilon` or `r`.
    pub param: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Per-trajectory values kept for fits across configurations.
#[derive(Debug, Clone, Default, PartialEq)]
pub enum Samples {
    #[default]
    None,
    /// `(T, sup |X|^p, (int |g|^2)^{p/2})` per horizon at the finest level.
    Maximal(Vec<(f64, Vec<f64>, Vec<f64>)>),
    /// `sum |R|`, `sup |X|^p`, `(int |g|^2)^{p/2}`.
    Remainder { abs_remainder: Vec<f64>, sup_psi: Vec<f64>, energy: Vec<f64> },
}

#[derive(Debug, Clone, Serialize)]
pub struct EstimateReport {
    pub config: String,
    pub experiment: ExperimentKind,
    pub group: Option<String>,
    pub role: Role,
    pub seed: u64,
    pub n: usize,
    pub d: usize,
    pub q: f64,
    pub p: f64,
    pub horizon: f64,
    pub stats: Vec<Stat>,
    pub checks: Vec<Check>,
    pub c_hat: Option<f64>,
    pub wall_time_s: f64,
    #[serde(skip)]
    pub samples: Samples,
    #[serde(skip)]
    pub batches: usize,
}

impl EstimateReport {
    pub fn new(cfg: &ExperimentConfig) -> Self {
        Self {
            config: cfg.name.clone(),
            experiment: cfg.experiment,
            group: cfg.group.clone(),
            role: cfg.role,
            seed: cfg.seed(),
            n: cfg.n,
            d: cfg.noise_dim(),
            q: cfg.q,
            p: cfg.p,
            horizon: cfg.horizon,
            stats: Vec::new(),
            checks: Vec::new(),
            c_hat: None,
            wall_time_s: 0.0,
            samples: Samples::None,
            batches: cfg.batches,
        }
    }

    pub fn stat(&mut self, statistic: &str, e: Estimate, level: Option<u32>, param: Option<f64>) {
        let horizon = self.horizon;
        self.stat_at(statistic, e, horizon, level, param);
    }

    pub fn stat_at(&mut self, statistic: &str, e: Estimate, horizon: f64, level: Option<u32>, param: Option<f64>) {
        self.stats.push(Stat { statistic: statistic.into(), value: e.mean, se: e.se, horizon, mesh_level: level, param });
    }

    pub fn value(&mut self, statistic: &str, v: f64, level: Option<u32>, param: Option<f64>) {
        self.stat(statistic, Estimate { mean: v, se: 0.0 }, level, param);
    }

    pub fn check(&mut self, name: &str, passed: bool, detail: String) {
        self.checks.push(Check { name: name.into(), passed, detail });
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// First matching statistic.
    pub fn find(&self, statistic: &str) -> Option<&Stat> {
        self.stats.iter().find(|s| s.statistic == statistic)
    }

    pub fn find_check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// A constant fitted over the training members of a config group and
/// validated on its held-out members.
#[derive(Debug, Clone, Serialize)]
pub struct FamilyReport {
    pub group: String,
    pub experiment: ExperimentKind,
    pub q: f64,
    pub p: f64,
    pub training: Vec<String>,
    pub heldout: Vec<String>,
    pub constants: Vec<(String, f64)>,
    pub stats: Vec<Stat>,
    pub checks: Vec<Check>,
}

impl FamilyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn constant(&self, name: &str) -> Option<f64> {
        self.constants.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }

    pub fn find_check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}
