use serde::Serialize;

use super::config::{ExperimentConfig, ExperimentKind};
use super::experiments::{run_experiment, SimCache};
use super::family::fit_families;
use super::report::{EstimateReport, FamilyReport};

#[derive(Debug, Clone, Serialize)]
pub struct Failure {
    pub config: String,
    pub experiment: ExperimentKind,
    pub error: String,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct SuiteOutcome {
    pub reports: Vec<EstimateReport>,
    pub families: Vec<FamilyReport>,
    pub failures: Vec<Failure>,
}

impl SuiteOutcome {
    pub fn all_passed(&self) -> bool {
        self.failures.is_empty()
            && self.reports.iter().all(EstimateReport::passed)
            && self.families.iter().all(FamilyReport::passed)
    }

    pub fn report(&self, config: &str) -> Option<&EstimateReport> {
        self.reports.iter().find(|r| r.config == config)
    }

    pub fn family(&self, group: &str, p: f64) -> Option<&FamilyReport> {
        self.families.iter().find(|f| f.group == group && f.p == p)
    }
}

/// Runs every selected config in order (each one parallel over
/// trajectories), then the group fits. `select = None` runs everything.
/// A failing config is recorded and the others still run.
pub fn run_configs(configs: &[ExperimentConfig], select: Option<&[ExperimentKind]>) -> SuiteOutcome {
    let cache = SimCache::new();
    let mut out = SuiteOutcome::default();
    for cfg in configs {
        if select.is_some_and(|s| !s.contains(&cfg.experiment)) {
            continue;
        }
        match run_experiment(cfg, &cache) {
            Ok(rep) => out.reports.push(rep),
            Err(e) => out.failures.push(Failure { config: cfg.name.clone(), experiment: cfg.experiment, error: e.to_string() }),
        }
    }
    out.families = fit_families(&out.reports);
    out
}
