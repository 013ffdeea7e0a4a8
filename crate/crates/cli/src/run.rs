use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use smooth_convolve_core::lab::{run_configs, ExperimentConfig, ExperimentKind, SuiteOutcome};
use smooth_convolve_core::rng::derive_seed;

use crate::config::parse_documents;
use crate::error::{io, CliError, Result};

pub const RESULTS: &str = "results.csv";
pub const SUMMARY: &str = "summary.json";
pub const MANIFEST: &str = "manifest.json";

/// What to run and where to put it.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub configs: Vec<PathBuf>,
    pub seed: u64,
    /// `0` lets rayon pick.
    pub workers: usize,
    pub out: PathBuf,
    /// `None` runs every experiment; an empty list runs none.
    pub select: Option<Vec<ExperimentKind>>,
    #[serde(skip)]
    pub force: bool,
}

impl RunManifest {
    pub fn new(configs: Vec<PathBuf>, out: PathBuf) -> Self {
        Self { configs, seed: 0, workers: 0, out, select: None, force: false }
    }
}

/// Parses a comma separated selector; the empty string selects nothing.
pub fn parse_selector(s: &str) -> Result<Vec<ExperimentKind>> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| ExperimentKind::parse(t).ok_or_else(|| CliError::UnknownExperiment(t.into())))
        .collect()
}

#[derive(Debug)]
pub struct RunStatus {
    pub dir: PathBuf,
    pub outcome: SuiteOutcome,
}

impl RunStatus {
    pub fn passed(&self) -> bool {
        self.outcome.all_passed()
    }

    pub fn exit_code(&self) -> i32 {
        if self.passed() {
            0
        } else {
            1
        }
    }
}

/// Loads every config and fixes its seed: an explicit seed wins, otherwise
/// the seed is derived from the master seed and the document's position
/// (all `p` values of one document share it, and hence their paths).
pub fn resolve_configs(manifest: &RunManifest) -> Result<Vec<ExperimentConfig>> {
    let mut out = Vec::new();
    let mut index = 0u64;
    for path in &manifest.configs {
        let text = fs::read_to_string(path).map_err(io(path))?;
        for doc in parse_documents(&text, path)? {
            for mut c in doc {
                c.seed.get_or_insert(derive_seed(manifest.seed, &[index]));
                out.push(c);
            }
            index += 1;
        }
    }
    Ok(out)
}

fn is_completed(dir: &Path) -> bool {
    dir.join(SUMMARY).is_file()
}

/// Runs the suite and writes `results.csv`, `summary.json` and
/// `manifest.json` into `manifest.out`. Files are assembled in a sibling
/// staging directory that replaces the target only once complete.
pub fn run_suite(manifest: &RunManifest) -> Result<RunStatus> {
    let out = &manifest.out;
    if out.exists() && is_completed(out) && !manifest.force {
        return Err(CliError::Exists(out.clone()));
    }
    let configs = resolve_configs(manifest)?;
    let started = unix_now();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(manifest.workers).build()?;
    let outcome = pool.install(|| run_configs(&configs, manifest.select.as_deref()));
    let finished = unix_now();

    let parent = match out.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&parent).map_err(io(&parent))?;
    let stem = out.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "run".into());
    let staging = parent.join(format!(".{stem}.partial-{}", std::process::id()));
    if staging.exists() {
        fs::remove_dir_all(&staging).map_err(io(&staging))?;
    }
    fs::create_dir(&staging).map_err(io(&staging))?;
    write_results(&staging.join(RESULTS), &outcome)?;
    write_json(&staging.join(MANIFEST), &ManifestEcho { manifest, configs: &configs })?;
    write_json(&staging.join(SUMMARY), &Summary::new(&outcome, started, finished))?;
    if out.exists() {
        fs::remove_dir_all(out).map_err(io(out))?;
    }
    fs::rename(&staging, out).map_err(io(out))?;
    Ok(RunStatus { dir: out.clone(), outcome })
}

fn unix_now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0.0, |d| d.as_secs_f64())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut f = fs::File::create(path).map_err(io(path))?;
    serde_json::to_writer_pretty(&mut f, value)?;
    f.write_all(b"\n").map_err(io(path))
}

#[derive(Serialize)]
struct ManifestEcho<'a> {
    #[serde(flatten)]
    manifest: &'a RunManifest,
    configs: &'a [ExperimentConfig],
}

#[derive(Serialize)]
struct CheckLine<'a> {
    config: &'a str,
    experiment: ExperimentKind,
    check: &'a str,
    passed: bool,
    detail: &'a str,
}

#[derive(Serialize)]
struct Summary<'a> {
    started_unix_s: f64,
    finished_unix_s: f64,
    all_passed: bool,
    configs_run: usize,
    checks: Vec<CheckLine<'a>>,
    wall_time_s: Vec<(&'a str, f64)>,
    reports: &'a [smooth_convolve_core::lab::EstimateReport],
    families: &'a [smooth_convolve_core::lab::FamilyReport],
    failures: &'a [smooth_convolve_core::lab::Failure],
}

impl<'a> Summary<'a> {
    fn new(o: &'a SuiteOutcome, started: f64, finished: f64) -> Self {
        let mut checks = Vec::new();
        for r in &o.reports {
            for c in &r.checks {
                checks.push(CheckLine { config: &r.config, experiment: r.experiment, check: &c.name, passed: c.passed, detail: &c.detail });
            }
        }
        for f in &o.families {
            for c in &f.checks {
                checks.push(CheckLine { config: &f.group, experiment: f.experiment, check: &c.name, passed: c.passed, detail: &c.detail });
            }
        }
        Self {
            started_unix_s: started,
            finished_unix_s: finished,
            all_passed: o.all_passed(),
            configs_run: o.reports.len(),
            checks,
            wall_time_s: o.reports.iter().map(|r| (r.config.as_str(), r.wall_time_s)).collect(),
            reports: &o.reports,
            families: &o.families,
            failures: &o.failures,
        }
    }
}

pub const COLUMNS: [&str; 15] = [
    "experiment", "config", "group", "role", "q", "p", "n", "d", "horizon", "mesh_level", "param", "seed", "statistic", "value", "se",
];

fn num(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        format!("{v}")
    }
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map_or_else(String::new, |v| v.to_string())
}

/// Long-format results. Only deterministic quantities go here (no wall
/// times), so identical manifests give identical bytes. Checks appear as
/// statistics `check:<name>` with value 1 (pass) or 0.
fn write_results(path: &Path, o: &SuiteOutcome) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(COLUMNS)?;
    for r in &o.reports {
        let role = match r.role {
            smooth_convolve_core::lab::Role::Train => "train",
            smooth_convolve_core::lab::Role::Heldout => "heldout",
        };
        let head = [
            r.experiment.name().to_string(),
            r.config.clone(),
            r.group.clone().unwrap_or_default(),
            role.into(),
            num(r.q),
            num(r.p),
            r.n.to_string(),
            r.d.to_string(),
        ];
        for s in &r.stats {
            let mut rec = head.to_vec();
            rec.extend([num(s.horizon), opt(s.mesh_level), opt(s.param.map(num)), r.seed.to_string(), s.statistic.clone(), num(s.value), num(s.se)]);
            w.write_record(&rec)?;
        }
        for c in &r.checks {
            let mut rec = head.to_vec();
            rec.extend([num(r.horizon), String::new(), String::new(), r.seed.to_string(), format!("check:{}", c.name), bit(c.passed), "0".into()]);
            w.write_record(&rec)?;
        }
    }
    for f in &o.families {
        let head = [
            f.experiment.name().to_string(),
            format!("family:{}", f.group),
            f.group.clone(),
            "family".into(),
            num(f.q),
            num(f.p),
            String::new(),
            String::new(),
        ];
        for (name, v) in &f.constants {
            let mut rec = head.to_vec();
            rec.extend([String::new(), String::new(), String::new(), String::new(), name.clone(), num(*v), "0".into()]);
            w.write_record(&rec)?;
        }
        for s in &f.stats {
            let mut rec = head.to_vec();
            rec.extend([num(s.horizon), opt(s.mesh_level), opt(s.param.map(num)), String::new(), s.statistic.clone(), num(s.value), num(s.se)]);
            w.write_record(&rec)?;
        }
        for c in &f.checks {
            let mut rec = head.to_vec();
            rec.extend([String::new(), String::new(), String::new(), String::new(), format!("check:{}", c.name), bit(c.passed), "0".into()]);
            w.write_record(&rec)?;
        }
    }
    for e in &o.failures {
        w.write_record([e.experiment.name(), &e.config, "", "", "", "", "", "", "", "", "", "", "error", "", ""])?;
    }
    w.flush().map_err(io(path))?;
    Ok(())
}

fn bit(b: bool) -> String {
    if b { "1" } else { "0" }.into()
}
