//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails.
//!
//! Runs with `cargo test --test acceptance`. The Monte-Carlo criteria use
//! the config files under `configs/` through the same entry point as the
//! command line tool.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use rand::Rng;
use smooth_convolve::{parse_config_str, run_suite, RunManifest, RunStatus};
use smooth_convolve_core::geometry::{
    duality_functional, holder_ratio, psi, psi_prime, q_norm, smoothness_ratio, taylor_remainder, two_term_bound,
    QSpace,
};
use smooth_convolve_core::lab::{batched, Simulator};
use smooth_convolve_core::rng::{self, gaussian_vector, sparse_gaussian_vector};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn run_file(name: &str, workers: usize) -> Result<(tempfile::TempDir, RunStatus), String> {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut m = RunManifest::new(vec![configs_dir().join(name)], tmp.path().join("run"));
    m.workers = workers;
    let status = run_suite(&m).map_err(|e| e.to_string())?;
    Ok((tmp, status))
}

fn describe_failures(s: &RunStatus) -> String {
    let mut out: Vec<String> = s.outcome.failures.iter().map(|f| format!("{}: {}", f.config, f.error)).collect();
    for r in &s.outcome.reports {
        out.extend(r.checks.iter().filter(|c| !c.passed).map(|c| format!("{}/{}: {}", r.config, c.name, c.detail)));
    }
    for f in &s.outcome.families {
        out.extend(f.checks.iter().filter(|c| !c.passed).map(|c| format!("{}[p={}]/{}: {}", f.group, f.p, c.name, c.detail)));
    }
    out.join("; ")
}

fn scaled(r: &mut impl Rng, v: Vec<f64>) -> Vec<f64> {
    let s = 10f64.powf(r.random_range(-3.0..3.0));
    v.into_iter().map(|x| x * s).collect()
}

fn geometry_exactness() -> Outcome {
    const N: usize = 100_000;
    let mut worst = [0.0f64; 4];
    for q in [2.0, 3.0, 4.0] {
        let space = QSpace::new(6, q).map_err(|e| e.to_string())?;
        let mut r = rng::stream(1, rng::domain::GEOMETRY, q as u64);
        for i in 0..N {
            let raw = if i % 2 == 0 { gaussian_vector(&mut r, 6) } else { sparse_gaussian_vector(&mut r, 6) };
            let x = scaled(&mut r, raw);
            let nx = q_norm(&x, &space).unwrap();
            let f = duality_functional(&x, &space).unwrap();
            worst[0] = worst[0].max((f.apply(&x).unwrap() - nx).abs() / nx);
            worst[1] = worst[1].max((f.dual_norm() - 1.0).abs());
            let lambda = 10f64.powf(r.random_range(-2.0..2.0));
            let lx: Vec<f64> = x.iter().map(|v| lambda * v).collect();
            let fl = duality_functional(&lx, &space).unwrap();
            worst[2] = worst[2].max(fl.coeffs().iter().zip(f.coeffs()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));

            let p = [2.0, 3.0, 4.0][i % 3];
            let x = gaussian_vector(&mut r, 6);
            let h = gaussian_vector(&mut r, 6);
            let tau = 1e-4 * q_norm(&x, &space).unwrap();
            let shift = |s: f64| x.iter().zip(&h).map(|(a, b)| a + s * b).collect::<Vec<_>>();
            let fd = (psi(&shift(tau), p, &space).unwrap() - psi(&shift(-tau), p, &space).unwrap()) / (2.0 * tau);
            let d = psi_prime(&x, p, &space).unwrap();
            let scale = d.dual_norm() * q_norm(&h, &space).unwrap();
            worst[3] = worst[3].max((fd - d.apply(&h).unwrap()).abs() / scale);
        }
    }
    ensure(
        worst[0] <= 1e-12 && worst[1] <= 1e-12 && worst[2] <= 1e-12 && worst[3] <= 1e-6,
        format!(
            "3x{N} points: |f_x(x)-|x||/|x| {:.1e}, ||f_x||_*-1| {:.1e}, |f_lx-f_x| {:.1e} (all <= 1e-12); psi' vs central difference {:.1e} (<= 1e-6)",
            worst[0], worst[1], worst[2], worst[3]
        ),
    )
}

fn hilbert_anchors() -> Outcome {
    let space = QSpace::new(5, 2.0).map_err(|e| e.to_string())?;
    let mut r = rng::stream(2, rng::domain::GEOMETRY, 0);
    let (mut ws, mut wh) = (0.0f64, 0.0f64);
    for _ in 0..20_000 {
        let x = gaussian_vector(&mut r, 5);
        let y = gaussian_vector(&mut r, 5);
        ws = ws.max((smoothness_ratio(&x, &y, 2.0, &space).unwrap() - 2.0).abs());
        wh = wh.max((holder_ratio(&x, &y, 2.0, &space).unwrap() - 2.0).abs());
    }
    ensure(ws <= 1e-12 && wh <= 1e-12, format!("20000 pairs: |smoothness - 2| {ws:.1e}, |holder - 2| {wh:.1e} (<= 1e-12)"))
}

fn taylor_identity() -> Outcome {
    const PAIRS: usize = 10_000;
    let mut worst_identity = 0.0f64;
    let mut fitted = Vec::new();
    let mut bound_ok = true;
    for q in [2.0, 3.0, 4.0] {
        let space = QSpace::new(4, q).map_err(|e| e.to_string())?;
        for p in [2.0, 3.0, 4.0] {
            let mut r = rng::stream(3, rng::domain::GEOMETRY, (10.0 * q + p) as u64);
            let mut triples = Vec::with_capacity(PAIRS);
            for i in 0..PAIRS {
                let x = if i % 4 == 3 { sparse_gaussian_vector(&mut r, 4) } else { gaussian_vector(&mut r, 4) };
                let s = 10f64.powf(r.random_range(-3.0..1.0));
                let h = gaussian_vector(&mut r, 4);
                // every fifth pair heads through the origin
                let y: Vec<f64> =
                    if i % 5 == 0 { x.iter().map(|v| -v * r.random_range(0.1..2.0)).collect() } else { x.iter().zip(&h).map(|(a, b)| a + s * b).collect() };
                let rem = taylor_remainder(&x, &y, p, 257, &space).unwrap();
                let (px, py) = (psi(&x, p, &space).unwrap(), psi(&y, p, &space).unwrap());
                let d: Vec<f64> = y.iter().zip(&x).map(|(a, b)| a - b).collect();
                let lin = psi_prime(&x, p, &space).unwrap().apply(&d).unwrap();
                worst_identity = worst_identity.max((py - px - lin - rem).abs() / (1.0 + px + py));
                triples.push((rem.abs(), two_term_bound(&x, &y, p, 1.0, &space).unwrap()));
            }
            let c = triples.iter().map(|(a, b)| if *b > 0.0 { a / b } else { 0.0 }).fold(0.0, f64::max);
            bound_ok &= c.is_finite() && triples.iter().all(|(a, b)| *a <= c * b);
            fitted.push(format!("C(q={q},p={p})={c:.3}"));
        }
    }
    ensure(
        worst_identity <= 1e-9 && bound_ok,
        format!("9x{PAIRS} pairs: identity defect {worst_identity:.1e} (<= 1e-9); two-term majorant holds with {}", fitted.join(" ")),
    )
}

fn single_config(json: &str) -> Result<smooth_convolve_core::lab::ExperimentConfig, String> {
    parse_config_str(json, Path::new("inline.json")).map_err(|e| e.to_string())?.pop().ok_or_else(|| "no config".into())
}

fn terminal_second_moment(json: &str, target: f64) -> Outcome {
    let cfg = single_config(json)?;
    let sim = Simulator::new(&cfg).map_err(|e| e.to_string())?;
    let grid = Simulator::grid(cfg.horizon, cfg.finest_level()).map_err(|e| e.to_string())?;
    let v = sim
        .ensemble(&grid, cfg.seed(), cfg.trajectories, |s| Ok(s.path.last().iter().map(|x| x * x).sum::<f64>()))
        .map_err(|e| e.to_string())?;
    let e = batched(&v, cfg.batches);
    ensure(
        (e.mean - target).abs() <= 3.0 * e.se,
        format!("N={} mesh 2^-{}: E|X_T|^2 = {:.5} +- {:.5} vs {target:.5} ({:.2} SE)", cfg.trajectories, cfg.finest_level(), e.mean, e.se, (e.mean - target) / e.se),
    )
}

fn ito_isometry() -> Outcome {
    let g = [[1.0, 0.5], [0.0, 1.0], [-0.5, 0.25]];
    let target = 1.5 * g.iter().flatten().map(|v| v * v).sum::<f64>();
    terminal_second_moment(
        r#"{"name":"isometry","experiment":"maximal","n":3,"q":2,"p":2,"horizon":1.5,"mesh_exponents":[10],
            "trajectories":10000,"seed":41,"g":{"recipe":"constant","matrix":[[1,0.5],[0,1],[-0.5,0.25]]}}"#,
        target,
    )
}

fn ou_closed_form() -> Outcome {
    terminal_second_moment(
        r#"{"name":"ou","experiment":"maximal","n":1,"q":2,"p":2,"horizon":1,"mesh_exponents":[10],
            "trajectories":10000,"seed":43,"generator":{"type":"diagonal","lambdas":[-1]},
            "g":{"recipe":"constant","matrix":[[1]]}}"#,
        (1.0 - (-2.0f64).exp()) / 2.0,
    )
}

fn quadratic_variation() -> Outcome {
    let (_tmp, s) = run_file("ito_convergence.json", 0)?;
    let rep = s.outcome.reports.first().ok_or("no report")?;
    let qv = rep.find_check("quadratic_variation").ok_or("quadratic_variation check missing")?;
    let tel = rep.find_check("telescoping").ok_or("telescoping check missing")?;
    ensure(s.passed(), format!("{}; {}{}", qv.detail, tel.detail, if s.passed() { String::new() } else { format!("; {}", describe_failures(&s)) }))
}

fn maximal_family() -> Outcome {
    let (_tmp, s) = run_file("maximal_family.json", 0)?;
    let fams = &s.outcome.families;
    let heldout = fams.iter().map(|f| f.checks.iter().filter(|c| c.name.starts_with("heldout:")).count()).min().unwrap_or(0);
    let ratios: Vec<String> = fams
        .iter()
        .filter(|f| f.p == 2.0)
        .map(|f| format!("q={}: {:.4}", f.q, f.constant("c_hat_horizon_ratio").unwrap_or(f64::NAN)))
        .collect();
    let complete = fams.len() == 12 && heldout == 5 && ratios.len() == 3 && fams.iter().all(|f| f.training.len() == 10);
    ensure(
        complete && s.passed(),
        format!(
            "{} (q,p) families, 10 train / {heldout} held-out each, all held-out within 3 SE: {}; C_hat(T) max/min at p=2 over T=1,2,4,8: {} (<= 1.25){}",
            fams.len(),
            s.passed(),
            ratios.join(", "),
            if s.passed() { String::new() } else { format!("; {}", describe_failures(&s)) }
        ),
    )
}

fn lenglart() -> Outcome {
    let (_tmp, s) = run_file("lenglart.json", 0)?;
    if let Some(f) = s.outcome.failures.first() {
        return Err(f.error.clone());
    }
    let rep = s.outcome.reports.first().ok_or("no report")?;
    let mut lines = Vec::new();
    for name in ["hypothesis", "conclusion_r0.25", "conclusion_r0.5", "conclusion_r0.75", "factor_r0.5"] {
        let c = rep.find_check(name).ok_or(format!("{name} missing"))?;
        lines.push(format!("{name}: {}", c.detail));
    }
    ensure(s.passed(), lines.join("; "))
}

fn yosida() -> Outcome {
    let (_tmp, s) = run_file("yosida.json", 0)?;
    let rep = s.outcome.reports.first().ok_or_else(|| describe_failures(&s))?;
    let mut lines = Vec::new();
    for name in ["resolvent_contraction", "gamma_blockwise", "distance_decreasing", "distance_final"] {
        lines.push(rep.find_check(name).ok_or(format!("{name} missing"))?.detail.clone());
    }
    ensure(s.passed(), lines.join("; "))
}

fn remainder_bound() -> Outcome {
    let (_tmp, s) = run_file("remainder_family.json", 0)?;
    let fams = &s.outcome.families;
    let summary: Vec<String> = fams
        .iter()
        .map(|f| {
            format!(
                "q={}: C={:.4} C'={:.4}, {} held-out",
                f.q,
                f.constant("C").unwrap_or(f64::NAN),
                f.constant("C_prime").unwrap_or(f64::NAN),
                f.checks.iter().filter(|c| c.name.starts_with("heldout:")).count()
            )
        })
        .collect();
    let complete = fams.len() == 2 && fams.iter().all(|f| f.p == 4.0 && !f.heldout.is_empty());
    ensure(
        complete && s.passed(),
        format!("{}{}", summary.join("; "), if s.passed() { String::new() } else { format!("; {}", describe_failures(&s)) }),
    )
}

fn determinism() -> Outcome {
    let (a_dir, a) = run_file("suite.json", 1)?;
    let (b_dir, b) = run_file("suite.json", 0)?;
    let read = |d: &tempfile::TempDir| std::fs::read(d.path().join("run/results.csv")).map_err(|e| e.to_string());
    let (ra, rb) = (read(&a_dir)?, read(&b_dir)?);
    let kinds: std::collections::BTreeSet<_> = a.outcome.reports.iter().map(|r| r.experiment).collect();
    ensure(
        ra == rb && !ra.is_empty() && kinds.len() == 7 && b.outcome.failures.is_empty(),
        format!("{} bytes, {} configs over {} experiment kinds, 1 worker vs pool: identical = {}", ra.len(), a.outcome.reports.len(), kinds.len(), ra == rb),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        ("geometry exactness", geometry_exactness),
        ("Hilbert anchors", hilbert_anchors),
        ("Taylor identity", taylor_identity),
        ("Ito isometry", ito_isometry),
        ("quadratic variation", quadratic_variation),
        ("Ornstein-Uhlenbeck", ou_closed_form),
        ("maximal inequality", maximal_family),
        ("Lenglart", lenglart),
        ("Yosida convergence", yosida),
        ("remainder bound", remainder_bound),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let res = f();
        let secs = start.elapsed().as_secs_f64();
        match res {
            Ok(d) => println!("criterion {:>2} {name:<22} PASS ({secs:.1}s) {d}", i + 1),
            Err(d) => {
                failed += 1;
                println!("criterion {:>2} {name:<22} FAIL ({secs:.1}s) {d}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
