use std::collections::BTreeMap;

use super::config::{ExperimentKind, Role};
use super::report::{Check, EstimateReport, FamilyReport, Samples, Stat};
use super::stats::{batched, excess};

/// Smallest `C + C'` (both `>= 0`) with
/// `R <= eps C M + C' (eps^{1-2/p} + 1) G` for every row `(R, M, G)` and
/// every `eps`. A two-variable linear program, solved by enumerating the
/// vertices of the feasible region. `None` when nothing finite is feasible.
pub fn fit_remainder(rows: &[(f64, f64, f64)], eps: &[f64], p: f64) -> Option<(f64, f64)> {
    // constraint a C + b C' >= r
    let cons: Vec<(f64, f64, f64)> = rows
        .iter()
        .flat_map(|&(r, m, g)| eps.iter().map(move |&e| (e * m, (e.powf(1.0 - 2.0 / p) + 1.0) * g, r)))
        .filter(|c| c.2 > 0.0)
        .collect();
    if cons.is_empty() {
        return Some((0.0, 0.0));
    }
    let feasible = |c: f64, c2: f64| {
        c >= 0.0 && c2 >= 0.0 && cons.iter().all(|&(a, b, r)| a * c + b * c2 >= r * (1.0 - 1e-12))
    };
    let mut candidates = Vec::new();
    for (i, &(a, b, r)) in cons.iter().enumerate() {
        if a > 0.0 {
            candidates.push((r / a, 0.0));
        }
        if b > 0.0 {
            candidates.push((0.0, r / b));
        }
        for &(a2, b2, r2) in &cons[i + 1..] {
            let det = a * b2 - a2 * b;
            if det.abs() > 1e-300 {
                candidates.push(((r * b2 - r2 * b) / det, (a * r2 - a2 * r) / det));
            }
        }
    }
    candidates
        .into_iter()
        .filter(|&(c, c2)| c.is_finite() && c2.is_finite() && feasible(c, c2))
        .min_by(|x, y| (x.0 + x.1).total_cmp(&(y.0 + y.1)).then(x.0.total_cmp(&y.0)))
}

fn group_key(r: &EstimateReport) -> Option<(String, u64, u64)> {
    r.group.clone().map(|g| (g, r.q.to_bits(), r.p.to_bits()))
}

/// Fits a constant per `(group, q, p)` from the training members and
/// validates it on the held-out members (within 3 standard errors).
pub fn fit_families(reports: &[EstimateReport]) -> Vec<FamilyReport> {
    let mut groups: BTreeMap<(ExperimentKind, String, u64, u64), Vec<&EstimateReport>> = BTreeMap::new();
    for r in reports {
        if let Some((g, q, p)) = group_key(r) {
            groups.entry((r.experiment, g, q, p)).or_default().push(r);
        }
    }
    groups
        .into_iter()
        .filter_map(|((kind, group, q, p), members)| {
            let (q, p) = (f64::from_bits(q), f64::from_bits(p));
            match kind {
                ExperimentKind::Maximal | ExperimentKind::Burkholder => Some(maximal_family(kind, group, q, p, &members)),
                ExperimentKind::RemainderBound => Some(remainder_family(group, q, p, &members)),
                _ => None,
            }
        })
        .collect()
}

fn split_roles<'a>(members: &[&'a EstimateReport]) -> (Vec<&'a EstimateReport>, Vec<&'a EstimateReport>) {
    members.iter().partition(|r| r.role == Role::Train)
}

fn stat(name: &str, value: f64, se: f64, horizon: f64, param: Option<f64>) -> Stat {
    Stat { statistic: name.into(), value, se, horizon, mesh_level: None, param }
}

fn maximal_family(kind: ExperimentKind, group: String, q: f64, p: f64, members: &[&EstimateReport]) -> FamilyReport {
    let (train, held) = split_roles(members);
    let mut stats = Vec::new();
    let mut checks = Vec::new();
    let ratio = |l: &[f64], r: &[f64]| {
        let (lm, rm) = (l.iter().sum::<f64>(), r.iter().sum::<f64>());
        if rm > 0.0 {
            (lm / rm).powf(1.0 / p)
        } else {
            0.0
        }
    };
    // C_hat(T) = max over the training members observed at horizon T
    let mut by_t: BTreeMap<u64, f64> = BTreeMap::new();
    let mut c_hat = 0.0f64;
    for r in &train {
        if let Samples::Maximal(rows) = &r.samples {
            for (i, (t, l, rr)) in rows.iter().enumerate() {
                let c = ratio(l, rr);
                let e = by_t.entry(t.to_bits()).or_insert(0.0);
                *e = e.max(c);
                if i == 0 {
                    c_hat = c_hat.max(c);
                }
            }
        }
    }
    for (t, c) in &by_t {
        stats.push(stat("c_hat_by_horizon", *c, 0.0, f64::from_bits(*t), None));
    }
    let mut constants = vec![("c_hat".to_string(), c_hat)];
    if by_t.len() > 1 {
        let (lo, hi) = by_t.values().fold((f64::INFINITY, 0.0f64), |(lo, hi), c| (lo.min(*c), hi.max(*c)));
        let spread = if lo > 0.0 { hi / lo } else { 1.0 };
        constants.push(("c_hat_horizon_ratio".into(), spread));
        if p == 2.0 {
            checks.push(Check {
                name: "horizon_independence".into(),
                passed: spread <= 1.25,
                detail: format!("max/min of C_hat over T = {:?}: {spread:.4}", by_t.keys().map(|t| f64::from_bits(*t)).collect::<Vec<_>>()),
            });
        }
    }
    let cp = c_hat.powf(p);
    for r in &held {
        if let Samples::Maximal(rows) = &r.samples {
            let (_, l, rr) = &rows[0];
            let ex = excess(l, rr, cp, r.batches);
            stats.push(stat(&format!("heldout_excess:{}", r.config), ex.mean, ex.se, rows[0].0, None));
            checks.push(Check {
                name: format!("heldout:{}", r.config),
                passed: ex.at_most(0.0, 3.0),
                detail: format!(
                    "E sup|X|^p - C_hat^p E(int|g|^2)^(p/2) = {:.4e} +- {:.1e} (C_hat = {c_hat:.5}, member ratio {:.5})",
                    ex.mean,
                    ex.se,
                    ratio(l, rr)
                ),
            });
        }
    }
    if held.is_empty() {
        checks.push(Check { name: "heldout_present".into(), passed: true, detail: "no held-out members".into() });
    }
    FamilyReport {
        group,
        experiment: kind,
        q,
        p,
        training: train.iter().map(|r| r.config.clone()).collect(),
        heldout: held.iter().map(|r| r.config.clone()).collect(),
        constants,
        stats,
        checks,
    }
}

fn remainder_family(group: String, q: f64, p: f64, members: &[&EstimateReport]) -> FamilyReport {
    let (train, held) = split_roles(members);
    let eps: Vec<f64> = {
        let mut all: Vec<f64> = Vec::new();
        for r in &train {
            for s in r.stats.iter().filter(|s| s.statistic == "envelope") {
                if let Some(e) = s.param {
                    if !all.contains(&e) {
                        all.push(e);
                    }
                }
            }
        }
        all.sort_by(f64::total_cmp);
        all
    };
    let means = |r: &EstimateReport| match &r.samples {
        Samples::Remainder { abs_remainder, sup_psi, energy } => Some((
            batched(abs_remainder, r.batches).mean,
            batched(sup_psi, r.batches).mean,
            batched(energy, r.batches).mean,
        )),
        _ => None,
    };
    let rows: Vec<(f64, f64, f64)> = train.iter().filter_map(|r| means(r)).collect();
    let mut stats = Vec::new();
    let mut checks = Vec::new();
    let mut constants = Vec::new();
    match fit_remainder(&rows, &eps, p) {
        None => checks.push(Check { name: "fit_feasible".into(), passed: false, detail: "infeasible on training members".into() }),
        Some((c, c2)) => {
            constants.push(("C".into(), c));
            constants.push(("C_prime".into(), c2));
            checks.push(Check { name: "fit_feasible".into(), passed: true, detail: format!("C = {c:.6}, C' = {c2:.6}") });
            for r in &held {
                if let Samples::Remainder { abs_remainder, sup_psi, energy } = &r.samples {
                    let mut worst: Option<(f64, f64, f64)> = None;
                    let mut ok = true;
                    for &e in &eps {
                        let k = e.powf(1.0 - 2.0 / p) + 1.0;
                        let d: Vec<f64> = abs_remainder
                            .iter()
                            .zip(sup_psi)
                            .zip(energy)
                            .map(|((a, m), g)| a - e * c * m - c2 * k * g)
                            .collect();
                        let ex = batched(&d, r.batches);
                        stats.push(stat(&format!("heldout_excess:{}", r.config), ex.mean, ex.se, f64::NAN, Some(e)));
                        ok &= ex.at_most(0.0, 3.0);
                        if worst.is_none_or(|w| ex.mean > w.1) {
                            worst = Some((e, ex.mean, ex.se));
                        }
                    }
                    let (e, m, s) = worst.unwrap_or((f64::NAN, 0.0, 0.0));
                    checks.push(Check {
                        name: format!("heldout:{}", r.config),
                        passed: ok,
                        detail: format!("largest excess {m:.4e} +- {s:.1e} at eps = {e}"),
                    });
                }
            }
        }
    }
    FamilyReport {
        group,
        experiment: ExperimentKind::RemainderBound,
        q,
        p,
        training: train.iter().map(|r| r.config.clone()).collect(),
        heldout: held.iter().map(|r| r.config.clone()).collect(),
        constants,
        stats,
        checks,
    }
}
