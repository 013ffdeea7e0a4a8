use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{io, CliError, Result};
use crate::run::{RESULTS, SUMMARY};

/// The column each experiment is naturally plotted against.
fn axis(experiment: &str) -> &'static str {
    match experiment {
        "ito_convergence" => "mesh_level",
        "maximal" | "burkholder" | "drift_bound" => "horizon",
        "yosida" => "m",
        "remainder_bound" => "epsilon",
        "lenglart" => "r",
        _ => "param",
    }
}

/// Writes `plotdata/<experiment>.csv` for every experiment in a completed
/// run: columns `config, <axis>, statistic, value, se`, one row per number,
/// sorted by config, statistic and axis value.
pub fn emit_plotdata(run_dir: &Path) -> Result<Vec<PathBuf>> {
    if !run_dir.join(SUMMARY).is_file() {
        return Err(CliError::Incomplete(run_dir.to_path_buf(), SUMMARY));
    }
    let results = run_dir.join(RESULTS);
    if !results.is_file() {
        return Err(CliError::Incomplete(run_dir.to_path_buf(), RESULTS));
    }
    let mut rdr = csv::Reader::from_path(&results)?;
    let headers = rdr.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name).ok_or(CliError::Incomplete(run_dir.to_path_buf(), RESULTS));
    let (ie, ic, ih, il, ip, is, iv, ise) =
        (col("experiment")?, col("config")?, col("horizon")?, col("mesh_level")?, col("param")?, col("statistic")?, col("value")?, col("se")?);

    type Row = (String, String, f64, String, String, String);
    let mut by_exp: BTreeMap<String, Vec<Row>> = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec?;
        let stat = &rec[is];
        if stat.starts_with("check:") || stat == "error" {
            continue;
        }
        let exp = rec[ie].to_string();
        let x = match axis(&exp) {
            "mesh_level" => &rec[il],
            "horizon" => &rec[ih],
            _ => &rec[ip],
        };
        let xv: f64 = x.parse().unwrap_or(f64::NAN);
        by_exp.entry(exp).or_default().push((rec[ic].to_string(), stat.to_string(), xv, x.to_string(), rec[iv].to_string(), rec[ise].to_string()));
    }
    let dir = run_dir.join("plotdata");
    fs::create_dir_all(&dir).map_err(io(&dir))?;
    let mut written = Vec::new();
    for (exp, mut rows) in by_exp {
        rows.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.total_cmp(&b.2)));
        let path = dir.join(format!("{exp}.csv"));
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(["config", axis(&exp), "statistic", "value", "se"])?;
        for (config, stat, _, x, v, se) in rows {
            w.write_record([config, x, stat, v, se])?;
        }
        w.flush().map_err(io(&path))?;
        written.push(path);
    }
    Ok(written)
}
