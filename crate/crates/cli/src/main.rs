use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use smooth_convolve::{emit_plotdata, parse_selector, run_suite, RunManifest};
use smooth_convolve_core::geometry::constant_table;

#[derive(Parser)]
#[command(name = "smooth-convolve", version, about = "Monte-Carlo experiments for stochastic convolutions in l^q")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiments described by one or more config files.
    Run {
        #[arg(required = true)]
        configs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Master seed for configs without their own.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, env = "SMOOTH_CONVOLVE_WORKERS", default_value_t = 0)]
        workers: usize,
        /// Comma separated experiment names; empty selects none.
        #[arg(long)]
        select: Option<String>,
        #[arg(long)]
        force: bool,
    },
    /// Write per-experiment plotting tables into RUN_DIR/plotdata.
    Plotdata { run_dir: PathBuf },
    /// Print empirical smoothness and Hoelder constants as CSV.
    Constants {
        #[arg(long, default_value_t = 4)]
        dim: usize,
        #[arg(long, value_delimiter = ',', default_values_t = [2.0, 3.0, 4.0])]
        q: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_values_t = [2.0, 3.0, 4.0])]
        p: Vec<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 20_000)]
        samples: usize,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Run { configs, out, seed, workers, select, force } => {
            let manifest = RunManifest {
                configs,
                seed,
                workers,
                out,
                select: select.as_deref().map(parse_selector).transpose()?,
                force,
            };
            let status = run_suite(&manifest)?;
            for f in &status.outcome.failures {
                eprintln!("failed: {} ({}): {}", f.config, f.experiment, f.error);
            }
            let failed: Vec<_> = status
                .outcome
                .reports
                .iter()
                .flat_map(|r| r.checks.iter().filter(|c| !c.passed).map(move |c| (r.config.as_str(), c)))
                .chain(status.outcome.families.iter().flat_map(|f| f.checks.iter().filter(|c| !c.passed).map(move |c| (f.group.as_str(), c))))
                .collect();
            for (who, c) in &failed {
                eprintln!("check failed: {who}/{}: {}", c.name, c.detail);
            }
            println!(
                "{} configs, {} groups, {} failed checks, {} errors -> {}",
                status.outcome.reports.len(),
                status.outcome.families.len(),
                failed.len(),
                status.outcome.failures.len(),
                status.dir.display()
            );
            Ok(ExitCode::from(status.exit_code() as u8))
        }
        Command::Plotdata { run_dir } => {
            for p in emit_plotdata(&run_dir)? {
                println!("{}", p.display());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Constants { dim, q, p, seed, samples } => {
            let rows = constant_table(dim, &q, &p, seed, samples).context("estimating constants")?;
            let mut w = csv::Writer::from_writer(std::io::stdout());
            for r in rows {
                w.serialize(r)?;
            }
            w.flush()?;
            Ok(ExitCode::SUCCESS)
        }
    }
}
