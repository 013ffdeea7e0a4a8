//! Batch front end: reads JSON experiment configs, runs the suite in
//! parallel and writes long-format results.

mod config;
mod error;
mod plotdata;
mod run;

pub use config::{parse_config, parse_config_str, parse_documents};
pub use error::{CliError, Result};
pub use plotdata::emit_plotdata;
pub use run::{parse_selector, resolve_configs, run_suite, RunManifest, RunStatus, COLUMNS, MANIFEST, RESULTS, SUMMARY};
