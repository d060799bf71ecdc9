//! Output files: one CSV per trace and a plain-text summary per scenario.
//!
//! Summary format, one `key = value` per line:
//!
//! ```text
//! scenario = epi-exp-line
//! classification = regular
//! final_displacement = 4.9999...e-6
//! drift_norm = ...
//! norm_growth = ...
//! checks_passed = 7
//! checks_failed = 0
//! check = PASS | displacements nonincreasing | largest increase ...
//! ```
//!
//! Reals use 17 significant digits; absent values are written as `none`.
//! Wall time is printed on the console only, so the file is reproducible.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};

use firmlab_core::dynamics::write_csv;
use firmlab_core::productspace::{as_matrix, BlockLinearOp, BlockOpKind};

use crate::config::ScenarioConfig;
use crate::scenarios::{RunSummary, ScenarioRun};
use crate::CliError;

/// Overrides the output directory of every config.
pub const OUTPUT_DIR_ENV: &str = "FIRMLAB_OUTPUT_DIR";
pub const DEFAULT_OUTPUT_DIR: &str = "firmlab-output";

static TMP_COUNTER: AtomicUsize = AtomicUsize::new(0);

pub fn output_dir(cfg: &ScenarioConfig) -> PathBuf {
    match std::env::var_os(OUTPUT_DIR_ENV) {
        Some(dir) if !dir.is_empty() => PathBuf::from(dir),
        _ => cfg.output.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR)),
    }
}

fn fmt_opt<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map_or_else(|| "none".to_string(), |v| v.to_string())
}

fn fmt_real(v: Option<f64>) -> String {
    v.map_or_else(|| "none".to_string(), |v| format!("{v:.16e}"))
}

pub fn render_summary(s: &RunSummary) -> String {
    let mut out = String::new();
    out.push_str(&format!("scenario = {}\n", s.scenario));
    out.push_str(&format!("classification = {}\n", fmt_opt(s.classification)));
    out.push_str(&format!("final_displacement = {}\n", fmt_real(s.final_displacement)));
    out.push_str(&format!("drift_norm = {}\n", fmt_real(s.drift_norm)));
    out.push_str(&format!("norm_growth = {}\n", fmt_real(s.norm_growth)));
    out.push_str(&format!("checks_passed = {}\n", s.checks_passed()));
    out.push_str(&format!("checks_failed = {}\n", s.checks_failed()));
    for c in &s.checks {
        let tag = if c.passed { "PASS" } else { "FAIL" };
        out.push_str(&format!("check = {tag} | {} | {}\n", c.name, c.detail));
    }
    out
}

/// Writes `bytes` to a temporary sibling of `path` and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(
        ".{name}.{}.{}.tmp",
        std::process::id(),
        TMP_COUNTER.fetch_add(1, Ordering::Relaxed)
    ));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result
}

/// Writes `<scenario>-<label>.csv` for every trace and
/// `<scenario>-summary.txt` into `dir`, returning the paths written.
pub fn write_run(run: &ScenarioRun, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let io = |e: std::io::Error| CliError::Runtime(format!("{}: {e}", dir.display()));
    fs::create_dir_all(dir).map_err(io)?;
    let name = run.summary.scenario.name();
    let mut written = Vec::new();
    for t in &run.traces {
        let mut buf = Vec::new();
        write_csv(&t.trace, &mut buf).map_err(io)?;
        let path = dir.join(format!("{name}-{}.csv", t.label));
        write_atomic(&path, &buf).map_err(io)?;
        written.push(path);
    }
    let path = dir.join(format!("{name}-summary.txt"));
    write_atomic(&path, render_summary(&run.summary).as_bytes()).map_err(io)?;
    written.push(path);
    Ok(written)
}

/// Materializes a block operator as CSV: one matrix row per line, entries
/// in `{:.16e}` over the block-major basis.
pub fn export_matrix(kind: BlockOpKind, m: usize, d: usize) -> Result<String, CliError> {
    let op = BlockLinearOp::new(kind, m, d).map_err(|e| CliError::Config(e.to_string()))?;
    let a = as_matrix(&op).map_err(|e| CliError::Config(e.to_string()))?;
    let mut out = String::new();
    for i in 0..a.nrows() {
        let row: Vec<String> = (0..a.ncols()).map(|j| format!("{:.16e}", a[(i, j)])).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    Ok(out)
}
