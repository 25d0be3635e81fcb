//! Aggregate CSV output. Floats carry nine significant digits so files are
//! byte-stable for a given configuration.

use std::fmt::Write as _;
use std::path::Path;

use super::runner::Aggregate;
use crate::error::{Error, Result};

pub const HEADER: &str =
    "arm,P,L,snr_db,delta,dynamic_range,trials,mean_md,median_md,prob_resolved,mean_cov_error,failures";

fn num(x: f64) -> String {
    if x.is_nan() {
        "NaN".to_string()
    } else {
        format!("{x:.8e}")
    }
}

pub fn render_csv(rows: &[Aggregate]) -> Result<String> {
    if rows.is_empty() {
        return Err(Error::InvalidArgument("no aggregate rows to write".into()));
    }
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(HEADER);
    out.push('\n');
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.arm,
            r.sensors,
            r.snapshots,
            num(r.snr_db),
            num(r.delta),
            num(r.dynamic_range),
            r.trials,
            num(r.mean_md),
            num(r.median_md),
            num(r.prob_resolved),
            num(r.mean_cov_error),
            r.failures
        )
        .expect("writing to a String cannot fail");
    }
    Ok(out)
}

/// Writes the CSV; an empty row set is rejected before any file is created.
pub fn emit_csv(rows: &[Aggregate], path: &Path) -> Result<()> {
    let text = render_csv(rows)?;
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::Io {
            path: dir.display().to_string(),
            message: e.to_string(),
        })?;
    }
    std::fs::write(path, text).map_err(|e| Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}
