//! Deterministic file emission: CSV traces (RFC-4180, 12 significant
//! digits, dot decimal separator, newline-terminated final row) and JSON
//! reports with fixed field order.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use nve_squeeze::observables::SqueezingTrace;

use crate::CliError;

/// 12 significant digits, scientific notation.
pub fn sig(x: f64) -> String {
    format!("{x:.11e}")
}

/// RFC-4180 field quoting; our numeric fields never need it, error messages
/// might.
pub fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir)
        .map_err(|e| CliError::Config(format!("cannot create {}: {e}", dir.display())))
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    let mut f = fs::File::create(path)
        .map_err(|e| CliError::Config(format!("cannot create {}: {e}", path.display())))?;
    f.write_all(contents.as_bytes())
        .map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))
}

pub const TRACE_HEADER: &str =
    "t_s,variance_theta,variance_opt,theta_opt,exc_c1,exc_c2,occ_a,occ_b,hp_valid";

/// Render one squeezing trace as CSV.
pub fn trace_csv(trace: &SqueezingTrace, db: bool) -> String {
    let mut out = String::new();
    out.push_str(TRACE_HEADER);
    if db {
        out.push_str(",variance_theta_db");
    }
    out.push('\n');
    for k in 0..trace.len() {
        let (e1, e2) = trace.excitations[k];
        let (oa, ob) = trace.phonon_occupations[k];
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}",
            sig(trace.times[k]),
            sig(trace.variance_theta[k]),
            sig(trace.variance_opt[k]),
            sig(trace.theta_opt[k]),
            sig(e1),
            sig(e2),
            sig(oa),
            sig(ob),
            trace.hp_valid[k],
        ));
        if db {
            out.push(',');
            out.push_str(&sig(to_db(trace.variance_theta[k])));
        }
        out.push('\n');
    }
    out
}

/// Output-only dB conversion relative to the vacuum variance 1/4.
pub fn to_db(variance: f64) -> f64 {
    10.0 * (variance / 0.25).log10()
}

/// Small manifest naming the plot axes of an emitted CSV.
pub fn plot_manifest(csv_file: &str, x: (&str, &str), y: &[(&str, &str)]) -> serde_json::Value {
    serde_json::json!({
        "file": csv_file,
        "x": { "column": x.0, "label": x.1 },
        "y": y.iter().map(|(col, label)| {
            serde_json::json!({ "column": col, "label": label })
        }).collect::<Vec<_>>(),
    })
}

pub fn json_path(dir: &Path, name: &str) -> PathBuf {
    dir.join(name)
}
