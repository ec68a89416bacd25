use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use colehopf::hopf::TransformedField;
use colehopf::linsolve::LinearField;
use colehopf::verify::{ResidualReport, Verdict};
use serde::Serialize;

use crate::error::{CliError, CliResult};

/// Fixed 17-significant-digit scientific notation.
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn writer(path: &Path) -> CliResult<csv::Writer<fs::File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(|e| csv_error(path, e))
}

fn csv_error(path: &Path, e: csv::Error) -> CliError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => CliError::io(path, io),
        other => CliError::io(path, std::io::Error::other(format!("{other:?}"))),
    }
}

/// `x,t,phi,dphi,psi,mask` for time-dependent fields, `x,phi,dphi,psi,mask`
/// otherwise. Masked `psi` is written as `NaN`.
pub fn write_field(path: &Path, field: &LinearField, psi: &TransformedField) -> CliResult<()> {
    let mut w = writer(path)?;
    let timed = field.times.is_some();
    let header: &[&str] = if timed {
        &["x", "t", "phi", "dphi", "psi", "mask"]
    } else {
        &["x", "phi", "dphi", "psi", "mask"]
    };
    w.write_record(header).map_err(|e| csv_error(path, e))?;
    let xs = field.grid.points();
    let n = xs.len();
    for k in 0..field.levels() {
        let (phi, dphi) = (field.phi_level(k), field.dphi_level(k));
        for i in 0..n {
            let mut row = vec![num(xs[i])];
            if let Some(times) = &field.times {
                row.push(num(times[k]));
            }
            row.push(num(phi[i]));
            row.push(num(dphi[i]));
            row.push(num(psi.psi[k * n + i]));
            row.push(u8::from(psi.mask[k * n + i]).to_string());
            w.write_record(&row).map_err(|e| csv_error(path, e))?;
        }
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// `x[,t],residual` at the points that entered the norms.
pub fn write_residual(path: &Path, report: &ResidualReport) -> CliResult<()> {
    let mut w = writer(path)?;
    let s = &report.samples;
    match &s.t {
        Some(t) => {
            w.write_record(["x", "t", "residual"]).map_err(|e| csv_error(path, e))?;
            for ((x, t), r) in s.x.iter().zip(t).zip(&s.r) {
                w.write_record([num(*x), num(*t), num(*r)])
                    .map_err(|e| csv_error(path, e))?;
            }
        }
        None => {
            w.write_record(["x", "residual"]).map_err(|e| csv_error(path, e))?;
            for (x, r) in s.x.iter().zip(&s.r) {
                w.write_record([num(*x), num(*r)]).map_err(|e| csv_error(path, e))?;
            }
        }
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// One machine-readable document per run.
#[derive(Debug, Serialize)]
pub struct RunDocument {
    pub command: String,
    pub config: BTreeMap<String, String>,
    pub derived: BTreeMap<String, String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub constraint: Option<ResidualReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residual: Option<ResidualReport>,
    pub verdict: Verdict,
    pub degenerate: bool,
    pub notes: Vec<String>,
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).unwrap_or_else(|e| format!("{{\"error\": \"{e}\"}}"))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    let mut text = to_json(value);
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn norm(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |v| format!("{v:.3e}"))
}

/// One-line text summary of a residual report.
pub fn summary(report: &ResidualReport) -> String {
    let mut line = format!(
        "{}: {} (linf {}, rms {}, tol {:.1e}, {} points, masked {:.2}%)",
        report.equation,
        report.verdict,
        norm(report.linf),
        norm(report.l2),
        report.tolerance,
        report.evaluated_points,
        100.0 * report.masked_fraction
    );
    if report.degenerate {
        line.push_str(" [degenerate field]");
    }
    if let Some(stage) = report.failed_stage {
        line.push_str(&format!(" [stopped at {stage}]"));
    }
    line
}
