//! Files written by a run: the curve as CSV, fits and manifest as JSON, and
//! two-column plot files. Every float is written with 17 significant digits.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::analysis::{FitModel, FitRange, Regime, ScalingFit};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::transport::{FailedPoint, TransmissionCurve};

pub const CURVE_HEADER: &str = "L,T_mean,T_stderr,T_geomean,n_realizations";
pub const CURVE_FILE: &str = "curve.csv";
pub const FITS_FILE: &str = "fits.json";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const LINEAR_PLOT_FILE: &str = "transmission_linear.dat";
pub const LOG_PLOT_FILE: &str = "transmission_log.dat";

/// Float with 17 significant digits; exact under round trip.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// One CSV data row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub length: f64,
    pub mean: f64,
    pub stderr: f64,
    pub geomean: f64,
    pub n_realizations: usize,
}

pub fn curve_rows(curve: &TransmissionCurve) -> Vec<CurveRow> {
    curve
        .points
        .iter()
        .map(|p| CurveRow {
            length: p.length,
            mean: p.mean,
            stderr: p.stderr,
            geomean: p.geomean,
            n_realizations: p.n_realizations,
        })
        .collect()
}

pub fn format_curve_csv(rows: &[CurveRow]) -> String {
    let mut s = String::from(CURVE_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            fmt_f64(r.length),
            fmt_f64(r.mean),
            fmt_f64(r.stderr),
            fmt_f64(r.geomean),
            r.n_realizations
        );
    }
    s
}

pub fn parse_curve_csv(text: &str) -> Result<Vec<CurveRow>> {
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some(CURVE_HEADER) {
        return Err(Error::Parse(format!("curve file must start with `{CURVE_HEADER}`")));
    }
    lines
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, line)| {
            let bad = || Error::Parse(format!("malformed curve row {}: `{line}`", i + 1));
            let f: Vec<&str> = line.split(',').map(str::trim).collect();
            if f.len() != 5 {
                return Err(bad());
            }
            let num = |s: &str| s.parse::<f64>().map_err(|_| bad());
            Ok(CurveRow {
                length: num(f[0])?,
                mean: num(f[1])?,
                stderr: num(f[2])?,
                geomean: num(f[3])?,
                n_realizations: f[4].parse().map_err(|_| bad())?,
            })
        })
        .collect()
}

pub fn read_curve_csv(path: &Path) -> Result<Vec<CurveRow>> {
    parse_curve_csv(&std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
}

/// `L T` and `L ln T` columns.
pub fn format_plot(rows: &[CurveRow], log_scale: bool) -> String {
    let mut s = String::from(if log_scale { "# L ln(T_mean)\n" } else { "# L T_mean\n" });
    for r in rows {
        let y = if log_scale { r.mean.ln() } else { r.mean };
        let _ = writeln!(s, "{} {}", fmt_f64(r.length), fmt_f64(y));
    }
    s
}

/// Pretty JSON with floats at 17 significant digits.
pub fn to_json_string(value: &Value) -> String {
    let mut out = String::new();
    write_json(value, 0, &mut out);
    out.push('\n');
    out
}

fn write_json(value: &Value, indent: usize, out: &mut String) {
    let pad = |n: usize| "  ".repeat(n);
    match value {
        Value::Number(n) => {
            if let Some(f) = n.as_f64().filter(|_| n.is_f64()) {
                out.push_str(&fmt_f64(f));
            } else {
                out.push_str(&n.to_string());
            }
        }
        Value::Array(items) if !items.is_empty() => {
            out.push_str("[\n");
            for (i, item) in items.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                write_json(item, indent + 1, out);
                out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(indent));
            out.push(']');
        }
        Value::Object(map) if !map.is_empty() => {
            out.push_str("{\n");
            for (i, (k, v)) in map.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                out.push_str(&Value::String(k.clone()).to_string());
                out.push_str(": ");
                write_json(v, indent + 1, out);
                out.push_str(if i + 1 < map.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(indent));
            out.push('}');
        }
        other => out.push_str(&other.to_string()),
    }
}

fn fit_json(fit: &ScalingFit) -> Value {
    let names = match fit.model {
        FitModel::Exponential => ["T0", "l_loc"],
        FitModel::Hyperbolic => ["c", "L0"],
    };
    json!({
        "model": fit.model,
        "parameters": { names[0]: fit.parameters[0], names[1]: fit.parameters[1] },
        "errors": { names[0]: fit.parameter_errors[0], names[1]: fit.parameter_errors[1] },
        "residual_sum": fit.residual_sum,
        "residual_per_dof": fit.residual_per_dof(),
        "n_points": fit.n_points,
        "weighted": fit.weighted,
    })
}

pub fn fits_json(range: &FitRange, exponential: &ScalingFit, hyperbolic: &ScalingFit, regime: Regime) -> Value {
    json!({
        "fit_range": {
            "min": if range.min.is_finite() { json!(range.min) } else { Value::Null },
            "max": if range.max.is_finite() { json!(range.max) } else { Value::Null },
        },
        "exponential": fit_json(exponential),
        "hyperbolic": fit_json(hyperbolic),
        "residual_ratio": exponential.residual_per_dof() / hyperbolic.residual_per_dof(),
        "regime": regime.as_str(),
    })
}

/// Timing and seed record of one L point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointRecord {
    pub length: f64,
    pub length_index: u32,
    /// Stream ids run from `length_index << 32` to that plus
    /// `realizations - 1`.
    pub first_stream: u64,
    pub realizations: usize,
    pub failures: usize,
    pub max_residual: Option<f64>,
    pub seconds: f64,
}

/// Everything needed to reproduce a run; wall-clock data lives only here.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub config: RunConfig,
    pub master_seed: u64,
    pub threads: usize,
    pub points: Vec<PointRecord>,
    pub failed_points: Vec<FailedPoint>,
    pub total_seconds: f64,
    pub started_unix: u64,
}

fn write(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Write all run outputs into `out_dir`, creating it if needed. Returns the
/// written paths.
pub fn emit_outputs(
    out_dir: &Path,
    curve: &TransmissionCurve,
    fits: Option<Value>,
    manifest: &RunManifest,
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let rows = curve_rows(curve);
    let mut written = Vec::new();
    let mut put = |name: &str, contents: String| -> Result<()> {
        let p = out_dir.join(name);
        write(&p, &contents)?;
        written.push(p);
        Ok(())
    };
    put(CURVE_FILE, format_curve_csv(&rows))?;
    if let Some(f) = fits {
        put(FITS_FILE, to_json_string(&f))?;
    }
    put(LINEAR_PLOT_FILE, format_plot(&rows, false))?;
    put(LOG_PLOT_FILE, format_plot(&rows, true))?;
    let manifest_value = serde_json::to_value(manifest).map_err(|e| Error::Parse(e.to_string()))?;
    put(MANIFEST_FILE, to_json_string(&manifest_value))?;
    Ok(written)
}
