//! End-to-end runs: scan, fits, model selection and persisted outputs, and
//! sweeps of the same experiment over cross-sections.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use toml::Value;

use crate::analysis::{fit_exponential, fit_hyperbolic, select_model, FitRange, Regime, ScalingFit};
use crate::config::RunConfig;
use crate::dipole::SourceSpec;
use crate::error::{Error, Result};
use crate::geometry::{propagating_modes, WaveguideGeometry};
use crate::green::Point3;
use crate::output::{emit_outputs, fits_json, fmt_f64, PointRecord, RunManifest};
use crate::transport::{scan_curve_with_progress, stream_id, TransmissionCurve, K0};

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub curve: TransmissionCurve,
    pub fit_range: FitRange,
    pub exponential: ScalingFit,
    pub hyperbolic: ScalingFit,
    pub regime: Regime,
    pub manifest: RunManifest,
}

impl ExperimentResult {
    pub fn fits_json(&self) -> serde_json::Value {
        fits_json(&self.fit_range, &self.exponential, &self.hyperbolic, self.regime)
    }

    pub fn write(&self, out_dir: &Path) -> Result<Vec<PathBuf>> {
        emit_outputs(out_dir, &self.curve, Some(self.fits_json()), &self.manifest)
    }
}

/// Scan, fit both laws on the configured window and select the regime.
pub fn run_experiment(config: &RunConfig) -> Result<ExperimentResult> {
    let started = Instant::now();
    let started_unix = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    let sim = &config.simulation;
    let mut seconds = vec![0.0; sim.lengths.len()];
    let curve = scan_curve_with_progress(sim, |li, s| seconds[li as usize] = s)?;
    let points = sim
        .lengths
        .iter()
        .enumerate()
        .map(|(li, &length)| {
            let li = li as u32;
            let point = curve.points.iter().find(|p| p.length_index == li);
            let dropped = curve.failed.iter().find(|p| p.length_index == li);
            PointRecord {
                length,
                length_index: li,
                first_stream: stream_id(li, 0),
                realizations: sim.realizations_per_length,
                failures: point.map(|p| p.failures).or(dropped.map(|p| p.failures)).unwrap_or(0),
                max_residual: point.map(|p| p.max_residual),
                seconds: seconds[li as usize],
            }
        })
        .collect();
    let fit_range = config.fit_range()?;
    let exponential = fit_exponential(&curve, &fit_range)?;
    let hyperbolic = fit_hyperbolic(&curve, &fit_range)?;
    let regime = select_model(&exponential, &hyperbolic);
    let manifest = RunManifest {
        tool: "wgcdm".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config: config.clone(),
        master_seed: sim.master_seed,
        threads: rayon::current_num_threads(),
        points,
        failed_points: curve.failed.clone(),
        total_seconds: started.elapsed().as_secs_f64(),
        started_unix,
    };
    Ok(ExperimentResult {
        curve,
        fit_range,
        exponential,
        hyperbolic,
        regime,
        manifest,
    })
}

/// One cross-section of a sweep, optionally with its own scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometryEntry {
    pub a: f64,
    pub b: f64,
    pub lengths: Option<Vec<f64>>,
    pub realizations: Option<usize>,
}

impl GeometryEntry {
    pub fn new(a: f64, b: f64) -> Self {
        Self {
            a,
            b,
            lengths: None,
            realizations: None,
        }
    }
}

/// Parse `[[geometry]]` entries with keys `a`, `b` and optionally
/// `lengths`, `realizations`.
pub fn parse_geometries(text: &str) -> Result<Vec<GeometryEntry>> {
    let table: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| Error::Parse(format!("invalid TOML: {}", e.message())))?;
    if let Some(k) = table.keys().find(|k| *k != "geometry") {
        return Err(Error::Parse(format!("unknown key `{k}` in geometry list; expected [[geometry]] entries")));
    }
    let Some(list) = table.get("geometry") else {
        return Ok(Vec::new());
    };
    let Value::Array(items) = list else {
        return Err(Error::Parse("`geometry` must be an array of tables ([[geometry]])".into()));
    };
    items
        .iter()
        .enumerate()
        .map(|(i, item)| {
            let entry: GeometryEntry = item
                .clone()
                .try_into()
                .map_err(|e: toml::de::Error| Error::Parse(format!("geometry entry {i}: {}", e.message())))?;
            if let Value::Table(t) = item {
                if let Some(k) = t.keys().find(|k| !["a", "b", "lengths", "realizations"].contains(&k.as_str())) {
                    return Err(Error::Parse(format!("geometry entry {i}: unknown key `{k}`")));
                }
            }
            Ok(entry)
        })
        .collect()
}

pub fn read_geometries(path: &Path) -> Result<Vec<GeometryEntry>> {
    parse_geometries(&std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
}

/// The base configuration moved to another cross-section. The source keeps
/// its axial position and orientation and is re-centred on the new axis.
pub fn config_for_geometry(base: &RunConfig, entry: &GeometryEntry) -> Result<RunConfig> {
    let mut cfg = base.clone();
    let sim = &mut cfg.simulation;
    sim.geom = WaveguideGeometry::new(entry.a, entry.b)?;
    sim.source = SourceSpec::new(
        Point3::new(entry.a / 2.0, entry.b / 2.0, sim.source.position.z),
        sim.source.orientation,
        sim.detuning,
        &sim.geom,
    )?;
    if let Some(l) = &entry.lengths {
        sim.lengths = l.clone();
    }
    if let Some(r) = entry.realizations {
        sim.realizations_per_length = r;
    }
    sim.validate()?;
    Ok(cfg)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub a: f64,
    pub b: f64,
    pub mode_count: usize,
    pub outcome: std::result::Result<ExperimentResult, String>,
}

impl SweepRow {
    pub fn regime(&self) -> Option<Regime> {
        self.outcome.as_ref().ok().map(|r| r.regime)
    }
}

pub const SWEEP_HEADER: &str = "a,b,mode_count,T0,l_loc,c,L0,regime,error";

/// Run the experiment for each cross-section in turn; a failing geometry is
/// recorded and the sweep continues.
pub fn sweep_geometry(base: &RunConfig, entries: &[GeometryEntry]) -> Vec<SweepRow> {
    entries
        .iter()
        .map(|entry| {
            let mode_count = WaveguideGeometry::new(entry.a, entry.b)
                .map(|g| propagating_modes(&g, K0).len())
                .unwrap_or(0);
            let outcome = config_for_geometry(base, entry)
                .and_then(|cfg| run_experiment(&cfg))
                .map_err(|e| e.to_string());
            SweepRow {
                a: entry.a,
                b: entry.b,
                mode_count,
                outcome,
            }
        })
        .collect()
}

pub fn format_sweep_table(rows: &[SweepRow]) -> String {
    let mut s = String::from(SWEEP_HEADER);
    s.push('\n');
    for row in rows {
        let _ = write!(s, "{},{},{},", fmt_f64(row.a), fmt_f64(row.b), row.mode_count);
        match &row.outcome {
            Ok(r) => {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},",
                    fmt_f64(r.exponential.parameters[0]),
                    fmt_f64(r.exponential.parameters[1]),
                    fmt_f64(r.hyperbolic.parameters[0]),
                    fmt_f64(r.hyperbolic.parameters[1]),
                    r.regime.as_str()
                );
            }
            Err(e) => {
                let _ = writeln!(s, ",,,,failed,\"{}\"", e.replace('"', "'"));
            }
        }
    }
    s
}

/// Sweep directory name of one cross-section.
pub fn geometry_dir_name(a: f64, b: f64) -> String {
    format!("a{a}_b{b}")
}
