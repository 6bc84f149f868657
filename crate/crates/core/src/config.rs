//! Strict TOML run configuration.
//!
//! ```toml
//! [geometry]
//! a = 4.0
//! b = 2.0
//! [medium]
//! density = 2e-3
//! detuning = 1.0
//! [scan]
//! lengths = [400, 600, 800]
//! realizations = 256
//! ```
//!
//! Geometry, density, detuning and the length list have no defaults. Every
//! other key falls back to the documented default. Unknown sections and keys
//! are rejected with the closest known spelling.

use std::path::Path;

use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::analysis::FitRange;
use crate::dipole::SourceSpec;
use crate::error::{Error, Result};
use crate::geometry::WaveguideGeometry;
use crate::green::{KernelOptions, Point3};
use crate::transport::{DetectorGrid, SimulationConfig, DEFAULT_MIN_SEPARATION};

/// `(section, key, required)`.
const KEYS: &[(&str, &str, bool)] = &[
    ("geometry", "a", true),
    ("geometry", "b", true),
    ("medium", "density", true),
    ("medium", "detuning", true),
    ("medium", "min_separation", false),
    ("source", "position", false),
    ("source", "orientation", false),
    ("detector", "z_offset", false),
    ("detector", "nx", false),
    ("detector", "ny", false),
    ("scan", "lengths", true),
    ("scan", "realizations", false),
    ("kernel", "damping_length", false),
    ("kernel", "damping_levels", false),
    ("kernel", "truncation_factor", false),
    ("kernel", "image_tolerance", false),
    ("kernel", "mode_evanescent_cutoff", false),
    ("kernel", "crossover_dz", false),
    ("rng", "master_seed", false),
    ("analysis", "fit_min_length", false),
    ("analysis", "fit_max_length", false),
    ("analysis", "fit_mfp_factor", false),
];

/// Default fit window: `L >= 2 l_ph`.
pub const DEFAULT_FIT_MFP_FACTOR: f64 = 2.0;

/// Fit window settings. Explicit bounds win over the mean-free-path rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalysisOptions {
    pub fit_min_length: Option<f64>,
    pub fit_max_length: Option<f64>,
    pub fit_mfp_factor: f64,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self {
            fit_min_length: None,
            fit_max_length: None,
            fit_mfp_factor: DEFAULT_FIT_MFP_FACTOR,
        }
    }
}

impl AnalysisOptions {
    pub fn fit_range(&self, density: f64, detuning: f64) -> Result<FitRange> {
        let mut range = FitRange::beyond_mean_free_path(density, detuning, self.fit_mfp_factor)?;
        if let Some(min) = self.fit_min_length {
            range.min = min;
        }
        if let Some(max) = self.fit_max_length {
            range.max = max;
        }
        Ok(range)
    }
}

/// A parsed run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub simulation: SimulationConfig,
    pub analysis: AnalysisOptions,
}

impl RunConfig {
    pub fn fit_range(&self) -> Result<FitRange> {
        self.analysis
            .fit_range(self.simulation.density, self.simulation.detuning)
    }
}

pub fn parse_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config_str(&text)
}

fn suggest(section: &str, key: Option<&str>) -> String {
    let candidates: Vec<String> = match key {
        None => {
            let mut s: Vec<String> = KEYS.iter().map(|(s, _, _)| s.to_string()).collect();
            s.dedup();
            s
        }
        Some(_) => KEYS.iter().map(|(s, k, _)| format!("{s}.{k}")).collect(),
    };
    let probe = match key {
        None => section.to_string(),
        Some(k) => format!("{section}.{k}"),
    };
    let bare = key.unwrap_or(section);
    let best = candidates
        .iter()
        .map(|c| {
            let tail = c.rsplit('.').next().unwrap_or(c);
            let d = strsim::damerau_levenshtein(&probe, c).min(strsim::damerau_levenshtein(bare, tail));
            (d, c)
        })
        .min_by_key(|(d, _)| *d);
    match best {
        Some((d, c)) if d <= 3 => format!("; did you mean `{c}`?"),
        _ => String::new(),
    }
}

fn is_known(section: &str, key: &str) -> bool {
    KEYS.iter().any(|(s, k, _)| *s == section && *k == key)
}

pub fn parse_config_str(text: &str) -> Result<RunConfig> {
    let table: Table = text
        .parse()
        .map_err(|e: toml::de::Error| Error::Parse(format!("invalid TOML: {}", e.message())))?;

    for (section, value) in &table {
        if !KEYS.iter().any(|(s, _, _)| s == section) {
            return Err(Error::Parse(format!("unknown section `{section}`{}", suggest(section, None))));
        }
        let Value::Table(inner) = value else {
            return Err(Error::Parse(format!("`{section}` must be a table")));
        };
        for key in inner.keys() {
            if !is_known(section, key) {
                return Err(Error::Parse(format!(
                    "unknown key `{section}.{key}`{}",
                    suggest(section, Some(key))
                )));
            }
        }
    }
    let get = |section: &str, key: &str| table.get(section).and_then(|s| s.get(key));
    let missing: Vec<String> = KEYS
        .iter()
        .filter(|(s, k, req)| *req && get(s, k).is_none())
        .map(|(s, k, _)| format!("{s}.{k}"))
        .collect();
    if !missing.is_empty() {
        return Err(Error::Parse(format!("missing required keys: {}", missing.join(", "))));
    }

    let num = |s: &str, k: &str| -> Result<Option<f64>> { get(s, k).map(|v| as_f64(v, s, k)).transpose() };
    let count = |s: &str, k: &str| -> Result<Option<u64>> { get(s, k).map(|v| as_u64(v, s, k)).transpose() };
    let req = |s: &str, k: &str| -> Result<f64> { Ok(num(s, k)?.expect("presence checked")) };

    let geom = WaveguideGeometry::new(req("geometry", "a")?, req("geometry", "b")?)
        .map_err(|e| Error::Parse(format!("geometry: {e}")))?;
    let density = req("medium", "density")?;
    let detuning = req("medium", "detuning")?;
    let lengths = as_f64_list(get("scan", "lengths").expect("presence checked"), "scan", "lengths")?;

    let position = get("source", "position")
        .map(|v| as_vec3(v, "source", "position"))
        .transpose()?
        .unwrap_or(Point3::new(geom.a / 2.0, geom.b / 2.0, -500.0));
    let orientation = get("source", "orientation")
        .map(|v| as_vec3(v, "source", "orientation"))
        .transpose()?
        .unwrap_or(Point3::new(0.0, 1.0, 0.0));
    let source = SourceSpec::new(position, orientation, detuning, &geom)
        .map_err(|e| Error::Parse(format!("source: {e}")))?;

    let dd = DetectorGrid::default();
    let detector = DetectorGrid {
        z_offset: num("detector", "z_offset")?.unwrap_or(dd.z_offset),
        nx: count("detector", "nx")?.map_or(dd.nx, |v| v as usize),
        ny: count("detector", "ny")?.map_or(dd.ny, |v| v as usize),
    };
    let kd = KernelOptions::default();
    let kernel = KernelOptions {
        damping_length: num("kernel", "damping_length")?.unwrap_or(kd.damping_length),
        damping_levels: count("kernel", "damping_levels")?.map_or(kd.damping_levels, |v| v as usize),
        truncation_factor: num("kernel", "truncation_factor")?.unwrap_or(kd.truncation_factor),
        image_tolerance: num("kernel", "image_tolerance")?.unwrap_or(kd.image_tolerance),
        mode_evanescent_cutoff: num("kernel", "mode_evanescent_cutoff")?.unwrap_or(kd.mode_evanescent_cutoff),
        crossover_dz: num("kernel", "crossover_dz")?.unwrap_or(kd.crossover_dz),
    };
    let simulation = SimulationConfig {
        geom,
        density,
        detuning,
        lengths,
        realizations_per_length: count("scan", "realizations")?.map_or(256, |v| v as usize),
        master_seed: count("rng", "master_seed")?.unwrap_or(0),
        source,
        detector,
        kernel,
        min_separation: num("medium", "min_separation")?.unwrap_or(DEFAULT_MIN_SEPARATION),
    };
    simulation.validate().map_err(|e| match e {
        Error::Configuration(m) => Error::Parse(m),
        other => other,
    })?;
    let analysis = AnalysisOptions {
        fit_min_length: num("analysis", "fit_min_length")?,
        fit_max_length: num("analysis", "fit_max_length")?,
        fit_mfp_factor: num("analysis", "fit_mfp_factor")?.unwrap_or(DEFAULT_FIT_MFP_FACTOR),
    };
    Ok(RunConfig { simulation, analysis })
}

fn type_error(section: &str, key: &str, want: &str) -> Error {
    Error::Parse(format!("`{section}.{key}` must be {want}"))
}

fn as_f64(v: &Value, s: &str, k: &str) -> Result<f64> {
    match v {
        Value::Float(f) => Ok(*f),
        Value::Integer(i) => Ok(*i as f64),
        _ => Err(type_error(s, k, "a number")),
    }
}

fn as_u64(v: &Value, s: &str, k: &str) -> Result<u64> {
    match v {
        Value::Integer(i) if *i >= 0 => Ok(*i as u64),
        // Seeds above i64::MAX do not fit a TOML integer.
        Value::String(t) => t.parse().map_err(|_| type_error(s, k, "a non-negative integer")),
        _ => Err(type_error(s, k, "a non-negative integer")),
    }
}

fn as_f64_list(v: &Value, s: &str, k: &str) -> Result<Vec<f64>> {
    match v {
        Value::Array(items) => items.iter().map(|x| as_f64(x, s, k)).collect(),
        _ => Err(type_error(s, k, "an array of numbers")),
    }
}

fn as_vec3(v: &Value, s: &str, k: &str) -> Result<Point3> {
    let xs = as_f64_list(v, s, k)?;
    if xs.len() != 3 {
        return Err(type_error(s, k, "an array of three numbers"));
    }
    Ok(Point3::new(xs[0], xs[1], xs[2]))
}
