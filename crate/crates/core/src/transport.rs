//! Random realizations, the atom-detector measurement of transmitted
//! intensity, and Monte Carlo transmission curves `T(L)`.

use nalgebra::{DVector, Vector3};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dipole::{assemble_sigma, stationary_amplitudes, Realization, SeedTag, SourceSpec};
use crate::error::{Error, Result};
use crate::geometry::WaveguideGeometry;
use crate::green::{waveguide_dyadic, KernelOptions, Point3};

/// Resonant wavenumber; all lengths are in `1/k0`.
pub const K0: f64 = 1.0;

/// Default minimum pairwise separation of atoms.
pub const DEFAULT_MIN_SEPARATION: f64 = 0.05;

/// Placement attempts per atom before giving up.
pub const MAX_ATTEMPTS_PER_ATOM: usize = 10_000;

/// Fraction of failed realizations above which an L point is dropped.
pub const MAX_FAILURE_FRACTION: f64 = 0.1;

/// Detector plane beyond the sample, sampled at cell centres and summed over
/// the three Cartesian detector orientations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorGrid {
    /// Distance of the plane from the far edge of the sample.
    pub z_offset: f64,
    pub nx: usize,
    pub ny: usize,
}

impl Default for DetectorGrid {
    fn default() -> Self {
        Self {
            z_offset: 100.0,
            nx: 16,
            ny: 16,
        }
    }
}

impl DetectorGrid {
    pub fn validate(&self) -> Result<()> {
        if !(self.z_offset >= 50.0) || !self.z_offset.is_finite() {
            return Err(Error::Configuration(format!(
                "detector.z_offset must be at least 50, got {}",
                self.z_offset
            )));
        }
        if self.nx < 8 || self.ny < 8 {
            return Err(Error::Configuration(format!(
                "detector grid must be at least 8x8, got {}x{}",
                self.nx, self.ny
            )));
        }
        Ok(())
    }

    /// Cell-centre sampling points for a sample of length `length`.
    pub fn points(&self, geom: &WaveguideGeometry, length: f64) -> Vec<Point3> {
        let z = length + self.z_offset;
        let (dx, dy) = (geom.a / self.nx as f64, geom.b / self.ny as f64);
        (0..self.nx)
            .flat_map(|i| (0..self.ny).map(move |j| Point3::new((i as f64 + 0.5) * dx, (j as f64 + 0.5) * dy, z)))
            .collect()
    }
}

/// Everything a transmission scan needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub geom: WaveguideGeometry,
    /// Atomic density in `k0^3` units.
    pub density: f64,
    /// Probe detuning in `gamma0` units.
    pub detuning: f64,
    pub lengths: Vec<f64>,
    pub realizations_per_length: usize,
    pub master_seed: u64,
    pub source: SourceSpec,
    pub detector: DetectorGrid,
    pub kernel: KernelOptions,
    pub min_separation: f64,
}

impl SimulationConfig {
    /// Defaults: source on the axis at `z = -500` with `y` orientation,
    /// default detector and kernel options.
    pub fn new(geom: WaveguideGeometry, density: f64, detuning: f64, lengths: Vec<f64>) -> Result<Self> {
        let source = SourceSpec::new(
            Point3::new(geom.a / 2.0, geom.b / 2.0, -500.0),
            Point3::new(0.0, 1.0, 0.0),
            detuning,
            &geom,
        )?;
        let cfg = Self {
            geom,
            density,
            detuning,
            lengths,
            realizations_per_length: 256,
            master_seed: 0,
            source,
            detector: DetectorGrid::default(),
            kernel: KernelOptions::default(),
            min_separation: DEFAULT_MIN_SEPARATION,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let cfg = |m: String| Err(Error::Configuration(m));
        if !(self.density > 0.0) || !self.density.is_finite() {
            return cfg(format!("medium.density must be positive, got {}", self.density));
        }
        if !self.detuning.is_finite() {
            return cfg("medium.detuning must be finite".into());
        }
        if self.source.detuning != self.detuning {
            return cfg("source detuning differs from medium.detuning".into());
        }
        if self.lengths.is_empty() {
            return cfg("scan.lengths must not be empty".into());
        }
        if self.lengths.iter().any(|l| !(*l > 0.0) || !l.is_finite()) {
            return cfg("scan.lengths must be positive".into());
        }
        if self.lengths.windows(2).any(|w| !(w[1] > w[0])) {
            return cfg("scan.lengths must be strictly ascending".into());
        }
        if self.realizations_per_length == 0 {
            return cfg("scan.realizations must be at least 1".into());
        }
        if !(self.min_separation > 0.0) {
            return cfg("medium.min_separation must be positive".into());
        }
        if self.source.position.z >= 0.0 {
            return cfg("source must lie before the sample (z < 0)".into());
        }
        self.detector.validate()?;
        self.kernel.validate()
    }

    /// Atoms per realization at sample length `length`.
    pub fn atom_count(&self, length: f64) -> usize {
        (self.density * self.geom.area() * length).round() as usize
    }
}

/// Stream identifier of one realization: length index in the high word,
/// realization index in the low word.
pub fn stream_id(length_index: u32, realization_index: u32) -> u64 {
    (u64::from(length_index) << 32) | u64::from(realization_index)
}

/// Deterministic RNG of one realization.
pub fn realization_rng(master_seed: u64, length_index: u32, realization_index: u32) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(stream_id(length_index, realization_index));
    rng
}

/// Uniform positions in the sample volume with rejection of close pairs.
///
/// Atoms keep a margin of half the minimum separation from the walls, so
/// every image is at least `min_separation` away from every atom.
pub fn generate_realization(
    config: &SimulationConfig,
    length_index: u32,
    realization_index: u32,
) -> Result<Realization> {
    let length = *config.lengths.get(length_index as usize).ok_or_else(|| {
        Error::Precondition(format!("length index {length_index} outside the scan"))
    })?;
    let geom = config.geom;
    let r_min = config.min_separation;
    let margin = 0.5 * r_min;
    if geom.a <= 2.0 * margin || geom.b <= 2.0 * margin {
        return Err(Error::Configuration("cross-section smaller than the wall margin".into()));
    }
    let n = config.atom_count(length);
    let mut rng = realization_rng(config.master_seed, length_index, realization_index);
    let mut positions: Vec<Point3> = Vec::with_capacity(n);
    let r_min2 = r_min * r_min;
    for i in 0..n {
        let mut placed = false;
        for _ in 0..MAX_ATTEMPTS_PER_ATOM {
            let p = Point3::new(
                rng.gen_range(margin..geom.a - margin),
                rng.gen_range(margin..geom.b - margin),
                rng.gen_range(0.0..length),
            );
            if positions.iter().all(|q| (p - q).norm_squared() >= r_min2) {
                positions.push(p);
                placed = true;
                break;
            }
        }
        if !placed {
            return Err(Error::Configuration(format!(
                "could not place atom {i} of {n} with separation {r_min} after {MAX_ATTEMPTS_PER_ATOM} attempts"
            )));
        }
    }
    Realization::new(
        positions,
        geom,
        length,
        r_min,
        SeedTag {
            master_seed: config.master_seed,
            length_index,
            realization_index,
        },
    )
}

/// Field at `r_d`: direct source field plus the field re-radiated by every
/// dipole. Common prefactors cancel in `T` and are set to 1.
pub fn field_at_point(
    amplitudes: &DVector<Complex64>,
    real: &Realization,
    source: &SourceSpec,
    r_d: &Point3,
    k: f64,
    opts: &KernelOptions,
) -> Result<Vector3<Complex64>> {
    field_with_source_amplitude(amplitudes, real, source, Complex64::new(1.0, 0.0), r_d, k, opts)
}

fn field_with_source_amplitude(
    amplitudes: &DVector<Complex64>,
    real: &Realization,
    source: &SourceSpec,
    source_amplitude: Complex64,
    r_d: &Point3,
    k: f64,
    opts: &KernelOptions,
) -> Result<Vector3<Complex64>> {
    if amplitudes.len() != 3 * real.n_atoms() {
        return Err(Error::Precondition("amplitude vector does not match the realization".into()));
    }
    let geom = real.geometry();
    let mut e = waveguide_dyadic(r_d, &source.position, geom, k, opts)?.apply_real(&source.orientation) * source_amplitude;
    for (i, p) in real.positions().iter().enumerate() {
        let b = amplitudes.fixed_rows::<3>(3 * i).into_owned();
        e += waveguide_dyadic(r_d, p, geom, k, opts)?.apply(&b);
    }
    Ok(e)
}

/// One realization's transmission and solver residual.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransmissionSample {
    pub transmission: f64,
    pub residual: f64,
}

/// `T = I / I0`, intensities averaged over the detector grid and summed over
/// polarizations, with (`I`) and without (`I0`) the ensemble.
pub fn transmission_one(
    real: &Realization,
    source: &SourceSpec,
    detector: &DetectorGrid,
    k: f64,
    opts: &KernelOptions,
) -> Result<TransmissionSample> {
    transmission_with_source_amplitude(real, source, Complex64::new(1.0, 0.0), detector, k, opts)
}

/// As [`transmission_one`] with the source emitting `source_amplitude`
/// instead of unit amplitude.
pub fn transmission_with_source_amplitude(
    real: &Realization,
    source: &SourceSpec,
    source_amplitude: Complex64,
    detector: &DetectorGrid,
    k: f64,
    opts: &KernelOptions,
) -> Result<TransmissionSample> {
    let sigma = assemble_sigma(real, k, opts)?;
    let mut response = stationary_amplitudes(&sigma, source, real, k, opts)?;
    response.amplitudes *= source_amplitude;
    let empty = DVector::zeros(0);
    let bare = Realization::new(vec![], *real.geometry(), real.length(), 1.0, real.seed_tag())?;
    let points = detector.points(real.geometry(), real.length());
    let (mut i_full, mut i_bare) = (0.0, 0.0);
    for r_d in &points {
        i_full += field_with_source_amplitude(&response.amplitudes, real, source, source_amplitude, r_d, k, opts)?
            .norm_squared();
        i_bare += field_with_source_amplitude(&empty, &bare, source, source_amplitude, r_d, k, opts)?.norm_squared();
    }
    if !(i_bare > 0.0) {
        return Err(Error::Measurement("incident intensity vanishes on the detector grid".into()));
    }
    let t = i_full / i_bare;
    if !t.is_finite() {
        return Err(Error::Measurement("non-finite transmission".into()));
    }
    Ok(TransmissionSample {
        transmission: t,
        residual: response.residual,
    })
}

/// Aggregate of one sample length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub length: f64,
    pub length_index: u32,
    pub atoms: usize,
    /// Arithmetic mean of `T`.
    pub mean: f64,
    /// Standard error of the mean (zero for a single realization).
    pub stderr: f64,
    /// `exp <ln T>`.
    pub geomean: f64,
    /// Successful realizations.
    pub n_realizations: usize,
    pub failures: usize,
    pub max_residual: f64,
    /// Per-realization values in realization order; `None` marks a failure.
    pub samples: Vec<Option<f64>>,
}

/// An L point dropped because too many realizations failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailedPoint {
    pub length: f64,
    pub length_index: u32,
    pub failures: usize,
    pub attempted: usize,
    pub first_error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransmissionCurve {
    pub points: Vec<CurvePoint>,
    pub failed: Vec<FailedPoint>,
}

impl TransmissionCurve {
    pub fn lengths(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.length).collect()
    }
}

/// Mean, standard error of the mean and geometric mean of `values`.
pub fn summarize(values: &[f64]) -> (f64, f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let stderr = if values.len() > 1 {
        let var = values.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (var / n).sqrt()
    } else {
        0.0
    };
    let geomean = (values.iter().map(|t| t.ln()).sum::<f64>() / n).exp();
    (mean, stderr, geomean)
}

/// Monte Carlo scan over all sample lengths. Realizations run in parallel;
/// results are reduced in realization order, so the curve does not depend
/// on the thread count.
pub fn scan_curve(config: &SimulationConfig) -> Result<TransmissionCurve> {
    scan_curve_with_progress(config, |_, _| {})
}

/// As [`scan_curve`], calling `progress(length_index, seconds)` after each
/// L point.
pub fn scan_curve_with_progress<F>(config: &SimulationConfig, mut progress: F) -> Result<TransmissionCurve>
where
    F: FnMut(u32, f64),
{
    config.validate()?;
    let mut points = Vec::new();
    let mut failed = Vec::new();
    for (li, &length) in config.lengths.iter().enumerate() {
        let started = std::time::Instant::now();
        let li = li as u32;
        let outcomes: Vec<Result<TransmissionSample>> = (0..config.realizations_per_length as u32)
            .into_par_iter()
            .map(|ri| {
                let real = generate_realization(config, li, ri)?;
                transmission_one(&real, &config.source, &config.detector, K0, &config.kernel)
            })
            .collect();
        // Configuration problems are not per-realization noise.
        if let Some(pos) = outcomes.iter().position(|o| matches!(o, Err(Error::Configuration(_)))) {
            return Err(outcomes.into_iter().nth(pos).and_then(|o| o.err()).expect("located above"));
        }
        let attempted = outcomes.len();
        let good: Vec<&TransmissionSample> = outcomes.iter().filter_map(|o| o.as_ref().ok()).collect();
        let failures = attempted - good.len();
        if failures as f64 > MAX_FAILURE_FRACTION * attempted as f64 || good.is_empty() {
            let first_error = outcomes
                .iter()
                .find_map(|o| o.as_ref().err().map(|e| e.to_string()))
                .unwrap_or_default();
            failed.push(FailedPoint {
                length,
                length_index: li,
                failures,
                attempted,
                first_error,
            });
        } else {
            let values: Vec<f64> = good.iter().map(|s| s.transmission).collect();
            let (mean, stderr, geomean) = summarize(&values);
            points.push(CurvePoint {
                length,
                length_index: li,
                atoms: config.atom_count(length),
                mean,
                stderr,
                geomean,
                n_realizations: good.len(),
                failures,
                max_residual: good.iter().fold(0.0, |m, s| m.max(s.residual)),
                samples: outcomes.iter().map(|o| o.as_ref().ok().map(|s| s.transmission)).collect(),
            });
        }
        progress(li, started.elapsed().as_secs_f64());
    }
    Ok(TransmissionCurve { points, failed })
}
