//! Dyadic Green tensors coupling point dipoles in free space and inside the
//! perfectly conducting rectangular guide.
//!
//! Normalization: the tensor `g` is dimensionless and scaled so that the
//! imaginary part of its free-space self-limit is the identity. The coupling
//! matrix of the dipole ensemble is then `Sigma = -(gamma0 / 2) g`, and a
//! single atom in vacuum decays at `gamma0`. In terms of the textbook electric
//! Green dyadic `G_e` (solution of `curl curl G_e - k^2 G_e = I delta`) this
//! is `g = (6 pi / k) G_e`.
//!
//! Inside the guide two independent constructions are provided:
//!
//! * [`waveguide_dyadic_imagesum`]: the free-space dyadic summed over the
//!   two-dimensional lattice of mirror images generated by the four walls.
//!   Inherits the free-space normalization exactly; accurate at short
//!   longitudinal separation.
//! * [`waveguide_dyadic_modesum`]: the eigenmode expansion, converging
//!   exponentially in `|z - z'|`.
//!
//! [`waveguide_dyadic`] dispatches between them on `|z - z'|`, and
//! [`waveguide_self_term`] supplies the regularized coincident-point block.

mod freespace;
mod images;
mod modes;

pub mod golden;

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::WaveguideGeometry;

pub use freespace::freespace_dyadic;
pub use images::waveguide_dyadic_imagesum;
pub use modes::{propagating_part, waveguide_dyadic_modesum};

pub type Point3 = Vector3<f64>;

/// A 3x3 complex dyadic, row index = field component, column index = dipole
/// component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreenTensor(pub Matrix3<Complex64>);

impl GreenTensor {
    pub fn zeros() -> Self {
        Self(Matrix3::zeros())
    }

    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }

    /// Largest entry modulus.
    pub fn max_norm(&self) -> f64 {
        self.0.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
    }

    /// `max |self - other| / max |other|`, falling back to the absolute
    /// difference when `other` vanishes.
    pub fn relative_difference(&self, other: &GreenTensor) -> f64 {
        let diff = GreenTensor(self.0 - other.0).max_norm();
        let scale = other.max_norm();
        if scale > 0.0 {
            diff / scale
        } else {
            diff
        }
    }

    /// Field radiated by a dipole `p`: `g . p`.
    pub fn apply(&self, p: &Vector3<Complex64>) -> Vector3<Complex64> {
        self.0 * p
    }

    pub fn apply_real(&self, p: &Point3) -> Vector3<Complex64> {
        self.0 * p.map(|c| Complex64::new(c, 0.0))
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.0[(row, col)]
    }
}

/// Numerical controls of the guided kernels. Lengths are in `1/k0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelOptions {
    /// Largest Gaussian damping length of the image lattice sum.
    pub damping_length: f64,
    /// Number of damping lengths used for the extrapolation to zero damping.
    /// Successive lengths shrink by a factor `2^(1/4)`.
    pub damping_levels: usize,
    /// Images farther (transversely) than this multiple of the largest
    /// damping length are dropped.
    pub truncation_factor: f64,
    /// Maximum relative change between the last two extrapolation orders
    /// before the image sum is declared unconverged.
    pub image_tolerance: f64,
    /// Evanescent modes whose attenuation `exp(-kappa |dz|)` falls below this
    /// value are dropped from the mode sum.
    pub mode_evanescent_cutoff: f64,
    /// `|z - z'|` below which the dispatcher uses the image sum.
    pub crossover_dz: f64,
}

impl Default for KernelOptions {
    fn default() -> Self {
        Self {
            damping_length: 170.0,
            damping_levels: 6,
            truncation_factor: 5.0,
            image_tolerance: 1e-6,
            mode_evanescent_cutoff: 1e-18,
            crossover_dz: 3.0,
        }
    }
}

impl KernelOptions {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Configuration(format!("kernel.{name} must be positive, got {v}")))
            }
        };
        positive("damping_length", self.damping_length)?;
        positive("truncation_factor", self.truncation_factor)?;
        positive("image_tolerance", self.image_tolerance)?;
        positive("mode_evanescent_cutoff", self.mode_evanescent_cutoff)?;
        positive("crossover_dz", self.crossover_dz)?;
        if self.mode_evanescent_cutoff >= 1.0 {
            return Err(Error::Configuration(
                "kernel.mode_evanescent_cutoff must be below 1".into(),
            ));
        }
        if !(2..=12).contains(&self.damping_levels) {
            return Err(Error::Configuration(format!(
                "kernel.damping_levels must lie in 2..=12, got {}",
                self.damping_levels
            )));
        }
        Ok(())
    }
}

/// Regularized coincident-point tensor of one atom at `r`.
///
/// The imaginary part is the exact radiative part, the propagating-mode terms
/// of the mode expansion at `z = z'`. The real part is the shift relative to
/// free space: the image sum without the direct (identity) image. The
/// divergent vacuum shift is taken as already absorbed into the resonance.
///
/// In wide guides with a mode very close to cutoff the damped image sum
/// cannot converge; the shift is then taken from the wall field
/// `g_modes - g_free` sampled on the axis through `r` at a few separations
/// `h` and extrapolated in `h^2` to zero. That field varies on the scale of
/// the distance to the nearest image, so the fallback is accurate only well
/// away from the walls.
pub fn waveguide_self_term(
    r: &Point3,
    geom: &WaveguideGeometry,
    k: f64,
    opts: &KernelOptions,
) -> Result<GreenTensor> {
    if !geom.contains_transverse(r.x, r.y) {
        return Err(Error::Precondition(format!(
            "self-term point ({}, {}) outside the cross-section",
            r.x, r.y
        )));
    }
    let shift = match images::image_sum(r, r, geom, k, opts, false) {
        Err(Error::Convergence { .. }) => wall_field_from_modes(r, r, geom, k, opts)?,
        other => other?,
    };
    let radiative = modes::propagating_part(r, r, geom, k)?;
    Ok(GreenTensor(shift.0.zip_map(&radiative.0, |s, d| {
        Complex64::new(s.re, d.im)
    })))
}

/// Guided dyadic between `r` (observation) and `rp` (source): the image sum for
/// `|z - z'| < crossover_dz`, the mode sum beyond, and the self-term when the
/// points coincide. Where the image sum cannot converge (wide guides near a
/// mode cutoff) the mode sum is used instead, directly for
/// `|z - z'| >= MODE_FALLBACK_MIN_DZ` and through the extrapolated wall
/// field below that.
pub fn waveguide_dyadic(
    r: &Point3,
    rp: &Point3,
    geom: &WaveguideGeometry,
    k: f64,
    opts: &KernelOptions,
) -> Result<GreenTensor> {
    if r == rp {
        return waveguide_self_term(r, geom, k, opts);
    }
    let dz = (r.z - rp.z).abs();
    if dz < opts.crossover_dz {
        match waveguide_dyadic_imagesum(r, rp, geom, k, opts) {
            Err(Error::Convergence { .. }) if dz >= MODE_FALLBACK_MIN_DZ => {
                waveguide_dyadic_modesum(r, rp, geom, k, opts)
            }
            Err(Error::Convergence { .. }) => {
                let wall = wall_field_from_modes(r, rp, geom, k, opts)?;
                Ok(GreenTensor(freespace_dyadic(&(r - rp), k)?.0 + wall.0))
            }
            other => other,
        }
    } else {
        waveguide_dyadic_modesum(r, rp, geom, k, opts)
    }
}

/// Smallest `|z - z'|` at which the dispatcher falls back to the mode sum
/// when the image sum does not converge; below it the evanescent series
/// becomes too long.
pub const MODE_FALLBACK_MIN_DZ: f64 = 0.5;

/// Axial half-widths of the stencil used by the wall-field fallback.
const SHIFT_SAMPLES: [f64; 4] = [1.0, 1.5, 2.0, 2.5];

/// Wall part `g - g_free` at `(r, rp)` from mode sums at axial separations
/// `dz +- h`, extrapolated in `h^2` to zero. Valid for `|dz| < 0.5`.
fn wall_field_from_modes(r: &Point3, rp: &Point3, geom: &WaveguideGeometry, k: f64, opts: &KernelOptions) -> Result<GreenTensor> {
    let mut hs = Vec::with_capacity(SHIFT_SAMPLES.len());
    let mut values = Vec::with_capacity(SHIFT_SAMPLES.len());
    for &h in &SHIFT_SAMPLES {
        let offset = Point3::new(0.0, 0.0, h);
        let wall = |obs: Point3| -> Result<Matrix3<Complex64>> {
            Ok(waveguide_dyadic_modesum(&obs, rp, geom, k, opts)?.0 - freespace_dyadic(&(obs - rp), k)?.0)
        };
        // Averaging +h and -h cancels the odd orders.
        hs.push(h * h);
        values.push((wall(r + offset)? + wall(r - offset)?) * Complex64::from(0.5));
    }
    Ok(GreenTensor(images::extrapolate_to_zero(&hs, &values)))
}

pub(crate) fn check_inside(p: &Point3, geom: &WaveguideGeometry, what: &str) -> Result<()> {
    let inside = p.x >= 0.0 && p.x <= geom.a && p.y >= 0.0 && p.y <= geom.b && p.z.is_finite();
    if inside {
        Ok(())
    } else {
        Err(Error::Precondition(format!(
            "{what} ({}, {}, {}) lies outside the waveguide",
            p.x, p.y, p.z
        )))
    }
}
