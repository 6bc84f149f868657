//! Waveguide geometry and the TE/TM mode census.
//!
//! # Units
//!
//! Every public quantity in this crate is expressed in natural units of the
//! atomic transition: lengths in units of `1/k0 = c/omega0`, rates and
//! detunings in units of the free-space linewidth `gamma0`, and `k0 = gamma0 =
//! c = 1`. A density of `2e-3` therefore means `2e-3 * k0^3`, and a waveguide
//! side `a = 4` is `4/k0`.
//!
//! The guide is a perfectly conducting tube of rectangular cross-section
//! `[0, a] x [0, b]` whose axis is `z`.

use std::cmp::Ordering;
use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative distance `|k - k_c| / k` below which a mode counts as sitting
/// exactly at cutoff.
pub const CUTOFF_GUARD: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveguideGeometry {
    pub a: f64,
    pub b: f64,
}

impl WaveguideGeometry {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && a.is_finite() && b > 0.0 && b.is_finite()) {
            return Err(Error::Domain(format!(
                "waveguide sides must be positive and finite, got a={a}, b={b}"
            )));
        }
        Ok(Self { a, b })
    }

    pub fn area(&self) -> f64 {
        self.a * self.b
    }

    /// Whether `(x, y)` lies strictly inside the cross-section.
    pub fn contains_transverse(&self, x: f64, y: f64) -> bool {
        x > 0.0 && x < self.a && y > 0.0 && y < self.b
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ModeFamily {
    TE,
    TM,
}

/// A guided mode `TE_mn` or `TM_mn`. Construct through [`ModeIndex::new`],
/// which rejects index pairs that carry no field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModeIndex {
    family: ModeFamily,
    m: u32,
    n: u32,
}

impl ModeIndex {
    pub fn new(family: ModeFamily, m: u32, n: u32) -> Result<Self> {
        let valid = match family {
            ModeFamily::TE => (m, n) != (0, 0),
            ModeFamily::TM => m >= 1 && n >= 1,
        };
        if !valid {
            return Err(Error::Domain(format!("{family:?}{m}{n} is not a valid mode")));
        }
        Ok(Self { family, m, n })
    }

    pub fn te(m: u32, n: u32) -> Result<Self> {
        Self::new(ModeFamily::TE, m, n)
    }

    pub fn tm(m: u32, n: u32) -> Result<Self> {
        Self::new(ModeFamily::TM, m, n)
    }

    pub fn family(&self) -> ModeFamily {
        self.family
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    /// The same mode with the transverse indices exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            family: self.family,
            m: self.n,
            n: self.m,
        }
    }
}

impl fmt::Display for ModeIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}{}{}", self.family, self.m, self.n)
    }
}

fn cutoff_squared(m: u32, n: u32, geom: &WaveguideGeometry) -> f64 {
    let km = f64::from(m) * PI / geom.a;
    let kn = f64::from(n) * PI / geom.b;
    km * km + kn * kn
}

/// Cutoff wavenumber `k_c = sqrt((m pi / a)^2 + (n pi / b)^2)`.
pub fn cutoff_wavenumber(mode: ModeIndex, geom: &WaveguideGeometry) -> f64 {
    cutoff_squared(mode.m, mode.n, geom).sqrt()
}

/// All TE and TM modes with `k_c < k`, ordered by ascending cutoff; ties go
/// TE before TM, then lexicographically by `(m, n)`.
pub fn propagating_modes(geom: &WaveguideGeometry, k: f64) -> Vec<ModeIndex> {
    if !(k > 0.0) {
        return Vec::new();
    }
    let m_max = (k * geom.a / PI).floor() as u32;
    let n_max = (k * geom.b / PI).floor() as u32;
    let mut modes: Vec<(f64, ModeIndex)> = Vec::new();
    for m in 0..=m_max {
        for n in 0..=n_max {
            let kc = cutoff_squared(m, n, geom).sqrt();
            if kc >= k {
                continue;
            }
            for family in [ModeFamily::TE, ModeFamily::TM] {
                if let Ok(mode) = ModeIndex::new(family, m, n) {
                    modes.push((kc, mode));
                }
            }
        }
    }
    modes.sort_by(|(ka, ma), (kb, mb)| {
        let tie = (ka - kb).abs() <= 1e-12 * ka.max(*kb);
        let by_cutoff = if tie {
            Ordering::Equal
        } else {
            ka.partial_cmp(kb).unwrap_or(Ordering::Equal)
        };
        by_cutoff
            .then(ma.family.cmp(&mb.family))
            .then((ma.m, ma.n).cmp(&(mb.m, mb.n)))
    });
    modes.into_iter().map(|(_, mode)| mode).collect()
}

/// Longitudinal wavenumber `k_z = sqrt(k^2 - k_c^2)`: real and positive for a
/// propagating mode, `i * sqrt(k_c^2 - k^2)` for an evanescent one.
pub fn longitudinal_wavenumber(
    mode: ModeIndex,
    geom: &WaveguideGeometry,
    k: f64,
) -> Result<Complex64> {
    let kc2 = cutoff_squared(mode.m, mode.n, geom);
    kz_from_cutoff_squared(kc2, k).map_err(|_| Error::SingularMode {
        mode: mode.to_string(),
        k,
    })
}

/// Branch-selected `k_z` for a transverse eigenvalue `kc2`. The `Err` payload
/// is unit; callers attach the mode label.
pub(crate) fn kz_from_cutoff_squared(kc2: f64, k: f64) -> std::result::Result<Complex64, ()> {
    let kc = kc2.sqrt();
    if (k - kc).abs() < CUTOFF_GUARD * k {
        return Err(());
    }
    let d = k * k - kc2;
    if d > 0.0 {
        Ok(Complex64::new(d.sqrt(), 0.0))
    } else {
        Ok(Complex64::new(0.0, (-d).sqrt()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn g(a: f64, b: f64) -> WaveguideGeometry {
        WaveguideGeometry::new(a, b).unwrap()
    }

    #[test]
    fn cutoffs_of_the_single_mode_guide() {
        let geom = g(4.0, 2.0);
        assert_abs_diff_eq!(cutoff_wavenumber(ModeIndex::te(1, 0).unwrap(), &geom), PI / 4.0, epsilon = 1e-15);
        assert_abs_diff_eq!(cutoff_wavenumber(ModeIndex::te(0, 1).unwrap(), &geom), PI / 2.0, epsilon = 1e-15);
        let wide = g(1e6, 2.0);
        assert!(cutoff_wavenumber(ModeIndex::te(1, 0).unwrap(), &wide) < 1e-5);
    }

    #[test]
    fn invalid_indices_are_rejected() {
        assert!(ModeIndex::te(0, 0).is_err());
        assert!(ModeIndex::tm(1, 0).is_err());
        assert!(ModeIndex::tm(0, 3).is_err());
        assert!(ModeIndex::tm(1, 1).is_ok());
        assert!(WaveguideGeometry::new(0.0, 1.0).is_err());
        assert!(WaveguideGeometry::new(1.0, f64::NAN).is_err());
    }

    #[test]
    fn census_single_mode_and_below_cutoff() {
        assert_eq!(propagating_modes(&g(4.0, 2.0), 1.0), vec![ModeIndex::te(1, 0).unwrap()]);
        assert!(propagating_modes(&g(1.0, 1.0), 1.0).is_empty());
    }

    #[test]
    fn census_square_guide_has_ten_modes() {
        let modes = propagating_modes(&g(8.0, 8.0), 1.0);
        let names: Vec<String> = modes.iter().map(|m| m.to_string()).collect();
        assert_eq!(
            names,
            ["TE01", "TE10", "TE11", "TM11", "TE02", "TE20", "TE12", "TE21", "TM12", "TM21"]
        );
    }

    #[test]
    fn dispersion_values() {
        let geom = g(4.0, 2.0);
        let kz = longitudinal_wavenumber(ModeIndex::te(1, 0).unwrap(), &geom, 1.0).unwrap();
        assert_abs_diff_eq!(kz.re, (1.0 - PI * PI / 16.0).sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(kz.re, 0.6190, epsilon = 1e-4);
        assert_eq!(kz.im, 0.0);
        let kz = longitudinal_wavenumber(ModeIndex::te(0, 1).unwrap(), &geom, 1.0).unwrap();
        assert_eq!(kz.re, 0.0);
        assert_abs_diff_eq!(kz.im, 1.2114, epsilon = 1e-4);
    }

    #[test]
    fn exactly_at_cutoff_is_singular() {
        let geom = g(PI, 2.0);
        let err = longitudinal_wavenumber(ModeIndex::te(1, 0).unwrap(), &geom, 1.0).unwrap_err();
        assert!(matches!(err, Error::SingularMode { .. }));
    }
}
