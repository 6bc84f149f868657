//! Method of images for the perfectly conducting rectangular tube.
//!
//! Mirroring a dipole in a conducting plane keeps its normal component and
//! flips the tangential ones. The walls `x = 0, a` and `y = 0, b` generate
//! the image lattice `(2 p a + sx x', 2 q b + sy y', z')`, `p, q` integers and
//! `sx, sy = +-1`; an image with `sx = -1` carries `diag(+1, -1, -1)`, one
//! with `sy = -1` carries `diag(-1, +1, -1)`, and both apply together.
//!
//! The lattice sum of the `1/rho`-decaying oscillating free-space field is
//! only conditionally convergent. Each image is weighted by
//! `exp(-(rho / L_j)^2)`, `rho` being its transverse distance from the
//! observation point, for a ladder of damping lengths `L_j`. The damped sum
//! differs from the undamped limit by a power series in `1/L_j^2`, which is
//! removed by polynomial extrapolation (Neville) to `1/L^2 = 0`. The radial
//! weight keeps the summand smooth (so no spurious algebraic tail) and is
//! symmetric under exchanging source and observer, which preserves
//! reciprocity.

use nalgebra::Matrix3;
use num_complex::Complex64;

use super::freespace::dyadic_coefficients;
use super::{check_inside, GreenTensor, KernelOptions, Point3};
use crate::error::{Error, Result};
use crate::geometry::WaveguideGeometry;

/// Ratio between successive damping lengths. Fixed so that the weights of
/// all levels follow from two exponentials per image.
const LEVEL_RATIO_SQUARED: f64 = std::f64::consts::SQRT_2;

/// Weights below this are dropped; the sum of all dropped terms stays below
/// double rounding of the undamped lattice field.
const NEGLIGIBLE_WEIGHT: f64 = 1e-22;

/// Guided dyadic from the damped, extrapolated image lattice, direct
/// (free-space) term included.
pub fn waveguide_dyadic_imagesum(
    r: &Point3,
    rp: &Point3,
    geom: &WaveguideGeometry,
    k: f64,
    opts: &KernelOptions,
) -> Result<GreenTensor> {
    if r == rp {
        return Err(Error::Precondition(
            "image sum with coincident points; use the self-term".into(),
        ));
    }
    image_sum(r, rp, geom, k, opts, true)
}

#[derive(Clone, Copy, Default)]
struct LevelSums {
    /// Sum of weighted `A`.
    a: Complex64,
    /// Sum of weighted `B u_i u_j`, ordered xx, yy, zz, xy, xz, yz.
    b: [Complex64; 6],
}

/// Image sum at `r` from a dipole at `rp`. With `include_identity = false`
/// the direct image is skipped (used for the self-term shift).
pub(crate) fn image_sum(
    r: &Point3,
    rp: &Point3,
    geom: &WaveguideGeometry,
    k: f64,
    opts: &KernelOptions,
    include_identity: bool,
) -> Result<GreenTensor> {
    check_inside(r, geom, "observation point")?;
    check_inside(rp, geom, "source point")?;
    let levels = opts.damping_levels;
    // L_j^2 for j = 0 (largest) .. levels - 1.
    let lengths_sq: Vec<f64> = (0..levels)
        .map(|j| opts.damping_length.powi(2) / LEVEL_RATIO_SQUARED.powi(j as i32))
        .collect();
    let radius = opts.truncation_factor * opts.damping_length;
    let radius_sq = radius * radius;
    let inv_l0 = 1.0 / lengths_sq[0];

    let dz = r.z - rp.z;
    let dz2 = dz * dz;
    let (a, b) = (geom.a, geom.b);
    let mut values = vec![Matrix3::<Complex64>::zeros(); levels];
    let mut weights = vec![0.0; levels];

    for (sx, sy) in [(1.0, 1.0), (-1.0, 1.0), (1.0, -1.0), (-1.0, -1.0)] {
        let mut sums = vec![LevelSums::default(); levels];
        let x_img0 = sx * rp.x;
        let y_img0 = sy * rp.y;
        // dx = r.x - (2 p a + x_img0) must lie within [-radius, radius]
        let p_lo = ((r.x - x_img0 - radius) / (2.0 * a)).ceil() as i64;
        let p_hi = ((r.x - x_img0 + radius) / (2.0 * a)).floor() as i64;
        for p in p_lo..=p_hi {
            let dx = r.x - (2.0 * p as f64 * a + x_img0);
            let rem = radius_sq - dx * dx;
            if rem < 0.0 {
                continue;
            }
            let span = rem.sqrt();
            let q_lo = ((r.y - y_img0 - span) / (2.0 * b)).ceil() as i64;
            let q_hi = ((r.y - y_img0 + span) / (2.0 * b)).floor() as i64;
            for q in q_lo..=q_hi {
                if !include_identity && sx > 0.0 && sy > 0.0 && p == 0 && q == 0 {
                    continue;
                }
                let dy = r.y - (2.0 * q as f64 * b + y_img0);
                let rho2 = dx * dx + dy * dy;
                let dist2 = rho2 + dz2;
                if dist2 < 1e-24 {
                    return Err(Error::Precondition(format!(
                        "observation point coincides with an image of the source (p={p}, q={q})"
                    )));
                }
                let dist = dist2.sqrt();
                let (ca, cb) = dyadic_coefficients(dist, k);
                let inv = 1.0 / dist;
                let (ux, uy, uz) = (dx * inv, dy * inv, dz * inv);
                let uu = [ux * ux, uy * uy, uz * uz, ux * uy, ux * uz, uy * uz];
                level_weights(rho2 * inv_l0, &mut weights);
                for (s, &w) in sums.iter_mut().zip(&weights) {
                    // Weights fall monotonically with the level.
                    if w < NEGLIGIBLE_WEIGHT {
                        break;
                    }
                    s.a += ca * w;
                    let bw = cb * w;
                    for (acc, &f) in s.b.iter_mut().zip(&uu) {
                        *acc += bw * f;
                    }
                }
            }
        }
        // Column parity of this sublattice.
        let parity = [sy, sx, sx * sy];
        for (value, s) in values.iter_mut().zip(&sums) {
            let sym = [
                [s.a + s.b[0], s.b[3], s.b[4]],
                [s.b[3], s.a + s.b[1], s.b[5]],
                [s.b[4], s.b[5], s.a + s.b[2]],
            ];
            for i in 0..3 {
                for j in 0..3 {
                    value[(i, j)] += sym[i][j] * parity[j];
                }
            }
        }
    }

    let hs: Vec<f64> = lengths_sq.iter().map(|l2| 1.0 / l2).collect();
    let full = extrapolate_to_zero(&hs, &values);
    // Same extrapolation without the most strongly damped level.
    let reduced = extrapolate_to_zero(&hs[..levels - 1], &values[..levels - 1]);
    let last = GreenTensor(full * Complex64::from(1.5));
    let previous = GreenTensor(reduced * Complex64::from(1.5));
    let change = last.relative_difference(&previous);
    if !(change <= opts.image_tolerance) {
        return Err(Error::Convergence {
            relative_change: change,
            last: Box::new(last),
            previous: Box::new(previous),
        });
    }
    Ok(last)
}

/// `exp(-t r^(2j))` with `r^2 = sqrt 2`, from two exponentials.
#[inline]
fn level_weights(t: f64, out: &mut [f64]) {
    let mut even = (-t).exp();
    let mut odd = (-t * LEVEL_RATIO_SQUARED).exp();
    for (j, w) in out.iter_mut().enumerate() {
        if j % 2 == 0 {
            *w = even;
            even *= even;
        } else {
            *w = odd;
            odd *= odd;
        }
    }
}

/// Neville evaluation at `h = 0` of the interpolating polynomial through
/// `(hs[j], values[j])`.
pub(super) fn extrapolate_to_zero(hs: &[f64], values: &[Matrix3<Complex64>]) -> Matrix3<Complex64> {
    let mut p: Vec<Matrix3<Complex64>> = values.to_vec();
    let n = hs.len();
    for m in 1..n {
        for i in 0..n - m {
            let (hi, hj) = (hs[i], hs[i + m]);
            // P_{i..i+m}(0) = (hj P_{i..i+m-1} - hi P_{i+1..i+m}) / (hj - hi)
            p[i] = (p[i] * Complex64::from(hj) - p[i + 1] * Complex64::from(hi)) / Complex64::from(hj - hi);
        }
    }
    p[0]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_match_direct_exponentials() {
        let mut w = [0.0; 6];
        level_weights(0.37, &mut w);
        for (j, wj) in w.iter().enumerate() {
            let direct = (-0.37 * LEVEL_RATIO_SQUARED.powi(j as i32)).exp();
            assert!((wj - direct).abs() < 1e-15);
        }
    }

    #[test]
    fn neville_recovers_polynomial_limit() {
        let hs = [1.0, 0.5, 0.25, 0.125];
        let vals: Vec<Matrix3<Complex64>> = hs
            .iter()
            .map(|h| Matrix3::from_element(Complex64::new(2.0 + 3.0 * h - h * h * h, 0.5 * h)))
            .collect();
        let v = extrapolate_to_zero(&hs, &vals);
        assert!((v[(0, 0)] - Complex64::new(2.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn near_cutoff_wide_guide_reports_non_convergence() {
        // a = b = 60 at k = 1 has four modes with |k_z| ~ 0.026; the damped
        // sum cannot resolve them at any practical damping length.
        let geom = WaveguideGeometry::new(60.0, 60.0).unwrap();
        let r = Point3::new(30.0, 29.0, 0.0);
        let rp = Point3::new(29.0, 30.0, 1.0);
        let err = waveguide_dyadic_imagesum(&r, &rp, &geom, 1.0, &KernelOptions::default()).unwrap_err();
        match err {
            Error::Convergence { relative_change, last, previous } => {
                assert!(relative_change > 1e-6);
                assert_eq!(last.relative_difference(&previous), relative_change);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn dispatcher_falls_back_to_modes_when_images_fail() {
        let geom = WaveguideGeometry::new(12.0, 10.0).unwrap();
        let opts = KernelOptions::default();
        let r = Point3::new(6.0, 5.2, 0.0);
        let rp = Point3::new(6.1, 5.0, 1.0);
        assert!(waveguide_dyadic_imagesum(&r, &rp, &geom, 1.0, &opts).is_err());
        let dispatched = crate::green::waveguide_dyadic(&r, &rp, &geom, 1.0, &opts).unwrap();
        let modes = crate::green::waveguide_dyadic_modesum(&r, &rp, &geom, 1.0, &opts).unwrap();
        assert_eq!(dispatched, modes);
    }
}
