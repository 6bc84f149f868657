use nalgebra::Matrix3;
use num_complex::Complex64;

use super::{GreenTensor, Point3};
use crate::error::{Error, Result};

/// Coefficients `(A, B)` of `g = A I + B u u^T` for separation `dist`, without
/// the overall `3/2`.
#[inline]
pub(crate) fn dyadic_coefficients(dist: f64, k: f64) -> (Complex64, Complex64) {
    let t = k * dist;
    let inv = 1.0 / t;
    let (s, c) = t.sin_cos();
    let phase = Complex64::new(c * inv, s * inv);
    let inv2 = inv * inv;
    let a = phase * Complex64::new(1.0 - inv2, inv);
    let b = phase * Complex64::new(-1.0 + 3.0 * inv2, -3.0 * inv);
    (a, b)
}

/// Vacuum dyadic for displacement `r` (observation minus source):
///
/// `g = (3/2) e^{ikr}/(kr) [ (1 + i/(kr) - 1/(kr)^2) I - (1 + 3i/(kr) - 3/(kr)^2) u u ]`
///
/// Its far field is the transverse projector `(3/2) e^{ikr}/(kr) (I - u u)`,
/// its imaginary part tends to `I` as `r -> 0`, and its real part carries the
/// static `1/r^3` dipole-dipole term. Coincident points have no value here;
/// callers use the self-term convention (`g = i I` in vacuum).
pub fn freespace_dyadic(r: &Point3, k: f64) -> Result<GreenTensor> {
    let dist = r.norm();
    if !(dist > 0.0) {
        return Err(Error::Precondition(
            "free-space dyadic is undefined at zero separation; use the self-term".into(),
        ));
    }
    let u = r / dist;
    let (a, b) = dyadic_coefficients(dist, k);
    let m = Matrix3::from_fn(|i, j| {
        let delta = if i == j { a } else { Complex64::new(0.0, 0.0) };
        (delta + b * (u[i] * u[j])) * 1.5
    });
    Ok(GreenTensor(m))
}
