//! Eigenmode expansion of the guided dyadic.
//!
//! Writing the field of a point dipole as `E = (I + grad div / k^2) Phi`,
//! each Cartesian component of `Phi` solves a scalar Helmholtz problem whose
//! wall conditions follow from the conducting boundary:
//!
//! | component | transverse eigenfunction              | indices        |
//! |-----------|----------------------------------------|----------------|
//! | x         | `cos(m pi x / a) sin(n pi y / b)`      | m >= 0, n >= 1 |
//! | y         | `sin(m pi x / a) cos(n pi y / b)`      | m >= 1, n >= 0 |
//! | z         | `sin(m pi x / a) sin(n pi y / b)`      | m, n >= 1      |
//!
//! and the longitudinal factor `(i / 2 k_z) exp(i k_z |z - z'|)`. The
//! eigenvalues are the TE/TM cutoffs, so the sum below is the TE/TM
//! expansion regrouped by Cartesian component. Mixed `z`-terms carry
//! `sgn(z - z')` from the longitudinal derivative; the contact term
//! `-z z delta / k^2` is absent for `z != z'`.

use nalgebra::Matrix3;
use num_complex::Complex64;

use super::{check_inside, GreenTensor, KernelOptions, Point3};
use crate::error::{Error, Result};
use crate::geometry::{kz_from_cutoff_squared, WaveguideGeometry};

/// Mode expansion for `z != z'`, evanescent modes down to
/// `opts.mode_evanescent_cutoff`.
pub fn waveguide_dyadic_modesum(
    r: &Point3,
    rp: &Point3,
    geom: &WaveguideGeometry,
    k: f64,
    opts: &KernelOptions,
) -> Result<GreenTensor> {
    let dz = r.z - rp.z;
    if !(dz.abs() > 0.0) {
        return Err(Error::Precondition(
            "mode sum requires distinct longitudinal positions".into(),
        ));
    }
    let kappa_max = (1.0 / opts.mode_evanescent_cutoff).ln() / dz.abs();
    mode_sum(r, rp, geom, k, Some(kappa_max))
}

/// Propagating-mode terms only. Their imaginary part is the exact radiative
/// (dissipative) part of the guided dyadic, valid also at `z = z'`.
pub fn propagating_part(
    r: &Point3,
    rp: &Point3,
    geom: &WaveguideGeometry,
    k: f64,
) -> Result<GreenTensor> {
    mode_sum(r, rp, geom, k, None)
}

fn mode_sum(
    r: &Point3,
    rp: &Point3,
    geom: &WaveguideGeometry,
    k: f64,
    kappa_max: Option<f64>,
) -> Result<GreenTensor> {
    check_inside(r, geom, "observation point")?;
    check_inside(rp, geom, "source point")?;
    let (a, b) = (geom.a, geom.b);
    let dz = r.z - rp.z;
    let sign = if dz > 0.0 {
        1.0
    } else if dz < 0.0 {
        -1.0
    } else {
        0.0
    };
    let adz = dz.abs();
    let kc_max2 = k * k + kappa_max.map_or(0.0, |kk| kk * kk);
    let kc_max = kc_max2.sqrt();
    let m_max = (kc_max * a / std::f64::consts::PI).floor() as usize;
    let n_max = (kc_max * b / std::f64::consts::PI).floor() as usize;

    let table = |len: usize, coord: f64, side: f64| -> Vec<(f64, f64)> {
        (0..=len)
            .map(|m| (m as f64 * std::f64::consts::PI * coord / side).sin_cos())
            .collect()
    };
    let tx = table(m_max, r.x, a);
    let ty = table(n_max, r.y, b);
    let txp = table(m_max, rp.x, a);
    let typ = table(n_max, rp.y, b);

    let k2 = k * k;
    let area = a * b;
    let mut g = Matrix3::<Complex64>::zeros();
    for m in 0..=m_max {
        let km = m as f64 * std::f64::consts::PI / a;
        let (sx, cx) = tx[m];
        let (sxp, cxp) = txp[m];
        let em = if m == 0 { 1.0 } else { 2.0 };
        for n in 0..=n_max {
            if m == 0 && n == 0 {
                continue;
            }
            let kn = n as f64 * std::f64::consts::PI / b;
            let kc2 = km * km + kn * kn;
            let propagating = kc2 < k2;
            match kappa_max {
                None if !propagating => continue,
                Some(_) if kc2 > kc_max2 => continue,
                _ => {}
            }
            let kz = kz_from_cutoff_squared(kc2, k).map_err(|_| Error::SingularMode {
                mode: format!("({m}, {n})"),
                k,
            })?;
            // (i / 2 kz) e^{i kz |dz|} and i kz sgn(dz)
            let longitudinal = Complex64::i() / (2.0 * kz) * (Complex64::i() * kz * adz).exp();
            let ikzs = Complex64::i() * kz * sign;
            let (sy, cy) = ty[n];
            let (syp, cyp) = typ[n];
            let en = if n == 0 { 1.0 } else { 2.0 };

            if n >= 1 {
                let norm = em * 2.0 / area;
                let src = norm * cxp * syp * longitudinal;
                g[(0, 0)] += src * (cx * sy * (1.0 - km * km / k2));
                g[(1, 0)] += src * (-km * kn * sx * cy / k2);
                g[(2, 0)] += src * ikzs * (-km * sx * sy / k2);
            }
            if m >= 1 {
                let norm = en * 2.0 / area;
                let src = norm * sxp * cyp * longitudinal;
                g[(1, 1)] += src * (sx * cy * (1.0 - kn * kn / k2));
                g[(0, 1)] += src * (-km * kn * cx * sy / k2);
                g[(2, 1)] += src * ikzs * (-kn * sx * sy / k2);
            }
            if m >= 1 && n >= 1 {
                let norm = 4.0 / area;
                let src = norm * sxp * syp * longitudinal;
                g[(2, 2)] += src * (sx * sy * kc2 / k2);
                g[(0, 2)] += src * ikzs * (km * cx * sy / k2);
                g[(1, 2)] += src * ikzs * (kn * sx * cy / k2);
            }
        }
    }
    Ok(GreenTensor(g * Complex64::from(6.0 * std::f64::consts::PI / k)))
}
