//! The coupled-dipole system of one atomic realization.
//!
//! State index `e = 3 i + alpha` runs over atoms `i` and Cartesian dipole
//! components `alpha in {x, y, z}`. For a `J = 0 -> J = 1` transition the
//! three excited sublevels `m_J = -1, 0, +1` and the Cartesian states are
//! related by the fixed unitary `|m = +-1> = -+(|x> +- i|y>)/sqrt 2`,
//! `|m = 0> = |z>`; the resolvent and every observable summed over sublevels
//! are invariant under it, so the Cartesian basis is used throughout to
//! match the tensor kernels.
//!
//! Coupling matrix: `Sigma_(ee') = -(gamma0 / 2) g_(alpha alpha')(r_i, r_j)`,
//! with the regularized self-term on the diagonal blocks. Frequencies are
//! measured from the atomic resonance and `Sigma` is evaluated at `k = k0`
//! (pole approximation); the probe detuning enters only through the
//! resolvent diagonal.

mod oracle;

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::WaveguideGeometry;
use crate::green::{waveguide_dyadic, waveguide_self_term, KernelOptions, Point3};

pub use oracle::{evolve_envelope, time_domain_oracle, OracleOptions};

/// Maximum relative residual accepted from a stationary solve.
pub const SOLVE_RESIDUAL_TOLERANCE: f64 = 1e-10;

/// Where a realization came from in a Monte Carlo scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SeedTag {
    pub master_seed: u64,
    pub length_index: u32,
    pub realization_index: u32,
}

/// One random atomic configuration of sample length `length`, atoms in
/// `(0, a) x (0, b) x [0, length]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Realization {
    positions: Vec<Point3>,
    geom: WaveguideGeometry,
    length: f64,
    seed_tag: SeedTag,
}

impl Realization {
    /// Validates containment and a minimum pairwise separation.
    pub fn new(
        positions: Vec<Point3>,
        geom: WaveguideGeometry,
        length: f64,
        min_separation: f64,
        seed_tag: SeedTag,
    ) -> Result<Self> {
        if !(length > 0.0) {
            return Err(Error::Precondition(format!("sample length must be positive, got {length}")));
        }
        for (i, p) in positions.iter().enumerate() {
            if !geom.contains_transverse(p.x, p.y) || !(p.z >= 0.0 && p.z <= length) {
                return Err(Error::Precondition(format!(
                    "atom {i} at ({}, {}, {}) outside the sample volume",
                    p.x, p.y, p.z
                )));
            }
        }
        for i in 0..positions.len() {
            for j in 0..i {
                let d = (positions[i] - positions[j]).norm();
                if !(d >= min_separation) || d == 0.0 {
                    return Err(Error::Precondition(format!(
                        "atoms {j} and {i} are {d:.3e} apart (minimum {min_separation})"
                    )));
                }
            }
        }
        Ok(Self {
            positions,
            geom,
            length,
            seed_tag,
        })
    }

    pub fn positions(&self) -> &[Point3] {
        &self.positions
    }

    pub fn n_atoms(&self) -> usize {
        self.positions.len()
    }

    pub fn geometry(&self) -> &WaveguideGeometry {
        &self.geom
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn seed_tag(&self) -> SeedTag {
        self.seed_tag
    }
}

/// Dense symmetric (not Hermitian) `3N x 3N` coupling matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SigmaMatrix {
    matrix: DMatrix<Complex64>,
}

impl SigmaMatrix {
    pub fn from_matrix(matrix: DMatrix<Complex64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() || !matrix.nrows().is_multiple_of(3) {
            return Err(Error::Precondition(format!(
                "coupling matrix must be square with a multiple of 3 rows, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(Self { matrix })
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn n_atoms(&self) -> usize {
        self.dim() / 3
    }

    pub fn block(&self, i: usize, j: usize) -> Matrix3<Complex64> {
        self.matrix.fixed_view::<3, 3>(3 * i, 3 * j).into_owned()
    }
}

/// The remote monochromatic emitter driving the ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SourceSpec {
    pub position: Point3,
    pub orientation: Point3,
    /// Probe detuning `omega_s - omega0` in units of `gamma0`.
    pub detuning: f64,
}

impl SourceSpec {
    /// Normalizes `orientation`; the position must be inside the
    /// cross-section.
    pub fn new(position: Point3, orientation: Point3, detuning: f64, geom: &WaveguideGeometry) -> Result<Self> {
        if !geom.contains_transverse(position.x, position.y) || !position.z.is_finite() {
            return Err(Error::Configuration(format!(
                "source at ({}, {}) outside the cross-section",
                position.x, position.y
            )));
        }
        let norm = orientation.norm();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::Configuration("source orientation must be a non-zero vector".into()));
        }
        if !detuning.is_finite() {
            return Err(Error::Configuration("detuning must be finite".into()));
        }
        Ok(Self {
            position,
            orientation: orientation / norm,
            detuning,
        })
    }
}

/// Stationary amplitudes and the achieved relative residual.
#[derive(Debug, Clone, PartialEq)]
pub struct DrivenResponse {
    pub amplitudes: DVector<Complex64>,
    pub residual: f64,
}

impl DrivenResponse {
    /// Dipole vector of atom `i`.
    pub fn dipole(&self, i: usize) -> Vector3<Complex64> {
        self.amplitudes.fixed_rows::<3>(3 * i).into_owned()
    }
}

/// Assemble `Sigma` for `real` at wavenumber `k`. Pairs are evaluated in
/// parallel; each pair writes its own blocks, so the result does not depend
/// on scheduling.
pub fn assemble_sigma(real: &Realization, k: f64, opts: &KernelOptions) -> Result<SigmaMatrix> {
    let pos = real.positions();
    let geom = real.geometry();
    let n = pos.len();
    let rows: Vec<Vec<Matrix3<Complex64>>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (i..n)
                .map(|j| {
                    let g = if i == j {
                        waveguide_self_term(&pos[i], geom, k, opts)?
                    } else {
                        waveguide_dyadic(&pos[i], &pos[j], geom, k, opts)?
                    };
                    Ok(g.0 * Complex64::new(-0.5, 0.0))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;

    let mut m = DMatrix::<Complex64>::zeros(3 * n, 3 * n);
    for (i, row) in rows.iter().enumerate() {
        for (offset, block) in row.iter().enumerate() {
            let j = i + offset;
            m.fixed_view_mut::<3, 3>(3 * i, 3 * j).copy_from(block);
            if j != i {
                // reciprocity: g(r_j, r_i) = g(r_i, r_j)^T
                m.fixed_view_mut::<3, 3>(3 * j, 3 * i).copy_from(&block.transpose());
            }
        }
    }
    SigmaMatrix::from_matrix(m)
}

/// Source coupling column `v_e = Sigma_(e s) = -(1/2) (g(r_i, r_s) o)_alpha`.
pub fn source_coupling(
    real: &Realization,
    source: &SourceSpec,
    k: f64,
    opts: &KernelOptions,
) -> Result<DVector<Complex64>> {
    let pos = real.positions();
    let geom = real.geometry();
    let fields: Vec<Vector3<Complex64>> = pos
        .par_iter()
        .map(|p| Ok(waveguide_dyadic(p, &source.position, geom, k, opts)?.apply_real(&source.orientation)))
        .collect::<Result<_>>()?;
    let mut v = DVector::<Complex64>::zeros(3 * pos.len());
    for (i, f) in fields.iter().enumerate() {
        for a in 0..3 {
            v[3 * i + a] = f[a] * -0.5;
        }
    }
    Ok(v)
}

/// Solve `[detuning I - Sigma] b = v` by LU with one refinement step.
pub fn solve_driven(sigma: &SigmaMatrix, detuning: f64, coupling: &DVector<Complex64>) -> Result<DrivenResponse> {
    let dim = sigma.dim();
    if coupling.len() != dim {
        return Err(Error::Precondition(format!(
            "coupling has {} entries, system has {dim}",
            coupling.len()
        )));
    }
    let v_norm = coupling.norm();
    if dim == 0 || v_norm == 0.0 {
        return Ok(DrivenResponse {
            amplitudes: DVector::zeros(dim),
            residual: 0.0,
        });
    }
    let mut a = -sigma.matrix().clone();
    for i in 0..dim {
        a[(i, i)] += Complex64::new(detuning, 0.0);
    }
    let lu = a.clone().lu();
    let mut b = lu.solve(coupling).ok_or_else(|| Error::Solver {
        reason: "resolvent matrix is singular".into(),
        residual: f64::INFINITY,
    })?;
    let r = coupling - &a * &b;
    if let Some(db) = lu.solve(&r) {
        b += db;
    }
    let residual = (coupling - &a * &b).norm() / v_norm;
    if !(residual <= SOLVE_RESIDUAL_TOLERANCE) {
        return Err(Error::Solver {
            reason: "residual above tolerance".into(),
            residual,
        });
    }
    Ok(DrivenResponse { amplitudes: b, residual })
}

/// Stationary amplitudes `b = R(omega_s) Sigma_(. s)` of the ensemble under
/// the source, without back-action of the ensemble on the source.
pub fn stationary_amplitudes(
    sigma: &SigmaMatrix,
    source: &SourceSpec,
    real: &Realization,
    k: f64,
    opts: &KernelOptions,
) -> Result<DrivenResponse> {
    if sigma.n_atoms() != real.n_atoms() {
        return Err(Error::Precondition("coupling matrix and realization disagree on N".into()));
    }
    let v = source_coupling(real, source, k, opts)?;
    solve_driven(sigma, source.detuning, &v)
}

/// One collective eigenmode: `shift = Re lambda`, `rate = -2 Im lambda`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollectiveMode {
    pub shift: f64,
    pub rate: f64,
}

/// Eigenvalues of `Sigma` as (shift, rate) pairs, sorted by ascending rate.
pub fn collective_spectrum(sigma: &SigmaMatrix) -> Result<Vec<CollectiveMode>> {
    if sigma.dim() == 0 {
        return Ok(Vec::new());
    }
    let schur = nalgebra::linalg::Schur::try_new(sigma.matrix().clone(), 1e-15, 100_000).ok_or_else(|| {
        Error::Solver {
            reason: "Schur iteration did not converge".into(),
            residual: f64::NAN,
        }
    })?;
    let (_, t) = schur.unpack();
    let mut modes: Vec<CollectiveMode> = (0..t.nrows())
        .map(|i| CollectiveMode {
            shift: t[(i, i)].re,
            rate: -2.0 * t[(i, i)].im,
        })
        .collect();
    modes.sort_by(|x, y| x.rate.total_cmp(&y.rate).then(x.shift.total_cmp(&y.shift)));
    Ok(modes)
}
