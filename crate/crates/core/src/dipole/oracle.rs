//! Time-domain integration of the amplitude equations, used as an
//! independent check of the stationary resolvent solve.
//!
//! In the frame rotating at the probe frequency the ensemble envelope obeys
//!
//! `dB/dt = -i [ -detuning I + Sigma ] B - i v exp(-gamma_s t / 2)`,
//!
//! with `B(0) = 0`: the source atom is excited at `t = 0`, decays slowly at
//! `gamma_s` and feels no back-action. Integration uses an adaptive
//! Dormand-Prince 5(4) pair.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::SigmaMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleOptions {
    /// Final time; must exceed the slowest collective decay time many times
    /// over and stay far below `1 / source_linewidth`.
    pub t_max: f64,
    /// Source linewidth `gamma_s` in units of `gamma0`.
    pub source_linewidth: f64,
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self {
            t_max: 400.0,
            source_linewidth: 1e-6,
            rtol: 1e-11,
            atol: 1e-14,
            max_steps: 20_000_000,
        }
    }
}

/// Stationary envelope from the time domain. The trajectory is integrated
/// for `gamma_s` and `gamma_s / 2`, each final state is divided by the
/// source envelope `exp(-gamma_s t_max / 2)`, and the two are extrapolated
/// linearly to `gamma_s -> 0`.
pub fn time_domain_oracle(
    sigma: &SigmaMatrix,
    coupling: &DVector<Complex64>,
    detuning: f64,
    opts: &OracleOptions,
) -> Result<DVector<Complex64>> {
    let envelope_at = |gamma: f64| -> Result<DVector<Complex64>> {
        let zero = DVector::zeros(sigma.dim());
        let b = evolve_envelope(sigma, coupling, detuning, gamma, &zero, &[opts.t_max], opts)?;
        Ok(&b[0] * Complex64::new((0.5 * gamma * opts.t_max).exp(), 0.0))
    };
    let coarse = envelope_at(opts.source_linewidth)?;
    let fine = envelope_at(0.5 * opts.source_linewidth)?;
    Ok(fine * Complex64::new(2.0, 0.0) - coarse)
}

/// Integrate the envelope equation from `initial` at `t = 0` and return the
/// state at each of the ascending `times`.
pub fn evolve_envelope(
    sigma: &SigmaMatrix,
    coupling: &DVector<Complex64>,
    detuning: f64,
    source_linewidth: f64,
    initial: &DVector<Complex64>,
    times: &[f64],
    opts: &OracleOptions,
) -> Result<Vec<DVector<Complex64>>> {
    let dim = sigma.dim();
    if coupling.len() != dim || initial.len() != dim {
        return Err(Error::Precondition("oracle vectors do not match the system size".into()));
    }
    if times.windows(2).any(|w| w[1] < w[0]) || times.first().is_some_and(|t| *t < 0.0) {
        return Err(Error::Precondition("output times must be ascending and non-negative".into()));
    }
    // dB/dt = M B + f(t), M = -i (Sigma - detuning I), f = -i v e^{-gamma t / 2}
    let mut m: DMatrix<Complex64> = sigma.matrix() * Complex64::new(0.0, -1.0);
    for i in 0..dim {
        m[(i, i)] += Complex64::new(0.0, detuning);
    }
    let drive = coupling * Complex64::new(0.0, -1.0);
    let rhs = |t: f64, y: &DVector<Complex64>| -> DVector<Complex64> {
        &m * y + &drive * Complex64::new((-0.5 * source_linewidth * t).exp(), 0.0)
    };

    let mut out = Vec::with_capacity(times.len());
    let mut y = initial.clone();
    let mut t = 0.0;
    let scale = m.iter().fold(1.0_f64, |acc, z| acc.max(z.norm()));
    let mut h = 0.01 / scale;
    let mut steps = 0usize;
    for &target in times {
        while t < target {
            if steps >= opts.max_steps {
                return Err(Error::Integration(format!("step budget exhausted at t = {t}")));
            }
            steps += 1;
            let step = h.min(target - t);
            let (y_new, err) = dopri_step(&rhs, t, &y, step, opts);
            if !err.is_finite() {
                return Err(Error::Integration(format!("non-finite state at t = {t}")));
            }
            if err <= 1.0 {
                t += step;
                y = y_new;
            }
            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            h = step * factor;
            if h < 1e-14 * t.max(1.0) {
                return Err(Error::Integration(format!("step size underflow at t = {t}")));
            }
        }
        out.push(y.clone());
    }
    Ok(out)
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

fn dopri_step<F>(rhs: &F, t: f64, y: &DVector<Complex64>, h: f64, opts: &OracleOptions) -> (DVector<Complex64>, f64)
where
    F: Fn(f64, &DVector<Complex64>) -> DVector<Complex64>,
{
    let mut ks: Vec<DVector<Complex64>> = Vec::with_capacity(7);
    for s in 0..7 {
        let mut ys = y.clone();
        for (j, kj) in ks.iter().enumerate() {
            if A[s][j] != 0.0 {
                ys.axpy(Complex64::new(h * A[s][j], 0.0), kj, Complex64::new(1.0, 0.0));
            }
        }
        ks.push(rhs(t + C[s] * h, &ys));
    }
    let mut y5 = y.clone();
    let mut e = DVector::<Complex64>::zeros(y.len());
    for s in 0..7 {
        y5.axpy(Complex64::new(h * B5[s], 0.0), &ks[s], Complex64::new(1.0, 0.0));
        e.axpy(Complex64::new(h * (B5[s] - B4[s]), 0.0), &ks[s], Complex64::new(1.0, 0.0));
    }
    let n = y.len().max(1) as f64;
    let y_scale = y.iter().chain(y5.iter()).fold(0.0_f64, |acc, z| acc.max(z.norm()));
    let sum: f64 = e
        .iter()
        .map(|ei| {
            let sc = opts.atol + opts.rtol * y_scale;
            (ei.norm() / sc).powi(2)
        })
        .sum();
    (y5, (sum / n).sqrt())
}
