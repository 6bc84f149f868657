//! Mean free path estimate, scaling-law fits of `T(L)` and model selection.

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::transport::TransmissionCurve;

/// Residual-ratio threshold for declaring a winning model.
pub const SELECTION_RATIO: f64 = 2.0;

/// Minimum number of points a fit accepts.
pub const MIN_FIT_POINTS: usize = 4;

/// Photon mean free path `l_ph = (1 / (n sigma0)) (Delta^2 + 1/4) / (1/4)`
/// in a dilute gas, with the resonant cross-section `sigma0 = 6 pi / k0^2`.
pub fn mean_free_path(density: f64, detuning: f64) -> Result<f64> {
    if !(density > 0.0) || !density.is_finite() {
        return Err(Error::Domain(format!("density must be positive, got {density}")));
    }
    if !detuning.is_finite() {
        return Err(Error::Domain("detuning must be finite".into()));
    }
    let sigma0 = 6.0 * std::f64::consts::PI;
    Ok((detuning * detuning + 0.25) / 0.25 / (density * sigma0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitModel {
    /// `T = T0 exp(-L / l_loc)`; parameters `(T0, l_loc)`.
    Exponential,
    /// `T = c / (L + L0)`; parameters `(c, L0)`.
    Hyperbolic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Localization,
    Diffusive,
    Ambiguous,
}

impl Regime {
    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::Localization => "localization",
            Regime::Diffusive => "diffusive",
            Regime::Ambiguous => "ambiguous",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub model: FitModel,
    pub parameters: [f64; 2],
    pub parameter_errors: [f64; 2],
    /// Weighted sum of squared residuals on the `T` scale, identical in
    /// definition for both models so the two can be compared.
    pub residual_sum: f64,
    pub n_points: usize,
    /// True when standard errors supplied the weights; otherwise the fit is
    /// unweighted and parameter errors are scaled by the residual variance.
    pub weighted: bool,
}

impl ScalingFit {
    pub fn degrees_of_freedom(&self) -> usize {
        self.n_points.saturating_sub(2)
    }

    pub fn residual_per_dof(&self) -> f64 {
        self.residual_sum / self.degrees_of_freedom().max(1) as f64
    }

    pub fn predict(&self, length: f64) -> f64 {
        let [p, q] = self.parameters;
        match self.model {
            FitModel::Exponential => p * (-length / q).exp(),
            FitModel::Hyperbolic => p / (length + q),
        }
    }
}

/// One `(L, T, sigma_T)` observation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub length: f64,
    pub value: f64,
    pub stderr: f64,
}

/// Inclusive window of sample lengths entering a fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitRange {
    pub min: f64,
    pub max: f64,
}

impl FitRange {
    pub fn all() -> Self {
        Self {
            min: f64::NEG_INFINITY,
            max: f64::INFINITY,
        }
    }

    /// `L >= factor * l_ph`.
    pub fn beyond_mean_free_path(density: f64, detuning: f64, factor: f64) -> Result<Self> {
        Ok(Self {
            min: factor * mean_free_path(density, detuning)?,
            max: f64::INFINITY,
        })
    }

    pub fn contains(&self, length: f64) -> bool {
        length >= self.min && length <= self.max
    }
}

/// Arithmetic-mean observations of `curve` inside `range`.
pub fn observations(curve: &TransmissionCurve, range: &FitRange) -> Vec<Observation> {
    curve
        .points
        .iter()
        .filter(|p| range.contains(p.length))
        .map(|p| Observation {
            length: p.length,
            value: p.mean,
            stderr: p.stderr,
        })
        .collect()
}

pub fn fit_exponential(curve: &TransmissionCurve, range: &FitRange) -> Result<ScalingFit> {
    fit_exponential_data(&observations(curve, range))
}

pub fn fit_hyperbolic(curve: &TransmissionCurve, range: &FitRange) -> Result<ScalingFit> {
    fit_hyperbolic_data(&observations(curve, range))
}

fn check_data(data: &[Observation]) -> Result<bool> {
    if data.len() < MIN_FIT_POINTS {
        return Err(Error::Fit(format!(
            "need at least {MIN_FIT_POINTS} points in the fit range, have {}",
            data.len()
        )));
    }
    if let Some(o) = data.iter().find(|o| !(o.value > 0.0) || !o.value.is_finite()) {
        return Err(Error::Fit(format!("non-positive transmission {} at L = {}", o.value, o.length)));
    }
    Ok(data.iter().all(|o| o.stderr > 0.0 && o.stderr.is_finite()))
}

/// Weighted `T`-scale residual sum shared by both models.
fn residual_sum(data: &[Observation], weighted: bool, model: impl Fn(f64) -> f64) -> f64 {
    data.iter()
        .map(|o| {
            let w = if weighted { o.stderr.powi(-2) } else { 1.0 };
            w * (o.value - model(o.length)).powi(2)
        })
        .sum()
}

/// Weighted straight-line fit `y = c0 + c1 x`; returns coefficients and
/// their covariance (unscaled).
fn line_fit(xs: &[f64], ys: &[f64], ws: &[f64]) -> Result<(Vector2<f64>, Matrix2<f64>)> {
    let mut normal = Matrix2::zeros();
    let mut rhs = Vector2::zeros();
    for ((&x, &y), &w) in xs.iter().zip(ys).zip(ws) {
        let row = Vector2::new(1.0, x);
        normal += row * row.transpose() * w;
        rhs += row * (w * y);
    }
    let cov = normal
        .try_inverse()
        .ok_or_else(|| Error::Fit("degenerate design: all lengths coincide".into()))?;
    Ok((cov * rhs, cov))
}

/// Log-linear weighted least squares for `T0 exp(-L / l_loc)`; log-scale
/// weights come from `sigma_T / T`.
pub fn fit_exponential_data(data: &[Observation]) -> Result<ScalingFit> {
    let weighted = check_data(data)?;
    let xs: Vec<f64> = data.iter().map(|o| o.length).collect();
    let ys: Vec<f64> = data.iter().map(|o| o.value.ln()).collect();
    let ws: Vec<f64> = data
        .iter()
        .map(|o| if weighted { (o.value / o.stderr).powi(2) } else { 1.0 })
        .collect();
    let (coef, mut cov) = line_fit(&xs, &ys, &ws)?;
    if !weighted {
        let rss: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - coef[0] - coef[1] * x).powi(2)).sum();
        cov *= rss / (data.len() - 2) as f64;
    }
    let slope = coef[1];
    if !(slope < 0.0) {
        return Err(Error::Fit(format!("transmission does not decay (slope {slope:e})")));
    }
    let t0 = coef[0].exp();
    let l_loc = -1.0 / slope;
    let errors = [t0 * cov[(0, 0)].sqrt(), cov[(1, 1)].sqrt() / (slope * slope)];
    Ok(ScalingFit {
        model: FitModel::Exponential,
        parameters: [t0, l_loc],
        parameter_errors: errors,
        residual_sum: residual_sum(data, weighted, |l| t0 * (-l / l_loc).exp()),
        n_points: data.len(),
        weighted,
    })
}

/// Weighted nonlinear least squares for `c / (L + L0)`: started from the
/// straight-line fit of `1/T` against `L`, refined by damped Gauss-Newton.
pub fn fit_hyperbolic_data(data: &[Observation]) -> Result<ScalingFit> {
    let weighted = check_data(data)?;
    let ws: Vec<f64> = data
        .iter()
        .map(|o| if weighted { o.stderr.powi(-2) } else { 1.0 })
        .collect();
    let xs: Vec<f64> = data.iter().map(|o| o.length).collect();
    let inv: Vec<f64> = data.iter().map(|o| 1.0 / o.value).collect();
    // 1/T = L / c + L0 / c, weighted by the propagated 1/T errors.
    let inv_w: Vec<f64> = data.iter().zip(&ws).map(|(o, w)| w * o.value.powi(4)).collect();
    let (lin, _) = line_fit(&xs, &inv, &inv_w)?;
    if !(lin[1] > 0.0) {
        return Err(Error::Fit("transmission does not fall like 1/L".into()));
    }
    let mut p = Vector2::new(1.0 / lin[1], lin[0] / lin[1]);
    let min_len = xs.iter().cloned().fold(f64::INFINITY, f64::min);
    let cost = |p: &Vector2<f64>| residual_sum(data, weighted, |l| p[0] / (l + p[1]));
    let normal_eq = |p: &Vector2<f64>| {
        let mut jtj = Matrix2::zeros();
        let mut jtr = Vector2::zeros();
        for ((&l, o), &w) in xs.iter().zip(data).zip(&ws) {
            let d = l + p[1];
            let model = p[0] / d;
            let jac = Vector2::new(1.0 / d, -p[0] / (d * d));
            jtj += jac * jac.transpose() * w;
            jtr += jac * (w * (o.value - model));
        }
        (jtj, jtr)
    };
    let mut current = cost(&p);
    let mut lambda = 1e-3;
    for _ in 0..200 {
        let (jtj, jtr) = normal_eq(&p);
        let mut damped = jtj;
        damped[(0, 0)] *= 1.0 + lambda;
        damped[(1, 1)] *= 1.0 + lambda;
        let Some(step) = damped.lu().solve(&jtr) else { break };
        let trial = p + step;
        let ok = trial[1] > -min_len;
        let trial_cost = if ok { cost(&trial) } else { f64::INFINITY };
        if trial_cost <= current {
            let converged = step.component_div(&p.map(|v| v.abs().max(1.0))).amax() < 1e-13;
            p = trial;
            current = trial_cost;
            lambda = (lambda * 0.3).max(1e-12);
            if converged {
                break;
            }
        } else {
            lambda *= 10.0;
            if lambda > 1e12 {
                break;
            }
        }
    }
    if !(p[0] > 0.0) {
        return Err(Error::Fit(format!("hyperbolic amplitude not positive ({})", p[0])));
    }
    let (jtj, _) = normal_eq(&p);
    let mut cov = jtj
        .try_inverse()
        .ok_or_else(|| Error::Fit("singular hyperbolic normal matrix".into()))?;
    if !weighted {
        cov *= current / (data.len() - 2) as f64;
    }
    Ok(ScalingFit {
        model: FitModel::Hyperbolic,
        parameters: [p[0], p[1]],
        parameter_errors: [cov[(0, 0)].sqrt(), cov[(1, 1)].sqrt()],
        residual_sum: current,
        n_points: data.len(),
        weighted,
    })
}

/// Compare residual sums per degree of freedom; a model wins only when the
/// other's residual is more than [`SELECTION_RATIO`] times larger.
pub fn select_model(exponential: &ScalingFit, hyperbolic: &ScalingFit) -> Regime {
    let e = exponential.residual_per_dof();
    let h = hyperbolic.residual_per_dof();
    if e == h {
        return Regime::Ambiguous;
    }
    if e > SELECTION_RATIO * h {
        Regime::Diffusive
    } else if h > SELECTION_RATIO * e {
        Regime::Localization
    } else {
        Regime::Ambiguous
    }
}
