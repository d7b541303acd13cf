//! Linear measurement-error model `y* = β₀ + β₁ y + e`, fitted on the matched
//! subsample `A ∩ B`, and the two-step (mass imputation, then calibration)
//! estimator.

use std::fmt;

use crate::calibration::{solve_weights, ControlSpec};
use crate::error::{check_len, Error, Result};
use crate::estimators::{BigDataTotals, EstimateReport, EstimatorTag};
use crate::population::ProbabilitySample;
use crate::variance;

/// Slopes below this magnitude are treated as non-invertible.
pub const MIN_SLOPE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementModel {
    pub beta0: f64,
    pub beta1: f64,
    pub sigma2_hat: Option<f64>,
    pub fit_count: usize,
}

impl MeasurementModel {
    pub fn new(beta0: f64, beta1: f64) -> Result<Self> {
        if !(beta1.abs() >= MIN_SLOPE) {
            return Err(Error::DegenerateMeasurement(format!("slope {beta1} is not invertible")));
        }
        Ok(Self {
            beta0,
            beta1,
            sigma2_hat: None,
            fit_count: 0,
        })
    }

    /// `m(y; β) = β₀ + β₁ y`.
    pub fn forward(&self, y: f64) -> f64 {
        self.beta0 + self.beta1 * y
    }

    /// `ŷ = (y* - β₀) / β₁`.
    pub fn invert(&self, y_star: f64) -> f64 {
        (y_star - self.beta0) / self.beta1
    }
}

impl fmt::Display for MeasurementModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "beta0={}", self.beta0)?;
        writeln!(f, "beta1={}", self.beta1)?;
        writeln!(f, "n_matched={}", self.fit_count)
    }
}

/// Weighted least-squares line of `response` on `regressor`; returns
/// `(intercept, slope)`.
pub fn fit_weighted_line(d: &[f64], response: &[f64], regressor: &[f64]) -> Result<(f64, f64)> {
    check_len("response", d.len(), response.len())?;
    check_len("regressor", d.len(), regressor.len())?;
    if d.len() < 2 {
        return Err(Error::DegenerateMeasurement(format!(
            "{} matched units; at least two required",
            d.len()
        )));
    }
    let w: f64 = d.iter().sum();
    let x_bar = d.iter().zip(regressor).map(|(a, b)| a * b).sum::<f64>() / w;
    let y_bar = d.iter().zip(response).map(|(a, b)| a * b).sum::<f64>() / w;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for i in 0..d.len() {
        let dx = regressor[i] - x_bar;
        sxx += d[i] * dx * dx;
        sxy += d[i] * dx * (response[i] - y_bar);
    }
    let scale = regressor.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if !(sxx / w > (1e-10 * scale).powi(2)) {
        return Err(Error::DegenerateMeasurement("regressor has zero weighted variance".into()));
    }
    let slope = sxy / sxx;
    Ok((y_bar - slope * x_bar, slope))
}

/// Solves `Σ d_i (y*_i - β₀ - β₁ y_i)(1, y_i) = 0` over the matched units given.
pub fn fit_measurement_model(d: &[f64], y: &[f64], y_star: &[f64]) -> Result<MeasurementModel> {
    let (beta0, beta1) = fit_weighted_line(d, y_star, y)?;
    let mut model = MeasurementModel::new(beta0, beta1)?;
    let w: f64 = d.iter().sum();
    let rss: f64 = (0..d.len())
        .map(|i| d[i] * (y_star[i] - model.forward(y[i])).powi(2))
        .sum();
    model.sigma2_hat = Some(rss / w);
    model.fit_count = d.len();
    Ok(model)
}

pub fn invert_measurement(y_star: f64, model: &MeasurementModel) -> f64 {
    model.invert(y_star)
}

/// Per-unit inputs of the mass-imputation linearization for the linear model:
/// `q_i = (y*_i - β₀)/β₁`, `q̇_i = (-1/β₁, -q_i/β₁)`, and `ṁ_i = h_i = (1, y_i)`
/// on matched units (zero elsewhere, where they are never used).
#[derive(Debug, Clone)]
pub struct LinearizationTerms {
    pub q: Vec<f64>,
    pub q_dot: Vec<[f64; 2]>,
    pub m_dot: Vec<[f64; 2]>,
    pub h: Vec<[f64; 2]>,
}

pub fn linearization_terms(
    y_star: &[f64],
    y: &[f64],
    delta: &[u32],
    model: &MeasurementModel,
) -> Result<LinearizationTerms> {
    check_len("values", y_star.len(), y.len())?;
    check_len("delta", y_star.len(), delta.len())?;
    let b1 = MeasurementModel::new(model.beta0, model.beta1)?.beta1;
    let q: Vec<f64> = y_star.iter().map(|&v| model.invert(v)).collect();
    let q_dot = q.iter().map(|&qi| [-1.0 / b1, -qi / b1]).collect();
    let basis: Vec<[f64; 2]> = (0..y.len())
        .map(|i| if delta[i] > 0 { [1.0, y[i]] } else { [0.0, 0.0] })
        .collect();
    Ok(LinearizationTerms {
        q,
        q_dot,
        m_dot: basis.clone(),
        h: basis,
    })
}

#[derive(Debug, Clone)]
pub struct TwoStepFit {
    pub report: EstimateReport,
    pub model: MeasurementModel,
    pub y_hat: Vec<f64>,
}

/// Two-step estimator for a sample A that observes `y*` everywhere and the
/// true `y` only on matched units (`δ_i ≥ 1`).
///
/// Step 1 fits the measurement model on `A ∩ B` and imputes
/// `ŷ_i = (y*_i - β̂₀)/β̂₁` for every unit of A. Step 2 calibrates on
/// `(1-δ, δ, δy)` to `(N_c, N_b, T_b)` and returns `Σ w_i ŷ_i`.
pub fn two_step_regdi(
    sample: &ProbabilitySample,
    y_star: &[f64],
    delta: &[u32],
    y: &[f64],
    bd: &BigDataTotals,
) -> Result<TwoStepFit> {
    let n = sample.len();
    check_len("proxy values", n, y_star.len())?;
    check_len("delta", n, delta.len())?;
    check_len("values", n, y.len())?;
    let matched: Vec<usize> = (0..n).filter(|&i| delta[i] > 0).collect();
    let pick = |col: &[f64]| -> Vec<f64> { matched.iter().map(|&i| col[i]).collect() };
    let model = fit_measurement_model(&pick(sample.d()), &pick(y), &pick(y_star))?;
    let y_hat: Vec<f64> = y_star.iter().map(|&v| model.invert(v)).collect();
    let spec = ControlSpec::standard(delta, y, bd)?;
    let cal = solve_weights(sample, &spec)?;
    let total = cal.w.iter().zip(&y_hat).map(|(w, v)| w * v).sum();
    let resid = variance::two_step_residuals(sample, &y_hat, &spec)?;
    let v = variance::ht_variance_quadratic(sample, &resid.e_hat)?;
    let report = EstimateReport::new(EstimatorTag::TwoStepRegDi, total, bd.n)
        .with_variance(v)
        .with_controls(spec.describe())
        .with_note(format!("measurement model fitted on {} matched units", model.fit_count));
    Ok(TwoStepFit { report, model, y_hat })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noiseless_fit_recovers_intercept_slope() {
        let y = [2.0, 2.5, 3.0, 4.1, 5.0];
        let y_star: Vec<f64> = y.iter().map(|v| 2.0 + 0.9 * (v - 3.0)).collect();
        let m = fit_measurement_model(&[1.0, 2.0, 1.0, 3.0, 1.0], &y, &y_star).unwrap();
        assert!((m.beta0 + 0.7).abs() < 1e-12);
        assert!((m.beta1 - 0.9).abs() < 1e-12);
        assert_eq!(m.fit_count, 5);
        assert!(m.sigma2_hat.unwrap() < 1e-24);
    }

    #[test]
    fn identity_measurement() {
        let y = [1.0, 2.0, 7.0];
        let m = fit_measurement_model(&[1.0; 3], &y, &y).unwrap();
        assert!(m.beta0.abs() < 1e-12 && (m.beta1 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_fits_rejected() {
        assert!(fit_measurement_model(&[1.0], &[1.0], &[2.0]).is_err());
        assert!(fit_measurement_model(&[1.0; 3], &[2.0; 3], &[1.0, 2.0, 3.0]).is_err());
        assert!(fit_measurement_model(&[1.0; 3], &[1.0, 2.0, 3.0], &[4.0; 3]).is_err());
    }

    #[test]
    fn inversion_examples() {
        let id = MeasurementModel::new(0.0, 1.0).unwrap();
        assert_eq!(invert_measurement(5.0, &id), 5.0);
        let m = MeasurementModel::new(-0.7, 0.9).unwrap();
        assert!((invert_measurement(2.0, &m) - 3.0).abs() < 1e-15);
        for v in [-3.0, 0.0, 1.25, 40.0] {
            assert!((m.forward(m.invert(v)) - v).abs() < 1e-12);
        }
        assert!(MeasurementModel::new(1.0, 1e-7).is_err());
    }

    #[test]
    fn linearization_terms_identity_model() {
        let m = MeasurementModel::new(0.0, 1.0).unwrap();
        let t = linearization_terms(&[1.5, 2.0], &[1.4, f64::NAN], &[1, 0], &m).unwrap();
        assert_eq!(t.q, vec![1.5, 2.0]);
        assert_eq!(t.q_dot[0], [-1.0, -1.5]);
        assert_eq!(t.m_dot[0], [1.0, 1.4]);
        assert_eq!(t.h[1], [0.0, 0.0]);
        let m2 = MeasurementModel::new(0.3, 1.7).unwrap();
        let ys = [0.1, 0.4, 2.0];
        let t2 = linearization_terms(&ys, &[0.0; 3], &[0; 3], &m2).unwrap();
        assert!(t2.q.windows(2).all(|w| w[0] < w[1]));
        for (q, v) in t2.q.iter().zip(ys) {
            assert!((m2.forward(*q) - v).abs() < 1e-12);
        }
    }

    #[test]
    fn model_dump_format() {
        let mut m = MeasurementModel::new(-0.7, 0.9).unwrap();
        m.fit_count = 12;
        assert_eq!(m.to_string(), "beta0=-0.7\nbeta1=0.9\nn_matched=12\n");
    }
}
