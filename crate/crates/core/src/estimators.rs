//! Design-based point estimators combining sample A with big-data totals.

use std::fmt;

use serde::Serialize;

use crate::error::{check_len, Error, Result};
use crate::population::ProbabilitySample;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorTag {
    Ht,
    Di,
    Pdi,
    RatioDi,
    RegDi,
    TwoStepRegDi,
    Pdi2,
}

impl fmt::Display for EstimatorTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Ht => "ht",
            Self::Di => "di",
            Self::Pdi => "pdi",
            Self::RatioDi => "ratio",
            Self::RegDi => "regdi",
            Self::TwoStepRegDi => "two-step",
            Self::Pdi2 => "pdi2",
        })
    }
}

/// Point estimate of a population total, its mean, and an optional variance
/// estimate of the total.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateReport {
    pub estimator: EstimatorTag,
    pub total: f64,
    pub population_size: Option<f64>,
    pub mean: Option<f64>,
    pub variance: Option<f64>,
    pub controls: Option<String>,
    pub notes: Vec<String>,
}

impl EstimateReport {
    pub fn new(estimator: EstimatorTag, total: f64, population_size: Option<f64>) -> Self {
        Self {
            estimator,
            total,
            population_size,
            mean: population_size.map(|n| total / n),
            variance: None,
            controls: None,
            notes: Vec::new(),
        }
    }

    pub fn with_variance(mut self, variance: f64) -> Self {
        self.variance = Some(variance.max(0.0));
        self
    }

    pub fn with_controls(mut self, controls: impl Into<String>) -> Self {
        self.controls = Some(controls.into());
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }

    /// Variance on the mean scale, `V / N²`.
    pub fn mean_variance(&self) -> Option<f64> {
        Some(self.variance? / self.population_size?.powi(2))
    }
}

/// Known big-data summaries: `T_b`, `N_b` and, when known, `N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BigDataTotals {
    pub t_b: f64,
    pub n_b: f64,
    pub n: Option<f64>,
}

impl BigDataTotals {
    pub fn new(t_b: f64, n_b: f64, n: f64) -> Self {
        Self { t_b, n_b, n: Some(n) }
    }

    /// `N_c = N - N_b`.
    pub fn n_c(&self) -> Option<f64> {
        self.n.map(|n| n - self.n_b)
    }

    pub fn w_b(&self) -> Option<f64> {
        self.n.map(|n| self.n_b / n)
    }
}

/// `T̂_a = Σ_A d_i y_i`.
pub fn ht_total(sample: &ProbabilitySample, values: &[f64]) -> Result<EstimateReport> {
    check_len("values", sample.len(), values.len())?;
    let total = sample.d().iter().zip(values).map(|(d, y)| d * y).sum();
    Ok(EstimateReport::new(
        EstimatorTag::Ht,
        total,
        sample.srs_population().map(|n| n as f64),
    ))
}

/// Hájek mean `Σ d_i y_i / Σ d_i` (the sample mean under SRS).
pub fn hajek_mean(sample: &ProbabilitySample, values: &[f64]) -> Result<f64> {
    check_len("values", sample.len(), values.len())?;
    let (num, den) = sample
        .d()
        .iter()
        .zip(values)
        .fold((0.0, 0.0), |(n, s), (d, y)| (n + d * y, s + d));
    Ok(num / den)
}

/// Weighted sums over the missing-data stratum `{δ_i = 0}` of sample A:
/// `(Σ d_i (1-δ_i) y_i, Σ d_i (1-δ_i))`.
pub(crate) fn complement_sums(d: &[f64], delta: &[u32], y: &[f64]) -> (f64, f64) {
    d.iter()
        .zip(delta)
        .zip(y)
        .filter(|((_, &dl), _)| dl == 0)
        .fold((0.0, 0.0), |(t, n), ((&di, _), &yi)| (t + di * yi, n + di))
}

/// Post-stratified total `T_b + N_c · T̂_c / N̂_c`. A population without a
/// missing stratum (`N_c = 0`) returns `T_b` directly.
pub(crate) fn post_stratified(
    d: &[f64],
    delta: &[u32],
    y: &[f64],
    t_b: f64,
    n_c: f64,
) -> Result<f64> {
    if n_c == 0.0 {
        return Ok(t_b);
    }
    let (t_c, n_c_hat) = complement_sums(d, delta, y);
    if n_c_hat == 0.0 {
        return Err(Error::DegenerateStratum);
    }
    Ok(t_b + n_c * t_c / n_c_hat)
}

/// Post-stratified data-integration estimator
/// `T̂_PDI = T_b + (N - N_b) Σ d_i (1-δ_i) y_i / Σ d_i (1-δ_i)`.
///
/// With `bd.n == None` the unadjusted `T̂_DI = T_b + Σ d_i (1-δ_i) y_i` is
/// returned instead, tagged [`EstimatorTag::Di`].
pub fn pdi_total(
    sample: &ProbabilitySample,
    delta: &[u32],
    y: &[f64],
    bd: &BigDataTotals,
) -> Result<EstimateReport> {
    check_len("delta", sample.len(), delta.len())?;
    check_len("values", sample.len(), y.len())?;
    match bd.n_c() {
        Some(n_c) => {
            let total = post_stratified(sample.d(), delta, y, bd.t_b, n_c)?;
            Ok(EstimateReport::new(EstimatorTag::Pdi, total, bd.n)
                .with_controls("post-strata (delta = 0, delta = 1)"))
        }
        None => {
            let (t_c, _) = complement_sums(sample.d(), delta, y);
            Ok(EstimateReport::new(EstimatorTag::Di, bd.t_b + t_c, None)
                .with_note("population size unknown; unadjusted estimator"))
        }
    }
}

/// `T̂_RatDI = T_b · T̂_a / T̂_b` with `T̂_b = Σ_A d_i δ_i y_i`.
pub fn ratio_di_total(
    sample: &ProbabilitySample,
    delta: &[u32],
    y: &[f64],
    t_b: f64,
    population_size: Option<f64>,
) -> Result<EstimateReport> {
    check_len("delta", sample.len(), delta.len())?;
    check_len("values", sample.len(), y.len())?;
    let (t_a, t_b_hat) = sample
        .d()
        .iter()
        .zip(delta)
        .zip(y)
        .fold((0.0, 0.0), |(ta, tb), ((&d, &dl), &yi)| {
            (ta + d * yi, tb + d * dl as f64 * yi)
        });
    if t_b_hat == 0.0 {
        return Err(Error::ZeroRatioDenominator);
    }
    Ok(
        EstimateReport::new(EstimatorTag::RatioDi, t_b * t_a / t_b_hat, population_size)
            .with_controls("delta * y"),
    )
}

/// `Var(T̂_PDI) ≈ (1 - W_b) N² S_c² / n` under SRS with negligible `n/N`.
pub fn pdi_variance_approx(w_b: f64, s_c2: f64, population: f64, n: f64) -> f64 {
    if w_b >= 1.0 {
        return 0.0;
    }
    (1.0 - w_b) * population * population / n * s_c2
}

/// Effective sample size `n* = n / (1 - W_b) · S² / S_c²`.
pub fn effective_sample_size(n: f64, w_b: f64, s2: f64, s_c2: f64) -> Result<f64> {
    if !(s_c2 > 0.0) {
        return Err(Error::InvalidArgument("S_c^2 must be positive".into()));
    }
    if !(w_b < 1.0) {
        return Err(Error::InvalidArgument("W_b must be below 1".into()));
    }
    Ok(n / (1.0 - w_b) * s2 / s_c2)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostCheck {
    pub cost_effective: bool,
    /// `(n/N) / (1 - W_b)`; the integration is cheaper iff `c_b/c_a` is at most this.
    pub threshold: f64,
}

pub fn cost_effective(c_a: f64, c_b: f64, n: f64, population: f64, w_b: f64) -> Result<CostCheck> {
    if !(c_a > 0.0) {
        return Err(Error::InvalidArgument("c_a must be positive".into()));
    }
    let threshold = if w_b >= 1.0 {
        f64::INFINITY
    } else {
        n / population / (1.0 - w_b)
    };
    Ok(CostCheck {
        cost_effective: c_b / c_a <= threshold,
        threshold,
    })
}
