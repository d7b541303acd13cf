//! Chi-square calibration weighting and the regression data-integration
//! estimator.
//!
//! Weights minimise `Q(d, w) = Σ d_i (w_i/d_i - 1)²` subject to
//! `Σ w_i x_i = X_N`. The minimiser is
//! `w_i = d_i {1 + (X_N - Σ d_j x_j)ᵀ (Σ d_j x_j x_jᵀ)⁻¹ x_i}`, which equals
//! `d_i X_Nᵀ (Σ d_j x_j x_jᵀ)⁻¹ x_i` whenever a constant lies in the span of
//! the controls (true for every built-in variant).

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{check_len, Error, Result};
use crate::estimators::{BigDataTotals, EstimateReport, EstimatorTag};
use crate::linalg::{weighted_column_sums, GramSolver};
use crate::population::ProbabilitySample;
use crate::variance;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AuxScope {
    /// `z` observed in both samples: control `δ z` with total `Σ_B z`.
    BothSamples,
    /// `z` known for every population unit: control `z` with total `Σ_U z`.
    Population,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ControlVariant {
    /// `(1-δ, δ, δy)` with totals `(N_c, N_b, T_b)`.
    Standard,
    /// Standard controls plus one auxiliary variable.
    WithAuxZ(AuxScope),
    /// `δ` is a multiplicity: `(1, δ, δy)` with totals `Σ_U (1, δ, δy)`.
    Duplication,
    /// `(1-δ, δ, δy*)` with totals `(N_c, N_b, Σ_B y*)`.
    ProxyYStar,
    /// `(1, δ̂, δ̂y)` with totals `(N, Σ_B δ̂/p̂, Σ_B δ̂y/p̂)`.
    ClassifierCorrected,
}

/// Per-unit control vectors of sample A with the known population totals.
#[derive(Debug, Clone)]
pub struct ControlSpec {
    pub variant: ControlVariant,
    pub names: Vec<String>,
    /// `n × p`, one row per sampled unit.
    pub x: DMatrix<f64>,
    pub totals: DVector<f64>,
    pub population_size: Option<f64>,
}

impl ControlSpec {
    pub fn new(
        variant: ControlVariant,
        names: Vec<String>,
        x: DMatrix<f64>,
        totals: DVector<f64>,
        population_size: Option<f64>,
    ) -> Result<Self> {
        check_len("control totals", x.ncols(), totals.len())?;
        check_len("control names", x.ncols(), names.len())?;
        Ok(Self {
            variant,
            names,
            x,
            totals,
            population_size,
        })
    }

    /// Standard controls `(1-δ, δ, δy)`.
    pub fn standard(delta: &[u32], y: &[f64], bd: &BigDataTotals) -> Result<Self> {
        let n = bd
            .n
            .ok_or_else(|| Error::Missing("population size N".into()))?;
        partitioned(ControlVariant::Standard, "delta*y", delta, y, n, bd.n_b, bd.t_b, None)
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn describe(&self) -> String {
        format!("{:?}: ({})", self.variant, self.names.join(", "))
    }
}

/// Sample-A columns available for building controls.
#[derive(Debug, Clone, Copy, Default)]
pub struct SampleColumns<'a> {
    pub delta: &'a [u32],
    pub y: Option<&'a [f64]>,
    pub y_star: Option<&'a [f64]>,
    pub aux: Option<&'a [f64]>,
    pub delta_hat: Option<&'a [u32]>,
}

/// Known population or big-data summaries.
#[derive(Debug, Clone, Copy, Default)]
pub struct BigSummaries {
    pub n: f64,
    pub n_b: f64,
    pub t_b: Option<f64>,
    pub t_b_star: Option<f64>,
    pub aux_total: Option<f64>,
    /// `(N̂_b2, T̂_b2)` from propensity-weighted big-data sums.
    pub propensity: Option<(f64, f64)>,
}

fn need<T: Copy>(v: Option<T>, what: &str) -> Result<T> {
    v.ok_or_else(|| Error::Missing(what.to_string()))
}

/// `δ v`, taking `0` for units outside B even when `v` is missing.
fn masked(delta: u32, v: f64) -> f64 {
    if delta == 0 {
        0.0
    } else {
        delta as f64 * v
    }
}

#[allow(clippy::too_many_arguments)]
fn partitioned(
    variant: ControlVariant,
    third: &str,
    delta: &[u32],
    v: &[f64],
    n: f64,
    n_b: f64,
    t: f64,
    extra: Option<(String, Vec<f64>, f64)>,
) -> Result<ControlSpec> {
    check_len("control values", delta.len(), v.len())?;
    let rows = delta.len();
    let p = if extra.is_some() { 4 } else { 3 };
    let mut x = DMatrix::zeros(rows, p);
    for i in 0..rows {
        x[(i, 0)] = if delta[i] == 0 { 1.0 } else { 0.0 };
        x[(i, 1)] = delta[i] as f64;
        x[(i, 2)] = masked(delta[i], v[i]);
    }
    let mut names = vec!["1-delta".to_string(), "delta".to_string(), third.to_string()];
    let mut totals = vec![n - n_b, n_b, t];
    if let Some((name, col, total)) = extra {
        check_len("auxiliary control", rows, col.len())?;
        for (i, c) in col.into_iter().enumerate() {
            x[(i, 3)] = c;
        }
        names.push(name);
        totals.push(total);
    }
    ControlSpec::new(variant, names, x, DVector::from_vec(totals), Some(n))
}

pub fn build_controls(
    variant: ControlVariant,
    cols: &SampleColumns<'_>,
    big: &BigSummaries,
) -> Result<ControlSpec> {
    let delta = cols.delta;
    match variant {
        ControlVariant::Standard => partitioned(
            variant,
            "delta*y",
            delta,
            need(cols.y, "y in sample A")?,
            big.n,
            big.n_b,
            need(big.t_b, "big-data total T_b")?,
            None,
        ),
        ControlVariant::ProxyYStar => partitioned(
            variant,
            "delta*y_star",
            delta,
            need(cols.y_star, "y_star in sample A")?,
            big.n,
            big.n_b,
            need(big.t_b_star, "big-data proxy total")?,
            None,
        ),
        ControlVariant::WithAuxZ(scope) => {
            let aux = need(cols.aux, "auxiliary z in sample A")?;
            check_len("auxiliary z", delta.len(), aux.len())?;
            let (name, col) = match scope {
                AuxScope::BothSamples => (
                    "delta*z".to_string(),
                    delta.iter().zip(aux).map(|(&d, &z)| masked(d, z)).collect(),
                ),
                AuxScope::Population => ("z".to_string(), aux.to_vec()),
            };
            partitioned(
                variant,
                "delta*y",
                delta,
                need(cols.y, "y in sample A")?,
                big.n,
                big.n_b,
                need(big.t_b, "big-data total T_b")?,
                Some((name, col, need(big.aux_total, "auxiliary total")?)),
            )
        }
        ControlVariant::Duplication => {
            let y = need(cols.y, "y in sample A")?;
            check_len("y", delta.len(), y.len())?;
            let t_b = need(big.t_b, "big-data total T_b")?;
            intercept_form(variant, delta, y, big.n, big.n_b, t_b)
        }
        ControlVariant::ClassifierCorrected => {
            let delta_hat = need(cols.delta_hat, "classifier labels in sample A")?;
            let y = need(cols.y, "y in sample A")?;
            check_len("y", delta_hat.len(), y.len())?;
            let (n_b2, t_b2) = need(big.propensity, "propensity totals")?;
            intercept_form(variant, delta_hat, y, big.n, n_b2, t_b2)
        }
    }
}

fn intercept_form(
    variant: ControlVariant,
    delta: &[u32],
    y: &[f64],
    n: f64,
    n_b: f64,
    t_b: f64,
) -> Result<ControlSpec> {
    let rows = delta.len();
    let mut x = DMatrix::zeros(rows, 3);
    for i in 0..rows {
        x[(i, 0)] = 1.0;
        x[(i, 1)] = delta[i] as f64;
        x[(i, 2)] = masked(delta[i], y[i]);
    }
    let label = if variant == ControlVariant::ClassifierCorrected {
        "delta_hat"
    } else {
        "delta"
    };
    ControlSpec::new(
        variant,
        vec!["1".into(), label.into(), format!("{label}*y")],
        x,
        DVector::from_vec(vec![n, n_b, t_b]),
        Some(n),
    )
}

#[derive(Debug, Clone)]
pub struct CalibrationResult {
    pub w: Vec<f64>,
    pub achieved_totals: DVector<f64>,
    /// Condition number of the column-scaled Gram matrix.
    pub gram_condition: f64,
    pub negative_weights: usize,
}

impl CalibrationResult {
    /// `Q(d, w)`.
    pub fn distance(&self, d: &[f64]) -> f64 {
        chi_square_distance(d, &self.w)
    }
}

pub fn chi_square_distance(d: &[f64], w: &[f64]) -> f64 {
    d.iter().zip(w).map(|(&di, &wi)| di * (wi / di - 1.0).powi(2)).sum()
}

pub fn solve_weights(sample: &ProbabilitySample, spec: &ControlSpec) -> Result<CalibrationResult> {
    solve_weights_for(sample.d(), spec)
}

/// Calibrated weights for design weights `d`.
pub fn solve_weights_for(d: &[f64], spec: &ControlSpec) -> Result<CalibrationResult> {
    check_len("control rows", d.len(), spec.n())?;
    let solver = GramSolver::new(&spec.x, d, &spec.names)?;
    let mut w = d.to_vec();
    let mut achieved = weighted_column_sums(&spec.x, d);
    // One correction step recovers accuracy lost in the first solve.
    for _ in 0..2 {
        let gap = &spec.totals - &achieved;
        if gap.iter().all(|&g| g == 0.0) {
            break;
        }
        let lambda = solver.solve(&gap);
        let adj = &spec.x * &lambda;
        for (wi, (&di, &ai)) in w.iter_mut().zip(d.iter().zip(adj.iter())) {
            *wi += di * ai;
        }
        achieved = weighted_column_sums(&spec.x, &w);
    }
    let negative_weights = w.iter().filter(|&&v| v < 0.0).count();
    Ok(CalibrationResult {
        w,
        achieved_totals: achieved,
        gram_condition: solver.condition(),
        negative_weights,
    })
}

/// `max_j |Σ w_i x_ij - X_j| / (1 + ‖X‖_∞)`.
pub fn calibration_error(result: &CalibrationResult, spec: &ControlSpec) -> f64 {
    let scale = 1.0 + spec.totals.amax();
    (&result.achieved_totals - &spec.totals).amax() / scale
}

/// `T̂_RegDI = Σ w_i y_i`, with the linearization variance of the total
/// computed from residuals of `y` on the controls.
pub fn regdi_total(sample: &ProbabilitySample, y: &[f64], spec: &ControlSpec) -> Result<EstimateReport> {
    check_len("values", sample.len(), y.len())?;
    let cal = solve_weights(sample, spec)?;
    let total = cal.w.iter().zip(y).map(|(w, v)| w * v).sum();
    let resid = variance::regdi_residuals(sample, y, spec)?;
    let v = variance::ht_variance_quadratic(sample, &resid.e_hat)?;
    let mut report = EstimateReport::new(EstimatorTag::RegDi, total, spec.population_size)
        .with_variance(v)
        .with_controls(spec.describe());
    if cal.negative_weights > 0 {
        report = report.with_note(format!("{} negative calibrated weights", cal.negative_weights));
    }
    Ok(report)
}
