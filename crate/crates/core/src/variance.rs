//! Linearization variance estimators for the data-integration estimators.
//!
//! All estimators share the quadratic form
//! `V̂ = Σ_A Σ_A (π_ij - π_i π_j)/π_ij · (r_i/π_i)(r_j/π_j)` applied to
//! estimator-specific residuals `r`. Under SRS the double sum collapses to
//! `N² (1 - n/N) s_r² / n`, which is what [`ht_variance_quadratic`] evaluates
//! for SRS designs; [`ht_variance_double_sum`] keeps the generic route.

use nalgebra::{Matrix2, Vector2};
use serde::Serialize;

use crate::calibration::ControlSpec;
use crate::error::{check_len, Error, Result};
use crate::linalg::{weighted_cross, GramSolver};
use crate::mismeasure::{fit_weighted_line, LinearizationTerms, MeasurementModel};
use crate::population::{Design, ProbabilitySample};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ResidualKind {
    RegDi,
    TwoStep,
    Scenario2Custom,
    MassImputation,
}

#[derive(Debug, Clone)]
pub struct ResidualSet {
    pub e_hat: Vec<f64>,
    pub coefficients: Vec<f64>,
    pub kind: ResidualKind,
}

pub fn ht_variance_quadratic(sample: &ProbabilitySample, r: &[f64]) -> Result<f64> {
    check_len("residuals", sample.len(), r.len())?;
    match sample.design() {
        Design::Srs { population, .. } if sample.len() >= 2 => {
            Ok(srs_variance_closed_form(*population, r))
        }
        _ => ht_variance_double_sum(sample, r),
    }
}

/// Generic `O(n²)` evaluation against the sample's joint inclusion probabilities.
pub fn ht_variance_double_sum(sample: &ProbabilitySample, r: &[f64]) -> Result<f64> {
    check_len("residuals", sample.len(), r.len())?;
    let pi = sample.pi();
    let n = sample.len();
    let expanded: Vec<f64> = r.iter().zip(pi).map(|(ri, p)| ri / p).collect();
    let mut total = 0.0;
    for a in 0..n {
        total += (1.0 - pi[a]) * expanded[a] * expanded[a];
        let mut row = 0.0;
        for b in (a + 1)..n {
            let pab = sample.joint_pi(a, b);
            if !(pab > 0.0) {
                return Err(Error::MissingJointProbability(a, b));
            }
            row += (pab - pi[a] * pi[b]) / pab * expanded[b];
        }
        total += 2.0 * expanded[a] * row;
    }
    Ok(total)
}

/// `N² (1 - n/N) s_r² / n` with `s_r²` the sample variance (divisor `n - 1`).
pub fn srs_variance_closed_form(population: usize, r: &[f64]) -> f64 {
    let n = r.len() as f64;
    let nn = population as f64;
    let mean = r.iter().sum::<f64>() / n;
    let s2 = r.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    nn * nn * (1.0 - n / nn) * s2 / n
}

fn residuals_against(
    sample: &ProbabilitySample,
    y: &[f64],
    spec: &ControlSpec,
    kind: ResidualKind,
) -> Result<ResidualSet> {
    check_len("values", sample.len(), y.len())?;
    check_len("control rows", sample.len(), spec.n())?;
    let solver = GramSolver::new(&spec.x, sample.d(), &spec.names)?;
    let coef = solver.solve(&weighted_cross(&spec.x, sample.d(), y));
    let fitted = &spec.x * &coef;
    Ok(ResidualSet {
        e_hat: y.iter().zip(fitted.iter()).map(|(v, f)| v - f).collect(),
        coefficients: coef.iter().copied().collect(),
        kind,
    })
}

/// `ê_i = y_i - x_iᵀ B̂`, `B̂ = (Σ d x xᵀ)⁻¹ Σ d x y`.
pub fn regdi_residuals(sample: &ProbabilitySample, y: &[f64], spec: &ControlSpec) -> Result<ResidualSet> {
    residuals_against(sample, y, spec, ResidualKind::RegDi)
}

/// Residuals of the mass-imputed `ŷ` on the controls; `β̂` uncertainty is ignored.
pub fn two_step_residuals(sample: &ProbabilitySample, y_hat: &[f64], spec: &ControlSpec) -> Result<ResidualSet> {
    residuals_against(sample, y_hat, spec, ResidualKind::TwoStep)
}

/// Proxy-controlled residuals written out directly:
/// `y_i - (b̂_0 + b̂_1 y*_i)` on `δ = 1`, where `(b̂_0, b̂_1)` is the weighted
/// least-squares line of `y` on `y*` over `A ∩ B`, and `y_i - ȳ_c` on `δ = 0`.
pub fn proxy_residuals(
    sample: &ProbabilitySample,
    y: &[f64],
    y_star: &[f64],
    delta: &[u32],
) -> Result<ResidualSet> {
    check_len("values", sample.len(), y.len())?;
    check_len("proxy values", sample.len(), y_star.len())?;
    check_len("delta", sample.len(), delta.len())?;
    let d = sample.d();
    let matched: Vec<usize> = (0..sample.len()).filter(|&i| delta[i] > 0).collect();
    let (b0, b1) = fit_weighted_line(
        &matched.iter().map(|&i| d[i]).collect::<Vec<_>>(),
        &matched.iter().map(|&i| y[i]).collect::<Vec<_>>(),
        &matched.iter().map(|&i| y_star[i]).collect::<Vec<_>>(),
    )?;
    let (t_c, n_c) = crate::estimators::complement_sums(d, delta, y);
    if n_c == 0.0 {
        return Err(Error::DegenerateStratum);
    }
    let y_bar_c = t_c / n_c;
    let e_hat = (0..sample.len())
        .map(|i| {
            if delta[i] > 0 {
                y[i] - (b0 + b1 * y_star[i])
            } else {
                y[i] - y_bar_c
            }
        })
        .collect();
    Ok(ResidualSet {
        e_hat,
        coefficients: vec![y_bar_c, b0, b1],
        kind: ResidualKind::Scenario2Custom,
    })
}

/// Variance estimate of the uncalibrated mass-imputation mean
/// `θ̂_DI = N⁻¹ Σ_A d_i ŷ_i`.
#[derive(Debug, Clone)]
pub struct MassImputationVariance {
    /// `V̂_2` on the mean scale.
    pub v2: f64,
    pub u_hat: Vec<f64>,
    pub kappa: [f64; 2],
    pub notes: Vec<String>,
}

/// `V̂_2 = N⁻² Σ Σ (π_ij - π_i π_j)/π_ij (û_i/π_i)(û_j/π_j)` with
/// `û_i = q̂_i + δ_i {y*_i - m(y_i; β̂)} κ̂ᵀ ĥ_i` and
/// `κ̂ = {Σ_A d_i δ_i ṁ_i h_iᵀ}⁻¹ Σ_A d_i q̇_i`.
pub fn mass_imputation_variance(
    sample: &ProbabilitySample,
    terms: &LinearizationTerms,
    delta: &[u32],
    y_star: &[f64],
    y: &[f64],
    model: &MeasurementModel,
    population: f64,
) -> Result<MassImputationVariance> {
    let n = sample.len();
    check_len("linearization terms", n, terms.q.len())?;
    check_len("delta", n, delta.len())?;
    check_len("proxy values", n, y_star.len())?;
    check_len("values", n, y.len())?;
    let d = sample.d();
    let mut lhs = Matrix2::zeros();
    let mut rhs = Vector2::zeros();
    for i in 0..n {
        rhs += d[i] * Vector2::from(terms.q_dot[i]);
        if delta[i] > 0 {
            lhs += d[i] * Vector2::from(terms.m_dot[i]) * Vector2::from(terms.h[i]).transpose();
        }
    }
    let kappa = lhs
        .try_inverse()
        .filter(|inv| inv.iter().all(|v| v.is_finite()))
        .ok_or_else(|| Error::DegenerateMeasurement("singular matched-side system for kappa".into()))?
        * rhs;
    let u_hat: Vec<f64> = (0..n)
        .map(|i| {
            let correction = if delta[i] > 0 {
                (y_star[i] - model.forward(y[i])) * Vector2::from(terms.h[i]).dot(&kappa)
            } else {
                0.0
            };
            terms.q[i] + correction
        })
        .collect();
    let v2 = ht_variance_quadratic(sample, &u_hat)? / (population * population);
    Ok(MassImputationVariance {
        v2,
        u_hat,
        kappa: [kappa[0], kappa[1]],
        notes: vec!["V1 = Var(q_bar_N - theta) omitted (order 1/N)".into()],
    })
}

/// `mean(V̂) / Var_MC(θ̂) - 1` over `(estimate, variance estimate)` pairs.
pub fn variance_relative_bias(replicates: &[(f64, f64)]) -> Result<f64> {
    if replicates.len() < 2 {
        return Err(Error::InvalidArgument("at least two replicates required".into()));
    }
    let r = replicates.len() as f64;
    let mean_est = replicates.iter().map(|p| p.0).sum::<f64>() / r;
    let mc_var = replicates.iter().map(|p| (p.0 - mean_est).powi(2)).sum::<f64>() / (r - 1.0);
    if mc_var == 0.0 {
        return Err(Error::ZeroMonteCarloVariance);
    }
    let mean_v = replicates.iter().map(|p| p.1).sum::<f64>() / r;
    Ok(mean_v / mc_var - 1.0)
}
