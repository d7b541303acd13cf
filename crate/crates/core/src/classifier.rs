//! Semi-supervised naive-Bayes classification of sample-A units into the
//! big-data population B or its complement, and the propensity-corrected
//! data-integration estimator built on the resulting posteriors.
//!
//! The big-data side `m_kd = P(z_k = level d | δ = 1)` is read straight off
//! sample B and stays fixed, as does the prior `π = N_b / N`. Only the
//! complement side `u_kd` is estimated, by design-weighted EM over sample A:
//!
//! * E-step: `p̂_i = π Π_k m_ik / {π Π_k m_ik + (1-π) Π_k u_ik}`
//! * M-step: `u_kd = Σ_A d_i (1-p̂_i) I(z_ik = d) / Σ_A d_i (1-p̂_i)`
//!
//! Each iteration cannot decrease the observed-data pseudo log-likelihood
//! `Σ_A d_i log{π Π_k m_ik + (1-π) Π_k u_ik}`; the fit records every
//! iteration's value and counts any decrease beyond a relative slack.

use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{check_len, Error, Result};
use crate::estimators::{post_stratified, EstimateReport, EstimatorTag};
use crate::population::ProbabilitySample;

/// Sorted category levels of each matching variable.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LevelDomain {
    levels: Vec<Vec<u32>>,
}

impl LevelDomain {
    pub fn new(mut levels: Vec<Vec<u32>>) -> Self {
        for l in &mut levels {
            l.sort_unstable();
            l.dedup();
        }
        Self { levels }
    }

    /// Levels `lo..=hi` for each variable.
    pub fn from_ranges(ranges: &[(u32, u32)]) -> Self {
        Self::new(ranges.iter().map(|&(lo, hi)| (lo..=hi).collect()).collect())
    }

    /// Union of the values observed in any of the given column sets.
    pub fn observed(samples: &[&[Vec<u32>]]) -> Result<Self> {
        let k = samples.first().map_or(0, |s| s.len());
        let mut levels = vec![Vec::new(); k];
        for s in samples {
            check_len("matching variables", k, s.len())?;
            for (dst, col) in levels.iter_mut().zip(s.iter()) {
                dst.extend_from_slice(col);
            }
        }
        Ok(Self::new(levels))
    }

    pub fn k(&self) -> usize {
        self.levels.len()
    }

    pub fn levels(&self, k: usize) -> &[u32] {
        &self.levels[k]
    }

    /// Column-wise level indices; fails on values outside the domain.
    pub fn encode(&self, z: &[Vec<u32>]) -> Result<Vec<Vec<usize>>> {
        check_len("matching variables", self.k(), z.len())?;
        z.iter()
            .zip(&self.levels)
            .enumerate()
            .map(|(k, (col, lv))| {
                col.iter()
                    .map(|v| {
                        lv.binary_search(v).map_err(|_| {
                            Error::InvalidArgument(format!("z{} value {v} outside the level domain", k + 1))
                        })
                    })
                    .collect()
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassifierModel {
    pub pi: f64,
    pub m: Vec<Vec<f64>>,
    pub u: Vec<Vec<f64>>,
    pub domain: LevelDomain,
}

impl ClassifierModel {
    pub fn new(pi: f64, m: Vec<Vec<f64>>, u: Vec<Vec<f64>>, domain: LevelDomain) -> Result<Self> {
        if !(pi > 0.0 && pi < 1.0) {
            return Err(Error::InvalidArgument(format!("prior pi = {pi} outside (0, 1)")));
        }
        check_len("m table rows", domain.k(), m.len())?;
        check_len("u table rows", domain.k(), u.len())?;
        for k in 0..domain.k() {
            check_len("m table row", domain.levels(k).len(), m[k].len())?;
            check_len("u table row", domain.levels(k).len(), u[k].len())?;
        }
        Ok(Self { pi, m, u, domain })
    }

    fn posterior_encoded(&self, levels: impl Iterator<Item = (usize, usize)>) -> f64 {
        let (mut pm, mut pu) = (self.pi, 1.0 - self.pi);
        for (k, d) in levels {
            pm *= self.m[k][d];
            pu *= self.u[k][d];
        }
        mixture_posterior(pm, pu)
    }

    /// `P̂(δ = 1 | z)` for every unit of the given columns.
    pub fn posteriors(&self, z: &[Vec<u32>]) -> Result<Vec<f64>> {
        let enc = self.domain.encode(z)?;
        Ok(posteriors_encoded(self, &enc))
    }

    /// Key-value dump: `pi`, `k`, `levels.<k>`, then `m.<k>.<level>` and
    /// `u.<k>.<level>` lines, variables numbered from 1.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "pi={}", self.pi);
        let _ = writeln!(out, "k={}", self.domain.k());
        for k in 0..self.domain.k() {
            let lv: Vec<String> = self.domain.levels(k).iter().map(u32::to_string).collect();
            let _ = writeln!(out, "levels.{}={}", k + 1, lv.join(","));
        }
        for (name, table) in [("m", &self.m), ("u", &self.u)] {
            for (k, row) in table.iter().enumerate() {
                for (lvl, v) in self.domain.levels(k).iter().zip(row) {
                    let _ = writeln!(out, "{name}.{}.{lvl}={v}", k + 1);
                }
            }
        }
        out
    }
}

/// `a / (a + b)` with `0/0` mapped to 0.
fn mixture_posterior(pm: f64, pu: f64) -> f64 {
    let den = pm + pu;
    if den > 0.0 {
        pm / den
    } else {
        0.0
    }
}

fn posteriors_encoded(model: &ClassifierModel, enc: &[Vec<usize>]) -> Vec<f64> {
    let n = enc.first().map_or(0, Vec::len);
    (0..n)
        .map(|i| model.posterior_encoded(enc.iter().enumerate().map(|(k, col)| (k, col[i]))))
        .collect()
}

fn observed_loglik_encoded(model: &ClassifierModel, enc: &[Vec<usize>], d: &[f64]) -> f64 {
    (0..d.len())
        .map(|i| {
            let (mut pm, mut pu) = (model.pi, 1.0 - model.pi);
            for (k, col) in enc.iter().enumerate() {
                pm *= model.m[k][col[i]];
                pu *= model.u[k][col[i]];
            }
            d[i] * (pm + pu).ln()
        })
        .sum()
}

/// `Σ_A d_i log{π Π_k m_ik + (1-π) Π_k u_ik}`.
pub fn observed_loglik(model: &ClassifierModel, z: &[Vec<u32>], d: &[f64]) -> Result<f64> {
    let enc = model.domain.encode(z)?;
    check_len("design weights", enc.first().map_or(0, Vec::len), d.len())?;
    Ok(observed_loglik_encoded(model, &enc, d))
}

/// `m̂_kd = N_B⁻¹ Σ_B I(z_ik = level d)`, one row per matching variable.
pub fn estimate_m(big_z: &[Vec<u32>], domain: &LevelDomain) -> Result<Vec<Vec<f64>>> {
    let enc = domain.encode(big_z)?;
    let n = enc.first().map_or(0, Vec::len);
    if n == 0 {
        return Err(Error::EmptyBigData);
    }
    Ok(enc
        .iter()
        .enumerate()
        .map(|(k, col)| {
            let mut counts = vec![0usize; domain.levels(k).len()];
            for &lvl in col {
                counts[lvl] += 1;
            }
            counts.into_iter().map(|c| c as f64 / n as f64).collect()
        })
        .collect())
}

/// Starting `u`: design-weighted level frequencies in sample A plus
/// `1/(2 n_A)` per cell, renormalized.
pub fn initial_u(z_a: &[Vec<u32>], d: &[f64], domain: &LevelDomain) -> Result<Vec<Vec<f64>>> {
    let enc = domain.encode(z_a)?;
    let n = d.len();
    if n == 0 {
        return Err(Error::InvalidArgument("sample A is empty".into()));
    }
    let total: f64 = d.iter().sum();
    let smooth = 1.0 / (2.0 * n as f64);
    enc
        .iter()
        .enumerate()
        .map(|(k, col)| {
            check_len("matching column", n, col.len()).map(|_| {
                let mut freq = vec![smooth; domain.levels(k).len()];
                for (&lvl, &di) in col.iter().zip(d) {
                    freq[lvl] += di / total;
                }
                let s: f64 = freq.iter().sum();
                freq.into_iter().map(|f| f / s).collect()
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmOptions {
    /// Convergence threshold on `max |u_new - u_old|`.
    pub tol: f64,
    pub max_iter: usize,
    /// A decrease larger than `ascent_slack · |loglik|` counts as a violation.
    pub ascent_slack: f64,
}

impl Default for EmOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 1_000,
            ascent_slack: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorSet {
    pub p_hat: Vec<f64>,
    pub delta_hat: Vec<u32>,
    /// Observed-data log-likelihood at the start and after each M-step.
    pub loglik_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub ascent_violations: usize,
}

/// Fits `u` by EM on sample A; `seed` supplies `π`, `m` and the starting `u`.
pub fn em_fit(
    z_a: &[Vec<u32>],
    d: &[f64],
    seed: ClassifierModel,
    opts: &EmOptions,
) -> Result<(ClassifierModel, PosteriorSet)> {
    let enc = seed.domain.encode(z_a)?;
    let n = d.len();
    for col in &enc {
        check_len("matching column", n, col.len())?;
    }
    let mut model = seed;
    let mut loglik = observed_loglik_encoded(&model, &enc, d);
    let mut trace = vec![loglik];
    let mut violations = 0;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < opts.max_iter {
        iterations += 1;
        let p = posteriors_encoded(&model, &enc);
        let mut next: Vec<Vec<f64>> = model.u.iter().map(|row| vec![0.0; row.len()]).collect();
        for (k, col) in enc.iter().enumerate() {
            for i in 0..n {
                next[k][col[i]] += d[i] * (1.0 - p[i]);
            }
        }
        for row in &mut next {
            let s: f64 = row.iter().sum();
            if !(s > 0.0) {
                return Err(Error::DegenerateFit);
            }
            row.iter_mut().for_each(|v| *v /= s);
        }
        let change = next
            .iter()
            .flatten()
            .zip(model.u.iter().flatten())
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        model.u = next;

        let updated = observed_loglik_encoded(&model, &enc, d);
        if updated < loglik - opts.ascent_slack * loglik.abs() {
            violations += 1;
        }
        loglik = updated;
        trace.push(loglik);
        if change <= opts.tol {
            converged = true;
            break;
        }
    }

    let p_hat = posteriors_encoded(&model, &enc);
    let delta_hat = classify(&p_hat);
    Ok((
        model,
        PosteriorSet {
            p_hat,
            delta_hat,
            loglik_trace: trace,
            iterations,
            converged,
            ascent_violations: violations,
        },
    ))
}

/// `δ̂_i = 1` iff `p̂_i > 1/2`.
pub fn classify(p_hat: &[f64]) -> Vec<u32> {
    p_hat.iter().map(|&p| u32::from(p > 0.5)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PropensityTotals {
    /// `N̂_b2 = Σ_B δ̂_i / p̂_i`.
    pub n_b2: f64,
    /// `T̂_b2 = Σ_B δ̂_i y_i / p̂_i`.
    pub t_b2: f64,
    pub classified_in: usize,
}

/// Propensity-weighted big-data sums from each B unit's posterior.
pub fn propensity_totals(big_z: &[Vec<u32>], big_y: &[f64], model: &ClassifierModel) -> Result<PropensityTotals> {
    let p_hat = model.posteriors(big_z)?;
    check_len("big-data values", p_hat.len(), big_y.len())?;
    propensity_totals_from(&p_hat, big_y)
}

pub fn propensity_totals_from(p_hat: &[f64], big_y: &[f64]) -> Result<PropensityTotals> {
    check_len("big-data values", p_hat.len(), big_y.len())?;
    let mut out = PropensityTotals {
        n_b2: 0.0,
        t_b2: 0.0,
        classified_in: 0,
    };
    for (i, (&p, &y)) in p_hat.iter().zip(big_y).enumerate() {
        if p > 0.5 {
            if !(p > 0.0) {
                return Err(Error::ZeroPosterior { index: i });
            }
            out.n_b2 += 1.0 / p;
            out.t_b2 += y / p;
            out.classified_in += 1;
        }
    }
    Ok(out)
}

/// `T̂_PDI2 = T̂_b2 + (N - N̂_b2) Σ_A d_i (1-δ̂_i) y_i / Σ_A d_i (1-δ̂_i)`.
pub fn pdi2_total(
    sample: &ProbabilitySample,
    y: &[f64],
    delta_hat: &[u32],
    totals: &PropensityTotals,
    population: f64,
) -> Result<EstimateReport> {
    check_len("values", sample.len(), y.len())?;
    check_len("classifier labels", sample.len(), delta_hat.len())?;
    let total = post_stratified(sample.d(), delta_hat, y, totals.t_b2, population - totals.n_b2)?;
    Ok(EstimateReport::new(EstimatorTag::Pdi2, total, Some(population))
        .with_controls("(1, delta_hat, delta_hat*y) with propensity-weighted big-data totals")
        .with_note("assumes P(delta = 1 | z, y) = P(delta = 1 | z)"))
}

/// Nine cut points at the pooled 10%, .., 90% order statistics.
pub fn decile_cuts(values: &[f64]) -> Vec<f64> {
    let mut sorted: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    sorted.sort_by(f64::total_cmp);
    if sorted.is_empty() {
        return Vec::new();
    }
    (1..10)
        .map(|q| sorted[((q * sorted.len()) / 10).min(sorted.len() - 1)])
        .collect()
}

/// Decile category in `1..=10`.
pub fn categorize(value: f64, cuts: &[f64]) -> u32 {
    cuts.partition_point(|c| *c < value) as u32 + 1
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_var(pi: f64, m: Vec<f64>, u: Vec<f64>) -> ClassifierModel {
        let d = m.len() as u32;
        ClassifierModel::new(pi, vec![m], vec![u], LevelDomain::from_ranges(&[(1, d)])).unwrap()
    }

    #[test]
    fn m_counts_levels() {
        let dom = LevelDomain::from_ranges(&[(1, 2)]);
        let m = estimate_m(&[vec![1, 1, 2]], &dom).unwrap();
        assert!((m[0][0] - 2.0 / 3.0).abs() < 1e-15 && (m[0][1] - 1.0 / 3.0).abs() < 1e-15);
        let unit = estimate_m(&[vec![2, 2]], &dom).unwrap();
        assert_eq!(unit[0], vec![0.0, 1.0]);
        assert!(matches!(estimate_m(&[vec![]], &dom), Err(Error::EmptyBigData)));
    }

    #[test]
    fn m_rows_are_marginal() {
        let dom = LevelDomain::from_ranges(&[(1, 2), (1, 3)]);
        let m = estimate_m(&[vec![1, 2, 2, 1], vec![3, 3, 1, 2]], &dom).unwrap();
        assert_eq!(m[0], vec![0.5, 0.5]);
        assert_eq!(m[1], vec![0.25, 0.25, 0.5]);
    }

    #[test]
    fn zero_likelihood_level_gets_zero_posterior() {
        let seed = one_var(0.5, vec![1.0, 0.0], vec![0.3, 0.7]);
        let p = seed.posteriors(&[vec![2, 1, 2]]).unwrap();
        assert_eq!(p[0], 0.0);
        assert_eq!(p[2], 0.0);
        assert!(p[1] > 0.5);
    }

    #[test]
    fn symmetric_start_gives_prior_posterior() {
        let seed = one_var(0.3, vec![0.25; 4], vec![0.25; 4]);
        let p = seed.posteriors(&[vec![1, 2, 3, 4, 4]]).unwrap();
        assert!(p.iter().all(|&v| (v - 0.3).abs() < 1e-15));
    }

    #[test]
    fn decision_rule_is_strict() {
        assert_eq!(classify(&[0.51, 0.5, 0.49, 1.0, 0.0]), vec![1, 0, 0, 1, 0]);
    }

    #[test]
    fn em_rows_sum_to_one_and_ascend() {
        let dom = LevelDomain::from_ranges(&[(1, 3), (1, 2)]);
        let z_a = vec![vec![1, 2, 3, 3, 1, 2, 3, 1], vec![1, 1, 2, 2, 1, 2, 2, 1]];
        let d = vec![2.0; 8];
        let m = estimate_m(&[vec![1, 1, 2, 1], vec![1, 1, 1, 2]], &dom).unwrap();
        let u0 = initial_u(&z_a, &d, &dom).unwrap();
        let seed = ClassifierModel::new(0.4, m, u0, dom).unwrap();
        let (model, post) = em_fit(&z_a, &d, seed, &EmOptions::default()).unwrap();
        for row in &model.u {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        assert_eq!(post.ascent_violations, 0);
        for w in post.loglik_trace.windows(2) {
            assert!(w[1] >= w[0] - 1e-10 * w[0].abs());
        }
        let again = model.posteriors(&z_a).unwrap();
        assert_eq!(again, post.p_hat);
        assert_eq!(post.delta_hat, classify(&post.p_hat));
    }

    #[test]
    fn perfect_classification_propensity_totals() {
        let t = propensity_totals_from(&[1.0, 1.0, 1.0], &[2.0, 3.0, 4.0]).unwrap();
        assert_eq!((t.n_b2, t.t_b2, t.classified_in), (3.0, 9.0, 3));
        let none = propensity_totals_from(&[0.2, 0.4], &[2.0, 3.0]).unwrap();
        assert_eq!((none.n_b2, none.t_b2), (0.0, 0.0));
    }

    #[test]
    fn dump_lists_tables() {
        let model = one_var(0.5, vec![0.25, 0.75], vec![0.5, 0.5]);
        let text = model.dump();
        assert!(text.starts_with("pi=0.5\nk=1\nlevels.1=1,2\n"));
        assert!(text.contains("m.1.2=0.75\n"));
        assert!(text.contains("u.1.1=0.5\n"));
    }

    #[test]
    fn deciles() {
        let v: Vec<f64> = (1..=100).map(f64::from).collect();
        let cuts = decile_cuts(&v);
        assert_eq!(cuts.len(), 9);
        assert_eq!(categorize(1.0, &cuts), 1);
        assert_eq!(categorize(100.0, &cuts), 10);
        let cats: Vec<u32> = v.iter().map(|&x| categorize(x, &cuts)).collect();
        assert!(cats.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn encode_rejects_unknown_levels() {
        let dom = LevelDomain::from_ranges(&[(1, 2)]);
        assert!(dom.encode(&[vec![3]]).is_err());
    }
}
