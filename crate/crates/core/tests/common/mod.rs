//! Independent reference computations shared by the integration tests and
//! the acceptance runner.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use survey_di::estimators::BigDataTotals;
use survey_di::population::{Design, ProbabilitySample};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Minimiser of `Σ (w_i - d_i)² / d_i` subject to `Xᵀ w = t`, from the full
/// KKT system `[diag(2/d) X; Xᵀ 0] [w; λ] = [2; t]` solved by LU.
pub fn kkt_weights(d: &[f64], x: &DMatrix<f64>, t: &DVector<f64>) -> Option<Vec<f64>> {
    let (n, p) = x.shape();
    let mut k = DMatrix::zeros(n + p, n + p);
    let mut rhs = DVector::zeros(n + p);
    for i in 0..n {
        k[(i, i)] = 2.0 / d[i];
        rhs[i] = 2.0;
        for j in 0..p {
            k[(i, n + j)] = x[(i, j)];
            k[(n + j, i)] = x[(i, j)];
        }
    }
    for j in 0..p {
        rhs[n + j] = t[j];
    }
    let sol = k.lu().solve(&rhs)?;
    Some(sol.rows(0, n).iter().copied().collect())
}

/// Spectral condition number of `Σ d_i x_i x_iᵀ`.
pub fn gram_condition(d: &[f64], x: &DMatrix<f64>) -> f64 {
    let mut g = DMatrix::zeros(x.ncols(), x.ncols());
    for i in 0..x.nrows() {
        let row = x.row(i).transpose();
        g += d[i] * &row * row.transpose();
    }
    let sv = g.singular_values();
    sv.max() / sv.min()
}

pub struct CalibrationCase {
    pub d: Vec<f64>,
    pub x: DMatrix<f64>,
    pub totals: DVector<f64>,
}

/// Random well-posed instance with `n ≤ 6` units and `p ≤ min(3, n)` controls.
pub fn calibration_case(rng: &mut ChaCha8Rng) -> CalibrationCase {
    loop {
        let n = rng.random_range(1..=6);
        let p = rng.random_range(1..=n.min(3));
        let d: Vec<f64> = (0..n).map(|_| rng.random_range(1.0..10.0)).collect();
        let x = DMatrix::from_fn(n, p, |_, _| rng.random_range(-2.0..2.0));
        if gram_condition(&d, &x) > 1e6 {
            continue;
        }
        let target: Vec<f64> = d.iter().map(|&di| di * rng.random_range(0.5..1.5)).collect();
        let totals = x.transpose() * DVector::from_vec(target);
        return CalibrationCase { d, x, totals };
    }
}

pub fn srs_sample(ids: Vec<usize>, population: usize) -> ProbabilitySample {
    let n = ids.len();
    ProbabilitySample::new(
        ids,
        vec![n as f64 / population as f64; n],
        Design::Srs {
            population,
            sample: n,
        },
    )
    .unwrap()
}

pub struct SmallPopulation {
    pub y: Vec<f64>,
    pub delta: Vec<u32>,
}

impl SmallPopulation {
    pub fn totals(&self) -> BigDataTotals {
        let t_b = self.y.iter().zip(&self.delta).map(|(y, &d)| d as f64 * y).sum();
        let n_b = self.delta.iter().map(|&d| d as f64).sum();
        BigDataTotals::new(t_b, n_b, self.y.len() as f64)
    }
}

/// Random population of 20..200 units and an SRS with at least two `δ = 1`
/// units (otherwise `δ` and `δy` are collinear) and one `δ = 0` unit.
pub fn small_population_with_sample(rng: &mut ChaCha8Rng) -> (SmallPopulation, ProbabilitySample) {
    loop {
        let n_pop = rng.random_range(20..=200);
        let cover: f64 = rng.random_range(0.1..0.9);
        let y: Vec<f64> = (0..n_pop).map(|_| rng.random_range(-5.0..20.0)).collect();
        let delta: Vec<u32> = (0..n_pop).map(|_| u32::from(rng.random::<f64>() < cover)).collect();
        let n = rng.random_range(4..=n_pop.min(60));
        let mut ids: Vec<usize> = rand::seq::index::sample(rng, n_pop, n).into_iter().map(|i| i + 1).collect();
        ids.sort_unstable();
        let in_b = ids.iter().filter(|&&i| delta[i - 1] == 1).count();
        if in_b < 2 || in_b == n {
            continue;
        }
        return (SmallPopulation { y, delta }, srs_sample(ids, n_pop));
    }
}

/// `Σ_A Σ_A (π_ij - π_i π_j)/π_ij (r_i/π_i)(r_j/π_j)` for SRS, written out
/// pair by pair.
pub fn srs_double_sum(population: usize, r: &[f64]) -> f64 {
    let (n, nn) = (r.len() as f64, population as f64);
    let pi = n / nn;
    let pij = n * (n - 1.0) / (nn * (nn - 1.0));
    let mut v = 0.0;
    for (i, &ri) in r.iter().enumerate() {
        for (j, &rj) in r.iter().enumerate() {
            let joint = if i == j { pi } else { pij };
            v += (joint - pi * pi) / joint * (ri / pi) * (rj / pi);
        }
    }
    v
}

/// Literal EM for the complement-class tables, one variable at a time.
pub fn reference_em(pi: f64, m: &[Vec<f64>], u0: &[Vec<f64>], z: &[Vec<usize>], d: &[f64], iters: usize) -> Vec<Vec<f64>> {
    let n = d.len();
    let mut u = u0.to_vec();
    for _ in 0..iters {
        let mut p = vec![0.0; n];
        for i in 0..n {
            let mut a = pi;
            let mut b = 1.0 - pi;
            for k in 0..m.len() {
                a *= m[k][z[k][i]];
                b *= u[k][z[k][i]];
            }
            p[i] = if a + b > 0.0 { a / (a + b) } else { 0.0 };
        }
        let den: f64 = (0..n).map(|i| d[i] * (1.0 - p[i])).sum();
        for k in 0..m.len() {
            for lvl in 0..u[k].len() {
                let num: f64 = (0..n).filter(|&i| z[k][i] == lvl).map(|i| d[i] * (1.0 - p[i])).sum();
                u[k][lvl] = num / den;
            }
        }
    }
    u
}
