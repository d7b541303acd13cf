//! Weighted normal equations shared by calibration and residual variance.

use nalgebra::{DMatrix, DVector, SVD};

use crate::error::{Error, Result};

/// Largest admissible condition number of the column-scaled Gram matrix.
pub const MAX_CONDITION: f64 = 1e12;

/// Loading above which a control is reported as part of a collinear set.
const COLLINEAR_LOADING: f64 = 0.1;

/// Solver for `G a = b` with `G = Σ d_i x_i x_iᵀ`.
///
/// Columns are scaled to unit weighted RMS before the SVD; solutions are
/// mapped back, so callers only see the original coordinates.
pub struct GramSolver {
    svd: SVD<f64, nalgebra::Dyn, nalgebra::Dyn>,
    scale: DVector<f64>,
    condition: f64,
}

impl GramSolver {
    pub fn new(x: &DMatrix<f64>, d: &[f64], names: &[String]) -> Result<Self> {
        let (n, p) = x.shape();
        if d.len() != n {
            return Err(Error::LengthMismatch {
                what: "design weights vs control rows",
                expected: n,
                found: d.len(),
            });
        }
        let weight_sum: f64 = d.iter().sum();
        let mut scale = DVector::zeros(p);
        let mut zero_columns = Vec::new();
        for j in 0..p {
            let ms: f64 = (0..n).map(|i| d[i] * x[(i, j)] * x[(i, j)]).sum::<f64>() / weight_sum;
            if !(ms > 0.0) || !ms.is_finite() {
                zero_columns.push(control_name(names, j));
            }
            scale[j] = ms.sqrt();
        }
        if !zero_columns.is_empty() {
            return Err(Error::SingularGram {
                condition: f64::INFINITY,
                controls: zero_columns,
            });
        }

        let mut gram: DMatrix<f64> = DMatrix::zeros(p, p);
        for i in 0..n {
            for a in 0..p {
                let xa = d[i] * x[(i, a)] / scale[a];
                for b in a..p {
                    gram[(a, b)] += xa * x[(i, b)] / scale[b];
                }
            }
        }
        for a in 0..p {
            for b in 0..a {
                gram[(a, b)] = gram[(b, a)];
            }
        }

        let svd = gram.svd(true, true);
        let smax = svd.singular_values.max();
        let smin = svd.singular_values.min();
        let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
        if !(condition <= MAX_CONDITION) {
            let v_t = svd.v_t.as_ref().expect("svd computed with v");
            let weakest = svd.singular_values.imin();
            let controls = (0..p)
                .filter(|&j| v_t[(weakest, j)].abs() >= COLLINEAR_LOADING)
                .map(|j| control_name(names, j))
                .collect();
            return Err(Error::SingularGram { condition, controls });
        }
        Ok(Self {
            svd,
            scale,
            condition,
        })
    }

    pub fn condition(&self) -> f64 {
        self.condition
    }

    pub fn dim(&self) -> usize {
        self.scale.len()
    }

    pub fn solve(&self, rhs: &DVector<f64>) -> DVector<f64> {
        let scaled = rhs.component_div(&self.scale);
        let sol = self
            .svd
            .solve(&scaled, 0.0)
            .expect("svd computed with u and v");
        sol.component_div(&self.scale)
    }
}

fn control_name(names: &[String], j: usize) -> String {
    names.get(j).cloned().unwrap_or_else(|| format!("x{}", j + 1))
}

/// `Σ d_i x_i v_i` for a per-unit vector `v`.
pub fn weighted_cross(x: &DMatrix<f64>, d: &[f64], v: &[f64]) -> DVector<f64> {
    let (n, p) = x.shape();
    let mut out = DVector::zeros(p);
    for i in 0..n {
        let dv = d[i] * v[i];
        for j in 0..p {
            out[j] += dv * x[(i, j)];
        }
    }
    out
}

/// `Σ d_i x_i`.
pub fn weighted_column_sums(x: &DMatrix<f64>, d: &[f64]) -> DVector<f64> {
    let (n, p) = x.shape();
    let mut out = DVector::zeros(p);
    for i in 0..n {
        for j in 0..p {
            out[j] += d[i] * x[(i, j)];
        }
    }
    out
}
