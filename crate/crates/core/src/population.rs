//! Finite populations, the two synthetic study populations, and the sampling
//! designs that produce the probability sample A and the big-data sample B.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::seq::index;
use rand::Rng;
use rand_distr::{Bernoulli, Distribution, Normal, Uniform};

use crate::error::{check_len, Error, Result};
use crate::rng::{self, Domain, SimRng};

/// One unit of the population, as read from or written to CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitRecord {
    pub id: usize,
    pub y: f64,
    pub y_star: Option<f64>,
    pub z: Vec<u32>,
    /// Multiplicity in the big-data sample; 0 means not in B.
    pub delta: u32,
    pub stratum: Option<u32>,
}

/// Columnar finite population `U = {1, .., N}`. Unit `id` lives at index `id - 1`.
#[derive(Debug, Clone)]
pub struct FinitePopulation {
    y: Vec<f64>,
    /// NaN marks a unit whose proxy value is missing.
    y_star: Option<Vec<f64>>,
    z: Vec<Vec<u32>>,
    delta: Vec<u32>,
    stratum: Option<Vec<u32>>,
}

impl FinitePopulation {
    pub fn from_columns(
        y: Vec<f64>,
        y_star: Option<Vec<f64>>,
        z: Vec<Vec<u32>>,
        delta: Vec<u32>,
        stratum: Option<Vec<u32>>,
    ) -> Result<Self> {
        let n = y.len();
        if n == 0 {
            return Err(Error::EmptyPopulation);
        }
        if let Some(ys) = &y_star {
            check_len("y_star column", n, ys.len())?;
        }
        for col in &z {
            check_len("matching-variable column", n, col.len())?;
        }
        check_len("delta column", n, delta.len())?;
        if let Some(s) = &stratum {
            check_len("stratum column", n, s.len())?;
        }
        Ok(Self {
            y,
            y_star,
            z,
            delta,
            stratum,
        })
    }

    /// Builds a population from records; ids must be exactly `1..=N` in order.
    pub fn from_units(units: &[UnitRecord]) -> Result<Self> {
        if units.is_empty() {
            return Err(Error::EmptyPopulation);
        }
        let n = units.len();
        let k = units[0].z.len();
        let has_star = units.iter().any(|u| u.y_star.is_some());
        let has_stratum = units.iter().any(|u| u.stratum.is_some());
        let mut y = Vec::with_capacity(n);
        let mut y_star = Vec::with_capacity(if has_star { n } else { 0 });
        let mut z = vec![Vec::with_capacity(n); k];
        let mut delta = Vec::with_capacity(n);
        let mut stratum = Vec::with_capacity(if has_stratum { n } else { 0 });
        for (pos, u) in units.iter().enumerate() {
            if u.id != pos + 1 {
                return Err(Error::NonDenseIds {
                    expected_max: n,
                    found: u.id,
                    position: pos,
                });
            }
            check_len("matching vector", k, u.z.len())?;
            y.push(u.y);
            if has_star {
                y_star.push(u.y_star.unwrap_or(f64::NAN));
            }
            for (col, &v) in z.iter_mut().zip(&u.z) {
                col.push(v);
            }
            delta.push(u.delta);
            if has_stratum {
                stratum.push(u.stratum.unwrap_or(0));
            }
        }
        Self::from_columns(
            y,
            has_star.then_some(y_star),
            z,
            delta,
            has_stratum.then_some(stratum),
        )
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn y_star(&self) -> Option<&[f64]> {
        self.y_star.as_deref()
    }

    pub fn z(&self) -> &[Vec<u32>] {
        &self.z
    }

    pub fn delta(&self) -> &[u32] {
        &self.delta
    }

    pub fn stratum(&self) -> Option<&[u32]> {
        self.stratum.as_deref()
    }

    pub fn unit(&self, index: usize) -> UnitRecord {
        UnitRecord {
            id: index + 1,
            y: self.y[index],
            y_star: self
                .y_star
                .as_ref()
                .map(|c| c[index])
                .filter(|v| !v.is_nan()),
            z: self.z.iter().map(|c| c[index]).collect(),
            delta: self.delta[index],
            stratum: self.stratum.as_ref().map(|c| c[index]),
        }
    }

    pub fn units(&self) -> impl Iterator<Item = UnitRecord> + '_ {
        (0..self.len()).map(|i| self.unit(i))
    }

    pub fn set_delta(&mut self, delta: Vec<u32>) -> Result<()> {
        check_len("delta column", self.len(), delta.len())?;
        self.delta = delta;
        Ok(())
    }

    pub fn total_y(&self) -> f64 {
        self.y.iter().sum()
    }

    pub fn mean_y(&self) -> f64 {
        self.total_y() / self.len() as f64
    }

    /// `N_b = Σ_U δ_i`.
    pub fn n_b(&self) -> f64 {
        self.delta.iter().map(|&d| d as f64).sum()
    }

    /// Extracts sample B (units with `δ ≥ 1`) observing `y` and `y*` where present.
    pub fn big_sample(&self) -> BigSample {
        let members: Vec<usize> = (0..self.len()).filter(|&i| self.delta[i] > 0).collect();
        BigSample {
            ids: members.iter().map(|&i| i + 1).collect(),
            multiplicity: members.iter().map(|&i| self.delta[i]).collect(),
            y: Some(members.iter().map(|&i| self.y[i]).collect()),
            y_star: self
                .y_star
                .as_ref()
                .map(|c| members.iter().map(|&i| c[i]).collect()),
            z: self
                .z
                .iter()
                .map(|c| members.iter().map(|&i| c[i]).collect())
                .collect(),
            population_size: Some(self.len()),
        }
    }
}

/// Joint inclusion structure of a probability sample.
#[derive(Debug, Clone)]
pub enum Design {
    /// Simple random sampling without replacement of `sample` from `population`.
    Srs { population: usize, sample: usize },
    /// Independent inclusions, `π_ij = π_i π_j` for `i ≠ j`.
    Poisson,
    /// Explicit `π_ij` indexed by sample position.
    Explicit(Arc<DMatrix<f64>>),
}

/// Sample A: unit ids with design weights `d_i = 1/π_i`.
#[derive(Debug, Clone)]
pub struct ProbabilitySample {
    ids: Vec<usize>,
    d: Vec<f64>,
    pi: Vec<f64>,
    design: Design,
}

impl ProbabilitySample {
    pub fn new(ids: Vec<usize>, pi: Vec<f64>, design: Design) -> Result<Self> {
        check_len("inclusion probabilities", ids.len(), pi.len())?;
        if let Some(bad) = pi.iter().find(|&&p| !(p > 0.0 && p <= 1.0)) {
            return Err(Error::InvalidArgument(format!(
                "inclusion probability {bad} outside (0, 1]"
            )));
        }
        if let Design::Explicit(m) = &design {
            let n = ids.len();
            if m.shape() != (n, n) {
                return Err(Error::LengthMismatch {
                    what: "joint inclusion matrix",
                    expected: n,
                    found: m.nrows(),
                });
            }
            for a in 0..n {
                if (m[(a, a)] - pi[a]).abs() > 1e-12 {
                    return Err(Error::InvalidArgument(format!(
                        "joint inclusion diagonal at {a} differs from pi"
                    )));
                }
                for b in 0..a {
                    if m[(a, b)] != m[(b, a)] {
                        return Err(Error::InvalidArgument(
                            "joint inclusion matrix is not symmetric".into(),
                        ));
                    }
                }
            }
        }
        let d = pi.iter().map(|p| 1.0 / p).collect();
        Ok(Self { ids, d, pi, design })
    }

    /// Builds a sample from explicit weights, checking `d_i π_i = 1`.
    pub fn with_weights(ids: Vec<usize>, d: Vec<f64>, pi: Vec<f64>, design: Design) -> Result<Self> {
        check_len("design weights", ids.len(), d.len())?;
        let mut s = Self::new(ids, pi, design)?;
        for (a, (&given, &p)) in d.iter().zip(&s.pi).enumerate() {
            if (given * p - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidArgument(format!(
                    "design weight at position {a} is not 1/pi"
                )));
            }
        }
        s.d = d;
        Ok(s)
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// One-based unit ids.
    pub fn ids(&self) -> &[usize] {
        &self.ids
    }

    pub fn d(&self) -> &[f64] {
        &self.d
    }

    pub fn pi(&self) -> &[f64] {
        &self.pi
    }

    pub fn design(&self) -> &Design {
        &self.design
    }

    /// Population size when the design is SRS.
    pub fn srs_population(&self) -> Option<usize> {
        match self.design {
            Design::Srs { population, .. } => Some(population),
            _ => None,
        }
    }

    /// `π_ab` for sample positions `a`, `b`.
    pub fn joint_pi(&self, a: usize, b: usize) -> f64 {
        if a == b {
            return self.pi[a];
        }
        match &self.design {
            Design::Srs { population, sample } => {
                let (nn, n) = (*population as f64, *sample as f64);
                n * (n - 1.0) / (nn * (nn - 1.0))
            }
            Design::Poisson => self.pi[a] * self.pi[b],
            Design::Explicit(m) => m[(a, b)],
        }
    }

    /// Values of a population column at the sampled units.
    pub fn gather<T: Copy>(&self, column: &[T]) -> Vec<T> {
        self.ids.iter().map(|&id| column[id - 1]).collect()
    }
}

/// Sample B with multiplicities (duplication allowed).
#[derive(Debug, Clone)]
pub struct BigSample {
    pub ids: Vec<usize>,
    pub multiplicity: Vec<u32>,
    pub y: Option<Vec<f64>>,
    pub y_star: Option<Vec<f64>>,
    pub z: Vec<Vec<u32>>,
    pub population_size: Option<usize>,
}

impl BigSample {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// `N_b = Σ δ_i`.
    pub fn n_b(&self) -> f64 {
        self.multiplicity.iter().map(|&m| m as f64).sum()
    }

    /// `W_b = N_b / N`.
    pub fn w_b(&self) -> Option<f64> {
        self.population_size.map(|n| self.n_b() / n as f64)
    }

    /// `T_b = Σ δ_i y_i`.
    pub fn total_y(&self) -> Option<f64> {
        self.weighted_total(self.y.as_deref())
    }

    /// `Σ δ_i y*_i`.
    pub fn total_y_star(&self) -> Option<f64> {
        self.weighted_total(self.y_star.as_deref())
    }

    fn weighted_total(&self, col: Option<&[f64]>) -> Option<f64> {
        col.map(|c| {
            c.iter()
                .zip(&self.multiplicity)
                .map(|(&v, &m)| m as f64 * v)
                .sum()
        })
    }
}

/// Draws an SRS of `n` units from a population of `population` units.
pub fn draw_srs_with(population: usize, n: usize, rng: &mut SimRng) -> Result<ProbabilitySample> {
    if n == 0 || n > population {
        return Err(Error::SampleTooLarge {
            requested: n,
            available: population,
        });
    }
    let mut picked: Vec<usize> = index::sample(rng, population, n)
        .into_iter()
        .map(|i| i + 1)
        .collect();
    picked.sort_unstable();
    let pi = n as f64 / population as f64;
    let d = population as f64 / n as f64;
    Ok(ProbabilitySample {
        ids: picked,
        d: vec![d; n],
        pi: vec![pi; n],
        design: Design::Srs {
            population,
            sample: n,
        },
    })
}

pub fn draw_srs(pop: &FinitePopulation, n: usize, seed: u64) -> Result<ProbabilitySample> {
    draw_srs_with(pop.len(), n, &mut rng::stream(seed, Domain::Sampling, 0))
}

/// Member indices (zero-based) of each stratum.
#[derive(Debug, Clone)]
pub struct StratumIndex {
    members: BTreeMap<u32, Vec<usize>>,
}

impl StratumIndex {
    pub fn new(pop: &FinitePopulation) -> Result<Self> {
        let labels = pop
            .stratum()
            .ok_or_else(|| Error::Missing("stratum column".into()))?;
        let mut members: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
        for (i, &h) in labels.iter().enumerate() {
            members.entry(h).or_default().push(i);
        }
        Ok(Self { members })
    }

    pub fn size(&self, stratum: u32) -> usize {
        self.members.get(&stratum).map_or(0, Vec::len)
    }

    /// Independent SRS within each stratum; returns zero-based member indices.
    pub fn draw(&self, sizes: &BTreeMap<u32, usize>, rng: &mut SimRng) -> Result<Vec<usize>> {
        let mut picked = Vec::with_capacity(sizes.values().sum());
        for (&h, &n_h) in sizes {
            let members = self.members.get(&h).map_or(&[][..], Vec::as_slice);
            if n_h > members.len() {
                return Err(Error::StratumTooSmall {
                    stratum: h,
                    requested: n_h,
                    available: members.len(),
                });
            }
            if n_h == 0 {
                continue;
            }
            picked.extend(index::sample(rng, members.len(), n_h).into_iter().map(|k| members[k]));
        }
        Ok(picked)
    }
}

/// Copy of `pop` with `δ = 1` on an independent SRS of `n_h` units per stratum.
pub fn select_big_data_stratified(
    pop: &FinitePopulation,
    sizes: &BTreeMap<u32, usize>,
    seed: u64,
) -> Result<FinitePopulation> {
    let strata = StratumIndex::new(pop)?;
    let picked = strata.draw(sizes, &mut rng::stream(seed, Domain::Selection, 0))?;
    let mut delta = vec![0u32; pop.len()];
    for i in picked {
        delta[i] = 1;
    }
    let mut out = pop.clone();
    out.set_delta(delta)?;
    Ok(out)
}

/// First simulation population, drawn unit by unit as `(x, e, u)`:
/// `x ~ N(2, 1)`, `y = 3 + 0.7 (x - 2) + e` with `Var(e) = 0.51`,
/// `y* = 2 + 0.9 (y - 3) + u` with `sd(u) = 0.5`. Stratum 1 holds `x ≤ 2`.
pub fn generate_population_sim1(n: usize, seed: u64) -> Result<FinitePopulation> {
    if n == 0 {
        return Err(Error::EmptyPopulation);
    }
    let mut rng = rng::stream(seed, Domain::Population, 1);
    let x_dist = Normal::new(2.0, 1.0).expect("valid normal");
    let e_dist = Normal::new(0.0, 0.51f64.sqrt()).expect("valid normal");
    let u_dist = Normal::new(0.0, 0.5).expect("valid normal");
    let mut y = Vec::with_capacity(n);
    let mut y_star = Vec::with_capacity(n);
    let mut stratum = Vec::with_capacity(n);
    for _ in 0..n {
        let x: f64 = x_dist.sample(&mut rng);
        let e: f64 = e_dist.sample(&mut rng);
        let u: f64 = u_dist.sample(&mut rng);
        let yi = 3.0 + 0.7 * (x - 2.0) + e;
        y.push(yi);
        y_star.push(2.0 + 0.9 * (yi - 3.0) + u);
        stratum.push(if x <= 2.0 { 1 } else { 2 });
    }
    FinitePopulation::from_columns(y, Some(y_star), Vec::new(), vec![0; n], Some(stratum))
}

/// Which `z_1` half of the second population is selected into B with
/// probability `2c` (the other half gets `c`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HighPropensityGroup {
    /// `z_1 > 10` gets `2c`.
    #[default]
    UpperZ1,
    /// `z_1 ≤ 10` gets `2c`.
    LowerZ1,
}

impl HighPropensityGroup {
    fn is_high(self, z1: u32) -> bool {
        match self {
            Self::UpperZ1 => z1 > 10,
            Self::LowerZ1 => z1 <= 10,
        }
    }
}

/// Constant `c` with `Σ_U P(δ_i = 1 | z_1i) = n_b` on the realized `z_1`.
pub fn sim2_selection_constant(z1: &[u32], n_b: f64, group: HighPropensityGroup) -> Result<f64> {
    let high = z1.iter().filter(|&&v| group.is_high(v)).count() as f64;
    let low = z1.len() as f64 - high;
    let c = n_b / (low + 2.0 * high);
    if !(2.0 * c <= 1.0) || c < 0.0 {
        return Err(Error::InfeasibleSelection { c });
    }
    Ok(c)
}

/// Per-unit selection probabilities of the second population.
pub fn sim2_selection_probabilities(
    pop: &FinitePopulation,
    n_b: f64,
    group: HighPropensityGroup,
) -> Result<(f64, Vec<f64>)> {
    let z1 = pop
        .z()
        .first()
        .ok_or_else(|| Error::Missing("matching variable z1".into()))?;
    let c = sim2_selection_constant(z1, n_b, group)?;
    let probs = z1
        .iter()
        .map(|&v| if group.is_high(v) { 2.0 * c } else { c })
        .collect();
    Ok((c, probs))
}

/// Independent Bernoulli membership draws.
pub fn draw_poisson_membership(probs: &[f64], rng: &mut SimRng) -> Vec<u32> {
    probs
        .iter()
        .map(|&p| {
            let b = Bernoulli::new(p).expect("probability in [0, 1]");
            u32::from(b.sample(rng))
        })
        .collect()
}

/// Second simulation population with the `δ` mechanism as written
/// (`2c` for `z_1 > 10`).
pub fn generate_population_sim2(n: usize, n_b: usize, seed: u64) -> Result<FinitePopulation> {
    generate_population_sim2_with(n, n_b, HighPropensityGroup::UpperZ1, seed)
}

/// Second simulation population: `z_1 ~ U{1..20}`, `z_2 ~ U{1..10}`,
/// `e ~ U(0, 1)`, `y = 4 + 0.5 (z_2 + e)` for `z_1 ≤ 10` and
/// `6 + 0.3 (z_2 + e)` otherwise; `δ` Bernoulli with `c` / `2c` by `group`.
pub fn generate_population_sim2_with(
    n: usize,
    n_b: usize,
    group: HighPropensityGroup,
    seed: u64,
) -> Result<FinitePopulation> {
    if n == 0 {
        return Err(Error::EmptyPopulation);
    }
    let mut rng = rng::stream(seed, Domain::Population, 2);
    let z1_dist = Uniform::new_inclusive(1u32, 20).expect("valid range");
    let z2_dist = Uniform::new_inclusive(1u32, 10).expect("valid range");
    let mut z1 = Vec::with_capacity(n);
    let mut z2 = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let a = z1_dist.sample(&mut rng);
        let b = z2_dist.sample(&mut rng);
        let e: f64 = rng.random();
        let s = b as f64 + e;
        y.push(if a <= 10 { 4.0 + 0.5 * s } else { 6.0 + 0.3 * s });
        z1.push(a);
        z2.push(b);
    }
    let mut pop = FinitePopulation::from_columns(y, None, vec![z1, z2], vec![0; n], None)?;
    let (_, probs) = sim2_selection_probabilities(&pop, n_b as f64, group)?;
    pop.set_delta(draw_poisson_membership(&probs, &mut rng))?;
    Ok(pop)
}
