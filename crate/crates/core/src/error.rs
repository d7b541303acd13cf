use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("population must contain at least one unit")]
    EmptyPopulation,

    #[error("unit ids must be dense in 1..={expected_max}; found id {found} at position {position}")]
    NonDenseIds {
        expected_max: usize,
        found: usize,
        position: usize,
    },

    #[error("selection constant {c} gives a probability 2c > 1")]
    InfeasibleSelection { c: f64 },

    #[error("requested sample of {requested} units from {available}")]
    SampleTooLarge { requested: usize, available: usize },

    #[error("stratum {stratum}: requested {requested} units but only {available} exist")]
    StratumTooSmall {
        stratum: u32,
        requested: usize,
        available: usize,
    },

    #[error("{what}: expected length {expected}, found {found}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("no sampled unit falls in the missing-data post-stratum (sum of weights is zero)")]
    DegenerateStratum,

    #[error("ratio estimator undefined: weighted big-data total in the sample is zero")]
    ZeroRatioDenominator,

    #[error("calibration Gram matrix is singular or ill-conditioned (condition {condition:.3e}); collinear controls: {}", controls.join(", "))]
    SingularGram {
        condition: f64,
        controls: Vec<String>,
    },

    #[error("big-data sample is empty")]
    EmptyBigData,

    #[error("EM fit degenerate: every sampled unit has posterior one, so the complement weights vanish")]
    DegenerateFit,

    #[error("big-data unit {index} is classified into B with zero posterior")]
    ZeroPosterior { index: usize },

    #[error("measurement model cannot be fitted: {0}")]
    DegenerateMeasurement(String),

    #[error("missing input: {0}")]
    Missing(String),

    #[error("joint inclusion probability missing for sample positions ({0}, {1})")]
    MissingJointProbability(usize, usize),

    #[error("Monte Carlo variance is zero; relative bias undefined")]
    ZeroMonteCarloVariance,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub(crate) fn check_len(what: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::LengthMismatch {
            what,
            expected,
            found,
        })
    }
}
