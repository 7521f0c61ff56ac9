use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("a chain needs at least one site")]
    NoSites,

    #[error("site index {site} out of range for a chain of {sites} sites (indices are 1-based)")]
    SiteOutOfRange { site: usize, sites: usize },

    #[error("bond index {bond} out of range for a chain with {bonds} bonds (indices are 1-based)")]
    BondOutOfRange { bond: usize, bonds: usize },

    #[error("{what}: expected length {expected}, found {found}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("bond {bond} is replaced twice with different hoppings ({first} vs {second})")]
    ConflictingBond {
        bond: usize,
        first: f64,
        second: f64,
    },

    #[error("no closed form available for {particles} particles (supported: 2 or 3)")]
    UnsupportedParticleNumber { particles: usize },

    #[error("{0}")]
    UnsupportedScheme(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("operator is not Hermitian: max |H - H^dagger| = {deviation:e}")]
    NotHermitian { deviation: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("vector of length {len} is not a square number and cannot be devectorised")]
    NonSquareLength { len: usize },

    #[error(
        "large-U block entry ({row}, {col}) vanishes; the bound/unbound split is mis-specified"
    )]
    SingularLargeBlock { row: usize, col: usize },

    #[error(
        "long-range effective couplings reach {weight:e}, above the tridiagonal threshold {threshold:e}; \
         U/J is too small for a nearest-neighbour bound-particle chain"
    )]
    RegimeBreakdown { weight: f64, threshold: f64 },

    #[error("bound-state block is not degenerate (spread {spread:e}); perturbative oracle does not apply")]
    NonDegenerateBlock { spread: f64 },

    #[error("empty time window [{start}, {end}]")]
    EmptyWindow { start: f64, end: f64 },

    #[error("no sign change of the objective in [{lo}, {hi}]")]
    NoSignChange { lo: f64, hi: f64 },

    #[error("optimizer could not bracket a maximum: {0}")]
    NoBracket(String),

    #[error("dense Liouvillian for sector dimension {dim} exceeds the budget (max {max}); use the matrix-free integrator")]
    LiouvillianBudget { dim: usize, max: usize },

    #[error("integrator step size underflow at t = {t} (step {step:e}); split the evolution into shorter segments")]
    StepSizeUnderflow { t: f64, step: f64 },

    #[error("invalid density matrix: {0}")]
    InvalidDensityMatrix(String),

    #[error("invalid quantum state: {0}")]
    InvalidState(String),
}
