//! Error type shared by every module of the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("matrix must be square, got {rows}x{cols}")]
    NonSquare { rows: usize, cols: usize },

    #[error("matrix data length {len} does not match {rows}x{cols}")]
    BadShape {
        rows: usize,
        cols: usize,
        len: usize,
    },

    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),

    #[error("cannot factor a {dim}-dimensional space as {dim_s} (system) x {dim_e} (environment)")]
    InvalidFactorization {
        dim: usize,
        dim_s: usize,
        dim_e: usize,
    },

    #[error("matrix is not Hermitian (relative residual {residual:.3e})")]
    NonHermitian { residual: f64 },

    #[error("{what} is not unitary (residual {residual:.3e})")]
    NonUnitary { what: &'static str, residual: f64 },

    #[error("{what} is not normalized (norm {norm})")]
    NotNormalized { what: &'static str, norm: f64 },

    #[error("density operator invariant violated: {0}")]
    InvalidDensity(&'static str),

    #[error("post-selected state is orthogonal to the evolved pre-selected state (|Tr W| = {trace:.3e}); weak value undefined")]
    OrthogonalPostselection { trace: f64 },

    #[error("operator vanishes")]
    ZeroOperator,

    #[error("superposition needs at least one term")]
    EmptySuperposition,

    #[error("basis is not orthonormal and complete (residual {residual:.3e})")]
    IncompleteBasis { residual: f64 },

    #[error("{which} fails trace preservation (residual {residual:.3e})")]
    NotTracePreserving { which: &'static str, residual: f64 },

    #[error("Choi matrix is not positive semidefinite (smallest eigenvalue {min_eigenvalue:.3e})")]
    CompletePositivityViolation { min_eigenvalue: f64 },

    #[error("Kraus list is empty")]
    EmptyChannel,

    #[error("probability {0} outside [0, 1]")]
    ProbabilityOutOfRange(f64),

    #[error("every post-selection amplitude vanishes; the pointer state is zero")]
    PostselectionImpossible,

    #[error("pointer wavefunction has zero norm on the grid")]
    ZeroNorm,

    #[error("invalid probe: {0}")]
    InvalidProbe(String),

    #[error("grid momentum/position moments disagree with the analytic overlap formula by {difference:.3e}")]
    DiscretizationMismatch { difference: f64 },

    #[error("invalid ensemble: {0}")]
    InvalidEnsemble(&'static str),

    #[error("ensemble-averaged Tr E(W) vanishes ({magnitude:.3e}); averaged shift undefined")]
    UndefinedAverage { magnitude: f64 },

    #[error("path is degenerate: {0} overlap vanishes")]
    DegeneratePath(&'static str),

    #[error("geometric phase undefined: weak value of the projector vanishes")]
    UndefinedPhase,

    #[error("bit-flip closed form is singular at phi = {phi}")]
    SingularPath { phi: f64 },
}

impl Error {
    /// Stable variant name, used by the CLI when reporting failures.
    pub fn name(&self) -> &'static str {
        match self {
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::NonSquare { .. } => "NonSquare",
            Error::BadShape { .. } => "BadShape",
            Error::NonFinite(_) => "NonFinite",
            Error::InvalidFactorization { .. } => "InvalidFactorization",
            Error::NonHermitian { .. } => "NonHermitian",
            Error::NonUnitary { .. } => "NonUnitary",
            Error::NotNormalized { .. } => "NotNormalized",
            Error::InvalidDensity(_) => "InvalidDensity",
            Error::OrthogonalPostselection { .. } => "OrthogonalPostselection",
            Error::ZeroOperator => "ZeroOperator",
            Error::EmptySuperposition => "EmptySuperposition",
            Error::IncompleteBasis { .. } => "IncompleteBasis",
            Error::NotTracePreserving { .. } => "NotTracePreserving",
            Error::CompletePositivityViolation { .. } => "CompletePositivityViolation",
            Error::EmptyChannel => "EmptyChannel",
            Error::ProbabilityOutOfRange(_) => "ProbabilityOutOfRange",
            Error::PostselectionImpossible => "PostselectionImpossible",
            Error::ZeroNorm => "ZeroNorm",
            Error::InvalidProbe(_) => "InvalidProbe",
            Error::DiscretizationMismatch { .. } => "DiscretizationMismatch",
            Error::InvalidEnsemble(_) => "InvalidEnsemble",
            Error::UndefinedAverage { .. } => "UndefinedAverage",
            Error::DegeneratePath(_) => "DegeneratePath",
            Error::UndefinedPhase => "UndefinedPhase",
            Error::SingularPath { .. } => "SingularPath",
        }
    }

    /// True for failures that come from the physics of a valid input
    /// (orthogonal post-selection, singular paths, ...) rather than from
    /// malformed input.
    pub fn is_physics(&self) -> bool {
        matches!(
            self,
            Error::OrthogonalPostselection { .. }
                | Error::ZeroOperator
                | Error::PostselectionImpossible
                | Error::ZeroNorm
                | Error::DiscretizationMismatch { .. }
                | Error::UndefinedAverage { .. }
                | Error::DegeneratePath(_)
                | Error::UndefinedPhase
                | Error::SingularPath { .. }
        )
    }
}
