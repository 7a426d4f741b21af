use std::fmt;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// A violated density-operator invariant.
#[derive(Debug, Clone, PartialEq)]
pub enum StateViolation {
    NotHermitian { deviation: f64 },
    NotPositive { min_eigenvalue: f64 },
    TraceNotOne { trace: f64 },
}

impl fmt::Display for StateViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StateViolation::NotHermitian { deviation } => {
                write!(f, "NotHermitian (||rho - rho^dag||_F = {deviation:e})")
            }
            StateViolation::NotPositive { min_eigenvalue } => {
                write!(f, "NotPositive (min eigenvalue = {min_eigenvalue:e})")
            }
            StateViolation::TraceNotOne { trace } => write!(f, "TraceNotOne (trace = {trace})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix is {rows}x{cols}, expected square")]
    NotSquare { rows: usize, cols: usize },
    #[error("shape {shape:?} needs {expected} entries, got {found}")]
    ShapeMismatch {
        shape: Vec<usize>,
        expected: usize,
        found: usize,
    },
    #[error("non-finite entry at flat position {0}")]
    NonFinite(usize),
    #[error("vector is not normalized (norm = {norm})")]
    NotNormalized { norm: f64 },
    #[error("zero vector cannot be normalized")]
    ZeroVector,
    #[error("invalid state: {}", join(.0))]
    InvalidState(Vec<StateViolation>),
    #[error("matrix is not an orthogonal projector (idempotence {idempotence:e}, hermiticity {hermiticity:e})")]
    NotAProjector { idempotence: f64, hermiticity: f64 },
    #[error(
        "FamilyNotOrthogonal: powers {first} and {second} overlap (||P_i P_j||_F = {overlap:e})"
    )]
    FamilyNotOrthogonal {
        first: usize,
        second: usize,
        overlap: f64,
    },
    #[error("WeightsInvalid: {0}")]
    WeightsInvalid(String),
    #[error("EmptyTable: a table needs at least one power")]
    EmptyTable,
    #[error("intensity {value} at row {row} lies outside [0, 1]")]
    IntensityOutOfRange { row: usize, value: f64 },
    #[error("IndexOutOfRange: {0}")]
    IndexOutOfRange(String),
    #[error("invalid factorization: {0}")]
    InvalidFactorization(String),
    #[error("total dimension {dim} exceeds the configured maximum {max}")]
    DimensionTooLarge { dim: usize, max: usize },
    #[error("screen {screen} matrix is not unitary (||U^dag U - I||_F = {deviation:e})")]
    NotUnitary { screen: usize, deviation: f64 },
    #[error("NonUnitaryLambda: ||L^dag L - I||_F = {deviation:e}")]
    NonUnitaryLambda { deviation: f64 },
    #[error("BasisMismatch: {0}")]
    BasisMismatch(String),
    #[error("invalid arrangement coefficients: {0}")]
    InvalidCoefficients(String),
    #[error("NotAPartition: {0}")]
    NotAPartition(String),
    #[error("EmptySubset: at least one screen must be kept")]
    EmptySubset,
    #[error("NotASubspace: {0}")]
    NotASubspace(String),
    #[error("arrangement dimension {arrangement} exceeds lab dimension {lab}")]
    ArrangementTooLarge { arrangement: usize, lab: usize },
}

fn join(violations: &[StateViolation]) -> String {
    violations
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(", ")
}

impl Error {
    /// Variant name, for machine-readable diagnostics.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::NotSquare { .. } => "NotSquare",
            Error::ShapeMismatch { .. } => "ShapeMismatch",
            Error::NonFinite(_) => "NonFinite",
            Error::NotNormalized { .. } => "NotNormalized",
            Error::ZeroVector => "ZeroVector",
            Error::InvalidState(_) => "InvalidState",
            Error::NotAProjector { .. } => "NotAProjector",
            Error::FamilyNotOrthogonal { .. } => "FamilyNotOrthogonal",
            Error::WeightsInvalid(_) => "WeightsInvalid",
            Error::EmptyTable => "EmptyTable",
            Error::IntensityOutOfRange { .. } => "IntensityOutOfRange",
            Error::IndexOutOfRange(_) => "IndexOutOfRange",
            Error::InvalidFactorization(_) => "InvalidFactorization",
            Error::DimensionTooLarge { .. } => "DimensionTooLarge",
            Error::NotUnitary { .. } => "NotUnitary",
            Error::NonUnitaryLambda { .. } => "NonUnitaryLambda",
            Error::BasisMismatch(_) => "BasisMismatch",
            Error::InvalidCoefficients(_) => "InvalidCoefficients",
            Error::NotAPartition(_) => "NotAPartition",
            Error::EmptySubset => "EmptySubset",
            Error::NotASubspace(_) => "NotASubspace",
            Error::ArrangementTooLarge { .. } => "ArrangementTooLarge",
        }
    }
}
