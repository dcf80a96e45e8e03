use thiserror::Error;

/// Errors produced by the toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid cloud (Ex={ex}, En={en}, He={he}): require En > 0, He >= 0 and 3*He < En")]
    InvalidCloud { ex: f64, en: f64, he: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("no rule fires (sum of firing strengths is zero)")]
    NoRuleFires,

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("simulation diverged at step {step} (|y| = {magnitude:e})")]
    DivergedRun {
        step: usize,
        magnitude: f64,
        partial: Box<crate::plant::SimTrace>,
    },

    #[error("objective not finite at finite-difference probe on coordinate {coordinate}")]
    GradientProbeFailed { coordinate: usize },

    #[error("previous gradient is zero")]
    ZeroGradient,

    #[error("no stabilizing positive definite solution: {0}")]
    NoStabilizingSolution(String),

    #[error("coupling matrix (I - PQ) is numerically singular (condition number {condition:e})")]
    SingularCoupling { condition: f64 },

    #[error("matrix is not symmetric (asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
