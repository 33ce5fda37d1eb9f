//! Crate-wide error type for the protocol, harness, and verifier layers.

use thiserror::Error;

use crate::algebra::AlgebraError;
use crate::codes::CodesError;
use crate::model::{ModelError, Rate, SchemeId};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error(transparent)]
    Codes(#[from] CodesError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("vector length mismatch: {context} (got {got}, expected {expected})")]
    LengthMismatch {
        context: &'static str,
        got: usize,
        expected: usize,
    },
    #[error("user {user} is not in the surviving set for this round")]
    UserNotSurviving { user: usize },
    #[error("demand coefficient for user {user} is zero")]
    ZeroCoefficient { user: usize },
    #[error("need at least {needed} round-2 answers, got {got}")]
    InsufficientAnswers { needed: usize, got: usize },
    #[error("round-2 answers are inconsistent: interpolated degree {got} exceeds {max}")]
    AnswersInconsistent { got: usize, max: usize },
    #[error("missing retrieved block {block} for combination {combination}")]
    MissingBlock { combination: usize, block: usize },
    #[error("mask slot {slot} was already consumed; each retrieval needs a fresh mask")]
    MaskReused { slot: usize },
    #[error("mask slot {slot} out of range (pool holds {len})")]
    MaskSlotOutOfRange { slot: usize, len: usize },
    #[error("could not find a nonzero demand rewrite after {attempts} attempts (field too small)")]
    RewriteExhausted { attempts: usize },
    #[error("decoded output does not match the plaintext demand (combination {combination})")]
    DecodeMismatch { combination: usize },
    #[error("measured rates violate the converse bound: r1={r1}, r2={r2}, required r1>=1, r2>={min_r2}")]
    ConverseViolation { r1: Rate, r2: Rate, min_r2: Rate },
    #[error("scheme {0} is not supported by this operation")]
    UnsupportedScheme(SchemeId),
    #[error("view is not affine in inputs and randomness: {0}")]
    NonlinearityDetected(String),
    #[error("enumeration too large: {0}")]
    EnumerationTooLarge(String),
    #[error("insufficient samples: need at least {needed}, got {got}")]
    InsufficientSamples { needed: usize, got: usize },
    #[error("dropout model error: {0}")]
    ScheduleGeneration(String),
}

impl Error {
    /// Coarse protocol stage a failure belongs to, for machine-readable
    /// reporting.
    pub fn stage(&self) -> &'static str {
        match self {
            Error::Algebra(_) | Error::Codes(_) => "arithmetic",
            Error::Model(_) => "validation",
            Error::LengthMismatch { .. } | Error::ZeroCoefficient { .. } => "round1",
            Error::UserNotSurviving { .. }
            | Error::MaskReused { .. }
            | Error::MaskSlotOutOfRange { .. } => "round2",
            Error::InsufficientAnswers { .. }
            | Error::AnswersInconsistent { .. }
            | Error::MissingBlock { .. } => "decode",
            Error::RewriteExhausted { .. } => "setup",
            Error::DecodeMismatch { .. } => "seal",
            Error::ConverseViolation { .. } => "rates",
            Error::UnsupportedScheme(_) => "validation",
            Error::NonlinearityDetected(_)
            | Error::EnumerationTooLarge(_)
            | Error::InsufficientSamples { .. } => "verify",
            Error::ScheduleGeneration(_) => "schedule",
        }
    }
}
