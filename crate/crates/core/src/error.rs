use thiserror::Error;

use crate::rational::{format_rational, Rational};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CakeError {
    #[error("valuation mass sums to {} instead of 1", format_rational(.total))]
    NotNormalized { total: Rational },

    #[error("segments {first} and {second} overlap")]
    OverlappingSegments { first: usize, second: usize },

    #[error("segment {index} is invalid: {reason}")]
    InvalidSegment { index: usize, reason: &'static str },

    #[error("interval ({}, {}) is not inside [0, 1] with left <= right", format_rational(.left), format_rational(.right))]
    InvalidInterval { left: Rational, right: Rational },

    #[error("pieces {first} and {second} overlap")]
    OverlappingPieces { first: usize, second: usize },

    #[error("expected {expected} entries, found {found}")]
    SizeMismatch { expected: usize, found: usize },

    #[error("schema error at {location}: {message}")]
    Schema { location: String, message: String },

    #[error("division allocates no cake to anyone")]
    NoAllocatedPiece,

    #[error("an instance needs at least one player")]
    NoPlayers,

    #[error("parameter out of range: {0}")]
    ParamOutOfRange(String),

    #[error(
        "search budget exceeded: {configurations} configurations, estimated {estimated_secs:.1}s > budget {budget_secs:.1}s"
    )]
    BudgetExceeded {
        /// Decimal configuration count, or "more than 2^128".
        configurations: String,
        estimated_secs: f64,
        budget_secs: f64,
    },

    #[error("no envy-free division exists in the searched space")]
    NoEnvyFreeDivision,

    #[error("unknown prediction tag: {0}")]
    UnknownTag(String),

    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T, E = CakeError> = std::result::Result<T, E>;
