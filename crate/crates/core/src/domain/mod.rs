//! Shared vocabulary: compilations, blame elements, scores and comparisons.

mod compare;
mod compilation;
mod element;
mod score;
mod spec;

use thiserror::Error;

pub use compare::{round_to_digits, Comparator, ComparatorKind, ResultKind, TestValue};
pub use compilation::{Compilation, OptLevel};
pub use element::{Element, ElementKind, ElementSet, Symbol, Universe};
pub use score::TestScore;
pub use spec::TestSpec;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DomainError {
    #[error("element not in manifest: {0}")]
    NotInManifest(String),
    #[error("duplicate element in manifest: {0}")]
    DuplicateElement(String),
    #[error("invalid element: {0}")]
    InvalidElement(String),
    #[error("element sets come from different universes")]
    UniverseMismatch,
    #[error("invalid compilation: {0}")]
    InvalidCompilation(String),
    #[error("invalid test spec: {0}")]
    InvalidTestSpec(String),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CompareError {
    #[error("result kind mismatch: baseline {baseline:?}, candidate {candidate:?}")]
    KindMismatch {
        baseline: ResultKind,
        candidate: ResultKind,
    },
    #[error("vector length mismatch: baseline {baseline}, candidate {candidate}")]
    LengthMismatch { baseline: usize, candidate: usize },
    #[error("comparator {comparator} does not apply to {kind:?} results")]
    Unsupported {
        comparator: ComparatorKind,
        kind: ResultKind,
    },
    #[error("relative comparison against a zero-norm baseline")]
    ZeroBaselineNorm,
}
