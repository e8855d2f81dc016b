//! Search algorithms over element sets.
//!
//! [`bisect_all`] finds every variable element under the unique-error and
//! singleton-blame assumptions and checks both dynamically.
//! [`bisect_biggest_k`] trades that check for an early exit once the `k`
//! largest contributors are known. [`bisect_hierarchy`] runs the file level
//! and then the symbol level of each variable file.

mod all;
mod biggest;
mod hierarchy;
mod report;
mod testfn;

use thiserror::Error;

pub use all::{
    bisect_all, bisect_all_with, bisect_one, evaluation_bound, split_in_half, BisectOneOutcome,
    BisectOptions,
};
pub use biggest::{bisect_biggest_k, BiggestKReport};
pub use hierarchy::{
    bisect_hierarchy, FileOutcome, HierarchyOptions, HierarchyReport, SymbolLevel, SymbolOutcome,
    SymbolSearch,
};
pub use report::{
    Assumption, AssertionStatus, BisectReport, FoundElement, Phase, TraceStep,
};
pub use testfn::{Evaluation, Metric, TestFn};

use crate::domain::DomainError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BisectError {
    #[error("build failed for {set:?}: {diagnostics}")]
    BuildFailure { set: Vec<String>, diagnostics: String },
    #[error("test run failed for {set:?}: {diagnostics}")]
    RunFailure { set: Vec<String>, diagnostics: String },
    #[error("contract violation: {0}")]
    Contract(String),
    #[error(transparent)]
    Domain(#[from] DomainError),
}
