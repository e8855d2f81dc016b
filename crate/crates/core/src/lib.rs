//! Locate the source files and functions whose compilation changes a
//! program's floating-point results.
//!
//! The crate is generic over the score type ([`Scalar`]). The aliases at the
//! root fix it to `f64` for real backends and to [`ExactScore`] for exact
//! synthetic experiments.

pub mod bisect;
pub mod domain;
pub mod oracle;
mod scalar;
pub mod sim;

pub use scalar::Scalar;

/// Exact rational scores.
pub type ExactScore = num_rational::Rational64;

pub type TestFnF64<'a> = bisect::TestFn<'a, f64>;
pub type BisectReportF64 = bisect::BisectReport<f64>;
pub type HierarchyReportF64 = bisect::HierarchyReport<f64>;
pub type BiggestKReportF64 = bisect::BiggestKReport<f64>;
pub type TestScoreF64 = domain::TestScore<f64>;

pub type ExactTestFn<'a> = bisect::TestFn<'a, ExactScore>;
pub type ExactBisectReport = bisect::BisectReport<ExactScore>;
