//! Real-build backend.
//!
//! File-level Tests link a mix of candidate and baseline object files.
//! Symbol-level Tests link both copies of one file with complementary sets
//! of functions made weak, so the linker keeps exactly one definition of
//! each. Test programs speak a small hex-float protocol ([`protocol`]).

pub mod build;
pub mod config;
pub mod error;
pub mod hexfloat;
pub mod process;
pub mod protocol;
pub mod runner;
pub mod session;
pub mod sweep;
pub mod symbols;

pub use build::{Artifact, BuildPlan, Builder, Weakening};
pub use config::{CompilerConfig, ProjectManifest, Tools};
pub use error::{ConfigError, ToolchainError};
pub use runner::{Runner, TestRun};
pub use session::{make_file_test_fn, make_symbol_test_fn, DeterminismReport, Session, TestDeterminism};
pub use sweep::{plan_matrix, run_sweep, summarize, SweepOptions, SweepRecord, SweepSummary};
