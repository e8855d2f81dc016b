//! Synthetic projects with known injected variability.
//!
//! Every Test here is computed from stored magnitudes, so searches can be
//! checked against ground truth without a compiler.

mod campaign;
mod metric;
mod project;

use thiserror::Error;

pub use campaign::{
    classify, injected_sites, run_injection_campaign, run_one, CampaignConfig, CampaignFailure, InjectedSite,
    InjectionCampaignResult, InjectionRecord, Outcome,
};
pub use metric::{file_score, make_test_fn, symbol_score, symbol_search, Granularity};
pub use project::{
    Coupling, Injection, InjectionMode, ProjectLayout, SymbolSite, SyntheticFile,
    SyntheticProject, SyntheticSymbol, STATIC_FRACTION,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid synthetic configuration: {0}")]
    InvalidConfig(String),
}
