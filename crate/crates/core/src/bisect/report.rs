use serde::{Deserialize, Serialize};

use crate::domain::{Element, ElementSet};
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AssertionStatus {
    Verified,
    Violated,
    /// No dynamic check is possible (early-exit search).
    Skipped,
}

/// Search assumptions whose failure the dynamic checks can expose.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Assumption {
    /// Distinct sets of variable elements give distinct scores.
    UniqueError,
    /// Every variable element is variable on its own.
    SingletonBlame,
    /// No symbol scores higher than the file that contains it.
    FileDominance,
}

/// An element the search blamed, with its individual score `Test({e})`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FoundElement<S> {
    pub element: Element,
    pub score: S,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Search,
    Assertion,
}

/// One backend evaluation made during a search.
#[derive(Debug, Clone, Serialize)]
pub struct TraceStep<S> {
    pub phase: Phase,
    pub set: ElementSet,
    /// `None` when the evaluation failed.
    pub score: Option<S>,
}

/// Result of a full search over one level of the hierarchy.
#[derive(Debug, Clone, Serialize)]
pub struct BisectReport<S> {
    /// Sorted by descending score, ties in canonical order.
    pub found: Vec<FoundElement<S>>,
    pub search_space_size: usize,
    /// Backend evaluations made by this search, assertion included.
    pub distinct_evaluations: usize,
    /// Backend evaluations made before the final assertion.
    pub search_evaluations: usize,
    /// Test requests including cache hits.
    pub total_calls: usize,
    pub assertion_status: AssertionStatus,
    /// Candidate explanations when the status is `Violated`.
    pub violated_assumptions: Vec<Assumption>,
    /// Base cases that scored zero.
    pub singleton_failures: Vec<Element>,
    /// `Test(items)` and `Test(found)` as compared by the final assertion.
    pub score_all: S,
    pub score_found: S,
    pub trace: Vec<TraceStep<S>>,
}

impl<S: Scalar> BisectReport<S> {
    pub fn found_elements(&self) -> Vec<Element> {
        self.found.iter().map(|f| f.element.clone()).collect()
    }

    pub fn is_verified(&self) -> bool {
        self.assertion_status == AssertionStatus::Verified
    }

    pub(crate) fn sort_found(found: &mut [FoundElement<S>], canonical: impl Fn(&Element) -> usize) {
        found.sort_by(|a, b| {
            b.score
                .partial_cmp(&a.score)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then_with(|| canonical(&a.element).cmp(&canonical(&b.element)))
        });
    }
}
