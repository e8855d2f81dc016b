use super::report::{Assumption, AssertionStatus, BisectReport, FoundElement, Phase, TraceStep};
use super::{BisectError, TestFn};
use crate::domain::{Element, ElementSet};
use crate::Scalar;

/// Split into the first `⌊n/2⌋` members and the remaining `⌈n/2⌉`.
pub fn split_in_half(items: &ElementSet) -> Result<(ElementSet, ElementSet), BisectError> {
    if items.len() < 2 {
        return Err(BisectError::Contract(format!(
            "split_in_half needs at least two elements, got {}",
            items.len()
        )));
    }
    Ok(items.split_at(items.len() / 2))
}

/// Result of one logarithmic descent.
#[derive(Debug, Clone)]
pub struct BisectOneOutcome {
    /// Elements safe to drop from later searches. Always contains the base
    /// case element.
    pub discard: ElementSet,
    /// The variable singleton, or empty when the base case scored zero.
    pub found: ElementSet,
    /// Set when the base case scored zero (singleton blame violated).
    pub singleton_failure: Option<Element>,
}

/// Descend to one variable element of `items`, which must score above zero.
///
/// Follows the first half whenever it is variable; otherwise the first half
/// joins the discard set and the search continues in the second half.
pub fn bisect_one<S: Scalar>(
    test: &mut TestFn<'_, S>,
    items: &ElementSet,
) -> Result<BisectOneOutcome, BisectError> {
    if items.is_empty() {
        return Err(BisectError::Contract("bisect_one on an empty set".into()));
    }
    let mut current = items.clone();
    let mut discarded = items.universe().empty();
    loop {
        if current.len() == 1 {
            let score = test.evaluate(&current)?;
            let discard = discarded.union(&current)?;
            return Ok(if score.is_positive_score() {
                BisectOneOutcome {
                    discard,
                    found: current,
                    singleton_failure: None,
                }
            } else {
                BisectOneOutcome {
                    discard,
                    found: items.universe().empty(),
                    singleton_failure: current.first().cloned(),
                }
            });
        }
        let (first, second) = split_in_half(&current)?;
        if test.evaluate(&first)?.is_positive_score() {
            current = first;
        } else {
            discarded = discarded.union(&first)?;
            current = second;
        }
    }
}

/// Options for [`bisect_all_with`].
#[derive(Debug, Clone)]
pub struct BisectOptions<S> {
    /// Tolerance when comparing `Test(items)` with `Test(found)`. Zero means
    /// bitwise equality of the score.
    pub epsilon: S,
}

impl<S: Scalar> Default for BisectOptions<S> {
    fn default() -> Self {
        BisectOptions { epsilon: S::zero() }
    }
}

/// Find every variable element of `items`.
pub fn bisect_all<S: Scalar>(
    test: &mut TestFn<'_, S>,
    items: &ElementSet,
) -> Result<BisectReport<S>, BisectError> {
    bisect_all_with(test, items, &BisectOptions::default())
}

pub fn bisect_all_with<S: Scalar>(
    test: &mut TestFn<'_, S>,
    items: &ElementSet,
    options: &BisectOptions<S>,
) -> Result<BisectReport<S>, BisectError> {
    if items.is_empty() {
        return Err(BisectError::Contract("bisect_all on an empty set".into()));
    }
    let log_start = test.distinct_evaluations();
    let calls_start = test.total_calls();

    let mut found = items.universe().empty();
    let mut remaining = items.clone();
    let mut singleton_failures = Vec::new();
    while test.evaluate(&remaining)?.is_positive_score() {
        let step = bisect_one(test, &remaining)?;
        found = found.union(&step.found)?;
        remaining = remaining.difference(&step.discard)?;
        singleton_failures.extend(step.singleton_failure);
    }
    let search_end = test.distinct_evaluations();

    let score_all = test.evaluate(items)?;
    let score_found = test.evaluate(&found)?;
    let final_holds = score_all.approx_eq(&score_found, &options.epsilon);

    let mut violated = Vec::new();
    if !singleton_failures.is_empty() {
        violated.push(Assumption::SingletonBlame);
    }
    if !final_holds {
        // The check cannot tell which assumption broke.
        violated.push(Assumption::UniqueError);
        if !violated.contains(&Assumption::SingletonBlame) {
            violated.push(Assumption::SingletonBlame);
        }
    }
    violated.sort();
    let status = if violated.is_empty() {
        AssertionStatus::Verified
    } else {
        AssertionStatus::Violated
    };

    // Every found element went through a scored base case, so these hit the cache.
    let mut found_scores = Vec::with_capacity(found.len());
    for &pos in found.positions() {
        let single = found.singleton(pos);
        let score = test.evaluate(&single)?;
        found_scores.push(FoundElement {
            element: single.first().expect("singleton").clone(),
            score,
        });
    }
    let universe = items.universe().clone();
    BisectReport::sort_found(&mut found_scores, |e| universe.position(e).unwrap_or(usize::MAX));

    let trace = test.log()[log_start..]
        .iter()
        .enumerate()
        .map(|(i, ev)| TraceStep {
            phase: if log_start + i < search_end {
                Phase::Search
            } else {
                Phase::Assertion
            },
            set: ev.set.clone(),
            score: ev.score.value().cloned(),
        })
        .collect();

    Ok(BisectReport {
        found: found_scores,
        search_space_size: items.len(),
        distinct_evaluations: test.distinct_evaluations() - log_start,
        search_evaluations: search_end - log_start,
        total_calls: test.total_calls() - calls_start,
        assertion_status: status,
        violated_assumptions: violated,
        singleton_failures,
        score_all,
        score_found,
        trace,
    })
}

/// `k·⌈log₂ n⌉ + 2k + 2`: the evaluation budget of one [`bisect_all`] run
/// that finds `k` of `n` elements.
pub fn evaluation_bound(k: usize, n: usize) -> usize {
    let log = if n <= 1 {
        0
    } else {
        (usize::BITS - (n - 1).leading_zeros()) as usize
    };
    k * log + 2 * k + 2
}
