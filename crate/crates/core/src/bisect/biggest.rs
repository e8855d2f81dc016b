use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::Serialize;

use super::all::split_in_half;
use super::hierarchy::SymbolSearch;
use super::report::{Assumption, AssertionStatus, FoundElement};
use super::{BisectError, TestFn};
use crate::domain::{Element, ElementSet};
use crate::Scalar;

struct Entry<S> {
    score: S,
    seq: u64,
    set: ElementSet,
}

impl<S: PartialOrd> PartialEq for Entry<S> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<S: PartialOrd> Eq for Entry<S> {}

impl<S: PartialOrd> PartialOrd for Entry<S> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<S: PartialOrd> Ord for Entry<S> {
    // Highest score first; equal scores in insertion order.
    fn cmp(&self, other: &Self) -> Ordering {
        self.score
            .partial_cmp(&other.score)
            .unwrap_or(Ordering::Equal)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

/// Max-priority frontier of scored subsets.
struct Frontier<S> {
    heap: BinaryHeap<Entry<S>>,
    seq: u64,
}

impl<S: Scalar> Frontier<S> {
    fn new() -> Self {
        Frontier {
            heap: BinaryHeap::new(),
            seq: 0,
        }
    }

    fn push(&mut self, score: S, set: ElementSet) {
        self.heap.push(Entry {
            score,
            seq: self.seq,
            set,
        });
        self.seq += 1;
    }

    fn pop(&mut self) -> Option<(S, ElementSet)> {
        self.heap.pop().map(|e| (e.score, e.set))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BiggestKReport<S> {
    pub k: usize,
    /// Singleton files popped from the frontier, by descending score.
    pub files: Vec<FoundElement<S>>,
    /// Symbols found before the cutoff, by descending score. May exceed `k`.
    pub symbols: Vec<FoundElement<S>>,
    /// Files whose variability did not survive symbol replacement.
    pub file_level_only: Vec<Element>,
    pub search_space_size: usize,
    /// Backend evaluations over every level.
    pub distinct_evaluations: usize,
    /// Always `Skipped`: the found list is incomplete by design.
    pub assertion_status: AssertionStatus,
    pub violated_assumptions: Vec<Assumption>,
    /// A symbol outscored its file, so the early exit may have dropped
    /// elements it should not have.
    pub possible_false_negatives: bool,
}

impl<S: Scalar> BiggestKReport<S> {
    pub fn symbol_elements(&self) -> Vec<Element> {
        self.symbols.iter().map(|f| f.element.clone()).collect()
    }
}

fn sort_desc<S: Scalar>(found: &mut [FoundElement<S>]) {
    // Stable: ties keep discovery order.
    found.sort_by(|a, b| b.score.partial_cmp(&a.score).unwrap_or(Ordering::Equal));
}

/// Uniform-cost search for the `k` highest-scoring symbols.
///
/// Files are popped highest score first; a singleton file is searched at
/// symbol level immediately. Once `k` symbols are known, any pop scoring at
/// or below the `k`-th best ends its frontier.
pub fn bisect_biggest_k<'a, S, F>(
    file_test: &mut TestFn<'_, S>,
    all_files: &ElementSet,
    k: usize,
    mut symbol_level: F,
) -> Result<BiggestKReport<S>, BisectError>
where
    S: Scalar,
    F: FnMut(&Element) -> Result<SymbolSearch<'a, S>, BisectError>,
{
    if k == 0 {
        return Err(BisectError::Contract("bisect_biggest_k needs k >= 1".into()));
    }
    let start = file_test.distinct_evaluations();
    let mut symbol_evaluations = 0;
    let mut found_files: Vec<FoundElement<S>> = Vec::new();
    let mut found_symbols: Vec<FoundElement<S>> = Vec::new();
    let mut file_level_only = Vec::new();
    let mut dominance_violated = false;
    let mut kth_score = S::zero();

    let mut files_frontier = Frontier::new();
    files_frontier.push(file_test.evaluate(all_files)?, all_files.clone());

    while let Some((file_score, files)) = files_frontier.pop() {
        if file_score <= kth_score {
            break;
        }
        if files.len() > 1 {
            let (first, second) = split_in_half(&files)?;
            files_frontier.push(file_test.evaluate(&first)?, first);
            files_frontier.push(file_test.evaluate(&second)?, second);
            continue;
        }

        let file = files.first().expect("singleton").clone();
        found_files.push(FoundElement {
            element: file.clone(),
            score: file_score.clone(),
        });
        let mut level = match symbol_level(&file)? {
            SymbolSearch::FileLevelOnly { evaluations } => {
                symbol_evaluations += evaluations;
                file_level_only.push(file);
                continue;
            }
            SymbolSearch::Searchable(level) => level,
        };

        let all_symbols_score = level.test.evaluate(&level.symbols)?;
        if !all_symbols_score.is_positive_score() {
            file_level_only.push(file.clone());
        }
        let mut symbols_frontier = Frontier::new();
        symbols_frontier.push(all_symbols_score, level.symbols.clone());
        while let Some((score, symbols)) = symbols_frontier.pop() {
            if score <= kth_score {
                break;
            }
            if symbols.len() > 1 {
                let (first, second) = split_in_half(&symbols)?;
                symbols_frontier.push(level.test.evaluate(&first)?, first);
                symbols_frontier.push(level.test.evaluate(&second)?, second);
                continue;
            }
            if score > file_score {
                dominance_violated = true;
            }
            found_symbols.push(FoundElement {
                element: symbols.first().expect("singleton").clone(),
                score,
            });
            sort_desc(&mut found_symbols);
            if found_symbols.len() >= k {
                kth_score = found_symbols[k - 1].score.clone();
            }
        }
        symbol_evaluations += level.test.distinct_evaluations();
    }

    sort_desc(&mut found_files);
    Ok(BiggestKReport {
        k,
        files: found_files,
        symbols: found_symbols,
        file_level_only,
        search_space_size: all_files.len(),
        distinct_evaluations: file_test.distinct_evaluations() - start + symbol_evaluations,
        assertion_status: AssertionStatus::Skipped,
        violated_assumptions: if dominance_violated {
            vec![Assumption::FileDominance]
        } else {
            Vec::new()
        },
        possible_false_negatives: dominance_violated,
    })
}
