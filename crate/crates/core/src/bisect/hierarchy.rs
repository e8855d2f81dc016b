use serde::Serialize;

use super::all::{bisect_all_with, BisectOptions};
use super::report::{Assumption, AssertionStatus, BisectReport, FoundElement};
use super::{BisectError, TestFn};
use crate::domain::{Element, ElementSet};
use crate::Scalar;

/// Symbol-level search space for one file.
pub struct SymbolLevel<'a, S> {
    pub test: TestFn<'a, S>,
    /// Exported symbols of the file in symbol-table order.
    pub symbols: ElementSet,
}

/// What a backend can offer below a variable file.
pub enum SymbolSearch<'a, S> {
    Searchable(SymbolLevel<'a, S>),
    /// Symbol replacement cannot reproduce the file's variability; the
    /// search stops at the file. `evaluations` is what finding that out cost.
    FileLevelOnly { evaluations: usize },
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum SymbolOutcome<S> {
    Searched { report: BisectReport<S> },
    FileLevelOnly,
    Skipped,
    Failed { error: String },
}

#[derive(Debug, Clone, Serialize)]
pub struct FileOutcome<S> {
    pub file: Element,
    pub file_score: S,
    /// Backend evaluations spent below this file.
    pub evaluations: usize,
    pub outcome: SymbolOutcome<S>,
}

/// Files first, then the symbols of every variable file.
#[derive(Debug, Clone, Serialize)]
pub struct HierarchyReport<S> {
    pub files: BisectReport<S>,
    pub symbol_searches: Vec<FileOutcome<S>>,
}

impl<S: Scalar> HierarchyReport<S> {
    /// Symbols from every searched file, by descending score.
    pub fn found_symbols(&self) -> Vec<FoundElement<S>> {
        let mut out: Vec<FoundElement<S>> = self
            .symbol_searches
            .iter()
            .filter_map(|f| match &f.outcome {
                SymbolOutcome::Searched { report } => Some(report.found.clone()),
                _ => None,
            })
            .flatten()
            .collect();
        out.sort_by(|a, b| b.score.partial_cmp(&a.score).unwrap_or(std::cmp::Ordering::Equal));
        out
    }

    pub fn file_level_only(&self) -> Vec<&Element> {
        self.symbol_searches
            .iter()
            .filter(|f| matches!(f.outcome, SymbolOutcome::FileLevelOnly))
            .map(|f| &f.file)
            .collect()
    }

    pub fn total_evaluations(&self) -> usize {
        self.files.distinct_evaluations
            + self.symbol_searches.iter().map(|f| f.evaluations).sum::<usize>()
    }

    /// Violated if any level is; Verified only if every level that ran is.
    pub fn assertion_status(&self) -> AssertionStatus {
        let mut statuses = std::iter::once(self.files.assertion_status).chain(
            self.symbol_searches.iter().filter_map(|f| match &f.outcome {
                SymbolOutcome::Searched { report } => Some(report.assertion_status),
                _ => None,
            }),
        );
        if statuses.any(|s| s == AssertionStatus::Violated) {
            AssertionStatus::Violated
        } else {
            AssertionStatus::Verified
        }
    }

    pub fn violated_assumptions(&self) -> Vec<Assumption> {
        let mut all: Vec<Assumption> = self.files.violated_assumptions.clone();
        for f in &self.symbol_searches {
            if let SymbolOutcome::Searched { report } = &f.outcome {
                all.extend(report.violated_assumptions.iter().copied());
                if report.found.iter().any(|s| s.score > f.file_score) {
                    all.push(Assumption::FileDominance);
                }
            }
        }
        all.sort();
        all.dedup();
        all
    }

    pub fn symbol_failures(&self) -> usize {
        self.symbol_searches
            .iter()
            .filter(|f| matches!(f.outcome, SymbolOutcome::Failed { .. }))
            .count()
    }
}

#[derive(Debug, Clone)]
pub struct HierarchyOptions<S> {
    pub bisect: BisectOptions<S>,
    /// Stop after the file level.
    pub files_only: bool,
}

impl<S: Scalar> Default for HierarchyOptions<S> {
    fn default() -> Self {
        HierarchyOptions {
            bisect: BisectOptions::default(),
            files_only: false,
        }
    }
}

/// Run [`bisect_all`](super::bisect_all) over `files`, then over the
/// symbols of each variable file.
///
/// A file-level failure aborts the whole search. A failure below one file is
/// recorded for that file and the remaining files are still searched.
pub fn bisect_hierarchy<'a, S, F>(
    file_test: &mut TestFn<'_, S>,
    files: &ElementSet,
    mut symbol_level: F,
    options: &HierarchyOptions<S>,
) -> Result<HierarchyReport<S>, BisectError>
where
    S: Scalar,
    F: FnMut(&Element) -> Result<SymbolSearch<'a, S>, BisectError>,
{
    let file_report = bisect_all_with(file_test, files, &options.bisect)?;
    let mut symbol_searches = Vec::with_capacity(file_report.found.len());
    for found in &file_report.found {
        let file = found.element.clone();
        let file_score = found.score.clone();
        if options.files_only {
            symbol_searches.push(FileOutcome {
                file,
                file_score,
                evaluations: 0,
                outcome: SymbolOutcome::Skipped,
            });
            continue;
        }
        let (evaluations, outcome) = match symbol_level(&file) {
            Err(e) => (0, SymbolOutcome::Failed { error: e.to_string() }),
            Ok(SymbolSearch::FileLevelOnly { evaluations }) => {
                (evaluations, SymbolOutcome::FileLevelOnly)
            }
            Ok(SymbolSearch::Searchable(mut level)) => {
                let outcome = search_symbols(&mut level, &options.bisect);
                (level.test.distinct_evaluations(), outcome)
            }
        };
        symbol_searches.push(FileOutcome {
            file,
            file_score,
            evaluations,
            outcome,
        });
    }
    Ok(HierarchyReport {
        files: file_report,
        symbol_searches,
    })
}

fn search_symbols<S: Scalar>(level: &mut SymbolLevel<'_, S>, options: &BisectOptions<S>) -> SymbolOutcome<S> {
    if level.symbols.is_empty() {
        return SymbolOutcome::FileLevelOnly;
    }
    match level.test.evaluate(&level.symbols) {
        Err(e) => return SymbolOutcome::Failed { error: e.to_string() },
        Ok(v) if !v.is_positive_score() => return SymbolOutcome::FileLevelOnly,
        Ok(_) => {}
    }
    match bisect_all_with(&mut level.test, &level.symbols, options) {
        Ok(report) => SymbolOutcome::Searched { report },
        Err(e) => SymbolOutcome::Failed { error: e.to_string() },
    }
}
