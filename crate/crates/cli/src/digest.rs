use serde::{Deserialize, Serialize};
use vbisect_core::bisect::{Assumption, AssertionStatus, BiggestKReport, FoundElement, HierarchyReport, SymbolOutcome};
use vbisect_core::domain::Element;

use crate::exit::Status;
use crate::render;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    NoVariability,
    Variable,
    AssumptionViolated,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Blame {
    pub file: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub symbol: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub demangled: Option<String>,
    pub score: f64,
}

impl Blame {
    fn new(element: &Element, score: f64) -> Self {
        Blame {
            file: element.file.clone(),
            symbol: element.symbol_name().map(str::to_string),
            demangled: element.symbol.as_ref().and_then(|s| s.demangled.clone()),
            score,
        }
    }

    pub fn label(&self) -> String {
        match (&self.demangled, &self.symbol) {
            (Some(d), _) => d.clone(),
            (None, Some(s)) => s.clone(),
            (None, None) => self.file.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Evaluations {
    pub file_level: usize,
    pub symbol_level: usize,
    pub total: usize,
}

/// Everything one bisect run decided, in a form `report` can read back.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BisectDigest {
    pub backend: String,
    /// Candidate compilation, or the instance description for `sim`.
    pub candidate: String,
    pub baseline: String,
    pub test: String,
    pub search: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    pub verdict: Verdict,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score_all: Option<f64>,
    pub files: Vec<Blame>,
    pub symbols: Vec<Blame>,
    pub file_level_only: Vec<String>,
    pub evaluations: Evaluations,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub assertion_status: Option<AssertionStatus>,
    pub violated_assumptions: Vec<Assumption>,
    #[serde(default)]
    pub possible_false_negatives: bool,
    pub failures: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ground_truth: Option<serde_json::Value>,
    #[serde(default, skip_serializing_if = "serde_json::Value::is_null")]
    pub detail: serde_json::Value,
}

/// What was searched, independent of the backend.
pub struct Subject {
    pub backend: String,
    pub candidate: String,
    pub baseline: String,
    pub test: String,
}

fn blames(found: &[FoundElement<f64>]) -> Vec<Blame> {
    let mut out: Vec<Blame> = found.iter().map(|f| Blame::new(&f.element, f.score)).collect();
    out.sort_by(|a, b| b.score.total_cmp(&a.score));
    out
}

impl BisectDigest {
    fn base(subject: Subject, search: &str) -> Self {
        BisectDigest {
            backend: subject.backend,
            candidate: subject.candidate,
            baseline: subject.baseline,
            test: subject.test,
            search: search.into(),
            k: None,
            verdict: Verdict::Failed,
            score_all: None,
            files: Vec::new(),
            symbols: Vec::new(),
            file_level_only: Vec::new(),
            evaluations: Evaluations {
                file_level: 0,
                symbol_level: 0,
                total: 0,
            },
            assertion_status: None,
            violated_assumptions: Vec::new(),
            possible_false_negatives: false,
            failures: Vec::new(),
            ground_truth: None,
            detail: serde_json::Value::Null,
        }
    }

    pub fn failed(subject: Subject, search: &str, error: String, evaluations: usize) -> Self {
        let mut d = Self::base(subject, search);
        d.failures.push(error);
        d.evaluations.file_level = evaluations;
        d.evaluations.total = evaluations;
        d
    }

    pub fn from_hierarchy(subject: Subject, report: &HierarchyReport<f64>) -> Self {
        let mut d = Self::base(subject, "all");
        d.score_all = Some(report.files.score_all);
        d.files = blames(&report.files.found);
        d.symbols = blames(&report.found_symbols());
        d.file_level_only = report.file_level_only().iter().map(|e| e.file.clone()).collect();
        let total = report.total_evaluations();
        d.evaluations = Evaluations {
            file_level: report.files.distinct_evaluations,
            symbol_level: total - report.files.distinct_evaluations,
            total,
        };
        d.assertion_status = Some(report.assertion_status());
        d.violated_assumptions = report.violated_assumptions();
        d.failures = report
            .symbol_searches
            .iter()
            .filter_map(|s| match &s.outcome {
                SymbolOutcome::Failed { error } => Some(format!("{}: {error}", s.file.file)),
                _ => None,
            })
            .collect();
        d.detail = serde_json::to_value(report).unwrap_or_default();
        d.verdict = d.classify();
        d
    }

    pub fn from_biggest_k(subject: Subject, report: &BiggestKReport<f64>, score_all: f64, file_level: usize) -> Self {
        let mut d = Self::base(subject, "biggest_k");
        d.k = Some(report.k);
        d.score_all = Some(score_all);
        d.files = blames(&report.files);
        d.symbols = blames(&report.symbols);
        d.file_level_only = report.file_level_only.iter().map(|e| e.file.clone()).collect();
        d.evaluations = Evaluations {
            file_level: file_level.min(report.distinct_evaluations),
            symbol_level: report.distinct_evaluations.saturating_sub(file_level),
            total: report.distinct_evaluations,
        };
        d.assertion_status = Some(report.assertion_status);
        d.violated_assumptions = report.violated_assumptions.clone();
        d.possible_false_negatives = report.possible_false_negatives;
        d.detail = serde_json::to_value(report).unwrap_or_default();
        d.verdict = d.classify();
        d
    }

    fn classify(&self) -> Verdict {
        if !self.failures.is_empty() {
            Verdict::Failed
        } else if self.assertion_status == Some(AssertionStatus::Violated)
            || !self.violated_assumptions.is_empty()
            || self.possible_false_negatives
        {
            Verdict::AssumptionViolated
        } else if self.score_all.is_some_and(|s| s > 0.0) {
            Verdict::Variable
        } else {
            Verdict::NoVariability
        }
    }

    /// Exit status; a finding is only an error under `--check`.
    pub fn status(&self, check: bool) -> Status {
        match self.verdict {
            Verdict::Failed => Status::ToolchainFailure,
            Verdict::AssumptionViolated => Status::AssumptionViolated,
            Verdict::Variable if check => Status::VariabilityFound,
            Verdict::Variable | Verdict::NoVariability => Status::Success,
        }
    }

    pub fn render(&self) -> String {
        let mut out = format!("{} vs {} on {}: ", self.candidate, self.baseline, self.test);
        out.push_str(match self.verdict {
            Verdict::NoVariability => "no variability\n",
            Verdict::Variable => "variable\n",
            Verdict::AssumptionViolated => "assumption violated, results may be incomplete\n",
            Verdict::Failed => "search failed\n",
        });
        if !self.files.is_empty() {
            let rows: Vec<Vec<String>> = self
                .files
                .iter()
                .map(|b| vec![b.file.clone(), render::score(b.score)])
                .collect();
            out.push_str(&render::table(&["file", "score"], &rows));
        }
        if !self.symbols.is_empty() {
            let rows: Vec<Vec<String>> = self
                .symbols
                .iter()
                .map(|b| vec![b.file.clone(), b.label(), render::score(b.score)])
                .collect();
            out.push_str(&render::table(&["file", "symbol", "score"], &rows));
        }
        for f in &self.file_level_only {
            out.push_str(&format!("{f}: variability not reproducible at symbol level\n"));
        }
        out.push_str(&format!(
            "evaluations: {} file, {} symbol, {} total\n",
            self.evaluations.file_level, self.evaluations.symbol_level, self.evaluations.total
        ));
        if let Some(status) = self.assertion_status {
            let status = serde_json::to_value(status).ok().and_then(|v| v.as_str().map(str::to_string));
            out.push_str(&format!("assertion: {}\n", status.unwrap_or_default()));
        }
        if !self.violated_assumptions.is_empty() {
            let names: Vec<String> = self
                .violated_assumptions
                .iter()
                .filter_map(|a| serde_json::to_value(a).ok()?.as_str().map(str::to_string))
                .collect();
            out.push_str(&format!("violated assumptions: {}\n", names.join(", ")));
        }
        if self.possible_false_negatives {
            out.push_str("a symbol outscored its file: some variable symbols may be missing\n");
        }
        for f in &self.failures {
            out.push_str(&format!("failure: {f}\n"));
        }
        out
    }
}
