use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metric::{make_test_fn, symbol_search, Granularity};
use super::project::{InjectionMode, ProjectLayout, SyntheticProject};
use super::SimError;
use crate::bisect::{
    bisect_biggest_k, bisect_hierarchy, evaluation_bound, AssertionStatus, Assumption,
    BisectError, HierarchyOptions, SymbolOutcome,
};
use crate::domain::Element;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CampaignConfig {
    pub seed: u64,
    pub n_files: usize,
    pub symbols_per_file: usize,
    /// Number of generated projects, each with its own injections.
    pub count: usize,
    pub mode: InjectionMode,
    /// Injections per project. Coupled and sub-file-cancellation modes
    /// need at least two.
    pub injections_per_project: usize,
    /// Use the biggest-k search instead of the exhaustive one.
    pub k: Option<usize>,
}

impl CampaignConfig {
    pub fn new(seed: u64, n_files: usize, symbols_per_file: usize, count: usize, mode: InjectionMode) -> Self {
        let injections_per_project = match mode {
            InjectionMode::Coupled | InjectionMode::SubFileCancellation => 2,
            _ => 1,
        };
        CampaignConfig {
            seed,
            n_files,
            symbols_per_file,
            count,
            mode,
            injections_per_project,
            k: None,
        }
    }

    fn validate(&self) -> Result<(), SimError> {
        if self.count == 0 {
            return Err(SimError::InvalidConfig("count must be at least 1".into()));
        }
        if self.k == Some(0) {
            return Err(SimError::InvalidConfig("k must be at least 1".into()));
        }
        ProjectLayout::generate(self.seed, self.n_files, self.symbols_per_file).map(|_| ())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    ExactFind,
    IndirectFind,
    WrongFind,
    MissedFind,
    NotMeasurable,
}

impl Outcome {
    pub const ALL: [Outcome; 5] = [
        Outcome::ExactFind,
        Outcome::IndirectFind,
        Outcome::WrongFind,
        Outcome::MissedFind,
        Outcome::NotMeasurable,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Outcome::ExactFind => "exact finds",
            Outcome::IndirectFind => "indirect finds",
            Outcome::WrongFind => "wrong finds",
            Outcome::MissedFind => "missed finds",
            Outcome::NotMeasurable => "not measurable",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InjectedSite {
    pub element: Element,
    pub magnitude: f64,
    pub caller: Option<Element>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InjectionRecord {
    pub index: usize,
    pub injected: Vec<InjectedSite>,
    pub outcome: Outcome,
    pub reported_files: Vec<Element>,
    pub reported_symbols: Vec<Element>,
    pub evaluations: usize,
    /// Every level stayed within `k*ceil(log2 n) + 2k + 2`. `None` for the
    /// biggest-k search, which has no such bound.
    pub within_bound: Option<bool>,
    pub assertion_status: AssertionStatus,
    pub violated_assumptions: Vec<Assumption>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CampaignFailure {
    pub index: usize,
    pub error: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InjectionCampaignResult {
    pub config: CampaignConfig,
    pub records: Vec<InjectionRecord>,
    pub counts: BTreeMap<Outcome, usize>,
    /// Over measurable injections; `None` when nothing was reported.
    pub precision: Option<f64>,
    /// Over measurable injections; `None` when nothing was measurable.
    pub recall: Option<f64>,
    pub mean_evaluations: f64,
    pub failures: Vec<CampaignFailure>,
}

impl InjectionCampaignResult {
    pub fn count(&self, outcome: Outcome) -> usize {
        self.counts.get(&outcome).copied().unwrap_or(0)
    }

    pub fn total(&self) -> usize {
        self.records.len()
    }
}

impl fmt::Display for InjectionCampaignResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for outcome in Outcome::ALL {
            writeln!(f, "{:<16} {:>7}", outcome.label(), self.count(outcome))?;
        }
        writeln!(f, "{:<16} {:>7}", "total", self.total())?;
        let pct = |v: Option<f64>| v.map_or("n/a".to_string(), |v| format!("{:.1}%", v * 100.0));
        writeln!(f, "precision        {:>7}", pct(self.precision))?;
        writeln!(f, "recall           {:>7}", pct(self.recall))?;
        write!(f, "mean evaluations {:>7.2}", self.mean_evaluations)?;
        if !self.failures.is_empty() {
            write!(f, "\nfailures         {:>7}", self.failures.len())?;
        }
        Ok(())
    }
}

pub fn run_injection_campaign(config: &CampaignConfig) -> Result<InjectionCampaignResult, SimError> {
    config.validate()?;
    let layout = ProjectLayout::generate(config.seed, config.n_files, config.symbols_per_file)?;
    let results: Vec<Result<InjectionRecord, CampaignFailure>> = (0..config.count)
        .into_par_iter()
        .map(|index| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(index as u64 + 1);
            let project = SyntheticProject::<f64>::inject(
                layout.clone(),
                &mut rng,
                config.injections_per_project,
                config.mode,
            )
            .map_err(|e| CampaignFailure { index, error: e.to_string() })?;
            run_one(index, &Arc::new(project), config.k)
                .map_err(|e| CampaignFailure { index, error: e.to_string() })
        })
        .collect();

    let mut records = Vec::new();
    let mut failures = Vec::new();
    for r in results {
        match r {
            Ok(rec) => records.push(rec),
            Err(f) => failures.push(f),
        }
    }
    let mut counts: BTreeMap<Outcome, usize> = Outcome::ALL.iter().map(|&o| (o, 0)).collect();
    for r in &records {
        *counts.entry(r.outcome).or_default() += 1;
    }
    let correct = counts[&Outcome::ExactFind] + counts[&Outcome::IndirectFind];
    let ratio = |den: usize| (den > 0).then(|| correct as f64 / den as f64);
    let precision = ratio(correct + counts[&Outcome::WrongFind]);
    let recall = ratio(correct + counts[&Outcome::WrongFind] + counts[&Outcome::MissedFind]);
    let mean_evaluations = if records.is_empty() {
        0.0
    } else {
        records.iter().map(|r| r.evaluations as f64).sum::<f64>() / records.len() as f64
    };
    Ok(InjectionCampaignResult {
        config: config.clone(),
        records,
        counts,
        precision,
        recall,
        mean_evaluations,
        failures,
    })
}

/// Search one project and classify the result against its ground truth.
pub fn run_one(
    index: usize,
    project: &Arc<SyntheticProject<f64>>,
    k: Option<usize>,
) -> Result<InjectionRecord, BisectError> {
    let files = project.files();
    let mut file_test = make_test_fn(project, Granularity::Files);
    let factory = |file: &Element| {
        let idx = project
            .file_index(file)
            .ok_or_else(|| BisectError::Contract(format!("unknown file {}", file.file)))?;
        Ok(symbol_search(project, idx))
    };

    let (reported_files, reported_symbols, file_level_only, evaluations, within_bound, status, violated);
    match k {
        None => {
            let report = bisect_hierarchy(&mut file_test, &files.full(), factory, &HierarchyOptions::default())?;
            let mut ok = report.files.distinct_evaluations
                <= evaluation_bound(report.files.found.len(), files.len());
            for s in &report.symbol_searches {
                if let SymbolOutcome::Searched { report: r } = &s.outcome {
                    ok &= r.distinct_evaluations <= evaluation_bound(r.found.len(), r.search_space_size);
                }
            }
            reported_files = report.files.found_elements();
            reported_symbols = report.found_symbols().into_iter().map(|f| f.element).collect::<Vec<_>>();
            file_level_only = report.file_level_only().into_iter().cloned().collect::<Vec<_>>();
            evaluations = report.total_evaluations();
            within_bound = Some(ok);
            status = report.assertion_status();
            violated = report.violated_assumptions();
        }
        Some(k) => {
            let report = bisect_biggest_k(&mut file_test, &files.full(), k, factory)?;
            reported_files = report.files.iter().map(|f| f.element.clone()).collect();
            reported_symbols = report.symbol_elements();
            file_level_only = report.file_level_only.clone();
            evaluations = report.distinct_evaluations;
            within_bound = None;
            status = report.assertion_status;
            violated = report.violated_assumptions.clone();
        }
    }

    let outcome = classify(project, &reported_files, &reported_symbols, &file_level_only);
    let injected = injected_sites(project);
    Ok(InjectionRecord {
        index,
        injected,
        outcome,
        reported_files,
        reported_symbols,
        evaluations,
        within_bound,
        assertion_status: status,
        violated_assumptions: violated,
    })
}

/// Ground truth of `project`, coupled pairs included.
pub fn injected_sites(project: &SyntheticProject<f64>) -> Vec<InjectedSite> {
    project
        .injections
        .iter()
        .map(|inj| InjectedSite {
            element: project.site_element(inj.site),
            magnitude: inj.magnitude,
            caller: inj.caller.map(|c| project.site_element(super::SymbolSite { file: inj.site.file, symbol: c })),
        })
        .chain(project.couplings.iter().flat_map(|c| {
            [c.a, c.b].map(|site| InjectedSite {
                element: project.site_element(site),
                magnitude: c.magnitude,
                caller: None,
            })
        }))
        .collect()
}

/// Classify a report against the project's ground truth.
pub fn classify(
    project: &SyntheticProject<f64>,
    reported_files: &[Element],
    reported_symbols: &[Element],
    file_level_only: &[Element],
) -> Outcome {
    let full = project.files().full();
    if super::metric::file_score(project, &full) == 0.0 {
        return Outcome::NotMeasurable;
    }

    let mut ancestry_files = Vec::new();
    let mut ancestry_symbols = Vec::new();
    // (site symbol, carrier symbol or None, file) per nonzero source.
    let mut sources = Vec::new();
    for inj in &project.injections {
        let file = Element::file(project.layout.files[inj.site.file].path.clone());
        let site = project.site_element(inj.site);
        let carrier = if project.is_exported(inj.site) {
            Some(site.clone())
        } else {
            inj.caller
                .map(|c| project.site_element(super::SymbolSite { file: inj.site.file, symbol: c }))
        };
        ancestry_files.push(file.clone());
        ancestry_symbols.push(site.clone());
        ancestry_symbols.extend(carrier.clone());
        if inj.magnitude != 0.0 {
            sources.push((site, carrier, file));
        }
    }
    for c in &project.couplings {
        for site in [c.a, c.b] {
            let e = project.site_element(site);
            ancestry_files.push(Element::file(e.file.clone()));
            ancestry_symbols.push(e.clone());
            if c.magnitude != 0.0 {
                sources.push((e.clone(), Some(e), Element::file(project.layout.files[site.file].path.clone())));
            }
        }
    }

    let wrong = reported_files.iter().any(|f| !ancestry_files.contains(f))
        || reported_symbols.iter().any(|s| !ancestry_symbols.contains(s));
    if wrong {
        return Outcome::WrongFind;
    }

    let mut indirect = false;
    for (site, carrier, file) in &sources {
        if reported_symbols.contains(site) {
            continue;
        }
        let file_reported = reported_files.contains(file);
        let carried = match carrier {
            Some(c) if c != site => reported_symbols.contains(c),
            Some(_) => false,
            None => file_level_only.contains(file),
        };
        if file_reported && carried {
            indirect = true;
        } else {
            return Outcome::MissedFind;
        }
    }
    if indirect {
        Outcome::IndirectFind
    } else {
        Outcome::ExactFind
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn independent_campaign_is_exact() {
        let r = run_injection_campaign(&CampaignConfig::new(11, 10, 8, 40, InjectionMode::Independent))
            .unwrap();
        assert_eq!(r.count(Outcome::ExactFind), 40);
        assert_eq!(r.precision, Some(1.0));
        assert_eq!(r.recall, Some(1.0));
        assert!(r.records.iter().all(|x| x.within_bound == Some(true)));
        assert!(r.failures.is_empty());
    }

    #[test]
    fn zero_magnitude_campaign_is_all_not_measurable() {
        let r = run_injection_campaign(&CampaignConfig::new(3, 6, 4, 12, InjectionMode::ZeroMagnitude))
            .unwrap();
        assert_eq!(r.count(Outcome::NotMeasurable), 12);
        assert_eq!(r.precision, None);
        assert_eq!(r.recall, None);
    }

    #[test]
    fn non_exported_campaign_is_indirect() {
        let r = run_injection_campaign(&CampaignConfig::new(5, 8, 10, 20, InjectionMode::NonExported))
            .unwrap();
        assert_eq!(r.count(Outcome::IndirectFind), 20);
    }

    #[test]
    fn mixed_campaign_has_no_wrong_or_missed() {
        let r = run_injection_campaign(&CampaignConfig::new(9, 12, 10, 60, InjectionMode::Mixed))
            .unwrap();
        assert_eq!(r.count(Outcome::WrongFind), 0);
        assert_eq!(r.count(Outcome::MissedFind), 0);
        assert!(r.count(Outcome::ExactFind) > 0);
        assert!(r.count(Outcome::IndirectFind) > 0);
        assert!(r.count(Outcome::NotMeasurable) > 0);
    }

    #[test]
    fn coupled_campaign_is_violated() {
        let r = run_injection_campaign(&CampaignConfig::new(2, 6, 4, 10, InjectionMode::Coupled))
            .unwrap();
        assert!(r
            .records
            .iter()
            .all(|x| x.assertion_status == AssertionStatus::Violated));
    }

    #[test]
    fn campaign_is_deterministic() {
        let mut cfg = CampaignConfig::new(4, 10, 6, 16, InjectionMode::Mixed);
        cfg.k = Some(1);
        let a = run_injection_campaign(&cfg).unwrap();
        let b = run_injection_campaign(&cfg).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }

    #[test]
    fn rejects_bad_config() {
        assert!(run_injection_campaign(&CampaignConfig::new(1, 0, 4, 1, InjectionMode::Independent)).is_err());
        let mut cfg = CampaignConfig::new(1, 4, 4, 1, InjectionMode::Independent);
        cfg.k = Some(0);
        assert!(run_injection_campaign(&cfg).is_err());
    }
}
