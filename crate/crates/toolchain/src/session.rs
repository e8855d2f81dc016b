use std::collections::HashMap;
use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::time::Instant;

use serde::Serialize;
use vbisect_core::bisect::{BisectError, SymbolLevel, SymbolSearch, TestFn};
use vbisect_core::domain::{Compilation, Element, ElementSet, TestScore, TestSpec, TestValue, Universe};
use vbisect_core::Scalar;

use crate::build::{Artifact, BuildPlan, Builder};
use crate::config::ProjectManifest;
use crate::error::ToolchainError;
use crate::runner::{Runner, TestRun};

/// Shared state for every build and run against one results directory.
pub struct Session {
    manifest: Arc<ProjectManifest>,
    builder: Builder,
    runner: Runner,
    results: PathBuf,
    baselines: Mutex<HashMap<String, TestValue>>,
    log_lock: Mutex<()>,
}

#[derive(Debug, Serialize)]
struct TestLine<'a> {
    test: &'a str,
    score: Option<f64>,
    run_seconds: Option<f64>,
}

#[derive(Debug, Serialize)]
struct RunRecord<'a> {
    level: &'a str,
    elements: Vec<String>,
    plan: &'a BuildPlan,
    score: &'a TestScore<f64>,
    tests: Vec<TestLine<'a>>,
    build_seconds: f64,
}

/// Outcome of the determinism preflight, one entry per test.
#[derive(Debug, Clone, Serialize)]
pub struct DeterminismReport {
    pub compilation: Compilation,
    pub runs: usize,
    pub tests: Vec<TestDeterminism>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TestDeterminism {
    pub test: String,
    pub deterministic: bool,
    /// Index of the first run whose output differed from run 0.
    pub first_divergent_run: Option<usize>,
}

impl DeterminismReport {
    pub fn offending(&self) -> Vec<&str> {
        self.tests
            .iter()
            .filter(|t| !t.deterministic)
            .map(|t| t.test.as_str())
            .collect()
    }

    pub fn passed(&self) -> bool {
        self.tests.iter().all(|t| t.deterministic)
    }
}

fn failure_score(e: &ToolchainError) -> TestScore<f64> {
    if e.is_build_failure() {
        TestScore::BuildFailure {
            diagnostics: e.to_string(),
        }
    } else {
        TestScore::RunFailure {
            diagnostics: e.to_string(),
        }
    }
}

impl Session {
    pub fn new(manifest: ProjectManifest, results: &Path, jobs: usize) -> Result<Arc<Self>, ToolchainError> {
        let results = &std::path::absolute(results).map_err(|e| ToolchainError::io(results.display(), e))?;
        let manifest = Arc::new(manifest);
        let builder = Builder::new(Arc::clone(&manifest), results, jobs)?;
        let runner = Runner::new(builder.env().to_vec(), manifest.timeout, results.join("scratch"));
        std::fs::create_dir_all(results.join("runs")).map_err(|e| ToolchainError::io(results.display(), e))?;
        Ok(Arc::new(Session {
            manifest,
            builder,
            runner,
            results: results.to_path_buf(),
            baselines: Mutex::new(HashMap::new()),
            log_lock: Mutex::new(()),
        }))
    }

    pub fn manifest(&self) -> &ProjectManifest {
        &self.manifest
    }

    pub fn builder(&self) -> &Builder {
        &self.builder
    }

    pub fn runner(&self) -> &Runner {
        &self.runner
    }

    pub fn results(&self) -> &Path {
        &self.results
    }

    pub fn build_baseline(&self, compilation: &Compilation) -> Result<Artifact, ToolchainError> {
        self.builder
            .build_mixed(&BuildPlan::mixed(compilation, compilation, std::iter::empty()))
    }

    /// Output of `spec` under the correctness baseline, computed once.
    pub fn baseline_output(&self, spec: &TestSpec) -> Result<TestValue, ToolchainError> {
        if let Some(v) = self.baselines.lock().expect("baseline lock").get(&spec.name) {
            return Ok(v.clone());
        }
        let artifact = self.build_baseline(&self.manifest.correctness_baseline)?;
        let run = self.runner.run_test(&artifact.exe, spec)?;
        self.baselines
            .lock()
            .expect("baseline lock")
            .insert(spec.name.clone(), run.value.clone());
        Ok(run.value)
    }

    /// Run every spec `runs` times under the correctness baseline and require
    /// bitwise-identical results.
    pub fn check_determinism(&self, specs: &[TestSpec], runs: usize) -> Result<DeterminismReport, ToolchainError> {
        let baseline = self.manifest.correctness_baseline.clone();
        let artifact = self.build_baseline(&baseline)?;
        let mut tests = Vec::new();
        for spec in specs {
            let first = self.runner.run_test(&artifact.exe, spec)?.value;
            let mut divergent = None;
            for i in 1..runs.max(2) {
                let next = self.runner.run_test(&artifact.exe, spec)?.value;
                if !first.bitwise_eq(&next) {
                    divergent = Some(i);
                    break;
                }
            }
            if divergent.is_none() {
                self.baselines
                    .lock()
                    .expect("baseline lock")
                    .insert(spec.name.clone(), first);
            }
            tests.push(TestDeterminism {
                test: spec.name.clone(),
                deterministic: divergent.is_none(),
                first_divergent_run: divergent,
            });
        }
        Ok(DeterminismReport {
            compilation: baseline,
            runs: runs.max(2),
            tests,
        })
    }

    /// Score one run of `exe` against the baseline output of `spec`.
    pub fn score_run(&self, spec: &TestSpec, run: &TestRun) -> Result<f64, ToolchainError> {
        let baseline = self.baseline_output(spec)?;
        spec.comparator
            .compare(&baseline, &run.value)
            .map_err(|e| ToolchainError::Protocol {
                test: spec.name.clone(),
                diagnostics: e.to_string(),
            })
    }

    /// Build `plan`, run every spec and take the largest score.
    pub fn evaluate_plan(&self, plan: &BuildPlan, specs: &[TestSpec], level: &str, elements: Vec<String>) -> TestScore<f64> {
        let start = Instant::now();
        let built = self.builder.build_mixed(plan);
        let build_seconds = start.elapsed().as_secs_f64();
        let mut lines = Vec::new();
        let score = match built {
            Err(e) => failure_score(&e),
            Ok(artifact) => {
                let mut worst = 0.0f64;
                let mut failure = None;
                for spec in specs {
                    let scored = self
                        .runner
                        .run_test(&artifact.exe, spec)
                        .and_then(|run| self.score_run(spec, &run).map(|s| (s, run.elapsed)));
                    match scored {
                        Ok((s, elapsed)) => {
                            worst = worst.max(s);
                            lines.push(TestLine {
                                test: &spec.name,
                                score: Some(s),
                                run_seconds: Some(elapsed.as_secs_f64()),
                            });
                        }
                        Err(e) => {
                            lines.push(TestLine {
                                test: &spec.name,
                                score: None,
                                run_seconds: None,
                            });
                            failure = Some(failure_score(&e));
                            break;
                        }
                    }
                }
                failure.unwrap_or(TestScore::measured(worst))
            }
        };
        self.log_run(&RunRecord {
            level,
            elements,
            plan,
            score: &score,
            tests: lines,
            build_seconds,
        });
        score
    }

    fn log_run(&self, record: &RunRecord<'_>) {
        let path = self
            .results
            .join("runs")
            .join(format!("{}.jsonl", record.plan.candidate.slug()));
        let line = match serde_json::to_string(record) {
            Ok(l) => l,
            Err(e) => {
                log::warn!("cannot serialize run record: {e}");
                return;
            }
        };
        let _guard = self.log_lock.lock().expect("log lock");
        let written = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .and_then(|mut f| writeln!(f, "{line}"));
        if let Err(e) = written {
            log::warn!("cannot append to {}: {e}", path.display());
        }
    }
}

/// Test over sets of files: the set comes from `candidate`, the rest from
/// the correctness baseline. The score is the largest over `specs`.
pub fn make_file_test_fn(session: &Arc<Session>, candidate: &Compilation, specs: &[TestSpec]) -> TestFn<'static, f64> {
    let session = Arc::clone(session);
    let candidate = candidate.clone();
    let specs = specs.to_vec();
    TestFn::new(move |set: &ElementSet| {
        let files: Vec<String> = set.iter().map(|e| e.file.clone()).collect();
        let plan = BuildPlan::mixed(&candidate, &session.manifest.correctness_baseline, files.clone());
        session.evaluate_plan(&plan, &specs, "file", files)
    })
}

/// Symbol-level search below `file`, or file-level only when the file's
/// variability does not survive position-independent rebuilding.
pub fn make_symbol_test_fn(
    session: &Arc<Session>,
    candidate: &Compilation,
    file: &str,
    specs: &[TestSpec],
) -> Result<SymbolSearch<'static, f64>, BisectError> {
    let build_failure = |e: ToolchainError| BisectError::BuildFailure {
        set: vec![file.to_string()],
        diagnostics: e.to_string(),
    };
    let exported = session
        .builder
        .exported_symbols(file, candidate, true)
        .map_err(build_failure)?;
    if exported.is_empty() {
        return Ok(SymbolSearch::FileLevelOnly { evaluations: 0 });
    }
    let names: Vec<String> = exported
        .iter()
        .filter_map(|e| e.symbol_name().map(str::to_string))
        .collect();
    let universe = Universe::new(exported.clone()).map_err(BisectError::Domain)?;

    let session_c = Arc::clone(session);
    let candidate_c = candidate.clone();
    let file_c = file.to_string();
    let specs = specs.to_vec();
    let mut test = TestFn::new(move |set: &ElementSet| {
        let chosen: Vec<String> = set
            .iter()
            .filter_map(|e| e.symbol_name().map(str::to_string))
            .collect();
        let plan = BuildPlan::symbols(
            &candidate_c,
            &session_c.manifest.correctness_baseline,
            &file_c,
            names.clone(),
            chosen,
        );
        let labels = set.iter().map(Element::label).collect();
        session_c.evaluate_plan(&plan, &specs, "symbol", labels)
    });
    let all = universe.full();
    if !test.evaluate(&all)?.is_positive_score() {
        return Ok(SymbolSearch::FileLevelOnly {
            evaluations: test.distinct_evaluations(),
        });
    }
    Ok(SymbolSearch::Searchable(SymbolLevel { test, symbols: all }))
}
