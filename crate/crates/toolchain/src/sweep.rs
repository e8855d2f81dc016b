use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::OpenOptions;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use vbisect_core::domain::{Compilation, OptLevel, TestScore, TestSpec};

use crate::build::{Artifact, BuildPlan};
use crate::config::ProjectManifest;
use crate::error::{ConfigError, ToolchainError};
use crate::session::Session;

/// Every `(compiler, level)` with no switch and with each configured
/// switch, deduplicated, plus both baselines.
pub fn plan_matrix(manifest: &ProjectManifest) -> Result<Vec<Compilation>, ConfigError> {
    let mut out: Vec<Compilation> = Vec::new();
    let mut push = |c: Compilation| {
        if !out.contains(&c) {
            out.push(c);
        }
    };
    for (id, cc) in &manifest.compilers {
        for level in &cc.optimization_levels {
            let level: OptLevel = level.parse().map_err(|e| ConfigError::Invalid(format!("{e}")))?;
            push(Compilation::new(id.clone(), level.clone(), Vec::<String>::new()));
            for switch in &cc.switches {
                push(Compilation::new(id.clone(), level.clone(), switch.split_whitespace()));
            }
        }
    }
    for c in [&manifest.correctness_baseline, &manifest.performance_reference] {
        manifest.compiler(&c.compiler)?;
        push(c.clone());
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub compilation: Compilation,
    pub test: String,
    /// Against the correctness baseline output.
    pub score: TestScore<f64>,
    pub wall_times: Vec<f64>,
    pub median_time: Option<f64>,
    /// Performance-reference median time over this median time.
    pub speedup: Option<f64>,
}

impl SweepRecord {
    pub fn bitwise_equal(&self) -> Option<bool> {
        self.score.value().map(|v| *v == 0.0)
    }

    pub fn is_complete(&self) -> bool {
        !self.score.is_failure() && self.speedup.is_some()
    }
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { (v[n / 2 - 1] + v[n / 2]) / 2.0 })
}

pub fn read_records(path: &Path) -> Result<Vec<SweepRecord>, ToolchainError> {
    let file = match std::fs::File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(ToolchainError::io(path.display(), e)),
    };
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| ToolchainError::io(path.display(), e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(&line)
            .map_err(|e| ToolchainError::Io(format!("{}:{}: corrupt record: {e}", path.display(), i + 1)))?;
        out.push(rec);
    }
    Ok(out)
}

fn append(path: &Path, record: &SweepRecord) -> Result<(), ToolchainError> {
    let line = serde_json::to_string(record).map_err(|e| ToolchainError::Io(e.to_string()))?;
    OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .and_then(|mut f| writeln!(f, "{line}"))
        .map_err(|e| ToolchainError::io(path.display(), e))
}

#[derive(Debug, Clone)]
pub struct SweepOptions {
    /// Timed runs per cell; the median is kept.
    pub runs: usize,
    /// Keep completed cells from an existing `sweep.jsonl`.
    pub resume: bool,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions { runs: 3, resume: false }
    }
}

/// Build every compilation, then time and score every `(compilation, test)`
/// cell, appending each record to `records_path` as it completes.
///
/// The performance reference runs first so every later cell can carry its
/// speedup. Failed cells are recorded and the sweep continues.
pub fn run_sweep(
    session: &Session,
    matrix: &[Compilation],
    tests: &[TestSpec],
    options: &SweepOptions,
    records_path: &Path,
) -> Result<Vec<SweepRecord>, ToolchainError> {
    let reference = session.manifest().performance_reference.clone();
    let mut existing: HashMap<(Compilation, String), SweepRecord> = HashMap::new();
    if options.resume {
        for r in read_records(records_path)? {
            existing.insert((r.compilation.clone(), r.test.clone()), r);
        }
    } else if records_path.exists() {
        std::fs::remove_file(records_path).map_err(|e| ToolchainError::io(records_path.display(), e))?;
    }

    let mut order: Vec<Compilation> = vec![reference.clone()];
    for c in matrix {
        if !order.contains(c) {
            order.push(c.clone());
        }
    }
    let in_matrix: HashSet<&Compilation> = matrix.iter().collect();
    let pending = |c: &Compilation| tests.iter().any(|t| !existing.contains_key(&(c.clone(), t.name.clone())));

    // Builds first, so no compiler competes with the timed runs.
    let mut artifacts: HashMap<Compilation, Result<Artifact, ToolchainError>> = HashMap::new();
    for c in order.iter().filter(|c| pending(c)) {
        log::info!("building {c}");
        let plan = BuildPlan::mixed(c, c, session.manifest().files.clone());
        artifacts.insert(c.clone(), session.builder().build_mixed(&plan));
    }

    let mut reference_times: HashMap<String, f64> = existing
        .values()
        .filter(|r| r.compilation == reference)
        .filter_map(|r| r.median_time.map(|m| (r.test.clone(), m)))
        .collect();
    let mut out = Vec::new();
    for c in &order {
        for spec in tests {
            let key = (c.clone(), spec.name.clone());
            let record = match existing.remove(&key) {
                Some(r) => r,
                None => {
                    let r = time_cell(session, c, spec, artifacts.get(c).expect("built"), options.runs, &reference, &reference_times);
                    append(records_path, &r)?;
                    r
                }
            };
            if *c == reference {
                if let Some(m) = record.median_time {
                    reference_times.insert(spec.name.clone(), m);
                }
            }
            if in_matrix.contains(c) {
                out.push(record);
            }
        }
    }
    Ok(out)
}

fn time_cell(
    session: &Session,
    compilation: &Compilation,
    spec: &TestSpec,
    artifact: &Result<Artifact, ToolchainError>,
    runs: usize,
    reference: &Compilation,
    reference_times: &HashMap<String, f64>,
) -> SweepRecord {
    let failed = |score| SweepRecord {
        compilation: compilation.clone(),
        test: spec.name.clone(),
        score,
        wall_times: Vec::new(),
        median_time: None,
        speedup: None,
    };
    let artifact = match artifact {
        Ok(a) => a,
        Err(e) => return failed(TestScore::BuildFailure { diagnostics: e.to_string() }),
    };
    let runner = session.runner();
    let score = match runner.run_test(&artifact.exe, spec).and_then(|r| session.score_run(spec, &r)) {
        Ok(s) => s,
        Err(e) => return failed(TestScore::RunFailure { diagnostics: e.to_string() }),
    };
    let mut wall_times = Vec::with_capacity(runs);
    for _ in 0..runs.max(1) {
        match runner.run_test(&artifact.exe, spec) {
            Ok(r) => wall_times.push(r.elapsed.as_secs_f64()),
            Err(e) => return failed(TestScore::RunFailure { diagnostics: e.to_string() }),
        }
    }
    let median_time = median(&wall_times);
    let speedup = if compilation == reference {
        Some(1.0)
    } else {
        match (reference_times.get(&spec.name), median_time) {
            (Some(r), Some(m)) if m > 0.0 => Some(r / m),
            _ => None,
        }
    };
    SweepRecord {
        compilation: compilation.clone(),
        test: spec.name.clone(),
        score: TestScore::measured(score),
        wall_times,
        median_time,
        speedup,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesPoint {
    pub compilation: Compilation,
    pub speedup: f64,
    pub bitwise_equal: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariabilityStats {
    pub count: usize,
    pub min: f64,
    pub median: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompilerSummary {
    pub compiler: String,
    pub variable_runs: usize,
    pub total_runs: usize,
    pub percent_variable: f64,
    /// Compilation with the highest arithmetic-mean speedup over tests.
    pub best_flags: Option<Compilation>,
    pub mean_speedup: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fastest {
    pub bitwise_equal: Option<SeriesPoint>,
    pub variable: Option<SeriesPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    /// Per test, ascending by speedup.
    pub series: BTreeMap<String, Vec<SeriesPoint>>,
    /// Per test, over scores above zero; absent when every score is zero.
    pub variability: BTreeMap<String, Option<VariabilityStats>>,
    pub compilers: Vec<CompilerSummary>,
    pub fastest: BTreeMap<String, Fastest>,
    pub failed_cells: usize,
    pub speedup_mean: String,
}

fn point_order(a: &SeriesPoint, b: &SeriesPoint) -> std::cmp::Ordering {
    a.speedup
        .total_cmp(&b.speedup)
        .then_with(|| a.compilation.to_string().cmp(&b.compilation.to_string()))
}

/// Pure aggregation of sweep records.
pub fn summarize(records: &[SweepRecord]) -> Option<SweepSummary> {
    if records.is_empty() {
        return None;
    }
    let mut series: BTreeMap<String, Vec<SeriesPoint>> = BTreeMap::new();
    let mut scores: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    let mut failed_cells = 0;
    for r in records {
        series.entry(r.test.clone()).or_default();
        let variable = scores.entry(r.test.clone()).or_default();
        match (r.score.value(), r.speedup) {
            (Some(&s), speedup) => {
                if s > 0.0 {
                    variable.push(s);
                }
                if let Some(speedup) = speedup {
                    series.get_mut(&r.test).expect("inserted").push(SeriesPoint {
                        compilation: r.compilation.clone(),
                        speedup,
                        bitwise_equal: s == 0.0,
                    });
                }
            }
            (None, _) => failed_cells += 1,
        }
    }
    for points in series.values_mut() {
        points.sort_by(point_order);
    }

    let variability = scores
        .into_iter()
        .map(|(test, s)| {
            let stats = (!s.is_empty()).then(|| VariabilityStats {
                count: s.len(),
                min: s.iter().copied().fold(f64::INFINITY, f64::min),
                median: median(&s).expect("non-empty"),
                max: s.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            });
            (test, stats)
        })
        .collect();

    let fastest = series
        .iter()
        .map(|(test, points)| {
            let best = |eq: bool| {
                points
                    .iter()
                    .filter(|p| p.bitwise_equal == eq)
                    .max_by(|a, b| point_order(a, b))
                    .cloned()
            };
            (
                test.clone(),
                Fastest {
                    bitwise_equal: best(true),
                    variable: best(false),
                },
            )
        })
        .collect();

    let mut by_compiler: BTreeMap<String, Vec<&SweepRecord>> = BTreeMap::new();
    for r in records {
        by_compiler.entry(r.compilation.compiler.clone()).or_default().push(r);
    }
    let compilers = by_compiler
        .into_iter()
        .map(|(compiler, recs)| {
            let completed: Vec<&&SweepRecord> = recs.iter().filter(|r| r.score.value().is_some()).collect();
            let variable_runs = completed.iter().filter(|r| r.bitwise_equal() == Some(false)).count();
            let total_runs = completed.len();
            let mut speedups: BTreeMap<String, (Compilation, Vec<f64>)> = BTreeMap::new();
            for r in recs.iter().filter(|r| r.is_complete()) {
                speedups
                    .entry(r.compilation.to_string())
                    .or_insert_with(|| (r.compilation.clone(), Vec::new()))
                    .1
                    .push(r.speedup.expect("complete"));
            }
            let best = speedups
                .into_values()
                .map(|(c, s)| (c, s.iter().sum::<f64>() / s.len() as f64))
                .fold(None::<(Compilation, f64)>, |acc, (c, m)| match acc {
                    Some((_, best)) if best >= m => acc,
                    _ => Some((c, m)),
                });
            CompilerSummary {
                compiler,
                variable_runs,
                total_runs,
                percent_variable: if total_runs == 0 {
                    0.0
                } else {
                    100.0 * variable_runs as f64 / total_runs as f64
                },
                best_flags: best.as_ref().map(|(c, _)| c.clone()),
                mean_speedup: best.map(|(_, m)| m),
            }
        })
        .collect();

    Some(SweepSummary {
        series,
        variability,
        compilers,
        fastest,
        failed_cells,
        speedup_mean: "arithmetic".into(),
    })
}

/// Write `series/<test>.csv` with `compilation_id,speedup,bitwise_equal`.
pub fn write_series(dir: &Path, summary: &SweepSummary) -> Result<(), ToolchainError> {
    let series_dir = dir.join("series");
    std::fs::create_dir_all(&series_dir).map_err(|e| ToolchainError::io(series_dir.display(), e))?;
    for (test, points) in &summary.series {
        let path = series_dir.join(format!("{test}.csv"));
        let csv_err = |e: csv::Error| ToolchainError::Io(format!("{}: {e}", path.display()));
        let mut w = csv::Writer::from_path(&path).map_err(csv_err)?;
        w.write_record(["compilation_id", "speedup", "bitwise_equal"]).map_err(csv_err)?;
        for p in points {
            w.write_record([p.compilation.to_string(), p.speedup.to_string(), p.bitwise_equal.to_string()])
                .map_err(csv_err)?;
        }
        w.flush().map_err(|e| ToolchainError::io(path.display(), e))?;
    }
    Ok(())
}
