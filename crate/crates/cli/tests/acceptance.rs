//! End-to-end acceptance checks. One line per criterion; exits nonzero if
//! any criterion fails. Criteria that need a host C++ toolchain are skipped
//! when none is installed.

use std::collections::BTreeSet;
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::Arc;
use std::time::{Duration, Instant};

use vbisect_core::bisect::{bisect_all, evaluation_bound, AssertionStatus, TestFn};
use vbisect_core::domain::{Element, ElementSet, TestScore, Universe};
use vbisect_core::oracle::Oracle;
use vbisect_core::sim::{run_injection_campaign, run_one, CampaignConfig, InjectionMode, Outcome, SyntheticProject};
use vbisect_core::domain::Compilation;
use vbisect_core::Scalar;
use vbisect_toolchain::sweep::read_records;

const TRACE_N: usize = 10;
const TRACE_VARIABLE: [usize; 3] = [2, 8, 9];
const TRACE_SEARCH_EVALUATIONS: usize = 13;
const TRACE_ASSERTION_EVALUATIONS: usize = 1;
const TRACE_BUDGET: Duration = Duration::from_secs(1);

const ORACLE_INSTANCES: u64 = 200;
const ORACLE_MAX_N: usize = 12;
const ORACLE_BUDGET: Duration = Duration::from_secs(30);

const CAMPAIGN_SEED: u64 = 2024;
const CAMPAIGN_COUNT: usize = 500;
const CAMPAIGN_FILES: usize = 45;
const CAMPAIGN_SYMBOLS: usize = 25;
const CAMPAIGN_MAX_MEAN_EVALUATIONS: f64 = 20.0;
const CAMPAIGN_BUDGET: Duration = Duration::from_secs(60);

const ADVERSARIAL_INSTANCES: u64 = 50;
const VIOLATION_EXIT_CODE: i32 = 4;

const BIGGEST_K_SEEDS: u64 = 100;
const BIGGEST_K_TRUE: std::ops::RangeInclusive<usize> = 3..=8;

const FIXTURE_BUDGET: Duration = Duration::from_secs(120);

enum Verdict {
    Pass(String),
    Fail(String),
    Skip(String),
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_vbisect")
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../toolchain/fixtures/toy")
        .join(name)
}

fn have_toolchain() -> bool {
    ["g++", "nm", "objcopy"]
        .iter()
        .all(|t| Command::new(t).arg("--version").output().is_ok_and(|o| o.status.success()))
}

fn vbisect(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().expect("spawn vbisect")
}

fn numbered(n: usize) -> Arc<Universe> {
    Universe::new((1..=n).map(|i| Element::file(i.to_string()))).unwrap()
}

/// Element with label `variable[i]` contributes `2^-(i+1)`.
fn additive(variable: Vec<usize>) -> TestFn<'static, f64> {
    TestFn::new(move |s: &ElementSet| {
        let v: f64 = s
            .iter()
            .filter_map(|e| variable.iter().position(|&x| x.to_string() == e.file))
            .map(|rank| f64::inverse_pow2(rank as u32 + 1))
            .sum();
        TestScore::measured(v)
    })
}

fn labels(set: &ElementSet) -> Vec<usize> {
    set.iter().map(|e| e.file.parse().unwrap()).collect()
}

fn criterion_1() -> Result<String, String> {
    let start = Instant::now();
    let u = numbered(TRACE_N);
    let mut test = additive(TRACE_VARIABLE.to_vec());
    let r = bisect_all(&mut test, &u.full()).map_err(|e| e.to_string())?;
    let mut found: Vec<usize> = r.found.iter().map(|f| f.element.file.parse().unwrap()).collect();
    found.sort();
    ensure(found == TRACE_VARIABLE, || format!("found {found:?}"))?;
    ensure(r.search_evaluations == TRACE_SEARCH_EVALUATIONS, || {
        format!("{} search evaluations", r.search_evaluations)
    })?;
    ensure(
        r.distinct_evaluations - r.search_evaluations == TRACE_ASSERTION_EVALUATIONS,
        || format!("{} assertion evaluations", r.distinct_evaluations - r.search_evaluations),
    )?;
    let rows: Vec<Vec<usize>> = r.trace.iter().take(TRACE_SEARCH_EVALUATIONS).map(|s| labels(&s.set)).collect();
    let expected: Vec<Vec<usize>> = vec![
        (1..=10).collect(),
        (1..=5).collect(),
        vec![1, 2],
        vec![1],
        vec![2],
        (3..=10).collect(),
        (3..=6).collect(),
        vec![7, 8],
        vec![7],
        vec![8],
        vec![9, 10],
        vec![9],
        vec![10],
    ];
    ensure(rows == expected, || format!("trace {rows:?}"))?;
    ensure(r.assertion_status == AssertionStatus::Verified, || "assertion not verified".into())?;
    let elapsed = start.elapsed();
    ensure(elapsed < TRACE_BUDGET, || format!("took {elapsed:?}"))?;
    Ok(format!(
        "found {{2,8,9}}, {} + {} evaluations, trace rows 1-13 match",
        r.search_evaluations, TRACE_ASSERTION_EVALUATIONS
    ))
}

/// Seeded instance for criteria 2 and 4: size and variable set.
fn oracle_instance(seed: u64) -> (usize, Vec<usize>) {
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(1..=ORACLE_MAX_N);
    let k = rng.gen_range(0..=n);
    let mut ids: Vec<usize> = (1..=n).collect();
    ids.shuffle(&mut rng);
    ids.truncate(k);
    (n, ids)
}

fn criterion_2() -> Result<String, String> {
    let start = Instant::now();
    let mut mismatches = 0;
    for seed in 0..ORACLE_INSTANCES {
        let (n, variable) = oracle_instance(seed);
        let u = numbered(n);
        let mut t = additive(variable.clone());
        let r = bisect_all(&mut t, &u.full()).map_err(|e| e.to_string())?;
        let mut t = additive(variable.clone());
        let v = Oracle::default().verdict(&u.full(), &mut t).map_err(|e| e.to_string())?;
        let found: BTreeSet<Element> = r.found_elements().into_iter().collect();
        let av: BTreeSet<Element> = v.av_set.to_vec().into_iter().collect();
        if found != av || !v.unique_minimal {
            mismatches += 1;
        }
    }
    ensure(mismatches == 0, || format!("{mismatches} mismatches"))?;
    let elapsed = start.elapsed();
    ensure(elapsed < ORACLE_BUDGET, || format!("took {elapsed:?}"))?;
    Ok(format!("{ORACLE_INSTANCES} instances, 0 mismatches, AV unique minimal in all"))
}

fn criterion_3() -> Result<String, String> {
    let start = Instant::now();
    let config = CampaignConfig::new(
        CAMPAIGN_SEED,
        CAMPAIGN_FILES,
        CAMPAIGN_SYMBOLS,
        CAMPAIGN_COUNT,
        InjectionMode::Independent,
    );
    let r = run_injection_campaign(&config).map_err(|e| e.to_string())?;
    ensure(r.failures.is_empty(), || format!("{} failures", r.failures.len()))?;
    ensure(r.precision == Some(1.0), || format!("precision {:?}", r.precision))?;
    ensure(r.recall == Some(1.0), || format!("recall {:?}", r.recall))?;
    ensure(r.count(Outcome::WrongFind) == 0, || "wrong finds".into())?;
    ensure(r.count(Outcome::MissedFind) == 0, || "missed finds".into())?;
    ensure(r.count(Outcome::NotMeasurable) == 0, || "unexpected not-measurable".into())?;
    ensure(r.mean_evaluations <= CAMPAIGN_MAX_MEAN_EVALUATIONS, || format!("mean {}", r.mean_evaluations))?;

    let zero = CampaignConfig::new(CAMPAIGN_SEED, CAMPAIGN_FILES, CAMPAIGN_SYMBOLS, 100, InjectionMode::ZeroMagnitude);
    let z = run_injection_campaign(&zero).map_err(|e| e.to_string())?;
    ensure(z.count(Outcome::NotMeasurable) == z.total(), || "zero magnitude measurable".into())?;

    // Mixed: some zero magnitudes among real ones.
    let mixed = CampaignConfig::new(CAMPAIGN_SEED, CAMPAIGN_FILES, CAMPAIGN_SYMBOLS, 200, InjectionMode::Mixed);
    let m = run_injection_campaign(&mixed).map_err(|e| e.to_string())?;
    for rec in &m.records {
        let all_zero = rec.injected.iter().all(|s| s.magnitude == 0.0);
        ensure((rec.outcome == Outcome::NotMeasurable) == all_zero, || {
            format!("injection {} classified {:?}", rec.index, rec.outcome)
        })?;
    }
    let elapsed = start.elapsed();
    ensure(elapsed < CAMPAIGN_BUDGET, || format!("took {elapsed:?}"))?;
    Ok(format!(
        "precision 1.0, recall 1.0, {} exact finds, mean {:.2} evaluations",
        r.count(Outcome::ExactFind),
        r.mean_evaluations
    ))
}

fn criterion_4() -> Result<String, String> {
    let mut checked = 0;
    for seed in 0..ORACLE_INSTANCES {
        let (n, variable) = oracle_instance(seed);
        let u = numbered(n);
        let mut t = additive(variable.clone());
        let r = bisect_all(&mut t, &u.full()).map_err(|e| e.to_string())?;
        let bound = evaluation_bound(r.found.len(), n);
        ensure(r.distinct_evaluations <= bound, || {
            format!("oracle instance {seed}: {} > {bound}", r.distinct_evaluations)
        })?;
        checked += 1;
    }
    let config = CampaignConfig::new(
        CAMPAIGN_SEED,
        CAMPAIGN_FILES,
        CAMPAIGN_SYMBOLS,
        CAMPAIGN_COUNT,
        InjectionMode::Independent,
    );
    let r = run_injection_campaign(&config).map_err(|e| e.to_string())?;
    for rec in &r.records {
        ensure(rec.within_bound == Some(true), || format!("injection {} over budget", rec.index))?;
        checked += 1;
    }
    Ok(format!("{checked} searches within k*ceil(log2 n)+2k+2 at every level"))
}

fn criterion_5() -> Result<String, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let out = dir.path().join("results");
    let out = out.to_str().unwrap();
    for seed in 0..ADVERSARIAL_INSTANCES {
        let seed_s = seed.to_string();
        let injections = (2 + seed % 3).to_string();
        let o = vbisect(&[
            "--backend", "sim", "--seed", &seed_s, "--out", out, "bisect", "--mode", "coupled", "--files", "12",
            "--symbols-per-file", "6", "--injections", &injections,
        ]);
        ensure(o.status.code() == Some(VIOLATION_EXIT_CODE), || {
            format!("coupled seed {seed}: exit {:?}", o.status.code())
        })?;
        let path = dir.path().join(format!("results/bisect/sim/coupled-seed{seed}.json"));
        let digest: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(&path).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        ensure(digest["assertion_status"] == "violated", || format!("coupled seed {seed}: not violated"))?;
    }

    let mut flagged_or_exact = 0;
    for seed in 0..ADVERSARIAL_INSTANCES {
        let injections = 2 + (seed % 5) as usize;
        let p = SyntheticProject::<f64>::generate(seed, 12, 6, injections, InjectionMode::Collision)
            .map_err(|e| e.to_string())?;
        let p = Arc::new(p);
        let rec = run_one(0, &p, None).map_err(|e| e.to_string())?;
        let truth: BTreeSet<Element> = rec.injected.iter().map(|s| s.element.clone()).collect();
        let got: BTreeSet<Element> = rec.reported_symbols.iter().cloned().collect();
        ensure(rec.assertion_status != AssertionStatus::Verified || got == truth, || {
            format!("collision seed {seed}: verified with a wrong set")
        })?;
        flagged_or_exact += 1;
    }
    Ok(format!(
        "{ADVERSARIAL_INSTANCES}/{ADVERSARIAL_INSTANCES} coupled instances exit {VIOLATION_EXIT_CODE} with violated; \
         {flagged_or_exact}/{ADVERSARIAL_INSTANCES} collision instances never verified wrongly"
    ))
}

fn criterion_6() -> Result<String, String> {
    let mut total_k1 = 0;
    let mut total_all = 0;
    for seed in 0..BIGGEST_K_SEEDS {
        let span = BIGGEST_K_TRUE.end() - BIGGEST_K_TRUE.start() + 1;
        let k_true = BIGGEST_K_TRUE.start() + (seed as usize % span);
        let p = SyntheticProject::<f64>::generate(seed, CAMPAIGN_FILES, CAMPAIGN_SYMBOLS, k_true, InjectionMode::Independent)
            .map_err(|e| e.to_string())?;
        let p = Arc::new(p);
        let truth: BTreeSet<Element> = p.injections.iter().map(|i| p.site_element(i.site)).collect();
        let top = p
            .injections
            .iter()
            .max_by(|a, b| a.magnitude.total_cmp(&b.magnitude))
            .map(|i| p.site_element(i.site))
            .unwrap();

        let one = run_one(0, &p, Some(1)).map_err(|e| e.to_string())?;
        let all = run_one(0, &p, None).map_err(|e| e.to_string())?;
        ensure(one.reported_symbols.first() == Some(&top), || format!("seed {seed}: k=1 missed the top symbol"))?;
        ensure(one.evaluations < all.evaluations, || {
            format!("seed {seed}: k=1 used {} vs {}", one.evaluations, all.evaluations)
        })?;
        for k in [k_true, k_true + 2] {
            let r = run_one(0, &p, Some(k)).map_err(|e| e.to_string())?;
            let got: BTreeSet<Element> = r.reported_symbols.iter().cloned().collect();
            ensure(got == truth, || format!("seed {seed}: k={k} found {} of {k_true}", got.len()))?;
        }
        total_k1 += one.evaluations;
        total_all += all.evaluations;
    }
    Ok(format!(
        "{BIGGEST_K_SEEDS} seeds: k=1 top symbol with {total_k1} vs {total_all} evaluations; k>=k_true complete"
    ))
}

fn read_json(path: &Path) -> Result<serde_json::Value, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
}

/// (compilation, test, bitwise equal) per sweep cell.
type Classes = BTreeSet<(String, String, bool)>;

/// Sweep and bisect the fixture into `out`; the bisect record and the
/// sweep classification.
fn fixture_run(out: &Path) -> Result<(serde_json::Value, Classes), String> {
    let config = fixture("toy.toml");
    let config = config.to_str().unwrap();
    let out_s = out.to_str().unwrap();
    let sweep = vbisect(&["--config", config, "--out", out_s, "sweep", "--runs", "3"]);
    ensure(sweep.status.success(), || {
        format!("sweep exit {:?}: {}", sweep.status.code(), String::from_utf8_lossy(&sweep.stderr))
    })?;
    let bisect = vbisect(&[
        "--config", config, "--out", out_s, "bisect", "--candidate", "gcc -O3 -ffast-math", "--test", "kahan",
    ]);
    ensure(bisect.status.success(), || {
        format!("bisect exit {:?}: {}", bisect.status.code(), String::from_utf8_lossy(&bisect.stderr))
    })?;

    let records = read_records(&out.join("sweep.jsonl")).map_err(|e| e.to_string())?;
    let mut classes = BTreeSet::new();
    for r in &records {
        let equal = r.bitwise_equal().ok_or_else(|| format!("failed cell {} / {}", r.compilation, r.test))?;
        classes.insert((r.compilation.to_string(), r.test.clone(), equal));
    }
    let candidate: Compilation = "gcc -O3 -ffast-math".parse().map_err(|e: vbisect_core::domain::DomainError| e.to_string())?;
    let digest = read_json(&out.join("bisect").join(candidate.slug()).join("kahan.json"))?;
    Ok((digest, classes))
}

fn criterion_7() -> Verdict {
    if !have_toolchain() {
        return Verdict::Skip("no host C++ toolchain (g++, nm, objcopy)".into());
    }
    let run = || -> Result<String, String> {
        let start = Instant::now();
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let (first, classes) = fixture_run(&dir.path().join("first"))?;
        ensure(classes.contains(&("gcc -O3 -ffast-math".into(), "kahan".into(), false)), || {
            "sweep did not classify the candidate as variable on kahan".into()
        })?;
        ensure(classes.contains(&("gcc -O2".into(), "kahan".into(), true)), || "baseline cell not bitwise equal".into())?;
        let files: Vec<&str> = first["files"].as_array().into_iter().flatten().filter_map(|f| f["file"].as_str()).collect();
        ensure(files == ["kahan.cpp"], || format!("files {files:?}"))?;
        let symbols: Vec<(&str, &str)> = first["symbols"]
            .as_array()
            .into_iter()
            .flatten()
            .map(|s| (s["symbol"].as_str().unwrap_or(""), s["demangled"].as_str().unwrap_or("")))
            .collect();
        ensure(
            symbols.len() == 1 && symbols[0].0 == "_Z9kahan_sumPKdm" && symbols[0].1.starts_with("kahan_sum("),
            || format!("symbols {symbols:?}"),
        )?;
        ensure(first["assertion_status"] == "verified", || "assertion not verified".into())?;

        let (second, classes2) = fixture_run(&dir.path().join("second"))?;
        ensure(first == second, || "bisect reports differ between runs".into())?;
        ensure(classes == classes2, || "sweep classifications differ between runs".into())?;
        let elapsed = start.elapsed();
        ensure(elapsed < FIXTURE_BUDGET, || format!("took {elapsed:?}"))?;
        Ok(format!("kahan.cpp / kahan_sum verified, two runs identical ({:.1}s)", elapsed.as_secs_f64()))
    };
    match run() {
        Ok(s) => Verdict::Pass(s),
        Err(e) => Verdict::Fail(e),
    }
}

fn criterion_8() -> Verdict {
    if !have_toolchain() {
        return Verdict::Skip("no host C++ toolchain to build the fixture".into());
    }
    let run = || -> Result<String, String> {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let out = dir.path().join("results");
        let config = fixture("toy-nondeterministic.toml");
        let o = vbisect(&["--config", config.to_str().unwrap(), "--out", out.to_str().unwrap(), "check"]);
        let stderr = String::from_utf8_lossy(&o.stderr);
        ensure(!o.status.success(), || "nondeterministic fixture accepted".into())?;
        let line = stderr.lines().find(|l| l.starts_with("nondeterministic tests:")).unwrap_or("");
        ensure(line == "nondeterministic tests: clock", || format!("stderr: {stderr}"))?;
        let report = read_json(&out.join("check.json"))?;
        let offending: Vec<&str> = report["tests"]
            .as_array()
            .into_iter()
            .flatten()
            .filter(|t| t["deterministic"] == false)
            .filter_map(|t| t["test"].as_str())
            .collect();
        ensure(offending == ["clock"], || format!("offending {offending:?}"))?;
        Ok(format!("rejected with exit {:?}, naming clock only", o.status.code().unwrap_or(-1)))
    };
    match run() {
        Ok(s) => Verdict::Pass(s),
        Err(e) => Verdict::Fail(e),
    }
}

fn lift(f: fn() -> Result<String, String>) -> impl Fn() -> Verdict {
    move || match f() {
        Ok(s) => Verdict::Pass(s),
        Err(e) => Verdict::Fail(e),
    }
}

fn main() {
    type Check = Box<dyn Fn() -> Verdict>;
    let criteria: Vec<(&str, Check)> = vec![
        ("trace reproduction", Box::new(lift(criterion_1))),
        ("oracle equivalence", Box::new(lift(criterion_2))),
        ("injection campaign", Box::new(lift(criterion_3))),
        ("invocation bound", Box::new(lift(criterion_4))),
        ("assumption-violation detection", Box::new(lift(criterion_5))),
        ("biggest-k search", Box::new(lift(criterion_6))),
        ("fixture end-to-end", Box::new(criterion_7)),
        ("determinism preflight", Box::new(criterion_8)),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let verdict = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Verdict::Fail(msg)
        });
        let secs = start.elapsed().as_secs_f64();
        match verdict {
            Verdict::Pass(s) => println!("criterion {} {name}: PASS ({s}) [{secs:.2}s]", i + 1),
            Verdict::Skip(s) => println!("criterion {} {name}: SKIP ({s})", i + 1),
            Verdict::Fail(s) => {
                failed += 1;
                println!("criterion {} {name}: FAIL ({s}) [{secs:.2}s]", i + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
