use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::Arc;

use vbisect_core::bisect::SymbolSearch;
use vbisect_core::domain::{Compilation, ElementSet, TestValue};
use vbisect_toolchain::sweep::{read_records, SweepOptions};
use vbisect_toolchain::{
    make_file_test_fn, make_symbol_test_fn, plan_matrix, run_sweep, summarize, BuildPlan, ProjectManifest,
    Session,
};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/toy").join(name)
}

fn have_toolchain() -> bool {
    let ok = ["g++", "nm", "objcopy"]
        .iter()
        .all(|t| Command::new(t).arg("--version").output().is_ok_and(|o| o.status.success()));
    if !ok {
        eprintln!("skipped: no host C++ toolchain");
    }
    ok
}

fn session(config: &str, results: &Path) -> Arc<Session> {
    let manifest = ProjectManifest::load(&fixture(config)).unwrap();
    Session::new(manifest, results, 4).unwrap()
}

fn fast_math() -> Compilation {
    "gcc -O3 -ffast-math".parse().unwrap()
}

fn files(session: &Session, names: &[&str]) -> ElementSet {
    let u = session.manifest().file_universe().unwrap();
    let elements: Vec<_> = names.iter().map(|n| vbisect_core::domain::Element::file(*n)).collect();
    u.canonicalize(elements.iter()).unwrap()
}

#[test]
fn baseline_output_is_pinned() {
    if !have_toolchain() {
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let s = session("toy.toml", dir.path());
    let kahan = s.manifest().test("kahan").unwrap().clone();
    assert_eq!(
        s.baseline_output(&kahan).unwrap(),
        TestValue::Scalar(vbisect_toolchain::hexfloat::parse("0x1.82e27a22f3fbp+3").unwrap())
    );
    let scale = s.manifest().test("scale").unwrap().clone();
    match s.baseline_output(&scale).unwrap() {
        TestValue::Vector(v) => assert_eq!(v.len(), 8),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn object_cache_skips_repeat_compiles() {
    if !have_toolchain() {
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let s = session("toy.toml", dir.path());
    let baseline = s.manifest().correctness_baseline.clone();
    let a = s.build_baseline(&baseline).unwrap();
    let compiles = s.builder().compile_count();
    assert_eq!(compiles, 5);
    let b = s.build_baseline(&baseline).unwrap();
    assert_eq!(s.builder().compile_count(), compiles);
    assert_eq!(a, b);

    // A fresh session over the same results directory reuses the objects.
    let s2 = session("toy.toml", dir.path());
    s2.build_baseline(&baseline).unwrap();
    assert_eq!(s2.builder().compile_count(), 0);

    // Empty candidate set: the same objects as the pure baseline.
    let mixed = s.builder().build_mixed(&BuildPlan::mixed(&fast_math(), &baseline, [])).unwrap();
    assert_eq!(mixed.objects, a.objects);
}

#[test]
fn kahan_exports_are_listed_in_table_order() {
    if !have_toolchain() {
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let s = session("toy.toml", dir.path());
    let syms = s.builder().exported_symbols("kahan.cpp", &fast_math(), true).unwrap();
    let names: Vec<&str> = syms.iter().map(|e| e.symbol_name().unwrap()).collect();
    assert_eq!(names, vec!["_Z16kahan_block_sizev", "_Z9kahan_sumPKdm"]);
    let pretty: Vec<&str> = syms
        .iter()
        .map(|e| e.symbol.as_ref().unwrap().demangled.as_deref().unwrap())
        .collect();
    assert_eq!(pretty, vec!["kahan_block_size()", "kahan_sum(double const*, unsigned long)"]);
}

#[test]
fn statics_and_empty_objects() {
    if !have_toolchain() {
        return;
    }
    let project = tempfile::tempdir().unwrap();
    std::fs::write(project.path().join("a.cpp"), "static int f() { return 1; }\nint g() { return f(); }\n").unwrap();
    std::fs::write(project.path().join("empty.cpp"), "").unwrap();
    let config = r#"
[project]
files = ["a.cpp", "empty.cpp"]

[compiler.gcc]
binary = "g++"

[baselines]
correctness = { compiler = "gcc", level = "-O0" }
"#;
    let manifest = ProjectManifest::parse(config, project.path()).unwrap();
    let results = tempfile::tempdir().unwrap();
    let s = Session::new(manifest, results.path(), 1).unwrap();
    let c: Compilation = "gcc -O0".parse().unwrap();
    let names: Vec<String> = s
        .builder()
        .exported_symbols("a.cpp", &c, false)
        .unwrap()
        .iter()
        .map(|e| e.symbol_name().unwrap().to_string())
        .collect();
    assert_eq!(names, vec!["_Z1gv"]);
    assert!(s.builder().exported_symbols("empty.cpp", &c, false).unwrap().is_empty());
}

#[test]
fn file_test_scores() {
    if !have_toolchain() {
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let s = session("toy.toml", dir.path());
    let kahan = vec![s.manifest().test("kahan").unwrap().clone()];
    let mut test = make_file_test_fn(&s, &fast_math(), &kahan);
    assert_eq!(test.evaluate(&files(&s, &[])).unwrap(), 0.0);
    assert!(test.evaluate(&files(&s, &["kahan.cpp"])).unwrap() > 0.0);
    assert_eq!(test.evaluate(&files(&s, &["io.cpp"])).unwrap(), 0.0);
    assert_eq!(test.evaluate(&files(&s, &["main.cpp", "scale.cpp", "offset.cpp"])).unwrap(), 0.0);

    let runs = std::fs::read_to_string(dir.path().join("runs").join(format!("{}.jsonl", fast_math().slug()))).unwrap();
    assert_eq!(runs.lines().count(), 3);
    let first: serde_json::Value = serde_json::from_str(runs.lines().next().unwrap()).unwrap();
    assert_eq!(first["level"], "file");
    assert!(first["build_seconds"].is_number());
}

#[test]
fn symbol_mixing_reproduces_both_sides() {
    if !have_toolchain() {
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let s = session("toy.toml", dir.path());
    let kahan = vec![s.manifest().test("kahan").unwrap().clone()];
    let level = match make_symbol_test_fn(&s, &fast_math(), "kahan.cpp", &kahan).unwrap() {
        SymbolSearch::Searchable(level) => level,
        SymbolSearch::FileLevelOnly { .. } => panic!("kahan.cpp should be searchable"),
    };
    let mut test = level.test;
    let u = level.symbols.universe().clone();
    assert_eq!(u.len(), 2);
    let block = u.from_positions([0]).unwrap();
    let sum = u.from_positions([1]).unwrap();
    assert_eq!(test.evaluate(&u.empty()).unwrap(), 0.0);
    assert_eq!(test.evaluate(&block).unwrap(), 0.0);
    let whole_file = make_file_test_fn(&s, &fast_math(), &kahan)
        .evaluate(&files(&s, &["kahan.cpp"]))
        .unwrap();
    assert_eq!(test.evaluate(&sum).unwrap(), whole_file);

    // Chosen = nothing links both copies and behaves as the baseline.
    let plan = BuildPlan::symbols(
        &fast_math(),
        &s.manifest().correctness_baseline,
        "kahan.cpp",
        vec!["_Z16kahan_block_sizev".into(), "_Z9kahan_sumPKdm".into()],
        Vec::<String>::new(),
    );
    let exe = s.builder().weaken_and_link(&plan).unwrap().exe;
    let run = s.runner().run_test(&exe, &kahan[0]).unwrap();
    assert_eq!(s.score_run(&kahan[0], &run).unwrap(), 0.0);
}

#[test]
fn pic_fallback_stops_at_file_level() {
    if !have_toolchain() {
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let s = session("toy-fallback.toml", dir.path());
    let specs = s.manifest().tests.clone();
    let mut file_test = make_file_test_fn(&s, &fast_math(), &specs);
    assert!(file_test.evaluate(&files(&s, &["offset.cpp"])).unwrap() > 0.0);
    match make_symbol_test_fn(&s, &fast_math(), "offset.cpp", &specs).unwrap() {
        SymbolSearch::FileLevelOnly { evaluations } => assert_eq!(evaluations, 1),
        SymbolSearch::Searchable(_) => panic!("variability should vanish under -fPIC"),
    }
}

#[test]
fn determinism_preflight() {
    if !have_toolchain() {
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let s = session("toy.toml", dir.path());
    let report = s.check_determinism(&s.manifest().tests, 3).unwrap();
    assert!(report.passed());

    let dir = tempfile::tempdir().unwrap();
    let s = session("toy-nondeterministic.toml", dir.path());
    let report = s.check_determinism(&s.manifest().tests, 3).unwrap();
    assert_eq!(report.offending(), vec!["clock"]);
}

#[test]
fn sweep_classifies_and_resumes() {
    if !have_toolchain() {
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let s = session("toy.toml", dir.path());
    let matrix = plan_matrix(s.manifest()).unwrap();
    assert_eq!(matrix.len(), 6);
    let records_path = dir.path().join("sweep.jsonl");
    let options = SweepOptions { runs: 1, resume: false };
    let records = run_sweep(&s, &matrix, &s.manifest().tests, &options, &records_path).unwrap();
    assert_eq!(records.len(), 12);

    let cell = |c: &str, t: &str| {
        let c: Compilation = c.parse().unwrap();
        records.iter().find(|r| r.compilation == c && r.test == t).unwrap().clone()
    };
    assert!(cell("gcc -O3 -ffast-math", "kahan").score.value().unwrap() > &0.0);
    assert_eq!(cell("gcc -O2", "kahan").score.value(), Some(&0.0));
    assert_eq!(cell("gcc -O2", "kahan").speedup, Some(1.0));
    assert_eq!(cell("gcc -O3", "scale").bitwise_equal(), Some(true));

    // Whole-program mixed build agrees with the sweep cell.
    let kahan = vec![s.manifest().test("kahan").unwrap().clone()];
    let all = s.manifest().file_universe().unwrap().full();
    let mixed = make_file_test_fn(&s, &fast_math(), &kahan).evaluate(&all).unwrap();
    assert_eq!(Some(&mixed), cell("gcc -O3 -ffast-math", "kahan").score.value());

    let summary = summarize(&records).unwrap();
    let fastest = &summary.fastest["kahan"];
    assert!(fastest.variable.as_ref().unwrap().compilation.switches().contains(&"-ffast-math".to_string()));
    assert!(fastest.bitwise_equal.is_some());

    // Resume: nothing is rerun, and the records are unchanged.
    let before = std::fs::read_to_string(&records_path).unwrap();
    let resumed = run_sweep(&s, &matrix, &s.manifest().tests, &SweepOptions { runs: 1, resume: true }, &records_path).unwrap();
    assert_eq!(resumed, records);
    assert_eq!(std::fs::read_to_string(&records_path).unwrap(), before);
    assert_eq!(read_records(&records_path).unwrap().len(), 12);
}
