use std::sync::Arc;

use serde_json::json;
use vbisect_core::bisect::{
    bisect_biggest_k, bisect_hierarchy, BiggestKReport, BisectError, HierarchyOptions, HierarchyReport, SymbolSearch,
    TestFn,
};
use vbisect_core::domain::{Compilation, Element, ElementSet, TestSpec};
use vbisect_core::sim::{classify, injected_sites, make_test_fn, symbol_search, Granularity, SyntheticProject};
use vbisect_toolchain::{make_file_test_fn, make_symbol_test_fn, ProjectManifest, Session};

use crate::digest::{BisectDigest, Subject};
use crate::exit::{CmdResult, Failure, Status};
use crate::{Backend, BisectArgs, Ctx};

enum Search {
    Hierarchy(HierarchyReport<f64>),
    BiggestK {
        report: BiggestKReport<f64>,
        score_all: f64,
        file_level: usize,
    },
}

impl Search {
    fn reported_files(&self) -> Vec<Element> {
        match self {
            Search::Hierarchy(r) => r.files.found_elements(),
            Search::BiggestK { report, .. } => report.files.iter().map(|f| f.element.clone()).collect(),
        }
    }

    fn reported_symbols(&self) -> Vec<Element> {
        match self {
            Search::Hierarchy(r) => r.found_symbols().into_iter().map(|f| f.element).collect(),
            Search::BiggestK { report, .. } => report.symbol_elements(),
        }
    }

    fn file_level_only(&self) -> Vec<Element> {
        match self {
            Search::Hierarchy(r) => r.file_level_only().into_iter().cloned().collect(),
            Search::BiggestK { report, .. } => report.file_level_only.clone(),
        }
    }

    fn digest(&self, subject: Subject) -> BisectDigest {
        match self {
            Search::Hierarchy(r) => BisectDigest::from_hierarchy(subject, r),
            Search::BiggestK {
                report,
                score_all,
                file_level,
            } => BisectDigest::from_biggest_k(subject, report, *score_all, *file_level),
        }
    }
}

fn search<'a, F>(
    file_test: &mut TestFn<'_, f64>,
    files: &ElementSet,
    args: &BisectArgs,
    symbol_level: F,
) -> Result<Search, BisectError>
where
    F: FnMut(&Element) -> Result<SymbolSearch<'a, f64>, BisectError>,
{
    match args.k {
        None => {
            let options = HierarchyOptions {
                files_only: args.files_only,
                ..HierarchyOptions::default()
            };
            bisect_hierarchy(file_test, files, symbol_level, &options).map(Search::Hierarchy)
        }
        Some(k) => {
            let report = bisect_biggest_k(file_test, files, k, symbol_level)?;
            Ok(Search::BiggestK {
                report,
                score_all: file_test.evaluate(files)?,
                file_level: file_test.distinct_evaluations(),
            })
        }
    }
}

fn file_name(stem: &str, args: &BisectArgs) -> String {
    match args.k {
        Some(k) => format!("{stem}-k{k}.json"),
        None => format!("{stem}.json"),
    }
}

pub fn run(ctx: &Ctx, args: &BisectArgs) -> CmdResult {
    if args.k == Some(0) {
        return Err(Failure::config("--k must be at least 1"));
    }
    match ctx.backend {
        Backend::Toolchain => run_toolchain(ctx, args),
        Backend::Sim => run_sim(ctx, args),
    }
}

fn select_tests(manifest: &ProjectManifest, args: &BisectArgs) -> Result<Vec<TestSpec>, Failure> {
    manifest.require_tests()?;
    if args.all_tests {
        return Ok(manifest.tests.clone());
    }
    match &args.test {
        Some(name) => Ok(vec![manifest.test(name)?.clone()]),
        None if manifest.tests.len() == 1 => Ok(manifest.tests.clone()),
        None => {
            let names: Vec<&str> = manifest.tests.iter().map(|t| t.name.as_str()).collect();
            Err(Failure::config(format!(
                "choose --test <name> or --all-tests (tests: {})",
                names.join(", ")
            )))
        }
    }
}

fn run_toolchain(ctx: &Ctx, args: &BisectArgs) -> CmdResult {
    let manifest = ctx.manifest()?;
    let candidate: Compilation = args
        .candidate
        .as_deref()
        .ok_or_else(|| Failure::config("--candidate is required, e.g. --candidate \"gcc -O3 -ffast-math\""))?
        .parse()
        .map_err(Failure::config)?;
    manifest.compiler(&candidate.compiler)?;
    let tests = select_tests(&manifest, args)?;
    let out = ctx.prepare_out()?;
    let session = Session::new(manifest, out.path(), ctx.jobs)?;
    let files = session.manifest().file_universe()?.full();

    let mut status = Status::Success;
    for spec in tests {
        let specs = vec![spec.clone()];
        let subject = Subject {
            backend: "toolchain".into(),
            candidate: candidate.to_string(),
            baseline: session.manifest().correctness_baseline.to_string(),
            test: spec.name.clone(),
        };
        let mut file_test = make_file_test_fn(&session, &candidate, &specs);
        let symbol_level = |file: &Element| make_symbol_test_fn(&session, &candidate, &file.file, &specs);
        let digest = match search(&mut file_test, &files, args, symbol_level) {
            Ok(found) => found.digest(subject),
            Err(e) => BisectDigest::failed(subject, "all", e.to_string(), file_test.distinct_evaluations()),
        };
        let path = out.write_json(
            format!("bisect/{}/{}", candidate.slug(), file_name(&spec.name, args)),
            &digest,
        )?;
        print!("{}", digest.render());
        log::info!("bisect record written to {}", path.display());
        status = status.worst(digest.status(args.check));
    }
    Ok(status)
}

fn run_sim(ctx: &Ctx, args: &BisectArgs) -> CmdResult {
    let n_files = args.sim.n_files.unwrap_or(45);
    let symbols_per_file = args.sim.symbols_per_file.unwrap_or(25);
    let injections = args.sim.injections();
    let mode = args.sim.mode;
    let project = SyntheticProject::<f64>::generate(ctx.seed, n_files, symbols_per_file, injections, mode)
        .map_err(Failure::config)?;
    let project = Arc::new(project);
    let out = ctx.prepare_out()?;

    let subject = Subject {
        backend: "sim".into(),
        candidate: format!("{injections} {mode} injection(s), seed {}", ctx.seed),
        baseline: "uninjected".into(),
        test: format!("synthetic {n_files}x{symbols_per_file}"),
    };
    let files = project.files().full();
    let mut file_test = make_test_fn(&project, Granularity::Files);
    let symbol_level = |file: &Element| {
        let index = project
            .file_index(file)
            .ok_or_else(|| BisectError::Contract(format!("unknown file {}", file.file)))?;
        Ok(symbol_search(&project, index))
    };
    let mut digest = match search(&mut file_test, &files, args, symbol_level) {
        Ok(found) => {
            let outcome = classify(
                &project,
                &found.reported_files(),
                &found.reported_symbols(),
                &found.file_level_only(),
            );
            let mut d = found.digest(subject);
            d.ground_truth = Some(json!({ "outcome": outcome, "injected": injected_sites(&project) }));
            d
        }
        Err(e) => BisectDigest::failed(subject, "all", e.to_string(), file_test.distinct_evaluations()),
    };
    if digest.ground_truth.is_none() {
        digest.ground_truth = Some(json!({ "injected": injected_sites(&project) }));
    }
    out.write_json(
        format!("bisect/sim/{}", file_name(&format!("{mode}-seed{}", ctx.seed), args)),
        &digest,
    )?;
    print!("{}", digest.render());
    if let Some(outcome) = digest.ground_truth.as_ref().and_then(|g| g.get("outcome")) {
        println!("ground truth: {}", outcome.as_str().unwrap_or_default());
    }
    Ok(digest.status(args.check))
}
