use std::sync::Arc;

use serde_json::json;
use vbisect_core::bisect::bisect_all;
use vbisect_core::oracle::Oracle;
use vbisect_core::sim::{injected_sites, make_test_fn, Granularity, SyntheticProject};

use crate::exit::{CmdResult, Failure, Status};
use crate::{Ctx, OracleArgs};

/// One JSON record on stdout: the brute-force verdict over the file level
/// of a synthetic instance, next to what the search found.
pub fn run(ctx: &Ctx, args: &OracleArgs) -> CmdResult {
    let sim = &args.sim;
    let n_files = sim.n_files.unwrap_or(10);
    let symbols_per_file = sim.symbols_per_file.unwrap_or(4);
    let project = SyntheticProject::<f64>::generate(ctx.seed, n_files, symbols_per_file, sim.injections(), sim.mode)
        .map_err(Failure::config)?;
    let project = Arc::new(project);
    let universe = project.files().full();

    let mut test = make_test_fn(&project, Granularity::Files);
    let verdict = Oracle::default()
        .verdict(&universe, &mut test)
        .map_err(Failure::config)?;
    let mut search_test = make_test_fn(&project, Granularity::Files);
    let report = bisect_all(&mut search_test, &universe).map_err(|e| Failure::config(e.to_string()))?;
    let mut found = report.found_elements();
    found.sort();
    let mut av = verdict.av_set.to_vec();
    av.sort();
    let agrees = found == av;

    let record = json!({
        "seed": ctx.seed,
        "mode": sim.mode,
        "files": n_files,
        "injected": injected_sites(&project),
        "verdict": verdict,
        "bisect_found": report.found_elements(),
        "assertion_status": report.assertion_status,
        "distinct_evaluations": report.distinct_evaluations,
        "agrees": agrees,
    });
    println!("{}", serde_json::to_string(&record).map_err(Failure::toolchain)?);
    Ok(Status::Success)
}
