use vbisect_toolchain::Session;

use crate::exit::{CmdResult, Status};
use crate::render;
use crate::{Backend, CheckArgs, Ctx};

pub fn run(ctx: &Ctx, args: &CheckArgs) -> CmdResult {
    if ctx.backend == Backend::Sim {
        println!("simulated backend: deterministic by construction");
        return Ok(Status::Success);
    }
    let manifest = ctx.manifest()?;
    manifest.require_tests()?;
    let runs = args.runs.unwrap_or(manifest.determinism_runs);
    let out = ctx.prepare_out()?;
    let session = Session::new(manifest, out.path(), ctx.jobs)?;
    let report = session.check_determinism(&session.manifest().tests, runs)?;
    out.write_json("check.json", &report)?;

    let rows: Vec<Vec<String>> = report
        .tests
        .iter()
        .map(|t| {
            vec![
                t.test.clone(),
                if t.deterministic { "yes" } else { "no" }.into(),
                t.first_divergent_run.map_or("-".into(), |r| (r + 1).to_string()),
            ]
        })
        .collect();
    print!("{}", render::table(&["test", "deterministic", "first divergent run"], &rows));
    if report.passed() {
        println!("{} tests deterministic over {} runs under {}", report.tests.len(), report.runs, report.compilation);
        Ok(Status::Success)
    } else {
        eprintln!("nondeterministic tests: {}", report.offending().join(", "));
        eprintln!(
            "hint: remove timestamps, addresses, thread scheduling and unseeded randomness from the output of these tests before comparing compilations"
        );
        Ok(Status::AssumptionViolated)
    }
}
