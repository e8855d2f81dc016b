use vbisect_toolchain::sweep::{write_series, SweepOptions};
use vbisect_toolchain::{plan_matrix, run_sweep, summarize, Session};

use crate::cmd::report;
use crate::exit::{CmdResult, Failure, Status};
use crate::{Backend, Ctx, SweepArgs};

pub fn run(ctx: &Ctx, args: &SweepArgs) -> CmdResult {
    if ctx.backend == Backend::Sim {
        return Err(Failure::config("sweep needs the toolchain backend"));
    }
    if args.runs == 0 {
        return Err(Failure::config("--runs must be at least 1"));
    }
    let manifest = ctx.manifest()?;
    manifest.require_tests()?;
    let matrix = plan_matrix(&manifest)?;
    let out = ctx.prepare_out()?;
    let session = Session::new(manifest, out.path(), ctx.jobs)?;

    let preflight = session.check_determinism(&session.manifest().tests, session.manifest().determinism_runs)?;
    out.write_json("check.json", &preflight)?;
    if !preflight.passed() {
        eprintln!("nondeterministic tests: {}", preflight.offending().join(", "));
        eprintln!("run `check` for details; the sweep needs deterministic tests");
        return Ok(Status::AssumptionViolated);
    }

    let options = SweepOptions {
        runs: args.runs,
        resume: args.resume,
    };
    let records = run_sweep(&session, &matrix, &session.manifest().tests, &options, &out.join("sweep.jsonl"))?;
    let summary = summarize(&records).ok_or_else(|| Failure::toolchain("the sweep produced no records"))?;
    out.write_json("summary.json", &summary)?;
    write_series(out.path(), &summary)?;
    print!("{}", report::render_sweep(&summary));
    if summary.failed_cells > 0 {
        eprintln!("{} cells failed; see sweep.jsonl for diagnostics", summary.failed_cells);
    }
    Ok(Status::Success)
}
