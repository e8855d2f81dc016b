use vbisect_core::sim::{run_injection_campaign, CampaignConfig};

use crate::exit::{CmdResult, Failure, Status};
use crate::{Ctx, InjectArgs};

pub fn run(ctx: &Ctx, args: &InjectArgs) -> CmdResult {
    let mut config = CampaignConfig::new(ctx.seed, args.n_files, args.symbols_per_file, args.count, args.mode);
    if let Some(n) = args.injections {
        config.injections_per_project = n;
    }
    config.k = args.k;
    let result = run_injection_campaign(&config).map_err(Failure::config)?;
    let out = ctx.prepare_out()?;
    let name = match args.k {
        Some(k) => format!("inject/{}-seed{}-k{k}.json", args.mode, ctx.seed),
        None => format!("inject/{}-seed{}.json", args.mode, ctx.seed),
    };
    let path = out.write_json(&name, &result)?;
    println!(
        "{} injections, mode {}, {} files x {} symbols, seed {}",
        args.count, args.mode, args.n_files, args.symbols_per_file, ctx.seed
    );
    println!("{result}");
    log::info!("campaign written to {}", path.display());
    if result.failures.is_empty() {
        Ok(Status::Success)
    } else {
        Ok(Status::ToolchainFailure)
    }
}
