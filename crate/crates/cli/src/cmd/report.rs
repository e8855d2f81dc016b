use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use vbisect_core::sim::InjectionCampaignResult;
use vbisect_toolchain::sweep::{read_records, write_series, SeriesPoint};
use vbisect_toolchain::{summarize, SweepSummary};

use crate::digest::{BisectDigest, Verdict};
use crate::exit::{CmdResult, Failure, Status};
use crate::output::OutDir;
use crate::render::{self, table};
use crate::Ctx;

fn speedup(v: Option<f64>) -> String {
    v.map_or("-".into(), |s| format!("{s:.3}"))
}

fn point(p: &Option<SeriesPoint>) -> String {
    match p {
        Some(p) => format!("{} ({:.3}x)", p.compilation, p.speedup),
        None => "-".into(),
    }
}

pub fn render_sweep(summary: &SweepSummary) -> String {
    let mut out = String::new();
    let rows: Vec<Vec<String>> = summary
        .compilers
        .iter()
        .map(|c| {
            vec![
                c.compiler.clone(),
                format!("{}/{}", c.variable_runs, c.total_runs),
                format!("{:.1}%", c.percent_variable),
                c.best_flags.as_ref().map_or("-".into(), ToString::to_string),
                speedup(c.mean_speedup),
            ]
        })
        .collect();
    out.push_str(&table(
        &["compiler", "variable runs", "variable", "best flags", "mean speedup"],
        &rows,
    ));
    out.push('\n');

    let rows: Vec<Vec<String>> = summary
        .fastest
        .iter()
        .map(|(test, f)| vec![test.clone(), point(&f.bitwise_equal), point(&f.variable)])
        .collect();
    out.push_str(&table(&["test", "fastest bitwise-equal", "fastest variable"], &rows));
    out.push('\n');

    let rows: Vec<Vec<String>> = summary
        .variability
        .iter()
        .map(|(test, stats)| match stats {
            Some(s) => vec![
                test.clone(),
                s.count.to_string(),
                render::score(s.min),
                render::score(s.median),
                render::score(s.max),
            ],
            None => vec![test.clone(), "0".into(), "-".into(), "-".into(), "-".into()],
        })
        .collect();
    out.push_str(&table(&["test", "variable", "min score", "median score", "max score"], &rows));
    if summary.failed_cells > 0 {
        out.push_str(&format!("failed cells: {}\n", summary.failed_cells));
    }
    out
}

#[derive(Serialize)]
struct DigestLine<'a> {
    record: String,
    candidate: &'a str,
    test: &'a str,
    verdict: Verdict,
    files: Vec<&'a str>,
    symbols: Vec<String>,
    file_level_only: &'a [String],
    evaluations: usize,
}

fn json_files(dir: &Path) -> Result<Vec<PathBuf>, Failure> {
    let mut out = Vec::new();
    if !dir.is_dir() {
        return Ok(out);
    }
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d)? {
            let path = entry?.path();
            if path.is_dir() {
                stack.push(path);
            } else if path.extension().is_some_and(|e| e == "json") {
                out.push(path);
            }
        }
    }
    out.sort();
    Ok(out)
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Failure::config(format!("corrupt record {}: {e}", path.display())))
}

fn render_digests<'a>(out: &OutDir, digests: &'a [(PathBuf, BisectDigest)]) -> (String, Vec<DigestLine<'a>>) {
    let lines: Vec<DigestLine<'a>> = digests
        .iter()
        .map(|(path, d)| DigestLine {
            record: path
                .strip_prefix(out.path())
                .unwrap_or(path)
                .to_string_lossy()
                .into_owned(),
            candidate: &d.candidate,
            test: &d.test,
            verdict: d.verdict,
            files: d.files.iter().map(|b| b.file.as_str()).collect(),
            symbols: d.symbols.iter().map(|b| b.label()).collect(),
            file_level_only: &d.file_level_only,
            evaluations: d.evaluations.total,
        })
        .collect();
    let rows: Vec<Vec<String>> = lines
        .iter()
        .map(|l| {
            let verdict = serde_json::to_value(l.verdict)
                .ok()
                .and_then(|v| v.as_str().map(str::to_string))
                .unwrap_or_default();
            vec![
                l.candidate.to_string(),
                l.test.to_string(),
                verdict,
                if l.files.is_empty() { "-".into() } else { l.files.join(" ") },
                if l.symbols.is_empty() { "-".into() } else { l.symbols.join("; ") },
                l.evaluations.to_string(),
            ]
        })
        .collect();
    let text = table(&["candidate", "test", "verdict", "files", "symbols", "evaluations"], &rows);
    (text, lines)
}

pub fn run(ctx: &Ctx) -> CmdResult {
    let out = OutDir::existing(ctx.out_path());
    let mut sections = Vec::new();

    let sweep = out.join("sweep.jsonl");
    if sweep.is_file() {
        let records = read_records(&sweep)
            .map_err(|e| Failure::config(format!("corrupt sweep records in {}: {e}", sweep.display())))?;
        if let Some(summary) = summarize(&records) {
            out.write_json("summary.json", &summary)?;
            write_series(out.path(), &summary)?;
            sections.push(render_sweep(&summary));
        }
    }

    let mut digests = Vec::new();
    for path in json_files(&out.join("bisect"))? {
        let d: BisectDigest = read_json(&path)?;
        digests.push((path, d));
    }
    if !digests.is_empty() {
        let (text, lines) = render_digests(&out, &digests);
        out.write_json("bisect_digest.json", &lines)?;
        sections.push(text);
    }

    for path in json_files(&out.join("inject"))? {
        let campaign: InjectionCampaignResult = read_json(&path)?;
        let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        sections.push(format!("{name}\n{campaign}\n"));
    }

    if sections.is_empty() {
        println!("nothing to report in {}", out.path().display());
        return Ok(Status::Success);
    }
    print!("{}", sections.join("\n"));
    Ok(Status::Success)
}
