use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::config::PipelineConfig;
use crate::data::{create, csv_files, ensure_dir, finite_xi, flag, num, read_innovations, write_text, INNOVATION_SUFFIX};
use crate::detect::summarize;
use crate::error::{AtStage, PipelineError, Result, Stage};
use crate::fuse::{FuseSummary, SUMMARY_JSON as FUSE_SUMMARY};

pub const REPORT_TXT: &str = "report.txt";
pub const PLOT_SUFFIX: &str = "_plot_xi";

/// Writes `<name>_plot_xi.csv` (`k,t,xi,threshold,abnormal,out_of_support`,
/// with `xi` left empty on out-of-support rows) for every innovation file in
/// `input`, plus a plain-text `report.txt`, all into `out_dir`. Returns the
/// report text.
pub fn report(cfg: &PipelineConfig, input: &Path, out_dir: &Path) -> Result<String> {
    let stage = Stage::Report;
    let files = csv_files(input, |stem| stem.ends_with(INNOVATION_SUFFIX))?;
    if files.is_empty() {
        return Err(PipelineError::data(
            stage,
            format!("no *{INNOVATION_SUFFIX}.csv files in {}", input.display()),
        ));
    }
    ensure_dir(stage, out_dir)?;
    let threshold = cfg.xi_thres;
    let mut text = String::new();
    let _ = writeln!(text, "xi threshold: {threshold}");

    for (stem, path) in &files {
        let name = stem.trim_end_matches(INNOVATION_SUFFIX);
        let records = read_innovations(path, stage)?;

        let plot = out_dir.join(format!("{name}{PLOT_SUFFIX}.csv"));
        let mut w = csv::Writer::from_writer(create(stage, &plot)?);
        w.write_record(["k", "t", "xi", "threshold", "abnormal", "out_of_support"]).at(stage)?;
        for r in &records {
            w.write_record([
                r.k.to_string(),
                num(r.t),
                finite_xi(r).map(num).unwrap_or_default(),
                num(threshold),
                flag(r.abnormal).to_string(),
                flag(r.out_of_support).to_string(),
            ])
            .at(stage)?;
        }
        w.flush().map_err(|e| PipelineError::io(stage, &plot, e))?;

        let s = summarize(name, &records);
        let _ = writeln!(text, "\n{name}");
        let _ = writeln!(text, "  records:           {}", s.records);
        let _ = writeln!(text, "  abnormal fraction: {:.4}", s.abnormal_fraction);
        let _ = writeln!(text, "  out of support:    {}", s.out_of_support);
        match s.max_xi {
            Some(m) => {
                let _ = writeln!(text, "  max xi:            {m:.4}");
            }
            None => {
                let _ = writeln!(text, "  max xi:            n/a");
            }
        }
        let _ = writeln!(text, "  abnormal runs:     {}", s.runs.len());
        for run in &s.runs {
            let peak = run.peak_xi.map_or_else(|| "n/a".to_string(), |p| format!("{p:.4}"));
            let _ = writeln!(text, "    k {}..={} ({} steps), peak xi {peak}", run.start_k, run.end_k, run.length);
        }
    }

    let fuse_path = input.join(FUSE_SUMMARY);
    if fuse_path.is_file() {
        let raw = fs::read_to_string(&fuse_path).map_err(|e| PipelineError::io(stage, &fuse_path, e))?;
        let fused: FuseSummary = serde_json::from_str(&raw).at(stage)?;
        let _ = writeln!(text, "\nfusion");
        let _ = writeln!(text, "  sl only:       {}", fused.sl_only);
        let _ = writeln!(text, "  joined rows:   {} of {}", fused.joined, fused.records);
        let overlap = fused.overlap_ratio.map_or_else(|| "n/a".to_string(), |o| format!("{o:.4}"));
        let _ = writeln!(text, "  overlap ratio: {overlap}");
        for e in &fused.events {
            let lag = e.peak_lag.map_or_else(|| "n/a".to_string(), |l| l.to_string());
            let _ = writeln!(text, "    SL k {}..={}: peak lag {lag}", e.sl_start, e.sl_end);
        }
    }

    write_text(stage, &out_dir.join(REPORT_TXT), &text)?;
    Ok(text)
}
