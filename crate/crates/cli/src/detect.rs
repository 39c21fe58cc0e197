use std::path::Path;

use motionaware_core::kf::{abnormal_runs, run_bank};
use motionaware_core::InnovationRecord;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::PipelineConfig;
use crate::data::{ensure_dir, finite_xi, load_trajectories, subdir_or_self, write_innovations, INNOVATION_SUFFIX};
use crate::error::{PipelineError, Result, Stage};
use crate::model::{write_json, NormalityModel};

pub const SUMMARY_JSON: &str = "detect_summary.json";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub start_k: u64,
    pub end_k: u64,
    pub length: usize,
    /// Largest in-support ξ of the run; `None` when the whole run is out of
    /// support.
    pub peak_xi: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectorySummary {
    pub name: String,
    pub records: usize,
    /// Largest in-support ξ.
    pub max_xi: Option<f64>,
    pub abnormal_fraction: f64,
    pub out_of_support: usize,
    pub runs: Vec<RunSummary>,
}

#[derive(Debug, Clone)]
pub struct Scored {
    pub name: String,
    pub records: Vec<InnovationRecord>,
    pub summary: TrajectorySummary,
}

#[derive(Serialize)]
struct SummaryFile<'a> {
    xi_thres: f64,
    trajectories: Vec<&'a TrajectorySummary>,
}

pub fn summarize(name: &str, records: &[InnovationRecord]) -> TrajectorySummary {
    let max = |rs: &[InnovationRecord]| rs.iter().filter_map(finite_xi).reduce(f64::max);
    let abnormal = records.iter().filter(|r| r.abnormal).count();
    TrajectorySummary {
        name: name.to_string(),
        records: records.len(),
        max_xi: max(records),
        abnormal_fraction: if records.is_empty() {
            0.0
        } else {
            abnormal as f64 / records.len() as f64
        },
        out_of_support: records.iter().filter(|r| r.out_of_support).count(),
        runs: abnormal_runs(records)
            .into_iter()
            .map(|(a, b)| RunSummary {
                start_k: records[a].k,
                end_k: records[b].k,
                length: b - a + 1,
                peak_xi: max(&records[a..=b]),
            })
            .collect(),
    }
}

/// Scores every trajectory in `data_dir/test` (or `data_dir`) against the
/// model in `model_dir`, writing `<name>_innovation.csv` per trajectory and
/// `detect_summary.json` into `out_dir`. The model directory is only read.
pub fn detect(
    cfg: &PipelineConfig,
    model_dir: &Path,
    data_dir: &Path,
    out_dir: &Path,
) -> Result<Vec<Scored>> {
    let model = NormalityModel::load(model_dir)?;
    let dir = subdir_or_self(data_dir, "test");
    let named = load_trajectories(&dir)?;
    if named.is_empty() {
        return Err(PipelineError::data(
            Stage::Load,
            format!("no trajectories in {}", dir.display()),
        ));
    }
    let detector = cfg.detector();
    let grid = model.field.grid;
    let model_dt = model.training.dt;

    let scored = named
        .par_iter()
        .map(|(name, traj)| {
            if (traj.dt() - model_dt).abs() > 1e-9 {
                return Err(PipelineError::data(
                    Stage::Detect,
                    format!("{name}: sampling interval {} differs from the model's {model_dt}", traj.dt()),
                ));
            }
            let records = run_bank(traj, &model.zones, &grid, &model.dynamics, &detector)
                .map_err(|e| PipelineError::data(Stage::Detect, format!("{name}: {e}")))?;
            let summary = summarize(name, &records);
            Ok(Scored {
                name: name.clone(),
                records,
                summary,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    ensure_dir(Stage::Detect, out_dir)?;
    for s in &scored {
        write_innovations(&out_dir.join(format!("{}{INNOVATION_SUFFIX}.csv", s.name)), &s.records)?;
    }
    write_json(
        Stage::Detect,
        &out_dir.join(SUMMARY_JSON),
        &SummaryFile {
            xi_thres: detector.xi_threshold,
            trajectories: scored.iter().map(|s| &s.summary).collect(),
        },
    )?;
    Ok(scored)
}
