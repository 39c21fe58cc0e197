//! Joins the shared-level innovation scores with the frame-level (PL) scores
//! on the time index `k`.
//!
//! The PL file may hold one row per detector group and `k`; rows sharing a
//! `k` are fused by taking the minimum `y_tilde`. A fused frame is abnormal
//! when its value exceeds `pl.y_thres` if that is configured, and otherwise
//! when every fused row is flagged abnormal (the minimum is above threshold
//! exactly when all inputs are).

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::PipelineConfig;
use crate::data::{create, ensure_dir, flag, num, open, parse_flag, read_innovations};
use crate::error::{AtStage, PipelineError, Result, Stage};
use crate::model::write_json;

pub const FUSED_CSV: &str = "fused.csv";
pub const SUMMARY_JSON: &str = "fuse_summary.json";

/// One fused PL value at a time index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlFused {
    pub y_tilde: f64,
    pub abnormal: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FusedRow {
    pub k: u64,
    pub t: f64,
    pub xi: f64,
    pub sl_abnormal: bool,
    pub pl: Option<PlFused>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventAlignment {
    pub sl_start: u64,
    pub sl_end: u64,
    pub sl_peak_k: u64,
    /// Overlapping PL interval, if any.
    pub pl_start: Option<u64>,
    pub pl_end: Option<u64>,
    pub pl_peak_k: Option<u64>,
    /// `pl_peak_k − sl_peak_k`, in steps.
    pub peak_lag: Option<i64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FuseSummary {
    pub sl_only: bool,
    pub records: usize,
    pub joined: usize,
    pub sl_intervals: Vec<(u64, u64)>,
    pub pl_intervals: Vec<(u64, u64)>,
    /// |SL ∩ PL| / |SL ∪ PL| over abnormal time indices; `None` when neither
    /// signal has an abnormal index or PL is absent.
    pub overlap_ratio: Option<f64>,
    pub events: Vec<EventAlignment>,
}

#[derive(Debug, Clone, Copy)]
struct PlRow {
    k: u64,
    y_tilde: f64,
    abnormal: bool,
}

fn read_pl(path: &Path) -> Result<Vec<PlRow>> {
    let stage = Stage::Fuse;
    let mut rdr = csv::Reader::from_reader(open(stage, path)?);
    let headers = rdr.headers().at(stage)?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| PipelineError::data(stage, format!("{}: missing column {name}", path.display())))
    };
    let (ck, cy, ca) = (col("k")?, col("y_tilde")?, col("abnormal")?);
    let mut rows = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.at(stage)?;
        let bad = |what: &str| PipelineError::data(stage, format!("{} row {}: bad {what}", path.display(), line + 1));
        let y_tilde: f64 = rec.get(cy).unwrap_or("").parse().map_err(|_| bad("y_tilde"))?;
        if !y_tilde.is_finite() {
            return Err(bad("y_tilde"));
        }
        rows.push(PlRow {
            k: rec.get(ck).unwrap_or("").parse().map_err(|_| bad("k"))?,
            y_tilde,
            abnormal: parse_flag(stage, rec.get(ca).unwrap_or(""))?,
        });
    }
    Ok(rows)
}

/// Minimum over the detector bank at each `k`.
fn fuse_bank(rows: &[PlRow], y_thres: Option<f64>) -> BTreeMap<u64, PlFused> {
    let mut by_k: BTreeMap<u64, (f64, bool)> = BTreeMap::new();
    for r in rows {
        let e = by_k.entry(r.k).or_insert((f64::INFINITY, true));
        e.0 = e.0.min(r.y_tilde);
        e.1 &= r.abnormal;
    }
    by_k.into_iter()
        .map(|(k, (y, all_abnormal))| {
            let abnormal = match y_thres {
                Some(th) => y > th,
                None => all_abnormal,
            };
            (k, PlFused { y_tilde: y, abnormal })
        })
        .collect()
}

/// Maximal runs of consecutive flagged rows as inclusive `(first, last)`
/// row positions.
fn runs(flags: impl Iterator<Item = bool>) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut start = None;
    let mut n = 0;
    for (i, f) in flags.enumerate() {
        match (f, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                out.push((s, i - 1));
                start = None;
            }
            _ => {}
        }
        n = i + 1;
    }
    if let Some(s) = start {
        out.push((s, n - 1));
    }
    out
}

fn argmax(rows: &[FusedRow], a: usize, b: usize, value: impl Fn(&FusedRow) -> f64) -> u64 {
    let mut best = a;
    for i in a..=b {
        if value(&rows[i]) > value(&rows[best]) {
            best = i;
        }
    }
    rows[best].k
}

pub fn summarize(rows: &[FusedRow], sl_only: bool) -> FuseSummary {
    let sl_runs = runs(rows.iter().map(|r| r.sl_abnormal));
    let pl_runs = runs(rows.iter().map(|r| r.pl.is_some_and(|p| p.abnormal)));
    let span = |(a, b): (usize, usize)| (rows[a].k, rows[b].k);

    let sl_set = rows.iter().filter(|r| r.sl_abnormal).count();
    let both = rows.iter().filter(|r| r.sl_abnormal && r.pl.is_some_and(|p| p.abnormal)).count();
    let pl_set = rows.iter().filter(|r| r.pl.is_some_and(|p| p.abnormal)).count();
    let union = sl_set + pl_set - both;
    let overlap_ratio = (!sl_only && union > 0).then(|| both as f64 / union as f64);

    let events = sl_runs
        .iter()
        .map(|&(a, b)| {
            let sl_peak_k = argmax(rows, a, b, |r| r.xi);
            let matched = pl_runs.iter().find(|&&(c, d)| c <= b && a <= d);
            let (pl_start, pl_end, pl_peak_k) = match matched {
                Some(&(c, d)) => (
                    Some(rows[c].k),
                    Some(rows[d].k),
                    Some(argmax(rows, c, d, |r| r.pl.map_or(f64::NEG_INFINITY, |p| p.y_tilde))),
                ),
                None => (None, None, None),
            };
            EventAlignment {
                sl_start: rows[a].k,
                sl_end: rows[b].k,
                sl_peak_k,
                pl_start,
                pl_end,
                pl_peak_k,
                peak_lag: pl_peak_k.map(|p| p as i64 - sl_peak_k as i64),
            }
        })
        .collect();

    FuseSummary {
        sl_only,
        records: rows.len(),
        joined: rows.iter().filter(|r| r.pl.is_some()).count(),
        sl_intervals: sl_runs.into_iter().map(span).collect(),
        pl_intervals: pl_runs.into_iter().map(span).collect(),
        overlap_ratio,
        events,
    }
}

/// Writes `fused.csv` (`k,t,xi,sl_abnormal,y_tilde,pl_abnormal`, PL columns
/// empty where there is no PL score) and `fuse_summary.json` into `out_dir`.
pub fn fuse(
    cfg: &PipelineConfig,
    sl_path: &Path,
    pl_path: Option<&Path>,
    out_dir: &Path,
) -> Result<(Vec<FusedRow>, FuseSummary)> {
    let stage = Stage::Fuse;
    let sl = read_innovations(sl_path, stage)?;
    if sl.is_empty() {
        return Err(PipelineError::data(stage, format!("{}: no SL records", sl_path.display())));
    }
    let pl = match pl_path {
        Some(p) => Some(fuse_bank(&read_pl(p)?, cfg.y_thres)),
        None => None,
    };
    if let Some(pl) = &pl {
        if !sl.iter().any(|r| pl.contains_key(&r.k)) {
            let range = |a: Option<u64>, b: Option<u64>| format!("{}..={}", a.unwrap_or(0), b.unwrap_or(0));
            return Err(PipelineError::data(
                stage,
                format!(
                    "SL time indices {} and PL time indices {} do not overlap",
                    range(sl.first().map(|r| r.k), sl.last().map(|r| r.k)),
                    range(pl.keys().next().copied(), pl.keys().next_back().copied()),
                ),
            ));
        }
    }

    let rows: Vec<FusedRow> = sl
        .iter()
        .map(|r| FusedRow {
            k: r.k,
            t: r.t,
            xi: r.xi,
            sl_abnormal: r.abnormal,
            pl: pl.as_ref().and_then(|m| m.get(&r.k).copied()),
        })
        .collect();
    let summary = summarize(&rows, pl.is_none());

    ensure_dir(stage, out_dir)?;
    let path = out_dir.join(FUSED_CSV);
    let mut w = csv::Writer::from_writer(create(stage, &path)?);
    w.write_record(["k", "t", "xi", "sl_abnormal", "y_tilde", "pl_abnormal"]).at(stage)?;
    for r in &rows {
        w.write_record([
            r.k.to_string(),
            num(r.t),
            num(r.xi),
            flag(r.sl_abnormal).to_string(),
            r.pl.map(|p| num(p.y_tilde)).unwrap_or_default(),
            r.pl.map(|p| flag(p.abnormal).to_string()).unwrap_or_default(),
        ])
        .at(stage)?;
    }
    w.flush().map_err(|e| PipelineError::io(stage, &path, e))?;
    write_json(stage, &out_dir.join(SUMMARY_JSON), &summary)?;
    Ok((rows, summary))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(k: u64, y: f64, abnormal: bool) -> PlRow {
        PlRow { k, y_tilde: y, abnormal }
    }

    #[test]
    fn bank_fusion_takes_minimum() {
        let fused = fuse_bank(&[row(3, 0.8, true), row(3, 0.3, false)], None);
        assert_eq!(fused[&3], PlFused { y_tilde: 0.3, abnormal: false });
        let fused = fuse_bank(&[row(3, 0.8, true), row(3, 0.3, false)], Some(0.2));
        assert!(fused[&3].abnormal);
    }

    fn fused_row(k: u64, sl: bool, pl: Option<bool>) -> FusedRow {
        FusedRow {
            k,
            t: k as f64,
            xi: if sl { 0.5 } else { 0.1 },
            sl_abnormal: sl,
            pl: pl.map(|a| PlFused { y_tilde: if a { 0.9 } else { 0.1 }, abnormal: a }),
        }
    }

    #[test]
    fn identical_intervals_overlap_fully() {
        let flags = [false, true, true, false, true, false];
        let rows: Vec<_> = flags.iter().enumerate().map(|(k, &f)| fused_row(k as u64, f, Some(f))).collect();
        let s = summarize(&rows, false);
        assert_eq!(s.overlap_ratio, Some(1.0));
        assert_eq!(s.sl_intervals, vec![(1, 2), (4, 4)]);
        assert_eq!(s.sl_intervals, s.pl_intervals);
        assert!(s.events.iter().all(|e| e.peak_lag == Some(0)));
    }

    #[test]
    fn lagged_pl_event() {
        let sl = [false, true, true, false, false];
        let pl = [false, false, true, true, false];
        let rows: Vec<_> = (0..5).map(|k| fused_row(k as u64, sl[k], Some(pl[k]))).collect();
        let s = summarize(&rows, false);
        assert_eq!(s.overlap_ratio, Some(1.0 / 3.0));
        assert_eq!(s.events[0].pl_start, Some(2));
        assert_eq!(s.events[0].peak_lag, Some(1));
    }

    #[test]
    fn sl_only_has_no_overlap() {
        let rows: Vec<_> = (0..4).map(|k| fused_row(k, k == 2, None)).collect();
        let s = summarize(&rows, true);
        assert!(s.sl_only);
        assert_eq!(s.overlap_ratio, None);
        assert_eq!(s.events.len(), 1);
        assert_eq!(s.events[0].pl_start, None);
    }
}
