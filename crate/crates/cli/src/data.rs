use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use motionaware_core::kf::OUT_OF_SUPPORT_XI;
use motionaware_core::{InnovationRecord, Point, Trajectory};

use crate::error::{AtStage, PipelineError, Result, Stage};

pub const LABELS_SUFFIX: &str = "_labels";
pub const INNOVATION_SUFFIX: &str = "_innovation";

/// Float formatting shared by every CSV the CLI writes: shortest round-trip
/// representation, exponent form for very large or small magnitudes.
pub(crate) fn num(x: f64) -> String {
    format!("{x:?}")
}

pub(crate) fn flag(b: bool) -> &'static str {
    if b {
        "1"
    } else {
        "0"
    }
}

pub(crate) fn parse_flag(stage: Stage, s: &str) -> Result<bool> {
    match s.trim() {
        "1" | "true" | "True" => Ok(true),
        "0" | "false" | "False" => Ok(false),
        other => Err(PipelineError::data(stage, format!("bad boolean {other:?}"))),
    }
}

pub(crate) fn ensure_dir(stage: Stage, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| PipelineError::io(stage, dir, e))
}

pub(crate) fn create(stage: Stage, path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| PipelineError::io(stage, path, e))
}

pub(crate) fn open(stage: Stage, path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| PipelineError::io(stage, path, e))
}

/// `dir/sub` when it exists, else `dir`.
pub(crate) fn subdir_or_self(dir: &Path, sub: &str) -> PathBuf {
    let d = dir.join(sub);
    if d.is_dir() {
        d
    } else {
        dir.to_path_buf()
    }
}

/// CSV files of `dir` whose stem passes `keep`, sorted by name. A missing
/// directory yields an empty list.
pub(crate) fn csv_files(dir: &Path, keep: impl Fn(&str) -> bool) -> Result<Vec<(String, PathBuf)>> {
    let entries = match fs::read_dir(dir) {
        Ok(e) => e,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(PipelineError::io(Stage::Load, dir, e)),
    };
    let mut out = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| PipelineError::io(Stage::Load, dir, e))?.path();
        if path.extension().is_some_and(|e| e == "csv") && path.is_file() {
            let stem = path.file_stem().unwrap_or_default().to_string_lossy().into_owned();
            if keep(&stem) {
                out.push((stem, path));
            }
        }
    }
    out.sort();
    Ok(out)
}

/// Trajectory CSVs of `dir` (labels files excluded), sorted by name.
pub fn load_trajectories(dir: &Path) -> Result<Vec<(String, Trajectory)>> {
    csv_files(dir, |stem| !stem.ends_with(LABELS_SUFFIX))?
        .into_iter()
        .map(|(name, path)| {
            let t = Trajectory::load(&path).map_err(|e| {
                PipelineError::data(Stage::Load, format!("{}: {e}", path.display()))
            })?;
            Ok((name, t))
        })
        .collect()
}

/// Innovation CSV `k,t,zone,eps_x,eps_y,xi,abnormal,out_of_support`.
pub fn write_innovations(path: &Path, records: &[InnovationRecord]) -> Result<()> {
    let stage = Stage::Detect;
    let mut w = csv::Writer::from_writer(create(stage, path)?);
    w.write_record(["k", "t", "zone", "eps_x", "eps_y", "xi", "abnormal", "out_of_support"])
        .at(stage)?;
    for r in records {
        w.write_record([
            r.k.to_string(),
            num(r.t),
            r.zone.map(|z| z.to_string()).unwrap_or_default(),
            num(r.eps.x),
            num(r.eps.y),
            num(r.xi),
            flag(r.abnormal).to_string(),
            flag(r.out_of_support).to_string(),
        ])
        .at(stage)?;
    }
    w.flush().map_err(|e| PipelineError::io(stage, path, e))
}

pub fn read_innovations(path: &Path, stage: Stage) -> Result<Vec<InnovationRecord>> {
    let mut rdr = csv::Reader::from_reader(open(stage, path)?);
    let headers = rdr.headers().at(stage)?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| PipelineError::data(stage, format!("{}: missing column {name}", path.display())))
    };
    let idx = [
        col("k")?,
        col("t")?,
        col("zone")?,
        col("eps_x")?,
        col("eps_y")?,
        col("xi")?,
        col("abnormal")?,
        col("out_of_support")?,
    ];
    let mut out = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.at(stage)?;
        let field = |i: usize| rec.get(idx[i]).unwrap_or("");
        let bad = |what: &str| {
            PipelineError::data(stage, format!("{} row {}: bad {what}", path.display(), line + 1))
        };
        let f = |i: usize, what: &str| field(i).parse::<f64>().map_err(|_| bad(what));
        let zone = match field(2) {
            "" => None,
            s => Some(s.parse().map_err(|_| bad("zone"))?),
        };
        out.push(InnovationRecord {
            k: field(0).parse().map_err(|_| bad("k"))?,
            t: f(1, "t")?,
            zone,
            eps: Point::new(f(3, "eps_x")?, f(4, "eps_y")?),
            xi: f(5, "xi")?,
            abnormal: parse_flag(stage, field(6))?,
            out_of_support: parse_flag(stage, field(7))?,
        });
    }
    Ok(out)
}

/// ξ with the out-of-support marker removed.
pub(crate) fn finite_xi(r: &InnovationRecord) -> Option<f64> {
    (!r.out_of_support && r.xi != OUT_OF_SUPPORT_XI).then_some(r.xi)
}

pub(crate) fn write_text(stage: Stage, path: &Path, text: &str) -> Result<()> {
    let mut w = create(stage, path)?;
    w.write_all(text.as_bytes())
        .and_then(|_| w.flush())
        .map_err(|e| PipelineError::io(stage, path, e))
}
