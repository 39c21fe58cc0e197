//! Persisted normality model: a versioned JSON manifest next to CSV, JSON and
//! PNG payloads.
//!
//! ```text
//! model.json        manifest (format version, config snapshot, grid, dynamics)
//! field.csv         row,col,mean_vx,mean_vy,var_vx,var_vy,masked
//! zones.csv         row,col,zone_id
//! zones.json        [{id, n_cells, ux, uy, group}]
//! zone_groups.json  {"set1": [...], "set2": [...]}
//! velocity.png      encoded velocity image
//! ```

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use motionaware_core::{
    encode_image, SlicParams, SpatialGrid, Velocity, VelocityField, VelocityImage, Zone,
    ZoneDynamics, ZoneGroup, ZoneMap,
};
use serde::{Deserialize, Serialize};

use crate::config::{GpConfig, GridConfig, KfConfig, PipelineConfig};
use crate::error::{AtStage, PipelineError, Result, Stage};

pub const FORMAT_VERSION: u64 = 1;

pub const MANIFEST: &str = "model.json";
pub const FIELD_CSV: &str = "field.csv";
pub const ZONES_CSV: &str = "zones.csv";
pub const ZONES_JSON: &str = "zones.json";
pub const ZONE_GROUPS_JSON: &str = "zone_groups.json";
pub const VELOCITY_PNG: &str = "velocity.png";

/// Configuration the model was trained with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigSnapshot {
    pub seed: u64,
    pub grid: GridConfig,
    pub gp: GpConfig,
    pub mask_variance_threshold: f64,
    pub slic: SlicParams,
    pub kf: KfConfig,
}

impl ConfigSnapshot {
    pub fn of(cfg: &PipelineConfig) -> Self {
        Self {
            seed: cfg.seed,
            grid: cfg.grid.clone(),
            gp: cfg.gp.clone(),
            mask_variance_threshold: cfg.mask.variance_threshold,
            slic: cfg.slic,
            kf: cfg.kf.clone(),
        }
    }
}

/// How the training data was used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingInfo {
    pub trajectories: Vec<String>,
    pub dt: f64,
    pub pooled_points: usize,
    pub used_points: usize,
    pub stride: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct GridRecord {
    origin: [f64; 2],
    cell_size: f64,
    width: usize,
    height: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct DynamicsRecord {
    zone: usize,
    ux: f64,
    uy: f64,
    dt: f64,
    q: f64,
    r: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Manifest {
    format_version: u64,
    config: ConfigSnapshot,
    grid: GridRecord,
    training: TrainingInfo,
    dynamics: Vec<DynamicsRecord>,
    files: BTreeMap<String, String>,
}

/// Per-zone summary row of `zones.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZoneSummary {
    pub id: usize,
    pub n_cells: usize,
    pub ux: f64,
    pub uy: f64,
    pub group: ZoneGroup,
}

/// Zone ids by motion group, the contract consumed by the frame-level
/// detectors: `set1` are straight zones, `set2` curve zones.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ZoneGroups {
    pub set1: Vec<usize>,
    pub set2: Vec<usize>,
}

impl ZoneGroups {
    pub fn of(zones: &ZoneMap) -> Self {
        Self {
            set1: zones.ids_in_group(ZoneGroup::Straight),
            set2: zones.ids_in_group(ZoneGroup::Curve),
        }
    }
}

#[derive(Debug, Clone)]
pub struct NormalityModel {
    pub config: ConfigSnapshot,
    pub training: TrainingInfo,
    pub field: VelocityField,
    pub image: VelocityImage,
    pub zones: ZoneMap,
    pub dynamics: Vec<ZoneDynamics>,
}

fn create(stage: Stage, path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| PipelineError::io(stage, path, e))
}

fn open(stage: Stage, path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| PipelineError::io(stage, path, e))
}

pub(crate) fn write_json<T: Serialize>(stage: Stage, path: &Path, value: &T) -> Result<()> {
    let mut w = create(stage, path)?;
    serde_json::to_writer_pretty(&mut w, value).at(stage)?;
    w.write_all(b"\n")
        .and_then(|_| w.flush())
        .map_err(|e| PipelineError::io(stage, path, e))
}

impl NormalityModel {
    pub fn zone_summaries(&self) -> Vec<ZoneSummary> {
        self.zones
            .zones()
            .iter()
            .map(|z| ZoneSummary {
                id: z.id,
                n_cells: z.cells.len(),
                ux: z.u.x,
                uy: z.u.y,
                group: z.group,
            })
            .collect()
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        let stage = Stage::Persist;
        fs::create_dir_all(dir).map_err(|e| PipelineError::io(stage, dir, e))?;
        let grid = self.field.grid;

        let files: BTreeMap<String, String> = [
            ("field", FIELD_CSV),
            ("image", VELOCITY_PNG),
            ("zone_groups", ZONE_GROUPS_JSON),
            ("zone_summary", ZONES_JSON),
            ("zones", ZONES_CSV),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect();
        let manifest = Manifest {
            format_version: FORMAT_VERSION,
            config: self.config.clone(),
            grid: GridRecord {
                origin: grid.origin(),
                cell_size: grid.cell_size(),
                width: grid.width(),
                height: grid.height(),
            },
            training: self.training.clone(),
            dynamics: self
                .dynamics
                .iter()
                .map(|d| DynamicsRecord {
                    zone: d.zone,
                    ux: d.u.x,
                    uy: d.u.y,
                    dt: d.dt,
                    q: d.q,
                    r: d.r,
                })
                .collect(),
            files,
        };
        write_json(stage, &dir.join(MANIFEST), &manifest)?;

        let path = dir.join(FIELD_CSV);
        self.field.write_csv(create(stage, &path)?).at(stage)?;
        let path = dir.join(ZONES_CSV);
        self.zones.write_csv(&grid, create(stage, &path)?).at(stage)?;
        write_json(stage, &dir.join(ZONES_JSON), &self.zone_summaries())?;
        write_json(stage, &dir.join(ZONE_GROUPS_JSON), &ZoneGroups::of(&self.zones))?;
        self.image.save_png(&dir.join(VELOCITY_PNG)).at(stage)?;
        Ok(())
    }

    /// Loads a model, refusing manifests of another format version before
    /// interpreting anything else in them.
    pub fn load(dir: &Path) -> Result<Self> {
        let stage = Stage::Load;
        let path = dir.join(MANIFEST);
        let raw: serde_json::Value = serde_json::from_reader(open(stage, &path)?).at(stage)?;
        let found = raw
            .get("format_version")
            .and_then(|v| v.as_u64())
            .ok_or_else(|| PipelineError::data(stage, format!("{}: no format_version", path.display())))?;
        if found != FORMAT_VERSION {
            return Err(PipelineError::ModelVersion {
                found,
                expected: FORMAT_VERSION,
            });
        }
        let manifest: Manifest = serde_json::from_value(raw).at(stage)?;
        let g = &manifest.grid;
        let grid = SpatialGrid::new(g.origin, g.cell_size, g.width, g.height).at(stage)?;

        let field = VelocityField::read_csv(open(stage, &dir.join(FIELD_CSV))?, grid).at(stage)?;
        let assignment = ZoneMap::read_assignment(open(stage, &dir.join(ZONES_CSV))?, &grid).at(stage)?;
        let summaries: Vec<ZoneSummary> =
            serde_json::from_reader(open(stage, &dir.join(ZONES_JSON))?).at(stage)?;

        let mut cells: Vec<Vec<usize>> = vec![Vec::new(); summaries.len()];
        for (m, id) in assignment.iter().enumerate() {
            if let Some(id) = id {
                let slot = id
                    .checked_sub(1)
                    .and_then(|i| cells.get_mut(i))
                    .ok_or_else(|| PipelineError::data(stage, format!("cell {m} names unknown zone {id}")))?;
                slot.push(m);
            }
        }
        let zones = summaries
            .iter()
            .zip(cells)
            .map(|(s, cells)| {
                if cells.len() != s.n_cells {
                    return Err(PipelineError::data(
                        stage,
                        format!("zone {} lists {} cells but {} are assigned", s.id, s.n_cells, cells.len()),
                    ));
                }
                Ok(Zone {
                    id: s.id,
                    cells,
                    u: Velocity::new(s.ux, s.uy),
                    group: s.group,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let zones = ZoneMap::new(zones, grid.len()).at(stage)?;

        let dynamics = manifest
            .dynamics
            .iter()
            .map(|d| ZoneDynamics::new(d.zone, Velocity::new(d.ux, d.uy), d.dt, d.q, d.r))
            .collect::<std::result::Result<Vec<_>, _>>()
            .at(stage)?;
        if let Some(d) = dynamics.iter().find(|d| zones.zone(d.zone).is_none()) {
            return Err(PipelineError::data(stage, format!("dynamics for unknown zone {}", d.zone)));
        }
        let image = encode_image(&field).at(stage)?;

        Ok(Self {
            config: manifest.config,
            training: manifest.training,
            field,
            image,
            zones,
            dynamics,
        })
    }
}
