//! Flat `key=value` configuration with dotted keys.
//!
//! `#` starts a comment that runs to the end of the line; blank lines are
//! ignored. Unknown keys and unparsable values are configuration errors.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use motionaware_core::kf::{
    DEFAULT_INITIAL_VARIANCE, DEFAULT_MEASUREMENT_NOISE, DEFAULT_PROCESS_NOISE,
};
use motionaware_core::sim::{Avoidance, RenderParams, SceneSpec};
use motionaware_core::{DetectorConfig, GpHyper, MaskPolicy, Rect, SlicParams, SpatialGrid};
use serde::{Deserialize, Serialize};

use crate::error::{PipelineError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    pub cell_size: f64,
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GpConfig {
    pub signal_variance: f64,
    /// Defaults to two cells when unset.
    pub length_scale: Option<f64>,
    pub noise_variance: f64,
    /// Pooled-pair cap before stride thinning; `None` disables thinning.
    pub max_points: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KfConfig {
    pub q: f64,
    pub r: f64,
    pub p0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub train_laps: usize,
    pub test_laps: usize,
    pub avoid_lap: usize,
    pub detour_depth: f64,
    pub noise_std: f64,
    pub lap_speed: f64,
    pub dt: f64,
    pub corner_radius: f64,
    pub track_min_x: f64,
    pub track_min_y: f64,
    pub track_max_x: f64,
    pub track_max_y: f64,
    pub frame_width: u32,
    pub frame_height: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathsConfig {
    pub data_dir: PathBuf,
    pub model_dir: PathBuf,
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub seed: u64,
    pub grid: GridConfig,
    pub gp: GpConfig,
    pub mask: MaskPolicy,
    pub slic: SlicParams,
    pub kf: KfConfig,
    /// ξ threshold, meters.
    pub xi_thres: f64,
    /// Threshold on the fused PL signal; when unset the PL file's own
    /// `abnormal` column is used.
    pub y_thres: Option<f64>,
    pub sim: SimConfig,
    pub paths: PathsConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let scene = SceneSpec::default();
        let render = RenderParams::default();
        Self {
            seed: 0,
            grid: GridConfig {
                cell_size: 1.0,
                min_x: scene.arena.min[0],
                min_y: scene.arena.min[1],
                max_x: scene.arena.max[0],
                max_y: scene.arena.max[1],
            },
            gp: GpConfig {
                signal_variance: 4.0,
                length_scale: None,
                noise_variance: 0.04,
                max_points: Some(1500),
            },
            mask: MaskPolicy::default(),
            slic: SlicParams::default(),
            kf: KfConfig {
                q: DEFAULT_PROCESS_NOISE,
                r: DEFAULT_MEASUREMENT_NOISE,
                p0: DEFAULT_INITIAL_VARIANCE,
            },
            xi_thres: DetectorConfig::default().xi_threshold,
            y_thres: None,
            sim: SimConfig {
                train_laps: scene.n_laps,
                test_laps: 4,
                avoid_lap: 2,
                detour_depth: 1.2,
                noise_std: scene.noise_std,
                lap_speed: scene.lap_speed,
                dt: scene.dt,
                corner_radius: scene.corner_radius,
                track_min_x: scene.track.min[0],
                track_min_y: scene.track.min[1],
                track_max_x: scene.track.max[0],
                track_max_y: scene.track.max[1],
                frame_width: render.width,
                frame_height: render.height,
            },
            paths: PathsConfig {
                data_dir: PathBuf::from("data"),
                model_dir: PathBuf::from("model"),
                out_dir: PathBuf::from("out"),
            },
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e| PipelineError::Config(format!("{key}: cannot parse {value:?}: {e}")))
}

fn parse_opt<T: FromStr>(key: &str, value: &str) -> Result<Option<T>>
where
    T::Err: std::fmt::Display,
{
    match value {
        "" | "none" => Ok(None),
        v => parse(key, v).map(Some),
    }
}

impl PipelineConfig {
    /// Defaults overridden by the `key=value` lines of `text`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (n, line) in text.lines().enumerate() {
            let line = line.split_once('#').map_or(line, |(before, _)| before).trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                PipelineError::Config(format!("line {}: expected key=value, got {line:?}", n + 1))
            })?;
            cfg.set(key.trim(), value.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "seed" => self.seed = parse(key, value)?,
            "grid.cell_size" => self.grid.cell_size = parse(key, value)?,
            "grid.min_x" => self.grid.min_x = parse(key, value)?,
            "grid.min_y" => self.grid.min_y = parse(key, value)?,
            "grid.max_x" => self.grid.max_x = parse(key, value)?,
            "grid.max_y" => self.grid.max_y = parse(key, value)?,
            "gp.signal_variance" => self.gp.signal_variance = parse(key, value)?,
            "gp.length_scale" => self.gp.length_scale = parse_opt(key, value)?,
            "gp.noise_variance" => self.gp.noise_variance = parse(key, value)?,
            "gp.max_points" => self.gp.max_points = parse_opt(key, value)?,
            "mask.variance_threshold" => self.mask.variance_threshold = parse(key, value)?,
            "slic.n_superpixels" => self.slic.n_superpixels = parse(key, value)?,
            "slic.compactness" => self.slic.compactness = parse(key, value)?,
            "slic.max_iters" => self.slic.max_iters = parse(key, value)?,
            "slic.min_zone_cells" => self.slic.min_zone_cells = parse(key, value)?,
            "slic.seed" => self.slic.seed = parse(key, value)?,
            "kf.q" => self.kf.q = parse(key, value)?,
            "kf.r" => self.kf.r = parse(key, value)?,
            "kf.p0" => self.kf.p0 = parse(key, value)?,
            "detect.xi_thres" => self.xi_thres = parse(key, value)?,
            "pl.y_thres" => self.y_thres = parse_opt(key, value)?,
            "sim.train_laps" => self.sim.train_laps = parse(key, value)?,
            "sim.test_laps" => self.sim.test_laps = parse(key, value)?,
            "sim.avoid_lap" => self.sim.avoid_lap = parse(key, value)?,
            "sim.detour_depth" => self.sim.detour_depth = parse(key, value)?,
            "sim.noise_std" => self.sim.noise_std = parse(key, value)?,
            "sim.lap_speed" => self.sim.lap_speed = parse(key, value)?,
            "sim.dt" => self.sim.dt = parse(key, value)?,
            "sim.corner_radius" => self.sim.corner_radius = parse(key, value)?,
            "sim.track_min_x" => self.sim.track_min_x = parse(key, value)?,
            "sim.track_min_y" => self.sim.track_min_y = parse(key, value)?,
            "sim.track_max_x" => self.sim.track_max_x = parse(key, value)?,
            "sim.track_max_y" => self.sim.track_max_y = parse(key, value)?,
            "sim.frame_width" => self.sim.frame_width = parse(key, value)?,
            "sim.frame_height" => self.sim.frame_height = parse(key, value)?,
            "paths.data_dir" => self.paths.data_dir = PathBuf::from(value),
            "paths.model_dir" => self.paths.model_dir = PathBuf::from(value),
            "paths.out_dir" => self.paths.out_dir = PathBuf::from(value),
            _ => return Err(PipelineError::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    /// Checks every section against the invariants of the types it feeds.
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str, e: &dyn std::fmt::Display| PipelineError::Config(format!("{what}: {e}"));
        self.spatial_grid().map(|_| ())?;
        self.gp_hyper().validate().map_err(|e| bad("gp", &e))?;
        if self.gp.max_points == Some(0) {
            return Err(PipelineError::Config("gp.max_points must be positive".into()));
        }
        MaskPolicy::new(self.mask.variance_threshold).map_err(|e| bad("mask", &e))?;
        self.slic.validate().map_err(|e| bad("slic", &e))?;
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !(self.kf.q >= 0.0 && self.kf.q.is_finite()) || !positive(self.kf.r) || !positive(self.kf.p0) {
            return Err(PipelineError::Config(format!(
                "kf: need q >= 0, r > 0, p0 > 0 (got q={}, r={}, p0={})",
                self.kf.q, self.kf.r, self.kf.p0
            )));
        }
        self.detector().validate().map_err(|e| bad("detect", &e))?;
        if let Some(y) = self.y_thres {
            if !y.is_finite() {
                return Err(PipelineError::Config(format!("pl.y_thres must be finite, got {y}")));
            }
        }
        self.train_scene().validate().map_err(|e| bad("sim", &e))?;
        if self.sim.avoid_lap >= self.sim.test_laps {
            return Err(PipelineError::Config(format!(
                "sim.avoid_lap {} must be below sim.test_laps {}",
                self.sim.avoid_lap, self.sim.test_laps
            )));
        }
        if self.sim.frame_width == 0 || self.sim.frame_height == 0 {
            return Err(PipelineError::Config("sim frame size must be positive".into()));
        }
        Ok(())
    }

    pub fn spatial_grid(&self) -> Result<SpatialGrid> {
        let g = &self.grid;
        if !(g.max_x > g.min_x && g.max_y > g.min_y) {
            return Err(PipelineError::Config("grid bounds are empty".into()));
        }
        SpatialGrid::covering(&Rect::new([g.min_x, g.min_y], [g.max_x, g.max_y]), g.cell_size)
            .map_err(|e| PipelineError::Config(format!("grid: {e}")))
    }

    pub fn gp_hyper(&self) -> GpHyper {
        GpHyper {
            signal_variance: self.gp.signal_variance,
            length_scale: self.gp.length_scale.unwrap_or(2.0 * self.grid.cell_size),
            noise_variance: self.gp.noise_variance,
        }
    }

    pub fn detector(&self) -> DetectorConfig {
        DetectorConfig {
            xi_threshold: self.xi_thres,
            initial_variance: self.kf.p0,
        }
    }

    fn scene(&self, n_laps: usize, seed: u64) -> SceneSpec {
        let s = &self.sim;
        SceneSpec {
            arena: Rect::new([self.grid.min_x, self.grid.min_y], [self.grid.max_x, self.grid.max_y]),
            track: Rect::new([s.track_min_x, s.track_min_y], [s.track_max_x, s.track_max_y]),
            corner_radius: s.corner_radius,
            lap_speed: s.lap_speed,
            n_laps,
            dt: s.dt,
            noise_std: s.noise_std,
            seed,
            obstacles: Vec::new(),
        }
    }

    /// Normal patrol laps for training.
    pub fn train_scene(&self) -> SceneSpec {
        self.scene(self.sim.train_laps, self.seed)
    }

    /// Normal test laps, independent noise.
    pub fn normal_test_scene(&self) -> SceneSpec {
        self.scene(self.sim.test_laps, self.seed.wrapping_add(1))
    }

    /// Test laps containing the avoidance manoeuvre.
    pub fn avoidance_test_scene(&self) -> (SceneSpec, Avoidance) {
        (
            self.scene(self.sim.test_laps, self.seed.wrapping_add(2)),
            Avoidance::new(self.sim.avoid_lap, self.sim.detour_depth),
        )
    }

    pub fn render_params(&self) -> RenderParams {
        RenderParams {
            width: self.sim.frame_width,
            height: self.sim.frame_height,
            ..RenderParams::default()
        }
    }
}
