use std::path::Path;

use motionaware_core::{build_field, encode_image, segment, zone_dynamics, Trajectory};

use crate::config::PipelineConfig;
use crate::data::{load_trajectories, subdir_or_self};
use crate::error::{AtStage, PipelineError, Result, Stage};
use crate::model::{ConfigSnapshot, NormalityModel, TrainingInfo};

/// Builds the normality model from every trajectory in `data_dir/train` (or
/// `data_dir` itself when it has no `train` subdirectory) and persists it in
/// `model_dir`.
pub fn train(cfg: &PipelineConfig, data_dir: &Path, model_dir: &Path) -> Result<NormalityModel> {
    let dir = subdir_or_self(data_dir, "train");
    let named = load_trajectories(&dir)?;
    if named.is_empty() {
        return Err(PipelineError::data(
            Stage::Load,
            format!("no trajectories in {}", dir.display()),
        ));
    }
    let dt = common_dt(&named)?;
    let (names, trajectories): (Vec<String>, Vec<Trajectory>) = named.into_iter().unzip();

    let grid = cfg.spatial_grid()?;
    let built = build_field(
        &trajectories,
        &grid,
        cfg.gp_hyper(),
        cfg.mask,
        cfg.gp.max_points,
    )
    .at(Stage::Field)?;
    log::info!(
        "field: {} of {} pooled pairs (stride {}), {} of {} cells unmasked",
        built.used_points,
        built.pooled_points,
        built.stride,
        built.field.unmasked_count(),
        grid.len()
    );
    let image = encode_image(&built.field).at(Stage::Encode)?;
    let zones = segment(&built.field, &image, &cfg.slic).at(Stage::Segment)?;
    let dynamics = zones
        .zones()
        .iter()
        .map(|z| zone_dynamics(z, dt, cfg.kf.q)?.with_measurement_noise(cfg.kf.r))
        .collect::<std::result::Result<Vec<_>, _>>()
        .at(Stage::Dynamics)?;

    let model = NormalityModel {
        config: ConfigSnapshot::of(cfg),
        training: TrainingInfo {
            trajectories: names,
            dt,
            pooled_points: built.pooled_points,
            used_points: built.used_points,
            stride: built.stride,
        },
        field: built.field,
        image,
        zones,
        dynamics,
    };
    model.save(model_dir)?;
    Ok(model)
}

fn common_dt(named: &[(String, Trajectory)]) -> Result<f64> {
    let dt = named[0].1.dt();
    if let Some((name, t)) = named.iter().find(|(_, t)| (t.dt() - dt).abs() > 1e-9) {
        return Err(PipelineError::data(
            Stage::Load,
            format!("{name} has sampling interval {} but {} has {dt}", t.dt(), named[0].0),
        ));
    }
    Ok(dt)
}
