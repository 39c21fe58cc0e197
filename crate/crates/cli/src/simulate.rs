use std::path::{Path, PathBuf};

use motionaware_core::sim::{save_frames, simulate_trajectory, Avoidance, SceneSpec, SimRun};
use serde::Serialize;

use crate::config::PipelineConfig;
use crate::data::{create, ensure_dir, LABELS_SUFFIX};
use crate::error::{AtStage, PipelineError, Result, Stage};
use crate::model::write_json;

pub const TRAIN_NAME: &str = "scenario1";
pub const NORMAL_TEST_NAME: &str = "scenario1_test";
pub const AVOIDANCE_TEST_NAME: &str = "scenario2";

/// The three generated runs.
#[derive(Debug, Clone)]
pub struct Simulated {
    pub train: SimRun,
    pub normal_test: SimRun,
    pub avoidance_test: SimRun,
    pub avoidance: Avoidance,
}

#[derive(Serialize)]
struct SceneRecord<'a> {
    train: &'a SceneSpec,
    normal_test: &'a SceneSpec,
    avoidance_test: &'a SceneSpec,
    avoidance: &'a Avoidance,
}

fn write_run(dir: &Path, name: &str, run: &SimRun) -> Result<()> {
    let stage = Stage::Simulate;
    let path = dir.join(format!("{name}.csv"));
    run.trajectory.write_csv(create(stage, &path)?).at(stage)?;
    let path = dir.join(format!("{name}{LABELS_SUFFIX}.csv"));
    run.write_labels(create(stage, &path)?).at(stage)?;
    Ok(())
}

/// Generates the training laps and both test runs under `out`:
///
/// ```text
/// train/scenario1.csv, train/scenario1_labels.csv
/// test/scenario1_test.csv, test/scenario1_test_labels.csv
/// test/scenario2.csv, test/scenario2_labels.csv
/// scene.json
/// frames/<name>/frame_%06d.png   (with `frames`)
/// ```
pub fn simulate(cfg: &PipelineConfig, out: &Path, frames: bool) -> Result<Simulated> {
    let stage = Stage::Simulate;
    let train_spec = cfg.train_scene();
    let normal_spec = cfg.normal_test_scene();
    let (avoid_spec, avoidance) = cfg.avoidance_test_scene();

    let train = simulate_trajectory(&train_spec, None).at(stage)?;
    let normal_test = simulate_trajectory(&normal_spec, None).at(stage)?;
    let avoidance_test = simulate_trajectory(&avoid_spec, Some(avoidance)).at(stage)?;

    let train_dir = out.join("train");
    let test_dir = out.join("test");
    ensure_dir(stage, &train_dir)?;
    ensure_dir(stage, &test_dir)?;
    write_run(&train_dir, TRAIN_NAME, &train)?;
    write_run(&test_dir, NORMAL_TEST_NAME, &normal_test)?;
    write_run(&test_dir, AVOIDANCE_TEST_NAME, &avoidance_test)?;
    write_json(
        stage,
        &out.join("scene.json"),
        &SceneRecord {
            train: &train_spec,
            normal_test: &normal_spec,
            avoidance_test: &avoid_spec,
            avoidance: &avoidance,
        },
    )?;

    if frames {
        let params = cfg.render_params();
        let runs: [(&str, &SceneSpec, &SimRun); 3] = [
            (TRAIN_NAME, &train_spec, &train),
            (NORMAL_TEST_NAME, &normal_spec, &normal_test),
            (AVOIDANCE_TEST_NAME, &avoid_spec, &avoidance_test),
        ];
        for (name, spec, run) in runs {
            let scene = SceneSpec {
                obstacles: run.obstacle.into_iter().collect(),
                ..spec.clone()
            };
            let dir: PathBuf = out.join("frames").join(name);
            let written = save_frames(&run.trajectory, &scene, &params, &dir).at(stage)?;
            log::info!("wrote {} frames to {}", written.len(), dir.display());
        }
    }

    if avoidance_test.in_detour.iter().all(|d| !d) {
        return Err(PipelineError::data(stage, "avoidance run contains no detour samples"));
    }
    Ok(Simulated {
        train,
        normal_test,
        avoidance_test,
        avoidance,
    })
}
