//! Shared fixtures for the pipeline benchmarks.

use motionaware_core::sim::{simulate_trajectory, Avoidance, SceneSpec};
use motionaware_core::{
    build_field, encode_image, segment, zone_dynamics, DetectorConfig, GpHyper, MaskPolicy,
    SlicParams, SpatialGrid, Trajectory, VelocityField, VelocityImage, ZoneDynamics, ZoneMap,
};

/// A trained patrol scenario and a test run to score against it.
pub struct Fixture {
    pub train: Trajectory,
    pub test: Trajectory,
    pub grid: SpatialGrid,
    pub hyper: GpHyper,
    pub field: VelocityField,
    pub image: VelocityImage,
    pub zones: ZoneMap,
    pub dynamics: Vec<ZoneDynamics>,
    pub detector: DetectorConfig,
}

impl Fixture {
    pub fn patrol() -> Self {
        let spec = SceneSpec::default();
        let train = simulate_trajectory(&spec, None).expect("training run").trajectory;
        let test_spec = SceneSpec { n_laps: 4, seed: 1, ..SceneSpec::default() };
        let test = simulate_trajectory(&test_spec, Some(Avoidance::new(2, 1.2)))
            .expect("test run")
            .trajectory;
        let grid = SpatialGrid::covering(&spec.arena, 1.0).expect("grid");
        let hyper = GpHyper::for_cell_size(1.0);
        let field = build_field(std::slice::from_ref(&train), &grid, hyper, MaskPolicy::default(), Some(1500))
            .expect("field")
            .field;
        let image = encode_image(&field).expect("image");
        let zones = segment(&field, &image, &SlicParams::default()).expect("zones");
        let dynamics = zones
            .zones()
            .iter()
            .map(|z| zone_dynamics(z, spec.dt, 0.0025).expect("dynamics"))
            .collect();
        Self {
            train,
            test,
            grid,
            hyper,
            field,
            image,
            zones,
            dynamics,
            detector: DetectorConfig::default(),
        }
    }
}
